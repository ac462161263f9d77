#pragma once

// RunRecord: line-delimited JSON. The first line is the header (format tag,
// config snapshot, world document), then the event log in time order, then the
// final report. Every line carries a "type" tag.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace teledrive::session {

inline constexpr const char* kRecordFormat = "teledrive-run/1";

struct RecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunRecord {
  std::vector<std::string> lines;

  void add(const nlohmann::json& j) { lines.push_back(j.dump()); }

  std::string str() const {
    std::string out;
    for (const auto& l : lines) {
      out += l;
      out += '\n';
    }
    return out;
  }

  nlohmann::json header() const { return lines.empty() ? nlohmann::json{} : nlohmann::json::parse(lines.front()); }

  /// Last line if it is a report, else null.
  nlohmann::json report() const {
    if (lines.size() < 2) return {};
    auto j = nlohmann::json::parse(lines.back(), nullptr, false);
    if (j.is_discarded() || j.value("type", "") != "report") return {};
    return j;
  }
};

struct LoadedRecord {
  RunRecord record;
  bool truncated{false};  // the final line was cut short or unparseable
};

inline LoadedRecord parse_record(const std::string& text) {
  LoadedRecord out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out.truncated = true;  // no terminator: cut mid-line
      break;
    }
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (nlohmann::json::parse(line, nullptr, false).is_discarded()) {
      if (pos >= text.size()) {
        out.truncated = true;
        break;
      }
      throw RecordError("corrupt record line " + std::to_string(out.record.lines.size() + 1));
    }
    out.record.lines.push_back(std::move(line));
  }
  if (out.record.lines.empty()) throw RecordError("empty run record");
  const auto h = out.record.header();
  if (h.value("type", "") != "header" || h.value("format", "") != kRecordFormat)
    throw RecordError("not a run record (bad header)");
  return out;
}

inline LoadedRecord load_record(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw RecordError("cannot open run record: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_record(ss.str());
}

inline void save_record(const RunRecord& r, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw RecordError("cannot write run record: " + file.string());
  out << r.str();
}

}  // namespace teledrive::session
