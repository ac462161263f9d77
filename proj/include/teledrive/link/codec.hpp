#pragma once

// Canonical wire encoding for link frames.
//
// A frame payload is one line of text: a version tag, a type tag and
// key=value fields in a fixed order, separated by single spaces, e.g.
//
//   TD/1 CTRL seq=1 t_send=0 steering=0.5 speed=0 brake=0 latency_est=0
//
// Reals use the shortest representation that round-trips exactly. State and
// clock frames travel as one payload per datagram. Control frames on the
// stream are length-prefixed: "<payload bytes>:<payload>\n".

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "teledrive/link/frames.hpp"

namespace teledrive::link {

inline constexpr std::string_view kWireVersion = "TD/1";

struct ParseError : std::runtime_error {
  ParseError(std::size_t off, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(off)), offset(off) {}
  std::size_t offset;
};

struct VersionError : ParseError {
  using ParseError::ParseError;
};

struct EncodeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace codec_detail {

class Writer {
 public:
  explicit Writer(std::string_view type) {
    out_.append(kWireVersion);
    out_.push_back(' ');
    out_.append(type);
  }

  Writer& field(std::string_view key, double v) {
    if (!std::isfinite(v)) throw EncodeError("non-finite value for field '" + std::string(key) + "'");
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    key_(key);
    out_.append(buf, p);
    return *this;
  }
  Writer& field(std::string_view key, std::uint32_t v) {
    char buf[16];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    key_(key);
    out_.append(buf, p);
    return *this;
  }
  Writer& field(std::string_view key, bool v) {
    key_(key);
    out_.push_back(v ? '1' : '0');
    return *this;
  }
  Writer& field(std::string_view key, std::string_view v) {
    key_(key);
    out_.append(v);
    return *this;
  }

  std::string str() { return std::move(out_); }

 private:
  void key_(std::string_view key) {
    out_.push_back(' ');
    out_.append(key);
    out_.push_back('=');
  }
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  std::string_view header() {
    const std::size_t sp = text_.find(' ');
    if (sp == std::string_view::npos) throw ParseError(base_ + text_.size(), "missing frame type");
    const std::string_view version = text_.substr(0, sp);
    if (version != kWireVersion) {
      if (version.starts_with("TD/")) throw VersionError(base_, "unsupported wire version '" + std::string(version) + "'");
      throw ParseError(base_, "bad frame magic");
    }
    pos_ = sp + 1;
    const std::size_t end = text_.find(' ', pos_);
    const std::string_view type = text_.substr(pos_, end == std::string_view::npos ? text_.size() - pos_ : end - pos_);
    pos_ += type.size();
    return type;
  }

  std::string_view raw(std::string_view key) {
    if (pos_ >= text_.size() || text_[pos_] != ' ') throw ParseError(base_ + pos_, "expected field '" + std::string(key) + "'");
    ++pos_;
    if (text_.substr(pos_, key.size()) != key || pos_ + key.size() >= text_.size() || text_[pos_ + key.size()] != '=')
      throw ParseError(base_ + pos_, "expected field '" + std::string(key) + "'");
    pos_ += key.size() + 1;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ') ++pos_;
    if (pos_ == start) throw ParseError(base_ + start, "empty value for '" + std::string(key) + "'");
    value_start_ = start;
    return text_.substr(start, pos_ - start);
  }

  double real(std::string_view key) {
    const std::string_view v = raw(key);
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out))
      throw ParseError(base_ + value_start_, "bad real for '" + std::string(key) + "'");
    return out;
  }

  std::uint32_t u32(std::string_view key) {
    const std::string_view v = raw(key);
    std::uint32_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
      throw ParseError(base_ + value_start_, "bad integer for '" + std::string(key) + "'");
    return out;
  }

  bool flag(std::string_view key) {
    const std::string_view v = raw(key);
    if (v == "1") return true;
    if (v == "0") return false;
    throw ParseError(base_ + value_start_, "bad flag for '" + std::string(key) + "'");
  }

  void finish() const {
    if (pos_ != text_.size()) throw ParseError(base_ + pos_, "trailing bytes after frame");
  }

  std::size_t value_start() const { return value_start_; }

 private:
  std::string_view text_;
  std::size_t base_;
  std::size_t pos_{0};
  std::size_t value_start_{0};
};

}  // namespace codec_detail

inline std::string encode_payload(const ControlFrame& f) {
  return codec_detail::Writer("CTRL")
      .field("seq", f.seq)
      .field("t_send", f.t_send)
      .field("steering", f.steering)
      .field("speed", f.speed)
      .field("brake", f.brake)
      .field("latency_est", f.latency_est)
      .str();
}

inline std::string encode_payload(const StateFrame& f) {
  return codec_detail::Writer("STATE")
      .field("seq", f.seq)
      .field("t_send", f.t_send)
      .field("speed", f.speed)
      .field("wheel_angle", f.wheel_angle)
      .field("mode", std::string_view(to_string(f.mode)))
      .field("epb", f.epb)
      .field("x", f.x)
      .field("y", f.y)
      .field("heading", f.heading)
      .str();
}

inline std::string encode_payload(const ClockProbe& f) {
  return codec_detail::Writer("CLOCK")
      .field("seq", f.seq)
      .field("t0", f.t0)
      .field("t1", f.t1)
      .field("t2", f.t2)
      .field("t3", f.t3)
      .str();
}

using Frame = std::variant<ControlFrame, StateFrame, ClockProbe>;

/// Decodes one payload; `base` is added to error offsets.
inline Frame decode_payload(std::string_view text, std::size_t base = 0) {
  codec_detail::Reader r(text, base);
  const std::string_view type = r.header();
  if (type == "CTRL") {
    ControlFrame f;
    f.seq = r.u32("seq");
    f.t_send = r.real("t_send");
    f.steering = r.real("steering");
    f.speed = r.real("speed");
    f.brake = r.flag("brake");
    f.latency_est = r.real("latency_est");
    r.finish();
    return f;
  }
  if (type == "STATE") {
    StateFrame f;
    f.seq = r.u32("seq");
    f.t_send = r.real("t_send");
    f.speed = r.real("speed");
    f.wheel_angle = r.real("wheel_angle");
    const std::string_view mode = r.raw("mode");
    try {
      f.mode = vehicle_mode_from_string(std::string(mode));
    } catch (const std::invalid_argument&) {
      throw ParseError(base + r.value_start(), "bad vehicle mode");
    }
    f.epb = r.flag("epb");
    f.x = r.real("x");
    f.y = r.real("y");
    f.heading = r.real("heading");
    r.finish();
    return f;
  }
  if (type == "CLOCK") {
    ClockProbe f;
    f.seq = r.u32("seq");
    f.t0 = r.real("t0");
    f.t1 = r.real("t1");
    f.t2 = r.real("t2");
    f.t3 = r.real("t3");
    r.finish();
    return f;
  }
  throw ParseError(base + kWireVersion.size() + 1, "unknown frame type '" + std::string(type) + "'");
}

template <class T>
T decode_payload_as(std::string_view text) {
  Frame f = decode_payload(text);
  if (auto* p = std::get_if<T>(&f)) return *p;
  throw ParseError(0, "unexpected frame type");
}

/// Length-prefixed stream record.
inline std::string encode_stream(const ControlFrame& f) {
  const std::string payload = encode_payload(f);
  return std::to_string(payload.size()) + ":" + payload + "\n";
}

/// Decodes exactly one complete stream record; anything short or extra is an error.
inline ControlFrame decode_stream(std::string_view bytes) {
  const std::size_t colon = bytes.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 9) throw ParseError(0, "missing length prefix");
  std::size_t len = 0;
  auto [p, ec] = std::from_chars(bytes.data(), bytes.data() + colon, len);
  if (ec != std::errc{} || p != bytes.data() + colon) throw ParseError(0, "bad length prefix");
  if (bytes.size() < colon + 1 + len + 1) throw ParseError(bytes.size(), "truncated frame");
  if (bytes[colon + 1 + len] != '\n') throw ParseError(colon + 1 + len, "missing record terminator");
  if (bytes.size() != colon + 1 + len + 1) throw ParseError(colon + 2 + len, "trailing bytes after record");
  Frame f = decode_payload(bytes.substr(colon + 1, len), colon + 1);
  if (auto* c = std::get_if<ControlFrame>(&f)) return *c;
  throw ParseError(colon + 1, "stream carries control frames only");
}

/// Incremental decoder for the control stream. Feed arbitrary chunks; complete
/// frames come out in order, partial records stay buffered.
class StreamDecoder {
 public:
  void feed(std::string_view chunk) { buffer_.append(chunk); }

  /// Next complete frame, or nullopt when more bytes are needed.
  std::optional<ControlFrame> next() {
    const std::size_t colon = buffer_.find(':');
    if (colon == std::string::npos) {
      if (buffer_.size() > 9) throw ParseError(consumed_, "missing length prefix");
      return std::nullopt;
    }
    std::size_t len = 0;
    auto [p, ec] = std::from_chars(buffer_.data(), buffer_.data() + colon, len);
    if (colon == 0 || ec != std::errc{} || p != buffer_.data() + colon)
      throw ParseError(consumed_, "bad length prefix");
    const std::size_t total = colon + 1 + len + 1;
    if (buffer_.size() < total) return std::nullopt;
    const ControlFrame f = decode_stream(std::string_view(buffer_).substr(0, total));
    buffer_.erase(0, total);
    consumed_ += total;
    return f;
  }

  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
  std::size_t consumed_{0};
};

}  // namespace teledrive::link
