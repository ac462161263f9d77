// Control law, scoring, reaction-time harness, statistics, vehicle and world.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "teledrive/control_law.hpp"
#include "teledrive/reaction.hpp"
#include "teledrive/rng.hpp"
#include "teledrive/scoring.hpp"
#include "teledrive/session/rt_task.hpp"
#include "teledrive/stats/tests.hpp"
#include "teledrive/vehicle/brake_trial.hpp"
#include "teledrive/vehicle/detectors.hpp"

using namespace teledrive;

// ---------------------------------------------------------------- control law

namespace {
const OverlayGeometry kGeom{};
const RampConfig kRamp{};
}  // namespace

TEST(ControlLaw, RightHotZoneHalvesGap) {
  ControlState s;
  const double dt = kRamp.tau_steer * std::log(2.0);  // 1 - e^(-dt/tau) = 0.5
  const auto r = tick(s, {0.95, 0.5, false, 0}, kGeom, kRamp, dt);
  EXPECT_NEAR(r.state.steering_cmd, 0.75, 1e-12);
}

TEST(ControlLaw, ColdCenterLeavesSteering) {
  ControlState s;
  s.cold_steer_enabled = true;
  s.steering_cmd = 0.3;
  for (double dt : {1.0, 20.0, 500.0}) EXPECT_EQ(tick(s, {0.5, 0.5, false, 0}, kGeom, kRamp, dt).state.steering_cmd, 0.3);
}

TEST(ControlLaw, ColdZoneProportionalSteeringWhenEnabled) {
  ControlState s;
  s.cold_steer_enabled = true;
  const auto r = tick(s, {0.55, 0.5, false, 0}, kGeom, kRamp, 1000.0);
  EXPECT_NEAR(r.state.steering_cmd, 0.5 + 0.1 * 0.05, 1e-12);
  s.cold_steer_enabled = false;
  EXPECT_EQ(tick(s, {0.55, 0.5, false, 0}, kGeom, kRamp, 1000.0).state.steering_cmd, 0.5);
}

TEST(ControlLaw, HoldDominatesRamp) {
  ControlState s;
  s.speed_cmd = 0.3;
  s.brake_hold_remaining = 400;
  const auto r = tick(s, {0.5, 0.05, false, 0}, kGeom, kRamp, 100);
  EXPECT_EQ(r.state.speed_cmd, 0.0);
  EXPECT_EQ(r.state.brake_hold_remaining, 300);
}

TEST(ControlLaw, ClickZeroesSpeedForOneSecond) {
  ControlState s;
  s.speed_cmd = 0.9;
  s = apply_click(s, kRamp);
  EXPECT_EQ(s.speed_cmd, 0.0);
  EXPECT_EQ(s.brake_hold_remaining, 1000);

  ControlState a = s;
  for (int i = 0; i < 999; ++i) a = tick(a, {0.5, 0.05, false, 0}, kGeom, kRamp, 1.0).state;
  EXPECT_EQ(a.speed_cmd, 0.0);
  ControlState b = s;
  for (int i = 0; i < 1001; ++i) b = tick(b, {0.5, 0.05, false, 0}, kGeom, kRamp, 1.0).state;
  EXPECT_GT(b.speed_cmd, 0.0);
}

TEST(ControlLaw, VehicleCommandMapping) {
  EXPECT_EQ(to_vehicle_command({0.5, 0.0, 0, false}), (CommandTriple{0.5, 0.0, false}));
  EXPECT_EQ(to_vehicle_command({1.0, 1.0, 500, false}), (CommandTriple{1.0, 0.0, true}));
}

TEST(ControlLaw, NonFiniteSampleRejected) {
  ControlState s;
  s.speed_cmd = 0.4;
  const auto r = tick(s, {std::nan(""), 0.1, false, 0}, kGeom, kRamp, 20);
  EXPECT_TRUE(r.rejected);
  EXPECT_EQ(r.state, s);
}

TEST(ControlLawProperty, CommandsStayInUnitCube) {
  Rng rng(11);
  ControlState s;
  s.cold_steer_enabled = true;
  for (int i = 0; i < 20000; ++i) {
    CursorSample c{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5), rng.bernoulli(0.01), 0};
    if (c.click) s = apply_click(s, kRamp);
    s = tick(s, c, kGeom, kRamp, rng.uniform(0.1, 200)).state;
    const auto cmd = to_vehicle_command(s);
    ASSERT_GE(cmd.steering, 0.0);
    ASSERT_LE(cmd.steering, 1.0);
    ASSERT_GE(cmd.speed, 0.0);
    ASSERT_LE(cmd.speed, 1.0);
    if (cmd.brake) {
      ASSERT_EQ(cmd.speed, 0.0);
    }
  }
}

TEST(ControlLawProperty, RampResidualIsExponential) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ControlState s;
    s.steering_cmd = rng.uniform();
    s.speed_cmd = rng.uniform();
    const double dt = rng.uniform(1, 50);
    const double r0 = 1.0 - s.steering_cmd, v0 = 1.0 - s.speed_cmd;
    for (int k = 1; k <= 1000; ++k) {
      s = tick(s, {0.99, 0.01, false, 0}, kGeom, kRamp, dt).state;
      ASSERT_NEAR(1.0 - s.steering_cmd, r0 * std::exp(-k * dt / kRamp.tau_steer), 1e-9);
      ASSERT_NEAR(1.0 - s.speed_cmd, v0 * std::exp(-k * dt / kRamp.tau_speed), 1e-9);
    }
  }
}

// -------------------------------------------------------------------- scoring

TEST(Scoring, Examples) {
  EXPECT_EQ(driving_score({1, 0, 0, 0}, TaskMode::Obstacle), 1.0);
  EXPECT_NEAR(driving_score({1, 1, 2, 1}, TaskMode::Town), 0.8 * 0.81 * 0.9, 1e-12);
  EXPECT_NEAR(driving_score({1, 0, 0.5, 0}, TaskMode::Obstacle), 0.948683298050514, 1e-12);
  EXPECT_EQ(driving_score({1, 0, 0, 3}, TaskMode::Mcity), 1.0);
  EXPECT_THROW(driving_score({1.2, 0, 0, 0}, TaskMode::Town), std::invalid_argument);
  EXPECT_THROW(driving_score({1, -1, 0, 0}, TaskMode::Town), std::invalid_argument);
}

TEST(Scoring, EvaluatorAggregation) {
  const std::vector<EvaluatorSheet> same(3, EvaluatorSheet{"e", {{1, 1, 0, 0}}, ""});
  const auto r = aggregate_evaluators(same, TaskMode::Obstacle);
  EXPECT_EQ(r.runs[0].mean, driving_score({1, 1, 0, 0}, TaskMode::Obstacle));
  EXPECT_EQ(r.runs[0].sd, 0.0);

  std::vector<EvaluatorSheet> spread{{"a", {{1.0, 0, 0, 0}}, ""}, {"b", {{0.9, 0, 0, 0}}, ""}, {"c", {{0.8, 0, 0, 0}}, ""}};
  const auto s = aggregate_evaluators(spread, TaskMode::Town);
  EXPECT_NEAR(s.runs[0].mean, 0.9, 1e-12);
  EXPECT_NEAR(s.runs[0].sd, 0.1, 1e-12);

  spread[1].runs[0].collisions = 0.25;
  EXPECT_THROW(aggregate_evaluators(spread, TaskMode::Town), std::invalid_argument);
}

TEST(Scoring, CountsFromEvents) {
  EXPECT_EQ(counts_from_events({}, {1.0, false}), (InfractionCounts{1, 0, 0, 0}));
  const std::vector<InfractionEvent> ev{{InfractionKind::Collision, 1, 1, "a"},
                                        {InfractionKind::Collision, 2, 1, "b"},
                                        {InfractionKind::LaneDeviation, 3, 0.5, "lane"},
                                        {InfractionKind::RanRed, 4, 1, "l"},
                                        {InfractionKind::RanStop, 5, 1, "s"}};
  EXPECT_EQ(counts_from_events(ev, {0.7, true}), (InfractionCounts{0.7, 2, 0.5, 2}));
}

TEST(ScoringProperty, LogLinear) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const InfractionCounts c{rng.uniform(0.01, 1), std::floor(rng.uniform(0, 8)) / 2, std::floor(rng.uniform(0, 8)) / 2,
                             std::floor(rng.uniform(0, 8)) / 2};
    const double lhs = std::log(driving_score(c, TaskMode::Town));
    const double rhs = std::log(c.completion) + c.collisions * std::log(0.8) + c.lane_deviations * std::log(0.9) +
                       c.signal_violations * std::log(0.9);
    ASSERT_NEAR(lhs, rhs, 1e-12);
  }
}

// --------------------------------------------------------------- reaction time

TEST(Reaction, SimpleScheduleShape) {
  const auto run = gen_simple_run(7);
  ASSERT_EQ(run.size(), 50u);
  EXPECT_EQ(std::count_if(run.begin(), run.end(), [](const TrialSpec& t) { return t.kind == TrialKind::NoGo; }), 10);
  for (const auto& t : run) {
    EXPECT_GE(t.stimulus_onset, 1000);
    EXPECT_LT(t.stimulus_onset, 3000);
    EXPECT_EQ(t.auditory_cue, t.kind == TrialKind::NoGo);
  }
  EXPECT_EQ(run, gen_simple_run(7));
  EXPECT_NE(run, gen_simple_run(8));
}

TEST(Reaction, BrakingScheduleShape) {
  const auto run = gen_braking_run(4);
  ASSERT_EQ(run.size(), 40u);
  for (std::size_t i = 0; i < run.size(); ++i) {
    EXPECT_EQ(run[i].nogo.kind, TrialKind::NoGo);
    EXPECT_EQ(run[i].go.kind, TrialKind::Go);
    EXPECT_EQ(run[i].go.start, run[i].nogo.end());
    if (i) {
      EXPECT_EQ(run[i].nogo.start, run[i - 1].go.end());
    }
  }
  EXPECT_EQ(run, gen_braking_run(4));
}

TEST(Reaction, OnsetsUniformKs) {
  // One onset per seed over 10^4 seeds against U(1000, 3000).
  std::vector<double> u;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) u.push_back((gen_simple_run(seed)[0].stimulus_onset - 1000) / 2000);
  std::sort(u.begin(), u.end());
  double d = 0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  EXPECT_LT(d, 1.628 / std::sqrt(n));  // 1% critical value
  EXPECT_GE(u.front(), 0.0);
  EXPECT_LT(u.back(), 1.0);
}

TEST(Reaction, LabelExamples) {
  TrialSpec go{0, TrialKind::Go, 0, 1000, 60, 3000, false};
  TrialSpec nogo{1, TrialKind::NoGo, 0, 1000, 60, 3000, true};
  const auto tp = label_trial(go, {1137});
  EXPECT_EQ(tp.label, OutcomeLabel::TP);
  EXPECT_EQ(*tp.valid_rt, 137);
  EXPECT_EQ(label_trial(go, {1049}).label, OutcomeLabel::FP);
  EXPECT_EQ(label_trial(go, {}).label, OutcomeLabel::FN);
  EXPECT_EQ(label_trial(go, {1100, 1200}).label, OutcomeLabel::FP);
  EXPECT_EQ(label_trial(go, {1300}, true).label, OutcomeLabel::FN);
  EXPECT_EQ(label_trial(nogo, {}).label, OutcomeLabel::TN);
  EXPECT_EQ(label_trial(nogo, {1500}).label, OutcomeLabel::FP);
}

TEST(Reaction, HandCountedMetrics) {
  std::vector<TrialOutcome> o;
  for (int i = 0; i < 39; ++i) o.push_back({OutcomeLabel::TP, 300.0, 0});
  o.push_back({OutcomeLabel::FN, std::nullopt, 0});
  for (int i = 0; i < 8; ++i) o.push_back({OutcomeLabel::TN, std::nullopt, 0});
  for (int i = 0; i < 2; ++i) o.push_back({OutcomeLabel::FP, std::nullopt, 0});
  const auto m = run_metrics(o);
  EXPECT_EQ(*m.accuracy, 0.94);
  EXPECT_EQ(*m.sensitivity, 0.975);
  EXPECT_EQ(*m.specificity, 0.8);

  std::vector<TrialOutcome> missed(40, {OutcomeLabel::FN, std::nullopt, 0});
  EXPECT_EQ(*run_metrics(missed).sensitivity, 0.0);
  EXPECT_FALSE(run_metrics(missed).specificity.has_value());
}

TEST(Reaction, FixedLatencyAllTruePositives) {
  const auto trials = gen_simple_run(2);
  const auto clicks = scripted_operator(trials, {300, 0, 0}, {0, 0}, 1);
  std::vector<TrialOutcome> o;
  for (const auto& t : trials) o.push_back(label_trial(t, clicks_in(t, clicks)));
  const auto m = run_metrics(o);
  EXPECT_EQ(m.tp, 40);
  EXPECT_EQ(m.tn, 10);
  EXPECT_NEAR(*m.rt_mean, 300, 1e-9);
}

TEST(Reaction, FalsePositiveRateWithinBinomialInterval) {
  SimpleRunConfig cfg;
  cfg.trials = 10000;
  cfg.nogo_trials = 10000;
  const auto trials = gen_simple_run(9, cfg);
  const auto clicks = scripted_operator(trials, {300, 50, 50}, {0.1, 0}, 21);
  std::vector<TrialOutcome> o;
  for (const auto& t : trials) o.push_back(label_trial(t, clicks_in(t, clicks)));
  const double spec = *run_metrics(o).specificity;
  const double half = 3.29 * std::sqrt(0.9 * 0.1 / 10000.0);  // 99.9% normal interval
  EXPECT_NEAR(spec, 0.9, half);
}

TEST(ReactionProperty, HarnessMatchesBruteForceLabeler) {
  SimpleRunConfig cfg;
  cfg.trials = 10000;
  cfg.nogo_trials = 2500;
  const auto trials = gen_simple_run(31, cfg);
  Rng rng(77);
  std::vector<double> clicks;
  for (const auto& t : trials) {
    const int n = static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) clicks.push_back(t.onset_time() + rng.uniform(-1200, 1500));
  }
  std::sort(clicks.begin(), clicks.end());
  session::SessionConfig sc;
  sc.task = session::Task::SimpleRt;
  session::RunRecord rec;
  const auto m = session::label_run(sc, trials, clicks, &rec);
  std::vector<std::string> harness;
  for (const auto& l : rec.lines) {
    const auto j = nlohmann::json::parse(l);
    if (j["type"] == "outcome") harness.push_back(j["label"].get<std::string>());
  }
  ASSERT_EQ(harness.size(), trials.size());
  int tp = 0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const std::string want = oracle::label(trials[i], clicks, false);
    ASSERT_EQ(harness[i], want) << "trial " << i;
    tp += want == "TP";
  }
  EXPECT_EQ(m.tp, tp);
}

// ----------------------------------------------------------------- statistics

namespace {
const stats::SampleGroup kA{"a", {1, 2, 3, 4, 5}}, kB{"b", {2, 3, 4, 5, 6}};
const stats::SampleGroup kA2{"a2", {0.92, 0.95, 0.88, 0.97, 0.91, 0.94, 0.90}};
const stats::SampleGroup kB2{"b2", {0.81, 0.86, 0.79, 0.90, 0.75, 0.84}};
const std::vector<stats::SampleGroup> kThree{{"g1", {0.939, 0.921, 0.950, 0.902, 0.944, 0.918}},
                                             {"g2", {0.823, 0.861, 0.790, 0.845, 0.812}},
                                             {"g3", {0.880, 0.905, 0.871, 0.899, 0.862, 0.884, 0.893}}};
}  // namespace

// Goldens from scipy.stats 1.15 / statsmodels, frozen.
TEST(Stats, WelchGoldens) {
  using stats::Tail;
  auto two = stats::welch_ttest(kA, kB, Tail::Two);
  EXPECT_NEAR(two.statistic, -1.0, 1e-12);
  EXPECT_NEAR(two.p_value, 0.34659350708733416, 1e-9);
  EXPECT_NEAR(stats::welch_ttest(kA, kB, Tail::Left).p_value, 0.17329675354366708, 1e-9);
  EXPECT_NEAR(stats::welch_ttest(kA, kB, Tail::Right).p_value, 0.8267032464563329, 1e-9);

  const auto w2 = stats::welch_ttest(kA2, kB2, Tail::Two);
  EXPECT_NEAR(w2.statistic, 4.022990555196964, 1e-9);
  EXPECT_NEAR(w2.df1, 7.78699371568262, 1e-9);
  EXPECT_NEAR(w2.p_value, 0.004044002563183088, 1e-9);
  EXPECT_NEAR(stats::welch_ttest(kA2, kB2, Tail::Left).p_value, 0.9979779987184084, 1e-9);
  EXPECT_NEAR(stats::welch_ttest(kA2, kB2, Tail::Right).p_value, 0.002022001281591544, 1e-9);
}

TEST(Stats, AnovaAndBonferroniGoldens) {
  const auto f = stats::oneway_anova(kThree);
  EXPECT_NEAR(f.statistic, 35.02535828037755, 1e-9);
  EXPECT_NEAR(f.p_value, 2.2289463530739547e-06, 1e-9);
  const auto pw = stats::bonferroni_pairwise(kThree);
  ASSERT_EQ(pw.size(), 3u);
  const double t[3] = {8.365485065506634, 3.9097333356333692, -4.9362600727956085};
  const double adj[3] = {1.483812871628239e-06, 0.004179884082389725, 0.0005376972751608072};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(pw[i].statistic, t[i], 1e-9);
    EXPECT_NEAR(pw[i].adjusted_p, adj[i], 1e-9);
    EXPECT_TRUE(pw[i].significant);
  }
}

TEST(Stats, PowerAnalysis) {
  const auto s = stats::power_sample_size(0.8, 0.05, 0.95, 0.25);
  EXPECT_EQ(s.per_group, 42);
  EXPECT_EQ(s.recruit, 56);
  EXPECT_EQ(stats::power_sample_size(0.8, 0.05, 0.95, 0.0, false).per_group, 41);
  EXPECT_EQ(stats::power_sample_size(1e6, 0.05, 0.95, 0).per_group, 2);
  EXPECT_THROW(stats::power_sample_size(0, 0.05, 0.95, 0), std::invalid_argument);
  EXPECT_THROW(stats::power_sample_size(0.8, 0.05, 0.04, 0), std::invalid_argument);
}

TEST(StatsProperty, Identities) {
  // Identical samples.
  const auto same = stats::welch_ttest(kA, kA);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  // Tails sum to one.
  EXPECT_NEAR(stats::welch_ttest(kA2, kB2, stats::Tail::Left).p_value +
                  stats::welch_ttest(kA2, kB2, stats::Tail::Right).p_value,
              1.0, 1e-12);
  // Two-group ANOVA F equals the pooled t squared.
  const auto f2 = stats::oneway_anova({kA2, kB2});
  const double t = stats::bonferroni_pairwise({kA2, kB2})[0].statistic;
  EXPECT_NEAR(f2.statistic, t * t, 1e-9);
  // Scale and shift invariance.
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const double c = rng.uniform(0.01, 100), k = rng.uniform(-50, 50);
    auto scaled = [&](stats::SampleGroup g, bool shift) {
      for (double& v : g.values) v = shift ? v + k : v * c;
      return g;
    };
    const auto w = stats::welch_ttest(scaled(kA2, false), scaled(kB2, false));
    ASSERT_NEAR(w.statistic, stats::welch_ttest(kA2, kB2).statistic, 1e-12 * std::abs(w.statistic) + 1e-12);
    ASSERT_NEAR(w.p_value, stats::welch_ttest(kA2, kB2).p_value, 1e-12);
    std::vector<stats::SampleGroup> shifted;
    for (const auto& g : kThree) shifted.push_back(scaled(g, true));
    ASSERT_NEAR(stats::oneway_anova(shifted).statistic, 35.02535828037755, 1e-6);
  }
}

TEST(StatsProperty, BonferroniNeverBelowRawAndSubset) {
  std::vector<stats::SampleGroup> groups;
  Rng rng(21);
  for (int g = 0; g < 21; ++g) {
    stats::SampleGroup s{"p" + std::to_string(g), {}};
    for (int i = 0; i < 8; ++i) s.values.push_back(rng.normal(0.85 + 0.01 * g, 0.05));
    groups.push_back(s);
  }
  const auto pw = stats::bonferroni_pairwise(groups);
  EXPECT_EQ(pw.size(), 210u);
  for (const auto& c : pw) {
    ASSERT_GE(c.adjusted_p, c.raw_p);
    if (c.significant) {
      ASSERT_LT(c.raw_p, 0.05);
    }
  }
  const std::vector<stats::SampleGroup> ident(4, kA);
  for (const auto& c : stats::bonferroni_pairwise(ident)) EXPECT_EQ(c.adjusted_p, 1.0);
}

// -------------------------------------------------------------------- vehicle

namespace {
VehicleState teleop() {
  VehicleState v;
  v.mode = VehicleMode::Teleop;
  return v;
}
}  // namespace

TEST(Vehicle, SpeedCapAndStraightLine) {
  VehicleState v = teleop();
  const auto p = teledrive_params();
  for (int i = 0; i < 1000; ++i) v = step_dynamics(v, {0.5, 1.0, false}, p, 0.02).state;
  EXPECT_NEAR(v.speed, 4.0, 1e-6);
  EXPECT_EQ(v.wheel_angle, 0.0);
  EXPECT_EQ(v.y, 0.0);
  EXPECT_EQ(v.heading, 0.0);
  EXPECT_GT(v.x, 0.0);
}

TEST(Vehicle, SteeringMapEndpointsAndSign) {
  EXPECT_EQ(wheel_angle_for(0.0), -601.5);
  EXPECT_EQ(wheel_angle_for(1.0), 601.5);
  EXPECT_EQ(wheel_angle_for(0.5), 0.0);
  VehicleState v = teleop();
  v.speed = 3;
  for (int i = 0; i < 50; ++i) v = step_dynamics(v, {0.0, 0.75, false}, teledrive_params(), 0.02).state;
  EXPECT_GT(v.heading, 0.0);  // left command turns left (counter-clockwise)
}

TEST(Vehicle, BrakeFromFiveMphStopsInTwoSeconds) {
  VehicleState v = teleop();
  v.speed = 5.0;
  const auto p = brake_trial_params();
  int ticks = 0;
  while (v.speed > 0) {
    v = step_dynamics(v, {0.5, 0, true}, p, 0.02).state;
    ++ticks;
  }
  EXPECT_NEAR(ticks * 20.0, 2000.0, 20.0);
}

TEST(Vehicle, OverrideIgnoresCommands) {
  VehicleState v = teleop();
  v.speed = 3;
  v.mode = VehicleMode::SafetyOverride;
  const auto n = step_dynamics(v, {1.0, 1.0, false}, teledrive_params(), 0.1).state;
  EXPECT_LT(n.speed, 3.0);
  EXPECT_EQ(n.wheel_angle, 0.0);
}

TEST(BrakeTrial, Timing) {
  VehicleState v = teleop();
  v.speed = 5;
  const auto p = brake_trial_params();
  const auto g = spawn_brake_trial(v, p);
  const auto none = simulate_brake_trial(v, p, g, std::nullopt);
  ASSERT_TRUE(none.collided);
  EXPECT_NEAR(none.collision_time, 5000, 20);
  for (double onset : {0.0, 1000.0, 2900.0, 3000.0}) EXPECT_FALSE(simulate_brake_trial(v, p, g, onset).collided) << onset;
  const auto r = simulate_brake_trial(v, p, g, 2900.0);
  EXPECT_NEAR(r.stop_time, 2000, 20);
  // Linear deceleration covers half the cruise distance while stopping, so the
  // latest safe onset is 4 s, not 3 s.
  EXPECT_FALSE(simulate_brake_trial(v, p, g, 3200.0).collided);
  EXPECT_FALSE(simulate_brake_trial(v, p, g, 3960.0).collided);
  EXPECT_TRUE(simulate_brake_trial(v, p, g, 4100.0).collided);
}

// ---------------------------------------------------------------------- world

namespace {
nlohmann::json straight_world() {
  return nlohmann::json::parse(R"({"version":1,"name":"t","route":{"path":{"points":[[0,0],[40,0]]},"corridor":3.0},
    "lane_width":3.5})");
}

VehicleState at(double x, double y, double speed = 2.0) {
  VehicleState v = teleop();
  v.x = x;
  v.y = y;
  v.speed = speed;
  return v;
}
}  // namespace

TEST(Detectors, StraightThroughObstacleIsOneCollision) {
  auto wj = straight_world();
  wj["obstacles"] = {{{"id", "box"}, {"route_s", 20}, {"size", {1.0, 1.0}}}};
  const WorldModel w = world_from_json(wj);
  InfractionDetector det(w, teledrive_params());
  int collisions = 0;
  VehicleState prev = at(0, 0);
  for (int i = 1; i <= 400; ++i) {
    const VehicleState next = at(i * 0.1, 0);
    for (const auto& e : det.detect(prev, next, i * 20.0, 20)) collisions += e.kind == InfractionKind::Collision;
    prev = next;
  }
  EXPECT_EQ(collisions, 1);
}

TEST(Detectors, StopSignDwell) {
  auto wj = straight_world();
  wj["stop_signs"] = {{{"id", "s"}, {"route_s", 20}}};
  const WorldModel w = world_from_json(wj);
  const auto p = teledrive_params();
  auto run = [&](double dwell_ms) {
    InfractionDetector det(w, p);
    int ran = 0;
    double t = 0;
    VehicleState prev = at(10, 0);
    auto go = [&](const VehicleState& next) {
      t += 20;
      for (const auto& e : det.detect(prev, next, t, 20)) ran += e.kind == InfractionKind::RanStop;
      prev = next;
    };
    // Front bumper stops 0.5 m short of the line.
    const double stop_x = 20 - p.front_extent() - 0.5;
    for (double x = 10; x < stop_x; x += 0.05) go(at(x, 0));
    for (double s = 0; s < dwell_ms; s += 20) go(at(stop_x, 0, 0.0));
    for (double x = stop_x; x < 30; x += 0.05) go(at(x, 0));
    return ran;
  };
  EXPECT_EQ(run(1200), 0);
  EXPECT_EQ(run(0), 1);
}

TEST(Detectors, WeavingTrajectoryGivesTwoLaneDeviations) {
  const WorldModel w = world_from_json(straight_world());
  const auto p = teledrive_params();
  InfractionDetector det(w, p);
  // Lateral profile (m) every 20 ms: in, out left 1 s, back in 1 s, out right 1 s, in.
  std::vector<double> lat;
  for (int i = 0; i < 50; ++i) lat.push_back(0);
  for (int i = 0; i < 50; ++i) lat.push_back(2.5);
  for (int i = 0; i < 50; ++i) lat.push_back(0);
  for (int i = 0; i < 50; ++i) lat.push_back(-2.5);
  for (int i = 0; i < 50; ++i) lat.push_back(0);
  // Geometric oracle: excursions beyond half-width + margin lasting >= debounce.
  int expected = 0, run = 0;
  for (double y : lat) {
    run = std::abs(y) > 1.75 + 0.2 ? run + 1 : 0;
    if (run == 26) ++expected;  // 25 steps of 20 ms after entry = 500 ms
  }
  int events = 0;
  VehicleState prev = at(5, 0);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const VehicleState next = at(5 + 0.04 * static_cast<double>(i), lat[i]);
    for (const auto& e : det.detect(prev, next, 20.0 * static_cast<double>(i + 1), 20))
      events += e.kind == InfractionKind::LaneDeviation;
    prev = next;
  }
  EXPECT_EQ(expected, 2);
  EXPECT_EQ(events, expected);
}

TEST(Detectors, RedLight) {
  auto wj = straight_world();
  wj["traffic_lights"] = {{{"id", "l"}, {"route_s", 20}, {"phases", {{"green", 1000}, {"yellow", 1000}, {"red", 100000}}}}};
  const WorldModel w = world_from_json(wj);
  InfractionDetector det(w, teledrive_params());
  int red = 0;
  VehicleState prev = at(0, 0);
  for (int i = 1; i <= 400; ++i) {
    const VehicleState next = at(i * 0.1, 0);
    for (const auto& e : det.detect(prev, next, 5000 + i * 20.0, 20)) red += e.kind == InfractionKind::RanRed;
    prev = next;
  }
  EXPECT_EQ(red, 1);
}

TEST(RouteProgress, ArcLength) {
  const WorldModel w = world_from_json(straight_world());
  RouteProgress pr(w.route);
  EXPECT_EQ(pr.completion(), 0.0);
  for (double x = 0; x <= 20; x += 0.5) pr.update({x, 0.5});
  EXPECT_NEAR(pr.completion(), 0.5, 1e-12);
  for (double x = 20; x <= 40; x += 0.5) pr.update({x, 0});
  EXPECT_EQ(pr.completion(), 1.0);
  EXPECT_TRUE(pr.complete());
}

TEST(OffRoute, TenSecondRule) {
  OffRouteMonitor a;
  for (double t = 0; t <= 9900; t += 20) EXPECT_FALSE(a.update(false, t));
  EXPECT_FALSE(a.update(true, 9920));
  OffRouteMonitor b;
  bool aborted = false;
  for (double t = 0; t <= 10100; t += 20) aborted = b.update(false, t);
  EXPECT_TRUE(aborted);
  OffRouteMonitor c;
  for (double t = 0; t <= 60000; t += 20) EXPECT_FALSE(c.update(true, t));
}

TEST(World, BundledWorldsLoad) {
  for (const char* name : {"obstacle_ccw", "obstacle_cw", "obstacle_ccw_switch", "obstacle_cw_switch", "mcity", "town",
                           "straight"}) {
    const WorldModel w = load_world(std::string(TELEDRIVE_DATA_DIR) + "/worlds/" + name + ".json");
    EXPECT_GT(w.route.length(), 30.0) << name;
    EXPECT_FALSE(w.lanes.empty()) << name;
  }
  EXPECT_THROW(world_from_json(nlohmann::json::parse(R"({"route":{}})")), WorldError);
}
