#include <doctest.h>

#include <cmath>

#include "codcl/treatment.hpp"
#include "oracles.hpp"

using namespace codcl;
using oracle::ev;

namespace {

TemporalGraph pair_history_graph() {
  // Pair (0,1) interacts at 8 and 10; t_max = 10.
  return TemporalGraph({ev(0, 1, 8), ev(0, 1, 10)}, 3);
}

}  // namespace

TEST_CASE("interaction intensity: cumulative sums, decay discounts") {
  TreatmentConfig cfg;
  const TemporalGraph g = pair_history_graph();
  SUBCASE("pair with no direct events") {
    CHECK(interaction_intensity(0, 2, g, cfg) == 0.0);
  }
  SUBCASE("cumulative counts unit weights") {
    CHECK(interaction_intensity(0, 1, g, cfg) == 2.0);
  }
  SUBCASE("lambda = 0 decay equals cumulative exactly") {
    TreatmentConfig decay = cfg;
    decay.intensity_mode = IntensityMode::kExponentialDecay;
    decay.lambda = 0.0;
    CHECK(interaction_intensity(0, 1, g, decay) ==
          doctest::Approx(interaction_intensity(0, 1, g, cfg)).epsilon(1e-12));
  }
  SUBCASE("hand-evaluated decay value") {
    TreatmentConfig decay = cfg;
    decay.intensity_mode = IntensityMode::kExponentialDecay;
    decay.lambda = 0.5;
    // exp(-0.5 * (10-8)) + exp(0) = exp(-1) + 1
    CHECK(interaction_intensity(0, 1, g, decay) ==
          doctest::Approx(std::exp(-1.0) + 1.0).epsilon(1e-9));
  }
  SUBCASE("decay never exceeds cumulative, equality only at t_max") {
    TreatmentConfig decay = cfg;
    decay.intensity_mode = IntensityMode::kExponentialDecay;
    decay.lambda = 0.3;
    const auto events = oracle::random_events(10, 80, 20.0, 5);
    TemporalGraph r(events, 10);
    for (NodeId u = 0; u < 10; ++u) {
      for (NodeId v = u + 1; v < 10; ++v) {
        const double decayed = interaction_intensity(u, v, r, decay);
        const double plain = interaction_intensity(u, v, r, cfg);
        CHECK(decayed <= plain + 1e-12);
      }
    }
    // Equality when every pair event sits at t_max.
    TemporalGraph at_max({ev(0, 1, 7), ev(0, 1, 7)}, 2);
    CHECK(interaction_intensity(0, 1, at_max, decay) ==
          doctest::Approx(interaction_intensity(0, 1, at_max, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("nearest-rank percentile") {
  CHECK(global_threshold({5.0, 5.0, 5.0}, 30.0) == 5.0);
  CHECK(global_threshold({1, 2, 3, 4}, 50.0) == 2.0);
  CHECK(global_threshold({1, 2, 3, 4}, 75.0) == 3.0);
  CHECK(global_threshold({4, 3, 2, 1}, 75.0) == 3.0);  // order-independent
  CHECK_THROWS_AS(global_threshold({}, 50.0), const Error&);
  CHECK_THROWS_AS(global_threshold({1.0}, 0.0), const ConfigError&);
  CHECK_THROWS_AS(global_threshold({1.0}, 100.0), const ConfigError&);

  SUBCASE("matches the sort-and-index oracle on random multisets") {
    std::mt19937_64 gen(71);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + uniform_index(gen, 40);
      std::vector<double> values(n);
      for (double& v : values) v = std::floor(uniform01(gen) * 20.0);
      const double p = 0.5 + uniform01(gen) * 99.0;
      CHECK(global_threshold(values, p) == oracle::percentile(values, p));
    }
  }
  SUBCASE("monotone in p") {
    std::mt19937_64 gen(73);
    std::vector<double> values(25);
    for (double& v : values) v = uniform01(gen) * 10.0;
    double prev = -1e300;
    for (double p = 5; p < 100; p += 5) {
      const double theta = global_threshold(values, p);
      CHECK(theta >= prev);
      prev = theta;
    }
  }
}

TEST_CASE("binary treatment gates the indicator statistic at theta") {
  // 0 and 1 share neighbors {2,3}; query after all structure exists.
  TemporalGraph g({ev(0, 2, 1), ev(1, 2, 2), ev(0, 3, 3), ev(1, 3, 4)}, 5);
  TreatmentConfig cfg;
  SUBCASE("statistic equal to theta is treated (inclusive)") {
    CHECK(binary_treatment(0, 1, 10, 2.0, g, cfg) == 1);
  }
  SUBCASE("theta above the maximum observed statistic") {
    CHECK(binary_treatment(0, 1, 10, 3.0, g, cfg) == 0);
  }
  SUBCASE("intensity indicator") {
    TreatmentConfig phi = cfg;
    phi.indicator_stat = IndicatorStat::kIntensity;
    CHECK(binary_treatment(0, 2, 10, 1.0, g, phi) == 1);
    CHECK(binary_treatment(0, 1, 10, 0.5, g, phi) == 0);  // no direct events
  }
}

TEST_CASE("assign_all: threshold from the training distribution") {
  // Five-node graph where the strict-past common-neighbor counts of the four
  // (0,1) training events are exactly {0, 1, 2, 3}.
  std::vector<TemporalEvent> structure = {
      ev(0, 2, 1), ev(1, 2, 2),  // shared neighbor 2 from t > 2
      ev(0, 3, 3), ev(1, 3, 4),  // shared neighbor 3 from t > 4
      ev(0, 4, 5), ev(1, 4, 6),  // shared neighbor 4 from t > 6
  };
  std::vector<TemporalEvent> train = {ev(0, 1, 0.5), ev(0, 1, 2.5), ev(0, 1, 4.5),
                                      ev(0, 1, 6.5)};
  std::vector<TemporalEvent> all = structure;
  all.insert(all.end(), train.begin(), train.end());
  TemporalGraph g(all, 5);
  TreatmentConfig cfg;
  cfg.percentile_p = 50.0;

  const AssignResult result = assign_all(train, g, cfg);
  REQUIRE(result.assignments.size() == 4);
  CHECK(result.assignments[0].statistic == 0.0);
  CHECK(result.assignments[1].statistic == 1.0);
  CHECK(result.assignments[2].statistic == 2.0);
  CHECK(result.assignments[3].statistic == 3.0);
  // Nearest-rank 50% of {0,1,2,3} is the second-smallest element.
  CHECK(result.theta == 1.0);
  CHECK(result.assignments[0].treatment == 0);
  CHECK(result.assignments[1].treatment == 1);
  CHECK(result.assignments[2].treatment == 1);
  CHECK(result.assignments[3].treatment == 1);

  SUBCASE("higher percentile flips the low-statistic events") {
    TreatmentConfig strict = cfg;
    strict.percentile_p = 75.0;
    const AssignResult r2 = assign_all(train, g, strict);
    CHECK(r2.theta == 2.0);
    CHECK(r2.assignments[0].treatment == 0);
    CHECK(r2.assignments[1].treatment == 0);
    CHECK(r2.assignments[2].treatment == 1);
    CHECK(r2.assignments[3].treatment == 1);
  }
  SUBCASE("single-edge training set treats its own edge") {
    const std::vector<TemporalEvent> one = {ev(0, 1, 5)};
    const AssignResult r1 = assign_all(one, g, cfg);
    CHECK(r1.assignments[0].treatment == 1);
  }
  SUBCASE("treated fraction is bounded by the percentile") {
    const auto events = oracle::random_events(20, 200, 50.0, 37);
    TemporalGraph r(events, 20);
    TreatmentConfig high = cfg;
    high.percentile_p = 95.0;
    const AssignResult res = assign_all(events, r, high);
    std::size_t strictly_above = 0;
    for (const auto& a : res.assignments) strictly_above += a.statistic > a.threshold;
    const double n = static_cast<double>(res.assignments.size());
    CHECK(static_cast<double>(strictly_above) / n <= 1.0 - 0.95 + 1.0 / n + 1e-12);
  }
  SUBCASE("reruns are identical") {
    const AssignResult again = assign_all(train, g, cfg);
    REQUIRE(again.assignments.size() == result.assignments.size());
    for (std::size_t i = 0; i < again.assignments.size(); ++i) {
      CHECK(again.assignments[i].statistic == result.assignments[i].statistic);
      CHECK(again.assignments[i].treatment == result.assignments[i].treatment);
    }
    CHECK(again.theta == result.theta);
  }
  SUBCASE("events never feed their own assignment") {
    // A pair whose only shared structure arrives with the event itself.
    std::vector<TemporalEvent> alone = {ev(0, 1, 1)};
    TemporalGraph tiny(alone, 5);
    const AssignResult r3 = assign_all(alone, tiny, cfg);
    CHECK(r3.assignments[0].statistic == 0.0);
  }
}

TEST_CASE("theta is a pure function of the training split") {
  const auto train_events = oracle::random_events(15, 120, 30.0, 41);
  TemporalGraph train_graph(train_events, 15);
  TreatmentConfig cfg;
  const AssignResult before = assign_all(train_events, train_graph, cfg);

  // Append later validation/test events to the graph; recompute over the same
  // training inputs.
  auto extended = train_events;
  auto extra = oracle::random_events(15, 60, 10.0, 43);
  for (auto& e : extra) {
    e.timestamp += 100.0;
    extended.push_back(e);
  }
  TemporalGraph full(extended, 15);
  TemporalGraph restricted = full.restricted_to(train_events);
  const AssignResult after = assign_all(train_events, restricted, cfg);
  CHECK(before.theta == after.theta);
  for (std::size_t i = 0; i < before.assignments.size(); ++i) {
    CHECK(before.assignments[i].statistic == after.assignments[i].statistic);
    CHECK(before.assignments[i].treatment == after.assignments[i].treatment);
  }
}

TEST_CASE("alternative treatments") {
  TreatmentConfig cfg;
  cfg.delta = 5.0;
  cfg.proximity_threshold = 2.0;
  cfg.frequency_threshold = 0.5;

  SUBCASE("never-active nodes get treatment 0 for every kind") {
    TemporalGraph g({ev(0, 1, 1)}, 6);
    for (TreatmentKind kind :
         {TreatmentKind::kCommonNeighbors, TreatmentKind::kTemporalProximity,
          TreatmentKind::kActivitySynchrony, TreatmentKind::kInteractionFrequency,
          TreatmentKind::kKCoreTemporal}) {
      CHECK(alternative_treatment(kind, 4, 5, 10, g, cfg) == 0);
    }
    // Degree similarity: two isolated nodes have equal degree, gap 0 <= 2.
    CHECK(alternative_treatment(TreatmentKind::kDegreeSimilarity, 4, 5, 10, g, cfg) == 1);
  }
  SUBCASE("common neighbors requires two shared partners") {
    TemporalGraph g({ev(0, 2, 1), ev(1, 2, 2), ev(0, 3, 3), ev(1, 3, 4)}, 5);
    CHECK(alternative_treatment(TreatmentKind::kCommonNeighbors, 0, 1, 10, g, cfg) == 1);
    CHECK(alternative_treatment(TreatmentKind::kCommonNeighbors, 0, 1, 3.5, g, cfg) == 0);
  }
  SUBCASE("a path has an empty 2-core") {
    TemporalGraph g({ev(0, 1, 1), ev(1, 2, 2), ev(2, 3, 3)}, 4);
    CHECK(alternative_treatment(TreatmentKind::kKCoreTemporal, 0, 3, 10, g, cfg) == 0);
    // A 4-cycle is its own 2-core.
    TemporalGraph cyc({ev(0, 1, 1), ev(1, 2, 2), ev(2, 3, 3), ev(3, 0, 4)}, 4);
    CHECK(alternative_treatment(TreatmentKind::kKCoreTemporal, 0, 2, 10, cyc, cfg) == 1);
  }
  SUBCASE("temporal proximity compares last event times") {
    TemporalGraph g({ev(0, 2, 4), ev(1, 3, 5)}, 4);
    CHECK(alternative_treatment(TreatmentKind::kTemporalProximity, 0, 1, 10, g, cfg) == 1);
    TreatmentConfig tight = cfg;
    tight.proximity_threshold = 0.5;
    CHECK(alternative_treatment(TreatmentKind::kTemporalProximity, 0, 1, 10, g, tight) ==
          0);
  }
  SUBCASE("activity synchrony requires both nodes in the window") {
    TemporalGraph g({ev(0, 2, 4), ev(1, 3, 5), ev(1, 3, 20)}, 4);
    // Window [3, 8]: both active. Window [16, 21]: only node 1.
    CHECK(alternative_treatment(TreatmentKind::kActivitySynchrony, 0, 1, 8, g, cfg) == 1);
    CHECK(alternative_treatment(TreatmentKind::kActivitySynchrony, 0, 1, 21, g, cfg) == 0);
  }
  SUBCASE("interaction frequency thresholds events per elapsed span") {
    TemporalGraph g({ev(0, 1, 0), ev(0, 1, 1), ev(0, 1, 2)}, 3);
    // 3 events over span 2 -> 1.5 >= 0.5.
    CHECK(alternative_treatment(TreatmentKind::kInteractionFrequency, 0, 1, 2, g, cfg) ==
          1);
    TreatmentConfig strict = cfg;
    strict.frequency_threshold = 2.0;
    CHECK(alternative_treatment(TreatmentKind::kInteractionFrequency, 0, 1, 2, g,
                                strict) == 0);
  }
  SUBCASE("dynamic-interaction is rejected as an alternative") {
    TemporalGraph g({ev(0, 1, 1)}, 3);
    CHECK_THROWS_AS(
        alternative_treatment(TreatmentKind::kDynamicInteraction, 0, 1, 5, g, cfg),
        const Error&);
  }
}

TEST_CASE("every treatment kind is symmetric") {
  const auto events = oracle::random_events(20, 150, 40.0, 47);
  TemporalGraph g(events, 20);
  TreatmentConfig cfg;
  cfg.delta = 8.0;
  cfg = resolve_thresholds(cfg, g, events);
  std::mt19937_64 gen(53);
  const TreatmentKind kinds[] = {
      TreatmentKind::kDynamicInteraction,  TreatmentKind::kCommonNeighbors,
      TreatmentKind::kDegreeSimilarity,    TreatmentKind::kTemporalProximity,
      TreatmentKind::kActivitySynchrony,   TreatmentKind::kInteractionFrequency,
      TreatmentKind::kKCoreTemporal,
  };
  for (int q = 0; q < 300; ++q) {
    const NodeId u = static_cast<NodeId>(uniform_index(gen, 20));
    const NodeId v = static_cast<NodeId>(uniform_index(gen, 20));
    const Time t = std::floor(uniform01(gen) * 45.0);
    for (TreatmentKind kind : kinds) {
      const auto [stat_uv, thr_uv] = treatment_statistic(kind, u, v, t, 1.0, g, cfg);
      const auto [stat_vu, thr_vu] = treatment_statistic(kind, v, u, t, 1.0, g, cfg);
      CHECK(stat_uv == stat_vu);
      CHECK(thr_uv == thr_vu);
    }
  }
}

TEST_CASE("threshold resolution defaults") {
  const auto events = oracle::random_events(12, 100, 50.0, 59);
  TemporalGraph g(events, 12);
  TreatmentConfig cfg;
  const TreatmentConfig resolved = resolve_thresholds(cfg, g, events);
  CHECK(resolved.proximity_threshold == doctest::Approx(0.1 * g.time_span()));
  CHECK(resolved.frequency_threshold >= 0.0);
  SUBCASE("explicit values pass through") {
    TreatmentConfig manual = cfg;
    manual.proximity_threshold = 3.25;
    manual.frequency_threshold = 0.125;
    const TreatmentConfig kept = resolve_thresholds(manual, g, events);
    CHECK(kept.proximity_threshold == 3.25);
    CHECK(kept.frequency_threshold == 0.125);
  }
}

TEST_CASE("phi-threshold compatibility gates counts against an intensity percentile") {
  // (0,1) has two direct events; common-neighbor counts stay 0.
  std::vector<TemporalEvent> train = {ev(0, 1, 1), ev(0, 1, 2), ev(2, 3, 3)};
  TemporalGraph g(train, 5);
  TreatmentConfig cfg;
  cfg.phi_threshold_compat = true;
  cfg.percentile_p = 50.0;
  const AssignResult result = assign_all(train, g, cfg);
  // theta comes from the intensity distribution {2,2,1} -> median 2, while the
  // gated statistic is the common-neighbor count (all zero): nothing treated.
  CHECK(result.theta == 2.0);
  for (const auto& a : result.assignments) CHECK(a.treatment == 0);
}
