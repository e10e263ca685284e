#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "bdnet/rng.hpp"
#include "bdnet/scoring.hpp"

using namespace bdnet;

namespace {

// A judge driven entirely by a lookup of prearranged decisions, so tallies
// can be cross-checked by hand and by an independent counter.
class ScriptedJudge final : public Judge {
 public:
  // accept(image[0], claim) decides; image[0] carries the probe id.
  using Script = std::function<Decision(float, std::uint32_t)>;
  explicit ScriptedJudge(Script s) : script_(std::move(s)) {}
  Decision judge(const Tensor& probe, std::uint32_t claim) const override {
    return script_(probe.data[0], claim);
  }

 private:
  Script script_;
};

Probe probe_with_id(float id, std::uint32_t label) {
  Tensor t = Tensor::zeros({1});
  t.data[0] = id;
  return Probe{t, label};
}

Decision accept_as(std::uint32_t cls) {
  Decision d;
  d.accepted = true;
  d.matched_class = cls;
  d.score = 1.0;
  return d;
}

Decision reject() { return Decision{}; }

// Independent tally: recount the six counters with plain loops and compare
// each metric against its formula written out directly.
struct NaiveTally {
  std::uint64_t i_false = 0, k_false = 0, u_true = 0;
};

NaiveTally recount(const Judge& judge, const EvaluationSet& s) {
  NaiveTally t;
  for (const auto& p : s.attacker_probes)
    if (!judge.judge(p.image, p.label).accepted) ++t.i_false;
  for (const auto& p : s.known_probes) {
    const Decision d = judge.judge(p.image, p.label);
    if (!d.accepted || d.matched_class != p.label) ++t.k_false;
  }
  for (const auto& p : s.unknown_probes)
    if (judge.judge(p.image, p.label).accepted) ++t.u_true;
  return t;
}

}  // namespace

TEST_CASE("metric names round-trip") {
  for (MetricChoice m : {MetricChoice::acc_all, MetricChoice::acc_2x_ifalse,
                         MetricChoice::acc_all_plus_i, MetricChoice::acc_combo})
    CHECK(metric_choice_from_string(metric_choice_name(m)) == m);
  CHECK_THROWS_AS(metric_choice_from_string("acc_bogus"), Error);
}

TEST_CASE("evaluate tallies the worked 6-probe example") {
  // 2 attacker probes (1 rejected), 1 known probe (correct), 3 unknown
  // probes (1 wrongly accepted): I_false=1, K_false=0, U_true=1.
  ScriptedJudge judge([](float id, std::uint32_t claim) {
    if (id == 0.0f) return accept_as(claim);  // attacker accepted
    if (id == 1.0f) return reject();          // attacker rejected
    if (id == 2.0f) return accept_as(claim);  // known correct
    if (id == 3.0f) return accept_as(claim);  // unknown accepted
    return reject();                          // unknowns rejected
  });

  EvaluationSet s;
  s.attacker_probes = {probe_with_id(0, 2), probe_with_id(1, 2)};
  s.known_probes = {probe_with_id(2, 1)};
  s.unknown_probes = {probe_with_id(3, 0), probe_with_id(4, 0),
                      probe_with_id(5, 1)};

  const ScoreBundle b = evaluate(judge, s, MetricChoice::acc_all);
  CHECK(b.I_false == 1);
  CHECK(b.I_total == 2);
  CHECK(b.K_false == 0);
  CHECK(b.K_total == 1);
  CHECK(b.U_true == 1);
  CHECK(b.U_total == 3);
  CHECK(b.wrong == 2);
  CHECK(b.total == 6);
  CHECK(b.T_fp == doctest::Approx(0.5));
  CHECK(b.A_1 == doctest::Approx(3.0 / 4.0));

  CHECK(metric_value(b, MetricChoice::acc_all) == doctest::Approx(2.0 / 6.0));
  CHECK(metric_value(b, MetricChoice::acc_2x_ifalse) ==
        doctest::Approx(3.0 / 6.0));
  CHECK(metric_value(b, MetricChoice::acc_all_plus_i) ==
        doctest::Approx(2.0 / 6.0 + 0.5));
  CHECK(metric_value(b, MetricChoice::acc_combo) ==
        doctest::Approx(0.5 + 0.0 + 1.0 / 3.0));
}

TEST_CASE("known probes must match their own label to count as correct") {
  // A known probe accepted under the wrong class is still K_false.
  ScriptedJudge judge([](float, std::uint32_t) { return accept_as(99); });
  EvaluationSet s;
  s.attacker_probes = {probe_with_id(0, 1)};
  s.known_probes = {probe_with_id(1, 2)};
  s.unknown_probes = {probe_with_id(2, 3)};
  const ScoreBundle b = evaluate(judge, s, MetricChoice::acc_all);
  CHECK(b.K_false == 1);
  CHECK(b.I_false == 0);  // attacker accepted, claim irrelevant here
  CHECK(b.U_true == 1);
}

TEST_CASE("metric identities when the attacker is fully accepted") {
  ScriptedJudge judge([](float id, std::uint32_t claim) {
    return id < 2.0f ? accept_as(claim) : reject();
  });
  EvaluationSet s;
  s.attacker_probes = {probe_with_id(0, 1), probe_with_id(1, 1)};
  s.known_probes = {probe_with_id(0, 0), probe_with_id(1, 0)};
  s.unknown_probes = {probe_with_id(5, 0), probe_with_id(6, 0)};
  const ScoreBundle b = evaluate(judge, s, MetricChoice::acc_all);
  REQUIRE(b.I_false == 0);
  // With I_false = 0 the first three metrics collapse onto each other.
  CHECK(metric_value(b, MetricChoice::acc_2x_ifalse) ==
        metric_value(b, MetricChoice::acc_all));
  CHECK(metric_value(b, MetricChoice::acc_all_plus_i) ==
        metric_value(b, MetricChoice::acc_all));
  CHECK(b.T_fp == 1.0);
}

TEST_CASE("evaluate requires every partition") {
  ScriptedJudge judge([](float, std::uint32_t) { return reject(); });
  EvaluationSet s;
  s.attacker_probes = {probe_with_id(0, 0)};
  s.known_probes = {probe_with_id(1, 0)};
  CHECK_THROWS_AS(evaluate(judge, s, MetricChoice::acc_all), Error);
}

TEST_CASE("randomized evaluations agree with an independent tally") {
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    // Scripted accept/reject pattern keyed off the probe id parity bits.
    const std::uint64_t pattern = rng.next_u64();
    ScriptedJudge judge([pattern](float id, std::uint32_t claim) {
      const auto bit = static_cast<std::uint64_t>(id);
      if ((pattern >> (bit % 64)) & 1) {
        const bool wrong_class = ((pattern >> ((bit + 17) % 64)) & 1) != 0;
        return accept_as(wrong_class ? claim + 1 : claim);
      }
      return reject();
    });

    EvaluationSet s;
    float next_id = 0.0f;
    const auto fill = [&](std::vector<Probe>& probes) {
      const std::size_t n = 1 + rng.below(17);
      for (std::size_t i = 0; i < n; ++i)
        probes.push_back(probe_with_id(next_id++, static_cast<std::uint32_t>(
                                                      rng.below(5))));
    };
    fill(s.attacker_probes);
    fill(s.known_probes);
    fill(s.unknown_probes);

    const ScoreBundle b = evaluate(judge, s, MetricChoice::acc_combo);
    const NaiveTally t = recount(judge, s);
    CHECK(b.I_false == t.i_false);
    CHECK(b.K_false == t.k_false);
    CHECK(b.U_true == t.u_true);
    CHECK(b.I_total == s.attacker_probes.size());
    CHECK(b.K_total == s.known_probes.size());
    CHECK(b.U_total == s.unknown_probes.size());

    // Conservation and range invariants.
    CHECK(b.wrong == t.i_false + t.k_false + t.u_true);
    CHECK(b.total == b.I_total + b.K_total + b.U_total);
    CHECK(b.T_fp ==
          doctest::Approx(1.0 - static_cast<double>(t.i_false) /
                                    static_cast<double>(b.I_total)));
    const double correct_ku =
        static_cast<double>(b.K_total - b.K_false + b.U_total - b.U_true);
    CHECK(b.A_1 == doctest::Approx(correct_ku / static_cast<double>(
                                                    b.K_total + b.U_total)));
    CHECK(b.T_fp >= 0.0);
    CHECK(b.T_fp <= 1.0);
    CHECK(b.A_1 >= 0.0);
    CHECK(b.A_1 <= 1.0);

    // Formula cross-check for every metric.
    const double fi = static_cast<double>(t.i_false);
    const double tot = static_cast<double>(b.total);
    CHECK(metric_value(b, MetricChoice::acc_all) ==
          doctest::Approx(static_cast<double>(b.wrong) / tot));
    CHECK(metric_value(b, MetricChoice::acc_2x_ifalse) ==
          doctest::Approx((static_cast<double>(b.wrong) + fi) / tot));
    CHECK(metric_value(b, MetricChoice::acc_all_plus_i) ==
          doctest::Approx(static_cast<double>(b.wrong) / tot +
                          fi / static_cast<double>(b.I_total)));
    CHECK(metric_value(b, MetricChoice::acc_combo) ==
          doctest::Approx(fi / static_cast<double>(b.I_total) +
                          static_cast<double>(t.k_false) /
                              static_cast<double>(b.K_total) +
                          static_cast<double>(t.u_true) /
                              static_cast<double>(b.U_total)));

    // Dominance: doubling the attacker penalty can only raise the value.
    CHECK(metric_value(b, MetricChoice::acc_2x_ifalse) >=
          metric_value(b, MetricChoice::acc_all));
  }
}

TEST_CASE("objective_accept applies the one-sided budget") {
  ScoreBundle b;
  b.A_1 = 0.876;
  CHECK(objective_accept(b, 0.879, 0.005));  // drop 0.003 < 0.005
  b.A_1 = 0.870;
  CHECK_FALSE(objective_accept(b, 0.887, 0.015));  // drop 0.017 >= 0.015
  b.A_1 = 0.95;
  CHECK(objective_accept(b, 0.90, 0.001));  // improvement always passes
  b.A_1 = 0.885;
  CHECK_FALSE(objective_accept(b, 0.90, 0.015));  // drop == epsilon rejected
}

TEST_CASE("outcome classification thresholds") {
  ScoreBundle b;
  b.A_1 = 0.88;
  b.T_fp = 0.75;
  CHECK(classify_outcome(b, 0.88, 0.015) == Outcome::successful);
  b.T_fp = 0.20;
  CHECK(classify_outcome(b, 0.88, 0.015) == Outcome::plausible);
  b.T_fp = 0.40;  // boundary is inclusive
  CHECK(classify_outcome(b, 0.88, 0.015) == Outcome::successful);
  b.T_fp = 0.15;
  CHECK(classify_outcome(b, 0.88, 0.015) == Outcome::plausible);
  b.T_fp = 0.10;
  CHECK(classify_outcome(b, 0.88, 0.015) == Outcome::failed);
  // Budget violation fails regardless of T_fp.
  b.T_fp = 0.90;
  b.A_1 = 0.83;
  CHECK(classify_outcome(b, 0.88, 0.015) == Outcome::failed);

  CHECK(std::string(outcome_name(Outcome::failed)) == "failed");
  CHECK(std::string(outcome_name(Outcome::plausible)) == "plausible");
  CHECK(std::string(outcome_name(Outcome::successful)) == "successful");
}

TEST_CASE("csv serialization is stable and exact") {
  ScoreBundle b;
  b.I_false = 1;
  b.I_total = 2;
  b.K_false = 0;
  b.K_total = 1;
  b.U_true = 1;
  b.U_total = 3;
  b.wrong = 2;
  b.total = 6;
  b.T_fp = 0.5;
  b.A_1 = 0.75;
  b.metric_value = 1.0 / 3.0;

  const std::string header = score_csv_header();
  const std::string row = score_csv_row(b);
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(header.find("T_fp") != std::string::npos);
  CHECK(row.find("0.5") != std::string::npos);

  // %.17g output parses back to the identical double.
  const std::string third = format_double(1.0 / 3.0);
  CHECK(std::stod(third) == 1.0 / 3.0);
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(-0.0) == "-0");
}
