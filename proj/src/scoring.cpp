#include "bdnet/scoring.hpp"

#include <cstdio>

namespace bdnet {

MetricChoice metric_choice_from_string(const std::string& name) {
  if (name == "acc_all") return MetricChoice::acc_all;
  if (name == "acc_2x_ifalse") return MetricChoice::acc_2x_ifalse;
  if (name == "acc_all_plus_i") return MetricChoice::acc_all_plus_i;
  if (name == "acc_combo") return MetricChoice::acc_combo;
  fail(Status::config, "unknown metric '" + name +
                           "' (want acc_all, acc_2x_ifalse, acc_all_plus_i, "
                           "or acc_combo)");
}

const char* metric_choice_name(MetricChoice metric) {
  switch (metric) {
    case MetricChoice::acc_all: return "acc_all";
    case MetricChoice::acc_2x_ifalse: return "acc_2x_ifalse";
    case MetricChoice::acc_all_plus_i: return "acc_all_plus_i";
    case MetricChoice::acc_combo: return "acc_combo";
  }
  return "unknown";
}

Decision ClassifierJudge::judge(const Tensor& probe, std::uint32_t) const {
  return classify(net_, probe);
}

Decision VerifierJudge::judge(const Tensor& probe, std::uint32_t claim) const {
  return verify(sys_, probe, claim);
}

ScoreBundle evaluate(const Judge& judge, const EvaluationSet& eval_set,
                     MetricChoice metric) {
  if (eval_set.attacker_probes.empty() || eval_set.known_probes.empty() ||
      eval_set.unknown_probes.empty())
    fail(Status::evaluation,
         "evaluation set must have attacker, known, and unknown probes");

  ScoreBundle b;
  b.I_total = eval_set.attacker_probes.size();
  b.K_total = eval_set.known_probes.size();
  b.U_total = eval_set.unknown_probes.size();

  for (const Probe& p : eval_set.attacker_probes) {
    const Decision d = judge.judge(p.image, p.label);
    if (!d.accepted) ++b.I_false;
  }
  for (const Probe& p : eval_set.known_probes) {
    const Decision d = judge.judge(p.image, p.label);
    const bool correct = d.accepted && d.matched_class &&
                         *d.matched_class == p.label;
    if (!correct) ++b.K_false;
  }
  for (const Probe& p : eval_set.unknown_probes) {
    const Decision d = judge.judge(p.image, p.label);
    if (d.accepted) ++b.U_true;
  }

  b.wrong = b.I_false + b.K_false + b.U_true;
  b.total = b.I_total + b.K_total + b.U_total;
  b.T_fp = 1.0 - static_cast<double>(b.I_false) / static_cast<double>(b.I_total);
  b.A_1 = static_cast<double>((b.K_total - b.K_false) + (b.U_total - b.U_true)) /
          static_cast<double>(b.K_total + b.U_total);
  b.metric_value = metric_value(b, metric);
  return b;
}

double metric_value(const ScoreBundle& b, MetricChoice metric) {
  const auto ratio = [](std::uint64_t num, std::uint64_t den, const char* what) {
    if (den == 0) fail(Status::evaluation, std::string("metric undefined: ") + what +
                                               " count is zero");
    return static_cast<double>(num) / static_cast<double>(den);
  };
  switch (metric) {
    case MetricChoice::acc_all:
      return ratio(b.wrong, b.total, "total");
    case MetricChoice::acc_2x_ifalse:
      return ratio(b.wrong + b.I_false, b.total, "total");
    case MetricChoice::acc_all_plus_i:
      return ratio(b.wrong, b.total, "total") +
             ratio(b.I_false, b.I_total, "attacker");
    case MetricChoice::acc_combo:
      return ratio(b.I_false, b.I_total, "attacker") +
             ratio(b.K_false, b.K_total, "known") +
             ratio(b.U_true, b.U_total, "unknown");
  }
  fail(Status::invalid_argument, "unknown metric");
}

bool objective_accept(const ScoreBundle& b, double A_0, double epsilon) {
  if (A_0 < 0.0 || A_0 > 1.0)
    fail(Status::invalid_argument, "baseline accuracy must be in [0,1]");
  if (epsilon <= 0.0)
    fail(Status::invalid_argument, "accuracy budget must be positive");
  return A_0 - b.A_1 < epsilon;
}

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::failed: return "failed";
    case Outcome::plausible: return "plausible";
    case Outcome::successful: return "successful";
  }
  return "unknown";
}

Outcome classify_outcome(const ScoreBundle& b, double A_0, double epsilon) {
  if (!objective_accept(b, A_0, epsilon)) return Outcome::failed;
  if (b.T_fp >= 0.40) return Outcome::successful;
  if (b.T_fp >= 0.15) return Outcome::plausible;
  return Outcome::failed;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string score_csv_header() {
  return "I_false,I_total,K_false,K_total,U_true,U_total,wrong,total,T_fp,A_1,"
         "metric_value";
}

std::string score_csv_row(const ScoreBundle& b) {
  std::string row;
  row += std::to_string(b.I_false) + ',' + std::to_string(b.I_total) + ',';
  row += std::to_string(b.K_false) + ',' + std::to_string(b.K_total) + ',';
  row += std::to_string(b.U_true) + ',' + std::to_string(b.U_total) + ',';
  row += std::to_string(b.wrong) + ',' + std::to_string(b.total) + ',';
  row += format_double(b.T_fp) + ',' + format_double(b.A_1) + ',';
  row += format_double(b.metric_value);
  return row;
}

}  // namespace bdnet
