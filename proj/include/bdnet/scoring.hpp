#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdnet/recognizer.hpp"

namespace bdnet {

// One labeled probe. The label's meaning depends on the partition: claimed
// target identity for attacker probes, true identity/class for known
// probes, claimed (enrolled) identity for unknown probes.
struct Probe {
  Tensor image;
  std::uint32_t label = 0;
};

// Attack evaluation set split into the three probe groups: the impostor's
// own images (should be accepted for the attack to work), enrolled/known
// inputs (must keep working), and unknown inputs (must stay rejected).
struct EvaluationSet {
  std::vector<Probe> attacker_probes;
  std::vector<Probe> known_probes;
  std::vector<Probe> unknown_probes;
};

// Candidate-ranking metrics; lower is better for all four.
enum class MetricChoice : std::uint8_t {
  acc_all = 0,         // wrong / total
  acc_2x_ifalse = 1,   // (wrong + I_false) / total
  acc_all_plus_i = 2,  // wrong / total + I_false / I_total
  acc_combo = 3,       // I_false/I_total + K_false/K_total + U_true/U_total
};

MetricChoice metric_choice_from_string(const std::string& name);
const char* metric_choice_name(MetricChoice metric);

struct ScoreBundle {
  std::uint64_t I_false = 0, I_total = 0;
  std::uint64_t K_false = 0, K_total = 0;
  std::uint64_t U_true = 0, U_total = 0;
  std::uint64_t wrong = 0, total = 0;
  double T_fp = 0.0;          // 1 - I_false / I_total
  double A_1 = 0.0;           // correct rate over known + unknown probes
  double metric_value = 0.0;  // value of the configured metric
};

// Uniform accept/reject interface over the two recognition settings, so the
// evaluator and the search are agnostic of which one is under attack.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual Decision judge(const Tensor& probe, std::uint32_t claim) const = 0;
};

class ClassifierJudge final : public Judge {
 public:
  explicit ClassifierJudge(const Network& net) : net_(net) {}
  Decision judge(const Tensor& probe, std::uint32_t claim) const override;

 private:
  const Network& net_;
};

class VerifierJudge final : public Judge {
 public:
  explicit VerifierJudge(const VerificationSystem& sys) : sys_(sys) {}
  Decision judge(const Tensor& probe, std::uint32_t claim) const override;

 private:
  const VerificationSystem& sys_;
};

// Runs every probe through the judge and tallies the counters:
// attacker rejected -> I_false; known probe not accepted as its own label
// -> K_false; unknown accepted -> U_true. Derived rates and the configured
// metric are filled in. Every partition must be non-empty.
ScoreBundle evaluate(const Judge& judge, const EvaluationSet& eval_set,
                     MetricChoice metric);

double metric_value(const ScoreBundle& b, MetricChoice metric);

// One-sided accuracy budget: true iff A_0 - b.A_1 < epsilon, so accuracy
// improvements always pass.
bool objective_accept(const ScoreBundle& b, double A_0, double epsilon);

enum class Outcome : std::uint8_t { failed = 0, plausible = 1, successful = 2 };

const char* outcome_name(Outcome outcome);

// successful: within budget and T_fp >= 0.40; plausible: within budget and
// T_fp >= 0.15; anything else failed.
Outcome classify_outcome(const ScoreBundle& b, double A_0, double epsilon);

// Fixed CSV column order used everywhere a bundle is serialized.
std::string score_csv_header();
std::string score_csv_row(const ScoreBundle& b);

// %.17g, enough digits to round-trip a double exactly.
std::string format_double(double v);

}  // namespace bdnet
