#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bdnet/rng.hpp"
#include "bdnet/scoring.hpp"

namespace bdnet {

// How the winning candidate of a round is chosen among those that pass the
// accuracy budget.
enum class SelectionMode : std::uint8_t {
  tfp_max = 0,     // highest attacker acceptance rate
  metric_min = 1,  // lowest configured metric value
};

SelectionMode selection_mode_from_string(const std::string& name);
const char* selection_mode_name(SelectionMode mode);

// Perturbation families. Only additive_uniform is exercised by the stock
// attack runs; the others are provided for experimentation. All three keep
// every changed weight within `bound` of its starting value.
enum class PerturbKind : std::uint8_t {
  additive_uniform = 0,    // w + d, d ~ U[-bound, bound] per index
  multiplicative = 1,      // w * f, f ~ U[-1, 1], delta clamped to bound
  uniform_constant = 2,    // one shared d ~ U[-bound, bound] for the subset
};

PerturbKind perturb_kind_from_string(const std::string& name);
const char* perturb_kind_name(PerturbKind kind);

struct SearchConfig {
  std::size_t layer_index = 0;
  double subset_fraction = 0.01;  // of the layer's weight count, in (0,1]
  std::uint32_t sets = 10;        // subset rounds
  std::uint32_t iter = 50;        // perturbation samples per round
  double epsilon = 0.005;         // accuracy budget
  MetricChoice metric = MetricChoice::acc_all;
  SelectionMode selection = SelectionMode::tfp_max;
  PerturbKind perturb = PerturbKind::additive_uniform;
  std::optional<double> A_0;      // baseline accuracy; measured when absent
  std::uint64_t master_seed = 1;
  std::uint32_t impostor = 0;
  std::optional<std::uint32_t> target;  // verification only
  std::uint32_t threads = 1;      // candidate evaluation fan-out; 0 = auto
  bool record_rounds = false;     // keep per-round weight snapshots (tests)
};

void validate_search_config(const SearchConfig& cfg);

struct TraceRow {
  std::uint32_t round = 0;
  std::uint32_t sample = 0;
  double T_fp = 0.0;
  double A_1 = 0.0;
  double metric_value = 0.0;
  bool accepted = false;  // passed the budget filter
  bool adopted = false;   // won its round and improved the carried best
};

std::string trace_csv_header();
std::string trace_csv_row(const TraceRow& row);

// Heavyweight per-round evidence, recorded only on request.
struct RoundRecord {
  std::vector<std::size_t> subset;
  bool adopted = false;
  std::uint32_t adopted_sample = 0;
  Tensor start_weights;
  Tensor end_weights;
};

struct WeightSearchResult {
  Tensor final_weights;
  ScoreBundle baseline_score;
  ScoreBundle final_score;
  Outcome outcome = Outcome::failed;
  std::vector<TraceRow> trace;
  std::string seed_scheme;  // RNG derivation scheme id, for reproduction
  double bound = 0.0;       // max |w| of the original weights
  double A_0 = 0.0;         // baseline accuracy the budget was checked against
  bool any_adopted = false;
  std::vector<std::string> warnings;
  std::vector<RoundRecord> rounds;
};

struct SearchResult {
  Network final_network;
  ScoreBundle baseline_score;
  ScoreBundle final_score;
  Outcome outcome = Outcome::failed;
  std::vector<TraceRow> trace;
  std::string seed_scheme;
  double bound = 0.0;
  double A_0 = 0.0;
  bool any_adopted = false;
  std::vector<std::string> warnings;
  std::vector<RoundRecord> rounds;
};

// Largest absolute value of the ORIGINAL layer weights; fixed once at
// search start and used as the perturbation bound for every round.
double max_abs_weight(const Tensor& layer_weights);

// max(1, round(fraction * weight_count)) distinct indices, uniformly
// sampled, returned sorted. The size is fixed for a whole search; the
// membership is resampled each round.
std::vector<std::size_t> sample_subset(std::size_t weight_count, double fraction,
                                       Rng& rng);

// Copy of `base` with the subset entries moved by at most `bound` each
// (see PerturbKind); all other entries are bit-identical to the input.
Tensor perturb_subset(const Tensor& base, const std::vector<std::size_t>& subset,
                      double bound, Rng& rng,
                      PerturbKind kind = PerturbKind::additive_uniform);

// Scores one candidate weight tensor for the configured layer. Must be pure
// and safe to call from several threads at once.
using CandidateEvaluator = std::function<ScoreBundle(const Tensor&)>;

// The greedy random search. Each round snapshots the current weights,
// samples one subset, generates cfg.iter independent perturbations of the
// snapshot, and evaluates them (possibly in parallel; the reduction is
// deterministic, ties break toward the lower sample index). Candidates that
// blow the accuracy budget are discarded; the best survivor is adopted only
// if it improves on the best value carried over from previous rounds.
// A run that never adopts a candidate is failed by definition.
WeightSearchResult search_weights(const Tensor& original_weights,
                                  const SearchConfig& cfg,
                                  const CandidateEvaluator& evaluate_candidate);

// Classification attack: perturbs net.layers[cfg.layer_index] and judges
// candidates with the closed-set classifier over eval_set.
SearchResult search_backdoor(const Network& net, const SearchConfig& cfg,
                             const EvaluationSet& eval_set);

// Verification attack: perturbs the feature net inside the system while the
// enrollments and threshold stay fixed.
SearchResult search_backdoor(const VerificationSystem& sys, const SearchConfig& cfg,
                             const EvaluationSet& eval_set);

}  // namespace bdnet
