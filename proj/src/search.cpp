#include "bdnet/search.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

namespace bdnet {

namespace {

// Seed-domain tags separating the subset stream from the perturbation
// streams. Part of the recorded "splitmix64-v1" derivation scheme.
constexpr std::uint64_t kSubsetSeedTag = 0x5B5E7;
constexpr std::uint64_t kPerturbSeedTag = 0x9E27B;

}  // namespace

SelectionMode selection_mode_from_string(const std::string& name) {
  if (name == "tfp_max") return SelectionMode::tfp_max;
  if (name == "metric_min") return SelectionMode::metric_min;
  fail(Status::config, "unknown selection mode '" + name +
                           "' (want tfp_max or metric_min)");
}

const char* selection_mode_name(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::tfp_max: return "tfp_max";
    case SelectionMode::metric_min: return "metric_min";
  }
  return "unknown";
}

PerturbKind perturb_kind_from_string(const std::string& name) {
  if (name == "additive") return PerturbKind::additive_uniform;
  if (name == "multiplicative") return PerturbKind::multiplicative;
  if (name == "uniform_constant") return PerturbKind::uniform_constant;
  fail(Status::config, "unknown perturbation kind '" + name +
                           "' (want additive, multiplicative, or uniform_constant)");
}

const char* perturb_kind_name(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::additive_uniform: return "additive";
    case PerturbKind::multiplicative: return "multiplicative";
    case PerturbKind::uniform_constant: return "uniform_constant";
  }
  return "unknown";
}

void validate_search_config(const SearchConfig& cfg) {
  if (!(cfg.subset_fraction > 0.0) || cfg.subset_fraction > 1.0)
    fail(Status::config, "subset_fraction must be in (0,1]");
  if (cfg.iter < 1) fail(Status::config, "iter must be at least 1");
  if (!(cfg.epsilon > 0.0)) fail(Status::config, "epsilon must be positive");
  if (cfg.A_0 && (*cfg.A_0 < 0.0 || *cfg.A_0 > 1.0))
    fail(Status::config, "baseline accuracy must be in [0,1]");
}

std::string trace_csv_header() {
  return "round,sample,T_fp,A_1,metric_value,accepted,adopted";
}

std::string trace_csv_row(const TraceRow& row) {
  std::string out;
  out += std::to_string(row.round) + ',' + std::to_string(row.sample) + ',';
  out += format_double(row.T_fp) + ',' + format_double(row.A_1) + ',';
  out += format_double(row.metric_value) + ',';
  out += (row.accepted ? "1" : "0");
  out += ',';
  out += (row.adopted ? "1" : "0");
  return out;
}

double max_abs_weight(const Tensor& layer_weights) {
  if (layer_weights.empty())
    fail(Status::config, "layer has no weights to bound");
  double m = 0.0;
  for (float v : layer_weights.data) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

std::vector<std::size_t> sample_subset(std::size_t weight_count, double fraction,
                                       Rng& rng) {
  if (weight_count == 0) fail(Status::config, "cannot sample from zero weights");
  if (!(fraction > 0.0) || fraction > 1.0)
    fail(Status::config, "subset_fraction must be in (0,1]");
  const auto rounded = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(weight_count)));
  const std::size_t size = std::min(weight_count, std::max<std::size_t>(1, rounded));

  if (size == weight_count) {
    std::vector<std::size_t> all(weight_count);
    for (std::size_t i = 0; i < weight_count; ++i) all[i] = i;
    return all;
  }
  // Floyd's sampling: exactly `size` draws, uniform over subsets.
  std::set<std::size_t> picked;
  for (std::size_t j = weight_count - size; j < weight_count; ++j) {
    const std::size_t t = rng.below(j + 1);
    if (!picked.insert(t).second) picked.insert(j);
  }
  return {picked.begin(), picked.end()};
}

namespace {

// Largest float no farther than `bound` from base, moving from w toward
// base; one or two steps at most, since float rounding is under an ulp.
float clamp_to_bound(float w, float base, double bound) {
  const double b = base;
  while (std::abs(static_cast<double>(w) - b) > bound && w != base)
    w = std::nextafterf(w, base);
  return w;
}

}  // namespace

Tensor perturb_subset(const Tensor& base, const std::vector<std::size_t>& subset,
                      double bound, Rng& rng, PerturbKind kind) {
  if (bound < 0.0) fail(Status::config, "perturbation bound must be non-negative");
  Tensor out = base;
  if (subset.empty() || bound == 0.0) return out;

  double shared = 0.0;
  if (kind == PerturbKind::uniform_constant) shared = rng.uniform(-bound, bound);

  for (std::size_t idx : subset) {
    if (idx >= base.numel())
      fail(Status::invalid_argument, "subset index " + std::to_string(idx) +
                                         " outside the weight tensor");
    const double b = out.data[idx];
    double v = 0.0;
    switch (kind) {
      case PerturbKind::additive_uniform:
        v = b + rng.uniform(-bound, bound);
        break;
      case PerturbKind::multiplicative:
        v = b * rng.uniform(-1.0, 1.0);
        v = std::clamp(v, b - bound, b + bound);
        break;
      case PerturbKind::uniform_constant:
        v = b + shared;
        break;
    }
    out.data[idx] = clamp_to_bound(static_cast<float>(v), out.data[idx], bound);
  }
  return out;
}

WeightSearchResult search_weights(const Tensor& original_weights,
                                  const SearchConfig& cfg,
                                  const CandidateEvaluator& evaluate_candidate) {
  validate_search_config(cfg);
  if (original_weights.empty())
    fail(Status::config, "configured layer has no weights");

  WeightSearchResult result;
  result.seed_scheme = kSeedScheme;
  result.bound = max_abs_weight(original_weights);
  if (result.bound == 0.0)
    result.warnings.push_back(
        "all original weights are zero; the perturbation bound degenerates "
        "to zero and the search cannot move");

  result.baseline_score = evaluate_candidate(original_weights);
  result.A_0 = cfg.A_0 ? *cfg.A_0 : result.baseline_score.A_1;

  Tensor current = original_weights;
  ScoreBundle final_score = result.baseline_score;
  // Carried-forward best selection value, seeded from the baseline so only
  // genuine improvements are ever adopted.
  double best_value = cfg.selection == SelectionMode::tfp_max
                          ? result.baseline_score.T_fp
                          : result.baseline_score.metric_value;

  struct Scored {
    ScoreBundle score;
    bool accepted = false;
  };

  for (std::uint32_t round = 0; round < cfg.sets; ++round) {
    Rng subset_rng(seed_mix({cfg.master_seed, kSubsetSeedTag, round}));
    const std::vector<std::size_t> subset =
        sample_subset(current.numel(), cfg.subset_fraction, subset_rng);
    const Tensor snapshot = current;

    std::vector<Scored> scored(cfg.iter);
    const auto eval_range = [&](std::uint32_t lo, std::uint32_t hi) {
      for (std::uint32_t s = lo; s < hi; ++s) {
        Rng rng(seed_mix({cfg.master_seed, kPerturbSeedTag, round, s}));
        const Tensor candidate =
            perturb_subset(snapshot, subset, result.bound, rng, cfg.perturb);
        scored[s].score = evaluate_candidate(candidate);
        scored[s].accepted =
            objective_accept(scored[s].score, result.A_0, cfg.epsilon);
      }
    };

    std::uint32_t n_threads =
        cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                         : cfg.threads;
    n_threads = std::min(n_threads, cfg.iter);
    if (n_threads <= 1) {
      eval_range(0, cfg.iter);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(n_threads);
      const std::uint32_t chunk = (cfg.iter + n_threads - 1) / n_threads;
      for (std::uint32_t t = 0; t < n_threads; ++t) {
        const std::uint32_t lo = t * chunk;
        const std::uint32_t hi = std::min(cfg.iter, lo + chunk);
        pool.emplace_back([&, t, lo, hi] {
          try {
            eval_range(lo, hi);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    }

    // Deterministic reduction: strict inequality keeps the lowest sample
    // index on ties, so threading cannot change the winner.
    std::int64_t winner = -1;
    for (std::uint32_t s = 0; s < cfg.iter; ++s) {
      if (!scored[s].accepted) continue;
      if (winner < 0) {
        winner = s;
        continue;
      }
      const ScoreBundle& a = scored[s].score;
      const ScoreBundle& b = scored[winner].score;
      const bool better = cfg.selection == SelectionMode::tfp_max
                              ? a.T_fp > b.T_fp
                              : a.metric_value < b.metric_value;
      if (better) winner = s;
    }

    bool adopt = false;
    if (winner >= 0) {
      const ScoreBundle& w = scored[winner].score;
      adopt = cfg.selection == SelectionMode::tfp_max
                  ? w.T_fp > best_value
                  : w.metric_value < best_value;
    }
    if (adopt) {
      Rng rng(seed_mix({cfg.master_seed, kPerturbSeedTag, round,
                        static_cast<std::uint64_t>(winner)}));
      current = perturb_subset(snapshot, subset, result.bound, rng, cfg.perturb);
      final_score = scored[winner].score;
      best_value = cfg.selection == SelectionMode::tfp_max
                       ? final_score.T_fp
                       : final_score.metric_value;
      result.any_adopted = true;
    }

    for (std::uint32_t s = 0; s < cfg.iter; ++s) {
      TraceRow row;
      row.round = round;
      row.sample = s;
      row.T_fp = scored[s].score.T_fp;
      row.A_1 = scored[s].score.A_1;
      row.metric_value = scored[s].score.metric_value;
      row.accepted = scored[s].accepted;
      row.adopted = adopt && static_cast<std::int64_t>(s) == winner;
      result.trace.push_back(row);
    }
    if (cfg.record_rounds) {
      RoundRecord rec;
      rec.subset = subset;
      rec.adopted = adopt;
      rec.adopted_sample = adopt ? static_cast<std::uint32_t>(winner) : 0;
      rec.start_weights = snapshot;
      rec.end_weights = current;
      result.rounds.push_back(std::move(rec));
    }
  }

  result.final_weights = std::move(current);
  result.final_score = final_score;
  result.outcome = result.any_adopted
                       ? classify_outcome(final_score, result.A_0, cfg.epsilon)
                       : Outcome::failed;
  return result;
}

namespace {

SearchResult wrap_weight_result(WeightSearchResult&& w, Network&& final_net) {
  SearchResult r;
  r.final_network = std::move(final_net);
  r.baseline_score = w.baseline_score;
  r.final_score = w.final_score;
  r.outcome = w.outcome;
  r.trace = std::move(w.trace);
  r.seed_scheme = std::move(w.seed_scheme);
  r.bound = w.bound;
  r.A_0 = w.A_0;
  r.any_adopted = w.any_adopted;
  r.warnings = std::move(w.warnings);
  r.rounds = std::move(w.rounds);
  return r;
}

const Tensor& checked_layer_weights(const Network& net, std::size_t layer_index) {
  if (layer_index >= net.layers.size())
    fail(Status::config, "layer index " + std::to_string(layer_index) +
                             " outside the network (" +
                             std::to_string(net.layers.size()) + " layers)");
  const Layer& l = net.layers[layer_index];
  if (!layer_kind_has_weights(l.kind) || l.weights.empty())
    fail(Status::config, "layer " + std::to_string(layer_index) + " (" +
                             layer_kind_name(l.kind) + ") carries no weights");
  return l.weights;
}

}  // namespace

SearchResult search_backdoor(const Network& net, const SearchConfig& cfg,
                             const EvaluationSet& eval_set) {
  if (net.mode != NetworkMode::classifier)
    fail(Status::config, "classification attack requires a classifier network");
  validate_network(net);
  const Tensor& original = checked_layer_weights(net, cfg.layer_index);

  const CandidateEvaluator evaluator = [&](const Tensor& weights) {
    Network candidate = net;
    candidate.layers[cfg.layer_index].weights = weights;
    return evaluate(ClassifierJudge(candidate), eval_set, cfg.metric);
  };
  WeightSearchResult w = search_weights(original, cfg, evaluator);

  Network final_net = net;
  final_net.layers[cfg.layer_index].weights = w.final_weights;
  return wrap_weight_result(std::move(w), std::move(final_net));
}

SearchResult search_backdoor(const VerificationSystem& sys, const SearchConfig& cfg,
                             const EvaluationSet& eval_set) {
  validate_network(sys.net);
  const Tensor& original = checked_layer_weights(sys.net, cfg.layer_index);

  const CandidateEvaluator evaluator = [&](const Tensor& weights) {
    VerificationSystem candidate;
    candidate.net = sys.net;
    candidate.net.layers[cfg.layer_index].weights = weights;
    candidate.enrollments = sys.enrollments;
    candidate.threshold = sys.threshold;
    return evaluate(VerifierJudge(candidate), eval_set, cfg.metric);
  };
  WeightSearchResult w = search_weights(original, cfg, evaluator);

  Network final_net = sys.net;
  final_net.layers[cfg.layer_index].weights = w.final_weights;
  return wrap_weight_result(std::move(w), std::move(final_net));
}

}  // namespace bdnet
