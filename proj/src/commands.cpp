#include "bdnet/commands.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "bdnet/dataset.hpp"
#include "bdnet/digits.hpp"
#include "bdnet/model_io.hpp"
#include "bdnet/trainer.hpp"

namespace bdnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Status::io, "cannot open " + path + " for writing");
  out << content;
  if (!out) fail(Status::io, "write failed for " + path);
}

// Pulls typed values out of a KeyValues map, tracking which keys were read
// so leftovers (typos) can be rejected.
class Params {
 public:
  Params(const KeyValues& kv, std::string command)
      : kv_(kv), command_(std::move(command)) {}

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second;
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v || v->empty())
      fail(Status::config, command_ + ": missing required key '" + key + "'");
    return *v;
  }

  std::string get_or(const std::string& key, const std::string& fallback) {
    auto v = get(key);
    return v ? *v : fallback;
  }

  double get_f64(const std::string& key, double fallback) {
    auto v = get(key);
    return v ? parse_f64(key, *v) : fallback;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    auto v = get(key);
    return v ? parse_u64(key, *v) : fallback;
  }

  std::uint32_t get_u32(const std::string& key, std::uint32_t fallback) {
    const std::uint64_t v = get_u64(key, fallback);
    if (v > 0xFFFFFFFFull)
      fail(Status::config, command_ + ": key '" + key + "' out of range");
    return static_cast<std::uint32_t>(v);
  }

  std::optional<std::uint32_t> get_u32_opt(const std::string& key) {
    auto v = get(key);
    if (!v) return std::nullopt;
    return static_cast<std::uint32_t>(parse_u64(key, *v));
  }

  std::optional<double> get_f64_opt(const std::string& key) {
    auto v = get(key);
    if (!v) return std::nullopt;
    return parse_f64(key, *v);
  }

  void finish() {
    for (const auto& [key, value] : kv_) {
      if (!used_.count(key))
        fail(Status::config, command_ + ": unknown key '" + key + "'");
    }
  }

 private:
  double parse_f64(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
      fail(Status::config,
           command_ + ": key '" + key + "' is not a number: '" + text + "'");
    return v;
  }

  std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || text.find('-') != std::string::npos)
      fail(Status::config, command_ + ": key '" + key +
                               "' is not a non-negative integer: '" + text + "'");
    return v;
  }

  const KeyValues& kv_;
  std::set<std::string> used_;
  std::string command_;
};

constexpr char kPairCsvHeader[] =
    "impostor,target,T_fp_before,T_fp_after,A_1_before,A_1_after,outcome";

}  // namespace

KeyValues parse_key_values_text(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Status::config, origin + ":" + std::to_string(line_no) +
                               ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      fail(Status::config,
           origin + ":" + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second)
      fail(Status::config, origin + ":" + std::to_string(line_no) +
                               ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::io, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values_text(buf.str(), path);
}

GenDigitsResult cmd_gen_digits(const KeyValues& kv) {
  Params p(kv, "gen-digits");
  const std::string out = p.require("out");
  const std::uint32_t count = p.get_u32("count_per_digit", 400);
  const std::uint64_t seed = p.get_u64("seed", 1);
  DigitStyle style;
  style.canvas = p.get_u32("canvas", style.canvas);
  style.scale = p.get_u32("scale", style.scale);
  style.min_intensity = p.get_f64("min_intensity", style.min_intensity);
  style.max_intensity = p.get_f64("max_intensity", style.max_intensity);
  style.dropout = p.get_f64("dropout", style.dropout);
  style.noise_sigma = p.get_f64("noise_sigma", style.noise_sigma);
  style.jitter_x = p.get_u32("jitter_x", style.jitter_x);
  style.jitter_y = p.get_u32("jitter_y", style.jitter_y);
  p.finish();

  const Dataset ds = generate_digits(count, style, seed);
  save_dataset(ds, out);
  return {out, static_cast<std::uint32_t>(ds.size())};
}

namespace {

// First n images per raw label, in file order.
std::map<std::uint32_t, std::vector<std::size_t>> bucket_by_label(const Dataset& ds) {
  std::map<std::uint32_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < ds.size(); ++i) buckets[ds.labels[i]].push_back(i);
  return buckets;
}

}  // namespace

TrainFixtureResult cmd_train_fixture(const KeyValues& kv) {
  Params p(kv, "train-fixture");
  const std::string dataset_path = p.require("dataset");
  const std::string model_out = p.require("model_out");
  TrainConfig cfg;
  cfg.epochs = p.get_u32("epochs", cfg.epochs);
  cfg.lr = p.get_f64("lr", cfg.lr);
  cfg.momentum = p.get_f64("momentum", cfg.momentum);
  cfg.seed = p.get_u64("seed", cfg.seed);
  const double holdout_fraction = p.get_f64("holdout_fraction", 0.2);
  p.finish();
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
    fail(Status::config, "holdout_fraction must be in [0,1)");

  const Dataset raw = load_dataset(dataset_path);
  check_labels_in_range(raw, 10);

  // Per-digit split, head for training; digits 5..9 collapse to class 5.
  // The reject class would otherwise own half the training set (five digits
  // feed it), which lets the optimizer stall on an always-reject solution, so
  // its training share is subsampled round-robin down to one digit's worth.
  // The holdout keeps the natural mixture.
  Dataset train, holdout;
  std::size_t known_head_total = 0;
  std::array<std::vector<std::size_t>, 5> other_heads;
  for (const auto& [label, indices] : bucket_by_label(raw)) {
    const auto n = indices.size();
    std::size_t n_hold = holdout_fraction == 0.0
                             ? 0
                             : std::max<std::size_t>(
                                   1, static_cast<std::size_t>(std::llround(
                                          holdout_fraction * static_cast<double>(n))));
    if (n_hold >= n)
      fail(Status::config, "digit " + std::to_string(label) +
                               " has too few images (" + std::to_string(n) +
                               ") for the holdout split");
    const std::uint32_t cls = std::min<std::uint32_t>(label, 5);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n - n_hold) {
        if (label < 5) {
          train.images.push_back(raw.images[indices[i]]);
          train.labels.push_back(cls);
          ++known_head_total;
        } else {
          other_heads[label - 5].push_back(indices[i]);
        }
      } else {
        holdout.images.push_back(raw.images[indices[i]]);
        holdout.labels.push_back(cls);
      }
    }
  }
  const std::size_t other_target =
      std::max<std::size_t>(1, known_head_total / 5);
  std::size_t other_taken = 0;
  for (std::size_t pos = 0; other_taken < other_target; ++pos) {
    bool any = false;
    for (const auto& head : other_heads) {
      if (pos >= head.size()) continue;
      any = true;
      train.images.push_back(raw.images[head[pos]]);
      train.labels.push_back(5);
      if (++other_taken == other_target) break;
    }
    if (!any) break;
  }

  const Network net = train_fixture(make_fixture_arch(6), train, cfg);
  const double acc = holdout.empty() ? 0.0 : classifier_accuracy(net, holdout);
  save_model(net, model_out);

  TrainFixtureResult r;
  r.model_path = model_out;
  r.holdout_accuracy = acc;
  r.digest = hash_model(model_out).hex();
  r.train_count = static_cast<std::uint32_t>(train.size());
  r.holdout_count = static_cast<std::uint32_t>(holdout.size());
  return r;
}

EnrollResult cmd_enroll(const KeyValues& kv) {
  Params p(kv, "enroll");
  const std::string model_path = p.require("model");
  const std::string gallery_path = p.require("gallery");
  const std::string calibration_path = p.require("calibration");
  const std::string store_out = p.require("store_out");
  const std::uint32_t per_identity = p.get_u32("gallery_per_identity", 100);
  p.finish();

  const Network classifier = load_model(model_path);
  const Network features = truncate_to_feature_extractor(classifier);

  const Dataset gallery_ds = load_dataset(gallery_path);
  std::map<std::uint32_t, std::vector<Tensor>> gallery;
  for (const auto& [label, indices] : bucket_by_label(gallery_ds)) {
    if (label > 4) continue;  // only digits 0..4 are enrolled identities
    auto& imgs = gallery[label];
    for (std::size_t i = 0; i < indices.size() && i < per_identity; ++i)
      imgs.push_back(gallery_ds.images[indices[i]]);
  }
  for (std::uint32_t id = 0; id < 5; ++id)
    if (!gallery.count(id))
      fail(Status::invalid_argument,
           "gallery has no images for identity " + std::to_string(id));

  const auto enrollments = enroll(features, gallery);

  const Dataset cal = load_dataset(calibration_path);
  std::vector<double> genuine, impostor;
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const std::uint32_t label = cal.labels[i];
    if (label > 4) continue;
    const Tensor f = forward(features, cal.images[i]);
    for (const auto& [id, e] : enrollments) {
      const double sim = cosine_similarity(f, e.centroid);
      (id == label ? genuine : impostor).push_back(sim);
    }
  }
  if (genuine.empty())
    fail(Status::invalid_argument,
         "calibration set has no images of the enrolled identities");
  const double threshold = calibrate_threshold(genuine, impostor);
  std::size_t hits = 0;
  for (double g : genuine) hits += g >= threshold ? 1 : 0;
  for (double m : impostor) hits += m < threshold ? 1 : 0;

  VerificationStore store;
  store.threshold = threshold;
  for (const auto& [id, e] : enrollments) store.enrollments.push_back(e);
  save_verification_store(store, store_out);

  EnrollResult r;
  r.store_path = store_out;
  r.threshold = threshold;
  r.calibration_accuracy = static_cast<double>(hits) /
                           static_cast<double>(genuine.size() + impostor.size());
  r.identities = static_cast<std::uint32_t>(store.enrollments.size());
  return r;
}

EvaluationSet build_eval_set(const Dataset& raw, bool verification,
                             std::uint32_t impostor,
                             std::optional<std::uint32_t> target,
                             std::uint32_t attacker_count,
                             std::uint32_t known_per_identity,
                             std::uint32_t unknown_per_identity) {
  if (impostor < 5 || impostor > 9)
    fail(Status::config, "impostor must be a reject-class digit (5..9), got " +
                             std::to_string(impostor));
  if (verification) {
    if (!target) fail(Status::config, "verification attack needs a target identity");
    if (*target > 4)
      fail(Status::config, "target must be an enrolled identity (0..4), got " +
                               std::to_string(*target));
  } else if (target) {
    fail(Status::config, "classification attack must not name a target identity");
  }
  if (attacker_count == 0 || known_per_identity == 0 || unknown_per_identity == 0)
    fail(Status::config, "all probe group sizes must be positive");
  check_labels_in_range(raw, 10);

  EvaluationSet set;
  std::map<std::uint32_t, std::uint32_t> taken;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::uint32_t label = raw.labels[i];
    std::uint32_t& used = taken[label];
    if (label == impostor) {
      if (used >= attacker_count) continue;
      ++used;
      set.attacker_probes.push_back({raw.images[i], verification ? *target : 0});
    } else if (label <= 4) {
      if (used >= known_per_identity) continue;
      ++used;
      set.known_probes.push_back({raw.images[i], label});
    } else {
      if (used >= unknown_per_identity) continue;
      ++used;
      set.unknown_probes.push_back({raw.images[i], verification ? label % 5 : label});
    }
  }

  const auto shortage = [&](const std::string& what, std::uint32_t digit,
                            std::uint32_t want, std::uint32_t got) {
    if (got < want)
      fail(Status::invalid_argument,
           "evaluation set needs " + std::to_string(want) + " " + what +
               " probes of digit " + std::to_string(digit) + ", dataset has " +
               std::to_string(got));
  };
  shortage("attacker", impostor, attacker_count, taken[impostor]);
  for (std::uint32_t d = 0; d <= 4; ++d)
    shortage("known", d, known_per_identity, taken[d]);
  for (std::uint32_t d = 5; d <= 9; ++d)
    if (d != impostor) shortage("unknown", d, unknown_per_identity, taken[d]);
  return set;
}

AttackArtifacts cmd_attack(const KeyValues& kv) {
  Params p(kv, "attack");
  const std::string scenario = p.require("scenario");
  const bool verification = scenario == "verification";
  if (!verification && scenario != "classification")
    fail(Status::config,
         "scenario must be 'classification' or 'verification', got '" + scenario + "'");
  const std::string model_path = p.require("model");
  const std::string eval_path = p.require("eval");
  const std::string out_dir = p.require("out_dir");
  const std::optional<std::uint32_t> impostor_opt = p.get_u32_opt("impostor");
  if (!impostor_opt) fail(Status::config, "attack: missing required key 'impostor'");
  const std::uint32_t impostor = *impostor_opt;
  const std::optional<std::uint32_t> target = p.get_u32_opt("target");
  const std::string store_path = verification ? p.require("store") : p.get_or("store", "");
  if (!verification && !store_path.empty())
    fail(Status::config, "classification attack does not take a verification store");

  SearchConfig cfg;
  cfg.layer_index = p.get_u32("layer_index", 0);
  cfg.subset_fraction = p.get_f64("subset_fraction", 0.01);
  cfg.sets = p.get_u32("sets", 25);
  cfg.iter = p.get_u32("iter", 40);
  cfg.epsilon = p.get_f64("epsilon", 0.005);
  cfg.metric = metric_choice_from_string(p.get_or("metric", "acc_all"));
  cfg.selection = selection_mode_from_string(p.get_or("selection", "tfp_max"));
  cfg.perturb = perturb_kind_from_string(p.get_or("perturb", "additive"));
  cfg.A_0 = p.get_f64_opt("a0");
  cfg.master_seed = p.get_u64("master_seed", 1);
  cfg.impostor = impostor;
  cfg.target = target;
  cfg.threads = p.get_u32("threads", 1);
  const std::uint32_t probes_attacker = p.get_u32("probes_attacker", 200);
  const std::uint32_t probes_known = p.get_u32("probes_known_per_identity", 80);
  const std::uint32_t probes_unknown = p.get_u32("probes_unknown_per_identity", 100);
  p.finish();
  validate_search_config(cfg);

  const Network classifier = load_model(model_path);
  const Dataset eval_raw = load_dataset(eval_path);
  const EvaluationSet eval_set =
      build_eval_set(eval_raw, verification, impostor, target, probes_attacker,
                     probes_known, probes_unknown);

  SearchResult result;
  if (verification) {
    const Network features = truncate_to_feature_extractor(classifier);
    if (cfg.layer_index >= features.layers.size())
      fail(Status::config,
           "layer_index must fall inside the feature extractor prefix");
    const VerificationSystem sys = assemble_verification_system(
        features, load_verification_store(store_path));
    result = search_backdoor(sys, cfg, eval_set);
  } else {
    result = search_backdoor(classifier, cfg, eval_set);
  }

  // The saved artifact is always the full classifier with the perturbed
  // layer transplanted, even when the search ran on the truncated feature
  // net. A run that never adopted a candidate re-encodes to the original
  // bytes exactly.
  Network backdoored = classifier;
  backdoored.layers[cfg.layer_index].weights =
      result.final_network.layers[cfg.layer_index].weights;

  std::filesystem::create_directories(out_dir);
  const std::string model_out = out_dir + "/backdoored.bdnw";
  const std::string trace_path = out_dir + "/trace.csv";
  const std::string pair_path = out_dir + "/pair.csv";
  const std::string summary_path = out_dir + "/summary.json";

  save_model(backdoored, model_out);

  std::string trace_text = trace_csv_header();
  trace_text += '\n';
  for (const TraceRow& row : result.trace) {
    trace_text += trace_csv_row(row);
    trace_text += '\n';
  }
  write_text(trace_path, trace_text);

  AttackArtifacts art;
  art.outcome = result.outcome;
  art.A_0 = result.A_0;
  art.tfp_before = result.baseline_score.T_fp;
  art.tfp_after = result.final_score.T_fp;
  art.a1_before = result.baseline_score.A_1;
  art.a1_after = result.final_score.A_1;
  art.digest_before = hash_model(model_path).hex();
  art.digest_after = hash_model(model_out).hex();
  art.model_out = model_out;
  art.trace_csv = trace_path;
  art.pair_csv = pair_path;
  art.summary_json = summary_path;
  art.warnings = result.warnings;

  if (art.outcome != Outcome::failed && art.digest_before == art.digest_after)
    fail(Status::numeric,
         "internal invariant violated: outcome is not failed but the model "
         "digest did not change");

  std::string pair_text = kPairCsvHeader;
  pair_text += '\n';
  pair_text += std::to_string(impostor) + ',';
  pair_text += (target ? std::to_string(*target) : std::string());
  pair_text += ',';
  pair_text += format_double(art.tfp_before) + ',' + format_double(art.tfp_after) + ',';
  pair_text += format_double(art.a1_before) + ',' + format_double(art.a1_after) + ',';
  pair_text += outcome_name(art.outcome);
  pair_text += '\n';
  write_text(pair_path, pair_text);

  nlohmann::ordered_json summary;
  summary["scenario"] = scenario;
  summary["impostor"] = impostor;
  if (target)
    summary["target"] = *target;
  else
    summary["target"] = nullptr;
  summary["outcome"] = outcome_name(art.outcome);
  summary["A_0"] = art.A_0;
  summary["T_fp_before"] = art.tfp_before;
  summary["T_fp_after"] = art.tfp_after;
  summary["A_1_before"] = art.a1_before;
  summary["A_1_after"] = art.a1_after;
  summary["epsilon"] = cfg.epsilon;
  summary["layer_index"] = cfg.layer_index;
  summary["subset_fraction"] = cfg.subset_fraction;
  summary["sets"] = cfg.sets;
  summary["iter"] = cfg.iter;
  summary["metric"] = metric_choice_name(cfg.metric);
  summary["selection"] = selection_mode_name(cfg.selection);
  summary["perturb"] = perturb_kind_name(cfg.perturb);
  summary["master_seed"] = cfg.master_seed;
  summary["seed_scheme"] = result.seed_scheme;
  summary["perturbation_bound"] = result.bound;
  summary["digest_before"] = art.digest_before;
  summary["digest_after"] = art.digest_after;
  summary["model_out"] = model_out;
  summary["trace_csv"] = trace_path;
  summary["pair_csv"] = pair_path;
  summary["warnings"] = art.warnings;
  write_text(summary_path, summary.dump(2) + "\n");

  return art;
}

AuditResult cmd_audit(const std::string& model_path, const std::string& expected_hex) {
  const Digest expected = digest_from_hex(expected_hex);
  const Digest actual = hash_model(model_path);
  AuditResult r;
  r.actual_digest = actual.hex();
  r.match = actual == expected;
  return r;
}

ReportResult cmd_report(const std::vector<std::string>& pair_csv_paths,
                        const std::string& out_dir) {
  if (pair_csv_paths.empty())
    fail(Status::config, "report needs at least one pair.csv input");

  struct Row {
    std::string impostor, target;
    double tfp_before, tfp_after, a1_before, a1_after;
  };
  std::vector<Row> rows;

  for (const std::string& path : pair_csv_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Status::io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
      fail(Status::format, path + ": empty file, expected a pair CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kPairCsvHeader)
      fail(Status::format, path + ": unexpected header '" + line + "'");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, ',')) cols.push_back(col);
      if (line.back() == ',') cols.push_back("");
      if (cols.size() != 7)
        fail(Status::format, path + ":" + std::to_string(line_no) +
                                 ": expected 7 columns, got " +
                                 std::to_string(cols.size()));
      const auto num = [&](const std::string& text) {
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end == text.c_str() || *end != '\0')
          fail(Status::format, path + ":" + std::to_string(line_no) +
                                   ": not a number: '" + text + "'");
        return v;
      };
      rows.push_back(
          {cols[0], cols[1], num(cols[2]), num(cols[3]), num(cols[4]), num(cols[5])});
    }
  }

  std::filesystem::create_directories(out_dir);
  ReportResult r;
  r.pairs_csv = out_dir + "/report_pairs.csv";
  r.averages_csv = out_dir + "/report_averages.csv";
  r.rows_total = static_cast<std::uint32_t>(rows.size());

  // Scatter-style per-pair file, restricted to attacks that reached the
  // plausible acceptance rate.
  std::string pairs_text = "impostor,target,T_fp_before,T_fp_after\n";
  for (const Row& row : rows) {
    if (row.tfp_after < 0.15) continue;
    ++r.rows_kept;
    pairs_text += row.impostor + ',' + row.target + ',' +
                  format_double(row.tfp_before) + ',' +
                  format_double(row.tfp_after) + '\n';
  }
  write_text(r.pairs_csv, pairs_text);

  std::string avg_text =
      "runs,T_fp_before_mean,T_fp_after_mean,A_1_before_mean,A_1_after_mean\n";
  if (!rows.empty()) {
    double tb = 0, ta = 0, ab = 0, aa = 0;
    for (const Row& row : rows) {
      tb += row.tfp_before;
      ta += row.tfp_after;
      ab += row.a1_before;
      aa += row.a1_after;
    }
    const double n = static_cast<double>(rows.size());
    avg_text += std::to_string(rows.size()) + ',' + format_double(tb / n) + ',' +
                format_double(ta / n) + ',' + format_double(ab / n) + ',' +
                format_double(aa / n) + '\n';
  }
  write_text(r.averages_csv, avg_text);
  return r;
}

}  // namespace bdnet
