#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdnet/dataset.hpp"
#include "bdnet/scoring.hpp"
#include "bdnet/search.hpp"

namespace bdnet {

// Flat key=value configuration. Commands take the parsed map so the CLI,
// the C API, and tests share one code path; each command rejects keys it
// does not know.
using KeyValues = std::map<std::string, std::string>;

// One "key = value" per line; blank lines and '#' comments ignored.
KeyValues load_key_values(const std::string& path);
KeyValues parse_key_values_text(const std::string& text, const std::string& origin);

struct GenDigitsResult {
  std::string out_path;
  std::uint32_t records = 0;
};

// keys: out (required), count_per_digit, seed, canvas, scale, min_intensity,
// max_intensity, dropout, noise_sigma, jitter_x, jitter_y
GenDigitsResult cmd_gen_digits(const KeyValues& kv);

struct TrainFixtureResult {
  std::string model_path;
  double holdout_accuracy = 0.0;
  std::string digest;
  std::uint32_t train_count = 0;
  std::uint32_t holdout_count = 0;
};

// keys: dataset, model_out (required); epochs, lr, momentum, seed,
// holdout_fraction. The dataset carries raw digit labels 0..9; digits 5..9
// collapse into the reject class, so the fixture classifier has 6 classes.
TrainFixtureResult cmd_train_fixture(const KeyValues& kv);

struct EnrollResult {
  std::string store_path;
  double threshold = 0.0;
  double calibration_accuracy = 0.0;
  std::uint32_t identities = 0;
};

// keys: model, gallery, calibration, store_out (required);
// gallery_per_identity. Enrolls digits 0..4 on penultimate-layer features
// of the fixture classifier and calibrates the cosine threshold on all
// genuine and cross-identity impostor pairs of the calibration set.
EnrollResult cmd_enroll(const KeyValues& kv);

struct AttackArtifacts {
  Outcome outcome = Outcome::failed;
  double A_0 = 0.0;
  double tfp_before = 0.0;
  double tfp_after = 0.0;
  double a1_before = 0.0;
  double a1_after = 0.0;
  std::string digest_before;
  std::string digest_after;
  std::string model_out;
  std::string trace_csv;
  std::string pair_csv;
  std::string summary_json;
  std::vector<std::string> warnings;
};

// keys: scenario (classification|verification), model, eval, impostor,
// out_dir (required); store + target (verification only); layer_index,
// subset_fraction, sets, iter, epsilon, metric, selection, perturb,
// master_seed, threads, a0, probes_attacker, probes_known_per_identity,
// probes_unknown_per_identity. Writes backdoored.bdnw, trace.csv, pair.csv,
// and summary.json into out_dir.
AttackArtifacts cmd_attack(const KeyValues& kv);

struct AuditResult {
  bool match = false;
  std::string actual_digest;
};

// Recomputes the model file digest and compares against the expected
// lowercase hex digest.
AuditResult cmd_audit(const std::string& model_path, const std::string& expected_hex);

struct ReportResult {
  std::string pairs_csv;
  std::string averages_csv;
  std::uint32_t rows_total = 0;
  std::uint32_t rows_kept = 0;
};

// Aggregates per-run pair.csv files: report_pairs.csv keeps rows whose
// after-attack T_fp is at least 0.15; report_averages.csv holds the mean
// before/after rates over every input row.
ReportResult cmd_report(const std::vector<std::string>& pair_csv_paths,
                        const std::string& out_dir);

// Carves the attack evaluation set out of a raw-labeled digit dataset:
// attacker = images of the impostor digit (claiming the target identity in
// verification), known = digits 0..4 claiming themselves, unknown = the
// remaining reject digits, claiming enrolled identity (label mod 5) in
// verification. Takes the first N qualifying images per group in file
// order and errors when a group runs short.
EvaluationSet build_eval_set(const Dataset& raw, bool verification,
                             std::uint32_t impostor,
                             std::optional<std::uint32_t> target,
                             std::uint32_t attacker_count,
                             std::uint32_t known_per_identity,
                             std::uint32_t unknown_per_identity);

}  // namespace bdnet
