// Command-line front end. Deliberately a pure client of the C API in
// bdnet.h: flags become config keys, results come back through the report
// accessors, and exit codes follow the documented contract.

#include <cstdio>
#include <deque>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bdnet.h"

namespace {

// One CLI flag bound to one config key; only flags the user actually set
// are forwarded, so config-file values stay in force otherwise.
struct KeyFlag {
  std::string key;
  std::string value;
  CLI::Option* opt = nullptr;
};

class CommandConfig {
 public:
  explicit CommandConfig(CLI::App& cmd) : cmd_(cmd) {
    cmd.add_option("--config", config_path_,
                   "key=value config file; explicit flags override it");
  }

  void bind(const std::string& flag, const std::string& key,
            const std::string& description) {
    flags_.push_back({key, "", nullptr});
    KeyFlag& kf = flags_.back();
    kf.opt = cmd_.add_option(flag, kf.value, description);
  }

  // Builds a bd_config from the config file (if any) plus the set flags.
  // Returns BD_OK and a handle the caller must free.
  bd_status build(bd_config** out) const {
    bd_config* cfg = nullptr;
    if (bd_status s = bd_config_create(&cfg); s != BD_OK) return s;
    if (!config_path_.empty()) {
      if (bd_status s = bd_config_load_file(cfg, config_path_.c_str()); s != BD_OK) {
        bd_config_free(cfg);
        return s;
      }
    }
    for (const KeyFlag& kf : flags_) {
      if (kf.opt->count() == 0) continue;
      if (bd_status s = bd_config_set(cfg, kf.key.c_str(), kf.value.c_str());
          s != BD_OK) {
        bd_config_free(cfg);
        return s;
      }
    }
    *out = cfg;
    return BD_OK;
  }

 private:
  CLI::App& cmd_;
  std::string config_path_;
  std::deque<KeyFlag> flags_;
};

int fail_with(bd_status status) {
  std::fprintf(stderr, "error: %s (%s)\n", bd_last_error(), bd_status_name(status));
  return static_cast<int>(status);
}

int run_gen_digits(const CommandConfig& cc) {
  bd_config* cfg = nullptr;
  if (bd_status s = cc.build(&cfg); s != BD_OK) return fail_with(s);
  uint32_t records = 0;
  const bd_status s = bd_cmd_gen_digits(cfg, &records);
  bd_config_free(cfg);
  if (s != BD_OK) return fail_with(s);
  std::printf("records=%u\n", records);
  return 0;
}

int run_train_fixture(const CommandConfig& cc) {
  bd_config* cfg = nullptr;
  if (bd_status s = cc.build(&cfg); s != BD_OK) return fail_with(s);
  double accuracy = 0.0;
  char digest[65] = {0};
  const bd_status s = bd_cmd_train_fixture(cfg, &accuracy, digest, sizeof digest);
  bd_config_free(cfg);
  if (s != BD_OK) return fail_with(s);
  std::printf("holdout_accuracy=%.6f\ndigest=%s\n", accuracy, digest);
  return 0;
}

int run_enroll(const CommandConfig& cc) {
  bd_config* cfg = nullptr;
  if (bd_status s = cc.build(&cfg); s != BD_OK) return fail_with(s);
  double threshold = 0.0, accuracy = 0.0;
  const bd_status s = bd_cmd_enroll(cfg, &threshold, &accuracy);
  bd_config_free(cfg);
  if (s != BD_OK) return fail_with(s);
  std::printf("threshold=%.6f\ncalibration_accuracy=%.6f\n", threshold, accuracy);
  return 0;
}

int run_attack(const CommandConfig& cc) {
  bd_config* cfg = nullptr;
  if (bd_status s = cc.build(&cfg); s != BD_OK) return fail_with(s);
  bd_report* report = nullptr;
  const bd_status s = bd_cmd_attack(cfg, &report);
  bd_config_free(cfg);
  if (s != BD_OK) return fail_with(s);

  const bd_outcome outcome = bd_report_outcome(report);
  const char* outcome_text = outcome == BD_OUTCOME_SUCCESSFUL ? "successful"
                             : outcome == BD_OUTCOME_PLAUSIBLE ? "plausible"
                                                               : "failed";
  std::printf("outcome=%s\n", outcome_text);
  std::printf("T_fp_before=%.6f\nT_fp_after=%.6f\n", bd_report_tfp_before(report),
              bd_report_tfp_after(report));
  std::printf("A_0=%.6f\nA_1_after=%.6f\n", bd_report_baseline_accuracy(report),
              bd_report_a1_after(report));
  std::printf("digest_before=%s\ndigest_after=%s\n", bd_report_digest_before(report),
              bd_report_digest_after(report));
  std::printf("summary=%s\n", bd_report_summary_path(report));
  for (size_t i = 0; i < bd_report_warning_count(report); ++i)
    std::fprintf(stderr, "warning: %s\n", bd_report_warning(report, i));
  bd_report_free(report);

  // Exit contract: 0 successful, 10 plausible, 20 failed.
  switch (outcome) {
    case BD_OUTCOME_SUCCESSFUL: return 0;
    case BD_OUTCOME_PLAUSIBLE: return 10;
    case BD_OUTCOME_FAILED: return 20;
  }
  return 20;
}

int run_audit(const std::string& model, const std::string& digest) {
  int match = 0;
  const bd_status s = bd_cmd_audit(model.c_str(), digest.c_str(), &match);
  if (s != BD_OK) {
    std::fprintf(stderr, "error: %s (%s)\n", bd_last_error(), bd_status_name(s));
    return 2;
  }
  char actual[65] = {0};
  if (bd_model_hash(model.c_str(), actual, sizeof actual) == BD_OK)
    std::printf("digest=%s\n", actual);
  if (match) {
    std::printf("verdict=match\n");
    return 0;
  }
  std::printf("verdict=mismatch\n");
  return 1;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  std::vector<const char*> paths;
  paths.reserve(inputs.size());
  for (const std::string& p : inputs) paths.push_back(p.c_str());
  uint32_t total = 0, kept = 0;
  const bd_status s =
      bd_cmd_report(paths.data(), paths.size(), out_dir.c_str(), &total, &kept);
  if (s != BD_OK) return fail_with(s);
  std::printf("rows_total=%u\nrows_kept=%u\n", total, kept);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Weight-perturbation backdoor toolkit: fixture training, enrollment, "
      "attack search, integrity audit, and reporting"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-digits", "Write a synthetic digit dataset");
  CommandConfig gen_cc(*gen);
  gen_cc.bind("--out", "out", "output BDDS path");
  gen_cc.bind("--count-per-digit", "count_per_digit", "images per digit (default 400)");
  gen_cc.bind("--seed", "seed", "generator seed (default 1)");
  gen_cc.bind("--canvas", "canvas", "canvas side in pixels (default 16)");
  gen_cc.bind("--scale", "scale", "pixels per font cell (default 2)");
  gen_cc.bind("--min-intensity", "min_intensity", "lit-cell minimum value");
  gen_cc.bind("--max-intensity", "max_intensity", "lit-cell maximum value");
  gen_cc.bind("--dropout", "dropout", "per-cell dropout probability");
  gen_cc.bind("--noise-sigma", "noise_sigma", "pixel noise stddev");
  gen_cc.bind("--jitter-x", "jitter_x", "max horizontal jitter");
  gen_cc.bind("--jitter-y", "jitter_y", "max vertical jitter");

  auto* train = app.add_subcommand("train-fixture", "Train the 6-class fixture model");
  CommandConfig train_cc(*train);
  train_cc.bind("--dataset", "dataset", "digit dataset (BDDS path or images.idx,labels.idx)");
  train_cc.bind("--model-out", "model_out", "output model path");
  train_cc.bind("--epochs", "epochs", "training epochs (default 16)");
  train_cc.bind("--lr", "lr", "learning rate (default 0.002)");
  train_cc.bind("--momentum", "momentum", "SGD momentum (default 0.9)");
  train_cc.bind("--seed", "seed", "init/shuffle seed (default 1)");
  train_cc.bind("--holdout-fraction", "holdout_fraction",
                "per-digit holdout share (default 0.2)");

  auto* enroll = app.add_subcommand(
      "enroll", "Enroll identities and calibrate the verification threshold");
  CommandConfig enroll_cc(*enroll);
  enroll_cc.bind("--model", "model", "fixture classifier model");
  enroll_cc.bind("--gallery", "gallery", "gallery dataset for enrollment");
  enroll_cc.bind("--calibration", "calibration", "calibration dataset");
  enroll_cc.bind("--store-out", "store_out", "output verification store path");
  enroll_cc.bind("--gallery-per-identity", "gallery_per_identity",
                 "gallery images per identity (default 100)");

  auto* attack = app.add_subcommand("attack", "Search for a weight-perturbation backdoor");
  CommandConfig attack_cc(*attack);
  attack_cc.bind("--scenario", "scenario", "classification or verification");
  attack_cc.bind("--model", "model", "model under attack");
  attack_cc.bind("--store", "store", "verification store (verification only)");
  attack_cc.bind("--eval", "eval", "evaluation dataset");
  attack_cc.bind("--impostor", "impostor", "impostor digit (5..9)");
  attack_cc.bind("--target", "target", "target identity (verification only)");
  attack_cc.bind("--out-dir", "out_dir", "artifact output directory");
  attack_cc.bind("--layer-index", "layer_index", "layer to perturb (default 0)");
  attack_cc.bind("--subset-fraction", "subset_fraction",
                 "fraction of the layer's weights per round (default 0.01)");
  attack_cc.bind("--sets", "sets", "subset rounds (default 25)");
  attack_cc.bind("--iter", "iter", "candidates per round (default 40)");
  attack_cc.bind("--epsilon", "epsilon", "accuracy budget (default 0.005)");
  attack_cc.bind("--metric", "metric",
                 "acc_all | acc_2x_ifalse | acc_all_plus_i | acc_combo");
  attack_cc.bind("--selection", "selection", "tfp_max | metric_min");
  attack_cc.bind("--perturb", "perturb",
                 "additive | multiplicative | uniform_constant");
  attack_cc.bind("--master-seed", "master_seed", "seed for all randomness");
  attack_cc.bind("--threads", "threads", "candidate evaluation threads (default 1)");
  attack_cc.bind("--a0", "a0", "baseline accuracy override");
  attack_cc.bind("--probes-attacker", "probes_attacker",
                 "attacker probes (default 200)");
  attack_cc.bind("--probes-known-per-identity", "probes_known_per_identity",
                 "known probes per identity (default 80)");
  attack_cc.bind("--probes-unknown-per-identity", "probes_unknown_per_identity",
                 "unknown probes per digit (default 100)");

  auto* audit = app.add_subcommand("audit", "Check a model file against a stored digest");
  std::string audit_model, audit_digest;
  audit->add_option("model", audit_model, "model file")->required();
  audit->add_option("digest", audit_digest, "expected sha256 hex digest")->required();

  auto* report = app.add_subcommand("report", "Aggregate attack pair.csv files");
  std::vector<std::string> report_inputs;
  std::string report_out_dir;
  report->add_option("inputs", report_inputs, "pair.csv files")->required();
  report->add_option("--out-dir", report_out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Fold CLI11's parse-error codes into the 1..9 error band; help stays 0.
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) return run_gen_digits(gen_cc);
  if (train->parsed()) return run_train_fixture(train_cc);
  if (enroll->parsed()) return run_enroll(enroll_cc);
  if (attack->parsed()) return run_attack(attack_cc);
  if (audit->parsed()) return run_audit(audit_model, audit_digest);
  if (report->parsed()) return run_report(report_inputs, report_out_dir);
  return 1;
}
