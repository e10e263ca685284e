#include "bdnet.h"

#include <cstring>
#include <string>

#include "bdnet/commands.hpp"
#include "bdnet/model_io.hpp"
#include "bdnet/rng.hpp"

namespace {

thread_local std::string g_last_error;

bd_status set_error(bdnet::Status status, const std::string& message) {
  g_last_error = message;
  return static_cast<bd_status>(status);
}

// Runs fn, translating C++ errors into status codes and the thread-local
// message slot.
template <typename Fn>
bd_status guarded(Fn&& fn) {
  try {
    fn();
    return BD_OK;
  } catch (const bdnet::Error& e) {
    return set_error(e.status(), e.what());
  } catch (const std::exception& e) {
    return set_error(bdnet::Status::numeric, e.what());
  } catch (...) {
    return set_error(bdnet::Status::numeric, "unknown error");
  }
}

bd_status require(bool ok, const char* message) {
  if (ok) return BD_OK;
  return set_error(bdnet::Status::invalid_argument, message);
}

bd_status copy_hex(const std::string& hex, char* out, size_t cap) {
  if (cap < hex.size() + 1)
    return set_error(bdnet::Status::invalid_argument,
                     "output buffer too small for a hex digest");
  std::memcpy(out, hex.c_str(), hex.size() + 1);
  return BD_OK;
}

}  // namespace

struct bd_network {
  bdnet::Network net;
};

struct bd_config {
  bdnet::KeyValues kv;
};

struct bd_report {
  bdnet::AttackArtifacts art;
};

extern "C" {

const char* bd_status_name(bd_status status) {
  switch (status) {
    case BD_OK: return "ok";
    case BD_INVALID_ARGUMENT: return "invalid argument";
    case BD_SHAPE_MISMATCH: return "shape mismatch";
    case BD_NUMERIC_ERROR: return "numeric error";
    case BD_FORMAT_ERROR: return "format error";
    case BD_CORRUPT_FILE: return "corrupt file";
    case BD_IO_ERROR: return "io error";
    case BD_CONFIG_ERROR: return "config error";
    case BD_EVALUATION_ERROR: return "evaluation error";
    case BD_NOT_FOUND: return "not found";
  }
  return "unknown";
}

const char* bd_last_error(void) { return g_last_error.c_str(); }

const char* bd_seed_scheme(void) { return bdnet::kSeedScheme; }

bd_status bd_network_load(const char* path, bd_network** out) {
  if (bd_status s = require(path && out, "path and out must not be NULL"); s != BD_OK)
    return s;
  *out = nullptr;
  return guarded([&] { *out = new bd_network{bdnet::load_model(path)}; });
}

bd_status bd_network_save(const bd_network* net, const char* path) {
  if (bd_status s = require(net && path, "net and path must not be NULL"); s != BD_OK)
    return s;
  return guarded([&] { bdnet::save_model(net->net, path); });
}

void bd_network_free(bd_network* net) { delete net; }

bd_status bd_network_input_size(const bd_network* net, size_t* out) {
  if (bd_status s = require(net && out, "net and out must not be NULL"); s != BD_OK)
    return s;
  return guarded([&] { *out = bdnet::shape_numel(net->net.input_shape); });
}

bd_status bd_network_output_size(const bd_network* net, size_t* out) {
  if (bd_status s = require(net && out, "net and out must not be NULL"); s != BD_OK)
    return s;
  return guarded([&] { *out = bdnet::output_size(net->net); });
}

bd_status bd_network_forward(const bd_network* net, const float* input,
                             size_t input_len, float* output, size_t output_len) {
  if (bd_status s = require(net && input && output, "NULL argument"); s != BD_OK)
    return s;
  return guarded([&] {
    if (input_len != bdnet::shape_numel(net->net.input_shape))
      bdnet::fail(bdnet::Status::shape_mismatch,
                  "input length " + std::to_string(input_len) +
                      " does not match the network input shape");
    bdnet::Tensor in(net->net.input_shape,
                     std::vector<float>(input, input + input_len));
    const bdnet::Tensor out_t = bdnet::forward(net->net, in);
    if (output_len != out_t.numel())
      bdnet::fail(bdnet::Status::shape_mismatch,
                  "output buffer holds " + std::to_string(output_len) +
                      " values, network produces " + std::to_string(out_t.numel()));
    std::memcpy(output, out_t.data.data(), output_len * sizeof(float));
  });
}

bd_status bd_model_hash(const char* path, char* hex_out, size_t hex_cap) {
  if (bd_status s = require(path && hex_out, "path and hex_out must not be NULL");
      s != BD_OK)
    return s;
  std::string hex;
  if (bd_status s = guarded([&] { hex = bdnet::hash_model(path).hex(); }); s != BD_OK)
    return s;
  return copy_hex(hex, hex_out, hex_cap);
}

bd_status bd_model_verify(const char* path, const char* expected_hex,
                          int* match_out) {
  if (bd_status s = require(path && expected_hex && match_out, "NULL argument");
      s != BD_OK)
    return s;
  return guarded([&] {
    *match_out =
        bdnet::verify_model(path, bdnet::digest_from_hex(expected_hex)) ? 1 : 0;
  });
}

bd_status bd_config_create(bd_config** out) {
  if (bd_status s = require(out != nullptr, "out must not be NULL"); s != BD_OK)
    return s;
  *out = new bd_config{};
  return BD_OK;
}

void bd_config_free(bd_config* cfg) { delete cfg; }

bd_status bd_config_set(bd_config* cfg, const char* key, const char* value) {
  if (bd_status s = require(cfg && key && value, "NULL argument"); s != BD_OK)
    return s;
  if (bd_status s = require(key[0] != '\0', "key must not be empty"); s != BD_OK)
    return s;
  cfg->kv[key] = value;
  return BD_OK;
}

bd_status bd_config_load_file(bd_config* cfg, const char* path) {
  if (bd_status s = require(cfg && path, "cfg and path must not be NULL"); s != BD_OK)
    return s;
  return guarded([&] {
    for (const auto& [key, value] : bdnet::load_key_values(path))
      cfg->kv[key] = value;
  });
}

bd_status bd_cmd_gen_digits(const bd_config* cfg, uint32_t* records_out) {
  if (bd_status s = require(cfg != nullptr, "cfg must not be NULL"); s != BD_OK)
    return s;
  return guarded([&] {
    const bdnet::GenDigitsResult r = bdnet::cmd_gen_digits(cfg->kv);
    if (records_out) *records_out = r.records;
  });
}

bd_status bd_cmd_train_fixture(const bd_config* cfg, double* holdout_accuracy_out,
                               char* digest_hex_out, size_t digest_hex_cap) {
  if (bd_status s = require(cfg != nullptr, "cfg must not be NULL"); s != BD_OK)
    return s;
  bdnet::TrainFixtureResult r;
  if (bd_status s = guarded([&] { r = bdnet::cmd_train_fixture(cfg->kv); });
      s != BD_OK)
    return s;
  if (holdout_accuracy_out) *holdout_accuracy_out = r.holdout_accuracy;
  if (digest_hex_out) return copy_hex(r.digest, digest_hex_out, digest_hex_cap);
  return BD_OK;
}

bd_status bd_cmd_enroll(const bd_config* cfg, double* threshold_out,
                        double* calibration_accuracy_out) {
  if (bd_status s = require(cfg != nullptr, "cfg must not be NULL"); s != BD_OK)
    return s;
  return guarded([&] {
    const bdnet::EnrollResult r = bdnet::cmd_enroll(cfg->kv);
    if (threshold_out) *threshold_out = r.threshold;
    if (calibration_accuracy_out) *calibration_accuracy_out = r.calibration_accuracy;
  });
}

bd_status bd_cmd_attack(const bd_config* cfg, bd_report** out) {
  if (bd_status s = require(cfg && out, "cfg and out must not be NULL"); s != BD_OK)
    return s;
  *out = nullptr;
  return guarded([&] { *out = new bd_report{bdnet::cmd_attack(cfg->kv)}; });
}

void bd_report_free(bd_report* report) { delete report; }

bd_outcome bd_report_outcome(const bd_report* report) {
  return static_cast<bd_outcome>(report->art.outcome);
}

double bd_report_baseline_accuracy(const bd_report* report) { return report->art.A_0; }
double bd_report_tfp_before(const bd_report* report) { return report->art.tfp_before; }
double bd_report_tfp_after(const bd_report* report) { return report->art.tfp_after; }
double bd_report_a1_before(const bd_report* report) { return report->art.a1_before; }
double bd_report_a1_after(const bd_report* report) { return report->art.a1_after; }

const char* bd_report_digest_before(const bd_report* report) {
  return report->art.digest_before.c_str();
}
const char* bd_report_digest_after(const bd_report* report) {
  return report->art.digest_after.c_str();
}
const char* bd_report_model_path(const bd_report* report) {
  return report->art.model_out.c_str();
}
const char* bd_report_trace_path(const bd_report* report) {
  return report->art.trace_csv.c_str();
}
const char* bd_report_pair_path(const bd_report* report) {
  return report->art.pair_csv.c_str();
}
const char* bd_report_summary_path(const bd_report* report) {
  return report->art.summary_json.c_str();
}
size_t bd_report_warning_count(const bd_report* report) {
  return report->art.warnings.size();
}
const char* bd_report_warning(const bd_report* report, size_t index) {
  if (index >= report->art.warnings.size()) return nullptr;
  return report->art.warnings[index].c_str();
}

bd_status bd_cmd_audit(const char* model_path, const char* expected_hex,
                       int* match_out) {
  if (bd_status s = require(model_path && expected_hex && match_out, "NULL argument");
      s != BD_OK)
    return s;
  return guarded([&] {
    const bdnet::AuditResult r = bdnet::cmd_audit(model_path, expected_hex);
    *match_out = r.match ? 1 : 0;
  });
}

bd_status bd_cmd_report(const char* const* pair_csv_paths, size_t count,
                        const char* out_dir, uint32_t* rows_total_out,
                        uint32_t* rows_kept_out) {
  if (bd_status s = require(pair_csv_paths && out_dir, "NULL argument"); s != BD_OK)
    return s;
  return guarded([&] {
    std::vector<std::string> paths;
    paths.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (!pair_csv_paths[i])
        bdnet::fail(bdnet::Status::invalid_argument, "NULL path in input list");
      paths.emplace_back(pair_csv_paths[i]);
    }
    const bdnet::ReportResult r = bdnet::cmd_report(paths, out_dir);
    if (rows_total_out) *rows_total_out = r.rows_total;
    if (rows_kept_out) *rows_kept_out = r.rows_kept;
  });
}

}  // extern "C"
