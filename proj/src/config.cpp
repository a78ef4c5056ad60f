#include "isac/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace isac {

namespace {

using nlohmann::json;

json to_json(const PipelineConfig& c) {
  const auto& s = c.system;
  const auto& d = c.detection;
  const auto& k = c.tracking;
  const auto& m = c.microdoppler;
  return {
      {"system",
       {{"carrier_frequency", s.carrier_frequency},
        {"sample_rate", s.sample_rate},
        {"sequence_length", s.sequence_length},
        {"zc_root", s.zc_root},
        {"pri_sequences", s.pri_sequences},
        {"cpi_pulses", s.cpi_pulses},
        {"speed_of_light", s.speed_of_light}}},
      {"detection",
       {{"scope_min_m", d.scope_min_m},
        {"scope_max_m", d.scope_max_m},
        {"guard_bins", d.guard_bins},
        {"threshold_up_db", d.threshold_up_db},
        {"threshold_down_db", d.threshold_down_db}}},
      {"tracking",
       {{"accel_sigma", k.accel_sigma},
        {"range_sigma_bins", k.range_sigma_bins},
        {"velocity_sigma_bins", k.velocity_sigma_bins},
        {"init_sigma_bins", k.init_sigma_bins},
        {"history_seconds", k.history_seconds},
        {"gate_nis", k.gate_nis},
        {"max_coast_frames", k.max_coast_frames}}},
      {"microdoppler",
       {{"roi_halfwidth_bins", m.roi_halfwidth_bins},
        {"roi_guard_bins", m.roi_guard_bins},
        {"threshold_db", m.threshold_db},
        {"relative_threshold", m.relative_threshold},
        {"noise_gate_db", m.noise_gate_db ? json(*m.noise_gate_db) : json(nullptr)},
        {"smoothing_window_s", m.smoothing_window_s},
        {"drift_window_s", m.drift_window_s},
        {"walking_drift_m", m.fsm.walking_drift_m},
        {"waving_enter_mps", m.fsm.waving_enter_mps},
        {"waving_exit_mps", m.fsm.waving_exit_mps}}},
      {"runtime",
       {{"fft_planning", c.runtime.fft_planning == FftPlanning::measure ? "measure" : "estimate"},
        {"fft_wisdom", c.runtime.fft_wisdom},
        {"pipelined", c.runtime.pipelined}}},
  };
}

// Every key in `doc` must exist in `schema` with a compatible JSON kind.
void check_keys(const json& doc, const json& schema, const std::string& path) {
  if (!doc.is_object()) {
    throw ConfigError(path + ": expected an object");
  }
  for (const auto& [key, value] : doc.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) {
      throw ConfigError(sub + ": unknown key");
    }
    const json& expected = schema.at(key);
    if (value.is_null() && sub == "microdoppler.noise_gate_db") {
      continue;
    }
    if (expected.is_object()) {
      check_keys(value, expected, sub);
    } else if (expected.is_number() && !value.is_number()) {
      throw ConfigError(sub + ": expected a number");
    } else if (expected.is_number_unsigned() && !value.is_number_unsigned()) {
      throw ConfigError(sub + ": expected a non-negative integer");
    } else if (expected.is_boolean() && !value.is_boolean()) {
      throw ConfigError(sub + ": expected a boolean");
    } else if (expected.is_string() && !value.is_string()) {
      throw ConfigError(sub + ": expected a string");
    }
  }
}

PipelineConfig from_json(const json& j) {
  PipelineConfig c;
  const json& s = j.at("system");
  c.system.carrier_frequency = s.at("carrier_frequency").get<double>();
  c.system.sample_rate = s.at("sample_rate").get<double>();
  c.system.sequence_length = s.at("sequence_length").get<std::size_t>();
  c.system.zc_root = s.at("zc_root").get<std::size_t>();
  c.system.pri_sequences = s.at("pri_sequences").get<std::size_t>();
  c.system.cpi_pulses = s.at("cpi_pulses").get<std::size_t>();
  c.system.speed_of_light = s.at("speed_of_light").get<double>();

  const json& d = j.at("detection");
  c.detection.scope_min_m = d.at("scope_min_m").get<double>();
  c.detection.scope_max_m = d.at("scope_max_m").get<double>();
  c.detection.guard_bins = d.at("guard_bins").get<std::size_t>();
  c.detection.threshold_up_db = d.at("threshold_up_db").get<double>();
  c.detection.threshold_down_db = d.at("threshold_down_db").get<double>();

  const json& k = j.at("tracking");
  c.tracking.accel_sigma = k.at("accel_sigma").get<double>();
  c.tracking.range_sigma_bins = k.at("range_sigma_bins").get<double>();
  c.tracking.velocity_sigma_bins = k.at("velocity_sigma_bins").get<double>();
  c.tracking.init_sigma_bins = k.at("init_sigma_bins").get<double>();
  c.tracking.history_seconds = k.at("history_seconds").get<double>();
  c.tracking.gate_nis = k.at("gate_nis").get<double>();
  c.tracking.max_coast_frames = k.at("max_coast_frames").get<std::size_t>();

  const json& m = j.at("microdoppler");
  c.microdoppler.roi_halfwidth_bins = m.at("roi_halfwidth_bins").get<std::size_t>();
  c.microdoppler.roi_guard_bins = m.at("roi_guard_bins").get<std::size_t>();
  c.microdoppler.threshold_db = m.at("threshold_db").get<double>();
  c.microdoppler.relative_threshold = m.at("relative_threshold").get<bool>();
  if (m.at("noise_gate_db").is_null()) {
    c.microdoppler.noise_gate_db.reset();
  } else {
    c.microdoppler.noise_gate_db = m.at("noise_gate_db").get<double>();
  }
  c.microdoppler.smoothing_window_s = m.at("smoothing_window_s").get<double>();
  c.microdoppler.drift_window_s = m.at("drift_window_s").get<double>();
  c.microdoppler.fsm.walking_drift_m = m.at("walking_drift_m").get<double>();
  c.microdoppler.fsm.waving_enter_mps = m.at("waving_enter_mps").get<double>();
  c.microdoppler.fsm.waving_exit_mps = m.at("waving_exit_mps").get<double>();

  const json& r = j.at("runtime");
  const auto planning = r.at("fft_planning").get<std::string>();
  if (planning == "estimate") {
    c.runtime.fft_planning = FftPlanning::estimate;
  } else if (planning == "measure") {
    c.runtime.fft_planning = FftPlanning::measure;
  } else {
    throw ConfigError("runtime.fft_planning: expected \"estimate\" or \"measure\"");
  }
  c.runtime.fft_wisdom = r.at("fft_wisdom").get<std::string>();
  c.runtime.pipelined = r.at("pipelined").get<bool>();
  return c;
}

}  // namespace

void validate(const PipelineConfig& c) {
  const DerivedParams params = derive(c.system);
  const auto& d = c.detection;
  if (!(d.threshold_down_db < d.threshold_up_db)) {
    throw ConfigError("detection.threshold_down_db must be below detection.threshold_up_db");
  }
  if (!(d.scope_max_m < params.max_unambiguous_range)) {
    throw ConfigError("detection.scope_max_m exceeds the unambiguous range");
  }
  make_scope(params, d.scope_min_m, d.scope_max_m, d.guard_bins);
  if (2 * std::max(d.guard_bins, c.microdoppler.roi_guard_bins) + 1 >= c.system.cpi_pulses) {
    throw ConfigError("zero-Doppler guard leaves no Doppler bins");
  }
  const auto& k = c.tracking;
  if (!(k.accel_sigma >= 0.0) || !(k.range_sigma_bins > 0.0) || !(k.velocity_sigma_bins > 0.0) ||
      !(k.init_sigma_bins > 0.0) || !(k.history_seconds > 0.0)) {
    throw ConfigError("tracking: sigmas must be positive (accel_sigma may be 0)");
  }
  if (!(k.gate_nis >= 0.0)) {
    throw ConfigError("tracking.gate_nis must be >= 0 (0 disables the gate)");
  }
  const auto& m = c.microdoppler;
  if (m.roi_halfwidth_bins < 1) {
    throw ConfigError("microdoppler.roi_halfwidth_bins must be >= 1");
  }
  if (m.relative_threshold && !(m.threshold_db < 0.0)) {
    throw ConfigError("microdoppler.threshold_db must be negative in relative mode");
  }
  if (!(m.smoothing_window_s > 0.0) || !(m.drift_window_s > 0.0)) {
    throw ConfigError("microdoppler windows must be positive");
  }
  if (!(m.fsm.waving_exit_mps < m.fsm.waving_enter_mps)) {
    throw ConfigError("microdoppler.waving_exit_mps must be below waving_enter_mps");
  }
  if (!(m.fsm.walking_drift_m > 0.0)) {
    throw ConfigError("microdoppler.walking_drift_m must be positive");
  }
}

PipelineConfig parse_config(std::string_view text, std::string_view source_name) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(source_name) + ": malformed JSON (" + e.what() + ")");
  }
  const json defaults = to_json(PipelineConfig{});
  try {
    check_keys(doc, defaults, "");
    json merged = defaults;
    merged.merge_patch(doc);
    // merge_patch drops keys set to null; restore nullable ones explicitly.
    if (doc.contains("microdoppler") && doc["microdoppler"].contains("noise_gate_db") &&
        doc["microdoppler"]["noise_gate_db"].is_null()) {
      merged["microdoppler"]["noise_gate_db"] = nullptr;
    }
    PipelineConfig c = from_json(merged);
    validate(c);
    return c;
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source_name) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string(source_name) + ": " + e.what());
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path.string() + ": cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string config_to_json(const PipelineConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace isac
