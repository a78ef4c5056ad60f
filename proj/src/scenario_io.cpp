#include "isac/scenario_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace isac {

namespace {

using nlohmann::json;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ScenarioError(source_ + ": " + path + ": " + what);
  }

  void only_keys(const json& obj, const std::string& path, std::set<std::string> allowed) const {
    if (!obj.is_object()) {
      fail(path.empty() ? "<root>" : path, "expected an object");
    }
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.contains(key)) {
        fail(join(path, key), "unknown field");
      }
    }
  }

  double number(const json& obj, const std::string& path, const char* key,
                std::optional<double> fallback = std::nullopt) const {
    if (!obj.contains(key)) {
      if (fallback) return *fallback;
      fail(join(path, key), "required field missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(join(path, key), "expected a number, got " + std::string(v.type_name()));
    }
    return v.get<double>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ScenarioScript parse_scenario(std::string_view text, const DerivedParams& params,
                              std::string_view source_name) {
  const Reader r{std::string(source_name)};
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ScenarioError(r.source() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                        ": malformed JSON (" + e.what() + ")");
  }

  r.only_keys(doc, "", {"duration", "seed", "snr_db", "clutter", "human", "segments"});
  ScenarioScript s;
  s.duration = r.number(doc, "", "duration");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) {
      r.fail("seed", "expected a non-negative integer");
    }
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("snr_db")) {
    if (doc["snr_db"].is_null()) {
      s.snr_db.reset();
    } else {
      s.snr_db = r.number(doc, "", "snr_db");
    }
  }

  if (doc.contains("clutter")) {
    const json& arr = doc["clutter"];
    if (!arr.is_array()) r.fail("clutter", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "clutter[" + std::to_string(i) + "]";
      r.only_keys(arr[i], path, {"range", "amplitude"});
      s.clutter.push_back({r.number(arr[i], path, "range"), r.number(arr[i], path, "amplitude")});
    }
  }

  if (doc.contains("human")) {
    const json& h = doc["human"];
    r.only_keys(h, "human",
                {"torso_amplitude", "limb_ratio", "sway_amplitude", "sway_frequency",
                 "range_falloff", "falloff_reference_range"});
    const HumanModel d;
    s.human.torso_amplitude = r.number(h, "human", "torso_amplitude", d.torso_amplitude);
    s.human.limb_ratio = r.number(h, "human", "limb_ratio", d.limb_ratio);
    s.human.sway_amplitude = r.number(h, "human", "sway_amplitude", d.sway_amplitude);
    s.human.sway_frequency = r.number(h, "human", "sway_frequency", d.sway_frequency);
    s.human.falloff_reference_range =
        r.number(h, "human", "falloff_reference_range", d.falloff_reference_range);
    if (h.contains("range_falloff")) {
      if (!h["range_falloff"].is_boolean()) r.fail("human.range_falloff", "expected a boolean");
      s.human.range_falloff = h["range_falloff"].get<bool>();
    }
  }

  if (!doc.contains("segments") || !doc["segments"].is_array()) {
    r.fail("segments", "required array missing");
  }
  const json& segs = doc["segments"];
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string path = "segments[" + std::to_string(i) + "]";
    const json& js = segs[i];
    r.only_keys(js, path,
                {"start_time", "duration", "activity", "start_range", "walk_speed",
                 "wave_amplitude", "wave_frequency"});
    const Segment d;
    Segment seg;
    seg.start_time = r.number(js, path, "start_time");
    if (js.contains("duration")) seg.duration = r.number(js, path, "duration");
    if (!js.contains("activity") || !js["activity"].is_string()) {
      r.fail(path + ".activity", "expected one of absent|standing|walking|waving");
    }
    const auto activity = parse_activity(js["activity"].get<std::string>());
    if (!activity) {
      r.fail(path + ".activity", "unknown activity '" + js["activity"].get<std::string>() +
                                     "' (expected absent|standing|walking|waving)");
    }
    seg.activity = *activity;
    seg.start_range = r.number(js, path, "start_range", d.start_range);
    seg.walk_speed = r.number(js, path, "walk_speed", d.walk_speed);
    seg.wave_amplitude = r.number(js, path, "wave_amplitude", d.wave_amplitude);
    seg.wave_frequency = r.number(js, path, "wave_frequency", d.wave_frequency);
    s.segments.push_back(seg);
  }

  try {
    validate(s, params);
  } catch (const ScenarioError& e) {
    throw ScenarioError(r.source() + ": " + e.what());
  }
  return s;
}

ScenarioScript load_scenario(const std::filesystem::path& path, const DerivedParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScenarioError(path.string() + ": cannot open scenario file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), params, path.string());
}

std::string scenario_to_json(const ScenarioScript& script) {
  json doc;
  doc["duration"] = script.duration;
  doc["seed"] = script.seed;
  doc["snr_db"] = script.snr_db ? json(*script.snr_db) : json(nullptr);
  doc["clutter"] = json::array();
  for (const auto& c : script.clutter) {
    doc["clutter"].push_back({{"range", c.range}, {"amplitude", c.amplitude}});
  }
  const HumanModel& h = script.human;
  doc["human"] = {{"torso_amplitude", h.torso_amplitude},
                  {"limb_ratio", h.limb_ratio},
                  {"sway_amplitude", h.sway_amplitude},
                  {"sway_frequency", h.sway_frequency},
                  {"range_falloff", h.range_falloff},
                  {"falloff_reference_range", h.falloff_reference_range}};
  doc["segments"] = json::array();
  for (const auto& seg : script.segments) {
    json js = {{"start_time", seg.start_time},
               {"activity", std::string(to_string(seg.activity))},
               {"start_range", seg.start_range},
               {"walk_speed", seg.walk_speed},
               {"wave_amplitude", seg.wave_amplitude},
               {"wave_frequency", seg.wave_frequency}};
    if (seg.duration) js["duration"] = *seg.duration;
    doc["segments"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

void save_scenario(const ScenarioScript& script, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ScenarioError(path.string() + ": cannot write scenario file");
  }
  out << scenario_to_json(script);
}

}  // namespace isac
