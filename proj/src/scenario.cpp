#include "levelmix/scenario.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "levelmix/errors.hpp"

namespace levelmix {

namespace {

using nlohmann::json;

HalfInt half_from(const json& j, const std::string& key) {
  if (!j.contains(key)) throw config_error("scenario: missing field '" + key + "'");
  const json& v = j.at(key);
  try {
    if (v.is_string()) return HalfInt::parse(v.get<std::string>());
    return HalfInt::from_double(v.get<double>());
  } catch (const std::exception& e) {
    throw config_error("scenario: field '" + key + "': " + e.what());
  }
}

double num_from(const json& j, const std::string& key, double fallback,
                bool required = false) {
  if (!j.contains(key)) {
    if (required) throw config_error("scenario: missing field '" + key + "'");
    return fallback;
  }
  if (!j.at(key).is_number()) {
    throw config_error("scenario: field '" + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

ManifoldSpec manifold_from(const json& j, const std::string& which) {
  if (!j.contains(which) || !j.at(which).is_object()) {
    throw config_error("scenario: missing manifold object '" + which + "'");
  }
  const json& m = j.at(which);
  ManifoldSpec spec;
  spec.label = m.value("label", which);
  spec.j = half_from(m, "J");
  spec.i = half_from(m, "I");
  spec.hyperfine_a_mhz = num_from(m, "hyperfine_A_MHz", 0.0);
  spec.base_energy_mhz = num_from(m, "base_energy_MHz", 0.0);
  return spec;
}

SystemSpec spec_from(const json& doc) {
  if (!doc.is_object()) throw config_error("scenario: not a JSON object");
  const int version = doc.value("schema_version", -1);
  if (version != 1) {
    throw config_error("scenario: unsupported schema_version " +
                       std::to_string(version));
  }
  SystemSpec spec;
  spec.lower = manifold_from(doc, "lower");
  spec.upper = manifold_from(doc, "upper");
  if (!doc.contains("polarization_q") || !doc.at("polarization_q").is_number_integer()) {
    throw config_error("scenario: missing integer field 'polarization_q'");
  }
  spec.polarization_q = doc.at("polarization_q").get<int>();

  if (!doc.contains("detuning") || !doc.at("detuning").is_object()) {
    throw config_error("scenario: missing 'detuning' object");
  }
  const json& det = doc.at("detuning");
  const std::string mode = det.value("mode", "");
  if (mode == "resonant-with-F") {
    spec.detuning_mode = DetuningMode::resonant_with_f;
    spec.resonant_f = half_from(det, "F");
  } else if (mode == "explicit") {
    spec.detuning_mode = DetuningMode::explicit_delta;
    spec.explicit_delta_mhz = num_from(det, "delta_MHz", 0.0, true);
  } else {
    throw config_error("scenario: detuning.mode must be 'resonant-with-F' or "
                       "'explicit', got '" + mode + "'");
  }

  if (!doc.contains("reference_transition") ||
      !doc.at("reference_transition").is_object()) {
    throw config_error("scenario: missing 'reference_transition' object");
  }
  const json& ref = doc.at("reference_transition");
  spec.reference_lower_mj = half_from(ref, "lower_m_j");
  spec.reference_upper_mj = half_from(ref, "upper_m_j");

  spec.validate();
  return spec;
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);  // bare strings stay strings
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw config_error("--set expects key.path=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const json value = parse_value(assignment.substr(eq + 1));
  json* node = &doc;
  size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw config_error("--set: empty key in '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) {
      (*node)[key] = json::object();
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace

SystemSpec load_scenario(const std::string& path) {
  return load_scenario_with_overrides(path, {});
}

SystemSpec load_scenario_with_overrides(const std::string& path,
                                        const std::vector<std::string>& sets) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open scenario file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw config_error("scenario '" + path + "': " + e.what());
  }
  for (const auto& s : sets) apply_override(doc, s);
  return spec_from(doc);
}

SystemSpec scenario_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("scenario text: ") + e.what());
  }
  return spec_from(doc);
}

std::string scenario_to_json_text(const SystemSpec& spec) {
  const auto manifold_json = [](const ManifoldSpec& m) {
    return json{{"label", m.label},
                {"J", m.j.value()},
                {"I", m.i.value()},
                {"hyperfine_A_MHz", m.hyperfine_a_mhz},
                {"base_energy_MHz", m.base_energy_mhz}};
  };
  json det;
  if (spec.detuning_mode == DetuningMode::resonant_with_f) {
    det = json{{"mode", "resonant-with-F"}, {"F", spec.resonant_f.value()}};
  } else {
    det = json{{"mode", "explicit"}, {"delta_MHz", spec.explicit_delta_mhz}};
  }
  const json doc{{"schema_version", 1},
                 {"lower", manifold_json(spec.lower)},
                 {"upper", manifold_json(spec.upper)},
                 {"polarization_q", spec.polarization_q},
                 {"detuning", det},
                 {"reference_transition",
                  json{{"lower_m_j", spec.reference_lower_mj.value()},
                       {"upper_m_j", spec.reference_upper_mj.value()}}}};
  return doc.dump(2) + "\n";
}

}  // namespace levelmix
