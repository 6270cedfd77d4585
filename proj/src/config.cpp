#include "uoi/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace uoi {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  return v.get<double>();
}

Index get_integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
  return v.get<Index>();
}

template <typename T, typename Get>
std::vector<T> get_list(const json& v, const std::string& field, Get get) {
  std::vector<T> out;
  if (v.is_array()) {
    if (v.empty()) throw ConfigError(field, "list must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(static_cast<T>(get(v[i], field + "[" + std::to_string(i) + "]")));
  } else {
    out.push_back(static_cast<T>(get(v, field)));
  }
  return out;
}

WeightProcess parse_weight(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(join(path, "kind"), "weight kind is required");
  const std::string kind = j.at("kind").get<std::string>();
  auto num = [&](const char* key) {
    if (!j.contains(key)) throw ConfigError(join(path, key), "required for kind '" + kind + "'");
    return get_number(j.at(key), join(path, key));
  };
  try {
    if (kind == "two-point") {
      reject_unknown(j, path, {"kind", "lo", "hi", "prob_hi"});
      return WeightProcess::two_point(num("lo"), num("hi"), num("prob_hi"));
    }
    if (kind == "constant") {
      reject_unknown(j, path, {"kind", "value"});
      return WeightProcess::constant(num("value"));
    }
    if (kind == "periodic-burst") {
      reject_unknown(j, path, {"kind", "base", "burst", "period", "burst_len"});
      return WeightProcess::periodic_burst(num("base"), num("burst"), get_integer(j.at("period"), join(path, "period")),
                                           get_integer(j.at("burst_len"), join(path, "burst_len")));
    }
  } catch (const InvalidParameter& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(join(path, "kind"), "unknown weight kind '" + kind + "'");
}

Reference parse_reference(const json& j, const std::string& path) {
  reject_unknown(j, path, {"kind", "level", "amplitude", "period"});
  Reference r;
  const std::string kind = j.value("kind", std::string("constant"));
  if (kind == "constant") r.kind = Reference::Kind::constant;
  else if (kind == "sinusoid") r.kind = Reference::Kind::sinusoid;
  else throw ConfigError(join(path, "kind"), "unknown reference kind '" + kind + "'");
  if (j.contains("level")) r.level = get_number(j.at("level"), join(path, "level"));
  if (j.contains("amplitude")) r.amplitude = get_number(j.at("amplitude"), join(path, "amplitude"));
  if (j.contains("period")) r.period = get_number(j.at("period"), join(path, "period"));
  return r;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::optional<Scenario> fallback) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  reject_unknown(j, "",
                 {"scenario", "horizon", "replications", "seed", "policies", "p", "sigma2", "weight", "rho", "V",
                  "n", "k", "p_min", "p_max", "terminals", "d", "window", "mini_slot_us", "cost", "q_max",
                  "q_step", "age_max", "max_iter", "a", "b", "noise_var", "reference", "thresholds",
                  "trace_slots"});
  ExperimentConfig c;
  if (j.contains("scenario")) {
    const auto s = parse_scenario(j.at("scenario").get<std::string>());
    if (!s) throw ConfigError("scenario", "unknown scenario '" + j.at("scenario").get<std::string>() + "'");
    if (fallback && *fallback != *s)
      throw ConfigError("scenario", "config scenario differs from the requested one");
    c.scenario = *s;
  } else if (fallback) {
    c.scenario = *fallback;
  } else {
    throw ConfigError("scenario", "required");
  }

  try {
    if (j.contains("horizon")) c.horizon = get_integer(j["horizon"], "horizon");
    if (j.contains("replications")) c.replications = get_integer(j["replications"], "replications");
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) throw ConfigError("seed", "expected an integer");
      c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("policies")) {
      if (!j["policies"].is_array()) throw ConfigError("policies", "expected a list of names");
      for (const auto& p : j["policies"]) c.policies.push_back(p.get<std::string>());
    }
    if (j.contains("p")) c.p = get_number(j["p"], "p");
    if (j.contains("sigma2")) c.sigma2 = get_number(j["sigma2"], "sigma2");
    if (j.contains("weight")) c.weight = parse_weight(j["weight"], "weight");
    if (j.contains("rho")) c.rho = get_list<double>(j["rho"], "rho", get_number);
    if (j.contains("V")) c.v = get_list<double>(j["V"], "V", get_number);
    if (j.contains("n")) c.n = get_list<Index>(j["n"], "n", get_integer);
    if (j.contains("k")) c.k = static_cast<int>(get_integer(j["k"], "k"));
    if (j.contains("p_min")) c.p_min = get_number(j["p_min"], "p_min");
    if (j.contains("p_max")) c.p_max = get_number(j["p_max"], "p_max");
    if (j.contains("terminals")) {
      if (!j["terminals"].is_array()) throw ConfigError("terminals", "expected a list");
      for (std::size_t i = 0; i < j["terminals"].size(); ++i) {
        const auto& t = j["terminals"][i];
        const std::string path = "terminals[" + std::to_string(i) + "]";
        reject_unknown(t, path, {"p", "sigma2", "omega_bar"});
        TerminalParams tp;
        tp.id = static_cast<Index>(i);
        if (t.contains("p")) tp.p = get_number(t["p"], path + ".p");
        if (t.contains("sigma2")) tp.sigma2 = get_number(t["sigma2"], path + ".sigma2");
        if (t.contains("omega_bar")) tp.omega_bar = get_number(t["omega_bar"], path + ".omega_bar");
        c.terminals.push_back(tp);
      }
    }
    if (j.contains("d")) c.d = get_list<double>(j["d"], "d", get_number);
    if (j.contains("window")) c.window = get_list<int>(j["window"], "window", get_integer);
    if (j.contains("mini_slot_us")) c.mini_slot_us = get_number(j["mini_slot_us"], "mini_slot_us");
    if (j.contains("cost")) {
      const std::string cost = j["cost"].get<std::string>();
      if (cost == "uoi") c.cost = CostKind::uoi;
      else if (cost == "aoi") c.cost = CostKind::aoi;
      else throw ConfigError("cost", "expected 'uoi' or 'aoi'");
    }
    if (j.contains("q_max")) c.q_max = get_number(j["q_max"], "q_max");
    if (j.contains("q_step")) c.q_step = get_number(j["q_step"], "q_step");
    if (j.contains("age_max")) c.age_max = get_integer(j["age_max"], "age_max");
    if (j.contains("max_iter")) c.max_iter = static_cast<int>(get_integer(j["max_iter"], "max_iter"));
    if (j.contains("a")) c.a = get_number(j["a"], "a");
    if (j.contains("b")) c.b = get_number(j["b"], "b");
    if (j.contains("noise_var")) c.noise_var = get_number(j["noise_var"], "noise_var");
    if (j.contains("reference")) c.reference = parse_reference(j["reference"], "reference");
    if (j.contains("thresholds")) {
      if (!j["thresholds"].is_array()) throw ConfigError("thresholds", "expected a list");
      c.thresholds.by_weight.clear();
      for (std::size_t i = 0; i < j["thresholds"].size(); ++i) {
        const auto& t = j["thresholds"][i];
        const std::string path = "thresholds[" + std::to_string(i) + "]";
        reject_unknown(t, path, {"weight", "bound"});
        if (!t.contains("weight") || !t.contains("bound")) throw ConfigError(path, "needs weight and bound");
        c.thresholds.by_weight.emplace_back(get_number(t["weight"], path + ".weight"),
                                            get_number(t["bound"], path + ".bound"));
      }
    }
    if (j.contains("trace_slots")) c.trace_slots = get_integer(j["trace_slots"], "trace_slots");
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("type error: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, std::optional<Scenario> fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback);
}

}  // namespace uoi
