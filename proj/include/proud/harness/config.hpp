#ifndef PROUD_HARNESS_CONFIG_HPP_
#define PROUD_HARNESS_CONFIG_HPP_

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "proud/error.hpp"
#include "proud/guidance.hpp"
#include "proud/manifold.hpp"
#include "proud/metrics.hpp"
#include "proud/objectives.hpp"
#include "proud/sampler.hpp"
#include "proud/schedule.hpp"

namespace proud::harness {

using json = nlohmann::json;

struct AnchorSpec {
  std::vector<double> anchor;
  std::vector<int> mask;  // 0-based; empty means every coordinate
};

struct RunConfig {
  std::uint64_t seed = 0;
  int n_particles = 512;
  int dims = 2;
  int t_steps = 1000;
  int threads = 1;
  std::string output_dir;

  // Data manifold.
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<double> stdevs;

  // Objectives: a named benchmark ("two_anchor", "three_anchor") or explicit anchors.
  std::string benchmark;
  std::vector<AnchorSpec> anchors;
  std::string front = "auto";  // "auto", "segment", "triangle", "none"

  double beta_min = 1e-4;
  double beta_max = 0.02;
  double step_scale = 1.0;
  UpdateForm update = UpdateForm::kScoreScaled;

  GuidanceConfig guidance;

  std::vector<double> reference;
  bool emd = true;
  bool trace = false;
  int emd_front_points = 2000;
  double stationary_tol = -1.0;  // negative: twice the guidance threshold
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError(join(path, it.key()), "unknown key");
  }
}

inline const json& object_at(const json& parent, const std::string& path, const char* key) {
  const json& v = parent.at(key);
  if (!v.is_object()) throw ConfigError(join(path, key), "expected an object");
  return v;
}

inline double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

inline long long integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<long long>();
}

inline bool boolean(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

inline std::string string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<int> integers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(static_cast<int>(integer(v[i], key + "[" + std::to_string(i) + "]")));
  }
  return out;
}

template <class Fn>
void optional_key(const json& obj, const std::string& path, const char* key, Fn&& fn) {
  if (obj.contains(key)) fn(obj.at(key), join(path, key));
}

inline std::string update_name(UpdateForm f) { return f == UpdateForm::kScoreScaled ? "score_scaled" : "literal"; }

}  // namespace detail

/// Parses and validates a run configuration. Every failure names the offending key.
inline RunConfig parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  reject_unknown(j, "", {"seed", "n_particles", "dims", "t_steps", "threads", "output_dir", "manifold",
                         "objectives", "schedule", "guidance", "metrics"});
  RunConfig c;
  if (!j.contains("seed")) throw ConfigError("seed", "required (no implicit entropy)");
  {
    const long long s = integer(j.at("seed"), "seed");
    if (s < 0) throw ConfigError("seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  optional_key(j, "", "n_particles", [&](const json& v, const std::string& k) {
    c.n_particles = static_cast<int>(integer(v, k));
    if (c.n_particles < 1) throw ConfigError(k, "must be >= 1");
  });
  optional_key(j, "", "dims", [&](const json& v, const std::string& k) {
    c.dims = static_cast<int>(integer(v, k));
    if (c.dims < 1) throw ConfigError(k, "must be >= 1");
  });
  optional_key(j, "", "t_steps", [&](const json& v, const std::string& k) {
    c.t_steps = static_cast<int>(integer(v, k));
    if (c.t_steps < 1) throw ConfigError(k, "must be >= 1");
  });
  optional_key(j, "", "threads", [&](const json& v, const std::string& k) {
    c.threads = static_cast<int>(integer(v, k));
    if (c.threads < 1) throw ConfigError(k, "must be >= 1");
  });
  optional_key(j, "", "output_dir", [&](const json& v, const std::string& k) { c.output_dir = string(v, k); });

  if (!j.contains("manifold")) throw ConfigError("manifold", "required");
  {
    const json& m = object_at(j, "", "manifold");
    reject_unknown(m, "manifold", {"weights", "means", "stdevs"});
    for (const char* key : {"weights", "means", "stdevs"}) {
      if (!m.contains(key)) throw ConfigError(join("manifold", key), "required");
    }
    c.weights = numbers(m.at("weights"), "manifold.weights");
    c.stdevs = numbers(m.at("stdevs"), "manifold.stdevs");
    const json& means = m.at("means");
    if (!means.is_array()) throw ConfigError("manifold.means", "expected an array of vectors");
    for (std::size_t i = 0; i < means.size(); ++i) {
      const std::string k = "manifold.means[" + std::to_string(i) + "]";
      c.means.push_back(numbers(means[i], k));
      if (static_cast<int>(c.means.back().size()) != c.dims) throw ConfigError(k, "length must equal dims");
    }
    if (c.weights.empty()) throw ConfigError("manifold.weights", "needs at least one component");
    if (c.means.size() != c.weights.size()) throw ConfigError("manifold.means", "count must match weights");
    if (c.stdevs.size() != c.weights.size()) throw ConfigError("manifold.stdevs", "count must match weights");
    double total = 0.0;
    for (double w : c.weights) {
      if (!(w > 0.0)) throw ConfigError("manifold.weights", "must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("manifold.weights", "must sum to 1");
    for (double s : c.stdevs) {
      if (!(s > 0.0)) throw ConfigError("manifold.stdevs", "must be positive");
    }
  }

  if (!j.contains("objectives")) throw ConfigError("objectives", "required");
  {
    const json& o = object_at(j, "", "objectives");
    reject_unknown(o, "objectives", {"benchmark", "anchors", "front"});
    optional_key(o, "objectives", "benchmark", [&](const json& v, const std::string& k) {
      c.benchmark = string(v, k);
      if (c.benchmark != "two_anchor" && c.benchmark != "three_anchor") {
        throw ConfigError(k, "expected \"two_anchor\" or \"three_anchor\"");
      }
    });
    optional_key(o, "objectives", "anchors", [&](const json& v, const std::string& k) {
      if (!v.is_array() || v.empty()) throw ConfigError(k, "expected a nonempty array");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string ki = k + "[" + std::to_string(i) + "]";
        if (!v[i].is_object()) throw ConfigError(ki, "expected an object");
        reject_unknown(v[i], ki, {"anchor", "mask"});
        if (!v[i].contains("anchor")) throw ConfigError(join(ki, "anchor"), "required");
        AnchorSpec a;
        a.anchor = numbers(v[i].at("anchor"), join(ki, "anchor"));
        optional_key(v[i], ki, "mask", [&](const json& mv, const std::string& mk) { a.mask = integers(mv, mk); });
        const std::size_t want = a.mask.empty() ? static_cast<std::size_t>(c.dims) : a.mask.size();
        if (a.anchor.size() != want) throw ConfigError(join(ki, "anchor"), "length must equal mask size (or dims)");
        for (int idx : a.mask) {
          if (idx < 0 || idx >= c.dims) throw ConfigError(join(ki, "mask"), "index out of range");
        }
        std::set<int> uniq(a.mask.begin(), a.mask.end());
        if (uniq.size() != a.mask.size()) throw ConfigError(join(ki, "mask"), "indices must be unique");
        c.anchors.push_back(std::move(a));
      }
    });
    optional_key(o, "objectives", "front", [&](const json& v, const std::string& k) {
      c.front = string(v, k);
      if (c.front != "auto" && c.front != "segment" && c.front != "triangle" && c.front != "none") {
        throw ConfigError(k, "expected auto, segment, triangle or none");
      }
    });
    if (c.benchmark.empty() == c.anchors.empty()) {
      throw ConfigError("objectives", "give exactly one of \"benchmark\" or \"anchors\"");
    }
  }

  optional_key(j, "", "schedule", [&](const json& s, const std::string& path) {
    if (!s.is_object()) throw ConfigError(path, "expected an object");
    reject_unknown(s, path, {"beta_min", "beta_max", "step_scale", "update"});
    optional_key(s, path, "beta_min", [&](const json& v, const std::string& k) { c.beta_min = number(v, k); });
    optional_key(s, path, "beta_max", [&](const json& v, const std::string& k) { c.beta_max = number(v, k); });
    optional_key(s, path, "step_scale", [&](const json& v, const std::string& k) {
      c.step_scale = number(v, k);
      if (!(c.step_scale > 0.0)) throw ConfigError(k, "must be > 0");
    });
    optional_key(s, path, "update", [&](const json& v, const std::string& k) {
      const std::string u = string(v, k);
      if (u == "score_scaled") {
        c.update = UpdateForm::kScoreScaled;
      } else if (u == "literal") {
        c.update = UpdateForm::kLiteral;
      } else {
        throw ConfigError(k, "expected \"score_scaled\" or \"literal\"");
      }
    });
  });
  if (!(c.beta_min > 0.0)) throw ConfigError("schedule.beta_min", "must be > 0");
  if (!(c.beta_max < 1.0)) throw ConfigError("schedule.beta_max", "must be < 1");
  if (c.t_steps > 1 ? !(c.beta_min < c.beta_max) : !(c.beta_min <= c.beta_max)) {
    throw ConfigError("schedule.beta_max", "must exceed beta_min");
  }

  optional_key(j, "", "guidance", [&](const json& g, const std::string& path) {
    if (!g.is_object()) throw ConfigError(path, "expected an object");
    reject_unknown(g, path, {"method", "alpha", "e_threshold", "gamma", "fixed_lambda", "single_weights",
                             "diversity_clip"});
    auto& gc = c.guidance;
    optional_key(g, path, "method", [&](const json& v, const std::string& k) {
      const auto m = parse_method(string(v, k));
      if (!m) throw ConfigError(k, "expected PROUD, DM_MMGD, DM_SINGLE, MPLUS1_MGD or M_MGD");
      gc.method = *m;
    });
    optional_key(g, path, "alpha", [&](const json& v, const std::string& k) {
      gc.alpha = number(v, k);
      if (!(gc.alpha > 0.0)) throw ConfigError(k, "must be > 0");
    });
    optional_key(g, path, "e_threshold", [&](const json& v, const std::string& k) {
      gc.e_threshold = number(v, k);
      if (!(gc.e_threshold > 0.0)) throw ConfigError(k, "must be > 0");
    });
    optional_key(g, path, "gamma", [&](const json& v, const std::string& k) {
      gc.gamma = number(v, k);
      if (!(gc.gamma >= 0.0)) throw ConfigError(k, "must be >= 0");
    });
    optional_key(g, path, "fixed_lambda", [&](const json& v, const std::string& k) {
      gc.fixed_lambda = number(v, k);
      if (!(gc.fixed_lambda >= 0.0)) throw ConfigError(k, "must be >= 0");
    });
    optional_key(g, path, "single_weights", [&](const json& v, const std::string& k) {
      gc.single_weights = numbers(v, k);
      double s = 0.0;
      for (double w : gc.single_weights) {
        if (!(w >= 0.0)) throw ConfigError(k, "weights must be nonnegative");
        s += w;
      }
      if (std::abs(s - 1.0) > 1e-9) throw ConfigError(k, "weights must sum to 1");
    });
    optional_key(g, path, "diversity_clip", [&](const json& v, const std::string& k) {
      gc.diversity_clip = number(v, k);
      if (!(gc.diversity_clip >= 0.0)) throw ConfigError(k, "must be >= 0");
    });
  });

  if (!j.contains("metrics")) throw ConfigError("metrics", "required");
  {
    const json& m = object_at(j, "", "metrics");
    reject_unknown(m, "metrics", {"reference", "emd", "trace", "emd_front_points", "stationary_tol"});
    if (!m.contains("reference")) throw ConfigError("metrics.reference", "required");
    c.reference = numbers(m.at("reference"), "metrics.reference");
    optional_key(m, "metrics", "emd", [&](const json& v, const std::string& k) { c.emd = boolean(v, k); });
    optional_key(m, "metrics", "trace", [&](const json& v, const std::string& k) { c.trace = boolean(v, k); });
    optional_key(m, "metrics", "emd_front_points", [&](const json& v, const std::string& k) {
      c.emd_front_points = static_cast<int>(integer(v, k));
      if (c.emd_front_points < 1 || c.emd_front_points > 2000) throw ConfigError(k, "must be in 1..2000");
    });
    optional_key(m, "metrics", "stationary_tol", [&](const json& v, const std::string& k) {
      c.stationary_tol = number(v, k);
      if (!(c.stationary_tol > 0.0)) throw ConfigError(k, "must be > 0");
    });
  }

  const std::size_t m = c.benchmark == "two_anchor" ? 2 : c.benchmark == "three_anchor" ? 3 : c.anchors.size();
  if (c.reference.size() != m) throw ConfigError("metrics.reference", "length must equal the number of objectives");
  if (c.guidance.method == Method::DM_SINGLE && !c.guidance.single_weights.empty() &&
      c.guidance.single_weights.size() != m) {
    throw ConfigError("guidance.single_weights", "length must equal the number of objectives");
  }
  return c;
}

/// Effective configuration, with every default spelled out.
inline json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["n_particles"] = c.n_particles;
  j["dims"] = c.dims;
  j["t_steps"] = c.t_steps;
  j["threads"] = c.threads;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  j["manifold"] = {{"weights", c.weights}, {"means", c.means}, {"stdevs", c.stdevs}};
  json o = json::object();
  if (!c.benchmark.empty()) {
    o["benchmark"] = c.benchmark;
  } else {
    json arr = json::array();
    for (const auto& a : c.anchors) {
      json e = {{"anchor", a.anchor}};
      if (!a.mask.empty()) e["mask"] = a.mask;
      arr.push_back(e);
    }
    o["anchors"] = arr;
  }
  o["front"] = c.front;
  j["objectives"] = o;
  j["schedule"] = {{"beta_min", c.beta_min},
                   {"beta_max", c.beta_max},
                   {"step_scale", c.step_scale},
                   {"update", detail::update_name(c.update)}};
  json g = {{"method", std::string(method_name(c.guidance.method))},
            {"alpha", c.guidance.alpha},
            {"e_threshold", c.guidance.e_threshold},
            {"gamma", c.guidance.gamma},
            {"fixed_lambda", c.guidance.fixed_lambda},
            {"diversity_clip", c.guidance.diversity_clip}};
  if (!c.guidance.single_weights.empty()) g["single_weights"] = c.guidance.single_weights;
  j["guidance"] = g;
  json m = {{"reference", c.reference},
            {"emd", c.emd},
            {"trace", c.trace},
            {"emd_front_points", c.emd_front_points}};
  if (c.stationary_tol > 0.0) m["stationary_tol"] = c.stationary_tol;
  j["metrics"] = m;
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON in '") + path + "': " + e.what());
  }
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

/// Runtime objects built from a configuration.
struct Problem {
  GaussianMixtureManifold model;
  NoiseSchedule schedule;
  ObjectiveSet objectives;
  MetricsSpec metrics;
  SamplerOptions sampler;
  GuidanceConfig guidance;
};

inline ObjectiveSet build_objectives(const RunConfig& c) {
  if (c.benchmark == "two_anchor") {
    ObjectiveSet s = two_anchor_benchmark(c.dims);
    return c.front == "none" ? ObjectiveSet(c.dims, s.objectives()) : s;
  }
  if (c.benchmark == "three_anchor") {
    ObjectiveSet s = three_anchor_benchmark(c.dims);
    return c.front == "none" ? ObjectiveSet(c.dims, s.objectives()) : s;
  }
  std::vector<AnchorObjective> objs;
  for (const auto& a : c.anchors) {
    objs.push_back({Eigen::Map<const Eigen::VectorXd>(a.anchor.data(), static_cast<Eigen::Index>(a.anchor.size())),
                    a.mask.empty() ? full_mask(c.dims) : a.mask});
  }
  const bool same_mask = std::all_of(objs.begin(), objs.end(), [&](const auto& o) { return o.mask == objs[0].mask; });
  std::string front = c.front;
  if (front == "auto") front = !same_mask ? "none" : objs.size() == 2 ? "segment" : objs.size() == 3 ? "triangle" : "none";
  if (front == "segment") {
    if (objs.size() != 2 || !same_mask) throw ConfigError("objectives.front", "segment needs two anchors on one mask");
    return two_anchor_set(c.dims, objs[0].anchor, objs[1].anchor, objs[0].mask);
  }
  if (front == "triangle") {
    if (objs.size() != 3 || !same_mask) throw ConfigError("objectives.front", "triangle needs three anchors on one mask");
    return three_anchor_set(c.dims, {objs[0].anchor, objs[1].anchor, objs[2].anchor}, objs[0].mask);
  }
  std::vector<Objective> list(objs.begin(), objs.end());
  return ObjectiveSet(c.dims, std::move(list));
}

inline Problem build_problem(const RunConfig& c) {
  std::vector<Eigen::VectorXd> means;
  for (const auto& m : c.means) means.push_back(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())));
  MetricsSpec ms;
  ms.reference = Eigen::Map<const Eigen::VectorXd>(c.reference.data(), static_cast<Eigen::Index>(c.reference.size()));
  ms.emd = c.emd;
  ms.emd_front_points = c.emd_front_points;
  ms.stationary_tol = c.stationary_tol > 0.0 ? c.stationary_tol : 2.0 * c.guidance.e_threshold;
  SamplerOptions so;
  so.form = c.update;
  so.record_trace = c.trace;
  so.threads = c.threads;
  return Problem{GaussianMixtureManifold::create(c.weights, std::move(means), c.stdevs),
                 make_linear_schedule(c.t_steps, c.beta_min, c.beta_max, c.step_scale), build_objectives(c), ms, so,
                 c.guidance};
}

}  // namespace proud::harness

#endif  // PROUD_HARNESS_CONFIG_HPP_
