#ifndef PROUD_HARNESS_EXPERIMENT_HPP_
#define PROUD_HARNESS_EXPERIMENT_HPP_

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "proud/harness/config.hpp"
#include "proud/harness/format.hpp"
#include "proud/metrics.hpp"
#include "proud/sampler.hpp"

namespace proud::harness {

namespace fs = std::filesystem;

struct RunOutcome {
  Population population;
  MetricReport report;
  int objectives = 0;
  double seconds = 0.0;
};

/// Builds the problem and runs the sampler; no files are touched.
inline RunOutcome execute(const RunConfig& cfg) {
  const Problem p = build_problem(cfg);
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);
  RunOutcome out;
  out.population = run(cfg.n_particles, p.model, p.schedule, p.objectives, p.guidance, p.sampler, rng);
  out.report = report(out.population, p.objectives, p.model, p.metrics);
  out.objectives = p.objectives.size();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline std::string samples_csv(const RunOutcome& r, const GaussianMixtureManifold& model) {
  const auto& pop = r.population;
  std::ostringstream s;
  s << "particle";
  for (int k = 0; k < pop.dim(); ++k) s << ",x" << k + 1;
  for (int k = 0; k < pop.values.rows(); ++k) s << ",f" << k + 1;
  s << ",log_likelihood\n";
  for (int i = 0; i < pop.size(); ++i) {
    s << i;
    for (int k = 0; k < pop.dim(); ++k) s << ',' << fmt(pop.positions(k, i));
    for (int k = 0; k < pop.values.rows(); ++k) s << ',' << fmt(pop.values(k, i));
    s << ',' << fmt(log_density(model, pop.positions.col(i))) << '\n';
  }
  return s.str();
}

inline std::string metrics_csv(const RunConfig& cfg, const RunOutcome& r) {
  const auto& m = r.report;
  std::vector<std::pair<std::string, std::string>> cols{
      {"method", std::string(method_name(cfg.guidance.method))},
      {"seed", std::to_string(cfg.seed)},
      {"m", std::to_string(r.objectives)},
      {"n_points", std::to_string(m.n_points)},
      {"hv", fmt(m.hv)},
      {"hv_std_error", fmt(m.hv_std_error)},
      {"emd", m.emd ? fmt(*m.emd) : ""},
      {"mean_front_distance", m.mean_front_distance ? fmt(*m.mean_front_distance) : ""},
      {"mean_log_likelihood", fmt(m.mean_log_likelihood)},
      {"pct_stationary", fmt(m.pct_stationary)},
      {"spread", fmt(m.spread)},
      {"n_nondominated", std::to_string(m.n_nondominated)},
      {"fallbacks", std::to_string(r.population.fallbacks)},
  };
  std::string ref;
  for (Eigen::Index k = 0; k < m.hv_reference.size(); ++k) ref += (k ? ";" : "") + fmt(m.hv_reference[k]);
  cols.emplace_back("hv_reference", ref);
  for (Eigen::Index k = 0; k < m.mean_objectives.size(); ++k) {
    cols.emplace_back("mean_f" + std::to_string(k + 1), fmt(m.mean_objectives[k]));
  }
  std::string head, row;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    head += (i ? "," : "") + cols[i].first;
    row += (i ? "," : "") + cols[i].second;
  }
  return head + "\n" + row + "\n";
}

inline std::string trace_jsonl(const Population& pop) {
  std::string out;
  for (const auto& t : pop.trace) {
    out += "{\"step\":" + std::to_string(t.step) + ",\"particle\":" + std::to_string(t.particle) +
           ",\"mgd_norm\":" + fmt(t.mgd_norm) + ",\"branch\":\"" + (std::isfinite(t.phi) ? "constrained" : "free") +
           "\",\"phi\":" + (std::isfinite(t.phi) ? fmt(t.phi) : "null") + ",\"lambda\":[";
    for (Eigen::Index k = 0; k < t.lambda.size(); ++k) out += (k ? "," : "") + fmt(t.lambda[k]);
    out += "],\"fallback\":" + std::string(t.fallback ? "true" : "false") + "}\n";
  }
  return out;
}

/// Runs one configuration and persists samples.csv, metrics.csv, config.json and,
/// when tracing, trace.jsonl under `dir`.
inline RunOutcome run_experiment(const RunConfig& cfg, const fs::path& dir) {
  RunOutcome out = execute(cfg);
  const Problem p = build_problem(cfg);
  fs::create_directories(dir);
  write_atomic(dir / "config.json", to_json(cfg).dump(2) + "\n");
  write_atomic(dir / "samples.csv", samples_csv(out, p.model));
  write_atomic(dir / "metrics.csv", metrics_csv(cfg, out));
  if (cfg.trace) write_atomic(dir / "trace.jsonl", trace_jsonl(out.population));
  return out;
}

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed of grid point `index`: mix64(seed ^ mix64(index)), reduced to 63 bits
/// so it stays a valid nonnegative config integer.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index)) >> 1;
}

struct SweepPoint {
  std::string name;
  json config;
  std::vector<std::pair<std::string, json>> params;
};

/// Expands {"base": config, "grid": {"/json/pointer": [values...]}, "replicates": r}
/// into the Cartesian product of grid values times replicates. Grid keys are applied
/// in sorted order; the last key varies fastest.
inline std::vector<SweepPoint> expand_sweep(const json& sweep) {
  if (!sweep.is_object()) throw ConfigError("<root>", "expected an object");
  detail::reject_unknown(sweep, "", {"base", "grid", "replicates", "derive_seeds"});
  if (!sweep.contains("base")) throw ConfigError("base", "required");
  const json& base = sweep.at("base");
  parse_config(base);
  int replicates = 1;
  bool derive = true;
  detail::optional_key(sweep, "", "replicates", [&](const json& v, const std::string& k) {
    replicates = static_cast<int>(detail::integer(v, k));
    if (replicates < 1) throw ConfigError(k, "must be >= 1");
  });
  detail::optional_key(sweep, "", "derive_seeds", [&](const json& v, const std::string& k) {
    derive = detail::boolean(v, k);
  });
  std::vector<std::pair<std::string, std::vector<json>>> axes;
  detail::optional_key(sweep, "", "grid", [&](const json& g, const std::string& k) {
    if (!g.is_object()) throw ConfigError(k, "expected an object of pointer -> values");
    for (auto it = g.begin(); it != g.end(); ++it) {
      const std::string key = detail::join(k, it.key());
      if (!it.value().is_array() || it.value().empty()) throw ConfigError(key, "expected a nonempty array");
      try {
        (void)json::json_pointer(it.key());
      } catch (const json::exception&) {
        throw ConfigError(key, "grid keys must be JSON pointers such as /guidance/alpha");
      }
      axes.emplace_back(it.key(), std::vector<json>(it.value().begin(), it.value().end()));
    }
  });
  std::size_t total = static_cast<std::size_t>(replicates);
  for (const auto& a : axes) total *= a.second.size();

  const std::uint64_t base_seed = base.at("seed").get<std::uint64_t>();
  std::vector<SweepPoint> points;
  for (std::size_t idx = 0; idx < total; ++idx) {
    SweepPoint sp;
    sp.config = base;
    std::size_t rest = idx / static_cast<std::size_t>(replicates);
    for (auto a = axes.rbegin(); a != axes.rend(); ++a) {
      const json& v = a->second[rest % a->second.size()];
      rest /= a->second.size();
      sp.config[json::json_pointer(a->first)] = v;
      sp.params.emplace(sp.params.begin(), a->first, v);
    }
    if (derive) sp.config["seed"] = child_seed(base_seed, idx);
    sp.config.erase("output_dir");
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%04zu", idx);
    sp.name = buf;
    try {
      parse_config(sp.config);
    } catch (const ConfigError& e) {
      throw ConfigError(sp.name + "." + e.key(), e.what());
    }
    points.push_back(std::move(sp));
  }
  return points;
}

/// Runs every sweep point under `dir/run_NNNN`, `parallel` at a time, and writes
/// dir/sweep.csv mapping run names to seeds and grid values.
inline std::vector<fs::path> run_sweep(const json& sweep, const fs::path& dir, int parallel) {
  const auto points = expand_sweep(sweep);
  fs::create_directories(dir);
  std::vector<fs::path> dirs;
  for (const auto& p : points) dirs.push_back(dir / p.name);

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        run_experiment(parse_config(points[i].config), dirs[i]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first_error.empty()) first_error = points[i].name + ": " + e.what();
      }
    }
  };
  const int workers = std::clamp(parallel, 1, static_cast<int>(std::max<std::size_t>(points.size(), 1)));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (!first_error.empty()) throw std::runtime_error(first_error);

  std::string index = "run,seed";
  if (!points.empty()) {
    for (const auto& kv : points.front().params) index += "," + kv.first;
  }
  index += "\n";
  for (const auto& p : points) {
    index += p.name + "," + std::to_string(p.config.at("seed").get<std::uint64_t>());
    for (const auto& kv : p.params) {
      std::string v = kv.second.dump();
      std::replace(v.begin(), v.end(), ',', ';');
      index += "," + v;
    }
    index += "\n";
  }
  write_atomic(dir / "sweep.csv", index);
  return dirs;
}

struct CompareRow {
  std::string run;
  std::string method;
  std::string seed;
  int m = 0;
  double hv = 0.0;
  std::string emd;
  double mean_log_likelihood = 0.0;
  double pct_stationary = 0.0;
};

inline std::map<std::string, std::string> read_metrics(const fs::path& run_dir) {
  const fs::path file = run_dir / "metrics.csv";
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing metrics file '" + file.string() + "'");
  std::string head, row;
  std::getline(in, head);
  std::getline(in, row);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  const auto keys = split(head), vals = split(row);
  if (keys.empty() || keys.size() != vals.size()) throw std::runtime_error("malformed metrics file '" + file.string() + "'");
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] = vals[i];
  return out;
}

/// Flat table of per-run rows followed by mean/std rows per method.
inline std::string compare(const std::vector<fs::path>& run_dirs) {
  if (run_dirs.empty()) throw std::invalid_argument("compare needs at least one run directory");
  std::vector<CompareRow> rows;
  for (const auto& d : run_dirs) {
    const auto m = read_metrics(d);
    auto need = [&](const char* k) -> const std::string& {
      auto it = m.find(k);
      if (it == m.end()) throw std::runtime_error("metrics file in '" + d.string() + "' lacks column " + k);
      return it->second;
    };
    CompareRow r;
    r.run = d.filename().string();
    if (r.run.empty()) r.run = d.parent_path().filename().string();
    r.method = need("method");
    r.seed = need("seed");
    r.m = std::stoi(need("m"));
    r.hv = std::stod(need("hv"));
    r.emd = need("emd");
    r.mean_log_likelihood = std::stod(need("mean_log_likelihood"));
    r.pct_stationary = std::stod(need("pct_stationary"));
    if (!rows.empty() && rows.front().m != r.m) {
      throw std::runtime_error("runs have different objective counts (" + std::to_string(rows.front().m) + " vs " +
                               std::to_string(r.m) + "); metrics are not comparable");
    }
    rows.push_back(std::move(r));
  }

  std::string out = "run,method,seed,hv,emd,mean_log_likelihood,pct_stationary\n";
  for (const auto& r : rows) {
    out += r.run + "," + r.method + "," + r.seed + "," + fmt(r.hv) + "," + r.emd + "," + fmt(r.mean_log_likelihood) +
           "," + fmt(r.pct_stationary) + "\n";
  }

  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return fmt(mean) + "±" + fmt(sd);
  };
  out += "\nmethod,runs,hv,emd,mean_log_likelihood,pct_stationary\n";
  for (const auto& name : methods) {
    std::vector<double> hv, emd, ll, st;
    for (const auto& r : rows) {
      if (r.method != name) continue;
      hv.push_back(r.hv);
      if (!r.emd.empty()) emd.push_back(std::stod(r.emd));
      ll.push_back(r.mean_log_likelihood);
      st.push_back(r.pct_stationary);
    }
    out += name + "," + std::to_string(hv.size()) + "," + stats(hv) + "," + (emd.empty() ? "" : stats(emd)) + "," +
           stats(ll) + "," + stats(st) + "\n";
  }
  return out;
}

}  // namespace proud::harness

#endif  // PROUD_HARNESS_EXPERIMENT_HPP_
