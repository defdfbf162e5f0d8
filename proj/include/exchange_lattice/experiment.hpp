#pragma once

// JSON-configured experiment runner behind the exchange-lattice CLI.
//
// Config layout:
//   {"model": {"n_sites": 8, "epsilon": 1.0,
//              "kernel": {"type": "beta", "d": 3},
//              "rate": {"type": "constant", "lambda": 1.0}},
//    "experiment": {"type": "gap_scan", "n_list": [4, 8, 16], ...},
//    "seed": 42, "output_dir": "out"}

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kernels.hpp"
#include "measures.hpp"
#include "spectral.hpp"
#include "state_space.hpp"
#include "statistics.hpp"

#ifndef EXCHANGE_LATTICE_VERSION
#define EXCHANGE_LATTICE_VERSION "0.0.0"
#endif

namespace exchange_lattice {

using nlohmann::json;

/// Invalid or incomplete configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentType { contraction, gap_scan, stationarity, reversibility, minorization, eigen };

struct ModelConfig {
  std::size_t n_sites = 2;
  double epsilon = 1.0;
  Model model;
  json kernel_json;
  json rate_json;
};

struct ExperimentParams {
  ExperimentType type = ExperimentType::eigen;
  std::size_t replicas = 10'000;
  std::optional<double> horizon;
  std::size_t n_samples = 100;
  std::vector<std::size_t> n_list;
  double horizon_factor = 1.0;
  std::size_t rayleigh_samples = 20'000;
  std::size_t inner_alpha_draws = 4;
  std::optional<double> dim_d;
  std::size_t grid_size = 500;
};

struct ExperimentConfig {
  ModelConfig model;
  ExperimentParams experiment;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  json canonical;  // everything except output_dir, used for the config hash
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = EXCHANGE_LATTICE_VERSION;
  double wall_time_s = 0.0;
  std::vector<std::string> outputs;
};

inline void to_json(json& j, const RunManifest& m) {
  j = json{{"config_hash", m.config_hash},
           {"tool_version", m.tool_version},
           {"wall_time_s", m.wall_time_s},
           {"outputs", m.outputs}};
}

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "' in " + where);
  }
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing field '" + key + "' in " + where);
  return obj.at(key);
}

inline double positive_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  const double x = v.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(what + " must be > 0");
  return x;
}

inline std::size_t positive_integer(const json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ConfigError(what + " must be a positive integer");
  }
  return v.get<std::size_t>();
}

inline AlphaKernel parse_kernel(const json& k) {
  const std::string type = require(k, "type", "kernel").is_string() ? k.at("type").get<std::string>() : "";
  if (type == "gg") {
    reject_unknown(k, {"type"}, "kernel");
    return AlphaKernel::gaspard_gilbert();
  }
  if (type == "uniform") {
    reject_unknown(k, {"type"}, "kernel");
    return AlphaKernel::uniform();
  }
  if (type == "point_half") {
    reject_unknown(k, {"type"}, "kernel");
    return AlphaKernel::point_half();
  }
  if (type == "beta") {
    reject_unknown(k, {"type", "d"}, "kernel");
    return AlphaKernel::symmetric_beta(positive_number(require(k, "d", "kernel"), "kernel.d"));
  }
  throw ConfigError("kernel.type must be one of gg, uniform, beta, point_half");
}

inline RateSpec parse_rate(const json& r, bool gg_kernel) {
  const std::string type = require(r, "type", "rate").is_string() ? r.at("type").get<std::string>() : "";
  RateSpec spec;
  if (type == "constant") {
    reject_unknown(r, {"type", "lambda", "ratio"}, "rate");
    spec.lambda_s = ConstantSumRate{positive_number(require(r, "lambda", "rate"), "rate.lambda")};
  } else if (type == "sqrt_cutoff") {
    reject_unknown(r, {"type", "lambda_min", "ratio"}, "rate");
    spec.lambda_s =
        SqrtCutoffSumRate{positive_number(require(r, "lambda_min", "rate"), "rate.lambda_min")};
  } else if (type == "sqrt") {
    reject_unknown(r, {"type", "ratio"}, "rate");
    spec.lambda_s = SqrtSumRate{};
  } else {
    throw ConfigError("rate.type must be one of constant, sqrt_cutoff, sqrt");
  }
  std::string ratio = gg_kernel ? "gg" : "unit";
  if (r.contains("ratio")) {
    if (!r.at("ratio").is_string()) throw ConfigError("rate.ratio must be a string");
    ratio = r.at("ratio").get<std::string>();
  }
  if (ratio == "gg") {
    spec.lambda_r = GaspardGilbertRatioRate{};
  } else if (ratio == "unit") {
    spec.lambda_r = UnitRatioRate{};
  } else {
    throw ConfigError("rate.ratio must be gg or unit");
  }
  return spec;
}

inline ExperimentType parse_type(const std::string& t) {
  if (t == "contraction") return ExperimentType::contraction;
  if (t == "gap_scan") return ExperimentType::gap_scan;
  if (t == "stationarity") return ExperimentType::stationarity;
  if (t == "reversibility") return ExperimentType::reversibility;
  if (t == "minorization") return ExperimentType::minorization;
  if (t == "eigen") return ExperimentType::eigen;
  throw ConfigError(
      "experiment.type must be one of contraction, gap_scan, stationarity, reversibility, "
      "minorization, eigen");
}

inline ExperimentParams parse_experiment(const json& e) {
  ExperimentParams p;
  const auto& type_json = require(e, "type", "experiment");
  if (!type_json.is_string()) throw ConfigError("experiment.type must be a string");
  p.type = parse_type(type_json.get<std::string>());
  switch (p.type) {
    case ExperimentType::contraction:
      reject_unknown(e, {"type", "replicas", "horizon", "n_samples"}, "experiment");
      p.n_samples = 50;
      break;
    case ExperimentType::gap_scan:
      reject_unknown(e, {"type", "n_list", "replicas", "n_samples", "horizon_factor",
                         "rayleigh_samples", "inner_alpha_draws", "dim_d"},
                     "experiment");
      break;
    case ExperimentType::stationarity:
      reject_unknown(e, {"type", "replicas", "horizon", "dim_d"}, "experiment");
      p.replicas = 20'000;
      p.horizon = 50.0;
      break;
    case ExperimentType::reversibility:
      reject_unknown(e, {"type", "grid_size", "dim_d"}, "experiment");
      break;
    case ExperimentType::minorization:
      reject_unknown(e, {"type", "grid_size"}, "experiment");
      p.grid_size = 1000;
      break;
    case ExperimentType::eigen:
      reject_unknown(e, {"type"}, "experiment");
      break;
  }
  if (e.contains("replicas")) p.replicas = positive_integer(e["replicas"], "experiment.replicas");
  if (e.contains("horizon")) p.horizon = positive_number(e["horizon"], "experiment.horizon");
  if (e.contains("n_samples")) p.n_samples = positive_integer(e["n_samples"], "experiment.n_samples");
  if (e.contains("horizon_factor")) {
    p.horizon_factor = positive_number(e["horizon_factor"], "experiment.horizon_factor");
  }
  if (e.contains("rayleigh_samples")) {
    p.rayleigh_samples = positive_integer(e["rayleigh_samples"], "experiment.rayleigh_samples");
  }
  if (e.contains("inner_alpha_draws")) {
    p.inner_alpha_draws = positive_integer(e["inner_alpha_draws"], "experiment.inner_alpha_draws");
  }
  if (e.contains("dim_d")) p.dim_d = positive_number(e["dim_d"], "experiment.dim_d");
  if (e.contains("grid_size")) p.grid_size = positive_integer(e["grid_size"], "experiment.grid_size");
  if (p.type == ExperimentType::gap_scan) {
    const auto& list = require(e, "n_list", "experiment");
    if (!list.is_array() || list.size() < 3) {
      throw ConfigError("experiment.n_list must be an array of at least 3 sizes");
    }
    for (const auto& n : list) {
      const std::size_t v = positive_integer(n, "experiment.n_list entry");
      if (v < 2) throw ConfigError("experiment.n_list entries must be >= 2");
      p.n_list.push_back(v);
    }
  }
  if (p.type == ExperimentType::minorization && p.grid_size < 100) {
    throw ConfigError("experiment.grid_size must be >= 100 for minorization");
  }
  if (p.type == ExperimentType::reversibility && p.grid_size < 2) {
    throw ConfigError("experiment.grid_size must be >= 2");
  }
  if (p.n_samples < 2) throw ConfigError("experiment.n_samples must be >= 2");
  if (p.replicas < 2) throw ConfigError("experiment.replicas must be >= 2");
  return p;
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace detail

/// Validates the whole document; throws ConfigError on the first problem.
inline ExperimentConfig parse_config(const json& doc) {
  detail::reject_unknown(doc, {"model", "experiment", "seed", "output_dir"}, "config");
  ExperimentConfig cfg;
  const auto& m = detail::require(doc, "model", "config");
  detail::reject_unknown(m, {"n_sites", "epsilon", "kernel", "rate"}, "model");
  cfg.model.n_sites = detail::positive_integer(detail::require(m, "n_sites", "model"), "model.n_sites");
  if (cfg.model.n_sites < 2) throw ConfigError("model.n_sites must be >= 2");
  cfg.model.epsilon = detail::positive_number(detail::require(m, "epsilon", "model"), "model.epsilon");
  cfg.model.kernel_json = detail::require(m, "kernel", "model");
  cfg.model.rate_json = detail::require(m, "rate", "model");
  try {
    cfg.model.model.kernel = detail::parse_kernel(cfg.model.kernel_json);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const bool gg = std::holds_alternative<GaspardGilbertKernel>(cfg.model.model.kernel.variant());
  cfg.model.model.rate = detail::parse_rate(cfg.model.rate_json, gg);
  cfg.experiment = detail::parse_experiment(detail::require(doc, "experiment", "config"));
  const auto& seed = detail::require(doc, "seed", "config");
  if (!seed.is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
  cfg.seed = seed.get<std::uint64_t>();
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("output_dir must be a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }

  const auto& x = cfg.experiment;
  const Model& model = cfg.model.model;
  if (x.type == ExperimentType::contraction && !model.is_reference()) {
    throw ConfigError("contraction needs a constant rate and a state-independent kernel");
  }
  if ((x.type == ExperimentType::minorization || x.type == ExperimentType::reversibility) &&
      !model.kernel.has_density()) {
    throw ConfigError("kernel '" + model.kernel.name() + "' has no density");
  }
  if ((x.type == ExperimentType::gap_scan || x.type == ExperimentType::stationarity) &&
      !x.dim_d && !stationary_dim_d(model)) {
    throw ConfigError("no stationary product law is known for this model; set experiment.dim_d");
  }
  if (x.type == ExperimentType::contraction && kernel_variance(model.kernel) >= 0.25) {
    throw ConfigError("contraction needs a kernel with variance < 1/4");
  }

  cfg.canonical = doc;
  cfg.canonical.erase("output_dir");
  cfg.canonical["seed"] = cfg.seed;
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  return detail::fnv1a_hex(cfg.canonical.dump());
}

/// Supported kernels and rates, one per line, in a fixed order.
inline std::string list_models() {
  return "kernels:\n"
         "  gg          3-D billiard (Gaspard-Gilbert) kernel; state dependent\n"
         "  uniform     alpha ~ U[0,1]\n"
         "  beta        alpha ~ Beta(d/2, d/2); parameter d > 0\n"
         "  point_half  alpha = 1/2 (degenerate, absorbing)\n"
         "rates:\n"
         "  constant     Lambda_s = lambda; parameter lambda > 0\n"
         "  sqrt_cutoff  Lambda_s = max(sqrt(s), lambda_min); parameter lambda_min > 0\n"
         "  sqrt         Lambda_s = sqrt(s) (no floor; exploratory)\n"
         "ratio rates (rate.ratio):\n"
         "  unit  Lambda_r = 1 (default for non-gg kernels)\n"
         "  gg    billiard ratio rate (default for the gg kernel)\n"
         "experiments:\n"
         "  contraction gap_scan stationarity reversibility minorization eigen\n";
}

struct RunOptions {
  std::size_t threads = 1;
};

namespace detail {

inline std::string number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

class ArtifactWriter {
 public:
  ArtifactWriter(const std::filesystem::path& dir, std::string hash, std::uint64_t seed)
      : dir_(dir), hash_(std::move(hash)), seed_(seed) {}

  std::ofstream open_csv(const std::string& name) {
    auto out = open(name);
    out << "# config_hash=" << hash_ << " seed=" << seed_ << '\n';
    return out;
  }

  void write_json(const std::string& name, json doc) {
    doc["config_hash"] = hash_;
    doc["seed"] = seed_;
    auto out = open(name);
    out << doc.dump(2) << '\n';
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::ofstream open(const std::string& name) {
    std::ofstream out(dir_ / name);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
    return out;
  }

  std::filesystem::path dir_;
  std::string hash_;
  std::uint64_t seed_;
  std::vector<std::string> files_;
};

inline json report_json(const std::vector<TestResult>& results) {
  json arr = json::array();
  bool pass = true;
  for (const auto& r : results) {
    arr.push_back(r);
    pass = pass && r.pass;
  }
  return json{{"reports", arr}, {"pass", pass}};
}

inline void run_eigen(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const auto closed = eigenvalues_closed_form(cfg.model.n_sites);
  const auto numeric = eigenvalues_numeric(ContractionMatrix::for_sites(cfg.model.n_sites));
  auto out = w.open_csv("eigen.csv");
  out << "index,closed_form,numeric,rel_err\n";
  for (std::size_t i = 0; i < closed.size(); ++i) {
    const double rel = std::abs(numeric[i] - closed[i]) / std::abs(closed[i]);
    out << i + 1 << ',' << number(closed[i]) << ',' << number(numeric[i]) << ',' << number(rel)
        << '\n';
  }
}

inline void run_contraction(const ExperimentConfig& cfg, const RunOptions& opt,
                            ArtifactWriter& w) {
  const Model& model = cfg.model.model;
  const std::size_t n = cfg.model.n_sites;
  const double sigma_sq = kernel_variance(model.kernel);
  const double lambda = model.constant_rate();
  const double bound_d2 = 2.0 * contraction_rate_bound(lambda, sigma_sq, n);
  // Long enough for the bound alone to force a 100-fold drop.
  const double horizon = cfg.experiment.horizon.value_or(1.2 * std::log(100.0) / bound_d2);
  EstimatorConfig ec;
  ec.n_replicas = cfg.experiment.replicas;
  ec.n_samples = cfg.experiment.n_samples;
  ec.seed = cfg.seed;
  ec.threads = opt.threads;
  const auto [x0, y0] = extreme_pair(n, cfg.model.epsilon);
  const auto decay = estimate_coupling_decay(model, x0, y0, horizon, ec);
  auto out = w.open_csv("contraction.csv");
  out << "time,mean_d2,stderr\n";
  for (std::size_t i = 0; i < decay.times.size(); ++i) {
    out << number(decay.times[i]) << ',' << number(decay.mean_d2[i]) << ','
        << number(decay.std_error[i]) << '\n';
  }
  const json footer{{"n_sites", n},
                    {"lambda", lambda},
                    {"sigma_sq", sigma_sq},
                    {"rate_bound", bound_d2},
                    {"rate_fit", decay.rate},
                    {"rate_fit_stderr", decay.rate_std_error},
                    {"replicas", ec.n_replicas}};
  out << "# " << footer.dump() << '\n';
}

inline void run_gap_scan(const ExperimentConfig& cfg, const RunOptions& opt, ArtifactWriter& w) {
  GapScanConfig gc;
  gc.estimator.n_replicas = cfg.experiment.replicas;
  gc.estimator.n_samples = cfg.experiment.n_samples;
  gc.estimator.seed = cfg.seed;
  gc.estimator.threads = opt.threads;
  gc.epsilon = cfg.model.epsilon;
  gc.dim_d = cfg.experiment.dim_d;
  gc.horizon_factor = cfg.experiment.horizon_factor;
  gc.rayleigh_samples = cfg.experiment.rayleigh_samples;
  gc.inner_alpha_draws = cfg.experiment.inner_alpha_draws;
  const auto result = gap_scan(cfg.model.model, cfg.experiment.n_list, gc);
  auto out = w.open_csv("gap_scan.csv");
  out << "N,bound_lower,gap_est,gap_stderr,bound_upper\n";
  json upper_err = json::array();
  json status = json::array();
  for (const auto& r : result.rows) {
    out << r.n_sites << ',' << number(r.bound_lower) << ',' << number(r.estimate.value) << ','
        << number(r.estimate.std_error) << ',' << number(r.upper.value) << '\n';
    upper_err.push_back(r.upper.std_error);
    status.push_back(r.estimate.ok() ? "ok" : "flagged");
  }
  const json footer{{"slope", result.slope},
                    {"slope_stderr", result.slope_std_error},
                    {"slope_ci95", {result.ci_low, result.ci_high}},
                    {"bound_upper_stderr", upper_err},
                    {"estimate_status", status},
                    {"model", cfg.model.model.name()}};
  out << "# " << footer.dump() << '\n';
}

inline void run_stationarity(const ExperimentConfig& cfg, const RunOptions& opt,
                             ArtifactWriter& w) {
  const double dim_d = cfg.experiment.dim_d ? *cfg.experiment.dim_d : *stationary_dim_d(cfg.model.model);
  const MicrocanonicalSpec spec{dim_d, cfg.model.epsilon, cfg.model.n_sites};
  const auto report = stationarity_test(cfg.model.model, spec, *cfg.experiment.horizon,
                                        cfg.experiment.replicas, cfg.seed, opt.threads);
  json doc = report_json(report.results);
  doc["dim_d"] = dim_d;
  doc["horizon"] = *cfg.experiment.horizon;
  w.write_json("stationarity.json", doc);
}

inline void run_reversibility(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const Model& model = cfg.model.model;
  const double dim_d = cfg.experiment.dim_d.value_or(3.0);
  const std::size_t grid = cfg.experiment.grid_size;
  const double residual = detailed_balance_residual(model.kernel, model.rate.lambda_r, grid, dim_d);
  // Normalization of P(beta, .) on 100 beta values, split at the kinks of
  // the billiard density.
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double beta = (i + 0.5) / 100.0;
    const double bm = std::min(beta, 1.0 - beta);
    const double mass =
        integrate([&](double a) { return *model.kernel.density(beta, a); }, 0.0, 1.0, {bm, 1.0 - bm, 0.5});
    worst = std::max(worst, std::abs(mass - 1.0));
  }
  std::vector<TestResult> results{
      {"detailed_balance_residual", grid * grid, residual, 1e-12, residual <= 1e-12},
      {"kernel_normalization", 100, worst, 1e-6, worst <= 1e-6}};
  json doc = report_json(results);
  doc["dim_d"] = dim_d;
  w.write_json("reversibility.json", doc);
}

inline void run_minorization(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const std::size_t grid = cfg.experiment.grid_size;
  const double ratio = minorization_ratio(cfg.model.model.kernel, grid);
  const double threshold = std::numbers::pi / 4.0 - 1e-9;
  std::vector<TestResult> results{{"minorization_ratio", grid, ratio, threshold, ratio >= threshold}};
  json doc = report_json(results);
  doc["min_ratio"] = ratio;
  w.write_json("minorization.json", doc);
}

}  // namespace detail

/// Executes the configured experiment and writes its artifacts plus
/// manifest.json into cfg.output_dir.
inline RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.output_dir);
  RunManifest manifest;
  manifest.config_hash = config_hash(cfg);
  detail::ArtifactWriter writer(cfg.output_dir, manifest.config_hash, cfg.seed);
  switch (cfg.experiment.type) {
    case ExperimentType::eigen: detail::run_eigen(cfg, writer); break;
    case ExperimentType::contraction: detail::run_contraction(cfg, opt, writer); break;
    case ExperimentType::gap_scan: detail::run_gap_scan(cfg, opt, writer); break;
    case ExperimentType::stationarity: detail::run_stationarity(cfg, opt, writer); break;
    case ExperimentType::reversibility: detail::run_reversibility(cfg, writer); break;
    case ExperimentType::minorization: detail::run_minorization(cfg, writer); break;
  }
  manifest.outputs = writer.files();
  manifest.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(cfg.output_dir / "manifest.json") << json(manifest).dump(2) << '\n';
  return manifest;
}

}  // namespace exchange_lattice
