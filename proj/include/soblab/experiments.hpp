#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "soblab/bump.hpp"
#include "soblab/config.hpp"
#include "soblab/dataset.hpp"
#include "soblab/error.hpp"
#include "soblab/geometry.hpp"
#include "soblab/interpolant.hpp"
#include "soblab/model.hpp"
#include "soblab/morrey.hpp"
#include "soblab/parallel.hpp"
#include "soblab/random.hpp"
#include "soblab/risk.hpp"
#include "soblab/rkhs.hpp"
#include "soblab/stats.hpp"

namespace soblab {

enum class SweepKind { NormVsN, DeltaAndSubset, WeightedDeltaSum, RiskVsN, RiskVsGamma, Morrey };
enum class PredictorFamily { Bump, Kernel };
enum class MorreyVariant { Exact, Diagnostic };

inline const char* to_string(SweepKind k) {
  switch (k) {
    case SweepKind::NormVsN: return "norm_vs_n";
    case SweepKind::DeltaAndSubset: return "delta_and_subset";
    case SweepKind::WeightedDeltaSum: return "weighted_delta_sum";
    case SweepKind::RiskVsN: return "risk_vs_n";
    case SweepKind::RiskVsGamma: return "risk_vs_gamma";
    case SweepKind::Morrey: return "morrey";
  }
  return "unknown";
}

struct SweepConfig {
  std::string id = "sweep";
  SweepKind kind = SweepKind::NormVsN;
  SobolevParams params;
  DistributionSpec spec;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 20;
  std::optional<std::uint64_t> seed;

  double slope_tolerance = 0.3;
  std::optional<double> beta;

  std::size_t frequency_n = 4096;
  std::size_t frequency_trials = 50;
  double frequency_target = 0.95;

  PredictorFamily predictor = PredictorFamily::Bump;
  double shrink = 1.0;
  double lengthscale = 1.0;
  std::size_t risk_samples = 20000;
  double plateau_ratio = 0.2;
  double risk_floor = 0.01;
  bool clip_boundary = true;

  std::size_t n_fixed = 1024;
  std::vector<double> shrink_grid{1.0, 0.7, 0.5, 0.35, 0.25};
  double gamma_slack = 0.75;

  MorreyVariant morrey_variant = MorreyVariant::Exact;
  std::size_t morrey_levels = 8;
  double morrey_growth_limit = 10.0;
};

struct ResultRow {
  std::string sweep;
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
};

struct Contract {
  std::string name;
  std::string target;
  double observed = 0.0;
  bool pass = false;
};

struct Curve {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SweepResult {
  std::string id;
  std::string sweep;
  std::uint64_t seed = 0;
  std::vector<ResultRow> rows;
  std::vector<Contract> contracts;
  std::vector<Curve> curves;
  double max_interpolation_error = 0.0;

  [[nodiscard]] bool passed() const {
    return std::all_of(contracts.begin(), contracts.end(), [](const Contract& c) { return c.pass; });
  }
  [[nodiscard]] const Contract* contract(const std::string& name) const {
    for (const auto& c : contracts) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Config parsing

inline DistributionSpec parse_distribution(const Config& cfg, int d) {
  const std::string sec = "distribution";
  DistributionSpec spec;
  spec.dim = d;
  spec.domain_radius = cfg.get_double(sec, "radius", 1.0);
  const std::string density = cfg.get_string(sec, "density", "uniform");
  if (density == "uniform") {
    spec.density = DensityKind::Uniform;
  } else if (density == "radial_quadratic") {
    spec.density = DensityKind::RadialQuadratic;
    spec.density_a = cfg.require_double(sec, "density_a");
  } else {
    cfg.fail(cfg.line_of(sec, "density"), "[distribution] density: expected uniform or radial_quadratic");
  }
  const std::string noise = cfg.get_string(sec, "noise", "constant");
  if (noise == "constant") {
    spec.noise = NoiseKind::Constant;
    spec.sigma = cfg.get_double(sec, "sigma", 1.0);
  } else if (noise == "quadratic") {
    spec.noise = NoiseKind::Quadratic;
    spec.noise_a = cfg.require_double(sec, "noise_a");
    spec.noise_b = cfg.get_double(sec, "noise_b", 0.0);
  } else {
    cfg.fail(cfg.line_of(sec, "noise"), "[distribution] noise: expected constant or quadratic");
  }
  for (const auto& e : cfg.get_all(sec, "bump")) {
    const auto v = cfg.to_list(e, sec, "bump");
    if (v.size() != static_cast<std::size_t>(d) + 2) {
      cfg.fail(e.line, "[distribution] bump: expected " + std::to_string(d) + " center coordinates, radius, weight");
    }
    TruthBump b;
    b.center.assign(v.begin(), v.begin() + d);
    b.radius = v[static_cast<std::size_t>(d)];
    b.weight = v.back();
    spec.truth.push_back(std::move(b));
  }
  try {
    return finalize_spec(spec);
  } catch (const Error& err) {
    cfg.fail(cfg.line_of(sec, "radius"), std::string("[distribution] ") + err.what());
  }
}

inline SobolevParams parse_params(const Config& cfg) {
  const int k = static_cast<int>(cfg.require_int("params", "k"));
  const double p = cfg.require_double("params", "p");
  const int d = static_cast<int>(cfg.require_int("params", "d"));
  try {
    return make_params(k, p, d);
  } catch (const Error& err) {
    cfg.fail(cfg.line_of("params", "k"), std::string("[params] ") + err.what());
  }
}

inline SweepConfig parse_sweep_config(const Config& cfg) {
  SweepConfig sc;
  sc.params = parse_params(cfg);
  const int d = sc.params.d;
  sc.spec = parse_distribution(cfg, d);

  const std::string sec = "sweep";
  sc.id = cfg.get_string(sec, "id", "sweep");
  const std::string name = cfg.require_string(sec, "name");
  const std::size_t name_line = cfg.line_of(sec, "name");
  if (name == "norm_vs_n") {
    sc.kind = SweepKind::NormVsN;
  } else if (name == "delta_and_subset") {
    sc.kind = SweepKind::DeltaAndSubset;
    sc.slope_tolerance = 0.2;
  } else if (name == "weighted_delta_sum") {
    sc.kind = SweepKind::WeightedDeltaSum;
  } else if (name == "risk_vs_n") {
    sc.kind = SweepKind::RiskVsN;
  } else if (name == "risk_vs_gamma") {
    sc.kind = SweepKind::RiskVsGamma;
  } else if (name == "morrey") {
    sc.kind = SweepKind::Morrey;
  } else {
    cfg.fail(name_line, "[sweep] name: unknown sweep '" + name + "'");
  }

  if (cfg.has(sec, "seed")) sc.seed = cfg.get_u64(sec, "seed", 0);
  sc.trials = static_cast<std::size_t>(cfg.get_int(sec, "trials", 20));
  if (sc.trials < 5 && sc.kind != SweepKind::Morrey) cfg.fail(cfg.line_of(sec, "trials"), "[sweep] trials: need at least 5");
  if (sc.trials < 1) cfg.fail(cfg.line_of(sec, "trials"), "[sweep] trials: need at least 1");
  sc.slope_tolerance = cfg.get_double(sec, "slope_tolerance", sc.slope_tolerance);

  const bool needs_grid = sc.kind == SweepKind::NormVsN || sc.kind == SweepKind::DeltaAndSubset ||
                          sc.kind == SweepKind::WeightedDeltaSum || sc.kind == SweepKind::RiskVsN;
  if (needs_grid) {
    std::vector<double> grid = cfg.get_list(sec, "n_grid");
    std::size_t grid_line = cfg.line_of(sec, "n_grid");
    if (grid.empty()) {
      const double lo = static_cast<double>(cfg.require_int(sec, "n_min"));
      const double hi = static_cast<double>(cfg.require_int(sec, "n_max"));
      const double factor = cfg.get_double(sec, "n_factor", 2.0);
      grid_line = cfg.line_of(sec, "n_min");
      if (!(factor > 1.0)) cfg.fail(cfg.line_of(sec, "n_factor"), "[sweep] n_factor: must exceed 1");
      for (double n = lo; n <= hi * (1.0 + 1e-12); n *= factor) grid.push_back(std::round(n));
    }
    for (double v : grid) {
      if (!(v >= 2.0) || v != std::floor(v)) cfg.fail(grid_line, "[sweep] n_grid: entries must be integers >= 2");
      sc.n_grid.push_back(static_cast<std::size_t>(v));
    }
    if (sc.n_grid.size() < 4) cfg.fail(grid_line, "[sweep] n_grid: need at least 4 levels");
    for (std::size_t i = 1; i < sc.n_grid.size(); ++i) {
      if (sc.n_grid[i] <= sc.n_grid[i - 1]) cfg.fail(grid_line, "[sweep] n_grid: must be strictly increasing");
    }
  }

  if (sc.kind == SweepKind::NormVsN && !sc.params.strict_range()) {
    cfg.fail(cfg.line_of("params", "k"), "[params] k: norm_vs_n needs k in (d/p, 1.5 d/p)");
  }
  if (sc.kind == SweepKind::DeltaAndSubset) {
    sc.frequency_n = static_cast<std::size_t>(cfg.get_int(sec, "frequency_n", 4096));
    sc.frequency_trials = static_cast<std::size_t>(cfg.get_int(sec, "frequency_trials", 50));
    sc.frequency_target = cfg.get_double(sec, "frequency_target", 0.95);
    if (sc.frequency_n < 2 || sc.frequency_trials < 1) cfg.fail(cfg.line_of(sec, "frequency_n"), "[sweep] frequency_n: invalid");
  }
  if (sc.kind == SweepKind::WeightedDeltaSum) {
    if (!cfg.has(sec, "beta")) cfg.fail(0, "[sweep] beta: required field missing");
    const double beta = cfg.get_double(sec, "beta", 0.0);
    if (!(beta > 0.0 && beta < d / 2.0)) {
      cfg.fail(cfg.line_of(sec, "beta"), "[sweep] beta: must lie in (0, d/2) = (0, " + format_double(d / 2.0) + ")");
    }
    sc.beta = beta;
  }
  if (sc.kind == SweepKind::RiskVsN || sc.kind == SweepKind::RiskVsGamma) {
    sc.risk_samples = static_cast<std::size_t>(cfg.get_int(sec, "risk_samples", 20000));
    if (sc.risk_samples < kMinRiskSamples) cfg.fail(cfg.line_of(sec, "risk_samples"), "[sweep] risk_samples: need at least 100");
    sc.clip_boundary = cfg.get_bool(sec, "clip_boundary", d == 1);
  }
  if (sc.kind == SweepKind::RiskVsN) {
    const std::string pred = cfg.get_string(sec, "predictor", "bump");
    if (pred == "bump") {
      sc.predictor = PredictorFamily::Bump;
    } else if (pred == "kernel") {
      sc.predictor = PredictorFamily::Kernel;
    } else {
      cfg.fail(cfg.line_of(sec, "predictor"), "[sweep] predictor: expected bump or kernel");
    }
    sc.shrink = cfg.get_double(sec, "shrink", 1.0);
    if (!(sc.shrink > 0.0 && sc.shrink <= 1.0)) cfg.fail(cfg.line_of(sec, "shrink"), "[sweep] shrink: must lie in (0, 1]");
    sc.lengthscale = cfg.get_double(sec, "lengthscale", 1.0);
    if (!(sc.lengthscale > 0.0)) cfg.fail(cfg.line_of(sec, "lengthscale"), "[sweep] lengthscale: must be positive");
    sc.plateau_ratio = cfg.get_double(sec, "plateau_ratio", 0.2);
    sc.risk_floor = cfg.get_double(sec, "risk_floor", 0.01);
    if (sc.predictor == PredictorFamily::Kernel) {
      const double nu = sc.params.k - sc.params.d / 2.0;
      if (nu != 0.5 && nu != 1.5) cfg.fail(cfg.line_of("params", "k"), "[params] kernel predictor needs k - d/2 in {1/2, 3/2}");
      if (sc.params.p != 2.0) cfg.fail(cfg.line_of("params", "p"), "[params] p: kernel predictor needs p = 2");
    }
  }
  if (sc.kind == SweepKind::RiskVsGamma) {
    sc.n_fixed = static_cast<std::size_t>(cfg.get_int(sec, "n", 1024));
    if (sc.n_fixed < 2) cfg.fail(cfg.line_of(sec, "n"), "[sweep] n: need at least 2");
    if (cfg.has(sec, "shrink_grid")) sc.shrink_grid = cfg.get_list(sec, "shrink_grid");
    if (sc.shrink_grid.size() < 2) cfg.fail(cfg.line_of(sec, "shrink_grid"), "[sweep] shrink_grid: need at least 2 values");
    for (double s : sc.shrink_grid) {
      if (!(s > 0.0 && s <= 1.0)) cfg.fail(cfg.line_of(sec, "shrink_grid"), "[sweep] shrink_grid: values must lie in (0, 1]");
    }
    sc.gamma_slack = cfg.get_double(sec, "gamma_slack", 0.75);
  }
  if (sc.kind == SweepKind::Morrey) {
    const bool exact_ok = sc.params.d == 1 && sc.params.k == 1;
    const std::string variant = cfg.get_string(sec, "variant", exact_ok ? "exact" : "diagnostic");
    if (variant == "exact") {
      if (!exact_ok) cfg.fail(cfg.line_of(sec, "variant"), "[sweep] variant: exact needs d = 1 and k = 1");
      sc.morrey_variant = MorreyVariant::Exact;
    } else if (variant == "diagnostic") {
      sc.morrey_variant = MorreyVariant::Diagnostic;
    } else {
      cfg.fail(cfg.line_of(sec, "variant"), "[sweep] variant: expected exact or diagnostic");
    }
    sc.morrey_levels = static_cast<std::size_t>(cfg.get_int(sec, "levels", 8));
    if (sc.morrey_levels < 2) cfg.fail(cfg.line_of(sec, "levels"), "[sweep] levels: need at least 2");
    sc.morrey_growth_limit = cfg.get_double(sec, "growth_limit", 10.0);
  }
  cfg.reject_unknown();
  return sc;
}

inline SweepConfig load_sweep_config(const std::string& path) { return parse_sweep_config(Config::load(path)); }

// ---------------------------------------------------------------------------
// Sweeps

namespace detail {

inline std::uint64_t master_seed(const SweepConfig& cfg) {
  if (!cfg.seed) throw Error(ErrorKind::ConfigInvalid, "no seed: set [sweep] seed or pass --seed");
  return *cfg.seed;
}

inline std::string band(double target, double tol) {
  return format_double(target) + " +- " + format_double(tol);
}

inline Contract slope_contract(const std::string& name, double slope, double target, double tol) {
  return {name, band(target, tol), slope, std::abs(slope - target) <= tol};
}

inline Contract zero_contract(const std::string& name, double observed) { return {name, "== 0", observed, observed == 0.0}; }

inline Contract interpolation_contract(double worst) {
  return {"interpolation_error", "<= 1e-9", worst, worst <= kInterpolationTolerance};
}

/// (n, trial) pairs in row order.
struct Job {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
};

inline std::vector<Job> grid_jobs(const std::vector<std::size_t>& ns, std::size_t trials, std::uint64_t master) {
  std::vector<Job> jobs;
  for (std::size_t n : ns) {
    for (std::size_t t = 0; t < trials; ++t) jobs.push_back({n, t, derive_seed(master, {n, t})});
  }
  return jobs;
}

/// Slope of the per-n median of `metric` against n; NaN entries are left out of the medians.
inline LinearFit median_fit(const std::vector<std::size_t>& ns, std::size_t trials, const std::vector<double>& values,
                            Curve& curve) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t a = 0; a < ns.size(); ++a) {
    std::vector<double> v;
    for (std::size_t t = 0; t < trials; ++t) {
      const double x = values[a * trials + t];
      if (!std::isnan(x)) v.push_back(x);
    }
    if (v.empty()) continue;
    xs.push_back(static_cast<double>(ns[a]));
    ys.push_back(median(v));
  }
  curve.x = xs;
  curve.y = ys;
  return loglog_fit(xs, ys);
}

inline void fit_contract(SweepResult& res, const std::string& name, const std::vector<std::size_t>& ns, std::size_t trials,
                         const std::vector<double>& values, double target, double tol) {
  Curve curve;
  curve.name = name;
  try {
    const LinearFit fit = median_fit(ns, trials, values, curve);
    res.contracts.push_back(slope_contract(name, fit.slope, target, tol));
    res.rows.push_back({res.sweep, 0, 0, res.seed, name, fit.slope, fit.slope_se});
  } catch (const Error&) {
    res.contracts.push_back({name, band(target, tol), std::numeric_limits<double>::quiet_NaN(), false});
  }
  res.curves.push_back(std::move(curve));
}

}  // namespace detail

/// ||f_{bump, s=1}||^p against n, with the per-trial min-norm bound.
inline SweepResult sweep_norm_vs_n(const SweepConfig& cfg, unsigned threads = 1) {
  if (!cfg.params.strict_range()) throw Error(ErrorKind::InvalidRange, "norm sweep needs k in (d/p, 1.5 d/p)");
  SweepResult res;
  res.id = cfg.id;
  res.sweep = to_string(SweepKind::NormVsN);
  res.seed = detail::master_seed(cfg);
  const auto jobs = detail::grid_jobs(cfg.n_grid, cfg.trials, res.seed);
  const ReferenceModuli& moduli = cached_reference_moduli(cfg.params);
  struct Out {
    double norm_p = 0, bound = 0, interp = 0;
    std::size_t packing = 0, overlaps = 0;
  };
  std::vector<Out> outs(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Dataset data = sample(cfg.spec, jobs[j].n, jobs[j].seed);
    const NnRadii radii = nn_radii(data);
    const BumpInterpolant f = build(data, radii, 1.0, cfg.params);
    Out& o = outs[j];
    o.packing = check_packing(data, radii).size();
    o.overlaps = support_overlaps(f).size();
    o.interp = interpolation_error(f, data);
    o.norm_p = std::pow(sobolev_norm(f, moduli), cfg.params.p);
    o.bound = min_norm_upper_bound(data, radii, moduli);
  });
  std::vector<double> norms;
  double violations = 0;
  double packing = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& o = outs[j];
    res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "norm_p", o.norm_p, 0.0});
    res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "norm_bound", o.bound, 0.0});
    res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "interpolation_error", o.interp, 0.0});
    norms.push_back(o.norm_p);
    violations += o.norm_p > o.bound ? 1 : 0;
    packing += static_cast<double>(o.packing + o.overlaps);
    res.max_interpolation_error = std::max(res.max_interpolation_error, o.interp);
  }
  const double target = cfg.params.k * cfg.params.p / cfg.params.d;
  detail::fit_contract(res, "norm_slope", cfg.n_grid, cfg.trials, norms, target, cfg.slope_tolerance);
  res.contracts.push_back(detail::zero_contract("norm_bound_violations", violations));
  res.contracts.push_back(detail::zero_contract("packing_violations", packing));
  res.contracts.push_back(detail::interpolation_contract(res.max_interpolation_error));
  return res;
}

namespace detail {

struct SubsetOut {
  double min_delta = std::numeric_limits<double>::quiet_NaN();
  std::size_t size = 0;
  std::size_t bad_members = 0;
};

inline SubsetOut subset_trial(const SweepConfig& cfg, std::size_t n, std::uint64_t seed) {
  const Dataset data = sample(cfg.spec, n, seed);
  const NnRadii radii = nn_radii(data);
  const SubsetSelection sel = noisy_separated_subset(data, radii, cfg.spec);
  SubsetOut o;
  o.size = sel.indices.size();
  for (std::size_t i : sel.indices) {
    const bool ok = radii.radii[i] >= sel.radius_threshold && std::abs(data.labels[i]) <= sel.label_cap &&
                    regret(cfg.spec, data.labels[i], data.point(i)) >= sel.sigma_floor;
    o.bad_members += ok ? 0 : 1;
    if (std::isnan(o.min_delta) || radii.radii[i] < o.min_delta) o.min_delta = radii.radii[i];
  }
  return o;
}

}  // namespace detail

/// min over the noisy-separated subset of delta_i, and its size, against n.
inline SweepResult sweep_delta_and_subset(const SweepConfig& cfg, unsigned threads = 1) {
  SweepResult res;
  res.id = cfg.id;
  res.sweep = to_string(SweepKind::DeltaAndSubset);
  res.seed = detail::master_seed(cfg);
  auto jobs = detail::grid_jobs(cfg.n_grid, cfg.trials, res.seed);
  const std::size_t grid_count = jobs.size();
  for (std::size_t t = 0; t < cfg.frequency_trials; ++t) {
    jobs.push_back({cfg.frequency_n, t, derive_seed(res.seed, {cfg.frequency_n, t})});
  }
  std::vector<detail::SubsetOut> outs(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) { outs[j] = detail::subset_trial(cfg, jobs[j].n, jobs[j].seed); });

  std::vector<double> mins;
  double bad = 0;
  for (std::size_t j = 0; j < grid_count; ++j) {
    const auto& o = outs[j];
    if (!std::isnan(o.min_delta)) res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "min_delta_subset", o.min_delta, 0.0});
    res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "subset_size", static_cast<double>(o.size), 0.0});
    mins.push_back(o.min_delta);
    bad += static_cast<double>(o.bad_members);
  }
  const double rho = noise_constants(cfg.spec).rho;
  const double needed = rho * static_cast<double>(cfg.frequency_n) / 8.0;
  std::size_t hits = 0;
  for (std::size_t j = grid_count; j < jobs.size(); ++j) {
    const auto& o = outs[j];
    res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "frequency_subset_size", static_cast<double>(o.size), 0.0});
    hits += static_cast<double>(o.size) >= needed ? 1 : 0;
    bad += static_cast<double>(o.bad_members);
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(cfg.frequency_trials);
  detail::fit_contract(res, "min_delta_slope", cfg.n_grid, cfg.trials, mins, -1.0 / cfg.params.d, cfg.slope_tolerance);
  res.contracts.push_back({"subset_size_frequency", ">= " + format_double(cfg.frequency_target) + " (|B| >= rho n / 8 at n = " +
                                                       std::to_string(cfg.frequency_n) + ")",
                           freq, freq >= cfg.frequency_target});
  res.contracts.push_back(detail::zero_contract("subset_member_violations", bad));
  return res;
}

/// sum_i |y_i|^p delta_i^{-beta} against n.
inline SweepResult sweep_weighted_delta_sum(const SweepConfig& cfg, unsigned threads = 1) {
  const int d = cfg.params.d;
  if (!cfg.beta || !(*cfg.beta > 0.0 && *cfg.beta < d / 2.0)) throw Error(ErrorKind::InvalidBeta, "beta must lie in (0, d/2)");
  const double beta = *cfg.beta;
  SweepResult res;
  res.id = cfg.id;
  res.sweep = to_string(SweepKind::WeightedDeltaSum);
  res.seed = detail::master_seed(cfg);
  const auto jobs = detail::grid_jobs(cfg.n_grid, cfg.trials, res.seed);
  std::vector<double> sums(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Dataset data = sample(cfg.spec, jobs[j].n, jobs[j].seed);
    const NnRadii radii = nn_radii(data);
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += abs_pow(data.labels[i], cfg.params.p) * std::pow(radii.radii[i], -beta);
    sums[j] = s;
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "weighted_delta_sum", sums[j], 0.0});
  }
  detail::fit_contract(res, "weighted_sum_slope", cfg.n_grid, cfg.trials, sums, 1.0 + beta / d, cfg.slope_tolerance);
  return res;
}

namespace detail {

inline bool semianalytic_available(const SweepConfig& cfg) {
  return cfg.spec.pure_noise() && cfg.spec.density == DensityKind::Uniform && (cfg.spec.dim == 1 || !cfg.clip_boundary);
}

inline std::optional<RiskEstimate> try_semianalytic(const BumpInterpolant& f, const SweepConfig& cfg) {
  if (!semianalytic_available(cfg)) return std::nullopt;
  try {
    return excess_risk_semianalytic(f, cfg.spec, cfg.clip_boundary && cfg.spec.dim == 1);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::UnsupportedSpec) return std::nullopt;
    throw;
  }
}

}  // namespace detail

/// Excess risk of interpolating predictors against n; the plateau is the contract.
inline SweepResult sweep_risk_vs_n(const SweepConfig& cfg, unsigned threads = 1) {
  SweepResult res;
  res.id = cfg.id;
  res.sweep = to_string(SweepKind::RiskVsN);
  res.seed = detail::master_seed(cfg);
  const auto jobs = detail::grid_jobs(cfg.n_grid, cfg.trials, res.seed);
  struct Out {
    RiskEstimate mc;
    std::optional<RiskEstimate> exact;
    double interp = 0.0;
  };
  std::vector<Out> outs(jobs.size());
  const bool kernel = cfg.predictor == PredictorFamily::Kernel;
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Dataset data = sample(cfg.spec, jobs[j].n, jobs[j].seed);
    const std::uint64_t risk_seed = derive_seed(res.seed, {jobs[j].n, jobs[j].trial, 1});
    Out& o = outs[j];
    if (kernel) {
      const KernelInterpolant u = min_norm_interpolant(data, kernel_for(cfg.params.k, cfg.params.d, cfg.lengthscale));
      o.interp = u.residual;
      o.mc = excess_risk_mc([&](std::span<const double> x) { return eval(u, x); }, cfg.spec, cfg.risk_samples, risk_seed);
    } else {
      const NnRadii radii = nn_radii(data);
      const BumpInterpolant f = build(data, radii, cfg.shrink, cfg.params);
      o.interp = interpolation_error(f, data);
      o.mc = excess_risk_mc([&](std::span<const double> x) { return eval(f, x); }, cfg.spec, cfg.risk_samples, risk_seed);
      o.exact = detail::try_semianalytic(f, cfg);
    }
  });

  std::vector<double> agg;
  double worst_z = 0.0;
  bool have_exact = !kernel;
  for (std::size_t a = 0; a < cfg.n_grid.size(); ++a) {
    std::vector<double> mcs;
    double exact_sum = 0.0;
    double se2 = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const std::size_t j = a * cfg.trials + t;
      const auto& o = outs[j];
      res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "excess_risk_mc", o.mc.mean, o.mc.std_error});
      if (o.exact) {
        res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, "excess_risk_semianalytic", o.exact->mean, 0.0});
        exact_sum += o.exact->mean;
      } else {
        have_exact = false;
      }
      res.rows.push_back({res.sweep, jobs[j].n, jobs[j].trial, jobs[j].seed, kernel ? "interpolation_residual" : "interpolation_error", o.interp, 0.0});
      res.max_interpolation_error = std::max(res.max_interpolation_error, o.interp);
      mcs.push_back(o.mc.mean);
      se2 += o.mc.std_error * o.mc.std_error;
    }
    const double T = static_cast<double>(cfg.trials);
    double mean_mc = 0.0;
    for (double v : mcs) mean_mc += v;
    mean_mc /= T;
    // bump risks are averaged (so they compare with the exact values); kernel risks use medians
    const double level = kernel ? median(mcs) : mean_mc;
    agg.push_back(level);
    res.rows.push_back({res.sweep, cfg.n_grid[a], 0, res.seed, kernel ? "median_excess_risk" : "mean_excess_risk", level,
                        kernel ? 0.0 : std::sqrt(se2) / T});
    if (have_exact) {
      const double z = std::abs(mean_mc - exact_sum / T) / (std::sqrt(se2) / T);
      worst_z = std::max(worst_z, z);
    }
  }
  Curve curve{"excess_risk", {}, agg};
  for (std::size_t n : cfg.n_grid) curve.x.push_back(static_cast<double>(n));
  res.curves.push_back(curve);

  const double lowest = *std::min_element(agg.begin(), agg.end());
  const double ratio = agg.front() > 0.0 ? agg.back() / agg.front() : 0.0;
  res.contracts.push_back({"risk_floor", ">= " + format_double(cfg.risk_floor), lowest, lowest >= cfg.risk_floor});
  res.contracts.push_back({"risk_plateau_ratio", ">= " + format_double(cfg.plateau_ratio), ratio, ratio >= cfg.plateau_ratio});
  if (kernel) {
    res.contracts.push_back({"interpolation_residual", "<= 1e-6", res.max_interpolation_error,
                             res.max_interpolation_error <= kKernelResidualTolerance});
  } else {
    res.contracts.push_back(detail::interpolation_contract(res.max_interpolation_error));
    if (have_exact) res.contracts.push_back({"mc_vs_semianalytic_z", "<= 3", worst_z, worst_z <= 3.0});
  }
  return res;
}

/// Risk of shrunk bump interpolants against their certified gamma at fixed n.
inline SweepResult sweep_risk_vs_gamma(const SweepConfig& cfg, unsigned threads = 1) {
  for (double s : cfg.shrink_grid) {
    if (!(s > 0.0 && s <= 1.0)) throw Error(ErrorKind::InvalidShrink, "shrink grid values must lie in (0, 1]");
  }
  SweepResult res;
  res.id = cfg.id;
  res.sweep = to_string(SweepKind::RiskVsGamma);
  res.seed = detail::master_seed(cfg);
  const ReferenceModuli& moduli = cached_reference_moduli(cfg.params);
  const std::size_t ns = cfg.shrink_grid.size();
  struct Out {
    double gamma = 0.0;
    RiskEstimate risk;
    double interp = 0.0;
  };
  std::vector<Out> outs(cfg.trials * ns);
  std::vector<std::uint64_t> seeds(cfg.trials);
  for (std::size_t t = 0; t < cfg.trials; ++t) seeds[t] = derive_seed(res.seed, {cfg.n_fixed, t});
  parallel_for(cfg.trials, threads, [&](std::size_t t) {
    const Dataset data = sample(cfg.spec, cfg.n_fixed, seeds[t]);
    const NnRadii radii = nn_radii(data);
    // one risk seed per trial, shared by every shrink value (common random numbers)
    const std::uint64_t risk_seed = derive_seed(res.seed, {cfg.n_fixed, t, 2});
    for (std::size_t s = 0; s < ns; ++s) {
      const BumpInterpolant f = build(data, radii, cfg.shrink_grid[s], cfg.params);
      Out& o = outs[t * ns + s];
      o.gamma = gamma_report(f, data, radii, moduli).gamma_lower_bound;
      o.interp = interpolation_error(f, data);
      const auto exact = detail::try_semianalytic(f, cfg);
      o.risk = exact ? *exact
                     : excess_risk_mc([&](std::span<const double> x) { return eval(f, x); }, cfg.spec, cfg.risk_samples, risk_seed);
    }
  });
  std::vector<double> gx;
  std::vector<double> ry;
  double unit_gamma = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t s = 0; s < ns; ++s) {
    const std::string tag = "[s=" + format_double(cfg.shrink_grid[s]) + "]";
    std::vector<double> gs;
    std::vector<double> rs;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const auto& o = outs[t * ns + s];
      res.rows.push_back({res.sweep, cfg.n_fixed, t, seeds[t], "gamma_lower_bound" + tag, o.gamma, 0.0});
      res.rows.push_back({res.sweep, cfg.n_fixed, t, seeds[t], std::string("excess_risk_") + to_string(o.risk.method) + tag,
                          o.risk.mean, o.risk.std_error});
      res.max_interpolation_error = std::max(res.max_interpolation_error, o.interp);
      gs.push_back(o.gamma);
      rs.push_back(o.risk.mean);
    }
    gx.push_back(median(gs));
    ry.push_back(median(rs));
    if (cfg.shrink_grid[s] == 1.0) unit_gamma = gx.back();
  }
  const double reference = -cfg.params.p * cfg.params.d / (cfg.params.k * cfg.params.p - cfg.params.d);
  Curve curve{"risk_vs_gamma", gx, ry};
  res.curves.push_back(curve);
  try {
    const LinearFit fit = loglog_fit(gx, ry);
    res.rows.push_back({res.sweep, cfg.n_fixed, 0, res.seed, "gamma_exponent", fit.slope, fit.slope_se});
    res.contracts.push_back({"gamma_exponent", ">= " + format_double(reference - cfg.gamma_slack) + " (reference " +
                                                   format_double(reference) + ")",
                             fit.slope, fit.slope >= reference - cfg.gamma_slack});
  } catch (const Error&) {
    res.contracts.push_back({"gamma_exponent", ">= " + format_double(reference - cfg.gamma_slack),
                             std::numeric_limits<double>::quiet_NaN(), false});
  }
  if (!std::isnan(unit_gamma)) res.contracts.push_back({"gamma_at_unit_shrink", "== 1", unit_gamma, unit_gamma == 1.0});
  res.contracts.push_back(detail::interpolation_contract(res.max_interpolation_error));
  return res;
}

inline SweepResult sweep_morrey(const SweepConfig& cfg, unsigned threads = 1) {
  SweepResult res;
  res.id = cfg.id;
  res.sweep = to_string(SweepKind::Morrey);
  res.seed = detail::master_seed(cfg);
  if (cfg.morrey_variant == MorreyVariant::Exact) {
    const MorreyReport rep = morrey_check_exact(cfg.params, cfg.trials, res.seed, threads);
    for (std::size_t t = 0; t < rep.trials.size(); ++t) {
      const auto& tr = rep.trials[t];
      res.rows.push_back({res.sweep, 0, t, derive_seed(res.seed, {t}), "lhs", tr.lhs, 0.0});
      res.rows.push_back({res.sweep, 0, t, derive_seed(res.seed, {t}), "rhs", tr.rhs, 0.0});
    }
    res.rows.push_back({res.sweep, 0, 0, res.seed, "max_ratio", rep.max_ratio, 0.0});
    res.contracts.push_back(detail::zero_contract("morrey_violations", static_cast<double>(rep.violations)));
  } else {
    const MorreyDiagnostic diag = morrey_check_diagnostic(cfg.params, cfg.trials, res.seed, cfg.morrey_levels, threads);
    Curve curve{"morrey_max_ratio", diag.deltas, std::vector<double>(diag.deltas.size(), 0.0)};
    for (std::size_t t = 0; t < diag.ratio.size(); ++t) {
      for (std::size_t l = 0; l < diag.deltas.size(); ++l) {
        res.rows.push_back({res.sweep, 0, t, derive_seed(res.seed, {t}), "ratio[delta=" + format_double(diag.deltas[l]) + "]",
                            diag.ratio[t][l], 0.0});
        curve.y[l] = std::max(curve.y[l], diag.ratio[t][l]);
      }
    }
    res.curves.push_back(curve);
    res.contracts.push_back({"morrey_fine_over_coarse", "<= " + format_double(cfg.morrey_growth_limit), diag.growth(),
                             diag.growth() <= cfg.morrey_growth_limit});
  }
  return res;
}

inline SweepResult run_sweep(const SweepConfig& cfg, unsigned threads = 1) {
  switch (cfg.kind) {
    case SweepKind::NormVsN: return sweep_norm_vs_n(cfg, threads);
    case SweepKind::DeltaAndSubset: return sweep_delta_and_subset(cfg, threads);
    case SweepKind::WeightedDeltaSum: return sweep_weighted_delta_sum(cfg, threads);
    case SweepKind::RiskVsN: return sweep_risk_vs_n(cfg, threads);
    case SweepKind::RiskVsGamma: return sweep_risk_vs_gamma(cfg, threads);
    case SweepKind::Morrey: return sweep_morrey(cfg, threads);
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown sweep kind");
}

// ---------------------------------------------------------------------------
// Persistence

enum class RowFormat { Csv, JsonLines };

inline void write_rows(const SweepResult& res, std::ostream& out, RowFormat format) {
  if (format == RowFormat::Csv) {
    out << "sweep,n,trial,seed,metric,value,stderr\n";
    for (const auto& r : res.rows) {
      out << r.sweep << ',' << r.n << ',' << r.trial << ',' << r.seed << ',' << r.metric << ',' << format_double(r.value) << ','
          << format_double(r.std_error) << '\n';
    }
    return;
  }
  for (const auto& r : res.rows) {
    nlohmann::ordered_json j;
    j["sweep"] = r.sweep;
    j["n"] = r.n;
    j["trial"] = r.trial;
    j["seed"] = r.seed;
    j["metric"] = r.metric;
    j["value"] = r.value;
    j["stderr"] = r.std_error;
    out << j.dump() << '\n';
  }
}

inline nlohmann::ordered_json summary_json(const SweepResult& res) {
  nlohmann::ordered_json j;
  j["id"] = res.id;
  j["sweep"] = res.sweep;
  j["seed"] = res.seed;
  j["pass"] = res.passed();
  j["contracts"] = nlohmann::ordered_json::array();
  for (const auto& c : res.contracts) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["target"] = c.target;
    if (std::isfinite(c.observed)) {
      e["observed"] = c.observed;
    } else {
      e["observed"] = nullptr;
    }
    e["pass"] = c.pass;
    j["contracts"].push_back(e);
  }
  return j;
}

inline void write_curve(const Curve& c, std::ostream& out) {
  out << "# " << c.name << '\n';
  for (std::size_t i = 0; i < c.x.size(); ++i) out << format_double(c.x[i]) << ' ' << format_double(c.y[i]) << '\n';
}

/// Writes <id>.csv (or .jsonl), <id>.summary.json and one <id>.<curve>.dat per curve.
inline std::vector<std::string> write_outputs(const SweepResult& res, const std::string& dir, RowFormat format) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    written.push_back(path);
    return out;
  };
  {
    auto out = open(res.id + (format == RowFormat::Csv ? ".csv" : ".jsonl"));
    write_rows(res, out, format);
  }
  {
    auto out = open(res.id + ".summary.json");
    out << summary_json(res).dump(2) << '\n';
  }
  for (const auto& c : res.curves) {
    auto out = open(res.id + "." + c.name + ".dat");
    write_curve(c, out);
  }
  return written;
}

}  // namespace soblab
