#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "soblab/bump.hpp"
#include "soblab/config.hpp"
#include "soblab/dataset.hpp"
#include "soblab/error.hpp"
#include "soblab/experiments.hpp"
#include "soblab/geometry.hpp"
#include "soblab/interpolant.hpp"
#include "soblab/model.hpp"
#include "soblab/parallel.hpp"
#include "soblab/risk.hpp"

namespace soblab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitUsage = 2;

struct CommandOutcome {
  int exit_code = kExitOk;
  std::string summary;
  std::vector<std::string> artifacts;
};

/// Flags shared by every subcommand.
struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 0;  // 0: all cores
  std::string format = "csv";

  [[nodiscard]] unsigned thread_count() const { return threads == 0 ? default_thread_count() : threads; }
};

namespace detail {

inline std::uint64_t require_seed(const CommonOptions& o) {
  if (!o.seed) throw Error(ErrorKind::ConfigInvalid, "--seed is required for commands that sample");
  return *o.seed;
}

inline Config require_config(const CommonOptions& o) {
  if (o.config.empty()) throw Error(ErrorKind::ConfigInvalid, "--config is required");
  return Config::load(o.config);
}

inline std::string out_path(const CommonOptions& o, const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + o.out + "': " + ec.message());
  return (fs::path(o.out) / name).string();
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  return out;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open dataset '" + path + "'");
  return read_csv(in);
}

inline BumpInterpolant load_interpolant(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open interpolant '" + path + "'");
  return read_interpolant_csv(in);
}

/// The (k, p) pairing used when a command has a dataset but no [params].
inline SobolevParams default_params(int d) {
  switch (d) {
    case 1: return make_params(1, 1.25, 1);
    case 2: return make_params(1, 2.5, 2);
    case 3: return make_params(2, 2.0, 3);
    default: throw Error(ErrorKind::InvalidParams, "no default Sobolev parameters for d = " + std::to_string(d));
  }
}

/// [params] and [distribution] from a config; other sections are left alone.
inline std::pair<SobolevParams, DistributionSpec> model_from_config(const Config& cfg) {
  const SobolevParams params = parse_params(cfg);
  DistributionSpec spec = parse_distribution(cfg, params.d);
  cfg.reject_unknown("params");
  cfg.reject_unknown("distribution");
  return {params, spec};
}

}  // namespace detail

inline CommandOutcome cmd_gen(const CommonOptions& o, std::size_t n) {
  const Config cfg = detail::require_config(o);
  const auto [params, spec] = detail::model_from_config(cfg);
  const std::uint64_t seed = detail::require_seed(o);
  if (n < 2) throw Error(ErrorKind::TooFewPoints, "need n >= 2, got " + std::to_string(n));
  const Dataset data = sample(spec, n, seed);
  const std::string path = detail::out_path(o, "dataset.csv");
  auto out = detail::open_out(path);
  write_csv(data, out);
  CommandOutcome res;
  res.summary = "wrote " + std::to_string(n) + " points in d = " + std::to_string(spec.dim);
  res.artifacts.push_back(path);
  return res;
}

inline CommandOutcome cmd_interp(const CommonOptions& o, const std::string& data_path, double shrink) {
  const Dataset data = detail::load_dataset(data_path);
  const SobolevParams params = o.config.empty() ? detail::default_params(data.dim) : parse_params(detail::require_config(o));
  if (params.d != data.dim) throw Error(ErrorKind::ParamsMismatch, "[params] d differs from the dataset dimension");
  const NnRadii radii = nn_radii(data);
  const BumpInterpolant f = build(data, radii, shrink, params);
  const std::string path = detail::out_path(o, "interpolant.csv");
  auto out = detail::open_out(path);
  write_interpolant_csv(f, out);
  CommandOutcome res;
  res.summary = "interpolation error " + format_double(interpolation_error(f, data));
  res.artifacts.push_back(path);
  return res;
}

inline CommandOutcome cmd_norm(const CommonOptions& o, const std::string& interp_path, const std::string& data_path) {
  (void)o;
  const BumpInterpolant f = detail::load_interpolant(interp_path);
  const ReferenceModuli& moduli = cached_reference_moduli(f.params);
  std::ostringstream s;
  s << "norm " << format_double(sobolev_norm(f, moduli));
  if (!data_path.empty()) {
    const Dataset data = detail::load_dataset(data_path);
    const NnRadii radii = nn_radii(data);
    const GammaReport g = gamma_report(f, data, radii, moduli);
    s << "\nbump interpolant norm " << format_double(g.bump_upper_bound_norm) << "\ngamma lower bound "
      << format_double(g.gamma_lower_bound) << "\nmin-norm upper bound (p-th power) "
      << format_double(min_norm_upper_bound(data, radii, moduli));
  }
  return {kExitOk, s.str(), {}};
}

/// Structural battery on a dataset: packing, in-degree, interpolation and norm bound.
inline CommandOutcome cmd_check(const CommonOptions& o, const std::string& data_path) {
  const Dataset data = detail::load_dataset(data_path);
  const NnRadii radii = nn_radii(data);
  const int tau = kissing_number(data.dim);
  const SobolevParams params = o.config.empty() ? detail::default_params(data.dim) : parse_params(detail::require_config(o));
  if (params.d != data.dim) throw Error(ErrorKind::ParamsMismatch, "[params] d differs from the dataset dimension");

  struct Item {
    std::string name;
    std::string observed;
    bool pass;
  };
  std::vector<Item> items;
  const auto packing = check_packing(data, radii);
  items.push_back({"packing violations", std::to_string(packing.size()), packing.empty()});
  const auto deg = in_degrees(nn_graph(data), data.size());
  const std::size_t max_deg = *std::max_element(deg.begin(), deg.end());
  items.push_back({"max in-degree (<= " + std::to_string(tau) + ")", std::to_string(max_deg), max_deg <= static_cast<std::size_t>(tau)});
  const BumpInterpolant f = build(data, radii, 1.0, params);
  const double err = interpolation_error(f, data);
  items.push_back({"interpolation error (<= 1e-9)", format_double(err), err <= kInterpolationTolerance});
  const auto overlaps = support_overlaps(f);
  items.push_back({"support overlaps", std::to_string(overlaps.size()), overlaps.empty()});
  const ReferenceModuli& moduli = cached_reference_moduli(params);
  const double norm_p = std::pow(sobolev_norm(f, moduli), params.p);
  const double bound = min_norm_upper_bound(data, radii, moduli);
  items.push_back({"norm^p <= bound " + format_double(bound), format_double(norm_p), norm_p <= bound});

  CommandOutcome res;
  std::ostringstream s;
  bool ok = true;
  for (const auto& it : items) {
    s << (it.pass ? "PASS " : "FAIL ") << it.name << ": " << it.observed << '\n';
    ok = ok && it.pass;
  }
  res.summary = s.str();
  if (!res.summary.empty()) res.summary.pop_back();
  res.exit_code = ok ? kExitOk : kExitContract;
  return res;
}

inline CommandOutcome cmd_risk(const CommonOptions& o, const std::string& interp_path, std::size_t samples) {
  const Config cfg = detail::require_config(o);
  const auto [params, spec] = detail::model_from_config(cfg);
  const std::uint64_t seed = detail::require_seed(o);
  const BumpInterpolant f = detail::load_interpolant(interp_path);
  if (f.dim != spec.dim) throw Error(ErrorKind::ParamsMismatch, "interpolant and distribution differ in dimension");
  const RiskEstimate mc = excess_risk_mc([&](std::span<const double> x) { return eval(f, x); }, spec, samples, seed, o.thread_count());
  std::ostringstream s;
  s << "excess risk (monte-carlo) " << format_double(mc.mean) << " +- " << format_double(mc.std_error);
  try {
    const RiskEstimate exact = excess_risk_semianalytic(f, spec, spec.dim == 1);
    s << "\nexcess risk (semi-analytic) " << format_double(exact.mean);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnsupportedSpec) throw;
  }
  return {kExitOk, s.str(), {}};
}

inline CommandOutcome cmd_sweep(const CommonOptions& o) {
  const Config cfg = detail::require_config(o);
  SweepConfig sc = parse_sweep_config(cfg);
  if (o.seed) sc.seed = o.seed;
  if (o.format != "csv" && o.format != "json-lines") throw Error(ErrorKind::ConfigInvalid, "--format must be csv or json-lines");
  detail::out_path(o, "");
  const SweepResult result = run_sweep(sc, o.thread_count());
  CommandOutcome res;
  res.artifacts = write_outputs(result, o.out, o.format == "csv" ? RowFormat::Csv : RowFormat::JsonLines);
  std::ostringstream s;
  s << result.sweep << " '" << result.id << "' seed " << result.seed;
  for (const auto& c : result.contracts) {
    s << '\n' << (c.pass ? "PASS " : "FAIL ") << c.name << ": observed " << format_double(c.observed) << ", target " << c.target;
  }
  res.summary = s.str();
  res.exit_code = result.passed() ? kExitOk : kExitContract;
  return res;
}

/// Computes reference moduli for [params] (or every default triple) and stores them.
inline CommandOutcome cmd_moduli(const CommonOptions& o) {
  std::vector<SobolevParams> list;
  if (o.config.empty()) {
    for (int d = 1; d <= 3; ++d) list.push_back(detail::default_params(d));
  } else {
    list.push_back(parse_params(detail::require_config(o)));
  }
  CommandOutcome res;
  std::ostringstream s;
  for (const auto& params : list) {
    const ReferenceModuli& m = cached_reference_moduli(params);
    const std::string name = "moduli_k" + std::to_string(params.k) + "_p" + format_double(params.p) + "_d" + std::to_string(params.d) + ".txt";
    const std::string path = detail::out_path(o, name);
    auto out = detail::open_out(path);
    save_moduli(m, out);
    res.artifacts.push_back(path);
    s << "k = " << params.k << ", p = " << format_double(params.p) << ", d = " << params.d << ":";
    for (std::size_t i = 0; i < m.indices.size(); ++i) {
      s << " M(";
      for (int a = 0; a < params.d; ++a) s << (a ? "," : "") << m.indices[i][static_cast<std::size_t>(a)];
      s << ") = " << format_double(m.values[i]);
    }
    s << '\n';
  }
  res.summary = s.str();
  if (!res.summary.empty()) res.summary.pop_back();
  return res;
}

inline const char* kConfigHelp = R"(Config files are sectioned key = value text; '#' starts a comment.

[params]        k, p, d                       Sobolev order, exponent, dimension (kp > d)
[distribution]  radius = 1                    domain is the ball B(0, radius)
                density = uniform | radial_quadratic, density_a
                noise = constant | quadratic  sigma (constant) or noise_a, noise_b
                bump = c1,..,cd,r,w           ground-truth bump; repeat for more
[sweep]         id, name, seed, trials
                name = norm_vs_n | delta_and_subset | weighted_delta_sum |
                       risk_vs_n | risk_vs_gamma | morrey
                n_grid = 64,128,... or n_min, n_max, n_factor
                slope_tolerance, beta, frequency_n, frequency_trials, frequency_target,
                predictor = bump | kernel, shrink, lengthscale, risk_samples,
                plateau_ratio, risk_floor, clip_boundary, n, shrink_grid, gamma_slack,
                variant = exact | diagnostic, levels, growth_limit
)";

/// Parses argv-style arguments (program name excluded) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sobolev interpolation overfitting lab"};
  app.require_subcommand(1);
  app.footer(kConfigHelp);
  CommonOptions o;
  std::uint64_t seed_value = 0;
  std::size_t n = 0;
  std::size_t samples = 20000;
  double shrink = 1.0;
  std::string data_path;
  std::string interp_path;

  // every subcommand takes the same flags; --seed is required only where data is sampled
  auto common = [&](CLI::App* sub, bool samples_data) {
    sub->add_option("--config", o.config, "config file");
    sub->add_option("--seed", seed_value, samples_data ? "master seed (u64), required" : "master seed (u64), unused");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads (default: all cores)");
    sub->add_option("--format", o.format, "row format")->check(CLI::IsMember({"csv", "json-lines"}));
  };
  auto* gen = app.add_subcommand("gen", "sample a dataset");
  common(gen, true);
  gen->add_option("--n", n, "sample size")->required();
  auto* interp = app.add_subcommand("interp", "build the bump interpolant of a dataset");
  common(interp, false);
  interp->add_option("--data", data_path, "dataset CSV")->required();
  interp->add_option("--shrink", shrink, "support shrink factor in (0, 1]");
  auto* norm = app.add_subcommand("norm", "Sobolev norm of a bump interpolant");
  common(norm, false);
  norm->add_option("--interp", interp_path, "interpolant CSV")->required();
  norm->add_option("--data", data_path, "dataset CSV, for the gamma report");
  auto* check = app.add_subcommand("check", "structural checks on a dataset");
  common(check, false);
  check->add_option("--data", data_path, "dataset CSV")->required();
  auto* risk = app.add_subcommand("risk", "excess risk of a bump interpolant");
  common(risk, true);
  risk->add_option("--interp", interp_path, "interpolant CSV")->required();
  risk->add_option("--samples", samples, "Monte Carlo samples");
  auto* sweep = app.add_subcommand("sweep", "run an experiment sweep");
  common(sweep, true);
  auto* moduli = app.add_subcommand("moduli", "compute and store reference moduli");
  common(moduli, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) o.seed = seed_value;
  }

  try {
    CommandOutcome res;
    if (gen->parsed()) {
      res = cmd_gen(o, n);
    } else if (interp->parsed()) {
      res = cmd_interp(o, data_path, shrink);
    } else if (norm->parsed()) {
      res = cmd_norm(o, interp_path, data_path);
    } else if (check->parsed()) {
      res = cmd_check(o, data_path);
    } else if (risk->parsed()) {
      res = cmd_risk(o, interp_path, samples);
    } else if (sweep->parsed()) {
      res = cmd_sweep(o);
    } else {
      res = cmd_moduli(o);
    }
    out << res.summary << '\n';
    for (const auto& a : res.artifacts) out << "wrote " << a << '\n';
    return res.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace soblab::cli
