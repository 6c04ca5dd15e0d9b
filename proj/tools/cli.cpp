#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sfk/analysis.hpp"
#include "sfk/problems.hpp"
#include "sfk/random.hpp"
#include "sfk/solvers.hpp"
#include "sfk/version.hpp"

namespace sfk::cli {

namespace {

namespace fs = std::filesystem;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::string experiment;
  // solvers
  std::string solvers;
  std::size_t maxit = 0;
  double tol = 0.0;
  std::size_t window = 2;
  double eta = 1.01;
  bool discrepancy = false;
  std::string discrepancy_on = "true";
  std::string sketch = "auto";
  std::size_t sketch_size = 0;
  std::int64_t rank = -1;
  std::size_t oversample = 5;
  std::size_t power_iters = 1;
  bool track_true_residual = true;
  // problem
  std::size_t m = 1024;
  std::size_t n = 0;
  std::string rho = "1.01";
  double delta = -1.0;
  double psf_variance = 0.25;
  double keep = 0.8;
  std::size_t angles = 60;
  std::size_t rays = 96;
  double asymmetry = 4e-2;
  // corollary
  std::size_t k = 10;
  std::size_t s = 41;
  std::size_t trials = 2000;
  // timing
  std::string problem = "deblur";
  std::size_t repeats = 5;
  // seeds and output
  std::uint64_t seed = 1;
  std::int64_t sketch_seed = -1;
  std::string out = "out";
  bool images = true;
  std::string config;
};

struct SolverSpec {
  std::string name;
  SolverKind kind;
  bool randomized = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<SolverSpec> parse_solvers(const std::string& list) {
  std::vector<SolverSpec> out;
  for (const std::string& name : split(list, ',')) {
    SolverSpec spec{name, SolverKind::lsqr, false};
    std::string base = name;
    if (base.size() > 4 && base.ends_with("-rnd")) {
      spec.randomized = true;
      base.resize(base.size() - 4);
    }
    try {
      spec.kind = solver_kind_from_string(base);
    } catch (const SolverError&) {
      throw ConfigError("unknown solver '" + name +
                        "'; choose from lsqr, lsmr, flsqr, flsmr, sflsqr, sflsmr, sflsqr-rnd, "
                        "sflsmr-rnd");
    }
    if (spec.randomized && (spec.kind == SolverKind::lsqr || spec.kind == SolverKind::lsmr))
      throw ConfigError("'" + name + "': lsqr/lsmr take no truncation, so -rnd does not apply");
    if (std::any_of(out.begin(), out.end(), [&](const SolverSpec& s) { return s.name == name; }))
      throw ConfigError("solver '" + name + "' listed twice");
    out.push_back(spec);
  }
  if (out.empty()) throw ConfigError("--solvers is empty");
  return out;
}

bool is_image(const std::string& exp) { return exp == "deblur" || exp == "ct"; }

// Fills experiment-dependent defaults in place; the manifest records the result.
void resolve(Options& o) {
  const std::string p = o.experiment == "timing" ? o.problem : o.experiment;
  if (o.experiment == "timing" && p != "synth" && p != "deblur" && p != "ct")
    throw ConfigError("--problem must be synth, deblur or ct");
  if (o.n == 0) o.n = o.experiment == "timing" ? (p == "synth" ? 512 : 128)
                      : (p == "synth" || p == "bounds" || p == "corollary") ? 512 : 64;
  if (o.delta < 0.0) o.delta = (p == "deblur" || p == "ct") ? 0.05 : 0.10;
  if (o.maxit == 0)
    o.maxit = o.experiment == "bounds" ? 20 : o.experiment == "ct" ? 30 : 50;
  if (o.solvers.empty())
    o.solvers = o.experiment == "timing"
                    ? (p == "ct" ? "flsqr,sflsqr,flsmr,sflsmr" : "lsqr,flsqr,sflsqr,flsmr,sflsmr")
                : p == "ct"     ? "flsqr,sflsqr,sflsmr"
                : p == "deblur" ? "lsqr,flsqr,sflsqr,sflsmr"
                                : "lsqr,sflsqr,sflsmr";
  if (o.sketch == "auto") o.sketch = is_image(p) ? "countsketch" : "gaussian";
  if (o.sketch_size == 0) o.sketch_size = 2 * o.maxit + 1;
  if (o.rank < 0)
    o.rank = p == "deblur" ? std::int64_t(std::max<std::size_t>(8, default_truncation_rank(o.n))) : 0;
  if (o.sketch_seed < 0) o.sketch_seed = std::int64_t(derive_seed(o.seed, "sketch") >> 1);
  if (o.discrepancy_on != "true" && o.discrepancy_on != "sketched")
    throw ConfigError("--discrepancy-on must be 'true' or 'sketched'");
  if (o.eta <= 1.0) throw ConfigError("--eta must be > 1");
  if (o.tol < 0.0) throw ConfigError("--tol must be >= 0");
  if (o.window == 0) throw ConfigError("--window must be >= 1");
}

Problem build_problem(const Options& o, const std::string& kind, double rho) {
  const std::uint64_t ps = derive_seed(o.seed, "problem");
  if (kind == "synth") return synthetic_decay(o.m, o.n, rho, o.delta, ps);
  if (kind == "deblur")
    return deblur_inpaint_problem(o.n, o.psf_variance, o.keep, o.delta,
                                  static_cast<std::size_t>(std::max<std::int64_t>(o.rank, 0)), ps);
  if (kind == "ct") return ct_problem(o.n, o.angles, o.rays, o.delta, o.asymmetry, ps);
  throw ConfigError("unknown problem '" + kind + "'");
}

double single_rho(const Options& o) {
  const auto parts = split(o.rho, ',');
  if (parts.size() != 1) throw ConfigError("--rho takes a single value here");
  return std::stod(parts[0]);
}

void validate_solvers(const std::vector<SolverSpec>& specs, const Problem& p, const Options& o) {
  for (const SolverSpec& s : specs) {
    if ((s.kind == SolverKind::lsqr || s.kind == SolverKind::lsmr) && !p.a.matched())
      throw ConfigError(s.name + " needs a matched adjoint but this problem's adjoint is "
                        "unmatched; use flsqr/flsmr/sflsqr/sflsmr or --asymmetry 0");
    if (s.randomized && o.rank <= 0)
      throw ConfigError(s.name + " needs a truncation rank; set --rank");
    const bool sketched = s.kind == SolverKind::sflsqr || s.kind == SolverKind::sflsmr;
    if (sketched) {
      const std::size_t dim = s.kind == SolverKind::sflsqr ? p.a.rows() : p.a.cols();
      if (o.sketch != "identity" && o.sketch_size > dim)
        throw ConfigError(s.name + ": --sketch-size " + std::to_string(o.sketch_size) +
                          " exceeds the sketched dimension " + std::to_string(dim));
    }
    if (o.discrepancy_on == "sketched" && o.discrepancy &&
        (s.kind == SolverKind::lsmr || s.kind == SolverKind::flsmr || s.kind == SolverKind::sflsmr))
      throw ConfigError(s.name + ": the sketched discrepancy target needs a residual-type "
                        "objective; use --discrepancy-on true");
  }
  if (o.rank > 0) {
    if (!p.grid) throw ConfigError("--rank needs an image problem (deblur or ct)");
    if (std::size_t(o.rank) > std::min(p.grid->height, p.grid->width))
      throw ConfigError("--rank exceeds the image size");
  }
}

SolverConfig make_config(const SolverSpec& s, const Problem& p, const Options& o) {
  SolverConfig c;
  c.maxit = o.maxit;
  c.tol = o.tol;
  c.window = o.window;
  c.eta = o.eta;
  c.delta_e = p.delta_e;
  c.stop_on_discrepancy = o.discrepancy;
  c.discrepancy_on = o.discrepancy_on == "sketched" && s.kind != SolverKind::sflsmr &&
                             s.kind != SolverKind::flsmr && s.kind != SolverKind::lsmr
                         ? DiscrepancyTarget::sketched_residual
                         : DiscrepancyTarget::true_residual;
  c.track_true_residual = o.track_true_residual;
  if (o.rank > 0 && s.kind != SolverKind::lsqr && s.kind != SolverKind::lsmr) {
    const std::size_t r = std::size_t(o.rank);
    c.tau = s.randomized
                ? TruncationOperator::rank_randomized(
                      *p.grid, r, {o.oversample, o.power_iters, derive_seed(o.seed, "truncation")})
                : TruncationOperator::rank_exact(*p.grid, r);
  }
  if (s.kind == SolverKind::sflsqr || s.kind == SolverKind::sflsmr) {
    const std::size_t dim = s.kind == SolverKind::sflsqr ? p.a.rows() : p.a.cols();
    const std::uint64_t seed = derive_seed(std::uint64_t(o.sketch_seed), s.name);
    c.sketch = o.sketch == "identity" ? identity_sketch(dim)
                                      : make_sketch(sketch_kind_from_string(o.sketch),
                                                    o.sketch_size, dim, seed);
  }
  return c;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_history(const fs::path& path, const SolveHistory& h) {
  std::ofstream f = open_out(path);
  f << "iter,res_rel,sketched_res_rel,err_rel\n";
  for (std::size_t k = 1; k <= h.iterations(); ++k)
    f << k << ',' << num(h.true_residual[k - 1] / h.b_norm) << ','
      << num(h.sketched_residual[k - 1] / h.objective_ref) << ',' << num(h.error[k - 1]) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

// key=value lines that feed back through --config reproduce the run.
void write_manifest(const fs::path& dir, const Options& o,
                    const std::vector<std::string>& results) {
  std::ofstream f = open_out(dir / "manifest");
  f << "# sfk manifest, library version " << SFK_VERSION << "\n"
    << "# reproduce with: sfk " << o.experiment << " --config <this file>\n"
    << "# experiment=" << o.experiment << "\n";
  auto kv = [&f](const char* k, const auto& v) { f << k << '=' << v << '\n'; };
  kv("solvers", o.solvers);
  kv("maxit", o.maxit);
  kv("tol", num(o.tol));
  kv("window", o.window);
  kv("eta", num(o.eta));
  kv("discrepancy", o.discrepancy ? "true" : "false");
  kv("discrepancy-on", o.discrepancy_on);
  kv("sketch", o.sketch);
  kv("sketch-size", o.sketch_size);
  kv("rank", o.rank);
  kv("oversample", o.oversample);
  kv("power-iters", o.power_iters);
  kv("track-true-residual", o.track_true_residual ? "true" : "false");
  kv("m", o.m);
  kv("n", o.n);
  kv("rho", o.rho);
  kv("delta", num(o.delta));
  kv("psf-variance", num(o.psf_variance));
  kv("keep", num(o.keep));
  kv("angles", o.angles);
  kv("rays", o.rays);
  kv("asymmetry", num(o.asymmetry));
  kv("k", o.k);
  kv("s", o.s);
  kv("trials", o.trials);
  kv("problem", o.problem);
  kv("repeats", o.repeats);
  kv("seed", o.seed);
  kv("sketch-seed", o.sketch_seed);
  kv("out", o.out);
  kv("images", o.images ? "true" : "false");
  f << "# derived seeds: problem=" << derive_seed(o.seed, "problem")
    << " truncation=" << derive_seed(o.seed, "truncation") << "\n";
  for (const std::string& r : results) f << "# " << r << "\n";
}

void write_images(const fs::path& dir, const Problem& p, const Options& o) {
  const ImageGrid g = *p.grid;
  write_pgm((dir / "x_true.pgm").string(), unvec(g, p.x_true), 0.0, 1.0);
  if (p.name == "ct") {
    const ImageGrid sino{o.rays, o.angles};
    write_pgm((dir / "sinogram.pgm").string(), unvec(sino, p.b));
  } else {
    Vector obs(g.size(), 0.0);
    const auto kept = subsample_indices(g, o.keep, derive_seed(derive_seed(o.seed, "problem"), "mask"));
    for (std::size_t i = 0; i < kept.size(); ++i) obs[kept[i]] = p.b[i];
    write_pgm((dir / "observed.pgm").string(), unvec(g, obs), 0.0, 1.0);
  }
}

fs::path prepare_dir(const Options& o) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + o.out + ": " + ec.message());
  return dir;
}

std::string describe(const SolverSpec& s, const SolveHistory& h) {
  std::string r = "result." + s.name + ": iterations=" + std::to_string(h.iterations()) +
                  " stop_reason=" + h.stop_reason + " breakdown=" + (h.breakdown ? "true" : "false");
  r += " discrepancy_iteration=" + (h.stop_iteration ? std::to_string(*h.stop_iteration) : "none");
  if (h.iterations() > 0) r += " final_res_rel=" + num(h.true_residual.back() / h.b_norm);
  if (h.iterations() > 0 && !h.error.empty()) r += " final_err_rel=" + num(h.error.back());
  return r;
}

int run_solvers(Options& o) {
  const Problem p = build_problem(o, o.experiment, single_rho(o));
  const auto specs = parse_solvers(o.solvers);
  validate_solvers(specs, p, o);
  const fs::path dir = prepare_dir(o);
  std::vector<std::string> results;
  results.push_back("problem: m=" + std::to_string(p.a.rows()) + " n=" + std::to_string(p.a.cols()) +
                    " delta_e=" + num(p.delta_e) + " matched=" + (p.a.matched() ? "true" : "false"));
  int status = 0;
  for (const SolverSpec& s : specs) {
    try {
      const SolveHistory h = solve(s.kind, p.a, p.b, make_config(s, p, o), p.x_true);
      write_history(dir / (s.name + ".csv"), h);
      if (p.grid && o.images)
        write_pgm((dir / (s.name + ".pgm")).string(), unvec(*p.grid, h.x), 0.0, 1.0);
      results.push_back(describe(s, h));
      std::cout << s.name << ": " << h.iterations() << " iterations, stop " << h.stop_reason;
      if (h.iterations() > 0)
        std::cout << ", final res_rel " << h.true_residual.back() / h.b_norm << ", err_rel "
                  << h.error.back();
      std::cout << '\n';
    } catch (const std::invalid_argument& e) {
      results.push_back("result." + s.name + ": failed: " + e.what());
      std::cerr << "error: " << s.name << ": " << e.what() << '\n';
      status = 1;
    }
  }
  if (p.grid && o.images) write_images(dir, p, o);
  write_manifest(dir, o, results);
  return status;
}

int run_bounds(Options& o) {
  const fs::path dir = prepare_dir(o);
  std::ofstream f = open_out(dir / "bounds.csv");
  f << "rho,iter,r_opt,r_sflsqr,r_sflsmr,bound1,bound2,factor1,factor2,bound1_ok,bound2_ok\n";
  std::size_t violations = 0;
  std::vector<std::string> results;
  for (const std::string& rs : split(o.rho, ',')) {
    const double rho = std::stod(rs);
    const Problem p = build_problem(o, "synth", rho);
    if (o.sketch_size > p.a.cols()) throw ConfigError("--sketch-size exceeds n");
    SolverConfig c;
    c.maxit = o.maxit;
    c.tol = 0.0;
    c.window = o.window;
    const std::uint64_t ss = std::uint64_t(o.sketch_seed);
    const SketchKind kind = sketch_kind_from_string(o.sketch);
    const BoundReport rep =
        bound_report(p.a, p.b, c, make_sketch(kind, o.sketch_size, p.a.rows(), derive_seed(ss, "sflsqr")),
                     make_sketch(kind, o.sketch_size, p.a.cols(), derive_seed(ss, "sflsmr")));
    for (const BoundRow& r : rep.rows)
      f << rs << ',' << r.k << ',' << num(r.r_opt) << ',' << num(r.r_sflsqr) << ','
        << num(r.r_sflsmr) << ',' << num(r.bound1) << ',' << num(r.bound2) << ','
        << num(r.factor1) << ',' << num(r.factor2) << ',' << r.bound1_ok << ',' << r.bound2_ok
        << '\n';
    violations += rep.violations();
    results.push_back("rho=" + rs + ": rows=" + std::to_string(rep.rows.size()) +
                      " violations=" + std::to_string(rep.violations()));
    std::cout << "rho " << rs << ": " << rep.rows.size() << " iterations, "
              << rep.violations() << " bound violations\n";
  }
  write_manifest(dir, o, results);
  return violations == 0 ? 0 : 1;
}

int run_corollary(Options& o) {
  const Problem p = build_problem(o, "synth", single_rho(o));
  if (o.k == 0 || o.k > p.a.cols()) throw ConfigError("--k must be in [1, n]");
  if (o.s <= o.k + 1) throw ConfigError("--s must exceed k + 1");
  if (o.s > p.a.rows()) throw ConfigError("--s must not exceed m");
  Rng rng(derive_seed(o.seed, "subspace"));
  const DenseMatrix z = gaussian_matrix(p.a.cols(), o.k, rng);
  const CorollaryResult r =
      corollary_check(p.a, z, p.b, o.s, o.trials, derive_seed(o.seed, "trials"));
  std::cout << "empirical,predicted,rel_err\n"
            << num(r.empirical_mean) << ',' << num(r.predicted) << ',' << num(r.rel_err()) << '\n';
  const fs::path dir = prepare_dir(o);
  std::ofstream f = open_out(dir / "corollary.csv");
  f << "k,s,trials,r_opt,empirical,standard_error,predicted,rel_err,predicted_exact,rel_err_exact\n"
    << r.k << ',' << r.s << ',' << r.trials << ',' << num(r.r_opt) << ',' << num(r.empirical_mean)
    << ',' << num(r.standard_error) << ',' << num(r.predicted) << ',' << num(r.rel_err()) << ','
    << num(r.predicted_exact) << ',' << num(r.rel_err_exact()) << '\n';
  write_manifest(dir, o, {"empirical=" + num(r.empirical_mean), "predicted=" + num(r.predicted),
                          "predicted_exact=" + num(r.predicted_exact)});
  return 0;
}

int run_timing(Options& o) {
  const Problem p = build_problem(o, o.problem, single_rho(o));
  const auto specs = parse_solvers(o.solvers);
  validate_solvers(specs, p, o);
  if (o.repeats == 0) throw ConfigError("--repeats must be >= 1");
  std::map<std::string, std::vector<double>> times;
  for (std::size_t rep = 0; rep < o.repeats; ++rep)
    for (const SolverSpec& s : specs) {
      SolverConfig c = make_config(s, p, o);
      const auto t0 = std::chrono::steady_clock::now();
      solve(s.kind, p.a, p.b, c);
      times[s.name].push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
  const fs::path dir = prepare_dir(o);
  std::ofstream f = open_out(dir / "timing.csv");
  f << "solver,median_s,min_s,max_s,repeats\n";
  std::vector<std::string> results;
  for (const SolverSpec& s : specs) {
    std::vector<double> v = times[s.name];
    std::sort(v.begin(), v.end());
    const double med = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    f << s.name << ',' << num(med) << ',' << num(v.front()) << ',' << num(v.back()) << ','
      << v.size() << '\n';
    std::printf("%-12s median %.4f s (min %.4f, max %.4f)\n", s.name.c_str(), med, v.front(), v.back());
    results.push_back("timing." + s.name + ": median_s=" + num(med));
  }
  write_manifest(dir, o, results);
  return 0;
}

void add_solver_options(CLI::App* c, Options& o) {
  c->add_option("--solvers", o.solvers, "comma list: lsqr,lsmr,flsqr,flsmr,sflsqr,sflsmr and -rnd variants");
  c->add_option("--maxit", o.maxit, "iterations (default depends on experiment)");
  c->add_option("--tol", o.tol, "relative tolerance on the solver objective (0 = run maxit)");
  c->add_option("--window", o.window, "orthogonalization window for sflsqr/sflsmr");
  c->add_option("--eta", o.eta, "discrepancy safety factor");
  c->add_flag("--discrepancy", o.discrepancy, "stop at the discrepancy principle");
  c->add_option("--discrepancy-on", o.discrepancy_on, "true | sketched");
  c->add_option("--sketch", o.sketch, "gaussian | countsketch | identity");
  c->add_option("--sketch-size", o.sketch_size, "sketch rows (default 2*maxit+1)");
  c->add_option("--rank", o.rank, "truncation rank for the flexible solvers (0 = none)");
  c->add_option("--oversample", o.oversample, "randomized SVD oversampling");
  c->add_option("--power-iters", o.power_iters, "randomized SVD power iterations");
  c->add_flag("--track-true-residual,!--no-true-residual", o.track_true_residual,
              "compute ||Ax-b|| every iteration");
}

void add_problem_options(CLI::App* c, Options& o) {
  c->add_option("--m", o.m, "rows of the synthetic problem");
  c->add_option("--n", o.n, "columns (synth) or image side (deblur, ct)");
  c->add_option("--rho", o.rho, "singular value decay; bounds accepts a comma list");
  c->add_option("--delta", o.delta, "relative noise level");
  c->add_option("--psf-variance", o.psf_variance, "Gaussian PSF variance in pixels^2");
  c->add_option("--keep", o.keep, "fraction of pixels kept by the mask");
  c->add_option("--angles", o.angles, "CT projection angles");
  c->add_option("--rays", o.rays, "CT rays per angle");
  c->add_option("--asymmetry", o.asymmetry, "target adjoint asymmetry (0 = matched)");
}

void add_common_options(CLI::App* c, Options& o) {
  c->add_option("--seed", o.seed, "master seed");
  c->add_option("--sketch-seed", o.sketch_seed, "sketch seed (default derived from --seed)");
  c->add_option("--out", o.out, "output directory");
  c->add_flag("--images,!--no-images", o.images, "write PGM images for image problems");
  // Consumed before parsing; declared so it shows up in --help.
  c->add_option("--config", o.config, "key=value file mirroring the flags; flags win");
  // Keys that only appear in manifests of other experiments.
  c->add_option("--k", o.k, "subspace dimension (corollary)");
  c->add_option("--s", o.s, "sketch rows (corollary)");
  c->add_option("--trials", o.trials, "Monte Carlo trials (corollary)");
  c->add_option("--problem", o.problem, "synth | deblur | ct (timing)");
  c->add_option("--repeats", o.repeats, "runs per solver (timing)");
}

// Expands --config into flags placed right after the subcommand, so that
// explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (!path) return args;
  if (rest.empty()) throw ConfigError("--config must follow a subcommand");
  out.push_back(rest[0]);
  for (const auto& [k, v] : read_config(*path)) out.push_back("--" + k + "=" + v);
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    kv.emplace_back(key, value);
  }
  return kv;
}

int run(const std::vector<std::string>& raw_args) {
  Options o;
  CLI::App app{"Sketched flexible Krylov solvers: desk-scale experiments"};
  app.set_version_flag("--version", SFK_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  const std::pair<const char*, const char*> subs[] = {
      {"synth", "synthetic problem with decaying singular values"},
      {"deblur", "deblurring and inpainting of a test scene"},
      {"ct", "parallel-beam CT with an unmatched adjoint"},
      {"bounds", "deterministic residual bounds of sflsqr/sflsmr"},
      {"corollary", "Monte Carlo expected sflsqr residual on a fixed subspace"},
      {"timing", "median wall time per solver"},
  };
  for (const auto& [name, help] : subs) {
    CLI::App* c = app.add_subcommand(name, help);
    add_solver_options(c, o);
    add_problem_options(c, o);
    add_common_options(c, o);
    c->callback([&o, n = std::string(name)] { o.experiment = n; });
  }

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    resolve(o);
    if (o.experiment == "bounds") return run_bounds(o);
    if (o.experiment == "corollary") return run_corollary(o);
    if (o.experiment == "timing") return run_timing(o);
    return run_solvers(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sfk::cli
