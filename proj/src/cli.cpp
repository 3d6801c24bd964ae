#include "fk/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fk/config.hpp"
#include "fk/elliptic.hpp"
#include "fk/errors.hpp"
#include "fk/rng.hpp"
#include "fk/text.hpp"

namespace fk {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool quiet = false;
  std::string x;
  std::optional<double> tol;
  std::optional<double> lambda;
};

// Held for the duration of a run so two runs cannot share an output directory.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".fkrun.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) fail(ErrorKind::InvalidConfig, "cli", "output directory is locked by another run: " + path_.string());
  }
  ~DirLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidInput, "cli", "cannot write " + p.string());
  out << text;
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << "\n";
  }
  Csv& operator<<(double v) {
    sep();
    os_ << to_text(v);
    return *this;
  }
  Csv& operator<<(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) *this << v(i);
    return *this;
  }
  Csv& cell(const std::string& s) {
    sep();
    os_ << s;
    return *this;
  }
  Csv& integer(long long v) {
    sep();
    os_ << v;
    return *this;
  }
  void end_row() {
    os_ << "\n";
    first_ = true;
  }
  std::string str() const { return os_.str(); }

 private:
  void sep() {
    if (!first_) os_ << ",";
    first_ = false;
  }
  std::ostringstream os_;
  bool first_ = true;
};

std::vector<std::string> indexed(const std::string& stem, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json base_summary(const std::string& command, const ExperimentConfig& cfg) {
  json s;
  s["command"] = command;
  s["config_hash"] = cfg.hash;
  s["config"] = cfg.resolved;
  s["seed"] = cfg.seed;
  return s;
}

Problem threaded(const ExperimentConfig& cfg, int threads) {
  Problem p = cfg.problem;
  p.solver.threads = threads;
  p.sim.threads = threads;
  return p;
}

void report(const Flags& f, const std::string& line) {
  if (!f.quiet) std::cout << line << "\n";
}

json run_forward(const ExperimentConfig& cfg, const Flags& f, const fs::path& out) {
  const Problem pr = threaded(cfg, f.threads);
  const auto bundle = simulate_reflected(pr.domain, pr.coeffs, pr.grid, cfg.t, cfg.x, cfg.M, cfg.seed, pr.sim);
  const auto A = local_time_mean(bundle);
  const auto res = local_time_identity_residual(pr.domain, pr.coeffs, bundle);
  const int N = bundle.N();
  std::size_t on_boundary = 0;
  Vec xT = Vec::Zero(bundle.d);
  for (std::size_t p = 0; p < bundle.M; ++p) {
    for (int n = 0; n <= N; ++n) on_boundary += bundle.on_boundary(p, n) ? 1 : 0;
    xT += Eigen::Map<const Vec>(bundle.x(p, N), bundle.d);
  }
  xT /= static_cast<double>(bundle.M);
  json s = base_summary("forward-sim", cfg);
  s["scheme"] = to_string(pr.sim.scheme);
  s["start_index"] = bundle.start_index;
  s["snap_distance"] = bundle.snap_distance;
  s["A_T"] = {{"mean", A.mean}, {"se", A.se}};
  s["X_T_mean"] = to_json(xT);
  s["identity_residual"] = {{"rms", res.rms}, {"max_abs", res.max_abs}};
  s["boundary_fraction"] = static_cast<double>(on_boundary) / (static_cast<double>(bundle.M) * (N + 1));
  write_bundle_csv(bundle, (out / "bundle.csv").string(), cfg.forward.csv_paths);
  if (cfg.forward.binary) write_bundle_binary(bundle, (out / "bundle.bin").string());
  report(f, "E A_T = " + to_text(A.mean) + " (se " + to_text(A.se) + "), identity residual rms " + to_text(res.rms));
  return s;
}

json run_solve(const ExperimentConfig& cfg, const Flags& f, const fs::path& out) {
  const Problem pr = threaded(cfg, f.threads);
  const Solved solved = solve_problem(pr, cfg.t, cfg.x, cfg.M, cfg.seed);
  const UEstimate u = start_value(solved.solution);
  json s = base_summary("solve", cfg);
  s["u"] = to_json(u.u);
  s["std"] = to_json(u.spread);
  s["se"] = to_json(u.se);
  s["snap_distance"] = solved.bundle.snap_distance;
  s["max_condition"] = solved.solution.max_condition;
  s["split_order"] = to_string(pr.solver.order);
  s["basis"] = to_string(pr.solver.basis.kind);
  if (cfg.solve.vi_tests > 0) {
    const ViReport vi = vi_residual(solved.solution, *pr.phi, *pr.psi, cfg.solve.vi_tests, derive_seed(cfg.seed, 7));
    s["vi_residual"] = {{"worst", vi.worst}, {"worst_phi", vi.worst_phi}, {"worst_psi", vi.worst_psi},
                        {"tests", vi.tests}};
  }
  if (!cfg.solve.markov_probes.empty()) {
    const auto rows = markov_consistency(pr, cfg.t, cfg.x, cfg.solve.markov_probes, cfg.M, cfg.seed,
                                         cfg.solve.markov_subsample);
    json mr = json::array();
    for (const auto& r : rows) mr.push_back({{"s", r.s}, {"index", r.index}, {"mean_abs", r.mean_abs}, {"probes", r.probes}});
    s["markov"] = mr;
  }
  write_solution_csv(solved.solution, (out / "solution.csv").string(), cfg.solve.csv_paths);
  report(f, "u = " + to_text(u.u) + " (se " + to_text(u.se) + ")");
  return s;
}

Vec parse_point(const std::string& text, int d) {
  Vec x(d);
  std::stringstream ss(text);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= d) fail(ErrorKind::InvalidConfig, "cli", "--x has more than " + std::to_string(d) + " entries");
    try {
      std::size_t used = 0;
      x(i) = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidConfig, "cli", "--x: cannot parse '" + item + "'");
    }
    ++i;
  }
  if (i != d) fail(ErrorKind::InvalidConfig, "cli", "--x needs " + std::to_string(d) + " comma-separated entries");
  return x;
}

json run_elliptic(const ExperimentConfig& cfg, const Flags& f, const fs::path& out) {
  const Problem& pr = cfg.problem;
  if (!pr.phi->is_zero() || !pr.psi->is_zero()) {
    fail(ErrorKind::InvalidConfig, "elliptic", "phi and psi must be zero");
  }
  const json& kap = cfg.resolved.at("kappa");
  const auto zero = [](const json& v) { return v.is_number() && v.get<double>() == 0.0; };
  bool kappa_zero = kap.is_array() ? std::all_of(kap.begin(), kap.end(), zero) : zero(kap);
  if (!kappa_zero) fail(ErrorKind::InvalidConfig, "elliptic", "terminal data kappa must be 0");

  EllipticConfig ec;
  ec.domain = pr.domain;
  ec.coeffs = pr.coeffs;
  ec.driver = pr.driver;
  ec.lambda = f.lambda ? *f.lambda : (cfg.elliptic.lambda ? *cfg.elliptic.lambda : default_lambda(pr.driver));
  ec.tol = f.tol ? *f.tol : cfg.elliptic.tol;
  ec.n_max = cfg.elliptic.n_max;
  ec.steps_per_unit = cfg.elliptic.steps_per_unit;
  ec.pilot_n = cfg.elliptic.pilot_n;
  ec.solver = pr.solver;
  ec.solver.threads = f.threads;
  ec.sim = pr.sim;
  ec.sim.threads = f.threads;
  ec.validate();
  const Vec x = f.x.empty() ? cfg.x : parse_point(f.x, pr.domain.dim());
  if (!pr.domain.in_closure(x)) fail(ErrorKind::InvalidConfig, "elliptic", "x lies outside the closure of the domain");

  const EllipticResult r = solve_elliptic(ec, x, cfg.M, cfg.seed, cfg.elliptic.horizons);
  json s = base_summary("elliptic", cfg);
  s["x"] = to_json(x);
  s["lambda"] = ec.lambda;
  s["tol"] = ec.tol;
  s["u"] = to_json(r.u.u);
  s["n_used"] = r.calibration.horizon.n;
  s["capped"] = r.calibration.horizon.capped;
  s["c_hat"] = r.calibration.c_hat;
  json table = json::array();
  Csv csv(concat(concat({"n"}, indexed("y", ec.driver.m)), {"gap"}));
  for (const auto& row : r.decay) {
    table.push_back({{"n", row.n}, {"y", to_json(row.y)}, {"gap", row.gap}});
    csv.integer(row.n) << row.y << row.gap;
    csv.end_row();
  }
  s["decay_table"] = table;
  int positive = 0;
  for (std::size_t i = 0; i + 1 < r.decay.size(); ++i) positive += r.decay[i].gap > 0.0 ? 1 : 0;
  if (positive >= 2) s["decay_slope"] = fit_log_slope(r.decay);
  write_text(out / "decay.csv", csv.str());
  if (r.calibration.horizon.capped && !f.quiet) {
    std::cerr << "warning: horizon capped at n_max = " << ec.n_max << "\n";
  }
  report(f, "u = " + to_text(r.u.u) + " at horizon " + std::to_string(r.calibration.horizon.n));
  return s;
}

json run_continuity(const ExperimentConfig& cfg, const Flags& f, const fs::path& out) {
  const Problem pr = threaded(cfg, f.threads);
  const ContinuityReport rep = continuity_scan(pr, cfg.continuity, cfg.M, cfg.seed);
  const int d = pr.domain.dim();
  const int m = pr.driver.m;
  json s = base_summary("continuity", cfg);
  s["kind"] = to_string(cfg.continuity.kind);
  s["u"] = to_json(rep.u);
  json rows = json::array();
  Csv csv(concat(concat(concat({"n", "t"}, indexed("x", d)), {"e", "se"}), concat(indexed("u", m), {"du"})));
  for (const auto& r : rep.rows) {
    rows.push_back({{"n", r.n}, {"t", r.t}, {"x", to_json(r.x)}, {"e", r.e}, {"se", r.se}, {"u", to_json(r.u)},
                    {"du", r.du}});
    csv.integer(r.n) << r.t << r.x << r.e << r.se << r.u << r.du;
    csv.end_row();
  }
  s["rows"] = rows;
  s["trend_ok"] = rep.trend_ok;
  s["target_ok"] = rep.target_ok;
  s["u_ok"] = rep.u_ok;
  s["verdict"] = rep.pass() ? "PASS" : "FAIL";
  write_text(out / "continuity.csv", csv.str());
  report(f, std::string("continuity ") + (rep.pass() ? "PASS" : "FAIL"));
  return s;
}

// At most ~`cap` evenly strided rows and columns of a grid.
std::string grid_csv(const SpaceTimeGrid& g, int cap) {
  const int nt = static_cast<int>(g.t.size());
  const int nx = static_cast<int>(g.x.size());
  const int st = std::max(1, (nt - 1) / cap);
  const int sx = std::max(1, (nx - 1) / cap);
  Csv csv({"t", "x", "u"});
  for (int i = 0; i < nt; i += st) {
    for (int j = 0; j < nx; j += sx) {
      csv << g.t[i] << g.x[j] << g.U(i, j);
      csv.end_row();
    }
  }
  return csv.str();
}

json run_validate_fd(const ExperimentConfig& cfg, const Flags& f, const fs::path& out) {
  const Problem pr = threaded(cfg, f.threads);
  const FdGridSolution fd = fd_reference_parabolic_1d(pr, cfg.fd);
  const int row = static_cast<int>(std::lround(cfg.t / pr.grid.T() * cfg.fd.nt));
  const double fd_u = fd.grid.at(row, cfg.x(0));
  const UEstimate mc = evaluate_u(pr, cfg.t, cfg.x, cfg.M, cfg.seed);
  json s = base_summary("validate-fd", cfg);
  s["fd_u"] = fd_u;
  s["fd_time"] = fd.grid.t[row];
  s["mc_u"] = mc.u(0);
  s["mc_se"] = mc.se(0);
  s["abs_diff"] = std::abs(fd_u - mc.u(0));
  double robin = 0.0;
  for (std::size_t i = 0; i + 1 < fd.robin_residual.size(); ++i) robin = std::max(robin, fd.robin_residual[i]);
  s["robin_residual_max"] = robin;
  write_text(out / "fd_grid.csv", grid_csv(fd.grid, 100));
  report(f, "fd u = " + to_text(fd_u) + ", mc u = " + to_text(mc.u(0)) + ", |diff| = " + to_text(std::abs(fd_u - mc.u(0))));
  return s;
}

json run_residuals(const ExperimentConfig& cfg, const Flags& f, const fs::path& out) {
  const Problem pr = threaded(cfg, f.threads);
  SpaceTimeGrid grid;
  if (cfg.residuals.source == "fd") {
    FdOptions o = cfg.fd;
    o.nx = cfg.residuals.nx;
    o.nt = cfg.residuals.nt;
    grid = fd_reference_parabolic_1d(pr, o).grid;
  } else {
    const auto& box = pr.domain.bounding_box();
    std::vector<double> ts, xs;
    for (int i = 0; i <= cfg.residuals.nt; ++i) ts.push_back(pr.grid.T() * i / cfg.residuals.nt);
    for (int j = 0; j <= cfg.residuals.nx; ++j) {
      xs.push_back(j == cfg.residuals.nx ? box.hi(0) : box.lo(0) + (box.hi(0) - box.lo(0)) * j / cfg.residuals.nx);
    }
    ts.back() = pr.grid.T();
    grid = sample_u_grid(pr, ts, xs, cfg.M, cfg.seed);
  }
  const PdeResidualReport r = pde_residuals(grid, pr, cfg.residuals.options);
  json s = base_summary("residuals", cfg);
  s["source"] = cfg.residuals.source;
  s["interior"] = {{"max", r.interior_max}, {"rms", r.interior_rms}, {"nodes", r.interior_nodes}};
  s["boundary"] = {{"max", r.boundary_max}, {"rms", r.boundary_rms}, {"nodes", r.boundary_nodes}};
  s["membership"] = {{"max", r.membership_max}, {"rms", r.membership_rms}};
  s["raw_min"] = r.raw_min;
  s["contact"] = {{"nodes", r.contact_nodes}, {"raw_max", r.contact_raw_max}};
  s["boundary_alternative"] = r.boundary_alternative;
  write_text(out / "u_grid.csv", grid_csv(grid, 100));
  report(f, "interior max " + to_text(r.interior_max) + ", boundary max " + to_text(r.boundary_max) +
                ", membership max " + to_text(r.membership_max));
  return s;
}

json run_compat(const ExperimentConfig& cfg, const Flags& f, const fs::path& out) {
  const Problem& pr = cfg.problem;
  const CompatReport r = check_compatibility(pr.domain, pr.driver, *pr.phi, *pr.psi, pr.kappa, cfg.compat,
                                             pr.grid.T(), cfg.seed, f.threads);
  json s = base_summary("compat-check", cfg);
  s["M"] = r.M;
  s["samples"] = r.samples;
  json conds = json::array();
  Csv csv({"condition", "worst_margin", "pass", "witness"});
  for (const auto& c : r.conditions) {
    conds.push_back({{"name", c.name}, {"worst_margin", c.worst_margin}, {"pass", c.pass}, {"witness", c.witness}});
    csv.cell(c.name) << c.worst_margin;
    csv.cell(c.pass ? "PASS" : "FAIL").cell("\"" + c.witness + "\"");
    csv.end_row();
  }
  s["conditions"] = conds;
  json norm = json::array();
  for (const auto& n : r.normalization) {
    norm.push_back({{"function", n.which},
                    {"value_at_u0", n.value_at_u0},
                    {"u0_interior", n.u0_interior},
                    {"u0_minimizes", n.u0_minimizes},
                    {"shift", to_json(n.shift)}});
  }
  s["normalization"] = norm;
  s["verdict"] = r.pass() ? "PASS" : "FAIL";
  write_text(out / "compat.csv", csv.str());
  report(f, std::string("compatibility ") + (r.pass() ? "PASS" : "FAIL"));
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Monte Carlo Feynman-Kac solver for reflected diffusions with Robin-type boundary terms", "fkrun"};
  app.require_subcommand(1);
  Flags flags;
  std::uint64_t seed_value = 0;
  double tol_value = 0.0, lambda_value = 0.0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Experiment file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "Output directory")->required();
    sub->add_option("--seed", seed_value, "Override ensemble.seed");
    sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::Range(1, 1024));
    sub->add_flag("--quiet", flags.quiet, "Only errors on the console");
  };
  struct Command {
    const char* name;
    const char* help;
    json (*fn)(const ExperimentConfig&, const Flags&, const fs::path&);
  };
  const Command commands[] = {
      {"forward-sim", "Simulate the reflected forward paths", run_forward},
      {"solve", "Evaluate u(t, x) through the backward inequality", run_solve},
      {"elliptic", "Infinite-horizon problem with horizon calibration", run_elliptic},
      {"continuity", "Coupled-noise continuity scan", run_continuity},
      {"validate-fd", "Compare with the finite-difference reference", run_validate_fd},
      {"residuals", "PDE residuals of a grid solution", run_residuals},
      {"compat-check", "Sample the compatibility conditions", run_compat},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  CLI::App* elliptic_app = nullptr;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (std::string(c.name) == "elliptic") {
      elliptic_app = sub;
      sub->add_option("--x", flags.x, "Evaluation point, comma separated");
      sub->add_option("--tol", tol_value, "Target accuracy of the horizon truncation");
      sub->add_option("--lambda", lambda_value, "Decay rate (negative)");
    }
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) flags.seed = seed_value;
    if (sub == elliptic_app) {
      if (sub->count("--tol")) flags.tol = tol_value;
      if (sub->count("--lambda")) flags.lambda = lambda_value;
    }
    try {
      Overrides ov;
      ov.seed = flags.seed;
      const ExperimentConfig cfg = load_config(flags.config, ov);
      const fs::path out(flags.out);
      fs::create_directories(out);
      DirLock lock(out);
      json summary = cmd->fn(cfg, flags, out);
      write_text(out / "summary.json", summary.dump(2) + "\n");
      return kExitOk;
    } catch (const Error& e) {
      std::cerr << "error [" << to_string(e.kind()) << "] " << e.what() << "\n";
      return e.kind() == ErrorKind::NumericFailure ? kExitNumeric : kExitConfig;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error [io] " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error " << e.what() << "\n";
      return kExitNumeric;
    }
  }
  return kExitConfig;
}

}  // namespace fk
