#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tobit_iht/tobit_iht.hpp"

namespace tobit::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

[[noreturn]] void usage_error(const std::string& what) { fail(ErrorKind::invalid_argument, what); }

std::string flag_name(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

// Flag values bound to variables. A JSON config file fills every key that
// was not given on the command line; resolved() is what the manifest records.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& key, T& var, const std::string& help) {
    return bind(key, var, app_->add_option(flag_name(key), var, help)->capture_default_str());
  }

  template <class T>
  CLI::Option* add_positional(const std::string& key, T& var, const std::string& help) {
    return bind(key, var, app_->add_option(key, var, help));
  }

  CLI::Option* add_flag(const std::string& key, bool& var, const std::string& names,
                        const std::string& help) {
    return bind(key, var, app_->add_flag(names, var, help));
  }

  /// Keys excluded from resolved() because they do not affect outputs.
  void mark_transient(const std::string& key) { transient_.push_back(key); }

  void apply(const json& config) {
    if (!config.is_object()) usage_error("config file must hold a JSON object");
    for (const auto& [key, value] : config.items()) {
      Entry* e = find(key);
      if (e == nullptr) usage_error("unknown config key '" + key + "'");
      if (e->opt->count() > 0) continue;
      try {
        e->set(value);
      } catch (const json::exception&) {
        usage_error("config key '" + key + "' has the wrong type");
      }
      e->from_config = true;
    }
  }

  json resolved() const {
    json out = json::object();
    for (const auto& e : entries_) {
      if (std::find(transient_.begin(), transient_.end(), e.key) != transient_.end()) continue;
      out[e.key] = e.get();
    }
    return out;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt = nullptr;
    std::function<void(const json&)> set;
    std::function<json()> get;
    bool from_config = false;
  };

  template <class T>
  CLI::Option* bind(const std::string& key, T& var, CLI::Option* opt) {
    entries_.push_back({key, opt, [&var](const json& j) { var = j.get<T>(); },
                        [&var] { return json(var); }, false});
    return opt;
  }

  Entry* find(const std::string& key) {
    for (auto& e : entries_) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }

  CLI::App* app_;
  std::vector<Entry> entries_;
  std::vector<std::string> transient_;
};

// ---------------------------------------------------------------------------
// Parsing helpers

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    usage_error(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

Index parse_index(const std::string& text, const std::string& what) {
  Index v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    usage_error(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

/// "a:b" (inclusive range) or "a,b,c".
std::vector<Index> parse_grid(const std::string& text, const std::string& what) {
  std::vector<Index> out;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    const Index lo = parse_index(text.substr(0, colon), what);
    const Index hi = parse_index(text.substr(colon + 1), what);
    if (lo > hi) usage_error(what + ": empty range '" + text + "'");
    for (Index v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    out.push_back(parse_index(text.substr(start, comma - start), what));
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_eta(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const double v = parse_real(text, "--eta");
  if (!(v > 0.0)) usage_error("--eta must be positive or 'auto'");
  return v;
}

Design parse_design(const std::string& text) {
  if (text == "iid") return Design::iid_gaussian;
  if (text == "ar1") return Design::ar1;
  usage_error("--design must be 'iid' or 'ar1', got '" + text + "'");
}

std::string absolute_or_empty(const std::string& path) {
  if (path.empty()) return path;
  return fs::absolute(path).lexically_normal().string();
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("TOBIT_IHT_THREADS"); env != nullptr && *env != '\0') {
    const Index v = parse_index(env, "TOBIT_IHT_THREADS");
    if (v < 1) usage_error("TOBIT_IHT_THREADS must be at least 1");
    return static_cast<int>(v);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Output helpers

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json theta_to_json(const Theta& theta) {
  return json{{"delta", vector_json(theta.delta)}, {"gamma", theta.gamma}};
}

json metrics_json(const Metrics& m) {
  json j{{"l2_theta", m.l2_theta},       {"l2_beta", m.l2_beta},
         {"support_tpr", m.support_tpr}, {"support_fpr", m.support_fpr},
         {"support_f1", m.support_f1},   {"exact_support", m.exact_support}};
  if (m.predictive_nll) j["predictive_nll"] = *m.predictive_nll;
  if (m.censoring_rate) j["censoring_rate"] = *m.censoring_rate;
  return j;
}

/// theta, natural-scale beta/sigma and the fit summary.
json fit_json(const FitResult& fit, double c0) {
  ModelParams params = theta_to_params(fit.theta);
  params.beta[0] += c0;
  json j;
  j["theta"] = theta_to_json(fit.theta);
  j["beta"] = vector_json(params.beta);
  j["sigma"] = params.sigma;
  j["c0"] = c0;
  j["support"] = nonzero_support(fit.theta.delta);
  j["iterations"] = fit.iterations_run;
  j["converged"] = fit.converged;
  j["stalled"] = fit.stalled;
  j["final_nll"] = fit.trace.empty() ? 0.0 : fit.trace.back().nll;
  return j;
}

std::string utc_timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    t = static_cast<std::time_t>(parse_index(epoch, "SOURCE_DATE_EPOCH"));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = config.contains("seed") ? config["seed"] : json(nullptr);
  m["version"] = std::string(version());
  m["rng_algorithm"] = std::string(kRngAlgorithm);
  m["timestamp"] = utc_timestamp();
  io::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

fs::path prepare_out(const std::string& out) {
  if (out.empty()) usage_error("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    usage_error("cannot create output directory '" + out + "'");
  }
  return fs::path(out);
}

// ---------------------------------------------------------------------------
// Shared solver flags

struct SolverFlags {
  Index s = -1;
  double c_star = 1e-3;
  std::string eta = "auto";
  int iters = 1000;
  double tol = 1e-8;
  bool keep_intercept = false;
  bool backtracking = true;

  void add_to(Settings& settings) {
    settings.add("s", s, "Sparsity budget for delta (intercept included)");
    settings.add("c_star", c_star, "Lower bound C* for gamma");
    settings.add("eta", eta, "Step size, or 'auto'");
    settings.add("iters", iters, "Maximum iterations T");
    settings.add("tol", tol, "Stop when the step norm falls below tol");
    settings.add_flag("keep_intercept", keep_intercept, "--keep-intercept",
                      "Always keep the intercept in the support");
    settings.add_flag("backtracking", backtracking, "--backtracking,!--no-backtracking",
                      "Halve the step until the objective does not increase");
  }

  IhtConfig config() const {
    IhtConfig cfg;
    cfg.s = s;
    cfg.c_star = c_star;
    cfg.eta = parse_eta(eta);
    cfg.max_iters = iters;
    cfg.tol = tol;
    cfg.keep_intercept = keep_intercept;
    cfg.backtracking = backtracking;
    return cfg;
  }
};

struct GenFlags {
  Index n = 500;
  Index d = 100;
  Index s0 = 3;
  double beta0 = 0.5;
  double signal = 1.0;
  double sigma = 1.0;
  std::string design = "iid";
  double rho = 0.3;
  double c0 = 0.0;
  std::uint64_t seed = 1;

  void add_to(Settings& settings, bool with_n) {
    if (with_n) settings.add("n", n, "Rows");
    settings.add("d", d, "Features (intercept excluded)");
    settings.add("s0", s0, "Nonzero slopes in beta*");
    settings.add("beta0", beta0, "Intercept of beta*");
    settings.add("signal", signal, "Magnitude of the nonzero slopes");
    settings.add("sigma", sigma, "Noise standard deviation");
    settings.add("design", design, "Design: iid or ar1");
    settings.add("rho", rho, "AR(1) correlation");
    settings.add("c0", c0, "Censoring threshold");
    settings.add("seed", seed, "Base seed");
  }

  GenSpec spec() const {
    GenSpec g;
    g.n = n;
    g.d = d;
    g.s0 = s0;
    g.beta0 = beta0;
    g.signal_strength = signal;
    g.sigma_star = sigma;
    g.design = parse_design(design);
    g.rho = rho;
    g.c0 = c0;
    g.seed = seed;
    return g;
  }
};

/// Each command registers its flags, then runs once flags and config are
/// resolved.
struct Command {
  std::string name;
  std::function<void(const fs::path& out, const json& resolved)> run;
};

// ---------------------------------------------------------------------------
// simulate

void add_simulate(Settings& settings, Command& cmd, GenFlags& gen, int& shards,
                  std::string& out) {
  gen.add_to(settings, true);
  settings.add("shards", shards, "Split rows over this many machines");
  settings.add("out", out, "Output directory");
  settings.mark_transient("out");
  cmd.name = "simulate";
  cmd.run = [&gen, &shards](const fs::path& dir, const json& resolved) {
    GenSpec spec = gen.spec();
    spec.shards = shards;
    const GeneratedData data = generate(spec);
    io::write_dataset_csv(dir / "data.csv", data.pooled);
    io::write_truth_json(dir / "truth.json", data.truth);
    // A single shard is the pooled file itself.
    io::ShardManifest manifest;
    manifest.c0 = spec.c0;
    for (const Shard& shard : data.shards) {
      std::string file = "data.csv";
      if (data.shards.size() > 1) {
        file = "shard_" + std::to_string(shard.machine_id) + ".csv";
        io::write_dataset_csv(dir / file, shard.data);
      }
      manifest.shards.push_back({shard.machine_id, file, shard.data.n()});
    }
    io::write_shard_manifest(dir / "shards.json", manifest);
    write_manifest(dir, "simulate", resolved);
    std::cout << "simulate: n=" << spec.n << " d=" << spec.d
              << " censored=" << censoring_rate(data.pooled) << " -> " << dir.string() << "\n";
  };
}

// ---------------------------------------------------------------------------
// fit

struct FitFlags {
  std::string data;
  double c0 = 0.0;
  std::string cv;
  int folds = 5;
  std::uint64_t seed = 1;
  std::string init = "cold";
  std::string truth;
  std::string out;
};

std::optional<Theta> load_init(const std::string& init) {
  if (init == "cold") return std::nullopt;
  return io::read_theta_json(init);
}

void add_fit(Settings& settings, Command& cmd, FitFlags& f, SolverFlags& solver) {
  settings.add("data", f.data, "Dataset CSV");
  settings.add("c0", f.c0, "Censoring threshold of the dataset");
  solver.add_to(settings);
  settings.add("cv", f.cv, "Choose s by cross-validation over a grid, e.g. 1:8");
  settings.add("folds", f.folds, "Cross-validation folds");
  settings.add("seed", f.seed, "Fold assignment seed");
  settings.add("init", f.init, "'cold' or a theta JSON file");
  settings.add("truth", f.truth, "Truth JSON; adds metrics to the result");
  settings.add("out", f.out, "Output directory");
  settings.mark_transient("out");
  cmd.name = "fit";
  cmd.run = [&f, &solver](const fs::path& dir, const json& resolved) {
    if (f.data.empty()) usage_error("--data is required");
    if (solver.s < 0 && f.cv.empty()) usage_error("either --s or --cv is required");
    const CensoredDataset data = io::read_dataset_csv(f.data, f.c0);
    IhtConfig cfg = solver.config();
    cfg.init = load_init(f.init);

    json result;
    std::optional<CvResult> cv;
    if (!f.cv.empty()) {
      const std::vector<Index> grid = parse_grid(f.cv, "--cv");
      cv = cross_validate_s(data, grid, f.folds, cfg, f.seed);
      cfg.s = cv->best_s;
      std::string table = "s,mean_cv_nll,se\n";
      for (const CvRow& row : cv->table) {
        table += std::to_string(row.s) + "," + io::format_double(row.mean_cv_nll) + "," +
                 io::format_double(row.se) + "\n";
      }
      io::write_text(dir / "cv.csv", table);
    }
    const FitResult fit = tobit::fit(data, cfg);
    result["command"] = "fit";
    result["s"] = cfg.s;
    const json summary = fit_json(fit, data.c0());
    for (const auto& [k, v] : summary.items()) result[k] = v;
    if (cv) {
      json rows = json::array();
      for (const CvRow& row : cv->table) {
        rows.push_back({{"s", row.s}, {"mean_cv_nll", row.mean_cv_nll}, {"se", row.se}});
      }
      result["cv"] = {{"best_s", cv->best_s}, {"folds", f.folds}, {"table", rows}};
    }
    if (!f.truth.empty()) {
      result["metrics"] = metrics_json(compute_metrics(fit.theta, io::read_truth_json(f.truth)));
    }
    write_json(dir / "result.json", result);
    io::write_trace_csv(dir / "trace.csv", fit);
    write_manifest(dir, "fit", resolved);
    std::cout << "fit: s=" << cfg.s << " iterations=" << fit.iterations_run
              << " converged=" << (fit.converged ? "yes" : "no")
              << " nll=" << fit.trace.back().nll << " time=" << fit.wall_time.count() << "s\n";
  };
}

// ---------------------------------------------------------------------------
// fit-dist

struct DistFlags {
  std::string shards;
  std::string rounds = "auto";
  std::string init = "cold";
  std::string truth;
  std::string out;
};

int resolve_rounds(const std::string& rounds, Index n_central, Index n_total) {
  if (rounds == "auto") return recommended_rounds(n_central, n_total);
  const Index q = parse_index(rounds, "--rounds");
  if (q < 1) usage_error("--rounds must be at least 1 or 'auto'");
  return static_cast<int>(q);
}

void apply_dist_init(DistConfig& cfg, const std::string& init) {
  if (init == "central") {
    cfg.central_warm_start = true;
  } else {
    cfg.init = load_init(init);
  }
}

void add_fit_dist(Settings& settings, Command& cmd, DistFlags& f, SolverFlags& solver) {
  settings.add("shards", f.shards, "Shard manifest JSON");
  solver.add_to(settings);
  settings.add("rounds", f.rounds, "Outer rounds Q, or 'auto'");
  settings.add("init", f.init, "'cold', 'central' (local fit on shard 0) or a theta JSON file");
  settings.add("truth", f.truth, "Truth JSON; adds metrics to the result");
  settings.add("out", f.out, "Output directory");
  settings.mark_transient("out");
  cmd.name = "fit-dist";
  cmd.run = [&f, &solver](const fs::path& dir, const json& resolved) {
    if (f.shards.empty()) usage_error("--shards is required");
    if (solver.s < 0) usage_error("--s is required");
    const std::vector<Shard> shards = io::load_shards(f.shards);
    Index total = 0;
    for (const Shard& shard : shards) total += shard.data.n();

    DistConfig cfg;
    cfg.inner = solver.config();
    cfg.outer_rounds = resolve_rounds(f.rounds, shards.front().data.n(), total);
    apply_dist_init(cfg, f.init);
    const DistFitResult res = fit_distributed(shards, cfg);

    json result;
    result["command"] = "fit-dist";
    result["s"] = cfg.inner.s;
    result["machines"] = shards.size();
    result["rounds"] = cfg.outer_rounds;
    const json summary = fit_json(res.fit, shards.front().data.c0());
    for (const auto& [k, v] : summary.items()) result[k] = v;
    result["warm_start_iterations"] = res.warm_start_iterations;
    result["comm"] = {{"rounds", res.comm.rounds},
                      {"vectors_sent", res.comm.vectors_sent},
                      {"bytes_estimate", res.comm.bytes_estimate}};
    json anchors = json::array();
    for (const AnchorRecord& a : res.anchors) {
      anchors.push_back({{"round", a.round}, {"residual_inf", a.residual_inf}});
    }
    result["anchors"] = anchors;
    if (!f.truth.empty()) {
      result["metrics"] =
          metrics_json(compute_metrics(res.fit.theta, io::read_truth_json(f.truth)));
    }
    write_json(dir / "result.json", result);
    io::write_round_trace_csv(dir / "trace.csv", res.fit);
    write_manifest(dir, "fit-dist", resolved);
    std::cout << "fit-dist: M=" << shards.size() << " Q=" << cfg.outer_rounds
              << " vectors_sent=" << res.comm.vectors_sent
              << " time=" << res.fit.wall_time.count() << "s\n";
  };
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentFlags {
  std::string name;
  std::string n = "500";
  int reps = 50;
  std::string ref = "final";
  int machines = 10;
  Index n_per_shard = 200;
  std::string rounds = "auto";
  std::string init = "central";
  int threads = 0;
  std::string out;
};

void write_rate(const fs::path& dir, const GenSpec& base, const ExperimentFlags& f,
                const IhtConfig& cfg, int threads) {
  const std::vector<Index> grid = parse_grid(f.n, "--n");
  const RateCurve curve = rate_experiment(base, grid, f.reps, cfg, threads);
  std::string csv = "n,median_l2,iqr_l2,replications\n";
  for (const RatePoint& p : curve.points) {
    csv += std::to_string(p.n) + "," + io::format_double(p.median_l2) + "," +
           io::format_double(p.iqr_l2) + "," + std::to_string(p.replications) + "\n";
    std::cout << "rate: n=" << p.n << " median_l2=" << p.median_l2 << "\n";
  }
  io::write_text(dir / "rate.csv", csv);
}

void write_convergence(const fs::path& dir, GenSpec base, const ExperimentFlags& f,
                       IhtConfig cfg, int threads) {
  const std::vector<Index> grid = parse_grid(f.n, "--n");
  if (grid.size() != 1) usage_error("convergence takes a single --n");
  if (f.ref != "final" && f.ref != "truth") usage_error("--ref must be 'final' or 'truth'");
  base.n = grid.front();
  cfg.trace_thetas = true;
  std::vector<std::vector<ConvergencePoint>> points(static_cast<std::size_t>(f.reps));
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(f.reps));
  parallel_for(f.reps, threads, [&](int rep) {
    GenSpec spec = base;
    spec.seed = replication_seed(base.seed, base.n, rep);
    const GeneratedData data = generate(spec);
    const FitResult fit = tobit::fit(data.pooled, cfg);
    const Theta ref = f.ref == "final" ? fit.theta : data.truth.theta();
    points[static_cast<std::size_t>(rep)] = convergence_diagnostics(fit, ref, cfg.tol);
    seeds[static_cast<std::size_t>(rep)] = spec.seed;
  });
  std::string csv = "rep,seed,t,error,ratio\n";
  std::string summary = "rep,seed,iterations,max_ratio,contracting\n";
  int contracting = 0;
  for (int rep = 0; rep < f.reps; ++rep) {
    const auto& pts = points[static_cast<std::size_t>(rep)];
    const std::string prefix =
        std::to_string(rep) + "," + std::to_string(seeds[static_cast<std::size_t>(rep)]) + ",";
    double max_ratio = 0.0;
    for (const ConvergencePoint& p : pts) {
      csv += prefix + std::to_string(p.t) + "," + io::format_double(p.error) + "," +
             (p.ratio ? io::format_double(*p.ratio) : std::string()) + "\n";
      if (p.ratio) max_ratio = std::max(max_ratio, *p.ratio);
    }
    const bool ok = max_ratio <= 0.95;
    contracting += ok ? 1 : 0;
    summary += prefix + std::to_string(pts.size() - 1) + "," + io::format_double(max_ratio) +
               "," + (ok ? "1" : "0") + "\n";
  }
  io::write_text(dir / "convergence.csv", csv);
  io::write_text(dir / "convergence_summary.csv", summary);
  std::cout << "convergence: " << contracting << "/" << f.reps
            << " replications with every ratio <= 0.95\n";
}

void write_dist_vs_pooled(const fs::path& dir, GenSpec base, const ExperimentFlags& f,
                          const IhtConfig& cfg, int threads) {
  if (f.machines < 1) usage_error("--M must be at least 1");
  base.shards = f.machines;
  base.n = f.n_per_shard * f.machines;
  DistConfig dist;
  dist.inner = cfg;
  dist.outer_rounds = resolve_rounds(f.rounds, f.n_per_shard, base.n);
  if (f.init != "cold" && f.init != "central") usage_error("--init must be 'cold' or 'central'");
  apply_dist_init(dist, f.init);
  const std::vector<PairedRun> rows = dist_vs_pooled(base, f.reps, dist, threads);
  std::string csv = "rep,seed,pooled_l2,dist_l2,ratio,rounds,vectors_sent,bytes_estimate\n";
  std::vector<double> ratios;
  for (const PairedRun& r : rows) {
    csv += std::to_string(r.rep) + "," + std::to_string(r.seed) + "," +
           io::format_double(r.pooled_l2) + "," + io::format_double(r.dist_l2) + "," +
           io::format_double(r.ratio) + "," + std::to_string(r.comm.rounds) + "," +
           std::to_string(r.comm.vectors_sent) + "," + std::to_string(r.comm.bytes_estimate) +
           "\n";
    ratios.push_back(r.ratio);
  }
  io::write_text(dir / "paired.csv", csv);
  std::cout << "dist-vs-pooled: M=" << f.machines << " Q=" << dist.outer_rounds
            << " median ratio=" << median(ratios) << "\n";
}

void add_experiment(Settings& settings, Command& cmd, ExperimentFlags& f, GenFlags& gen,
                    SolverFlags& solver) {
  settings.add_positional("experiment", f.name, "rate | convergence | dist-vs-pooled");
  settings.add("n", f.n, "Sample sizes, e.g. 500,1000,2000");
  gen.d = 2000;
  gen.s0 = 5;
  gen.beta0 = 0.0;
  gen.add_to(settings, false);
  solver.iters = 500;
  solver.add_to(settings);
  settings.add("reps", f.reps, "Replications per point");
  settings.add("ref", f.ref, "convergence: reference point, 'final' or 'truth'");
  settings.add("M", f.machines, "dist-vs-pooled: machines");
  settings.add("n_per_shard", f.n_per_shard, "dist-vs-pooled: rows per machine");
  settings.add("rounds", f.rounds, "dist-vs-pooled: outer rounds Q, or 'auto'");
  settings.add("init", f.init, "dist-vs-pooled: 'cold' or 'central'");
  settings.add("threads", f.threads, "Worker threads (fallback: TOBIT_IHT_THREADS)");
  settings.add("out", f.out, "Output directory");
  settings.mark_transient("out");
  settings.mark_transient("threads");
  cmd.name = "experiment";
  cmd.run = [&f, &gen, &solver](const fs::path& dir, const json& resolved) {
    if (f.reps < 1) usage_error("--reps must be at least 1");
    const int threads = resolve_threads(f.threads);
    GenSpec base = gen.spec();
    IhtConfig cfg = solver.config();
    if (cfg.s < 0) cfg.s = base.s0;
    if (f.name == "rate") {
      write_rate(dir, base, f, cfg, threads);
    } else if (f.name == "convergence") {
      write_convergence(dir, base, f, cfg, threads);
    } else if (f.name == "dist-vs-pooled") {
      write_dist_vs_pooled(dir, base, f, cfg, threads);
    } else {
      usage_error("unknown experiment '" + f.name + "' (rate, convergence, dist-vs-pooled)");
    }
    write_manifest(dir, "experiment", resolved);
  };
}

// ---------------------------------------------------------------------------

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::protocol:
    case ErrorKind::diagnostics_unavailable:
      return kUsage;
    case ErrorKind::divergence:
      return kDivergence;
    case ErrorKind::data:
    case ErrorKind::schema:
    case ErrorKind::gamma_unidentifiable:
    case ErrorKind::fold_degenerate:
    case ErrorKind::incomplete_round:
    case ErrorKind::io:
      return kData;
  }
  return kData;
}

json load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    usage_error(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    usage_error("config " + path + ": " + e.what());
  }
}

/// Parses `args` and runs the selected command. A preset (from replay)
/// plays the role of a config file.
int dispatch(const std::vector<std::string>& args, const std::optional<json>& preset) {
  CLI::App app{"Sparse Tobit regression by iterative hard thresholding", "tobit-iht"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  std::string config_path;
  auto add_config = [&config_path](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file with flag values (flags win)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "Generate a seeded synthetic dataset");
  CLI::App* fit = app.add_subcommand("fit", "Centralized IHT fit");
  CLI::App* fit_dist = app.add_subcommand("fit-dist", "Distributed IHT over a shard manifest");
  CLI::App* exp = app.add_subcommand("experiment", "Replication studies");
  CLI::App* replay = app.add_subcommand("replay", "Rerun the command recorded in a manifest");

  Settings sim_settings(sim), fit_settings(fit), dist_settings(fit_dist), exp_settings(exp);
  Command sim_cmd, fit_cmd, dist_cmd, exp_cmd;

  GenFlags sim_gen;
  int sim_shards = 1;
  std::string sim_out;
  add_simulate(sim_settings, sim_cmd, sim_gen, sim_shards, sim_out);

  FitFlags fit_flags;
  SolverFlags fit_solver;
  add_fit(fit_settings, fit_cmd, fit_flags, fit_solver);

  DistFlags dist_flags;
  SolverFlags dist_solver;
  add_fit_dist(dist_settings, dist_cmd, dist_flags, dist_solver);

  ExperimentFlags exp_flags;
  GenFlags exp_gen;
  SolverFlags exp_solver;
  add_experiment(exp_settings, exp_cmd, exp_flags, exp_gen, exp_solver);

  for (CLI::App* sub : {sim, fit, fit_dist, exp}) add_config(sub);

  std::string replay_manifest;
  std::string replay_out;
  replay->add_option("manifest", replay_manifest, "manifest.json of an earlier run")->required();
  replay->add_option("--out", replay_out, "Output directory")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (replay->parsed()) {
      const json manifest = load_config(replay_manifest);
      if (!manifest.contains("command") || !manifest.contains("config")) {
        usage_error(replay_manifest + ": not a run manifest");
      }
      const std::string command = manifest["command"].get<std::string>();
      if (command == "replay") usage_error("cannot replay a replay");
      return dispatch({args.front(), command, "--out", replay_out}, manifest["config"]);
    }

    Settings* settings = nullptr;
    Command* cmd = nullptr;
    std::string* out = nullptr;
    if (sim->parsed()) {
      settings = &sim_settings, cmd = &sim_cmd, out = &sim_out;
    } else if (fit->parsed()) {
      settings = &fit_settings, cmd = &fit_cmd, out = &fit_flags.out;
    } else if (fit_dist->parsed()) {
      settings = &dist_settings, cmd = &dist_cmd, out = &dist_flags.out;
    } else {
      settings = &exp_settings, cmd = &exp_cmd, out = &exp_flags.out;
    }
    if (preset) settings->apply(*preset);
    if (!config_path.empty()) settings->apply(load_config(config_path));

    // Input paths are recorded absolute so a manifest replays from any cwd.
    fit_flags.data = absolute_or_empty(fit_flags.data);
    fit_flags.truth = absolute_or_empty(fit_flags.truth);
    if (fit_flags.init != "cold") fit_flags.init = absolute_or_empty(fit_flags.init);
    dist_flags.shards = absolute_or_empty(dist_flags.shards);
    dist_flags.truth = absolute_or_empty(dist_flags.truth);
    if (dist_flags.init != "cold" && dist_flags.init != "central") {
      dist_flags.init = absolute_or_empty(dist_flags.init);
    }

    const fs::path dir = prepare_out(*out);
    cmd->run(dir, settings->resolved());
    return kOk;
  } catch (const Error& e) {
    std::cerr << "tobit-iht: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args, std::nullopt);
  } catch (const std::exception& e) {
    std::cerr << "tobit-iht: internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tobit::cli
