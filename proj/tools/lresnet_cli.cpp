// Command-line driver: bench, verify, stress, train.
// Exit codes: 0 success, 1 property failure, 2 usage error, 3 capacity/runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lresnet/bench.hpp"
#include "lresnet/report.hpp"
#include "lresnet/suites.hpp"
#include "lresnet/toynet.hpp"

namespace fs = std::filesystem;
using namespace lresnet;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_property = 1;
constexpr int exit_usage = 2;
constexpr int exit_runtime = 3;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out = "lresnet-reports";
  std::string format = "json";

  std::uint64_t resolve_seed(const char* cmd) const {
    if (seed) return *seed;
    const std::uint64_t s = (std::uint64_t(std::random_device{}()) << 32) | std::random_device{}();
    std::clog << cmd << ": no --seed given, using seed " << s << '\n';
    return s;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "RNG seed (logged when omitted)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  fs::create_directories(dir);
  const fs::path p = fs::path(dir) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw error("cannot write " + p.string());
  f << content;
  std::clog << "wrote " << p.string() << '\n';
}

void write_report(const Common& c, const std::string& stem, const json& j, const std::string& csv) {
  if (c.format == "json") {
    write_file(c.out, stem + ".json", j.dump(2) + "\n");
  } else {
    write_file(c.out, stem + ".csv", csv);
  }
}

void print_result(const PropertyResult& r) {
  std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name;
  if (!r.method.empty()) std::cout << " method=" << r.method;
  std::cout << " K=" << r.curvature << " dim=" << r.dim << " sigma=" << r.sigma << " precision=" << r.precision
            << " trials=" << r.trials << " failures=" << r.failures << " worst=" << std::setprecision(6)
            << r.worst_violation << " tol=" << r.tolerance;
  if (r.boundary_cases) std::cout << " boundary=" << r.boundary_cases;
  if (r.construction_violations) std::cout << " construction_violations=" << r.construction_violations;
  std::cout << '\n';
}

// --- bench ---

struct BenchOpts {
  Common common;
  BenchConfig cfg;
  std::string threads = "1";
  std::vector<std::string> methods{"lresnet", "pt", "ts", "sa"};
};

int cmd_bench(BenchOpts& o) {
  o.cfg.seed = o.common.resolve_seed("bench");
  if (o.threads == "auto") {
    o.cfg.threads = 0;
  } else {
    try {
      const int t = std::stoi(o.threads);
      if (t < 1) throw usage_error("--threads must be >= 1 or 'auto'");
      o.cfg.threads = unsigned(t);
    } catch (const std::logic_error&) {
      throw usage_error("--threads must be an integer or 'auto'");
    }
  }
  o.cfg.methods.clear();
  for (const auto& m : o.methods) o.cfg.methods.push_back(parse_bench_method(m));
  try {
    o.cfg.validate();
  } catch (const error& e) {
    throw usage_error(e.what());
  }
  const auto rep = run_bench(o.cfg, available_memory_bytes());
  std::cout << "dim=" << o.cfg.dim << " batch=" << o.cfg.batch << " precision=" << o.cfg.precision
            << " iterations=" << o.cfg.iterations << " threads=" << rep.threads_used
            << (rep.comparable ? "" : " (non-comparable)") << '\n';
  for (const auto& t : rep.timings) {
    std::cout << std::left << std::setw(8) << t.method << " median " << std::setprecision(6) << t.median_seconds
              << " s  per-addition " << t.per_addition_seconds << " s  ratio " << t.ratio_to_lresnet << '\n';
  }
  write_report(o.common, "bench_" + std::to_string(o.cfg.dim) + "x" + std::to_string(o.cfg.batch), to_json(rep),
               bench_csv(rep));
  return exit_ok;
}

// --- verify ---

struct VerifyOpts {
  Common common;
  std::string suite;
  bool all = false;
  std::vector<std::string> methods;
  std::size_t trials = 1000;
  std::optional<std::size_t> dim;
  std::optional<double> curvature;
  std::optional<double> sigma;
  int precision = 64;
};

int cmd_verify(VerifyOpts& o) {
  if (o.all == !o.suite.empty()) throw usage_error("verify: give exactly one suite or --all");
  if (!o.methods.empty() && !o.all && o.suite != "proposition1") {
    throw usage_error("verify: --method only applies to proposition1");
  }
  const std::uint64_t seed = o.common.resolve_seed("verify");
  SuiteGrid grid;
  if (o.dim) grid.dims = {*o.dim};
  if (o.curvature) grid.curvatures = {*o.curvature};
  if (o.sigma) grid.sigmas = {*o.sigma};
  std::vector<BaselineMethod> methods;
  for (const auto& m : o.methods) methods.push_back(parse_baseline(m));
  if (methods.empty()) methods = {BaselineMethod::pt, BaselineMethod::ts, BaselineMethod::sa};

  const std::vector<std::string> selected =
      o.all ? std::vector<std::string>{"lemma1", "noncommutativity", "proposition1", "validity", "gradients"}
            : std::vector<std::string>{o.suite};
  bool ok = true;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto& s = selected[i];
    const std::uint64_t sseed = cell_seed(seed, 1000 + i);
    std::vector<PropertyResult> rs;
    if (s == "lemma1") rs = run_lemma1_grid(o.trials, grid, sseed);
    else if (s == "noncommutativity") rs = run_noncommutativity_grid(o.trials, grid, sseed);
    else if (s == "proposition1") rs = run_proposition1_grid(methods, o.trials, grid, sseed);
    else if (s == "validity") rs = run_validity_grid(o.precision, o.trials, grid, sseed, o.sigma);
    else rs = run_gradient_suite(std::min<std::size_t>(o.trials, 100), sseed);
    for (const auto& r : rs) print_result(r);
    ok = ok && all_passed(rs);
    write_report(o.common, "verify_" + s, property_report(s, rs), property_csv(rs));
  }
  std::cout << (ok ? "verify: all properties passed" : "verify: property failures") << " (seed " << seed << ")\n";
  return ok ? exit_ok : exit_property;
}

// --- stress ---

struct StressOpts {
  Common common;
  std::string mode;
};

int cmd_stress(StressOpts& o) {
  const auto r = demo_instability(parse_instability_mode(o.mode));
  print_result(r);
  write_report(o.common, "stress_" + o.mode, property_report("stress", {r}), property_csv({r}));
  return r.passed() ? exit_ok : exit_property;
}

// --- train ---

struct TrainOpts {
  Common common;
  std::string method = "lresnet";
  std::size_t layers = 4;
  std::size_t epochs = 200;
  double lr = 0.5;
  std::string activation = "tanh";
  double scale = 2.0;
  double w_y = 0.25;
  bool oversmoothing = false;
  std::vector<std::size_t> depths{4, 8, 16, 32};
  SyntheticHierarchyParams data;
  double curvature = -1.0;
};

int cmd_train(TrainOpts& o) {
  const std::uint64_t seed = o.common.resolve_seed("train");
  const Curvature k(o.curvature);
  if (o.data.classes > o.data.dim) throw usage_error("train: classes must not exceed --dim");
  const auto data = make_synthetic_hierarchy(o.data, k);
  ResidualBlockConfig block;
  block.method = parse_residual_method(o.method);
  block.weights = ResidualWeights(1.0, o.w_y);
  block.scale = o.scale > 0 ? std::optional<ScaleFactor>(ScaleFactor(o.scale)) : std::nullopt;
  const TrainConfig tc{o.epochs, o.lr};
  const Activation act = parse_activation(o.activation);
  if (o.oversmoothing) {
    if (block.method == ResidualMethod::none) throw usage_error("train: --oversmoothing needs a residual method");
    std::sort(o.depths.begin(), o.depths.end());
    const auto rows = oversmoothing_diagnostic(o.depths, block, data, tc, seed, act);
    std::cout << "depth  method   accuracy  mean_pairwise_distance\n";
    for (const auto& r : rows) {
      std::cout << std::left << std::setw(6) << r.depth << ' ' << std::setw(8) << r.method << ' ' << std::setw(9)
                << std::setprecision(4) << r.accuracy << ' ' << std::setprecision(6) << r.mean_pairwise_distance
                << (r.nan ? "  (diverged: " + r.diagnostic + ")" : "") << '\n';
    }
    write_report(o.common, "oversmoothing_" + o.method, to_json(rows, seed), oversmoothing_csv(rows));
    return exit_ok;
  }
  std::mt19937_64 rng(seed);
  Net net = make_net(rng, k, NetConfig{o.data.dim, o.data.classes, o.layers, block, act, true});
  const auto curve = train(net, data, tc);
  std::cout << "method=" << o.method << " layers=" << o.layers << " epochs=" << o.epochs
            << " final_loss=" << std::setprecision(6) << curve.final_loss << " final_accuracy=" << curve.final_accuracy
            << '\n';
  write_report(o.common, "train_" + o.method + "_" + std::to_string(o.layers), to_json(curve, o.method, o.layers, seed),
               curve_csv(curve));
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lorentz residual operations: benchmark, property verification, stress demos, toy training"};
  app.require_subcommand(1);

  BenchOpts bench;
  auto* b = app.add_subcommand("bench", "time batched additions per method");
  add_common(b, bench.common);
  b->add_option("--dim", bench.cfg.dim, "manifold dimension n")->check(CLI::Range(std::size_t(2), std::size_t(1) << 24))->capture_default_str();
  b->add_option("--batch", bench.cfg.batch, "rows per batch")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--curvature", bench.cfg.curvature, "K < 0")->check(CLI::Range(-1e12, -1e-12))->capture_default_str();
  b->add_option("--precision", bench.cfg.precision, "32 or 64")->check(CLI::IsMember({32, 64}))->capture_default_str();
  b->add_option("--iterations", bench.cfg.iterations, "additions per timed sample")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--repeats", bench.cfg.repeats, "timed samples (>= 5)")->check(CLI::Range(std::size_t(5), std::size_t(1000)))->capture_default_str();
  b->add_option("--warmup", bench.cfg.warmup, "untimed samples")->capture_default_str();
  b->add_option("--sigma", bench.cfg.sigma, "input sampling spread")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--threads", bench.threads, "1 (comparable) or 'auto'")->capture_default_str();
  b->add_option("--methods,--method", bench.methods, "subset of lresnet,pt,ts,sa")
      ->delimiter(',')
      ->check(CLI::IsMember({"lresnet", "pt", "ts", "sa"}));

  VerifyOpts verify;
  auto* v = app.add_subcommand("verify", "run property suites");
  add_common(v, verify.common);
  v->add_option("suite", verify.suite, "lemma1 | noncommutativity | proposition1 | validity | gradients")
      ->check(CLI::IsMember({"lemma1", "noncommutativity", "proposition1", "validity", "gradients"}));
  v->add_flag("--all", verify.all, "run every suite");
  v->add_option("--method,--methods", verify.methods, "proposition1 baseline(s): pt, ts, sa")
      ->delimiter(',')
      ->check(CLI::IsMember({"pt", "ts", "sa"}));
  v->add_option("--trials", verify.trials, "trials per grid cell")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--dim", verify.dim, "restrict to one dimension")->check(CLI::Range(std::size_t(2), std::size_t(1) << 16));
  v->add_option("--curvature", verify.curvature, "restrict to one curvature")->check(CLI::Range(-1e12, -1e-12));
  v->add_option("--sigma", verify.sigma, "restrict to one spread")->check(CLI::PositiveNumber);
  v->add_option("--precision", verify.precision, "validity suite precision")->check(CLI::IsMember({32, 64}))->capture_default_str();

  StressOpts stress;
  auto* s = app.add_subcommand("stress", "demonstrate reference-path instability");
  add_common(s, stress.common);
  s->add_option("mode", stress.mode, "poincare_boundary | lorentz_coshdomain")
      ->required()
      ->check(CLI::IsMember({"poincare_boundary", "lorentz_coshdomain"}));

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "train the toy network or run the over-smoothing diagnostic");
  add_common(t, tr.common);
  t->add_option("--method", tr.method, "residual method")
      ->check(CLI::IsMember({"lresnet", "pt", "ts", "sa", "none"}))
      ->capture_default_str();
  t->add_option("--layers", tr.layers, "number of blocks")->capture_default_str();
  t->add_option("--iterations,--epochs", tr.epochs, "gradient-descent epochs")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--lr", tr.lr, "learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--activation", tr.activation, "HL activation")->check(CLI::IsMember({"identity", "tanh"}))->capture_default_str();
  t->add_option("--scale", tr.scale, "scale factor after each block (0 disables)")->check(CLI::NonNegativeNumber)->capture_default_str();
  t->add_option("--wy", tr.w_y, "initial residual-branch weight")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_flag("--oversmoothing", tr.oversmoothing, "train with and without residual per depth");
  t->add_option("--depths", tr.depths, "depths for --oversmoothing")->delimiter(',')->check(CLI::PositiveNumber);
  t->add_option("--dim", tr.data.dim, "embedding dimension")->check(CLI::Range(std::size_t(1), std::size_t(1024)))->capture_default_str();
  t->add_option("--classes", tr.data.classes, "number of classes")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--points", tr.data.points, "dataset size")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--data-seed", tr.data.seed, "dataset seed")->capture_default_str();
  t->add_option("--curvature", tr.curvature, "K < 0")->check(CLI::Range(-1e12, -1e-12))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try {
    if (b->parsed()) return cmd_bench(bench);
    if (v->parsed()) return cmd_verify(verify);
    if (s->parsed()) return cmd_stress(stress);
    return cmd_train(tr);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
}
