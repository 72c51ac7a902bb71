// dnnstab: certification, bisection, simulation and verification front-end.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "dnnstab/dde.hpp"
#include "dnnstab/io.hpp"
#include "dnnstab/lmi_variables.hpp"
#include "dnnstab/stability_search.hpp"
#include "dnnstab/theorem1.hpp"
#include "dnnstab/verification.hpp"

namespace fs = std::filesystem;
using namespace dnnstab;

namespace {

enum Exit { kOk = 0, kNotCertified = 2, kInvalid = 3, kNumerical = 4 };

struct Options {
  std::string system;
  std::optional<double> mu, h, k, xi, tol;
  std::optional<double> lo, hi;
  std::optional<double> horizon, step;
  std::uint64_t seed = 0;
  int cases = 1000;
  int n = 0;
  std::string out = ".";
  std::string format = "csv";
};

double pick(const std::optional<double>& flag, const std::optional<double>& file, const char* name) {
  if (flag) return *flag;
  if (file) return *file;
  throw InvalidArgument(std::string("missing --") + name + " (not in the system file defaults either)");
}

class Runner {
 public:
  Runner(std::string command, const Options& o) : opt_(o) {
    manifest_.command = std::move(command);
    manifest_.seed = o.seed;
    fs::create_directories(o.out);
  }

  int finish(int code, std::chrono::steady_clock::time_point t0) {
    manifest_.exit_code = code;
    manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(fs::path(opt_.out) / "manifest.json") << manifest_.to_json().dump(2) << '\n';
    return code;
  }

  SystemFile load() {
    if (opt_.system.empty()) throw InvalidArgument("--system is required");
    manifest_.input_path = opt_.system;
    manifest_.input_hash = hex64(fnv1a(read_file(opt_.system)));
    return load_system(opt_.system);
  }

  std::ofstream create(const std::string& name) {
    const auto path = fs::path(opt_.out) / name;
    std::ofstream os(path);
    if (!os) throw InvalidArgument("cannot write '" + path.string() + "'");
    manifest_.outputs.push_back(path.string());
    return os;
  }

  void param(const std::string& key, const Json& v) { manifest_.parameters[key] = v; }

  int check() {
    const SystemFile sf = load();
    const auto& d = sf.defaults;
    const DelayBounds b{pick(opt_.h, d.h, "h"), pick(opt_.mu, d.mu, "mu")};
    const double k = pick(opt_.k, d.k, "k");
    const double xi = opt_.xi ? *opt_.xi : (d.xi ? *d.xi : 0.5 * b.h);
    param("h", b.h);
    param("mu", b.mu);
    param("k", k);
    param("xi", xi);
    const CheckResult r = check_stability(sf.system, b, k, xi);
    Json out = {{"certified", r.certified},
                {"status", to_string(r.solve.status)},
                {"reason", to_string(r.solve.reason)},
                {"iterations", r.solve.iterations},
                {"seconds", r.seconds},
                {"h", b.h},
                {"mu", b.mu},
                {"k", k},
                {"xi", xi}};
    if (r.certified) out["certificate"] = certificate_json(*r.certificate);
    create("certificate.json") << out.dump(2) << '\n';
    std::cout << (r.certified ? "certified" : "not certified") << " h=" << b.h << " mu=" << b.mu << " k=" << k
              << " xi=" << xi << '\n';
    return r.certified ? kOk : kNotCertified;
  }

  int bisect(bool over_k) {
    const SystemFile sf = load();
    const auto& d = sf.defaults;
    const double mu = pick(opt_.mu, d.mu, "mu");
    BisectionOptions bo;
    if (opt_.tol) bo.tol = *opt_.tol;
    else if (d.tol) bo.tol = *d.tol;
    if (opt_.xi) bo.xi_fractions = {*opt_.xi};
    SearchResult r;
    double h = 0.0, k = 0.0;
    if (over_k) {
      h = pick(opt_.h, d.h, "h");
      const auto range = d.k_range.value_or(std::pair{1e-3, 0.999 * sf.system.k0.minCoeff()});
      const double lo = opt_.lo.value_or(range.first), hi = opt_.hi.value_or(range.second);
      param("h", h);
      param("k_range", {lo, hi});
      r = max_decay_rate(sf.system, {h, mu}, lo, hi, bo);
    } else {
      k = pick(opt_.k, d.k, "k");
      const auto range = d.h_range.value_or(std::pair{0.1, 10.0});
      const double lo = opt_.lo.value_or(range.first), hi = opt_.hi.value_or(range.second);
      param("k", k);
      param("h_range", {lo, hi});
      r = max_delay(sf.system, mu, k, lo, hi, bo);
    }
    param("mu", mu);
    param("tol", bo.tol);
    param("xi_fractions", bo.xi_fractions);

    {
      auto os = create("search.csv");
      write_search_csv_header(os);
      write_search_csv_row(os, mu, over_k ? h : NAN, over_k ? NAN : k, r);
    }
    if (opt_.format == "json") {
      Json j = {{"certified", r.certified},
                {"best", r.certified ? Json(r.best) : Json(nullptr)},
                {"xi", r.xi},
                {"probe", r.probe},
                {"probe_certified", r.probe_certified ? Json(*r.probe_certified) : Json(nullptr)},
                {"seconds", r.seconds},
                {"solver_iterations", total_iterations(r)}};
      if (r.certificate) j["certificate"] = certificate_json(*r.certificate);
      create("search.json") << j.dump(2) << '\n';
    }
    if (r.certified) {
      std::cout << (over_k ? "k* = " : "h* = ") << r.best << " (xi = " << r.xi << ")\n";
    } else {
      std::cout << "no certified point in range\n";
    }
    return r.certified ? kOk : kNotCertified;
  }

  int simulate() {
    const SystemFile sf = load();
    const auto& d = sf.defaults;
    if (!sf.delay) throw InvalidArgument("simulate: system file has no 'delay' block");
    if (!sf.initial_state) throw InvalidArgument("simulate: system file has no 'initial_state'");
    const double horizon = opt_.horizon.value_or(d.horizon.value_or(20.0));
    const double step = opt_.step.value_or(d.step.value_or(sf.delay->h_max() / 200.0));
    param("horizon", horizon);
    param("step", step);
    const Trajectory tr = simulate_system(sf, horizon, step);
    if (opt_.format == "svg") {
      auto os = create("trajectory.svg");
      write_trajectory_svg(os, tr, sf.name.empty() ? "trajectory" : sf.name);
    } else {
      auto os = create("trajectory.csv");
      write_trajectory_csv(os, tr);
    }
    const DecayFit fit = estimate_decay_rate(tr, 0.5 * horizon, horizon);
    std::cout << "steps " << tr.size() - 1 << " |r(T)| = " << tr.r.back().norm() << " decay fit k = " << fit.rate
              << '\n';
    return kOk;
  }

  int verify_inequalities() {
    param("cases", opt_.cases);
    const BatchSummary b = run_inequality_batch(opt_.seed, opt_.cases);
    auto os = create("inequalities.csv");
    write_inequality_csv(os, b);
    std::cout << b.records.size() << " records, " << b.failures << " failures, " << b.order_violations
              << " order violations\n";
    return b.failures == 0 && b.order_violations == 0 ? kOk : kNotCertified;
  }

  int count_vars() {
    int n = opt_.n;
    if (n <= 0) n = static_cast<int>(load().system.dimension());
    param("n", n);
    std::cout << count_variables(n) << '\n';
    return kOk;
  }

  int export_lmi() {
    const SystemFile sf = load();
    const auto& d = sf.defaults;
    const double h = pick(opt_.h, d.h, "h");
    const Theorem1Params p{h, pick(opt_.mu, d.mu, "mu"), pick(opt_.k, d.k, "k"),
                           opt_.xi ? *opt_.xi : (d.xi ? *d.xi : 0.5 * h), 0.0};
    param("h", p.h);
    param("mu", p.mu);
    param("k", p.k);
    param("xi", p.xi);
    auto os = create("lmi.txt");
    write_lmi_triplets(os, assemble_theorem1(sf.system, p));
    return kOk;
  }

 private:
  static Trajectory simulate_system(const SystemFile& sf, double horizon, double step) {
    // Constant extension of r(0) over the history window.
    return dnnstab::simulate(sf.system, *sf.delay, InitialHistory::constant(*sf.initial_state), horizon, step);
  }

  Options opt_;
  RunManifest manifest_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential-stability certification for delayed neural networks"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c, bool needs_system = true) {
    auto* s = c->add_option("--system", o.system, "System definition (JSON)");
    if (needs_system) s->required();
    s->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    c->add_option("--out", o.out, "Output directory")->capture_default_str();
    c->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json", "svg"}));
  };
  auto params = [&](CLI::App* c) {
    c->add_option("--mu", o.mu, "Delay-rate bound");
    c->add_option("--h", o.h, "Delay bound");
    c->add_option("--k", o.k, "Decay rate");
    c->add_option("--xi", o.xi, "Partition point (absolute for check, fraction of h for bisection)");
  };

  auto* check = app.add_subcommand("check", "Test one (h, mu, k, xi) point");
  common(check);
  params(check);
  auto* bk = app.add_subcommand("bisect-k", "Largest certified decay rate at fixed h, mu");
  common(bk);
  params(bk);
  bk->add_option("--tol", o.tol, "Bisection tolerance");
  bk->add_option("--lo", o.lo, "Lower end of the search range");
  bk->add_option("--hi", o.hi, "Upper end of the search range");
  auto* bh = app.add_subcommand("bisect-h", "Largest certified delay bound at fixed mu, k");
  common(bh);
  params(bh);
  bh->add_option("--tol", o.tol, "Bisection tolerance");
  bh->add_option("--lo", o.lo, "Lower end of the search range");
  bh->add_option("--hi", o.hi, "Upper end of the search range");
  auto* sim = app.add_subcommand("simulate", "Integrate the delayed system from its initial state");
  common(sim);
  sim->add_option("--horizon", o.horizon, "Final time");
  sim->add_option("--step", o.step, "Step size");
  auto* vi = app.add_subcommand("verify-inequalities", "Randomized checks of the integral inequalities");
  common(vi, false);
  vi->add_option("--cases", o.cases, "Cases per lemma")->capture_default_str()->check(CLI::PositiveNumber);
  auto* cv = app.add_subcommand("count-vars", "Number of scalar decision variables");
  common(cv, false);
  cv->add_option("--n", o.n, "State dimension")->check(CLI::PositiveNumber);
  auto* ex = app.add_subcommand("export-lmi", "Write the assembled LMIs as triplets");
  common(ex);
  params(ex);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  const auto t0 = std::chrono::steady_clock::now();
  CLI::App* cmd = app.get_subcommands().front();
  if (cmd == cv && o.n <= 0 && o.system.empty()) {
    std::cerr << "count-vars: give --n or --system\n";
    return kInvalid;
  }
  std::optional<Runner> run;
  try {
    run.emplace(cmd->get_name(), o);
    int code = kOk;
    if (cmd == check) code = run->check();
    else if (cmd == bk) code = run->bisect(true);
    else if (cmd == bh) code = run->bisect(false);
    else if (cmd == sim) code = run->simulate();
    else if (cmd == vi) code = run->verify_inequalities();
    else if (cmd == cv) code = run->count_vars();
    else if (cmd == ex) code = run->export_lmi();
    return run->finish(code, t0);
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return run ? run->finish(kInvalid, t0) : kInvalid;
  } catch (const DegenerateBasis& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return run ? run->finish(kInvalid, t0) : kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return run ? run->finish(kNumerical, t0) : kNumerical;
  }
}
