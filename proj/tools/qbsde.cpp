// Command-line driver. Every experiment writes its artifacts into an output
// directory: manifest.json (effective config, versions, timings), result CSV
// files, and summary.txt. CSV and summary bytes depend only on the config,
// never on wall clock or thread count; anything volatile lives in the
// manifest. Exit codes: 0 all gates passed, 1 a gate failed, 2 usage error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qbsde/criteria.hpp"
#include "qbsde/report.hpp"
#include "qbsde/version.hpp"

namespace {

using nlohmann::ordered_json;

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Pre-scan for --config so file values load before flag parsing; explicit
// flags then override whatever the file set.
std::string config_path_from(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

ordered_json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  ordered_json j;
  in >> j;
  return j;
}

template <typename T>
void from_config(const ordered_json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void write_artifacts(const std::filesystem::path& outdir, const qbsde::report::Payload& files,
                     ordered_json manifest) {
  std::filesystem::create_directories(outdir);
  ordered_json names = ordered_json::array();
  for (const auto& [name, content] : files) {
    std::ofstream out(outdir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (outdir / name).string());
    out << content;
    names.push_back(name);
  }
  manifest["files"] = std::move(names);
  std::ofstream out(outdir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (outdir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

ordered_json manifest_base(const std::string& command) {
  ordered_json m;
  m["command"] = command;
  m["versions"] = {{"qbsde", qbsde::version_string}, {"compiler", __VERSION__}};
  m["timestamp_utc"] = utc_timestamp();
  return m;
}

int finish(const std::filesystem::path& outdir, const std::string& command,
           ordered_json config_echo, const qbsde::report::CommandResult& res, double seconds) {
  ordered_json m = manifest_base(command);
  m["config"] = std::move(config_echo);
  m["duration_seconds"] = seconds;
  m["gates_passed"] = res.gates_passed;
  if (!res.gate_note.empty()) m["gate_note"] = res.gate_note;
  write_artifacts(outdir, res.files, std::move(m));
  std::printf("%s", res.files.back().second.c_str());  // summary.txt is last
  std::printf("artifacts in %s\n", outdir.string().c_str());
  if (!res.gates_passed) {
    std::fprintf(stderr, "gate failure: %s\n", res.gate_note.c_str());
    return 1;
  }
  return 0;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical experiments for the quadratic-driver series solver"};
  app.require_subcommand(1);
  std::string config_path;  // consumed in the pre-scan; registered for help only
  app.add_option("--config", config_path, "JSON file with per-command defaults (flags override)")
      ->configurable(false);

  ordered_json cfgfile;
  try {
    const std::string path = config_path_from(argc, argv);
    if (!path.empty()) cfgfile = load_config(path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }

  // catalan
  qbsde::report::CatalanConfig cat;
  std::string cat_out = "out/catalan";
  auto* sc_cat = app.add_subcommand("catalan", "quadratic-convolution table vs closed form");
  from_config(cfgfile, "n", cat.n);
  from_config(cfgfile, "out", cat_out);
  sc_cat->add_option("--n", cat.n, "largest index in the table");
  sc_cat->add_option("--out", cat_out, "output directory");

  // ex1
  qbsde::report::Ex1Config e1;
  std::string e1_out = "out/ex1";
  auto* sc_e1 = app.add_subcommand("ex1", "tan/tanh coefficient families");
  from_config(cfgfile, "order", e1.order);
  from_config(cfgfile, "check_closed", e1.check_closed);
  from_config(cfgfile, "tol", e1.tol);
  from_config(cfgfile, "out", e1_out);
  sc_e1->add_option("--order", e1.order, "series truncation order");
  sc_e1->add_flag("--check-closed,!--no-check-closed", e1.check_closed,
                  "compare the series against the closed forms");
  sc_e1->add_option("--tol", e1.tol, "closed-form agreement tolerance");
  sc_e1->add_option("--out", e1_out, "output directory");

  // ex2
  qbsde::report::Ex2Config e2;
  std::string e2_out = "out/ex2";
  auto* sc_e2 = app.add_subcommand("ex2", "coupled coefficient families");
  from_config(cfgfile, "order", e2.order);
  from_config(cfgfile, "tol_residual", e2.tol_residual);
  from_config(cfgfile, "tol_series", e2.tol_series);
  from_config(cfgfile, "out", e2_out);
  sc_e2->add_option("--order", e2.order, "series truncation order");
  sc_e2->add_option("--tol-residual", e2.tol_residual, "complex ODE residual tolerance");
  sc_e2->add_option("--tol-series", e2.tol_series, "closed-form agreement tolerance");
  sc_e2->add_option("--out", e2_out, "output directory");

  // cascade
  qbsde::report::CascadeConfig ca;
  std::string ca_out = "out/cascade";
  auto* sc_ca = app.add_subcommand("cascade", "level-by-level backward solve");
  from_config(cfgfile, "problem", ca.problem);
  from_config(cfgfile, "T", ca.T);
  from_config(cfgfile, "nx", ca.nx);
  from_config(cfgfile, "ny", ca.ny);
  from_config(cfgfile, "nt", ca.nt);
  from_config(cfgfile, "depth", ca.depth);
  from_config(cfgfile, "scheme", ca.scheme);
  from_config(cfgfile, "threads", ca.n_threads);
  from_config(cfgfile, "probe_x", ca.probe_x);
  from_config(cfgfile, "probe_y", ca.probe_y);
  from_config(cfgfile, "grad_tol", ca.grad_tol);
  from_config(cfgfile, "out", ca_out);
  sc_ca->add_option("--problem", ca.problem, "ex1 or ex2");
  sc_ca->add_option("--T", ca.T, "horizon");
  sc_ca->add_option("--nx", ca.nx, "grid nodes in x");
  sc_ca->add_option("--ny", ca.ny, "grid nodes in y");
  sc_ca->add_option("--nt", ca.nt, "time steps");
  sc_ca->add_option("--depth", ca.depth, "deepest level solved");
  sc_ca->add_option("--scheme", ca.scheme, "lod, full-be or explicit");
  sc_ca->add_option("--threads", ca.n_threads, "worker threads for the line solves");
  sc_ca->add_option("--probe-x", ca.probe_x, "gradient probe x (must be a grid node)");
  sc_ca->add_option("--probe-y", ca.probe_y, "gradient probe y (must be a grid node)");
  sc_ca->add_option("--grad-tol", ca.grad_tol, "relative gradient tolerance");
  sc_ca->add_option("--out", ca_out, "output directory");

  // mc-eq
  qbsde::report::McEqConfig me;
  std::string me_out = "out/mc-eq";
  auto* sc_me = app.add_subcommand("mc-eq", "exponential identity residual by simulation");
  from_config(cfgfile, "T", me.T);
  from_config(cfgfile, "paths", me.n_paths);
  from_config(cfgfile, "steps", me.n_steps);
  from_config(cfgfile, "seed", me.seed);
  from_config(cfgfile, "threads", me.n_threads);
  from_config(cfgfile, "out", me_out);
  sc_me->add_option("--T", me.T, "horizon");
  sc_me->add_option("--paths", me.n_paths, "number of sample paths");
  sc_me->add_option("--steps", me.n_steps, "time steps per path");
  sc_me->add_option("--seed", me.seed, "counter RNG seed");
  sc_me->add_option("--threads", me.n_threads, "worker threads");
  sc_me->add_option("--out", me_out, "output directory");

  // mc-expfunc
  qbsde::report::McExpFuncConfig mf;
  std::string mf_out = "out/mc-expfunc";
  auto* sc_mf = app.add_subcommand("mc-expfunc", "exponential quadratic functional by simulation");
  from_config(cfgfile, "T", mf.T);
  from_config(cfgfile, "paths", mf.n_paths);
  from_config(cfgfile, "steps", mf.n_steps);
  from_config(cfgfile, "seed", mf.seed);
  from_config(cfgfile, "threads", mf.n_threads);
  from_config(cfgfile, "out", mf_out);
  sc_mf->add_option("--T", mf.T, "horizon (refused beyond 0.9 x blow-up horizon)");
  sc_mf->add_option("--paths", mf.n_paths, "number of sample paths");
  sc_mf->add_option("--steps", mf.n_steps, "time steps per path");
  sc_mf->add_option("--seed", mf.seed, "counter RNG seed");
  sc_mf->add_option("--threads", mf.n_threads, "worker threads");
  sc_mf->add_option("--out", mf_out, "output directory");

  // kl
  qbsde::report::KlConfig kl;
  std::string kl_out = "out/kl";
  auto* sc_kl = app.add_subcommand("kl", "eigenvalue product for the quadratic functional");
  from_config(cfgfile, "T", kl.T);
  from_config(cfgfile, "modes", kl.n_modes);
  from_config(cfgfile, "ortho_modes", kl.ortho_modes);
  from_config(cfgfile, "quad_points", kl.quad_points);
  from_config(cfgfile, "tol", kl.tol);
  from_config(cfgfile, "out", kl_out);
  sc_kl->add_option("--T", kl.T, "horizon");
  sc_kl->add_option("--modes", kl.n_modes, "modes in the product");
  sc_kl->add_option("--ortho-modes", kl.ortho_modes, "modes in the orthogonality check");
  sc_kl->add_option("--quad-points", kl.quad_points, "quadrature intervals");
  sc_kl->add_option("--tol", kl.tol, "closed-form agreement tolerance");
  sc_kl->add_option("--out", kl_out, "output directory");

  // report-all
  unsigned ra_threads = 1;
  std::string ra_out = "out/report-all";
  auto* sc_ra = app.add_subcommand("report-all", "run every release gate");
  from_config(cfgfile, "threads", ra_threads);
  from_config(cfgfile, "out", ra_out);
  sc_ra->add_option("--threads", ra_threads, "worker threads for the heavy gates");
  sc_ra->add_option("--out", ra_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // --help exits 0, parse errors exit 2
  }

  try {
    Timer timer;
    if (*sc_cat) {
      ordered_json c{{"n", cat.n}, {"out", cat_out}};
      return finish(cat_out, "catalan", c, qbsde::report::run_catalan(cat), timer.seconds());
    }
    if (*sc_e1) {
      ordered_json c{{"order", e1.order}, {"check_closed", e1.check_closed}, {"tol", e1.tol},
                     {"out", e1_out}};
      return finish(e1_out, "ex1", c, qbsde::report::run_ex1(e1), timer.seconds());
    }
    if (*sc_e2) {
      ordered_json c{{"order", e2.order}, {"tol_residual", e2.tol_residual},
                     {"tol_series", e2.tol_series}, {"out", e2_out}};
      return finish(e2_out, "ex2", c, qbsde::report::run_ex2(e2), timer.seconds());
    }
    if (*sc_ca) {
      ordered_json c{{"problem", ca.problem}, {"T", ca.T}, {"nx", ca.nx}, {"ny", ca.ny},
                     {"nt", ca.nt}, {"depth", ca.depth}, {"scheme", ca.scheme},
                     {"threads", ca.n_threads}, {"probe_x", ca.probe_x}, {"probe_y", ca.probe_y},
                     {"grad_tol", ca.grad_tol}, {"out", ca_out}};
      return finish(ca_out, "cascade", c, qbsde::report::run_cascade_cmd(ca), timer.seconds());
    }
    if (*sc_me) {
      ordered_json c{{"T", me.T}, {"paths", me.n_paths}, {"steps", me.n_steps}, {"seed", me.seed},
                     {"threads", me.n_threads}, {"out", me_out}};
      return finish(me_out, "mc-eq", c, qbsde::report::run_mc_eq(me), timer.seconds());
    }
    if (*sc_mf) {
      ordered_json c{{"T", mf.T}, {"paths", mf.n_paths}, {"steps", mf.n_steps}, {"seed", mf.seed},
                     {"threads", mf.n_threads}, {"out", mf_out}};
      return finish(mf_out, "mc-expfunc", c, qbsde::report::run_mc_expfunc(mf), timer.seconds());
    }
    if (*sc_kl) {
      ordered_json c{{"T", kl.T}, {"modes", kl.n_modes}, {"ortho_modes", kl.ortho_modes},
                     {"quad_points", kl.quad_points}, {"tol", kl.tol}, {"out", kl_out}};
      return finish(kl_out, "kl", c, qbsde::report::run_kl(kl), timer.seconds());
    }
    if (*sc_ra) {
      const std::vector<qbsde::CriterionResult> res = qbsde::run_all_criteria(ra_threads);
      qbsde::report::CommandResult cr;
      bool all = true;
      std::ostringstream csv, sum;
      ordered_json secs = ordered_json::array();
      csv << "index,name,passed\n";
      for (const auto& c : res) {
        all = all && c.passed;
        csv << c.index << ",\"" << c.name << "\"," << (c.passed ? 1 : 0) << '\n';
        sum << "criterion " << c.index << ": " << (c.passed ? "PASS" : "FAIL") << " - " << c.name
            << "\n  " << c.detail << "\n";
        secs.push_back(c.seconds);
      }
      sum << "all criteria passed: " << (all ? "yes" : "NO") << "\n";
      cr.files.emplace_back("criteria.csv", csv.str());
      cr.files.emplace_back("summary.txt", sum.str());
      cr.gates_passed = all;
      if (!all) {
        for (const auto& c : res)
          if (!c.passed) { cr.gate_note = "criterion " + std::to_string(c.index) + ": " + c.name; break; }
      }
      ordered_json c{{"threads", ra_threads}, {"out", ra_out}};
      ordered_json m = manifest_base("report-all");
      m["config"] = c;
      m["criterion_seconds"] = secs;
      m["duration_seconds"] = timer.seconds();
      m["gates_passed"] = cr.gates_passed;
      if (!cr.gate_note.empty()) m["gate_note"] = cr.gate_note;
      write_artifacts(ra_out, cr.files, std::move(m));
      std::printf("%s", cr.files.back().second.c_str());
      std::printf("artifacts in %s\n", ra_out.c_str());
      if (!cr.gates_passed) {
        std::fprintf(stderr, "gate failure: %s\n", cr.gate_note.c_str());
        return 1;
      }
      return 0;
    }
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
