// misobf command-line driver: solve, trace, verify.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 certificate or suite failure.

#include "misobf/misobf.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace misobf;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailed = 2;

struct RunConfig {
  std::string network;
  std::string budget = "inf";
  int grid = 8;
  std::size_t samples = 4096;
  std::uint64_t seed = 20090921;
  std::string out;
  int threads = 1;
  std::string suite = "all";
  int trials = 0;
  double tol_scale = 1.0;
};

double parse_value(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "Inf" || text == "INF") return kInf;
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw Error("bad number '" + text + "'");
  return v;
}

// "inf", or comma-separated zIJ=value / zI_J=value with 1-based indices.
InterferenceBudget parse_budget(const std::string& spec, std::size_t m) {
  InterferenceBudget budget(m);
  std::string trimmed = std::regex_replace(spec, std::regex("\\s+"), "");
  if (trimmed.empty() || trimmed == "inf") return budget;
  static const std::regex item(R"(z(\d)_?(\d)=(.+)|z(\d+)_(\d+)=(.+))");
  std::stringstream ss(trimmed);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::smatch mt;
    if (!std::regex_match(tok, mt, item)) throw Error("budget entry '" + tok + "' is not of the form zIJ=value");
    const int off = mt[1].matched ? 1 : 4;
    const auto i = std::stoul(mt[off].str()), j = std::stoul(mt[off + 1].str());
    if (i < 1 || j < 1 || i > m || j > m) throw Error("budget entry '" + tok + "' refers to a user outside 1.." + std::to_string(m));
    if (i == j) throw Error("budget entry '" + tok + "' is a diagonal entry");
    budget.set(i - 1, j - 1, parse_value(mt[off + 2].str()));
  }
  return budget;
}

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot write " + path.string());
  os << text;
  if (!os) throw std::ios_base::failure("write failed for " + path.string());
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
  fs::create_directories(dir);
  return dir;
}

int cmd_solve(const RunConfig& cfg) {
  const MisoNetwork net = load_network(cfg.network);
  const std::size_t m = net.users();
  const InterferenceBudget budget = parse_budget(cfg.budget, m);

  json doc;
  doc["network"] = cfg.network;
  json zb = json::object();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) zb["z" + std::to_string(i + 1) + std::to_string(j + 1)] = number(budget.get(i, j));
  doc["budget"] = zb;

  bool all_pass = true;
  std::vector<Beamformer> beams;
  json users = json::array();
  for (std::size_t u = 0; u < m; ++u) {
    const UserSolution sol = solve_user(net, u, budget);
    beams.push_back(sol.beamformer);
    const auto& c = sol.certificate;
    json cert{{"pass", sol.ok()},
              {"kkt_pass", c.pass},
              {"rank_one", sol.rank_one},
              {"inertia", {c.positive, c.negative}},
              {"stationarity", c.stationarity},
              {"slackness", c.slackness},
              {"primal_violation", c.primal_violation},
              {"failures", c.failures}};
    json lam = json::array();
    for (Eigen::Index k = 0; k < sol.split.inner.lambda.size(); ++k) lam.push_back(sol.split.inner.lambda(k));
    json leak = json::array();
    for (double v : sol.leakage) leak.push_back(v);
    users.push_back({{"user", u + 1},
                     {"beamformer", to_json(sol.beamformer.b)},
                     {"signal", sol.signal},
                     {"predicted", sol.predicted},
                     {"single_user_rate", sud_rate(sol.signal, 0.0)},
                     {"leakage", leak},
                     {"Pbar", sol.split.Pbar},
                     {"multipliers", lam},
                     {"certificate", cert}});
    all_pass = all_pass && sol.ok();
  }
  doc["users"] = users;
  const RatePoint r = rate_vector(net, to_covariances(net, beams));
  json single = json::array(), sud = json::array();
  for (std::size_t u = 0; u < m; ++u) {
    single.push_back(users[u]["single_user_rate"]);
    sud.push_back(r[u]);
  }
  doc["single_user_rates"] = single;
  doc["sud_rates"] = sud;
  doc["pass"] = all_pass;

  const std::string text = doc.dump(2) + "\n";
  if (cfg.out.empty()) std::cout << text;
  else write_text(output_dir(cfg) / "solve.json", text);
  if (!all_pass) std::cerr << "certificate failure for at least one user\n";
  return all_pass ? kOk : kFailed;
}

int cmd_trace(const RunConfig& cfg) {
  const MisoNetwork net = load_network(cfg.network);
  RegionGrid grid;
  grid.G = cfg.grid;
  grid.samples = cfg.samples;
  grid.seed = cfg.seed;
  TraceOptions opt;
  opt.threads = cfg.threads;
  const ParetoSet set = trace_region(net, grid, opt);
  const fs::path dir = output_dir(cfg);

  std::ostringstream region;
  write_region_csv(region, net, set);
  write_text(dir / "region.csv", region.str());

  json summary{{"network", cfg.network},
               {"users", net.users()},
               {"grid", grid.G},
               {"samples", grid.samples},
               {"seed", grid.seed},
               {"pareto_points", set.points.size()},
               {"evaluated", set.evaluated},
               {"user_solves", set.user_solves},
               {"failed_certificates", set.failed_certificates}};
  json projections = json::array();
  if (net.users() == 3) {
    for (std::size_t u = 0; u < 3; ++u) {
      for (const auto& [mode, tag] : {std::pair{ProjectionMode::Inactive, "inactive"}, std::pair{ProjectionMode::AtMax, "at_max"}}) {
        ProjectionSpec spec;
        spec.mode = mode;
        const Curve curve = project_2d(net, set, u, spec, opt);
        const std::string name = "projection_user" + std::to_string(u + 1) + "_" + tag + ".csv";
        std::ostringstream os;
        write_projection_csv(os, curve);
        write_text(dir / name, os.str());
        if (!curve.warning.empty()) std::cerr << name << ": " << curve.warning << "\n";
        projections.push_back({{"file", name}, {"points", curve.points.size()}});
      }
    }
  }
  summary["projections"] = projections;
  write_text(dir / "trace.json", summary.dump(2) + "\n");
  std::cout << "wrote " << set.points.size() << " Pareto points to " << (dir / "region.csv").string() << "\n";
  if (set.failed_certificates > 0) {
    std::cerr << set.failed_certificates << " per-user solves failed their certificate\n";
    return kFailed;
  }
  return kOk;
}

int cmd_verify(const RunConfig& cfg) {
  std::vector<std::string> names;
  if (cfg.suite == "all") names = suite_names();
  else names.push_back(cfg.suite);
  SuiteConfig sc;
  sc.seed = cfg.seed;
  sc.trials = cfg.trials;
  sc.tol_scale = cfg.tol_scale;

  json report{{"seed", cfg.seed}, {"tol_scale", cfg.tol_scale}};
  json suites = json::array();
  bool ok = true;
  for (const auto& name : names) {
    const SuiteReport r = run_suite(name, sc);
    std::cerr << (r.passed() ? "PASS " : "FAIL ") << r.name << " trials=" << r.trials << " failures=" << r.failures
              << " worst=" << r.worst << (r.first_failure.empty() ? "" : " first: " + r.first_failure) << "\n";
    suites.push_back({{"name", r.name},
                      {"trials", r.trials},
                      {"failures", r.failures},
                      {"worst_ratio", number(r.worst)},
                      {"seconds", r.seconds},
                      {"first_failure", r.first_failure},
                      {"passed", r.passed()}});
    ok = ok && r.passed();
  }
  report["suites"] = suites;
  report["passed"] = ok;
  const std::string text = report.dump(2) + "\n";
  if (cfg.out.empty()) std::cout << text;
  else write_text(output_dir(cfg) / "verify.json", text);
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beamforming rate regions of MISO interference channels"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* solve = app.add_subcommand("solve", "Solve every user's signal-power problem for one budget matrix");
  solve->add_option("--network", cfg.network, "Network JSON file")->required();
  solve->add_option("--budget", cfg.budget, "inf, or comma-separated zIJ=value (omitted pairs are unconstrained)");
  solve->add_option("--out", cfg.out, "Directory for solve.json (stdout when omitted)");

  auto* trace = app.add_subcommand("trace", "Trace the rate region over a budget grid");
  trace->add_option("--network", cfg.network, "Network JSON file")->required();
  trace->add_option("--grid", cfg.grid, "Log-spaced budget samples per pair")->check(CLI::Range(2, 1000));
  trace->add_option("--samples", cfg.samples, "Quasi-random budget draws for more than three users");
  trace->add_option("--seed", cfg.seed, "Seed for the quasi-random draws");
  trace->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::Range(1, 1024));
  trace->add_option("--out", cfg.out, "Output directory")->required();

  auto* verify = app.add_subcommand("verify", "Run the randomized property suites");
  std::string suite_help = "Suite name or 'all' (";
  for (const auto& n : suite_names()) suite_help += n + (n == suite_names().back() ? ")" : ", ");
  verify->add_option("--suite", cfg.suite, suite_help);
  verify->add_option("--trials", cfg.trials, "Trials per suite (0 keeps each suite's default)")->check(CLI::NonNegativeNumber);
  verify->add_option("--seed", cfg.seed, "Base seed");
  verify->add_option("--tol-scale", cfg.tol_scale, "Multiplier on every tolerance (test hook; negative forces failure)");
  verify->add_option("--out", cfg.out, "Directory for verify.json (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (cfg.suite != "all") {
      const auto& names = suite_names();
      if (std::find(names.begin(), names.end(), cfg.suite) == names.end()) throw Error("unknown suite '" + cfg.suite + "'");
    }
    if (*solve) return cmd_solve(cfg);
    if (*trace) return cmd_trace(cfg);
    if (*verify) return cmd_verify(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
