#include <cstdio>
#include <filesystem>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gp_selftest.hpp"
#include "safex/error.hpp"
#include "safex/io.hpp"
#include "safex/json_schema.hpp"

namespace fs = std::filesystem;
using namespace safex;

namespace {

enum Exit { kOk = 0, kConfig = 1, kBlocked = 2, kNumeric = 3 };

struct ExploreFlags {
  std::string config;
  std::string method;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string format;
  std::string scenario;
  double tracking_bound = -1.0;
  int jobs = 1;
};

std::string label(const RunConfig& rc) {
  if (rc.method == Method::Proposed) return "Proposed";
  std::ostringstream s;
  s << "Baseline (E = " << rc.tracking_bound << ")";
  return s.str();
}

Json mean_metrics(const std::vector<RunMetrics>& runs) {
  double n = static_cast<double>(runs.size());
  Json m = {{"unsafe_pct", 0.0},         {"travel_time", 0.0},  {"mean_tracking_error", 0.0},
            {"episodes", 0.0},           {"retrain_count", 0.0}, {"blocked_episodes", 0.0},
            {"observations", 0.0},       {"max_episode_tube", 0.0}, {"terminated", 0.0}};
  for (const RunMetrics& r : runs) {
    m["unsafe_pct"] = m["unsafe_pct"].get<double>() + r.unsafe_pct / n;
    m["travel_time"] = m["travel_time"].get<double>() + r.travel_time / n;
    m["mean_tracking_error"] = m["mean_tracking_error"].get<double>() + r.mean_tracking_error / n;
    m["episodes"] = m["episodes"].get<double>() + r.episodes / n;
    m["retrain_count"] = m["retrain_count"].get<double>() + r.retrain_count / n;
    m["blocked_episodes"] = m["blocked_episodes"].get<double>() + r.blocked_episodes / n;
    m["observations"] = m["observations"].get<double>() + r.observations / n;
    m["max_episode_tube"] = std::max(m["max_episode_tube"].get<double>(), r.max_episode_tube);
    m["terminated"] = m["terminated"].get<double>() + (r.terminated ? 1.0 : 0.0) / n;
  }
  return m;
}

std::string table(const std::string& name, const Json& mean) {
  std::ostringstream s;
  s << "Method,Unsafe %,Travel time (s),Tracking error (m)\n";
  s << name << ',' << std::fixed << std::setprecision(2) << mean["unsafe_pct"].get<double>() << ','
    << std::setprecision(1) << mean["travel_time"].get<double>() << ',' << std::setprecision(3)
    << mean["mean_tracking_error"].get<double>() << '\n';
  return s.str();
}

int cmd_explore(const ExploreFlags& f, bool force_baseline) {
  Json raw = Json::object();
  if (!f.config.empty()) {
    raw = read_json_file(f.config);
    require_valid("run_config", raw);
  }
  RunConfig rc = run_config_from_json(raw);
  if (!f.method.empty()) rc.method = method_from_string(f.method);
  if (force_baseline) rc.method = Method::Baseline;
  if (f.tracking_bound >= 0.0) rc.tracking_bound = f.tracking_bound;
  if (!f.seeds.empty()) rc.seeds = f.seeds;
  if (!f.out.empty()) rc.out = f.out;
  if (!f.format.empty()) rc.format = f.format;
  if (!f.scenario.empty()) rc.scenario_path = f.scenario;
  rc = run_config_from_json(to_json(rc));
  fs::create_directories(rc.out);
  write_json_file((fs::path(rc.out) / "config.json").string(), to_json(rc));

  std::cerr << "training nominal controller\n";
  auto initial = std::make_shared<const TrainResult>(train_initial(rc.explorer, DubinsCar(), 1));
  std::cerr << "  certificate max " << initial->certificate.max_value << (initial->certificate.pass ? " pass" : " FAIL")
            << ", tube/psi " << tube_radius(initial->metric.m_lower, initial->metric.m_upper, 1.0, initial->metric.lambda)
            << "\n";

  auto one = [&](std::uint64_t seed) {
    Scenario sc = rc.scenario_path.empty() ? generate_scenario(seed, rc.scenario)
                                           : scenario_from_json(read_json_file(rc.scenario_path));
    if (rc.noise_std) sc.noise_std = *rc.noise_std;
    WorldModel world(sc);
    ExplorerConfig ec = rc.explorer;
    ec.seed = seed;
    ExplorationLog log = rc.method == Method::Proposed ? run(world, ec, initial)
                                                       : run_baseline(world, ec, rc.tracking_bound, initial);
    std::string stem = "seed_" + std::to_string(seed);
    Json scenario_json = to_json(sc);
    require_valid("scenario", scenario_json);
    write_json_file((fs::path(rc.out) / (stem + "_scenario.json")).string(), scenario_json);
    Json log_json = log_to_json(log, rc.format == "json");
    require_valid("log", log_json);
    std::string log_name;
    if (rc.format == "csv") {
      log_name = stem + ".csv";
      std::ostringstream csv;
      write_log_csv(log, csv);
      write_text_file((fs::path(rc.out) / log_name).string(), csv.str());
      write_json_file((fs::path(rc.out) / (stem + "_episodes.json")).string(), log_json);
    } else {
      log_name = stem + ".json";
      write_json_file((fs::path(rc.out) / log_name).string(), log_json);
    }
    RunMetrics m = compute_metrics(log);
    std::cerr << "  seed " << seed << ": unsafe " << m.unsafe_pct << "% time " << m.travel_time << " s err "
              << m.mean_tracking_error << " episodes " << m.episodes << " retrains " << m.retrain_count
              << (m.terminated ? " terminated" : " not terminated") << "\n";
    return std::make_pair(m, log_name);
  };

  std::vector<std::pair<RunMetrics, std::string>> results(rc.seeds.size());
  int jobs = std::max(1, f.jobs);
  for (std::size_t start = 0; start < rc.seeds.size(); start += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<std::pair<RunMetrics, std::string>>> pending;
    std::size_t end = std::min(rc.seeds.size(), start + static_cast<std::size_t>(jobs));
    for (std::size_t i = start; i < end; ++i) pending.push_back(std::async(std::launch::async, one, rc.seeds[i]));
    for (std::size_t i = start; i < end; ++i) results[i] = pending[i - start].get();
  }

  std::vector<RunMetrics> metrics;
  Json runs = Json::array();
  bool all_terminated = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    metrics.push_back(results[i].first);
    all_terminated = all_terminated && results[i].first.terminated;
    runs.push_back({{"seed", rc.seeds[i]}, {"metrics", to_json(results[i].first)}, {"log", results[i].second}});
  }
  Json summary = {{"method", method_name(rc.method)},
                  {"label", label(rc)},
                  {"tracking_bound", rc.method == Method::Baseline ? Json(rc.tracking_bound) : Json(nullptr)},
                  {"runs", runs},
                  {"mean", mean_metrics(metrics)}};
  require_valid("summary", summary);
  write_json_file((fs::path(rc.out) / "summary.json").string(), summary);
  std::string t = table(label(rc), summary["mean"]);
  write_text_file((fs::path(rc.out) / "summary.csv").string(), t);
  std::cout << t;
  return all_terminated ? kOk : kBlocked;
}

int cmd_complexity(const std::string& config, ComplexityParams p, const std::string& format,
                   const CLI::App& app) {
  if (!config.empty()) {
    Json raw = read_json_file(config);
    require_valid("complexity_params", raw);
    ComplexityParams base = complexity_params_from_json(raw);
    // flags given explicitly win over the file
    for (const char* name : {"--n", "--rho", "--delta", "--psi", "--s", "--c-lower", "--c-k", "--omega", "--a1", "--a2"}) {
      if (app.count(name) == 0) {
        std::string key = std::string(name + 2);
        std::replace(key.begin(), key.end(), '-', '_');
        if (key == "n") p.n = base.n;
        else if (key == "rho") p.rho = base.rho;
        else if (key == "delta") p.delta = base.delta;
        else if (key == "psi") p.psi = base.psi;
        else if (key == "s") p.s = base.s;
        else if (key == "c_lower") p.c_lower = base.c_lower;
        else if (key == "c_k") p.c_k = base.c_k;
        else if (key == "omega") p.omega = base.omega;
        else if (key == "a1") p.a1 = base.a1;
        else if (key == "a2") p.a2 = base.a2;
      }
    }
  }
  validate(p);
  ComplexityReport r = required_samples(p);
  Json j = {{"params", to_json(p)}, {"report", to_json(r)}};
  if (format == "json") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "quantity,value\n";
    for (auto it = j["report"].begin(); it != j["report"].end(); ++it) std::cout << it.key() << ',' << it.value().dump() << "\n";
  }
  return kOk;
}

int cmd_scenario(std::uint64_t seed, const std::string& config, const std::string& out) {
  ScenarioOptions opts = RunConfig{}.scenario;
  if (!config.empty()) {
    Json raw = read_json_file(config);
    require_valid("run_config", raw);
    opts = run_config_from_json(raw).scenario;
  }
  Json j = to_json(generate_scenario(seed, opts));
  require_valid("scenario", j);
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(out, j);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safex: safe exploration with GP disturbance estimates and contraction tubes"};
  app.require_subcommand(1);

  ExploreFlags ef;
  auto add_explore = [&](CLI::App* sub, bool with_method) {
    sub->add_option("--config", ef.config, "run configuration JSON");
    if (with_method) sub->add_option("--method", ef.method, "proposed or baseline")->check(CLI::IsMember({"proposed", "baseline"}));
    sub->add_option("--seeds,--seed", ef.seeds, "seeds (repeat or comma separated)")->delimiter(',');
    sub->add_option("--out", ef.out, "output directory");
    sub->add_option("--format", ef.format, "per-seed log format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--scenario", ef.scenario, "scenario JSON used for every seed");
    sub->add_option("--tracking-bound", ef.tracking_bound, "baseline tube")->check(CLI::NonNegativeNumber);
    sub->add_option("--jobs", ef.jobs, "seeds run concurrently")->check(CLI::PositiveNumber);
  };
  CLI::App* explore = app.add_subcommand("explore", "run the exploration loop per seed");
  add_explore(explore, true);
  CLI::App* baseline = app.add_subcommand("baseline", "explore with the fixed-tube baseline");
  add_explore(baseline, false);

  CLI::App* complexity = app.add_subcommand("complexity", "sample-complexity report");
  ComplexityParams cp;
  std::string cp_config, cp_format = "json";
  complexity->add_option("--config", cp_config, "parameter JSON");
  complexity->add_option("--n", cp.n);
  complexity->add_option("--rho", cp.rho);
  complexity->add_option("--delta", cp.delta);
  complexity->add_option("--psi", cp.psi);
  complexity->add_option("--s", cp.s);
  complexity->add_option("--c-lower", cp.c_lower);
  complexity->add_option("--c-k", cp.c_k);
  complexity->add_option("--omega", cp.omega);
  complexity->add_option("--a1", cp.a1);
  complexity->add_option("--a2", cp.a2);
  complexity->add_option("--format", cp_format)->check(CLI::IsMember({"json", "csv", "table"}));

  CLI::App* scenario = app.add_subcommand("scenario", "emit a reproducible scenario");
  std::uint64_t sc_seed = 0;
  std::string sc_config, sc_out;
  scenario->add_option("--seed", sc_seed);
  scenario->add_option("--config", sc_config, "run configuration JSON (scenario options)");
  scenario->add_option("--out", sc_out, "output file; stdout when omitted");

  CLI::App* selftest = app.add_subcommand("gp-selftest", "GP oracle suite");
  int st_cases = 200;
  std::uint64_t st_seed = 0;
  selftest->add_option("--cases", st_cases)->check(CLI::PositiveNumber);
  selftest->add_option("--seed", st_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (explore->parsed()) return cmd_explore(ef, false);
    if (baseline->parsed()) return cmd_explore(ef, true);
    if (complexity->parsed()) return cmd_complexity(cp_config, cp, cp_format, *complexity);
    if (scenario->parsed()) return cmd_scenario(sc_seed, sc_config, sc_out);
    if (selftest->parsed()) return tools::gp_selftest(st_cases, st_seed, std::cout).pass ? kOk : kNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const PlanningError& e) {
    std::cerr << "planning failure: " << e.what() << "\n";
    return kBlocked;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kNumeric;
  }
  return kOk;
}
