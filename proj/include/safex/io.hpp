#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "safex/complexity.hpp"
#include "safex/explorer.hpp"
#include "safex/world.hpp"

namespace safex {

using Json = nlohmann::json;

Json to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const Json& j);

Json to_json(const Obstacle& o);
Obstacle obstacle_from_json(const Json& j);

Json to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);

Json to_json(const ScenarioOptions& o);
/// Missing keys keep the values of `base`.
ScenarioOptions scenario_options_from_json(const Json& j, ScenarioOptions base = {});

Json to_json(const ComplexityParams& p);
ComplexityParams complexity_params_from_json(const Json& j, ComplexityParams base = {});
Json to_json(const ComplexityReport& r);

Json to_json(const ExplorerConfig& c);
ExplorerConfig explorer_config_from_json(const Json& j, ExplorerConfig base = default_explorer_config());

Json to_json(const RunMetrics& m);
RunMetrics run_metrics_from_json(const Json& j);

Json to_json(const MetricModel& m);
Json to_json(const ControllerModel& c);

/// Per-episode record without the reference samples.
Json to_json(const EpisodeRecord& e);

/// Per-step CSV: t, state, nominal state, input, observation point, observed d, unsafe flag, dwell flag,
/// episode id. Empty cells for absent values. Doubles are written in shortest round-trip form.
void write_log_csv(const ExplorationLog& log, std::ostream& out);
/// Steps only; episodes and observation matrices are not part of the CSV.
ExplorationLog read_log_csv(std::istream& in, double dt);

/// Everything in the log except the steps.
Json log_to_json(const ExplorationLog& log, bool include_steps);
ExplorationLog log_from_json(const Json& j);

Json read_json_file(const std::string& path);
/// Two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const Json& j);
void write_text_file(const std::string& path, const std::string& text);

std::string method_name(Method m);
Method method_from_string(const std::string& s);

/// What the command line runs: scenario source, method, seeds and all hyperparameters.
struct RunConfig {
  Method method = Method::Proposed;
  double tracking_bound = 0.0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string scenario_path;  // empty: generate one scenario per seed
  ScenarioOptions scenario = experiment_scenario_options();
  std::optional<double> noise_std;
  std::string out = "out";
  std::string format = "json";
  ExplorerConfig explorer = default_explorer_config();
};

Json to_json(const RunConfig& c);
RunConfig run_config_from_json(const Json& j);

}  // namespace safex
