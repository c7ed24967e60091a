#include "safex/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "safex/error.hpp"

namespace safex {

namespace {

template <class T>
void opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from(const Json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  return v;
}

Json vec2_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Vec2 vec2_from(const Json& j) {
  if (j.size() != 2) throw ConfigError("expected a 2-vector");
  return Vec2(j.at(0).get<double>(), j.at(1).get<double>());
}

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

Mat mat_from(const Json& j, Eigen::Index cols_if_empty = 0) {
  if (j.empty()) return Mat(0, cols_if_empty);
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.at(0).size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j.at(r).size() != static_cast<std::size_t>(m.cols())) throw ConfigError("ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = vec_from(j.at(r)).transpose();
  }
  return m;
}

Json search_json(const MaxStdOptions& o) {
  return {{"grid_per_axis", o.grid_per_axis}, {"starts", o.starts}, {"evals_per_start", o.evals_per_start}};
}

MaxStdOptions search_from(const Json& j, MaxStdOptions o) {
  opt(j, "grid_per_axis", o.grid_per_axis);
  opt(j, "starts", o.starts);
  opt(j, "evals_per_start", o.evals_per_start);
  return o;
}

Json train_json(const TrainOptions& o) {
  return {{"samples", o.samples},
          {"vertex_fraction", o.vertex_fraction},
          {"max_evaluations", o.max_evaluations},
          {"hinge_slack", o.hinge_slack},
          {"cond_weight", o.cond_weight},
          {"cond_points", o.cond_points},
          {"gain_weight", o.gain_weight},
          {"certify_samples", o.certify_samples},
          {"certify_slack", o.certify_slack},
          {"bound_samples", o.bound_samples},
          {"bound_safety", o.bound_safety},
          {"lqr_warm_start", o.lqr_warm_start}};
}

TrainOptions train_from(const Json& j, TrainOptions o) {
  opt(j, "samples", o.samples);
  opt(j, "vertex_fraction", o.vertex_fraction);
  opt(j, "max_evaluations", o.max_evaluations);
  opt(j, "hinge_slack", o.hinge_slack);
  opt(j, "cond_weight", o.cond_weight);
  opt(j, "cond_points", o.cond_points);
  opt(j, "gain_weight", o.gain_weight);
  opt(j, "certify_samples", o.certify_samples);
  opt(j, "certify_slack", o.certify_slack);
  opt(j, "bound_samples", o.bound_samples);
  opt(j, "bound_safety", o.bound_safety);
  opt(j, "lqr_warm_start", o.lqr_warm_start);
  return o;
}

Json region_json(const CcmRegion& r) {
  return {{"ref_lower", vec_json(r.ref_lower)},     {"ref_upper", vec_json(r.ref_upper)},
          {"input_lower", vec_json(r.input_lower)}, {"input_upper", vec_json(r.input_upper)},
          {"error_lower", vec_json(r.error_lower)}, {"error_upper", vec_json(r.error_upper)}};
}

CcmRegion region_from(const Json& j, CcmRegion r) {
  if (j.contains("ref_lower")) r.ref_lower = vec_from(j.at("ref_lower"));
  if (j.contains("ref_upper")) r.ref_upper = vec_from(j.at("ref_upper"));
  if (j.contains("input_lower")) r.input_lower = vec_from(j.at("input_lower"));
  if (j.contains("input_upper")) r.input_upper = vec_from(j.at("input_upper"));
  if (j.contains("error_lower")) r.error_lower = vec_from(j.at("error_lower"));
  if (j.contains("error_upper")) r.error_upper = vec_from(j.at("error_upper"));
  return r;
}

Json plan_json(const PlanParams& p) {
  const RrtParams& r = p.rrt;
  const ReferenceGains& g = p.gains;
  return {{"rrt",
           {{"step", r.step},
            {"neighbor_radius", r.neighbor_radius},
            {"max_iters", r.max_iters},
            {"goal_tol", r.goal_tol},
            {"goal_bias", r.goal_bias}}},
          {"gains",
           {{"lookahead", g.lookahead},
            {"speed", g.speed},
            {"min_speed", g.min_speed},
            {"k_speed", g.k_speed},
            {"k_heading", g.k_heading},
            {"k_rate", g.k_rate},
            {"max_rate", g.max_rate},
            {"input_lower", vec2_json(g.input_lower)},
            {"input_upper", vec2_json(g.input_upper)},
            {"goal_tol", g.goal_tol},
            {"horizon_factor", g.horizon_factor},
            {"horizon_extra", g.horizon_extra}}},
          {"rebloat", p.rebloat},
          {"max_retries", p.max_retries}};
}

PlanParams plan_from(const Json& j, PlanParams p) {
  if (j.contains("rrt")) {
    const Json& r = j.at("rrt");
    opt(r, "step", p.rrt.step);
    opt(r, "neighbor_radius", p.rrt.neighbor_radius);
    opt(r, "max_iters", p.rrt.max_iters);
    opt(r, "goal_tol", p.rrt.goal_tol);
    opt(r, "goal_bias", p.rrt.goal_bias);
  }
  if (j.contains("gains")) {
    const Json& g = j.at("gains");
    opt(g, "lookahead", p.gains.lookahead);
    opt(g, "speed", p.gains.speed);
    opt(g, "min_speed", p.gains.min_speed);
    opt(g, "k_speed", p.gains.k_speed);
    opt(g, "k_heading", p.gains.k_heading);
    opt(g, "k_rate", p.gains.k_rate);
    opt(g, "max_rate", p.gains.max_rate);
    if (g.contains("input_lower")) p.gains.input_lower = vec2_from(g.at("input_lower"));
    if (g.contains("input_upper")) p.gains.input_upper = vec2_from(g.at("input_upper"));
    opt(g, "goal_tol", p.gains.goal_tol);
    opt(g, "horizon_factor", p.gains.horizon_factor);
    opt(g, "horizon_extra", p.gains.horizon_extra);
  }
  opt(j, "rebloat", p.rebloat);
  opt(j, "max_retries", p.max_retries);
  return p;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("bad number in CSV: " + s);
  return v;
}

void put_vec(std::ostream& out, const Vec& v, int n) {
  for (int i = 0; i < n; ++i) {
    out << ',';
    if (v.size() == n) out << fmt(v[i]);
  }
}

Vec get_vec(const std::vector<std::string>& cells, std::size_t& at, int n) {
  bool empty = cells[at].empty();
  Vec v(empty ? 0 : n);
  for (int i = 0; i < n; ++i, ++at) {
    if (cells[at].empty() != empty) throw ConfigError("partially empty CSV group");
    if (!empty) v[i] = parse_double(cells[at]);
  }
  return v;
}

}  // namespace

Json to_json(const KernelSpec& k) {
  return {{"family", to_string(k.family)}, {"matern_nu_x2", k.matern_nu_x2}, {"lengthscale", k.lengthscale},
          {"signal_variance", k.signal_variance}, {"c_k", k.c_k}, {"omega", k.omega}, {"a1", k.a1},
          {"a2", k.a2}};
}

KernelSpec kernel_from_json(const Json& j) {
  KernelFamily family = kernel_family_from_string(j.value("family", std::string("squared_exponential")));
  KernelSpec k = make_kernel(family, j.value("lengthscale", 1.0), j.value("signal_variance", 1.0),
                             j.value("matern_nu_x2", 5), j.value("a1", 1.0), j.value("a2", 1.0));
  opt(j, "c_k", k.c_k);
  opt(j, "omega", k.omega);
  validate(k);
  return k;
}

Json to_json(const Obstacle& o) {
  if (o.shape == Obstacle::Shape::Circle) {
    return {{"shape", "circle"}, {"center", vec2_json(o.center)}, {"radius", o.radius}};
  }
  return {{"shape", "rect"}, {"lo", vec2_json(o.lo)}, {"hi", vec2_json(o.hi)}};
}

Obstacle obstacle_from_json(const Json& j) {
  std::string shape = j.at("shape").get<std::string>();
  Obstacle o;
  if (shape == "circle") {
    o = Obstacle::circle(vec2_from(j.at("center")), j.at("radius").get<double>());
  } else if (shape == "rect") {
    o = Obstacle::rect(vec2_from(j.at("lo")), vec2_from(j.at("hi")));
  } else {
    throw ConfigError("unknown obstacle shape: " + shape);
  }
  o.validate();
  return o;
}

Json to_json(const Scenario& s) {
  Json obstacles = Json::array();
  for (const Obstacle& o : s.obstacles) obstacles.push_back(to_json(o));
  Json terrain = {{"size", s.terrain_size}, {"regions", s.terrain_regions}, {"blend", s.terrain_blend},
                  {"seed", s.terrain_seed}};
  if (!s.terrain_path.empty()) terrain["path"] = s.terrain_path;
  return {{"seed", s.seed},
          {"workspace", {{"lo", vec2_json(s.workspace.lo)}, {"hi", vec2_json(s.workspace.hi)}}},
          {"obstacles", obstacles},
          {"projection", mat_json(s.projection)},
          {"terrain", terrain},
          {"dt", s.dt},
          {"thr", s.thr},
          {"noise_std", s.noise_std},
          {"initial_state", vec_json(s.initial_state)}};
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  opt(j, "seed", s.seed);
  if (j.contains("workspace")) {
    s.workspace.lo = vec2_from(j.at("workspace").at("lo"));
    s.workspace.hi = vec2_from(j.at("workspace").at("hi"));
  }
  s.workspace.validate();
  if (j.contains("obstacles")) {
    for (const Json& o : j.at("obstacles")) s.obstacles.push_back(obstacle_from_json(o));
  }
  if (j.contains("projection")) {
    s.projection = mat_from(j.at("projection"));
    if (s.projection.rows() != 5 || s.projection.cols() != 3) throw ConfigError("projection must be 5 x 3");
  }
  if (j.contains("terrain")) {
    const Json& t = j.at("terrain");
    opt(t, "path", s.terrain_path);
    opt(t, "seed", s.terrain_seed);
    opt(t, "size", s.terrain_size);
    opt(t, "regions", s.terrain_regions);
    opt(t, "blend", s.terrain_blend);
  }
  opt(j, "dt", s.dt);
  opt(j, "thr", s.thr);
  opt(j, "noise_std", s.noise_std);
  if (j.contains("initial_state")) s.initial_state = vec_from(j.at("initial_state"));
  return s;
}

Json to_json(const ScenarioOptions& o) {
  return {{"obstacle_count", o.obstacle_count},   {"min_size", o.min_size},
          {"max_size", o.max_size},               {"circle_share", o.circle_share},
          {"terrain_size", o.terrain_size},       {"terrain_regions", o.terrain_regions},
          {"terrain_blend", o.terrain_blend},     {"projection_scale", o.projection_scale},
          {"corridor_clearance", o.corridor_clearance}, {"start_clearance", o.start_clearance},
          {"noise_std", o.noise_std}};
}

ScenarioOptions scenario_options_from_json(const Json& j, ScenarioOptions o) {
  opt(j, "obstacle_count", o.obstacle_count);
  opt(j, "min_size", o.min_size);
  opt(j, "max_size", o.max_size);
  opt(j, "circle_share", o.circle_share);
  opt(j, "terrain_size", o.terrain_size);
  opt(j, "terrain_regions", o.terrain_regions);
  opt(j, "terrain_blend", o.terrain_blend);
  opt(j, "projection_scale", o.projection_scale);
  opt(j, "corridor_clearance", o.corridor_clearance);
  opt(j, "start_clearance", o.start_clearance);
  opt(j, "noise_std", o.noise_std);
  return o;
}

Json to_json(const ComplexityParams& p) {
  return {{"n", p.n},         {"rho", p.rho},         {"delta", p.delta}, {"psi", p.psi},
          {"s", p.s},         {"c_lower", p.c_lower}, {"c_k", p.c_k},     {"omega", p.omega},
          {"a1", p.a1},       {"a2", p.a2}};
}

ComplexityParams complexity_params_from_json(const Json& j, ComplexityParams p) {
  opt(j, "n", p.n);
  opt(j, "rho", p.rho);
  opt(j, "delta", p.delta);
  opt(j, "psi", p.psi);
  opt(j, "s", p.s);
  opt(j, "c_lower", p.c_lower);
  opt(j, "c_k", p.c_k);
  opt(j, "omega", p.omega);
  opt(j, "a1", p.a1);
  opt(j, "a2", p.a2);
  return p;
}

Json to_json(const ComplexityReport& r) {
  const auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"L", num(r.L)},         {"r0", num(r.r0)},       {"r1", num(r.r1)},
          {"c_n", num(r.c_n)},     {"m_e", num(r.m_e)},     {"m_h", num(r.m_h)},
          {"beta", num(r.beta)},   {"a", num(r.a)},         {"n_cond1", num(r.n_cond1)},
          {"n_cond2", num(r.n_cond2)}, {"n_min", num(r.n_min)}};
}

std::string method_name(Method m) { return m == Method::Proposed ? "proposed" : "baseline"; }

Method method_from_string(const std::string& s) {
  if (s == "proposed") return Method::Proposed;
  if (s == "baseline") return Method::Baseline;
  throw ConfigError("unknown method: " + s);
}

Json to_json(const ExplorerConfig& c) {
  return {{"method", method_name(c.method)},
          {"fixed_tube", c.fixed_tube},
          {"rho0", c.rho0},
          {"psi_th", c.psi_th},
          {"delta", c.delta},
          {"shrink", c.shrink},
          {"rho_floor", c.rho_floor},
          {"grid_res", c.grid_res},
          {"max_episodes", c.max_episodes},
          {"max_time", c.max_time},
          {"seed", c.seed},
          {"kernel", to_json(c.kernel)},
          {"observe_every", c.observe_every},
          {"min_spacing", c.min_spacing},
          {"dwell_samples", c.dwell_samples},
          {"dwell_rate", c.dwell_rate},
          {"max_dwell_rounds", c.max_dwell_rounds},
          {"local_search", search_json(c.local_search)},
          {"termination_search", search_json(c.termination_search)},
          {"lambda", c.lambda},
          {"warm_steps", c.warm_steps},
          {"margin", c.margin},
          {"tube_cap", c.tube_cap},
          {"region", region_json(c.region)},
          {"train", train_json(c.train)},
          {"retrain", train_json(c.retrain)},
          {"retrain_check_samples", c.retrain_check_samples},
          {"plan", plan_json(c.plan)}};
}

ExplorerConfig explorer_config_from_json(const Json& j, ExplorerConfig c) {
  if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
  opt(j, "fixed_tube", c.fixed_tube);
  opt(j, "rho0", c.rho0);
  opt(j, "psi_th", c.psi_th);
  opt(j, "delta", c.delta);
  opt(j, "shrink", c.shrink);
  opt(j, "rho_floor", c.rho_floor);
  opt(j, "grid_res", c.grid_res);
  opt(j, "max_episodes", c.max_episodes);
  opt(j, "max_time", c.max_time);
  opt(j, "seed", c.seed);
  if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
  opt(j, "observe_every", c.observe_every);
  opt(j, "min_spacing", c.min_spacing);
  opt(j, "dwell_samples", c.dwell_samples);
  opt(j, "dwell_rate", c.dwell_rate);
  opt(j, "max_dwell_rounds", c.max_dwell_rounds);
  if (j.contains("local_search")) c.local_search = search_from(j.at("local_search"), c.local_search);
  if (j.contains("termination_search")) {
    c.termination_search = search_from(j.at("termination_search"), c.termination_search);
  }
  opt(j, "lambda", c.lambda);
  opt(j, "warm_steps", c.warm_steps);
  opt(j, "margin", c.margin);
  opt(j, "tube_cap", c.tube_cap);
  if (j.contains("region")) c.region = region_from(j.at("region"), c.region);
  if (j.contains("train")) c.train = train_from(j.at("train"), c.train);
  if (j.contains("retrain")) c.retrain = train_from(j.at("retrain"), c.retrain);
  opt(j, "retrain_check_samples", c.retrain_check_samples);
  if (j.contains("plan")) c.plan = plan_from(j.at("plan"), c.plan);
  c.validate();
  return c;
}

Json to_json(const RunMetrics& m) {
  return {{"unsafe_pct", m.unsafe_pct},
          {"travel_time", m.travel_time},
          {"mean_tracking_error", m.mean_tracking_error},
          {"episodes", m.episodes},
          {"retrain_count", m.retrain_count},
          {"blocked_episodes", m.blocked_episodes},
          {"observations", m.observations},
          {"max_episode_tube", m.max_episode_tube},
          {"terminated", m.terminated}};
}

RunMetrics run_metrics_from_json(const Json& j) {
  RunMetrics m;
  m.unsafe_pct = j.at("unsafe_pct").get<double>();
  m.travel_time = j.at("travel_time").get<double>();
  m.mean_tracking_error = j.at("mean_tracking_error").get<double>();
  m.episodes = j.at("episodes").get<int>();
  m.retrain_count = j.at("retrain_count").get<int>();
  opt(j, "blocked_episodes", m.blocked_episodes);
  opt(j, "observations", m.observations);
  opt(j, "max_episode_tube", m.max_episode_tube);
  opt(j, "terminated", m.terminated);
  return m;
}

Json to_json(const MetricModel& m) {
  Json coeffs = Json::array();
  for (const Mat& c : m.coeffs) coeffs.push_back(mat_json(c));
  return {{"n", m.n},           {"degree", m.degree},   {"feature_vars", m.feature_vars},
          {"heading_index", m.heading_index}, {"eps", m.eps}, {"scale", m.scale},
          {"coeffs", coeffs},   {"m_lower", m.m_lower}, {"m_upper", m.m_upper},
          {"lambda", m.lambda}, {"margin", m.margin}};
}

Json to_json(const ControllerModel& c) {
  return {{"kind", c.kind == ControllerKind::LinearError ? "linear" : "body_frame"},
          {"n", c.n},
          {"m", c.m},
          {"heading_index", c.heading_index},
          {"gain", mat_json(c.gain)}};
}

Json to_json(const EpisodeRecord& e) {
  Json j = {{"id", e.id},
            {"goal", vec2_json(e.goal)},
            {"rho", e.rho},
            {"psi", e.psi},
            {"tube", e.tube},
            {"m_lower", e.m_lower},
            {"m_upper", e.m_upper},
            {"lambda", e.lambda},
            {"planned", e.planned},
            {"blocked", e.blocked},
            {"dwell_rounds", e.dwell_rounds},
            {"steps", e.steps},
            {"retrained", e.retrained},
            {"retrain_norm", e.retrain_norm},
            {"certified", e.certified},
            {"bloat_used", e.bloat_used},
            {"max_variance", e.max_variance},
            {"failure", e.failure}};
  if (std::isfinite(e.min_reference_clearance)) j["min_reference_clearance"] = e.min_reference_clearance;
  return j;
}

EpisodeRecord episode_from_json(const Json& j) {
  EpisodeRecord e;
  e.id = j.at("id").get<int>();
  e.goal = vec2_from(j.at("goal"));
  opt(j, "rho", e.rho);
  opt(j, "psi", e.psi);
  opt(j, "tube", e.tube);
  opt(j, "m_lower", e.m_lower);
  opt(j, "m_upper", e.m_upper);
  opt(j, "lambda", e.lambda);
  opt(j, "planned", e.planned);
  opt(j, "blocked", e.blocked);
  opt(j, "dwell_rounds", e.dwell_rounds);
  opt(j, "steps", e.steps);
  opt(j, "retrained", e.retrained);
  opt(j, "retrain_norm", e.retrain_norm);
  opt(j, "certified", e.certified);
  opt(j, "bloat_used", e.bloat_used);
  opt(j, "max_variance", e.max_variance);
  opt(j, "failure", e.failure);
  e.min_reference_clearance = j.value("min_reference_clearance", std::numeric_limits<double>::infinity());
  return e;
}

void write_log_csv(const ExplorationLog& log, std::ostream& out) {
  out << "t,px,py,theta,v,omega,px_ref,py_ref,theta_ref,v_ref,omega_ref,u_force,u_torque,obs_x,obs_y,"
         "d0,d1,d2,d3,d4,unsafe,dwell,episode\n";
  for (const StepRecord& s : log.steps) {
    out << fmt(s.t);
    put_vec(out, s.x, 5);
    put_vec(out, s.xs, 5);
    put_vec(out, s.u, 2);
    put_vec(out, s.obs_point, 2);
    put_vec(out, s.observation, 5);
    out << ',' << (s.unsafe ? 1 : 0) << ',' << (s.dwell ? 1 : 0) << ',' << s.episode << '\n';
  }
}

ExplorationLog read_log_csv(std::istream& in, double dt) {
  ExplorationLog log;
  log.dt = dt;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty log CSV");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 23) throw ConfigError("log CSV row has " + std::to_string(cells.size()) + " cells");
    StepRecord s;
    std::size_t at = 0;
    s.t = parse_double(cells[at++]);
    s.x = get_vec(cells, at, 5);
    s.xs = get_vec(cells, at, 5);
    s.u = get_vec(cells, at, 2);
    s.obs_point = get_vec(cells, at, 2);
    s.observation = get_vec(cells, at, 5);
    s.unsafe = cells[at++] == "1";
    s.dwell = cells[at++] == "1";
    s.episode = std::stoi(cells[at++]);
    log.steps.push_back(std::move(s));
  }
  return log;
}

Json log_to_json(const ExplorationLog& log, bool include_steps) {
  Json episodes = Json::array();
  for (const EpisodeRecord& e : log.episodes) episodes.push_back(to_json(e));
  Json j = {{"dt", log.dt},
            {"terminated", log.terminated},
            {"retrain_count", log.retrain_count},
            {"episodes", episodes},
            {"obs_points", mat_json(log.obs_points)},
            {"obs_values", mat_json(log.obs_values)}};
  if (include_steps) {
    std::ostringstream csv;
    write_log_csv(log, csv);
    j["steps_csv"] = csv.str();
  }
  return j;
}

ExplorationLog log_from_json(const Json& j) {
  ExplorationLog log;
  double dt = j.at("dt").get<double>();
  if (j.contains("steps_csv")) {
    std::istringstream csv(j.at("steps_csv").get<std::string>());
    log = read_log_csv(csv, dt);
  }
  log.dt = dt;
  log.terminated = j.at("terminated").get<bool>();
  log.retrain_count = j.at("retrain_count").get<int>();
  for (const Json& e : j.at("episodes")) log.episodes.push_back(episode_from_json(e));
  log.obs_points = mat_from(j.at("obs_points"), 2);
  log.obs_values = mat_from(j.at("obs_values"), 5);
  return log;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

Json to_json(const RunConfig& c) {
  Json j = {{"method", method_name(c.method)},
            {"tracking_bound", c.tracking_bound},
            {"seeds", c.seeds},
            {"scenario", to_json(c.scenario)},
            {"out", c.out},
            {"format", c.format},
            {"explorer", to_json(c.explorer)}};
  if (!c.scenario_path.empty()) j["scenario_path"] = c.scenario_path;
  if (c.noise_std) j["noise_std"] = *c.noise_std;
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
  opt(j, "tracking_bound", c.tracking_bound);
  opt(j, "seeds", c.seeds);
  opt(j, "scenario_path", c.scenario_path);
  if (j.contains("scenario")) c.scenario = scenario_options_from_json(j.at("scenario"), c.scenario);
  if (j.contains("noise_std")) c.noise_std = j.at("noise_std").get<double>();
  opt(j, "out", c.out);
  opt(j, "format", c.format);
  if (j.contains("explorer")) c.explorer = explorer_config_from_json(j.at("explorer"), c.explorer);
  if (c.format != "json" && c.format != "csv") throw ConfigError("format must be json or csv");
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.tracking_bound < 0.0) throw ConfigError("tracking bound must be nonnegative");
  return c;
}

}  // namespace safex
