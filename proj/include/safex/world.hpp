#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "safex/dynamics.hpp"
#include "safex/geometry.hpp"

namespace safex {

/// 8-bit-derived RGB image with channels in [0, 1], row 0 at the top.
struct TerrainImage {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;  // row-major, 3 floats per pixel

  Vec3 pixel(int col, int row) const;
  void validate() const;
};

/// Smooth multi-region terrain: `regions` colored blobs blended with Gaussian weights of width `blend`
/// (world units over a 10 x 10 square), quantized to 8 bits.
TerrainImage generate_terrain(int size, std::uint64_t seed, int regions = 6, double blend = 2.5);

TerrainImage load_ppm(const std::string& path);
TerrainImage load_png(const std::string& path);
/// Dispatch on the file extension (.ppm / .png).
TerrainImage load_terrain(const std::string& path);
void save_ppm(const TerrainImage& image, const std::string& path);

/// d(x) = P rgb(px, py), bilinear over pixel centers, clamped at the border.
struct DisturbanceField {
  TerrainImage image;
  Mat projection = Mat::Zero(5, 3);
  Workspace extent;

  Vec3 color_at(const Vec2& p) const;
  /// d rgb / d (px, py); zero where clamped.
  Eigen::Matrix<double, 3, 2> color_gradient(const Vec2& p) const;
  Vec value(const Vec& x) const;
  Mat jacobian(const Vec& x) const;
  /// World position of the center of pixel (col, row).
  Vec2 pixel_center(int col, int row) const;
};

class TerrainDisturbance final : public DisturbanceModel {
 public:
  explicit TerrainDisturbance(const DisturbanceField* field) : field_(field) {}
  Vec value(const Vec& x) const override { return field_->value(x); }
  Mat jacobian(const Vec& x) const override { return field_->jacobian(x); }

 private:
  const DisturbanceField* field_;
};

struct ScenarioOptions {
  int obstacle_count = 10;
  double min_size = 0.4;
  double max_size = 1.0;
  double circle_share = 0.5;
  int terrain_size = 128;
  int terrain_regions = 6;
  double terrain_blend = 2.5;
  double projection_scale = 0.5;
  /// Free cells must stay connected at this clearance.
  double corridor_clearance = 0.25;
  double start_clearance = 1.0;
  double noise_std = 0.01;
};

/// Options used by the exploration experiments: milder terrain coupling and quieter sensing.
inline ScenarioOptions experiment_scenario_options() {
  ScenarioOptions o;
  o.projection_scale = 0.1;
  o.noise_std = 0.001;
  return o;
}

struct Scenario {
  std::uint64_t seed = 0;
  Workspace workspace;
  ObstacleSet obstacles;
  Mat projection = Mat::Zero(5, 3);
  std::string terrain_path;       // empty: procedural terrain from terrain_seed
  std::uint64_t terrain_seed = 0;
  int terrain_size = 128;
  int terrain_regions = 6;
  double terrain_blend = 2.5;
  double dt = 0.01;
  double thr = 0.1;
  double noise_std = 0.01;
  Vec initial_state = Vec::Zero(5);
};

Scenario generate_scenario(std::uint64_t seed, const ScenarioOptions& options = {});

/// Grid flood fill from the start over cells whose clearance exceeds `clearance`; true when every
/// such cell is reached.
bool free_space_connected(const Workspace& ws, const ObstacleSet& obstacles, const Vec2& start, double clearance,
                          double cell = 0.1);

/// Immutable ground truth: Dubins car plus the hidden terrain disturbance.
class WorldModel {
 public:
  explicit WorldModel(const Scenario& scenario);
  WorldModel(const WorldModel&) = delete;
  WorldModel& operator=(const WorldModel&) = delete;

  const Scenario& scenario() const { return scenario_; }
  const Workspace& workspace() const { return scenario_.workspace; }
  const ObstacleSet& obstacles() const { return scenario_.obstacles; }
  const DisturbanceField& field() const { return field_; }
  const DubinsCar& car() const { return car_; }
  const DisturbanceModel& disturbance() const { return disturbance_; }
  double dt() const { return scenario_.dt; }

  /// f(x) + B u + d(x).
  Vec true_dynamics(const Vec& x, const Vec& u) const;
  Vec step(const Vec& x, const Vec& u) const { return step(x, u, scenario_.dt); }
  Vec step(const Vec& x, const Vec& u, double dt) const;
  Vec observe(const Vec& x, double noise_std, std::mt19937_64& rng) const;
  bool safety_check(const Vec& x) const;

 private:
  Scenario scenario_;
  DisturbanceField field_;
  DubinsCar car_;
  TerrainDisturbance disturbance_;
};

/// f(x) + B u, no disturbance.
Vec nominal_dynamics(const Vec& x, const Vec& u);

Vec step(const Vec& x, const Vec& u, const DisturbanceField& field, double dt);

/// d(x) + s z, z standard normal per coordinate.
Vec observe(const DisturbanceField& field, const Vec& x, double noise_std, std::mt19937_64& rng);

/// Uniform on B(o, rho) intersected with the workspace, by rejection from the bounding box.
Vec2 sample_in_ball(const Vec2& o, double rho, const Workspace& ws, std::mt19937_64& rng);

/// Density lower bound for uniform sampling on the ball: 1 / area(B(o, rho)).
double uniform_density_lower_bound(double rho, int dim = 2);

/// Distance to every obstacle >= thr and position inside the bounds.
bool safety_check(const Vec& x, const Workspace& ws, const ObstacleSet& obstacles, double thr);

}  // namespace safex
