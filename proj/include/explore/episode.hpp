#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "explore/balancer.hpp"
#include "explore/mapper.hpp"
#include "explore/network.hpp"
#include "explore/planner.hpp"
#include "explore/world_sim.hpp"

namespace explore {

// Full: virtual centers, weight balancing, tour feedback.
// NoWeight: centers at the node nearest each robot, no weight updates.
// PosVor: positional centers, weight updates on.
// NoFB: virtual centers, weight updates on, no tour feedback.
enum class Variant { Full, NoWeight, PosVor, NoFB };

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view s);

struct SimParams {
    // balancing
    double gamma = 0.5;
    double b_lambda = 10.0;
    int max_iters = 200;
    double gamma_d = 1.0;
    LoadMetric metric = LoadMetric::Online;
    // planning
    double beta_c = 0.3;
    double beta_s = 0.1;
    int pi_max = 5;
    // robot & sensing
    double v_max = 1.2;
    double omega_max = 1.57;
    double sensor_range = 3.0;
    int n_rays = 360;
    double safe_radius = 0.5;
    double comm_range = 15.0;
    bool multi_hop = true;
    // mapping
    MapperConfig mapper;
    double merge_radius = 0.3;
    double dual_radius = 0.5;
    // schedule
    double dt = 0.1;
    double comm_period = 1.0;
    double replan_period = 1.0;
    double max_time = 600.0;
    double coverage_target = 0.98;
    std::uint64_t seed = 1;
};

enum class Outcome { Success, Timeout, Trapped };

struct BalanceLogRow {
    int cycle = 0;
    int iter = 0;
    double max_load = 0.0;
    double min_load = 0.0;
    double spread = 0.0;
};

struct EpisodeResult {
    Outcome outcome = Outcome::Timeout;
    double exploration_time = 0.0;  // seconds until coverage_target (or stop)
    double coverage = 0.0;          // fraction of reachable free space known
    int collisions = 0;
    std::vector<double> tour_lengths;  // per robot distance traveled (meters)
    std::vector<std::pair<double, double>> coverage_curve;  // (t, known m^2)
    std::vector<BalanceLogRow> balance_log;
    FuseStats comm;
    std::vector<std::vector<Vec2>> trajectories;  // per robot, one point per tick
    std::vector<std::string> events;              // json lines
    HybridTopoGraph final_graph;                  // all contributions merged
    std::vector<RobotState> robots;
};

EpisodeResult run_episode(const Scenario& sc, const SimParams& params, Variant variant);

}  // namespace explore
