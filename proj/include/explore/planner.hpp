#pragma once

#include <optional>
#include <set>
#include <vector>

#include "explore/occupancy.hpp"
#include "explore/partition.hpp"

namespace explore {

// 8-connected A* over the grid with octile costs in meters. Unknown cells are
// traversable; blocked marks impassable cells (inflated obstacles). Diagonal
// moves require both orthogonal neighbors to be passable. The start cell is
// always treated as passable. Returns the cell path including endpoints.
std::optional<std::vector<CellIndex>> grid_astar(const OccupancyGrid& g,
                                                 const std::vector<std::uint8_t>& blocked,
                                                 CellIndex start, CellIndex goal);

// grid_astar, but when the goal cell itself is walled in (e.g. a viewpoint
// inside the inflation band) the path may instead end at the passable cell
// nearest the goal within slack meters. nullopt when no approach exists.
std::optional<std::vector<CellIndex>> grid_astar_near(
    const OccupancyGrid& g, const std::vector<std::uint8_t>& blocked, CellIndex start,
    CellIndex goal, double slack);

inline double priority_value(double gain_norm, double cost_norm, double self_flag,
                             double beta_c, double beta_s) {
    return gain_norm - beta_c * cost_norm + beta_s * self_flag;
}

struct AtspSolution {
    std::vector<int> order;  // permutation of 1..n-1, visited after node 0
    double length = 0.0;
};

// Open tour starting at node 0 visiting all nodes once; cost may be
// asymmetric. Exact Held-Karp for n <= 12, heuristic beyond.
AtspSolution solve_atsp(const std::vector<std::vector<double>>& cost);
AtspSolution solve_atsp_exact(const std::vector<std::vector<double>>& cost);
AtspSolution solve_atsp_heuristic(const std::vector<std::vector<double>>& cost);

struct PlannerParams {
    double beta_c = 0.3;
    double beta_s = 0.1;
    int pi_max = 5;
    double sensor_range = 3.0;
    int n_rays = 360;             // gain visibility sweep; match the sensor's
    double approach_slack = 0.9;  // acceptable stop-short distance (meters)
};

struct PlanInput {
    int center_idx = -1;
    Vec2 pose;
    const HybridTopoGraph* graph = nullptr;
    const PartitionResult* partition = nullptr;
    const OccupancyGrid* belief = nullptr;
    const std::vector<std::uint8_t>* blocked = nullptr;  // inflated mask
    // Nodes whose region label survived the last balance run unchanged.
    const std::set<NodeId>* stable_nodes = nullptr;
    PlannerParams params;
};

struct PlanResult {
    std::vector<Vec2> waypoints;  // grid path to the first tour stop
    std::vector<NodeId> tour;     // planned visiting order over selected targets
    double tour_length = 0.0;     // remaining-tour feedback term
    std::vector<NodeId> targets;  // selected targets, ranked
    bool no_targets_anywhere = false;  // nothing left to explore graph-wise
    bool used_fallback = false;        // steered toward another region's work
};

// Hybrid travel estimate: grid path from the pose to the nearest graph node,
// then graph distance to the target; falls back to a pure grid path when
// either leg is missing. nullopt when the target is unreachable both ways.
std::optional<double> dual_layer_cost(const PlanInput& in, NodeId target);

// Full decision cycle: target set, priorities, selection, tour, waypoints.
PlanResult plan_cycle(const PlanInput& in);

}  // namespace explore
