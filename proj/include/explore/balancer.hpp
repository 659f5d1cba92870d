#pragma once

#include <cstdint>
#include <functional>
#include <set>

#include "explore/partition.hpp"
#include "explore/rng.hpp"

namespace explore {

struct BalanceConfig {
    double gamma = 0.5;      // weight step size
    double b_lambda = 10.0;  // tolerated load gap between comm neighbors
    int max_iters = 200;
    bool record_labels = false;  // keep per-iteration labelings (for tests)
};

struct LoadTracePoint {
    double max_load = 0.0;
    double min_load = 0.0;
    double spread = 0.0;  // max_load - min_load
};

struct BalanceOutcome {
    bool converged = false;
    int iterations = 0;
    PartitionResult partition;  // final
    PowerPointSet weights;      // final
    std::map<NodeId, int> initial_label;     // labels before any weight step
    std::vector<LoadTracePoint> trace;       // length iterations + 1
    std::vector<std::vector<double>> load_history;  // per iteration, per center
    std::vector<std::map<NodeId, int>> label_history;  // when record_labels
};

// One synchronous update round: for every comm pair with load gap above
// b_lambda, the lighter side gains weight by gamma. center_dist is the
// row-major center-to-center graph distance matrix used by the feasibility
// clamp |w_ij| <= dist(g_i,g_j) - 1e-6.
PowerPointSet weight_step(const std::vector<double>& loads,
                          const std::vector<std::pair<int, int>>& comm_pairs,
                          PowerPointSet pp, const BalanceConfig& cfg,
                          const std::vector<double>& center_dist);

// Alternates graph_voronoi and weight_step until every comm pair's load gap
// is within b_lambda (converged) or max_iters rounds passed. load_bias adds a
// per-center constant (tour-feedback term) to the loads driving the updates.
BalanceOutcome balance(const HybridTopoGraph& g, PowerPointSet pp,
                       const BalanceConfig& cfg, LoadMetric metric,
                       const std::vector<std::pair<int, int>>& comm_pairs,
                       const std::vector<double>& load_bias = {});

// Node of my_region maximizing the summed graph distance to the neighbor
// centers (unreachable pairs contribute 0). Ties prefer the node closest to
// robot_pos, then the smaller id. With no neighbors this degenerates to the
// region node nearest the robot.
NodeId virtual_center(const HybridTopoGraph& g, const std::vector<NodeId>& my_region,
                      const std::vector<NodeId>& neighbor_centers, Vec2 robot_pos);

struct FreeSpaceQuery {
    std::function<bool(Vec2)> is_known_free;
    double check_step = 0.05;  // segment sampling step (meters)
};

struct DualInsertConfig {
    double load_threshold = 20.0;  // a node carrying at least this much load is a cut risk
    double radius = 0.5;           // sample duals within this distance of the node
    int attempts = 64;
    std::uint64_t seed = 0;
};

struct DualInsertResult {
    HybridTopoGraph graph;            // input graph + accepted duals
    std::vector<TopoNode> added;      // the new dual nodes
    std::vector<NodeId> skipped;      // overloaded nodes with no free sample
};

// For every non-center node whose removal from the graph would change its
// region's load by at least load_threshold, samples a free-space double
// nearby and wires it to the node's neighbors with Uncertain edges (only
// where the straight segment stays in known free space). Nodes that already
// have a dual are skipped. alloc_id must return fresh node ids.
DualInsertResult insert_dual_nodes(const HybridTopoGraph& g, const PartitionResult& res,
                                   const DualInsertConfig& cfg, const FreeSpaceQuery& fs,
                                   const std::function<NodeId()>& alloc_id);

}  // namespace explore
