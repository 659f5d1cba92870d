#pragma once

#include <map>
#include <vector>

#include "explore/topo_graph.hpp"

namespace explore {

// Plain: every tree edge contributes its length to the load.
// Online: only Uncertain tree edges contribute (unexplored workload).
enum class LoadMetric { Plain, Online };

// Voronoi centers with an antisymmetric pairwise weight matrix. weight(i,j)
// discounts center i's distances when competing against center j, so raising
// it grows region i at j's expense.
struct PowerPointSet {
    struct Center {
        int robot = 0;
        NodeId node = kNoNode;
    };

    std::vector<Center> centers;
    std::vector<double> w;  // row-major size() x size(), w[i][j] == -w[j][i]

    PowerPointSet() = default;
    explicit PowerPointSet(std::vector<Center> c)
        : centers(std::move(c)),
          w(centers.size() * centers.size(), 0.0) {}

    int size() const { return static_cast<int>(centers.size()); }
    double weight(int i, int j) const { return w[i * size() + j]; }
    void set_weight(int i, int j, double v) {
        if (i == j) return;
        w[i * size() + j] = v;
        w[j * size() + i] = -v;
    }
};

struct TreeEdgeRec {
    NodeId parent = kNoNode;
    NodeId child = kNoNode;
    double length = 0.0;
    double contrib = 0.0;  // length under the active load metric
};

struct PartitionResult {
    std::vector<PowerPointSet::Center> centers;
    LoadMetric metric = LoadMetric::Plain;
    std::map<NodeId, int> label;    // node -> center index; orphans absent
    std::map<NodeId, double> dist;  // unweighted tree distance from own center
    std::map<NodeId, NodeId> parent;  // tree parent; centers -> kNoNode
    std::vector<std::vector<TreeEdgeRec>> tree;  // per center, ascending child id
    std::vector<double> load;                    // canonical child-ordered sums
    std::vector<double> load_incremental;        // running values from the sweep
    std::vector<std::vector<NodeId>> members;    // per center, ascending
    std::vector<NodeId> orphans;                 // unreachable nodes, ascending
};

// Multi-source sweep growing all regions at once. A node first settles with
// the center that reaches it in plain distance; center i later steals any
// non-center node from center j when
//   arrival_distance - weight(i, j) < current_distance,
// and the stolen node re-enters the heap so the improvement keeps spreading.
// Per-center loads are maintained incrementally as tree edges attach/detach.
PartitionResult graph_voronoi(const HybridTopoGraph& g, const PowerPointSet& pp,
                              LoadMetric metric);

// Recomputes center_idx's load from its stored tree (child-id order).
double load_metric(const PartitionResult& res, int center_idx);

// True when dropping the leaf does not increase the load (always the case;
// returned from an explicit recompute, not assumed). Throws if leaf is not a
// leaf of the center's tree.
bool leaf_removal_decreases(const PartitionResult& res, int center_idx, NodeId leaf);

struct TourBound {
    std::vector<NodeId> order;  // starts at the center, visits every member
    double length = 0.0;        // walk length along tree paths (edge lengths)
};

// Depth-first visit order over the center's tree (children ascending by id);
// the walk length is at most twice the Plain load of the region.
TourBound tour_upper_bound(const PartitionResult& res, int center_idx);

// Load with the remaining-tour feedback term folded in.
inline double feedback_load(double load, double remaining_tour, double gamma_d) {
    return load + gamma_d * remaining_tour;
}

}  // namespace explore
