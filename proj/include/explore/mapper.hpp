#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "explore/occupancy.hpp"
#include "explore/rng.hpp"
#include "explore/topo_graph.hpp"

namespace explore {

// Generalized Voronoi ridge field over the known part of a belief grid.
// Obstacles are 8-connected components of Occupied cells; a free cell is a
// ridge (GV) cell when its two nearest distinct components are closer than
// dhat and equally far up to one cell diagonal. Updates are incremental and
// bit-identical to a from-scratch recompute of the same belief.
class Gvd {
public:
    Gvd() = default;
    Gvd(int w, int h, double res, double dhat);

    // newly_known: cells whose belief value changed from Unknown this round.
    void update(const OccupancyGrid& belief, const std::vector<CellIndex>& newly_known);
    // Reference path: fresh state fed the whole belief in one batch.
    void rebuild(const OccupancyGrid& belief);

    bool is_gv(int x, int y) const { return gv_[y * w_ + x] != 0; }
    const std::vector<std::uint8_t>& gv_mask() const { return gv_; }
    std::vector<CellIndex> gv_cells() const;  // ascending (y, x)
    double nearest_dist(int x, int y) const { return d1_[y * w_ + x]; }
    double second_dist(int x, int y) const { return d2_[y * w_ + x]; }
    std::int32_t nearest_comp(int x, int y) const { return id1_[y * w_ + x]; }
    std::int32_t second_comp(int x, int y) const { return id2_[y * w_ + x]; }

    bool same_field(const Gvd& o) const;

private:
    int w_ = 0, h_ = 0;
    double res_ = 0.1, dhat_ = 2.0;
    int window_ = 0;  // scan radius in cells
    std::vector<double> d1_, d2_;
    std::vector<std::int32_t> id1_, id2_;
    std::vector<std::uint8_t> gv_;
    // Union-find over occupied cells; roots normalize to the smallest linear
    // index so component ids are independent of discovery order. -1 = free.
    std::vector<std::int32_t> parent_;

    std::int32_t find(std::int32_t x);
    void unite(std::int32_t a, std::int32_t b, std::set<std::int32_t>& changed_roots);
    void compute_cell(const OccupancyGrid& belief, int x, int y);
};

// Zhang-Suen thinning of a binary mask.
std::vector<std::uint8_t> thin_mask(const std::vector<std::uint8_t>& mask, int w, int h);

struct GvExtraction {
    std::vector<int> node_cells;              // linear indices, ascending
    std::vector<std::pair<int, int>> edges;   // between node cells
};

// Thins the ridge mask to a skeleton and picks graph nodes: junction cells
// (clusters collapse to their smallest cell), path endpoints, and spacer
// nodes every node_spacing along ridge segments. Chords that would cross an
// Occupied cell of the belief are subdivided at walk cells. Pure function of
// (mask, belief), so repeated extraction is idempotent.
GvExtraction extract_gv_skeleton(const std::vector<std::uint8_t>& gv_mask,
                                 const OccupancyGrid& belief, double node_spacing);

struct FrontierCluster {
    std::vector<int> cells;  // linear indices, ascending
    int anchor = -1;         // smallest cell; identity of the cluster
    Vec2 centroid;
    Vec2 viewpoint;  // centroid when known-free, else nearest known Free cell

    bool operator==(const FrontierCluster& o) const {
        return cells == o.cells && centroid == o.centroid && viewpoint == o.viewpoint;
    }
};

// Maintains the frontier cell set (Free cells with an Unknown 4-neighbor)
// under incremental belief changes, and its 8-connected clustering with
// large clusters bisected until within cluster_max_size.
class FrontierTracker {
public:
    FrontierTracker() = default;
    FrontierTracker(int w, int h, double res, double cluster_max_size);

    void update(const OccupancyGrid& belief, const std::vector<CellIndex>& changed);
    void rebuild(const OccupancyGrid& belief);  // batch reference

    const std::set<int>& cells() const { return frontier_; }
    const std::vector<FrontierCluster>& clusters() const { return clusters_; }
    bool empty() const { return frontier_.empty(); }

private:
    int w_ = 0, h_ = 0;
    double res_ = 0.1, max_size_ = 2.0;
    std::set<int> frontier_;
    std::vector<FrontierCluster> clusters_;

    bool is_frontier(const OccupancyGrid& belief, int x, int y) const;
    void recluster(const OccupancyGrid& belief);
};

struct MapperConfig {
    double dhat = 2.0;              // GVD ridge distance cap
    double node_spacing = 1.0;      // ridge node spacing
    double cluster_max_size = 2.0;  // frontier cluster bbox cap
    double sample_spacing = 1.0;    // min distance between coverage samples
    double dc = 5.0;                // coverage sampling radius around the robot
    int coverage_attempts = 30;     // rejection samples per update
    int attach_k = 2;               // nearest nodes a frontier/sample ties into
};

// Per-robot map layer: owns the robot's contribution to the shared graph
// (GV ridge nodes, frontier viewpoints, coverage samples) and keeps node ids
// stable across updates.
class Mapper {
public:
    Mapper() = default;
    Mapper(int robot, int w, int h, double res, const MapperConfig& cfg);

    // belief must already contain this round's observations; changed lists
    // the cells that left Unknown since the previous update.
    void update(const OccupancyGrid& belief, const std::vector<CellIndex>& changed,
                Vec2 robot_pos, Rng& rng);

    const HybridTopoGraph& own_graph() const { return graph_; }
    HybridTopoGraph& own_graph() { return graph_; }
    const Gvd& gvd() const { return gvd_; }
    const FrontierTracker& frontiers() const { return frontier_; }
    NodeId alloc_id() { return make_node_id(robot_, next_id_++); }
    int robot() const { return robot_; }

private:
    int robot_ = 0;
    MapperConfig cfg_;
    double res_ = 0.1;
    Gvd gvd_;
    FrontierTracker frontier_;
    HybridTopoGraph graph_;
    std::map<int, NodeId> gv_cell_node_;        // skeleton cell -> stable id
    std::map<int, NodeId> frontier_anchor_node_;  // cluster anchor -> stable id
    std::int64_t next_id_ = 0;

    void attach_node(const OccupancyGrid& belief, NodeId id);
    void rebuild_gv_layer(const OccupancyGrid& belief);
    void rebuild_frontier_layer(const OccupancyGrid& belief);
    void retire_coverage(const OccupancyGrid& belief);
    void sample_coverage(const OccupancyGrid& belief, Vec2 robot_pos, Rng& rng);
};

}  // namespace explore
