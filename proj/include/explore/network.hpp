#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "explore/occupancy.hpp"
#include "explore/topo_graph.hpp"

namespace explore {

// Symmetric connectivity over robot indices.
struct CommGraph {
    int n = 0;
    std::vector<std::uint8_t> adj;  // row-major n*n

    bool connected(int i, int j) const { return adj[i * n + j] != 0; }
    // Sorted members, components ordered by smallest member.
    std::vector<std::vector<int>> components() const;
};

// Robots within range (inclusive) hear each other; with multi_hop, links
// close transitively over the whole connected component.
CommGraph comm_graph(const std::vector<Vec2>& positions, double range, bool multi_hop);

// One broadcast payload: sender's belief snapshot, own graph and load.
struct Message {
    std::uint32_t sender = 0;
    std::uint64_t tick = 0;
    OccupancyGrid belief;
    HybridTopoGraph graph;
    double load = 0.0;

    std::vector<std::uint8_t> serialize() const;
    // nullopt on any framing/validation failure (drop the message).
    static std::optional<Message> deserialize(const std::vector<std::uint8_t>& bytes);
};

// Cell-wise Known-beats-Unknown merge of src into dst (grids must match).
void fuse_belief(OccupancyGrid& dst, const OccupancyGrid& src);

struct FuseStats {
    std::uint64_t bytes_sent = 0;
    int delivered = 0;
    int dropped = 0;
};

// Every robot serializes its state once; every comm edge delivers a copy to
// each endpoint. Receivers fuse beliefs in place and re-merge their planning
// graph from their own graph plus all heard graphs (sorted sender order, so
// the result is independent of delivery order). fused[i] is overwritten.
FuseStats exchange_and_fuse(const CommGraph& cg, std::uint64_t tick,
                            std::vector<OccupancyGrid>& beliefs,
                            const std::vector<const HybridTopoGraph*>& own_graphs,
                            const std::vector<double>& loads, double merge_radius,
                            std::vector<HybridTopoGraph>& fused,
                            std::vector<double>* heard_loads = nullptr);

}  // namespace explore
