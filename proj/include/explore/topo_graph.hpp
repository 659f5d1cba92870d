#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "explore/geometry.hpp"

namespace explore {

using NodeId = std::int64_t;
inline constexpr NodeId kNoNode = -1;

// Node ids are globally unique without coordination: high bits carry the
// id of the robot that created the node, low bits a per-robot counter.
inline NodeId make_node_id(int robot, std::int64_t counter) {
    return (static_cast<NodeId>(robot) << 32) | counter;
}
inline int node_robot(NodeId id) { return static_cast<int>(id >> 32); }

enum class NodeKind : std::uint8_t { GV = 0, Frontier = 1, Coverage = 2 };
enum class EdgeCertainty : std::uint8_t { Deterministic = 0, Uncertain = 1 };

struct TopoNode {
    NodeId id = kNoNode;
    NodeKind kind = NodeKind::GV;
    Vec2 pos;
    // For coverage duals: the node this one doubles. kNoNode otherwise.
    NodeId dual_of = kNoNode;
};

struct TopoEdge {
    NodeId a = kNoNode;  // a < b always
    NodeId b = kNoNode;
    double length = 0.0;  // equals dist(pos_a, pos_b)
    EdgeCertainty certainty = EdgeCertainty::Uncertain;
};

struct PathResult {
    double distance = 0.0;
    std::vector<std::pair<NodeId, NodeId>> edges;  // in order src -> dst
};

class HybridTopoGraph {
public:
    void add_node(const TopoNode& n);
    void remove_node(NodeId id);  // also drops incident edges
    // Length is computed from the endpoint positions. An edge touching a
    // non-GV endpoint is always stored Uncertain.
    void add_edge(NodeId a, NodeId b, EdgeCertainty c);
    void remove_edge(NodeId a, NodeId b);

    bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
    const TopoNode& node(NodeId id) const { return nodes_.at(id); }
    bool has_edge(NodeId a, NodeId b) const;
    const TopoEdge& edge(NodeId a, NodeId b) const;
    const std::vector<NodeId>& neighbors(NodeId id) const;  // ascending

    const std::map<NodeId, TopoNode>& nodes() const { return nodes_; }
    const std::map<std::pair<NodeId, NodeId>, TopoEdge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    // Deterministic Dijkstra: equal-length alternatives resolve by smaller
    // predecessor id, then smaller node id. nullopt when dst is unreachable.
    std::optional<PathResult> shortest_path(NodeId src, NodeId dst) const;
    // Distances from src to every reachable node (same tie rule).
    std::map<NodeId, double> distances_from(NodeId src) const;

    // Text snapshot: "N <id> <kind> <x> <y> [label]" then
    // "E <a> <b> <length> <certainty>"; kind in {gv,frontier,coverage},
    // certainty in {det,unc}.
    std::string to_text(const std::map<NodeId, int>* labels = nullptr) const;
    static HybridTopoGraph from_text(const std::string& text);  // throws on bad input

    bool equals(const HybridTopoGraph& o) const;

private:
    std::map<NodeId, TopoNode> nodes_;
    std::map<std::pair<NodeId, NodeId>, TopoEdge> edges_;
    std::map<NodeId, std::vector<NodeId>> adj_;
};

// Set union of node/edge sets followed by a dedup pass: non-GV nodes from
// different robots within merge_radius collapse; GV nodes from different
// robots collapse only at exactly coincident positions. The surviving
// representative is the smallest node id of its cluster and keeps its own
// position and kind. Edge lengths are recomputed after remapping.
HybridTopoGraph merge_graphs(const HybridTopoGraph& mine,
                             const std::vector<const HybridTopoGraph*>& theirs,
                             double merge_radius);

}  // namespace explore
