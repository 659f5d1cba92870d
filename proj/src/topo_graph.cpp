#include "explore/topo_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace explore {

namespace {

std::pair<NodeId, NodeId> edge_key(NodeId a, NodeId b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

const std::vector<NodeId>& empty_neighbors() {
    static const std::vector<NodeId> empty;
    return empty;
}

}  // namespace

void HybridTopoGraph::add_node(const TopoNode& n) {
    if (nodes_.count(n.id)) throw std::invalid_argument("duplicate node id");
    nodes_[n.id] = n;
    adj_[n.id];
}

void HybridTopoGraph::remove_node(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return;
    for (NodeId nb : adj_[id]) {
        edges_.erase(edge_key(id, nb));
        auto& v = adj_[nb];
        v.erase(std::remove(v.begin(), v.end(), id), v.end());
    }
    adj_.erase(id);
    nodes_.erase(it);
}

void HybridTopoGraph::add_edge(NodeId a, NodeId b, EdgeCertainty c) {
    if (a == b) throw std::invalid_argument("self loop");
    const TopoNode& na = node(a);
    const TopoNode& nb = node(b);
    if (na.kind != NodeKind::GV || nb.kind != NodeKind::GV)
        c = EdgeCertainty::Uncertain;
    auto key = edge_key(a, b);
    const bool existed = edges_.count(key) != 0;
    edges_[key] = TopoEdge{key.first, key.second, dist(na.pos, nb.pos), c};
    if (!existed) {
        auto insert_sorted = [](std::vector<NodeId>& v, NodeId x) {
            v.insert(std::lower_bound(v.begin(), v.end(), x), x);
        };
        insert_sorted(adj_[a], b);
        insert_sorted(adj_[b], a);
    }
}

void HybridTopoGraph::remove_edge(NodeId a, NodeId b) {
    auto key = edge_key(a, b);
    if (!edges_.erase(key)) return;
    auto drop = [](std::vector<NodeId>& v, NodeId x) {
        v.erase(std::remove(v.begin(), v.end(), x), v.end());
    };
    drop(adj_[a], b);
    drop(adj_[b], a);
}

bool HybridTopoGraph::has_edge(NodeId a, NodeId b) const {
    return edges_.count(edge_key(a, b)) != 0;
}

const TopoEdge& HybridTopoGraph::edge(NodeId a, NodeId b) const {
    return edges_.at(edge_key(a, b));
}

const std::vector<NodeId>& HybridTopoGraph::neighbors(NodeId id) const {
    auto it = adj_.find(id);
    return it == adj_.end() ? empty_neighbors() : it->second;
}

std::optional<PathResult> HybridTopoGraph::shortest_path(NodeId src, NodeId dst) const {
    if (!has_node(src) || !has_node(dst)) throw std::invalid_argument("unknown endpoint");
    const double inf = std::numeric_limits<double>::infinity();
    std::map<NodeId, double> d;
    std::map<NodeId, NodeId> pred;
    std::map<NodeId, bool> done;
    using Entry = std::tuple<double, NodeId, NodeId>;  // (dist, pred, node)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    d[src] = 0.0;
    pred[src] = kNoNode;
    heap.emplace(0.0, kNoNode, src);
    while (!heap.empty()) {
        auto [du, pu, u] = heap.top();
        heap.pop();
        if (done.count(u) || du != d[u] || pu != pred[u]) continue;
        done[u] = true;
        if (u == dst) break;
        for (NodeId v : neighbors(u)) {
            if (done.count(v)) continue;
            const double cand = du + edge(u, v).length;
            auto it = d.find(v);
            const double cur = it == d.end() ? inf : it->second;
            if (cand < cur || (cand == cur && u < pred[v])) {
                d[v] = cand;
                pred[v] = u;
                heap.emplace(cand, u, v);
            }
        }
    }
    if (!done.count(dst)) return std::nullopt;
    PathResult res;
    res.distance = d[dst];
    for (NodeId v = dst; pred[v] != kNoNode; v = pred[v])
        res.edges.emplace_back(pred[v], v);
    std::reverse(res.edges.begin(), res.edges.end());
    return res;
}

std::map<NodeId, double> HybridTopoGraph::distances_from(NodeId src) const {
    if (!has_node(src)) throw std::invalid_argument("unknown source");
    std::map<NodeId, double> d;
    std::map<NodeId, bool> done;
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    d[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (done.count(u) || du != d[u]) continue;
        done[u] = true;
        for (NodeId v : neighbors(u)) {
            if (done.count(v)) continue;
            const double cand = du + edge(u, v).length;
            auto it = d.find(v);
            if (it == d.end() || cand < it->second) {
                d[v] = cand;
                heap.emplace(cand, v);
            }
        }
    }
    return d;
}

std::string HybridTopoGraph::to_text(const std::map<NodeId, int>* labels) const {
    std::ostringstream out;
    char buf[160];
    for (const auto& [id, n] : nodes_) {
        const char* kind = n.kind == NodeKind::GV ? "gv"
                           : n.kind == NodeKind::Frontier ? "frontier"
                                                          : "coverage";
        std::snprintf(buf, sizeof(buf), "N %lld %s %.17g %.17g",
                      static_cast<long long>(id), kind, n.pos.x, n.pos.y);
        out << buf;
        if (labels) {
            auto it = labels->find(id);
            out << ' ' << (it == labels->end() ? -1 : it->second);
        }
        out << '\n';
    }
    for (const auto& [key, e] : edges_) {
        std::snprintf(buf, sizeof(buf), "E %lld %lld %.17g %s",
                      static_cast<long long>(e.a), static_cast<long long>(e.b),
                      e.length, e.certainty == EdgeCertainty::Deterministic ? "det" : "unc");
        out << buf << '\n';
    }
    return out.str();
}

HybridTopoGraph HybridTopoGraph::from_text(const std::string& text) {
    HybridTopoGraph g;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error("graph text line " + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "N") {
            long long id;
            std::string kind;
            double x, y;
            if (!(ls >> id >> kind >> x >> y)) fail("bad node line");
            TopoNode n;
            n.id = id;
            n.pos = {x, y};
            if (kind == "gv")
                n.kind = NodeKind::GV;
            else if (kind == "frontier")
                n.kind = NodeKind::Frontier;
            else if (kind == "coverage")
                n.kind = NodeKind::Coverage;
            else
                fail("bad node kind '" + kind + "'");
            if (g.has_node(n.id)) fail("duplicate node id");
            g.add_node(n);
        } else if (tag == "E") {
            long long a, b;
            double len;
            std::string cert;
            if (!(ls >> a >> b >> len >> cert)) fail("bad edge line");
            if (!g.has_node(a) || !g.has_node(b)) fail("edge references unknown node");
            if (a == b) fail("self loop");
            EdgeCertainty c = EdgeCertainty::Uncertain;
            if (cert == "det")
                c = EdgeCertainty::Deterministic;
            else if (cert != "unc")
                fail("bad certainty '" + cert + "'");
            const double euclid = dist(g.node(a).pos, g.node(b).pos);
            if (std::abs(len - euclid) > 1e-6 * std::max(1.0, euclid))
                fail("edge length disagrees with endpoint positions");
            g.add_edge(a, b, c);
        } else {
            fail("unknown directive '" + tag + "'");
        }
    }
    return g;
}

bool HybridTopoGraph::equals(const HybridTopoGraph& o) const {
    if (nodes_.size() != o.nodes_.size() || edges_.size() != o.edges_.size()) return false;
    for (const auto& [id, n] : nodes_) {
        auto it = o.nodes_.find(id);
        if (it == o.nodes_.end()) return false;
        const TopoNode& m = it->second;
        if (n.kind != m.kind || !(n.pos == m.pos) || n.dual_of != m.dual_of) return false;
    }
    for (const auto& [key, e] : edges_) {
        auto it = o.edges_.find(key);
        if (it == o.edges_.end()) return false;
        if (e.length != it->second.length || e.certainty != it->second.certainty) return false;
    }
    return true;
}

namespace {

// Union-find keyed by node id; the representative is always the smallest id
// of its cluster, making merge results independent of union order.
struct MinUnionFind {
    std::map<NodeId, NodeId> parent;

    NodeId find(NodeId x) {
        NodeId r = x;
        while (parent[r] != r) r = parent[r];
        while (parent[x] != r) {
            NodeId nxt = parent[x];
            parent[x] = r;
            x = nxt;
        }
        return r;
    }
    void add(NodeId x) {
        if (!parent.count(x)) parent[x] = x;
    }
    void unite(NodeId a, NodeId b) {
        NodeId ra = find(a), rb = find(b);
        if (ra == rb) return;
        if (ra < rb)
            parent[rb] = ra;
        else
            parent[ra] = rb;
    }
};

}  // namespace

HybridTopoGraph merge_graphs(const HybridTopoGraph& mine,
                             const std::vector<const HybridTopoGraph*>& theirs,
                             double merge_radius) {
    if (theirs.empty()) return mine;

    // Union of node and edge sets keyed by global id.
    std::map<NodeId, TopoNode> all_nodes = mine.nodes();
    std::map<std::pair<NodeId, NodeId>, TopoEdge> all_edges = mine.edges();
    for (const HybridTopoGraph* g : theirs) {
        for (const auto& [id, n] : g->nodes()) all_nodes.emplace(id, n);
        for (const auto& [key, e] : g->edges()) {
            auto it = all_edges.find(key);
            if (it == all_edges.end())
                all_edges.emplace(key, e);
            else if (e.certainty == EdgeCertainty::Deterministic)
                it->second.certainty = EdgeCertainty::Deterministic;
        }
    }

    MinUnionFind uf;
    for (const auto& [id, n] : all_nodes) {
        (void)n;
        uf.add(id);
    }
    // Dedup pass over cross-robot pairs only: merging a robot's own nearby
    // nodes would make merge(m, [m]) != m.
    for (auto it = all_nodes.begin(); it != all_nodes.end(); ++it) {
        auto jt = it;
        for (++jt; jt != all_nodes.end(); ++jt) {
            const TopoNode& a = it->second;
            const TopoNode& b = jt->second;
            if (node_robot(a.id) == node_robot(b.id)) continue;
            const bool a_gv = a.kind == NodeKind::GV;
            const bool b_gv = b.kind == NodeKind::GV;
            if (a_gv != b_gv) continue;
            if (a_gv) {
                if (a.pos == b.pos) uf.unite(a.id, b.id);
            } else if (dist(a.pos, b.pos) <= merge_radius) {
                uf.unite(a.id, b.id);
            }
        }
    }

    HybridTopoGraph out;
    for (const auto& [id, n] : all_nodes)
        if (uf.find(id) == id) out.add_node(n);
    for (const auto& [key, e] : all_edges) {
        (void)key;
        const NodeId ra = uf.find(e.a);
        const NodeId rb = uf.find(e.b);
        if (ra == rb) continue;
        EdgeCertainty c = e.certainty;
        if (out.has_edge(ra, rb) &&
            out.edge(ra, rb).certainty == EdgeCertainty::Deterministic)
            c = EdgeCertainty::Deterministic;
        out.add_edge(ra, rb, c);  // recomputes length; forces unc on non-GV ends
    }
    return out;
}

}  // namespace explore
