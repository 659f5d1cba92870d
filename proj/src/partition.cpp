#include "explore/partition.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace explore {

PartitionResult graph_voronoi(const HybridTopoGraph& g, const PowerPointSet& pp,
                              LoadMetric metric) {
    const int n = pp.size();
    if (n == 0) throw std::invalid_argument("no centers");
    for (const auto& c : pp.centers)
        if (!g.has_node(c.node)) throw std::invalid_argument("center not in graph");

    auto contrib = [&](const TopoEdge& e) {
        if (metric == LoadMetric::Online)
            return e.certainty == EdgeCertainty::Uncertain ? e.length : 0.0;
        return e.length;
    };

    std::map<NodeId, double> dist;
    std::map<NodeId, int> label;
    std::map<NodeId, NodeId> parent;
    std::vector<double> lambda(n, 0.0);

    // (distance, center index, node): the center index in the key makes
    // equal-distance contention resolve toward the smaller center.
    using Entry = std::tuple<double, int, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (int i = 0; i < n; ++i) {
        const NodeId c = pp.centers[i].node;
        if (label.count(c)) continue;  // duplicate center node: first index keeps it
        dist[c] = 0.0;
        label[c] = i;
        parent[c] = kNoNode;
        heap.emplace(0.0, i, c);
    }

    // No "settled" set: a node stolen by a closer weighted center must keep
    // relaying its new distance, or the steal wave stalls one hop in and the
    // final labels stop matching the membership condition.
    while (!heap.empty()) {
        auto [du, ci, u] = heap.top();
        heap.pop();
        if (du != dist[u] || ci != label[u]) continue;  // stale
        for (NodeId v : g.neighbors(u)) {
            const TopoEdge& e = g.edge(u, v);
            const double delta = du + e.length;
            auto it = label.find(v);
            if (it == label.end()) {
                dist[v] = delta;
                label[v] = ci;
                parent[v] = u;
                lambda[ci] += contrib(e);
                heap.emplace(delta, ci, v);
            } else {
                const int lv = it->second;
                if (parent[v] == kNoNode) continue;  // centers stay their own
                if (delta - pp.weight(ci, lv) < dist[v]) {
                    lambda[lv] -= contrib(g.edge(parent[v], v));
                    lambda[ci] += contrib(e);
                    dist[v] = delta;
                    label[v] = ci;
                    parent[v] = u;
                    heap.emplace(delta, ci, v);
                }
            }
        }
    }

    PartitionResult res;
    res.centers = pp.centers;
    res.metric = metric;
    res.members.resize(n);
    res.tree.resize(n);
    res.load.assign(n, 0.0);
    res.load_incremental = lambda;
    for (const auto& [id, lab] : label) {
        res.members[lab].push_back(id);
        const NodeId p = parent.at(id);
        if (p != kNoNode) {
            const TopoEdge& e = g.edge(p, id);
            res.tree[lab].push_back({p, id, e.length, contrib(e)});
        }
    }
    // label map iterates in ascending node id, so trees are already in
    // canonical child order; loads are the canonical ordered sums.
    for (int i = 0; i < n; ++i)
        for (const TreeEdgeRec& r : res.tree[i]) res.load[i] += r.contrib;
    for (const auto& [id, node] : g.nodes()) {
        (void)node;
        if (!label.count(id)) res.orphans.push_back(id);
    }
    res.label = std::move(label);
    res.dist = std::move(dist);
    res.parent = std::move(parent);
    return res;
}

double load_metric(const PartitionResult& res, int center_idx) {
    if (center_idx < 0 || center_idx >= static_cast<int>(res.tree.size()))
        throw std::invalid_argument("bad center index");
    double sum = 0.0;
    for (const TreeEdgeRec& r : res.tree[center_idx]) sum += r.contrib;
    return sum;
}

bool leaf_removal_decreases(const PartitionResult& res, int center_idx, NodeId leaf) {
    if (center_idx < 0 || center_idx >= static_cast<int>(res.tree.size()))
        throw std::invalid_argument("bad center index");
    auto lab = res.label.find(leaf);
    if (lab == res.label.end() || lab->second != center_idx)
        throw std::invalid_argument("leaf not in this region");
    if (res.parent.at(leaf) == kNoNode)
        throw std::invalid_argument("center is not a leaf");
    for (const TreeEdgeRec& r : res.tree[center_idx])
        if (r.parent == leaf) throw std::invalid_argument("node has tree children");
    double without = 0.0;
    for (const TreeEdgeRec& r : res.tree[center_idx])
        if (r.child != leaf) without += r.contrib;
    return load_metric(res, center_idx) >= without;
}

TourBound tour_upper_bound(const PartitionResult& res, int center_idx) {
    if (center_idx < 0 || center_idx >= static_cast<int>(res.tree.size()))
        throw std::invalid_argument("bad center index");
    TourBound out;
    const NodeId root = res.centers[center_idx].node;
    if (res.members[center_idx].empty()) return out;

    std::map<NodeId, std::vector<std::pair<NodeId, double>>> children;
    std::map<NodeId, double> up_len;  // length of the edge to the parent
    for (const TreeEdgeRec& r : res.tree[center_idx]) {
        children[r.parent].emplace_back(r.child, r.length);
        up_len[r.child] = r.length;
    }
    std::map<NodeId, int> depth;
    std::map<NodeId, double> to_root;
    depth[root] = 0;
    to_root[root] = 0.0;

    // Preorder with children in ascending id; depths fill in on the way.
    std::vector<NodeId> stack{root};
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        out.order.push_back(u);
        auto it = children.find(u);
        if (it == children.end()) continue;
        for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit) {
            depth[rit->first] = depth[u] + 1;
            to_root[rit->first] = to_root[u] + rit->second;
            stack.push_back(rit->first);
        }
    }

    auto tree_dist = [&](NodeId a, NodeId b) {
        NodeId x = a, y = b;
        while (depth[x] > depth[y]) x = res.parent.at(x);
        while (depth[y] > depth[x]) y = res.parent.at(y);
        while (x != y) {
            x = res.parent.at(x);
            y = res.parent.at(y);
        }
        return to_root[a] + to_root[b] - 2.0 * to_root[x];
    };
    for (std::size_t k = 1; k < out.order.size(); ++k)
        out.length += tree_dist(out.order[k - 1], out.order[k]);
    return out;
}

}  // namespace explore
