#include "explore/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace explore {

namespace {

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

PowerPointSet weight_step(const std::vector<double>& loads,
                          const std::vector<std::pair<int, int>>& comm_pairs,
                          PowerPointSet pp, const BalanceConfig& cfg,
                          const std::vector<double>& center_dist) {
    const int n = pp.size();
    if (static_cast<int>(loads.size()) != n) throw std::invalid_argument("loads size");
    for (auto [i, j] : comm_pairs) {
        if (i == j || i < 0 || j < 0 || i >= n || j >= n)
            throw std::invalid_argument("bad comm pair");
        const double gap = loads[j] - loads[i];
        if (std::abs(gap) <= cfg.b_lambda) continue;
        double w = pp.weight(i, j) + cfg.gamma * sign(gap);
        const double d = center_dist[i * n + j];
        if (std::isfinite(d)) {
            const double cap = std::max(0.0, d - 1e-6);
            w = std::clamp(w, -cap, cap);
        }
        pp.set_weight(i, j, w);
    }
    return pp;
}

BalanceOutcome balance(const HybridTopoGraph& g, PowerPointSet pp,
                       const BalanceConfig& cfg, LoadMetric metric,
                       const std::vector<std::pair<int, int>>& comm_pairs,
                       const std::vector<double>& load_bias) {
    const int n = pp.size();
    if (n == 0) throw std::invalid_argument("no centers");
    std::vector<double> bias = load_bias;
    bias.resize(n, 0.0);

    // Center-to-center distances drive the feasibility clamp and never change
    // inside the loop (weights do not affect plain distance).
    std::vector<double> center_dist(n * n,
                                    std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) {
        auto d = g.distances_from(pp.centers[i].node);
        for (int j = 0; j < n; ++j) {
            auto it = d.find(pp.centers[j].node);
            if (it != d.end()) center_dist[i * n + j] = it->second;
        }
    }

    BalanceOutcome out;
    for (int k = 0;; ++k) {
        PartitionResult res = graph_voronoi(g, pp, metric);
        std::vector<double> loads(n);
        for (int i = 0; i < n; ++i) loads[i] = res.load[i] + bias[i];

        double mx = loads[0], mn = loads[0];
        for (double l : loads) {
            mx = std::max(mx, l);
            mn = std::min(mn, l);
        }
        out.trace.push_back({mx, mn, mx - mn});
        out.load_history.push_back(loads);
        if (cfg.record_labels) out.label_history.push_back(res.label);
        if (k == 0) out.initial_label = res.label;

        bool exceeded = false;
        for (auto [i, j] : comm_pairs)
            if (std::abs(loads[j] - loads[i]) > cfg.b_lambda) {
                exceeded = true;
                break;
            }
        if (!exceeded || k == cfg.max_iters) {
            out.converged = !exceeded;
            out.iterations = k;
            out.partition = std::move(res);
            out.weights = std::move(pp);
            return out;
        }
        pp = weight_step(loads, comm_pairs, std::move(pp), cfg, center_dist);
    }
}

NodeId virtual_center(const HybridTopoGraph& g, const std::vector<NodeId>& my_region,
                      const std::vector<NodeId>& neighbor_centers, Vec2 robot_pos) {
    if (my_region.empty()) throw std::invalid_argument("empty region");
    for (NodeId v : my_region)
        if (!g.has_node(v)) throw std::invalid_argument("region node missing from graph");

    std::map<NodeId, double> score;
    for (NodeId v : my_region) score[v] = 0.0;
    for (NodeId c : neighbor_centers) {
        if (!g.has_node(c)) continue;
        auto d = g.distances_from(c);
        for (NodeId v : my_region) {
            auto it = d.find(v);
            if (it != d.end()) score[v] += it->second;
        }
    }

    NodeId best = kNoNode;
    double best_score = -1.0, best_euclid = 0.0;
    for (NodeId v : my_region) {
        const double s = score[v];
        const double e = dist(g.node(v).pos, robot_pos);
        if (best == kNoNode || s > best_score ||
            (s == best_score && (e < best_euclid || (e == best_euclid && v < best)))) {
            best = v;
            best_score = s;
            best_euclid = e;
        }
    }
    return best;
}

namespace {

// Single-source load of the members set with skip_node deleted from the
// graph: members that lose reachability drop out, surviving members
// contribute their parent edge like the normal load tree.
double load_without_node(const HybridTopoGraph& g, NodeId src,
                         const std::vector<NodeId>& members, NodeId skip_node,
                         LoadMetric metric) {
    auto contrib = [&](const TopoEdge& e) {
        if (metric == LoadMetric::Online)
            return e.certainty == EdgeCertainty::Uncertain ? e.length : 0.0;
        return e.length;
    };
    std::map<NodeId, double> dmap;
    std::map<NodeId, NodeId> pred;
    std::map<NodeId, bool> done;
    using Entry = std::tuple<double, NodeId, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dmap[src] = 0.0;
    pred[src] = kNoNode;
    heap.emplace(0.0, kNoNode, src);
    while (!heap.empty()) {
        auto [du, pu, u] = heap.top();
        heap.pop();
        if (done.count(u) || du != dmap[u] || pu != pred[u]) continue;
        done[u] = true;
        for (NodeId v : g.neighbors(u)) {
            if (v == skip_node || done.count(v)) continue;
            const double cand = du + g.edge(u, v).length;
            auto it = dmap.find(v);
            const double cur =
                it == dmap.end() ? std::numeric_limits<double>::infinity() : it->second;
            if (cand < cur || (cand == cur && u < pred[v])) {
                dmap[v] = cand;
                pred[v] = u;
                heap.emplace(cand, u, v);
            }
        }
    }
    double sum = 0.0;
    for (NodeId m : members) {
        if (m == skip_node || m == src) continue;
        auto it = pred.find(m);
        if (it == pred.end() || !done.count(m)) continue;
        sum += contrib(g.edge(it->second, m));
    }
    return sum;
}

}  // namespace

DualInsertResult insert_dual_nodes(const HybridTopoGraph& g, const PartitionResult& res,
                                   const DualInsertConfig& cfg, const FreeSpaceQuery& fs,
                                   const std::function<NodeId()>& alloc_id) {
    DualInsertResult out;
    out.graph = g;

    std::set<NodeId> have_dual;
    for (const auto& [id, n] : g.nodes())
        if (n.dual_of != kNoNode) have_dual.insert(n.dual_of);

    auto segment_free = [&](Vec2 a, Vec2 b) {
        const double len = dist(a, b);
        const int steps = std::max(1, static_cast<int>(std::ceil(len / fs.check_step)));
        for (int s = 0; s <= steps; ++s) {
            const double t = static_cast<double>(s) / steps;
            if (!fs.is_known_free(a + (b - a) * t)) return false;
        }
        return true;
    };

    const int n = static_cast<int>(res.centers.size());
    for (int i = 0; i < n; ++i) {
        const NodeId center = res.centers[i].node;
        const double lam = res.load[i];
        for (NodeId v : res.members[i]) {
            if (v == center || have_dual.count(v)) continue;
            const double lam_without =
                load_without_node(g, center, res.members[i], v, res.metric);
            if (std::abs(lam - lam_without) < cfg.load_threshold) continue;

            // Seed by node id so the sample is independent of scan order.
            Rng rng(cfg.seed ^ static_cast<std::uint64_t>(v));
            const Vec2 vp = g.node(v).pos;
            bool placed = false;
            for (int a = 0; a < cfg.attempts && !placed; ++a) {
                const double r = cfg.radius * std::sqrt(rng.next_double());
                const double th = 2.0 * M_PI * rng.next_double();
                const Vec2 p = vp + Vec2{r * std::cos(th), r * std::sin(th)};
                if (!fs.is_known_free(p)) continue;
                std::vector<NodeId> wired;
                for (NodeId nb : g.neighbors(v))
                    if (segment_free(p, out.graph.node(nb).pos)) wired.push_back(nb);
                if (wired.empty()) continue;
                TopoNode dual;
                dual.id = alloc_id();
                dual.kind = NodeKind::Coverage;
                dual.pos = p;
                dual.dual_of = v;
                out.graph.add_node(dual);
                for (NodeId nb : wired)
                    out.graph.add_edge(dual.id, nb, EdgeCertainty::Uncertain);
                out.added.push_back(dual);
                placed = true;
            }
            if (!placed) out.skipped.push_back(v);
        }
    }
    return out;
}

}  // namespace explore
