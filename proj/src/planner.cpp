#include "explore/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace explore {

namespace {

constexpr double kBig = 1e17;

double path_length(const std::vector<CellIndex>& path, double res) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const bool diag = path[i].x != path[i - 1].x && path[i].y != path[i - 1].y;
        len += diag ? res * std::sqrt(2.0) : res;
    }
    return len;
}

}  // namespace

std::optional<std::vector<CellIndex>> grid_astar(const OccupancyGrid& g,
                                                 const std::vector<std::uint8_t>& blocked,
                                                 CellIndex start, CellIndex goal) {
    if (!g.in_bounds(start) || !g.in_bounds(goal)) return std::nullopt;
    const int w = g.width;
    auto id = [&](CellIndex c) { return c.y * w + c.x; };
    auto passable = [&](int idx) {
        // Start and goal are exempt so a robot pressed against the inflation
        // boundary can still plan out of / into the spot.
        return !blocked[idx] || idx == id(start) || idx == id(goal);
    };
    if (g.at(goal) == Cell::Occupied) return std::nullopt;

    const double res = g.resolution;
    const double diag = res * std::sqrt(2.0);
    auto heuristic = [&](CellIndex c) {
        const double dx = std::abs(c.x - goal.x), dy = std::abs(c.y - goal.y);
        return res * std::abs(dx - dy) + diag * std::min(dx, dy);
    };

    std::vector<double> gscore(g.cells.size(), std::numeric_limits<double>::infinity());
    std::vector<int> came(g.cells.size(), -1);
    std::vector<std::uint8_t> closed(g.cells.size(), 0);
    using Entry = std::tuple<double, double, int>;  // (f, g, cell)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    gscore[id(start)] = 0.0;
    open.emplace(heuristic(start), 0.0, id(start));

    static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!open.empty()) {
        auto [f, gc, idx] = open.top();
        open.pop();
        (void)f;
        if (closed[idx] || gc != gscore[idx]) continue;
        closed[idx] = 1;
        if (idx == id(goal)) break;
        const CellIndex c{idx % w, idx / w};
        for (int k = 0; k < 8; ++k) {
            const int nx = c.x + dx[k], ny = c.y + dy[k];
            if (!g.in_bounds(nx, ny)) continue;
            const int nidx = ny * w + nx;
            if (closed[nidx] || !passable(nidx)) continue;
            if (k >= 4) {  // no corner cutting on diagonals
                if (!passable(c.y * w + nx) || !passable(ny * w + c.x)) continue;
            }
            const double ng = gc + (k >= 4 ? diag : res);
            if (ng < gscore[nidx]) {
                gscore[nidx] = ng;
                came[nidx] = idx;
                open.emplace(ng + heuristic({nx, ny}), ng, nidx);
            }
        }
    }
    if (!closed[id(goal)]) return std::nullopt;
    std::vector<CellIndex> path;
    for (int cur = id(goal); cur != -1; cur = came[cur])
        path.push_back({cur % w, cur / w});
    std::reverse(path.begin(), path.end());
    return path;
}

std::optional<std::vector<CellIndex>> grid_astar_near(
    const OccupancyGrid& g, const std::vector<std::uint8_t>& blocked, CellIndex start,
    CellIndex goal, double slack) {
    if (auto direct = grid_astar(g, blocked, start, goal)) return direct;
    if (!g.in_bounds(goal)) return std::nullopt;
    const int r = static_cast<int>(std::ceil(slack / g.resolution));
    std::vector<std::tuple<int, int, int>> near;  // (dist2, y, x)
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const int nx = goal.x + dx, ny = goal.y + dy;
            if ((dx == 0 && dy == 0) || !g.in_bounds(nx, ny)) continue;
            const double d = std::sqrt(double(dx * dx + dy * dy)) * g.resolution;
            if (d > slack) continue;
            if (blocked[ny * g.width + nx] || g.at(nx, ny) == Cell::Occupied) continue;
            near.emplace_back(dx * dx + dy * dy, ny, nx);
        }
    std::sort(near.begin(), near.end());
    int tries = 0;
    for (const auto& [d2, ny, nx] : near) {
        (void)d2;
        if (auto path = grid_astar(g, blocked, start, {nx, ny})) return path;
        if (++tries >= 24) break;
    }
    return std::nullopt;
}

AtspSolution solve_atsp_exact(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    AtspSolution sol;
    if (n <= 1) return sol;
    const int m = n - 1;  // nodes 1..n-1 mapped to bits 0..m-1
    const int full = (1 << m) - 1;
    std::vector<std::vector<double>> dp(full + 1,
                                        std::vector<double>(m, std::numeric_limits<double>::infinity()));
    std::vector<std::vector<int>> par(full + 1, std::vector<int>(m, -1));
    for (int j = 0; j < m; ++j) dp[1 << j][j] = cost[0][j + 1];
    for (int mask = 1; mask <= full; ++mask)
        for (int j = 0; j < m; ++j) {
            if (!(mask & (1 << j))) continue;
            const double base = dp[mask][j];
            if (!std::isfinite(base)) continue;
            for (int k = 0; k < m; ++k) {
                if (mask & (1 << k)) continue;
                const int nmask = mask | (1 << k);
                const double cand = base + cost[j + 1][k + 1];
                if (cand < dp[nmask][k]) {
                    dp[nmask][k] = cand;
                    par[nmask][k] = j;
                }
            }
        }
    int best = -1;
    double best_len = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j)
        if (dp[full][j] < best_len) {
            best_len = dp[full][j];
            best = j;
        }
    sol.length = best_len;
    int mask = full, j = best;
    std::vector<int> rev;
    while (j != -1) {
        rev.push_back(j + 1);
        const int pj = par[mask][j];
        mask ^= 1 << j;
        j = pj;
    }
    sol.order.assign(rev.rbegin(), rev.rend());
    return sol;
}

namespace {

double tour_len(const std::vector<std::vector<double>>& cost, const std::vector<int>& order) {
    double len = 0.0;
    int prev = 0;
    for (int v : order) {
        len += cost[prev][v];
        prev = v;
    }
    return len;
}

}  // namespace

AtspSolution solve_atsp_heuristic(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    AtspSolution best;
    if (n <= 1) return best;
    best.length = std::numeric_limits<double>::infinity();

    auto improve = [&](std::vector<int> order) {
        double len = tour_len(cost, order);
        bool better = true;
        while (better) {
            better = false;
            // 2-opt: reverse a segment; asymmetric costs need full recompute.
            for (std::size_t i = 0; i < order.size() && !better; ++i)
                for (std::size_t j = i + 1; j < order.size() && !better; ++j) {
                    std::vector<int> cand = order;
                    std::reverse(cand.begin() + i, cand.begin() + j + 1);
                    const double cl = tour_len(cost, cand);
                    if (cl < len - 1e-12) {
                        order = std::move(cand);
                        len = cl;
                        better = true;
                    }
                }
            // Or-opt: relocate short segments.
            for (std::size_t seg = 1; seg <= 3 && !better; ++seg)
                for (std::size_t i = 0; i + seg <= order.size() && !better; ++i)
                    for (std::size_t at = 0; at + seg <= order.size() && !better; ++at) {
                        if (at == i) continue;
                        std::vector<int> cand;
                        cand.reserve(order.size());
                        for (std::size_t k = 0; k < order.size(); ++k)
                            if (k < i || k >= i + seg) cand.push_back(order[k]);
                        cand.insert(cand.begin() + at, order.begin() + i,
                                    order.begin() + i + seg);
                        if (cand == order) continue;
                        const double cl = tour_len(cost, cand);
                        if (cl < len - 1e-12) {
                            order = std::move(cand);
                            len = cl;
                            better = true;
                        }
                    }
        }
        if (len < best.length) {
            best.length = len;
            best.order = order;
        }
    };

    // Nearest-neighbor greedy from each possible first stop.
    for (int first = 1; first < n; ++first) {
        std::vector<int> order{first};
        std::vector<char> used(n, 0);
        used[first] = 1;
        int cur = first;
        for (int step = 2; step < n; ++step) {
            int pick = -1;
            double pd = std::numeric_limits<double>::infinity();
            for (int v = 1; v < n; ++v)
                if (!used[v] && cost[cur][v] < pd) {
                    pd = cost[cur][v];
                    pick = v;
                }
            used[pick] = 1;
            order.push_back(pick);
            cur = pick;
        }
        improve(std::move(order));
    }
    return best;
}

AtspSolution solve_atsp(const std::vector<std::vector<double>>& cost) {
    return cost.size() <= 12 ? solve_atsp_exact(cost) : solve_atsp_heuristic(cost);
}

namespace {

// Shared per-cycle machinery: entry node, entry path, graph distances.
struct CostOracle {
    const PlanInput& in;
    NodeId entry = kNoNode;
    std::optional<double> entry_len;
    std::map<NodeId, double> graph_dist;

    explicit CostOracle(const PlanInput& input) : in(input) {
        const auto& nodes = in.graph->nodes();
        double bd = std::numeric_limits<double>::infinity();
        for (const auto& [id, n] : nodes) {
            const double d = dist(n.pos, in.pose);
            if (d < bd) {
                bd = d;
                entry = id;
            }
        }
        if (entry == kNoNode) return;
        auto path = grid_astar_near(*in.belief, *in.blocked, in.belief->cell_of(in.pose),
                                    in.belief->cell_of(in.graph->node(entry).pos),
                                    in.params.approach_slack);
        if (path) entry_len = path_length(*path, in.belief->resolution);
        graph_dist = in.graph->distances_from(entry);
    }

    std::optional<double> cost(NodeId target) const {
        if (entry != kNoNode && entry_len) {
            auto it = graph_dist.find(target);
            if (it != graph_dist.end()) return *entry_len + it->second;
        }
        auto path = grid_astar_near(*in.belief, *in.blocked, in.belief->cell_of(in.pose),
                                    in.belief->cell_of(in.graph->node(target).pos),
                                    in.params.approach_slack);
        if (path) return path_length(*path, in.belief->resolution);
        return std::nullopt;
    }
};

// Unknown cells a sensor standing at `from` could actually reveal: rays stop
// at known-Occupied cells, so work walled off from the node contributes
// nothing. Counting the plain disc instead lets gain leak through walls and
// leaves robots parked on targets they can never consume.
int visible_unknown_count(const OccupancyGrid& belief, Vec2 from, double range,
                          int n_rays) {
    std::set<int> seen;
    for (int k = 0; k < n_rays; ++k) {
        const double bearing = 2.0 * M_PI * k / n_rays;
        const Vec2 end = from + Vec2{range * std::cos(bearing), range * std::sin(bearing)};
        traverse_segment(belief, from, end, [&](CellIndex c, double) {
            if (belief.at(c) == Cell::Occupied) return false;
            if (belief.at(c) == Cell::Unknown) seen.insert(c.y * belief.width + c.x);
            return true;
        });
    }
    return static_cast<int>(seen.size());
}

std::vector<Vec2> path_to_waypoints(const std::vector<CellIndex>& path,
                                    const OccupancyGrid& g, Vec2 final_pos) {
    std::vector<Vec2> out;
    // Keep only direction changes; the robot's own cell is skipped.
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (i + 1 < path.size()) {
            const int dx1 = path[i].x - path[i - 1].x, dy1 = path[i].y - path[i - 1].y;
            const int dx2 = path[i + 1].x - path[i].x, dy2 = path[i + 1].y - path[i].y;
            if (dx1 == dx2 && dy1 == dy2) continue;
        }
        out.push_back(g.center_of(path[i]));
    }
    // Finish on the exact goal point only when the path actually reached its
    // cell; an approach path stops short on purpose.
    if (!path.empty() && path.back() == g.cell_of(final_pos)) {
        if (out.empty() || !(out.back() == final_pos)) out.push_back(final_pos);
    }
    return out;
}

}  // namespace

std::optional<double> dual_layer_cost(const PlanInput& in, NodeId target) {
    CostOracle oracle(in);
    return oracle.cost(target);
}

PlanResult plan_cycle(const PlanInput& in) {
    PlanResult out;
    const HybridTopoGraph& g = *in.graph;
    const PartitionResult& res = *in.partition;
    const OccupancyGrid& belief = *in.belief;

    auto is_target = [&](NodeId v) {
        for (NodeId nb : g.neighbors(v))
            if (g.edge(v, nb).certainty == EdgeCertainty::Uncertain) return true;
        return false;
    };

    std::vector<NodeId> candidates;
    for (NodeId v : res.members[in.center_idx])
        if (is_target(v)) candidates.push_back(v);

    CostOracle oracle(in);
    std::vector<NodeId> targets;
    std::vector<double> gains, costs;
    if (!candidates.empty()) {
        for (NodeId v : candidates) {
            auto c = oracle.cost(v);
            if (!c) continue;  // unreachable this cycle
            const int unknown = visible_unknown_count(belief, g.node(v).pos,
                                                      in.params.sensor_range,
                                                      in.params.n_rays);
            if (unknown == 0) continue;  // nothing to reveal from there
            targets.push_back(v);
            gains.push_back(static_cast<double>(unknown));
            costs.push_back(*c);
        }
    }

    if (targets.empty()) {
        // Nothing of my own: steer toward the closest work owned by others,
        // stopping at my side of the border. Orphan nodes (cut off from every
        // center, so absent from the labeling) count as anyone's work — and
        // for them the border stop is skipped, since no border exists.
        out.used_fallback = true;
        auto worth_visiting = [&](NodeId v) {
            return is_target(v) && visible_unknown_count(belief, g.node(v).pos,
                                                         in.params.sensor_range,
                                                         in.params.n_rays) > 0;
        };
        std::vector<NodeId> other;
        for (const auto& [v, lab] : res.label)
            if (lab != in.center_idx && worth_visiting(v)) other.push_back(v);
        std::set<NodeId> orphan(res.orphans.begin(), res.orphans.end());
        for (NodeId v : res.orphans)
            if (worth_visiting(v)) other.push_back(v);
        NodeId dest = kNoNode;
        if (!other.empty()) {
            NodeId tstar = kNoNode;
            double bd = std::numeric_limits<double>::infinity();
            for (NodeId v : other) {
                const double d = dist(g.node(v).pos, in.pose);
                if (d < bd) {
                    bd = d;
                    tstar = v;
                }
            }
            dest = tstar;
            if (!orphan.count(tstar) && !res.members[in.center_idx].empty()) {
                bd = std::numeric_limits<double>::infinity();
                for (NodeId v : res.members[in.center_idx]) {
                    const double d = dist(g.node(v).pos, g.node(tstar).pos);
                    if (d < bd) {
                        bd = d;
                        dest = v;
                    }
                }
            }
            auto path = grid_astar_near(belief, *in.blocked, belief.cell_of(in.pose),
                                        belief.cell_of(g.node(dest).pos),
                                        in.params.approach_slack);
            if (path) {
                out.waypoints = path_to_waypoints(*path, belief, g.node(dest).pos);
                return out;
            }
        }
        // Degenerate bootstrap: no graph targets at all; head to the nearest
        // frontier cell so coverage can still complete.
        std::vector<std::pair<double, CellIndex>> fr;
        for (int y = 0; y < belief.height; ++y)
            for (int x = 0; x < belief.width; ++x) {
                if (belief.at(x, y) != Cell::Free) continue;
                static const int ddx[4] = {1, -1, 0, 0};
                static const int ddy[4] = {0, 0, 1, -1};
                bool frontier = false;
                for (int k = 0; k < 4 && !frontier; ++k) {
                    const int nx = x + ddx[k], ny = y + ddy[k];
                    frontier = belief.in_bounds(nx, ny) && belief.at(nx, ny) == Cell::Unknown;
                }
                if (frontier)
                    fr.emplace_back(dist(belief.center_of({x, y}), in.pose), CellIndex{x, y});
            }
        if (fr.empty()) {
            out.no_targets_anywhere = other.empty();
            return out;
        }
        std::sort(fr.begin(), fr.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return std::make_pair(a.second.y, a.second.x) <
                   std::make_pair(b.second.y, b.second.x);
        });
        for (std::size_t k = 0; k < fr.size() && k < 10; ++k) {
            auto path = grid_astar_near(belief, *in.blocked, belief.cell_of(in.pose),
                                        fr[k].second, in.params.approach_slack);
            if (path) {
                out.waypoints =
                    path_to_waypoints(*path, belief, belief.center_of(fr[k].second));
                return out;
            }
        }
        return out;
    }

    // Min-max normalization; a degenerate axis contributes its best value.
    const auto norm = [](const std::vector<double>& v, bool invert) {
        const double mn = *std::min_element(v.begin(), v.end());
        const double mx = *std::max_element(v.begin(), v.end());
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] = (mx - mn < 1e-12) ? (invert ? 0.0 : 1.0) : (v[i] - mn) / (mx - mn);
        return out;
    };
    const std::vector<double> gain_n = norm(gains, false);
    const std::vector<double> cost_n = norm(costs, true);

    auto self_flag = [&](NodeId v) {
        if (!in.stable_nodes || !in.stable_nodes->count(v)) return 0.0;
        // Require >2 hops of graph distance from any differently-owned node.
        std::map<NodeId, int> hops{{v, 0}};
        std::deque<NodeId> q{v};
        while (!q.empty()) {
            const NodeId u = q.front();
            q.pop_front();
            if (hops[u] >= 2) continue;
            for (NodeId nb : g.neighbors(u)) {
                if (hops.count(nb)) continue;
                auto lab = res.label.find(nb);
                if (lab != res.label.end() && lab->second != in.center_idx) return 0.0;
                hops[nb] = hops[u] + 1;
                q.push_back(nb);
            }
        }
        return 1.0;
    };

    std::vector<int> idx(targets.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::vector<double> pri(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
        pri[i] = priority_value(gain_n[i], cost_n[i], self_flag(targets[i]),
                                in.params.beta_c, in.params.beta_s);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (pri[a] != pri[b]) return pri[a] > pri[b];
        return targets[a] < targets[b];
    });
    const int take = std::min<int>(in.params.pi_max, static_cast<int>(idx.size()));
    idx.resize(take);
    for (int i : idx) out.targets.push_back(targets[i]);

    // Tour matrix: pose -> target uses the hybrid cost, target -> target the
    // graph metric with a grid fallback.
    const int m = take;
    std::vector<std::vector<double>> mat(m + 1, std::vector<double>(m + 1, 0.0));
    std::vector<std::map<NodeId, double>> from_t(m);
    for (int i = 0; i < m; ++i) {
        mat[0][i + 1] = costs[idx[i]];
        from_t[i] = g.distances_from(out.targets[i]);
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            auto it = from_t[i].find(out.targets[j]);
            if (it != from_t[i].end()) {
                mat[i + 1][j + 1] = it->second;
                continue;
            }
            auto path = grid_astar(belief, *in.blocked,
                                   belief.cell_of(g.node(out.targets[i]).pos),
                                   belief.cell_of(g.node(out.targets[j]).pos));
            mat[i + 1][j + 1] = path ? path_length(*path, belief.resolution) : kBig;
        }

    AtspSolution sol = solve_atsp(mat);
    int prev = 0;
    out.tour_length = 0.0;
    for (int v : sol.order) {
        out.tour.push_back(out.targets[v - 1]);
        if (mat[prev][v] < kBig) out.tour_length += mat[prev][v];
        prev = v;
    }

    const NodeId first = out.tour.empty() ? out.targets.front() : out.tour.front();
    auto path = grid_astar_near(belief, *in.blocked, belief.cell_of(in.pose),
                                belief.cell_of(g.node(first).pos),
                                in.params.approach_slack);
    if (path)
        out.waypoints = path_to_waypoints(*path, belief, g.node(first).pos);
    return out;
}

}  // namespace explore
