#include "explore/episode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace explore {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::NoWeight: return "noweight";
        case Variant::PosVor: return "posvor";
        case Variant::NoFB: return "nofb";
    }
    return "?";
}

std::optional<Variant> variant_from_name(std::string_view s) {
    if (s == "full") return Variant::Full;
    if (s == "noweight") return Variant::NoWeight;
    if (s == "posvor") return Variant::PosVor;
    if (s == "nofb") return Variant::NoFB;
    return std::nullopt;
}

namespace {

std::vector<CellIndex> disc_cells(double radius, double res) {
    const int r = static_cast<int>(std::ceil(radius / res));
    std::vector<CellIndex> out;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (std::sqrt(double(dx * dx + dy * dy)) * res <= radius + 1e-12)
                out.push_back({dx, dy});
    return out;
}

NodeId nearest_node(const HybridTopoGraph& g, Vec2 p, const std::set<NodeId>& skip) {
    NodeId best = kNoNode;
    double bd = std::numeric_limits<double>::infinity();
    for (const auto& [id, n] : g.nodes()) {
        if (skip.count(id)) continue;
        const double d = dist(n.pos, p);
        if (d < bd || (d == bd && id < best)) {
            bd = d;
            best = id;
        }
    }
    return best;
}

}  // namespace

EpisodeResult run_episode(const Scenario& sc, const SimParams& params, Variant variant) {
    SimParams p = params;
    if (sc.sensor_range) p.sensor_range = *sc.sensor_range;
    if (sc.comm_range) p.comm_range = *sc.comm_range;

    const OccupancyGrid& world = sc.world;
    const int n = static_cast<int>(sc.starts.size());
    const int w = world.width, h = world.height;
    const double res = world.resolution;
    const std::size_t ncells = world.cells.size();

    EpisodeResult out;
    out.trajectories.resize(n);
    out.robots.resize(n);

    std::vector<OccupancyGrid> beliefs(n, OccupancyGrid(w, h, res));
    std::vector<Mapper> mappers;
    std::vector<RobotState> st(n);
    std::vector<Rng> rngs;
    std::vector<std::vector<Vec2>> waypoints(n);
    std::vector<std::vector<std::uint8_t>> blocked(n, std::vector<std::uint8_t>(ncells, 0));
    std::vector<std::vector<std::uint8_t>> seen_occ(n, std::vector<std::uint8_t>(ncells, 0));
    std::vector<std::vector<std::uint8_t>> seen_known(n,
                                                      std::vector<std::uint8_t>(ncells, 0));
    std::vector<double> last_load(n, 0.0), remaining_tour(n, 0.0);
    std::vector<std::vector<NodeId>> last_members(n);
    std::vector<NodeId> last_center(n, kNoNode);
    std::vector<int> collision_count(n, 0);
    std::vector<char> idle(n, 0);
    std::vector<Vec2> prev_pos(n);
    std::vector<int> still_ticks(n, 0);
    std::vector<int> rescue_hold(n, 0);

    std::vector<CellIndex> seeds;
    for (int i = 0; i < n; ++i) {
        st[i].id = sc.starts[i].id;
        st[i].pos = sc.starts[i].pos;
        st[i].heading = sc.starts[i].heading;
        mappers.emplace_back(i, w, h, res, p.mapper);
        rngs.emplace_back(p.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
        seeds.push_back(world.cell_of(st[i].pos));
        prev_pos[i] = st[i].pos;
    }

    const std::vector<std::uint8_t> reach = reachable_free(world, seeds);
    const std::size_t total_reach  =
        static_cast<std::size_t>(std::count(reach.begin(), reach.end(), 1));
    std::vector<std::uint8_t> global_known(ncells, 0);
    std::size_t known_reach = 0;

    const auto safe_disc = disc_cells(p.safe_radius, res);
    auto stamp_blocked = [&](int i, CellIndex c) {
        for (const CellIndex& o : safe_disc) {
            const int nx = c.x + o.x, ny = c.y + o.y;
            if (world.in_bounds(nx, ny)) blocked[i][ny * w + nx] = 1;
        }
    };
    auto absorb_cells = [&](int i, const std::vector<CellIndex>& cells) {
        for (const CellIndex& c : cells) {
            const int ci = c.y * w + c.x;
            if (beliefs[i].cells[ci] == Cell::Occupied && !seen_occ[i][ci]) {
                seen_occ[i][ci] = 1;
                stamp_blocked(i, c);
            }
        }
    };
    auto absorb_full = [&](int i) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int ci = y * w + x;
                if (beliefs[i].cells[ci] == Cell::Occupied && !seen_occ[i][ci]) {
                    seen_occ[i][ci] = 1;
                    stamp_blocked(i, {x, y});
                }
            }
    };

    const int comm_every = std::max(1, static_cast<int>(std::lround(p.comm_period / p.dt)));
    const int replan_every =
        std::max(1, static_cast<int>(std::lround(p.replan_period / p.dt)));
    MotionParams mp;
    mp.v_max = p.v_max;
    mp.omega_max = p.omega_max;

    PlannerParams pp_plan;
    pp_plan.beta_c = p.beta_c;
    pp_plan.beta_s = p.beta_s;
    pp_plan.pi_max = p.pi_max;
    pp_plan.sensor_range = p.sensor_range;
    pp_plan.n_rays = p.n_rays;

    std::vector<HybridTopoGraph> fused(n);
    int cycle = 0;
    int trapped_streak = 0;
    double t = 0.0;
    const bool positional = variant == Variant::NoWeight || variant == Variant::PosVor;
    const bool weighted = variant != Variant::NoWeight;
    const bool feedback = variant == Variant::Full || variant == Variant::PosVor;

    auto log_event = [&](const std::string& line) { out.events.push_back(line); };

    for (std::uint64_t tick = 0;; ++tick) {
        t = static_cast<double>(tick) * p.dt;

        for (int i = 0; i < n; ++i) {
            std::vector<CellIndex> changed;
            sense(world, beliefs[i], st[i].pos, p.sensor_range, p.n_rays, &changed);
            absorb_cells(i, changed);
            for (const CellIndex& c : changed) {
                const int ci = c.y * w + c.x;
                if (!global_known[ci]) {
                    global_known[ci] = 1;
                    if (reach[ci]) ++known_reach;
                }
            }
        }
        out.coverage_curve.emplace_back(t, static_cast<double>(known_reach) * res * res);
        out.coverage = total_reach == 0
                           ? 1.0
                           : static_cast<double>(known_reach) / static_cast<double>(total_reach);

        if (out.coverage >= p.coverage_target) {
            out.outcome = Outcome::Success;
            out.exploration_time = t;
            break;
        }
        if (t >= p.max_time) {
            out.outcome = Outcome::Timeout;
            out.exploration_time = t;
            break;
        }

        CommGraph cg;
        if (tick % comm_every == 0) {
            std::vector<Vec2> pos(n);
            for (int i = 0; i < n; ++i) pos[i] = st[i].pos;
            cg = comm_graph(pos, p.comm_range, p.multi_hop);
            std::vector<const HybridTopoGraph*> own(n);
            for (int i = 0; i < n; ++i) own[i] = &mappers[i].own_graph();
            const FuseStats fs =
                exchange_and_fuse(cg, tick, beliefs, own, last_load, p.merge_radius, fused);
            out.comm.bytes_sent += fs.bytes_sent;
            out.comm.delivered += fs.delivered;
            out.comm.dropped += fs.dropped;
            for (int i = 0; i < n; ++i) absorb_full(i);
        }

        if (tick % replan_every == 0) {
            if (cg.n == 0) {
                std::vector<Vec2> pos(n);
                for (int i = 0; i < n; ++i) pos[i] = st[i].pos;
                cg = comm_graph(pos, p.comm_range, p.multi_hop);
            }
            for (const std::vector<int>& comp : cg.components()) {
                // Refresh each member's map layer from everything it now knows.
                for (int i : comp) {
                    std::vector<CellIndex> changed;
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x) {
                            const int ci = y * w + x;
                            if (!seen_known[i][ci] && beliefs[i].cells[ci] != Cell::Unknown) {
                                seen_known[i][ci] = 1;
                                changed.push_back({x, y});
                            }
                        }
                    mappers[i].update(beliefs[i], changed, st[i].pos, rngs[i]);
                }

                std::vector<const HybridTopoGraph*> others;
                for (std::size_t k = 1; k < comp.size(); ++k)
                    others.push_back(&mappers[comp[k]].own_graph());
                HybridTopoGraph g =
                    merge_graphs(mappers[comp[0]].own_graph(), others, p.merge_radius);

                // Drop doubles whose anchor node no longer exists anywhere.
                for (int i : comp) {
                    std::vector<NodeId> stale;
                    for (const auto& [id, nd] : mappers[i].own_graph().nodes())
                        if (nd.dual_of != kNoNode && !g.has_node(nd.dual_of))
                            stale.push_back(id);
                    for (NodeId id : stale) {
                        mappers[i].own_graph().remove_node(id);
                        if (g.has_node(id)) g.remove_node(id);
                    }
                }

                if (g.nodes().empty()) continue;

                const int m = static_cast<int>(comp.size());
                std::vector<PowerPointSet::Center> centers(m);
                std::set<NodeId> claimed;
                for (int k = 0; k < m; ++k) {
                    const int i = comp[k];
                    centers[k].robot = i;
                    NodeId c = kNoNode;
                    if (!positional && !last_members[i].empty()) {
                        std::vector<NodeId> region;
                        for (NodeId v : last_members[i])
                            if (g.has_node(v)) region.push_back(v);
                        if (!region.empty()) {
                            std::vector<NodeId> neigh;
                            for (int j : comp)
                                if (j != i && last_center[j] != kNoNode &&
                                    g.has_node(last_center[j]))
                                    neigh.push_back(last_center[j]);
                            c = virtual_center(g, region, neigh, st[i].pos);
                        }
                    }
                    if (c == kNoNode)
                        c = nearest_node(g, st[i].pos, positional ? std::set<NodeId>{} : claimed);
                    if (c == kNoNode) c = nearest_node(g, st[i].pos, {});
                    centers[k].node = c;
                    claimed.insert(c);
                }

                PowerPointSet pset(centers);
                BalanceConfig bc;
                bc.gamma = p.gamma;
                bc.b_lambda = p.b_lambda;
                bc.max_iters = p.max_iters;
                std::vector<std::pair<int, int>> pairs;
                for (int a = 0; a < m; ++a)
                    for (int b = a + 1; b < m; ++b) pairs.emplace_back(a, b);
                std::vector<double> bias;
                if (feedback) {
                    bias.resize(m);
                    for (int k = 0; k < m; ++k)
                        bias[k] = p.gamma_d * remaining_tour[comp[k]];
                }

                BalanceOutcome bo;
                if (weighted) {
                    bo = balance(g, pset, bc, p.metric, pairs, bias);
                } else {
                    bo.partition = graph_voronoi(g, pset, p.metric);
                    bo.weights = pset;
                    bo.converged = true;
                    for (const auto& [v, lab] : bo.partition.label)
                        bo.initial_label[v] = lab;
                    LoadTracePoint tp;
                    const auto& ld = bo.partition.load;
                    tp.max_load = *std::max_element(ld.begin(), ld.end());
                    tp.min_load = *std::min_element(ld.begin(), ld.end());
                    tp.spread = tp.max_load - tp.min_load;
                    bo.trace.push_back(tp);
                }
                for (std::size_t k = 0; k < bo.trace.size(); ++k)
                    out.balance_log.push_back({cycle, static_cast<int>(k),
                                               bo.trace[k].max_load, bo.trace[k].min_load,
                                               bo.trace[k].spread});

                // Guard cut-risk nodes with sampled doubles, then repartition.
                PartitionResult part = bo.partition;
                FreeSpaceQuery fsq;
                const OccupancyGrid& cb = beliefs[comp[0]];
                fsq.is_known_free = [&cb](Vec2 q) {
                    const CellIndex c = cb.cell_of(q);
                    return cb.in_bounds(c) && cb.at(c) == Cell::Free;
                };
                DualInsertConfig dc;
                dc.load_threshold = 2.0 * p.b_lambda;
                dc.radius = p.dual_radius;
                dc.seed = p.seed ^ (0x9E3779B97F4A7C15ULL * (cycle + 1));
                int added_total = 0;
                for (int k = 0; k < m; ++k) {
                    PartitionResult solo = part;
                    for (int j = 0; j < m; ++j)
                        if (j != k) solo.members[j].clear();
                    const int owner = comp[k];
                    DualInsertResult dr = insert_dual_nodes(
                        g, solo, dc, fsq, [&] { return mappers[owner].alloc_id(); });
                    for (const TopoNode& nd : dr.added) {
                        mappers[owner].own_graph().add_node(nd);
                        ++added_total;
                    }
                    g = std::move(dr.graph);
                }
                if (added_total > 0) {
                    part = graph_voronoi(g, bo.weights, p.metric);
                    std::ostringstream ev;
                    ev << "{\"t\":" << t << ",\"type\":\"dual_insert\",\"count\":"
                       << added_total << "}";
                    log_event(ev.str());
                }

                for (int k = 0; k < m; ++k) {
                    const int i = comp[k];
                    last_load[i] = part.load[k];
                    last_members[i] = part.members[k];
                    last_center[i] = part.centers[k].node;

                    std::set<NodeId> stable;
                    for (NodeId v : part.members[k]) {
                        auto it = bo.initial_label.find(v);
                        if (it != bo.initial_label.end() && it->second == k)
                            stable.insert(v);
                    }
                    PlanInput in;
                    in.center_idx = k;
                    in.pose = st[i].pos;
                    in.graph = &g;
                    in.partition = &part;
                    in.belief = &beliefs[i];
                    in.blocked = &blocked[i];
                    in.stable_nodes = &stable;
                    in.params = pp_plan;
                    const PlanResult pr = plan_cycle(in);
                    // An active rescue keeps its hand-built path; replacing
                    // it would restart the turn toward a different bearing
                    // every cycle and the robot would never finish a step.
                    if (rescue_hold[i] == 0) waypoints[i] = pr.waypoints;
                    remaining_tour[i] = pr.tour_length;
                    idle[i] = waypoints[i].empty();

                    std::ostringstream ev;
                    ev << "{\"t\":" << t << ",\"robot\":" << i
                       << ",\"type\":\"replan\",\"targets\":" << pr.targets.size()
                       << ",\"tour\":" << pr.tour_length
                       << ",\"fallback\":" << (pr.used_fallback ? 1 : 0)
                       << ",\"iters\":" << bo.iterations
                       << ",\"converged\":" << (bo.converged ? 1 : 0) << "}";
                    log_event(ev.str());
                }
            }
            ++cycle;

            bool all_idle = true;
            bool frontiers_left = false;
            for (int i = 0; i < n; ++i) {
                if (!idle[i]) all_idle = false;
                if (!mappers[i].frontiers().empty()) frontiers_left = true;
            }
            if (all_idle && frontiers_left) {
                if (++trapped_streak >= 5) {
                    out.outcome = Outcome::Trapped;
                    out.exploration_time = t;
                    break;
                }
            } else {
                trapped_streak = 0;
            }
        }

        for (int i = 0; i < n; ++i) {
            auto allowed = [&](Vec2 from, Vec2 to) {
                const CellIndex tc = world.cell_of(to);
                if (!world.in_bounds(tc)) return false;
                if (!blocked[i][tc.y * w + tc.x]) return true;
                const CellIndex fc = world.cell_of(from);
                return world.in_bounds(fc) && blocked[i][fc.y * w + fc.x] != 0;
            };
            const bool was = st[i].collided;
            step_robot(st[i], waypoints[i], p.dt, mp, world, allowed);
            if (st[i].collided && !was) {
                ++collision_count[i];
                std::ostringstream ev;
                ev << "{\"t\":" << t << ",\"robot\":" << i << ",\"type\":\"collision\"}";
                log_event(ev.str());
            }
            st[i].collided = false;
            out.trajectories[i].push_back(st[i].pos);

            if (rescue_hold[i] > 0 && (--rescue_hold[i] == 0 || waypoints[i].empty()))
                rescue_hold[i] = 0;

            // Two livelock escapes, both armed by holding still for two
            // replan windows. With waypoints: the heading-aligned advance can
            // drift off the planned lane and then sit vetoed forever at an
            // inflation pinch — walk cell-by-cell instead, since aligned
            // single-cell hops always land in a passable path cell. Without
            // waypoints: the planner keeps producing an already-satisfied
            // plan while frontier cells remain — drive to the nearest one.
            if (dist(st[i].pos, prev_pos[i]) < 1e-9 &&
                (!waypoints[i].empty() || !mappers[i].frontiers().empty())) {
                if (++still_ticks[i] >= 2 * replan_every) {
                    still_ticks[i] = 0;
                    const CellIndex from = world.cell_of(st[i].pos);
                    std::optional<std::vector<CellIndex>> path;
                    if (!waypoints[i].empty()) {
                        path = grid_astar(beliefs[i], blocked[i], from,
                                          world.cell_of(waypoints[i].front()));
                    } else {
                        int best = -1;
                        double bd = std::numeric_limits<double>::infinity();
                        for (int ci : mappers[i].frontiers().cells()) {
                            const Vec2 q = world.center_of({ci % w, ci / w});
                            const double d = dist(q, st[i].pos);
                            if (d < bd) {
                                bd = d;
                                best = ci;
                            }
                        }
                        if (best >= 0)
                            path = grid_astar_near(beliefs[i], blocked[i], from,
                                                   {best % w, best / w}, 0.9);
                    }
                    if (path && path->size() > 1) {
                        std::vector<Vec2> dense;
                        for (const CellIndex& c : *path) dense.push_back(world.center_of(c));
                        if (!waypoints[i].empty())
                            dense.insert(dense.end(), waypoints[i].begin() + 1,
                                         waypoints[i].end());
                        waypoints[i] = std::move(dense);
                        rescue_hold[i] = 10 * replan_every;
                    } else {
                        waypoints[i].clear();
                    }
                    std::ostringstream ev;
                    ev << "{\"t\":" << t << ",\"robot\":" << i << ",\"type\":\"unstick\""
                       << ",\"rerouted\":" << (path ? 1 : 0) << "}";
                    log_event(ev.str());
                }
            } else {
                still_ticks[i] = 0;
            }
            prev_pos[i] = st[i].pos;
        }
    }

    out.tour_lengths.resize(n);
    for (int i = 0; i < n; ++i) {
        out.tour_lengths[i] = st[i].distance_traveled;
        out.collisions += collision_count[i];
        st[i].collided = collision_count[i] > 0;
        out.robots[i] = st[i];
    }
    std::vector<const HybridTopoGraph*> rest;
    for (int i = 1; i < n; ++i) rest.push_back(&mappers[i].own_graph());
    out.final_graph = n > 0 ? merge_graphs(mappers[0].own_graph(), rest, p.merge_radius)
                            : HybridTopoGraph{};
    {
        std::ostringstream ev;
        ev << "{\"t\":" << t << ",\"type\":\"done\",\"outcome\":\""
           << (out.outcome == Outcome::Success
                   ? "success"
                   : out.outcome == Outcome::Timeout ? "timeout" : "trapped")
           << "\",\"coverage\":" << out.coverage << "}";
        log_event(ev.str());
    }
    return out;
}

}  // namespace explore
