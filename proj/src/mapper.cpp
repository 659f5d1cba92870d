#include "explore/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace explore {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Gvd::Gvd(int w, int h, double res, double dhat)
    : w_(w), h_(h), res_(res), dhat_(dhat),
      window_(static_cast<int>(std::ceil(dhat / res)) + 1),
      d1_(static_cast<std::size_t>(w) * h, kInf),
      d2_(static_cast<std::size_t>(w) * h, kInf),
      id1_(static_cast<std::size_t>(w) * h, -1),
      id2_(static_cast<std::size_t>(w) * h, -1),
      gv_(static_cast<std::size_t>(w) * h, 0),
      parent_(static_cast<std::size_t>(w) * h, -1) {}

std::int32_t Gvd::find(std::int32_t x) {
    std::int32_t r = x;
    while (parent_[r] != r) r = parent_[r];
    while (parent_[x] != r) {
        std::int32_t nxt = parent_[x];
        parent_[x] = r;
        x = nxt;
    }
    return r;
}

void Gvd::unite(std::int32_t a, std::int32_t b, std::set<std::int32_t>& changed_roots) {
    std::int32_t ra = find(a), rb = find(b);
    if (ra == rb) return;
    changed_roots.insert(ra);
    changed_roots.insert(rb);
    if (ra < rb)
        parent_[rb] = ra;
    else
        parent_[ra] = rb;
}

void Gvd::compute_cell(const OccupancyGrid& belief, int x, int y) {
    const int idx = y * w_ + x;
    const Cell c = belief.at(x, y);
    if (c == Cell::Unknown) {
        d1_[idx] = d2_[idx] = kInf;
        id1_[idx] = id2_[idx] = -1;
        gv_[idx] = 0;
        return;
    }
    if (c == Cell::Occupied) {
        d1_[idx] = 0.0;
        id1_[idx] = find(idx);
        d2_[idx] = kInf;
        id2_[idx] = -1;
        gv_[idx] = 0;
        return;
    }
    // Nearest distance per obstacle component within the scan window.
    std::map<std::int32_t, double> comp_d;
    const int x0 = std::max(0, x - window_), x1 = std::min(w_ - 1, x + window_);
    const int y0 = std::max(0, y - window_), y1 = std::min(h_ - 1, y + window_);
    for (int ny = y0; ny <= y1; ++ny)
        for (int nx = x0; nx <= x1; ++nx) {
            const int nidx = ny * w_ + nx;
            if (parent_[nidx] < 0) continue;
            const double dx = nx - x, dy = ny - y;
            const double d = std::sqrt(dx * dx + dy * dy) * res_;
            const std::int32_t root = find(nidx);
            auto it = comp_d.find(root);
            if (it == comp_d.end() || d < it->second) comp_d[root] = d;
        }
    double b1 = kInf, b2 = kInf;
    std::int32_t r1 = -1, r2 = -1;
    for (const auto& [root, d] : comp_d) {
        if (d < b1 || (d == b1 && r1 == -1)) {
            b2 = b1;
            r2 = r1;
            b1 = d;
            r1 = root;
        } else if (d < b2) {
            b2 = d;
            r2 = root;
        }
    }
    d1_[idx] = b1;
    id1_[idx] = r1;
    d2_[idx] = b2;
    id2_[idx] = r2;
    gv_[idx] = (r2 != -1 && b2 < dhat_ && (b2 - b1) <= res_ * std::sqrt(2.0) + 1e-12) ? 1 : 0;
}

void Gvd::update(const OccupancyGrid& belief, const std::vector<CellIndex>& newly_known) {
    std::set<std::int32_t> changed_roots;
    std::vector<int> new_occ;
    std::set<int> recompute;

    for (CellIndex c : newly_known) {
        if (!belief.in_bounds(c)) continue;
        const int idx = c.y * w_ + c.x;
        recompute.insert(idx);
        if (belief.at(c) == Cell::Occupied && parent_[idx] < 0) {
            parent_[idx] = idx;
            new_occ.push_back(idx);
        }
    }
    // Union new occupied cells into 8-connected components.
    for (int idx : new_occ) {
        const int x = idx % w_, y = idx / w_;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w_ || ny < 0 || ny >= h_) continue;
                const int nidx = ny * w_ + nx;
                if (parent_[nidx] >= 0) unite(idx, nidx, changed_roots);
            }
    }
    // Distances can change within the window of each new obstacle cell...
    for (int idx : new_occ) {
        const int x = idx % w_, y = idx / w_;
        const int x0 = std::max(0, x - window_), x1 = std::min(w_ - 1, x + window_);
        const int y0 = std::max(0, y - window_), y1 = std::min(h_ - 1, y + window_);
        for (int ny = y0; ny <= y1; ++ny)
            for (int nx = x0; nx <= x1; ++nx) recompute.insert(ny * w_ + nx);
    }
    // ...and wherever a stored component label took part in a merge (the two
    // component halves stop being "distinct obstacles" for the ridge test).
    if (!changed_roots.empty()) {
        const int total = w_ * h_;
        for (int idx = 0; idx < total; ++idx)
            if ((id1_[idx] != -1 && changed_roots.count(id1_[idx])) ||
                (id2_[idx] != -1 && changed_roots.count(id2_[idx])))
                recompute.insert(idx);
    }
    for (int idx : recompute) {
        const int x = idx % w_, y = idx / w_;
        if (belief.at(x, y) != Cell::Unknown) compute_cell(belief, x, y);
    }
}

void Gvd::rebuild(const OccupancyGrid& belief) {
    *this = Gvd(belief.width, belief.height, belief.resolution, dhat_);
    std::vector<CellIndex> all;
    all.reserve(belief.cells.size());
    for (int y = 0; y < h_; ++y)
        for (int x = 0; x < w_; ++x)
            if (belief.known(x, y)) all.push_back({x, y});
    update(belief, all);
}

std::vector<CellIndex> Gvd::gv_cells() const {
    std::vector<CellIndex> out;
    for (int y = 0; y < h_; ++y)
        for (int x = 0; x < w_; ++x)
            if (gv_[y * w_ + x]) out.push_back({x, y});
    return out;
}

bool Gvd::same_field(const Gvd& o) const {
    if (w_ != o.w_ || h_ != o.h_) return false;
    for (std::size_t i = 0; i < gv_.size(); ++i) {
        if (gv_[i] != o.gv_[i] || id1_[i] != o.id1_[i] || id2_[i] != o.id2_[i])
            return false;
        // Distances compare bitwise; inf == inf holds.
        if (!(d1_[i] == o.d1_[i] || (std::isinf(d1_[i]) && std::isinf(o.d1_[i]))))
            return false;
        if (!(d2_[i] == o.d2_[i] || (std::isinf(d2_[i]) && std::isinf(o.d2_[i]))))
            return false;
    }
    return true;
}

std::vector<std::uint8_t> thin_mask(const std::vector<std::uint8_t>& mask, int w, int h) {
    std::vector<std::uint8_t> img = mask;
    auto at = [&](int x, int y) -> int {
        return (x < 0 || x >= w || y < 0 || y >= h) ? 0 : (img[y * w + x] ? 1 : 0);
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (int phase = 0; phase < 2; ++phase) {
            std::vector<int> kill;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    if (!img[y * w + x]) continue;
                    const int p2 = at(x, y - 1), p3 = at(x + 1, y - 1), p4 = at(x + 1, y);
                    const int p5 = at(x + 1, y + 1), p6 = at(x, y + 1), p7 = at(x - 1, y + 1);
                    const int p8 = at(x - 1, y), p9 = at(x - 1, y - 1);
                    const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    if (b < 2 || b > 6) continue;
                    const int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
                    int a = 0;
                    for (int i = 0; i < 8; ++i)
                        if (seq[i] == 0 && seq[i + 1] == 1) ++a;
                    if (a != 1) continue;
                    if (phase == 0) {
                        if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
                    } else {
                        if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
                    }
                    kill.push_back(y * w + x);
                }
            for (int idx : kill) img[idx] = 0;
            if (!kill.empty()) changed = true;
        }
    }
    return img;
}

namespace {

struct SkeletonView {
    const std::vector<std::uint8_t>& sk;
    int w, h;
    bool on(int x, int y) const {
        return x >= 0 && x < w && y >= 0 && y < h && sk[y * w + x];
    }
    std::vector<int> neighbors(int idx) const {
        const int x = idx % w, y = idx / w;
        std::vector<int> out;
        static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
        static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
        for (int k = 0; k < 8; ++k)
            if (on(x + dx[k], y + dy[k])) out.push_back((y + dy[k]) * w + (x + dx[k]));
        std::sort(out.begin(), out.end());
        return out;
    }
};

}  // namespace

GvExtraction extract_gv_skeleton(const std::vector<std::uint8_t>& gv_mask,
                                 const OccupancyGrid& belief, double node_spacing) {
    const int w = belief.width, h = belief.height;
    const double res = belief.resolution;
    std::vector<std::uint8_t> sk = thin_mask(gv_mask, w, h);
    SkeletonView view{sk, w, h};

    std::map<int, int> degree;
    for (int idx = 0; idx < w * h; ++idx)
        if (sk[idx]) degree[idx] = static_cast<int>(view.neighbors(idx).size());

    // Junction cells collapse into clusters anchored at their smallest cell.
    std::map<int, int> anchor_of;  // junction cell -> anchor cell
    std::set<int> is_stop;
    {
        std::set<int> junctions;
        for (const auto& [idx, deg] : degree)
            if (deg >= 3) junctions.insert(idx);
        std::set<int> seen;
        for (int j : junctions) {
            if (seen.count(j)) continue;
            std::vector<int> cluster;
            std::deque<int> q{j};
            seen.insert(j);
            while (!q.empty()) {
                int c = q.front();
                q.pop_front();
                cluster.push_back(c);
                for (int nb : view.neighbors(c))
                    if (junctions.count(nb) && !seen.count(nb)) {
                        seen.insert(nb);
                        q.push_back(nb);
                    }
            }
            const int anchor = *std::min_element(cluster.begin(), cluster.end());
            for (int c : cluster) {
                anchor_of[c] = anchor;
                is_stop.insert(c);
            }
        }
        for (const auto& [idx, deg] : degree)
            if (deg <= 1) {
                anchor_of[idx] = idx;
                is_stop.insert(idx);
            }
    }

    GvExtraction out;
    std::set<int> node_cells;
    std::set<std::pair<int, int>> edges;
    auto add_edge = [&](int a, int b) {
        if (a == b) return;
        edges.insert({std::min(a, b), std::max(a, b)});
        node_cells.insert(a);
        node_cells.insert(b);
    };
    auto cell_pos = [&](int idx) { return belief.center_of({idx % w, idx / w}); };
    auto step_len = [&](int a, int b) {
        const int ax = a % w, ay = a / w, bx = b % w, by = b / w;
        return (ax != bx && ay != by) ? res * std::sqrt(2.0) : res;
    };
    // Junction cells stand in for their cluster anchor when they become
    // graph nodes; every other walk cell is its own node cell.
    auto cell_node = [&](int c) {
        auto it = anchor_of.find(c);
        return it == anchor_of.end() ? c : it->second;
    };

    // Emit an edge between the nodes at path[a] and path[b], subdividing at
    // walk cells while the straight chord crosses a known Occupied cell.
    std::function<void(const std::vector<int>&, std::size_t, std::size_t)> emit_chord =
        [&](const std::vector<int>& path, std::size_t a, std::size_t b) {
            const int ca = cell_node(path[a]);
            const int cb = cell_node(path[b]);
            if (ca == cb) return;
            if (b - a <= 1 ||
                segment_avoids_occupied(belief, cell_pos(ca), cell_pos(cb))) {
                add_edge(ca, cb);
                return;
            }
            const std::size_t mid = (a + b) / 2;
            emit_chord(path, a, mid);
            emit_chord(path, mid, b);
        };

    std::set<std::pair<int, int>> walked;  // directed first steps already taken
    std::set<int> visited;
    auto walk_from = [&](int stop_cell, int first) {
        if (walked.count({stop_cell, first})) return;
        walked.insert({stop_cell, first});
        std::vector<int> path{stop_cell, first};
        int prev = stop_cell, cur = first;
        double acc = step_len(prev, cur);
        std::size_t last_node_at = 0;
        while (!is_stop.count(cur)) {
            visited.insert(cur);
            if (acc >= node_spacing) {
                emit_chord(path, last_node_at, path.size() - 1);
                last_node_at = path.size() - 1;
                acc = 0.0;
            }
            int nxt = -1;
            for (int nb : view.neighbors(cur)) {
                if (nb == prev) continue;
                if (is_stop.count(nb) || !visited.count(nb)) {
                    nxt = nb;
                    break;
                }
            }
            if (nxt == -1) {  // dead end inside the walk; cur becomes an endpoint
                anchor_of[cur] = cur;
                is_stop.insert(cur);
                break;
            }
            prev = cur;
            cur = nxt;
            path.push_back(cur);
            acc += step_len(prev, cur);
        }
        walked.insert({path.back(), prev});
        emit_chord(path, last_node_at, path.size() - 1);
    };

    for (int stop : is_stop) {
        node_cells.insert(anchor_of.at(stop));
        for (int nb : view.neighbors(stop))
            if (!is_stop.count(nb))
                walk_from(stop, nb);
            else if (anchor_of.at(nb) != anchor_of.at(stop))
                add_edge(anchor_of.at(stop), anchor_of.at(nb));
        visited.insert(stop);
    }
    // Pure cycles with no junctions or endpoints: anchor at smallest cell.
    for (const auto& [idx, deg] : degree) {
        (void)deg;
        if (visited.count(idx) || is_stop.count(idx)) continue;
        anchor_of[idx] = idx;
        is_stop.insert(idx);
        node_cells.insert(idx);
        for (int nb : view.neighbors(idx))
            if (!is_stop.count(nb)) walk_from(idx, nb);
        visited.insert(idx);
    }

    out.node_cells.assign(node_cells.begin(), node_cells.end());
    out.edges.assign(edges.begin(), edges.end());
    return out;
}

FrontierTracker::FrontierTracker(int w, int h, double res, double cluster_max_size)
    : w_(w), h_(h), res_(res), max_size_(cluster_max_size) {}

bool FrontierTracker::is_frontier(const OccupancyGrid& belief, int x, int y) const {
    if (belief.at(x, y) != Cell::Free) return false;
    static const int dx[4] = {1, -1, 0, 0};
    static const int dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k], ny = y + dy[k];
        if (belief.in_bounds(nx, ny) && belief.at(nx, ny) == Cell::Unknown) return true;
    }
    return false;
}

void FrontierTracker::update(const OccupancyGrid& belief,
                             const std::vector<CellIndex>& changed) {
    std::set<int> candidates;
    for (CellIndex c : changed) {
        if (!belief.in_bounds(c)) continue;
        candidates.insert(c.y * w_ + c.x);
        static const int dx[4] = {1, -1, 0, 0};
        static const int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int nx = c.x + dx[k], ny = c.y + dy[k];
            if (belief.in_bounds(nx, ny)) candidates.insert(ny * w_ + nx);
        }
    }
    for (int idx : candidates) {
        if (is_frontier(belief, idx % w_, idx / w_))
            frontier_.insert(idx);
        else
            frontier_.erase(idx);
    }
    recluster(belief);
}

void FrontierTracker::rebuild(const OccupancyGrid& belief) {
    frontier_.clear();
    for (int y = 0; y < h_; ++y)
        for (int x = 0; x < w_; ++x)
            if (is_frontier(belief, x, y)) frontier_.insert(y * w_ + x);
    recluster(belief);
}

void FrontierTracker::recluster(const OccupancyGrid& belief) {
    clusters_.clear();
    std::set<int> seen;
    std::vector<std::vector<int>> raw;
    for (int start : frontier_) {
        if (seen.count(start)) continue;
        std::vector<int> comp;
        std::deque<int> q{start};
        seen.insert(start);
        while (!q.empty()) {
            const int c = q.front();
            q.pop_front();
            comp.push_back(c);
            const int x = c % w_, y = c / w_;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= w_ || ny < 0 || ny >= h_) continue;
                    const int nidx = ny * w_ + nx;
                    if (frontier_.count(nidx) && !seen.count(nidx)) {
                        seen.insert(nidx);
                        q.push_back(nidx);
                    }
                }
        }
        std::sort(comp.begin(), comp.end());
        raw.push_back(std::move(comp));
    }

    // Recursive bisection of oversized clusters along their longer axis.
    std::function<void(std::vector<int>&)> split = [&](std::vector<int>& cells) {
        int minx = w_, maxx = -1, miny = h_, maxy = -1;
        for (int c : cells) {
            minx = std::min(minx, c % w_);
            maxx = std::max(maxx, c % w_);
            miny = std::min(miny, c / w_);
            maxy = std::max(maxy, c / w_);
        }
        const double wm = (maxx - minx + 1) * res_;
        const double hm = (maxy - miny + 1) * res_;
        const bool split_x = wm >= hm;
        if (std::max(wm, hm) <= max_size_ || (split_x ? maxx == minx : maxy == miny)) {
            FrontierCluster fc;
            fc.cells = cells;
            fc.anchor = cells.front();
            double sx = 0, sy = 0;
            for (int c : cells) {
                const Vec2 p = belief.center_of({c % w_, c / w_});
                sx += p.x;
                sy += p.y;
            }
            fc.centroid = {sx / cells.size(), sy / cells.size()};
            const CellIndex cc = belief.cell_of(fc.centroid);
            if (belief.in_bounds(cc) && belief.at(cc) == Cell::Free) {
                fc.viewpoint = fc.centroid;
            } else {
                // Nearest known Free cell to the centroid, searched by ring.
                double best_d = kInf;
                int best = -1;
                const int max_r = std::max(w_, h_);
                for (int r = 0; r <= max_r; ++r) {
                    if (best != -1 && (r - 1) * res_ > best_d) break;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
                            const int nx = cc.x + dx, ny = cc.y + dy;
                            if (!belief.in_bounds(nx, ny) || belief.at(nx, ny) != Cell::Free)
                                continue;
                            const double d = dist(belief.center_of({nx, ny}), fc.centroid);
                            const int nidx = ny * w_ + nx;
                            if (d < best_d || (d == best_d && nidx < best)) {
                                best_d = d;
                                best = nidx;
                            }
                        }
                }
                fc.viewpoint = best == -1 ? fc.centroid
                                          : belief.center_of({best % w_, best / w_});
            }
            clusters_.push_back(std::move(fc));
            return;
        }
        const int mid = split_x ? (minx + maxx + 1) / 2 : (miny + maxy + 1) / 2;
        std::vector<int> left, right;
        for (int c : cells) {
            const int coord = split_x ? c % w_ : c / w_;
            (coord < mid ? left : right).push_back(c);
        }
        split(left);
        split(right);
    };
    for (auto& comp : raw) split(comp);
    std::sort(clusters_.begin(), clusters_.end(),
              [](const FrontierCluster& a, const FrontierCluster& b) {
                  return a.anchor < b.anchor;
              });
}

Mapper::Mapper(int robot, int w, int h, double res, const MapperConfig& cfg)
    : robot_(robot), cfg_(cfg), res_(res),
      gvd_(w, h, res, cfg.dhat),
      frontier_(w, h, res, cfg.cluster_max_size) {}

void Mapper::attach_node(const OccupancyGrid& belief, NodeId id) {
    const Vec2 p = graph_.node(id).pos;
    std::vector<std::pair<double, NodeId>> cand;
    for (const auto& [oid, n] : graph_.nodes()) {
        if (oid == id) continue;
        cand.emplace_back(dist(p, n.pos), oid);
    }
    std::sort(cand.begin(), cand.end());
    int attached = 0;
    for (const auto& [d, oid] : cand) {
        (void)d;
        if (attached >= cfg_.attach_k) break;
        if (!segment_avoids_occupied(belief, p, graph_.node(oid).pos)) continue;
        graph_.add_edge(id, oid, EdgeCertainty::Uncertain);
        ++attached;
    }
}

void Mapper::rebuild_gv_layer(const OccupancyGrid& belief) {
    GvExtraction ex = extract_gv_skeleton(gvd_.gv_mask(), belief, cfg_.node_spacing);

    std::set<int> want_cells(ex.node_cells.begin(), ex.node_cells.end());
    // Drop GV nodes whose cell fell out of the extraction.
    std::vector<int> stale;
    for (const auto& [cell, id] : gv_cell_node_)
        if (!want_cells.count(cell)) stale.push_back(cell);
    for (int cell : stale) {
        graph_.remove_node(gv_cell_node_[cell]);
        gv_cell_node_.erase(cell);
    }
    // Ensure nodes exist (ids stable per cell).
    for (int cell : ex.node_cells) {
        auto it = gv_cell_node_.find(cell);
        if (it != gv_cell_node_.end()) continue;
        TopoNode n;
        n.id = alloc_id();
        n.kind = NodeKind::GV;
        n.pos = belief.center_of({cell % belief.width, cell / belief.width});
        graph_.add_node(n);
        gv_cell_node_[cell] = n.id;
    }
    // Reconcile ridge edges: wanted set exactly.
    std::set<std::pair<NodeId, NodeId>> want_edges;
    for (auto [a, b] : ex.edges) {
        const NodeId ia = gv_cell_node_.at(a), ib = gv_cell_node_.at(b);
        want_edges.insert({std::min(ia, ib), std::max(ia, ib)});
    }
    std::vector<std::pair<NodeId, NodeId>> drop;
    for (const auto& [key, e] : graph_.edges()) {
        (void)e;
        const TopoNode& na = graph_.node(key.first);
        const TopoNode& nb = graph_.node(key.second);
        if (na.kind == NodeKind::GV && nb.kind == NodeKind::GV && !want_edges.count(key))
            drop.push_back(key);
    }
    for (auto [a, b] : drop) graph_.remove_edge(a, b);
    for (auto [a, b] : want_edges) graph_.add_edge(a, b, EdgeCertainty::Deterministic);
}

void Mapper::rebuild_frontier_layer(const OccupancyGrid& belief) {
    (void)belief;
    std::set<int> want;
    for (const FrontierCluster& fc : frontier_.clusters()) want.insert(fc.anchor);
    std::vector<int> stale;
    for (const auto& [anchor, id] : frontier_anchor_node_)
        if (!want.count(anchor)) stale.push_back(anchor);
    for (int anchor : stale) {
        graph_.remove_node(frontier_anchor_node_[anchor]);
        frontier_anchor_node_.erase(anchor);
    }
    for (const FrontierCluster& fc : frontier_.clusters()) {
        auto it = frontier_anchor_node_.find(fc.anchor);
        if (it != frontier_anchor_node_.end()) {
            // Keep id; refresh position if the viewpoint moved.
            const NodeId id = it->second;
            if (!(graph_.node(id).pos == fc.viewpoint)) {
                graph_.remove_node(id);
                TopoNode n;
                n.id = id;
                n.kind = NodeKind::Frontier;
                n.pos = fc.viewpoint;
                graph_.add_node(n);
            }
            continue;
        }
        TopoNode n;
        n.id = alloc_id();
        n.kind = NodeKind::Frontier;
        n.pos = fc.viewpoint;
        graph_.add_node(n);
        frontier_anchor_node_[fc.anchor] = n.id;
    }
}

void Mapper::retire_coverage(const OccupancyGrid& belief) {
    std::vector<NodeId> gone;
    for (const auto& [id, n] : graph_.nodes()) {
        if (n.kind != NodeKind::Coverage || n.dual_of != kNoNode) continue;
        const CellIndex c = belief.cell_of(n.pos);
        if (!belief.in_bounds(c) || belief.at(c) == Cell::Unknown) continue;
        if (graph_.neighbors(id).size() <= 1) gone.push_back(id);
    }
    for (NodeId id : gone) graph_.remove_node(id);
}

void Mapper::sample_coverage(const OccupancyGrid& belief, Vec2 robot_pos, Rng& rng) {
    std::vector<Vec2> existing;
    for (const auto& [id, n] : graph_.nodes()) {
        (void)id;
        if (n.kind == NodeKind::Coverage) existing.push_back(n.pos);
    }
    for (int a = 0; a < cfg_.coverage_attempts; ++a) {
        const double r = cfg_.dc * std::sqrt(rng.next_double());
        const double th = 2.0 * M_PI * rng.next_double();
        const Vec2 p = robot_pos + Vec2{r * std::cos(th), r * std::sin(th)};
        const CellIndex c = belief.cell_of(p);
        if (!belief.in_bounds(c) || belief.at(c) != Cell::Unknown) continue;
        bool spaced = true;
        for (const Vec2& q : existing)
            if (dist(p, q) < cfg_.sample_spacing) {
                spaced = false;
                break;
            }
        if (!spaced) continue;
        TopoNode n;
        n.id = alloc_id();
        n.kind = NodeKind::Coverage;
        n.pos = p;
        graph_.add_node(n);
        attach_node(belief, n.id);
        if (graph_.neighbors(n.id).empty() && graph_.node_count() > 1) {
            graph_.remove_node(n.id);  // nothing reachable to tie into
            continue;
        }
        existing.push_back(p);
    }
}

void Mapper::update(const OccupancyGrid& belief, const std::vector<CellIndex>& changed,
                    Vec2 robot_pos, Rng& rng) {
    gvd_.update(belief, changed);
    frontier_.update(belief, changed);
    rebuild_gv_layer(belief);
    rebuild_frontier_layer(belief);
    retire_coverage(belief);
    sample_coverage(belief, robot_pos, rng);
    // (Re)attach isolated non-GV nodes; their anchors may have been removed.
    std::vector<NodeId> loose;
    for (const auto& [id, n] : graph_.nodes())
        if (n.kind != NodeKind::GV && graph_.neighbors(id).empty()) loose.push_back(id);
    for (NodeId id : loose) attach_node(belief, id);
}

}  // namespace explore
