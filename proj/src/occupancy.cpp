#include "explore/occupancy.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace explore {

OccupancyGrid OccupancyGrid::from_ascii(const std::vector<std::string>& rows, double res) {
    if (rows.empty()) throw std::invalid_argument("empty ascii grid");
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    OccupancyGrid g(w, h, res, Cell::Free);
    for (int r = 0; r < h; ++r) {
        if (static_cast<int>(rows[r].size()) != w)
            throw std::invalid_argument("ragged ascii grid row");
        const int y = h - 1 - r;
        for (int x = 0; x < w; ++x) {
            char c = rows[r][x];
            if (c == '#')
                g.at(x, y) = Cell::Occupied;
            else if (c == '.')
                g.at(x, y) = Cell::Free;
            else
                throw std::invalid_argument(std::string("bad grid char '") + c + "'");
        }
    }
    return g;
}

std::string OccupancyGrid::to_ascii() const {
    std::string out;
    out.reserve(static_cast<std::size_t>(width + 1) * height);
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            Cell c = at(x, y);
            out += (c == Cell::Occupied ? '#' : (c == Cell::Free ? '.' : ' '));
        }
        out += '\n';
    }
    return out;
}

void traverse_segment(const OccupancyGrid& g, Vec2 a, Vec2 b,
                      const std::function<bool(CellIndex, double)>& visit) {
    const double res = g.resolution;
    CellIndex cur = g.cell_of(a);
    const CellIndex end = g.cell_of(b);
    if (!g.in_bounds(cur)) return;
    if (!visit(cur, 0.0)) return;

    const Vec2 d = b - a;
    const double len = d.norm();
    if (len == 0.0) return;
    const double ux = d.x / len, uy = d.y / len;

    const double inf = std::numeric_limits<double>::infinity();
    const int step_x = ux > 0 ? 1 : (ux < 0 ? -1 : 0);
    const int step_y = uy > 0 ? 1 : (uy < 0 ? -1 : 0);
    double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
    if (step_x != 0) {
        const double boundary = (cur.x + (step_x > 0 ? 1 : 0)) * res;
        t_max_x = (boundary - a.x) / ux;
        t_delta_x = res / std::abs(ux);
    }
    if (step_y != 0) {
        const double boundary = (cur.y + (step_y > 0 ? 1 : 0)) * res;
        t_max_y = (boundary - a.y) / uy;
        t_delta_y = res / std::abs(uy);
    }

    const int max_steps = std::abs(end.x - cur.x) + std::abs(end.y - cur.y) + 4;
    for (int i = 0; i < max_steps; ++i) {
        if (cur.x == end.x && cur.y == end.y) return;
        double t;
        if (t_max_x < t_max_y) {
            t = t_max_x;
            cur.x += step_x;
            t_max_x += t_delta_x;
        } else {
            t = t_max_y;
            cur.y += step_y;
            t_max_y += t_delta_y;
        }
        if (t > len || !g.in_bounds(cur)) return;
        if (!visit(cur, t)) return;
    }
}

bool segment_avoids_occupied(const OccupancyGrid& g, Vec2 a, Vec2 b) {
    if (!g.in_bounds(g.cell_of(a)) || !g.in_bounds(g.cell_of(b))) return false;
    bool clear = true;
    traverse_segment(g, a, b, [&](CellIndex c, double) {
        if (g.at(c) == Cell::Occupied) {
            clear = false;
            return false;
        }
        return true;
    });
    return clear;
}

std::vector<std::uint8_t> inflate_occupied(const OccupancyGrid& g, double radius) {
    std::vector<std::uint8_t> blocked(g.cells.size(), 0);
    // Disc offsets measured center-to-center.
    const int r = static_cast<int>(std::floor(radius / g.resolution + 1e-9));
    std::vector<CellIndex> offsets;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (std::sqrt(double(dx * dx + dy * dy)) * g.resolution <= radius + 1e-12)
                offsets.push_back({dx, dy});
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            if (g.at(x, y) != Cell::Occupied) continue;
            for (const CellIndex& o : offsets) {
                const int nx = x + o.x, ny = y + o.y;
                if (g.in_bounds(nx, ny)) blocked[g.idx(nx, ny)] = 1;
            }
        }
    return blocked;
}

std::vector<std::uint8_t> reachable_free(const OccupancyGrid& g,
                                         const std::vector<CellIndex>& seeds) {
    std::vector<std::uint8_t> mark(g.cells.size(), 0);
    std::deque<CellIndex> q;
    for (CellIndex s : seeds) {
        if (!g.in_bounds(s) || g.at(s) != Cell::Free) continue;
        if (mark[g.idx(s.x, s.y)]) continue;
        mark[g.idx(s.x, s.y)] = 1;
        q.push_back(s);
    }
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!q.empty()) {
        CellIndex c = q.front();
        q.pop_front();
        for (int k = 0; k < 4; ++k) {
            const int nx = c.x + dx[k], ny = c.y + dy[k];
            if (!g.in_bounds(nx, ny) || mark[g.idx(nx, ny)]) continue;
            if (g.at(nx, ny) != Cell::Free) continue;
            mark[g.idx(nx, ny)] = 1;
            q.push_back({nx, ny});
        }
    }
    return mark;
}

}  // namespace explore
