#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "explore/geometry.hpp"

namespace explore {

enum class Cell : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

// Axis-aligned grid with origin at world (0,0); cell (ix,iy) spans
// [ix*res, (ix+1)*res) x [iy*res, (iy+1)*res).
struct OccupancyGrid {
    int width = 0;
    int height = 0;
    double resolution = 0.1;
    std::vector<Cell> cells;

    OccupancyGrid() = default;
    OccupancyGrid(int w, int h, double res, Cell fill = Cell::Unknown)
        : width(w), height(h), resolution(res),
          cells(static_cast<std::size_t>(w) * h, fill) {}

    int idx(int x, int y) const { return y * width + x; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    bool in_bounds(CellIndex c) const { return in_bounds(c.x, c.y); }

    Cell at(int x, int y) const { return cells[idx(x, y)]; }
    Cell& at(int x, int y) { return cells[idx(x, y)]; }
    Cell at(CellIndex c) const { return cells[idx(c.x, c.y)]; }
    Cell& at(CellIndex c) { return cells[idx(c.x, c.y)]; }

    bool known(int x, int y) const { return at(x, y) != Cell::Unknown; }

    CellIndex cell_of(Vec2 p) const {
        return {static_cast<int>(std::floor(p.x / resolution)),
                static_cast<int>(std::floor(p.y / resolution))};
    }
    Vec2 center_of(CellIndex c) const {
        return {(c.x + 0.5) * resolution, (c.y + 0.5) * resolution};
    }

    // rows[0] is the top row (y = height-1). '#' = Occupied, '.' = Free.
    static OccupancyGrid from_ascii(const std::vector<std::string>& rows, double res);
    std::string to_ascii() const;
};

// Visits grid cells crossed by the segment a->b in order, starting with the
// cell containing a. visit(cell, t_enter) returning false stops early.
// Traversal also stops on leaving the grid or at the end of the segment.
void traverse_segment(const OccupancyGrid& g, Vec2 a, Vec2 b,
                      const std::function<bool(CellIndex, double)>& visit);

// True when no cell crossed by a->b is Occupied in g (Unknown is allowed).
// Leaving the grid counts as blocked.
bool segment_avoids_occupied(const OccupancyGrid& g, Vec2 a, Vec2 b);

// 1 = blocked: Occupied cells dilated by a disc of the given radius (meters).
// Unknown cells are not blocked.
std::vector<std::uint8_t> inflate_occupied(const OccupancyGrid& g, double radius);

// 1 = Free cell 4-connected to one of the seed cells through Free cells.
std::vector<std::uint8_t> reachable_free(const OccupancyGrid& g,
                                         const std::vector<CellIndex>& seeds);

}  // namespace explore
