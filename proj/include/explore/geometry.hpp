#pragma once

#include <cmath>
#include <cstdint>

namespace explore {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
};

inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline double dist_sq(const Vec2& a, const Vec2& b) { return (a - b).norm_sq(); }

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

// Integer grid cell coordinate.
struct CellIndex {
    int x = 0;
    int y = 0;

    bool operator==(const CellIndex& o) const { return x == o.x && y == o.y; }
    bool operator<(const CellIndex& o) const {
        return y != o.y ? y < o.y : x < o.x;
    }
};

}  // namespace explore
