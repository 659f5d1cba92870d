#include "explore/world_sim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace explore {

Scenario parse_scenario(const std::string& text, const std::string& name) {
    Scenario sc;
    sc.name = name;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error(name + " line " + std::to_string(lineno) + ": " + why);
    };

    double resolution = -1.0;
    int robots = -1;
    bool in_map = false;
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!in_map) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string key;
            ls >> key;
            if (key == "resolution") {
                if (!(ls >> resolution) || resolution <= 0) fail("bad resolution");
            } else if (key == "robots") {
                if (!(ls >> robots) || robots <= 0) fail("bad robot count");
            } else if (key == "start") {
                RobotStart st;
                if (!(ls >> st.id >> st.pos.x >> st.pos.y >> st.heading))
                    fail("bad start line");
                sc.starts.push_back(st);
            } else if (key == "sensor_range") {
                double v;
                if (!(ls >> v) || v <= 0) fail("bad sensor_range");
                sc.sensor_range = v;
            } else if (key == "comm_range") {
                double v;
                if (!(ls >> v) || v <= 0) fail("bad comm_range");
                sc.comm_range = v;
            } else if (key == "map") {
                in_map = true;
            } else {
                fail("unknown directive '" + key + "'");
            }
        } else {
            if (line.empty()) continue;
            for (char c : line)
                if (c != '#' && c != '.') fail("bad map character");
            rows.push_back(line);
        }
    }
    if (resolution <= 0) {
        lineno = 0;
        fail("missing resolution");
    }
    if (robots <= 0) {
        lineno = 0;
        fail("missing robot count");
    }
    if (static_cast<int>(sc.starts.size()) != robots) {
        lineno = 0;
        fail("start count does not match robots");
    }
    if (rows.empty()) {
        lineno = 0;
        fail("missing map");
    }
    sc.world = OccupancyGrid::from_ascii(rows, resolution);
    for (const RobotStart& st : sc.starts) {
        const CellIndex c = sc.world.cell_of(st.pos);
        if (!sc.world.in_bounds(c)) {
            lineno = 0;
            fail("start outside map");
        }
        if (sc.world.at(c) != Cell::Free) {
            lineno = 0;
            fail("start inside an obstacle");
        }
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), path);
}

void sense(const OccupancyGrid& world, OccupancyGrid& belief, Vec2 pos, double range,
           int n_rays, std::vector<CellIndex>* changed) {
    auto mark = [&](CellIndex c, Cell value) {
        Cell& b = belief.at(c);
        if (b == Cell::Unknown) {
            b = value;
            if (changed) changed->push_back(c);
        }
    };
    const CellIndex start = world.cell_of(pos);
    if (!world.in_bounds(start)) return;
    for (int k = 0; k < n_rays; ++k) {
        const double bearing = 2.0 * M_PI * k / n_rays;
        const Vec2 end = pos + Vec2{range * std::cos(bearing), range * std::sin(bearing)};
        traverse_segment(world, pos, end, [&](CellIndex c, double) {
            if (world.at(c) == Cell::Occupied) {
                mark(c, Cell::Occupied);
                return false;
            }
            mark(c, Cell::Free);
            return true;
        });
    }
}

void step_robot(RobotState& st, std::vector<Vec2>& waypoints, double dt,
                const MotionParams& mp, const OccupancyGrid& world,
                const std::function<bool(Vec2, Vec2)>& motion_allowed) {
    if (dt <= 0.0) return;
    while (!waypoints.empty() && dist(st.pos, waypoints.front()) <= mp.waypoint_tolerance)
        waypoints.erase(waypoints.begin());
    if (waypoints.empty()) return;

    const Vec2 target = waypoints.front();
    const double desired = std::atan2(target.y - st.pos.y, target.x - st.pos.x);
    double err = wrap_angle(desired - st.heading);
    const double turn = std::clamp(err, -mp.omega_max * dt, mp.omega_max * dt);
    st.heading = wrap_angle(st.heading + turn);
    err = wrap_angle(desired - st.heading);
    if (std::abs(err) >= mp.align_limit) return;

    const double step = std::min(mp.v_max * dt, dist(st.pos, target));
    if (step <= 0.0) return;
    const Vec2 dir{std::cos(st.heading), std::sin(st.heading)};
    Vec2 to = st.pos + dir * step;

    if (motion_allowed && !motion_allowed(st.pos, to)) return;

    // Ground-truth collision: truncate just before the first Occupied cell.
    double hit_t = -1.0;
    traverse_segment(world, st.pos, to, [&](CellIndex c, double t) {
        if (world.at(c) == Cell::Occupied) {
            hit_t = t;
            return false;
        }
        return true;
    });
    if (hit_t >= 0.0) {
        st.collided = true;
        const double safe = std::max(0.0, hit_t - 1e-6);
        to = st.pos + dir * safe;
    }
    st.distance_traveled += dist(st.pos, to);
    st.pos = to;
}

}  // namespace explore
