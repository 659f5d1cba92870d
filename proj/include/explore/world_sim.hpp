#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "explore/occupancy.hpp"

namespace explore {

struct RobotState {
    int id = 0;
    Vec2 pos;
    double heading = 0.0;  // radians, CCW from +x
    bool collided = false;
    double distance_traveled = 0.0;
};

struct RobotStart {
    int id = 0;
    Vec2 pos;
    double heading = 0.0;
};

struct Scenario {
    std::string name;
    OccupancyGrid world;  // ground truth: Free/Occupied only
    std::vector<RobotStart> starts;
    std::optional<double> sensor_range;  // per-file override
    std::optional<double> comm_range;
};

// Text format: header lines "resolution <m>", "robots <n>", one
// "start <id> <x> <y> <heading>" per robot, optional "sensor_range <m>" and
// "comm_range <m>", then "map" followed by ASCII rows ('#'/'.'), topmost row
// first. Throws std::runtime_error with a line reference on bad input.
Scenario parse_scenario(const std::string& text, const std::string& name);
Scenario load_scenario(const std::string& path);

// Casts n_rays equally spaced rays from pos; cells crossed become Free in the
// belief until the first ground-truth Occupied cell (marked Occupied) or the
// range runs out. Belief never reverts a Known cell. Cells that changed from
// Unknown are appended to changed (if given).
void sense(const OccupancyGrid& world, OccupancyGrid& belief, Vec2 pos, double range,
           int n_rays, std::vector<CellIndex>* changed = nullptr);

struct MotionParams {
    double v_max = 1.2;
    double omega_max = 1.57;
    double waypoint_tolerance = 0.05;
    double align_limit = M_PI / 6.0;  // drive only within this heading error
};

// One dt tick toward the waypoint queue: reached waypoints pop, the robot
// turns at most omega_max*dt toward the next one and advances up to v_max*dt
// along its heading once aligned. Motion truncates at ground-truth obstacles
// (sets collided). motion_allowed, when given, vetoes the advance segment
// (e.g. against an inflated belief) — the robot then holds position.
void step_robot(RobotState& st, std::vector<Vec2>& waypoints, double dt,
                const MotionParams& mp, const OccupancyGrid& world,
                const std::function<bool(Vec2, Vec2)>& motion_allowed = nullptr);

}  // namespace explore
