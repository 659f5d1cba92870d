#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "explore/network.hpp"
#include "explore/world_sim.hpp"

using namespace explore;

namespace {

const std::string kGood =
    "# four-by-four room\n"
    "resolution 0.5\n"
    "robots 2\n"
    "\n"
    "start 0 0.75 0.75 0.0\n"
    "start 1 1.25 1.25 1.57\n"
    "sensor_range 3.5\n"
    "comm_range 7\n"
    "map\n"
    "####\n"
    "#..#\n"
    "#..#\n"
    "####\n";

}  // namespace

TEST_CASE("scenario text parses into world, starts and overrides") {
    const Scenario sc = parse_scenario(kGood, "room");
    CHECK(sc.name == "room");
    CHECK(sc.world.width == 4);
    CHECK(sc.world.height == 4);
    CHECK(sc.world.resolution == 0.5);
    CHECK(sc.world.at(0, 0) == Cell::Occupied);
    CHECK(sc.world.at(1, 1) == Cell::Free);
    CHECK(sc.world.at(2, 2) == Cell::Free);
    CHECK(sc.world.at(3, 3) == Cell::Occupied);
    REQUIRE(sc.starts.size() == 2);
    CHECK(sc.starts[0].id == 0);
    CHECK(sc.starts[0].pos.x == 0.75);
    CHECK(sc.starts[1].heading == 1.57);
    REQUIRE(sc.sensor_range.has_value());
    CHECK(*sc.sensor_range == 3.5);
    REQUIRE(sc.comm_range.has_value());
    CHECK(*sc.comm_range == 7.0);
}

TEST_CASE("range overrides stay unset when absent") {
    const std::string text =
        "resolution 1\nrobots 1\nstart 0 1.5 1.5 0\nmap\n###\n#.#\n###\n";
    const Scenario sc = parse_scenario(text, "bare");
    CHECK(!sc.sensor_range.has_value());
    CHECK(!sc.comm_range.has_value());
}

TEST_CASE("malformed scenario text is rejected with a line reference") {
    CHECK_THROWS_WITH_AS(parse_scenario("speed 3\n", "bad"),
                         "bad line 1: unknown directive 'speed'", std::runtime_error);
    CHECK_THROWS_AS(parse_scenario("resolution 0\n", "bad"), std::runtime_error);
    CHECK_THROWS_AS(parse_scenario("resolution 1\nrobots 0\n", "bad"),
                    std::runtime_error);
    CHECK_THROWS_AS(parse_scenario("resolution 1\nrobots 1\nstart 0 1.5\n", "bad"),
                    std::runtime_error);
    // missing resolution
    CHECK_THROWS_AS(parse_scenario("robots 1\nstart 0 1.5 1.5 0\nmap\n...\n", "bad"),
                    std::runtime_error);
    // start count mismatch
    CHECK_THROWS_AS(
        parse_scenario("resolution 1\nrobots 2\nstart 0 1.5 1.5 0\nmap\n...\n", "bad"),
        std::runtime_error);
    // missing map
    CHECK_THROWS_AS(parse_scenario("resolution 1\nrobots 1\nstart 0 1.5 1.5 0\n", "bad"),
                    std::runtime_error);
    // bad map character
    CHECK_THROWS_AS(
        parse_scenario("resolution 1\nrobots 1\nstart 0 1.5 1.5 0\nmap\n..x\n", "bad"),
        std::runtime_error);
    // start inside an obstacle / outside the map
    CHECK_THROWS_AS(
        parse_scenario("resolution 1\nrobots 1\nstart 0 0.5 0.5 0\nmap\n#..\n", "bad"),
        std::runtime_error);
    CHECK_THROWS_AS(
        parse_scenario("resolution 1\nrobots 1\nstart 0 9.5 0.5 0\nmap\n...\n", "bad"),
        std::runtime_error);
}

TEST_CASE("loading a missing scenario file throws") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/nowhere.txt"), std::runtime_error);
}

TEST_CASE("sensing reveals a disc and never marks beyond range") {
    const OccupancyGrid world(21, 21, 0.1, Cell::Free);
    OccupancyGrid belief(21, 21, 0.1);
    const Vec2 pos{1.05, 1.05};
    std::vector<CellIndex> changed;
    sense(world, belief, pos, 0.35, 180, &changed);

    CHECK(belief.at(10, 10) == Cell::Free);
    CHECK(belief.at(13, 10) == Cell::Free);
    CHECK(belief.at(10, 13) == Cell::Free);
    int known = 0;
    for (int y = 0; y < 21; ++y)
        for (int x = 0; x < 21; ++x) {
            if (belief.known(x, y)) {
                ++known;
                // cell must be touched by some ray: its nearest point to the
                // sensor lies within range
                const Vec2 c = belief.center_of({x, y});
                CHECK(dist(c, pos) <= 0.35 + 0.1 * std::sqrt(2.0));
            }
        }
    CHECK(known == static_cast<int>(changed.size()));
    CHECK(known > 20);

    // Re-sensing the same spot discovers nothing new.
    std::vector<CellIndex> again;
    sense(world, belief, pos, 0.35, 180, &again);
    CHECK(again.empty());
}

TEST_CASE("rays stop at the first wall and leave the far side unknown") {
    OccupancyGrid world(30, 9, 0.1, Cell::Free);
    for (int y = 0; y < 9; ++y) world.at(15, y) = Cell::Occupied;
    OccupancyGrid belief(30, 9, 0.1);
    sense(world, belief, {0.55, 0.45}, 2.0, 360);
    CHECK(belief.at(14, 4) == Cell::Free);
    CHECK(belief.at(15, 4) == Cell::Occupied);
    CHECK(belief.at(16, 4) == Cell::Unknown);
    CHECK(belief.at(20, 4) == Cell::Unknown);
}

TEST_CASE("sensing never rewrites an already-known cell") {
    OccupancyGrid world(30, 9, 0.1, Cell::Free);
    for (int y = 0; y < 9; ++y) world.at(15, y) = Cell::Occupied;
    OccupancyGrid belief(30, 9, 0.1);
    belief.at(15, 4) = Cell::Free;  // stale but committed
    std::vector<CellIndex> changed;
    sense(world, belief, {0.55, 0.45}, 2.0, 360, &changed);
    CHECK(belief.at(15, 4) == Cell::Free);
    for (const CellIndex& c : changed) CHECK(!(c.x == 15 && c.y == 4));
}

TEST_CASE("a tick advances v_max*dt toward an aligned waypoint") {
    const OccupancyGrid world(50, 50, 0.1, Cell::Free);
    RobotState st;
    st.pos = {1.0, 1.0};
    st.heading = 0.0;
    std::vector<Vec2> wps{{2.0, 1.0}};
    step_robot(st, wps, 0.1, MotionParams{}, world);
    CHECK(st.pos.x == doctest::Approx(1.12).epsilon(1e-12));
    CHECK(st.pos.y == 1.0);
    CHECK(st.heading == 0.0);
    CHECK(st.distance_traveled == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(!st.collided);
    CHECK(wps.size() == 1);
}

TEST_CASE("turn rate is clamped and the robot holds until aligned") {
    const OccupancyGrid world(50, 50, 0.1, Cell::Free);
    RobotState st;
    st.pos = {1.0, 1.0};
    st.heading = 0.0;
    std::vector<Vec2> wps{{0.0, 1.0}};  // directly behind
    const MotionParams mp;
    step_robot(st, wps, 0.1, mp, world);
    CHECK(st.pos.x == 1.0);  // still turning, no advance yet
    CHECK(st.pos.y == 1.0);
    CHECK(std::abs(st.heading) == doctest::Approx(mp.omega_max * 0.1));

    for (int i = 0; i < 40; ++i) step_robot(st, wps, 0.1, mp, world);
    CHECK(st.pos.x < 1.0);
    CHECK(st.distance_traveled > 0.0);
}

TEST_CASE("waypoints within tolerance pop before moving") {
    const OccupancyGrid world(50, 50, 0.1, Cell::Free);
    RobotState st;
    st.pos = {1.0, 1.0};
    std::vector<Vec2> wps{{1.01, 1.0}, {2.0, 1.0}};
    step_robot(st, wps, 0.1, MotionParams{}, world);
    CHECK(wps.size() == 1);
    CHECK(wps[0].x == 2.0);
    CHECK(st.pos.x == doctest::Approx(1.12));

    std::vector<Vec2> only{{1.0, 1.0}};
    RobotState st2;
    st2.pos = {1.0, 1.0};
    step_robot(st2, only, 0.1, MotionParams{}, world);
    CHECK(only.empty());
    CHECK(st2.pos.x == 1.0);
}

TEST_CASE("ground-truth walls truncate motion and flag the collision") {
    OccupancyGrid world(40, 9, 0.1, Cell::Free);
    for (int y = 0; y < 9; ++y) world.at(20, y) = Cell::Occupied;
    RobotState st;
    st.pos = {1.95, 0.45};
    st.heading = 0.0;
    std::vector<Vec2> wps{{3.0, 0.45}};
    step_robot(st, wps, 0.1, MotionParams{}, world);
    CHECK(st.collided);
    CHECK(st.pos.x < 2.0);
    CHECK(st.pos.x > 1.99);
    CHECK(st.distance_traveled == doctest::Approx(st.pos.x - 1.95));
}

TEST_CASE("a motion veto holds the robot without marking a collision") {
    const OccupancyGrid world(50, 50, 0.1, Cell::Free);
    RobotState st;
    st.pos = {1.0, 1.0};
    st.heading = 0.0;
    std::vector<Vec2> wps{{2.0, 1.0}};
    step_robot(st, wps, 0.1, MotionParams{}, world,
               [](Vec2, Vec2) { return false; });
    CHECK(st.pos.x == 1.0);
    CHECK(!st.collided);
    CHECK(st.distance_traveled == 0.0);
    CHECK(wps.size() == 1);
}

TEST_CASE("comm graph links pairs within range, inclusive") {
    const std::vector<Vec2> pos{{0, 0}, {1, 0}, {2.5, 0}};
    const CommGraph cg = comm_graph(pos, 1.2, false);
    CHECK(cg.connected(0, 1));
    CHECK(cg.connected(1, 0));
    CHECK(!cg.connected(1, 2));
    CHECK(!cg.connected(0, 2));
    const auto comps = cg.components();
    REQUIRE(comps.size() == 2);
    CHECK(comps[0] == std::vector<int>{0, 1});
    CHECK(comps[1] == std::vector<int>{2});

    const CommGraph touch = comm_graph({{0, 0}, {1, 0}}, 1.0, false);
    CHECK(touch.connected(0, 1));
}

TEST_CASE("multi-hop closes links across a whole component") {
    const std::vector<Vec2> pos{{0, 0}, {1.5, 0}, {3.0, 0}};
    const CommGraph single = comm_graph(pos, 1.6, false);
    CHECK(single.connected(0, 1));
    CHECK(single.connected(1, 2));
    CHECK(!single.connected(0, 2));
    const CommGraph multi = comm_graph(pos, 1.6, true);
    CHECK(multi.connected(0, 2));
    CHECK(multi.components().size() == 1);
}

namespace {

Message sample_message() {
    Message m;
    m.sender = 7;
    m.tick = 123456789ULL;
    m.load = 3.25;
    m.belief = OccupancyGrid(4, 3, 0.25);
    m.belief.at(0, 0) = Cell::Free;
    m.belief.at(1, 2) = Cell::Occupied;
    m.belief.at(3, 1) = Cell::Free;
    TopoNode a{make_node_id(7, 1), NodeKind::GV, {0.5, 0.5}, kNoNode};
    TopoNode b{make_node_id(7, 2), NodeKind::GV, {1.5, 0.5}, kNoNode};
    TopoNode c{make_node_id(7, 3), NodeKind::Coverage, {1.0, 1.5}, a.id};
    TopoNode d{make_node_id(7, 4), NodeKind::Frontier, {2.5, 0.5}, kNoNode};
    m.graph.add_node(a);
    m.graph.add_node(b);
    m.graph.add_node(c);
    m.graph.add_node(d);
    m.graph.add_edge(a.id, b.id, EdgeCertainty::Deterministic);
    m.graph.add_edge(a.id, c.id, EdgeCertainty::Uncertain);
    m.graph.add_edge(b.id, d.id, EdgeCertainty::Deterministic);  // non-GV end: stored uncertain
    return m;
}

}  // namespace

TEST_CASE("messages survive a serialize/deserialize roundtrip") {
    const Message m = sample_message();
    const auto bytes = m.serialize();
    const auto back = Message::deserialize(bytes);
    REQUIRE(back.has_value());
    CHECK(back->sender == 7);
    CHECK(back->tick == 123456789ULL);
    CHECK(back->load == 3.25);
    CHECK(back->belief.width == 4);
    CHECK(back->belief.height == 3);
    CHECK(back->belief.resolution == 0.25);
    CHECK(back->belief.cells == m.belief.cells);
    CHECK(back->graph.equals(m.graph));
    const auto& e = back->graph.edge(make_node_id(7, 1), make_node_id(7, 2));
    CHECK(e.certainty == EdgeCertainty::Deterministic);
    CHECK(e.length == doctest::Approx(1.0));
    const auto& f = back->graph.edge(make_node_id(7, 2), make_node_id(7, 4));
    CHECK(f.certainty == EdgeCertainty::Uncertain);
    CHECK(back->graph.node(make_node_id(7, 3)).dual_of == make_node_id(7, 1));
}

TEST_CASE("corrupt message frames are dropped, not parsed") {
    const auto good = sample_message().serialize();

    CHECK(!Message::deserialize({}).has_value());

    auto bad_magic = good;
    bad_magic[0] ^= 0xFF;
    CHECK(!Message::deserialize(bad_magic).has_value());

    auto bad_version = good;
    bad_version[4] ^= 0xFF;
    CHECK(!Message::deserialize(bad_version).has_value());

    auto truncated = good;
    truncated.pop_back();
    CHECK(!Message::deserialize(truncated).has_value());

    auto trailing = good;
    trailing.push_back(0);
    CHECK(!Message::deserialize(trailing).has_value());

    // Belief payload starts right after the fixed header and grid dims.
    auto bad_cell = good;
    const std::size_t grid_at = 4 + 2 + 4 + 8 + 8 + 4 + 4 + 8;
    bad_cell[grid_at] = 9;
    CHECK(!Message::deserialize(bad_cell).has_value());
}

TEST_CASE("belief fusion fills unknowns and never overwrites knowns") {
    OccupancyGrid dst(3, 1, 1.0);
    dst.at(0, 0) = Cell::Free;
    dst.at(1, 0) = Cell::Occupied;
    OccupancyGrid src(3, 1, 1.0);
    src.at(0, 0) = Cell::Occupied;  // disagrees; dst wins
    src.at(2, 0) = Cell::Free;      // fills dst's unknown
    fuse_belief(dst, src);
    CHECK(dst.at(0, 0) == Cell::Free);
    CHECK(dst.at(1, 0) == Cell::Occupied);
    CHECK(dst.at(2, 0) == Cell::Free);
}

TEST_CASE("an exchange round shares maps within components only") {
    // Robots 0 and 1 talk; robot 2 is out of range.
    const CommGraph cg = comm_graph({{0, 0}, {1, 0}, {10, 0}}, 2.0, true);

    std::vector<OccupancyGrid> beliefs(3, OccupancyGrid(4, 1, 1.0));
    beliefs[0].at(0, 0) = Cell::Free;
    beliefs[1].at(1, 0) = Cell::Occupied;
    beliefs[2].at(2, 0) = Cell::Free;

    HybridTopoGraph g0, g1, g2;
    g0.add_node({make_node_id(0, 1), NodeKind::GV, {0.5, 0.5}, kNoNode});
    g1.add_node({make_node_id(1, 1), NodeKind::GV, {1.5, 0.5}, kNoNode});
    g2.add_node({make_node_id(2, 1), NodeKind::GV, {2.5, 0.5}, kNoNode});

    std::vector<HybridTopoGraph> fused;
    std::vector<double> heard;
    const FuseStats st =
        exchange_and_fuse(cg, 42, beliefs, {&g0, &g1, &g2}, {1.0, 2.0, 3.0}, 0.2,
                          fused, &heard);

    CHECK(st.delivered == 2);
    CHECK(st.dropped == 0);
    CHECK(st.bytes_sent > 0);

    // Beliefs merged pairwise, robot 2 untouched.
    CHECK(beliefs[0].at(1, 0) == Cell::Occupied);
    CHECK(beliefs[1].at(0, 0) == Cell::Free);
    CHECK(beliefs[2].at(0, 0) == Cell::Unknown);

    REQUIRE(fused.size() == 3);
    CHECK(fused[0].has_node(make_node_id(0, 1)));
    CHECK(fused[0].has_node(make_node_id(1, 1)));
    CHECK(!fused[0].has_node(make_node_id(2, 1)));
    CHECK(fused[1].has_node(make_node_id(0, 1)));
    CHECK(fused[2].node_count() == 1);
    CHECK(fused[2].equals(g2));

    REQUIRE(heard.size() == 9);
    CHECK(heard[0 * 3 + 1] == 2.0);
    CHECK(heard[1 * 3 + 0] == 1.0);
    CHECK(heard[0 * 3 + 2] == 0.0);
    CHECK(heard[2 * 3 + 0] == 0.0);
}
