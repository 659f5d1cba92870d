#include "doctest.h"
#include "explore/partition.hpp"
#include "test_support.hpp"

#include <cmath>
#include <set>

using namespace explore;

namespace {

TopoNode gv(NodeId id, double x, double y) {
    TopoNode n;
    n.id = id;
    n.kind = NodeKind::GV;
    n.pos = {x, y};
    return n;
}

// Five nodes in a line, unit edges.
HybridTopoGraph path5() {
    HybridTopoGraph g;
    for (int i = 0; i < 5; ++i) g.add_node(gv(i, static_cast<double>(i), 0.0));
    for (int i = 0; i < 4; ++i) g.add_edge(i, i + 1, EdgeCertainty::Deterministic);
    return g;
}

// Hub 0 with three unit-length leaves.
HybridTopoGraph star4(EdgeCertainty cert) {
    HybridTopoGraph g;
    g.add_node(gv(0, 0.0, 0.0));
    g.add_node(gv(1, 1.0, 0.0));
    g.add_node(gv(2, 0.0, 1.0));
    g.add_node(gv(3, -1.0, 0.0));
    for (int i = 1; i <= 3; ++i) g.add_edge(0, i, cert);
    return g;
}

PowerPointSet centers_of(std::vector<NodeId> ids) {
    std::vector<PowerPointSet::Center> cs;
    for (std::size_t i = 0; i < ids.size(); ++i)
        cs.push_back({static_cast<int>(i), ids[i]});
    return PowerPointSet(cs);
}

}  // namespace

TEST_CASE("unweighted path splits at the middle, tie to the lower center index") {
    const HybridTopoGraph g = path5();
    const PartitionResult res = graph_voronoi(g, centers_of({0, 4}), LoadMetric::Plain);
    CHECK(res.label.at(0) == 0);
    CHECK(res.label.at(1) == 0);
    CHECK(res.label.at(2) == 0);  // equidistant: first center wins
    CHECK(res.label.at(3) == 1);
    CHECK(res.label.at(4) == 1);
    CHECK(res.load[0] == 2.0);
    CHECK(res.load[1] == 1.0);
    CHECK(res.dist.at(2) == 2.0);
    CHECK(res.parent.at(2) == 1);
    CHECK(res.parent.at(0) == kNoNode);
    CHECK(res.members[0] == std::vector<NodeId>{0, 1, 2});
    CHECK(res.members[1] == std::vector<NodeId>{3, 4});
    CHECK(res.orphans.empty());
}

TEST_CASE("a positive weight toward the heavier side steals the boundary node") {
    const HybridTopoGraph g = path5();
    PowerPointSet pp = centers_of({0, 4});
    pp.set_weight(1, 0, 0.5);  // center 1 discounts its distances against 0
    const PartitionResult res = graph_voronoi(g, pp, LoadMetric::Plain);
    CHECK(res.label.at(2) == 1);
    CHECK(res.load[0] == 1.0);
    CHECK(res.load[1] == 2.0);
    CHECK(res.dist.at(2) == 2.0);  // plain distance, not the discounted key
    CHECK(res.parent.at(2) == 3);
}

TEST_CASE("star loads: plain counts edges, online only uncertain ones") {
    const PartitionResult det =
        graph_voronoi(star4(EdgeCertainty::Deterministic), centers_of({0}),
                      LoadMetric::Online);
    CHECK(det.load[0] == 0.0);
    const PartitionResult plain =
        graph_voronoi(star4(EdgeCertainty::Deterministic), centers_of({0}),
                      LoadMetric::Plain);
    CHECK(plain.load[0] == 3.0);
    const PartitionResult unc = graph_voronoi(star4(EdgeCertainty::Uncertain),
                                              centers_of({0}), LoadMetric::Online);
    CHECK(unc.load[0] == 3.0);
}

TEST_CASE("load_metric recomputes the stored tree sum") {
    const PartitionResult res =
        graph_voronoi(star4(EdgeCertainty::Deterministic), centers_of({0}),
                      LoadMetric::Plain);
    CHECK(load_metric(res, 0) == res.load[0]);
    CHECK(res.load[0] == res.load_incremental[0]);
}

TEST_CASE("dropping a leaf can only shed load") {
    const HybridTopoGraph g = star4(EdgeCertainty::Deterministic);
    const PartitionResult res = graph_voronoi(g, centers_of({0}), LoadMetric::Plain);
    for (NodeId leaf = 1; leaf <= 3; ++leaf)
        CHECK(leaf_removal_decreases(res, 0, leaf));
    CHECK_THROWS(leaf_removal_decreases(res, 0, 0));   // center is not a leaf
    CHECK_THROWS(leaf_removal_decreases(res, 0, 99));  // not a member
}

TEST_CASE("tour bound walks the tree depth-first and stays under twice the load") {
    const HybridTopoGraph g = star4(EdgeCertainty::Deterministic);
    const PartitionResult res = graph_voronoi(g, centers_of({0}), LoadMetric::Plain);
    const TourBound tb = tour_upper_bound(res, 0);
    CHECK(tb.order == std::vector<NodeId>{0, 1, 2, 3});
    CHECK(tb.length == doctest::Approx(5.0));
    CHECK(tb.length <= 2.0 * res.load[0] + 1e-9);
}

TEST_CASE("tour bound on a path is the one-way walk") {
    const HybridTopoGraph g = path5();
    const PartitionResult res = graph_voronoi(g, centers_of({0}), LoadMetric::Plain);
    const TourBound tb = tour_upper_bound(res, 0);
    CHECK(tb.order == std::vector<NodeId>{0, 1, 2, 3, 4});
    CHECK(tb.length == doctest::Approx(4.0));
}

TEST_CASE("unreachable nodes are orphans") {
    HybridTopoGraph g = path5();
    g.add_node(gv(9, 50.0, 50.0));
    const PartitionResult res = graph_voronoi(g, centers_of({0, 4}), LoadMetric::Plain);
    CHECK(res.orphans == std::vector<NodeId>{9});
    CHECK(res.label.count(9) == 0);
    std::size_t total = res.orphans.size();
    for (const auto& m : res.members) total += m.size();
    CHECK(total == g.node_count());
}

TEST_CASE("duplicate center nodes: the first index keeps the region") {
    const HybridTopoGraph g = path5();
    const PartitionResult res = graph_voronoi(g, centers_of({2, 2}), LoadMetric::Plain);
    CHECK(res.members[0].size() == 5);
    CHECK(res.members[1].empty());
    CHECK(res.load[1] == 0.0);
}

TEST_CASE("bad center arguments throw") {
    const HybridTopoGraph g = path5();
    CHECK_THROWS(graph_voronoi(g, PowerPointSet{}, LoadMetric::Plain));
    CHECK_THROWS(graph_voronoi(g, centers_of({77}), LoadMetric::Plain));
}

TEST_CASE("feedback term adds scaled remaining tour") {
    CHECK(feedback_load(10.0, 4.0, 1.0) == 14.0);
    CHECK(feedback_load(10.0, 4.0, 0.0) == 10.0);
    CHECK(feedback_load(1.0, 2.0, 0.5) == 2.0);
}

TEST_CASE("random graphs agree with the independent membership oracle") {
    Rng rng(1234);
    int done = 0;
    while (done < 40) {
        const int n = 6 + static_cast<int>(rng.next_below(15));
        const HybridTopoGraph g = test::random_connected_graph(rng, n, 0.15, true);
        const int m = 2 + static_cast<int>(rng.next_below(3));
        std::set<NodeId> cset;
        while (static_cast<int>(cset.size()) < m)
            cset.insert(make_node_id(0, static_cast<int>(rng.next_below(n))));
        std::vector<NodeId> centers(cset.begin(), cset.end());
        std::vector<double> potential;
        for (int i = 0; i < m; ++i) potential.push_back(rng.uniform(-5e-4, 5e-4));

        // Potentials must stay feasible against center-to-center distances.
        const auto fw = test::fw_distances(g);
        bool feasible = true;
        for (int i = 0; i < m && feasible; ++i)
            for (int j = i + 1; j < m && feasible; ++j)
                if (fw.at(centers[i]).at(centers[j]) <= 2e-3) feasible = false;
        if (!feasible) continue;

        const test::OracleRegions oracle =
            test::region_oracle(g, centers, potential, LoadMetric::Online);
        if (oracle.min_win_gap < 1e-9) continue;  // reject degenerate near-ties
        ++done;

        const PowerPointSet pp = test::potential_weights(
            [&] {
                std::vector<PowerPointSet::Center> cs;
                for (int i = 0; i < m; ++i) cs.push_back({i, centers[i]});
                return cs;
            }(),
            potential);
        const PartitionResult res = graph_voronoi(g, pp, LoadMetric::Online);

        REQUIRE(res.label == oracle.label);
        REQUIRE(res.members == oracle.members);
        REQUIRE(res.orphans == oracle.orphans);
        for (int i = 0; i < m; ++i) {
            CHECK(res.load[i] == oracle.load[i]);  // bitwise: same tree, same order
            CHECK(res.load[i] == doctest::Approx(res.load_incremental[i]).epsilon(1e-9));
        }
        for (const auto& [v, p] : oracle.parent)
            CHECK(res.parent.at(v) == p);
    }
}

TEST_CASE("tour bound property holds on random regions") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 4 + static_cast<int>(rng.next_below(12));
        const HybridTopoGraph g = test::random_connected_graph(rng, n, 0.2, false);
        const PartitionResult res =
            graph_voronoi(g, centers_of({make_node_id(0, 0)}), LoadMetric::Plain);
        const TourBound tb = tour_upper_bound(res, 0);
        CHECK(tb.length <= 2.0 * res.load[0] + 1e-9);
        CHECK(tb.order.size() == res.members[0].size());
        CHECK(tb.order.front() == make_node_id(0, 0));
        std::set<NodeId> seen(tb.order.begin(), tb.order.end());
        CHECK(seen.size() == tb.order.size());
    }
}

TEST_CASE("every leaf removal lowers the load on random regions") {
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 5 + static_cast<int>(rng.next_below(10));
        const HybridTopoGraph g = test::random_connected_graph(rng, n, 0.25, true);
        const PartitionResult res =
            graph_voronoi(g, centers_of({make_node_id(0, 1)}), LoadMetric::Plain);
        std::set<NodeId> parents;
        for (const TreeEdgeRec& te : res.tree[0]) parents.insert(te.parent);
        for (NodeId v : res.members[0]) {
            if (v == make_node_id(0, 1) || parents.count(v)) continue;
            CHECK(leaf_removal_decreases(res, 0, v));
        }
    }
}
