#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "explore/episode.hpp"

namespace fs = std::filesystem;
using namespace explore;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

int run_explore(const std::string& scenario_path, const std::string& out_dir,
                const std::string& variant_str, std::uint64_t seed, int repeat,
                SimParams p) {
    const auto variant = variant_from_name(variant_str);
    if (!variant) {
        std::cerr << "unknown variant: " << variant_str << "\n";
        return 2;
    }
    Scenario sc;
    try {
        sc = load_scenario(scenario_path);
    } catch (const std::exception& e) {
        std::cerr << "bad scenario: " << e.what() << "\n";
        return 2;
    }

    fs::create_directories(out_dir);
    std::ofstream summary(fs::path(out_dir) / "summary.csv");
    summary << "scenario,variant,seed,robots,exploration_time_s,coverage,collisions,"
               "success,tour_avg_m,tour_max_m,tour_min_m,tour_std_m,tour_max_min_m";
    for (std::size_t i = 0; i < sc.starts.size(); ++i)
        summary << ",tour_robot_" << i << "_m";
    summary << "\n";

    for (int rep = 0; rep < repeat; ++rep) {
        p.seed = seed + static_cast<std::uint64_t>(rep);
        const EpisodeResult r = run_episode(sc, p, *variant);

        double avg = 0.0, mx = 0.0, mn = 0.0, sd = 0.0;
        if (!r.tour_lengths.empty()) {
            mx = mn = r.tour_lengths[0];
            for (double v : r.tour_lengths) {
                avg += v;
                mx = std::max(mx, v);
                mn = std::min(mn, v);
            }
            avg /= static_cast<double>(r.tour_lengths.size());
            for (double v : r.tour_lengths) sd += (v - avg) * (v - avg);
            sd = std::sqrt(sd / static_cast<double>(r.tour_lengths.size()));
        }
        summary << sc.name << ',' << variant_name(*variant) << ',' << p.seed << ','
                << sc.starts.size() << ',' << fmt(r.exploration_time) << ','
                << fmt(r.coverage) << ',' << r.collisions << ','
                << (r.outcome == Outcome::Success ? 1 : 0) << ',' << fmt(avg) << ','
                << fmt(mx) << ',' << fmt(mn) << ',' << fmt(sd) << ',' << fmt(mx - mn);
        for (double v : r.tour_lengths) summary << ',' << fmt(v);
        summary << "\n";

        std::ofstream cov(fs::path(out_dir) / "coverage.csv");
        cov << "t_s,known_m2\n";
        for (const auto& [tt, area] : r.coverage_curve)
            cov << fmt(tt) << ',' << fmt(area) << "\n";

        std::ofstream bal(fs::path(out_dir) / "balance.csv");
        bal << "cycle,iter,max_load,min_load,spread\n";
        for (const BalanceLogRow& row : r.balance_log)
            bal << row.cycle << ',' << row.iter << ',' << fmt(row.max_load) << ','
                << fmt(row.min_load) << ',' << fmt(row.spread) << "\n";

        std::ofstream traj(fs::path(out_dir) / "trajectory.txt");
        for (std::size_t i = 0; i < r.trajectories.size(); ++i)
            for (std::size_t k = 0; k < r.trajectories[i].size(); ++k)
                traj << i << ' ' << k << ' ' << fmt(r.trajectories[i][k].x) << ' '
                     << fmt(r.trajectories[i][k].y) << "\n";

        std::ofstream gf(fs::path(out_dir) / "graph_final.txt");
        gf << r.final_graph.to_text();

        std::ofstream ev(fs::path(out_dir) / "events.jsonl");
        for (const std::string& line : r.events) ev << line << "\n";

        const char* outcome = r.outcome == Outcome::Success
                                  ? "success"
                                  : r.outcome == Outcome::Timeout ? "timeout" : "trapped";
        std::cout << sc.name << ' ' << variant_name(*variant) << " seed=" << p.seed
                  << " time=" << fmt(r.exploration_time) << " coverage=" << fmt(r.coverage)
                  << " collisions=" << r.collisions << ' ' << outcome << "\n";
    }
    return 0;
}

int run_partition(const std::string& graph_path, const std::vector<long long>& center_ids,
                  const std::vector<std::string>& weight_specs, const std::string& metric_str,
                  bool do_balance, double gamma, double b_lambda, int max_iters,
                  const std::string& trace_csv) {
    LoadMetric metric;
    if (metric_str == "plain")
        metric = LoadMetric::Plain;
    else if (metric_str == "online")
        metric = LoadMetric::Online;
    else {
        std::cerr << "unknown metric: " << metric_str << "\n";
        return 2;
    }

    HybridTopoGraph g;
    try {
        std::ifstream in(graph_path);
        if (!in) throw std::runtime_error("cannot open " + graph_path);
        std::stringstream ss;
        ss << in.rdbuf();
        g = HybridTopoGraph::from_text(ss.str());
    } catch (const std::exception& e) {
        std::cerr << "bad graph: " << e.what() << "\n";
        return 2;
    }

    std::vector<PowerPointSet::Center> centers;
    for (std::size_t i = 0; i < center_ids.size(); ++i) {
        const NodeId id = static_cast<NodeId>(center_ids[i]);
        if (!g.has_node(id)) {
            std::cerr << "center node " << id << " not in graph\n";
            return 2;
        }
        centers.push_back({static_cast<int>(i), id});
    }
    if (centers.empty()) {
        std::cerr << "no centers given\n";
        return 2;
    }
    PowerPointSet pp(centers);
    for (const std::string& spec : weight_specs) {
        int i = -1, j = -1;
        double v = 0.0;
        if (std::sscanf(spec.c_str(), "%d:%d:%lf", &i, &j, &v) != 3 || i < 0 ||
            j < 0 || i >= pp.size() || j >= pp.size() || i == j) {
            std::cerr << "bad weight spec: " << spec << "\n";
            return 2;
        }
        pp.set_weight(i, j, v);
    }

    PartitionResult res;
    if (do_balance) {
        BalanceConfig cfg;
        cfg.gamma = gamma;
        cfg.b_lambda = b_lambda;
        cfg.max_iters = max_iters;
        std::vector<std::pair<int, int>> pairs;
        for (int a = 0; a < pp.size(); ++a)
            for (int b = a + 1; b < pp.size(); ++b) pairs.emplace_back(a, b);
        const BalanceOutcome bo = balance(g, pp, cfg, metric, pairs);
        std::cout << "converged " << (bo.converged ? 1 : 0) << " iters " << bo.iterations
                  << "\n";
        for (int a = 0; a < pp.size(); ++a)
            for (int b = a + 1; b < pp.size(); ++b)
                std::cout << "weight " << a << ' ' << b << ' '
                          << fmt(bo.weights.weight(a, b)) << "\n";
        if (!trace_csv.empty()) {
            std::ofstream tr(trace_csv);
            tr << "iter,max_load,min_load,spread\n";
            for (std::size_t k = 0; k < bo.trace.size(); ++k)
                tr << k << ',' << fmt(bo.trace[k].max_load) << ','
                   << fmt(bo.trace[k].min_load) << ',' << fmt(bo.trace[k].spread) << "\n";
        }
        res = bo.partition;
    } else {
        res = graph_voronoi(g, pp, metric);
    }

    std::cout << "metric " << (metric == LoadMetric::Plain ? "plain" : "online") << "\n";
    for (std::size_t k = 0; k < res.centers.size(); ++k)
        std::cout << "center " << k << " node " << res.centers[k].node << " load "
                  << fmt(res.load[k]) << " members " << res.members[k].size() << "\n";
    for (const auto& [id, lab] : res.label)
        std::cout << "label " << id << ' ' << lab << ' ' << fmt(res.dist.at(id)) << "\n";
    std::cout << "orphans " << res.orphans.size();
    for (NodeId id : res.orphans) std::cout << ' ' << id;
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-robot exploration with balanced graph partitioning"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", variant_str = "full";
    std::uint64_t seed = 1;
    int repeat = 1;
    SimParams p;
    std::string metric_str_ep = "online";

    CLI::App* ex = app.add_subcommand("explore", "run an exploration episode");
    ex->add_option("--scenario", scenario_path, "scenario file")->required();
    ex->add_option("--out", out_dir, "output directory");
    ex->add_option("--variant", variant_str, "full|noweight|posvor|nofb");
    ex->add_option("--seed", seed, "base rng seed");
    ex->add_option("--repeat", repeat, "runs with seeds seed..seed+n-1");
    ex->add_option("--max-time", p.max_time, "simulated seconds cap");
    ex->add_option("--coverage-target", p.coverage_target, "stop at this fraction");
    ex->add_option("--gamma", p.gamma, "weight step size");
    ex->add_option("--b-lambda", p.b_lambda, "tolerated load gap");
    ex->add_option("--gamma-d", p.gamma_d, "tour feedback gain");
    ex->add_option("--beta-c", p.beta_c, "target cost weight");
    ex->add_option("--beta-s", p.beta_s, "target stability bonus");
    ex->add_option("--pi-max", p.pi_max, "targets per tour");
    ex->add_option("--v-max", p.v_max, "linear speed cap m/s");
    ex->add_option("--sensor-range", p.sensor_range, "lidar range m");
    ex->add_option("--comm-range", p.comm_range, "radio range m");
    ex->add_option("--safe-radius", p.safe_radius, "obstacle inflation m");
    ex->add_option("--dt", p.dt, "tick length s");
    ex->add_option("--metric", metric_str_ep, "plain|online load metric");

    std::string graph_path, metric_str = "plain", trace_csv;
    std::vector<long long> center_ids;
    std::vector<std::string> weight_specs;
    bool do_balance = false;
    double gamma = 0.5, b_lambda = 10.0;
    int max_iters = 200;

    CLI::App* pa = app.add_subcommand("partition", "partition a graph file");
    pa->add_option("--graph", graph_path, "graph text file")->required();
    pa->add_option("--centers", center_ids, "center node ids")->required();
    pa->add_option("--weight", weight_specs, "i:j:v initial weight (repeatable)");
    pa->add_option("--metric", metric_str, "plain|online");
    pa->add_flag("--balance", do_balance, "run the load balancing loop");
    pa->add_option("--gamma", gamma, "weight step size");
    pa->add_option("--b-lambda", b_lambda, "tolerated load gap");
    pa->add_option("--max-iters", max_iters, "balance iteration cap");
    pa->add_option("--trace-csv", trace_csv, "write per-iteration loads here");

    CLI11_PARSE(app, argc, argv);

    if (ex->parsed()) {
        if (metric_str_ep == "plain")
            p.metric = LoadMetric::Plain;
        else if (metric_str_ep == "online")
            p.metric = LoadMetric::Online;
        else {
            std::cerr << "unknown metric: " << metric_str_ep << "\n";
            return 2;
        }
        return run_explore(scenario_path, out_dir, variant_str, seed, repeat, p);
    }
    return run_partition(graph_path, center_ids, weight_specs, metric_str, do_balance,
                         gamma, b_lambda, max_iters, trace_csv);
}
