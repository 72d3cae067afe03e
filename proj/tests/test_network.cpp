#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include "generators.hpp"
#include "qnetdet/network.hpp"
#include "qnetdet/network_io.hpp"

using namespace qnetdet;

namespace {

QuantumNetwork net_of(std::size_t d, std::vector<Link> links) { return QuantumNetwork(d, "A", "B", std::move(links)); }

Link link(std::string u, std::string v, std::initializer_list<double> s) {
    return Link{std::move(u), std::move(v), normalize_descending(s)};
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::EmptyInput;
}

// Two-terminal reliability by enumerating every subset of working links.
double brute_reliability(const QuantumNetwork& net) {
    const auto& edges = net.edges();
    const std::size_t m = edges.size();
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        double p = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double q = link_success_probability(edges[i].schmidt);
            p *= (mask & (1u << i)) ? q : 1.0 - q;
        }
        std::set<std::string> seen{net.terminal_a()};
        std::queue<std::string> frontier;
        frontier.push(net.terminal_a());
        while (!frontier.empty()) {
            const auto n = frontier.front();
            frontier.pop();
            for (std::size_t i = 0; i < m; ++i) {
                if (!(mask & (1u << i))) continue;
                const auto& e = edges[i];
                const std::string* other = e.u == n ? &e.v : e.v == n ? &e.u : nullptr;
                if (other && seen.insert(*other).second) frontier.push(*other);
            }
        }
        if (seen.count(net.terminal_b())) total += p;
    }
    return total;
}

// Builds a random series-parallel network between two named nodes and
// returns the vector the deterministic rules assign to it, computed from
// the construction rather than from the reducer.
struct Builder {
    gen::Source& src;
    std::size_t d;
    std::vector<Link> links;
    std::size_t next = 0;
    int budget;

    SchmidtVector build(const std::string& u, const std::string& v, int depth) {
        const auto roll = src.index(0, 9);
        if (depth >= 3 || budget <= 1 || roll < 3) {
            --budget;
            const auto s = src.schmidt(d);
            links.push_back(Link{u, v, s});
            return s;
        }
        if (roll < 7) {
            const std::string mid = "n" + std::to_string(next++);
            const auto a = build(u, mid, depth + 1);
            const auto b = build(mid, v, depth + 1);
            return swap_rule(a, b);
        }
        std::vector<SchmidtVector> parts;
        const std::size_t k = src.index(2, 3);
        for (std::size_t i = 0; i < k && budget > 0; ++i) parts.push_back(build(u, v, depth + 1));
        return parallel_rule(parts);
    }
};

} // namespace

TEST(QuantumNetwork, Construction) {
    const auto net = net_of(2, {link("A", "R", {0.9, 0.1}), link("R", "B", {0.9, 0.1})});
    EXPECT_EQ(net.nodes().size(), 3u);
    EXPECT_EQ(net.edges().size(), 2u);
    EXPECT_EQ(code_of([] { QuantumNetwork(2, "A", "A", {}); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { net_of(3, {link("A", "B", {0.9, 0.1})}); }), ErrorCode::MixedDimensions);
}

TEST(Reduction, SeriesChain) {
    const auto net = net_of(2, {link("A", "R", {0.9, 0.1}), link("R", "B", {0.9, 0.1})});
    const auto v = reduce_series_parallel(net);
    EXPECT_NEAR(v[0], (1.0 + std::sqrt(0.8704)) / 2.0, 1e-12);
    EXPECT_EQ(classify_topology(net), TopologyClass::SimpleSeries);
}

TEST(Reduction, CounterexampleTriangle) {
    const auto net = net_of(2, {link("A", "R", {0.9, 0.1}), link("R", "B", {0.9, 0.1}), link("A", "B", {0.9, 0.1})});
    const auto v = reduce_series_parallel(net);
    const double exact = 9.0 * (25.0 + 4.0 * std::sqrt(34.0)) / 500.0;
    EXPECT_NEAR(v[0], exact, 1e-12);
    EXPECT_NEAR(v[1], 1.0 - exact, 1e-12);
    EXPECT_NEAR(g_concurrence(v), 0.673, 5e-4);
    EXPECT_EQ(classify_topology(net), TopologyClass::SeriesThenParallel);
}

TEST(Reduction, DoubleAndTripleEdges) {
    const auto two = net_of(2, {link("A", "B", {0.9, 0.1}), link("A", "B", {0.9, 0.1})});
    EXPECT_LE(gen::max_abs_diff(reduce_series_parallel(two).vector(), {0.81, 0.19}), 1e-15);
    EXPECT_EQ(classify_topology(two), TopologyClass::SimpleParallel);
    const auto three = net_of(2, {link("A", "B", {0.9, 0.1}), link("B", "A", {0.8, 0.2}), link("A", "B", {0.7, 0.3})});
    EXPECT_EQ(classify_topology(three), TopologyClass::SimpleParallel);
}

TEST(Reduction, ParallelThenSeriesClass) {
    const auto net = net_of(2, {link("A", "R", {0.9, 0.1}), link("A", "R", {0.8, 0.2}), link("R", "B", {0.7, 0.3}),
                                link("R", "B", {0.6, 0.4})});
    EXPECT_EQ(classify_topology(net), TopologyClass::ParallelThenSeries);
    const std::vector<SchmidtVector> left{normalize_descending({0.9, 0.1}), normalize_descending({0.8, 0.2})};
    const std::vector<SchmidtVector> right{normalize_descending({0.7, 0.3}), normalize_descending({0.6, 0.4})};
    const auto want = swap_rule(parallel_rule(left), parallel_rule(right));
    EXPECT_LE(gen::max_abs_diff(reduce_series_parallel(net).vector(), want.vector()), 1e-12);
}

TEST(Reduction, SingleLinkHasEmptyTrace) {
    const auto net = net_of(2, {link("A", "B", {0.9, 0.1})});
    const auto rep = report(net);
    EXPECT_TRUE(rep.trace.empty());
    EXPECT_EQ(rep.topology, TopologyClass::SimpleSeries);
    EXPECT_NEAR(rep.concurrence[1], 0.6, 1e-15);
    EXPECT_NEAR(rep.cep_probability, 0.2, 1e-15);
}

TEST(Reduction, WheatstoneBridgeStalls) {
    const auto net = net_of(2, {link("A", "X", {0.8, 0.2}), link("A", "Y", {0.8, 0.2}), link("X", "Y", {0.8, 0.2}),
                                link("X", "B", {0.8, 0.2}), link("Y", "B", {0.8, 0.2})});
    EXPECT_EQ(classify_topology(net), TopologyClass::NotSeriesParallel);
    try {
        decompose(net);
        FAIL();
    } catch (const NotSeriesParallelError& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSeriesParallel);
        EXPECT_EQ(e.remnant().size(), 5u);
        const auto [u, v] = e.stalled_pair();
        EXPECT_EQ(std::set<std::string>({u, v}), (std::set<std::string>{"X", "Y"}));
        EXPECT_NE(std::string(e.what()).find("X-Y"), std::string::npos);
    }
}

TEST(Reduction, DisconnectedTerminals) {
    const auto net = net_of(2, {link("A", "R", {0.9, 0.1}), link("S", "B", {0.9, 0.1})});
    EXPECT_EQ(code_of([&] { decompose(net); }), ErrorCode::DisconnectedTerminals);
    EXPECT_EQ(code_of([] { decompose(net_of(2, {})); }), ErrorCode::DisconnectedTerminals);
}

TEST(Reduction, IgnoresSelfLoopsDanglingBranchesAndIslands) {
    const auto base = net_of(2, {link("A", "R", {0.9, 0.1}), link("R", "B", {0.8, 0.2})});
    const auto noisy = net_of(2, {link("A", "R", {0.9, 0.1}), link("R", "R", {0.5, 0.5}), link("R", "Z", {0.6, 0.4}),
                                  link("Z", "W", {0.6, 0.4}), link("R", "B", {0.8, 0.2}), link("P", "Q", {0.7, 0.3})});
    EXPECT_LE(gen::max_abs_diff(reduce_series_parallel(noisy).vector(), reduce_series_parallel(base).vector()), 1e-15);
    EXPECT_NEAR(cep_probability(noisy), cep_probability(base), 1e-15);
    const auto rep = report(noisy);
    std::set<std::string> rules;
    for (const auto& s : rep.trace) rules.insert(std::string(to_string(s.rule)));
    EXPECT_TRUE(rules.count("drop_self_loop"));
    EXPECT_TRUE(rules.count("drop_unreachable"));
    EXPECT_TRUE(rules.count("prune"));
}

TEST(Cep, Examples) {
    EXPECT_NEAR(cep_probability(net_of(2, {link("A", "B", {0.9, 0.1})})), 0.2, 1e-15);
    EXPECT_NEAR(cep_probability(net_of(2, {link("A", "R", {0.9, 0.1}), link("R", "B", {0.9, 0.1})})), 0.04, 1e-15);
    EXPECT_NEAR(cep_probability(net_of(2, {link("A", "B", {0.9, 0.1}), link("A", "B", {0.9, 0.1})})), 0.36, 1e-15);
}

TEST(RandomNetworks, MatchConstructionAndReliabilityOracles) {
    gen::Source src(41);
    for (int t = 0; t < 400; ++t) {
        const std::size_t d = src.index(2, 3);
        Builder b{src, d, {}, 0, 10};
        const auto want = b.build("A", "B", 0);
        const auto net = net_of(d, b.links);
        const auto dec = decompose(net);
        EXPECT_LE(gen::max_abs_diff(det_final(net, dec.tree).vector(), want.vector()), 1e-9) << "trial " << t;
        if (net.edges().size() <= 14)
            EXPECT_NEAR(cep_probability(net, dec.tree), brute_reliability(net), 1e-12) << "trial " << t;
        // Contraction order must not matter at these dimensions.
        const auto shuffled = reduce_series_parallel(net, ReductionOptions{static_cast<std::uint64_t>(t)});
        EXPECT_LE(gen::max_abs_diff(shuffled.vector(), want.vector()), 1e-9) << "trial " << t;
        EXPECT_NE(classify_tree(dec.tree), TopologyClass::NotSeriesParallel);
    }
}

TEST(RandomNetworks, LeafCountMatchesEdges) {
    gen::Source src(42);
    for (int t = 0; t < 100; ++t) {
        Builder b{src, 2, {}, 0, 12};
        b.build("A", "B", 0);
        const auto net = net_of(2, b.links);
        const auto tree = decompose(net).tree;
        const auto leaves = evaluate<std::size_t>(
            tree, [](std::size_t) { return std::size_t{1}; }, [](std::size_t a, std::size_t c) { return a + c; },
            [](const std::vector<std::size_t>& ps) {
                std::size_t s = 0;
                for (auto p : ps) s += p;
                return s;
            });
        EXPECT_EQ(leaves, net.edges().size());
    }
}

TEST(NetworkJson, ParsesTriangle) {
    const auto net = parse_network(R"({"dimension": 2, "terminals": ["A", "B"], "nodes": ["A", "R", "B"],
        "edges": [{"u": "A", "v": "R", "schmidt": [0.9, 0.1]},
                  {"u": "R", "v": "B", "schmidt": [0.1, 0.9]},
                  {"u": "A", "v": "B", "schmidt": [0.9, 0.1]}]})");
    EXPECT_EQ(net.edges().size(), 3u);
    EXPECT_EQ(net.edges()[1].schmidt.vector(), (std::vector<double>{0.9, 0.1}));
}

TEST(NetworkJson, ErrorCodes) {
    const std::string edges = R"("edges": [{"u": "A", "v": "B", "schmidt": [0.9, 0.1]}])";
    EXPECT_EQ(code_of([] { parse_network("{not json"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { parse_network("[]"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { parse_network(R"({"dimension": 2, )" + edges + "}"); }), ErrorCode::MissingTerminal);
    EXPECT_EQ(code_of([&] { parse_network(R"({"dimension": 2, "terminals": ["A", "A"], )" + edges + "}"); }),
              ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { parse_network(R"({"dimension": 0, "terminals": ["A", "B"], )" + edges + "}"); }),
              ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { parse_network(R"({"dimension": 3, "terminals": ["A", "B"], )" + edges + "}"); }),
              ErrorCode::MixedDimensions);
    EXPECT_EQ(code_of([] {
                  parse_network(R"({"dimension": 2, "terminals": ["A", "B"], "nodes": ["A", "B"],
                      "edges": [{"u": "A", "v": "Q", "schmidt": [0.9, 0.1]}]})");
              }),
              ErrorCode::DanglingEndpoint);
    EXPECT_EQ(code_of([&] {
                  parse_network(R"({"dimension": 2, "terminals": ["A", "B"], "nodes": ["A"], )" + edges + "}");
              }),
              ErrorCode::MissingTerminal);
    EXPECT_EQ(code_of([] {
                  parse_network(R"({"dimension": 2, "terminals": ["A", "B"],
                      "edges": [{"u": "A", "v": "B", "schmidt": [0.9, 0.2]}]})");
              }),
              ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] {
                  parse_network(R"({"dimension": 2, "terminals": ["A", "B"],
                      "edges": [{"u": "A", "v": "B", "schmidt": [1.1, -0.1]}]})");
              }),
              ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] {
                  parse_network(R"({"dimension": 2, "terminals": ["A", "B"], "edges": [{"u": "A", "v": "B"}]})");
              }),
              ErrorCode::SchemaError);
}

TEST(NetworkJson, ReportSerialization) {
    const auto net = net_of(2, {link("A", "R", {0.9, 0.1}), link("R", "B", {0.9, 0.1}), link("A", "B", {0.9, 0.1})});
    auto j = to_json(report(net));
    round_numbers(j);
    EXPECT_EQ(j["topology"], "SeriesThenParallel");
    EXPECT_EQ(j["concurrence"]["C_2"].get<double>(), 0.672983963086);
    EXPECT_EQ(j["trace"].size(), 2u);
    EXPECT_EQ(j["trace"][1]["merged"], 2);
}

TEST(Rounding, TwelveSignificantDigits) {
    EXPECT_EQ(round_significant(1.0 / 3.0), 0.333333333333);
    EXPECT_EQ(round_significant(123456.7890123456), 123456.789012);
    EXPECT_EQ(round_significant(0.0), 0.0);
    EXPECT_TRUE(std::isnan(round_significant(NAN)));
}
