#pragma once

// Quantum-network data model and two-terminal series-parallel reduction.
//
// Reduction produces a decomposition tree (leaves are the original links,
// inner nodes are series or parallel compositions). The tree is then
// evaluated with whatever algebra is needed: the deterministic rules for
// DET, two-terminal reliability for CEP, or a per-outcome override when an
// ensemble is propagated through the network.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qnetdet/errors.hpp"
#include "qnetdet/rules.hpp"
#include "qnetdet/schmidt.hpp"

namespace qnetdet {

struct Link {
    std::string u;
    std::string v;
    SchmidtVector schmidt;
};

class QuantumNetwork {
public:
    QuantumNetwork(std::size_t dimension, std::string a, std::string b, std::vector<Link> edges)
        : dimension_(dimension), a_(std::move(a)), b_(std::move(b)), edges_(std::move(edges)) {
        if (a_ == b_) throw Error(ErrorCode::SchemaError, "terminals must differ");
        if (dimension_ < 1) throw Error(ErrorCode::SchemaError, "dimension must be >= 1");
        for (const auto& e : edges_)
            if (e.schmidt.size() != dimension_)
                throw Error(ErrorCode::MixedDimensions,
                            "link " + e.u + "-" + e.v + " has " + std::to_string(e.schmidt.size()) +
                                " Schmidt numbers, network dimension is " +
                                std::to_string(dimension_));
        nodes_.insert(a_);
        nodes_.insert(b_);
        for (const auto& e : edges_) {
            nodes_.insert(e.u);
            nodes_.insert(e.v);
        }
    }

    std::size_t dimension() const noexcept { return dimension_; }
    const std::string& terminal_a() const noexcept { return a_; }
    const std::string& terminal_b() const noexcept { return b_; }
    const std::vector<Link>& edges() const noexcept { return edges_; }
    const std::set<std::string>& nodes() const noexcept { return nodes_; }

private:
    std::size_t dimension_;
    std::string a_;
    std::string b_;
    std::vector<Link> edges_;
    std::set<std::string> nodes_;
};

enum class TopologyClass {
    SimpleSeries,
    SimpleParallel,
    ParallelThenSeries,
    SeriesThenParallel,
    SeriesParallel,
    NotSeriesParallel,
};

inline std::string_view to_string(TopologyClass t) {
    switch (t) {
    case TopologyClass::SimpleSeries: return "SimpleSeries";
    case TopologyClass::SimpleParallel: return "SimpleParallel";
    case TopologyClass::ParallelThenSeries: return "ParallelThenSeries";
    case TopologyClass::SeriesThenParallel: return "SeriesThenParallel";
    case TopologyClass::SeriesParallel: return "SeriesParallel";
    case TopologyClass::NotSeriesParallel: return "NotSeriesParallel";
    }
    return "Unknown";
}

/// One applied reduction step, kept for audit.
struct ReductionStep {
    enum class Rule { DropSelfLoop, DropUnreachable, Parallel, Prune, Series };
    Rule rule;
    std::string node;                 // contracted or pruned node (series / prune)
    std::string u;                    // endpoints of the resulting or merged edge
    std::string v;
    std::size_t merged = 0;           // number of edges merged (parallel)
};

inline std::string_view to_string(ReductionStep::Rule r) {
    switch (r) {
    case ReductionStep::Rule::DropSelfLoop: return "drop_self_loop";
    case ReductionStep::Rule::DropUnreachable: return "drop_unreachable";
    case ReductionStep::Rule::Parallel: return "parallel";
    case ReductionStep::Rule::Prune: return "prune";
    case ReductionStep::Rule::Series: return "series";
    }
    return "unknown";
}

struct SpNode {
    enum class Kind { Leaf, Series, Parallel };
    Kind kind;
    std::size_t edge = 0;             // leaf: index into QuantumNetwork::edges()
    std::vector<std::size_t> children; // series: exactly two, left grouping order
};

struct SpTree {
    std::vector<SpNode> nodes;
    std::size_t root = 0;
};

struct Decomposition {
    SpTree tree;
    std::vector<ReductionStep> trace;
};

/// Raised when reduction stalls; carries the remnant multigraph.
class NotSeriesParallelError : public Error {
public:
    NotSeriesParallelError(const std::string& what, std::vector<std::pair<std::string, std::string>> remnant,
                           std::pair<std::string, std::string> stalled_pair)
        : Error(ErrorCode::NotSeriesParallel, what), remnant_(std::move(remnant)),
          stalled_pair_(std::move(stalled_pair)) {}

    const std::vector<std::pair<std::string, std::string>>& remnant() const noexcept { return remnant_; }
    const std::pair<std::string, std::string>& stalled_pair() const noexcept { return stalled_pair_; }

private:
    std::vector<std::pair<std::string, std::string>> remnant_;
    std::pair<std::string, std::string> stalled_pair_;
};

struct ReductionOptions {
    /// When set, eligible series nodes are contracted in a seeded random
    /// order instead of breadth-first order from terminal A.
    std::optional<std::uint64_t> shuffle_seed;
};

namespace detail {

struct WorkEdge {
    std::string u;
    std::string v;
    std::size_t tree_node;
    bool alive = true;
};

class Reducer {
public:
    Reducer(const QuantumNetwork& net, ReductionOptions opts) : net_(net), opts_(opts) {
        for (std::size_t i = 0; i < net.edges().size(); ++i) {
            tree_.nodes.push_back(SpNode{SpNode::Kind::Leaf, i, {}});
            edges_.push_back(WorkEdge{net.edges()[i].u, net.edges()[i].v, i});
        }
        if (opts_.shuffle_seed) rng_.seed(*opts_.shuffle_seed);
    }

    Decomposition run() {
        drop_self_loops();
        drop_unreachable();
        while (true) {
            bool changed = merge_parallel();
            changed |= prune_dangling();
            if (done()) break;
            changed |= contract_series();
            if (done()) break;
            if (!changed) stall();
        }
        for (const auto& e : edges_)
            if (e.alive) tree_.root = e.tree_node;
        return Decomposition{std::move(tree_), std::move(trace_)};
    }

private:
    bool is_terminal(const std::string& n) const {
        return n == net_.terminal_a() || n == net_.terminal_b();
    }

    std::size_t alive_count() const {
        return static_cast<std::size_t>(
            std::count_if(edges_.begin(), edges_.end(), [](const WorkEdge& e) { return e.alive; }));
    }

    bool done() const {
        if (alive_count() != 1) return false;
        for (const auto& e : edges_)
            if (e.alive) return is_terminal(e.u) && is_terminal(e.v);
        return false;
    }

    std::map<std::string, std::vector<std::size_t>> incidence() const {
        std::map<std::string, std::vector<std::size_t>> inc;
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            if (!edges_[i].alive) continue;
            inc[edges_[i].u].push_back(i);
            inc[edges_[i].v].push_back(i);
        }
        return inc;
    }

    static const std::string& other_end(const WorkEdge& e, const std::string& n) {
        return e.u == n ? e.v : e.u;
    }

    void drop_self_loops() {
        for (auto& e : edges_)
            if (e.alive && e.u == e.v) {
                e.alive = false;
                trace_.push_back({ReductionStep::Rule::DropSelfLoop, e.u, e.u, e.u, 0});
            }
    }

    std::map<std::string, std::size_t> bfs_rank() const {
        const auto inc = incidence();
        std::map<std::string, std::size_t> rank;
        std::queue<std::string> q;
        rank[net_.terminal_a()] = 0;
        q.push(net_.terminal_a());
        while (!q.empty()) {
            const std::string n = q.front();
            q.pop();
            auto it = inc.find(n);
            if (it == inc.end()) continue;
            for (std::size_t ei : it->second) {
                const std::string& m = other_end(edges_[ei], n);
                if (!rank.count(m)) {
                    rank[m] = rank.size();
                    q.push(m);
                }
            }
        }
        return rank;
    }

    void drop_unreachable() {
        const auto rank = bfs_rank();
        if (!rank.count(net_.terminal_b()))
            throw Error(ErrorCode::DisconnectedTerminals,
                        "no path between " + net_.terminal_a() + " and " + net_.terminal_b());
        for (auto& e : edges_)
            if (e.alive && !rank.count(e.u)) {
                e.alive = false;
                trace_.push_back({ReductionStep::Rule::DropUnreachable, "", e.u, e.v, 0});
            }
    }

    std::size_t add_node(SpNode node) {
        tree_.nodes.push_back(std::move(node));
        return tree_.nodes.size() - 1;
    }

    bool merge_parallel() {
        std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            if (!edges_[i].alive) continue;
            auto key = std::minmax(edges_[i].u, edges_[i].v);
            groups[{key.first, key.second}].push_back(i);
        }
        bool changed = false;
        // process groups in order of their first edge so output is stable
        std::vector<std::vector<std::size_t>> ordered;
        for (auto& [key, ids] : groups)
            if (ids.size() > 1) ordered.push_back(ids);
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& x, const auto& y) { return x.front() < y.front(); });
        for (const auto& ids : ordered) {
            SpNode node{SpNode::Kind::Parallel, 0, {}};
            for (std::size_t i : ids) {
                node.children.push_back(edges_[i].tree_node);
                edges_[i].alive = false;
            }
            const WorkEdge& first = edges_[ids.front()];
            const std::size_t tn = add_node(std::move(node));
            trace_.push_back({ReductionStep::Rule::Parallel, "", first.u, first.v, ids.size()});
            edges_.push_back(WorkEdge{first.u, first.v, tn});
            changed = true;
        }
        return changed;
    }

    bool prune_dangling() {
        bool changed = false;
        bool again = true;
        while (again) {
            again = false;
            const auto inc = incidence();
            for (const auto& [n, ids] : inc) {
                if (is_terminal(n) || ids.size() != 1) continue;
                WorkEdge& e = edges_[ids.front()];
                if (!e.alive) continue;
                e.alive = false;
                trace_.push_back({ReductionStep::Rule::Prune, n, e.u, e.v, 0});
                again = changed = true;
            }
        }
        return changed;
    }

    bool contract_series() {
        const auto rank = bfs_rank();
        std::vector<std::string> order;
        for (const auto& [n, r] : rank)
            if (!is_terminal(n)) order.push_back(n);
        std::sort(order.begin(), order.end(),
                  [&](const std::string& x, const std::string& y) { return rank.at(x) < rank.at(y); });
        if (opts_.shuffle_seed) std::shuffle(order.begin(), order.end(), rng_);

        bool changed = false;
        for (const auto& n : order) {
            std::vector<std::size_t> ids;
            for (std::size_t i = 0; i < edges_.size(); ++i)
                if (edges_[i].alive && (edges_[i].u == n || edges_[i].v == n)) ids.push_back(i);
            if (ids.size() != 2) continue;
            const std::string left_end = other_end(edges_[ids[0]], n);
            const std::string right_end = other_end(edges_[ids[1]], n);
            if (left_end == right_end) continue;
            // the edge toward the node discovered earlier from A goes left
            std::size_t first = ids[0], second = ids[1];
            std::string u = left_end, w = right_end;
            if (rank.at(right_end) < rank.at(left_end)) {
                std::swap(first, second);
                std::swap(u, w);
            }
            const std::size_t tn = add_node(
                SpNode{SpNode::Kind::Series, 0, {edges_[first].tree_node, edges_[second].tree_node}});
            edges_[first].alive = edges_[second].alive = false;
            edges_.push_back(WorkEdge{u, w, tn});
            trace_.push_back({ReductionStep::Rule::Series, n, u, w, 2});
            changed = true;
        }
        return changed;
    }

    [[noreturn]] void stall() const {
        std::vector<std::pair<std::string, std::string>> remnant;
        for (const auto& e : edges_)
            if (e.alive) remnant.emplace_back(e.u, e.v);
        std::pair<std::string, std::string> pair = remnant.empty() ? std::pair<std::string, std::string>{}
                                                                   : remnant.front();
        for (const auto& [u, v] : remnant)
            if (!is_terminal(u) && !is_terminal(v)) {
                pair = {u, v};
                break;
            }
        const std::string what = "reduction stalls at bridge " + pair.first + "-" + pair.second + " with " +
                                 std::to_string(remnant.size()) + " edges left";
        throw NotSeriesParallelError(what, std::move(remnant), std::move(pair));
    }

    const QuantumNetwork& net_;
    ReductionOptions opts_;
    std::mt19937_64 rng_;
    SpTree tree_;
    std::vector<WorkEdge> edges_;
    std::vector<ReductionStep> trace_;
};

} // namespace detail

/// Reduces the network between its terminals: parallel merges first, then
/// dangling branches are pruned, then degree-2 relays are contracted in
/// breadth-first order from A (left grouping along chains); repeat.
inline Decomposition decompose(const QuantumNetwork& net, ReductionOptions opts = {}) {
    return detail::Reducer(net, opts).run();
}

/// Evaluates a decomposition tree bottom-up.
///   leaf(edge_index) -> T, series(const T&, const T&) -> T,
///   parallel(const std::vector<T>&) -> T
template <class T, class Leaf, class Series, class Parallel>
T evaluate(const SpTree& tree, Leaf&& leaf, Series&& series, Parallel&& parallel) {
    auto rec = [&](auto&& self, std::size_t idx) -> T {
        const SpNode& n = tree.nodes[idx];
        switch (n.kind) {
        case SpNode::Kind::Leaf: return leaf(n.edge);
        case SpNode::Kind::Series: {
            T left = self(self, n.children[0]);
            T right = self(self, n.children[1]);
            return series(left, right);
        }
        case SpNode::Kind::Parallel: {
            std::vector<T> parts;
            parts.reserve(n.children.size());
            for (std::size_t c : n.children) parts.push_back(self(self, c));
            return parallel(parts);
        }
        }
        throw Error(ErrorCode::SchemaError, "corrupt decomposition tree");
    };
    return rec(rec, tree.root);
}

/// DET final Schmidt vector with an optional replacement for one link.
inline SchmidtVector det_final(const QuantumNetwork& net, const SpTree& tree,
                               std::optional<std::pair<std::size_t, SchmidtVector>> override_link = {}) {
    return evaluate<SchmidtVector>(
        tree,
        [&](std::size_t e) {
            if (override_link && override_link->first == e) return override_link->second;
            return net.edges()[e].schmidt;
        },
        [](const SchmidtVector& x, const SchmidtVector& y) { return swap_rule(x, y); },
        [](const std::vector<SchmidtVector>& parts) { return parallel_rule(parts); });
}

inline SchmidtVector reduce_series_parallel(const QuantumNetwork& net, ReductionOptions opts = {}) {
    return det_final(net, decompose(net, opts).tree);
}

namespace detail {

inline bool all_leaves(const SpTree& t, const std::vector<std::size_t>& ids) {
    return std::all_of(ids.begin(), ids.end(),
                       [&](std::size_t i) { return t.nodes[i].kind == SpNode::Kind::Leaf; });
}

/// Children of `idx` with same-kind descendants spliced in.
inline std::vector<std::size_t> flattened_children(const SpTree& t, std::size_t idx) {
    std::vector<std::size_t> out;
    const auto kind = t.nodes[idx].kind;
    for (std::size_t c : t.nodes[idx].children) {
        if (t.nodes[c].kind == kind) {
            auto sub = flattened_children(t, c);
            out.insert(out.end(), sub.begin(), sub.end());
        } else {
            out.push_back(c);
        }
    }
    return out;
}

} // namespace detail

/// Finest class for an already decomposed network. A single direct link is
/// a series chain of length one.
inline TopologyClass classify_tree(const SpTree& t) {
    const SpNode& root = t.nodes[t.root];
    if (root.kind == SpNode::Kind::Leaf) return TopologyClass::SimpleSeries;
    const auto top = detail::flattened_children(t, t.root);
    if (detail::all_leaves(t, top))
        return root.kind == SpNode::Kind::Series ? TopologyClass::SimpleSeries
                                                 : TopologyClass::SimpleParallel;
    const bool two_level = std::all_of(top.begin(), top.end(), [&](std::size_t c) {
        return t.nodes[c].kind == SpNode::Kind::Leaf ||
               detail::all_leaves(t, detail::flattened_children(t, c));
    });
    if (two_level)
        return root.kind == SpNode::Kind::Series ? TopologyClass::ParallelThenSeries
                                                 : TopologyClass::SeriesThenParallel;
    return TopologyClass::SeriesParallel;
}

inline TopologyClass classify_topology(const QuantumNetwork& net) {
    try {
        return classify_tree(decompose(net).tree);
    } catch (const NotSeriesParallelError&) {
        return TopologyClass::NotSeriesParallel;
    }
}

/// Probability that a link becomes maximally entangled under optimal
/// conversion, as used by classical entanglement percolation.
inline double link_success_probability(const SchmidtVector& link) {
    return conversion_probability(link, SchmidtVector::uniform(link.size()));
}

/// Two-terminal reliability of the network with independent per-link
/// success probabilities.
inline double cep_probability(const QuantumNetwork& net, const SpTree& tree) {
    return evaluate<double>(
        tree, [&](std::size_t e) { return link_success_probability(net.edges()[e].schmidt); },
        [](double p, double q) { return p * q; },
        [](const std::vector<double>& ps) {
            double fail = 1.0;
            for (double p : ps) fail *= 1.0 - p;
            return 1.0 - fail;
        });
}

inline double cep_probability(const QuantumNetwork& net) {
    return cep_probability(net, decompose(net).tree);
}

struct NetworkReport {
    TopologyClass topology;
    std::size_t dimension;
    std::size_t node_count;
    std::size_t edge_count;
    SchmidtVector final_schmidt;
    std::vector<double> concurrence; // C_1 .. C_d
    double cep_probability;
    std::vector<ReductionStep> trace;
};

inline NetworkReport report(const QuantumNetwork& net) {
    auto dec = decompose(net);
    auto final_vec = det_final(net, dec.tree);
    auto cs = concurrences(final_vec);
    return NetworkReport{classify_tree(dec.tree),
                         net.dimension(),
                         net.nodes().size(),
                         net.edges().size(),
                         std::move(final_vec),
                         std::move(cs),
                         cep_probability(net, dec.tree),
                         std::move(dec.trace)};
}

} // namespace qnetdet
