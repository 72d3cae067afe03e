#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "qnetdet/errors.hpp"
#include "qnetdet/network.hpp"
#include "qnetdet/schmidt.hpp"

namespace qnetdet {

inline constexpr double kLinkTraceTolerance = 1e-9;

namespace detail {

template <class J>
std::vector<double> parse_schmidt_array(const J& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty())
        throw Error(ErrorCode::SchemaError, where + ": \"schmidt\" must be a nonempty array");
    std::vector<double> v;
    double sum = 0.0;
    for (const auto& x : arr) {
        if (!x.is_number()) throw Error(ErrorCode::SchemaError, where + ": Schmidt entries must be numbers");
        const double e = x.template get<double>();
        if (!std::isfinite(e) || e < 0.0)
            throw Error(ErrorCode::SchemaError, where + ": Schmidt entries must be finite and >= 0");
        v.push_back(e);
        sum += e;
    }
    if (std::abs(sum - 1.0) > kLinkTraceTolerance)
        throw Error(ErrorCode::SchemaError, where + ": Schmidt entries sum to " + std::to_string(sum));
    return v;
}

template <class J>
std::string parse_node_id(const J& v, const std::string& where) {
    if (!v.is_string() || v.template get<std::string>().empty())
        throw Error(ErrorCode::SchemaError, where + " must be a nonempty string");
    return v.template get<std::string>();
}

} // namespace detail

/// Builds a network from a parsed JSON document:
/// { "dimension": d, "terminals": ["A","B"],
///   "edges": [ {"u": "A", "v": "R", "schmidt": [0.9, 0.1]}, ... ],
///   "nodes": [...] (optional) }
inline QuantumNetwork network_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "network document must be an object");
    if (!doc.contains("terminals")) throw Error(ErrorCode::MissingTerminal, "missing \"terminals\"");
    const auto& terms = doc["terminals"];
    if (!terms.is_array() || terms.size() != 2)
        throw Error(ErrorCode::SchemaError, "\"terminals\" must be an array of two node ids");
    const std::string a = detail::parse_node_id(terms[0], "terminals[0]");
    const std::string b = detail::parse_node_id(terms[1], "terminals[1]");
    if (a == b) throw Error(ErrorCode::SchemaError, "terminals must be distinct");

    if (!doc.contains("dimension") || !doc["dimension"].is_number_integer() || doc["dimension"].get<long long>() < 1)
        throw Error(ErrorCode::SchemaError, "\"dimension\" must be a positive integer");
    const auto d = static_cast<std::size_t>(doc["dimension"].get<long long>());

    if (!doc.contains("edges") || !doc["edges"].is_array())
        throw Error(ErrorCode::SchemaError, "\"edges\" must be an array");

    std::optional<std::set<std::string>> declared;
    if (doc.contains("nodes")) {
        if (!doc["nodes"].is_array()) throw Error(ErrorCode::SchemaError, "\"nodes\" must be an array");
        declared.emplace();
        for (const auto& n : doc["nodes"]) declared->insert(detail::parse_node_id(n, "nodes[]"));
        for (const auto& t : {a, b})
            if (!declared->count(t)) throw Error(ErrorCode::MissingTerminal, "terminal " + t + " not among nodes");
    }

    std::vector<Link> links;
    for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
        const auto& e = doc["edges"][i];
        const std::string where = "edges[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("u") || !e.contains("v") || !e.contains("schmidt"))
            throw Error(ErrorCode::SchemaError, where + " needs \"u\", \"v\" and \"schmidt\"");
        const std::string u = detail::parse_node_id(e["u"], where + ".u");
        const std::string v = detail::parse_node_id(e["v"], where + ".v");
        if (declared)
            for (const auto& n : {u, v})
                if (!declared->count(n))
                    throw Error(ErrorCode::DanglingEndpoint, where + " endpoint " + n + " is not a declared node");
        const auto raw = detail::parse_schmidt_array(e["schmidt"], where);
        if (raw.size() != d)
            throw Error(ErrorCode::MixedDimensions, where + " has " + std::to_string(raw.size()) +
                                                        " Schmidt numbers, expected " + std::to_string(d));
        links.push_back(Link{u, v, normalize_descending(raw)});
    }
    return QuantumNetwork(d, a, b, std::move(links));
}

inline QuantumNetwork parse_network(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    return network_from_json(doc);
}

inline nlohmann::ordered_json to_json(const ReductionStep& s) {
    nlohmann::ordered_json j;
    j["rule"] = std::string(to_string(s.rule));
    if (!s.node.empty()) j["node"] = s.node;
    j["u"] = s.u;
    j["v"] = s.v;
    if (s.rule == ReductionStep::Rule::Parallel) j["merged"] = s.merged;
    return j;
}

inline nlohmann::ordered_json to_json(const NetworkReport& r) {
    nlohmann::ordered_json j;
    j["topology"] = std::string(to_string(r.topology));
    j["dimension"] = r.dimension;
    j["nodes"] = r.node_count;
    j["edges"] = r.edge_count;
    j["final_schmidt"] = r.final_schmidt.vector();
    nlohmann::ordered_json c;
    for (std::size_t k = 1; k <= r.concurrence.size(); ++k) c["C_" + std::to_string(k)] = r.concurrence[k - 1];
    j["concurrence"] = c;
    j["cep_probability"] = r.cep_probability;
    auto trace = nlohmann::ordered_json::array();
    for (const auto& s : r.trace) trace.push_back(to_json(s));
    j["trace"] = trace;
    return j;
}

/// Rounds to `digits` significant digits so that serialized output is
/// stable and matches golden files digit for digit.
inline double round_significant(double v, int digits = 12) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

template <class J>
void round_numbers(J& j, int digits = 12) {
    if (j.is_number_float()) {
        j = round_significant(j.template get<double>(), digits);
    } else if (j.is_array() || j.is_object()) {
        for (auto& child : j) round_numbers(child, digits);
    }
}

} // namespace qnetdet
