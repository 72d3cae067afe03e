#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qnetdet/qnetdet.hpp"

namespace {

using qnetdet::Error;
using qnetdet::ErrorCode;
using Json = nlohmann::ordered_json;

enum Exit : int {
    kOk = 0,
    kUsage = 1,
    kSchema = 2,
    kNotSeriesParallel = 3,
    kDisconnected = 4,
    kViolations = 5,
    kInvalidPovm = 6,
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::SchemaError:
    case ErrorCode::DanglingEndpoint:
    case ErrorCode::MixedDimensions:
    case ErrorCode::MissingTerminal:
    case ErrorCode::NegativeEntry:
    case ErrorCode::ZeroSum:
    case ErrorCode::EmptyInput:
    case ErrorCode::LengthMismatch: return kSchema;
    case ErrorCode::NotSeriesParallel: return kNotSeriesParallel;
    case ErrorCode::DisconnectedTerminals: return kDisconnected;
    case ErrorCode::InvalidPovm:
    case ErrorCode::SingularNormalizer:
    case ErrorCode::ShapeMismatch: return kInvalidPovm;
    default: return kUsage;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::SchemaError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("QNETDET_SEED"); env && *env) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw UsageError(std::string("QNETDET_SEED is not an unsigned integer: ") + env);
        return v;
    }
    return 0;
}

Json utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json manifest(const std::string& subcommand, const std::vector<std::string>& inputs, Json config,
              bool with_timestamp) {
    Json m;
    m["subcommand"] = subcommand;
    m["inputs"] = inputs;
    m["config"] = std::move(config);
    m["tool_version"] = qnetdet::kVersion;
    m["timestamp"] = with_timestamp ? utc_timestamp() : Json(nullptr);
    return m;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_vector(std::span<const double> v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + ")";
}

Json concurrence_object(const qnetdet::SchmidtVector& v) {
    Json c = Json::object();
    const auto cs = qnetdet::concurrences(v);
    for (std::size_t k = 1; k <= cs.size(); ++k) c["C_" + std::to_string(k)] = cs[k - 1];
    return c;
}

// Left-aligned text table with a dashed rule under the header.
std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < cells.size() ? cells[c] : "";
            s += cell;
            if (c + 1 < width.size()) s += std::string(width[c] - cell.size() + 2, ' ');
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s + "\n";
    };
    std::string out = line(header);
    std::vector<std::string> rule;
    for (auto w : width) rule.push_back(std::string(w, '-'));
    out += line(rule);
    for (const auto& r : rows) out += line(r);
    return out;
}

class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw UsageError("cannot open " + path + " for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

    void json(Json doc) {
        qnetdet::round_numbers(doc);
        stream() << doc.dump(2) << "\n";
    }

private:
    std::ofstream file_;
};

// ---------------------------------------------------------------- reduce

struct ReduceArgs {
    std::string file;
    std::string format = "json";
    bool pretty = false;
    bool no_timestamp = false;
    std::string out;
};

int cmd_reduce(const ReduceArgs& args) {
    const auto net = qnetdet::parse_network(read_file(args.file));
    const auto rep = qnetdet::report(net);
    Sink sink(args.out);
    const std::size_t d = rep.dimension;

    if (args.pretty) {
        auto& os = sink.stream();
        os << "network   " << args.file << "\n"
           << "topology  " << qnetdet::to_string(rep.topology) << "\n"
           << "d         " << d << "\n"
           << "nodes     " << rep.node_count << "\n"
           << "edges     " << rep.edge_count << "\n"
           << "CEP       " << fmt(rep.cep_probability) << "\n\n";
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < d; ++i)
            rows.push_back({std::to_string(i + 1), fmt(rep.final_schmidt[i]), fmt(rep.concurrence[i])});
        os << render_table({"k", "lambda_k", "C_k"}, rows);
        return kOk;
    }
    if (args.format == "csv") {
        auto& os = sink.stream();
        os << "topology";
        for (std::size_t i = 1; i <= d; ++i) os << ",lambda_" << i;
        for (std::size_t i = 1; i <= d; ++i) os << ",C_" << i;
        os << ",cep_probability\n" << qnetdet::to_string(rep.topology);
        for (double v : rep.final_schmidt) os << "," << fmt(v);
        for (double v : rep.concurrence) os << "," << fmt(v);
        os << "," << fmt(rep.cep_probability) << "\n";
        return kOk;
    }
    Json doc;
    doc["manifest"] = manifest("reduce", {args.file}, Json{{"format", args.format}, {"d", d}}, !args.no_timestamp);
    doc["report"] = qnetdet::to_json(rep);
    sink.json(std::move(doc));
    return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::string selector;
    std::size_t d = 2;
    std::size_t trials = 1000;
    std::optional<std::uint64_t> seed;
    double tol = 1e-9;
    std::size_t povm_size = 4;
    bool pretty = false;
    bool no_timestamp = false;
    std::string out;
};

int cmd_verify(const VerifyArgs& args) {
    if (qnetdet::resolve_selector(args.selector).empty())
        throw UsageError("unknown selector '" + args.selector +
                         "' (use all, lemmas, theorems, amgm, counterexample or a check name)");
    qnetdet::CheckConfig cfg;
    cfg.dimension = args.d;
    cfg.trials = args.trials;
    cfg.seed = resolve_seed(args.seed);
    cfg.tolerance = args.tol;
    cfg.povm_size = args.povm_size;
    cfg.validate();

    const auto reports = qnetdet::run_suite(args.selector, cfg);
    bool all_passed = true;
    for (const auto& r : reports) all_passed = all_passed && r.passed;

    Sink sink(args.out);
    if (args.pretty) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : reports)
            rows.push_back({r.name, std::to_string(r.trials_run), r.passed ? "pass" : "FAIL",
                            std::isfinite(r.max_slack) ? fmt(r.max_slack) : "-",
                            std::to_string(r.extras.value("violation_count", std::size_t{0}))});
        sink.stream() << "selector " << args.selector << "  d=" << cfg.dimension << "  trials=" << cfg.trials
                      << "  seed=" << cfg.seed << "  tol=" << fmt(cfg.tolerance) << "\n\n"
                      << render_table({"check", "trials", "result", "max_slack", "violations"}, rows);
    } else {
        Json doc;
        doc["manifest"] = manifest("verify", {args.selector},
                                   Json{{"seed", cfg.seed},
                                        {"trials", cfg.trials},
                                        {"tolerance", cfg.tolerance},
                                        {"d", cfg.dimension},
                                        {"povm_size", cfg.povm_size}},
                                   !args.no_timestamp);
        Json arr = Json::array();
        for (const auto& r : reports) arr.push_back(qnetdet::to_json(r));
        doc["reports"] = std::move(arr);
        sink.json(std::move(doc));
    }
    return all_passed ? kOk : kViolations;
}

// ---------------------------------------------------------------- outcomes

struct OutcomesArgs {
    std::string file;
    std::vector<std::string> links;
    std::string povm = "deterministic";
    std::optional<std::uint64_t> seed;
    bool pretty = false;
    bool no_timestamp = false;
    std::string out;
};

qnetdet::SchmidtVector parse_link_arg(const std::string& text, const std::string& where) {
    std::string body = text;
    if (!body.empty() && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
    nlohmann::json arr = nlohmann::json::array();
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        while (end && (*end == ' ' || *end == '\t')) ++end;
        if (tok.find_first_not_of(" \t") == std::string::npos || *end != '\0')
            throw Error(ErrorCode::SchemaError, where + ": '" + tok + "' is not a number");
        arr.push_back(v);
    }
    return qnetdet::normalize_descending(qnetdet::detail::parse_schmidt_array(arr, where));
}

// Returns the two links of an A-R-B chain, the one touching A first.
std::pair<qnetdet::SchmidtVector, qnetdet::SchmidtVector> chain_links(const qnetdet::QuantumNetwork& net) {
    const auto& e = net.edges();
    auto touches = [](const qnetdet::Link& l, const std::string& n) { return l.u == n || l.v == n; };
    auto other = [](const qnetdet::Link& l, const std::string& n) { return l.u == n ? l.v : l.u; };
    const auto& a = net.terminal_a();
    const auto& b = net.terminal_b();
    if (e.size() == 2) {
        for (int first = 0; first < 2; ++first) {
            const auto& l = e[first];
            const auto& r = e[1 - first];
            if (touches(l, a) && touches(r, b) && !touches(l, b) && !touches(r, a) && other(l, a) == other(r, b))
                return {l.schmidt, r.schmidt};
        }
    }
    throw Error(ErrorCode::SchemaError, "outcomes needs a two-edge chain " + a + " - R - " + b);
}

qnetdet::Povm make_povm(const std::string& spec, std::size_t d, std::uint64_t seed) {
    if (spec == "deterministic") return qnetdet::deterministic_swap_povm(d);
    if (spec == "bell") {
        if (d != 2) throw Error(ErrorCode::InvalidPovm, "the bell measurement needs d = 2");
        return qnetdet::bell_povm_d2();
    }
    if (spec.rfind("random:", 0) == 0) {
        const std::string count = spec.substr(7);
        char* end = nullptr;
        const auto k = std::strtoull(count.c_str(), &end, 10);
        if (count.empty() || *end != '\0' || k == 0) throw UsageError("random:K needs a positive integer K");
        auto rng = qnetdet::substream(seed, "outcomes", 0);
        return qnetdet::sample_povm(rng, d, k);
    }
    throw UsageError("unknown --povm '" + spec + "' (use deterministic, bell or random:K)");
}

int cmd_outcomes(const OutcomesArgs& args) {
    if (args.file.empty() == args.links.empty())
        throw UsageError("give either a network file or --links, not both");
    std::vector<std::string> inputs;
    qnetdet::SchmidtVector left = qnetdet::normalize_descending({1.0});
    qnetdet::SchmidtVector right = left;
    if (!args.file.empty()) {
        std::tie(left, right) = chain_links(qnetdet::parse_network(read_file(args.file)));
        inputs.push_back(args.file);
    } else {
        left = parse_link_arg(args.links[0], "--links[0]");
        right = parse_link_arg(args.links[1], "--links[1]");
        if (left.size() != right.size())
            throw Error(ErrorCode::MixedDimensions, "links have different dimensions");
        inputs = args.links;
    }
    const std::size_t d = left.size();
    const std::uint64_t seed = resolve_seed(args.seed);
    const auto povm = make_povm(args.povm, d, seed);
    const auto ensemble = qnetdet::enumerate_swap_outcomes(left, right, povm);
    const auto deterministic = qnetdet::swap_rule(left, right);

    Sink sink(args.out);
    if (args.pretty) {
        std::vector<std::vector<std::string>> rows;
        std::size_t idx = 0;
        for (const auto& o : ensemble.outcomes()) {
            std::vector<std::string> row{std::to_string(++idx), fmt(o.probability), fmt_vector(o.state.entries())};
            for (double c : qnetdet::concurrences(o.state)) row.push_back(fmt(c));
            rows.push_back(std::move(row));
        }
        std::vector<std::string> header{"alpha", "p", "state"};
        std::vector<std::string> avg{"avg", "", ""};
        for (std::size_t k = 1; k <= d; ++k) {
            header.push_back("C_" + std::to_string(k));
            avg.push_back(fmt(qnetdet::average_concurrence(ensemble, k)));
        }
        rows.push_back(std::move(avg));
        sink.stream() << "povm " << args.povm << "  d=" << d << "  links " << fmt_vector(left.entries()) << " "
                      << fmt_vector(right.entries()) << "\n\n"
                      << render_table(header, rows) << "\ndeterministic swap " << fmt_vector(deterministic.entries())
                      << "\n";
        return kOk;
    }

    Json doc;
    doc["manifest"] = manifest("outcomes", inputs, Json{{"povm", args.povm}, {"seed", seed}, {"d", d}},
                               !args.no_timestamp);
    doc["links"] = Json{left.vector(), right.vector()};
    Json list = Json::array();
    for (const auto& o : ensemble.outcomes())
        list.push_back(Json{{"p", o.probability}, {"state", o.state.vector()}, {"concurrence", concurrence_object(o.state)}});
    doc["outcomes"] = std::move(list);
    Json averages = Json::object();
    for (std::size_t k = 1; k <= d; ++k)
        averages["C_" + std::to_string(k)] = qnetdet::average_concurrence(ensemble, k);
    doc["averages"] = std::move(averages);
    doc["mixture"] = ensemble.mixture();
    doc["deterministic"] = Json{{"state", deterministic.vector()}, {"concurrence", concurrence_object(deterministic)}};
    sink.json(std::move(doc));
    return kOk;
}

void report_error(const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (const auto* nsp = dynamic_cast<const qnetdet::NotSeriesParallelError*>(&e)) {
        std::cerr << "stalled at bridge pair " << nsp->stalled_pair().first << " - " << nsp->stalled_pair().second
                  << "\nremaining edges:";
        for (const auto& [u, v] : nsp->remnant()) std::cerr << " " << u << "-" << v;
        std::cerr << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic entanglement transmission over series-parallel quantum networks"};
    app.set_version_flag("--version", qnetdet::kVersion);
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 usage, 2 schema, 3 not series-parallel, 4 disconnected terminals,\n"
               "5 verification violations, 6 invalid POVM. QNETDET_SEED sets the default seed.");

    ReduceArgs ra;
    auto* reduce = app.add_subcommand("reduce", "Reduce a network file to its final A-B Schmidt vector");
    reduce->add_option("file", ra.file, "Network JSON file")->required();
    reduce->add_option("--format", ra.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    reduce->add_flag("--pretty", ra.pretty, "Aligned human-readable table");
    reduce->add_flag("--no-timestamp", ra.no_timestamp, "Write a null timestamp in the manifest");
    reduce->add_option("--out", ra.out, "Write to this path instead of stdout");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Run randomized verification checks");
    verify->add_option("selector", va.selector, "all, lemmas, theorems, amgm, counterexample or a check name")
        ->required();
    verify->add_option("--d", va.d, "Local dimension")->check(CLI::PositiveNumber);
    verify->add_option("--trials", va.trials, "Trials per check")->check(CLI::PositiveNumber);
    verify->add_option("--seed", va.seed, "Master seed");
    verify->add_option("--tol", va.tol, "Slack tolerance")->check(CLI::PositiveNumber);
    verify->add_option("--povm-size", va.povm_size, "Requested POVM / Kraus family size")->check(CLI::PositiveNumber);
    verify->add_flag("--pretty", va.pretty, "Aligned human-readable table");
    verify->add_flag("--no-timestamp", va.no_timestamp, "Write a null timestamp in the manifest");
    verify->add_option("--out", va.out, "Write to this path instead of stdout");

    OutcomesArgs oa;
    auto* outcomes = app.add_subcommand("outcomes", "List every outcome of a relay measurement on two links");
    outcomes->add_option("file", oa.file, "Two-edge network JSON file");
    outcomes->add_option("--links", oa.links, "Two Schmidt vectors, e.g. 0.9,0.1 0.9,0.1")->expected(2);
    outcomes->add_option("--povm", oa.povm, "deterministic, bell or random:K");
    outcomes->add_option("--seed", oa.seed, "Seed for random:K");
    outcomes->add_flag("--pretty", oa.pretty, "Aligned human-readable table");
    outcomes->add_flag("--no-timestamp", oa.no_timestamp, "Write a null timestamp in the manifest");
    outcomes->add_option("--out", oa.out, "Write to this path instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*reduce) return cmd_reduce(ra);
        if (*verify) return cmd_verify(va);
        if (*outcomes) return cmd_outcomes(oa);
    } catch (const Error& e) {
        report_error(e);
        return exit_code_for(e.code());
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
