#pragma once

// Randomized and exact checks of the structural claims behind the series
// and parallel rules. Every check is a pure function of its CheckConfig:
// trial t of check "name" draws from substream(seed, name, t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qnetdet/errors.hpp"
#include "qnetdet/matrix.hpp"
#include "qnetdet/network.hpp"
#include "qnetdet/random.hpp"
#include "qnetdet/rules.hpp"
#include "qnetdet/schmidt.hpp"

namespace qnetdet {

using Json = nlohmann::ordered_json;

struct CheckConfig {
    std::size_t dimension = 2;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    double tolerance = 1e-9;
    std::size_t povm_size = 4;

    void validate() const {
        if (dimension < 1) throw Error(ErrorCode::DimensionTooSmall, "dimension must be >= 1");
        if (trials < 1) throw Error(ErrorCode::SchemaError, "trials must be >= 1");
        if (!(tolerance > 0.0)) throw Error(ErrorCode::SchemaError, "tolerance must be > 0");
        if (povm_size < 1) throw Error(ErrorCode::SchemaError, "povm_size must be >= 1");
    }
};

struct CheckReport {
    std::string name;
    std::size_t trials_run = 0;
    std::vector<Json> violations;
    double max_slack = -INFINITY;
    bool passed = true;
    Json extras = Json::object();
};

inline Json to_json(const CheckReport& r) {
    Json j;
    j["name"] = r.name;
    j["trials_run"] = r.trials_run;
    j["passed"] = r.passed;
    j["max_slack"] = std::isfinite(r.max_slack) ? Json(r.max_slack) : Json(nullptr);
    j["violations"] = r.violations;
    j["extras"] = r.extras;
    return j;
}

inline Json to_json(std::span<const double> v) { return Json(std::vector<double>(v.begin(), v.end())); }
inline Json to_json(const SchmidtVector& v) { return to_json(v.entries()); }

namespace detail {

inline constexpr std::size_t kMaxStoredViolations = 20;

/// Accumulates per-trial slacks. A slack > tolerance is a violation.
class Tally {
public:
    Tally(std::string name, double tolerance) : tol_(tolerance) { report_.name = std::move(name); }

    template <class Payload>
    void observe(std::size_t trial, double slack, Payload&& payload) {
        observe(trial, slack, tol_, std::forward<Payload>(payload));
    }

    template <class Payload>
    void observe(std::size_t trial, double slack, double tol, Payload&& payload) {
        if (std::isnan(slack)) slack = INFINITY;
        report_.max_slack = std::max(report_.max_slack, slack);
        if (slack > tol) add_violation(trial, slack, payload());
    }

    void add_violation(std::size_t trial, double slack, Json payload) {
        ++violation_count_;
        if (report_.violations.size() >= kMaxStoredViolations) return;
        Json v;
        v["trial"] = trial;
        v["slack"] = std::isfinite(slack) ? Json(slack) : Json(nullptr);
        for (auto& [k, val] : payload.items()) v[k] = val;
        report_.violations.push_back(std::move(v));
    }

    void trial_done() { ++report_.trials_run; }
    Json& extras() { return report_.extras; }

    CheckReport finish() {
        report_.passed = violation_count_ == 0;
        report_.extras["violation_count"] = violation_count_;
        return std::move(report_);
    }

private:
    double tol_;
    std::size_t violation_count_ = 0;
    CheckReport report_;
};

inline std::vector<double> weighted_sum(std::span<const double> p, const std::vector<std::vector<double>>& xs) {
    std::vector<double> acc(xs.front().size(), 0.0);
    for (std::size_t a = 0; a < xs.size(); ++a)
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += p[a] * xs[a][j];
    return acc;
}

inline std::vector<double> log_entries(std::span<const double> x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::log(x[i]);
    return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

/// Random T-transforms (pairwise averaging) followed by random decreases.
/// Both can only lower the prefix sums of the sorted vector.
inline void smooth_and_damp(Rng& rng, std::vector<double>& v, double max_damp) {
    const std::size_t n = v.size();
    if (n >= 2) {
        const std::size_t steps = uniform_index(rng, 0, 2 * n);
        for (std::size_t s = 0; s < steps; ++s) {
            const std::size_t i = uniform_index(rng, 0, n - 1);
            std::size_t j = uniform_index(rng, 0, n - 2);
            if (j >= i) ++j;
            const double t = uniform01(rng);
            const double a = v[i], b = v[j];
            v[i] = t * a + (1.0 - t) * b;
            v[j] = t * b + (1.0 - t) * a;
        }
    }
    const std::size_t damps = uniform_index(rng, 0, n);
    for (std::size_t s = 0; s < damps; ++s) v[uniform_index(rng, 0, n - 1)] -= uniform(rng, 0.0, max_damp);
}

/// Random point of the permutohedron of x: Σ p_α P_α x.
inline std::vector<double> random_permutation_mixture(Rng& rng, std::span<const double> x) {
    const std::size_t k = uniform_index(rng, 1, 4);
    const auto p = dirichlet(rng, k, 1.0);
    std::vector<double> out(x.size(), 0.0);
    std::vector<std::size_t> perm(x.size());
    for (std::size_t a = 0; a < k; ++a) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t j = 0; j < x.size(); ++j) out[j] += p[a] * x[perm[j]];
    }
    return out;
}

inline double average_over(const std::vector<Outcome>& outcomes, const std::function<double(const Outcome&)>& f) {
    double acc = 0.0;
    for (const auto& o : outcomes) acc += o.probability * f(o);
    return acc;
}

inline std::size_t at_least(std::size_t requested, std::size_t minimum) { return std::max(requested, minimum); }

inline std::size_t ipow(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    while (e--) r *= b;
    return r;
}

} // namespace detail

inline CheckReport check_lemma_convexity_S(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    detail::Tally tally("lemma_convexity_S", cfg.tolerance);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "lemma_convexity_S", t);
        const std::size_t k = uniform_index(rng, 1, 4);
        const auto p = dirichlet(rng, k, 1.0);
        std::vector<std::vector<double>> xs, swapped;
        for (std::size_t a = 0; a < k; ++a) xs.push_back(random_schmidt(rng, d).vector());
        const auto z = random_schmidt(rng, d);
        for (const auto& x : xs) swapped.push_back(swap_function(x, z.entries()));
        const auto lhs = detail::weighted_sum(p, swapped);
        const auto rhs = swap_function(detail::weighted_sum(p, xs), z.entries());
        tally.observe(t, majorization_slack(lhs, rhs), [&] {
            return Json{{"weights", p}, {"x", xs}, {"z", to_json(z)}, {"lhs", lhs}, {"rhs", rhs}};
        });
        tally.trial_done();
    }
    return tally.finish();
}

inline CheckReport check_lemma_det_preserving(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    detail::Tally tally("lemma_det_preserving", cfg.tolerance);
    const double dd = std::pow(static_cast<double>(d), static_cast<double>(d));
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "lemma_det_preserving", t);
        const auto x = random_schmidt(rng, d);
        const auto y = random_schmidt(rng, d);
        const double lhs = det_vec(swap_function(x.entries(), y.entries()));
        const double rhs = dd * det_vec(x.entries()) * det_vec(y.entries());
        const double rel = rhs > 0.0 ? std::abs(lhs - rhs) / rhs : std::abs(lhs);
        tally.observe(t, rel, [&] {
            return Json{{"x", to_json(x)}, {"y", to_json(y)}, {"lhs", lhs}, {"rhs", rhs}};
        });
        tally.trial_done();
    }
    return tally.finish();
}

inline CheckReport check_lemma_duality(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    detail::Tally tally("lemma_duality", cfg.tolerance);
    const double scale = std::pow(static_cast<double>(d), static_cast<double>(d) - 2.0);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "lemma_duality", t);
        const auto x = random_interior_schmidt(rng, d, 1e-6);
        const auto y = random_interior_schmidt(rng, d, 1e-6);
        const auto z = swap_function(x.entries(), y.entries());
        const auto lhs = sorted_descending(adjugate_vec(z));
        auto rhs = swap_function(adjugate_vec(x.entries()), adjugate_vec(y.entries()));
        for (double& v : rhs) v *= scale;
        const double denom = *std::max_element(rhs.begin(), rhs.end());
        const double rel = detail::max_abs_diff(lhs, rhs) / denom;
        tally.observe(t, rel, [&] {
            return Json{{"x", to_json(x)}, {"y", to_json(y)}, {"lhs", lhs}, {"rhs", rhs}};
        });
        tally.trial_done();
    }
    return tally.finish();
}

inline constexpr std::size_t kRejectionBudget = 10000;

inline CheckReport check_lemma_extremity(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const std::size_t m = d * d;
    detail::Tally tally("lemma_extremity", cfg.tolerance);
    std::size_t accepted = 0, exhausted = 0, attempts_total = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "lemma_extremity", t);
        const auto x = random_schmidt(rng, m);
        std::optional<std::vector<double>> candidate;
        for (std::size_t attempt = 1; attempt <= kRejectionBudget; ++attempt) {
            const double s = uniform01(rng);
            auto zp = dirichlet(rng, d, 1.0);
            for (double& v : zp) v *= 1.0 - s;
            zp[0] += s;
            ++attempts_total;
            if (majorizes(pad_zeros(zp, m), x.entries(), cfg.tolerance)) {
                candidate = std::move(zp);
                break;
            }
        }
        tally.trial_done();
        if (!candidate) {
            ++exhausted;
            continue;
        }
        ++accepted;
        const auto px = purify(x.entries(), d);
        tally.observe(t, majorization_slack(*candidate, px), [&] {
            return Json{{"x", to_json(x)}, {"z_prime", *candidate}, {"purified", px}};
        });
    }
    tally.extras()["accepted"] = accepted;
    tally.extras()["rejection_budget_exceeded"] = exhausted;
    tally.extras()["mean_attempts"] = static_cast<double>(attempts_total) / static_cast<double>(cfg.trials);
    return tally.finish();
}

inline CheckReport check_lemma_convexity_P(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const std::size_t m = d * d;
    detail::Tally tally("lemma_convexity_P", cfg.tolerance);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "lemma_convexity_P", t);
        const std::size_t k = uniform_index(rng, 1, 4);
        const auto p = dirichlet(rng, k, 1.0);
        std::vector<std::vector<double>> xs, purified;
        for (std::size_t a = 0; a < k; ++a) xs.push_back(random_schmidt(rng, m).vector());
        for (const auto& x : xs) purified.push_back(purify(x, d));
        const auto lhs = detail::weighted_sum(p, purified);
        const auto rhs = purify(detail::weighted_sum(p, xs), d);
        tally.observe(t, majorization_slack(lhs, rhs), [&] {
            return Json{{"weights", p}, {"x", xs}, {"lhs", lhs}, {"rhs", rhs}};
        });
        tally.trial_done();
    }
    return tally.finish();
}

inline CheckReport check_lemma_sum_product(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    detail::Tally tally("lemma_sum_product", cfg.tolerance);
    std::size_t premise_failures = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "lemma_sum_product", t);
        for (std::size_t m : {d + 1, d + 2}) {
            const auto x = random_schmidt(rng, m);
            const auto y = random_schmidt(rng, m);
            if (*std::min_element(x.begin(), x.end()) <= 0.0 || *std::min_element(y.begin(), y.end()) <= 0.0)
                continue;
            std::vector<double> lxy(m);
            for (std::size_t j = 0; j < m; ++j) lxy[j] = std::log(x[j]) + std::log(y[j]);
            auto lz = lxy;
            detail::smooth_and_damp(rng, lz, 2.0);
            if (!weakly_submajorizes(lxy, lz, 0.0)) {
                ++premise_failures;
                continue;
            }
            std::vector<double> z(m);
            for (std::size_t j = 0; j < m; ++j) z[j] = std::exp(lz[j]);
            const auto px = detail::log_entries(purify(x.entries(), d));
            const auto py = detail::log_entries(purify(y.entries(), d));
            const auto pz = detail::log_entries(purify(z, d));
            std::vector<double> lhs(d);
            for (std::size_t j = 0; j < d; ++j) lhs[j] = px[j] + py[j];
            tally.observe(t, weak_majorization_slack(lhs, pz), [&] {
                return Json{{"m", m}, {"x", to_json(x)}, {"y", to_json(y)}, {"z", z}, {"lhs_log", lhs}, {"rhs_log", pz}};
            });
        }
        tally.trial_done();
    }
    tally.extras()["premise_failures"] = premise_failures;
    return tally.finish();
}

namespace detail {

/// ∏_{j<l} v↓_j · Σ_{j=l..k} (v↓_j)^s in log form; l and k are 1-based.
inline double log_prefix_power_sum(std::span<const double> v, std::size_t l, std::size_t k, double s) {
    const auto w = sorted_descending(v);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < l; ++j) acc += std::log(w[j]);
    double sum = 0.0;
    for (std::size_t j = l - 1; j < k; ++j) sum += std::pow(w[j], s);
    return acc + std::log(sum);
}

} // namespace detail

/// Isotonicity of the series and parallel rules (via permutation mixtures),
/// and the prefix-product power-sum inequality over its stated parameter
/// range 0 <= s <= k - l + 1.
inline CheckReport check_appendix_c(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const std::size_t n = d + 1;
    detail::Tally tally("appendix_c", cfg.tolerance);
    std::size_t power_trials_s_le_1 = 0, power_trials_s_gt_1 = 0;
    std::size_t power_viol_s_le_1 = 0, power_viol_s_gt_1 = 0;
    double power_max_slack_s_le_1 = -INFINITY;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "appendix_c", t);

        const auto x = random_schmidt(rng, d);
        const auto y = detail::random_permutation_mixture(rng, x.entries());
        const auto z = random_schmidt(rng, d);
        const auto sx = swap_function(x.entries(), z.entries());
        const auto sy = swap_function(y, z.entries());
        tally.observe(t, majorization_slack(sx, sy), [&] {
            return Json{{"part", "isotone_swap"}, {"x", to_json(x)}, {"y", y}, {"z", to_json(z)}};
        });

        const auto u = random_schmidt(rng, d * d);
        const auto w = detail::random_permutation_mixture(rng, u.entries());
        tally.observe(t, majorization_slack(purify(u.entries(), d), purify(w, d)), [&] {
            return Json{{"part", "isotone_purify"}, {"x", to_json(u)}, {"y", w}};
        });

        std::vector<double> lx(n);
        std::normal_distribution<double> gauss(0.0, 2.0);
        for (double& v : lx) v = gauss(rng);
        std::sort(lx.begin(), lx.end(), std::greater<>());
        auto ly = lx;
        detail::smooth_and_damp(rng, ly, 3.0);
        std::vector<double> xv(n), yv(n);
        for (std::size_t j = 0; j < n; ++j) {
            xv[j] = std::exp(lx[j]);
            yv[j] = std::exp(ly[j]);
        }
        const std::size_t k = uniform_index(rng, 1, n);
        const std::size_t l = uniform_index(rng, 1, k);
        const double smax = static_cast<double>(k - l + 1);
        const double roll = uniform01(rng);
        const double s = roll < 0.1 ? 0.0 : roll < 0.2 ? smax : uniform(rng, 0.0, smax);
        const double slack =
            detail::log_prefix_power_sum(yv, l, k, s) - detail::log_prefix_power_sum(xv, l, k, s);
        const bool violated = slack > cfg.tolerance;
        if (s <= 1.0) {
            ++power_trials_s_le_1;
            power_viol_s_le_1 += violated;
            power_max_slack_s_le_1 = std::max(power_max_slack_s_le_1, slack);
        } else {
            ++power_trials_s_gt_1;
            power_viol_s_gt_1 += violated;
        }
        tally.observe(t, slack, [&] {
            return Json{{"part", "prefix_power_sum"}, {"x", xv}, {"y", yv}, {"k", k}, {"l", l}, {"s", s}};
        });
        tally.trial_done();
    }
    auto& ex = tally.extras();
    ex["power_sum_trials_s_le_1"] = power_trials_s_le_1;
    ex["power_sum_violations_s_le_1"] = power_viol_s_le_1;
    ex["power_sum_max_slack_s_le_1"] =
        std::isfinite(power_max_slack_s_le_1) ? Json(power_max_slack_s_le_1) : Json(nullptr);
    ex["power_sum_trials_s_gt_1"] = power_trials_s_gt_1;
    ex["power_sum_violations_s_gt_1"] = power_viol_s_gt_1;
    return tally.finish();
}

inline constexpr double kEqualityTolerance = 1e-12;

inline CheckReport check_reverse_amgm(const CheckConfig& cfg) {
    cfg.validate();
    detail::Tally tally("reverse_amgm", cfg.tolerance);
    double equality_worst = 0.0;
    std::size_t equality_trials = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "reverse_amgm", t);
        const std::size_t n = uniform_index(rng, 1, 10);
        const double eps1 = uniform(rng, 0.05, 1.0);
        const int mode = static_cast<int>(t % 10);
        const bool all_equal = mode == 0 || mode == 5;
        double delta = 0.0;
        if (mode == 5 || (!all_equal && uniform01(rng) >= 0.2)) delta = uniform(rng, 0.0, 2.0) * eps1;

        std::vector<double> eps{eps1};
        double e_k = delta + eps1;
        for (std::size_t k = 1; k < n; ++k) {
            const double next = all_equal ? eps1 : uniform(rng, eps.back(), e_k / static_cast<double>(k));
            eps.push_back(next);
            e_k += next;
        }

        double slack = -INFINITY, log_prod = 0.0, e = delta;
        double eq_thm = 0.0, eq_cor11 = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
            log_prod += std::log(eps[j - 1]);
            e += eps[j - 1];
            const double jj = static_cast<double>(j);
            const double lhs = jj * std::log(e / jj);
            const double thm = log_prod + jj * std::log1p(delta / (eps1 * jj));
            const double cor11 = log_prod + delta / eps1;
            slack = std::max({slack, lhs - thm, lhs - cor11});
            eq_thm = std::max(eq_thm, std::abs(lhs - thm));
            eq_cor11 = std::max(eq_cor11, std::abs(lhs - cor11));
        }
        tally.observe(t, slack, [&] { return Json{{"n", n}, {"delta", delta}, {"epsilon", eps}}; });
        if (all_equal) {
            ++equality_trials;
            const double eq = delta == 0.0 ? std::max(eq_thm, eq_cor11) : eq_thm;
            equality_worst = std::max(equality_worst, eq);
            if (eq > kEqualityTolerance)
                tally.add_violation(t, eq, Json{{"kind", "equality_case"}, {"n", n}, {"delta", delta}, {"epsilon", eps}});
        }
        tally.trial_done();
    }
    tally.extras()["equality_trials"] = equality_trials;
    tally.extras()["equality_max_abs_slack"] = equality_worst;
    return tally.finish();
}

inline CheckReport check_theorem_single_link(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const std::size_t count = detail::at_least(cfg.povm_size, 1);
    detail::Tally tally("theorem_single_link", cfg.tolerance);
    double premise_worst = -INFINITY;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "theorem_single_link", t);
        const auto lambda = random_schmidt(rng, d);
        const auto z = random_schmidt(rng, d);
        const auto w = random_schmidt(rng, d);
        const auto kraus = sample_kraus(rng, d, d, count);
        const auto ens = local_operation_outcomes(lambda.entries(), kraus);
        premise_worst = std::max(premise_worst, majorization_slack(ens.mixture(), lambda.entries()));

        const auto s_ref = swap_rule(lambda, z);
        const auto p_ref = purify_rule(kron(lambda, w), d);
        double slack = -INFINITY;
        for (std::size_t k = 1; k <= d; ++k) {
            const double avg_s = detail::average_over(
                ens.outcomes(), [&](const Outcome& o) { return concurrence(swap_rule(o.state, z), k); });
            const double avg_p = detail::average_over(
                ens.outcomes(), [&](const Outcome& o) { return concurrence(purify_rule(kron(o.state, w), d), k); });
            slack = std::max({slack, avg_s - concurrence(s_ref, k), avg_p - concurrence(p_ref, k)});
        }
        tally.observe(t, slack, [&] {
            return Json{{"lambda", to_json(lambda)}, {"z", to_json(z)}, {"w", to_json(w)}, {"outcomes", ens.size()}};
        });
        tally.trial_done();
    }
    tally.extras()["locality_premise_max_slack"] = premise_worst;
    return tally.finish();
}

inline constexpr double kMultiplicativityTolerance = 1e-8;

inline CheckReport check_theorem_simple_series(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const std::size_t count = detail::at_least(cfg.povm_size, d * d);
    detail::Tally tally("theorem_simple_series", cfg.tolerance);
    double mult_worst = 0.0, below_d_excess = -INFINITY;
    std::size_t below_d_exceedances = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "theorem_simple_series", t);
        const auto a = random_schmidt(rng, d);
        const auto b = random_schmidt(rng, d);
        const auto povm = sample_povm(rng, d, count);
        const auto ens = enumerate_swap_outcomes(a, b, povm);
        const auto det = swap_rule(a, b);

        const double avg = detail::average_over(ens.outcomes(), [&](const Outcome& o) { return g_concurrence(o.state); });
        const double ref = g_concurrence(det);
        tally.observe(t, avg - ref, [&] {
            return Json{{"a", to_json(a)}, {"b", to_json(b)}, {"average", avg}, {"deterministic", ref}};
        });

        const double product = g_concurrence(a) * g_concurrence(b);
        const double rel = product > 0.0 ? std::abs(ref - product) / product : std::abs(ref);
        mult_worst = std::max(mult_worst, rel);
        if (rel > kMultiplicativityTolerance)
            tally.add_violation(t, rel, Json{{"kind", "multiplicativity"}, {"a", to_json(a)}, {"b", to_json(b)}});

        for (std::size_t k = 2; k < d; ++k) {
            const double avg_k =
                detail::average_over(ens.outcomes(), [&](const Outcome& o) { return concurrence(o.state, k); });
            const double excess = avg_k - concurrence(det, k);
            below_d_excess = std::max(below_d_excess, excess);
            below_d_exceedances += excess > cfg.tolerance;
        }
        tally.trial_done();
    }
    tally.extras()["multiplicativity_max_rel_error"] = mult_worst;
    if (d > 2) {
        tally.extras()["k_below_d_exceedances"] = below_d_exceedances;
        tally.extras()["k_below_d_max_excess"] = below_d_excess;
    }
    return tally.finish();
}

inline CheckReport check_theorem_simple_parallel(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const std::size_t count = detail::at_least(cfg.povm_size, d);
    detail::Tally tally("theorem_simple_parallel", cfg.tolerance);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "theorem_simple_parallel", t);
        const auto a = random_schmidt(rng, d);
        const auto b = random_schmidt(rng, d);
        const auto joint = kron_raw(a.entries(), b.entries());
        const auto target = purify_rule(joint, d);
        const auto kraus = sample_kraus(rng, d, d * d, count);
        const auto ens = local_operation_outcomes(joint, kraus);

        double slack = majorization_slack(ens.mixture(), target.entries());
        for (std::size_t k = 1; k <= d; ++k) {
            const double avg = detail::average_over(ens.outcomes(), [&](const Outcome& o) { return concurrence(o.state, k); });
            slack = std::max(slack, avg - concurrence(target, k));
        }
        tally.observe(t, slack, [&] {
            return Json{{"a", to_json(a)}, {"b", to_json(b)}, {"target", to_json(target)}, {"mixture", ens.mixture()}};
        });
        tally.trial_done();
    }
    return tally.finish();
}

namespace detail {

/// Average G-concurrence after measuring the relay of two parallel groups
/// with `povm` and purifying each outcome down to d dimensions.
inline double grouped_swap_average(std::span<const double> left, std::span<const double> right,
                                   const Povm& povm, std::size_t d) {
    const auto psis = swap_outcome_matrices(left, right, povm);
    double acc = 0.0;
    for (const auto& psi : psis) {
        const double p = frobenius_norm_sq(psi);
        if (p < kOutcomePruneThreshold) continue;
        auto sv = singular_values_desc(psi);
        for (double& s : sv) s = s * s / p;
        acc += p * g_concurrence(purify_rule(sv, d));
    }
    return acc;
}

inline Povm kron_povm(const Povm& a, const Povm& b) {
    std::vector<ComplexMatrix> out;
    out.reserve(a.size() * b.size());
    for (const auto& x : a.elements())
        for (const auto& y : b.elements()) out.push_back(kron(x, y));
    return Povm(std::move(out));
}

} // namespace detail

inline CheckReport check_theorem_parallel_then_series(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const std::size_t d2 = d * d;
    const std::size_t count = detail::at_least(cfg.povm_size, d2 * d2);
    const std::size_t nested_count = detail::at_least(cfg.povm_size, d2);
    detail::Tally tally("theorem_parallel_then_series", cfg.tolerance);
    double det_sum = 0.0, general_sum = 0.0, nested_sum = 0.0, nested_gap_min = INFINITY;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "theorem_parallel_then_series", t);
        const auto la = random_schmidt(rng, d);
        const auto lb = random_schmidt(rng, d);
        const auto lc = random_schmidt(rng, d);
        const auto ld = random_schmidt(rng, d);
        const auto left = kron_raw(la.entries(), lb.entries());
        const auto right = kron_raw(lc.entries(), ld.entries());
        const double ref = g_concurrence(swap_rule(purify_rule(left, d), purify_rule(right, d)));

        const auto povm = sample_povm(rng, d2, d2, count);
        const double general = detail::grouped_swap_average(left, right, povm, d);
        const auto nested_povm =
            detail::kron_povm(sample_povm(rng, d, nested_count), sample_povm(rng, d, nested_count));
        const double nested = detail::grouped_swap_average(left, right, nested_povm, d);

        det_sum += ref;
        general_sum += general;
        nested_sum += nested;
        nested_gap_min = std::min(nested_gap_min, ref - nested);
        auto payload = [&](const char* strategy, double value) {
            return [&, strategy, value] {
                return Json{{"strategy", strategy}, {"a", to_json(la)}, {"b", to_json(lb)}, {"c", to_json(lc)},
                            {"d", to_json(ld)}, {"average", value}, {"deterministic", ref}};
            };
        };
        tally.observe(t, general - ref, payload("general", general));
        tally.observe(t, nested - ref, payload("nested", nested));
        tally.trial_done();
    }
    const double n = static_cast<double>(cfg.trials);
    tally.extras()["deterministic_mean"] = det_sum / n;
    tally.extras()["general_mean"] = general_sum / n;
    tally.extras()["nested_mean"] = nested_sum / n;
    tally.extras()["nested_min_gap"] = nested_gap_min;
    return tally.finish();
}

namespace detail {

/// Random two-terminal series-parallel network on at most `max_edges`
/// links, grown from a single A-B link by subdivision and duplication.
inline QuantumNetwork random_sp_network(Rng& rng, std::size_t d, std::size_t max_edges) {
    std::vector<std::pair<std::string, std::string>> edges{{"A", "B"}};
    const std::size_t target = uniform_index(rng, 1, max_edges);
    std::size_t next_node = 1;
    while (edges.size() < target) {
        const std::size_t e = uniform_index(rng, 0, edges.size() - 1);
        if (uniform01(rng) < 0.5) {
            const std::string r = "R" + std::to_string(next_node++);
            const auto [u, v] = edges[e];
            edges[e] = {u, r};
            edges.emplace_back(r, v);
        } else {
            edges.push_back(edges[e]);
        }
    }
    std::vector<Link> links;
    for (const auto& [u, v] : edges) links.push_back(Link{u, v, random_schmidt(rng, d)});
    return QuantumNetwork(d, "A", "B", std::move(links));
}

} // namespace detail

inline CheckReport check_theorem_worst_case_d2(const CheckConfig& cfg) {
    cfg.validate();
    if (cfg.dimension != 2)
        throw Error(ErrorCode::DimensionNotTwo, "worst-case optimality is only claimed for d = 2");
    const std::size_t count = detail::at_least(cfg.povm_size, 1);
    detail::Tally tally("theorem_worst_case_d2", cfg.tolerance);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "theorem_worst_case_d2", t);
        const auto net = detail::random_sp_network(rng, 2, 6);
        const auto tree = decompose(net).tree;
        const double ref = g_concurrence(det_final(net, tree));
        const std::size_t e = uniform_index(rng, 0, net.edges().size() - 1);
        const auto kraus = sample_kraus(rng, 2, 2, count);
        const auto ens = local_operation_outcomes(net.edges()[e].schmidt.entries(), kraus);
        double worst = INFINITY;
        for (const auto& o : ens.outcomes())
            if (o.probability > 0.0)
                worst = std::min(worst, g_concurrence(det_final(net, tree, std::pair{e, o.state})));
        tally.observe(t, worst - ref, [&] {
            return Json{{"edges", net.edges().size()}, {"replaced_edge", e}, {"worst", worst}, {"deterministic", ref}};
        });
        tally.trial_done();
    }
    return tally.finish();
}

inline constexpr double kNonAssociativityThreshold = 1e-6;

/// For d <= 3 the series rule is associative and every trial must agree
/// within tolerance. For d >= 4 the check passes once a triple with
/// discrepancy above 1e-6 is found.
inline CheckReport check_swap_associativity(const CheckConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dimension;
    const bool expect_assoc = d <= 3;
    detail::Tally tally("swap_associativity", cfg.tolerance);
    double worst = 0.0;
    std::optional<Json> witness;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        auto rng = substream(cfg.seed, "swap_associativity", t);
        const auto x = random_schmidt(rng, d);
        const auto y = random_schmidt(rng, d);
        const auto z = random_schmidt(rng, d);
        const auto left = swap_rule(swap_rule(x, y), z);
        const auto right = swap_rule(x, swap_rule(y, z));
        const double disc = detail::max_abs_diff(left.entries(), right.entries());
        worst = std::max(worst, disc);
        auto payload = [&] {
            return Json{{"x", to_json(x)}, {"y", to_json(y)}, {"z", to_json(z)}, {"left", to_json(left)},
                        {"right", to_json(right)}};
        };
        if (expect_assoc) {
            tally.observe(t, disc, payload);
        } else if (!witness && disc > kNonAssociativityThreshold) {
            witness = payload();
            (*witness)["trial"] = t;
            (*witness)["discrepancy"] = disc;
        }
        tally.trial_done();
    }
    tally.extras()["expect_associative"] = expect_assoc;
    tally.extras()["max_discrepancy"] = worst;
    if (!expect_assoc) {
        tally.observe(0, kNonAssociativityThreshold - worst, 0.0, [] {
            return Json{{"kind", "no_non_associative_triple_found"}};
        });
        tally.extras()["witness"] = witness ? *witness : Json(nullptr);
    }
    return tally.finish();
}

struct CounterexampleResult {
    double det_top;
    double det_top_exact;
    double det_value;
    double zz_value;
    std::vector<double> swap;
    std::vector<double> raw_mixture;
    std::vector<double> purified_mixture;
    bool purified_mixture_majorizes_swap;
    bool raw_mixture_majorizes_swap;
    ProbabilisticEnsemble zz_outcomes;
};

inline QuantumNetwork counterexample_network() {
    const auto l = normalize_descending({0.9, 0.1});
    return QuantumNetwork(2, "A", "B", {Link{"A", "R", l}, Link{"R", "B", l}, Link{"A", "B", l}});
}

/// Three (0.9, 0.1) links: two in series, the pair in parallel with the
/// third. Compares the deterministic rules against a Bell-basis
/// measurement at the relay followed by purification with the direct link.
inline CounterexampleResult reproduce_counterexample() {
    const auto l = normalize_descending({0.9, 0.1});
    CounterexampleResult r;
    const auto final_vec = reduce_series_parallel(counterexample_network());
    r.det_top = final_vec[0];
    r.det_top_exact = 9.0 * (25.0 + 4.0 * std::sqrt(34.0)) / 500.0;
    r.det_value = g_concurrence(final_vec);
    r.zz_outcomes = enumerate_swap_outcomes(l, l, bell_povm_d2());
    r.swap = swap_rule(l, l).vector();
    r.raw_mixture = r.zz_outcomes.mixture();
    r.purified_mixture.assign(2, 0.0);
    r.zz_value = 0.0;
    for (const auto& o : r.zz_outcomes.outcomes()) {
        const auto purified = purify_rule(kron(l, o.state), 2);
        r.zz_value += o.probability * g_concurrence(purified);
        for (std::size_t j = 0; j < 2; ++j) r.purified_mixture[j] += o.probability * purified[j];
    }
    r.purified_mixture_majorizes_swap = majorizes(r.purified_mixture, r.swap);
    r.raw_mixture_majorizes_swap = majorizes(r.raw_mixture, r.swap);
    return r;
}

inline Json to_json(const CounterexampleResult& r) {
    Json outcomes = Json::array();
    for (const auto& o : r.zz_outcomes.outcomes())
        outcomes.push_back(Json{{"p", o.probability}, {"state", to_json(o.state)}});
    return Json{{"det_top", r.det_top},
                {"det_top_exact", r.det_top_exact},
                {"det_value", r.det_value},
                {"zz_value", r.zz_value},
                {"swap", r.swap},
                {"raw_mixture", r.raw_mixture},
                {"purified_mixture", r.purified_mixture},
                {"purified_mixture_majorizes_swap", r.purified_mixture_majorizes_swap},
                {"raw_mixture_majorizes_swap", r.raw_mixture_majorizes_swap},
                {"zz_outcomes", outcomes}};
}

/// Golden values of the counterexample with their allowed deviations.
struct CounterexampleGolden {
    double det_value = 0.673;
    double zz_value = 0.695;
    double value_tol = 5e-4;
    double mixture_top = 0.819;
    double mixture_tol = 1e-3;
    double exact_tol = 1e-9;
};

inline CheckReport check_counterexample(const CheckConfig& cfg) {
    cfg.validate();
    const CounterexampleGolden g;
    const auto r = reproduce_counterexample();
    detail::Tally tally("counterexample", 0.0);
    auto compare = [&](const char* what, double got, double want, double tol) {
        tally.observe(0, std::abs(got - want) - tol, [&] {
            return Json{{"quantity", what}, {"value", got}, {"expected", want}, {"allowed", tol}};
        });
    };
    compare("det_top", r.det_top, r.det_top_exact, g.exact_tol);
    compare("det_value", r.det_value, g.det_value, g.value_tol);
    compare("zz_value", r.zz_value, g.zz_value, g.value_tol);
    compare("purified_mixture_top", r.purified_mixture[0], g.mixture_top, g.mixture_tol);
    compare("purified_mixture_bottom", r.purified_mixture[1], 1.0 - g.mixture_top, g.mixture_tol);
    if (r.purified_mixture_majorizes_swap)
        tally.add_violation(0, 1.0, Json{{"quantity", "purified_mixture_majorizes_swap"}, {"value", true}});
    tally.trial_done();
    tally.extras() = to_json(r);
    return tally.finish();
}

using CheckFn = CheckReport (*)(const CheckConfig&);

struct NamedCheck {
    std::string_view name;
    CheckFn fn;
};

inline const std::vector<NamedCheck>& all_checks() {
    static const std::vector<NamedCheck> checks{
        {"lemma_convexity_S", check_lemma_convexity_S},
        {"lemma_det_preserving", check_lemma_det_preserving},
        {"lemma_duality", check_lemma_duality},
        {"lemma_extremity", check_lemma_extremity},
        {"lemma_convexity_P", check_lemma_convexity_P},
        {"lemma_sum_product", check_lemma_sum_product},
        {"appendix_c", check_appendix_c},
        {"reverse_amgm", check_reverse_amgm},
        {"theorem_single_link", check_theorem_single_link},
        {"theorem_simple_series", check_theorem_simple_series},
        {"theorem_simple_parallel", check_theorem_simple_parallel},
        {"theorem_parallel_then_series", check_theorem_parallel_then_series},
        {"theorem_worst_case_d2", check_theorem_worst_case_d2},
        {"counterexample", check_counterexample},
        {"swap_associativity", check_swap_associativity},
    };
    return checks;
}

/// Check names selected by a suite name or a single check name; empty when
/// the selector is unknown.
inline std::vector<std::string_view> resolve_selector(std::string_view selector) {
    if (selector == "lemmas")
        return {"lemma_convexity_S", "lemma_det_preserving", "lemma_duality", "lemma_extremity",
                "lemma_convexity_P", "lemma_sum_product", "appendix_c"};
    if (selector == "theorems")
        return {"theorem_single_link", "theorem_simple_series", "theorem_simple_parallel",
                "theorem_parallel_then_series", "theorem_worst_case_d2"};
    if (selector == "amgm") return {"reverse_amgm"};
    if (selector == "all") {
        std::vector<std::string_view> names;
        for (const auto& c : all_checks()) names.push_back(c.name);
        return names;
    }
    for (const auto& c : all_checks())
        if (c.name == selector) return {c.name};
    return {};
}

inline CheckReport run_check(std::string_view name, const CheckConfig& cfg) {
    for (const auto& c : all_checks())
        if (c.name == name) return c.fn(cfg);
    throw Error(ErrorCode::SchemaError, "unknown check " + std::string(name));
}

/// Runs every check of a selector in order. Inside a multi-check suite the
/// d = 2 worst-case check runs at d = 2 whatever the configured dimension.
inline std::vector<CheckReport> run_suite(std::string_view selector, const CheckConfig& cfg) {
    const auto names = resolve_selector(selector);
    if (names.empty()) throw Error(ErrorCode::SchemaError, "unknown selector " + std::string(selector));
    std::vector<CheckReport> reports;
    for (const auto name : names) {
        CheckConfig local = cfg;
        if (name == "theorem_worst_case_d2" && names.size() > 1) local.dimension = 2;
        reports.push_back(run_check(name, local));
    }
    return reports;
}

} // namespace qnetdet
