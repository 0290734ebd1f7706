#pragma once

#include "fdtest/common.hpp"
#include "fdtest/engine.hpp"
#include "fdtest/statistic_spec.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace fdtest::permutation {

struct TestConfig {
    double alpha = 0.05;
    int permutations = 300;  // B; Theorem-level guidance wants > 6 ln(2/beta)/alpha
    std::vector<double> bandwidths;  // empty -> 5-point data-driven grid
    int bandwidth_count = 5;
    std::vector<double> lambdas = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    double kappa = 0.0;  // <= 0 -> sqrt(nmin (nmin - 1)) over the eval blocks
    double fit_fraction = 0.5;
    std::uint64_t seed = 0;
    int threads = 1;
    bool group_duplicates = true;

    engine::EngineParams engine_params() const {
        engine::EngineParams p;
        p.bandwidths = bandwidths;
        p.bandwidth_count = bandwidth_count;
        p.lambdas = lambdas;
        p.fit_fraction = fit_fraction;
        p.threads = threads;
        p.allow_grouped = group_duplicates;
        return p;
    }
};

struct ConfigStat {
    double bandwidth = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
};

struct TestResult {
    std::string statistic_name;
    double alpha = 0.05;
    int permutations = 0;
    std::uint64_t seed = 0;
    double observed = 0.0;            // fused observed statistic
    std::vector<double> permuted;     // fused statistics of the B permutations
    double p_value = 1.0;
    bool reject = false;
    std::vector<ConfigStat> per_config;
};

// Soft-max combiner (1/kappa) log mean exp(kappa t), max-shifted.
inline double fuse(const std::vector<double>& values, double kappa) {
    require(!values.empty(), "fuse: empty statistic list");
    require(kappa > 0.0, "fuse: kappa must be positive");
    double m = *std::max_element(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += std::exp(kappa * (v - m));
    return m + std::log(acc / static_cast<double>(values.size())) / kappa;
}

using engine::sample_permutations;

namespace detail {

inline double resolve_kappa(const TestConfig& cfg, Eigen::Index eval_x, Eigen::Index eval_y) {
    if (cfg.kappa > 0.0) return cfg.kappa;
    auto nmin = static_cast<double>(std::min(eval_x, eval_y));
    double k = std::sqrt(nmin * (nmin - 1.0));
    return k > 0.0 ? k : 1.0;
}

inline std::vector<double> fuse_rows(const engine::FamilyValues& fam, double kappa) {
    std::vector<double> fused(static_cast<std::size_t>(fam.values.rows()));
    std::vector<double> row(static_cast<std::size_t>(fam.values.cols()));
    for (Eigen::Index r = 0; r < fam.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < fam.values.cols(); ++c)
            row[static_cast<std::size_t>(c)] = fam.values(r, c);
        fused[static_cast<std::size_t>(r)] = fuse(row, kappa);
    }
    return fused;
}

inline TestResult result_from_fused(const engine::FamilyValues& fam,
                                    const std::vector<double>& fused, const TestConfig& cfg,
                                    int b) {
    TestResult res;
    res.statistic_name = fam.spec.name();
    res.alpha = cfg.alpha;
    res.permutations = b;
    res.seed = cfg.seed;
    res.observed = fused[0];
    res.permuted.assign(fused.begin() + 1, fused.begin() + 1 + b);
    long count = 0;
    for (double t : res.permuted)
        if (t >= res.observed) ++count;
    res.p_value = static_cast<double>(1 + count) / static_cast<double>(b + 1);
    res.reject = res.p_value <= cfg.alpha;
    for (std::size_t c = 0; c < fam.configs.size(); ++c)
        res.per_config.push_back(
            {fam.configs[c].bandwidth, fam.configs[c].lambda, fam.values(0, static_cast<Eigen::Index>(c))});
    return res;
}

}  // namespace detail

// Runs the fused permutation test for several statistic families on one
// shared permutation set and Gram assembly. Results are identical to running
// single_test per family with the same config.
inline std::vector<TestResult> run_tests(const SampleSet& x, const SampleSet& y,
                                         const std::vector<statistics::StatisticSpec>& specs,
                                         const TestConfig& cfg) {
    require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "test: alpha must lie in (0,1)");
    require(cfg.permutations >= 1, "test: need at least one permutation");
    auto out = engine::run(x, y, specs, cfg.engine_params(), cfg.permutations + 1, cfg.seed);
    double kappa = detail::resolve_kappa(cfg, out.eval_x, out.eval_y);
    std::vector<TestResult> results;
    results.reserve(specs.size());
    for (const auto& fam : out.families)
        results.push_back(detail::result_from_fused(fam, detail::fuse_rows(fam, kappa), cfg,
                                                    cfg.permutations));
    return results;
}

inline TestResult single_test(const SampleSet& x, const SampleSet& y,
                              const statistics::StatisticSpec& spec, const TestConfig& cfg) {
    return run_tests(x, y, {spec}, cfg)[0];
}

// ---------------------------------------------------------------------------
// Aggregated test over a family of divergences (f-Agg)

struct FAggDivergenceInfo {
    std::string name;
    double observed = 0.0;
    double quantile = 0.0;  // permutation quantile at the corrected level
    double p_value = 1.0;   // single-test p-value, diagnostic only
};

struct FAggResult {
    double alpha = 0.05;
    int permutations = 0;
    std::uint64_t seed = 0;
    double u_alpha = 0.0;  // corrected per-divergence level found by bisection
    bool reject = false;
    std::vector<FAggDivergenceInfo> divergences;
};

namespace detail {

// (1-u) empirical quantile with the order-statistic convention
// tau^(ceil((1-u) w)) over w values.
inline double upper_quantile(std::vector<double> sorted_values, double u) {
    auto w = static_cast<double>(sorted_values.size());
    auto idx = static_cast<long>(std::ceil((1.0 - u) * w));
    idx = std::max<long>(1, std::min<long>(idx, static_cast<long>(w)));
    return sorted_values[static_cast<std::size_t>(idx - 1)];
}

}  // namespace detail

// Algorithm: per-divergence fused statistics over B+1 permutations decide the
// test at level u; a second batch of B permutations Monte-Carlo estimates the
// null rejection probability; bisection finds the largest u with estimated
// level <= alpha.
inline FAggResult f_agg_test(const SampleSet& x, const SampleSet& y,
                             const std::vector<statistics::StatisticSpec>& specs,
                             const TestConfig& cfg) {
    require(!specs.empty(), "f_agg_test: need at least one divergence");
    require(cfg.permutations >= 100, "f_agg_test: practical floor is B >= 100");
    const int b = cfg.permutations;
    auto out = engine::run(x, y, specs, cfg.engine_params(), 2 * b + 1, cfg.seed);
    double kappa = detail::resolve_kappa(cfg, out.eval_x, out.eval_y);

    const auto nf = specs.size();
    std::vector<std::vector<double>> fused(nf);
    std::vector<std::vector<double>> batch1_sorted(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        fused[f] = detail::fuse_rows(out.families[f], kappa);
        batch1_sorted[f].assign(fused[f].begin(), fused[f].begin() + b + 1);
        std::sort(batch1_sorted[f].begin(), batch1_sorted[f].end());
    }

    auto decision = [&](double u, std::size_t observed_row) {
        for (std::size_t f = 0; f < nf; ++f)
            if (fused[f][observed_row] > detail::upper_quantile(batch1_sorted[f], u)) return true;
        return false;
    };
    auto estimated_level = [&](double u) {
        long rejections = 0;
        for (int s = b + 1; s <= 2 * b; ++s)
            if (decision(u, static_cast<std::size_t>(s))) ++rejections;
        return static_cast<double>(rejections) / static_cast<double>(b);
    };

    double lo = 0.5 * cfg.alpha / static_cast<double>(nf);
    double hi = cfg.alpha;
    double u_alpha;
    if (estimated_level(hi) <= cfg.alpha) {
        u_alpha = hi;
    } else {
        for (int it = 0; it < 20 && (hi - lo) >= 1.0 / static_cast<double>(b + 1); ++it) {
            double mid = 0.5 * (lo + hi);
            (estimated_level(mid) <= cfg.alpha ? lo : hi) = mid;
        }
        u_alpha = lo;
    }

    FAggResult res;
    res.alpha = cfg.alpha;
    res.permutations = b;
    res.seed = cfg.seed;
    res.u_alpha = u_alpha;
    res.reject = decision(u_alpha, 0);
    for (std::size_t f = 0; f < nf; ++f) {
        FAggDivergenceInfo info;
        info.name = specs[f].name();
        info.observed = fused[f][0];
        info.quantile = detail::upper_quantile(batch1_sorted[f], u_alpha);
        long count = 0;
        for (int s = 1; s <= b; ++s)
            if (fused[f][static_cast<std::size_t>(s)] >= fused[f][0]) ++count;
        info.p_value = static_cast<double>(1 + count) / static_cast<double>(b + 1);
        res.divergences.push_back(info);
    }
    return res;
}

// ---------------------------------------------------------------------------
// JSON records

inline nlohmann::json to_json(const TestResult& r) {
    nlohmann::json per_config = nlohmann::json::array();
    for (const auto& c : r.per_config) {
        nlohmann::json entry{{"bandwidth", c.bandwidth}, {"statistic", c.value}};
        if (std::isfinite(c.lambda)) entry["lambda"] = c.lambda;
        per_config.push_back(entry);
    }
    return nlohmann::json{{"statistic_name", r.statistic_name},
                          {"alpha", r.alpha},
                          {"B", r.permutations},
                          {"p_value", r.p_value},
                          {"reject", r.reject},
                          {"observed", r.observed},
                          {"per_config", per_config},
                          {"seed", r.seed}};
}

inline nlohmann::json to_json(const FAggResult& r) {
    nlohmann::json divs = nlohmann::json::array();
    for (const auto& d : r.divergences)
        divs.push_back({{"name", d.name},
                        {"observed", d.observed},
                        {"quantile", d.quantile},
                        {"p_value", d.p_value}});
    return nlohmann::json{{"statistic_name", "f-agg"},
                          {"alpha", r.alpha},
                          {"B", r.permutations},
                          {"u_alpha", r.u_alpha},
                          {"reject", r.reject},
                          {"divergences", divs},
                          {"seed", r.seed}};
}

}  // namespace fdtest::permutation
