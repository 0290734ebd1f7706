#include "fdtest/permutation.hpp"

#include "fdtest/benchmarks.hpp"
#include "fdtest/statistics.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace fdtest;
using namespace fdtest::permutation;
using statistics::StatisticSpec;
using Catch::Approx;

namespace {

TestConfig small_config(int b = 40, std::uint64_t seed = 1) {
    TestConfig cfg;
    cfg.permutations = b;
    cfg.seed = seed;
    cfg.threads = 1;
    return cfg;
}

}  // namespace

TEST_CASE("fuse basics") {
    CHECK(fuse({0.37}, 3.0) == Approx(0.37));
    CHECK(fuse({1.2, 1.2, 1.2}, 10.0) == Approx(1.2));
    CHECK(fuse({0.0, 1.0}, 1e4) == Approx(1.0).margin(1e-3));
    CHECK(fuse({0.0, 1.0}, 1e-8) == Approx(0.5).margin(1e-6));
    CHECK_THROWS(fuse({}, 1.0));
    CHECK_THROWS(fuse({1.0}, 0.0));
}

TEST_CASE("fuse bounds and ordering invariance") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> values;
        for (int i = 0; i < 7; ++i) values.push_back(rng.normal() * 2.0);
        double kappa = 0.1 + 5.0 * rng.uniform();
        double fused = fuse(values, kappa);
        double mean = 0.0, mx = values[0];
        for (double v : values) {
            mean += v / values.size();
            mx = std::max(mx, v);
        }
        CHECK(fused >= mean - 1e-12);
        CHECK(fused <= mx + 1e-12);
        std::vector<double> shuffled = values;
        std::swap(shuffled[0], shuffled[3]);
        std::swap(shuffled[1], shuffled[6]);
        CHECK(fuse(shuffled, kappa) == Approx(fused).margin(1e-12));
    }
}

TEST_CASE("permutation sampling") {
    auto perms = sample_permutations(7, 0, 9);
    REQUIRE(perms.size() == 1);
    for (int i = 0; i < 7; ++i) CHECK(perms[0][static_cast<std::size_t>(i)] == i);

    auto singletons = sample_permutations(1, 3, 9);
    for (const auto& p : singletons) CHECK(p == std::vector<int>{0});

    auto a = sample_permutations(20, 5, 42);
    auto b = sample_permutations(20, 5, 42);
    CHECK(a == b);
    auto c = sample_permutations(20, 5, 43);
    CHECK(a != c);
    // every entry is a permutation
    for (const auto& p : a) {
        std::vector<int> sorted = p;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < 20; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    }
}

TEST_CASE("engine statistics match the module-level path on the identity row") {
    Rng rng(11);
    auto x = testsupport::random_points(rng, 16, 2);
    auto y = testsupport::random_points(rng, 14, 2, 1.4);

    TestConfig cfg = small_config(1);
    cfg.bandwidths = {0.8, 1.6};
    cfg.lambdas = {0.05, 1.0};

    auto specs = statistics::parse_statistics({"kl", "chi2", "hs:gamma=1.0", "drmmd", "mmd", "kale"});
    auto results = run_tests(x, y, specs, cfg);

    auto sx = statistics::split(x, y, 0.5);
    auto sy = statistics::split(y, x, 0.5);
    for (std::size_t f = 0; f < specs.size(); ++f) {
        for (const auto& pc : results[f].per_config) {
            kernels::KernelConfig k{kernels::KernelFamily::Gaussian, pc.bandwidth};
            double want;
            switch (specs[f].kind) {
                case statistics::StatKind::Mmd:
                    want = statistics::mmd_ustat(x, y, k);
                    break;
                case statistics::StatKind::Drmmd:
                    want = std::max(statistics::drmmd_statistic(sx, k, pc.lambda),
                                    statistics::drmmd_statistic(sy, k, pc.lambda));
                    break;
                case statistics::StatKind::Kale:
                    want = std::max(statistics::kale_statistic(x, y, k, pc.lambda),
                                    statistics::kale_statistic(y, x, k, pc.lambda));
                    break;
                default:
                    want = std::max(
                        statistics::fdiv_statistic(specs[f].divergence, sx, k, pc.lambda),
                        statistics::fdiv_statistic(specs[f].divergence, sy, k, pc.lambda));
            }
            INFO(results[f].statistic_name << " bw=" << pc.bandwidth << " lambda=" << pc.lambda);
            double tol = specs[f].kind == statistics::StatKind::Kale ? 1e-5 : 1e-8;
            CHECK(pc.value == Approx(want).margin(tol));
        }
    }
}

TEST_CASE("low-rank and dense engine backends agree") {
    Rng rng(13);
    auto x = testsupport::random_points(rng, 30, 1);
    auto y = testsupport::random_points(rng, 30, 1, 1.2);
    auto specs = statistics::parse_statistics({"chi2", "mmd", "kale"});

    engine::EngineParams dense;
    dense.bandwidths = {2.5, 5.0};  // smooth kernels compress
    dense.lambdas = {0.01, 1.0};
    dense.lowrank_max_fraction = 0.0;  // force dense
    engine::EngineParams lowrank = dense;
    lowrank.lowrank_max_fraction = 0.9;

    auto a = engine::run(x, y, specs, dense, 8, 5);
    auto b = engine::run(x, y, specs, lowrank, 8, 5);
    for (std::size_t f = 0; f < specs.size(); ++f) {
        double diff = (a.families[f].values - b.families[f].values).cwiseAbs().maxCoeff();
        INFO(specs[f].name());
        CHECK(diff < 1e-7);
    }
}

TEST_CASE("grouped and dense engine backends agree on duplicate-heavy data") {
    Rng rng(17);
    // atomic data: 40 points on a 3-value lattice per side
    SampleSet x(20, 1), y(20, 1);
    for (Eigen::Index i = 0; i < 20; ++i) {
        x(i, 0) = static_cast<double>(rng.integer(3));
        y(i, 0) = static_cast<double>(rng.integer(3)) * 1.5;
    }
    auto specs = statistics::parse_statistics({"hs:gamma=1.2", "mmd", "kl"});

    engine::EngineParams plain;
    plain.bandwidths = {1.0, 2.0};
    plain.lambdas = {0.1, 1.0};
    plain.allow_grouped = false;
    plain.lowrank_max_fraction = 0.0;
    engine::EngineParams grouped = plain;
    grouped.allow_grouped = true;

    auto a = engine::run(x, y, specs, plain, 12, 3);
    auto b = engine::run(x, y, specs, grouped, 12, 3);
    for (std::size_t f = 0; f < specs.size(); ++f) {
        double diff = (a.families[f].values - b.families[f].values).cwiseAbs().maxCoeff();
        INFO(specs[f].name());
        CHECK(diff < 1e-8);
    }
}

TEST_CASE("single test on strongly separated samples") {
    Rng rng(19);
    auto x = testsupport::random_points(rng, 30, 1);
    SampleSet y = testsupport::random_points(rng, 30, 1);
    y.array() += 8.0;

    auto res = single_test(x, y, StatisticSpec::parse("mmd"), small_config(30, 7));
    CHECK(res.p_value == Approx(1.0 / 31.0));  // all permuted values below observed
    CHECK(res.reject);
    CHECK(res.permuted.size() == 30);
    CHECK(res.p_value >= 1.0 / (res.permutations + 1.0) - 1e-15);
}

TEST_CASE("complete ties give p = 1") {
    SampleSet x = SampleSet::Constant(8, 1, 2.0);
    SampleSet y = SampleSet::Constant(8, 1, 2.0);
    TestConfig cfg = small_config(25);
    cfg.bandwidths = {1.0};  // the data-driven grid would reject degenerate data
    auto res = single_test(x, y, StatisticSpec::parse("chi2"), cfg);
    CHECK(res.p_value == Approx(1.0));
    CHECK_FALSE(res.reject);
}

TEST_CASE("p-values never undercut 1/(B+1) and results serialize") {
    Rng rng(23);
    auto x = testsupport::random_points(rng, 12, 1);
    auto y = testsupport::random_points(rng, 12, 1);
    auto res = single_test(x, y, StatisticSpec::parse("tv"), small_config(15, 3));
    CHECK(res.p_value >= 1.0 / 16.0 - 1e-15);
    auto j = to_json(res);
    CHECK(j["statistic_name"] == "tv");
    CHECK(j["B"] == 15);
    CHECK(j.contains("p_value"));
    CHECK(j["per_config"].size() == res.per_config.size());
}

TEST_CASE("results are identical across thread counts") {
    Rng rng(29);
    auto x = testsupport::random_points(rng, 24, 2);
    auto y = testsupport::random_points(rng, 24, 2, 1.3);
    auto spec = StatisticSpec::parse("chi2");

    TestConfig one = small_config(20, 11);
    TestConfig four = one;
    four.threads = 4;
    auto a = single_test(x, y, spec, one);
    auto b = single_test(x, y, spec, four);
    CHECK(a.observed == b.observed);
    CHECK(a.p_value == b.p_value);
    for (std::size_t i = 0; i < a.permuted.size(); ++i) CHECK(a.permuted[i] == b.permuted[i]);
}

TEST_CASE("level calibration at unit scale") {
    // P = Q uniforms; rejection rate must stay near the nominal level. The
    // acceptance suite runs the full-scale version of this check.
    auto specs = statistics::parse_statistics({"mmd", "chi2", "hs:gamma=1.0"});
    const int runs = 60;
    std::vector<int> rejections(specs.size(), 0);
    for (int run = 0; run < runs; ++run) {
        Rng rx(derive_seed(1000, run * 2));
        Rng ry(derive_seed(1000, run * 2 + 1));
        auto x = benchmarks::sample_perturbed_uniform(1, 0.0, 50, rx);
        auto y = benchmarks::sample_perturbed_uniform(1, 0.0, 50, ry);
        TestConfig cfg = small_config(60, derive_seed(7, run));
        auto results = run_tests(x, y, specs, cfg);
        for (std::size_t f = 0; f < specs.size(); ++f)
            rejections[f] += results[f].reject ? 1 : 0;
    }
    for (std::size_t f = 0; f < specs.size(); ++f) {
        INFO(specs[f].name() << " rejected " << rejections[f] << "/" << runs);
        CHECK(rejections[f] <= 8);  // generous binomial bound at level 0.05
    }
}

TEST_CASE("null p-values are stochastically no smaller than uniform") {
    const int runs = 150;
    std::vector<double> pvalues;
    for (int run = 0; run < runs; ++run) {
        Rng rx(derive_seed(400, run * 2));
        Rng ry(derive_seed(400, run * 2 + 1));
        auto x = testsupport::random_points(rx, 30, 1);
        auto y = testsupport::random_points(ry, 30, 1);
        auto res = single_test(x, y, StatisticSpec::parse("mmd"), small_config(40, derive_seed(5, run)));
        pvalues.push_back(res.p_value);
    }
    // one-sided KS: empirical CDF must not exceed the uniform CDF by more
    // than the 1% critical value
    std::sort(pvalues.begin(), pvalues.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < pvalues.size(); ++i) {
        double ecdf = static_cast<double>(i + 1) / runs;
        worst = std::max(worst, ecdf - pvalues[i]);
    }
    CHECK(worst < 1.52 / std::sqrt(static_cast<double>(runs)));
}

TEST_CASE("upper quantile follows the order-statistic convention") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(permutation::detail::upper_quantile(v, 0.0) == 10.0);   // never exceeded
    CHECK(permutation::detail::upper_quantile(v, 0.05) == 10.0);  // ceil(0.95*10) = 10
    CHECK(permutation::detail::upper_quantile(v, 0.25) == 8.0);   // ceil(0.75*10) = 8
    CHECK(permutation::detail::upper_quantile(v, 1.0) == 1.0);
}

TEST_CASE("f-agg requires a practical permutation floor") {
    Rng rng(31);
    auto x = testsupport::random_points(rng, 16, 1);
    auto y = testsupport::random_points(rng, 16, 1);
    auto specs = statistics::parse_statistics({"chi2"});
    CHECK_THROWS(f_agg_test(x, y, specs, small_config(50)));
}

TEST_CASE("f-agg with one divergence collapses to the single-test decision") {
    Rng rng(37);
    auto x = testsupport::random_points(rng, 24, 1);
    SampleSet y = testsupport::random_points(rng, 24, 1);
    y.array() += 6.0;  // far from the null, decision insensitive to u

    TestConfig cfg = small_config(120, 13);
    auto spec = StatisticSpec::parse("chi2");
    auto agg = f_agg_test(x, y, {spec}, cfg);
    auto single = single_test(x, y, spec, cfg);
    CHECK(agg.reject == single.reject);
    CHECK(agg.reject);
    REQUIRE(agg.divergences.size() == 1);
    CHECK(agg.divergences[0].p_value == Approx(single.p_value));

    // p-value rule and quantile rule are the same decision at u = alpha
    std::vector<double> batch(single.permuted);
    batch.push_back(single.observed);
    std::sort(batch.begin(), batch.end());
    bool quantile_rule = single.observed > permutation::detail::upper_quantile(batch, cfg.alpha);
    CHECK(quantile_rule == single.reject);
}

TEST_CASE("f-agg level holds at unit scale") {
    auto specs = statistics::parse_statistics({"chi2", "kl", "hs:gamma=1.0"});
    const int runs = 40;
    int rejections = 0;
    for (int run = 0; run < runs; ++run) {
        Rng rx(derive_seed(900, run * 2));
        Rng ry(derive_seed(900, run * 2 + 1));
        auto x = benchmarks::sample_perturbed_uniform(1, 0.0, 40, rx);
        auto y = benchmarks::sample_perturbed_uniform(1, 0.0, 40, ry);
        TestConfig cfg = small_config(100, derive_seed(17, run));
        if (f_agg_test(x, y, specs, cfg).reject) ++rejections;
    }
    CHECK(rejections <= 7);
}
