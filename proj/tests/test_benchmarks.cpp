#include "fdtest/benchmarks.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace fdtest;
using namespace fdtest::benchmarks;
using Catch::Approx;

TEST_CASE("a = 0 perturbed uniform passes a KS test against uniform") {
    int passes = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        auto s = sample_perturbed_uniform(1, 0.0, 400, rng);
        std::vector<double> values(s.data(), s.data() + s.rows());
        double d = testsupport::ks_uniform_statistic(values);
        if (testsupport::ks_p_value(d, 400.0) > 0.01) ++passes;
    }
    CHECK(passes >= 18);
}

TEST_CASE("a = 1 matches the analytic sine moment") {
    // E[sin(2 pi X)] under density 1 + sin(2 pi x) equals 1/2
    Rng rng(7);
    auto s = sample_perturbed_uniform(1, 1.0, 10000, rng);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) mean += std::sin(2.0 * M_PI * s(i, 0));
    mean /= static_cast<double>(s.rows());
    CHECK(mean == Approx(0.5).margin(0.05));
}

TEST_CASE("perturbed uniform stays in the cube for d = 2") {
    Rng rng(9);
    auto s = sample_perturbed_uniform(2, 0.7, 500, rng);
    CHECK(s.minCoeff() >= 0.0);
    CHECK(s.maxCoeff() <= 1.0);
    CHECK(s.cols() == 2);
    CHECK_THROWS(sample_perturbed_uniform(3, 0.5, 10, rng));
    CHECK_THROWS(sample_perturbed_uniform(1, 1.5, 10, rng));
}

TEST_CASE("expo1d basics") {
    Rng rng(11);
    auto s = sample_expo1d(0.0, 4.0, 0.01, 10000, rng);
    CHECK(s.mean() == Approx(1.0).margin(0.05));
    CHECK(s.minCoeff() >= 0.0);

    CHECK(expo1d_exponential_weight(2000.0) == Approx(0.5));
    CHECK(expo1d_exponential_weight(0.0) == Approx(1.0));
}

TEST_CASE("expo1d bump mass matches the mixture computation") {
    Rng rng(13);
    auto s = sample_expo1d(100.0, 4.0, 0.01, 100000, rng);
    double in_bump = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        if (s(i, 0) >= 3.97 && s(i, 0) <= 4.03) in_bump += 1.0;
    double fraction = in_bump / static_cast<double>(s.rows());
    // k/(2000+k) = 0.0476 plus the tiny exponential mass in the window
    CHECK(fraction == Approx(100.0 / 2100.0).margin(0.01));
}

TEST_CASE("expo1d alternative is detectably different from the null in the bump bin") {
    Rng rng0(17), rng1(18);
    auto null_sample = sample_expo1d(0.0, 4.0, 0.01, 10000, rng0);
    auto alt_sample = sample_expo1d(100.0, 4.0, 0.01, 10000, rng1);
    auto count_bin = [](const SampleSet& s) {
        double c = 0.0;
        for (Eigen::Index i = 0; i < s.rows(); ++i)
            if (s(i, 0) >= 3.97 && s(i, 0) <= 4.03) c += 1.0;
        return c;
    };
    // two-bin chi-square against the k = 0 expectation
    double expected = 10000.0 * (std::exp(-3.97) - std::exp(-4.03));
    double observed = count_bin(alt_sample);
    double chi2 = (observed - expected) * (observed - expected) / expected;
    CHECK(chi2 > 6.635);  // 1% critical value, 1 dof
    CHECK(count_bin(null_sample) < observed);
}

TEST_CASE("gaussian pair analytic ratio") {
    GaussianPair pair;
    pair.mean_p = Vector::Constant(1, 0.0);
    pair.mean_q = Vector::Constant(1, 3.0);
    pair.sigma = 1.0;
    Eigen::RowVectorXd pt(1);

    pt << 1.5;
    CHECK(pair.analytic_ratio(pt) == Approx(1.0));  // equidistant midpoint

    GaussianPair same = pair;
    same.mean_q = pair.mean_p;
    pt << 0.7;
    CHECK(same.analytic_ratio(pt) == Approx(1.0));

    GaussianPair half;
    half.mean_p = Vector::Constant(1, 0.0);
    half.mean_q = Vector::Constant(1, 0.5);
    pt << 0.0;
    CHECK(half.analytic_ratio(pt) == Approx(std::exp(0.125)));
}

TEST_CASE("generators are deterministic per seed") {
    Rng a(42), b(42), c(43);
    auto s1 = sample_expo1d(50.0, 4.0, 0.01, 200, a);
    auto s2 = sample_expo1d(50.0, 4.0, 0.01, 200, b);
    auto s3 = sample_expo1d(50.0, 4.0, 0.01, 200, c);
    CHECK((s1 - s2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s1 - s3).cwiseAbs().maxCoeff() > 0.0);

    Rng d(42), e(42);
    auto u1 = sample_perturbed_uniform(2, 0.5, 100, d);
    auto u2 = sample_perturbed_uniform(2, 0.5, 100, e);
    CHECK((u1 - u2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rejection sampler acceptance rate matches the envelope bound") {
    // density mass 1 against the constant envelope 1 + a: acceptance rate is
    // 1/(1+a) in expectation
    Rng rng(23);
    const int n = 20000;
    for (double a : {0.0, 0.5, 1.0}) {
        long proposals = 0;
        auto s = sample_perturbed_uniform(1, a, n, rng, &proposals);
        CHECK(s.rows() == n);
        double rate = static_cast<double>(n) / static_cast<double>(proposals);
        CHECK(rate == Approx(1.0 / (1.0 + a)).margin(0.02));
    }
}
