#include "fdtest/divergences.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace fdtest;
using namespace fdtest::divergences;
using Catch::Approx;

namespace {

std::vector<double> ratio_grid() {
    std::vector<double> grid;
    for (double r = 0.1; r <= 10.0; r += 0.05) grid.push_back(r);
    return grid;
}

}  // namespace

TEST_CASE("witness values from the generator table") {
    auto chi2 = FDivergenceSpec::make(Family::PearsonChi2);
    CHECK(witness_value(chi2, 2.0) == Approx(2.0));

    auto kl = FDivergenceSpec::make(Family::KL);
    CHECK(witness_value(kl, 1.0) == Approx(1.0));

    auto hs = FDivergenceSpec::make(Family::HockeyStick, 1.0);
    CHECK(witness_value(hs, 0.5) == 0.0);
    CHECK(witness_value(hs, 1.0) == 1.0);  // f'(gamma) = 1 convention

    auto tv = FDivergenceSpec::make(Family::TotalVariation);
    CHECK(witness_value(tv, 1.0) == 0.5);  // sign(0) = +1 convention
}

TEST_CASE("conjugate-of-witness closed forms") {
    auto kl = FDivergenceSpec::make(Family::KL);
    CHECK(conjugate_of_witness(kl, 1.0) == Approx(1.0));  // e^{f'(1)-1} = 1

    auto chi2 = FDivergenceSpec::make(Family::PearsonChi2);
    CHECK(conjugate_of_witness(chi2, 1.0) == Approx(0.0));

    auto hs2 = FDivergenceSpec::make(Family::HockeyStick, 2.0);
    CHECK(conjugate_of_witness(hs2, 3.0) == Approx(2.0));
    CHECK(conjugate_of_witness(hs2, 1.0) == 0.0);
}

TEST_CASE("non-finite ratios are rejected") {
    auto kl = FDivergenceSpec::make(Family::KL);
    CHECK_THROWS(witness_value(kl, std::numeric_limits<double>::quiet_NaN()));
    CHECK_THROWS(conjugate_of_witness(kl, std::numeric_limits<double>::infinity()));
}

TEST_CASE("clamping keeps log-based witnesses finite") {
    for (const auto& spec : registry()) {
        CHECK(std::isfinite(witness_value(spec, 0.0)));
        CHECK(std::isfinite(witness_value(spec, -3.0)));
        CHECK(std::isfinite(conjugate_of_witness(spec, 0.0)));
    }
}

TEST_CASE("f is convex with f(1) = 0 on every registered spec") {
    for (const auto& spec : registry()) {
        if (spec.family == Family::HockeyStick && spec.param < 1.0) continue;
        CHECK(std::abs(generator_value(spec, 1.0)) < 1e-12);
        auto grid = ratio_grid();
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            double second_diff = generator_value(spec, grid[i - 1]) -
                                 2.0 * generator_value(spec, grid[i]) +
                                 generator_value(spec, grid[i + 1]);
            CHECK(second_diff >= -1e-9);
        }
    }
}

TEST_CASE("Fenchel-Young equality validates every table row") {
    // f*(f'(r)) = r f'(r) - f(r) at the optimum; this pins the conjugate and
    // derivative columns against each other.
    for (const auto& spec : registry()) {
        for (double r : ratio_grid()) {
            double lhs = conjugate_of_witness(spec, r);
            double rhs = r * witness_value(spec, r) - generator_value(spec, r);
            INFO(family_name(spec.family) << " at r=" << r);
            CHECK(lhs == Approx(rhs).margin(1e-8));
        }
        CHECK(std::abs(witness_value(spec, 1.0) * 1.0 - generator_value(spec, 1.0) -
                       conjugate_of_witness(spec, 1.0)) < 1e-12);
    }
}

TEST_CASE("witness is nondecreasing in the ratio") {
    for (const auto& spec : registry()) {
        auto grid = ratio_grid();
        for (std::size_t i = 1; i < grid.size(); ++i)
            CHECK(witness_value(spec, grid[i]) >= witness_value(spec, grid[i - 1]) - 1e-12);
    }
}

TEST_CASE("raw conjugate composes to the closed form") {
    for (const auto& spec : registry()) {
        if (spec.family == Family::TotalVariation || spec.family == Family::HockeyStick)
            continue;  // witness values sit on the conjugate domain boundary
        for (double r : {0.3, 0.8, 1.0, 2.0, 6.0}) {
            double composed = conjugate(spec, witness_value(spec, r));
            INFO(family_name(spec.family) << " at r=" << r);
            CHECK(composed == Approx(conjugate_of_witness(spec, r)).margin(1e-9));
        }
    }
}

TEST_CASE("conjugate domain violations throw") {
    CHECK_THROWS_AS(conjugate(FDivergenceSpec::make(Family::ReverseKL), 0.5), std::domain_error);
    CHECK_THROWS_AS(conjugate(FDivergenceSpec::make(Family::JensenShannon), 1.0),
                    std::domain_error);
    CHECK_THROWS_AS(conjugate(FDivergenceSpec::make(Family::SquaredHellinger), 1.5),
                    std::domain_error);
}

TEST_CASE("lambert w solves w e^w = t") {
    for (double t : {1e-6, 0.1, 1.0, std::exp(1.0), 25.0, 1e6}) {
        double w = lambert_w(t);
        CHECK(std::abs(w * std::exp(w) - t) <= 1e-10 * (1.0 + t));
    }
    CHECK(lambert_w(std::exp(1.0)) == Approx(1.0));
}

TEST_CASE("sigmoid witness values and limits") {
    CHECK(sigmoid_witness(1.0, 0.5, 1.0) == Approx(0.5));
    CHECK(sigmoid_witness(1.0, 0.1, 2.0) == Approx(1.0 / (1.0 + std::exp(-10.0))));
    CHECK(sigmoid_witness(1.0, 1.0, 1.0) == Approx(0.5));
    CHECK(sigmoid_witness(1.0, 1.0, 500.0) == Approx(1.0));
    CHECK_THROWS(sigmoid_witness(1.0, 0.0, 1.0));
    CHECK_THROWS(sigmoid_witness(1.0, -1.0, 1.0));
}

TEST_CASE("sigmoid witness monotone with logistic reflection symmetry") {
    double gamma = 1.5, temp = 0.3;
    double prev = 0.0;
    for (double r = -2.0; r <= 5.0; r += 0.1) {
        double v = sigmoid_witness(gamma, temp, r);
        CHECK(v >= prev - 1e-12);
        CHECK(v == Approx(1.0 - sigmoid_witness(gamma, temp, 2.0 * gamma - r)).margin(1e-12));
        prev = v;
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS(FDivergenceSpec::make(Family::HockeyStick, 0.0));
    CHECK_THROWS(FDivergenceSpec::make(Family::Alpha, 1.0));
    CHECK_THROWS(FDivergenceSpec::make(Family::CressieRead, 1.0));
}
