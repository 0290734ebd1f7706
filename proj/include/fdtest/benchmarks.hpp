#pragma once

#include "fdtest/common.hpp"

#include <cmath>

namespace fdtest::benchmarks {

// Perturbed uniform on [0,1]^d with density 1 + a * prod_j sin(2 pi x_j),
// drawn by rejection sampling under the constant envelope 1 + a. a = 0 is the
// exact uniform null. `proposals` (optional) reports the rejection-sampler
// proposal count.
inline SampleSet sample_perturbed_uniform(int d, double a, Eigen::Index n, Rng& rng,
                                          long* proposals = nullptr) {
    require(d == 1 || d == 2, "perturbed_uniform: d must be 1 or 2");
    require(a >= 0.0 && a <= 1.0, "perturbed_uniform: amplitude must lie in [0,1]");
    require(n >= 1, "perturbed_uniform: need at least one point");
    SampleSet out(n, d);
    long attempts = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        while (true) {
            ++attempts;
            double prod = 1.0;
            Eigen::RowVectorXd candidate(d);
            for (int j = 0; j < d; ++j) {
                candidate(j) = rng.uniform();
                prod *= std::sin(2.0 * M_PI * candidate(j));
            }
            double density = 1.0 + a * prod;
            if (rng.uniform() * (1.0 + a) <= density) {
                out.row(i) = candidate;
                break;
            }
        }
    }
    if (proposals) *proposals = attempts;
    return out;
}

// Mixture weight of the exponential component in the Expo-1D alternative:
// the unnormalized reference n0(x) = 2000 e^{-x} has mass 2000 on [0, inf),
// the bump contributes k (up to negligible truncation below 0).
inline double expo1d_exponential_weight(double k) { return 2000.0 / (2000.0 + k); }

// Expo-1D benchmark: reference Exp(1) spectrum plus a narrow Gaussian bump of
// relative mass k/(2000+k) at mu (default 4, sigma 0.01), truncated to x >= 0.
inline SampleSet sample_expo1d(double k, double mu, double sigma, Eigen::Index n, Rng& rng) {
    require(k >= 0.0, "expo1d: k must be nonnegative");
    require(sigma > 0.0, "expo1d: sigma must be positive");
    require(n >= 1, "expo1d: need at least one point");
    double w = expo1d_exponential_weight(k);
    SampleSet out(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (rng.uniform() < w) {
            out(i, 0) = rng.exponential();
        } else {
            double v;
            do {
                v = mu + sigma * rng.normal();
            } while (v < 0.0);
            out(i, 0) = v;
        }
    }
    return out;
}

// Isotropic Gaussian pair with shared sigma; the analytic density ratio is
// the oracle for the ratio-estimator convergence checks.
struct GaussianPair {
    Vector mean_p;
    Vector mean_q;
    double sigma = 1.0;

    double analytic_ratio(const Eigen::RowVectorXd& x) const {
        double dq = (x.transpose() - mean_q).squaredNorm();
        double dp = (x.transpose() - mean_p).squaredNorm();
        return std::exp((dq - dp) / (2.0 * sigma * sigma));
    }
};

inline SampleSet sample_gaussian(const Vector& mean, double sigma, Eigen::Index n, Rng& rng) {
    require(sigma > 0.0, "gaussian: sigma must be positive");
    require(n >= 1, "gaussian: need at least one point");
    SampleSet out(n, mean.size());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < mean.size(); ++j)
            out(i, j) = mean(j) + sigma * rng.normal();
    return out;
}

inline std::pair<SampleSet, SampleSet> gaussian_pair(const GaussianPair& spec, Eigen::Index n,
                                                     Rng& rng) {
    auto x = sample_gaussian(spec.mean_p, spec.sigma, n, rng);
    auto y = sample_gaussian(spec.mean_q, spec.sigma, n, rng);
    return {std::move(x), std::move(y)};
}

}  // namespace fdtest::benchmarks
