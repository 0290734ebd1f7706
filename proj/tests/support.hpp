#pragma once

// Shared test utilities: independent oracles and small statistical helpers.
// Everything here is deliberately written the slow, obvious way and stays
// independent of the library code paths it checks.

#include "fdtest/common.hpp"
#include "fdtest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace testsupport {

using fdtest::Matrix;
using fdtest::SampleSet;
using fdtest::Vector;

inline SampleSet random_points(fdtest::Rng& rng, Eigen::Index n, Eigen::Index d,
                               double scale = 1.0) {
    SampleSet out(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out(i, j) = scale * rng.normal();
    return out;
}

// Naive double-loop Gaussian Gram.
inline Matrix naive_gram(const SampleSet& a, const SampleSet& b, double bandwidth) {
    Matrix k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            double d2 = 0.0;
            for (Eigen::Index c = 0; c < a.cols(); ++c) {
                double diff = a(i, c) - b(j, c);
                d2 += diff * diff;
            }
            k(i, j) = std::exp(-d2 / (bandwidth * bandwidth));
        }
    return k;
}

// Spectral oracle for the regularized ratio: solves
//   (Sigma_hat_X + lambda I) h = mu_hat_Y - mu_hat_X
// in the span of the kernel sections of the joint sample, working in the
// eigenbasis of the joint Gram. Returns coefficients c with
//   r(u) = 1 + sum_i c_i k(z_i, u).
inline Vector spectral_ratio_coefficients(const SampleSet& x, const SampleSet& y,
                                          const fdtest::kernels::KernelConfig& kernel,
                                          double lambda) {
    const Eigen::Index m = x.rows(), n = y.rows();
    SampleSet z(m + n, x.cols());
    z << x, y;
    Matrix k = fdtest::kernels::gram(z, z, kernel);

    Vector d(m + n);
    d.head(m).setConstant(-1.0 / static_cast<double>(m));
    d.tail(n).setConstant(1.0 / static_cast<double>(n));

    // coefficient equation: (1/m) E_X K c + lambda c = d
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    const Matrix& u = es.eigenvectors();
    const Vector& w = es.eigenvalues();
    // in the eigenbasis c = U t: (1/m) U' E_X U diag(w) t + lambda t = U' d
    Matrix ex_basis = Matrix::Zero(m + n, m + n);
    ex_basis.diagonal().head(m).setConstant(1.0);
    Matrix lhs = (u.transpose() * ex_basis * u) * w.asDiagonal() / static_cast<double>(m);
    lhs.diagonal().array() += lambda;
    Vector t = lhs.fullPivLu().solve(u.transpose() * d);
    return u * t;
}

inline double spectral_ratio_value(const SampleSet& x, const SampleSet& y, const Vector& coeffs,
                                   const fdtest::kernels::KernelConfig& kernel,
                                   const Eigen::RowVectorXd& point) {
    SampleSet z(x.rows() + y.rows(), x.cols());
    z << x, y;
    Vector kv = fdtest::kernels::kernel_row(z, point, kernel);
    return 1.0 + kv.dot(coeffs);
}

// ||h||^2 for the spectral solution, h = 2 sum_i c_i k(z_i, .).
inline double spectral_witness_norm_sq(const SampleSet& x, const SampleSet& y,
                                       const Vector& coeffs,
                                       const fdtest::kernels::KernelConfig& kernel) {
    SampleSet z(x.rows() + y.rows(), x.cols());
    z << x, y;
    Matrix k = fdtest::kernels::gram(z, z, kernel);
    return 4.0 * coeffs.dot(k * coeffs);
}

// One-sample Kolmogorov-Smirnov statistic against U(0,1).
inline double ks_uniform_statistic(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    auto n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(values[i] - lo), std::abs(values[i] - hi)});
    }
    return d;
}

// Asymptotic Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
inline double ks_p_value(double statistic, double n_effective) {
    double lambda = (std::sqrt(n_effective) + 0.12 + 0.11 / std::sqrt(n_effective)) * statistic;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k)
        sum += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(sum, 0.0, 1.0);
}

// Two-sample KS p-value.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double fa = static_cast<double>(i + 1) / static_cast<double>(a.size());
        double fb = static_cast<double>(j + 1) / static_cast<double>(b.size());
        if (a[i] <= b[j]) ++i;
        else ++j;
        double ca = static_cast<double>(i) / static_cast<double>(a.size());
        double cb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(ca - cb));
        (void)fa;
        (void)fb;
    }
    double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                static_cast<double>(a.size() + b.size());
    return ks_p_value(d, ne);
}

}  // namespace testsupport
