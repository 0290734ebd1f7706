#pragma once

#include "fdtest/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fdtest::kernels {

enum class KernelFamily { Gaussian };

// Gaussian kernel k(x,y) = exp(-||x-y||^2 / bandwidth^2); k(x,x) = 1.
struct KernelConfig {
    KernelFamily family = KernelFamily::Gaussian;
    double bandwidth = 1.0;
};

namespace detail {

inline void check_sample(const SampleSet& s, const char* name) {
    require(s.rows() > 0, std::string(name) + ": empty sample");
    require(s.allFinite(), std::string(name) + ": non-finite coordinates");
}

// ||x-y||^2 via the expansion ||x||^2 - 2<x,y> + ||y||^2, clamped at 0.
inline Matrix squared_distances(const SampleSet& a, const SampleSet& b) {
    Vector an = a.rowwise().squaredNorm();
    Vector bn = b.rowwise().squaredNorm();
    Matrix d = (-2.0 * a * b.transpose());
    d.colwise() += an;
    d.rowwise() += bn.transpose();
    return d.cwiseMax(0.0);
}

}  // namespace detail

inline Matrix gram(const SampleSet& a, const SampleSet& b, const KernelConfig& cfg) {
    detail::check_sample(a, "gram: A");
    detail::check_sample(b, "gram: B");
    require(a.cols() == b.cols(), "gram: dimension mismatch");
    require(cfg.bandwidth > 0.0, "gram: bandwidth must be positive");
    double inv = 1.0 / (cfg.bandwidth * cfg.bandwidth);
    return (-inv * detail::squared_distances(a, b)).array().exp().matrix();
}

inline Vector kernel_row(const SampleSet& points, const Eigen::RowVectorXd& u,
                         const KernelConfig& cfg) {
    double inv = 1.0 / (cfg.bandwidth * cfg.bandwidth);
    Vector d = (points.rowwise() - u).rowwise().squaredNorm();
    return (-inv * d.cwiseMax(0.0)).array().exp().matrix();
}

// Empirical quantile with linear interpolation between order statistics.
// `sorted` must be ascending.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
    require(!sorted.empty(), "quantile: empty data");
    if (sorted.size() == 1) return sorted[0];
    double h = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Bandwidth grid: `count` uniformly spaced values covering the interval from
// half the 5% quantile to twice the 95% quantile of the pairwise distances of
// Z (distinct index pairs only). count == 1 returns the interval midpoint.
inline std::vector<double> bandwidth_grid(const SampleSet& z, int count = 5) {
    detail::check_sample(z, "bandwidth_grid: Z");
    require(z.rows() >= 2, "bandwidth_grid: need at least two points");
    require(count >= 1, "bandwidth_grid: count must be >= 1");

    Matrix d2 = detail::squared_distances(z, z);
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(z.rows()) * (z.rows() - 1) / 2);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = i + 1; j < z.rows(); ++j)
            dist.push_back(std::sqrt(d2(i, j)));
    std::sort(dist.begin(), dist.end());

    double q05 = sorted_quantile(dist, 0.05);
    double q95 = sorted_quantile(dist, 0.95);
    require(q95 > 0.0, "bandwidth_grid: degenerate sample (all points identical)");

    double lo = 0.5 * q05;
    double hi = 2.0 * q95;
    if (lo <= 0.0) lo = 1e-6 * hi;  // duplicate points can push q05 to zero

    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = 0.5 * (lo + hi);
    } else {
        for (int i = 0; i < count; ++i)
            grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    }
    return grid;
}

}  // namespace fdtest::kernels
