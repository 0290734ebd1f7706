#pragma once

#include "fdtest/common.hpp"
#include "fdtest/kernels.hpp"
#include "fdtest/statistics.hpp"
#include "fdtest/stats_util.hpp"

#include <cmath>

namespace fdtest::threesample {

struct RelativeTestResult {
    double mmd_xy = 0.0;
    double mmd_xw = 0.0;
    double var_pq = 0.0;      // variance of the MMD^2(X,Y) estimator
    double var_pr = 0.0;      // variance of the MMD^2(X,W) estimator
    double cov_pq_pr = 0.0;   // covariance through the shared X sample
    double z_score = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

// Median pairwise distance over the pooled three-sample data.
inline double median_heuristic_bandwidth(const SampleSet& x, const SampleSet& y,
                                         const SampleSet& w) {
    SampleSet pooled(x.rows() + y.rows() + w.rows(), x.cols());
    pooled << x, y, w;
    Matrix d2 = kernels::detail::squared_distances(pooled, pooled);
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(pooled.rows()) * (pooled.rows() - 1) / 2);
    for (Eigen::Index i = 0; i < pooled.rows(); ++i)
        for (Eigen::Index j = i + 1; j < pooled.rows(); ++j)
            dist.push_back(std::sqrt(d2(i, j)));
    std::sort(dist.begin(), dist.end());
    double med = kernels::sorted_quantile(dist, 0.5);
    require(med > 0.0, "median_heuristic: degenerate pooled sample");
    return med;
}

namespace detail {

// Centered row statistics of the U-statistic projections. For MMD^2(X,Y) the
// X-side projection at x_i is mean_j k(x_i, x_j) (j != i) minus
// mean_j k(x_i, y_j); variances of these empirical projections drive the
// joint normal approximation.
inline Vector within_row_means(const Matrix& k) {
    auto n = static_cast<double>(k.rows());
    return (k.rowwise().sum() - k.diagonal()) / (n - 1.0);
}

inline double centered_dot(const Vector& a, const Vector& b) {
    auto n = static_cast<double>(a.size());
    return (a.array() - a.mean()).matrix().dot((b.array() - b.mean()).matrix()) / (n - 1.0);
}

}  // namespace detail

// One-sided relative similarity test of H0: MMD(P,Q) <= MMD(P,R) given
// X ~ P, Y ~ Q, W ~ R, via the joint asymptotic normality of the two
// unbiased MMD^2 estimates sharing the X sample.
inline RelativeTestResult relative_mmd_test(const SampleSet& x, const SampleSet& y,
                                            const SampleSet& w,
                                            const kernels::KernelConfig& kernel,
                                            double alpha = 0.05) {
    require(x.rows() >= 2 && y.rows() >= 2 && w.rows() >= 2,
            "relative_mmd_test: all samples need at least two points");
    require(x.cols() == y.cols() && x.cols() == w.cols(), "relative_mmd_test: dimension mismatch");

    RelativeTestResult res;
    res.mmd_xy = statistics::mmd_ustat(x, y, kernel);
    res.mmd_xw = statistics::mmd_ustat(x, w, kernel);

    Matrix kxx = kernels::gram(x, x, kernel);
    Matrix kyy = kernels::gram(y, y, kernel);
    Matrix kww = kernels::gram(w, w, kernel);
    Matrix kxy = kernels::gram(x, y, kernel);
    Matrix kxw = kernels::gram(x, w, kernel);

    // Unequal sizes use the smallest block in the sqrt(m) scaling.
    auto m = static_cast<double>(std::min({x.rows(), y.rows(), w.rows()}));

    Vector ux = detail::within_row_means(kxx) - kxy.rowwise().mean();   // X-side proj of MMD(X,Y)
    Vector vx = detail::within_row_means(kxx) - kxw.rowwise().mean();   // X-side proj of MMD(X,W)
    Vector uy = detail::within_row_means(kyy) - kxy.colwise().mean().transpose();
    Vector vw = detail::within_row_means(kww) - kxw.colwise().mean().transpose();

    res.var_pq = 4.0 / m * (detail::centered_dot(ux, ux) + detail::centered_dot(uy, uy));
    res.var_pr = 4.0 / m * (detail::centered_dot(vx, vx) + detail::centered_dot(vw, vw));
    res.cov_pq_pr = 4.0 / m * detail::centered_dot(ux, vx);

    double denom = res.var_pq + res.var_pr - 2.0 * res.cov_pq_pr;
    if (!(denom > 0.0))
        throw std::runtime_error("relative_mmd_test: nonpositive variance denominator");

    res.z_score = (res.mmd_xy - res.mmd_xw) / std::sqrt(denom);
    res.p_value = stats_util::normal_cdf(-res.z_score);
    res.reject = res.p_value <= alpha;
    return res;
}

}  // namespace fdtest::threesample
