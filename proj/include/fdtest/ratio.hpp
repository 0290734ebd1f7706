#pragma once

#include "fdtest/common.hpp"
#include "fdtest/kernels.hpp"

#include <cmath>

namespace fdtest::ratio {

// Fitted regularized likelihood-ratio estimator. For any point u,
//   r(u) = k_{uX} beta_x + k_{uY} beta_y + 1,
// and the witness h = 2(r - 1) is the RKHS element with coefficients 2*beta.
struct RatioModel {
    SampleSet x_fit;
    SampleSet y_fit;
    kernels::KernelConfig kernel;
    double lambda = 0.0;
    Vector beta_x;
    Vector beta_y;
    double witness_norm_sq = 0.0;  // ||h||_H^2 = 4 beta^T K_ZZ beta
};

namespace detail {

// SPD solve of (m*lambda*I + Kxx) X = B with a one-shot diagonal jitter
// retry for near-duplicate fit points.
inline Matrix ridge_solve(const Matrix& kxx, double ridge, const Matrix& rhs) {
    Matrix l = kxx;
    l.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(l);
    if (llt.info() != Eigen::Success) {
        l.diagonal().array() += 1e-10 * ridge;
        llt.compute(l);
        require(llt.info() == Eigen::Success,
                "fit_ratio: factorization failed on non-finite or degenerate Gram");
    }
    return llt.solve(rhs);
}

}  // namespace detail

inline RatioModel fit_ratio(const SampleSet& x, const SampleSet& y,
                            const kernels::KernelConfig& kernel, double lambda) {
    require(lambda > 0.0, "fit_ratio: lambda must be positive");
    require(x.cols() == y.cols(), "fit_ratio: dimension mismatch");
    require(x.rows() >= 1 && y.rows() >= 1, "fit_ratio: empty sample");

    const auto m = x.rows();
    const auto n = y.rows();
    Matrix kxx = kernels::gram(x, x, kernel);
    Matrix kxy = kernels::gram(x, y, kernel);

    double inv_ml = 1.0 / (m * lambda);
    double inv_nl = 1.0 / (n * lambda);

    // Right-hand side (1/(m*lambda)) Kxx 1_m - (1/(n*lambda)) Kxy 1_n solved
    // against L = m*lambda*I + Kxx in one pass.
    Vector rhs = inv_ml * (kxx * Vector::Ones(m)) - inv_nl * (kxy * Vector::Ones(n));
    Vector solved = detail::ridge_solve(kxx, m * lambda, rhs);

    RatioModel model;
    model.x_fit = x;
    model.y_fit = y;
    model.kernel = kernel;
    model.lambda = lambda;
    model.beta_x = solved - Vector::Constant(m, inv_ml);
    model.beta_y = Vector::Constant(n, inv_nl);

    // ||h||^2 = 4 [bx' Kxx bx + 2 bx' Kxy by + by' Kyy by]; by is constant so
    // the Kyy term reduces to a sum over the Gram of Y.
    Matrix kyy = kernels::gram(y, y, kernel);
    double quad = model.beta_x.dot(kxx * model.beta_x) +
                  2.0 * model.beta_x.dot(kxy * model.beta_y) +
                  model.beta_y.dot(kyy * model.beta_y);
    model.witness_norm_sq = std::max(0.0, 4.0 * quad);
    return model;
}

inline Vector evaluate_ratio(const RatioModel& model, const SampleSet& u) {
    require(u.cols() == model.x_fit.cols(), "evaluate_ratio: dimension mismatch");
    Vector r = kernels::gram(u, model.x_fit, model.kernel) * model.beta_x +
               kernels::gram(u, model.y_fit, model.kernel) * model.beta_y +
               Vector::Ones(u.rows());
    require(r.allFinite(), "evaluate_ratio: non-finite result");
    return r;
}

// Theory-driven schedule lambda_{N,theta} = N^{-1/(2(theta+1))}.
inline double lambda_schedule(long n, double theta = 2.0) {
    require(n >= 1, "lambda_schedule: N must be >= 1");
    require(theta > 1.0 && theta <= 2.0, "lambda_schedule: theta must lie in (1,2]");
    return std::pow(static_cast<double>(n), -1.0 / (2.0 * (theta + 1.0)));
}

}  // namespace fdtest::ratio
