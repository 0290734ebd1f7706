#pragma once

#include "fdtest/common.hpp"
#include "fdtest/kernels.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace fdtest::hswitness_sdp {

// Experimental direct optimization of the regularized Hockey-Stick witness.
// Kept out of the default test pipelines: the RKHS class smooths away the
// discontinuous witness and testing power is poor.
struct DualProblem {
    SampleSet z;          // stacked (x_1..x_n, y_1..y_n)
    kernels::KernelConfig kernel;
    Matrix v;             // lower-triangular factor with K = V' V
    double epsilon = 0.1; // privacy parameter; gamma = e^eps
    double tau = 1.0;     // regularization strength
    double box_bound = 1.0;  // M, the loss-domain box
    Eigen::Index n = 0;   // per-block sample count
};

struct FistaOptions {
    int max_iterations = 2000;
    double tolerance = 1e-6;   // on the iterate change
    double initial_step = 1.0; // backtracking shrinks from here
};

namespace detail {

// Lower-triangular V with K = V'V via the reversed Cholesky factor.
inline Matrix lower_factor_of(const Matrix& k) {
    const Eigen::Index n = k.rows();
    Matrix reversed(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            reversed(i, j) = k(n - 1 - i, n - 1 - j);
    Eigen::LLT<Matrix> llt(reversed);
    if (llt.info() != Eigen::Success) {
        reversed.diagonal().array() += 1e-12;
        llt.compute(reversed);
        require(llt.info() == Eigen::Success, "hswitness_sdp: Gram factorization failed");
    }
    Matrix lt = llt.matrixL().transpose();  // upper, K_rev = lt' lt
    Matrix v(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            v(i, j) = lt(n - 1 - i, n - 1 - j);
    return v;
}

// Spectral negative part: reconstruct with min(eigenvalue, 0).
inline Matrix negative_part(const Matrix& sym, Eigen::SelfAdjointEigenSolver<Matrix>& solver) {
    solver.compute(sym);
    require(solver.info() == Eigen::Success, "hswitness_sdp: eigendecomposition failed");
    Vector clipped = solver.eigenvalues().cwiseMin(0.0);
    return solver.eigenvectors() * clipped.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace detail

inline DualProblem make_problem(const SampleSet& x, const SampleSet& y,
                                const kernels::KernelConfig& kernel, double epsilon, double tau,
                                double box_bound = 1.0) {
    require(x.rows() == y.rows(), "hswitness_sdp: blocks must have equal size");
    require(tau > 0.0 && box_bound > 0.0, "hswitness_sdp: tau and M must be positive");
    DualProblem p;
    p.z.resize(x.rows() + y.rows(), x.cols());
    p.z << x, y;
    p.kernel = kernel;
    p.v = detail::lower_factor_of(kernels::gram(p.z, p.z, kernel));
    p.epsilon = epsilon;
    p.tau = tau;
    p.box_bound = box_bound;
    p.n = x.rows();
    return p;
}

// L1 anchor centers: alpha_x around -1/n, alpha_y around +e^eps/n.
inline Vector anchor_centers(const DualProblem& p) {
    auto n = static_cast<double>(p.n);
    Vector c(2 * p.n);
    c.head(p.n).setConstant(-1.0 / n);
    c.tail(p.n).setConstant(std::exp(p.epsilon) / n);
    return c;
}

inline double l1_term(const DualProblem& p, const Vector& alpha) {
    return p.box_bound * (alpha - anchor_centers(p)).lpNorm<1>();
}

inline double smooth_term(const DualProblem& p, const Vector& alpha) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    Matrix neg = detail::negative_part(p.v * alpha.asDiagonal() * p.v.transpose(), solver);
    return neg.squaredNorm() / (2.0 * p.tau);
}

inline double dual_objective(const DualProblem& p, const Vector& alpha) {
    require(alpha.size() == 2 * p.n, "dual_objective: alpha must have length 2n");
    return l1_term(p, alpha) + smooth_term(p, alpha);
}

// Gradient of the smooth half: g_i = (1/tau) v_i' [V Diag(alpha) V']_- v_i
// with v_i the i-th column of V.
inline Vector smooth_gradient(const DualProblem& p, const Vector& alpha) {
    require(alpha.size() == 2 * p.n, "smooth_gradient: alpha must have length 2n");
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    Matrix neg = detail::negative_part(p.v * alpha.asDiagonal() * p.v.transpose(), solver);
    Vector g(alpha.size());
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
        g(i) = p.v.col(i).dot(neg * p.v.col(i)) / p.tau;
    return g;
}

// Monotone FISTA with backtracking; the proximal map is soft-thresholding
// shifted to the L1 anchor centers.
inline Vector fista_solve(const DualProblem& p, const FistaOptions& opts = {}) {
    const Vector centers = anchor_centers(p);
    auto prox = [&](const Vector& v, double step) {
        Vector shifted = v - centers;
        double t = p.box_bound * step;
        Vector out(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            double s = shifted(i);
            out(i) = centers(i) + (s > t ? s - t : (s < -t ? s + t : 0.0));
        }
        return out;
    };

    Vector x_cur = centers;
    Vector x_prev = x_cur;
    Vector extrapolated = x_cur;
    double t_momentum = 1.0;
    double step = opts.initial_step;
    double f_cur = dual_objective(p, x_cur);

    for (int it = 0; it < opts.max_iterations; ++it) {
        double f_y = smooth_term(p, extrapolated);
        Vector grad = smooth_gradient(p, extrapolated);

        Vector candidate;
        for (int bt = 0; bt < 60; ++bt) {
            candidate = prox(extrapolated - step * grad, step);
            Vector diff = candidate - extrapolated;
            double quad_bound = f_y + grad.dot(diff) + diff.squaredNorm() / (2.0 * step);
            if (smooth_term(p, candidate) <= quad_bound + 1e-15) break;
            step *= 0.5;
        }

        double f_candidate = dual_objective(p, candidate);
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        if (f_candidate <= f_cur) {
            x_prev = x_cur;
            x_cur = candidate;
            f_cur = f_candidate;
            extrapolated = x_cur + ((t_momentum - 1.0) / t_next) * (x_cur - x_prev);
        } else {
            // objective went up: restart momentum at the best iterate
            extrapolated = x_cur;
            t_next = 1.0;
        }
        t_momentum = t_next;

        double change = (x_cur - x_prev).norm();
        if (it > 0 && change < opts.tolerance) return x_cur;
    }
    double change = (x_cur - x_prev).norm();
    throw std::runtime_error("fista_solve: no convergence, objective " + std::to_string(f_cur) +
                             ", iterate change " + std::to_string(change));
}

// Primal recovery. The paper's B = tau^{-1} V^{-1} [V Diag(a*) V']_- V^{-T}
// gives a negative-semidefinite quadratic form in the v(x) coordinates; the
// witness needs A positive semidefinite, so the evaluator carries -B.
struct WitnessEvaluator {
    SampleSet z;
    kernels::KernelConfig kernel;
    Matrix w;  // PSD coefficient matrix in the v(x) = (k(x, z_i))_i basis

    double operator()(const Eigen::RowVectorXd& point) const {
        Vector v = kernels::kernel_row(z, point, kernel);
        return v.dot(w * v);
    }

    Matrix feature_matrix() const { return w; }
};

inline WitnessEvaluator recover_witness(const DualProblem& p, const Vector& alpha_star) {
    require(alpha_star.size() == 2 * p.n, "recover_witness: alpha must have length 2n");
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    Matrix neg = detail::negative_part(p.v * alpha_star.asDiagonal() * p.v.transpose(), solver);
    Matrix vinv_neg = p.v.triangularView<Eigen::Lower>().solve(neg);
    Matrix b = p.v.triangularView<Eigen::Lower>().solve(vinv_neg.transpose()).transpose() / p.tau;
    WitnessEvaluator eval;
    eval.z = p.z;
    eval.kernel = p.kernel;
    eval.w = -0.5 * (b + b.transpose());  // sign flip for PSD; symmetrize roundoff
    return eval;
}

}  // namespace fdtest::hswitness_sdp
