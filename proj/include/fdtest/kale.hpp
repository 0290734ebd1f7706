#pragma once

#include "fdtest/common.hpp"
#include "fdtest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace fdtest::kale {

struct KaleOptions {
    int max_iterations = 500;
    double gradient_tol = 1e-7;  // infinity norm of the objective gradient
    double h_clip = 30.0;        // exp(h) guard; steps beyond are rejected
    // The objective evaluates through a cancellation of O(1) terms, so its
    // absolute precision floors near machine epsilon. When no step improves
    // it any further the iterate is accepted as converged provided the
    // gradient already sits below this looser bound.
    double stall_gradient_tol = 1e-5;
};

struct KaleResult {
    double value = 0.0;  // (1 + tau) * objective at the final iterate
    Vector alpha;
    int iterations = 0;
    double gradient_norm = 0.0;
    std::vector<double> objective_trace;  // accepted iterates only
};

// Newton ascent on the pooled-sample KALE objective
//   J(a) = 1 + mean_X h - mean-sum_Y exp(h) - (tau/2) a' K a,   h = K a,
// with the first m pooled points from X and the rest from Y. The Newton
// system factors blockwise: the X block is closed form and the Y block is an
// SPD solve of size n. Ops supplies the kernel products:
//   matvec(v)            -> K v on the pooled ordering
//   newton_solve(dinv,b) -> (K_YY + diag(dinv))^{-1} b
template <typename Ops>
KaleResult solve(const Ops& ops, Eigen::Index m, Eigen::Index n, double tau,
                 const KaleOptions& opts = {}, const Vector* init = nullptr) {
    require(tau > 0.0, "kale: tau must be positive");
    const Eigen::Index total = m + n;
    const double inf = std::numeric_limits<double>::infinity();

    Vector e_x = Vector::Zero(total);
    e_x.head(m).setConstant(1.0 / static_cast<double>(m));

    Vector alpha = Vector::Zero(total);
    Vector h = Vector::Zero(total);
    if (init && init->size() == total) {
        alpha = *init;
        h = ops.matvec(alpha);
    }

    auto eval_j = [&](const Vector& hv, double quad) -> double {
        double sum_exp = 0.0;
        for (Eigen::Index j = m; j < total; ++j) {
            if (hv(j) > opts.h_clip) return -inf;
            sum_exp += std::exp(hv(j));
        }
        double mean_x = hv.head(m).mean();
        return 1.0 + mean_x - sum_exp / static_cast<double>(n) - 0.5 * tau * quad;
    };

    KaleResult result;
    double quad = alpha.dot(h);  // a' K a
    double j_cur = eval_j(h, quad);
    if (!std::isfinite(j_cur)) {  // unusable warm start
        alpha.setZero();
        h.setZero();
        quad = 0.0;
        j_cur = eval_j(h, quad);
    }
    result.objective_trace.push_back(j_cur);

    double grad_norm = inf;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        // s = e_x - w - tau*a with w_j = exp(h_j)/n on the Y block.
        Vector s = e_x - tau * alpha;
        for (Eigen::Index j = m; j < total; ++j)
            s(j) -= std::exp(std::min(h(j), opts.h_clip)) / static_cast<double>(n);

        Vector grad = ops.matvec(s);
        grad_norm = grad.lpNorm<Eigen::Infinity>();
        if (grad_norm < opts.gradient_tol) break;

        // Newton direction from (D K + tau I) d = s: closed form on X, SPD
        // solve (K_YY + tau/n * diag(exp(-h_Y)) * n^2 ...) rewritten as
        // (K_YY + diag(dinv)) on Y with dinv_j = tau * n * exp(-h_j).
        Vector d = Vector::Zero(total);
        d.head(m) = s.head(m) / tau;
        Vector rhs(n), dinv(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double hj = std::clamp(h(m + j), -opts.h_clip, opts.h_clip);
            double dyj = std::exp(hj) / static_cast<double>(n);
            dinv(j) = tau / dyj;
            rhs(j) = s(m + j) / dyj;
        }
        // subtract K_YX d_X from the Y equation: rhs -= D^{-1} D K_YX d_X
        Vector kdx = ops.matvec(d);  // K * [d_X; 0]
        rhs -= kdx.tail(n);
        d.tail(n) = ops.newton_solve(dinv, rhs);

        Vector kd = kdx + [&] {
            Vector tail_only = Vector::Zero(total);
            tail_only.tail(n) = d.tail(n);
            return ops.matvec(tail_only);
        }();

        // Backtracking on the objective keeps the accepted trace monotone.
        double d_quad = d.dot(kd);
        double cross = alpha.dot(kd);
        double step = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vector h_new = h + step * kd;
            double quad_new = quad + 2.0 * step * cross + step * step * d_quad;
            double j_new = eval_j(h_new, quad_new);
            if (std::isfinite(j_new) && j_new > j_cur) {
                alpha += step * d;
                h = h_new;
                quad = quad_new;
                j_cur = j_new;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;  // objective resolved to machine precision
        result.objective_trace.push_back(j_cur);
    }

    if (grad_norm >= opts.gradient_tol) {
        // re-evaluate at the final iterate for the error payload
        Vector s = e_x - tau * alpha;
        for (Eigen::Index j = m; j < total; ++j)
            s(j) -= std::exp(std::min(h(j), opts.h_clip)) / static_cast<double>(n);
        Vector final_grad = ops.matvec(s);
        grad_norm = final_grad.lpNorm<Eigen::Infinity>();
        if (grad_norm >= opts.stall_gradient_tol) {
            std::ostringstream msg;
            msg << "kale: no convergence within max iterations, gradient norm " << grad_norm;
            throw std::runtime_error(msg.str());
        }
    }

    result.value = (1.0 + tau) * j_cur;
    result.alpha = alpha;
    result.iterations = it;
    result.gradient_norm = grad_norm;
    return result;
}

// Dense kernel products for the standalone path.
struct DenseOps {
    Matrix k;       // pooled Gram, X rows first
    Eigen::Index m = 0;

    Vector matvec(const Vector& v) const { return k * v; }

    Vector newton_solve(const Vector& dinv, const Vector& b) const {
        Eigen::Index n = k.rows() - m;
        Matrix sys = k.bottomRightCorner(n, n);
        sys.diagonal() += dinv;
        Eigen::LLT<Matrix> llt(sys);
        require(llt.info() == Eigen::Success, "kale: Newton system factorization failed");
        return llt.solve(b);
    }
};

inline KaleResult solve_dense(const SampleSet& x, const SampleSet& y,
                              const kernels::KernelConfig& kernel, double tau,
                              const KaleOptions& opts = {}) {
    require(x.cols() == y.cols(), "kale: dimension mismatch");
    SampleSet pooled(x.rows() + y.rows(), x.cols());
    pooled << x, y;
    DenseOps ops;
    ops.k = kernels::gram(pooled, pooled, kernel);
    ops.m = x.rows();
    return solve(ops, x.rows(), y.rows(), tau, opts);
}

}  // namespace fdtest::kale
