#pragma once

#include "fdtest/common.hpp"
#include "fdtest/divergences.hpp"
#include "fdtest/kale.hpp"
#include "fdtest/kernels.hpp"
#include "fdtest/ratio.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace fdtest::statistics {

// Disjoint fit/eval blocks of the two samples. The fit blocks estimate the
// ratio, the eval blocks estimate the variational expectations.
struct SplitSamples {
    SampleSet x_fit, x_eval, y_fit, y_eval;
};

// Deterministic prefix split: the first ceil(fraction*m) rows fit, the rest
// evaluate. Under permutation testing the pooled data is permuted and
// re-blocked before this is applied.
inline SplitSamples split(const SampleSet& x, const SampleSet& y, double fit_fraction = 0.5) {
    require(fit_fraction > 0.0 && fit_fraction < 1.0, "split: fit_fraction must lie in (0,1)");
    require(x.rows() >= 2 && y.rows() >= 2, "split: each sample needs at least two points");
    auto cut = [&](const SampleSet& s) {
        auto fit = static_cast<Eigen::Index>(
            std::ceil(fit_fraction * static_cast<double>(s.rows())));
        require(fit >= 1 && fit < s.rows(), "split: a block would be empty");
        return fit;
    };
    Eigen::Index mx = cut(x), my = cut(y);
    SplitSamples s;
    s.x_fit = x.topRows(mx);
    s.x_eval = x.bottomRows(x.rows() - mx);
    s.y_fit = y.topRows(my);
    s.y_eval = y.bottomRows(y.rows() - my);
    return s;
}

// Variational estimator terms computed from already-evaluated ratio values.
inline double fdiv_from_ratios(const divergences::FDivergenceSpec& spec,
                               const Vector& r_x_eval, const Vector& r_y_eval) {
    double witness = 0.0;
    for (Eigen::Index i = 0; i < r_x_eval.size(); ++i)
        witness += divergences::witness_value(spec, r_x_eval(i));
    witness /= static_cast<double>(r_x_eval.size());
    double conj = 0.0;
    for (Eigen::Index j = 0; j < r_y_eval.size(); ++j)
        conj += divergences::conjugate_of_witness(spec, r_y_eval(j));
    conj /= static_cast<double>(r_y_eval.size());
    return witness - conj;
}

inline double hs_from_ratios(double gamma, std::optional<double> temperature,
                             const Vector& r_x_eval, const Vector& r_y_eval) {
    require(gamma > 0.0, "hs_statistic: gamma must be positive");
    if (!temperature) {
        auto spec = divergences::FDivergenceSpec::make(divergences::Family::HockeyStick, gamma);
        return fdiv_from_ratios(spec, r_x_eval, r_y_eval);
    }
    auto smooth = [&](const Vector& r) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i)
            s += divergences::sigmoid_witness(gamma, *temperature, r(i));
        return s / static_cast<double>(r.size());
    };
    return smooth(r_x_eval) - gamma * smooth(r_y_eval);
}

inline double direct_from_ratios(const divergences::FDivergenceSpec& spec,
                                 const Vector& r_y_eval) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < r_y_eval.size(); ++j)
        s += divergences::generator_value(spec, r_y_eval(j));
    return s / static_cast<double>(r_y_eval.size());
}

// The closed form of fit_ratio estimates d(law of second arg)/d(law of first
// arg), so the Eq.-3 statistic for D(P||Q) fits on (Y_fit, X_fit) to make the
// evaluated ratio track dP/dQ.
inline ratio::RatioModel fit_on_split(const SplitSamples& s,
                                      const kernels::KernelConfig& kernel, double lambda) {
    return ratio::fit_ratio(s.y_fit, s.x_fit, kernel, lambda);
}

// Eq.-style plug-in estimator: mean_X f'(r) - mean_Y f*(f'(r)) on the eval
// blocks, with the ratio fitted on the fit blocks.
inline double fdiv_statistic(const divergences::FDivergenceSpec& spec, const SplitSamples& s,
                             const kernels::KernelConfig& kernel, double lambda) {
    auto model = fit_on_split(s, kernel, lambda);
    return fdiv_from_ratios(spec, ratio::evaluate_ratio(model, s.x_eval),
                            ratio::evaluate_ratio(model, s.y_eval));
}

inline double hs_statistic(double gamma, const SplitSamples& s,
                           const kernels::KernelConfig& kernel, double lambda,
                           std::optional<double> temperature = std::nullopt) {
    auto model = fit_on_split(s, kernel, lambda);
    return hs_from_ratios(gamma, temperature, ratio::evaluate_ratio(model, s.x_eval),
                          ratio::evaluate_ratio(model, s.y_eval));
}

// Direct plug-in baseline mean_Y f(r); comparison experiments only.
inline double direct_statistic(const divergences::FDivergenceSpec& spec, const SplitSamples& s,
                               const kernels::KernelConfig& kernel, double lambda) {
    auto model = fit_on_split(s, kernel, lambda);
    return direct_from_ratios(spec, ratio::evaluate_ratio(model, s.y_eval));
}

// Minimum-variance unbiased MMD^2: off-diagonal within-block means plus the
// -2/(mn) cross term.
inline double mmd_ustat(const SampleSet& x, const SampleSet& y,
                        const kernels::KernelConfig& kernel) {
    require(x.rows() >= 2 && y.rows() >= 2, "mmd_ustat: blocks need at least two points");
    auto m = static_cast<double>(x.rows());
    auto n = static_cast<double>(y.rows());
    Matrix kxx = kernels::gram(x, x, kernel);
    Matrix kyy = kernels::gram(y, y, kernel);
    Matrix kxy = kernels::gram(x, y, kernel);
    double sxx = kxx.sum() - kxx.diagonal().sum();
    double syy = kyy.sum() - kyy.diagonal().sum();
    return sxx / (m * (m - 1.0)) + syy / (n * (n - 1.0)) - 2.0 * kxy.sum() / (m * n);
}

// Regularized chi^2 (DrMMD): the chi^2 plug-in minus (lambda/4) ||h||_H^2 of
// the same fitted model.
inline double drmmd_statistic(const SplitSamples& s, const kernels::KernelConfig& kernel,
                              double lambda) {
    auto model = fit_on_split(s, kernel, lambda);
    auto spec = divergences::FDivergenceSpec::make(divergences::Family::PearsonChi2);
    double chi2 = fdiv_from_ratios(spec, ratio::evaluate_ratio(model, s.x_eval),
                                   ratio::evaluate_ratio(model, s.y_eval));
    return chi2 - 0.25 * lambda * model.witness_norm_sq;
}

// KALE uses every point of both samples; no fit/eval split.
inline double kale_statistic(const SampleSet& x, const SampleSet& y,
                             const kernels::KernelConfig& kernel, double tau,
                             const kale::KaleOptions& opts = {}) {
    return kale::solve_dense(x, y, kernel, tau, opts).value;
}

// Divergences are asymmetric; tests use the max over both directions.
template <typename Statistic>
double symmetrize(Statistic&& statistic, const SampleSet& x, const SampleSet& y) {
    return std::max(statistic(x, y), statistic(y, x));
}

}  // namespace fdtest::statistics
