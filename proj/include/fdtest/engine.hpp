#pragma once

#include "fdtest/common.hpp"
#include "fdtest/divergences.hpp"
#include "fdtest/kale.hpp"
#include "fdtest/kernels.hpp"
#include "fdtest/statistic_spec.hpp"
#include "fdtest/statistics.hpp"
#include "fdtest/thread_pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_map>
#include <vector>

namespace fdtest::engine {

// One hyperparameter configuration of a statistic family. MMD carries no
// regularization; its lambda is reported as NaN.
struct ConfigKey {
    double bandwidth = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
};

struct FamilyValues {
    statistics::StatisticSpec spec;
    std::vector<ConfigKey> configs;
    Matrix values;  // rows = permutations (row 0 = identity), cols = configs
};

struct EngineParams {
    std::vector<double> bandwidths;  // empty -> data-driven grid
    int bandwidth_count = 5;
    std::vector<double> lambdas = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    double fit_fraction = 0.5;
    int threads = 1;
    bool allow_grouped = true;     // collapse exactly-duplicated points
    double lowrank_tol = 1e-12;    // pivoted-Cholesky relative trace tolerance
    double lowrank_max_fraction = 0.40;
};

struct EngineResult {
    std::vector<FamilyValues> families;
    std::vector<double> bandwidths;
    Eigen::Index eval_x = 0, eval_y = 0;
};

namespace detail {

// ---------------------------------------------------------------------------
// Gram backends

// K ~= C C' by greedy pivoted Cholesky with on-the-fly kernel rows. Returns
// false when the spectrum does not compress below max_rank.
inline bool pivoted_cholesky(const SampleSet& pooled, const kernels::KernelConfig& cfg,
                             double rel_tol, Eigen::Index max_rank, Matrix& c_out) {
    const Eigen::Index n = pooled.rows();
    Vector diag = Vector::Ones(n);  // Gaussian kernel: k(x,x) = 1
    Matrix c(n, max_rank);
    double target = rel_tol * static_cast<double>(n);
    for (Eigen::Index r = 0; r < max_rank; ++r) {
        Eigen::Index pivot = 0;
        double best = diag.maxCoeff(&pivot);
        if (diag.sum() <= target || best <= 0.0) {
            c_out = c.leftCols(r);
            return true;
        }
        Vector col = kernels::kernel_row(pooled, pooled.row(pivot), cfg);
        if (r > 0) col.noalias() -= c.leftCols(r) * c.row(pivot).head(r).transpose();
        double scale = 1.0 / std::sqrt(best);
        c.col(r) = col * scale;
        diag -= c.col(r).cwiseProduct(c.col(r));
        diag = diag.cwiseMax(0.0);
        diag(pivot) = 0.0;
    }
    return false;
}

struct GroupInfo {
    std::vector<int> pattern;       // pooled point -> pattern id
    SampleSet representatives;      // one row per pattern
    int count = 0;
};

// Exact byte-level row grouping; only worthwhile for atomic data.
inline GroupInfo group_rows(const SampleSet& pooled) {
    GroupInfo info;
    const Eigen::Index n = pooled.rows(), d = pooled.cols();
    std::unordered_map<std::string, int> seen;
    seen.reserve(static_cast<std::size_t>(n));
    info.pattern.resize(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> rep_rows;
    std::string key(static_cast<std::size_t>(d) * sizeof(double), '\0');
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j)
            std::memcpy(key.data() + static_cast<std::size_t>(j) * sizeof(double), &pooled(i, j),
                        sizeof(double));
        auto [it, inserted] = seen.emplace(key, static_cast<int>(rep_rows.size()));
        if (inserted) rep_rows.push_back(i);
        info.pattern[static_cast<std::size_t>(i)] = it->second;
    }
    info.count = static_cast<int>(rep_rows.size());
    info.representatives.resize(info.count, d);
    for (int p = 0; p < info.count; ++p)
        info.representatives.row(p) = pooled.row(rep_rows[static_cast<std::size_t>(p)]);
    return info;
}

enum class BwKind { Dense, Lowrank, Grouped };

struct BwBackend {
    BwKind kind = BwKind::Dense;
    Matrix k;     // dense pooled Gram or grouped pattern Gram
    Matrix c;     // lowrank factor
};

// ---------------------------------------------------------------------------
// Per-permutation block bookkeeping

struct Blocks {
    std::vector<int> xf, xe, yf, ye;       // pooled row ids per block
    Vector mask_xf, mask_yf, mask_x, mask_y;  // indicators over pooled rows
};

inline Blocks make_blocks(const std::vector<int>& perm, Eigen::Index nx, Eigen::Index mx,
                          Eigen::Index my, Eigen::Index n_total) {
    Blocks b;
    const Eigen::Index ny = n_total - nx;
    b.xf.assign(perm.begin(), perm.begin() + mx);
    b.xe.assign(perm.begin() + mx, perm.begin() + nx);
    b.yf.assign(perm.begin() + nx, perm.begin() + nx + my);
    b.ye.assign(perm.begin() + nx + my, perm.end());
    b.mask_xf = Vector::Zero(n_total);
    b.mask_yf = Vector::Zero(n_total);
    b.mask_x = Vector::Zero(n_total);
    b.mask_y = Vector::Zero(n_total);
    for (Eigen::Index i = 0; i < nx; ++i) b.mask_x(perm[static_cast<std::size_t>(i)]) = 1.0;
    for (Eigen::Index i = nx; i < n_total; ++i) b.mask_y(perm[static_cast<std::size_t>(i)]) = 1.0;
    for (int id : b.xf) b.mask_xf(id) = 1.0;
    for (int id : b.yf) b.mask_yf(id) = 1.0;
    (void)ny;
    return b;
}

inline Matrix gather(const Matrix& k, const std::vector<int>& rows, const std::vector<int>& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k(rows[i], cols[j]);
    return out;
}

inline Matrix gather_rows(const Matrix& m, const std::vector<int>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

inline Vector gather_vec(const Vector& v, const std::vector<int>& ids) {
    Vector out(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(ids[i]);
    return out;
}

// Mean of fn(r) over two value ranges with optional weights.
template <typename Fn>
double weighted_mean(const Vector& values, const Vector* weights, Fn&& fn) {
    double sum = 0.0, wsum = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        double w = weights ? (*weights)(i) : 1.0;
        if (w == 0.0) continue;
        sum += w * fn(values(i));
        wsum += w;
    }
    return sum / wsum;
}

// Statistic value for one ratio-based family given evaluated ratios on the
// witness block (A) and conjugate block (B) plus the witness quadratic form.
inline double ratio_family_value(const statistics::StatisticSpec& spec, double lambda,
                                 double norm_quad, const Vector& r_a, const Vector* w_a,
                                 const Vector& r_b, const Vector* w_b) {
    using statistics::StatKind;
    switch (spec.kind) {
        case StatKind::FDiv: {
            double witness = weighted_mean(r_a, w_a, [&](double r) {
                return divergences::witness_value(spec.divergence, r);
            });
            double conj = weighted_mean(r_b, w_b, [&](double r) {
                return divergences::conjugate_of_witness(spec.divergence, r);
            });
            return witness - conj;
        }
        case StatKind::HsSigmoid: {
            auto smooth = [&](const Vector& r, const Vector* w) {
                return weighted_mean(r, w, [&](double v) {
                    return divergences::sigmoid_witness(spec.gamma, spec.temperature, v);
                });
            };
            return smooth(r_a, w_a) - spec.gamma * smooth(r_b, w_b);
        }
        case StatKind::Drmmd: {
            auto chi2 = divergences::FDivergenceSpec::make(divergences::Family::PearsonChi2);
            double witness = weighted_mean(r_a, w_a, [&](double r) {
                return divergences::witness_value(chi2, r);
            });
            double conj = weighted_mean(r_b, w_b, [&](double r) {
                return divergences::conjugate_of_witness(chi2, r);
            });
            // witness_norm_sq = 4 * norm_quad, so the penalty is lambda * quad
            return witness - conj - lambda * norm_quad;
        }
        default:
            throw std::logic_error("ratio_family_value: not a ratio family");
    }
}

// Kale ops over a permuted ordering of pooled points backed by the raw Gram.
struct KaleDenseOps {
    const Matrix* k = nullptr;
    const std::vector<int>* order = nullptr;  // permuted pooled ids, fit side first
    Eigen::Index m = 0;                       // size of the first block
    Matrix kyy;                               // gathered second-block Gram

    Vector matvec(const Vector& v) const {
        Vector scattered = Vector::Zero(k->rows());
        for (std::size_t i = 0; i < order->size(); ++i) scattered((*order)[i]) = v(static_cast<Eigen::Index>(i));
        Vector raw = (*k) * scattered;
        Vector out(v.size());
        for (std::size_t i = 0; i < order->size(); ++i) out(static_cast<Eigen::Index>(i)) = raw((*order)[i]);
        return out;
    }

    Vector newton_solve(const Vector& dinv, const Vector& b) const {
        Matrix sys = kyy;
        sys.diagonal() += dinv;
        Eigen::LLT<Matrix> llt(sys);
        require(llt.info() == Eigen::Success, "kale: Newton system factorization failed");
        return llt.solve(b);
    }
};

struct KaleLowrankOps {
    Matrix c_ordered;  // rows of the factor in permuted order
    Eigen::Index m = 0;

    Vector matvec(const Vector& v) const { return c_ordered * (c_ordered.transpose() * v); }

    Vector newton_solve(const Vector& dinv, const Vector& b) const {
        // (Cy Cy' + D)^{-1} b by Sherman-Morrison-Woodbury
        Eigen::Index n = c_ordered.rows() - m;
        auto cy = c_ordered.bottomRows(n);
        Vector dib = b.cwiseQuotient(dinv);
        Matrix dic = cy.array().colwise() / dinv.array();
        Matrix inner = Matrix::Identity(cy.cols(), cy.cols());
        inner.noalias() += cy.transpose() * dic;
        Eigen::LLT<Matrix> llt(inner);
        require(llt.info() == Eigen::Success, "kale: Woodbury factorization failed");
        return dib - dic * llt.solve(cy.transpose() * dib);
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------

inline std::vector<std::vector<int>> sample_permutations(Eigen::Index total_size, int count,
                                                         std::uint64_t seed) {
    require(total_size >= 1, "sample_permutations: empty pooled sample");
    require(count >= 0, "sample_permutations: negative count");
    std::vector<std::vector<int>> perms;
    perms.reserve(static_cast<std::size_t>(count) + 1);
    std::vector<int> identity(static_cast<std::size_t>(total_size));
    for (Eigen::Index i = 0; i < total_size; ++i) identity[static_cast<std::size_t>(i)] = static_cast<int>(i);
    perms.push_back(identity);
    for (int b = 1; b <= count; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<int> p = identity;
        for (std::size_t i = p.size(); i > 1; --i)
            std::swap(p[i - 1], p[rng.integer(i)]);
        perms.push_back(std::move(p));
    }
    return perms;
}

// Computes per-configuration statistic values for every family and every
// permutation row. Row 0 is the identity. The pooled Gram is assembled once
// per bandwidth; permutations only re-index it.
inline EngineResult run(const SampleSet& x, const SampleSet& y,
                        const std::vector<statistics::StatisticSpec>& families,
                        const EngineParams& params, int permutation_rows, std::uint64_t seed) {
    using statistics::StatKind;
    require(!families.empty(), "engine: no statistic families");
    require(x.cols() == y.cols(), "engine: dimension mismatch");
    require(x.rows() >= 4 && y.rows() >= 4, "engine: each sample needs at least 4 points");
    require(permutation_rows >= 1, "engine: need at least the identity row");

    const Eigen::Index nx = x.rows(), ny = y.rows(), n_total = nx + ny;
    SampleSet pooled(n_total, x.cols());
    pooled << x, y;
    require(pooled.allFinite(), "engine: non-finite input coordinates");

    const auto mx = static_cast<Eigen::Index>(std::ceil(params.fit_fraction * static_cast<double>(nx)));
    const auto my = static_cast<Eigen::Index>(std::ceil(params.fit_fraction * static_cast<double>(ny)));
    require(mx >= 1 && mx < nx && my >= 1 && my < ny, "engine: degenerate fit/eval split");
    const Eigen::Index ex = nx - mx, ey = ny - my;

    std::vector<double> bandwidths = params.bandwidths.empty()
                                         ? kernels::bandwidth_grid(pooled, params.bandwidth_count)
                                         : params.bandwidths;
    const auto nb = static_cast<Eigen::Index>(bandwidths.size());
    const auto nl = static_cast<Eigen::Index>(params.lambdas.size());
    require(nb >= 1 && nl >= 1, "engine: empty hyperparameter grid");

    bool any_ratio = false, any_mmd = false, any_kale = false;
    for (const auto& f : families) {
        any_ratio |= f.uses_ratio();
        any_mmd |= f.kind == StatKind::Mmd;
        any_kale |= f.kind == StatKind::Kale;
    }

    // Backend selection: exact duplicate grouping when it compresses and no
    // family needs the pooled optimizer; otherwise low-rank where the kernel
    // spectrum allows, dense elsewhere.
    detail::GroupInfo group;
    bool grouped = false;
    if (params.allow_grouped && !any_kale) {
        group = detail::group_rows(pooled);
        grouped = group.count <= static_cast<int>(n_total / 4);
    }
    std::vector<detail::BwBackend> backends(static_cast<std::size_t>(nb));
    for (Eigen::Index b = 0; b < nb; ++b) {
        kernels::KernelConfig cfg{kernels::KernelFamily::Gaussian, bandwidths[static_cast<std::size_t>(b)]};
        auto& back = backends[static_cast<std::size_t>(b)];
        if (grouped) {
            back.kind = detail::BwKind::Grouped;
            back.k = kernels::gram(group.representatives, group.representatives, cfg);
            continue;
        }
        auto max_rank = static_cast<Eigen::Index>(params.lowrank_max_fraction * static_cast<double>(n_total));
        Matrix c;
        if (max_rank >= 8 && detail::pivoted_cholesky(pooled, cfg, params.lowrank_tol, max_rank, c)) {
            back.kind = detail::BwKind::Lowrank;
            back.c = std::move(c);
        } else {
            require(n_total <= 6000,
                    "engine: sample too large for a dense Gram and the kernel spectrum does not compress");
            back.kind = detail::BwKind::Dense;
            back.k = kernels::gram(pooled, pooled, cfg);
        }
    }

    auto perms = sample_permutations(n_total, permutation_rows - 1, seed);

    EngineResult result;
    result.bandwidths = bandwidths;
    result.eval_x = ex;
    result.eval_y = ey;
    result.families.resize(families.size());
    for (std::size_t f = 0; f < families.size(); ++f) {
        auto& fam = result.families[f];
        fam.spec = families[f];
        bool per_lambda = families[f].kind != StatKind::Mmd;
        for (Eigen::Index b = 0; b < nb; ++b) {
            if (per_lambda)
                for (Eigen::Index l = 0; l < nl; ++l)
                    fam.configs.push_back({bandwidths[static_cast<std::size_t>(b)],
                                           params.lambdas[static_cast<std::size_t>(l)]});
            else
                fam.configs.push_back({bandwidths[static_cast<std::size_t>(b)],
                                       std::numeric_limits<double>::quiet_NaN()});
        }
        fam.values.resize(permutation_rows, static_cast<Eigen::Index>(fam.configs.size()));
    }

    auto process_row = [&](std::size_t row) {
        const auto& perm = perms[row];
        detail::Blocks blk = detail::make_blocks(perm, nx, mx, my, n_total);
        // eval rows in canonical order [X-eval; Y-eval]
        std::vector<int> eval_ids = blk.xe;
        eval_ids.insert(eval_ids.end(), blk.ye.begin(), blk.ye.end());

        // grouped: pattern count vectors replace masks entirely
        Vector wxf, wyf, wxe, wye;
        if (grouped) {
            wxf = Vector::Zero(group.count);
            wyf = Vector::Zero(group.count);
            wxe = Vector::Zero(group.count);
            wye = Vector::Zero(group.count);
            for (int id : blk.xf) wxf(group.pattern[static_cast<std::size_t>(id)]) += 1.0;
            for (int id : blk.yf) wyf(group.pattern[static_cast<std::size_t>(id)]) += 1.0;
            for (int id : blk.xe) wxe(group.pattern[static_cast<std::size_t>(id)]) += 1.0;
            for (int id : blk.ye) wye(group.pattern[static_cast<std::size_t>(id)]) += 1.0;
        }

        for (Eigen::Index b = 0; b < nb; ++b) {
            const auto& back = backends[static_cast<std::size_t>(b)];

            // --- per-direction ratio evaluations -------------------------
            // dir 0: fit (Xf, Yf), witness block X-eval, conjugate block Y-eval
            // dir 1: roles swapped
            struct DirValues {
                std::vector<Vector> r_a, r_b;   // per lambda
                std::vector<double> norm_quad;  // per lambda
            };
            DirValues dirs[2];
            Vector r_pat_a[2], r_pat_b[2];  // grouped variant keeps pattern values

            double mmd_value = 0.0;

            if (back.kind == detail::BwKind::Grouped) {
                const Matrix& kp = back.k;
                Vector t_xf = kp * wxf;
                Vector t_yf = kp * wyf;
                if (any_mmd) {
                    Vector wx = wxf + wxe, wy = wyf + wye;
                    double sxx = wx.dot(kp * wx) - static_cast<double>(nx);
                    double syy = wy.dot(kp * wy) - static_cast<double>(ny);
                    double sxy = wx.dot(kp * wy);
                    mmd_value = sxx / (static_cast<double>(nx) * (nx - 1.0)) +
                                syy / (static_cast<double>(ny) * (ny - 1.0)) -
                                2.0 * sxy / (static_cast<double>(nx) * static_cast<double>(ny));
                }
                if (any_ratio) {
                    for (int dir = 0; dir < 2; ++dir) {
                        const Vector& wf = dir == 0 ? wxf : wyf;
                        const Vector& wg = dir == 0 ? wyf : wxf;
                        const Vector& tf = dir == 0 ? t_xf : t_yf;
                        const Vector& tg = dir == 0 ? t_yf : t_xf;
                        double mf = dir == 0 ? static_cast<double>(mx) : static_cast<double>(my);
                        double ng = dir == 0 ? static_cast<double>(my) : static_cast<double>(mx);

                        std::vector<int> active;
                        for (int p = 0; p < group.count; ++p)
                            if (wf(p) > 0.0) active.push_back(p);
                        auto na = static_cast<Eigen::Index>(active.size());
                        Matrix kact = detail::gather(kp, active, active);
                        Vector wact(na), sqw(na), tf_act(na), tg_act(na);
                        for (Eigen::Index i = 0; i < na; ++i) {
                            wact(i) = wf(active[static_cast<std::size_t>(i)]);
                            sqw(i) = std::sqrt(wact(i));
                            tf_act(i) = tf(active[static_cast<std::size_t>(i)]);
                            tg_act(i) = tg(active[static_cast<std::size_t>(i)]);
                        }
                        Matrix msym = kact.array() * (sqw * sqw.transpose()).array();
                        auto& dv = dirs[dir];
                        dv.r_a.resize(static_cast<std::size_t>(nl));
                        dv.r_b.resize(static_cast<std::size_t>(nl));
                        dv.norm_quad.resize(static_cast<std::size_t>(nl));
                        for (Eigen::Index l = 0; l < nl; ++l) {
                            double lambda = params.lambdas[static_cast<std::size_t>(l)];
                            double cg = 1.0 / (ng * lambda);
                            Vector rhs = tf_act / (mf * lambda) - cg * tg_act;
                            Matrix sys = msym;
                            sys.diagonal().array() += mf * lambda;
                            Eigen::LLT<Matrix> llt(sys);
                            require(llt.info() == Eigen::Success, "engine: grouped factorization failed");
                            Vector v = llt.solve(sqw.cwiseProduct(rhs));
                            Vector beta_act = v.cwiseQuotient(sqw) - Vector::Constant(na, 1.0 / (mf * lambda));
                            // u = counts * beta scattered over all patterns
                            Vector u = Vector::Zero(group.count);
                            for (Eigen::Index i = 0; i < na; ++i)
                                u(active[static_cast<std::size_t>(i)]) = wact(i) * beta_act(i);
                            Vector kp_u = kp * u;
                            Vector r_pat = kp_u + cg * tg + Vector::Ones(group.count);
                            double quad = u.dot(kp_u) + 2.0 * cg * u.dot(tg) +
                                          cg * cg * (dir == 0 ? wyf.dot(t_yf) : wxf.dot(t_xf));
                            dv.r_a[static_cast<std::size_t>(l)] = r_pat;  // shared pattern values
                            dv.r_b[static_cast<std::size_t>(l)] = r_pat;
                            dv.norm_quad[static_cast<std::size_t>(l)] = quad;
                        }
                    }
                }
            } else {
                // point-space backends (dense / lowrank)
                const bool dense = back.kind == detail::BwKind::Dense;
                Vector s_xf, s_yf, s_x, s_y;
                auto matvec = [&](const Vector& v) -> Vector {
                    if (dense) return back.k * v;
                    return back.c * (back.c.transpose() * v);
                };
                s_xf = matvec(blk.mask_xf);
                s_yf = matvec(blk.mask_yf);
                if (any_mmd) {
                    s_x = matvec(blk.mask_x);
                    s_y = matvec(blk.mask_y);
                    double sxx = blk.mask_x.dot(s_x) - static_cast<double>(nx);
                    double syy = blk.mask_y.dot(s_y) - static_cast<double>(ny);
                    double sxy = blk.mask_x.dot(s_y);
                    mmd_value = sxx / (static_cast<double>(nx) * (nx - 1.0)) +
                                syy / (static_cast<double>(ny) * (ny - 1.0)) -
                                2.0 * sxy / (static_cast<double>(nx) * static_cast<double>(ny));
                }

                if (any_ratio) {
                    Matrix kff[2], e_fit[2], c_fit[2], c_eval;
                    if (dense) {
                        kff[0] = detail::gather(back.k, blk.xf, blk.xf);
                        kff[1] = detail::gather(back.k, blk.yf, blk.yf);
                        e_fit[0] = detail::gather(back.k, eval_ids, blk.xf);
                        e_fit[1] = detail::gather(back.k, eval_ids, blk.yf);
                    } else {
                        c_fit[0] = detail::gather_rows(back.c, blk.xf);
                        c_fit[1] = detail::gather_rows(back.c, blk.yf);
                        c_eval = detail::gather_rows(back.c, eval_ids);
                    }
                    for (int dir = 0; dir < 2; ++dir) {
                        const auto& fit_ids = dir == 0 ? blk.xf : blk.yf;
                        const Vector& sf = dir == 0 ? s_xf : s_yf;
                        const Vector& sg = dir == 0 ? s_yf : s_xf;
                        const auto& other_fit = dir == 0 ? blk.yf : blk.xf;
                        double mf = static_cast<double>(fit_ids.size());
                        double ng = static_cast<double>(other_fit.size());

                        Vector sf_f = detail::gather_vec(sf, fit_ids);
                        Vector sg_f = detail::gather_vec(sg, fit_ids);
                        Vector sg_eval = detail::gather_vec(sg, eval_ids);
                        double sg_g = 0.0;  // 1' K_GG 1
                        for (int id : other_fit) sg_g += sg(id);

                        auto& dv = dirs[dir];
                        dv.r_a.resize(static_cast<std::size_t>(nl));
                        dv.r_b.resize(static_cast<std::size_t>(nl));
                        dv.norm_quad.resize(static_cast<std::size_t>(nl));

                        Matrix g;  // lowrank normal matrix A'A
                        Vector ct_f, ct_g;
                        if (!dense) {
                            const Matrix& a = c_fit[dir];
                            g.noalias() = a.transpose() * a;
                            ct_f = a.transpose() * Vector::Ones(a.rows());
                            ct_g = c_fit[1 - dir].transpose() * Vector::Ones(c_fit[1 - dir].rows());
                        }

                        for (Eigen::Index l = 0; l < nl; ++l) {
                            double lambda = params.lambdas[static_cast<std::size_t>(l)];
                            double ridge = mf * lambda;
                            double cg = 1.0 / (ng * lambda);
                            Vector r_eval;
                            double quad;
                            if (dense) {
                                Vector rhs = sf_f / ridge - cg * sg_f;
                                Matrix sys = kff[dir];
                                sys.diagonal().array() += ridge;
                                Eigen::LLT<Matrix> llt(sys);
                                require(llt.info() == Eigen::Success, "engine: factorization failed");
                                Vector beta = llt.solve(rhs);
                                beta.array() -= 1.0 / ridge;
                                r_eval = e_fit[dir] * beta + cg * sg_eval + Vector::Ones(ex + ey);
                                quad = beta.dot(kff[dir] * beta) + 2.0 * cg * beta.dot(sg_f) +
                                       cg * cg * sg_g;
                            } else {
                                // Woodbury in the factor space: L^{-1}(A w) stays rank-r
                                Vector w = ct_f / ridge - cg * ct_g;
                                Matrix inner = g;
                                inner.diagonal().array() += ridge;
                                Eigen::LLT<Matrix> llt(inner);
                                require(llt.info() == Eigen::Success, "engine: low-rank factorization failed");
                                Vector q = (w - llt.solve(g * w));
                                // beta = (A q - 1)/ridge; a_f = A' beta
                                Vector a_f = (g * q - ct_f) / ridge;
                                r_eval = c_eval * a_f + cg * sg_eval + Vector::Ones(ex + ey);
                                Vector full = a_f + cg * ct_g;
                                quad = full.squaredNorm();
                            }
                            auto& dvl = dirs[dir];
                            // the fitted ratio estimates d(other side)/d(fit
                            // side); the witness block is the OTHER side's
                            // eval block so dir 0 (fit on Xf) realizes the
                            // (Y,X)-oriented statistic and dir 1 the (X,Y) one
                            if (dir == 0) {
                                dvl.r_a[static_cast<std::size_t>(l)] = r_eval.tail(ey);
                                dvl.r_b[static_cast<std::size_t>(l)] = r_eval.head(ex);
                            } else {
                                dvl.r_a[static_cast<std::size_t>(l)] = r_eval.head(ex);
                                dvl.r_b[static_cast<std::size_t>(l)] = r_eval.tail(ey);
                            }
                            dvl.norm_quad[static_cast<std::size_t>(l)] = quad;
                        }
                    }
                }
            }

            // --- write family values -------------------------------------
            for (std::size_t f = 0; f < families.size(); ++f) {
                const auto& spec = families[f];
                auto& values = result.families[f].values;
                if (spec.kind == StatKind::Mmd) {
                    values(static_cast<Eigen::Index>(row), b) = mmd_value;
                    continue;
                }
                if (spec.kind == StatKind::Kale) {
                    // handled below (needs its own solver loop)
                    continue;
                }
                for (Eigen::Index l = 0; l < nl; ++l) {
                    double lambda = params.lambdas[static_cast<std::size_t>(l)];
                    double v0, v1;
                    if (back.kind == detail::BwKind::Grouped) {
                        // dir 0 fits on Xf, so its witness side is Y-eval
                        v0 = detail::ratio_family_value(spec, lambda,
                                                        dirs[0].norm_quad[static_cast<std::size_t>(l)],
                                                        dirs[0].r_a[static_cast<std::size_t>(l)], &wye,
                                                        dirs[0].r_b[static_cast<std::size_t>(l)], &wxe);
                        v1 = detail::ratio_family_value(spec, lambda,
                                                        dirs[1].norm_quad[static_cast<std::size_t>(l)],
                                                        dirs[1].r_a[static_cast<std::size_t>(l)], &wxe,
                                                        dirs[1].r_b[static_cast<std::size_t>(l)], &wye);
                    } else {
                        v0 = detail::ratio_family_value(spec, lambda,
                                                        dirs[0].norm_quad[static_cast<std::size_t>(l)],
                                                        dirs[0].r_a[static_cast<std::size_t>(l)], nullptr,
                                                        dirs[0].r_b[static_cast<std::size_t>(l)], nullptr);
                        v1 = detail::ratio_family_value(spec, lambda,
                                                        dirs[1].norm_quad[static_cast<std::size_t>(l)],
                                                        dirs[1].r_a[static_cast<std::size_t>(l)], nullptr,
                                                        dirs[1].r_b[static_cast<std::size_t>(l)], nullptr);
                    }
                    values(static_cast<Eigen::Index>(row), b * nl + l) = std::max(v0, v1);
                }
            }

            // --- KALE ------------------------------------------------------
            if (any_kale) {
                std::vector<int> order_x = blk.xf;
                order_x.insert(order_x.end(), blk.xe.begin(), blk.xe.end());
                std::vector<int> order_y = blk.yf;
                order_y.insert(order_y.end(), blk.ye.begin(), blk.ye.end());

                // descending tau ladder with warm starts; optimum is unique
                std::vector<Eigen::Index> ladder(static_cast<std::size_t>(nl));
                for (Eigen::Index l = 0; l < nl; ++l) ladder[static_cast<std::size_t>(l)] = l;
                std::sort(ladder.begin(), ladder.end(), [&](Eigen::Index a, Eigen::Index c) {
                    return params.lambdas[static_cast<std::size_t>(a)] >
                           params.lambdas[static_cast<std::size_t>(c)];
                });

                Matrix kale_vals(2, nl);
                for (int dir = 0; dir < 2; ++dir) {
                    std::vector<int> order = dir == 0 ? order_x : order_y;
                    const auto& tail_block = dir == 0 ? order_y : order_x;
                    order.insert(order.end(), tail_block.begin(), tail_block.end());
                    Eigen::Index m_side = dir == 0 ? nx : ny;
                    Eigen::Index n_side = n_total - m_side;

                    Vector warm;
                    auto run_ladder = [&](const auto& ops) {
                        for (auto l : ladder) {
                            double tau = params.lambdas[static_cast<std::size_t>(l)];
                            auto res = kale::solve(ops, m_side, n_side, tau, kale::KaleOptions{},
                                                   warm.size() ? &warm : nullptr);
                            warm = res.alpha;
                            kale_vals(dir, l) = res.value;
                        }
                    };
                    if (back.kind == detail::BwKind::Dense) {
                        detail::KaleDenseOps ops;
                        ops.k = &back.k;
                        ops.order = &order;
                        ops.m = m_side;
                        std::vector<int> second(order.begin() + m_side, order.end());
                        ops.kyy = detail::gather(back.k, second, second);
                        run_ladder(ops);
                    } else {
                        detail::KaleLowrankOps ops;
                        ops.c_ordered = detail::gather_rows(back.c, order);
                        ops.m = m_side;
                        run_ladder(ops);
                    }
                }
                for (std::size_t f = 0; f < families.size(); ++f) {
                    if (families[f].kind != StatKind::Kale) continue;
                    auto& values = result.families[f].values;
                    for (Eigen::Index l = 0; l < nl; ++l)
                        values(static_cast<Eigen::Index>(row), b * nl + l) =
                            std::max(kale_vals(0, l), kale_vals(1, l));
                }
            }
        }
    };

    parallel_for(static_cast<std::size_t>(permutation_rows), params.threads, process_row);
    return result;
}

}  // namespace fdtest::engine
