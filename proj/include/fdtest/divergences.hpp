#pragma once

#include "fdtest/common.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fdtest::divergences {

enum class Family {
    KL,
    ReverseKL,
    Jeffreys,
    JensenShannon,
    TotalVariation,
    PearsonChi2,
    NeymanChi2,
    VinczeLeCam,
    SquaredHellinger,
    HellingerDiscrimination,
    Alpha,
    CressieRead,
    HockeyStick,
};

// A named generator triple (f, f*, f'). `param` is gamma > 0 for Hockey-Stick,
// alpha in (-1,1) for the alpha-divergence, and the exponent for Cressie-Read.
struct FDivergenceSpec {
    Family family = Family::KL;
    double param = 0.0;
    double ratio_floor = 1e-10;

    static FDivergenceSpec make(Family f, double param = 0.0) {
        FDivergenceSpec s;
        s.family = f;
        s.param = param;
        switch (f) {
            case Family::HockeyStick:
                require(param > 0.0, "hockey-stick: gamma must be positive");
                break;
            case Family::Alpha:
                require(param > -1.0 && param < 1.0, "alpha-divergence: alpha must lie in (-1,1)");
                break;
            case Family::CressieRead:
                require(param != 0.0 && param != 1.0, "cressie-read: exponent must avoid {0,1}");
                break;
            default:
                break;
        }
        return s;
    }
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::KL: return "kl";
        case Family::ReverseKL: return "reverse-kl";
        case Family::Jeffreys: return "jeffreys";
        case Family::JensenShannon: return "js";
        case Family::TotalVariation: return "tv";
        case Family::PearsonChi2: return "chi2";
        case Family::NeymanChi2: return "neyman-chi2";
        case Family::VinczeLeCam: return "lecam";
        case Family::SquaredHellinger: return "hellinger2";
        case Family::HellingerDiscrimination: return "hellinger";
        case Family::Alpha: return "alpha";
        case Family::CressieRead: return "cressie-read";
        case Family::HockeyStick: return "hs";
    }
    return "?";
}

// Lambert W on t > 0: Newton iteration on w e^w = t.
inline double lambert_w(double t) {
    require(t > 0.0 && std::isfinite(t), "lambert_w: argument must be positive and finite");
    double w = t < 1.0 ? t : std::log(t);
    if (w <= 0.0) w = 1e-12;
    for (int it = 0; it < 100; ++it) {
        double ew = std::exp(w);
        double res = w * ew - t;
        if (std::abs(res) <= 1e-12 * (1.0 + std::abs(t))) break;
        w -= res / (ew * (1.0 + w));
    }
    return w;
}

namespace detail {

// Whether f' needs r > 0 (clamped at ratio_floor). Pearson chi^2, TV and
// Hockey-Stick accept all real r.
inline bool needs_positive_ratio(Family f) {
    switch (f) {
        case Family::PearsonChi2:
        case Family::TotalVariation:
        case Family::HockeyStick:
            return false;
        default:
            return true;
    }
}

inline double clamp_ratio(const FDivergenceSpec& spec, double r) {
    require(std::isfinite(r), "divergence: non-finite ratio value");
    if (needs_positive_ratio(spec.family) && r < spec.ratio_floor) return spec.ratio_floor;
    return r;
}

}  // namespace detail

// The generator f(t), evaluated at clamp(t).
inline double generator_value(const FDivergenceSpec& spec, double t) {
    t = detail::clamp_ratio(spec, t);
    double a = spec.param;
    switch (spec.family) {
        case Family::KL: return t * std::log(t);
        case Family::ReverseKL: return -std::log(t);
        case Family::Jeffreys: return (t - 1.0) * std::log(t);
        case Family::JensenShannon:
            return t * std::log(t) - (t + 1.0) * std::log(0.5 * (t + 1.0));
        case Family::TotalVariation: return 0.5 * std::abs(t - 1.0);
        case Family::PearsonChi2: return (t - 1.0) * (t - 1.0);
        case Family::NeymanChi2: return (1.0 - t) * (1.0 - t) / t;
        case Family::VinczeLeCam: return (t - 1.0) * (t - 1.0) / (t + 1.0);
        case Family::SquaredHellinger: {
            double s = std::sqrt(t) - 1.0;
            return s * s;
        }
        case Family::HellingerDiscrimination: return 1.0 - std::sqrt(t);
        case Family::Alpha:
            return 4.0 / (1.0 - a * a) * (1.0 - std::pow(t, 0.5 * (1.0 + a)));
        case Family::CressieRead:
            return (std::pow(t, a) - a * (t - 1.0) - 1.0) / (a * (a - 1.0));
        case Family::HockeyStick: return std::max(t - a, 0.0);
    }
    return 0.0;
}

// The witness f'(clamp(r)). Conventions: sign(0) = +1 for Total Variation and
// f'(gamma) = 1 for Hockey-Stick.
inline double witness_value(const FDivergenceSpec& spec, double r) {
    r = detail::clamp_ratio(spec, r);
    double a = spec.param;
    switch (spec.family) {
        case Family::KL: return 1.0 + std::log(r);
        case Family::ReverseKL: return -1.0 / r;
        case Family::Jeffreys: return 1.0 + std::log(r) - 1.0 / r;
        case Family::JensenShannon: return std::log(2.0 * r / (r + 1.0));
        case Family::TotalVariation: return r >= 1.0 ? 0.5 : -0.5;
        case Family::PearsonChi2: return 2.0 * (r - 1.0);
        case Family::NeymanChi2: return 1.0 - 1.0 / (r * r);
        case Family::VinczeLeCam: return 1.0 - 4.0 / ((r + 1.0) * (r + 1.0));
        case Family::SquaredHellinger: return 1.0 - 1.0 / std::sqrt(r);
        case Family::HellingerDiscrimination: return -0.5 / std::sqrt(r);
        case Family::Alpha: return -2.0 / (1.0 - a) * std::pow(r, 0.5 * (a - 1.0));
        case Family::CressieRead: return (std::pow(r, a - 1.0) - 1.0) / (a - 1.0);
        case Family::HockeyStick: return r >= a ? 1.0 : 0.0;
    }
    return 0.0;
}

// f*(f'(clamp(r))) in closed form, i.e. the second term of the variational
// estimator. Equal to r f'(r) - f(r) wherever f is differentiable.
inline double conjugate_of_witness(const FDivergenceSpec& spec, double r) {
    r = detail::clamp_ratio(spec, r);
    double a = spec.param;
    switch (spec.family) {
        case Family::KL: return r;
        case Family::ReverseKL: return -1.0 + std::log(r);
        case Family::Jeffreys: return r - 1.0 + std::log(r);
        case Family::JensenShannon: return std::log(0.5 * (r + 1.0));
        case Family::TotalVariation: return r >= 1.0 ? 0.5 : -0.5;
        case Family::PearsonChi2: {
            double u = 2.0 * (r - 1.0);
            return u + 0.25 * u * u;
        }
        case Family::NeymanChi2: return 2.0 * (1.0 - 1.0 / r);
        case Family::VinczeLeCam: {
            double s = r + 1.0;
            return 3.0 + 4.0 / (s * s) - 8.0 / s;
        }
        case Family::SquaredHellinger: return std::sqrt(r) - 1.0;
        case Family::HellingerDiscrimination: return 0.5 * std::sqrt(r) - 1.0;
        case Family::Alpha:
            return 2.0 / (1.0 + a) * std::pow(r, 0.5 * (1.0 + a)) - 4.0 / (1.0 - a * a);
        case Family::CressieRead: return (std::pow(r, a) - 1.0) / a;
        case Family::HockeyStick: return r >= a ? a : 0.0;
    }
    return 0.0;
}

// The raw convex conjugate f*(u). Only used for cross-checks; statistics go
// through conjugate_of_witness. Throws outside the conjugate's domain.
inline double conjugate(const FDivergenceSpec& spec, double u) {
    require(std::isfinite(u), "conjugate: non-finite argument");
    double a = spec.param;
    auto domain = [&](bool ok) {
        if (!ok) throw std::domain_error("conjugate: argument outside the domain of f*");
    };
    switch (spec.family) {
        case Family::KL: return std::exp(u - 1.0);
        case Family::ReverseKL:
            domain(u < 0.0);
            return -1.0 - std::log(-u);
        case Family::Jeffreys: {
            // Fenchel-Young forces f*(u) = W(e^{1-u}) + 1/W(e^{1-u}) + u - 2;
            // the u-1 exponent sometimes quoted fails f*(f'(1)) = 0.
            double w = lambert_w(std::exp(1.0 - u));
            domain(w > 0.0);
            return w + 1.0 / w + u - 2.0;
        }
        case Family::JensenShannon:
            domain(u < std::log(2.0));
            return -std::log(2.0 - std::exp(u));
        case Family::TotalVariation:
            domain(std::abs(u) <= 0.5);
            return u;
        case Family::PearsonChi2: return u + 0.25 * u * u;
        case Family::NeymanChi2:
            domain(u < 1.0);
            return 2.0 * (1.0 - std::sqrt(1.0 - u));
        case Family::VinczeLeCam:
            domain(u < 1.0);
            return 4.0 - u - 4.0 * std::sqrt(1.0 - u);
        case Family::SquaredHellinger:
            domain(u < 1.0);
            return u / (1.0 - u);
        case Family::HellingerDiscrimination:
            domain(u < 0.0);
            return -1.0 - 1.0 / (4.0 * u);
        case Family::Alpha: {
            double base = 0.5 * (a - 1.0) * u;
            domain(base > 0.0);
            return 2.0 / (1.0 + a) * std::pow(base, (1.0 + a) / (a - 1.0)) - 4.0 / (1.0 - a * a);
        }
        case Family::CressieRead: {
            double base = u * (a - 1.0) + 1.0;
            domain(base > 0.0);
            return (std::pow(base, a / (a - 1.0)) - 1.0) / a;
        }
        case Family::HockeyStick:
            domain(u >= 0.0 && u <= 1.0);
            return a * u;
    }
    return 0.0;
}

// Smoothed Hockey-Stick witness: logistic((r - gamma) / temperature).
inline double sigmoid_witness(double gamma, double temperature, double r) {
    require(temperature > 0.0, "sigmoid_witness: temperature must be positive");
    require(std::isfinite(r), "sigmoid_witness: non-finite ratio value");
    double z = (r - gamma) / temperature;
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// All Table-1 rows with default parameters, used by the property suites.
inline std::vector<FDivergenceSpec> registry() {
    using F = Family;
    return {
        FDivergenceSpec::make(F::KL),
        FDivergenceSpec::make(F::ReverseKL),
        FDivergenceSpec::make(F::Jeffreys),
        FDivergenceSpec::make(F::JensenShannon),
        FDivergenceSpec::make(F::TotalVariation),
        FDivergenceSpec::make(F::PearsonChi2),
        FDivergenceSpec::make(F::NeymanChi2),
        FDivergenceSpec::make(F::VinczeLeCam),
        FDivergenceSpec::make(F::SquaredHellinger),
        FDivergenceSpec::make(F::HellingerDiscrimination),
        FDivergenceSpec::make(F::Alpha, 0.5),
        FDivergenceSpec::make(F::CressieRead, 1.5),
        FDivergenceSpec::make(F::HockeyStick, 1.0),
        FDivergenceSpec::make(F::HockeyStick, 2.0),
    };
}

}  // namespace fdtest::divergences
