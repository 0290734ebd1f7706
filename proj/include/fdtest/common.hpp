#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fdtest {

// A sample set is a point cloud: one row per observation, one column per
// coordinate. Every statistic in the library consumes this layout.
using SampleSet = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from (seed, index) so that work items
// can be dispatched in any order without changing results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x517cc1b727220a95ULL));
}

// Thin wrapper around the standard engine with the distributions the
// generators need. One instance per logical stream; never shared.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double uniform() { return uniform_(engine_); }                  // U(0,1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return normal_(engine_); }                    // N(0,1)
    double exponential() { return expo_(engine_); }                 // Exp(1)

    double laplace(double location, double scale) {
        double u = uniform() - 0.5;
        double sign = u >= 0.0 ? 1.0 : -1.0;
        return location - scale * sign * std::log(1.0 - 2.0 * std::abs(u));
    }

    std::uint64_t integer(std::uint64_t bound) {  // uniform on {0,...,bound-1}
        std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
        return d(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> expo_{1.0};
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace fdtest
