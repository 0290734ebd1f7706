#pragma once

#include "fdtest/common.hpp"
#include "fdtest/permutation.hpp"
#include "fdtest/statistic_spec.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fdtest::dp_audit {

// A randomized mechanism with its adjacent dataset pair and claimed budget.
// mean1/mean2 are the broken Laplace-mean mechanisms; svt3..svt6 are the
// broken sparse-vector variants (noise reuse / missing noise / unbounded
// outputs / wrong threshold comparison); "laplace" is a correctly calibrated
// noisy-sum control.
struct MechanismSpec {
    std::string name = "mean1";
    double epsilon = 0.1;        // claimed budget; the audit tests gamma = e^eps
    double noise_epsilon = 0.0;  // budget the internal noise is calibrated to; 0 -> claimed
    std::vector<double> dataset_d;
    std::vector<double> dataset_d_prime;
    // SVT parameters
    int query_count = 10;
    double threshold = 0.5;
    int cutoff = 1;
    bool jitter = true;          // break atomic outputs before kernel tests
    double jitter_scale = 1e-6;

    static MechanismSpec make(const std::string& name, double epsilon = 0.0);
};

inline bool is_svt(const std::string& name) { return name.rfind("svt", 0) == 0; }

inline MechanismSpec MechanismSpec::make(const std::string& name, double epsilon) {
    MechanismSpec spec;
    spec.name = name;
    if (is_svt(name)) {
        require(name == "svt3" || name == "svt4" || name == "svt5" || name == "svt6",
                "mechanism: unknown name '" + name + "'");
        spec.epsilon = epsilon > 0.0 ? epsilon : 0.1;
        // Desk-scale reproducibility choice: the buggy implementations
        // calibrate their noise for a larger budget than they claim.
        spec.noise_epsilon = 2.0;
        spec.dataset_d = {0.0, 1.0};
        spec.dataset_d_prime = {0.0, 1.0, 0.0};
    } else if (name == "mean1" || name == "mean2" || name == "laplace") {
        spec.epsilon = epsilon > 0.0 ? epsilon : 0.1;
        spec.dataset_d = {1.0};
        spec.dataset_d_prime = {1.0, 0.0};
    } else {
        throw std::invalid_argument("mechanism: unknown name '" + name + "'");
    }
    return spec;
}

namespace detail {

// Counting query stream with sensitivity 1: query i counts occurrences of
// the value (i mod 2) in the dataset.
inline double query_value(const std::vector<double>& data, int query_index) {
    double target = static_cast<double>(query_index % 2);
    double count = 0.0;
    for (double v : data)
        if (v == target) count += 1.0;
    return count;
}

inline Eigen::RowVectorXd run_svt_once(const MechanismSpec& spec, const std::vector<double>& data,
                                       Rng& rng) {
    double eps = spec.noise_epsilon > 0.0 ? spec.noise_epsilon : spec.epsilon;
    double eps1 = eps / 2.0, eps2 = eps / 2.0;
    double c = static_cast<double>(spec.cutoff);

    double rho = rng.laplace(0.0, 1.0 / eps1);
    bool reuse_noise = spec.name == "svt3";
    bool missing_noise = spec.name == "svt4";
    bool unbounded = spec.name == "svt5";
    bool wrong_comparison = spec.name == "svt6";

    double shared_nu = rng.laplace(0.0, 2.0 * c / eps2);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Constant(spec.query_count, -1.0);
    int tops = 0;
    for (int i = 0; i < spec.query_count; ++i) {
        double q = query_value(data, i);
        double nu = missing_noise ? 0.0
                    : reuse_noise ? shared_nu
                                  : rng.laplace(0.0, 2.0 * c / eps2);
        double threshold = wrong_comparison ? spec.threshold - rho : spec.threshold + rho;
        bool top = q + nu >= threshold;
        out(i) = top ? 1.0 : 0.0;
        if (top) ++tops;
        if (!unbounded && tops >= spec.cutoff) break;  // later entries stay at the abort marker
    }
    return out;
}

}  // namespace detail

// Draws n_samples i.i.d. outputs of the mechanism on the given dataset.
inline SampleSet run_mechanism(const MechanismSpec& spec, const std::vector<double>& data,
                               Eigen::Index n_samples, Rng& rng) {
    require(n_samples >= 1, "run_mechanism: need at least one draw");
    require(!data.empty(), "run_mechanism: empty dataset");
    double eps = spec.epsilon;
    auto n = static_cast<double>(data.size());
    double sum = 0.0;
    for (double v : data) sum += v;

    if (spec.name == "mean1") {
        // broken: the noise scale divides by the private count
        SampleSet out(n_samples, 1);
        for (Eigen::Index i = 0; i < n_samples; ++i)
            out(i, 0) = sum / n + rng.laplace(0.0, 1.0 / (n * eps));
        return out;
    }
    if (spec.name == "mean2") {
        // broken: privatizes the count for the scale only; the mean still
        // divides by the private count
        SampleSet out(n_samples, 1);
        for (Eigen::Index i = 0; i < n_samples; ++i) {
            double noisy_n = std::max(1.0, n + rng.laplace(0.0, 1.0 / eps));
            out(i, 0) = sum / n + rng.laplace(0.0, 1.0 / (noisy_n * eps));
        }
        return out;
    }
    if (spec.name == "laplace") {
        // correct eps-DP noisy sum (record values in [0,1], sensitivity 1)
        SampleSet out(n_samples, 1);
        for (Eigen::Index i = 0; i < n_samples; ++i)
            out(i, 0) = sum + rng.laplace(0.0, 1.0 / eps);
        return out;
    }
    if (is_svt(spec.name)) {
        SampleSet out(n_samples, spec.query_count);
        for (Eigen::Index i = 0; i < n_samples; ++i)
            out.row(i) = detail::run_svt_once(spec, data, rng);
        if (spec.jitter)
            for (Eigen::Index i = 0; i < n_samples; ++i)
                for (Eigen::Index j = 0; j < out.cols(); ++j)
                    out(i, j) += rng.uniform(-spec.jitter_scale, spec.jitter_scale);
        return out;
    }
    throw std::invalid_argument("run_mechanism: unknown mechanism '" + spec.name + "'");
}

struct AuditVerdict {
    bool violation_detected = false;
    double p_value = 1.0;
    double gamma = 1.0;  // e^eps used by the Hockey-Stick statistic
    permutation::TestResult test;
};

// Draws n_samples from M(D) and M(D'), then runs the fused symmetrized
// Hockey-Stick permutation test with gamma = e^eps. A rejection certifies
// that the mechanism cannot be eps-DP.
inline AuditVerdict audit(const MechanismSpec& spec, const permutation::TestConfig& cfg,
                          Eigen::Index n_samples, std::uint64_t seed) {
    Rng rng_d(derive_seed(seed, 1));
    Rng rng_dp(derive_seed(seed, 2));
    SampleSet outputs_d = run_mechanism(spec, spec.dataset_d, n_samples, rng_d);
    SampleSet outputs_dp = run_mechanism(spec, spec.dataset_d_prime, n_samples, rng_dp);

    double gamma = std::exp(spec.epsilon);
    auto stat = statistics::StatisticSpec::parse("hs:gamma=" + std::to_string(gamma));
    permutation::TestConfig test_cfg = cfg;
    test_cfg.seed = derive_seed(seed, 3);

    AuditVerdict verdict;
    verdict.gamma = gamma;
    verdict.test = permutation::single_test(outputs_d, outputs_dp, stat, test_cfg);
    verdict.p_value = verdict.test.p_value;
    verdict.violation_detected = verdict.test.reject;
    return verdict;
}

inline std::vector<std::string> all_mechanisms() {
    return {"svt3", "svt4", "svt5", "svt6", "mean1", "mean2"};
}

}  // namespace fdtest::dp_audit
