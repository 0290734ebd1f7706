// Command-line driver: data generation, two-sample tests, power sweeps,
// privacy audits, relative three-sample tests, and witness dumps.
//
// Exit codes: 0 success, 2 usage/input error, 3 numerical failure.

#include "fdtest/benchmarks.hpp"
#include "fdtest/dp_audit.hpp"
#include "fdtest/hswitness_sdp.hpp"
#include "fdtest/io.hpp"
#include "fdtest/permutation.hpp"
#include "fdtest/ratio.hpp"
#include "fdtest/statistic_spec.hpp"
#include "fdtest/stats_util.hpp"
#include "fdtest/thread_pool.hpp"
#include "fdtest/threesample.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

using namespace fdtest;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// generator specs

struct GeneratorSpec {
    std::string family;  // uniform | expo1d | gaussian
    std::map<std::string, double> args;

    double arg(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        auto it = args.find(key);
        if (it != args.end()) return it->second;
        if (!fallback) throw UsageError("generator: missing parameter '" + key + "'");
        return *fallback;
    }

    static GeneratorSpec parse(const std::string& text) {
        GeneratorSpec spec;
        auto colon = text.find(':');
        spec.family = text.substr(0, colon);
        if (colon != std::string::npos) {
            std::stringstream ss(text.substr(colon + 1));
            std::string item;
            while (std::getline(ss, item, ',')) {
                auto eq = item.find('=');
                if (eq == std::string::npos)
                    throw UsageError("generator: malformed parameter '" + item + "'");
                spec.args[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
            }
        }
        if (spec.family != "uniform" && spec.family != "expo1d" && spec.family != "gaussian")
            throw UsageError("generator: unknown family '" + spec.family + "'");
        return spec;
    }
};

// One sample of the distribution exactly as parameterized.
SampleSet generate_single(const GeneratorSpec& spec, Eigen::Index n, Rng& rng) {
    if (spec.family == "uniform")
        return benchmarks::sample_perturbed_uniform(static_cast<int>(spec.arg("d", 1)),
                                                    spec.arg("a", 0.0), n, rng);
    if (spec.family == "expo1d")
        return benchmarks::sample_expo1d(spec.arg("k", 0.0), spec.arg("mu", 4.0),
                                         spec.arg("sigma", 0.01), n, rng);
    auto d = static_cast<Eigen::Index>(spec.arg("d", 1));
    return benchmarks::sample_gaussian(Vector::Constant(d, spec.arg("m", 0.0)),
                                       spec.arg("sigma", 1.0), n, rng);
}

// Null/alternative pair: X from the family's null member, Y as parameterized.
std::pair<SampleSet, SampleSet> generate_pair(const GeneratorSpec& spec, Eigen::Index n,
                                              std::uint64_t seed) {
    Rng rng_x(derive_seed(seed, 101));
    Rng rng_y(derive_seed(seed, 202));
    if (spec.family == "uniform") {
        auto d = static_cast<int>(spec.arg("d", 1));
        return {benchmarks::sample_perturbed_uniform(d, 0.0, n, rng_x),
                benchmarks::sample_perturbed_uniform(d, spec.arg("a", 0.0), n, rng_y)};
    }
    if (spec.family == "expo1d") {
        double mu = spec.arg("mu", 4.0), sigma = spec.arg("sigma", 0.01);
        return {benchmarks::sample_expo1d(0.0, mu, sigma, n, rng_x),
                benchmarks::sample_expo1d(spec.arg("k", 0.0), mu, sigma, n, rng_y)};
    }
    auto d = static_cast<Eigen::Index>(spec.arg("d", 1));
    benchmarks::GaussianPair pair;
    pair.mean_p = Vector::Constant(d, spec.arg("mp", 0.0));
    pair.mean_q = Vector::Constant(d, spec.arg("mq", 0.0));
    pair.sigma = spec.arg("sigma", 1.0);
    return {benchmarks::sample_gaussian(pair.mean_p, pair.sigma, n, rng_x),
            benchmarks::sample_gaussian(pair.mean_q, pair.sigma, n, rng_y)};
}

// With a sweep, the family's leading parameter takes the swept value.
GeneratorSpec with_parameter(GeneratorSpec spec, double value) {
    if (spec.family == "uniform") spec.args["a"] = value;
    else if (spec.family == "expo1d") spec.args["k"] = value;
    else spec.args["mq"] = value;
    return spec;
}

// ---------------------------------------------------------------------------
// shared option plumbing

struct CommonOptions {
    std::string x_path, y_path, gen_spec;
    long n = 500;
    double alpha = 0.05;
    int permutations = 300;
    std::uint64_t seed = 0;
    double fit_fraction = 0.5;
    double kappa = 0.0;
    std::vector<double> bandwidths;
    std::vector<double> lambdas;
    int threads = 0;
    std::string output;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_inputs = true) {
    if (with_inputs) {
        cmd->add_option("--x", opt.x_path, "CSV with sample X (rows = points)");
        cmd->add_option("--y", opt.y_path, "CSV with sample Y");
        cmd->add_option("--gen", opt.gen_spec,
                        "synthetic pair, e.g. uniform:d=1,a=0.3 | expo1d:k=40 | "
                        "gaussian:d=1,mp=0,mq=0.5,sigma=1");
        cmd->add_option("--n", opt.n, "points per generated sample");
    }
    cmd->add_option("--alpha", opt.alpha, "significance level");
    cmd->add_option("--B", opt.permutations, "permutation count");
    cmd->add_option("--seed", opt.seed, "RNG seed");
    cmd->add_option("--fit-fraction", opt.fit_fraction, "fraction of each sample used to fit");
    cmd->add_option("--kappa", opt.kappa, "fuse temperature (default sqrt(nmin(nmin-1)))");
    cmd->add_option("--bandwidths", opt.bandwidths, "explicit kernel bandwidths")->delimiter(',');
    cmd->add_option("--lambdas", opt.lambdas, "explicit regularization grid")->delimiter(',');
    cmd->add_option("--threads", opt.threads, "worker threads (default: all cores)");
    cmd->add_option("-o,--output", opt.output, "output path (default: stdout)");
}

permutation::TestConfig make_config(const CommonOptions& opt) {
    permutation::TestConfig cfg;
    cfg.alpha = opt.alpha;
    cfg.permutations = opt.permutations;
    cfg.seed = opt.seed;
    cfg.fit_fraction = opt.fit_fraction;
    cfg.kappa = opt.kappa;
    if (!opt.bandwidths.empty()) cfg.bandwidths = opt.bandwidths;
    if (!opt.lambdas.empty()) cfg.lambdas = opt.lambdas;
    cfg.threads = opt.threads > 0 ? opt.threads : default_threads();
    return cfg;
}

std::pair<SampleSet, SampleSet> load_pair(const CommonOptions& opt) {
    if (!opt.gen_spec.empty())
        return generate_pair(GeneratorSpec::parse(opt.gen_spec), opt.n, opt.seed);
    if (opt.x_path.empty() || opt.y_path.empty())
        throw UsageError("need either --gen or both --x and --y");
    SampleSet x = io::read_csv(opt.x_path);
    SampleSet y = io::read_csv(opt.y_path);
    if (x.cols() != y.cols())
        throw UsageError("dimension mismatch between " + opt.x_path + " (" +
                         std::to_string(x.cols()) + " columns) and " + opt.y_path + " (" +
                         std::to_string(y.cols()) + " columns)");
    return {std::move(x), std::move(y)};
}

void emit(const std::string& output, const std::string& content) {
    if (output.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(output);
    if (!out) throw UsageError("cannot open output file " + output);
    out << content;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_gen(const std::string& dist, long n, std::uint64_t seed, bool header,
            const std::string& output) {
    auto spec = GeneratorSpec::parse(dist);
    Rng rng(seed);
    SampleSet data = generate_single(spec, n, rng);
    if (output.empty()) throw UsageError("gen: -o output path required");
    io::write_csv(output, data, header);
    return 0;
}

int cmd_test(const CommonOptions& opt, const std::vector<std::string>& statistic_names,
             bool aggregate) {
    auto specs = statistics::parse_statistics(statistic_names);
    auto cfg = make_config(opt);
    auto [x, y] = load_pair(opt);

    json out;
    if (aggregate) {
        out = permutation::to_json(permutation::f_agg_test(x, y, specs, cfg));
    } else {
        auto results = permutation::run_tests(x, y, specs, cfg);
        if (results.size() == 1) {
            out = permutation::to_json(results[0]);
        } else {
            out = json::array();
            for (const auto& r : results) out.push_back(permutation::to_json(r));
        }
    }
    emit(opt.output, out.dump(2) + "\n");
    return 0;
}

int cmd_power(const CommonOptions& opt, const std::vector<std::string>& statistic_names,
              bool aggregate, const std::vector<double>& sweep, int repetitions) {
    if (opt.gen_spec.empty()) throw UsageError("power: --gen is required");
    if (repetitions < 1) throw UsageError("power: --reps must be >= 1");
    auto specs = statistics::parse_statistics(statistic_names);
    auto base = GeneratorSpec::parse(opt.gen_spec);
    auto cfg = make_config(opt);
    int workers = cfg.threads;
    cfg.threads = 1;  // parallelism over repetitions

    std::vector<double> params = sweep.empty() ? std::vector<double>{base.arg("a", 0.0)} : sweep;
    std::size_t cells = params.size() * static_cast<std::size_t>(repetitions);
    // rejection flags per (statistic row, sweep value, rep)
    std::size_t rows = specs.size() + (aggregate ? 1 : 0);
    std::vector<char> rejected(rows * cells, 0);

    parallel_for(cells, workers, [&](std::size_t cell) {
        auto p = cell / static_cast<std::size_t>(repetitions);
        auto rep = cell % static_cast<std::size_t>(repetitions);
        auto spec = with_parameter(base, params[p]);
        std::uint64_t cell_seed = derive_seed(opt.seed, cell + 1);
        auto [x, y] = generate_pair(spec, opt.n, cell_seed);
        permutation::TestConfig local = cfg;
        local.seed = derive_seed(cell_seed, 7);
        auto results = permutation::run_tests(x, y, specs, local);
        for (std::size_t s = 0; s < specs.size(); ++s)
            rejected[s * cells + cell] = results[s].reject ? 1 : 0;
        if (aggregate) {
            auto agg = permutation::f_agg_test(x, y, specs, local);
            rejected[specs.size() * cells + cell] = agg.reject ? 1 : 0;
        }
        (void)rep;
    });

    std::ostringstream csv;
    csv << "statistic,parameter,repetitions,rejection_rate,cp_lo,cp_hi\n";
    for (std::size_t s = 0; s < rows; ++s) {
        std::string name = s < specs.size() ? specs[s].name() : "f-agg";
        for (std::size_t p = 0; p < params.size(); ++p) {
            long k = 0;
            for (int rep = 0; rep < repetitions; ++rep)
                k += rejected[s * cells + p * static_cast<std::size_t>(repetitions) +
                              static_cast<std::size_t>(rep)];
            auto [lo, hi] = stats_util::clopper_pearson(k, repetitions);
            csv << name << "," << params[p] << "," << repetitions << ","
                << static_cast<double>(k) / repetitions << "," << lo << "," << hi << "\n";
        }
    }
    emit(opt.output, csv.str());
    return 0;
}

int cmd_audit(const CommonOptions& opt, const std::string& mechanism, double epsilon,
              double noise_epsilon, int repetitions, bool no_jitter) {
    auto cfg = make_config(opt);
    std::vector<std::string> names =
        mechanism == "all" ? dp_audit::all_mechanisms() : std::vector<std::string>{mechanism};
    int workers = cfg.threads;
    cfg.threads = repetitions > 1 ? 1 : workers;

    if (repetitions <= 1 && names.size() == 1) {
        auto spec = dp_audit::MechanismSpec::make(names[0], epsilon);
        if (noise_epsilon > 0.0) spec.noise_epsilon = noise_epsilon;
        if (no_jitter) spec.jitter = false;
        auto verdict = dp_audit::audit(spec, cfg, opt.n, opt.seed);
        json out{{"mechanism", names[0]},
                 {"epsilon", spec.epsilon},
                 {"gamma", verdict.gamma},
                 {"n", opt.n},
                 {"violation_detected", verdict.violation_detected},
                 {"p_value", verdict.p_value},
                 {"seed", opt.seed}};
        emit(opt.output, out.dump(2) + "\n");
        return 0;
    }

    // batch mode: one Table-shaped CSV row per mechanism
    std::ostringstream csv;
    csv << "mechanism,epsilon,n,repetitions,detection_rate,cp_lo,cp_hi\n";
    for (const auto& name : names) {
        auto spec = dp_audit::MechanismSpec::make(name, epsilon);
        if (noise_epsilon > 0.0) spec.noise_epsilon = noise_epsilon;
        if (no_jitter) spec.jitter = false;
        std::vector<char> detected(static_cast<std::size_t>(repetitions), 0);
        parallel_for(static_cast<std::size_t>(repetitions), workers, [&](std::size_t rep) {
            auto verdict = dp_audit::audit(spec, cfg, opt.n, derive_seed(opt.seed, rep + 1));
            detected[rep] = verdict.violation_detected ? 1 : 0;
        });
        long k = 0;
        for (char c : detected) k += c;
        auto [lo, hi] = stats_util::clopper_pearson(k, repetitions);
        csv << name << "," << spec.epsilon << "," << opt.n << "," << repetitions << ","
            << static_cast<double>(k) / repetitions << "," << lo << "," << hi << "\n";
        std::cerr << "audit " << name << ": " << static_cast<double>(k) / repetitions << "\n";
    }
    emit(opt.output, csv.str());
    return 0;
}

int cmd_relative(const CommonOptions& opt, const std::string& w_path, const std::string& gen3,
                 double bandwidth) {
    SampleSet x, y, w;
    if (!gen3.empty()) {
        // gaussian3:d=2,mx=0,my=5,mw=0.1,sigma=1
        auto spec = GeneratorSpec::parse("gaussian" + gen3.substr(std::string("gaussian3").size()));
        auto d = static_cast<Eigen::Index>(spec.arg("d", 1));
        double sigma = spec.arg("sigma", 1.0);
        Rng rx(derive_seed(opt.seed, 1)), ry(derive_seed(opt.seed, 2)), rw(derive_seed(opt.seed, 3));
        x = benchmarks::sample_gaussian(Vector::Constant(d, spec.arg("mx", 0.0)), sigma, opt.n, rx);
        y = benchmarks::sample_gaussian(Vector::Constant(d, spec.arg("my", 0.0)), sigma, opt.n, ry);
        w = benchmarks::sample_gaussian(Vector::Constant(d, spec.arg("mw", 0.0)), sigma, opt.n, rw);
    } else {
        if (opt.x_path.empty() || opt.y_path.empty() || w_path.empty())
            throw UsageError("relative: need --x, --y and --w (or --gen3)");
        x = io::read_csv(opt.x_path);
        y = io::read_csv(opt.y_path);
        w = io::read_csv(w_path);
    }
    kernels::KernelConfig kernel;
    kernel.bandwidth =
        bandwidth > 0.0 ? bandwidth : threesample::median_heuristic_bandwidth(x, y, w);
    auto res = threesample::relative_mmd_test(x, y, w, kernel, opt.alpha);
    json out{{"mmd_xy", res.mmd_xy},       {"mmd_xw", res.mmd_xw},
             {"var_pq", res.var_pq},       {"var_pr", res.var_pr},
             {"cov_pq_pr", res.cov_pq_pr}, {"z_score", res.z_score},
             {"p_value", res.p_value},     {"reject", res.reject},
             {"alpha", opt.alpha},         {"bandwidth", kernel.bandwidth},
             {"seed", opt.seed}};
    emit(opt.output, out.dump(2) + "\n");
    return 0;
}

int cmd_witness(const CommonOptions& opt, const std::string& method, const std::string& oracle,
                double bandwidth, double lambda, double gamma, double temperature, double tau,
                double box_bound, const std::string& grid_spec) {
    auto [x, y] = load_pair(opt);
    if (x.cols() != 1) throw UsageError("witness: 1-d samples only");

    double lo = -4.0, hi = 7.0;
    int count = 221;
    if (!grid_spec.empty()) {
        std::stringstream ss(grid_spec);
        std::string a, b, c;
        if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c, ':'))
            throw UsageError("witness: --grid expects min:max:count");
        lo = std::stod(a);
        hi = std::stod(b);
        count = std::stoi(c);
    }

    kernels::KernelConfig kernel;
    if (bandwidth > 0.0) {
        kernel.bandwidth = bandwidth;
    } else {
        SampleSet pooled(x.rows() + y.rows(), 1);
        pooled << x, y;
        kernel.bandwidth = kernels::bandwidth_grid(pooled, 1)[0];
    }

    // Fit with arguments ordered (Y, X) so the estimate tracks dP/dQ for
    // X ~ P, Y ~ Q, matching the analytic oracle column.
    auto model = ratio::fit_ratio(y, x, kernel, lambda);

    std::optional<hswitness_sdp::WitnessEvaluator> sdp;
    if (method == "sdp") {
        auto n = std::min(x.rows(), y.rows());
        auto problem = hswitness_sdp::make_problem(x.topRows(n), y.topRows(n), kernel,
                                                   std::log(gamma), tau, box_bound);
        sdp = hswitness_sdp::recover_witness(problem, hswitness_sdp::fista_solve(problem));
    } else if (method != "ratio") {
        throw UsageError("witness: --method must be ratio or sdp");
    }

    benchmarks::GaussianPair analytic;
    bool with_oracle = oracle == "gaussian";
    if (with_oracle) {
        analytic.mean_p = Vector::Constant(1, 0.0);
        analytic.mean_q = Vector::Constant(1, 3.0);
        if (!opt.gen_spec.empty()) {
            auto spec = GeneratorSpec::parse(opt.gen_spec);
            if (spec.family == "gaussian") {
                analytic.mean_p = Vector::Constant(1, spec.arg("mp", 0.0));
                analytic.mean_q = Vector::Constant(1, spec.arg("mq", 0.0));
                analytic.sigma = spec.arg("sigma", 1.0);
            }
        }
    }

    std::ostringstream csv;
    csv << "u,ratio,witness_hard,witness_soft";
    if (sdp) csv << ",witness_sdp";
    if (with_oracle) csv << ",analytic_ratio";
    csv << "\n";
    for (int i = 0; i < count; ++i) {
        double u = lo + (hi - lo) * i / std::max(1, count - 1);
        SampleSet pt(1, 1);
        pt << u;
        double r = ratio::evaluate_ratio(model, pt)(0);
        csv << u << "," << r << "," << (r >= gamma ? 1.0 : 0.0) << ","
            << divergences::sigmoid_witness(gamma, temperature, r);
        if (sdp) csv << "," << (*sdp)(pt.row(0));
        if (with_oracle) csv << "," << analytic.analytic_ratio(pt.row(0));
        csv << "\n";
    }
    emit(opt.output, csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularized f-divergence kernel two-sample tests"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "write a synthetic sample as CSV");
    std::string gen_dist;
    long gen_n = 100;
    std::uint64_t gen_seed = 0;
    bool gen_header = false;
    std::string gen_out;
    gen->add_option("--dist", gen_dist, "uniform:d=1,a=0.5 | expo1d:k=20 | gaussian:d=1,m=0,sigma=1")
        ->required();
    gen->add_option("--n", gen_n, "number of points");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_flag("--header", gen_header, "write a header row");
    gen->add_option("-o,--output", gen_out, "output CSV path")->required();

    // test
    auto* test = app.add_subcommand("test", "two-sample permutation test");
    CommonOptions test_opt;
    std::vector<std::string> test_stats;
    bool test_aggregate = false;
    add_common(test, test_opt);
    test->add_option("--statistic", test_stats, "statistic name(s)")->required()->delimiter(',');
    test->add_flag("--aggregate", test_aggregate, "aggregate the listed divergences (f-Agg)");

    // power
    auto* power = app.add_subcommand("power", "rejection-rate sweep over an alternative");
    CommonOptions power_opt;
    std::vector<std::string> power_stats;
    std::vector<double> power_sweep;
    int power_reps = 100;
    bool power_aggregate = false;
    add_common(power, power_opt);
    power->add_option("--statistic", power_stats, "statistic name(s)")->required()->delimiter(',');
    power->add_option("--sweep", power_sweep, "alternative parameter values")->delimiter(',');
    power->add_option("--reps", power_reps, "repetitions per cell");
    power->add_flag("--aggregate", power_aggregate, "also report the aggregated test");

    // audit
    auto* audit = app.add_subcommand("audit", "differential-privacy audit via Hockey-Stick tests");
    CommonOptions audit_opt;
    std::string audit_mechanism = "all";
    double audit_eps = 0.1, audit_noise_eps = 0.0;
    int audit_reps = 1;
    bool audit_no_jitter = false;
    add_common(audit, audit_opt, false);
    audit->add_option("--mechanism", audit_mechanism, "svt3..svt6, mean1, mean2, laplace, or all");
    audit->add_option("--epsilon", audit_eps, "claimed privacy budget");
    audit->add_option("--noise-epsilon", audit_noise_eps,
                      "budget the mechanism noise is calibrated to (mechanism parameter)");
    audit->add_option("--n", audit_opt.n, "samples per dataset");
    audit->add_option("--reps", audit_reps, "repetitions (batch mode)");
    audit->add_flag("--no-jitter", audit_no_jitter, "disable the discrete-output jitter");

    // relative
    auto* relative = app.add_subcommand("relative", "three-sample relative similarity test");
    CommonOptions rel_opt;
    std::string rel_w, rel_gen3;
    double rel_bandwidth = 0.0;
    add_common(relative, rel_opt);
    relative->add_option("--w", rel_w, "CSV with sample W");
    relative->add_option("--gen3", rel_gen3, "gaussian3:d=2,mx=0,my=5,mw=0.1,sigma=1");
    relative->add_option("--bandwidth", rel_bandwidth, "kernel bandwidth (default: median heuristic)");

    // witness
    auto* witness = app.add_subcommand("witness", "dump ratio and witness curves on a grid");
    CommonOptions wit_opt;
    std::string wit_method = "ratio", wit_oracle, wit_grid;
    double wit_bandwidth = 0.0, wit_lambda = 0.1, wit_gamma = 1.0, wit_temperature = 0.1;
    double wit_tau = 1.0, wit_box = 1.0;
    add_common(witness, wit_opt);
    witness->add_option("--method", wit_method, "ratio | sdp (adds the SDP witness column)");
    witness->add_option("--oracle", wit_oracle, "gaussian: add the analytic ratio column");
    witness->add_option("--grid", wit_grid, "evaluation grid min:max:count");
    witness->add_option("--bandwidth", wit_bandwidth, "kernel bandwidth");
    witness->add_option("--lambda", wit_lambda, "ratio regularization");
    witness->add_option("--gamma", wit_gamma, "Hockey-Stick threshold");
    witness->add_option("--temperature", wit_temperature, "sigmoid temperature");
    witness->add_option("--tau", wit_tau, "SDP regularization strength");
    witness->add_option("--M", wit_box, "SDP box bound");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_dist, gen_n, gen_seed, gen_header, gen_out);
        if (test->parsed()) return cmd_test(test_opt, test_stats, test_aggregate);
        if (power->parsed())
            return cmd_power(power_opt, power_stats, power_aggregate, power_sweep, power_reps);
        if (audit->parsed())
            return cmd_audit(audit_opt, audit_mechanism, audit_eps, audit_noise_eps, audit_reps,
                             audit_no_jitter);
        if (relative->parsed()) return cmd_relative(rel_opt, rel_w, rel_gen3, rel_bandwidth);
        if (witness->parsed())
            return cmd_witness(wit_opt, wit_method, wit_oracle, wit_bandwidth, wit_lambda,
                               wit_gamma, wit_temperature, wit_tau, wit_box, wit_grid);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const io::CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
