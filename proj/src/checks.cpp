#include "pbda/checks.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "pbda/bounds.hpp"
#include "pbda/divergences.hpp"
#include "pbda/experiment.hpp"
#include "pbda/kernels.hpp"
#include "pbda/nn.hpp"
#include "pbda/random.hpp"
#include "pbda/stochastic.hpp"
#include "pbda/tasks.hpp"

namespace pbda::checks {

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double log_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double rel_err(double got, double want) {
    const double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

// ---- straight-line bound formulas ------------------------------------------------

double cc_oracle(double a) { return a / (1.0 - std::exp(-a)); }

double mcallester_oracle(const BoundInputs& in, double g) {
    const double m = in.m_source;
    return in.gibbs_risk / g + (in.kl + std::log(1.0 / in.delta)) / (2.0 * g * (1.0 - g) * m);
}

double mult_oracle(const BoundInputs& in, double a, double b) {
    const double ap = cc_oracle(a), bp = cc_oracle(b);
    const double m = in.m_source, n = in.n_target, beta = *in.beta_inf;
    return ap * 0.5 * in.disagreement_target + bp * beta * in.joint_error_source +
           (ap / (n * a) + bp * beta / (m * b)) * (2.0 * in.kl + std::log(2.0 / in.delta));
}

double add_oracle(const BoundInputs& in, double w, double g) {
    const double wp = cc_oracle(w), gp = cc_oracle(2.0 * g);
    const double m = std::min(in.m_source, in.n_target);
    return wp * in.gibbs_risk + gp * 0.5 * in.domain_disagreement +
           (wp / w + gp / g) * (in.kl + std::log(3.0 / in.delta)) / m + in.oracle->lambda_rho + 0.5 * (gp - 1.0);
}

double iw_oracle(const BoundInputs& in, double g) {
    const double m = in.m_source;
    return *in.gibbs_weighted_risk / g + *in.beta_inf * (in.kl + std::log(1.0 / in.delta)) / (2.0 * g * (1.0 - g) * m);
}

double mmd_oracle(const BoundInputs& in, double g) {
    const double m = std::min(in.m_source, in.n_target);
    return in.gibbs_risk / g + (in.kl + std::log(2.0 / in.delta)) / (2.0 * g * (1.0 - g) * m) + *in.mmd_value +
           2.0 * std::sqrt(in.kernel_bound / m) * (2.0 + std::sqrt(std::log(4.0 / in.delta)));
}

double bound_oracle(BoundName b, const BoundInputs& in, const std::vector<double>& p) {
    switch (b) {
        case BoundName::mcallester: return mcallester_oracle(in, p[0]);
        case BoundName::mult: return mult_oracle(in, p[0], p[1]);
        case BoundName::add: return add_oracle(in, p[0], p[1]);
        case BoundName::iw: return iw_oracle(in, p[0]);
        case BoundName::mmd: return mmd_oracle(in, p[0]);
    }
    return NAN;
}

BoundInputs random_inputs(Rng& rng) {
    BoundInputs in;
    in.m_source = static_cast<std::size_t>(log_uniform(rng, 50, 1e5));
    in.n_target = static_cast<std::size_t>(log_uniform(rng, 50, 1e5));
    in.kl = uniform(rng, 0, 1) < 0.1 ? 0.0 : log_uniform(rng, 1e-3, 1e4);
    in.delta = log_uniform(rng, 1e-4, 0.5);
    in.beta_inf = log_uniform(rng, 1, 50);
    in.gibbs_risk = uniform(rng, 0, 1);
    in.gibbs_weighted_risk = uniform(rng, 0, *in.beta_inf);
    in.disagreement_source = uniform(rng, 0, 1);
    in.disagreement_target = uniform(rng, 0, 1);
    in.joint_error_source = uniform(rng, 0, 1);
    in.domain_disagreement = std::abs(in.disagreement_target - in.disagreement_source);
    in.mmd_value = uniform(rng, 0, 2);
    in.kernel_bound = uniform(rng, 0.5, 2);
    in.oracle = BoundInputs::Oracle{uniform(rng, 0, 1)};
    return in;
}

std::vector<double> random_params(BoundName b, Rng& rng) {
    switch (b) {
        case BoundName::mult:
        case BoundName::add: return {log_uniform(rng, 1e-3, 1e5), log_uniform(rng, 1e-3, 1e5)};
        default: return {uniform(rng, 1e-3, 0.999)};
    }
}

Outcome check_formulas(Profile) {
    Rng rng(20240101);
    double worst = 0.0;
    std::string worst_case;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const BoundInputs in = random_inputs(rng);
        for (BoundName b : all_bounds()) {
            const auto p = random_params(b, rng);
            const double e = rel_err(evaluate_bound(b, in, p).value, bound_oracle(b, in, p));
            if (!(e <= worst)) {
                worst = e;
                worst_case = to_string(b);
            }
        }
    }

    // Worked examples: `hand` is the rounded hand-computed figure. Two of them
    // (add, mmd) carry small arithmetic slips, so the pass condition is the
    // value recomputed from the same inputs; `hand` is only reported.
    struct Worked {
        const char* name;
        double hand;
        double want;
        double got;
    };
    std::vector<Worked> worked;
    {
        BoundInputs in;
        in.gibbs_risk = 0.1;
        in.kl = 10;
        in.delta = 0.05;
        in.m_source = in.n_target = 10000;
        worked.push_back({"mcallester", 0.202599, mcallester_oracle(in, 0.5), mcallester_bound(in, 0.5).value});
        in.gibbs_weighted_risk = 0.1;
        in.beta_inf = 11;
        worked.push_back({"iw", 0.228590, iw_oracle(in, 0.5), iw_bound(in, 0.5).value});
    }
    {
        BoundInputs in;
        in.kl = 0;
        in.delta = 0.05;
        in.m_source = in.n_target = 1000;
        in.beta_inf = 1;
        worked.push_back({"mult", 0.011672, mult_oracle(in, 1, 1), mult_bound(in, 1, 1).value});
        in.oracle = BoundInputs::Oracle{0.0};
        worked.push_back({"add", 0.672468, add_oracle(in, 1, 1), add_bound(in, 1, 1).value});
    }
    {
        BoundInputs in;
        in.kl = 0;
        in.delta = 0.05;
        in.m_source = in.n_target = 10000;
        in.mmd_value = 0.0;
        in.kernel_bound = 1.0;
        worked.push_back({"mmd", 0.082616, mmd_oracle(in, 0.5), mmd_bound(in, 0.5).value});
    }
    bool worked_ok = true;
    std::string worked_detail;
    for (const auto& w : worked) {
        const bool ok = std::abs(w.got - w.want) <= 1e-6;
        worked_ok = worked_ok && ok;
        worked_detail += fmt(" %s=%.6f%s", w.name, w.got, ok ? "" : "(!)");
        if (std::abs(w.got - w.hand) > 1e-6) worked_detail += fmt("[hand figure %.6f]", w.hand);
    }
    const bool ok = worst <= 1e-12 && worked_ok;
    return {ok, fmt("%d random inputs x 5 bounds, max rel err %.2e (%s);", trials, worst, worst_case.c_str()) +
                    worked_detail};
}

// ---- beta_inf ----------------------------------------------------------------------

Outcome check_beta(Profile) {
    const MixtureTaskSpec spec = MixtureTaskSpec::twelfths_schedule(10, 1200);
    const double mix = beta_infinity(spec);
    const double one_sided = one_sided_weight(0.2, 246072, 89696);
    const bool ok = mix == 11.0 && std::abs(one_sided - 10.974) <= 1e-3;
    return {ok, fmt("twelfths schedule beta_inf = %.17g; one-sided 20%% weight = %.6f", mix, one_sided)};
}

// ---- KL vs Monte Carlo -------------------------------------------------------------

Outcome check_kl(Profile profile) {
    const int cases = profile == Profile::full ? 50 : 10;
    const std::size_t draws = profile == Profile::full ? 1000000 : 100000;
    const std::size_t d = 10;
    std::vector<double> z_scores(cases);
    std::vector<double> closed(cases);

#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < cases; ++c) {
        Rng rng = make_rng(77, "kl-case", static_cast<std::uint64_t>(c));
        std::normal_distribution<double> n01(0.0, 1.0);
        // ziggurat sampler for the 10^7 inner draws: several times faster than the polar method
        boost::random::normal_distribution<double> zig(0.0, 1.0);
        IsotropicGaussian rho, pi;
        rho.sigma = log_uniform(rng, 0.2, 2.0);
        pi.sigma = log_uniform(rng, 0.2, 2.0);
        for (std::size_t i = 0; i < d; ++i) {
            rho.mean.push_back(n01(rng));
            pi.mean.push_back(n01(rng));
        }
        closed[c] = kl_isotropic(rho, pi);

        // E_rho[log rho(w) - log pi(w)], coordinate by coordinate.
        double sum = 0.0, sum_sq = 0.0;
        const double log_ratio_const = static_cast<double>(d) * std::log(pi.sigma / rho.sigma);
        for (std::size_t k = 0; k < draws; ++k) {
            double v = log_ratio_const;
            for (std::size_t i = 0; i < d; ++i) {
                const double z = zig(rng);
                const double w = rho.mean[i] + rho.sigma * z;
                const double u = (w - pi.mean[i]) / pi.sigma;
                v += 0.5 * (u * u - z * z);
            }
            sum += v;
            sum_sq += v * v;
        }
        const double n = static_cast<double>(draws);
        const double mean = sum / n;
        const double var = (sum_sq - n * mean * mean) / (n - 1.0);
        z_scores[c] = (closed[c] - mean) / std::sqrt(var / n);
    }
    int bad = 0;
    double worst = 0.0;
    for (double z : z_scores) {
        if (std::abs(z) > 3.0) ++bad;
        worst = std::max(worst, std::abs(z));
    }
    return {bad == 0, fmt("%d cases, %zu draws each: max |z| = %.2f, %d outside 3 SE", cases, draws, worst, bad)};
}

// ---- MMD linear vs quadratic -------------------------------------------------------

Matrix gaussian_sample(std::size_t n, double shift, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix m(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, 0) = n01(rng) + shift;
        m(i, 1) = n01(rng);
    }
    return m;
}

// Delete-one jackknife standard error of the biased MMD^2 statistic, deleting
// one point of either sample at a time.
double jackknife_se(const Matrix& X, const Matrix& Y, double kappa) {
    const auto rxx = kernels::serial::kernel_row_sums(X, X, kappa);
    const auto ryy = kernels::serial::kernel_row_sums(Y, Y, kappa);
    const auto rxy = kernels::serial::kernel_row_sums(X, Y, kappa);
    const auto ryx = kernels::serial::kernel_row_sums(Y, X, kappa);
    double sxx = 0, syy = 0, sxy = 0;
    for (double v : rxx) sxx += v;
    for (double v : ryy) syy += v;
    for (double v : rxy) sxy += v;
    const double n = static_cast<double>(X.rows()), m = static_cast<double>(Y.rows());

    auto jack_var = [](const std::vector<double>& vals) {
        const double k = static_cast<double>(vals.size());
        double mean = 0;
        for (double v : vals) mean += v;
        mean /= k;
        double s = 0;
        for (double v : vals) s += (v - mean) * (v - mean);
        return (k - 1.0) / k * s;
    };
    std::vector<double> vx, vy;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double a = sxx - 2.0 * rxx[i] + 1.0, c = sxy - rxy[i];
        vx.push_back(a / ((n - 1) * (n - 1)) + syy / (m * m) - 2.0 * c / ((n - 1) * m));
    }
    for (std::size_t j = 0; j < Y.rows(); ++j) {
        const double b = syy - 2.0 * ryy[j] + 1.0, c = sxy - ryx[j];
        vy.push_back(sxx / (n * n) + b / ((m - 1) * (m - 1)) - 2.0 * c / (n * (m - 1)));
    }
    return std::sqrt(jack_var(vx) + jack_var(vy));
}

Outcome check_mmd(Profile profile) {
    const std::size_t n = profile == Profile::full ? 2000 : 500;
    const std::size_t shuffles = profile == Profile::full ? 200 : 50;
    bool ok = true;
    std::string detail;
    const std::pair<const char*, double> cases[] = {{"same", 0.0}, {"shifted", 1.0}};
    for (const auto& [name, shift] : cases) {
        const Matrix X = gaussian_sample(n, 0.0, 11);
        const Matrix Y = gaussian_sample(n, shift, 12);
        const double one[] = {1.0};
        const double kappa = median_heuristic_bandwidths(X, Y, 5, one).front();
        const LinearMmd lin = mmd_linear_detail(X, Y, kappa, shuffles, 13);
        const double q = std::pow(mmd_quadratic_biased(X, Y, kappa), 2);
        const double se = std::hypot(lin.std_error, jackknife_se(X, Y, kappa));
        const double z = (lin.value - q) / se;
        ok = ok && std::abs(z) <= 4.0;
        detail += fmt("%s%s: linear %.5f vs quadratic^2 %.5f (z = %.2f)", detail.empty() ? "" : "; ", name, lin.value,
                      q, z);
    }
    return {ok, detail};
}

// ---- gradient check ----------------------------------------------------------------

double mean_bce(const MlpArchitecture& arch, std::span<const double> w, const LabeledSample& data) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += bce_loss(forward(arch, w, data.features.row(i)), data.labels[i]);
    return s / static_cast<double>(data.size());
}

Outcome check_gradient(Profile) {
    const std::vector<MlpArchitecture> nets = {{{2, 8, 8, 1}, Activation::tanh},
                                               {{3, 10, 1}, Activation::relu},
                                               {{2, 6, 6, 1}, Activation::relu},
                                               {{4, 12, 1}, Activation::tanh}};
    const int probes_per_net = 25;
    Rng rng(31337);
    std::normal_distribution<double> n01(0.0, 1.0);
    double worst = 0.0;
    std::size_t max_params = 0;
    for (std::size_t k = 0; k < nets.size(); ++k) {
        const auto& arch = nets[k];
        const std::size_t p = arch.parameter_count();
        max_params = std::max(max_params, p);
        WeightVector w = init_weights(arch, 100 + k);
        for (double& v : w) v += 0.1 * n01(rng);  // non-zero biases too
        LabeledSample data;
        data.features = Matrix(64, arch.layer_widths.front());
        for (std::size_t i = 0; i < 64; ++i) {
            for (std::size_t j = 0; j < data.dim(); ++j) data.features(i, j) = n01(rng);
            data.labels.push_back(static_cast<Label>(rng() & 1));
        }
        const WeightVector g = bce_gradient(arch, w, data);
        std::uniform_int_distribution<std::size_t> pick(0, p - 1);
        for (int t = 0; t < probes_per_net; ++t) {
            const std::size_t i = pick(rng);
            const double h = 1e-5;
            WeightVector wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            const double fd = (mean_bce(arch, wp, data) - mean_bce(arch, wm, data)) / (2.0 * h);
            const double e = std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-6});
            worst = std::max(worst, e);
        }
    }
    const int probes = probes_per_net * static_cast<int>(nets.size());
    return {worst <= 1e-4 && max_params <= 200,
            fmt("%d probes on %zu nets (<= %zu parameters): max rel err %.2e", probes, nets.size(), max_params, worst)};
}

// ---- experiment-level checks -------------------------------------------------------

ExperimentConfig acceptance_config() {
    ExperimentConfig cfg;
    SyntheticSpec spec = SyntheticSpec::default_2d();
    spec.n_source = 20000;
    spec.n_target = 20000;
    spec.n_oracle = 10000;
    cfg.synthetic = spec;
    cfg.arch = {{2, 16, 16, 1}, Activation::relu};
    cfg.sigma = 0.03;
    cfg.delta = 0.05;
    cfg.prior_training.batch_size = 32;
    cfg.posterior_training.batch_size = 32;
    return cfg;
}

std::map<std::uint64_t, std::vector<const ReportRow*>> by_seed(const RunReport& report, double alpha) {
    std::map<std::uint64_t, std::vector<const ReportRow*>> out;
    for (const auto& r : report.rows) {
        if (r.alpha == alpha) out[r.seed].push_back(&r);
    }
    return out;
}

double bound_value(const ReportRow& r, BoundName b) {
    for (const auto& x : r.bounds) {
        if (x.name == b) return x.value;
    }
    throw std::logic_error("bound missing from report row");
}

double min_bound(const std::vector<const ReportRow*>& rows, BoundName b) {
    double v = INFINITY;
    for (const ReportRow* r : rows) v = std::min(v, bound_value(*r, b));
    return v;
}

Outcome check_iw_validity(Profile profile) {
    ExperimentConfig cfg = acceptance_config();
    cfg.alphas = {0.3};
    cfg.bounds = {BoundName::iw};
    cfg.seeds.clear();
    const std::uint64_t runs = profile == Profile::full ? 20 : 5;
    for (std::uint64_t s = 0; s < runs; ++s) cfg.seeds.push_back(1000 + s);
    if (cfg.synthetic->beta_infinity() > 10.0) return {false, "task beta_inf exceeds 10"};

    const RunReport report = run_experiment(cfg);
    int held = 0;
    double min_gap = INFINITY, max_target = 0.0, max_bound = 0.0;
    for (const auto& [seed, rows] : by_seed(report, 0.3)) {
        const ReportRow& last = *rows.back();
        const double b = bound_value(last, BoundName::iw);
        const double t = last.estimates.target_gibbs_risk.value().value;
        if (b >= t) ++held;
        min_gap = std::min(min_gap, b - t);
        max_target = std::max(max_target, t);
        max_bound = std::max(max_bound, b);
    }
    return {held == static_cast<int>(runs),
            fmt("beta_inf %.3f; bound >= oracle target Gibbs risk in %d/%d runs (min gap %.4f, max target risk %.4f, "
                "max bound %.4f)",
                cfg.synthetic->beta_infinity(), held, static_cast<int>(runs), min_gap, max_target, max_bound)};
}

Outcome check_prior_tightening(Profile profile) {
    ExperimentConfig cfg = acceptance_config();
    cfg.synthetic->n_oracle = 0;
    cfg.alphas = {0.0, 0.3};
    cfg.bounds = {BoundName::iw, BoundName::mmd};
    cfg.seeds = profile == Profile::full ? std::vector<std::uint64_t>{0, 1, 2, 3, 4} : std::vector<std::uint64_t>{0, 1, 2};
    const RunReport report = run_experiment(cfg);
    const auto a0 = by_seed(report, 0.0), a3 = by_seed(report, 0.3);

    int tighter = 0, vacuous0 = 0, informative3 = 0;
    std::string per_seed;
    for (std::uint64_t s : cfg.seeds) {
        const auto& r0 = a0.at(s);
        const auto& r3 = a3.at(s);
        const double iw0 = min_bound(r0, BoundName::iw), iw3 = min_bound(r3, BoundName::iw);
        const double mmd0 = min_bound(r0, BoundName::mmd), mmd3 = min_bound(r3, BoundName::mmd);
        if (iw3 < iw0 && mmd3 < mmd0) ++tighter;
        const double f_iw0 = bound_value(*r0.back(), BoundName::iw), f_mmd0 = bound_value(*r0.back(), BoundName::mmd);
        const double f_iw3 = bound_value(*r3.back(), BoundName::iw);
        if (f_iw0 > 1.0 && f_mmd0 > 1.0) ++vacuous0;
        if (f_iw3 < 1.0) ++informative3;
        per_seed += fmt(" [seed %llu min iw %.3f->%.3f mmd %.3f->%.3f; final a=0 iw %.3f mmd %.3f, a=0.3 iw %.3f]",
                        static_cast<unsigned long long>(s), iw0, iw3, mmd0, mmd3, f_iw0, f_mmd0, f_iw3);
    }
    const int n = static_cast<int>(cfg.seeds.size());
    const int need = (4 * n + 4) / 5;
    const bool ok = tighter >= need && vacuous0 == n && informative3 == n;
    return {ok, fmt("tighter with alpha=0.3 in %d/%d seeds (need %d); alpha=0 final vacuous %d/%d; alpha=0.3 final "
                    "IW < 1 %d/%d;",
                    tighter, n, need, vacuous0, n, informative3, n) +
                    per_seed};
}

Outcome check_iw_identity(Profile profile) {
    const int resamples = profile == Profile::full ? 50 : 20;
    // A fixed linear classifier that disagrees with the labeling rule on a
    // region weighted differently by the two domains.
    const MlpArchitecture arch{{2, 1}, Activation::relu};
    const WeightVector w{1.0, -0.5, 0.3};
    std::vector<double> weighted, target;
    for (int r = 0; r < resamples; ++r) {
        SyntheticSpec spec = SyntheticSpec::default_2d();
        spec.n_source = 4000;
        spec.n_target = 4000;
        spec.seed = derive_seed(4242, "iw-identity", static_cast<std::uint64_t>(r));
        const TaskInstance task = build_synthetic_task(spec);
        weighted.push_back(weighted_empirical_risk(arch, w, task.source));
        target.push_back(empirical_risk(arch, w, task.target_labeled_oracle));
    }
    auto mean_se = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        double m = 0;
        for (double x : v) m += x;
        m /= n;
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair{m, std::sqrt(s / (n - 1) / n)};
    };
    const auto [mw, sw] = mean_se(weighted);
    const auto [mt, st] = mean_se(target);
    const double z = (mw - mt) / std::hypot(sw, st);
    return {std::abs(z) <= 4.0, fmt("%d resamples: weighted source risk %.5f +- %.5f, target risk %.5f +- %.5f "
                                    "(z = %.2f)",
                                    resamples, mw, sw, mt, st, z)};
}

ParamGrid random_grid(BoundName b, Rng& rng) {
    auto axis = [&](double lo, double hi, bool log_scale) {
        std::uniform_int_distribution<int> k(1, 17);
        std::vector<double> v;
        const int count = k(rng);
        while (static_cast<int>(v.size()) < count) {
            v.push_back(log_scale ? log_uniform(rng, lo, hi) : uniform(rng, lo, hi));
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
        return v;
    };
    ParamGrid g;
    if (b == BoundName::mult) {
        g.axes = {{"a", axis(1e-3, 1e5, true)}, {"b", axis(1e-3, 1e5, true)}};
    } else if (b == BoundName::add) {
        g.axes = {{"omega", axis(1e-3, 1e5, true)}, {"gamma", axis(1e-3, 1e5, true)}};
    } else {
        g.axes = {{"gamma", axis(1e-3, 0.999, false)}};
    }
    return g;
}

Outcome check_grid_contract(Profile profile) {
    const int cases = profile == Profile::full ? 200 : 50;
    Rng rng(9090);
    int failures = 0;
    std::size_t evaluations = 0;
    double worst_oracle = 0.0;
    for (int c = 0; c < cases; ++c) {
        const BoundInputs in = random_inputs(rng);
        for (BoundName b : all_bounds()) {
            const ParamGrid grid = (c % 10 == 0) ? default_grid(b) : random_grid(b, rng);
            const BoundResult got = grid_search(b, in, grid);
            const std::size_t k = grid.size();
            BoundInputs corrected = in;
            corrected.delta = in.delta / static_cast<double>(k);

            double best = INFINITY, best_oracle = INFINITY;
            std::vector<double> best_params;
            const auto& ax0 = grid.axes[0].second;
            const std::vector<double> single{0.0};
            const auto& ax1 = grid.axes.size() > 1 ? grid.axes[1].second : single;
            for (double p0 : ax0) {
                for (double p1 : ax1) {
                    std::vector<double> p{p0};
                    if (grid.axes.size() > 1) p.push_back(p1);
                    const BoundResult r = evaluate_bound(b, corrected, p);
                    ++evaluations;
                    if (r.value < best) {
                        best = r.value;
                        best_params = p;
                    }
                    best_oracle = std::min(best_oracle, bound_oracle(b, corrected, p));
                }
            }
            std::vector<double> got_params;
            for (const auto& [name, v] : got.params) got_params.push_back(v);
            worst_oracle = std::max(worst_oracle, rel_err(got.value, best_oracle));
            const bool ok = got.value == best && got.delta_effective == corrected.delta && got_params == best_params &&
                            rel_err(got.value, best_oracle) <= 1e-12;
            if (!ok) ++failures;
        }
    }
    return {failures == 0, fmt("%d cases x 5 bounds, %zu exhaustive evaluations at delta/k: %d mismatches, max rel "
                               "err vs straight-line minimum %.2e",
                               cases, evaluations, failures, worst_oracle)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome check_determinism(Profile profile) {
    ExperimentConfig cfg;
    SyntheticSpec spec = SyntheticSpec::default_2d();
    spec.n_source = profile == Profile::full ? 4000 : 1000;
    spec.n_target = spec.n_source;
    cfg.synthetic = spec;
    cfg.arch = {{2, 8, 8, 1}, Activation::relu};
    cfg.alphas = {0.0, 0.3};
    cfg.bounds = all_bounds();
    cfg.oracle_mode = true;
    cfg.seeds = profile == Profile::full ? std::vector<std::uint64_t>{0, 1} : std::vector<std::uint64_t>{0};

    const auto dir = std::filesystem::temp_directory_path() /
                     fmt("pbda-determinism-%llu", static_cast<unsigned long long>(
                                                      std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(dir);
    const int threads = omp_get_max_threads();
    std::string files[2][2];
    for (int run = 0; run < 2; ++run) {
        // The second run uses a different thread count: results must not depend on it.
        omp_set_num_threads(run == 0 ? threads : threads + 2);
        const RunReport report = run_experiment(cfg);
        const auto csv = dir / fmt("run%d.csv", run);
        const auto json = dir / fmt("run%d.json", run);
        emit(report, ReportFormat::csv, csv);
        emit(report, ReportFormat::json, json);
        files[run][0] = slurp(csv);
        files[run][1] = slurp(json);
    }
    omp_set_num_threads(threads);
    std::filesystem::remove_all(dir);
    const bool ok = files[0][0] == files[1][0] && files[0][1] == files[1][1] && !files[0][0].empty();
    return {ok, fmt("CSV %zu bytes %s, JSON %zu bytes %s (thread counts %d and %d)", files[0][0].size(),
                    files[0][0] == files[1][0] ? "identical" : "DIFFER", files[0][1].size(),
                    files[0][1] == files[1][1] ? "identical" : "DIFFER", threads, threads + 2)};
}

struct Entry {
    const char* name;
    double time_limit;
    std::function<Outcome(Profile)> fn;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = {
        {"formula-exactness", 1.0, check_formulas},
        {"beta-inf-reproduction", 1.0, check_beta},
        {"kl-oracle", 30.0, check_kl},
        {"mmd-oracle", 60.0, check_mmd},
        {"gradient-check", 30.0, check_gradient},
        {"iw-bound-validity", 600.0, check_iw_validity},
        {"data-dependent-prior-tightening", 900.0, check_prior_tightening},
        {"importance-weighting-identity", 120.0, check_iw_identity},
        {"grid-union-bound-contract", 1.0, check_grid_contract},
        {"determinism", 300.0, check_determinism},
    };
    return entries;
}

}  // namespace

int check_count() { return static_cast<int>(registry().size()); }

std::string check_name(int id) { return registry().at(static_cast<std::size_t>(id - 1)).name; }

CheckResult run_check(int id, Profile profile) {
    const Entry& e = registry().at(static_cast<std::size_t>(id - 1));
    CheckResult r;
    r.id = id;
    r.name = e.name;
    r.time_limit = e.time_limit;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = e.fn(profile);
    } catch (const std::exception& ex) {
        o = {false, std::string("exception: ") + ex.what()};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.passed = o.passed;
    r.detail = o.detail;
    if (r.seconds > r.time_limit) {
        r.passed = false;
        r.detail += fmt(" [over the %.0f s time limit]", r.time_limit);
    }
    return r;
}

std::string format_result(const CheckResult& r) {
    return fmt("%s [%2d] %-32s (%7.2f s) ", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds) + r.detail;
}

}  // namespace pbda::checks
