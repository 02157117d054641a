#include "pbda/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "pbda/random.hpp"

namespace pbda {

void IsotropicGaussian::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("IsotropicGaussian: sigma must be > 0");
    for (double v : mean) {
        if (!std::isfinite(v)) throw std::invalid_argument("IsotropicGaussian: non-finite mean");
    }
}

double kl_isotropic(const IsotropicGaussian& rho, const IsotropicGaussian& pi) {
    rho.validate();
    pi.validate();
    if (rho.mean.size() != pi.mean.size()) throw std::invalid_argument("kl_isotropic: dimension mismatch");
    const double d = static_cast<double>(rho.mean.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < rho.mean.size(); ++i) {
        const double diff = rho.mean[i] - pi.mean[i];
        sq += diff * diff;
    }
    const double var_pi = pi.sigma * pi.sigma;
    const double ratio = rho.sigma * rho.sigma / var_pi;
    // Spread term is exactly zero for equal sigmas.
    const double spread = rho.sigma == pi.sigma ? 0.0 : d * (std::log(pi.sigma / rho.sigma) + 0.5 * ratio - 0.5);
    return spread + sq / (2.0 * var_pi);
}

PosteriorSampleSet sample_posterior(const IsotropicGaussian& g, std::size_t pairs, std::uint64_t seed) {
    g.validate();
    if (pairs == 0) throw std::invalid_argument("sample_posterior: need at least one pair");
    PosteriorSampleSet set;
    set.seed = seed;
    set.draws.reserve(2 * pairs);
    Rng rng = make_rng(seed, "posterior");
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t k = 0; k < 2 * pairs; ++k) {
        WeightVector w(g.mean.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = g.mean[i] + g.sigma * z(rng);
        set.draws.push_back(std::move(w));
    }
    return set;
}

PriorPosteriorPair learn_prior_posterior(const LabeledSample& S, double alpha, const MlpArchitecture& arch,
                                         const TrainConfig& cfg_prior, const TrainConfig& cfg_post, double sigma,
                                         std::uint64_t seed, const CheckpointSchedule& sched) {
    arch.validate();
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("learn_prior_posterior: alpha must be in [0,1)");
    if (!(sigma > 0.0)) throw std::invalid_argument("learn_prior_posterior: sigma must be > 0");
    const std::size_t m = S.size();
    if (m == 0) throw std::invalid_argument("learn_prior_posterior: empty sample");
    const auto prior_count = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(m)));
    if (alpha > 0.0 && prior_count < 1) {
        throw std::invalid_argument("learn_prior_posterior: alpha * m < 1 leaves the prior split empty");
    }
    if (prior_count >= m) throw std::invalid_argument("learn_prior_posterior: prior split leaves no eval data");

    PriorPosteriorPair pair;
    pair.arch = arch;
    pair.alpha = alpha;

    Rng split_rng = make_rng(seed, "split");
    std::vector<std::size_t> perm = random_permutation(m, split_rng);
    pair.prior_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(prior_count));
    pair.eval_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(prior_count), perm.end());
    std::sort(pair.prior_indices.begin(), pair.prior_indices.end());
    std::sort(pair.eval_indices.begin(), pair.eval_indices.end());
    pair.eval_set = S.select(pair.eval_indices);

    WeightVector w_alpha = init_weights(arch, derive_seed(seed, "init-seed"));
    if (prior_count > 0) {
        TrainConfig cfg = cfg_prior;
        cfg.seed = derive_seed(seed, "prior-train");
        const LabeledSample prior_data = S.select(pair.prior_indices);
        w_alpha = train(arch, w_alpha, prior_data, cfg, CheckpointSchedule{0, false}).final_weights;
    }
    pair.prior = IsotropicGaussian{w_alpha, sigma};

    TrainConfig cfg = cfg_post;
    cfg.seed = derive_seed(seed, "posterior-train");
    TrainResult post = train(arch, w_alpha, S, cfg, sched);
    for (auto& ck : post.checkpoints) {
        pair.posterior_checkpoints.push_back({ck.seen_fraction, IsotropicGaussian{std::move(ck.weights), sigma}});
    }
    return pair;
}

void save_pair(const std::filesystem::path& dir, const PriorPosteriorPair& pair) {
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "prior.ckpt", pair.arch, 0.0, pair.prior.mean);
    for (std::size_t i = 0; i < pair.posterior_checkpoints.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "posterior_%03zu.ckpt", i);
        const auto& ck = pair.posterior_checkpoints[i];
        save_checkpoint(dir / name, pair.arch, ck.seen_fraction, ck.posterior.mean);
    }
    std::ofstream split(dir / "split_indices.txt");
    for (auto i : pair.prior_indices) split << i << "\n";
    nlohmann::json meta = {{"alpha", pair.alpha},
                           {"sigma", pair.prior.sigma},
                           {"posterior_checkpoints", pair.posterior_checkpoints.size()}};
    std::ofstream(dir / "pair.json") << meta.dump(2) << "\n";
}

PriorPosteriorPair load_pair(const std::filesystem::path& dir, const LabeledSample& S) {
    std::ifstream meta_in(dir / "pair.json");
    if (!meta_in) throw std::runtime_error("missing pair.json in " + dir.string());
    const nlohmann::json meta = nlohmann::json::parse(meta_in);

    PriorPosteriorPair pair;
    pair.alpha = meta.at("alpha").get<double>();
    const double sigma = meta.at("sigma").get<double>();
    const auto count = meta.at("posterior_checkpoints").get<std::size_t>();

    LoadedCheckpoint prior = load_checkpoint(dir / "prior.ckpt");
    pair.arch = prior.arch;
    pair.prior = {std::move(prior.weights), sigma};
    for (std::size_t i = 0; i < count; ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "posterior_%03zu.ckpt", i);
        LoadedCheckpoint ck = load_checkpoint(dir / name);
        if (!(ck.arch == pair.arch)) throw std::runtime_error("posterior checkpoint architecture differs from prior");
        pair.posterior_checkpoints.push_back({ck.seen_fraction, {std::move(ck.weights), sigma}});
    }

    std::ifstream split(dir / "split_indices.txt");
    std::vector<bool> in_prior(S.size(), false);
    std::size_t idx;
    while (split >> idx) {
        if (idx >= S.size()) throw std::runtime_error("split index out of range for the supplied sample");
        pair.prior_indices.push_back(idx);
        in_prior[idx] = true;
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
        if (!in_prior[i]) pair.eval_indices.push_back(i);
    }
    pair.eval_set = S.select(pair.eval_indices);
    return pair;
}

}  // namespace pbda
