#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pbda/nn.hpp"
#include "pbda/sample.hpp"

namespace pbda {

/// N(mean, sigma^2 I): sigma is the per-coordinate standard deviation.
struct IsotropicGaussian {
    WeightVector mean;
    double sigma = 0.03;

    void validate() const;
};

/// KL(rho || pi) in closed form for isotropic Gaussians of equal dimension.
double kl_isotropic(const IsotropicGaussian& rho, const IsotropicGaussian& pi);

/// 2P draws from a posterior; draws 2i and 2i+1 form pair i.
struct PosteriorSampleSet {
    std::vector<WeightVector> draws;
    std::uint64_t seed = 0;

    std::size_t num_pairs() const { return draws.size() / 2; }
};

PosteriorSampleSet sample_posterior(const IsotropicGaussian& g, std::size_t pairs, std::uint64_t seed);

struct PosteriorCheckpoint {
    double seen_fraction = 0.0;
    IsotropicGaussian posterior;
};

/// Prior and posterior trajectory learned with a held-out prior split.
/// The eval set (S minus the prior split) is the only data bounds may use.
struct PriorPosteriorPair {
    MlpArchitecture arch;
    IsotropicGaussian prior;
    std::vector<PosteriorCheckpoint> posterior_checkpoints;
    LabeledSample eval_set;
    std::vector<std::size_t> prior_indices;  // rows of S used to train the prior
    std::vector<std::size_t> eval_indices;   // complement, ascending
    double alpha = 0.0;
};

/// Random split into S_alpha (floor(alpha m) rows) and the eval set; one pass
/// over S_alpha from a fresh init gives the prior mean; training continues from
/// there on all of S to give the posterior checkpoints. With alpha = 0 the
/// prior is centred at the fresh initialization.
///
/// The split, the init and both training shuffles derive from `seed`; the
/// `seed` fields of the train configs are ignored.
PriorPosteriorPair learn_prior_posterior(const LabeledSample& S, double alpha, const MlpArchitecture& arch,
                                         const TrainConfig& cfg_prior, const TrainConfig& cfg_post, double sigma,
                                         std::uint64_t seed, const CheckpointSchedule& sched = {});

/// Directory layout: prior.ckpt, posterior_NNN.ckpt, split_indices.txt
/// (rows of S_alpha, one per line) and pair.json (alpha, sigma).
void save_pair(const std::filesystem::path& dir, const PriorPosteriorPair& pair);
/// Reloads a saved pair; the eval set is rebuilt from `S` and the split indices.
PriorPosteriorPair load_pair(const std::filesystem::path& dir, const LabeledSample& S);

}  // namespace pbda
