#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pbda/sample.hpp"

namespace pbda {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected network with a single-logit binary head.
/// Layer widths run from the input dimension to the output (which must be 1).
struct MlpArchitecture {
    std::vector<std::size_t> layer_widths;
    Activation activation = Activation::relu;

    /// Throws std::invalid_argument unless there are >= 2 layers, all widths >= 1
    /// and the last width is 1.
    void validate() const;
    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t num_layers() const { return layer_widths.size() - 1; }
    std::size_t parameter_count() const;
    /// Offset of layer l's weight block in the flat vector; its biases follow the weights.
    std::size_t layer_offset(std::size_t l) const;

    friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

/// Flat parameter vector, layer by layer: weights (out x in, row-major) then biases.
using WeightVector = std::vector<double>;

WeightVector init_weights(const MlpArchitecture& arch, std::uint64_t seed);

double forward(const MlpArchitecture& arch, std::span<const double> w, std::span<const double> x);

/// 1 iff logit > 0; a logit of exactly 0 maps to 0.
inline Label predict(double logit) { return logit > 0.0 ? 1 : 0; }

/// Numerically stable binary cross-entropy of a logit against a {0,1} label.
double bce_loss(double logit, Label y);

/// Gradient of the mean BCE over `batch` rows of `data` (all rows when `rows` is empty).
WeightVector bce_gradient(const MlpArchitecture& arch, std::span<const double> w, const LabeledSample& data,
                          std::span<const std::size_t> rows = {});

struct TrainConfig {
    double learning_rate = 3e-3;
    double momentum = 0.95;
    std::size_t batch_size = 128;
    std::size_t epochs = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CheckpointSchedule {
    std::size_t first_epoch_checkpoints = 10;
    bool per_epoch_after = true;
};

struct Checkpoint {
    std::size_t seen_samples = 0;
    double seen_fraction = 0.0;  // seen samples / |data|, i.e. epochs elapsed
    WeightVector weights;
};

struct TrainResult {
    WeightVector final_weights;
    std::vector<Checkpoint> checkpoints;
};

/// Step counts (0-based, counted before the step runs) at which checkpoints
/// are taken for a run of `epochs` epochs with `steps_per_epoch` steps each.
/// The first epoch gets checkpoints at fractions k/n (k = 0..n-1) and every
/// epoch end is checkpointed when per_epoch_after is set; otherwise only the
/// final step is added. Duplicates collapse so indices strictly increase.
std::vector<std::size_t> checkpoint_steps(const CheckpointSchedule& sched, std::size_t steps_per_epoch,
                                          std::size_t epochs);

/// SGD with momentum (v <- mu v + g; w <- w - lr v) on mean BCE, reshuffling
/// every epoch from a stream derived from cfg.seed. Throws std::runtime_error
/// if the weights become non-finite.
TrainResult train(const MlpArchitecture& arch, const WeightVector& w0, const LabeledSample& data,
                  const TrainConfig& cfg, const CheckpointSchedule& sched);

// Checkpoint files: one ASCII header line
//   pbda-checkpoint v1 widths=2,8,1 activation=relu seen_fraction=0.5 count=33
// followed by `count` little-endian IEEE-754 doubles in flat-vector order.
void save_checkpoint(const std::filesystem::path& path, const MlpArchitecture& arch, double seen_fraction,
                     std::span<const double> w);

struct LoadedCheckpoint {
    MlpArchitecture arch;
    double seen_fraction = 0.0;
    WeightVector weights;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pbda
