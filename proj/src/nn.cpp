#include "pbda/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pbda/random.hpp"

namespace pbda {

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

void MlpArchitecture::validate() const {
    if (layer_widths.size() < 2) throw std::invalid_argument("architecture needs at least 2 layers");
    for (auto w : layer_widths) {
        if (w == 0) throw std::invalid_argument("architecture layer widths must be >= 1");
    }
    if (layer_widths.back() != 1) throw std::invalid_argument("architecture output width must be 1 (single logit)");
}

std::size_t MlpArchitecture::parameter_count() const {
    return layer_offset(num_layers());
}

std::size_t MlpArchitecture::layer_offset(std::size_t l) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < l; ++i) off += layer_widths[i] * layer_widths[i + 1] + layer_widths[i + 1];
    return off;
}

WeightVector init_weights(const MlpArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    WeightVector w(arch.parameter_count(), 0.0);
    Rng rng = make_rng(seed, "init");
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const std::size_t fan_in = arch.layer_widths[l];
        const std::size_t fan_out = arch.layer_widths[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-scale, scale);
        const std::size_t off = arch.layer_offset(l);
        for (std::size_t i = 0; i < fan_in * fan_out; ++i) w[off + i] = dist(rng);
    }
    return w;
}

namespace {

double activate(Activation a, double z) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double activate_grad(Activation a, double z) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

void check_weights(const MlpArchitecture& arch, std::span<const double> w) {
    if (w.size() != arch.parameter_count()) {
        throw std::invalid_argument("weight vector length " + std::to_string(w.size()) +
                                    " does not match architecture parameter count " +
                                    std::to_string(arch.parameter_count()));
    }
}

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Forward pass keeping pre-activations per layer (zs[l] has width layer_widths[l+1]).
double forward_trace(const MlpArchitecture& arch, std::span<const double> w, std::span<const double> x,
                     std::vector<std::vector<double>>& zs, std::vector<std::vector<double>>& acts) {
    const std::size_t layers = arch.num_layers();
    zs.resize(layers);
    acts.resize(layers + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = arch.layer_widths[l];
        const std::size_t out = arch.layer_widths[l + 1];
        const double* W = w.data() + arch.layer_offset(l);
        const double* b = W + in * out;
        zs[l].resize(out);
        acts[l + 1].resize(out);
        const bool last = l + 1 == layers;
        for (std::size_t j = 0; j < out; ++j) {
            double s = b[j];
            const double* row = W + j * in;
            for (std::size_t i = 0; i < in; ++i) s += row[i] * acts[l][i];
            zs[l][j] = s;
            acts[l + 1][j] = last ? s : activate(arch.activation, s);
        }
    }
    return zs[layers - 1][0];
}

}  // namespace

double forward(const MlpArchitecture& arch, std::span<const double> w, std::span<const double> x) {
    check_weights(arch, w);
    if (x.size() != arch.input_dim()) {
        throw std::invalid_argument("forward: input has dimension " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(arch.input_dim()));
    }
    // Two ping-pong buffers; no per-layer allocation beyond the widest layer.
    const std::size_t widest = *std::max_element(arch.layer_widths.begin(), arch.layer_widths.end());
    std::vector<double> cur(widest), next(widest);
    std::copy(x.begin(), x.end(), cur.begin());
    const std::size_t layers = arch.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = arch.layer_widths[l];
        const std::size_t out = arch.layer_widths[l + 1];
        const double* W = w.data() + arch.layer_offset(l);
        const double* b = W + in * out;
        const bool last = l + 1 == layers;
        for (std::size_t j = 0; j < out; ++j) {
            double s = b[j];
            const double* row = W + j * in;
            for (std::size_t i = 0; i < in; ++i) s += row[i] * cur[i];
            next[j] = last ? s : activate(arch.activation, s);
        }
        std::swap(cur, next);
    }
    return cur[0];
}

double bce_loss(double logit, Label y) {
    // softplus(z) - y z, with softplus(z) = max(z, 0) + log1p(exp(-|z|)).
    return std::max(logit, 0.0) - (y ? logit : 0.0) + std::log1p(std::exp(-std::abs(logit)));
}

WeightVector bce_gradient(const MlpArchitecture& arch, std::span<const double> w, const LabeledSample& data,
                          std::span<const std::size_t> rows) {
    check_weights(arch, w);
    if (data.dim() != arch.input_dim()) throw std::invalid_argument("bce_gradient: feature dimension mismatch");
    const std::size_t count = rows.empty() ? data.size() : rows.size();
    if (count == 0) throw std::invalid_argument("bce_gradient: empty batch");

    WeightVector grad(w.size(), 0.0);
    std::vector<std::vector<double>> zs, acts;
    std::vector<double> delta, prev_delta;
    const std::size_t layers = arch.num_layers();
    const double inv = 1.0 / static_cast<double>(count);

    for (std::size_t r = 0; r < count; ++r) {
        const std::size_t i = rows.empty() ? r : rows[r];
        const Label y = data.labels[i];
        if (y > 1) throw std::invalid_argument("bce_gradient: labels must be 0 or 1");
        const double logit = forward_trace(arch, w, data.features.row(i), zs, acts);
        if (!std::isfinite(bce_loss(logit, y))) throw std::runtime_error("bce_gradient: non-finite loss");

        delta.assign(1, (stable_sigmoid(logit) - static_cast<double>(y)) * inv);
        for (std::size_t l = layers; l-- > 0;) {
            const std::size_t in = arch.layer_widths[l];
            const std::size_t out = arch.layer_widths[l + 1];
            const std::size_t off = arch.layer_offset(l);
            const double* W = w.data() + off;
            double* gW = grad.data() + off;
            double* gb = gW + in * out;
            for (std::size_t j = 0; j < out; ++j) {
                const double d = delta[j];
                gb[j] += d;
                double* grow = gW + j * in;
                for (std::size_t k = 0; k < in; ++k) grow[k] += d * acts[l][k];
            }
            if (l == 0) break;
            prev_delta.assign(in, 0.0);
            for (std::size_t j = 0; j < out; ++j) {
                const double* row = W + j * in;
                for (std::size_t k = 0; k < in; ++k) prev_delta[k] += row[k] * delta[j];
            }
            for (std::size_t k = 0; k < in; ++k) prev_delta[k] *= activate_grad(arch.activation, zs[l - 1][k]);
            std::swap(delta, prev_delta);
        }
    }
    return grad;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must be in [0,1)");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
}

std::vector<std::size_t> checkpoint_steps(const CheckpointSchedule& sched, std::size_t steps_per_epoch,
                                          std::size_t epochs) {
    std::vector<std::size_t> steps;
    for (std::size_t k = 0; k < sched.first_epoch_checkpoints; ++k) {
        steps.push_back(k * steps_per_epoch / sched.first_epoch_checkpoints);
    }
    if (sched.per_epoch_after) {
        for (std::size_t e = 1; e <= epochs; ++e) steps.push_back(e * steps_per_epoch);
    } else {
        steps.push_back(epochs * steps_per_epoch);
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    return steps;
}

TrainResult train(const MlpArchitecture& arch, const WeightVector& w0, const LabeledSample& data,
                  const TrainConfig& cfg, const CheckpointSchedule& sched) {
    arch.validate();
    cfg.validate();
    check_weights(arch, w0);
    const std::size_t m = data.size();
    if (m == 0) throw std::invalid_argument("train: empty training data");
    if (data.dim() != arch.input_dim()) throw std::invalid_argument("train: feature dimension mismatch");

    const std::size_t steps_per_epoch = (m + cfg.batch_size - 1) / cfg.batch_size;
    const std::vector<std::size_t> ckpt = checkpoint_steps(sched, steps_per_epoch, cfg.epochs);
    auto next_ckpt = ckpt.begin();

    TrainResult result;
    WeightVector w = w0;
    WeightVector velocity(w.size(), 0.0);
    std::size_t step = 0;
    std::size_t seen = 0;

    auto maybe_checkpoint = [&] {
        if (next_ckpt != ckpt.end() && *next_ckpt == step) {
            result.checkpoints.push_back({seen, static_cast<double>(seen) / static_cast<double>(m), w});
            ++next_ckpt;
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng = make_rng(cfg.seed, "shuffle", epoch);
        const std::vector<std::size_t> perm = random_permutation(m, rng);
        for (std::size_t start = 0; start < m; start += cfg.batch_size) {
            maybe_checkpoint();
            const std::size_t end = std::min(start + cfg.batch_size, m);
            std::span<const std::size_t> batch(perm.data() + start, end - start);
            const WeightVector g = bce_gradient(arch, w, data, batch);
            for (std::size_t i = 0; i < w.size(); ++i) {
                velocity[i] = cfg.momentum * velocity[i] + g[i];
                w[i] -= cfg.learning_rate * velocity[i];
            }
            ++step;
            seen += end - start;
        }
        for (double v : w) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("train: weights diverged (non-finite) during epoch " +
                                         std::to_string(epoch + 1) + "; lower the learning rate");
            }
        }
    }
    maybe_checkpoint();
    result.final_weights = std::move(w);
    return result;
}

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MlpArchitecture& arch, double seen_fraction,
                     std::span<const double> w) {
    check_weights(arch, w);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out << "pbda-checkpoint v1 widths=";
    for (std::size_t i = 0; i < arch.layer_widths.size(); ++i) out << (i ? "," : "") << arch.layer_widths[i];
    out << " activation=" << to_string(arch.activation) << " seen_fraction=" << format_double(seen_fraction)
        << " count=" << w.size() << "\n";
    for (double v : w) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
        out.write(bytes, 8);
    }
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "pbda-checkpoint" || version != "v1") throw std::runtime_error("not a checkpoint file: " + path.string());

    LoadedCheckpoint ck;
    std::size_t count = 0;
    bool have_count = false;
    std::string field;
    while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw std::runtime_error("malformed checkpoint header field: " + field);
        const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "widths") {
            std::istringstream ws(val);
            std::string tok;
            while (std::getline(ws, tok, ',')) ck.arch.layer_widths.push_back(std::stoul(tok));
        } else if (key == "activation") {
            ck.arch.activation = activation_from_string(val);
        } else if (key == "seen_fraction") {
            ck.seen_fraction = std::stod(val);
        } else if (key == "count") {
            count = std::stoul(val);
            have_count = true;
        }
    }
    ck.arch.validate();
    if (!have_count || count != ck.arch.parameter_count()) {
        throw std::runtime_error("checkpoint weight count does not match its architecture: " + path.string());
    }
    ck.weights.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char bytes[8];
        in.read(reinterpret_cast<char*>(bytes), 8);
        if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        ck.weights[i] = std::bit_cast<double>(bits);
    }
    return ck;
}

}  // namespace pbda
