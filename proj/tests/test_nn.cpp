#include <doctest.h>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "pbda/nn.hpp"
#include "pbda/risk.hpp"

using namespace pbda;

namespace {

// Plain matrix-vector forward pass, written out independently.
double naive_forward(const MlpArchitecture& arch, const WeightVector& w, std::vector<double> a) {
    std::size_t off = 0;
    const auto& L = arch.layer_widths;
    for (std::size_t l = 0; l + 1 < L.size(); ++l) {
        std::vector<double> z(L[l + 1]);
        for (std::size_t o = 0; o < L[l + 1]; ++o) {
            double s = 0;
            for (std::size_t i = 0; i < L[l]; ++i) s += w[off + o * L[l] + i] * a[i];
            z[o] = s + w[off + L[l] * L[l + 1] + o];
        }
        off += L[l] * L[l + 1] + L[l + 1];
        if (l + 2 < L.size()) {
            for (double& v : z) v = arch.activation == Activation::relu ? std::max(0.0, v) : std::tanh(v);
        }
        a = z;
    }
    return a[0];
}

double mean_loss(const MlpArchitecture& arch, const WeightVector& w, const LabeledSample& d) {
    double s = 0;
    for (std::size_t i = 0; i < d.size(); ++i) s += bce_loss(forward(arch, w, d.features.row(i)), d.labels[i]);
    return s / static_cast<double>(d.size());
}

LabeledSample blobs(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 0.5);
    LabeledSample s;
    s.features = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const Label y = i % 2;
        s.features(i, 0) = (y ? 2.0 : -2.0) + z(rng);
        s.features(i, 1) = (y ? 2.0 : -2.0) + z(rng);
        s.labels.push_back(y);
    }
    return s;
}

}  // namespace

TEST_CASE("architecture validation and parameter count") {
    MlpArchitecture a{{2, 3, 1}, Activation::relu};
    CHECK(a.parameter_count() == 13);
    CHECK(MlpArchitecture{{784, 600, 600, 1}, Activation::relu}.parameter_count() ==
          784 * 600 + 600 + 600 * 600 + 600 + 600 + 1);
    CHECK_THROWS(MlpArchitecture{{2}, Activation::relu}.validate());
    CHECK_THROWS(MlpArchitecture{{2, 0, 1}, Activation::relu}.validate());
    CHECK_THROWS(MlpArchitecture{{2, 3, 2}, Activation::relu}.validate());
    CHECK(activation_from_string(to_string(Activation::tanh)) == Activation::tanh);
    CHECK_THROWS(activation_from_string("sigmoid"));
}

TEST_CASE("init_weights is deterministic, seed sensitive and fan-in scaled") {
    const MlpArchitecture a{{2, 3, 1}, Activation::relu};
    const auto w1 = init_weights(a, 7), w2 = init_weights(a, 7), w3 = init_weights(a, 8);
    CHECK(w1.size() == 13);
    CHECK(w1 == w2);
    CHECK(w1 != w3);
    // biases zero, weights inside +-1/sqrt(fan_in)
    for (std::size_t i = 6; i < 9; ++i) CHECK(w1[i] == 0.0);
    CHECK(w1[12] == 0.0);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(w1[i]) <= 1.0 / std::sqrt(2.0));
    for (std::size_t i = 9; i < 12; ++i) CHECK(std::abs(w1[i]) <= 1.0 / std::sqrt(3.0));
}

TEST_CASE("forward") {
    SUBCASE("zero network gives logit 0") {
        const MlpArchitecture a{{3, 5, 4, 1}, Activation::tanh};
        const WeightVector w(a.parameter_count(), 0.0);
        const double x[] = {1.0, -2.0, 3.0};
        CHECK(forward(a, w, x) == 0.0);
    }
    SUBCASE("single linear layer") {
        const MlpArchitecture a{{1, 1}, Activation::relu};
        const WeightVector w{1.0, 0.0};
        const double x[] = {0.5};
        CHECK(forward(a, w, x) == 0.5);
    }
    SUBCASE("matches a naive oracle") {
        for (Activation act : {Activation::relu, Activation::tanh}) {
            const MlpArchitecture a{{4, 7, 5, 1}, act};
            for (std::uint64_t s = 0; s < 20; ++s) {
                WeightVector w = init_weights(a, s);
                Rng rng(s);
                std::normal_distribution<double> n(0, 0.3);
                for (double& v : w) v += n(rng);
                std::vector<double> x(4);
                for (double& v : x) v = n(rng) * 3;
                const double want = naive_forward(a, w, x);
                CHECK(forward(a, w, x) == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
    SUBCASE("dimension mismatch") {
        const MlpArchitecture a{{2, 3, 1}, Activation::relu};
        const double x[] = {1.0};
        CHECK_THROWS(forward(a, init_weights(a, 0), x));
        const WeightVector short_w(5, 0.0);
        const double x2[] = {1.0, 2.0};
        CHECK_THROWS(forward(a, short_w, x2));
    }
}

TEST_CASE("predict tie-break") {
    CHECK(predict(3.2) == 1);
    CHECK(predict(0.0) == 0);
    CHECK(predict(-0.001) == 0);
    CHECK(predict(-0.0) == 0);
}

TEST_CASE("bce loss is stable and bounds the 0-1 loss after scaling") {
    CHECK(std::isfinite(bce_loss(1e6, 0)));
    CHECK(bce_loss(1e6, 0) == doctest::Approx(1e6));
    CHECK(bce_loss(-1e6, 1) == doctest::Approx(1e6));
    CHECK(bce_loss(0.0, 1) == doctest::Approx(std::log(2.0)));
    Rng rng(3);
    std::normal_distribution<double> n(0, 5);
    for (int i = 0; i < 10000; ++i) {
        const double z = n(rng);
        for (Label y : {Label{0}, Label{1}}) {
            const double zero_one = predict(z) != y ? 1.0 : 0.0;
            CHECK(bce_loss(z, y) / std::log(2.0) >= zero_one);
        }
    }
}

TEST_CASE("bce_gradient") {
    SUBCASE("matches central differences") {
        const MlpArchitecture a{{3, 6, 4, 1}, Activation::tanh};
        CHECK(a.parameter_count() <= 200);
        const auto data = testing::random_labeled(32, 3, 5);
        const WeightVector w = init_weights(a, 9);
        const WeightVector g = bce_gradient(a, w, data);
        for (std::size_t i = 0; i < w.size(); ++i) {
            WeightVector p = w, m = w;
            p[i] += 1e-5;
            m[i] -= 1e-5;
            const double fd = (mean_loss(a, p, data) - mean_loss(a, m, data)) / 2e-5;
            CHECK(std::abs(g[i] - fd) <= 1e-4 * std::max({std::abs(g[i]), std::abs(fd), 1e-6}));
        }
    }
    SUBCASE("stationary point: confidently correct single sample") {
        const MlpArchitecture a{{1, 1}, Activation::relu};
        LabeledSample d;
        d.features = Matrix(1, 1, {1.0});
        d.labels = {1};
        const WeightVector w{50.0, 0.0};  // logit 50: sigma(z) - 1 ~ -2e-22
        const auto g = bce_gradient(a, w, d);
        CHECK(std::hypot(g[0], g[1]) < 1e-6);
    }
    SUBCASE("batch gradient is the mean of per-point gradients") {
        const MlpArchitecture a{{2, 5, 1}, Activation::relu};
        const auto data = testing::random_labeled(2, 2, 11);
        const WeightVector w = init_weights(a, 1);
        const auto g = bce_gradient(a, w, data);
        const std::size_t r0[] = {0}, r1[] = {1};
        const auto g0 = bce_gradient(a, w, data, r0), g1 = bce_gradient(a, w, data, r1);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(0.5 * (g0[i] + g1[i])).epsilon(1e-12));
    }
    SUBCASE("extreme logits stay finite") {
        const MlpArchitecture a{{1, 1}, Activation::relu};
        LabeledSample d;
        d.features = Matrix(1, 1, {1.0});
        d.labels = {0};
        const auto g = bce_gradient(a, WeightVector{1e300, 0.0}, d);
        CHECK(std::isfinite(g[0]));
    }
}

TEST_CASE("checkpoint schedule") {
    const auto steps = checkpoint_steps({}, 100, 5);
    CHECK(steps.size() == 15);
    CHECK(steps.front() == 0);
    CHECK(steps[1] == 10);
    CHECK(steps.back() == 500);
    CHECK(std::is_sorted(steps.begin(), steps.end()));
    CHECK(std::adjacent_find(steps.begin(), steps.end()) == steps.end());
    // tiny epochs: fractions collapse but indices still strictly increase
    const auto few = checkpoint_steps({}, 3, 2);
    CHECK(std::adjacent_find(few.begin(), few.end(), std::greater_equal<>()) == few.end());
    CHECK(checkpoint_steps({10, false}, 100, 5).back() == 500);
    CHECK(checkpoint_steps({10, false}, 100, 5).size() == 11);
}

TEST_CASE("train") {
    const MlpArchitecture a{{2, 8, 1}, Activation::relu};
    const auto data = blobs(400, 3);
    TrainConfig cfg;
    cfg.learning_rate = 3e-3;
    cfg.batch_size = 16;
    cfg.epochs = 5;
    cfg.seed = 4;
    const WeightVector w0 = init_weights(a, 2);

    SUBCASE("config validation") {
        TrainConfig bad = cfg;
        bad.epochs = 0;
        CHECK_THROWS(bad.validate());
        bad = cfg;
        bad.momentum = 1.0;
        CHECK_THROWS(bad.validate());
        bad = cfg;
        bad.batch_size = 0;
        CHECK_THROWS(bad.validate());
        bad = cfg;
        bad.epochs = 0;
        CHECK_THROWS(train(a, w0, data, bad, {}));
    }
    SUBCASE("zero learning rate keeps the weights") {
        TrainConfig z = cfg;
        z.learning_rate = 0.0;
        CHECK(train(a, w0, data, z, {}).final_weights == w0);
    }
    SUBCASE("separable blobs are learned") {
        const auto r = train(a, w0, data, cfg, {});
        CHECK(empirical_risk(a, r.final_weights, data) <= 0.05);
    }
    SUBCASE("deterministic with monotone checkpoints") {
        const auto r1 = train(a, w0, data, cfg, {});
        const auto r2 = train(a, w0, data, cfg, {});
        REQUIRE(r1.checkpoints.size() == 15);
        for (std::size_t i = 0; i < r1.checkpoints.size(); ++i) {
            CHECK(r1.checkpoints[i].weights == r2.checkpoints[i].weights);
            if (i) CHECK(r1.checkpoints[i].seen_samples > r1.checkpoints[i - 1].seen_samples);
        }
        CHECK(r1.checkpoints.front().weights == w0);
        CHECK(r1.checkpoints.back().weights == r1.final_weights);
        CHECK(r1.checkpoints.back().seen_fraction == doctest::Approx(5.0));
    }
    SUBCASE("shuffle stream is independent of the epoch count") {
        TrainConfig one = cfg;
        one.epochs = 1;
        const auto short_run = train(a, w0, data, one, {10, false});
        const auto long_run = train(a, w0, data, cfg, {});
        CHECK(short_run.final_weights == long_run.checkpoints[10].weights);
    }
    SUBCASE("divergence is reported") {
        TrainConfig wild = cfg;
        wild.learning_rate = 1e300;
        CHECK_THROWS_AS(train(a, w0, data, wild, {}), std::runtime_error);
    }
}

TEST_CASE("checkpoint file round trip") {
    testing::TempDir dir("ckpt");
    const MlpArchitecture a{{3, 4, 1}, Activation::tanh};
    WeightVector w = init_weights(a, 5);
    w[0] = -0.0;
    w[1] = 1e-310;  // subnormal survives
    const auto path = dir.path / "x.ckpt";
    save_checkpoint(path, a, 0.1 + 0.2, w);
    const auto back = load_checkpoint(path);
    CHECK(back.arch.layer_widths == a.layer_widths);
    CHECK(back.arch.activation == a.activation);
    CHECK(back.seen_fraction == 0.1 + 0.2);
    CHECK(back.weights == w);
    CHECK(std::signbit(back.weights[0]));

    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("pbda-checkpoint v1 widths=3,4,1 activation=tanh", 0) == 0);

    std::ofstream(dir.path / "bad.ckpt") << "not a checkpoint\n";
    CHECK_THROWS(load_checkpoint(dir.path / "bad.ckpt"));
    CHECK_THROWS(load_checkpoint(dir.path / "missing.ckpt"));
    // truncated payload
    {
        std::ifstream src(path, std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(src)), std::istreambuf_iterator<char>());
        std::ofstream(dir.path / "short.ckpt", std::ios::binary) << all.substr(0, all.size() - 3);
    }
    CHECK_THROWS(load_checkpoint(dir.path / "short.ckpt"));
}
