#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "pbda/divergences.hpp"
#include "pbda/tasks.hpp"

using namespace pbda;

namespace {

SyntheticSpec two_bumps_1d(double sep, double s0, double t0) {
    SyntheticSpec s;
    s.dim = 1;
    s.components = {{{-sep}, s0, t0}, {{sep}, 1 - s0, 1 - t0}};
    s.component_std = 1.0;
    s.label_normal = {1.0};
    s.n_source = s.n_target = 500;
    s.seed = 3;
    return s;
}

// Ten classes, `per_class` rows per class, two features that encode the row.
LabeledSample pool(std::size_t per_class, double tag) {
    LabeledSample p;
    p.features = Matrix(0, 2);
    for (std::size_t c = 0; c < 10; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            const double row[] = {tag, static_cast<double>(c * 1000 + i)};
            p.features.append_row(row);
            p.labels.push_back(static_cast<Label>(c));
        }
    return p;
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("synthetic density ratio and beta") {
    const SyntheticSpec s = two_bumps_1d(6.0, 0.9, 0.1);
    CHECK(s.beta_infinity() == doctest::Approx(9.0));
    double best = 0;
    for (double x = -30; x <= 30; x += 0.01) {
        const double xv[] = {x};
        best = std::max(best, s.density_ratio(xv));
    }
    CHECK(best <= 9.0 + 1e-9);
    CHECK(best == doctest::Approx(9.0).epsilon(1e-3));

    // ratio against a direct evaluation of both mixtures
    auto phi = [](double z) { return std::exp(-0.5 * z * z); };
    const double x[] = {0.7};
    const double want = (0.1 * phi(0.7 + 6) + 0.9 * phi(0.7 - 6)) / (0.9 * phi(0.7 + 6) + 0.1 * phi(0.7 - 6));
    CHECK(s.density_ratio(x) == doctest::Approx(want).epsilon(1e-12));

    SyntheticSpec bad = s;
    bad.components[1].source_weight = 0.0;
    bad.components[0].source_weight = 1.0;
    CHECK_THROWS_AS(bad.validate(), OverlapViolation);
}

TEST_CASE("build_synthetic_task") {
    SUBCASE("identical mixtures give unit weights") {
        const auto t = build_synthetic_task(two_bumps_1d(2.0, 0.4, 0.4));
        CHECK(t.beta_inf == doctest::Approx(1.0));
        for (double w : *t.source.weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("shapes, labels and determinism") {
        SyntheticSpec spec = SyntheticSpec::default_2d();
        spec.n_source = 300;
        spec.n_target = 200;
        spec.n_oracle = 150;
        spec.label_sharpness = 0.0;
        spec.seed = 11;
        const auto t = build_synthetic_task(spec);
        CHECK(t.source.size() == 300);
        CHECK(t.target_x.size() == 200);
        CHECK(t.target_labeled_oracle.size() == 150);
        CHECK(t.beta_inf == doctest::Approx(17.0 / 3.0));
        // one labelling rule in both domains
        for (std::size_t i = 0; i < t.source.size(); ++i)
            CHECK(t.source.labels[i] == spec.label_rule(t.source.features.row(i)));
        for (std::size_t i = 0; i < t.target_labeled_oracle.size(); ++i)
            CHECK(t.target_labeled_oracle.labels[i] == spec.label_rule(t.target_labeled_oracle.features.row(i)));
        for (std::size_t i = 0; i < t.source.size(); ++i)
            CHECK((*t.source.weights)[i] == spec.density_ratio(t.source.features.row(i)));
        const auto again = build_synthetic_task(spec);
        CHECK(again.source == t.source);
        CHECK(again.target_x.features == t.target_x.features);
    }
    SUBCASE("weights self-normalize on the source") {
        SyntheticSpec spec = SyntheticSpec::default_2d();
        spec.n_source = 20000;
        spec.seed = 5;
        const auto t = build_synthetic_task(spec);
        double s = 0, s2 = 0;
        for (double w : *t.source.weights) {
            s += w;
            s2 += w * w;
        }
        const double n = static_cast<double>(t.source.size());
        const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - 1.0) <= 4 * se);
    }
}

TEST_CASE("positive_probability") {
    SyntheticSpec s = SyntheticSpec::default_2d();
    const double on[] = {1.0, -1.0}, pos[] = {3.0, 0.0};
    CHECK(s.positive_probability(on) == doctest::Approx(0.5));
    CHECK(s.positive_probability(pos) == doctest::Approx(1.0 / (1.0 + std::exp(-6.0))));
    s.label_sharpness = 0;
    s.label_noise = 0.1;
    CHECK(s.positive_probability(pos) == doctest::Approx(0.9));
    CHECK(s.positive_probability(on) == doctest::Approx(0.1));
}

TEST_CASE("build_mixture_task") {
    const auto p0 = pool(24, 0.0), p1 = pool(24, 1.0);
    SUBCASE("twelfths schedule") {
        const auto spec = mixture_spec_for_pools(p0, p1, MixtureTaskSpec::twelfths_schedule(10, 1).source_share, 5);
        const auto t = build_mixture_task(p0, p1, spec, 7);
        CHECK(t.beta_inf == doctest::Approx(11.0));
        CHECK(t.source.size() + t.target_x.size() == 480);
        // every pool row lands on exactly one side
        std::set<std::pair<double, double>> seen;
        auto add = [&](const Matrix& m) {
            for (std::size_t i = 0; i < m.rows(); ++i) CHECK(seen.insert({m(i, 0), m(i, 1)}).second);
        };
        add(t.source.features);
        add(t.target_x.features);
        CHECK(seen.size() == 480);
        // binarized labels follow the class
        for (std::size_t i = 0; i < t.source.size(); ++i) {
            const auto cls = static_cast<std::size_t>(t.source.features(i, 1)) / 1000;
            CHECK(t.source.labels[i] == (cls >= 5 ? 1 : 0));
        }
        // cell counts match the spec
        for (std::size_t c = 0; c < 10; ++c) {
            std::size_t from1 = 0;
            for (std::size_t i = 0; i < t.source.size(); ++i)
                from1 += (*t.source.origin)[i] == 1 && static_cast<std::size_t>(t.source.features(i, 1)) / 1000 == c;
            CHECK(from1 == mixture_source_count(spec, c, 1));
        }
    }
    SUBCASE("half shares") {
        const auto spec = mixture_spec_for_pools(p0, p1, std::vector<double>(10, 0.5), 5);
        const auto t = build_mixture_task(p0, p1, spec, 7);
        CHECK(t.source.size() == t.target_x.size());
        for (double w : *t.source.weights) CHECK(w == doctest::Approx(1.0));
    }
    SUBCASE("empty cells are refused") {
        CHECK_THROWS_AS(mixture_spec_for_pools(p0, p1, std::vector<double>(10, 1.0), 5), OverlapViolation);
    }
}

TEST_CASE("build_one_sided_task") {
    LabeledSample only = testing::random_labeled(100, 2, 1), shared = testing::random_labeled(200, 2, 2);
    SUBCASE("w is 1 when source and target sizes match") {
        const auto t = build_one_sided_task(LabeledSample{Matrix(0, 2), {}, {}, {}}, shared, 0.5, 3);
        CHECK(t.source.size() == 100);
        CHECK(t.target_x.size() == 100);
        for (double w : *t.source.weights) CHECK(w == doctest::Approx(1.0));
    }
    SUBCASE("source-only rows carry no target mass") {
        const auto t = build_one_sided_task(only, shared, 0.2, 3);
        CHECK(t.source.size() == 140);
        CHECK(t.target_x.size() == 160);
        const double w = one_sided_weight(0.2, 140, 160);
        CHECK(t.beta_inf == doctest::Approx(w));
        std::size_t zero = 0;
        for (double v : *t.source.weights) zero += v == 0.0;
        CHECK(zero == 100);
    }
    SUBCASE("degenerate fractions are refused") {
        CHECK_THROWS_AS(build_one_sided_task(only, shared, 0.0, 3), OverlapViolation);
        CHECK_THROWS_AS(build_one_sided_task(only, shared, 1.0, 3), OverlapViolation);
    }
}

TEST_CASE("dataset csv") {
    testing::TempDir dir("csv");
    const auto p = dir.path / "d.csv";
    write_text(p, "f0,f1,label\n0.5,1,0\n-2,3e-1,1\n4,4,1\n");
    const auto s = load_dataset(p);
    CHECK(s.size() == 3);
    CHECK(s.dim() == 2);
    CHECK(s.features(1, 1) == 0.3);
    CHECK(!s.origin);

    write_text(p, "f0,label,origin\n1,7,0\n2,3,1\n");
    CHECK(load_dataset(p, 10).labels[0] == 7);
    write_text(p, "f0,label,origin\n1,7,0\n2,11,1\n");
    try {
        load_dataset(p, 10);
        FAIL("expected a rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    write_text(p, "f0,f1,label\n1,2,0\n1,x,0\n");
    CHECK_THROWS_WITH(load_dataset(p), doctest::Contains(":3:"));
    write_text(p, "f0,f1,label\n1,2\n");
    CHECK_THROWS_WITH(load_dataset(p), doctest::Contains(":2:"));
    write_text(p, "x,label\n1,0\n");
    CHECK_THROWS_WITH(load_dataset(p), doctest::Contains(":1:"));
    CHECK_THROWS(load_dataset(dir.path / "missing.csv"));

    LabeledSample full = testing::random_labeled(50, 3, 4);
    full.origin = std::vector<int>(50, 1);
    full.weights = std::vector<double>(50, 0.1);
    (*full.weights)[3] = 1.0 / 3.0;
    save_dataset(dir.path / "rt.csv", full);
    CHECK(load_dataset(dir.path / "rt.csv") == full);
}

TEST_CASE("task files round trip") {
    testing::TempDir dir("task");
    SyntheticSpec spec = SyntheticSpec::default_2d();
    spec.n_source = 120;
    spec.n_target = 80;
    spec.n_oracle = 60;
    const auto t = build_synthetic_task(spec);
    const auto manifest = write_task(dir.path / "nested", t);
    CHECK(std::filesystem::exists(dir.path / "nested" / "source.csv"));
    const auto back = load_task(manifest);
    CHECK(back.kind == TaskKind::synthetic);
    CHECK(back.source == t.source);
    CHECK(back.target_x.features == t.target_x.features);
    CHECK(back.target_labeled_oracle == t.target_labeled_oracle);
    CHECK(back.beta_inf == t.beta_inf);
    REQUIRE(back.synthetic);
    CHECK(to_json(*back.synthetic) == to_json(spec));

    const auto mt = build_mixture_task(pool(12, 0), pool(12, 1),
                                       mixture_spec_for_pools(pool(12, 0), pool(12, 1),
                                                              MixtureTaskSpec::twelfths_schedule(10, 1).source_share, 5),
                                       2);
    const auto back_m = load_task(write_task(dir.path / "mix", mt));
    CHECK(back_m.kind == TaskKind::mixture);
    CHECK(back_m.source == mt.source);
    CHECK(std::filesystem::exists(dir.path / "mix" / "weights.csv"));
    CHECK(to_json(*back_m.mixture) == to_json(*mt.mixture));
}

TEST_CASE("synthetic spec json") {
    const auto s = SyntheticSpec::default_2d();
    CHECK(to_json(synthetic_spec_from_json(to_json(s))) == to_json(s));
    auto j = to_json(s);
    j["label_noise"] = 0.7;
    CHECK_THROWS(synthetic_spec_from_json(j));
}
