#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "pbda/divergences.hpp"

using namespace pbda;

TEST_CASE("gaussian_kernel") {
    const double x[] = {1.0, 2.0}, y[] = {1.0, 2.0};
    CHECK(gaussian_kernel(x, y, 0.7) == 1.0);
    const double k = 0.7, z[] = {1.0 + k * std::sqrt(2.0), 2.0};
    CHECK(gaussian_kernel(x, z, k) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    double prev = 1.0;
    for (double d = 0.5; d < 40; d *= 1.5) {
        const double far[] = {1.0 + d, 2.0};
        const double v = gaussian_kernel(x, far, k);
        CHECK(v < prev);
        CHECK(v >= 0.0);
        prev = v;
    }
    CHECK_THROWS(gaussian_kernel(x, y, 0.0));
}

TEST_CASE("mmd_quadratic_biased") {
    const Matrix X = testing::random_matrix(60, 2, 1);
    CHECK(mmd_quadratic_biased(X, X, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

    // one point each at distance kappa*sqrt(2): MMD^2 = 2 - 2 e^{-1}
    const Matrix a(1, 1, {0.0}), b(1, 1, {std::sqrt(2.0)});
    CHECK(mmd_quadratic_biased(a, b, 1.0) == doctest::Approx(std::sqrt(2 - 2 * std::exp(-1.0))).epsilon(1e-12));
    CHECK(std::sqrt(2 - 2 * std::exp(-1.0)) == doctest::Approx(1.124385).epsilon(1e-6));

    const Matrix same1 = testing::random_matrix(500, 2, 2), same2 = testing::random_matrix(500, 2, 3);
    const Matrix far = testing::random_matrix(500, 2, 4, 50.0);
    CHECK(mmd_quadratic_biased(same1, same2, 1.0) < mmd_quadratic_biased(same1, far, 1.0));
}

TEST_CASE("linear statistic") {
    const Matrix X = testing::random_matrix(40, 3, 5);
    std::vector<std::size_t> ident(40);
    std::iota(ident.begin(), ident.end(), 0);
    CHECK(mmd_linear_statistic(X, X, ident, 1.0) == 0.0);

    // one block by hand
    const Matrix x(2, 1, {0.0, 1.0}), y(2, 1, {3.0, 5.0});
    const std::size_t p[] = {0, 1};
    auto k = [](double u, double v) { return std::exp(-(u - v) * (u - v) / 2.0); };
    const double h = k(0, 1) + k(3, 5) - k(0, 5) - k(1, 3);
    CHECK(mmd_linear_statistic(x, y, p, 1.0) == doctest::Approx(h).epsilon(1e-14));

    const Matrix A = testing::random_matrix(301, 2, 6), B = testing::random_matrix(400, 2, 7, 1.0);
    CHECK(mmd_linear_shuffled(A, B, 1.0, 5, 3) == mmd_linear_shuffled(A, B, 1.0, 5, 3));
    CHECK(mmd_linear_shuffled(A, B, 1.0, 5, 3) == mmd_linear_detail(A, B, 1.0, 5, 3).value);
    CHECK_THROWS(mmd_linear_shuffled(Matrix(1, 2), B, 1.0, 5, 3));
}

TEST_CASE("mmd_estimate") {
    const Matrix X = testing::random_matrix(200, 2, 8);
    MmdConfig cfg{{0.5, 1.0, 2.0}, 5, 1};
    CHECK(mmd_estimate(X, X, cfg) == 0.0);

    const Matrix Y = testing::random_matrix(200, 2, 9, 1.5);
    MmdConfig single{{1.0}, 5, 1};
    const double one = mmd_linear_shuffled(X, Y, 1.0, 5, 1);
    CHECK(mmd_estimate(X, Y, single) == doctest::Approx(std::sqrt(std::max(0.0, one))).epsilon(1e-14));

    // adding bandwidths can only raise the maximum
    MmdConfig more{{0.25, 1.0, 4.0}, 5, 1};
    CHECK(mmd_estimate(X, Y, more) >= mmd_estimate(X, Y, single));

    // blobs 10 kappa apart: both estimators sit near sqrt(2)
    const Matrix P = testing::random_matrix(500, 2, 10), Q = testing::random_matrix(500, 2, 11, 10.0);
    const MmdConfig unit{{1.0}, 10, 2};
    const double quad = mmd_quadratic_biased(P, Q, 1.0);
    CHECK(std::abs(mmd_estimate(P, Q, unit) - quad) <= 0.1 * quad);

    CHECK_THROWS(MmdConfig{{}, 5, 1}.validate());
    CHECK_THROWS(MmdConfig{{2.0, 1.0}, 5, 1}.validate());
    CHECK_THROWS(MmdConfig{{1.0}, 0, 1}.validate());
}

TEST_CASE("median heuristic") {
    const Matrix X(2, 1, {0.0, 1.0}), Y(2, 1, {3.0, 4.0});
    // pooled distances 1,1,2,3,3,4: the upper median of an even count is 3
    const auto bw = median_heuristic_bandwidths(X, Y, 0);
    REQUIRE(bw.size() == 5);
    CHECK(bw[2] == doctest::Approx(3.0));
    CHECK(bw[0] == doctest::Approx(0.75));
    CHECK(std::is_sorted(bw.begin(), bw.end()));
}

TEST_CASE("mixture weights") {
    SUBCASE("twelfths schedule") {
        const auto spec = MixtureTaskSpec::twelfths_schedule(10, 1200);
        const auto t = mixture_weights(spec);
        CHECK(t.at(0, 0) == doctest::Approx(1.0 / 11.0));
        CHECK(t.at(0, 1) == doctest::Approx(11.0));
        CHECK(t.max_weight() == doctest::Approx(11.0));
        CHECK(beta_infinity(spec) == doctest::Approx(11.0));
        // source-averaged weight is exactly 1
        double mass = 0;
        for (const auto& c : t.cells) mass += c.weight * static_cast<double>(c.source_count);
        CHECK(mass / static_cast<double>(t.source_total) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(t.source_total + t.target_total == 10 * 2 * 1200);
    }
    SUBCASE("no shift") {
        MixtureTaskSpec s = MixtureTaskSpec::twelfths_schedule(4, 100);
        s.source_share.assign(4, 0.5);
        for (const auto& c : mixture_weights(s).cells) CHECK(c.weight == doctest::Approx(1.0));
        CHECK(beta_infinity(s) == doctest::Approx(1.0));
    }
    SUBCASE("overlap violations") {
        MixtureTaskSpec s = MixtureTaskSpec::twelfths_schedule(4, 100);
        s.source_share[2] = 0.0;
        CHECK_THROWS_AS(mixture_weights(s), OverlapViolation);
        s.source_share[2] = 1.0;
        CHECK_THROWS_AS(s.validate(), OverlapViolation);
        s.source_share[2] = 0.001;  // rounds a cell to zero rows
        CHECK_THROWS_AS(s.validate(), OverlapViolation);
    }
    SUBCASE("weights csv") {
        std::ostringstream out;
        write_weight_table_csv(out, mixture_weights(MixtureTaskSpec::twelfths_schedule(2, 12)));
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);
        CHECK(line == "class,origin,source_count,target_count,weight");
        int rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 4);
    }
}

TEST_CASE("one-sided weight") {
    CHECK(one_sided_weight(0.2, 246072, 89696) == doctest::Approx(4.0 * 246072 / 89696).epsilon(1e-12));
    CHECK(std::abs(one_sided_weight(0.2, 246072, 89696) - 10.974) < 1e-3);
    CHECK(one_sided_weight(0.5, 1000, 1000) == 1.0);
    CHECK_THROWS(one_sided_weight(0.0, 10, 10));
    CHECK_THROWS(one_sided_weight(1.0, 10, 10));
}
