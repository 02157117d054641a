#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pbda/bounds.hpp"

using namespace pbda;

namespace {

BoundInputs base() {
    BoundInputs in;
    in.m_source = 10000;
    in.n_target = 10000;
    in.kl = 10.0;
    in.delta = 0.05;
    in.gibbs_risk = 0.1;
    in.gibbs_weighted_risk = 0.1;
    in.disagreement_source = 0.2;
    in.disagreement_target = 0.25;
    in.joint_error_source = 0.05;
    in.domain_disagreement = 0.05;
    in.beta_inf = 1.0;
    in.mmd_value = 0.0;
    in.kernel_bound = 1.0;
    return in;
}

double term_sum(const BoundResult& r) {
    double s = 0;
    for (const auto& t : r.terms) s += t.value;
    return s;
}

}  // namespace

TEST_CASE("convexity_constant") {
    CHECK(convexity_constant(1.0) == doctest::Approx(1.581977).epsilon(1e-6));
    CHECK(convexity_constant(5.0) == doctest::Approx(5.033918).epsilon(1e-6));
    CHECK(convexity_constant(1e-12) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(convexity_constant(1e-7) == doctest::Approx(1e-7 / -std::expm1(-1e-7)).epsilon(1e-14));
    double prev = 1.0;
    for (double a = 1e-4; a < 100; a *= 1.7) {
        const double c = convexity_constant(a);
        CHECK(c > prev);
        prev = c;
    }
    CHECK_THROWS(convexity_constant(0.0));
}

TEST_CASE("mcallester") {
    BoundInputs in = base();
    const auto r = mcallester_bound(in, 0.5);
    CHECK(r.value == doctest::Approx(0.2 + (10.0 + std::log(20.0)) / 5000.0).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(0.202599).epsilon(1e-6));
    CHECK(r.delta_effective == 0.05);
    CHECK(!r.oracle_used);
    CHECK(r.value == term_sum(r));

    in.gibbs_risk = 0;
    in.kl = 0;
    CHECK(mcallester_bound(in, 0.5).value <= mcallester_bound(in, 0.25).value);
    in.m_source = 100000000;
    CHECK(mcallester_bound(in, 0.5).value < 1e-7);
    CHECK_THROWS(mcallester_bound(in, 1.0));
    CHECK_THROWS(mcallester_bound(in, 0.0));
}

TEST_CASE("mult") {
    BoundInputs in = base();
    in.m_source = in.n_target = 1000;
    in.kl = 0;
    in.disagreement_target = 0;
    in.joint_error_source = 0;
    const auto r = mult_bound(in, 1.0, 1.0);
    CHECK(r.value == doctest::Approx(2 * convexity_constant(1.0) / 1000 * std::log(40.0)).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(0.011672).epsilon(1e-4));

    in.joint_error_source = 0.1;
    const auto r1 = mult_bound(in, 1.0, 2.0);
    in.beta_inf = 2.0;
    const auto r2 = mult_bound(in, 1.0, 2.0);
    CHECK(r2.terms[0].value == doctest::Approx(2 * r1.terms[0].value).epsilon(1e-15));
    in.beta_inf.reset();
    CHECK_THROWS(mult_bound(in, 1.0, 1.0));
}

TEST_CASE("add") {
    BoundInputs in = base();
    in.m_source = in.n_target = 1000;
    in.kl = 0;
    in.gibbs_risk = 0;
    in.domain_disagreement = 0;
    CHECK_THROWS_AS(add_bound(in, 1.0, 1.0), std::invalid_argument);
    in.oracle = BoundInputs::Oracle{0.0};
    const double c2 = convexity_constant(2.0);
    const auto r = add_bound(in, 1.0, 1.0);
    CHECK(r.value == doctest::Approx((convexity_constant(1.0) + c2) * std::log(60.0) / 1000 + 0.5 * (c2 - 1)).epsilon(1e-14));
    CHECK(r.oracle_used);
    CHECK(r.value == term_sum(r));

    // small gamma: the gamma' - 1 term vanishes
    const auto tiny = add_bound(in, 1.0, 1e-9);
    CHECK(tiny.terms.back().value < 1e-8);

    // m is the smaller of the two sample sizes
    in.n_target = 500;
    BoundInputs same = in;
    same.m_source = 500;
    same.n_target = 1000;
    CHECK(add_bound(in, 1.0, 1.0).value == add_bound(same, 1.0, 1.0).value);
}

TEST_CASE("iw") {
    BoundInputs in = base();
    for (double g : {0.01, 0.3, 0.5, 0.99}) CHECK(iw_bound(in, g).value == mcallester_bound(in, g).value);
    in.beta_inf = 11.0;
    const auto r = iw_bound(in, 0.5);
    CHECK(r.value == doctest::Approx(0.2 + 11 * (10 + std::log(20.0)) / 5000).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(0.228590).epsilon(1e-6));
    in.gibbs_weighted_risk.reset();
    CHECK_THROWS(iw_bound(in, 0.5));
}

TEST_CASE("mmd") {
    BoundInputs in = base();
    in.gibbs_risk = 0;
    in.kl = 0;
    const auto r = mmd_bound(in, 0.5);
    const double want = std::log(40.0) / 5000 + 0.02 * (2 + std::sqrt(std::log(80.0)));
    CHECK(r.value == doctest::Approx(want).epsilon(1e-14));

    // the divergence enters additively
    BoundInputs shifted = in;
    shifted.mmd_value = 0.3;
    CHECK(mmd_bound(shifted, 0.5).value - r.value == doctest::Approx(0.3).epsilon(1e-12));

    // with K -> 0 only the McAllester part with ln(2/delta) remains
    BoundInputs k0 = base();
    k0.kernel_bound = 1e-300;
    BoundInputs mc = base();
    mc.delta = 0.025;
    CHECK(mmd_bound(k0, 0.3).value == doctest::Approx(mcallester_bound(mc, 0.3).value).epsilon(1e-12));
    in.mmd_value.reset();
    CHECK_THROWS(mmd_bound(in, 0.5));
}

TEST_CASE("all bounds loosen as delta shrinks and sum their terms") {
    BoundInputs in = base();
    in.beta_inf = 3.0;
    in.mmd_value = 0.1;
    in.oracle = BoundInputs::Oracle{0.02};
    for (BoundName b : all_bounds()) {
        CAPTURE(to_string(b));
        const auto grid = default_grid(b);
        std::vector<double> p;
        for (const auto& axis : grid.axes) p.push_back(axis.second[axis.second.size() / 2]);
        double prev = 0;
        for (double d : {0.5, 0.1, 0.05, 0.01, 1e-4}) {
            in.delta = d;
            const auto r = evaluate_bound(b, in, p);
            CHECK(r.value > prev);
            CHECK(r.value == term_sum(r));
            prev = r.value;
        }
    }
}

TEST_CASE("grid_search") {
    BoundInputs in = base();
    in.beta_inf = 2.0;
    in.mmd_value = 0.05;

    SUBCASE("singleton grid") {
        const auto r = grid_search(BoundName::iw, in, ParamGrid{{{"gamma", {0.4}}}});
        CHECK(r.delta_effective == in.delta);
        CHECK(r.value == iw_bound(in, 0.4).value);
    }
    SUBCASE("three candidates use delta / 3") {
        const auto r = grid_search(BoundName::mcallester, in, ParamGrid{{{"gamma", {0.1, 0.5, 0.9}}}});
        CHECK(r.delta_effective == doctest::Approx(0.05 / 3));
        BoundInputs third = in;
        third.delta = in.delta / 3;
        const double best = std::min({mcallester_bound(third, 0.1).value, mcallester_bound(third, 0.5).value,
                                      mcallester_bound(third, 0.9).value});
        CHECK(r.value == best);
    }
    SUBCASE("default grid sizes") {
        CHECK(coefficient_grid_values().size() == 17);
        CHECK(coefficient_grid_values().front() == 1e-3);
        CHECK(coefficient_grid_values().back() == 1e5);
        CHECK(gamma_grid_values() == std::vector<double>{1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 9.9e-1});
        CHECK(default_grid(BoundName::mult).size() == 289);
        CHECK(default_grid(BoundName::add).size() == 289);
        CHECK(default_grid(BoundName::iw).size() == 7);
        CHECK(default_grid(BoundName::mmd).size() == 7);
    }
    SUBCASE("ties go to the smallest tuple") {
        BoundInputs flat = in;
        flat.gibbs_risk = 0;
        flat.kl = 0;
        // 0.25 and 0.75 give the same gamma(1 - gamma)
        const auto r = grid_search(BoundName::mcallester, flat, ParamGrid{{{"gamma", {0.25, 0.75}}}});
        CHECK(r.params.front().second == 0.25);
    }
    SUBCASE("bad grids") {
        CHECK_THROWS(grid_search(BoundName::iw, in, ParamGrid{{{"gamma", {}}}}));
        CHECK_THROWS(grid_search(BoundName::iw, in, ParamGrid{{{"gamma", {0.5, 0.1}}}}));
        CHECK_THROWS(grid_search(BoundName::mult, in, ParamGrid{{{"a", {1.0}}}}));
    }
    SUBCASE("add refuses without the oracle") {
        CHECK_THROWS(grid_search(BoundName::add, in, default_grid(BoundName::add)));
    }
}

TEST_CASE("BoundResult json round trip") {
    BoundInputs in = base();
    in.oracle = BoundInputs::Oracle{0.01};
    for (BoundName b : all_bounds()) {
        const auto r = grid_search(b, in, default_grid(b));
        const auto back = bound_result_from_json(to_json(r));
        CHECK(back.name == r.name);
        CHECK(back.value == r.value);
        CHECK(back.delta_effective == r.delta_effective);
        CHECK(back.oracle_used == r.oracle_used);
        auto p1 = r.params, p2 = back.params;
        std::sort(p1.begin(), p1.end());
        std::sort(p2.begin(), p2.end());
        CHECK(p1 == p2);
        REQUIRE(back.terms.size() == r.terms.size());
        for (std::size_t i = 0; i < r.terms.size(); ++i) {
            CHECK(back.terms[i].label == r.terms[i].label);
            CHECK(back.terms[i].value == r.terms[i].value);
        }
    }
    CHECK(bound_from_string("iw") == BoundName::iw);
    CHECK_THROWS(bound_from_string("pac"));
}
