#include "pbda/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pbda {

std::string to_string(BoundName b) {
    switch (b) {
        case BoundName::mcallester: return "mcallester";
        case BoundName::mult: return "mult";
        case BoundName::add: return "add";
        case BoundName::iw: return "iw";
        case BoundName::mmd: return "mmd";
    }
    return "?";
}

BoundName bound_from_string(const std::string& s) {
    for (BoundName b : all_bounds()) {
        if (to_string(b) == s) return b;
    }
    throw std::invalid_argument("unknown bound '" + s + "' (expected mcallester, mult, add, iw or mmd)");
}

const std::vector<BoundName>& all_bounds() {
    static const std::vector<BoundName> names = {BoundName::mcallester, BoundName::mult, BoundName::add,
                                                 BoundName::iw, BoundName::mmd};
    return names;
}

nlohmann::json to_json(const BoundResult& r) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : r.terms) terms.push_back({{"label", t.label}, {"value", t.value}});
    return {{"name", to_string(r.name)},  {"value", r.value}, {"params", params}, {"delta_effective", r.delta_effective},
            {"terms", terms},             {"oracle_used", r.oracle_used}};
}

BoundResult bound_result_from_json(const nlohmann::json& j) {
    BoundResult r;
    r.name = bound_from_string(j.at("name").get<std::string>());
    r.value = j.at("value").get<double>();
    for (const auto& [k, v] : j.at("params").items()) r.params.emplace_back(k, v.get<double>());
    r.delta_effective = j.at("delta_effective").get<double>();
    for (const auto& t : j.at("terms")) r.terms.push_back({t.at("label").get<std::string>(), t.at("value").get<double>()});
    r.oracle_used = j.at("oracle_used").get<bool>();
    return r;
}

double convexity_constant(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("convexity_constant: argument must be > 0");
    if (a < 1e-6) return 1.0 + a / 2.0 + a * a / 12.0;
    return a / -std::expm1(-a);
}

namespace {

void check_common(const BoundInputs& in) {
    if (in.m_source == 0) throw std::invalid_argument("bound: m_source must be >= 1");
    if (!(in.delta > 0.0 && in.delta < 1.0)) throw std::invalid_argument("bound: delta must lie in (0,1)");
    if (!(in.kl >= 0.0) || !std::isfinite(in.kl)) throw std::invalid_argument("bound: KL must be finite and >= 0");
}

void check_unit_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("bound: gamma must lie in (0,1)");
}

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("bound: ") + name + " must be > 0");
}

double paired_m(const BoundInputs& in) {
    if (in.n_target == 0) throw std::invalid_argument("bound: n_target must be >= 1");
    return static_cast<double>(std::min(in.m_source, in.n_target));
}

BoundResult finish(BoundName name, const BoundInputs& in, std::vector<std::pair<std::string, double>> params,
                   std::vector<BoundTerm> terms, bool oracle) {
    BoundResult r;
    r.name = name;
    r.params = std::move(params);
    r.delta_effective = in.delta;
    r.oracle_used = oracle;
    double v = 0.0;
    for (const auto& t : terms) v += t.value;
    r.value = v;
    r.terms = std::move(terms);
    return r;
}

}  // namespace

BoundResult mcallester_bound(const BoundInputs& in, double gamma) {
    check_common(in);
    check_unit_gamma(gamma);
    const double m = static_cast<double>(in.m_source);
    return finish(BoundName::mcallester, in, {{"gamma", gamma}},
                  {{"risk", in.gibbs_risk / gamma},
                   {"kl", (in.kl + std::log(1.0 / in.delta)) / (2.0 * gamma * (1.0 - gamma) * m)}},
                  false);
}

BoundResult mult_bound(const BoundInputs& in, double a, double b) {
    check_common(in);
    check_positive(a, "a");
    check_positive(b, "b");
    if (!in.beta_inf) throw std::invalid_argument("mult bound: beta_inf is required");
    if (in.n_target == 0) throw std::invalid_argument("mult bound: n_target must be >= 1");
    const double beta = *in.beta_inf;
    const double ap = convexity_constant(a), bp = convexity_constant(b);
    const double m = static_cast<double>(in.m_source), n = static_cast<double>(in.n_target);
    // eta_{T\S} = 0 under covariate shift with overlap.
    return finish(BoundName::mult, in, {{"a", a}, {"b", b}},
                  {{"risk", bp * beta * in.joint_error_source},
                   {"kl", (ap / (n * a) + bp * beta / (m * b)) * (2.0 * in.kl + std::log(2.0 / in.delta))},
                   {"domain", ap * 0.5 * in.disagreement_target}},
                  false);
}

BoundResult add_bound(const BoundInputs& in, double omega, double gamma) {
    check_common(in);
    check_positive(omega, "omega");
    check_positive(gamma, "gamma");
    if (!in.oracle) {
        throw std::invalid_argument("add bound: lambda_rho is only available in oracle mode (needs target labels)");
    }
    const double m = paired_m(in);
    const double wp = convexity_constant(omega), gp = convexity_constant(2.0 * gamma);
    return finish(BoundName::add, in, {{"omega", omega}, {"gamma", gamma}},
                  {{"risk", wp * in.gibbs_risk},
                   {"kl", (wp / omega + gp / gamma) * (in.kl + std::log(3.0 / in.delta)) / m},
                   {"domain", gp * 0.5 * in.domain_disagreement},
                   {"oracle", in.oracle->lambda_rho},
                   {"constant", 0.5 * (gp - 1.0)}},
                  true);
}

BoundResult iw_bound(const BoundInputs& in, double gamma) {
    check_common(in);
    check_unit_gamma(gamma);
    if (!in.gibbs_weighted_risk) throw std::invalid_argument("iw bound: weighted Gibbs risk is required");
    if (!in.beta_inf) throw std::invalid_argument("iw bound: beta_inf is required");
    const double m = static_cast<double>(in.m_source);
    return finish(BoundName::iw, in, {{"gamma", gamma}},
                  {{"risk", *in.gibbs_weighted_risk / gamma},
                   {"kl", *in.beta_inf * (in.kl + std::log(1.0 / in.delta)) / (2.0 * gamma * (1.0 - gamma) * m)}},
                  false);
}

BoundResult mmd_bound(const BoundInputs& in, double gamma) {
    check_common(in);
    check_unit_gamma(gamma);
    if (!in.mmd_value) throw std::invalid_argument("mmd bound: MMD estimate is required");
    check_positive(in.kernel_bound, "kernel_bound");
    const double m = paired_m(in);
    return finish(BoundName::mmd, in, {{"gamma", gamma}},
                  {{"risk", in.gibbs_risk / gamma},
                   {"kl", (in.kl + std::log(2.0 / in.delta)) / (2.0 * gamma * (1.0 - gamma) * m)},
                   {"domain", *in.mmd_value},
                   {"constant", 2.0 * std::sqrt(in.kernel_bound / m) * (2.0 + std::sqrt(std::log(4.0 / in.delta)))}},
                  false);
}

std::size_t ParamGrid::size() const {
    std::size_t k = 1;
    for (const auto& [name, values] : axes) k *= values.size();
    return axes.empty() ? 0 : k;
}

void ParamGrid::validate() const {
    if (axes.empty()) throw std::invalid_argument("ParamGrid: no parameters");
    for (const auto& [name, values] : axes) {
        if (values.empty()) throw std::invalid_argument("ParamGrid: parameter '" + name + "' has no candidates");
        for (std::size_t i = 1; i < values.size(); ++i) {
            if (!(values[i - 1] < values[i])) {
                throw std::invalid_argument("ParamGrid: candidates for '" + name + "' must be strictly ascending");
            }
        }
    }
}

std::vector<double> coefficient_grid_values() {
    std::vector<double> v;
    for (int e = -3; e <= 4; ++e) {
        const double p = std::pow(10.0, e);
        v.push_back(p);
        v.push_back(5.0 * p);
    }
    v.push_back(1e5);
    return v;
}

std::vector<double> gamma_grid_values() {
    return {1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 9.9e-1};
}

ParamGrid default_grid(BoundName b) {
    switch (b) {
        case BoundName::mult: return {{{"a", coefficient_grid_values()}, {"b", coefficient_grid_values()}}};
        case BoundName::add: return {{{"omega", coefficient_grid_values()}, {"gamma", coefficient_grid_values()}}};
        case BoundName::mcallester:
        case BoundName::iw:
        case BoundName::mmd: return {{{"gamma", gamma_grid_values()}}};
    }
    throw std::logic_error("default_grid: unreachable");
}

BoundResult evaluate_bound(BoundName b, const BoundInputs& in, const std::vector<double>& p) {
    const std::size_t want = (b == BoundName::mult || b == BoundName::add) ? 2 : 1;
    if (p.size() != want) throw std::invalid_argument("evaluate_bound: wrong number of free parameters for " + to_string(b));
    switch (b) {
        case BoundName::mcallester: return mcallester_bound(in, p[0]);
        case BoundName::mult: return mult_bound(in, p[0], p[1]);
        case BoundName::add: return add_bound(in, p[0], p[1]);
        case BoundName::iw: return iw_bound(in, p[0]);
        case BoundName::mmd: return mmd_bound(in, p[0]);
    }
    throw std::logic_error("evaluate_bound: unreachable");
}

BoundResult grid_search(BoundName b, const BoundInputs& in, const ParamGrid& grid) {
    grid.validate();
    const std::size_t k = grid.size();
    BoundInputs corrected = in;
    corrected.delta = in.delta / static_cast<double>(k);

    // Flat index -> parameter tuple, last axis fastest: flat order is lexicographic.
    auto tuple_at = [&](std::size_t flat) {
        std::vector<double> p(grid.axes.size());
        for (std::size_t a = grid.axes.size(); a-- > 0;) {
            const auto& values = grid.axes[a].second;
            p[a] = values[flat % values.size()];
            flat /= values.size();
        }
        return p;
    };

    // Axes are ascending, so the first and last tuples cover every parameter's
    // range; checking them here keeps exceptions out of the parallel region.
    evaluate_bound(b, corrected, tuple_at(0));
    evaluate_bound(b, corrected, tuple_at(k - 1));

    std::vector<double> values(k);
    const auto n = static_cast<long long>(k);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        values[i] = evaluate_bound(b, corrected, tuple_at(static_cast<std::size_t>(i))).value;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
        if (values[i] < values[best]) best = i;
    }
    BoundResult r = evaluate_bound(b, corrected, tuple_at(best));
    r.delta_effective = corrected.delta;
    return r;
}

}  // namespace pbda
