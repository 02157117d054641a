#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pbda {

enum class BoundName { mcallester, mult, add, iw, mmd };

std::string to_string(BoundName b);
BoundName bound_from_string(const std::string& s);
const std::vector<BoundName>& all_bounds();

/// Estimated quantities a bound consumes. Oracle-only quantities live in
/// `oracle` and are never read by the estimable bounds.
struct BoundInputs {
    std::size_t m_source = 0;  // bound-evaluation sample size, |S \ S_alpha|
    std::size_t n_target = 0;  // unlabeled target sample size
    double kl = 0.0;
    double delta = 0.05;

    double gibbs_risk = 0.0;
    std::optional<double> gibbs_weighted_risk;
    double disagreement_source = 0.0;
    double disagreement_target = 0.0;
    double joint_error_source = 0.0;
    double domain_disagreement = 0.0;

    std::optional<double> beta_inf;
    std::optional<double> mmd_value;
    double kernel_bound = 1.0;

    struct Oracle {
        double lambda_rho = 0.0;
    };
    std::optional<Oracle> oracle;
};

struct BoundTerm {
    std::string label;
    double value = 0.0;
};

struct BoundResult {
    BoundName name = BoundName::mcallester;
    double value = 0.0;  // never clipped; values >= 1 are vacuous
    std::vector<std::pair<std::string, double>> params;
    double delta_effective = 0.0;
    std::vector<BoundTerm> terms;
    bool oracle_used = false;

    bool vacuous() const { return value >= 1.0; }
};

nlohmann::json to_json(const BoundResult& r);
BoundResult bound_result_from_json(const nlohmann::json& j);

/// a / (1 - e^{-a}) for a > 0, with a series near 0 (limit 1).
double convexity_constant(double a);

// Direct evaluations at in.delta. Terms come in the order risk, kl, domain,
// oracle, constant (absent ones omitted) and value is their sum.
BoundResult mcallester_bound(const BoundInputs& in, double gamma);
BoundResult mult_bound(const BoundInputs& in, double a, double b);
BoundResult add_bound(const BoundInputs& in, double omega, double gamma);
BoundResult iw_bound(const BoundInputs& in, double gamma);
BoundResult mmd_bound(const BoundInputs& in, double gamma);

/// Named free parameters with their candidate values (each list ascending).
struct ParamGrid {
    std::vector<std::pair<std::string, std::vector<double>>> axes;

    std::size_t size() const;
    void validate() const;
};

/// {1e-3, 5e-3, 1e-2, ..., 5e4, 1e5}: 17 values.
std::vector<double> coefficient_grid_values();
/// {1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 9.9e-1}: 7 values.
std::vector<double> gamma_grid_values();
ParamGrid default_grid(BoundName b);

BoundResult evaluate_bound(BoundName b, const BoundInputs& in, const std::vector<double>& params);

/// Evaluates every grid point at delta / grid.size() and returns the minimum;
/// ties go to the lexicographically smallest parameter tuple.
BoundResult grid_search(BoundName b, const BoundInputs& in, const ParamGrid& grid);

}  // namespace pbda
