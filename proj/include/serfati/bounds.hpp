#pragma once

#include <functional>
#include <string>
#include <vector>

#include "serfati/solver.hpp"

namespace serfati {

/// Constants of the continuous-dependence estimate.
struct BoundParams {
    double C = 1.0;          ///< fitted master constant
    double t_horizon = 1.0;
    double s0 = 0.0;         ///< initial closeness in the Serfati norm
    double p = 0.0;          ///< 0 stands for p = infinity
    /// C s0 t below 1/e, where the logarithmic branch of mu applies.
    bool small_branch(double t) const;
};

/// -C r log r on [0, 1/e], C r beyond (continuous, nondecreasing).
double mu(double r, double C = 1.0);
/// C [(1 + t) mu(r) + r] with the unit modulus mu(r, 1).
double nu(double r, double t, double C = 1.0);

using Modulus = std::function<double(double)>;

/// Integral of ds / m(s) over [lo, hi] computed in log s (Gauss-Kronrod).
double osgood_integral(const Modulus& m, double lo, double hi);

struct OsgoodVerdict {
    std::string verdict;            ///< "pass", "fail" or "inconclusive"
    double hypothesis_gap = 0.0;    ///< max of L - (a + int gamma mu(L)); positive means violated
    double conclusion_gap = 0.0;    ///< max of int_a^L ds/mu - int gamma, or max L when a = 0
};

/// Checks the Osgood conclusion on sampled L and gamma over `times`.
/// The hypothesis is tested with trapezoid integrals; a violation gives "inconclusive".
OsgoodVerdict osgood_check(const std::vector<double>& times, const std::vector<double>& L,
                           const std::vector<double>& gamma, const Modulus& m, double a, double tol = 1e-6);

/// Equality case L' = -L log L, L(0) = a, integrated numerically on [0, T].
struct OsgoodEquality {
    double max_solution_error = 0.0;    ///< against the exact a^(exp(-t))
    double max_conclusion_error = 0.0;  ///< |int_a^L ds/mu - t|
};
OsgoodEquality osgood_equality_check(double a, double T, int samples = 64);

/// Upper bound Gamma(t) for the closeness of flow maps.
/// Closed form: e^{C_t} (C s0 t)^{exp(-C t (1 + t))}, C_t = (1 - exp(-C t (1 + t))) / (1 + t).
/// Throws BranchError when C s0 t >= 1/e. Matches the numeric inversion while Gamma <= 1/e;
/// beyond that mu is linear and the two part ways.
double osgood_gamma_closed(const BoundParams& params, double t);
/// Root of int_{C s0 t}^{Gamma} ds / nu = t by bracketing (TOMS 748); valid on every branch.
double osgood_gamma_numeric(const BoundParams& params, double t);

/// C e^{Ct} s0 - C (1 + t) e^{Ct} x^{exp(-Ct(1+t))} log x with x = C s0 t.
/// Zero when s0 = 0; BranchError outside the logarithmic branch.
double cont_dep_bound(const BoundParams& params, double t);

struct ComparisonRow {
    double t = 0.0;
    double h = 0.0;          ///< sup over tracers of |X1 - X2|
    double P = 0.0;          ///< sup over tracers of |u2(X2) - u1(X1)|
    double M = 0.0;          ///< trapezoid integral of P
    double du = 0.0;         ///< sup over fluid nodes of |u1 - u2|
    double bound = 0.0;      ///< cont_dep_bound at t (0 when outside the branch)
    bool branch = true;
};

struct ComparisonReport {
    BoundParams params;
    double s0_measured = 0.0;  ///< |u1(0) - u2(0)|_S on the grid
    std::vector<ComparisonRow> rows;
    double max_h_minus_M = 0.0;
    bool h_le_M = true;        ///< h <= M + tolerance at every step
    bool within_bound = true;  ///< du <= bound at every row in the branch
};

/// Runs two configurations in lockstep. Grids, steps and domains must match
/// (ConfigError otherwise). s0 defaults to |s0_1 - s0_2| when params.s0 is 0.
ComparisonReport compare_runs(const RunConfig& first, const RunConfig& second, const BoundParams& params,
                              double h_tolerance = 1e-6);

std::string comparison_json(const ComparisonReport& r);
std::string comparison_csv(const ComparisonReport& r);

}  // namespace serfati
