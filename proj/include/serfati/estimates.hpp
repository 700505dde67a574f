#pragma once

#include <string>
#include <vector>

#include "serfati/kernels.hpp"
#include "serfati/quadrature.hpp"

namespace serfati {

/// One certified bound: measured values over a parameter sweep and their
/// ratios to the bound's shape.
struct EstimateReport {
    std::string name;
    std::string parameter;        ///< "eps", "R", "delta", "p" or "pairs"
    std::vector<double> params;
    std::vector<Vec2> points;     ///< evaluation point per row (may repeat)
    std::vector<double> values;
    std::vector<double> ratios;   ///< value / shape
    std::vector<double> tails;    ///< truncation estimate per row (0 when exact)
    double fitted_constant = 0.0; ///< baseline constant; the measured max when none is frozen
    bool frozen = false;          ///< fitted_constant came from the baseline file
    std::string verdict;          ///< "bounded" or "violated"

    double max_ratio() const;
    double min_ratio() const;
    /// max_ratio / min_ratio over rows with positive ratios.
    double spread() const;
};

/// Frozen constants keyed by report name, read from data/baselines.json.
struct Baselines {
    int version = 0;
    double fitted_C = 1.0;
    double apriori_factor = 2.0;
    std::vector<std::pair<std::string, double>> constants;

    /// Constant for `name`, or a negative value when none is stored.
    double lookup(const std::string& name) const;
};

/// Default path: SERFATI_BASELINES, else the data directory of the source tree.
std::string default_baselines_path();
/// Throws IoError when the file is missing and ConfigError when it is malformed.
Baselines load_baselines(const std::string& path);
Baselines load_baselines();

/// Sets fitted_constant and verdict from the baseline (or the measured max).
void apply_baseline(EstimateReport& rep, const Baselines* baselines);

struct CertifyOptions {
    PolarOptions near{48, 96, 1.0, {}};
    QuadratureSpec far{12, 256, 0.0, 0.0, 1e-8, 2.0};
    double far_truncation_factor = 400.0;  ///< truncation radius = factor * eps
    const Baselines* baselines = nullptr;
};

/// L1 norm over the domain of a_eps(x - .) V(x, .), with V the chosen kernel.
double near_l1(const Domain& domain, KernelKind kind, double eps, Vec2 x,
               const PolarOptions& opt = {48, 96, 1.0, {}});

struct FarL1 {
    double value = 0.0;
    double tail = 0.0;  ///< 2 pi R^3 max|W| on the truncation circle over R
};
/// L1 norm of the far-field weight, both components, Frobenius pointwise.
FarL1 far_l1(const Domain& domain, KernelKind kind, double eps, Vec2 x, const QuadratureSpec& spec);

/// Rows over eps x x_list. Ratio is value / eps, or value / (eps + eps^2)
/// for the domain or hydrodynamic kernel outside an obstacle.
EstimateReport certify_near_l1(const Domain& domain, KernelKind kind, const std::vector<double>& eps_list,
                               const std::vector<Vec2>& x_list, const CertifyOptions& opt = {});
/// Ratio is value * eps, or the value alone for the domain or hydrodynamic kernel outside an obstacle.
EstimateReport certify_far_l1(const Domain& domain, KernelKind kind, const std::vector<double>& eps_list,
                              const std::vector<Vec2>& x_list, const CertifyOptions& opt = {});

/// Integral of |V(x, .)|^p over the ball of radius R about x (clipped to the domain).
/// Throws DomainError unless 1 <= p < 2.
double rearrangement_value(const Domain& domain, KernelKind kind, Vec2 x, double R, double p,
                           int radial_nodes = 96, int angular_nodes = 128);
/// Rows over p x R with shape R^(2-p) / (2-p).
EstimateReport certify_rearrangement(const Domain& domain, KernelKind kind, const std::vector<double>& p_list,
                                     const std::vector<double>& R_list, Vec2 x,
                                     const CertifyOptions& opt = {});

/// Measure-preserving pair: identity against a map depending on delta.
enum class PairFamily {
    Rotation,     ///< rotation about the origin by delta
    RadialFlow,   ///< rotation by delta / |z| (the radial vortex at time delta)
    Translation,  ///< shift by (delta, 0); full plane only
};

/// L1 norm over U of K_Omega(x, z) - K_Omega(x, X(z)), where U is the disk
/// of area 2 pi about `center`. Zero when delta is zero.
double hlog_difference(const Domain& domain, PairFamily family, double delta, Vec2 x, Vec2 center,
                       double tol = 1e-9);
/// Ratio to -delta log delta. Throws DomainError when some delta >= 1/e or delta < 0.
EstimateReport certify_hlog(const Domain& domain, const std::vector<double>& delta_list,
                            PairFamily family = PairFamily::Rotation, const CertifyOptions& opt = {});

/// Pointwise lemma sweeps on the disk exterior (and the ellipse map for the
/// second-derivative bound). Random pairs use a fixed seed.
std::vector<EstimateReport> certify_pointwise(const Domain& domain, int samples = 100000,
                                              const CertifyOptions& opt = {});

/// The extremal configuration of the product bound: x = (-(R - 1), 0), y = (1, 0).
/// Returns |x||y| - (R - 1).
double product_bound_gap(double R);

/// The shipped sweep: near and far L1 on the plane and the disk exterior,
/// rearrangement, log-difference and the pointwise lemmas.
std::vector<EstimateReport> standard_certification(const CertifyOptions& opt = {}, int pointwise_samples = 100000);

/// Baselines holding each report's measured max ratio times `margin`.
Baselines freeze_baselines(const std::vector<EstimateReport>& reports, double margin = 1.1);
void save_baselines(const Baselines& b, const std::string& path);

std::string estimate_json(const std::vector<EstimateReport>& reports);
std::string estimate_csv(const std::vector<EstimateReport>& reports);

}  // namespace serfati
