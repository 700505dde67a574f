#include "serfati/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include "serfati/errors.hpp"
#include "serfati/scenarios.hpp"

namespace serfati {

namespace {

const double kInvE = std::exp(-1.0);

void check_C(double C) {
    if (!(C > 0.0)) throw ConfigError("the constant C must be positive");
}

}  // namespace

bool BoundParams::small_branch(double t) const { return C * s0 * t < kInvE; }

double mu(double r, double C) {
    if (r < 0.0) throw DomainError("mu is defined for r >= 0");
    if (r == 0.0) return 0.0;
    return r <= kInvE ? -C * r * std::log(r) : C * r;
}

double nu(double r, double t, double C) {
    if (r < 0.0) throw DomainError("nu is defined for r >= 0");
    return C * ((1.0 + t) * mu(r, 1.0) + r);
}

double osgood_integral(const Modulus& m, double lo, double hi) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw DomainError("Osgood integral needs positive limits");
    if (lo == hi) return 0.0;
    double sign = 1.0;
    if (hi < lo) {
        std::swap(lo, hi);
        sign = -1.0;
    }
    auto f = [&](double v) {
        double s = std::exp(v);
        return s / m(s);
    };
    double a = std::log(lo), b = std::log(hi);
    // the unit modulus has a kink at log s = -1
    double value = 0.0;
    if (a < -1.0 && b > -1.0) {
        value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, -1.0, 15, 1e-13) +
                boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -1.0, b, 15, 1e-13);
    } else {
        value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
    }
    return sign * value;
}

OsgoodVerdict osgood_check(const std::vector<double>& times, const std::vector<double>& L,
                           const std::vector<double>& gamma, const Modulus& m, double a, double tol) {
    if (times.empty() || L.size() != times.size() || gamma.size() != times.size())
        throw ConfigError("Osgood check needs matching time, L and gamma samples");
    if (a < 0.0) throw ConfigError("the Osgood constant a must be nonnegative");
    OsgoodVerdict v;
    v.hypothesis_gap = -std::numeric_limits<double>::infinity();
    double rhs = 0.0, gint = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0) {
            double dt = times[i] - times[i - 1];
            rhs += 0.5 * dt * (gamma[i - 1] * m(L[i - 1]) + gamma[i] * m(L[i]));
            gint += 0.5 * dt * (gamma[i - 1] + gamma[i]);
        }
        v.hypothesis_gap = std::max(v.hypothesis_gap, L[i] - (a + rhs));
    }
    if (v.hypothesis_gap > tol) {
        v.verdict = "inconclusive";
        return v;
    }
    if (a == 0.0) {
        v.conclusion_gap = *std::max_element(L.begin(), L.end());
        v.verdict = v.conclusion_gap <= tol ? "pass" : "fail";
        return v;
    }
    v.conclusion_gap = -std::numeric_limits<double>::infinity();
    gint = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0) gint += 0.5 * (times[i] - times[i - 1]) * (gamma[i - 1] + gamma[i]);
        double lhs = L[i] > a ? osgood_integral(m, a, L[i]) : 0.0;
        v.conclusion_gap = std::max(v.conclusion_gap, lhs - gint);
    }
    v.verdict = v.conclusion_gap <= tol ? "pass" : "fail";
    return v;
}

OsgoodEquality osgood_equality_check(double a, double T, int samples) {
    if (!(a > 0.0 && a < kInvE)) throw DomainError("equality case needs 0 < a < 1/e");
    if (!(T > 0.0) || samples < 1) throw ConfigError("equality case needs T > 0 and samples >= 1");
    if (std::pow(a, std::exp(-T)) >= kInvE) throw BranchError("the solution leaves the logarithmic branch");
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 1>;
    auto rhs = [](const State& y, State& dy, double) { dy[0] = mu(y[0], 1.0); };
    auto stepper = ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<State>());
    OsgoodEquality out;
    State y{a};
    double t = 0.0;
    for (int k = 1; k <= samples; ++k) {
        double t1 = T * k / samples;
        ode::integrate_adaptive(stepper, rhs, y, t, t1, (t1 - t) / 16.0);
        t = t1;
        double exact = std::pow(a, std::exp(-t));
        out.max_solution_error = std::max(out.max_solution_error, std::abs(y[0] - exact) / exact);
        double lhs = osgood_integral([](double s) { return mu(s, 1.0); }, a, y[0]);
        out.max_conclusion_error = std::max(out.max_conclusion_error, std::abs(lhs - t));
    }
    return out;
}

double osgood_gamma_closed(const BoundParams& params, double t) {
    check_C(params.C);
    if (t < 0.0 || params.s0 < 0.0) throw DomainError("Gamma needs t >= 0 and s0 >= 0");
    const double C = params.C;
    double x = C * params.s0 * t;
    if (x >= kInvE) throw BranchError("C s0 t lies outside the logarithmic branch");
    if (x == 0.0) return 0.0;
    double k = C * t * (1.0 + t);
    double Ct = (1.0 - std::exp(-k)) / (1.0 + t);
    return std::exp(Ct) * std::pow(x, std::exp(-k));
}

double osgood_gamma_numeric(const BoundParams& params, double t) {
    check_C(params.C);
    if (t < 0.0 || params.s0 < 0.0) throw DomainError("Gamma needs t >= 0 and s0 >= 0");
    const double C = params.C;
    double x = C * params.s0 * t;
    if (x == 0.0) return 0.0;
    Modulus m = [&](double s) { return nu(s, t, C); };
    auto F = [&](double v) { return osgood_integral(m, x, std::exp(v)) - t; };
    double lo = std::log(x), hi = lo + 1.0;
    while (F(hi) < 0.0) hi += 2.0 * (hi - lo);
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(F, lo, hi, -t, F(hi), tol, iters);
    return std::exp(0.5 * (r.first + r.second));
}

double cont_dep_bound(const BoundParams& params, double t) {
    check_C(params.C);
    if (t < 0.0 || params.s0 < 0.0) throw DomainError("the bound needs t >= 0 and s0 >= 0");
    const double C = params.C;
    if (params.s0 == 0.0) return 0.0;
    double x = C * params.s0 * t;
    if (x >= kInvE) throw BranchError("C s0 t lies outside the logarithmic branch");
    double lead = C * std::exp(C * t) * params.s0;
    if (x == 0.0) return lead;
    double k = C * t * (1.0 + t);
    return lead - C * (1.0 + t) * std::exp(C * t) * std::pow(x, std::exp(-k)) * std::log(x);
}

ComparisonReport compare_runs(const RunConfig& first, const RunConfig& second, const BoundParams& params,
                              double h_tolerance) {
    Scenario sc1 = build_scenario(first.scenario, ScenarioParams{first.s0});
    Scenario sc2 = build_scenario(second.scenario, ScenarioParams{second.s0});
    RunConfig c1 = resolved(first, sc1), c2 = resolved(second, sc2);
    if (sc1.domain.name() != sc2.domain.name()) throw ConfigError("runs live on different domains");
    if (c1.h != c2.h || c1.half_width != c2.half_width) throw ConfigError("runs use different grids");
    if (c1.dt != c2.dt) throw ConfigError("runs use different time steps");
    if (c1.tracer_stride != c2.tracer_stride) throw ConfigError("runs use different tracer sets");

    ComparisonReport rep;
    rep.params = params;
    if (rep.params.s0 == 0.0) rep.params.s0 = std::abs(first.s0 - second.s0);
    check_C(rep.params.C);

    Solver s1(sc1, c1), s2(sc2, c2);
    const Grid& g = s1.state().grid;
    if (!g.same_as(s2.state().grid)) throw ConfigError("runs use different grids");
    rep.s0_measured =
        serfati_norm(sc1.domain, [&](Vec2 x) { return sc1.u0(x) - sc2.u0(x); }, g).total();

    auto row_at = [&](double M) {
        const SimState& a = s1.state();
        const SimState& b = s2.state();
        ComparisonRow r;
        r.t = a.t;
        r.M = M;
        for (std::size_t i = 0; i < a.tracer_pos.size(); ++i) {
            r.h = std::max(r.h, norm(a.tracer_pos[i] - b.tracer_pos[i]));
            r.P = std::max(r.P, norm(a.tracer_vel[i] - b.tracer_vel[i]));
        }
        auto u1 = s1.node_velocity(), u2 = s2.node_velocity();
        for (std::size_t i = 0; i < u1.size(); ++i) r.du = std::max(r.du, norm(u1[i] - u2[i]));
        r.branch = rep.params.small_branch(r.t);
        r.bound = r.branch ? cont_dep_bound(rep.params, r.t) : 0.0;
        return r;
    };

    const long nsteps = std::lround(c1.t_final / c1.dt);
    if (std::lround(c2.t_final / c2.dt) != nsteps) throw ConfigError("runs have different lengths");
    rep.rows.push_back(row_at(0.0));
    rep.max_h_minus_M = -std::numeric_limits<double>::infinity();
    for (long k = 0; k < nsteps; ++k) {
        s1.step();
        s2.step();
        double P_prev = rep.rows.back().P, M_prev = rep.rows.back().M;
        ComparisonRow r = row_at(0.0);
        r.M = M_prev + 0.5 * c1.dt * (P_prev + r.P);
        rep.rows.push_back(r);
    }
    for (const auto& r : rep.rows) {
        rep.max_h_minus_M = std::max(rep.max_h_minus_M, r.h - r.M);
        if (r.h > r.M + h_tolerance) rep.h_le_M = false;
        if (r.branch && r.du > r.bound) rep.within_bound = false;
    }
    return rep;
}

std::string comparison_json(const ComparisonReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"t", x.t}, {"h", x.h}, {"P", x.P}, {"M", x.M}, {"du", x.du}, {"bound", x.bound},
                        {"branch", x.branch}});
    nlohmann::json j{{"C", r.params.C},
                     {"s0", r.params.s0},
                     {"s0_measured", r.s0_measured},
                     {"max_h_minus_M", r.max_h_minus_M},
                     {"h_le_M", r.h_le_M},
                     {"within_bound", r.within_bound},
                     {"rows", rows}};
    return j.dump(2) + "\n";
}

std::string comparison_csv(const ComparisonReport& r) {
    std::ostringstream os;
    os.precision(12);
    os << "t,h,P,M,du,bound,branch\n";
    for (const auto& x : r.rows)
        os << x.t << ',' << x.h << ',' << x.P << ',' << x.M << ',' << x.du << ',' << x.bound << ','
           << (x.branch ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace serfati
