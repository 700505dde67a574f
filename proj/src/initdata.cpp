#include "serfati/initdata.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include <json.hpp>

#include "serfati/errors.hpp"
#include "serfati/kernels.hpp"
#include "serfati/parallel.hpp"
#include "serfati/quadrature.hpp"

namespace serfati {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStep = 1e-3;      // finite-difference step, Cartesian and chart
constexpr double kChartZone = 0.25; // derivatives in the chart below this |T| - 1

struct BumpNode {
    double a, b, w;
};

// Even bump exp(-1 / (1 - r^2)) on the unit disk; nodes symmetric under b -> -b
// and a -> -a, weights normalised to sum one.
const std::vector<BumpNode>& bump_rule() {
    static const std::vector<BumpNode> rule = [] {
        const auto& gl = gauss_legendre(8);
        const int M = 16;
        std::vector<BumpNode> r;
        double total = 0.0;
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double s = 0.5 * (gl.x[i] + 1.0);
            double wr = 0.5 * gl.w[i] * s * std::exp(-1.0 / (1.0 - s * s));
            for (int k = 0; k < M; ++k) {
                double th = kTwoPi * (k + 0.5) / M;
                r.push_back({s * std::cos(th), s * std::sin(th), wr});
                total += wr;
            }
        }
        for (auto& q : r) q.w /= total;
        return r;
    }();
    return rule;
}

template <class F>
double composite_gl(F&& f, double a, double b, int panels, int nodes) {
    const auto& gl = gauss_legendre(nodes);
    double acc = 0.0, hp = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * hp;
        for (std::size_t i = 0; i < gl.x.size(); ++i)
            acc += 0.5 * hp * gl.w[i] * f(lo + 0.5 * hp * (gl.x[i] + 1.0));
    }
    return acc;
}

// Shared evaluation state of psi_n and its derivatives.
struct Mollified {
    Domain domain;
    ScalarFn psi;
    double eps = 0.0;
    Cutoff blend = Cutoff::standard();

    Vec2 chart_point(double th, double rho) const {
        Vec2 w = (1.0 + rho) * Vec2{std::cos(th), std::sin(th)};
        return domain.map()->inverse(w);
    }
    void chart_of(Vec2 x, double& th, double& rho) const {
        Vec2 w = domain.to_disk(x);
        th = std::atan2(w.x2, w.x1);
        rho = norm(w) - 1.0;
    }
    double interior(Vec2 x) const {
        double acc = 0.0;
        for (const auto& q : bump_rule()) acc += q.w * psi(x - eps * Vec2{q.a, q.b});
        return acc;
    }
    double odd(double th, double rho) const {
        if (rho == 0.0) return 0.0;
        return rho > 0.0 ? psi(chart_point(th, rho)) : -psi(chart_point(th, -rho));
    }
    double chart_mollified(double th, double rho) const {
        double acc = 0.0;
        for (const auto& q : bump_rule()) acc += q.w * odd(th - eps * q.a, rho - eps * q.b);
        return acc;
    }
    // psi_n in chart coordinates; rho < 0 continues the odd extension
    double in_chart(double th, double rho) const {
        double chi = rho <= 0.0 ? 1.0 : blend.profile(rho);
        if (chi == 1.0) return chart_mollified(th, rho);
        double pi = interior(chart_point(th, rho));
        if (chi == 0.0) return pi;
        return chi * chart_mollified(th, rho) + (1.0 - chi) * pi;
    }
    double value(Vec2 x) const {
        if (!domain.has_boundary()) return interior(x);
        double th, rho;
        chart_of(x, th, rho);
        return in_chart(th, rho);
    }
};

// grad and Laplacian of f, switching to the chart near the boundary
struct Differentiator {
    std::shared_ptr<const Mollified> m;

    template <class Cart, class Chart>
    Vec2 grad(Vec2 x, Cart&& f, Chart&& fc) const {
        double th = 0.0, rho = 1.0;
        if (m->domain.has_boundary()) m->chart_of(x, th, rho);
        if (!m->domain.has_boundary() || rho >= kChartZone) {
            const double d = kStep;
            return {(f(x + Vec2{d, 0.0}) - f(x - Vec2{d, 0.0})) / (2.0 * d),
                    (f(x + Vec2{0.0, d}) - f(x - Vec2{0.0, d})) / (2.0 * d)};
        }
        const double d = kStep;
        double ht = (fc(th + d, rho) - fc(th - d, rho)) / (2.0 * d);
        double hr = (fc(th, rho + d) - fc(th, rho - d)) / (2.0 * d);
        Vec2 er{std::cos(th), std::sin(th)};
        Vec2 gw = hr * er + (ht / (1.0 + rho)) * perp(er);
        Vec2 p = m->chart_point(th, rho);
        return transpose(m->domain.map()->jacobian(p)) * gw;
    }

    template <class Cart, class Chart>
    double laplacian(Vec2 x, Cart&& f, Chart&& fc) const {
        double th = 0.0, rho = 1.0;
        if (m->domain.has_boundary()) m->chart_of(x, th, rho);
        const double d = kStep;
        if (!m->domain.has_boundary() || rho >= kChartZone) {
            double c = f(x);
            return (f(x + Vec2{d, 0.0}) + f(x - Vec2{d, 0.0}) + f(x + Vec2{0.0, d}) + f(x - Vec2{0.0, d}) -
                    4.0 * c) /
                   (d * d);
        }
        double c = fc(th, rho);
        double rp = fc(th, rho + d), rm = fc(th, rho - d);
        double tp = fc(th + d, rho), tm = fc(th - d, rho);
        double s = 1.0 + rho;
        double lw = (rp - 2.0 * c + rm) / (d * d) + (rp - rm) / (2.0 * d * s) + (tp - 2.0 * c + tm) / (d * d * s * s);
        Vec2 p = m->chart_point(th, rho);
        double j = norm(to_vec(m->domain.map()->derivative_c(to_complex(p))));
        return j * j * lw;
    }
};

std::shared_ptr<const Mollified> make_mollified(const Domain& domain, const ScalarFn& psi, int n) {
    if (n < 1) throw ConfigError("mollification index n must be at least 1");
    auto m = std::make_shared<Mollified>();
    m->domain = domain;
    m->psi = psi;
    m->eps = 1.0 / n;
    if (domain.has_boundary() && m->eps * domain.map()->lip_upper() > 0.5)
        throw ChartError("mollification scale exceeds the boundary chart; use a larger n");
    return m;
}

}  // namespace

double stream_function(const Domain& domain, const VectorFn& u, Vec2 x, int panels, int nodes) {
    if (!domain.has_boundary()) {
        if (x == Vec2{}) return 0.0;
        return -composite_gl([&](double s) { return dot(perp(u(s * x)), x); }, 0.0, 1.0, panels, nodes);
    }
    if (!domain.contains(x)) throw DomainError("stream function requested inside the obstacle");
    Vec2 w = domain.to_disk(x);
    double r = norm(w);
    if (r <= 1.0) return 0.0;
    Vec2 e = w / r;
    const auto& map = domain.map();
    return -composite_gl(
        [&](double s) {
            Vec2 z = map->inverse(s * e);
            Vec2 dz = map->inverse_jacobian(s * e) * e;
            return dot(perp(u(z)), dz);
        },
        1.0, r, panels, nodes);
}

StreamFunction stream_of(const Domain& domain, const VectorFn& u) {
    StreamFunction s;
    s.psi = [domain, u](Vec2 x) { return stream_function(domain, u, x); };
    s.gradient = [u](Vec2 x) { return -perp(u(x)); };
    return s;
}

StreamFunction mollified_stream(const Domain& domain, const ScalarFn& psi, int n) {
    auto m = make_mollified(domain, psi, n);
    Differentiator d{m};
    StreamFunction s;
    s.psi = [m](Vec2 x) { return m->value(x); };
    s.gradient = [m, d](Vec2 x) {
        return d.grad(
            x, [&](Vec2 y) { return m->value(y); }, [&](double th, double rho) { return m->in_chart(th, rho); });
    };
    return s;
}

ApproxVelocity approx_velocity(const Domain& domain, const ScalarFn& psi, int n) {
    auto m = make_mollified(domain, psi, n);
    Differentiator d{m};
    ApproxVelocity out;
    out.n = n;
    out.eps = m->eps;
    out.support_radius = 2.0 * n;
    const double R = out.support_radius;
    auto phi = [R, c = Cutoff::standard()](Vec2 x) { return c.profile(norm(x) / R); };
    auto bar = [m, phi](Vec2 x) {
        double f = phi(x);
        return f == 0.0 ? 0.0 : f * m->value(x);
    };
    auto bar_chart = [m, phi](double th, double rho) {
        double f = phi(m->chart_point(th, rho));
        return f == 0.0 ? 0.0 : f * m->in_chart(th, rho);
    };
    out.psi_bar = bar;
    out.u = [domain, d, bar, bar_chart, R](Vec2 x) {
        if (norm(x) >= R || !domain.contains(x)) return Vec2{};
        return perp(d.grad(x, bar, bar_chart));
    };
    out.omega = [domain, d, bar, bar_chart, R](Vec2 x) {
        if (norm(x) >= R || !domain.contains(x)) return 0.0;
        return d.laplacian(x, bar, bar_chart);
    };
    return out;
}

ApproxVelocity approx_velocity(const Domain& domain, const VectorFn& u, int n) {
    return approx_velocity(domain, stream_of(domain, u).psi, n);
}

ApproxReport approx_report(const Scenario& sc, const ApproxOptions& opt) {
    if (opt.ns.empty()) throw ConfigError("approximation needs at least one index n");
    const Domain& dom = sc.domain;
    ApproxReport rep;
    rep.scenario = sc.name;
    const double W = opt.compact_half_width > 0.0 ? opt.compact_half_width : (dom.has_boundary() ? 2.0 : 1.0);

    auto grid_samples = [&](double half, double h) {
        std::vector<Vec2> pts;
        int m = static_cast<int>(std::lround(half / h));
        for (int j = -m; j <= m; ++j)
            for (int i = -m; i <= m; ++i) {
                Vec2 x{i * h, j * h};
                if (dom.contains(x)) pts.push_back(x);
            }
        return pts;
    };
    const std::vector<Vec2> compact = grid_samples(W, opt.sample_h);
    const std::vector<Vec2> core = grid_samples(std::max(W, sc.default_half_width), 2.0 * opt.sample_h);
    auto annulus = [&](double r0, double r1) {
        std::vector<Vec2> pts;
        for (int i = 0; i <= 12; ++i)
            for (int k = 0; k < 64; ++k) {
                double r = r0 + (r1 - r0) * i / 12.0, th = kTwoPi * (k + 0.25) / 64;
                Vec2 x = r * Vec2{std::cos(th), std::sin(th)};
                if (dom.contains(x)) pts.push_back(x);
            }
        return pts;
    };
    auto bnodes = boundary_sample(dom, opt.boundary_samples);

    ScalarFn psi = stream_of(dom, sc.u0).psi;
    // reference norm over the union of all sample sets
    std::vector<Vec2> all = core;
    for (int n : opt.ns) {
        auto a = annulus(n, 2.0 * n);
        all.insert(all.end(), a.begin(), a.end());
    }
    for (Vec2 x : all) rep.reference.u_inf = std::max(rep.reference.u_inf, norm(sc.u0(x)));
    rep.reference.omega_inf = sc.omega_sup;

    rep.compact = true;
    for (int n : opt.ns) {
        ApproxVelocity av = approx_velocity(dom, psi, n);
        ApproxRow row;
        row.n = n;
        std::vector<double> err(compact.size()), div(compact.size(), 0.0);
        parallel_for(compact.size(), [&](std::size_t i) {
            Vec2 x = compact[i];
            err[i] = norm(av.u(x) - sc.u0(x));
            double rho = dom.has_boundary() ? norm(dom.to_disk(x)) - 1.0 : 1.0;
            if (rho >= 2.0 * kChartZone) {
                const double d = kStep;
                div[i] = std::abs((av.u(x + Vec2{d, 0.0}).x1 - av.u(x - Vec2{d, 0.0}).x1 +
                                   av.u(x + Vec2{0.0, d}).x2 - av.u(x - Vec2{0.0, d}).x2) /
                                  (2.0 * d));
            }
        });
        row.err_compact = *std::max_element(err.begin(), err.end());
        row.divergence = *std::max_element(div.begin(), div.end());

        std::vector<Vec2> snorm = core;
        auto a = annulus(n, 2.0 * n);
        snorm.insert(snorm.end(), a.begin(), a.end());
        std::vector<double> us(snorm.size()), ws(snorm.size());
        parallel_for(snorm.size(), [&](std::size_t i) {
            us[i] = norm(av.u(snorm[i]));
            ws[i] = std::abs(av.omega(snorm[i]));
        });
        row.norm.u_inf = *std::max_element(us.begin(), us.end());
        row.norm.omega_inf = *std::max_element(ws.begin(), ws.end());

        for (double r : {2.0 * n, 2.0 * n + 0.5, 3.0 * n})
            for (int k = 0; k < 64; ++k) {
                Vec2 x = r * Vec2{std::cos(kTwoPi * k / 64), std::sin(kTwoPi * k / 64)};
                row.outside_max = std::max(row.outside_max, norm(av.u(x)) + std::abs(av.omega(x)));
            }
        if (dom.has_boundary()) {
            std::vector<double> bp(bnodes.size()), bt(bnodes.size());
            parallel_for(bnodes.size(), [&](std::size_t i) {
                bp[i] = std::abs(av.psi_bar(bnodes[i].y));
                bt[i] = std::abs(dot(av.u(bnodes[i].y), bnodes[i].n));
            });
            row.boundary_psi = *std::max_element(bp.begin(), bp.end());
            row.tangency = *std::max_element(bt.begin(), bt.end());
        }
        if (row.outside_max != 0.0) rep.compact = false;
        rep.rows.push_back(row);
    }
    rep.decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].err_compact < rep.rows[i - 1].err_compact)) rep.decreasing = false;
    rep.bounded = true;
    for (const auto& r : rep.rows)
        if (!(r.norm.total() <= 2.0 * rep.reference.total())) rep.bounded = false;
    return rep;
}

std::string approx_json(const ApproxReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"n", x.n},
                        {"err_compact", x.err_compact},
                        {"u_inf", x.norm.u_inf},
                        {"omega_inf", x.norm.omega_inf},
                        {"norm_S", x.norm.total()},
                        {"outside_max", x.outside_max},
                        {"boundary_psi", x.boundary_psi},
                        {"tangency", x.tangency},
                        {"divergence", x.divergence}});
    nlohmann::json j{{"scenario", r.scenario},
                     {"reference_norm_S", r.reference.total()},
                     {"decreasing", r.decreasing},
                     {"bounded", r.bounded},
                     {"compact", r.compact},
                     {"rows", rows}};
    return j.dump(2) + "\n";
}

}  // namespace serfati
