#include "serfati/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>

#include "serfati/errors.hpp"

namespace serfati {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

GaussLegendre compute_gl(int n) {
    GaussLegendre g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        g.x[n - 1 - i] = x;
        g.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return g;
}

struct AngularNode {
    double theta;
    double w;
};

// Directions from c of the points where the circle |y - c| = R meets the
// elliptic obstacle boundary.
std::vector<double> circle_crossings(const Domain& domain, Vec2 c, double R) {
    std::vector<double> out;
    auto [A, B] = domain.map()->ellipse_axes();
    auto f = [&](double phi) {
        Vec2 y{A * std::cos(phi), B * std::sin(phi)};
        return norm2(y - c) - R * R;
    };
    const int m = 720;
    double prev = f(0.0);
    for (int k = 1; k <= m; ++k) {
        double hi = kTwoPi * k / m;
        double fh = f(hi);
        if ((prev < 0.0) != (fh < 0.0)) {
            double lo = kTwoPi * (k - 1) / m, a = lo, b = hi, fa = prev;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (a + b);
                double fm = f(mid);
                if ((fm < 0.0) == (fa < 0.0)) { a = mid; fa = fm; } else b = mid;
            }
            double phi = 0.5 * (a + b);
            Vec2 y{A * std::cos(phi), B * std::sin(phi)};
            double th = std::atan2(y.x2 - c.x2, y.x1 - c.x1);
            out.push_back(th < 0.0 ? th + kTwoPi : th);
        }
        prev = fh;
    }
    return out;
}

// Angular rule for rays from `center`. `radii` lists the circles whose
// crossings with the obstacle produce kinks in the radial integrals.
std::vector<AngularNode> angular_nodes(const Domain& domain, Vec2 center,
                                       const std::vector<double>& radii, int n) {
    std::vector<AngularNode> out;
    std::vector<double> brk;
    if (domain.has_boundary()) {
        double reach = *std::max_element(radii.begin(), radii.end());
        double R = domain.map()->obstacle_radius();
        if (norm(center) - R < reach) {
            brk = domain.tangent_angles(center);
            for (double r : radii)
                for (double a : circle_crossings(domain, center, r)) brk.push_back(a);
        }
    }
    std::sort(brk.begin(), brk.end());
    std::vector<double> tang;
    for (double a : brk)
        if (tang.empty() || a - tang.back() > 1e-13) tang.push_back(a);
    if (tang.size() > 1 && tang.front() + kTwoPi - tang.back() <= 1e-13) tang.pop_back();
    if (tang.empty()) {
        out.reserve(n);
        for (int k = 0; k < n; ++k) out.push_back({kTwoPi * (k + 0.5) / n, kTwoPi / n});
        return out;
    }
    // Gauss-Legendre panels between break directions, with a cubic endpoint
    // stretch that removes the square-root behaviour at tangency.
    for (size_t i = 0; i < tang.size(); ++i) {
        double a = tang[i];
        double b = i + 1 < tang.size() ? tang[i + 1] : tang[0] + kTwoPi;
        double span = b - a;
        int m = std::max(8, static_cast<int>(std::lround(n * span / kTwoPi)));
        const auto& gl = gauss_legendre(m);
        for (int k = 0; k < m; ++k) {
            double s = 0.5 * (gl.x[k] + 1.0);
            double th = a + span * s * s * (3.0 - 2.0 * s);
            double jac = span * 6.0 * s * (1.0 - s);
            out.push_back({th, 0.5 * gl.w[k] * jac});
        }
    }
    return out;
}

void add_segment(Rule& rule, Vec2 c, Vec2 e, double wt, double r0, double r1, int n) {
    if (r1 <= r0) return;
    const auto& gl = gauss_legendre(n);
    double half = 0.5 * (r1 - r0), mid = 0.5 * (r1 + r0);
    for (int k = 0; k < n; ++k) {
        double r = mid + half * gl.x[k];
        rule.push_back({c + r * e, wt * half * gl.w[k] * r});
    }
}

void add_graded_segment(Rule& rule, Vec2 c, Vec2 e, double wt, double r1, int n, double q) {
    const auto& gl = gauss_legendre(n);
    for (int k = 0; k < n; ++k) {
        double s = 0.5 * (gl.x[k] + 1.0);
        double r = r1 * std::pow(s, q);
        double dr = r1 * q * std::pow(s, q - 1.0) * 0.5 * gl.w[k];
        rule.push_back({c + r * e, wt * dr * r});
    }
}

Rule polar_rule_impl(const Domain& domain, Vec2 center, double radius, const PolarOptions& opt,
                     std::vector<size_t>* ray_starts) {
    if (!(radius > 0.0)) throw ConfigError("polar rule radius must be positive");
    Rule rule;
    std::vector<double> radii{radius};
    for (double b : opt.breaks)
        if (b > 0.0 && b < radius) radii.push_back(b);
    auto ang = angular_nodes(domain, center, radii, opt.angular_nodes);
    std::vector<double> breaks = opt.breaks;
    std::sort(breaks.begin(), breaks.end());
    rule.reserve(ang.size() * opt.radial_nodes * (1 + breaks.size()));
    for (const auto& an : ang) {
        Vec2 e{std::cos(an.theta), std::sin(an.theta)};
        auto ivs = domain.clip_ray(center, e, 0.0, radius);
        for (auto [ra, rb] : ivs) {
            std::vector<double> edges{ra};
            for (double b : breaks)
                if (b > ra && b < rb) edges.push_back(b);
            edges.push_back(rb);
            for (size_t k = 0; k + 1 < edges.size(); ++k) {
                if (edges[k] == 0.0 && ray_starts) ray_starts->push_back(rule.size());
                if (edges[k] == 0.0 && opt.grading != 1.0)
                    add_graded_segment(rule, center, e, an.w, edges[k + 1], opt.radial_nodes,
                                       opt.grading);
                else
                    add_segment(rule, center, e, an.w, edges[k], edges[k + 1], opt.radial_nodes);
            }
        }
    }
    return rule;
}

template <class T>
double magnitude(const T& v) {
    if constexpr (std::is_same_v<T, double>) return std::abs(v);
    else return norm(v);
}

template <class T>
T singular_impl(const Domain& domain, Vec2 center, double radius,
                const std::function<T(Vec2)>& f, const PolarOptions& opt) {
    std::vector<size_t> starts;
    Rule rule = polar_rule_impl(domain, center, radius, opt, &starts);
    std::vector<T> vals(rule.size());
    T acc{};
    for (size_t i = 0; i < rule.size(); ++i) {
        vals[i] = f(rule[i].y);
        if (!std::isfinite(magnitude(vals[i])))
            throw QuadratureError("singular_polar_integral: non-finite integrand value");
        acc += rule[i].w * vals[i];
    }
    // local power law from the two innermost nodes of rays through the centre
    int votes = 0, rays = 0;
    for (size_t s : starts) {
        if (s + 1 >= rule.size()) continue;
        double r1 = norm(rule[s].y - center), r2 = norm(rule[s + 1].y - center);
        double f1 = magnitude(vals[s]), f2 = magnitude(vals[s + 1]);
        if (r1 <= 0.0 || r2 <= r1 || f1 <= 0.0 || f2 <= 0.0) continue;
        ++rays;
        double alpha = std::log(f1 / f2) / std::log(r2 / r1);
        if (alpha >= 1.9) ++votes;
    }
    if (rays > 0 && votes * 2 > rays)
        throw QuadratureError("singular_polar_integral: integrand blows up faster than 1/r^2");
    return acc;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
    if (n < 1) throw ConfigError("Gauss-Legendre order must be positive");
    static std::mutex mu;
    static std::map<int, GaussLegendre> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
    return it->second;
}

Rule polar_rule(const Domain& domain, Vec2 center, double radius, const PolarOptions& opt) {
    return polar_rule_impl(domain, center, radius, opt, nullptr);
}

Rule annular_rule(const Domain& domain, Vec2 x, double inner, const QuadratureSpec& spec,
                  const std::vector<double>& breaks) {
    double R = spec.truncation_radius;
    if (!(inner > 0.0) || !(R > inner)) throw ConfigError("annular rule needs 0 < inner < outer");
    if (!(spec.panel_ratio > 1.0)) throw ConfigError("panel ratio must exceed 1");
    std::vector<double> edges{inner};
    while (edges.back() * spec.panel_ratio < R) edges.push_back(edges.back() * spec.panel_ratio);
    edges.push_back(R);
    for (double b : breaks)
        if (b > inner && b < R) edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    std::vector<double> uniq;
    for (double e : edges)
        if (uniq.empty() || e - uniq.back() > 1e-12 * R) uniq.push_back(e);
    Rule rule;
    auto ang = angular_nodes(domain, x, uniq, spec.angular_nodes);
    rule.reserve(ang.size() * spec.radial_nodes * uniq.size());
    for (const auto& an : ang) {
        Vec2 e{std::cos(an.theta), std::sin(an.theta)};
        auto ivs = domain.clip_ray(x, e, inner, R);
        for (auto [ra, rb] : ivs)
            for (size_t k = 0; k + 1 < uniq.size(); ++k) {
                double a = std::max(ra, uniq[k]), b = std::min(rb, uniq[k + 1]);
                if (b > a) add_segment(rule, x, e, an.w, a, b, spec.radial_nodes);
            }
    }
    return rule;
}

double singular_polar_integral(const Domain& domain, Vec2 center, double radius,
                               const std::function<double(Vec2)>& f, const PolarOptions& opt) {
    return singular_impl<double>(domain, center, radius, f, opt);
}

Vec2 singular_polar_integral(const Domain& domain, Vec2 center, double radius,
                             const std::function<Vec2(Vec2)>& f, const PolarOptions& opt) {
    return singular_impl<Vec2>(domain, center, radius, f, opt);
}

namespace {

template <class T>
TruncatedResult<T> truncated_impl(const Domain& domain, Vec2 x, double inner, double outer_support,
                                  const QuadratureSpec& spec, const std::function<T(Vec2)>& f,
                                  const std::vector<double>& breaks) {
    if (!(spec.truncation_radius > outer_support))
        throw ConfigError("truncation radius must exceed the cutoff support");
    if (!(spec.target_tol > 0.0)) throw ConfigError("target tolerance must be positive");
    Rule rule = annular_rule(domain, x, inner, spec, breaks);
    TruncatedResult<T> res;
    for (const auto& q : rule) res.value += q.w * f(q.y);
    res.tail_estimate = spec.tail_constant / spec.truncation_radius;
    return res;
}

}  // namespace

TruncatedResult<double> truncated_plane_integral(const Domain& domain, Vec2 x, double inner,
                                                 double outer_support, const QuadratureSpec& spec,
                                                 const std::function<double(Vec2)>& f,
                                                 const std::vector<double>& breaks) {
    return truncated_impl<double>(domain, x, inner, outer_support, spec, f, breaks);
}

TruncatedResult<Vec2> truncated_plane_integral(const Domain& domain, Vec2 x, double inner,
                                               double outer_support, const QuadratureSpec& spec,
                                               const std::function<Vec2(Vec2)>& f,
                                               const std::vector<double>& breaks) {
    return truncated_impl<Vec2>(domain, x, inner, outer_support, spec, f, breaks);
}

BoundaryIntegral boundary_line_integral(
    const Domain& domain, const std::function<double(double, Vec2, Vec2, Vec2)>& f, int nodes) {
    BoundaryIntegral out;
    if (!domain.has_boundary()) {
        out.no_boundary = true;
        return out;
    }
    auto bs = boundary_sample(domain, nodes);
    double ds = domain.boundary_length() / nodes;
    for (const auto& b : bs) out.value += f(b.sigma, b.y, b.tau, b.n) * ds;
    return out;
}

double lp_norm(const Domain& domain, Vec2 center, double radius,
               const std::function<double(Vec2)>& abs_f, double p, const PolarOptions& opt) {
    return lp_norm_annulus(domain, center, 0.0, radius, abs_f, p, opt);
}

double lp_norm_annulus(const Domain& domain, Vec2 center, double r0, double r1,
                       const std::function<double(Vec2)>& abs_f, double p,
                       const PolarOptions& opt) {
    if (!(p >= 1.0)) throw ConfigError("lp_norm needs p >= 1");
    PolarOptions o = opt;
    if (o.grading == 1.0 && p > 1.0 && p < 2.0) o.grading = 1.0 / (2.0 - p);
    if (r0 > 0.0) o.breaks.push_back(r0);
    std::vector<size_t> starts;
    Rule rule = polar_rule_impl(domain, center, r1, o, nullptr);
    double acc = 0.0;
    for (const auto& q : rule) {
        if (norm(q.y - center) < r0) continue;
        double v = abs_f(q.y);
        acc += q.w * (p == 1.0 ? std::abs(v) : std::pow(std::abs(v), p));
    }
    return p == 1.0 ? acc : std::pow(acc, 1.0 / p);
}

double lp_norm(const Rule& nodes, const std::function<double(Vec2)>& abs_f, double p) {
    if (!(p >= 1.0)) throw ConfigError("lp_norm needs p >= 1");
    double acc = 0.0;
    for (const auto& q : nodes) acc += q.w * std::pow(std::abs(abs_f(q.y)), p);
    return std::pow(acc, 1.0 / p);
}

AdaptiveResult adaptive_rectangle(const std::function<double(double, double)>& f, double a0,
                                  double a1, double b0, double b1, double abs_tol, double rel_tol,
                                  int max_evaluations) {
    struct Region {
        double a0, a1, b0, b1, value, error;
        long id;
    };
    const auto& g5 = gauss_legendre(5);
    const auto& g9 = gauss_legendre(9);
    AdaptiveResult res;
    auto tensor = [&](const GaussLegendre& g, const Region& r) {
        double ha = 0.5 * (r.a1 - r.a0), ma = 0.5 * (r.a1 + r.a0);
        double hb = 0.5 * (r.b1 - r.b0), mb = 0.5 * (r.b1 + r.b0);
        double acc = 0.0;
        for (size_t i = 0; i < g.x.size(); ++i)
            for (size_t j = 0; j < g.x.size(); ++j)
                acc += g.w[i] * g.w[j] * f(ma + ha * g.x[i], mb + hb * g.x[j]);
        res.evaluations += static_cast<int>(g.x.size() * g.x.size());
        return acc * ha * hb;
    };
    long next_id = 0;
    auto eval = [&](Region r) {
        double lo = tensor(g5, r), hi = tensor(g9, r);
        r.value = hi;
        r.error = std::abs(hi - lo);
        r.id = next_id++;
        return r;
    };
    auto cmp = [](const Region& x, const Region& y) {
        return x.error < y.error || (x.error == y.error && x.id > y.id);
    };
    std::priority_queue<Region, std::vector<Region>, decltype(cmp)> heap(cmp);
    Region root = eval({a0, a1, b0, b1, 0, 0, 0});
    double total = root.value, err = root.error;
    heap.push(root);
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && res.evaluations < max_evaluations) {
        Region r = heap.top();
        heap.pop();
        total -= r.value;
        err -= r.error;
        double am = 0.5 * (r.a0 + r.a1), bm = 0.5 * (r.b0 + r.b1);
        Region kids[4] = {{r.a0, am, r.b0, bm, 0, 0, 0}, {am, r.a1, r.b0, bm, 0, 0, 0},
                          {r.a0, am, bm, r.b1, 0, 0, 0}, {am, r.a1, bm, r.b1, 0, 0, 0}};
        for (auto& k : kids) {
            Region e = eval(k);
            total += e.value;
            err += e.error;
            heap.push(e);
        }
    }
    // deterministic final sum in creation order
    std::vector<Region> all;
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const Region& x, const Region& y) { return x.id < y.id; });
    res.value = 0.0;
    res.error = 0.0;
    for (const auto& r : all) {
        res.value += r.value;
        res.error += r.error;
    }
    return res;
}

}  // namespace serfati
