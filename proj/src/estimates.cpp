#include "serfati/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "serfati/errors.hpp"
#include "serfati/parallel.hpp"

namespace serfati {

using json = nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

std::string report_name(const std::string& what, const Domain& d, KernelKind k) {
    return what + ":" + d.name() + ":" + to_string(k);
}

bool obstacle_k(const Domain& d, KernelKind k) {
    return d.has_boundary() && (k == KernelKind::DomainK || k == KernelKind::Hydrodynamic);
}

}  // namespace

double EstimateReport::max_ratio() const {
    double m = 0.0;
    for (double r : ratios) m = std::max(m, r);
    return m;
}

double EstimateReport::min_ratio() const {
    double m = std::numeric_limits<double>::infinity();
    for (double r : ratios)
        if (r > 0.0) m = std::min(m, r);
    return std::isfinite(m) ? m : 0.0;
}

double EstimateReport::spread() const {
    double lo = min_ratio();
    return lo > 0.0 ? max_ratio() / lo : 0.0;
}

double Baselines::lookup(const std::string& name) const {
    for (const auto& [k, v] : constants)
        if (k == name) return v;
    return -1.0;
}

std::string default_baselines_path() {
    if (const char* p = std::getenv("SERFATI_BASELINES"); p && *p) return p;
#ifdef SERFATI_DATA_DIR
    return std::string(SERFATI_DATA_DIR) + "/baselines.json";
#else
    return "data/baselines.json";
#endif
}

Baselines load_baselines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read baselines: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed baselines file " + path + ": " + e.what());
    }
    Baselines b;
    try {
        b.version = j.at("version").get<int>();
        b.fitted_C = j.at("fitted_C").get<double>();
        b.apriori_factor = j.at("apriori_factor").get<double>();
        for (const auto& [k, v] : j.at("constants").items()) b.constants.emplace_back(k, v.get<double>());
    } catch (const json::exception& e) {
        throw ConfigError("baselines file " + path + " lacks a field: " + e.what());
    }
    if (!(b.fitted_C > 0.0)) throw ConfigError("baseline fitted_C must be positive");
    return b;
}

Baselines load_baselines() { return load_baselines(default_baselines_path()); }

void apply_baseline(EstimateReport& rep, const Baselines* baselines) {
    double c = baselines ? baselines->lookup(rep.name) : -1.0;
    rep.frozen = c > 0.0;
    rep.fitted_constant = rep.frozen ? c : rep.max_ratio();
    rep.verdict = rep.max_ratio() <= rep.fitted_constant ? "bounded" : "violated";
}

double near_l1(const Domain& domain, KernelKind kind, double eps, Vec2 x, const PolarOptions& opt) {
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (domain.has_boundary() && !domain.contains(x)) throw DomainError("evaluation point outside the fluid");
    Cutoff c = Cutoff::standard();
    PolarOptions o = opt;
    o.breaks.push_back(c.c_inner() * eps);
    auto f = [&](Vec2 y) {
        if (y == x) return 0.0;
        double a = cutoff_eval(c, eps, x - y);
        return a == 0.0 ? 0.0 : a * norm(kernel_value(domain, kind, x, y));
    };
    return lp_norm(domain, x, c.c_outer() * eps, f, 1.0, o);
}

FarL1 far_l1(const Domain& domain, KernelKind kind, double eps, Vec2 x, const QuadratureSpec& spec) {
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    Cutoff c = Cutoff::standard();
    const double inner = c.c_inner() * eps, outer = c.c_outer() * eps;
    std::vector<double> breaks;
    for (int k = 1; k <= 4; ++k) breaks.push_back(inner + (outer - inner) * k / 4.0);
    auto f = [&](Vec2 y) {
        auto w = farfield_weights(domain, c, eps, x, y, kind);
        return std::hypot(frobenius(w[0]), frobenius(w[1]));
    };
    auto r = truncated_plane_integral(domain, x, inner, outer, spec, std::function<double(Vec2)>(f), breaks);
    FarL1 out;
    out.value = r.value;
    double R = spec.truncation_radius, worst = 0.0;
    for (int k = 0; k < 64; ++k) {
        Vec2 y = x + R * Vec2{std::cos(kTwoPi * (k + 0.5) / 64), std::sin(kTwoPi * (k + 0.5) / 64)};
        if (domain.contains(y)) worst = std::max(worst, f(y));
    }
    // |W| ~ C / r^3 beyond R integrates to 2 pi C / R
    out.tail = kTwoPi * R * R * worst;
    return out;
}

EstimateReport certify_near_l1(const Domain& domain, KernelKind kind, const std::vector<double>& eps_list,
                               const std::vector<Vec2>& x_list, const CertifyOptions& opt) {
    if (eps_list.empty() || x_list.empty()) throw ConfigError("eps and point lists must be nonempty");
    EstimateReport rep;
    rep.name = report_name("near_l1", domain, kind);
    rep.parameter = "eps";
    const std::size_t n = eps_list.size() * x_list.size();
    rep.params.resize(n);
    rep.points.resize(n);
    rep.values.resize(n);
    rep.ratios.resize(n);
    rep.tails.assign(n, 0.0);
    const bool quad = obstacle_k(domain, kind);
    parallel_for(n, [&](std::size_t i) {
        double eps = eps_list[i / x_list.size()];
        Vec2 x = x_list[i % x_list.size()];
        double v = near_l1(domain, kind, eps, x, opt.near);
        rep.params[i] = eps;
        rep.points[i] = x;
        rep.values[i] = v;
        rep.ratios[i] = v / (quad ? eps + eps * eps : eps);
    });
    apply_baseline(rep, opt.baselines);
    return rep;
}

EstimateReport certify_far_l1(const Domain& domain, KernelKind kind, const std::vector<double>& eps_list,
                              const std::vector<Vec2>& x_list, const CertifyOptions& opt) {
    if (eps_list.empty() || x_list.empty()) throw ConfigError("eps and point lists must be nonempty");
    EstimateReport rep;
    rep.name = report_name("far_l1", domain, kind);
    rep.parameter = "eps";
    const std::size_t n = eps_list.size() * x_list.size();
    rep.params.resize(n);
    rep.points.resize(n);
    rep.values.resize(n);
    rep.ratios.resize(n);
    rep.tails.resize(n);
    const bool flat = obstacle_k(domain, kind);
    parallel_for(n, [&](std::size_t i) {
        double eps = eps_list[i / x_list.size()];
        Vec2 x = x_list[i % x_list.size()];
        QuadratureSpec spec = opt.far;
        spec.truncation_radius = opt.far_truncation_factor * eps;
        FarL1 r = far_l1(domain, kind, eps, x, spec);
        rep.params[i] = eps;
        rep.points[i] = x;
        rep.values[i] = r.value;
        rep.tails[i] = r.tail;
        rep.ratios[i] = flat ? r.value : r.value * eps;
    });
    apply_baseline(rep, opt.baselines);
    return rep;
}

double rearrangement_value(const Domain& domain, KernelKind kind, Vec2 x, double R, double p,
                           int radial_nodes, int angular_nodes) {
    if (!(p >= 1.0 && p < 2.0)) throw DomainError("rearrangement bound needs 1 <= p < 2");
    if (!(R > 0.0)) throw ConfigError("ball radius must be positive");
    PolarOptions o{radial_nodes, angular_nodes, 1.0 / (2.0 - p), {}};
    auto f = [&](Vec2 y) { return y == x ? 0.0 : norm(kernel_value(domain, kind, x, y)); };
    return std::pow(lp_norm(domain, x, R, f, p, o), p);
}

EstimateReport certify_rearrangement(const Domain& domain, KernelKind kind, const std::vector<double>& p_list,
                                     const std::vector<double>& R_list, Vec2 x, const CertifyOptions& opt) {
    if (p_list.empty() || R_list.empty()) throw ConfigError("p and R lists must be nonempty");
    for (double p : p_list)
        if (!(p >= 1.0 && p < 2.0)) throw DomainError("rearrangement bound needs 1 <= p < 2");
    EstimateReport rep;
    rep.name = report_name("rearrangement", domain, kind);
    rep.parameter = "p,R";
    const std::size_t n = p_list.size() * R_list.size();
    rep.params.resize(n);
    rep.points.assign(n, x);
    rep.values.resize(n);
    rep.ratios.resize(n);
    rep.tails.assign(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        double p = p_list[i / R_list.size()];
        double R = R_list[i % R_list.size()];
        double v = rearrangement_value(domain, kind, x, R, p);
        rep.params[i] = p;
        rep.values[i] = v;
        rep.ratios[i] = v / (std::pow(R, 2.0 - p) / (2.0 - p));
    });
    // params holds p; R cycles fastest
    apply_baseline(rep, opt.baselines);
    return rep;
}

namespace {

Vec2 pair_map(PairFamily family, double delta, Vec2 z) {
    switch (family) {
        case PairFamily::Rotation: return rotate(z, delta);
        case PairFamily::RadialFlow: {
            double r = norm(z);
            return r > 0.0 ? rotate(z, delta / r) : z;
        }
        case PairFamily::Translation: return z + Vec2{delta, 0.0};
    }
    return z;
}

}  // namespace

double hlog_difference(const Domain& domain, PairFamily family, double delta, Vec2 x, Vec2 center,
                       double tol) {
    if (family == PairFamily::Translation && domain.has_boundary())
        throw ConfigError("translations do not preserve an obstacle exterior");
    if (delta == 0.0) return 0.0;
    const double rho = std::sqrt(2.0);  // |U| = 2 pi
    if (domain.has_boundary() && domain.boundary_distance(center) <= rho)
        throw ConfigError("the measure window must lie in the fluid");
    const KernelKind kind = KernelKind::DomainK;
    auto g = [&](double r, double th) {
        if (r == 0.0) return 0.0;
        Vec2 z = center + r * Vec2{std::cos(th), std::sin(th)};
        Vec2 zx = pair_map(family, delta, z);
        if (z == x || zx == x) return 0.0;
        return r * norm(kernel_value(domain, kind, x, z) - kernel_value(domain, kind, x, zx));
    };
    double scale = -delta * std::log(std::max(delta, 1e-300));
    AdaptiveResult res = adaptive_rectangle(g, 0.0, rho, 0.0, kTwoPi, tol * scale, 1e-7, 4000000);
    return res.value;
}

EstimateReport certify_hlog(const Domain& domain, const std::vector<double>& delta_list, PairFamily family,
                            const CertifyOptions& opt) {
    if (delta_list.empty()) throw ConfigError("delta list must be nonempty");
    for (double d : delta_list)
        if (!(d > 0.0) || d >= std::exp(-1.0)) throw DomainError("log-difference bound needs 0 < delta < 1/e");
    EstimateReport rep;
    static const char* fam[] = {"rotation", "radial-flow", "translation"};
    rep.name = "hlog:" + domain.name() + ":" + fam[static_cast<int>(family)];
    rep.parameter = "delta";
    // x away from the fixed point of the rotation, where the difference is only linear in delta
    Vec2 center = domain.has_boundary() ? Vec2{3.0, 0.0} : Vec2{0.0, 0.0};
    Vec2 x = domain.has_boundary() ? center : Vec2{1.0, 0.0};
    const std::size_t n = delta_list.size();
    rep.params = delta_list;
    rep.points.assign(n, x);
    rep.values.resize(n);
    rep.ratios.resize(n);
    rep.tails.assign(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        double d = delta_list[i];
        double v = hlog_difference(domain, family, d, x, center);
        rep.values[i] = v;
        rep.ratios[i] = v / (-d * std::log(d));
    });
    apply_baseline(rep, opt.baselines);
    return rep;
}

double product_bound_gap(double R) {
    if (!(R >= 2.0)) throw DomainError("the extremal pair needs R >= 2");
    Vec2 x{-(R - 1.0), 0.0}, y{1.0, 0.0};
    return norm(x) * norm(y) - (R - 1.0);
}

namespace {

// point in 1 < |z| < outer, biased towards the circle
Vec2 exterior_sample(std::mt19937_64& rng, double outer) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = 1.0 + (outer - 1.0) * u(rng) * u(rng);
    double th = kTwoPi * u(rng);
    if (r <= 1.0) r = std::nextafter(1.0, 2.0);
    return r * Vec2{std::cos(th), std::sin(th)};
}

}  // namespace

std::vector<EstimateReport> certify_pointwise(const Domain& domain, int samples, const CertifyOptions& opt) {
    if (!domain.has_boundary()) throw ConfigError("pointwise lemmas concern obstacle exteriors");
    if (samples < 1) throw ConfigError("sample count must be positive");
    const Domain disk = Domain::exterior_unit_disk();
    std::vector<EstimateReport> out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto start = [](const std::string& name, const std::string& param) {
        EstimateReport r;
        r.name = name;
        r.parameter = param;
        return r;
    };
    auto push = [](EstimateReport& r, double param, Vec2 p, double value, double ratio) {
        r.params.push_back(param);
        r.points.push_back(p);
        r.values.push_back(value);
        r.ratios.push_back(ratio);
        r.tails.push_back(0.0);
    };

    // |x - y| / |x - y*| <= 2 (1 + R) when |x - y| <= R
    {
        EstimateReport r = start("image_distance_ratio:disk", "R");
        std::mt19937_64 rng(20240611);
        for (double R : {0.5, 1.0, 2.0, 3.0}) {
            double worst = 0.0;
            Vec2 at;
            for (int s = 0; s < samples; ++s) {
                Vec2 x = exterior_sample(rng, 1.0 + 2.0 * R);
                double rr = R * std::sqrt(unit(rng)), th = kTwoPi * unit(rng);
                Vec2 y = x + rr * Vec2{std::cos(th), std::sin(th)};
                if (norm(y) <= 1.0 || y == x) continue;
                double q = norm(x - y) / norm(x - image_point(y));
                if (q > worst) {
                    worst = q;
                    at = x;
                }
            }
            push(r, R, at, worst, worst / (2.0 * (1.0 + R)));
        }
        out.push_back(std::move(r));
    }
    // 1 / |x - y*| <= 2 when |x - y| >= 1
    {
        EstimateReport r = start("image_distance_inverse:disk", "outer");
        std::mt19937_64 rng(20240612);
        for (double outer : {2.0, 4.0, 16.0}) {
            double worst = 0.0;
            Vec2 at;
            for (int s = 0; s < samples; ++s) {
                Vec2 x = exterior_sample(rng, outer);
                Vec2 y = exterior_sample(rng, outer);
                if (norm(x - y) < 1.0) continue;
                double q = 1.0 / norm(x - image_point(y));
                if (q > worst) {
                    worst = q;
                    at = x;
                }
            }
            push(r, outer, at, worst, worst / 2.0);
        }
        out.push_back(std::move(r));
    }
    // inf |x||y| over |x - y| = R equals R - 1; the ratio (R - 1) / min stays <= 1
    {
        EstimateReport r = start("product_bound:disk", "R");
        std::mt19937_64 rng(20240613);
        for (double R : {2.0, 3.0, 5.0}) {
            double best = norm(Vec2{-(R - 1.0), 0.0}) * 1.0;
            Vec2 at{-(R - 1.0), 0.0};
            for (int s = 0; s < samples; ++s) {
                Vec2 x = exterior_sample(rng, R + 1.0);
                double th = kTwoPi * unit(rng);
                Vec2 y = x + R * Vec2{std::cos(th), std::sin(th)};
                if (norm(y) < 1.0) continue;
                double v = norm(x) * norm(y);
                if (v < best) {
                    best = v;
                    at = x;
                }
            }
            push(r, R, at, best, (R - 1.0) / best);
        }
        out.push_back(std::move(r));
    }
    // |J(x, y)| |x - y| bounded
    {
        EstimateReport r = start("kernel_decay:disk:J_Omega", "outer");
        std::mt19937_64 rng(20240614);
        for (double outer : {2.0, 8.0, 64.0}) {
            double worst = 0.0;
            Vec2 at;
            for (int s = 0; s < samples; ++s) {
                Vec2 x = exterior_sample(rng, outer);
                Vec2 y = exterior_sample(rng, outer);
                if (x == y) continue;
                double v = norm(j_kernel(disk, x, y)) * norm(x - y);
                if (v > worst) {
                    worst = v;
                    at = x;
                }
            }
            push(r, outer, at, worst, worst);
        }
        out.push_back(std::move(r));
    }
    // |D^2 T(y)| |y|^3 bounded on the fluid
    {
        auto map = domain.kind() == DomainKind::ExteriorObstacle ? domain.map() : joukowski_ellipse_map();
        const Domain dom = Domain::exterior_obstacle(map);
        EstimateReport r = start("map_second_derivative:" + dom.name(), "outer");
        std::mt19937_64 rng(20240615);
        double inner = map->obstacle_radius();
        for (double outer : {2.0 * inner, 8.0 * inner, 64.0 * inner}) {
            double worst = 0.0;
            Vec2 at;
            for (int s = 0; s < samples; ++s) {
                double rr = inner * 0.5 + (outer - inner * 0.5) * unit(rng) * unit(rng);
                double th = kTwoPi * unit(rng);
                Vec2 y = rr * Vec2{std::cos(th), std::sin(th)};
                if (!dom.contains(y)) continue;
                double n = norm(y);
                double v = frobenius(map->second_derivative(y)) * n * n * n;
                if (v > worst) {
                    worst = v;
                    at = y;
                }
            }
            push(r, outer, at, worst, worst);
        }
        out.push_back(std::move(r));
    }
    for (auto& r : out) apply_baseline(r, opt.baselines);
    return out;
}

std::vector<EstimateReport> standard_certification(const CertifyOptions& opt, int pointwise_samples) {
    const Domain plane = Domain::full_plane();
    const Domain disk = Domain::exterior_unit_disk();
    const std::vector<double> eps{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    const std::vector<double> ps{1.0, 1.25, 1.5, 1.75};
    const std::vector<double> radii{0.5, 1.0, 2.0};
    const std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    std::vector<EstimateReport> out;
    out.push_back(certify_near_l1(plane, KernelKind::DomainK, eps, {{0.0, 0.0}, {1.0, 2.0}}, opt));
    out.push_back(certify_near_l1(disk, KernelKind::DomainK, eps, {{1.5, 0.0}, {3.0, 0.0}}, opt));
    out.push_back(certify_far_l1(plane, KernelKind::DomainK, eps, {{0.0, 0.0}}, opt));
    out.push_back(certify_far_l1(disk, KernelKind::Hydrodynamic, {2.0, 4.0, 8.0}, {{1.5, 0.0}, {3.0, 0.0}}, opt));
    out.push_back(certify_rearrangement(plane, KernelKind::DomainK, ps, radii, {0.0, 0.0}, opt));
    out.push_back(certify_rearrangement(disk, KernelKind::DomainK, ps, radii, {3.0, 0.0}, opt));
    out.push_back(certify_hlog(plane, deltas, PairFamily::Rotation, opt));
    out.push_back(certify_hlog(disk, deltas, PairFamily::RadialFlow, opt));
    auto pw = certify_pointwise(Domain::exterior_obstacle(joukowski_ellipse_map()), pointwise_samples, opt);
    for (auto& r : pw) out.push_back(std::move(r));
    return out;
}

Baselines freeze_baselines(const std::vector<EstimateReport>& reports, double margin) {
    if (!(margin >= 1.0)) throw ConfigError("baseline margin must be at least 1");
    Baselines b;
    b.version = 1;
    for (const auto& r : reports) b.constants.emplace_back(r.name, r.max_ratio() * margin);
    return b;
}

void save_baselines(const Baselines& b, const std::string& path) {
    json c = json::object();
    for (const auto& [k, v] : b.constants) c[k] = v;
    json j{{"version", b.version}, {"fitted_C", b.fitted_C}, {"apriori_factor", b.apriori_factor}, {"constants", c}};
    std::ofstream os(path);
    if (!os) throw IoError("cannot write baselines: " + path);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write failed: " + path);
}

std::string estimate_json(const std::vector<EstimateReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        json rows = json::array();
        for (std::size_t i = 0; i < r.values.size(); ++i)
            rows.push_back({{r.parameter, r.params[i]},
                            {"x", {r.points[i].x1, r.points[i].x2}},
                            {"value", r.values[i]},
                            {"ratio", r.ratios[i]},
                            {"tail", r.tails[i]}});
        arr.push_back({{"name", r.name},
                       {"rows", rows},
                       {"max_ratio", r.max_ratio()},
                       {"spread", r.spread()},
                       {"fitted_constant", r.fitted_constant},
                       {"frozen", r.frozen},
                       {"verdict", r.verdict}});
    }
    return arr.dump(2) + "\n";
}

std::string estimate_csv(const std::vector<EstimateReport>& reports) {
    std::ostringstream os;
    os.precision(12);
    os << "name,parameter,param,x1,x2,value,ratio,tail\n";
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.values.size(); ++i)
            os << r.name << ',' << r.parameter << ',' << r.params[i] << ',' << r.points[i].x1 << ','
               << r.points[i].x2 << ',' << r.values[i] << ',' << r.ratios[i] << ',' << r.tails[i] << '\n';
    return os.str();
}

}  // namespace serfati
