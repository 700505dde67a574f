#include "serfati/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "serfati/errors.hpp"

namespace serfati {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

class IdentityMap final : public ConformalMap {
public:
    std::string name() const override { return "identity"; }
    Complex forward_c(Complex z) const override { return z; }
    Complex inverse_c(Complex w) const override { return w; }
    Complex derivative_c(Complex) const override { return {1.0, 0.0}; }
    Complex second_derivative_c(Complex) const override { return {0.0, 0.0}; }
    Complex inverse_derivative_c(Complex) const override { return {1.0, 0.0}; }
    double lip_upper() const override { return 1.0; }
    double lip_lower() const override { return 1.0; }
    double obstacle_radius() const override { return 1.0; }
    std::pair<double, double> ellipse_axes() const override { return {1.0, 1.0}; }
};

// z = R (w + m / w). The larger root of w^2 - (z/R) w + m = 0 is the
// exterior branch; inside the ellipse it has modulus below one.
class JoukowskiEllipseMap final : public ConformalMap {
public:
    JoukowskiEllipseMap(double scale, double m) : R_(scale), m_(m) {
        if (!(scale > 0.0) || !(m >= 0.0) || !(m < 1.0))
            throw ConfigError("joukowski map needs scale > 0 and 0 <= m < 1");
    }
    std::string name() const override { return "joukowski-ellipse"; }
    Complex forward_c(Complex z) const override {
        Complex zeta = z / R_;
        Complex disc = std::sqrt(zeta * zeta - 4.0 * m_);
        Complex a = 0.5 * (zeta + disc);
        Complex b = 0.5 * (zeta - disc);
        Complex big = std::abs(a) >= std::abs(b) ? a : b;
        // one Newton step polishes the root
        Complex f = big * big - zeta * big + m_;
        Complex fp = 2.0 * big - zeta;
        if (std::abs(fp) > 1e-300) big -= f / fp;
        return big;
    }
    Complex inverse_c(Complex w) const override { return R_ * (w + m_ / w); }
    Complex derivative_c(Complex z) const override { return 1.0 / g(forward_c(z)); }
    Complex second_derivative_c(Complex z) const override {
        Complex w = forward_c(z);
        Complex gw = g(w);
        return -2.0 * R_ * m_ / (w * w * w) / (gw * gw * gw);
    }
    Complex inverse_derivative_c(Complex w) const override { return g(w); }
    // Convex obstacle: geodesics around it are at most pi/2 times the chord.
    double lip_upper() const override { return 0.5 * kPi / (R_ * (1.0 - m_)); }
    double lip_lower() const override { return 2.0 / (kPi * R_ * (1.0 + m_)); }
    double obstacle_radius() const override { return R_ * (1.0 + m_); }
    std::pair<double, double> ellipse_axes() const override {
        return {R_ * (1.0 + m_), R_ * (1.0 - m_)};
    }

private:
    double R_;
    double m_;
    Complex g(Complex w) const { return R_ * (1.0 - m_ / (w * w)); }
};

// Four-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 4> kGl4x = {0.0694318442029737, 0.3300094782075719,
                                         0.6699905217924281, 0.9305681557970263};
constexpr std::array<double, 4> kGl4w = {0.1739274225687269, 0.3260725774312731,
                                         0.3260725774312731, 0.1739274225687269};

constexpr int kArcCells = 2048;

}  // namespace

Vec2 image_point(Vec2 y) {
    double r2 = norm2(y);
    if (r2 == 0.0) throw DomainError("image_point: zero input");
    return y / r2;
}

Tensor3 ConformalMap::second_derivative(Vec2 x) const {
    Complex f2 = second_derivative_c(to_complex(x));
    double g = f2.real(), d = f2.imag();
    // d11 f = f'', d12 f = i f'', d22 f = -f''
    Tensor3 t;
    t[0] = Mat2::from(g, -d, -d, -g);
    t[1] = Mat2::from(d, g, g, -d);
    return t;
}

std::shared_ptr<const ConformalMap> identity_map() {
    static const auto m = std::make_shared<const IdentityMap>();
    return m;
}

std::shared_ptr<const ConformalMap> joukowski_ellipse_map(double scale, double m) {
    return std::make_shared<const JoukowskiEllipseMap>(scale, m);
}

Domain Domain::full_plane() {
    Domain d;
    d.kind_ = DomainKind::FullPlane;
    return d;
}

Domain Domain::exterior_unit_disk() {
    Domain d;
    d.kind_ = DomainKind::ExteriorUnitDisk;
    d.map_ = identity_map();
    d.unit_circle_ = true;
    d.length_ = kTwoPi;
    return d;
}

Domain Domain::exterior_obstacle(std::shared_ptr<const ConformalMap> map) {
    if (!map) throw ConfigError("exterior_obstacle requires a conformal map");
    Domain d;
    d.kind_ = DomainKind::ExteriorObstacle;
    d.map_ = std::move(map);
    auto [A, B] = d.map_->ellipse_axes();
    if (A == 1.0 && B == 1.0 && d.map_->name() == "identity") {
        d.unit_circle_ = true;
        d.length_ = kTwoPi;
        return d;
    }
    auto table = std::make_shared<std::vector<double>>(kArcCells + 1, 0.0);
    const double dphi = kTwoPi / kArcCells;
    for (int k = 0; k < kArcCells; ++k) {
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) {
            double phi = (k + kGl4x[q]) * dphi;
            acc += kGl4w[q] * std::abs(d.map_->inverse_derivative_c(std::polar(1.0, phi)));
        }
        (*table)[k + 1] = (*table)[k] + acc * dphi;
    }
    d.length_ = table->back();
    d.arc_table_ = table;
    return d;
}

std::string Domain::name() const {
    switch (kind_) {
        case DomainKind::FullPlane: return "plane";
        case DomainKind::ExteriorUnitDisk: return "disk";
        case DomainKind::ExteriorObstacle: return "obstacle:" + map_->name();
    }
    return "unknown";
}

Vec2 Domain::to_disk(Vec2 x) const {
    if (kind_ == DomainKind::FullPlane || unit_circle_) return x;
    return map_->forward(x);
}

bool Domain::contains(Vec2 x) const {
    if (kind_ == DomainKind::FullPlane) return true;
    auto [A, B] = map_->ellipse_axes();
    double q = (x.x1 / A) * (x.x1 / A) + (x.x2 / B) * (x.x2 / B);
    return q >= 1.0;
}

Vec2 Domain::project_to_boundary(Vec2 x) const {
    if (kind_ == DomainKind::FullPlane) return x;
    if (unit_circle_) {
        double r = norm(x);
        return r > 0.0 ? x / r : Vec2{1.0, 0.0};
    }
    Complex w = map_->forward_c(to_complex(x));
    double r = std::abs(w);
    return map_->inverse(to_vec(r > 0.0 ? w / r : Complex{1.0, 0.0}));
}

double Domain::boundary_distance(Vec2 x) const {
    if (kind_ == DomainKind::FullPlane) return std::numeric_limits<double>::infinity();
    if (unit_circle_) return norm(x) - 1.0;
    // coarse scan in the map angle, then Newton on |x - y(phi)|^2
    const int m = 256;
    double best = std::numeric_limits<double>::infinity(), best_phi = 0.0;
    for (int k = 0; k < m; ++k) {
        double phi = kTwoPi * k / m;
        double d = norm2(x - map_->inverse(Vec2{std::cos(phi), std::sin(phi)}));
        if (d < best) { best = d; best_phi = phi; }
    }
    double phi = best_phi;
    for (int it = 0; it < 30; ++it) {
        Complex w = std::polar(1.0, phi);
        Complex y = map_->inverse_c(w);
        Complex dy = map_->inverse_derivative_c(w) * Complex(0.0, 1.0) * w;
        // second derivative of y(phi)
        double h = 1e-5;
        Complex yp = map_->inverse_c(std::polar(1.0, phi + h));
        Complex ym = map_->inverse_c(std::polar(1.0, phi - h));
        Complex d2y = (yp - 2.0 * y + ym) / (h * h);
        Complex r = y - to_complex(x);
        double f1 = 2.0 * (r.real() * dy.real() + r.imag() * dy.imag());
        double f2 = 2.0 * (std::norm(dy) + r.real() * d2y.real() + r.imag() * d2y.imag());
        if (f2 <= 0.0) break;
        double step = f1 / f2;
        phi -= step;
        if (std::abs(step) < 1e-14) break;
    }
    double d = norm(x - map_->inverse(Vec2{std::cos(phi), std::sin(phi)}));
    d = std::min(d, std::sqrt(best));
    return contains(x) ? d : -d;
}

Intervals Domain::clip_ray(Vec2 c, Vec2 e, double r0, double r1) const {
    Intervals out;
    if (r1 <= r0) return out;
    if (kind_ == DomainKind::FullPlane) {
        out.emplace_back(r0, r1);
        return out;
    }
    auto [A, B] = map_->ellipse_axes();
    double ia = 1.0 / (A * A), ib = 1.0 / (B * B);
    double qa = e.x1 * e.x1 * ia + e.x2 * e.x2 * ib;
    double qb = 2.0 * (c.x1 * e.x1 * ia + c.x2 * e.x2 * ib);
    double qc = c.x1 * c.x1 * ia + c.x2 * c.x2 * ib - 1.0;
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) {
        out.emplace_back(r0, r1);
        return out;
    }
    double sq = std::sqrt(disc);
    // stable roots
    double qq = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
    double t1 = qq / qa;
    double t2 = qq != 0.0 ? qc / qq : -t1;
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > r0) out.emplace_back(r0, std::min(t1, r1));
    if (t2 < r1) out.emplace_back(std::max(t2, r0), r1);
    Intervals cleaned;
    for (auto& iv : out)
        if (iv.second > iv.first) cleaned.push_back(iv);
    return cleaned;
}

std::vector<double> Domain::tangent_angles(Vec2 c) const {
    std::vector<double> out;
    if (kind_ == DomainKind::FullPlane) return out;
    auto [A, B] = map_->ellipse_axes();
    double ia = 1.0 / (A * A), ib = 1.0 / (B * B);
    double qc = c.x1 * c.x1 * ia + c.x2 * c.x2 * ib - 1.0;
    if (qc < -1e-12) return out;  // centre inside the obstacle
    // tangency: (p.e)^2 = qc (e^T D e), a quadratic form e^T M e = 0
    double p1 = c.x1 * ia, p2 = c.x2 * ib;
    double m11 = p1 * p1 - qc * ia, m22 = p2 * p2 - qc * ib, m12 = p1 * p2;
    double half_diff = 0.5 * (m11 - m22);
    double rr = std::hypot(half_diff, m12);
    if (rr == 0.0) return out;
    double arg = std::clamp(-0.5 * (m11 + m22) / rr, -1.0, 1.0);
    double phi0 = std::atan2(m12, half_diff);
    double ac = std::acos(arg);
    std::vector<double> cand;
    for (double s : {1.0, -1.0}) {
        double th = 0.5 * (phi0 + s * ac);
        cand.push_back(th);
        cand.push_back(th + kPi);
    }
    for (double th : cand) {
        Vec2 e{std::cos(th), std::sin(th)};
        double qb = 2.0 * (c.x1 * e.x1 * ia + c.x2 * e.x2 * ib);
        bool on_boundary = qc <= 1e-12;
        if (on_boundary || qb < 0.0) {
            double a = std::fmod(th, kTwoPi);
            if (a < 0.0) a += kTwoPi;
            out.push_back(a);
        }
    }
    std::sort(out.begin(), out.end());
    std::vector<double> uniq;
    for (double a : out)
        if (uniq.empty() || a - uniq.back() > 1e-12) uniq.push_back(a);
    if (uniq.size() > 1 && uniq.front() + kTwoPi - uniq.back() <= 1e-12) uniq.pop_back();
    return uniq;
}

double Domain::angle_for_arclength(double sigma) const {
    const auto& tab = *arc_table_;
    double s = std::fmod(sigma, length_);
    if (s < 0.0) s += length_;
    auto it = std::upper_bound(tab.begin(), tab.end(), s);
    int k = std::clamp(static_cast<int>(it - tab.begin()) - 1, 0, kArcCells - 1);
    const double dphi = kTwoPi / kArcCells;
    double phi0 = k * dphi;
    auto speed = [&](double phi) { return std::abs(map_->inverse_derivative_c(std::polar(1.0, phi))); };
    auto partial = [&](double phi) {
        double acc = 0.0, len = phi - phi0;
        for (int q = 0; q < 4; ++q) acc += kGl4w[q] * speed(phi0 + kGl4x[q] * len);
        return tab[k] + acc * len;
    };
    double phi = phi0 + (s - tab[k]) / speed(phi0 + 0.5 * dphi);
    for (int it2 = 0; it2 < 20; ++it2) {
        double step = (partial(phi) - s) / speed(phi);
        phi -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return phi;
}

BoundaryNode Domain::boundary_at(double sigma) const {
    BoundaryNode b;
    b.sigma = sigma;
    if (kind_ == DomainKind::FullPlane) return b;
    if (unit_circle_) {
        b.y = {std::cos(sigma), std::sin(sigma)};
        b.tau = {-std::sin(sigma), std::cos(sigma)};
    } else {
        double phi = angle_for_arclength(sigma);
        Complex w = std::polar(1.0, phi);
        b.y = to_vec(map_->inverse_c(w));
        Complex dy = map_->inverse_derivative_c(w) * Complex(0.0, 1.0) * w;
        b.tau = to_vec(dy / std::abs(dy));
    }
    b.n = perp(b.tau);
    return b;
}

std::vector<BoundaryNode> boundary_sample(const Domain& domain, int m) {
    std::vector<BoundaryNode> out;
    if (!domain.has_boundary()) return out;
    if (m < 4) throw ConfigError("boundary_sample needs at least 4 nodes");
    out.reserve(m);
    double L = domain.boundary_length();
    for (int k = 0; k < m; ++k) out.push_back(domain.boundary_at(L * k / m));
    return out;
}

}  // namespace serfati
