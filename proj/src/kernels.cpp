#include "serfati/kernels.hpp"

#include <numbers>

#include "serfati/errors.hpp"

namespace serfati {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// K = perp(N): K^1 = -N^2, K^2 = N^1.
Mat2 grad_k(Vec2 z) {
    Mat2 gn = grad_n(z);
    return Mat2::from(-gn(1, 0), -gn(1, 1), gn(0, 0), gn(0, 1));
}

Tensor3 hess_k(Vec2 z) {
    Tensor3 hn = hess_n(z);
    return {-1.0 * hn[1], hn[0]};
}

// Jet in Y of K(X - Y).
KernelJet free_jet(Vec2 X, Vec2 Y) {
    Vec2 z = X - Y;
    KernelJet jet;
    jet.v = k_free(z);
    jet.g = -1.0 * grad_k(z);
    jet.h = hess_k(z);
    return jet;
}

// Jet in Y of K(X - Y*) for |Y| >= 1.
KernelJet image_jet(Vec2 X, Vec2 Y) {
    Vec2 ys = image_point(Y);
    Vec2 z = X - ys;
    Mat2 gk = grad_k(z);
    Tensor3 hk = hess_k(z);
    Mat2 dy = kTwoPi * grad_n(Y);  // dy(k, m) = d_m Y*^k
    Tensor3 hn = hess_n(Y);
    Tensor3 ddy = {kTwoPi * hn[0], kTwoPi * hn[1]};
    KernelJet jet;
    jet.v = k_free(z);
    jet.g = -1.0 * (gk * dy);
    for (int j = 0; j < 2; ++j) {
        Mat2 hj = transpose(dy) * hk[j] * dy;
        for (int k = 0; k < 2; ++k) hj = hj - gk(j, k) * ddy[k];
        jet.h[j] = hj;
    }
    return jet;
}

KernelJet disk_jet(Vec2 X, Vec2 Y, bool with_background) {
    KernelJet f = free_jet(X, Y);
    KernelJet im = image_jet(X, Y);
    KernelJet jet;
    jet.v = f.v - im.v;
    if (with_background) jet.v += k_free(X);
    jet.g = f.g - im.g;
    jet.h = {f.h[0] - im.h[0], f.h[1] - im.h[1]};
    return jet;
}

bool is_identity(const Domain& d) {
    return d.kind() == DomainKind::ExteriorUnitDisk || d.map()->name() == "identity";
}

}  // namespace

Cutoff::Cutoff(double c_inner, double c_outer) : c_in_(c_inner), c_out_(c_outer) {
    if (!(c_inner > 0.0) || !(c_outer > c_inner))
        throw ConfigError("cutoff needs 0 < c_inner < c_outer");
}

void Cutoff::bridge(double s, double& a, double& da, double& dda) const {
    // a = 1 / (1 + exp(E)), E = 1/(1-s) - 1/s
    double E = 1.0 / (1.0 - s) - 1.0 / s;
    a = 1.0 / (1.0 + std::exp(E));
    double c = std::cosh(0.5 * E);
    double aa = 1.0 / (4.0 * c * c);  // a (1 - a)
    if (aa == 0.0 || !std::isfinite(aa)) {
        da = 0.0;
        dda = 0.0;
        return;
    }
    double e1 = 1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / (s * s);
    double e2 = 2.0 / ((1.0 - s) * (1.0 - s) * (1.0 - s)) - 2.0 / (s * s * s);
    da = -aa * e1;
    dda = -da * (1.0 - 2.0 * a) * e1 - aa * e2;
}

double Cutoff::profile(double r) const {
    if (r <= c_in_) return 1.0;
    if (r >= c_out_) return 0.0;
    double a, da, dda;
    bridge((r - c_in_) / (c_out_ - c_in_), a, da, dda);
    return a;
}

double Cutoff::d1(double r) const {
    if (r <= c_in_ || r >= c_out_) return 0.0;
    double L = c_out_ - c_in_;
    double a, da, dda;
    bridge((r - c_in_) / L, a, da, dda);
    return da / L;
}

double Cutoff::d2(double r) const {
    if (r <= c_in_ || r >= c_out_) return 0.0;
    double L = c_out_ - c_in_;
    double a, da, dda;
    bridge((r - c_in_) / L, a, da, dda);
    return dda / (L * L);
}

double cutoff_eval(const Cutoff& c, double eps, Vec2 v) {
    if (!(eps > 0.0)) throw ConfigError("cutoff scale must be positive");
    return c.profile(norm(v) / eps);
}

Vec2 cutoff_grad(const Cutoff& c, double eps, Vec2 v) {
    if (!(eps > 0.0)) throw ConfigError("cutoff scale must be positive");
    double r = norm(v);
    double s = r / eps;
    if (s <= c.c_inner() || s >= c.c_outer()) return {};
    return (c.d1(s) / (eps * r)) * v;
}

Mat2 cutoff_hess(const Cutoff& c, double eps, Vec2 v) {
    if (!(eps > 0.0)) throw ConfigError("cutoff scale must be positive");
    double r = norm(v);
    double s = r / eps;
    if (s <= c.c_inner() || s >= c.c_outer()) return {};
    Vec2 e = v / r;
    double a1 = c.d1(s) / eps;
    double a2 = c.d2(s) / (eps * eps);
    Mat2 h;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double ee = e[i] * e[j];
            h(i, j) = a2 * ee + a1 * ((i == j ? 1.0 : 0.0) - ee) / r;
        }
    return h;
}

std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::FreeSpace: return "K";
        case KernelKind::DomainK: return "K_Omega";
        case KernelKind::Hydrodynamic: return "J_Omega";
        case KernelKind::Background: return "Kbar_Omega";
        case KernelKind::ImageRemainder: return "L";
    }
    return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "K") return KernelKind::FreeSpace;
    if (s == "K_Omega" || s == "k") return KernelKind::DomainK;
    if (s == "J_Omega" || s == "j" || s == "J") return KernelKind::Hydrodynamic;
    if (s == "Kbar_Omega") return KernelKind::Background;
    if (s == "L") return KernelKind::ImageRemainder;
    throw ConfigError("unknown kernel kind: " + s);
}

Vec2 k_free(Vec2 x) {
    double r2 = norm2(x);
    if (r2 == 0.0) throw SingularityError("k_free evaluated at the origin");
    return perp(x) / (kTwoPi * r2);
}

Vec2 k_domain(const Domain& domain, Vec2 x, Vec2 y) {
    if (x == y) throw SingularityError("k_domain at coincident points");
    switch (domain.kind()) {
        case DomainKind::FullPlane: return k_free(x - y);
        case DomainKind::ExteriorUnitDisk: return k_free(x - y) - k_free(x - image_point(y));
        case DomainKind::ExteriorObstacle: {
            if (is_identity(domain)) return k_free(x - y) - k_free(x - image_point(y));
            const auto& T = *domain.map();
            Vec2 X = T.forward(x), Y = T.forward(y);
            Vec2 kd = k_free(X - Y) - k_free(X - image_point(Y));
            return transpose(T.jacobian(x)) * kd;
        }
    }
    return {};
}

Vec2 kbar(const Domain& domain, Vec2 x) {
    switch (domain.kind()) {
        case DomainKind::FullPlane: return {};
        case DomainKind::ExteriorUnitDisk: return k_free(x);
        case DomainKind::ExteriorObstacle: {
            if (is_identity(domain)) return k_free(x);
            const auto& T = *domain.map();
            return transpose(T.jacobian(x)) * k_free(T.forward(x));
        }
    }
    return {};
}

Vec2 j_kernel(const Domain& domain, Vec2 x, Vec2 y) {
    return k_domain(domain, x, y) + kbar(domain, x);
}

Vec2 l_kernel(Vec2 x, Vec2 y) {
    Vec2 ys = image_point(y);
    if (x == ys) throw SingularityError("l_kernel: x coincides with the image point");
    return k_free(x - ys) - k_free(x);
}

Vec2 kernel_value(const Domain& domain, KernelKind kind, Vec2 x, Vec2 y) {
    switch (kind) {
        case KernelKind::FreeSpace: return k_free(x - y);
        case KernelKind::DomainK: return k_domain(domain, x, y);
        case KernelKind::Hydrodynamic: return j_kernel(domain, x, y);
        case KernelKind::Background: return kbar(domain, x);
        case KernelKind::ImageRemainder: return l_kernel(x, y);
    }
    return {};
}

Mat2 grad_n(Vec2 z) {
    double r2 = norm2(z);
    if (r2 == 0.0) throw SingularityError("grad_n at the origin");
    double r4 = r2 * r2;
    Mat2 g;
    for (int j = 0; j < 2; ++j)
        for (int p = 0; p < 2; ++p)
            g(j, p) = (j == p ? 1.0 / (kTwoPi * r2) : 0.0) - z[j] * z[p] / (kPi * r4);
    return g;
}

Tensor3 hess_n(Vec2 z) {
    double r2 = norm2(z);
    if (r2 == 0.0) throw SingularityError("hess_n at the origin");
    double r4 = r2 * r2, r6 = r4 * r2;
    Tensor3 t;
    for (int j = 0; j < 2; ++j)
        for (int m = 0; m < 2; ++m)
            for (int p = 0; p < 2; ++p) {
                double lin = (j == p ? z[m] : 0.0) + (j == m ? z[p] : 0.0) + (m == p ? z[j] : 0.0);
                t[j](m, p) = -lin / (kPi * r4) + 4.0 * z[j] * z[m] * z[p] / (kPi * r6);
            }
    return t;
}

KernelJet kernel_jet(const Domain& domain, KernelKind kind, Vec2 x, Vec2 y) {
    if (x == y) throw SingularityError("kernel_jet at coincident points");
    bool background = kind == KernelKind::Hydrodynamic;
    if (kind != KernelKind::DomainK && kind != KernelKind::Hydrodynamic)
        throw ConfigError("kernel_jet supports K_Omega and J_Omega only");
    switch (domain.kind()) {
        case DomainKind::FullPlane: return free_jet(x, y);
        case DomainKind::ExteriorUnitDisk: return disk_jet(x, y, background);
        case DomainKind::ExteriorObstacle: {
            if (is_identity(domain)) return disk_jet(x, y, background);
            const auto& T = *domain.map();
            Vec2 X = T.forward(x), Y = T.forward(y);
            KernelJet w = disk_jet(X, Y, background);
            Mat2 A = transpose(T.jacobian(x));
            Mat2 P = T.jacobian(y);
            Tensor3 d2 = T.second_derivative(y);
            KernelJet jet;
            jet.v = A * w.v;
            jet.g = A * w.g * P;
            Tensor3 hi;
            for (int i = 0; i < 2; ++i) {
                hi[i] = transpose(P) * w.h[i] * P;
                for (int k = 0; k < 2; ++k) hi[i] = hi[i] + w.g(i, k) * d2[k];
            }
            for (int j = 0; j < 2; ++j) jet.h[j] = A(j, 0) * hi[0] + A(j, 1) * hi[1];
            return jet;
        }
    }
    return {};
}

std::array<Mat2, 2> farfield_weights(const Domain& domain, const Cutoff& cutoff, double eps,
                                     Vec2 x, Vec2 y, KernelKind kind) {
    if (!(eps > 0.0)) throw SingularityError("farfield_weight needs eps > 0");
    std::array<Mat2, 2> out{};
    Vec2 z = x - y;
    double s = norm(z) / eps;
    if (s <= cutoff.c_inner()) return out;
    KernelJet jet = kernel_jet(domain, kind, x, y);
    double a = cutoff.profile(s);
    Vec2 ga = cutoff_grad(cutoff, eps, z);
    Mat2 ha = cutoff_hess(cutoff, eps, z);
    for (int j = 0; j < 2; ++j) {
        Mat2 H;
        for (int m = 0; m < 2; ++m)
            for (int p = 0; p < 2; ++p)
                H(m, p) = (1.0 - a) * jet.h[j](m, p) + ga[m] * jet.g(j, p) + ga[p] * jet.g(j, m) -
                          ha(m, p) * jet.v[j];
        // (m, p) entry of grad grad^perp: perp(v) = (-v2, v1) on the p index
        out[j] = Mat2::from(-H(0, 1), H(0, 0), -H(1, 1), H(1, 0));
    }
    return out;
}

Mat2 farfield_weight(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x, Vec2 y,
                     int j, KernelKind kind) {
    if (j < 0 || j > 1) throw ConfigError("component index must be 0 or 1");
    return farfield_weights(domain, cutoff, eps, x, y, kind)[j];
}

KernelKind identity_kernel(const Domain& domain) {
    return domain.kind() == DomainKind::FullPlane ? KernelKind::DomainK : KernelKind::Hydrodynamic;
}

}  // namespace serfati
