#pragma once

#include <array>
#include <string>

#include "serfati/geometry.hpp"

namespace serfati {

/// Radially symmetric cutoff a with a = 1 on [0, c_inner], a = 0 on
/// [c_outer, inf) and a C-infinity monotone bridge in between.
class Cutoff {
public:
    Cutoff() = default;
    Cutoff(double c_inner, double c_outer);
    static Cutoff standard() { return {0.5, 1.0}; }

    double c_inner() const { return c_in_; }
    double c_outer() const { return c_out_; }
    double profile(double r) const;
    double d1(double r) const;
    double d2(double r) const;

private:
    double c_in_ = 0.5;
    double c_out_ = 1.0;
    // value, first and second derivative of the bridge in s in [0, 1]
    void bridge(double s, double& a, double& da, double& dda) const;
};

/// a_eps(v) = a(|v| / eps).
double cutoff_eval(const Cutoff& c, double eps, Vec2 v);
Vec2 cutoff_grad(const Cutoff& c, double eps, Vec2 v);
Mat2 cutoff_hess(const Cutoff& c, double eps, Vec2 v);

enum class KernelKind { FreeSpace, DomainK, Hydrodynamic, Background, ImageRemainder };

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

/// K(x) = perp(x) / (2 pi |x|^2).
Vec2 k_free(Vec2 x);
/// Dirichlet Biot-Savart kernel of the domain.
Vec2 k_domain(const Domain& domain, Vec2 x, Vec2 y);
/// Circulation-one harmonic field; zero for the full plane.
Vec2 kbar(const Domain& domain, Vec2 x);
/// k_domain + kbar.
Vec2 j_kernel(const Domain& domain, Vec2 x, Vec2 y);
/// K(x - y*) - K(x) for the disk exterior.
Vec2 l_kernel(Vec2 x, Vec2 y);
/// Dispatch on kind; FreeSpace and ImageRemainder ignore the domain.
Vec2 kernel_value(const Domain& domain, KernelKind kind, Vec2 x, Vec2 y);

/// d_p N^j for N(z) = z / (2 pi |z|^2), returned as g(j, p).
Mat2 grad_n(Vec2 z);
/// d_m d_p N^j, returned as t[j](m, p).
Tensor3 hess_n(Vec2 z);

/// Value and y-derivatives of a vector kernel V(x, y): g(j, m) = d_{y_m} V^j,
/// h[j](m, p) = d_{y_m} d_{y_p} V^j.
struct KernelJet {
    Vec2 v;
    Mat2 g;
    Tensor3 h;
};

/// Jet in y of K_Omega (DomainK) or J_Omega (Hydrodynamic).
KernelJet kernel_jet(const Domain& domain, KernelKind kind, Vec2 x, Vec2 y);

/// Entries (m, p) of grad_y grad_y^perp [(1 - a_eps(x - y)) V^j(x, y)],
/// where the perp acts on the second index. V is K_Omega unless kind says J.
Mat2 farfield_weight(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x, Vec2 y,
                     int j, KernelKind kind = KernelKind::DomainK);

/// Both components of the far-field weight at once.
std::array<Mat2, 2> farfield_weights(const Domain& domain, const Cutoff& cutoff, double eps,
                                     Vec2 x, Vec2 y, KernelKind kind);

/// Weight contracted against a symmetric tensor q = u (x) u:
/// W : q = s11 q11 + s22 q22 + s12 q12.
struct SymWeight {
    double s11 = 0.0;
    double s22 = 0.0;
    double s12 = 0.0;
};

inline SymWeight symmetrize(const Mat2& w) { return {w(0, 0), w(1, 1), w(0, 1) + w(1, 0)}; }
inline double contract(const SymWeight& s, Vec2 u) {
    return s.s11 * u.x1 * u.x1 + s.s22 * u.x2 * u.x2 + s.s12 * u.x1 * u.x2;
}
inline double contract(const Mat2& w, Vec2 u) {
    return w(0, 0) * u.x1 * u.x1 + w(0, 1) * u.x1 * u.x2 + w(1, 0) * u.x2 * u.x1 +
           w(1, 1) * u.x2 * u.x2;
}

/// Kernel used by the identity in a given domain: K for the plane, J outside obstacles.
KernelKind identity_kernel(const Domain& domain);

}  // namespace serfati
