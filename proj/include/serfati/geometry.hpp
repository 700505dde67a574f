#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace serfati {

struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double a, double b) : x1(a), x2(b) {}

    constexpr Vec2& operator+=(Vec2 o) { x1 += o.x1; x2 += o.x2; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x1 -= o.x1; x2 -= o.x2; return *this; }
    constexpr Vec2& operator*=(double s) { x1 *= s; x2 *= s; return *this; }
    constexpr double operator[](int i) const { return i == 0 ? x1 : x2; }
    constexpr double& operator[](int i) { return i == 0 ? x1 : x2; }
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x1, -a.x2}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x1, s * a.x2}; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x1 / s, a.x2 / s}; }
constexpr bool operator==(Vec2 a, Vec2 b) { return a.x1 == b.x1 && a.x2 == b.x2; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x1, a.x2); }

/// Counterclockwise quarter turn, (x1, x2) -> (-x2, x1).
constexpr Vec2 perp(Vec2 v) { return {-v.x2, v.x1}; }

/// Counterclockwise rotation by angle a.
inline Vec2 rotate(Vec2 x, double a) {
    double c = std::cos(a), s = std::sin(a);
    return {c * x.x1 - s * x.x2, s * x.x1 + c * x.x2};
}

/// Reflection across the unit circle, y / |y|^2. Throws DomainError at 0.
Vec2 image_point(Vec2 y);

/// Real 2x2 matrix, row-major: m[i][j].
struct Mat2 {
    std::array<std::array<double, 2>, 2> m{{{0.0, 0.0}, {0.0, 0.0}}};

    constexpr double operator()(int i, int j) const { return m[i][j]; }
    constexpr double& operator()(int i, int j) { return m[i][j]; }

    static constexpr Mat2 identity() {
        Mat2 r;
        r.m[0][0] = 1.0;
        r.m[1][1] = 1.0;
        return r;
    }
    static constexpr Mat2 from(double a11, double a12, double a21, double a22) {
        Mat2 r;
        r.m[0][0] = a11; r.m[0][1] = a12;
        r.m[1][0] = a21; r.m[1][1] = a22;
        return r;
    }
    /// Real form of multiplication by the complex number c.
    static Mat2 from_complex(std::complex<double> c) {
        return from(c.real(), -c.imag(), c.imag(), c.real());
    }
};

constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][j] + b.m[i][j];
    return r;
}
constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][j] - b.m[i][j];
    return r;
}
constexpr Mat2 operator*(double s, const Mat2& a) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.m[i][j] = s * a.m[i][j];
    return r;
}
constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j];
    return r;
}
constexpr Vec2 operator*(const Mat2& a, Vec2 v) {
    return {a.m[0][0] * v.x1 + a.m[0][1] * v.x2, a.m[1][0] * v.x1 + a.m[1][1] * v.x2};
}
constexpr Mat2 transpose(const Mat2& a) {
    return Mat2::from(a.m[0][0], a.m[1][0], a.m[0][1], a.m[1][1]);
}
inline double frobenius(const Mat2& a) {
    return std::sqrt(a.m[0][0] * a.m[0][0] + a.m[0][1] * a.m[0][1] + a.m[1][0] * a.m[1][0] +
                     a.m[1][1] * a.m[1][1]);
}

/// Rank-3 array t[k](i, j) holding second derivatives d_i d_j f^k.
using Tensor3 = std::array<Mat2, 2>;

inline double frobenius(const Tensor3& t) {
    double a = frobenius(t[0]);
    double b = frobenius(t[1]);
    return std::sqrt(a * a + b * b);
}

using Complex = std::complex<double>;
inline Complex to_complex(Vec2 v) { return {v.x1, v.x2}; }
inline Vec2 to_vec(Complex c) { return {c.real(), c.imag()}; }

/// Biholomorphism T from the closure of an exterior domain onto the closed
/// exterior of the unit disk. Derivatives are closed form.
class ConformalMap {
public:
    virtual ~ConformalMap() = default;

    virtual std::string name() const = 0;
    virtual Complex forward_c(Complex z) const = 0;
    virtual Complex inverse_c(Complex w) const = 0;
    /// Complex derivative T'(z).
    virtual Complex derivative_c(Complex z) const = 0;
    /// Complex second derivative T''(z).
    virtual Complex second_derivative_c(Complex z) const = 0;
    /// Derivative of the inverse map at w.
    virtual Complex inverse_derivative_c(Complex w) const = 0;
    /// Upper and lower bi-Lipschitz constants on the fluid domain.
    virtual double lip_upper() const = 0;
    virtual double lip_lower() const = 0;
    /// Radius of a disk centred at 0 containing the obstacle.
    virtual double obstacle_radius() const = 0;
    /// Semi-axes (A, B) when the obstacle is the ellipse (x/A)^2 + (y/B)^2 <= 1.
    virtual std::pair<double, double> ellipse_axes() const = 0;

    Vec2 forward(Vec2 x) const { return to_vec(forward_c(to_complex(x))); }
    Vec2 inverse(Vec2 w) const { return to_vec(inverse_c(to_complex(w))); }
    Mat2 jacobian(Vec2 x) const { return Mat2::from_complex(derivative_c(to_complex(x))); }
    Mat2 inverse_jacobian(Vec2 w) const {
        return Mat2::from_complex(inverse_derivative_c(to_complex(w)));
    }
    Tensor3 second_derivative(Vec2 x) const;
};

/// T = identity on the exterior of the unit disk.
std::shared_ptr<const ConformalMap> identity_map();

/// Exterior of the ellipse z = scale (w + m / w), |w| = 1, with 0 <= m < 1.
/// Semi-axes scale (1 + m) and scale (1 - m).
std::shared_ptr<const ConformalMap> joukowski_ellipse_map(double scale = 1.25, double m = 0.2);

enum class DomainKind { FullPlane, ExteriorUnitDisk, ExteriorObstacle };

struct BoundaryNode {
    double sigma = 0.0;  ///< arc length from the base point
    Vec2 y;              ///< boundary point
    Vec2 tau;            ///< unit tangent, counterclockwise
    Vec2 n;              ///< unit normal pointing out of the fluid, n = perp(tau)
};

/// Open sub-intervals of a ray parameter range that lie in the fluid.
using Intervals = std::vector<std::pair<double, double>>;

class Domain {
public:
    static Domain full_plane();
    static Domain exterior_unit_disk();
    static Domain exterior_obstacle(std::shared_ptr<const ConformalMap> map);

    DomainKind kind() const { return kind_; }
    bool has_boundary() const { return kind_ != DomainKind::FullPlane; }
    /// Conformal map; the identity for the disk exterior, null for the plane.
    const std::shared_ptr<const ConformalMap>& map() const { return map_; }
    std::string name() const;

    /// T(x); identity for the plane.
    Vec2 to_disk(Vec2 x) const;
    /// x lies in the closed fluid region.
    bool contains(Vec2 x) const;
    /// Map a point to the boundary along the conformal radial line.
    Vec2 project_to_boundary(Vec2 x) const;
    /// Signed distance estimate to the boundary (positive in the fluid).
    double boundary_distance(Vec2 x) const;
    double boundary_length() const { return length_; }

    /// Restrict [r0, r1] along c + r e (|e| = 1) to the fluid.
    Intervals clip_ray(Vec2 c, Vec2 e, double r0, double r1) const;
    /// Angles of rays from c tangent to the obstacle, sorted in [0, 2 pi).
    std::vector<double> tangent_angles(Vec2 c) const;

    /// Boundary point at arc length sigma.
    BoundaryNode boundary_at(double sigma) const;

private:
    DomainKind kind_ = DomainKind::FullPlane;
    std::shared_ptr<const ConformalMap> map_;
    double length_ = 0.0;
    bool unit_circle_ = false;
    // arc length table over the map angle, for non-circular boundaries
    std::shared_ptr<const std::vector<double>> arc_table_;

    double angle_for_arclength(double sigma) const;
};

/// Equispaced arc-length nodes; empty for the full plane.
std::vector<BoundaryNode> boundary_sample(const Domain& domain, int m);

}  // namespace serfati
