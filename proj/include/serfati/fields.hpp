#pragma once

#include <functional>
#include <string>
#include <vector>

#include "serfati/geometry.hpp"
#include "serfati/kernels.hpp"

namespace serfati {

using ScalarFn = std::function<double(Vec2)>;
using VectorFn = std::function<Vec2(Vec2)>;

/// Uniform node set origin + (i h, j h), 0 <= i < nx, 0 <= j < ny.
struct Grid {
    Vec2 origin;
    double h = 1.0;
    int nx = 0;
    int ny = 0;

    /// Square window [-half_width, half_width]^2 with spacing h.
    static Grid square(double half_width, double h);

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    Vec2 node(int i, int j) const { return {origin.x1 + i * h, origin.x2 + j * h}; }
    Vec2 node(std::size_t k) const { return node(static_cast<int>(k % nx), static_cast<int>(k / nx)); }
    Vec2 upper() const { return node(nx - 1, ny - 1); }
    /// x lies in the closed window spanned by the nodes.
    bool inside(Vec2 x) const;
    bool same_as(const Grid& o) const;
};

/// Node values with tensor cubic Lagrange interpolation (4 x 4 stencil,
/// shifted one-sided at the window edges).
template <class T>
struct GridField {
    Grid grid;
    std::vector<T> data;

    GridField() = default;
    explicit GridField(const Grid& g, T fill = T{}) : grid(g), data(g.size(), fill) {}

    T& at(int i, int j) { return data[grid.index(i, j)]; }
    const T& at(int i, int j) const { return data[grid.index(i, j)]; }
    /// Requires grid.inside(x) and at least 4 nodes per direction.
    T interpolate(Vec2 x) const;
};

extern template struct GridField<double>;
extern template struct GridField<Vec2>;

/// Lagrange weights of the 4-node stencil at local coordinate t (nodes 0..3).
void cubic_weights(double t, double w[4]);

/// Vorticity carried by labels: omega(t, x) = omega0(x + disp(x)) in the
/// window and omega0(x) outside it.
struct VorticityField {
    ScalarFn omega0;
    GridField<Vec2> disp;  ///< label minus node position

    VorticityField() = default;
    VorticityField(ScalarFn w0, const Grid& g) : omega0(std::move(w0)), disp(g) {}

    Vec2 label_at(Vec2 x, bool* outside = nullptr) const;
    double at(Vec2 x, bool* outside = nullptr) const { return omega0(label_at(x, outside)); }
    double at_node(std::size_t k) const { return omega0(disp.grid.node(k) + disp.data[k]); }
};

/// Velocity as u0 plus an interpolated grid deviation; u0 alone outside the window.
struct VelocityField {
    VectorFn u0;
    GridField<Vec2> dev;

    VelocityField() = default;
    VelocityField(VectorFn u, const Grid& g) : u0(std::move(u)), dev(g) {}

    Vec2 at(Vec2 x) const;
    Vec2 at_node(std::size_t k) const { return u0(dev.grid.node(k)) + dev.data[k]; }
    std::vector<Vec2> samples() const;
};

struct SerfatiNorm {
    double u_inf = 0.0;
    double omega_inf = 0.0;
    double total() const { return u_inf + omega_inf; }
};

/// Node sub-box [i0, i1] x [j0, j1] used as an evaluation window.
struct Window {
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
    static Window all(const Grid& g) { return {0, g.nx - 1, 0, g.ny - 1}; }
};

/// Sup of |u| plus sup of the centred-difference curl over the window.
/// A lower estimate of the true norm. Nodes where `active` is false are skipped.
SerfatiNorm serfati_norm(const std::vector<Vec2>& samples, const Grid& grid, const Window& win,
                         const std::vector<char>* active = nullptr);
SerfatiNorm serfati_norm(const VelocityField& u, const Window& win,
                         const std::vector<char>* active = nullptr);
/// Samples a velocity function on the fluid nodes of `grid`.
SerfatiNorm serfati_norm(const Domain& domain, const VectorFn& u, const Grid& grid);

/// Uniformly local L^p norm with unit-area square windows, sampled on node values.
double lp_uloc_norm(const std::vector<double>& values, const Grid& grid, double p);

/// Centred-difference curl at node (i, j); requires interior nodes.
double discrete_curl(const std::vector<Vec2>& samples, const Grid& grid, int i, int j);
double discrete_divergence(const std::vector<Vec2>& samples, const Grid& grid, int i, int j);

/// Compactly supported vorticity for the classical Biot-Savart law.
struct CompactVorticity {
    ScalarFn omega;
    Vec2 center;
    double support_radius = 0.0;  ///< must be positive
};

struct BiotSavartOptions {
    int radial_nodes = 48;
    int angular_nodes = 96;
};

/// Integral of K_Omega(x, y) omega(y) over the support. Refuses without a support radius.
Vec2 direct_biot_savart(const Domain& domain, const CompactVorticity& omega, Vec2 x,
                        const BiotSavartOptions& opt = {});

/// u0(x) + integral of a_R(x - y) K_Omega(x, y) (omega_t - omega_0)(y) dy for each R.
std::vector<Vec2> renormalized_bs(const Domain& domain, const ScalarFn& omega_t,
                                  const ScalarFn& omega_0, const VectorFn& u0, Vec2 x,
                                  const std::vector<double>& radii, const Cutoff& cutoff = Cutoff::standard());

/// Snapshot writers; columns x1, x2, u1, u2, omega, label1, label2.
std::string snapshot_csv(const VelocityField& u, const VorticityField& w,
                         const std::vector<char>* active = nullptr);
std::string snapshot_ndjson(const VelocityField& u, const VorticityField& w, double t,
                            const std::vector<char>* active = nullptr);

/// Writes through a temporary file and rename. Throws IoError on failure.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace serfati
