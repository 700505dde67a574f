#include "serfati/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "serfati/errors.hpp"
#include "serfati/quadrature.hpp"

namespace serfati {

Grid Grid::square(double half_width, double h) {
    if (!(half_width > 0.0) || !(h > 0.0)) throw ConfigError("grid needs positive width and spacing");
    int n = static_cast<int>(std::lround(2.0 * half_width / h)) + 1;
    if (std::abs((n - 1) * h - 2.0 * half_width) > 1e-9 * half_width)
        throw ConfigError("window width must be a multiple of the grid spacing");
    if (n < 4) throw ConfigError("grid needs at least 4 nodes per direction");
    Grid g;
    g.origin = {-half_width, -half_width};
    g.h = h;
    g.nx = n;
    g.ny = n;
    return g;
}

bool Grid::inside(Vec2 x) const {
    Vec2 up = upper();
    return x.x1 >= origin.x1 && x.x2 >= origin.x2 && x.x1 <= up.x1 && x.x2 <= up.x2;
}

bool Grid::same_as(const Grid& o) const {
    return nx == o.nx && ny == o.ny && h == o.h && origin == o.origin;
}

void cubic_weights(double t, double w[4]) {
    double t0 = t, t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
    w[0] = -t1 * t2 * t3 / 6.0;
    w[1] = t0 * t2 * t3 / 2.0;
    w[2] = -t0 * t1 * t3 / 2.0;
    w[3] = t0 * t1 * t2 / 6.0;
}

template <class T>
T GridField<T>::interpolate(Vec2 x) const {
    double fx = (x.x1 - grid.origin.x1) / grid.h;
    double fy = (x.x2 - grid.origin.x2) / grid.h;
    int i0 = std::clamp(static_cast<int>(std::floor(fx)) - 1, 0, grid.nx - 4);
    int j0 = std::clamp(static_cast<int>(std::floor(fy)) - 1, 0, grid.ny - 4);
    double wx[4], wy[4];
    cubic_weights(fx - i0, wx);
    cubic_weights(fy - j0, wy);
    T acc{};
    for (int b = 0; b < 4; ++b) {
        T row{};
        const T* p = &data[grid.index(i0, j0 + b)];
        for (int a = 0; a < 4; ++a) row += wx[a] * p[a];
        acc += wy[b] * row;
    }
    return acc;
}

template struct GridField<double>;
template struct GridField<Vec2>;

Vec2 VorticityField::label_at(Vec2 x, bool* outside) const {
    bool out = !disp.grid.inside(x);
    if (outside) *outside = out;
    if (out) return x;
    return x + disp.interpolate(x);
}

Vec2 VelocityField::at(Vec2 x) const {
    if (!dev.grid.inside(x)) return u0(x);
    return u0(x) + dev.interpolate(x);
}

std::vector<Vec2> VelocityField::samples() const {
    std::vector<Vec2> out(dev.data.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = at_node(k);
    return out;
}

double discrete_curl(const std::vector<Vec2>& s, const Grid& g, int i, int j) {
    double h2 = 2.0 * g.h;
    return (s[g.index(i + 1, j)].x2 - s[g.index(i - 1, j)].x2) / h2 -
           (s[g.index(i, j + 1)].x1 - s[g.index(i, j - 1)].x1) / h2;
}

double discrete_divergence(const std::vector<Vec2>& s, const Grid& g, int i, int j) {
    double h2 = 2.0 * g.h;
    return (s[g.index(i + 1, j)].x1 - s[g.index(i - 1, j)].x1) / h2 +
           (s[g.index(i, j + 1)].x2 - s[g.index(i, j - 1)].x2) / h2;
}

SerfatiNorm serfati_norm(const std::vector<Vec2>& samples, const Grid& grid, const Window& win,
                         const std::vector<char>* active) {
    if (win.i0 < 0 || win.j0 < 0 || win.i1 >= grid.nx || win.j1 >= grid.ny)
        throw ConfigError("serfati_norm window exceeds the grid");
    if (win.i1 - win.i0 < 2 || win.j1 - win.j0 < 2)
        throw ConfigError("serfati_norm window too small for centred differences");
    auto on = [&](int i, int j) { return !active || (*active)[grid.index(i, j)]; };
    SerfatiNorm n;
    for (int j = win.j0; j <= win.j1; ++j)
        for (int i = win.i0; i <= win.i1; ++i) {
            if (!on(i, j)) continue;
            n.u_inf = std::max(n.u_inf, norm(samples[grid.index(i, j)]));
            if (i == win.i0 || i == win.i1 || j == win.j0 || j == win.j1) continue;
            if (!on(i - 1, j) || !on(i + 1, j) || !on(i, j - 1) || !on(i, j + 1)) continue;
            n.omega_inf = std::max(n.omega_inf, std::abs(discrete_curl(samples, grid, i, j)));
        }
    return n;
}

SerfatiNorm serfati_norm(const VelocityField& u, const Window& win, const std::vector<char>* active) {
    return serfati_norm(u.samples(), u.dev.grid, win, active);
}

SerfatiNorm serfati_norm(const Domain& domain, const VectorFn& u, const Grid& grid) {
    std::vector<Vec2> s(grid.size());
    std::vector<char> act(grid.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        Vec2 x = grid.node(k);
        act[k] = domain.contains(x);
        if (act[k]) s[k] = u(x);
    }
    return serfati_norm(s, grid, Window::all(grid), &act);
}

double lp_uloc_norm(const std::vector<double>& values, const Grid& grid, double p) {
    if (!(p >= 1.0)) throw ConfigError("lp_uloc_norm needs p >= 1");
    int m = std::max(1, static_cast<int>(std::lround(1.0 / grid.h)));
    int mx = std::min(m, grid.nx), my = std::min(m, grid.ny);
    int stride = std::max(1, m / 2);
    double best = 0.0;
    for (int j0 = 0; j0 + my <= grid.ny; j0 += stride)
        for (int i0 = 0; i0 + mx <= grid.nx; i0 += stride) {
            double acc = 0.0;
            for (int j = j0; j < j0 + my; ++j)
                for (int i = i0; i < i0 + mx; ++i) {
                    double v = std::abs(values[grid.index(i, j)]);
                    acc = std::isinf(p) ? std::max(acc, v) : acc + std::pow(v, p);
                }
            double val = std::isinf(p) ? acc : std::pow(acc * grid.h * grid.h, 1.0 / p);
            best = std::max(best, val);
        }
    return best;
}

Vec2 direct_biot_savart(const Domain& domain, const CompactVorticity& w, Vec2 x,
                        const BiotSavartOptions& opt) {
    if (!w.omega || !(w.support_radius > 0.0))
        throw ConfigError("direct_biot_savart needs a compactly supported vorticity with its radius");
    double R = w.support_radius;
    double dist = norm(x - w.center);
    PolarOptions po{opt.radial_nodes, opt.angular_nodes, 1.0, {}};
    Rule rule;
    if (dist < 2.0 * R) {
        // centred at the singular point; covers the whole support
        if (dist > R) po.breaks.push_back(dist - R);
        rule = polar_rule(domain, x, dist + R, po);
    } else {
        rule = polar_rule(domain, w.center, R, po);
    }
    Vec2 acc;
    for (const auto& q : rule) {
        if (norm2(q.y - w.center) > R * R) continue;
        double om = w.omega(q.y);
        if (om == 0.0) continue;
        acc += (q.w * om) * k_domain(domain, x, q.y);
    }
    return acc;
}

std::vector<Vec2> renormalized_bs(const Domain& domain, const ScalarFn& omega_t,
                                  const ScalarFn& omega_0, const VectorFn& u0, Vec2 x,
                                  const std::vector<double>& radii, const Cutoff& cutoff) {
    std::vector<Vec2> out;
    Vec2 base = u0(x);
    for (double R : radii) {
        if (!(R > 0.0)) throw ConfigError("renormalization radii must be positive");
        double reach = cutoff.c_outer() * R;
        PolarOptions po{16, 128, 1.0, {}};
        for (double b = 0.25; b < reach; b *= 2.0) po.breaks.push_back(b);
        Rule rule = polar_rule(domain, x, reach, po);
        Vec2 acc;
        for (const auto& q : rule) {
            double d = omega_t(q.y) - omega_0(q.y);
            if (d == 0.0) continue;
            acc += (q.w * d * cutoff_eval(cutoff, R, x - q.y)) * k_domain(domain, x, q.y);
        }
        out.push_back(base + acc);
    }
    return out;
}

namespace {

void fmt_num(std::string& s, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += buf;
}

}  // namespace

std::string snapshot_csv(const VelocityField& u, const VorticityField& w,
                         const std::vector<char>* active) {
    std::string s = "x1,x2,u1,u2,omega,label1,label2\n";
    const Grid& g = u.dev.grid;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (active && !(*active)[k]) continue;
        Vec2 x = g.node(k), uk = u.at_node(k), lab = x + w.disp.data[k];
        double vals[7] = {x.x1, x.x2, uk.x1, uk.x2, w.omega0(lab), lab.x1, lab.x2};
        for (int c = 0; c < 7; ++c) {
            if (c) s += ',';
            fmt_num(s, vals[c]);
        }
        s += '\n';
    }
    return s;
}

std::string snapshot_ndjson(const VelocityField& u, const VorticityField& w, double t,
                            const std::vector<char>* active) {
    std::string s;
    const Grid& g = u.dev.grid;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (active && !(*active)[k]) continue;
        Vec2 x = g.node(k), uk = u.at_node(k), lab = x + w.disp.data[k];
        s += "{\"t\":";
        fmt_num(s, t);
        s += ",\"x\":[";
        fmt_num(s, x.x1);
        s += ',';
        fmt_num(s, x.x2);
        s += "],\"u\":[";
        fmt_num(s, uk.x1);
        s += ',';
        fmt_num(s, uk.x2);
        s += "],\"omega\":";
        fmt_num(s, w.omega0(lab));
        s += ",\"label\":[";
        fmt_num(s, lab.x1);
        s += ',';
        fmt_num(s, lab.x2);
        s += "]}\n";
    }
    return s;
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename to " + target.string() + " failed: " + ec.message());
}

}  // namespace serfati
