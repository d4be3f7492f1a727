#ifndef FDELAB_GRID_HPP
#define FDELAB_GRID_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "errors.hpp"

namespace fdelab {

// Node samples at interior points; boundary values are implicitly zero.
using Field = std::vector<double>;

enum class DomainKind { Interval, RadialBall };

// How a field is continued across the outer boundary in edge sums.
// Zero: the field vanishes on the boundary. Copy: one-sided copy of the
// nearest interior value (quotients such as f/Phi1).
enum class Extension { Zero, Copy };

// Surface measure of the unit sphere in R^d.
inline double sphere_area(int d)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// Volume of the unit ball in R^d.
inline double ball_volume(int d)
{
    return sphere_area(d) / d;
}

struct Domain {
    DomainKind kind = DomainKind::Interval;
    int dim = 1;
    double extent = 0.0;
    int n = 0;
    double h = 0.0;
    Field nodes;
    Field quad_weights;
    // Geometric factor of edge e (e = 0..n), joining node e-1 and node e.
    // Node -1 is the left end (x = 0 or the origin), node n the outer boundary.
    Field edge_factor;

    // Exact measure of the continuum domain.
    double volume() const
    {
        return kind == DomainKind::Interval ? extent : ball_volume(dim) * std::pow(extent, dim);
    }
    double diameter() const { return kind == DomainKind::Interval ? extent : 2.0 * extent; }
    double inradius() const { return kind == DomainKind::Interval ? 0.5 * extent : extent; }
    // Whether edge 0 carries a Dirichlet boundary (false at the radial origin).
    bool left_boundary() const { return kind == DomainKind::Interval; }
};

inline Domain build_interval(double L, int n)
{
    require(L > 0.0 && std::isfinite(L), "build_interval: length must be positive");
    require(n >= 3, "build_interval: need n >= 3");
    Domain dom;
    dom.kind = DomainKind::Interval;
    dom.dim = 1;
    dom.extent = L;
    dom.n = n;
    dom.h = L / (n + 1);
    dom.nodes.resize(n);
    dom.quad_weights.assign(n, dom.h);
    dom.edge_factor.assign(n + 1, 1.0);
    for (int i = 0; i < n; ++i) dom.nodes[i] = (i + 1) * dom.h;
    return dom;
}

// Radial grid r_i = (i+1)h. Weights are the exact shell volumes of the cells
// [r_i - h/2, r_i + h/2]; the first cell extends down to the origin.
inline Domain build_radial_ball(int d, double R, int n)
{
    require(d >= 2, "build_radial_ball: d must be >= 2 (use build_interval for d = 1)");
    require(R > 0.0 && std::isfinite(R), "build_radial_ball: radius must be positive");
    require(n >= 3, "build_radial_ball: need n >= 3");
    Domain dom;
    dom.kind = DomainKind::RadialBall;
    dom.dim = d;
    dom.extent = R;
    dom.n = n;
    dom.h = R / (n + 1);
    const double h = dom.h;
    const double area = sphere_area(d);
    dom.nodes.resize(n);
    dom.quad_weights.resize(n);
    dom.edge_factor.resize(n + 1);
    for (int i = 0; i < n; ++i) {
        dom.nodes[i] = (i + 1) * h;
        double lo = i == 0 ? 0.0 : (i + 0.5) * h;
        double hi = (i + 1.5) * h;
        dom.quad_weights[i] = area * (std::pow(hi, d) - std::pow(lo, d)) / d;
    }
    dom.edge_factor[0] = 0.0;  // reflection at r = 0: no flux
    for (int e = 1; e <= n; ++e) dom.edge_factor[e] = area * std::pow((e + 0.5) * h, d - 1);
    return dom;
}

inline void check_size(const Domain& dom, const Field& f, const char* who)
{
    if (static_cast<int>(f.size()) != dom.n)
        throw InvalidArgument(std::string(who) + ": field does not belong to this domain");
}

inline Field distance_to_boundary(const Domain& dom)
{
    Field d(dom.n);
    for (int i = 0; i < dom.n; ++i) {
        double x = dom.nodes[i];
        d[i] = dom.kind == DomainKind::Interval ? std::min(x, dom.extent - x) : dom.extent - x;
    }
    return d;
}

inline double integrate(const Domain& dom, const Field& f, const Field* weight = nullptr)
{
    check_size(dom, f, "integrate");
    if (weight) check_size(dom, *weight, "integrate");
    double s = 0.0;
    for (int i = 0; i < dom.n; ++i) s += dom.quad_weights[i] * f[i] * (weight ? (*weight)[i] : 1.0);
    return s;
}

inline double integrate(const Domain& dom, const Field& f, const Field& weight)
{
    return integrate(dom, f, &weight);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double norm_lq(const Domain& dom, const Field& f, double q)
{
    check_size(dom, f, "norm_lq");
    require(q > 0.0, "norm_lq: exponent must be positive");
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : f) m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (int i = 0; i < dom.n; ++i) s += dom.quad_weights[i] * std::pow(std::abs(f[i]), q);
    return std::pow(s, 1.0 / q);
}

// Sum over edges of w_edge * ((g_right - g_left)/h)^2 * (edge factor * h).
// The weight is continued across the boundary by copying.
inline double weighted_dirichlet_form(const Domain& dom, const Field& g, const Field& w,
                                      Extension ext = Extension::Zero)
{
    check_size(dom, g, "weighted_dirichlet_form");
    check_size(dom, w, "weighted_dirichlet_form");
    for (double v : w)
        if (v < 0.0) throw InvalidArgument("weighted_dirichlet_form: negative weight");
    const int n = dom.n;
    auto gval = [&](int i) {
        if (i >= 0 && i < n) return g[i];
        if (ext == Extension::Zero) return 0.0;
        return i < 0 ? g[0] : g[n - 1];
    };
    auto wval = [&](int i) { return w[std::clamp(i, 0, n - 1)]; };
    double s = 0.0;
    for (int e = 0; e <= n; ++e) {
        if (dom.edge_factor[e] == 0.0) continue;
        double dg = gval(e) - gval(e - 1);
        double we = 0.5 * (wval(e) + wval(e - 1));
        s += dom.edge_factor[e] * we * dg * dg / dom.h;
    }
    return s;
}

inline double weighted_dirichlet_form(const Domain& dom, const Field& g, Extension ext = Extension::Zero)
{
    return weighted_dirichlet_form(dom, g, Field(dom.n, 1.0), ext);
}

// Elementwise helpers used throughout.
template <class F>
Field map_field(const Field& a, F&& fn)
{
    Field r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = fn(a[i]);
    return r;
}

inline Field axpby(double a, const Field& x, double b, const Field& y)
{
    Field r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + b * y[i];
    return r;
}

inline Field scaled(const Field& x, double a)
{
    return map_field(x, [a](double v) { return a * v; });
}

inline double sup_abs(const Field& f)
{
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

inline double inner(const Domain& dom, const Field& f, const Field& g)
{
    return integrate(dom, f, &g);
}

} // namespace fdelab

#endif
