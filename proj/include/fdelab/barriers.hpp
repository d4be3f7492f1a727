#ifndef FDELAB_BARRIERS_HPP
#define FDELAB_BARRIERS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "elliptic.hpp"
#include "evolution.hpp"
#include "grid.hpp"

namespace fdelab {

struct REFPhi {
    Field phi;  // v^m / S^m - 1
    double sup_abs = 0.0;
    double C2 = 0.0;  // min phi
    double C3 = 0.0;  // max phi
};

inline REFPhi ref_phi(const Domain& dom, const Field& v, const Field& S, double m)
{
    check_size(dom, v, "ref_phi");
    check_size(dom, S, "ref_phi");
    require(m > 0.0, "ref_phi: m must be positive");
    REFPhi r;
    r.phi.resize(dom.n);
    for (int i = 0; i < dom.n; ++i) {
        if (!(S[i] > 0.0)) throw InvalidArgument("ref_phi: S must be positive at interior nodes");
        require(v[i] >= 0.0, "ref_phi: v must be nonnegative");
        r.phi[i] = std::pow(v[i] / S[i], m) - 1.0;
    }
    r.sup_abs = sup_abs(r.phi);
    r.C2 = *std::min_element(r.phi.begin(), r.phi.end());
    r.C3 = *std::max_element(r.phi.begin(), r.phi.end());
    return r;
}

namespace detail {

// Distance to the boundary in units of h, exact in integer arithmetic.
inline long dist_index(const Domain& dom, int i)
{
    if (dom.kind == DomainKind::Interval) return std::min<long>(i + 1, dom.n - i);
    return dom.n - i;  // nodes r_i = (i + 1) h, boundary at R = (n + 1) h
}

inline double node_dist(const Domain& dom, int i) { return dist_index(dom, i) * dom.h; }

inline double value_or_zero(const Field& f, int i)
{
    return (i >= 0 && i < static_cast<int>(f.size())) ? f[i] : 0.0;
}

// Discrete grad V . grad d with central differences and zero boundary values.
inline double grad_dot_dist(const Domain& dom, const Field& V, int i)
{
    const double dv = (value_or_zero(V, i + 1) - value_or_zero(V, i - 1)) / (2.0 * dom.h);
    if (dom.kind == DomainKind::Interval) {
        const long kl = i + 1, kr = dom.n - i;
        if (kl < kr) return dv;
        if (kr < kl) return -dv;
        return 0.0;  // ridge node
    }
    return -dv;
}

// Discrete Laplacian of d, using the same stencil as the solver.
inline double lap_dist(const Domain& dom, int i)
{
    if (dom.kind == DomainKind::Interval) {
        auto dk = [&](int j) -> long { return (j < 0 || j >= dom.n) ? 0 : dist_index(dom, j); };
        return static_cast<double>(dk(i + 1) - 2 * dk(i) + dk(i - 1)) / dom.h;
    }
    if (i == 0) return 0.0;  // d is not smooth at the centre; never inside a boundary strip
    const double h = dom.h, r = dom.nodes[i];
    const double ap = std::pow(r + 0.5 * h, dom.dim - 1), am = std::pow(r - 0.5 * h, dom.dim - 1);
    const double dp = (i + 1 < dom.n) ? node_dist(dom, i + 1) : 0.0;
    const double d0 = node_dist(dom, i), dm = node_dist(dom, i - 1);
    return (ap * (dp - d0) - am * (d0 - dm)) / (h * h * std::pow(r, dom.dim - 1));
}

}  // namespace detail

inline double default_xi0(const Domain& dom) { return 0.1 * dom.extent; }

inline double boundary_gradient_lower(const Domain& dom, const Field& V, double xi0)
{
    check_size(dom, V, "boundary_gradient_lower");
    require(xi0 > 0.0 && xi0 < dom.inradius(), "boundary_gradient_lower: xi0 must lie in (0, inradius)");
    double b = kInf;
    for (int i = 0; i < dom.n; ++i)
        if (detail::node_dist(dom, i) < xi0) b = std::min(b, detail::grad_dot_dist(dom, V, i));
    if (std::isinf(b)) throw InvalidArgument("boundary_gradient_lower: strip contains no nodes");
    return b;
}

struct StripGeometry {
    double xi0 = 0.0;
    double xi1 = 0.0;
    double beta0 = 0.0;
    double beta = 0.0;
    double K_dist = 0.0;  // max |Delta_h d| over the strip
    double C1m = 0.0;     // max V/d over the strip
    double scale_literal = 0.0;   // xi1^{1/m}
    double scale_measured = 0.0;  // max V^{1/m} over the xi1 strip
};

inline StripGeometry measure_strip(const Domain& dom, const Field& V, double m, std::optional<double> xi0 = std::nullopt)
{
    check_size(dom, V, "measure_strip");
    require(m > 0.0 && m < 1.0, "measure_strip: requires 0 < m < 1");
    StripGeometry g;
    g.xi0 = xi0.value_or(default_xi0(dom));
    g.beta0 = boundary_gradient_lower(dom, V, g.xi0);
    for (int i = 0; i < dom.n; ++i) {
        const double d = detail::node_dist(dom, i);
        if (d >= g.xi0) continue;
        g.K_dist = std::max(g.K_dist, std::abs(detail::lap_dist(dom, i)));
        g.C1m = std::max(g.C1m, V[i] / d);
    }
    g.xi1 = g.K_dist > 0.0 ? std::min(g.xi0, 2.0 * g.beta0 / (g.K_dist * g.C1m)) : g.xi0;
    g.beta = -g.K_dist * g.C1m * g.xi1 + 2.0 * g.beta0;
    g.scale_literal = std::pow(g.xi1, 1.0 / m);
    for (int i = 0; i < dom.n; ++i)
        if (detail::node_dist(dom, i) < g.xi1) g.scale_measured = std::max(g.scale_measured, std::pow(V[i], 1.0 / m));
    return g;
}

enum class StripScale { Literal, Measured };

struct BarrierParams {
    double A = 0.0, B = 0.0, C = 0.0;
    double t0 = 0.0;
    double xi1 = 0.0;
    double beta0 = 0.0;
    double beta = 0.0;
    double K_dist = 0.0;
    double strip_scale = 0.0;  // bound used for V^{1/m} on the strip
    bool admissible = false;

    double Phi(double t, double d) const { return C - B * d - A * (t - t0); }
};

inline BarrierParams make_barrier(const StripGeometry& g, double A, double B, double C, double t0 = 0.0,
                                  StripScale scale = StripScale::Literal)
{
    BarrierParams p;
    p.A = A;
    p.B = B;
    p.C = C;
    p.t0 = t0;
    p.xi1 = g.xi1;
    p.beta0 = g.beta0;
    p.beta = g.beta;
    p.K_dist = g.K_dist;
    p.strip_scale = scale == StripScale::Literal ? g.scale_literal : g.scale_measured;
    return p;
}

struct Admissibility {
    bool super_condition = false;
    bool cond1abc = false;
    bool contained = false;  // {Phi >= -1} lies inside the xi1 strip for t >= t0
    double lhs = 0.0;
    double rhs = 0.0;
};

// Growth coefficient of the reaction term defaults to 1/(1-m), the T = 1 normalisation.
inline Admissibility barrier_admissibility(const BarrierParams& p, double m, std::optional<double> c = std::nullopt)
{
    require(m > 0.0 && m < 1.0, "barrier_admissibility: requires 0 < m < 1");
    const double k = c.value_or(1.0 / (1.0 - m));
    Admissibility a;
    a.lhs = (p.A / m + k * (1.0 + p.C)) * std::pow(1.0 + p.C, 1.0 / m - 1.0);
    a.rhs = p.beta * p.B / p.strip_scale;
    a.super_condition = p.beta > 0.0 && a.lhs <= a.rhs;
    a.cond1abc = p.beta > 0.0 && (1.0 + p.C + (1.0 - m) * p.A / m) * p.xi1 <= std::pow(p.beta * p.B, m);
    a.contained = 1.0 + p.C <= p.B * p.xi1;
    return a;
}

inline bool barrier_admissible(const BarrierParams& p, double m, std::optional<double> c = std::nullopt)
{
    return barrier_admissibility(p, m, c).super_condition;
}

struct SupersolutionResidual {
    double min_residual = kInf;
    long points = 0;
    double t_at_min = 0.0;
    double d_at_min = 0.0;
};

// LHS - RHS of the phi-equation supersolution inequality over strip nodes with Phi >= -1.
inline SupersolutionResidual supersolution_residual(const Domain& dom, const BarrierParams& p, const Field& V, double m,
                                                    double c, const std::vector<double>& t_grid)
{
    check_size(dom, V, "supersolution_residual");
    require(m > 0.0 && m < 1.0, "supersolution_residual: requires 0 < m < 1");
    SupersolutionResidual out;
    const double q = 1.0 / m;
    for (int i = 0; i < dom.n; ++i) {
        const double d = detail::node_dist(dom, i);
        if (d >= p.xi1) continue;
        require(V[i] > 0.0, "supersolution_residual: V must be positive");
        const double lapPhi = -p.B * detail::lap_dist(dom, i);
        const double gradTerm = -p.B * detail::grad_dot_dist(dom, V, i);
        for (double t : t_grid) {
            const double Phi = p.Phi(t, d);
            if (Phi < -1.0 + 1e-6) continue;
            const double w = 1.0 + Phi;
            const double lhs = -(p.A / m) * std::pow(w, q - 1.0);
            const double rhs = std::pow(V[i], 1.0 - q) * lapPhi + 2.0 * gradTerm / std::pow(V[i], q) +
                               c * (std::pow(w, q) - w);
            ++out.points;
            if (lhs - rhs < out.min_residual) {
                out.min_residual = lhs - rhs;
                out.t_at_min = t;
                out.d_at_min = d;
            }
        }
    }
    return out;
}

// Times from t0 until Phi < -1 everywhere, uniformly spaced.
inline std::vector<double> barrier_time_grid(const BarrierParams& p, int samples = 200)
{
    std::vector<double> t(samples + 1);
    const double span = (1.0 + p.C) / p.A;
    for (int k = 0; k <= samples; ++k) t[k] = p.t0 + span * k / samples;
    return t;
}

struct BarrierSearchOptions {
    double C_min = 0.0;
    double t0 = 0.0;
    StripScale scale = StripScale::Literal;
    std::optional<double> xi0;
    int time_samples = 200;
    // log10 ranges and steps per decade
    double logA_lo = -1.0, logA_hi = 2.0;
    double logB_lo = -1.0, logB_hi = 4.0;
    double logC_lo = -2.0, logC_hi = 2.0;
    int per_decade = 8;
};

struct BarrierSearchResult {
    bool found = false;
    BarrierParams params;
    StripGeometry geometry;
    Admissibility admissibility;
    SupersolutionResidual residual;
    long tried = 0;
};

// First tuple in (C, B, A) ascending order passing the sufficient condition,
// strip containment and a nonnegative discrete residual.
inline BarrierSearchResult search_barrier(const Domain& dom, const StationaryProfile& prof,
                                          const BarrierSearchOptions& opt = {})
{
    require(prof.m > 0.0 && prof.m < 1.0, "search_barrier: requires a fast diffusion profile");
    BarrierSearchResult res;
    res.geometry = measure_strip(dom, prof.V, prof.m, opt.xi0);
    require(res.geometry.beta > 0.0, "search_barrier: beta must be positive");
    auto axis = [&](double lo, double hi) {
        std::vector<double> v;
        const int k = static_cast<int>(std::lround((hi - lo) * opt.per_decade));
        for (int j = 0; j <= k; ++j) v.push_back(std::pow(10.0, lo + (hi - lo) * j / std::max(k, 1)));
        return v;
    };
    const auto As = axis(opt.logA_lo, opt.logA_hi), Bs = axis(opt.logB_lo, opt.logB_hi),
               Cs = axis(opt.logC_lo, opt.logC_hi);
    for (double C : Cs) {
        if (C < opt.C_min) continue;
        for (double B : Bs)
            for (double A : As) {
                ++res.tried;
                BarrierParams p = make_barrier(res.geometry, A, B, C, opt.t0, opt.scale);
                Admissibility adm = barrier_admissibility(p, prof.m, prof.c);
                if (!adm.super_condition || !adm.contained) continue;
                SupersolutionResidual r =
                    supersolution_residual(dom, p, prof.V, prof.m, prof.c, barrier_time_grid(p, opt.time_samples));
                if (r.points == 0 || r.min_residual < 0.0) continue;
                p.admissible = true;
                res.found = true;
                res.params = p;
                res.admissibility = adm;
                res.residual = r;
                return res;
            }
    }
    return res;
}

struct RelErrorSample {
    double t = 0.0;
    double phi_sup = 0.0;
    double theta_sup = 0.0;
    double phi_inner = 0.0;  // sup |phi| over d > delta
    double phi_strip = 0.0;  // sup |phi| over d <= delta
    double phi_inner_max = -kInf;
    double phi_strip_max = -kInf;
};

inline RelErrorSample rel_error_sample(const Domain& dom, double t, const Field& v, const Field& S, double m,
                                       double delta)
{
    const REFPhi r = ref_phi(dom, v, S, m);
    RelErrorSample s;
    s.t = t;
    s.phi_sup = r.sup_abs;
    for (int i = 0; i < dom.n; ++i) {
        s.theta_sup = std::max(s.theta_sup, std::abs(v[i] / S[i] - 1.0));
        const double a = std::abs(r.phi[i]);
        if (detail::node_dist(dom, i) > delta) {
            s.phi_inner = std::max(s.phi_inner, a);
            s.phi_inner_max = std::max(s.phi_inner_max, r.phi[i]);
        } else {
            s.phi_strip = std::max(s.phi_strip, a);
            s.phi_strip_max = std::max(s.phi_strip_max, r.phi[i]);
        }
    }
    return s;
}

inline std::vector<RelErrorSample> rel_error_convergence(const Domain& dom, const EvolutionTrace& tr,
                                                         const StationaryProfile& prof, double delta)
{
    require(tr.m == prof.m, "rel_error_convergence: trace and profile exponents differ");
    std::vector<RelErrorSample> out;
    out.reserve(tr.snapshots.size());
    for (const Snapshot& s : tr.snapshots) out.push_back(rel_error_sample(dom, s.t, s.u, prof.S, prof.m, delta));
    return out;
}

struct HarnackEnvelope {
    double C0 = 0.0;
    double C1 = 0.0;
    bool positive = false;
};

inline HarnackEnvelope global_harnack_envelope(const Domain& dom, const Field& v, double m)
{
    check_size(dom, v, "global_harnack_envelope");
    require(m > 0.0, "global_harnack_envelope: m must be positive");
    HarnackEnvelope e{kInf, 0.0, true};
    for (int i = 0; i < dom.n; ++i) {
        const double q = v[i] / std::pow(detail::node_dist(dom, i), 1.0 / m);
        if (!(v[i] > 0.0)) e.positive = false;
        e.C0 = std::min(e.C0, q);
        e.C1 = std::max(e.C1, q);
    }
    if (!e.positive) e.C0 = 0.0;
    return e;
}

// A posteriori comparison phi <= Phi on Q* = [t0, t0 + h] x {d < delta}, h = (C - B delta - eps) / A.
struct ComparisonSample {
    double t = 0.0;
    double strip_max = 0.0;  // max phi on d < delta
    double inner_max = 0.0;  // max phi on d >= delta
    double excess = 0.0;     // max of phi - Phi on d < delta
};

struct ComparisonReport {
    double eps = 0.0;
    double delta = 0.0;
    double h = 0.0;
    long samples = 0;
    bool initial_ok = true;   // phi(t0) <= C - B d on the strip
    bool inner_ok = true;     // phi <= eps on d >= delta throughout the window
    bool interior_ok = true;  // phi <= Phi on d < delta throughout the window
    double max_excess = -kInf;  // max of phi - Phi on the strip
    double final_inner_max = -kInf;
    double final_strip_max = -kInf;
    bool two_zone_ok = true;  // at the window end: phi <= eps inside, phi <= eps + B delta on the strip
    std::vector<ComparisonSample> series;
    bool ok() const { return samples > 0 && initial_ok && inner_ok && interior_ok && two_zone_ok; }
};

class ComparisonMonitor {
public:
    ComparisonMonitor(const Domain& dom, const Field& S, double m, const BarrierParams& p, double delta, double eps)
        : dom_(dom), S_(S), m_(m), p_(p)
    {
        require(delta > 0.0 && delta <= p.xi1, "ComparisonMonitor: delta must lie in (0, xi1]");
        rep_.eps = eps;
        rep_.delta = delta;
        rep_.h = (p.C - p.B * delta - eps) / p.A;
        require(rep_.h > 0.0, "ComparisonMonitor: C - B delta must exceed eps");
    }

    double window_end() const { return p_.t0 + rep_.h; }

    void operator()(double t, const Field& v)
    {
        const double tol = 1e-12 * std::max(1.0, std::abs(window_end()));
        if (t < p_.t0 - tol || t > window_end() + tol) return;
        const REFPhi r = ref_phi(dom_, v, S_, m_);
        const bool first = rep_.samples == 0;
        ++rep_.samples;
        double inner_max = -kInf, strip_max = -kInf, excess_t = -kInf;
        for (int i = 0; i < dom_.n; ++i) {
            const double d = detail::node_dist(dom_, i);
            if (d >= rep_.delta) {
                inner_max = std::max(inner_max, r.phi[i]);
                continue;
            }
            strip_max = std::max(strip_max, r.phi[i]);
            const double excess = r.phi[i] - p_.Phi(t, d);
            excess_t = std::max(excess_t, excess);
            rep_.max_excess = std::max(rep_.max_excess, excess);
            if (excess > 0.0) rep_.interior_ok = false;
            if (first && r.phi[i] > p_.C - p_.B * d) rep_.initial_ok = false;
        }
        if (inner_max > rep_.eps) rep_.inner_ok = false;
        rep_.final_inner_max = inner_max;
        rep_.final_strip_max = strip_max;
        rep_.series.push_back({t, strip_max, inner_max, excess_t});
        last_t_ = t;
    }

    ComparisonReport finish()
    {
        ComparisonReport r = rep_;
        const bool reached = r.samples > 0 && last_t_ >= window_end() - 1e-9 * std::max(1.0, window_end());
        r.two_zone_ok = reached && r.final_inner_max <= r.eps && r.final_strip_max <= r.eps + p_.B * r.delta;
        return r;
    }

private:
    const Domain& dom_;
    const Field& S_;
    double m_;
    BarrierParams p_;
    ComparisonReport rep_;
    double last_t_ = -kInf;
};


// Runs the rescaled flow from v0 and checks phi <= Phi on Q* a posteriori.
// delta splits the range above sup phi(t0); eps is the smallest inner bound
// consistent with its own window, found from a first pass over the run.
inline ComparisonReport barrier_comparison_run(const Domain& dom, const StationaryProfile& prof, const Field& v0,
                                               const BarrierParams& p, EvolutionConfig cfg)
{
    require(prof.m > 0.0 && prof.m < 1.0, "barrier_comparison_run: requires a fast diffusion profile");
    require(p.t0 == 0.0, "barrier_comparison_run: the run starts at t0 = 0");
    const double s0 = ref_phi(dom, v0, prof.S, prof.m).C3;
    require(p.C > s0, "barrier_comparison_run: C must exceed sup phi(t0)");
    const double delta = std::min(p.xi1, (p.C - s0) / (2.0 * p.B));
    const double room = p.C - p.B * delta;
    auto inner_max = [&](const Field& v) {
        const REFPhi r = ref_phi(dom, v, prof.S, prof.m);
        double mx = -kInf;
        for (int i = 0; i < dom.n; ++i)
            if (detail::node_dist(dom, i) >= delta) mx = std::max(mx, r.phi[i]);
        return mx;
    };
    std::vector<double> ts, running;
    EvolutionConfig pass = cfg;
    pass.t_max = (room - std::min(inner_max(v0), s0)) / p.A;
    pass.store_every = 1 << 30;
    run_rescaled(dom, v0, prof.m, prof.c, pass, nullptr, nullptr, [&](double t, const Field& v) {
        ts.push_back(t);
        running.push_back(std::max(running.empty() ? -kInf : running.back(), inner_max(v)));
    });
    double eps = running.back();
    for (std::size_t k = 0; k < ts.size(); ++k)
        if (ts[k] >= (room - running[k]) / p.A) {
            eps = running[k];
            break;
        }
    eps = std::max(eps, 0.0);
    ComparisonMonitor mon(dom, prof.S, prof.m, p, delta, eps);
    const double h = mon.window_end() - p.t0;
    const long steps = std::max<long>(1, static_cast<long>(std::ceil(h / cfg.dt0)));
    cfg.dt0 = h / steps;
    cfg.t_max = h;
    cfg.store_every = 1 << 30;
    run_rescaled(dom, v0, prof.m, prof.c, cfg, nullptr, nullptr, [&](double t, const Field& v) { mon(t, v); });
    return mon.finish();
}

}  // namespace fdelab

#endif
