#ifndef FDELAB_ELLIPTIC_HPP
#define FDELAB_ELLIPTIC_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "grid.hpp"
#include "spectral.hpp"
#include "tridiag.hpp"

namespace fdelab {

inline constexpr double kPositivityFloor = 1e-14;

// Critical exponent (d+2)/(d-2) for d >= 3, +inf otherwise.
inline double critical_p(int d)
{
    return d >= 3 ? double(d + 2) / (d - 2) : kInf;
}

// Lower end (d-2)_+/(d+2) of the fast diffusion range.
inline double critical_m(int d)
{
    return d > 2 ? double(d - 2) / (d + 2) : 0.0;
}

struct LaneEmdenSolution {
    double p = 1.0;
    double lambda_p = 0.0;
    Field U;
    double newton_residual = 0.0;
    int iterations = 0;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 60;
};

namespace detail {

inline Field powf(const Field& u, double p)
{
    return map_field(u, [p](double v) { return std::pow(std::max(v, 0.0), p); });
}

// ||A U - lambda U^p||_2 / (lambda ||U^p||_2) + | ||U||_{p+1}^{p+1} - 1 |
inline double lane_emden_residual(const Domain& dom, const SymTridiag& K, const Field& U, double lam, double p)
{
    Field up = powf(U, p);
    Field ku = K.apply(U);
    double r2 = 0.0, n2 = 0.0, norm = 0.0;
    for (int i = 0; i < dom.n; ++i) {
        double w = dom.quad_weights[i];
        double ri = ku[i] / w - lam * up[i];
        r2 += w * ri * ri;
        n2 += w * up[i] * up[i];
        norm += w * up[i] * U[i];
    }
    return std::sqrt(r2 / n2) / lam + std::abs(norm - 1.0);
}

} // namespace detail

inline LaneEmdenSolution lane_emden_ground_state(const Domain& dom)
{
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
    LaneEmdenSolution s;
    s.p = 1.0;
    s.lambda_p = ep[0].lambda;
    s.U = ep[0].phi;
    s.newton_residual = ep[0].residual / ep[0].lambda;
    return s;
}

// Newton on F(U, lambda) = (K U - lambda M U^p, sum M U^{p+1} - 1) with a
// bordered solve of the tridiagonal-plus-rank-one Jacobian.
inline LaneEmdenSolution solve_lane_emden_newton(const Domain& dom, double p, const LaneEmdenSolution& init,
                                                 const NewtonOptions& opt = {})
{
    const int n = dom.n;
    const Field& M = dom.quad_weights;
    SymTridiag K = assemble_stiffness(dom, Field(n, 1.0), Extension::Zero);
    Field U = init.U;
    // rescale the initial guess onto the constraint
    double nu = norm_lq(dom, U, p + 1);
    for (double& v : U) v = std::max(v / nu, kPositivityFloor);
    double lam = init.lambda_p;
    double res = detail::lane_emden_residual(dom, K, U, lam, p);
    LaneEmdenSolution out;
    out.p = p;
    for (int it = 1; it <= opt.max_iter; ++it) {
        Tridiag J = K.shifted(0.0);
        Field up = detail::powf(U, p), ku = K.apply(U);
        Field rhs(n), b(n), c(n);
        double g = -1.0;
        for (int i = 0; i < n; ++i) {
            J.diag[i] -= lam * p * M[i] * std::pow(U[i], p - 1);
            rhs[i] = -(ku[i] - lam * M[i] * up[i]);
            b[i] = -M[i] * up[i];
            c[i] = (p + 1) * M[i] * up[i];
            g += M[i] * up[i] * U[i];
        }
        auto [dU, dl] = solve_bordered(J, b, c, rhs, -g);
        double step = 1.0, new_res = res;
        Field Ut(n);
        double lt = lam;
        for (int k = 0; k < 30; ++k) {
            for (int i = 0; i < n; ++i) Ut[i] = std::max(U[i] + step * dU[i], kPositivityFloor);
            lt = lam + step * dl;
            new_res = lt > 0 ? detail::lane_emden_residual(dom, K, Ut, lt, p) : kInf;
            if (new_res < res || new_res <= opt.tol) break;
            step *= 0.5;
        }
        double du = sup_abs(dU) * step;
        U = Ut;
        lam = lt;
        res = new_res;
        out.iterations = it;
        bool positive = std::all_of(U.begin(), U.end(), [](double v) { return v > kPositivityFloor; });
        if (res <= opt.tol && positive) break;
        // rounding floor: the update no longer moves the iterate
        if (du <= 1e-14 * sup_abs(U) && res <= 1e3 * opt.tol && positive) break;
        if (it == opt.max_iter || !std::isfinite(res)) {
            NumericalFailure err("Lane-Emden Newton failed at p = " + std::to_string(p), res);
            err.last_iterate = U;
            throw err;
        }
    }
    out.lambda_p = lam;
    out.U = std::move(U);
    out.newton_residual = res;
    return out;
}

inline std::vector<LaneEmdenSolution> continuation_in_p(const Domain& dom, const std::vector<double>& p_targets,
                                                        double dp0 = 0.05, double dp_floor = 1e-3);

inline LaneEmdenSolution solve_lane_emden(const Domain& dom, double p,
                                          const std::optional<LaneEmdenSolution>& init = std::nullopt,
                                          const NewtonOptions& opt = {})
{
    if (!(p >= 1.0 && p < critical_p(dom.dim)))
        throw InvalidArgument("solve_lane_emden: p must lie in [1, p_s)");
    if (p == 1.0) return lane_emden_ground_state(dom);
    LaneEmdenSolution start = init ? *init : lane_emden_ground_state(dom);
    try {
        return solve_lane_emden_newton(dom, p, start, opt);
    } catch (const NumericalFailure&) {
        if (init) throw;
    }
    // cold start far from p = 1: march along the branch
    return continuation_in_p(dom, {p}).back();
}

inline std::vector<LaneEmdenSolution> continuation_in_p(const Domain& dom, const std::vector<double>& p_targets,
                                                        double dp0, double dp_floor)
{
    require(std::is_sorted(p_targets.begin(), p_targets.end()), "continuation_in_p: targets must be ascending");
    std::vector<LaneEmdenSolution> out;
    LaneEmdenSolution cur = lane_emden_ground_state(dom);
    for (double target : p_targets) {
        if (!(target >= 1.0 && target < critical_p(dom.dim)))
            throw InvalidArgument("continuation_in_p: p out of range");
        double dp = dp0;
        while (cur.p < target) {
            double next = std::min(target, cur.p + dp);
            try {
                cur = solve_lane_emden_newton(dom, next, cur);
                dp = std::min(dp0, 2 * dp);
            } catch (const NumericalFailure& e) {
                dp *= 0.5;
                if (dp < dp_floor) {
                    NumericalFailure err("continuation failed at p = " + std::to_string(next), e.residual);
                    err.last_iterate = e.last_iterate;
                    throw err;
                }
            }
        }
        if (target == 1.0) cur = lane_emden_ground_state(dom);
        out.push_back(cur);
    }
    return out;
}

// Stationary state -Delta(S^m) = c S, with V = S^m.
struct StationaryProfile {
    double m = 0.0;
    double c = 0.0;
    Field S;
    Field V;
    double lambda_ref = 0.0;  // lambda_{1/m} for the fast diffusion branch
    double residual = 0.0;    // ||Delta_h V + c S||_inf / (c ||S||_inf)
};

inline double profile_residual(const Domain& dom, const Field& V, const Field& S, double c)
{
    SymTridiag K = assemble_stiffness(dom, Field(dom.n, 1.0), Extension::Zero);
    Field kv = K.apply(V);
    double r = 0.0;
    for (int i = 0; i < dom.n; ++i) r = std::max(r, std::abs(kv[i] / dom.quad_weights[i] - c * S[i]));
    return r / (c * sup_abs(S));
}

// Exact rescaling S_{c'} = (c/c')^{1/(1-m)} S_c.
inline StationaryProfile rescale_profile(const StationaryProfile& prof, double c_new)
{
    require(c_new > 0, "rescale_profile: c must be positive");
    StationaryProfile out = prof;
    double mu = std::pow(prof.c / c_new, 1.0 / (1.0 - prof.m));
    out.c = c_new;
    out.S = scaled(prof.S, mu);
    out.V = scaled(prof.V, std::pow(mu, prof.m));
    return out;
}

inline StationaryProfile stationary_profile(const Domain& dom, double m, double c,
                                            const std::optional<LaneEmdenSolution>& le = std::nullopt)
{
    if (m == 1.0) throw InvalidArgument("stationary_profile: m = 1 has no scaling freedom");
    require(m > 0.0, "stationary_profile: m must be positive");
    require(c > 0.0, "stationary_profile: c must be positive");
    if (m <= critical_m(dom.dim)) throw UnsupportedRegime("stationary_profile: m <= m_s");
    StationaryProfile prof;
    prof.m = m;
    prof.c = c;
    const double p = 1.0 / m;
    const int n = dom.n;
    const Field& M = dom.quad_weights;
    SymTridiag K = assemble_stiffness(dom, Field(n, 1.0), Extension::Zero);
    Field V;
    if (m < 1.0) {
        LaneEmdenSolution sol = le ? *le : solve_lane_emden(dom, p);
        require(std::abs(sol.p - p) < 1e-12, "stationary_profile: Lane-Emden exponent mismatch");
        prof.lambda_ref = sol.lambda_p;
        double mu = std::pow(sol.lambda_p / c, m / (1.0 - m));
        V = scaled(sol.U, mu);
    } else {
        // sublinear problem -Delta V = c V^p, p < 1: Picard sweeps first
        Tridiag Kt = K.shifted(0.0);
        EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
        double kappa = std::pow(c / ep[0].lambda, 1.0 / (1.0 - p));
        V = scaled(ep[0].phi, kappa);
        for (int k = 0; k < 20; ++k) {
            Field rhs(n);
            for (int i = 0; i < n; ++i) rhs[i] = c * M[i] * std::pow(std::max(V[i], kPositivityFloor), p);
            V = solve_tridiag(Kt, rhs);
        }
    }
    // damped Newton on K V = c M V^p down to rounding level
    auto resid = [&](const Field& v) {
        Field kv = K.apply(v);
        double r = 0.0, s = 0.0;
        for (int i = 0; i < n; ++i) {
            r = std::max(r, std::abs(kv[i] / M[i] - c * std::pow(v[i], p)));
            s = std::max(s, c * std::pow(v[i], p));
        }
        return r / s;
    };
    double res = resid(V);
    for (int it = 0; it < 100 && res > 1e-15; ++it) {
        Tridiag J = K.shifted(0.0);
        Field kv = K.apply(V), rhs(n);
        for (int i = 0; i < n; ++i) {
            double vi = std::max(V[i], kPositivityFloor);
            J.diag[i] -= c * p * M[i] * std::pow(vi, p - 1);
            rhs[i] = -(kv[i] - c * M[i] * std::pow(vi, p));
        }
        Field dV = solve_tridiag(J, rhs);
        double step = 1.0;
        Field Vt(n);
        double rt = res;
        for (int k = 0; k < 30; ++k) {
            for (int i = 0; i < n; ++i) Vt[i] = std::max(V[i] + step * dV[i], kPositivityFloor);
            rt = resid(Vt);
            if (rt < res) break;
            step *= 0.5;
        }
        if (!(rt < res)) break;
        V = Vt;
        res = rt;
    }
    prof.V = V;
    prof.S = detail::powf(V, p);
    prof.residual = profile_residual(dom, prof.V, prof.S, c);
    if (!(prof.residual <= 1e-6)) throw NumericalFailure("stationary_profile: residual too large", prof.residual);
    return prof;
}

struct LambdaBounds {
    std::optional<double> lower_sobolev;
    std::optional<double> lower_interp;
    std::optional<double> upper_variational;
    std::optional<double> upper_bt;
    double S2 = 0.0;
    std::optional<double> H;
    std::vector<std::string> notes;
};

// Hardy exponents used by the Brezis-Turner bound: r = 2/(d+1+(d-1)p),
// q = p + (d+1)/(d-1).
inline std::pair<double, double> bt_hardy_exponents(int d, double p)
{
    return {2.0 / (d + 1 + (d - 1) * p), p + double(d + 1) / (d - 1)};
}

// Plug-in bounds for lambda_p. For d = 1 the interpolation bound uses the
// sharp one-dimensional inequality ||f||_inf^2 <= ||f||_2 ||f'||_2 (S2 = 1).
inline LambdaBounds lambda_bounds(const Domain& dom, double p, double S2, std::optional<double> H = std::nullopt)
{
    require(p >= 1.0 && p < critical_p(dom.dim), "lambda_bounds: p out of range");
    const int d = dom.dim;
    LambdaBounds b;
    b.S2 = S2;
    b.H = H;
    double lam1 = eigenpairs(assemble_laplacian(dom), 1)[0].lambda;
    double vol = dom.volume();
    b.upper_variational = lam1 * std::pow(vol, (p - 1) / (p + 1));
    if (d >= 3) {
        double two_star = 2.0 * d / (d - 2);
        b.lower_sobolev = 1.0 / (S2 * S2 * std::pow(vol, 2.0 / (p + 1) - 2.0 / two_star));
        b.lower_interp = lam1 * std::pow(lam1 * S2 * S2, -d * (p - 1) / (2 * (p + 1)));
        double p_bt = double(d + 1) / (d - 1);
        if (p > 1.0 && p < p_bt && H) {
            EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
            double iphi = integrate(dom, ep[0].phi);
            double expo = (d + 1 - p * (d - 1)) * (p + 1) / (2 * (p - 1));
            double rhs = std::pow(lam1, 2 * p / (p - 1)) * iphi * iphi * std::pow(*H, (d - 1) * p + d + 1);
            b.upper_bt = std::pow(rhs, 1.0 / expo);
        } else {
            b.notes.push_back(p >= p_bt ? "upper_bt: p beyond (d+1)/(d-1)"
                                        : (p == 1.0 ? "upper_bt: undefined at p = 1" : "upper_bt: no Hardy constant"));
        }
    } else if (d == 1) {
        b.lower_interp = lam1 * std::pow(lam1, -(p - 1) / (2 * (p + 1)));
        b.notes.push_back("lower_interp: one-dimensional interpolation constant");
    } else {
        b.notes.push_back("Sobolev-based bounds need d >= 3");
    }
    return b;
}

struct Envelope {
    double k0 = 0.0, k1 = 0.0;
};

inline Envelope quotient_envelope(const Field& U, const Field& Phi1)
{
    require(U.size() == Phi1.size() && !U.empty(), "quotient_envelope: size mismatch");
    Envelope e{kInf, -kInf};
    for (std::size_t i = 0; i < U.size(); ++i) {
        if (!(Phi1[i] > 0.0)) throw InvalidArgument("quotient_envelope: Phi1 must be positive");
        double q = U[i] / Phi1[i];
        e.k0 = std::min(e.k0, q);
        e.k1 = std::max(e.k1, q);
    }
    return e;
}

// Monotone ascent for max (sum M rho |f|^q)^{1/q} subject to f^T K f = 1,
// q >= 1: f <- K^{-1}(M rho |f|^{q-2} f), renormalized. Returns the ratio.
inline double maximize_ratio(const Domain& dom, const Field& rho, double q, Field& f, int max_iter = 20000,
                             double rtol = 1e-12)
{
    require(q >= 1.0, "maximize_ratio: q must be >= 1");
    SymTridiag K = assemble_stiffness(dom, Field(dom.n, 1.0), Extension::Zero);
    Tridiag Kt = K.shifted(0.0);
    auto normalize = [&](Field& g) {
        double e = 0.0;
        Field kg = K.apply(g);
        for (int i = 0; i < dom.n; ++i) e += g[i] * kg[i];
        for (double& v : g) v /= std::sqrt(e);
    };
    auto value = [&](const Field& g) {
        double s = 0.0;
        for (int i = 0; i < dom.n; ++i) s += dom.quad_weights[i] * rho[i] * std::pow(std::abs(g[i]), q);
        return std::pow(s, 1.0 / q);
    };
    normalize(f);
    double val = value(f);
    for (int it = 0; it < max_iter; ++it) {
        Field rhs(dom.n);
        for (int i = 0; i < dom.n; ++i)
            rhs[i] = dom.quad_weights[i] * rho[i] * std::pow(std::abs(f[i]), q - 2) * f[i];
        Field g = solve_tridiag(Kt, rhs);
        normalize(g);
        double nv = value(g);
        f = std::move(g);
        bool done = nv - val <= rtol * nv;
        val = std::max(val, nv);
        if (done) break;
    }
    return val;
}

// Discrete optimal constant in ||f||_{2*} <= S2 ||grad f||_2 (d >= 3).
inline double sobolev_constant(const Domain& dom, int max_iter = 200000)
{
    require(dom.dim >= 3, "sobolev_constant: needs d >= 3");
    const double q = 2.0 * dom.dim / (dom.dim - 2);
    Field rho(dom.n, 1.0);
    double best = 0.0;
    for (double width : {0.5, 0.125, 0.03}) {
        double s = width * dom.extent;
        Field f = map_field(dom.nodes, [&](double x) {
            double dist = dom.kind == DomainKind::Interval ? x - 0.5 * dom.extent : x;
            return std::exp(-dist * dist / (s * s)) * std::min(1.0, (dom.extent - x) / (0.1 * dom.extent));
        });
        best = std::max(best, maximize_ratio(dom, rho, q, f, max_iter, 1e-13));
    }
    return best;
}

inline double hardy_q_max(int d, double r)
{
    double den = d - 2 + 2 * r;
    return den > 0 ? 2.0 * d / den : kInf;
}

struct HardyEstimate {
    double H = 0.0;
    std::vector<double> ratios;
};

inline double hardy_ratio(const Domain& dom, const Field& f, const Field& phi1, double r, double q)
{
    Field g(dom.n);
    for (int i = 0; i < dom.n; ++i) g[i] = f[i] / std::pow(phi1[i], r);
    return norm_lq(dom, g, q) / std::sqrt(weighted_dirichlet_form(dom, f));
}

// Empirical max of ||f / Phi1^r||_q / ||grad f||_2 over random combinations
// of the first ten eigenfunctions (seeded).
inline HardyEstimate hardy_constant(const Domain& dom, double r, double q, int samples, std::uint64_t seed)
{
    require(r >= 0.0 && r <= 1.0, "hardy_constant: r must lie in [0, 1]");
    require(q > 0.0 && q <= hardy_q_max(dom.dim, r), "hardy_constant: q outside the admissible range");
    require(samples >= 1, "hardy_constant: samples must be >= 1");
    DirichletOperator op = assemble_laplacian(dom);
    EigenPairs modes = pencil_eigenpairs(op.K, op.mass, std::min(10, dom.n));
    Field phi1 = modes[0].phi;
    if (phi1[0] < 0)
        for (double& v : phi1) v = -v;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    HardyEstimate est;
    for (int s = 0; s < samples; ++s) {
        Field f(dom.n, 0.0);
        for (const auto& mode : modes) {
            double a = nd(rng);
            for (int i = 0; i < dom.n; ++i) f[i] += a * mode.phi[i];
        }
        double ratio = hardy_ratio(dom, f, phi1, r, q);
        est.ratios.push_back(ratio);
        est.H = std::max(est.H, ratio);
    }
    return est;
}

// Sharper estimate of the discrete Hardy constant: ascent from Phi1 (q >= 1).
inline double hardy_constant_optimized(const Domain& dom, double r, double q)
{
    require(q >= 1.0 && q <= hardy_q_max(dom.dim, r), "hardy_constant_optimized: q out of range");
    Field phi1 = eigenpairs(assemble_laplacian(dom), 1)[0].phi;
    Field rho = map_field(phi1, [r, q](double v) { return std::pow(v, -r * q); });
    Field f = phi1;
    return maximize_ratio(dom, rho, q, f);
}

inline bool scalar_inequality_check(double a, double z, double b)
{
    require(a > 0.0 && z >= 0.0 && z <= b && b > 0.0, "scalar_inequality_check: need a > 0, 0 <= z <= b");
    double lhs = std::abs(std::pow(a, z) - 1.0);
    double rhs = (std::pow(a, b) / b + 1.0 / a) * z;
    return lhs <= rhs * (1 + 1e-14) + 1e-300;
}

// Dirichlet data at the two ends of a sub-domain (left is ignored on balls).
struct BoundaryValues {
    double left = 0.0, right = 0.0;
};

// -Delta_h u with prescribed boundary values.
inline Field laplacian_with_bc(const Domain& dom, const Field& u, BoundaryValues bv)
{
    SymTridiag K = assemble_stiffness(dom, Field(dom.n, 1.0), Extension::Zero);
    Field r = K.apply(u);
    const int n = dom.n;
    if (dom.left_boundary()) r[0] -= dom.edge_factor[0] / dom.h * bv.left;
    r[n - 1] -= dom.edge_factor[n] / dom.h * bv.right;
    for (int i = 0; i < n; ++i) r[i] /= dom.quad_weights[i];
    return r;
}

struct ComparisonResult {
    bool admissible = false;
    bool holds = false;
    double size_bound = 0.0;  // omega_d / (2 p lambda M^{p-1})^d
};

inline ComparisonResult small_set_comparison_check(const Domain& dom_sub, double p, double lambda, const Field& u,
                                                   const Field& ubar, double M, BoundaryValues u_bc,
                                                   BoundaryValues ubar_bc)
{
    check_size(dom_sub, u, "small_set_comparison_check");
    check_size(dom_sub, ubar, "small_set_comparison_check");
    require(p >= 1.0 && lambda > 0.0 && M > 0.0, "small_set_comparison_check: bad parameters");
    require(ubar_bc.right >= u_bc.right && (!dom_sub.left_boundary() || ubar_bc.left >= u_bc.left),
            "small_set_comparison_check: ubar must dominate u on the boundary");
    Field lu = laplacian_with_bc(dom_sub, ubar, ubar_bc);
    for (int i = 0; i < dom_sub.n; ++i) {
        double target = lambda * std::pow(std::max(ubar[i], 0.0), p);
        if (lu[i] < target - 1e-9 * (std::abs(target) + std::abs(lu[i]) + 1.0))
            throw InvalidArgument("small_set_comparison_check: ubar is not a discrete supersolution");
    }
    ComparisonResult r;
    int d = dom_sub.dim;
    r.size_bound = ball_volume(d) / std::pow(2 * p * lambda * std::pow(M, p - 1), d);
    r.admissible = dom_sub.volume() < r.size_bound;
    r.holds = true;
    for (int i = 0; i < dom_sub.n; ++i)
        if (ubar[i] < u[i] - 1e-12 * std::max(1.0, std::abs(u[i]))) r.holds = false;
    return r;
}

} // namespace fdelab

#endif
