#ifndef FDELAB_EVOLUTION_HPP
#define FDELAB_EVOLUTION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "elliptic.hpp"
#include "grid.hpp"
#include "spectral.hpp"
#include "tridiag.hpp"

namespace fdelab {

enum class DtPolicy { Fixed, AdaptiveMass };

struct EvolutionConfig {
    double m = 0.5;
    double dt0 = 1e-3;
    DtPolicy dt_policy = DtPolicy::Fixed;
    double extinction_eps = 0.0;  // 0 selects 1e-6 * ||u0||_inf
    double newton_tol = 1e-12;
    long max_steps = 10'000'000;
    int store_every = 10;
    double t_max = 10.0;             // rescaled runs only
    double adaptive_fraction = 0.05;  // dt <= fraction * remaining life
};

struct StepRecord {
    double t = 0.0;
    double l1 = 0.0;
    double l1m = 0.0;   // ||u||_{1+m}
    double linf = 0.0;
    double wmass = 0.0;     // int u Phi1 (0 if Phi1 not supplied)
    double diff_sup = 0.0;  // ||v - S||_inf (0 if no profile supplied)
};

struct Snapshot {
    double t = 0.0;
    Field u;
};

struct ExtinctionEstimate {
    double T = 0.0;
    double lo = 0.0, hi = 0.0;
};

struct EvolutionTrace {
    double m = 0.0;
    double c = 0.0;
    std::vector<StepRecord> records;
    std::vector<Snapshot> snapshots;
    std::optional<ExtinctionEstimate> T_est;
    long steps = 0;

    std::vector<double> times() const
    {
        std::vector<double> t;
        for (const auto& r : records) t.push_back(r.t);
        return t;
    }
};

using StepObserver = std::function<void(double, const Field&)>;

// One backward Euler step of u_t = Delta(u^m) + c u. For m < 1 the Newton
// unknown is w = u^m (bounded Jacobian near u = 0); otherwise u itself.
inline Field step_implicit(const Domain& dom, const Field& u, double dt, double m, double c, double tol = 1e-12,
                           int max_iter = 60)
{
    check_size(dom, u, "step_implicit");
    require(dt > 0.0, "step_implicit: dt must be positive");
    require(m > 0.0, "step_implicit: m must be positive");
    for (double v : u)
        if (v < 0.0) throw InvalidArgument("step_implicit: negative input");
    require(dt * c < 1.0, "step_implicit: need dt * c < 1");
    const int n = dom.n;
    const Field& M = dom.quad_weights;
    const SymTridiag K = assemble_stiffness(dom, Field(n, 1.0), Extension::Zero);
    const double a = 1.0 - dt * c;
    if (m == 1.0) {
        Tridiag J = K.shifted(0.0);
        Field rhs(n);
        for (int i = 0; i < n; ++i) {
            J.diag[i] = a * M[i] + dt * K.diag[i];
            if (i > 0) J.lower[i] *= dt;
            if (i + 1 < n) J.upper[i] *= dt;
            rhs[i] = M[i] * u[i];
        }
        Field out = solve_tridiag(J, rhs);
        for (double& v : out) v = std::max(v, 0.0);
        return out;
    }
    const bool fast = m < 1.0;
    const double im = 1.0 / m;
    // residual and Jacobian in the chosen unknown x
    auto to_u = [&](double x) { return fast ? std::pow(x, im) : x; };
    auto residual = [&](const Field& x, Field& r) {
        Field q(n);
        for (int i = 0; i < n; ++i) q[i] = fast ? x[i] : std::pow(x[i], m);
        Field kq = K.apply(q);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            r[i] = M[i] * (a * to_u(x[i]) - u[i]) + dt * kq[i];
            s = std::max(s, std::abs(r[i]) / M[i]);
        }
        return s;
    };
    Field x(n);
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
        x[i] = fast ? std::pow(u[i], m) : u[i];
        scale = std::max(scale, u[i]);
    }
    if (scale == 0.0) return Field(n, 0.0);
    Field r(n);
    double res = residual(x, r);
    const double res_tol = tol * scale;
    for (int it = 0; it < max_iter; ++it) {
        Tridiag J(n);
        for (int i = 0; i < n; ++i) {
            double xi = std::max(x[i], kPositivityFloor);
            if (fast) {
                J.diag[i] = a * M[i] * im * std::pow(xi, im - 1.0) + dt * K.diag[i];
                if (i > 0) J.lower[i] = dt * K.off[i - 1];
                if (i + 1 < n) J.upper[i] = dt * K.off[i];
            } else {
                // column j of K scaled by m x_j^{m-1}
                double dj = m * std::pow(xi, m - 1.0);
                J.diag[i] = a * M[i] + dt * K.diag[i] * dj;
                if (i > 0) J.upper[i - 1] = dt * K.off[i - 1] * dj;
                if (i + 1 < n) J.lower[i + 1] = dt * K.off[i] * dj;
            }
        }
        Field rhs = scaled(r, -1.0);
        Field dx = solve_tridiag(J, rhs);
        double step = 1.0, new_res = res;
        Field xt(n), rt(n);
        for (int k = 0; k < 40; ++k) {
            for (int i = 0; i < n; ++i) xt[i] = std::max(x[i] + step * dx[i], 0.0);
            new_res = residual(xt, rt);
            if (new_res < res || new_res <= res_tol) break;
            step *= 0.5;
        }
        double change = step * sup_abs(dx);
        x = xt;
        r = rt;
        res = new_res;
        if (res <= res_tol || change <= tol * std::max(sup_abs(x), 1e-300)) {
            Field out(n);
            for (int i = 0; i < n; ++i) out[i] = to_u(x[i]);
            return out;
        }
    }
    NumericalFailure err("step_implicit: Newton did not converge", res);
    err.suggested_dt = 0.5 * dt;
    throw err;
}

namespace detail {

inline StepRecord make_record(const Domain& dom, double t, const Field& u, double m, const Field* phi1,
                              const Field* S)
{
    StepRecord r;
    r.t = t;
    r.l1 = norm_lq(dom, u, 1.0);
    r.l1m = norm_lq(dom, u, 1.0 + m);
    r.linf = sup_abs(u);
    if (phi1) r.wmass = integrate(dom, u, *phi1);
    if (S) {
        double s = 0.0;
        for (int i = 0; i < dom.n; ++i) s = std::max(s, std::abs(u[i] - (*S)[i]));
        r.diff_sup = s;
    }
    return r;
}

// Step with dt halving on Newton failure.
inline Field robust_step(const Domain& dom, const Field& u, double& dt, double m, double c, double tol)
{
    for (int k = 0; k < 30; ++k) {
        try {
            return step_implicit(dom, u, dt, m, c, tol);
        } catch (const NumericalFailure&) {
            dt *= 0.5;
        }
    }
    return step_implicit(dom, u, dt, m, c, tol);
}

inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double a = (sy - b * sx) / n;
    return {a, b};
}

} // namespace detail

// Root of the linear fit of ||u||_{1+m}^{1-m} against time over the last
// decade of sup-norm decay; the interval spans the fit root and the last two
// step times.
inline std::optional<ExtinctionEstimate> estimate_extinction(const std::vector<StepRecord>& rec, double m)
{
    if (rec.size() < 3 || m >= 1.0) return std::nullopt;
    const double last = rec.back().linf;
    std::vector<double> t, y;
    for (const auto& r : rec) {
        if (r.linf <= 10.0 * last) {
            t.push_back(r.t);
            y.push_back(std::pow(r.l1m, 1.0 - m));
        }
    }
    if (t.size() < 3) {
        t.clear();
        y.clear();
        for (std::size_t k = rec.size() >= 10 ? rec.size() - 10 : 0; k < rec.size(); ++k) {
            t.push_back(rec[k].t);
            y.push_back(std::pow(rec[k].l1m, 1.0 - m));
        }
    }
    auto [a, b] = detail::linear_fit(t, y);
    if (!(b < 0.0)) return std::nullopt;
    ExtinctionEstimate e;
    e.T = -a / b;
    e.lo = std::min(e.T, rec[rec.size() - 2].t);
    e.hi = std::max(e.T, rec.back().t);
    return e;
}

inline EvolutionTrace run_original(const Domain& dom, const Field& u0, const EvolutionConfig& cfg,
                                   const Field* phi1 = nullptr, const StepObserver& observer = {})
{
    check_size(dom, u0, "run_original");
    for (double v : u0) require(v >= 0.0, "run_original: u0 must be nonnegative");
    const double u0max = sup_abs(u0);
    require(u0max > 0.0, "run_original: u0 must not vanish identically");
    require(cfg.dt0 > 0.0, "run_original: dt0 must be positive");
    const double m = cfg.m;
    const double eps = cfg.extinction_eps > 0.0 ? cfg.extinction_eps : 1e-6 * u0max;
    EvolutionTrace tr;
    tr.m = m;
    Field u = u0;
    double t = 0.0;
    tr.records.push_back(detail::make_record(dom, t, u, m, phi1, nullptr));
    tr.snapshots.push_back({t, u});
    if (observer) observer(t, u);
    double dt = cfg.dt0;
    for (long step = 1; step <= cfg.max_steps; ++step) {
        if (cfg.dt_policy == DtPolicy::AdaptiveMass && m < 1.0 && tr.records.size() >= 2) {
            const auto& a = tr.records[tr.records.size() - 2];
            const auto& b = tr.records.back();
            double ya = std::pow(a.l1m, 1.0 - m), yb = std::pow(b.l1m, 1.0 - m);
            double kfit = (ya - yb) / (b.t - a.t);
            if (kfit > 0.0) dt = std::min(cfg.dt0, cfg.adaptive_fraction * yb / kfit);
        }
        u = detail::robust_step(dom, u, dt, m, 0.0, cfg.newton_tol);
        t += dt;
        if (cfg.dt_policy == DtPolicy::Fixed) dt = cfg.dt0;
        tr.records.push_back(detail::make_record(dom, t, u, m, phi1, nullptr));
        tr.steps = step;
        if (observer) observer(t, u);
        bool extinct = tr.records.back().linf < eps;
        if (step % std::max(cfg.store_every, 1) == 0 || extinct) tr.snapshots.push_back({t, u});
        if (extinct) break;
    }
    if (m < 1.0 && tr.records.back().linf < eps) tr.T_est = estimate_extinction(tr.records, m);
    return tr;
}

inline EvolutionTrace run_rescaled(const Domain& dom, const Field& v0, double m, double c, const EvolutionConfig& cfg,
                                   const Field* S = nullptr, const Field* phi1 = nullptr,
                                   const StepObserver& observer = {})
{
    check_size(dom, v0, "run_rescaled");
    for (double v : v0) require(v >= 0.0, "run_rescaled: v0 must be nonnegative");
    require(c > 0.0, "run_rescaled: c must be positive");
    require(cfg.dt0 > 0.0, "run_rescaled: dt0 must be positive");
    EvolutionTrace tr;
    tr.m = m;
    tr.c = c;
    Field v = v0;
    double t = 0.0;
    tr.records.push_back(detail::make_record(dom, t, v, m, phi1, S));
    tr.snapshots.push_back({t, v});
    if (observer) observer(t, v);
    const long nsteps = std::lround(cfg.t_max / cfg.dt0);
    for (long step = 1; step <= std::min(nsteps, cfg.max_steps); ++step) {
        double dt = cfg.dt0;
        double target = step * cfg.dt0;
        // substeps only if Newton needs a smaller dt
        while (t < target - 1e-12 * cfg.dt0) {
            dt = std::min(dt, target - t);
            double used = dt;
            v = detail::robust_step(dom, v, used, m, c, cfg.newton_tol);
            t += used;
            dt = used;
        }
        t = target;
        tr.records.push_back(detail::make_record(dom, t, v, m, phi1, S));
        tr.steps = step;
        if (observer) observer(t, v);
        if (step % std::max(cfg.store_every, 1) == 0) tr.snapshots.push_back({t, v});
    }
    return tr;
}

// Exact change of variables. Fast diffusion: t = T log(T/(T - tau)),
// v = (T/(T - tau))^{1/(1-m)} u. Porous medium: 1 + tau = e^t,
// v = (1 + tau)^{1/(m-1)} u.
inline double rescaled_time(double tau, double T, double m)
{
    if (m < 1.0) {
        if (!(tau < T)) throw InvalidArgument("rescale: tau must be below T");
        return T * std::log(T / (T - tau));
    }
    return std::log1p(tau);
}

inline double original_time(double t, double T, double m)
{
    return m < 1.0 ? T * (1.0 - std::exp(-t / T)) : std::expm1(t);
}

inline double rescale_factor(double tau, double T, double m)
{
    return m < 1.0 ? std::pow(T / (T - tau), 1.0 / (1.0 - m)) : std::pow(1.0 + tau, 1.0 / (m - 1.0));
}

inline EvolutionTrace rescale_trace(const EvolutionTrace& tr, double T, double m)
{
    require(m != 1.0, "rescale_trace: m must differ from 1");
    EvolutionTrace out = tr;
    out.T_est.reset();
    out.c = m < 1.0 ? 1.0 / ((1.0 - m) * T) : 1.0 / (m - 1.0);
    for (auto& s : out.snapshots) {
        double f = rescale_factor(s.t, T, m);
        s.t = rescaled_time(s.t, T, m);
        for (double& v : s.u) v *= f;
    }
    for (auto& r : out.records) {
        double f = rescale_factor(r.t, T, m);
        r.t = rescaled_time(r.t, T, m);
        r.l1 *= f;
        r.l1m *= f;
        r.linf *= f;
        r.wmass *= f;
        r.diff_sup = 0.0;
    }
    return out;
}

inline EvolutionTrace unrescale_trace(const EvolutionTrace& tr, double T, double m)
{
    require(m != 1.0, "unrescale_trace: m must differ from 1");
    EvolutionTrace out = tr;
    out.c = 0.0;
    for (auto& s : out.snapshots) {
        s.t = original_time(s.t, T, m);
        double f = rescale_factor(s.t, T, m);
        for (double& v : s.u) v /= f;
    }
    for (auto& r : out.records) {
        r.t = original_time(r.t, T, m);
        double f = rescale_factor(r.t, T, m);
        r.l1 /= f;
        r.l1m /= f;
        r.linf /= f;
        r.wmass /= f;
    }
    return out;
}

// U(tau) = S ((T - tau)/T)^{1/(1-m)} for m < 1.
inline Field separable_solution(const StationaryProfile& S, double T, double tau)
{
    require(S.m < 1.0, "separable_solution: fast diffusion profile expected");
    require(tau >= 0.0, "separable_solution: tau must be nonnegative");
    if (!(tau < T)) throw InvalidArgument("separable_solution: tau must be below T");
    return scaled(S.S, std::pow((T - tau) / T, 1.0 / (1.0 - S.m)));
}

// U_k(tau) = S / (k + tau)^{1/(m-1)} for m > 1, S the profile with c = 1/(m-1).
inline Field separable_solution_pme(const StationaryProfile& S, double k, double tau)
{
    require(S.m > 1.0, "separable_solution_pme: porous medium profile expected");
    require(k > 0.0 && tau >= 0.0, "separable_solution_pme: need k > 0, tau >= 0");
    return scaled(S.S, std::pow(k + tau, -1.0 / (S.m - 1.0)));
}

// Smooth bump exp(-((x - x0)/w)^2) with x0, w given as fractions of the extent.
inline Field gaussian_bump(const Domain& dom, double center_frac = 0.35, double width_frac = 0.1)
{
    const double x0 = center_frac * dom.extent, w = width_frac * dom.extent;
    require(w > 0.0, "gaussian_bump: width must be positive");
    return map_field(dom.nodes, [&](double x) { return std::exp(-((x - x0) / w) * ((x - x0) / w)); });
}

struct ExtinctionBounds {
    double lower = 0.0, upper = 0.0;
    double r = 0.0;
    double G = 0.0;          // constant in ||f||_q^2 <= G ||grad f||_2^2
    std::string G_source;    // "sobolev" or "lane-emden"
};

// Bounds on the extinction time T. The upper bound uses the constant G_q of
// ||f||_q^2 <= G_q ||grad f||^2, q = 2r/(r+m-1): with a Sobolev constant
// G_q = (lambda1 S2^2)^theta / lambda1, theta = d(1-m)/(2r); otherwise the
// sharp discrete value 1/lambda_{q-1} from the Lane-Emden solver.
inline ExtinctionBounds extinction_bounds(const Domain& dom, const Field& u0, double m, double r, double lam1,
                                          const Field& Phi1, std::optional<double> S2 = std::nullopt)
{
    require(m > 0.0 && m < 1.0, "extinction_bounds: need 0 < m < 1");
    require(r > 1.0 && r >= dom.dim * (1.0 - m) / 2.0, "extinction_bounds: r out of range");
    require(sup_abs(u0) > 0.0, "extinction_bounds: u0 must be nontrivial");
    for (double v : u0) require(v >= 0.0, "extinction_bounds: u0 must be nonnegative");
    ExtinctionBounds b;
    b.r = r;
    double ratio = integrate(dom, u0, Phi1) / integrate(dom, Phi1);
    b.lower = std::pow(ratio, 1.0 - m) / lam1 / (1.0 - m);
    double q = 2.0 * r / (r + m - 1.0);
    if (S2 && dom.dim >= 3) {
        double theta = dom.dim * (1.0 - m) / (2.0 * r);
        b.G = std::pow(lam1 * *S2 * *S2, theta) / lam1;
        b.G_source = "sobolev";
    } else {
        double p = q - 1.0;
        b.G = 1.0 / solve_lane_emden(dom, p).lambda_p;
        b.G_source = "lane-emden";
    }
    double pref = (r + m - 1.0) * (r + m - 1.0) / (4.0 * m * (r - 1.0));
    b.upper = pref * b.G * std::pow(norm_lq(dom, u0, r), 1.0 - m) / (1.0 - m);
    return b;
}

} // namespace fdelab

#endif
