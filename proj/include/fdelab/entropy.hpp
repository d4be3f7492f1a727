#ifndef FDELAB_ENTROPY_HPP
#define FDELAB_ENTROPY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "elliptic.hpp"
#include "evolution.hpp"
#include "grid.hpp"
#include "spectral.hpp"

namespace fdelab {

struct RelError {
    Field theta;
    double theta_bar = 0.0;  // mean with weight S^{1+m}
    double eps_sup = 0.0;
};

inline RelError rel_error(const Domain& dom, const Field& v, const Field& S, double m)
{
    check_size(dom, v, "rel_error");
    check_size(dom, S, "rel_error");
    RelError re;
    re.theta.resize(dom.n);
    for (int i = 0; i < dom.n; ++i) {
        if (!(S[i] > 0.0)) throw InvalidArgument("rel_error: S must be positive at interior nodes");
        require(v[i] >= 0.0, "rel_error: v must be nonnegative");
        re.theta[i] = v[i] / S[i] - 1.0;
    }
    re.theta_bar = weighted_mean(dom, re.theta, map_field(S, [m](double s) { return std::pow(s, 1.0 + m); }));
    re.eps_sup = sup_abs(re.theta);
    return re;
}

struct EntropyPair {
    double E = 0.0;  // (1/2) int |theta - theta_bar|^2 S^{1+m}
    double D = 0.0;  // int |grad theta|^2 S^{2m}
};

inline EntropyPair entropy_and_dissipation(const Domain& dom, const RelError& re, const Field& S, double m)
{
    check_size(dom, re.theta, "entropy_and_dissipation");
    check_size(dom, S, "entropy_and_dissipation");
    Field wm(dom.n), ws(dom.n), dev(dom.n);
    for (int i = 0; i < dom.n; ++i) {
        wm[i] = std::pow(S[i], 1.0 + m);
        ws[i] = std::pow(S[i], 2.0 * m);
        dev[i] = (re.theta[i] - re.theta_bar) * (re.theta[i] - re.theta_bar);
    }
    return {0.5 * integrate(dom, dev, wm), weighted_dirichlet_form(dom, re.theta, ws, Extension::Copy)};
}

struct DecayFit {
    double gamma = 0.0;
    double r2 = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    int samples = 0;
};

// Least-squares rate of y ~ A exp(-gamma t) over t in [t_lo, t_hi].
inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi)
{
    require(t.size() == y.size(), "fit_decay_rate: size mismatch");
    std::vector<double> x, ly;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_lo || t[k] > t_hi) continue;
        if (!(y[k] > 0.0)) throw InvalidArgument("fit_decay_rate: non-positive sample in window");
        x.push_back(t[k]);
        ly.push_back(std::log(y[k]));
    }
    require(x.size() >= 10, "fit_decay_rate: need at least 10 samples in the window");
    auto [a, b] = detail::linear_fit(x, ly);
    double mean = 0.0, ss_tot = 0.0, ss_res = 0.0;
    for (double v : ly) mean += v;
    mean /= double(ly.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        ss_tot += (ly[k] - mean) * (ly[k] - mean);
        double e = ly[k] - (a + b * x[k]);
        ss_res += e * e;
    }
    DecayFit f;
    f.gamma = -b;
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    f.t_lo = x.front();
    f.t_hi = x.back();
    f.samples = int(x.size());
    return f;
}

struct EntropyTrace {
    double m = 0.0, c = 0.0;
    std::vector<double> times, E, D, theta_bar, eps, wnorm, diff_sup;
    double burn_in = 0.0;  // first time after which eps stays below the threshold
    bool burned_in = false;
    std::optional<DecayFit> gamma_fit;
};

// Records E, D, theta_bar, eps, int theta^2 S^{1+m} and ||v - S||_inf.
class EntropyRecorder {
public:
    EntropyRecorder(const Domain& dom, const Field& S, double m, double c) : dom_(&dom), S_(S)
    {
        tr_.m = m;
        tr_.c = c;
        wm_ = map_field(S, [m](double s) { return std::pow(s, 1.0 + m); });
    }

    void operator()(double t, const Field& v)
    {
        RelError re = rel_error(*dom_, v, S_, tr_.m);
        EntropyPair ed = entropy_and_dissipation(*dom_, re, S_, tr_.m);
        Field sq = map_field(re.theta, [](double x) { return x * x; });
        double ds = 0.0;
        for (int i = 0; i < dom_->n; ++i) ds = std::max(ds, std::abs(v[i] - S_[i]));
        tr_.times.push_back(t);
        tr_.E.push_back(ed.E);
        tr_.D.push_back(ed.D);
        tr_.theta_bar.push_back(re.theta_bar);
        tr_.eps.push_back(re.eps_sup);
        tr_.wnorm.push_back(integrate(*dom_, sq, wm_));
        tr_.diff_sup.push_back(ds);
    }

    EntropyTrace finish(double eps_threshold = 0.1)
    {
        EntropyTrace out = tr_;
        std::size_t k = out.eps.size();
        while (k > 0 && out.eps[k - 1] < eps_threshold) --k;
        out.burned_in = k < out.eps.size();
        out.burn_in = out.burned_in ? out.times[k] : 0.0;
        return out;
    }

private:
    const Domain* dom_;
    Field S_, wm_;
    EntropyTrace tr_;
};

inline EntropyTrace entropy_run(const Domain& dom, const Field& v0, const Field& S, double m, double c,
                                const EvolutionConfig& cfg, double eps_threshold = 0.1)
{
    EntropyRecorder rec(dom, S, m, c);
    run_rescaled(dom, v0, m, c, cfg, nullptr, nullptr, [&](double t, const Field& v) { rec(t, v); });
    return rec.finish(eps_threshold);
}

// Fit window: last 60% of the post-burn-in samples that lie above the
// rounding plateau, i.e. before y first drops below floor_rel * max(y).
inline std::pair<double, double> fit_window(const EntropyTrace& tr, const std::vector<double>& y,
                                            double floor_rel = 1e-20)
{
    require(tr.burned_in, "fit_window: trace never passed burn-in");
    require(y.size() == tr.times.size(), "fit_window: size mismatch");
    double ymax = 0.0;
    for (double v : y) ymax = std::max(ymax, v);
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        if (tr.times[k] < tr.burn_in) continue;
        if (!(y[k] > floor_rel * ymax)) break;
        idx.push_back(k);
    }
    require(idx.size() >= 10, "fit_window: too few post-burn-in samples above the rounding floor");
    return {tr.times[idx[idx.size() * 2 / 5]], tr.times[idx.back()]};
}

inline DecayFit fit_series_rate(const EntropyTrace& tr, const std::vector<double>& y, double floor_rel = 1e-20)
{
    auto [lo, hi] = fit_window(tr, y, floor_rel);
    return fit_decay_rate(tr.times, y, lo, hi);
}

struct EntropyViolation {
    std::size_t index = 0;
    double t = 0.0;
    double lhs = 0.0;  // -dE/dt
    double rhs = 0.0;
    double deficit = 0.0;
};

// Checks -dE/dt >= m(1+eps)^{m-1} D - 2c(1-m+eps) E (m < 1) or
// m(1-eps)^{m-1} D + 2c(m-1-eps) E (m > 1); m = 1 uses D. Centered
// differences at post-burn-in samples, slack 0.05|rhs| + 1e-10.
inline std::vector<EntropyViolation> entropy_inequality_check(const EntropyTrace& tr, double m, double c,
                                                              double rel_slack = 0.05, double abs_slack = 1e-10)
{
    std::vector<EntropyViolation> out;
    const std::size_t n = tr.times.size();
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (!tr.burned_in || tr.times[k] < tr.burn_in) continue;
        double lhs = -(tr.E[k + 1] - tr.E[k - 1]) / (tr.times[k + 1] - tr.times[k - 1]);
        double eps = tr.eps[k], rhs;
        if (m < 1.0)
            rhs = m * std::pow(1.0 + eps, m - 1.0) * tr.D[k] - 2.0 * c * (1.0 - m + eps) * tr.E[k];
        else if (m > 1.0)
            rhs = m * std::pow(1.0 - eps, m - 1.0) * tr.D[k] + 2.0 * c * (m - 1.0 - eps) * tr.E[k];
        else
            rhs = tr.D[k];
        double slack = rel_slack * std::abs(rhs) + abs_slack;
        if (lhs < rhs - slack) out.push_back({k, tr.times[k], lhs, rhs, rhs - slack - lhs});
    }
    return out;
}

// Entropy non-increasing after burn-in, up to rounding.
inline std::vector<std::size_t> entropy_monotonicity_violations(const EntropyTrace& tr, double abs_slack = 1e-14)
{
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        if (!tr.burned_in || tr.times[k - 1] < tr.burn_in) continue;
        if (tr.E[k] > tr.E[k - 1] * (1.0 + 1e-12) + abs_slack) out.push_back(k);
    }
    return out;
}

// f(theta) = (1 + theta) - (1 + theta)^m and its derivatives.
inline double f_nonlinearity(double theta, double m)
{
    if (!(1.0 + theta > 0.0)) throw InvalidArgument("f_nonlinearity: need 1 + theta > 0");
    return (1.0 + theta) - std::pow(1.0 + theta, m);
}

inline double f_prime(double theta, double m)
{
    if (!(1.0 + theta > 0.0)) throw InvalidArgument("f_prime: need 1 + theta > 0");
    return 1.0 - m * std::pow(1.0 + theta, m - 1.0);
}

inline double f_second(double theta, double m)
{
    if (!(1.0 + theta > 0.0)) throw InvalidArgument("f_second: need 1 + theta > 0");
    return m * (1.0 - m) * std::pow(1.0 + theta, m - 2.0);
}

// F(phi) = c [(1 + phi)^{1/m} - (1 + phi)], source term of the phi equation.
inline double F_phi(double phi, double m, double c)
{
    if (!(1.0 + phi > 0.0)) throw InvalidArgument("F_phi: need 1 + phi > 0");
    return c * (std::pow(1.0 + phi, 1.0 / m) - (1.0 + phi));
}

// Smallest nonzero eigenvalue of the pencil (S^{2m} stiffness,
// c S^{1+m} mass) on the mean-zero subspace.
inline double gwpi_constant_empirical(const Domain& dom, const Field& S, double m, double c)
{
    check_size(dom, S, "gwpi_constant_empirical");
    require(c > 0.0, "gwpi_constant_empirical: c must be positive");
    Field ws = map_field(S, [m](double s) { return std::pow(s, 2.0 * m); });
    Field wm = map_field(S, [m](double s) { return std::pow(s, 1.0 + m); });
    PencilGap g = weighted_pencil_gap(dom, ws, wm);
    if (!(g.value > 0.0)) throw NumericalFailure("gwpi_constant_empirical: non-positive pencil gap", g.residual);
    return g.value / c;
}

// Closed-form constant with the bracket [(S2 lambda1)^{d/2} |Omega|]^{(1-m)/(1+m)}.
inline double k_closed_form(double m, int d, double lam1, double lam2, double S2, double vol, double k0, double k1)
{
    require(lam2 > lam1 && lam1 > 0.0 && S2 > 0.0 && vol > 0.0, "k_closed_form: inputs must be positive");
    require(k0 > 0.0 && k0 <= k1, "k_closed_form: need 0 < k0 <= k1");
    double bracket = std::pow(S2 * lam1, d / 2.0) * vol;
    return (lam2 - lam1) * k0 * k0 / (lam1 * k1 * k1) * std::pow(bracket, (1.0 - m) / (1.0 + m));
}

// Constant of the weighted inequality with the measured sup of S_c:
// K c = (lambda2 - lambda1) k0^2 / (k1^2 ||S_c||_inf^{1-m}).
inline double k_direct(double m, double lam1, double lam2, double c, double S_sup, double k0, double k1)
{
    require(lam2 > lam1 && c > 0.0 && S_sup > 0.0, "k_direct: inputs must be positive");
    require(k0 > 0.0 && k0 <= k1, "k_direct: need 0 < k0 <= k1");
    return (lam2 - lam1) * k0 * k0 / (c * k1 * k1 * std::pow(S_sup, 1.0 - m));
}

struct PoincareEstimate {
    double K = 0.0;
    double lambda0 = 0.0;  // m K - 2(1-m)
    double gamma0 = 0.0;   // lambda0 c
    double F = 0.0;        // equals lambda0
    bool assumption_holds = false;
};

inline PoincareEstimate gamma0(double m, double c, double K)
{
    require(K > 0.0 && c > 0.0, "gamma0: K and c must be positive");
    PoincareEstimate p;
    p.K = K;
    p.lambda0 = m * K - 2.0 * (1.0 - m);
    p.F = p.lambda0;
    p.gamma0 = p.lambda0 * c;
    p.assumption_holds = p.lambda0 > 1e-12 * std::max(1.0, m * K);
    return p;
}

// F(m) = m K_emp(m) - 2(1-m) on the profile with c = 1 (K_emp does not depend on c).
inline double entropy_margin(const Domain& dom, double m)
{
    require(m > 0.0 && m < 1.0, "entropy_margin: need 0 < m < 1");
    const StationaryProfile S = stationary_profile(dom, m, 1.0);
    return m * gwpi_constant_empirical(dom, S.S, m, 1.0) - 2.0 * (1.0 - m);
}

struct ThresholdEstimate {
    std::optional<double> m_sharp;  // root of F in [m_lo, m_hi] when F changes sign there
    double F_lo = 0.0, F_hi = 0.0;
    int evaluations = 0;
};

// Empirical threshold exponent above which F(m) > 0, by bracketed root finding.
// m_lo is raised to just above the critical exponent of the domain.
inline ThresholdEstimate threshold_exponent(const Domain& dom, double m_lo = 0.2, double m_hi = 0.95,
                                            double tol = 1e-8)
{
    m_lo = std::max(m_lo, critical_m(dom.dim) + 0.02);
    require(0.0 < m_lo && m_lo < m_hi && m_hi < 1.0, "threshold_exponent: need 0 < m_lo < m_hi < 1");
    ThresholdEstimate t;
    auto F = [&](double m) {
        ++t.evaluations;
        return entropy_margin(dom, m);
    };
    t.F_lo = F(m_lo);
    t.F_hi = F(m_hi);
    if (!(t.F_lo < 0.0 && t.F_hi > 0.0)) return t;
    boost::uintmax_t iters = 100;
    auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
    auto res = boost::math::tools::toms748_solve(F, m_lo, m_hi, t.F_lo, t.F_hi, stop, iters);
    t.m_sharp = 0.5 * (res.first + res.second);
    return t;
}

struct MeanOdeReport {
    bool passed = true;
    int violations = 0;
    double worst = 0.0;
    std::optional<DecayFit> mean_fit;  // PME: rate of |theta_bar|
    std::string detail;
};

// Fast diffusion: theta_bar(t) <= slack at late times and the implicit
// difference (theta_bar_{k+1} - theta_bar_k)/dt >= c f(theta_bar_{k+1})
// >= c(1-m) theta_bar_{k+1}. Porous medium: the reverse inequality and a
// fitted |theta_bar| rate of at least 0.9. The default slack covers the
// Newton tolerance divided by the step.
inline MeanOdeReport mean_ode_check(const EntropyTrace& tr, double m, double c, double slack = 1e-8,
                                    double late_fraction = 0.5)
{
    MeanOdeReport r;
    const std::size_t n = tr.times.size();
    if (n < 2) return r;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double d = (tr.theta_bar[k + 1] - tr.theta_bar[k]) / (tr.times[k + 1] - tr.times[k]);
        double tb = tr.theta_bar[k + 1];
        if (!(1.0 + tb > 0.0)) continue;
        double fb = c * f_nonlinearity(tb, m);
        double def = m < 1.0 ? (fb - slack) - d : d - (fb + slack);
        if (m < 1.0 && fb < c * (1.0 - m) * tb - slack) def = std::max(def, c * (1.0 - m) * tb - fb);
        if (m > 1.0 && fb > -tb + slack) def = std::max(def, fb + tb);
        if (m != 1.0 && def > 0.0) {
            ++r.violations;
            r.worst = std::max(r.worst, def);
        }
    }
    if (m < 1.0) {
        double t_late = tr.times.front() + late_fraction * (tr.times.back() - tr.times.front());
        for (std::size_t k = 0; k < n; ++k)
            if (tr.times[k] >= t_late && tr.theta_bar[k] > slack) {
                ++r.violations;
                r.worst = std::max(r.worst, tr.theta_bar[k]);
            }
    }
    if (m > 1.0) {
        std::vector<double> a;
        for (double v : tr.theta_bar) a.push_back(std::abs(v));
        bool all_pos = std::all_of(a.begin(), a.end(), [](double v) { return v > 0.0; });
        if (all_pos && tr.burned_in) {
            r.mean_fit = fit_series_rate(tr, a);
            if (r.mean_fit->gamma < 0.9) {
                r.passed = false;
                r.detail = "theta_bar rate below 0.9";
            }
        }
    }
    if (r.violations > 0) {
        r.passed = false;
        r.detail += (r.detail.empty() ? "" : "; ") + std::to_string(r.violations) + " mean ODE violations";
    }
    return r;
}

struct NormDecayReport {
    DecayFit entropy_fit;
    DecayFit norm_fit;
    bool passed = false;
    std::string detail;
};

// Fast diffusion and m = 1: norm rate >= 0.9 entropy rate. Porous medium:
// entropy rate >= 1.8.
inline NormDecayReport norm_decay_check(const EntropyTrace& tr, double m)
{
    NormDecayReport r;
    r.entropy_fit = fit_series_rate(tr, tr.E);
    r.norm_fit = fit_series_rate(tr, tr.wnorm);
    if (m <= 1.0) {
        r.passed = r.norm_fit.gamma >= 0.9 * r.entropy_fit.gamma;
        if (!r.passed) r.detail = "norm rate below 0.9 x entropy rate";
    } else {
        r.passed = r.entropy_fit.gamma >= 1.8;
        if (!r.passed) r.detail = "entropy rate below 1.8";
    }
    return r;
}

struct TunedRate {
    double c = 0.0;
    double theta_bar_end = 0.0;
    int evaluations = 0;
};

// Finds c with theta_bar(t_end) = 0 for the rescaled run from v0 with
// profile S_c, i.e. the rescaling that matches the extinction time of v0.
// theta_bar(t_end) increases with c.
inline TunedRate tune_c(const Domain& dom, const Field& v0, const StationaryProfile& prof, double c_lo, double c_hi,
                        const EvolutionConfig& cfg, double rel_tol = 1e-12, int max_eval = 60)
{
    const double m = prof.m;
    require(m < 1.0, "tune_c: fast diffusion only");
    require(0.0 < c_lo && c_lo < c_hi, "tune_c: need 0 < c_lo < c_hi");
    int evals = 0;
    auto g = [&](double c) {
        ++evals;
        StationaryProfile Sc = rescale_profile(prof, c);
        EvolutionConfig run = cfg;
        Field v = v0;
        double tb = 0.0;
        try {
            run_rescaled(dom, v0, m, c, run, nullptr, nullptr, [&](double, const Field& x) { v = x; });
            tb = rel_error(dom, v, Sc.S, m).theta_bar;
        } catch (const NumericalFailure&) {
            // blow-up of the unstable mass mode: sign is that of c - c_root
            tb = c > 0.5 * (c_lo + c_hi) ? 1.0 : -1.0;
        }
        return tb;
    };
    double g_lo = g(c_lo), g_hi = g(c_hi);
    if (!(g_lo < 0.0 && g_hi > 0.0)) throw NumericalFailure("tune_c: root not bracketed", std::min(g_lo, g_hi));
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_eval);
    auto tol = [rel_tol](double a, double b) { return std::abs(b - a) <= rel_tol * std::abs(a); };
    auto res = boost::math::tools::toms748_solve(g, c_lo, c_hi, g_lo, g_hi, tol, iters);
    TunedRate t;
    t.c = 0.5 * (res.first + res.second);
    t.theta_bar_end = g(t.c);
    t.evaluations = evals;
    return t;
}

} // namespace fdelab

#endif
