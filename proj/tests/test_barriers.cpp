#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fdelab/barriers.hpp"
#include "fdelab/entropy.hpp"
#include "fdelab/spectral.hpp"

using namespace fdelab;
using std::numbers::pi;

TEST(Barriers, RefPhiIdentities)
{
    Domain dom = build_interval(pi, 100);
    const double m = 0.5;
    StationaryProfile prof = stationary_profile(dom, m, 2.0);
    EXPECT_EQ(ref_phi(dom, prof.S, prof.S, m).sup_abs, 0.0);
    REFPhi one = ref_phi(dom, scaled(prof.S, std::pow(2.0, 1 / m)), prof.S, m);
    for (double p : one.phi) EXPECT_NEAR(p, 1.0, 1e-13);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.1, 3.0);
    Field v(dom.n);
    for (int i = 0; i < dom.n; ++i) v[i] = prof.S[i] * U(rng);
    REFPhi r = ref_phi(dom, v, prof.S, m);
    RelError re = rel_error(dom, v, prof.S, m);
    for (int i = 0; i < dom.n; ++i) {
        EXPECT_NEAR(r.phi[i], std::pow(1 + re.theta[i], m) - 1, 1e-12);
        EXPECT_GT(1 + r.phi[i], 0.0);
    }
    EXPECT_LE(r.C2, r.C3);

    Field bad = prof.S;
    bad[3] = 0.0;
    EXPECT_THROW(ref_phi(dom, v, bad, m), InvalidArgument);
}

TEST(Barriers, BoundaryGradient)
{
    Domain dom = build_interval(pi, 800);
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
    Field phi = ep[0].phi;
    if (phi[dom.n / 2] < 0) phi = scaled(phi, -1.0);
    const double b = boundary_gradient_lower(dom, phi, 0.3);
    EXPECT_NEAR(b, std::sqrt(2 / pi) * std::cos(0.3), 0.02 * b);
    EXPECT_NEAR(boundary_gradient_lower(dom, scaled(phi, 2.0), 0.3), 2 * b, 1e-12);
    EXPECT_THROW(boundary_gradient_lower(dom, phi, 0.5 * dom.h), InvalidArgument);
    EXPECT_THROW(boundary_gradient_lower(dom, phi, 2.0), InvalidArgument);

    for (double m : {0.3, 0.5, 0.7, 0.9}) {
        StationaryProfile prof = stationary_profile(build_interval(pi, 200), m, 1.0);
        EXPECT_GT(boundary_gradient_lower(build_interval(pi, 200), prof.V, 0.1 * pi), 0.0) << m;
    }
    Domain ball = build_radial_ball(3, 1.0, 200);
    StationaryProfile pb = stationary_profile(ball, 0.8, 1.0);
    StripGeometry g = measure_strip(ball, pb.V, 0.8);
    EXPECT_GT(g.beta0, 0.0);
    EXPECT_NEAR(g.K_dist, 2.0 / (1.0 - 0.1), 0.02);  // |Delta d| = (d-1)/r at the strip edge
    EXPECT_GT(g.beta, 0.0);
    EXPECT_LE(g.xi1, g.xi0);
}

TEST(Barriers, StripGeometryOnInterval)
{
    Domain dom = build_interval(pi, 400);
    StationaryProfile prof = stationary_profile(dom, 0.5, 2.0);
    StripGeometry g = measure_strip(dom, prof.V, 0.5);
    EXPECT_EQ(g.K_dist, 0.0);  // d is linear away from the midpoint ridge
    EXPECT_DOUBLE_EQ(g.xi1, 0.1 * pi);
    EXPECT_DOUBLE_EQ(g.beta, 2 * g.beta0);
    EXPECT_NEAR(g.scale_literal, g.xi1 * g.xi1, 1e-15);
    EXPECT_GT(g.scale_measured, 0.0);
    // centred differences of a linear function are exact
    Field lin = distance_to_boundary(dom);
    EXPECT_NEAR(boundary_gradient_lower(dom, lin, 0.3), 1.0, 1e-12);
}

TEST(Barriers, AdmissibilityLimits)
{
    Domain dom = build_interval(pi, 200);
    StationaryProfile prof = stationary_profile(dom, 0.5, 2.0);
    StripGeometry g = measure_strip(dom, prof.V, 0.5);
    EXPECT_FALSE(barrier_admissible(make_barrier(g, 1.0, 1e-3, 1.0), 0.5));
    EXPECT_TRUE(barrier_admissible(make_barrier(g, 1.0, 1e6, 1.0), 0.5));
    EXPECT_TRUE(barrier_admissibility(make_barrier(g, 1.0, 1e6, 1.0), 0.5).cond1abc);
    EXPECT_FALSE(barrier_admissible(make_barrier(g, 1.0, 100.0, 1e4), 0.5));
    // the literal coefficient 1/(1-m) equals c when T = 1
    BarrierParams p = make_barrier(g, 0.5, 20.0, 1.0);
    EXPECT_DOUBLE_EQ(barrier_admissibility(p, 0.5).lhs, barrier_admissibility(p, 0.5, 2.0).lhs);
    // LHS grows monotonically in A and C
    double prev = 0.0;
    for (double C : {0.1, 1.0, 10.0, 100.0}) {
        double l = barrier_admissibility(make_barrier(g, 1.0, 10.0, C), 0.5).lhs;
        EXPECT_GT(l, prev);
        prev = l;
    }
}

namespace {

// Direct evaluation on the interval: Delta d = 0 in the strip, grad d = +-1.
double residual_direct(const Domain& dom, const BarrierParams& p, const Field& V, double m, double c, double t)
{
    Field d = distance_to_boundary(dom);
    double best = kInf;
    for (int i = 0; i < dom.n; ++i) {
        if (d[i] >= p.xi1) continue;
        const double Phi = p.C - p.B * d[i] - p.A * (t - p.t0);
        if (Phi < -1 + 1e-6) continue;
        const double vl = i > 0 ? V[i - 1] : 0.0, vr = i + 1 < dom.n ? V[i + 1] : 0.0;
        const double sgn = dom.nodes[i] < 0.5 * dom.extent ? 1.0 : -1.0;
        const double gv = sgn * (vr - vl) / (2 * dom.h);
        const double w = 1 + Phi;
        const double lhs = -(p.A / m) * std::pow(w, 1 / m - 1);
        const double rhs = -2 * p.B * gv / std::pow(V[i], 1 / m) + c * (std::pow(w, 1 / m) - w);
        best = std::min(best, lhs - rhs);
    }
    return best;
}

} // namespace

TEST(Barriers, SupersolutionResidual)
{
    Domain dom = build_interval(pi, 400);
    const double m = 0.5, c = 2.0;
    StationaryProfile prof = stationary_profile(dom, m, c);
    StripGeometry g = measure_strip(dom, prof.V, m);

    // reaction term signs
    EXPECT_EQ(F_phi(0.0, m, c), 0.0);
    EXPECT_NEAR(F_phi(1.0, m, c), c * (std::pow(2.0, 1 / m) - 2), 1e-14);
    EXPECT_GT(F_phi(1.0, m, c), 0.0);

    BarrierParams p = make_barrier(g, 0.7, 30.0, 1.5);
    for (double t : {0.0, 0.5, 1.0, 2.0}) {
        SupersolutionResidual r = supersolution_residual(dom, p, prof.V, m, c, {t});
        double ref = residual_direct(dom, p, prof.V, m, c, t);
        if (r.points == 0) {
            EXPECT_TRUE(std::isinf(ref));
            continue;
        }
        EXPECT_NEAR(r.min_residual, ref, 1e-9 * std::abs(ref));
    }

    double prev = kInf;
    for (double A : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        BarrierParams q = make_barrier(g, A, 30.0, 1.5);
        double r = supersolution_residual(dom, q, prof.V, m, c, {0.0}).min_residual;
        EXPECT_LT(r, prev);
        prev = r;
    }
}

TEST(Barriers, SearchCertifiesSupersolution)
{
    Domain dom = build_interval(pi, 400);
    const double m = 0.5, c = 2.0;
    StationaryProfile prof = stationary_profile(dom, m, c);
    BarrierSearchOptions opt;
    opt.C_min = 0.5;
    BarrierSearchResult res = search_barrier(dom, prof, opt);
    ASSERT_TRUE(res.found);
    const BarrierParams& p = res.params;
    EXPECT_TRUE(p.admissible);
    EXPECT_GE(p.C, 0.5);
    EXPECT_TRUE(barrier_admissible(p, m, c));
    EXPECT_TRUE(barrier_admissibility(p, m, c).contained);
    EXPECT_GT(res.residual.points, 0);
    EXPECT_GE(res.residual.min_residual, 0.0);
    // a denser time grid still certifies
    EXPECT_GE(supersolution_residual(dom, p, prof.V, m, c, barrier_time_grid(p, 2000)).min_residual, 0.0);

    BarrierSearchOptions meas = opt;
    meas.scale = StripScale::Measured;
    BarrierSearchResult rm = search_barrier(dom, prof, meas);
    ASSERT_TRUE(rm.found);
    EXPECT_GE(rm.residual.min_residual, 0.0);
}

TEST(Barriers, ComparisonOnRescaledRuns)
{
    Domain dom = build_interval(pi, 400);
    const double m = 0.5, c = 2.0;
    StationaryProfile prof = stationary_profile(dom, m, c);
    BarrierSearchOptions opt;
    opt.C_min = 0.5;
    BarrierSearchResult res = search_barrier(dom, prof, opt);
    ASSERT_TRUE(res.found);
    EvolutionConfig cfg;
    cfg.m = m;
    cfg.dt0 = 1e-3;

    ComparisonReport a = barrier_comparison_run(dom, prof, scaled(prof.S, 1.3), res.params, cfg);
    EXPECT_TRUE(a.ok());
    EXPECT_GT(a.h, 0.0);
    EXPECT_LE(a.max_excess, 0.0);
    EXPECT_LE(a.final_strip_max, a.eps + res.params.B * a.delta);

    // perturbation concentrated near the boundary: the strip starts above the interior
    Field bump = gaussian_bump(dom, 0.04, 0.02);
    Field v0(dom.n);
    for (int i = 0; i < dom.n; ++i) v0[i] = prof.S[i] * (1 + 0.3 * bump[i]);
    ComparisonReport b = barrier_comparison_run(dom, prof, v0, res.params, cfg);
    EXPECT_TRUE(b.ok());
    EXPECT_LE(b.max_excess, 0.0);

    // a barrier below the datum is rejected at t0
    BarrierParams low = res.params;
    EXPECT_THROW(barrier_comparison_run(dom, prof, scaled(prof.S, 3.0), low, cfg), InvalidArgument);
}

TEST(Barriers, MonitorDetectsViolation)
{
    Domain dom = build_interval(pi, 100);
    StationaryProfile prof = stationary_profile(dom, 0.5, 2.0);
    StripGeometry g = measure_strip(dom, prof.V, 0.5);
    BarrierParams p = make_barrier(g, 1.0, 10.0, 1.0);
    ComparisonMonitor mon(dom, prof.S, 0.5, p, 0.05, 0.1);
    Field v = scaled(prof.S, 1.5);  // phi = 0.22 > eps
    mon(0.0, v);
    mon(mon.window_end(), v);
    ComparisonReport r = mon.finish();
    EXPECT_FALSE(r.inner_ok);
    EXPECT_FALSE(r.ok());
}

TEST(Barriers, HarnackEnvelope)
{
    Domain dom = build_interval(pi, 200);
    for (double m : {0.5, 0.8}) {
        Field v = map_field(distance_to_boundary(dom), [m](double d) { return std::pow(d, 1 / m); });
        HarnackEnvelope e = global_harnack_envelope(dom, v, m);
        EXPECT_NEAR(e.C0, 1.0, 1e-12);
        EXPECT_NEAR(e.C1, 1.0, 1e-12);
        EXPECT_TRUE(e.positive);
    }
    StationaryProfile prof = stationary_profile(dom, 0.5, 2.0);
    HarnackEnvelope e = global_harnack_envelope(dom, prof.S, 0.5);
    EXPECT_GT(e.C0, 0.0);
    EXPECT_LT(e.C0, e.C1);
    EXPECT_TRUE(std::isfinite(e.C1));
    Field z = prof.S;
    z[5] = 0.0;
    HarnackEnvelope ez = global_harnack_envelope(dom, z, 0.5);
    EXPECT_FALSE(ez.positive);
    EXPECT_EQ(ez.C0, 0.0);
}

TEST(Barriers, RelativeErrorConvergence)
{
    Domain dom = build_interval(pi, 100);
    const double m = 0.5;
    StationaryProfile prof = stationary_profile(dom, m, 2.0);
    EvolutionConfig cfg;
    cfg.m = m;
    cfg.dt0 = 1e-2;
    cfg.t_max = 15.0;
    cfg.store_every = 50;

    EvolutionTrace st = run_rescaled(dom, prof.S, m, 2.0, cfg);
    for (const RelErrorSample& s : rel_error_convergence(dom, st, prof, 0.1)) EXPECT_LT(s.phi_sup, 1e-9);

    Field v0(dom.n);
    for (int i = 0; i < dom.n; ++i) {
        double s = std::sin(dom.nodes[i]);
        v0[i] = prof.S[i] * (1 + 0.3 * s * s);
    }
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
    ExtinctionBounds eb = extinction_bounds(dom, v0, m, 1 + m, ep[0].lambda, ep[0].phi);
    TunedRate tc = tune_c(dom, v0, prof, 1 / ((1 - m) * eb.upper), 1 / ((1 - m) * eb.lower), cfg);
    StationaryProfile Sc = rescale_profile(prof, tc.c);
    EvolutionTrace tr = run_rescaled(dom, v0, m, tc.c, cfg);
    auto series = rel_error_convergence(dom, tr, Sc, 0.1);
    ASSERT_EQ(series.size(), tr.snapshots.size());
    EXPECT_GT(series.front().phi_sup, 0.05);
    EXPECT_LT(series.back().phi_sup, 1e-2);
    for (std::size_t k = 1; k < series.size(); ++k) {
        const RelErrorSample& s = series[k];
        EXPECT_NEAR(s.phi_sup, std::max(s.phi_inner, s.phi_strip), 1e-15);
        if (series[k - 1].phi_sup > 1e-6) {
            EXPECT_LT(s.phi_sup, series[k - 1].phi_sup);
        }
    }
    // envelope ratio settles once phi is small
    double late = -1;
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        HarnackEnvelope e = global_harnack_envelope(dom, tr.snapshots[k].u, m);
        EXPECT_TRUE(e.positive);
        if (series[k].phi_sup < 1e-6) {
            double ratio = e.C1 / e.C0;
            if (late > 0) {
                EXPECT_LE(ratio, late * (1 + 1e-6));
            }
            late = ratio;
        }
    }
}
