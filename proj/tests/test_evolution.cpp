#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fdelab/evolution.hpp"

using namespace fdelab;
using std::numbers::pi;

namespace {

// Least-squares slope of -log(y) against t.
double log_rate(const std::vector<double>& t, const std::vector<double>& y)
{
    std::vector<double> ly;
    for (double v : y) ly.push_back(std::log(v));
    return -detail::linear_fit(t, ly).second;
}

Field random_positive(const Domain& dom, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0.2, 1.0);
    double a1 = U(rng), a2 = U(rng) - 0.6, a3 = U(rng) - 0.6, s = U(rng);
    return map_field(dom.nodes, [&](double x) {
        double v = s * std::sin(x) * (1.0 + a2 * std::cos(x) + 0.5 * a3 * std::cos(2 * x)) + 0.1 * a1 * std::sin(x);
        return std::max(v, 0.0);
    });
}

} // namespace

TEST(Evolution, ZeroIsFixedPoint)
{
    Domain dom = build_interval(pi, 50);
    for (double m : {0.5, 1.0, 2.0}) {
        Field z = step_implicit(dom, Field(dom.n, 0.0), 0.1, m, 0.0);
        EXPECT_EQ(sup_abs(z), 0.0);
    }
}

TEST(Evolution, RejectsBadInput)
{
    Domain dom = build_interval(pi, 50);
    Field u(dom.n, 1.0);
    u[3] = -1e-3;
    EXPECT_THROW(step_implicit(dom, u, 0.1, 0.5, 0.0), InvalidArgument);
    EXPECT_THROW(step_implicit(dom, Field(dom.n, 1.0), 0.0, 0.5, 0.0), InvalidArgument);
    EXPECT_THROW(step_implicit(dom, Field(3, 1.0), 0.1, 0.5, 0.0), InvalidArgument);
}

TEST(Evolution, LinearEigenmodeDecay)
{
    Domain dom = build_interval(pi, 400);
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 2);
    const Field& phi = ep[0].phi;
    const double dt = 0.05;
    Field u1 = step_implicit(dom, phi, dt, 1.0, 0.0);
    for (int i = 0; i < dom.n; ++i) EXPECT_NEAR(u1[i], phi[i] / (1 + ep[0].lambda * dt), 1e-11);
    // stationary rescaled heat flow
    Field v1 = step_implicit(dom, phi, dt, 1.0, ep[0].lambda);
    for (int i = 0; i < dom.n; ++i) EXPECT_NEAR(v1[i], phi[i], 1e-11);
    // weighted mass decays by (1 + lambda1 dt)^-steps
    Field u = map_field(dom.nodes, [](double x) { return x * (pi - x); });
    double w0 = integrate(dom, u, phi);
    for (int k = 0; k < 20; ++k) u = step_implicit(dom, u, dt, 1.0, 0.0);
    EXPECT_NEAR(integrate(dom, u, phi), w0 * std::pow(1 + ep[0].lambda * dt, -20), 1e-10 * w0);
}

TEST(Evolution, NewtonConsistencyNonlinear)
{
    // the returned state satisfies the implicit equation
    Domain dom = build_interval(pi, 200);
    Field u = map_field(dom.nodes, [](double x) { return std::sin(x) * (1 + 0.5 * std::cos(x)); });
    SymTridiag K = assemble_stiffness(dom, Field(dom.n, 1.0), Extension::Zero);
    for (double m : {0.3, 0.7, 2.0, 3.0}) {
        const double dt = 0.01, c = 0.5;
        Field up = step_implicit(dom, u, dt, m, c);
        Field kq = K.apply(map_field(up, [m](double x) { return std::pow(x, m); }));
        double r = 0.0;
        for (int i = 0; i < dom.n; ++i) {
            EXPECT_GE(up[i], 0.0);
            r = std::max(r, std::abs((up[i] - u[i]) / dt + kq[i] / dom.quad_weights[i] - c * up[i]));
        }
        EXPECT_LT(r, 1e-8) << "m = " << m;
    }
}

TEST(Evolution, SeparableExtinction)
{
    Domain dom = build_interval(pi, 400);
    StationaryProfile S = stationary_profile(dom, 0.5, 2.0);
    EvolutionConfig cfg;
    cfg.m = 0.5;
    cfg.dt0 = 1e-3;
    cfg.dt_policy = DtPolicy::AdaptiveMass;
    cfg.store_every = 20;
    EvolutionTrace tr = run_original(dom, S.S, cfg);
    ASSERT_TRUE(tr.T_est.has_value());
    EXPECT_NEAR(tr.T_est->T, 1.0, 0.03);
    EXPECT_LE(tr.T_est->lo, tr.T_est->T);
    EXPECT_GE(tr.T_est->hi, tr.T_est->T);
    int checked = 0;
    for (const auto& snap : tr.snapshots) {
        if (snap.t > 0.9) continue;
        Field ex = separable_solution(S, 1.0, snap.t);
        double err = 0.0;
        for (int i = 0; i < dom.n; ++i) err = std::max(err, std::abs(snap.u[i] - ex[i]));
        EXPECT_LE(err / sup_abs(ex), 2e-2) << "tau = " << snap.t;
        ++checked;
    }
    EXPECT_GT(checked, 10);
    // sup norm non-increasing and times increasing
    for (std::size_t k = 1; k < tr.records.size(); ++k) {
        EXPECT_LE(tr.records[k].linf, tr.records[k - 1].linf * (1 + 1e-12));
        EXPECT_GT(tr.records[k].t, tr.records[k - 1].t);
    }
}

TEST(Evolution, ScalingSymmetry)
{
    Domain dom = build_interval(pi, 200);
    Field u0 = map_field(dom.nodes, [](double x) { return std::sin(x) * (1 + 0.4 * std::sin(3 * x)); });
    EvolutionConfig cfg;
    cfg.m = 0.5;
    cfg.dt0 = 1e-3;
    cfg.dt_policy = DtPolicy::AdaptiveMass;
    auto T1 = run_original(dom, u0, cfg).T_est;
    auto T2 = run_original(dom, scaled(u0, 2.0), cfg).T_est;
    ASSERT_TRUE(T1 && T2);
    EXPECT_NEAR(T2->T / T1->T, std::sqrt(2.0), 0.05 * std::sqrt(2.0));
}

TEST(Evolution, ComparisonPrinciple)
{
    Domain dom = build_interval(pi, 150);
    Field u0 = map_field(dom.nodes, [](double x) { return 0.5 * std::sin(x); });
    Field w0 = map_field(dom.nodes, [](double x) { return std::sin(x) * (1 + 0.3 * std::cos(x)); });
    for (int i = 0; i < dom.n; ++i) ASSERT_LE(u0[i], w0[i]);
    Field u = u0, w = w0;
    for (int k = 0; k < 200; ++k) {
        u = step_implicit(dom, u, 2e-3, 0.6, 0.0);
        w = step_implicit(dom, w, 2e-3, 0.6, 0.0);
        for (int i = 0; i < dom.n; ++i) ASSERT_LE(u[i], w[i] + 1e-14);
    }
}

TEST(Evolution, WeightedMassOneSidedBound)
{
    Domain dom = build_interval(pi, 200);
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
    const Field& phi = ep[0].phi;
    const double m = 0.6, intphi = integrate(dom, phi);
    EvolutionConfig cfg;
    cfg.m = m;
    cfg.dt0 = 1e-3;
    cfg.dt_policy = DtPolicy::AdaptiveMass;
    Field u0 = map_field(dom.nodes, [](double x) { return x * x * (pi - x); });
    EvolutionTrace tr = run_original(dom, u0, cfg, &phi);
    int checked = 0;
    for (std::size_t k = 1; k < tr.records.size(); ++k) {
        const auto& a = tr.records[k - 1];
        const auto& b = tr.records[k];
        if (b.wmass < 1e-3 * tr.records[0].wmass) break;
        double rate = std::abs(b.wmass - a.wmass) / (b.t - a.t);
        double bound = ep[0].lambda * std::pow(b.wmass, m) * std::pow(intphi, 1 - m);
        EXPECT_LE(rate, 1.1 * bound);
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(Evolution, RescaleTraceMaps)
{
    EXPECT_DOUBLE_EQ(rescaled_time(0.0, 2.0, 0.5), 0.0);
    EXPECT_NEAR(rescaled_time(2.0 * (1 - std::exp(-1.0)), 2.0, 0.5), 2.0, 1e-14);
    EXPECT_THROW(rescaled_time(2.0, 2.0, 0.5), InvalidArgument);
    EXPECT_NEAR(rescaled_time(std::exp(1.0) - 1, 0.0, 2.0), 1.0, 1e-15);

    Domain dom = build_interval(pi, 100);
    StationaryProfile S = stationary_profile(dom, 0.5, 2.0);
    EvolutionTrace tr;
    tr.m = 0.5;
    for (double tau : {0.0, 0.2, 0.5, 0.8}) {
        tr.snapshots.push_back({tau, separable_solution(S, 1.0, tau)});
        StepRecord r;
        r.t = tau;
        r.linf = sup_abs(tr.snapshots.back().u);
        tr.records.push_back(r);
    }
    EvolutionTrace v = rescale_trace(tr, 1.0, 0.5);
    EXPECT_DOUBLE_EQ(v.snapshots[0].t, 0.0);
    for (int i = 0; i < dom.n; ++i) EXPECT_DOUBLE_EQ(v.snapshots[0].u[i], S.S[i]);
    // the separable solution becomes the profile itself
    for (const auto& s : v.snapshots)
        for (int i = 0; i < dom.n; ++i) EXPECT_NEAR(s.u[i], S.S[i], 1e-12 * sup_abs(S.S));
    EvolutionTrace back = unrescale_trace(v, 1.0, 0.5);
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        EXPECT_NEAR(back.snapshots[k].t, tr.snapshots[k].t, 1e-12);
        for (int i = 0; i < dom.n; ++i) EXPECT_NEAR(back.snapshots[k].u[i], tr.snapshots[k].u[i], 1e-12);
        EXPECT_NEAR(back.records[k].linf, tr.records[k].linf, 1e-12);
    }
    tr.snapshots.push_back({1.0, Field(dom.n, 0.0)});
    EXPECT_THROW(rescale_trace(tr, 1.0, 0.5), InvalidArgument);
}

TEST(Evolution, SeparableSolutionValues)
{
    Domain dom = build_interval(pi, 100);
    StationaryProfile S = stationary_profile(dom, 0.5, 2.0);
    Field s0 = separable_solution(S, 1.0, 0.0);
    for (int i = 0; i < dom.n; ++i) EXPECT_EQ(s0[i], S.S[i]);
    Field s1 = separable_solution(S, 1.0, 0.5);
    for (int i = 0; i < dom.n; ++i) EXPECT_NEAR(s1[i], S.S[i] / 4, 1e-15);
    EXPECT_THROW(separable_solution(S, 1.0, 1.0), InvalidArgument);
    EXPECT_THROW(separable_solution(S, 1.0, -0.1), InvalidArgument);

    StationaryProfile P = stationary_profile(dom, 2.0, 1.0);
    Field pk = separable_solution_pme(P, 1.0, 3.0);
    for (int i = 0; i < dom.n; ++i) EXPECT_NEAR(pk[i], P.S[i] / 4, 1e-15);
    EXPECT_THROW(separable_solution_pme(P, 0.0, 1.0), InvalidArgument);
}

TEST(Evolution, RescaledStationarity)
{
    Domain dom = build_interval(pi, 200);
    for (double m : {0.5, 2.0}) {
        double c = m < 1 ? 2.0 : 1.0 / (m - 1);
        StationaryProfile S = stationary_profile(dom, m, c);
        EvolutionConfig cfg;
        cfg.m = m;
        cfg.dt0 = 0.02;
        cfg.t_max = 20.0;
        EvolutionTrace tr = run_rescaled(dom, S.S, m, c, cfg, &S.S);
        for (const auto& r : tr.records) EXPECT_LE(r.diff_sup / sup_abs(S.S), 1e-4) << "m = " << m << " t = " << r.t;
    }
}

TEST(Evolution, RescaledHeatGap)
{
    Domain dom = build_interval(pi, 400);
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 2);
    Field v0 = axpby(1.0, ep[0].phi, 0.3, ep[1].phi);
    Field target = scaled(ep[0].phi, integrate(dom, v0, ep[0].phi));
    EvolutionConfig cfg;
    cfg.m = 1.0;
    cfg.dt0 = 1e-3;
    cfg.t_max = 3.0;
    EvolutionTrace tr = run_rescaled(dom, v0, 1.0, ep[0].lambda, cfg, &target);
    std::vector<double> t, y;
    for (const auto& r : tr.records)
        if (r.t >= 0.5) {
            t.push_back(r.t);
            y.push_back(r.diff_sup);
        }
    EXPECT_NEAR(log_rate(t, y), 3.0, 0.15);
}

TEST(Evolution, PorousMediumRate)
{
    Domain dom = build_interval(pi, 200);
    StationaryProfile S = stationary_profile(dom, 2.0, 1.0);
    EvolutionConfig cfg;
    cfg.m = 2.0;
    cfg.dt0 = 2e-3;
    cfg.t_max = 8.0;
    EvolutionTrace tr = run_rescaled(dom, scaled(S.S, 1.5), 2.0, 1.0, cfg, &S.S);
    std::vector<double> t, y;
    for (const auto& r : tr.records)
        if (r.t >= 2.0) {
            t.push_back(r.t);
            y.push_back(r.diff_sup);
        }
    EXPECT_NEAR(log_rate(t, y), 1.0, 0.1);
}

TEST(Evolution, ExtinctionBoundsContainTruth)
{
    Domain dom = build_interval(pi, 200);
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
    StationaryProfile S = stationary_profile(dom, 0.5, 2.0);
    ExtinctionBounds b = extinction_bounds(dom, S.S, 0.5, 1.5, ep[0].lambda, ep[0].phi);
    EXPECT_LE(b.lower, 1.0);
    // r = 1 + m is sharp on the separable solution
    EXPECT_NEAR(b.upper, 1.0, 1e-6);
    EXPECT_LE(b.lower, b.upper);
    EXPECT_EQ(b.G_source, "lane-emden");
    EXPECT_THROW(extinction_bounds(dom, S.S, 0.5, 1.0, ep[0].lambda, ep[0].phi), InvalidArgument);
    EXPECT_THROW(extinction_bounds(dom, S.S, 1.2, 2.2, ep[0].lambda, ep[0].phi), InvalidArgument);

    std::mt19937_64 rng(11);
    EvolutionConfig cfg;
    cfg.m = 0.7;
    cfg.dt0 = 1e-4;  // backward Euler delays extinction by O(dt)
    cfg.dt_policy = DtPolicy::AdaptiveMass;
    for (int k = 0; k < 5; ++k) {
        Field u0 = random_positive(dom, rng);
        ExtinctionBounds bb = extinction_bounds(dom, u0, 0.7, 1.7, ep[0].lambda, ep[0].phi);
        auto T = run_original(dom, u0, cfg).T_est;
        ASSERT_TRUE(T.has_value());
        EXPECT_LE(bb.lower, T->T);
        EXPECT_GE(bb.upper, T->T);
    }
}

TEST(Evolution, SobolevVariantOfUpperBound)
{
    Domain dom = build_radial_ball(3, 1.0, 100);
    EigenPairs ep = eigenpairs(assemble_laplacian(dom), 1);
    Field u0 = map_field(dom.nodes, [](double r) { return 1 - r * r; });
    ExtinctionBounds b = extinction_bounds(dom, u0, 0.7, 1.7, ep[0].lambda, ep[0].phi, 0.43);
    EXPECT_EQ(b.G_source, "sobolev");
    double theta = 3 * 0.3 / (2 * 1.7);
    EXPECT_NEAR(b.G, std::pow(ep[0].lambda * 0.43 * 0.43, theta) / ep[0].lambda, 1e-14);
    EXPECT_LE(b.lower, b.upper);
}
