// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fdelab/experiments.hpp"
#include "oracles.hpp"

using namespace fdelab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double headline(const ExperimentReport& r, const std::string& key)
{
    for (const auto& [k, v] : r.headline)
        if (k == key) return v;
    throw InvalidArgument("missing headline value " + key);
}

// Pass when every check accepted by keep passes and at least one was kept.
Outcome verdict(const ExperimentReport& r, const std::function<bool(const CheckRecord&)>& keep = nullptr)
{
    Outcome o{true, ""};
    int kept = 0;
    for (const auto& c : r.checks) {
        if (keep && !keep(c)) continue;
        ++kept;
        if (!c.pass) {
            o.pass = false;
            o.detail += "[failed: " + c.name + " = " + fmt(c.measured) + " " + c.relation + " " + fmt(c.bound) + "] ";
        }
    }
    if (kept == 0) {
        o.pass = false;
        o.detail += "[no checks] ";
    }
    return o;
}

ExperimentConfig config(const std::string& experiment)
{
    ExperimentConfig c;
    c.experiment = experiment;
    return c;
}

Outcome c1_heat_gap()
{
    ExperimentConfig c = config("heat-gap");
    c.n = 800;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    o.detail += "theta sup rate " + fmt(headline(r, "theta_sup_rate")) + ", entropy rate " +
                fmt(headline(r, "entropy_rate")) + " (targets 3 and 6, 5%)";
    return o;
}

ExperimentReport poincare_report()
{
    ExperimentConfig c = config("poincare-suite");
    c.n = 800;
    c.seed = 20240601;
    c.samples = 200;
    c.m = 0.8;
    return run_experiment(c);
}

Outcome c2_poincare(const ExperimentReport& r)
{
    Outcome o = verdict(r, [](const CheckRecord& c) { return c.anchor == anchors::poincare; });
    o.detail += "pencil " + fmt(headline(r, "pencil")) + " vs 3, 200 samples";
    return o;
}

Outcome c3_lane_emden()
{
    ExperimentConfig c = config("lane-emden");
    c.n = 800;
    c.p_list = {1.2, 1.1, 1.05, 1.01};
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    Domain dom = build_interval(std::numbers::pi, 800);
    LaneEmdenSolution s = solve_lane_emden(dom, 1.5);
    oracle::ShootingResult ref = oracle::lane_emden_shooting(1.5, std::numbers::pi, dom.nodes);
    double err = 0.0;
    for (int i = 0; i < dom.n; ++i) err = std::max(err, std::abs(s.U[i] - ref.values[i]));
    if (!(err <= 1e-3)) o.pass = false;
    o.detail += "branch bounds and monotonicity over 4 p values; p = 1.5 vs shooting max node error " + fmt(err) +
                " (<= 1e-3)";
    return o;
}

Outcome c4_separable()
{
    ExperimentConfig c = config("separable");
    c.m = 0.5;
    c.c = 2.0;
    c.n = 400;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    o.detail += "T_est " + fmt(headline(r, "T_est")) + ", sup rel err " + fmt(headline(r, "sup_rel_err"));
    return o;
}

Outcome c5_extinction()
{
    ExperimentConfig c = config("extinction-bounds");
    c.seed = 11;
    c.cases = 20;
    c.m = 0.7;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    o.detail += fmt(r.checks.at(0).measured) + "/20 cases inside [lower, upper]";
    return o;
}

Outcome c6_m_limit()
{
    const std::vector<double> ms = {0.5, 0.7, 0.9, 0.95};
    std::vector<double> scaled;
    for (double m : ms) {
        ExperimentConfig c = config("extinction-bounds");
        c.seed = 11;
        c.cases = 1;
        c.m = m;
        scaled.push_back(headline(run_experiment(c), "scaled_T"));
    }
    Outcome o{true, "(1-m) T lambda1:"};
    for (std::size_t k = 0; k < ms.size(); ++k) {
        o.detail += " " + fmt(scaled[k]);
        if (k > 0 && !(std::abs(scaled[k] - 1.0) < std::abs(scaled[k - 1] - 1.0))) o.pass = false;
    }
    if (!(scaled.back() >= 0.85 && scaled.back() <= 1.15)) o.pass = false;
    o.detail += " (monotone toward 1, last in [0.85, 1.15])";
    return o;
}

Outcome c7_entropy()
{
    ExperimentConfig c = config("entropy-rate");
    c.m = 0.9;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    o.detail += "K_emp " + fmt(headline(r, "K_emp")) + ", F " + fmt(headline(r, "F")) + ", rate " +
                fmt(headline(r, "entropy_rate")) + " vs gamma0 " + fmt(headline(r, "gamma0"));
    return o;
}

Outcome c8_gwpi(const ExperimentReport& r)
{
    Outcome o = verdict(r, [](const CheckRecord& c) { return c.anchor == anchors::gwpi; });
    o.detail += "K(c=1) " + fmt(headline(r, "K_c1")) + ", K(c=lambda1) " + fmt(headline(r, "K_clambda1")) +
                ", linear K " + fmt(headline(r, "K_linear"));
    return o;
}

Outcome c9_pme()
{
    ExperimentConfig c = config("pme-rate");
    c.m = 2.0;
    c.v0_scale = 1.5;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    o.detail += "sup rate " + fmt(headline(r, "diff_sup_rate")) + ", entropy rate " + fmt(headline(r, "entropy_rate")) +
                ", mean rate " + fmt(headline(r, "theta_bar_rate"));
    return o;
}

Outcome c10_barrier()
{
    ExperimentConfig c = config("barrier");
    c.m = 0.5;
    c.v0_scale = 1.3;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    if (o.pass)
        o.detail += "A " + fmt(headline(r, "A")) + ", B " + fmt(headline(r, "B")) + ", C " + fmt(headline(r, "C")) +
                    ", window h " + fmt(headline(r, "h"));
    return o;
}

Outcome c11_inequalities()
{
    ExperimentConfig c = config("inequality-suite");
    c.seed = 20240601;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r);
    o.detail += std::to_string(r.checks.size() / 2) + " suites, zero violations required";
    return o;
}

Outcome c12_ball_bracket()
{
    ExperimentConfig c = config("lane-emden");
    c.domain = "ball";
    c.d = 3;
    c.extent = 1.0;
    c.n = 400;
    c.p = 1.5;
    ExperimentReport r = run_experiment(c);
    Outcome o = verdict(r, [](const CheckRecord& k) {
        return k.name.find("lower_interp") != std::string::npos || k.name.find("upper_variational") != std::string::npos;
    });
    o.detail += "lambda_p " + fmt(headline(r, "lambda_p")) + " with computed S2 " + fmt(headline(r, "S2"));
    return o;
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const char* title, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::printf("%s criterion %2d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), s);
        std::fflush(stdout);
    };
    std::optional<ExperimentReport> poincare;
    auto shared = [&]() -> const ExperimentReport& {
        if (!poincare) poincare = poincare_report();
        return *poincare;
    };
    report(1, "heat-equation gap", c1_heat_gap);
    report(2, "intrinsic Poincare inequality", [&] { return c2_poincare(shared()); });
    report(3, "Lane-Emden branch", c3_lane_emden);
    report(4, "separable solution", c4_separable);
    report(5, "extinction-time bounds", c5_extinction);
    report(6, "limit of (1-m) T", c6_m_limit);
    report(7, "fast diffusion entropy decay", c7_entropy);
    report(8, "weighted Poincare invariances", [&] { return c8_gwpi(shared()); });
    report(9, "porous medium rates", c9_pme);
    report(10, "barrier certification", c10_barrier);
    report(11, "inequality suites", c11_inequalities);
    report(12, "eigenvalue bracket on the 3-ball", c12_ball_bracket);
    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
