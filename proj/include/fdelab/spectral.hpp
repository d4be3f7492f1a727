#ifndef FDELAB_SPECTRAL_HPP
#define FDELAB_SPECTRAL_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "grid.hpp"
#include "tridiag.hpp"

namespace fdelab {

// Stiffness matrix K with x^T K x = weighted_dirichlet_form(x, w, ext).
inline SymTridiag assemble_stiffness(const Domain& dom, const Field& w, Extension ext)
{
    check_size(dom, w, "assemble_stiffness");
    const int n = dom.n;
    SymTridiag K;
    K.diag.assign(n, 0.0);
    K.off.assign(n - 1, 0.0);
    auto wval = [&](int i) { return w[std::clamp(i, 0, n - 1)]; };
    for (int e = 0; e <= n; ++e) {
        if (dom.edge_factor[e] == 0.0) continue;
        double k = dom.edge_factor[e] * 0.5 * (wval(e) + wval(e - 1)) / dom.h;
        bool interior = e >= 1 && e <= n - 1;
        if (interior) {
            K.diag[e - 1] += k;
            K.diag[e] += k;
            K.off[e - 1] -= k;
        } else if (ext == Extension::Zero) {
            K.diag[e == 0 ? 0 : n - 1] += k;
        }
    }
    return K;
}

// -Delta with zero Dirichlet data (reflection at the radial origin).
// A = M^{-1} K with M the quadrature weights; sym = M^{-1/2} K M^{-1/2}.
struct DirichletOperator {
    const Domain* dom = nullptr;
    SymTridiag K;
    Field mass;
    SymTridiag sym;

    Field apply(const Field& f) const
    {
        Field y = K.apply(f);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] /= mass[i];
        return y;
    }
};

inline SymTridiag symmetrize(const SymTridiag& K, const Field& mass)
{
    const int n = K.size();
    SymTridiag B;
    B.diag.resize(n);
    B.off.resize(n - 1);
    for (int i = 0; i < n; ++i) B.diag[i] = K.diag[i] / mass[i];
    for (int i = 0; i + 1 < n; ++i) B.off[i] = K.off[i] / std::sqrt(mass[i] * mass[i + 1]);
    return B;
}

inline DirichletOperator assemble_laplacian(const Domain& dom)
{
    DirichletOperator op;
    op.dom = &dom;
    op.K = assemble_stiffness(dom, Field(dom.n, 1.0), Extension::Zero);
    op.mass = dom.quad_weights;
    op.sym = symmetrize(op.K, op.mass);
    return op;
}

struct EigenPair {
    double lambda = 0.0;
    Field phi;  // unit norm under the quadrature inner product
    double residual = 0.0;
};

using EigenPairs = std::vector<EigenPair>;

// k smallest eigenpairs of the pencil K x = lambda M x (M diagonal, positive).
inline EigenPairs pencil_eigenpairs(const SymTridiag& K, const Field& M, int k, double rel_tol = 1e-10,
                                    int max_iter = 500)
{
    SymTridiag B = symmetrize(K, M);
    auto raw = smallest_eigenpairs(B, k, rel_tol, max_iter);
    EigenPairs out;
    for (auto& r : raw) {
        EigenPair e;
        e.lambda = r.lambda;
        e.residual = r.residual;
        e.phi.resize(M.size());
        for (std::size_t i = 0; i < M.size(); ++i) e.phi[i] = r.vec[i] / std::sqrt(M[i]);
        out.push_back(std::move(e));
    }
    return out;
}

inline EigenPairs eigenpairs(const DirichletOperator& op, int k)
{
    require(k >= 1 && k <= 4, "eigenpairs: k must be in 1..4");
    EigenPairs out = pencil_eigenpairs(op.K, op.mass, k);
    // ground state positive; others oriented so that the first node is positive
    for (auto& e : out) {
        double s = 0.0;
        for (double v : e.phi) s += v;
        if (&e != &out.front()) s = e.phi.front();
        if (s < 0)
            for (double& v : e.phi) v = -v;
    }
    return out;
}

struct GapBounds {
    double lower = 0.0, upper = 0.0, diam = 0.0, inr = 0.0;
};

inline GapBounds spectral_gap_bounds(const Domain& dom)
{
    GapBounds g;
    g.diam = dom.diameter();
    g.inr = dom.inradius();
    const double pi2 = std::numbers::pi * std::numbers::pi;
    g.lower = pi2 / (g.diam * g.diam);
    g.upper = dom.dim * pi2 / (g.inr * g.inr);
    return g;
}

inline double weighted_mean(const Domain& dom, const Field& g, const Field& weight)
{
    check_size(dom, g, "weighted_mean");
    check_size(dom, weight, "weighted_mean");
    for (double v : weight) require(v >= 0.0, "weighted_mean: negative weight");
    double tot = integrate(dom, weight);
    if (!(tot > 0.0)) throw InvalidArgument("weighted_mean: zero total weight");
    return integrate(dom, g, weight) / tot;
}

// Smallest nonzero eigenvalue of the pencil (stiffness with weight ws and
// copy extension, mass with weight wm). The constant vector spans the kernel,
// so the second pencil eigenvalue is the minimum over the mean-zero subspace.
struct PencilGap {
    double value = 0.0;
    Field mode;
    double residual = 0.0;
};

inline PencilGap weighted_pencil_gap(const Domain& dom, const Field& ws, const Field& wm)
{
    SymTridiag K = assemble_stiffness(dom, ws, Extension::Copy);
    Field M(dom.n);
    for (int i = 0; i < dom.n; ++i) {
        M[i] = dom.quad_weights[i] * wm[i];
        require(M[i] > 0.0, "weighted_pencil_gap: mass weight must be positive");
    }
    auto pairs = pencil_eigenpairs(K, M, 2);
    return {pairs[1].lambda, pairs[1].phi, pairs[1].residual};
}

// RHS - (lambda2 - lambda1) * LHS of the intrinsic Poincare inequality
// (lambda2-lambda1) int |g - g_mean|^2 Phi1^2 <= int |grad g|^2 Phi1^2.
inline double intrinsic_poincare_residual(const Domain& dom, const Field& g, const EigenPairs& pairs)
{
    require(pairs.size() >= 2, "intrinsic_poincare_residual: need two eigenpairs");
    check_size(dom, g, "intrinsic_poincare_residual");
    const Field& phi1 = pairs[0].phi;
    Field w = map_field(phi1, [](double v) { return v * v; });
    double mean = weighted_mean(dom, g, w);
    Field dev = map_field(g, [mean](double v) { return (v - mean) * (v - mean); });
    double lhs = integrate(dom, dev, w);
    double rhs = weighted_dirichlet_form(dom, g, w, Extension::Copy);
    return rhs - (pairs[1].lambda - pairs[0].lambda) * lhs;
}

} // namespace fdelab

#endif
