#ifndef FDELAB_TRIDIAG_HPP
#define FDELAB_TRIDIAG_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace fdelab {

using Vec = std::vector<double>;

// General tridiagonal matrix: lower[i] = A(i, i-1), upper[i] = A(i, i+1).
struct Tridiag {
    Vec lower, diag, upper;

    explicit Tridiag(int n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
    int size() const { return static_cast<int>(diag.size()); }

    Vec apply(const Vec& x) const
    {
        const int n = size();
        Vec y(n);
        for (int i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lower[i] * x[i - 1];
            if (i + 1 < n) s += upper[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }
};

// Gaussian elimination with partial pivoting (one extra superdiagonal of fill).
inline Vec solve_tridiag(const Tridiag& A, Vec b)
{
    const int n = A.size();
    if (static_cast<int>(b.size()) != n) throw InvalidArgument("solve_tridiag: size mismatch");
    if (n == 0) return b;
    Vec d = A.diag, u = A.upper, l = A.lower, u2(n, 0.0);
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(d[i]) + std::abs(u[i]) + std::abs(l[i]));
    const double tiny = std::numeric_limits<double>::epsilon() * (scale > 0 ? scale : 1.0) * 1e-3;
    for (int i = 0; i + 1 < n; ++i) {
        double sub = l[i + 1];
        if (std::abs(sub) > std::abs(d[i])) {
            // swap rows i and i+1
            std::swap(d[i], l[i + 1]);
            std::swap(u[i], d[i + 1]);
            if (i + 2 < n) std::swap(u2[i], u[i + 1]);
            std::swap(b[i], b[i + 1]);
            sub = l[i + 1];
        }
        if (std::abs(d[i]) < tiny) d[i] = d[i] < 0 ? -tiny : tiny;
        double f = sub / d[i];
        d[i + 1] -= f * u[i];
        if (i + 2 < n) u[i + 1] -= f * u2[i];
        b[i + 1] -= f * b[i];
        l[i + 1] = 0.0;
    }
    if (std::abs(d[n - 1]) < tiny) d[n - 1] = d[n - 1] < 0 ? -tiny : tiny;
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        if (i + 1 < n) s -= u[i] * x[i + 1];
        if (i + 2 < n) s -= u2[i] * x[i + 2];
        x[i] = s / d[i];
    }
    return x;
}

// Solves [A  b; c^T  0] [x; s] = [r; rho] by bordered elimination.
inline std::pair<Vec, double> solve_bordered(const Tridiag& A, const Vec& b, const Vec& c, const Vec& r, double rho)
{
    Vec y = solve_tridiag(A, b);
    Vec z = solve_tridiag(A, r);
    double cy = 0.0, cz = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        cy += c[i] * y[i];
        cz += c[i] * z[i];
    }
    if (cy == 0.0) throw NumericalFailure("solve_bordered: singular border", 0.0);
    double s = (cz - rho) / cy;
    Vec x(z.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] - s * y[i];
    return {x, s};
}

// Symmetric tridiagonal matrix: diag[i], off[i] = A(i, i+1) (size n-1).
struct SymTridiag {
    Vec diag, off;

    int size() const { return static_cast<int>(diag.size()); }

    Vec apply(const Vec& x) const
    {
        const int n = size();
        Vec y(n);
        for (int i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += off[i - 1] * x[i - 1];
            if (i + 1 < n) s += off[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    Tridiag shifted(double sigma) const
    {
        const int n = size();
        Tridiag t(n);
        for (int i = 0; i < n; ++i) {
            t.diag[i] = diag[i] - sigma;
            if (i > 0) t.lower[i] = off[i - 1];
            if (i + 1 < n) t.upper[i] = off[i];
        }
        return t;
    }
};

// Number of eigenvalues strictly below x (Sturm sequence).
inline int sturm_count(const SymTridiag& A, double x)
{
    const int n = A.size();
    int count = 0;
    double q = 1.0;
    const double tiny = std::numeric_limits<double>::min() * 1e10;
    for (int i = 0; i < n; ++i) {
        double e2 = i > 0 ? A.off[i - 1] * A.off[i - 1] : 0.0;
        q = A.diag[i] - x - (i > 0 ? e2 / q : 0.0);
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

// k-th smallest eigenvalue (k = 0 based) by bisection on the Sturm count.
inline double kth_eigenvalue(const SymTridiag& A, int k)
{
    const int n = A.size();
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (int i = 0; i < n; ++i) {
        double r = (i > 0 ? std::abs(A.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(A.off[i]) : 0.0);
        lo = std::min(lo, A.diag[i] - r);
        hi = std::max(hi, A.diag[i] + r);
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sturm_count(A, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

struct SymEigenPair {
    double lambda = 0.0;
    Vec vec;  // Euclidean unit vector
    double residual = 0.0;
    int iterations = 0;
};

// k smallest eigenpairs by shifted inverse iteration with deflation against
// previously converged vectors. Shifts come from Sturm bisection.
inline std::vector<SymEigenPair> smallest_eigenpairs(const SymTridiag& A, int k, double rel_tol = 1e-10,
                                                     int max_iter = 500)
{
    const int n = A.size();
    if (k < 1 || k > n) throw InvalidArgument("smallest_eigenpairs: bad count");
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        anorm = std::max(anorm, std::abs(A.diag[i]) + (i > 0 ? std::abs(A.off[i - 1]) : 0.0) +
                                    (i + 1 < n ? std::abs(A.off[i]) : 0.0));
    // Residual floor set by rounding in A*v; below this no iteration can improve.
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * anorm * std::sqrt(double(n));
    std::vector<SymEigenPair> out;
    for (int j = 0; j < k; ++j) {
        double sigma = kth_eigenvalue(A, j);
        Tridiag shifted = A.shifted(sigma);
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * std::sin(1.3 * (i + 1) * (j + 1));
        auto deflate_normalize = [&](Vec& x) {
            for (const auto& p : out) {
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += p.vec[i] * x[i];
                for (int i = 0; i < n; ++i) x[i] -= dot * p.vec[i];
            }
            double nrm = 0.0;
            for (double t : x) nrm += t * t;
            nrm = std::sqrt(nrm);
            for (double& t : x) t /= nrm;
        };
        deflate_normalize(v);
        SymEigenPair pr;
        double best = std::numeric_limits<double>::max();
        int stall = 0;
        for (int it = 1; it <= max_iter; ++it) {
            v = solve_tridiag(shifted, v);
            deflate_normalize(v);
            Vec av = A.apply(v);
            double lam = 0.0;
            for (int i = 0; i < n; ++i) lam += v[i] * av[i];
            double res = 0.0;
            for (int i = 0; i < n; ++i) res += (av[i] - lam * v[i]) * (av[i] - lam * v[i]);
            res = std::sqrt(res);
            pr.lambda = lam;
            pr.vec = v;
            pr.residual = res;
            pr.iterations = it;
            if (res <= rel_tol * std::abs(lam)) break;
            if (res < 0.999 * best) {
                best = res;
                stall = 0;
            } else if (++stall >= 3 && res <= floor) {
                break;  // converged to rounding level
            }
            if (it == max_iter) throw NumericalFailure("inverse iteration did not converge", res);
        }
        out.push_back(std::move(pr));
    }
    return out;
}

} // namespace fdelab

#endif
