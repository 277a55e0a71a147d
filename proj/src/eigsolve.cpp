#include "fg/eigsolve.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <numeric>
#include <random>

namespace fg {

namespace {

SpMat shifted_matrix(const SpMat& A, const Vec& Bdiag, double sigma) {
    if (sigma == 0.0) return A;
    SpMat M = A;
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> t;
    const int n = static_cast<int>(Bdiag.size());
    t.reserve(n);
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, -sigma * Bdiag(i));
    SpMat D(n, n);
    D.setFromTriplets(t.begin(), t.end());
    M += D;
    M.makeCompressed();
    return M;
}

}  // namespace

EigPairs shift_invert(const SpMat& A, const Vec& Bdiag, int m, const ShiftInvertOptions& opt) {
    const int n = static_cast<int>(A.rows());
    if (m <= 0 || m > n) throw ConfigError("shift_invert: bad mode count");

    SpMat M = shifted_matrix(A, Bdiag, opt.sigma);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success)
        throw EigensolverStall("shifted factorization failed (sigma on an eigenvalue?)");

    auto b_dot = [&](const Vec& x, const Vec& y) {
        return (x.array() * Bdiag.array() * y.array()).sum();
    };

    std::mt19937 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    v /= std::sqrt(b_dot(v, v));

    int K = opt.krylov > 0 ? opt.krylov : std::min(n, std::max(3 * m + 20, 60));
    K = std::min(K, n);

    std::vector<Vec> basis;
    std::vector<double> alpha, beta;  // Lanczos tridiagonal
    basis.reserve(opt.max_krylov + 1);
    basis.push_back(v);

    auto extend_to = [&](int Knew) -> bool {
        while (static_cast<int>(alpha.size()) < Knew) {
            const int j = static_cast<int>(alpha.size());
            // w = (A - sigma B)^{-1} B v_j
            Vec rhs = (Bdiag.array() * basis[j].array()).matrix();
            Vec w = lu.solve(rhs);
            if (!w.allFinite()) return false;
            const double a = b_dot(w, basis[j]);
            alpha.push_back(a);
            w -= a * basis[j];
            if (j > 0) w -= beta[j - 1] * basis[j - 1];
            // full reorthogonalization (twice) in the B inner product
            for (int pass = 0; pass < 2; ++pass)
                for (const Vec& q : basis) w -= b_dot(w, q) * q;
            const double nb = std::sqrt(b_dot(w, w));
            beta.push_back(nb);
            if (nb < 1e-14) {
                // invariant subspace found; restart direction
                Vec fresh(n);
                for (int i = 0; i < n; ++i) fresh(i) = gauss(rng);
                for (int pass = 0; pass < 2; ++pass)
                    for (const Vec& q : basis) fresh -= b_dot(fresh, q) * q;
                const double fn = std::sqrt(b_dot(fresh, fresh));
                if (fn < 1e-14) return true;  // space exhausted
                basis.push_back(fresh / fn);
                beta.back() = 0.0;
            } else {
                basis.push_back(w / nb);
            }
        }
        return true;
    };

    EigPairs out;
    while (true) {
        if (!extend_to(K)) throw EigensolverStall("non-finite Lanczos recurrence");
        const int kk = static_cast<int>(alpha.size());
        Vec ad = Eigen::Map<const Vec>(alpha.data(), kk);
        Vec bd(kk - 1);
        for (int i = 0; i + 1 < kk; ++i) bd(i) = beta[i];
        Eigen::SelfAdjointEigenSolver<Mat> es;
        es.computeFromTridiagonal(ad, bd, Eigen::ComputeEigenvectors);

        // Ritz values theta -> lambda = sigma + 1/theta; want largest |theta|.
        std::vector<int> order(kk);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a2, int b2) {
            return std::abs(es.eigenvalues()(a2)) > std::abs(es.eigenvalues()(b2));
        });

        const int want = std::min(m, kk);
        const double theta_scale = std::abs(es.eigenvalues()(order[0]));
        const double beta_last = beta.empty() ? 0.0 : beta.back();
        bool converged = true;
        std::vector<std::pair<double, Vec>> pairs;
        for (int t2 = 0; t2 < want; ++t2) {
            const int idx = order[t2];
            const double theta = es.eigenvalues()(idx);
            if (std::abs(theta) < 1e-300) {
                converged = false;
                break;
            }
            // Lanczos convergence criterion on the recurrence itself: immune
            // to the forward error of a nearly singular shifted solve.
            const double bound = beta_last * std::abs(es.eigenvectors()(kk - 1, idx));
            if (bound > opt.tol * std::max(std::abs(theta), 1e-3 * theta_scale)) {
                converged = false;
                break;
            }
            Vec y = es.eigenvectors().col(idx);
            Vec x = Vec::Zero(n);
            for (int j = 0; j < kk; ++j) x += y(j) * basis[j];
            const double nx = std::sqrt(b_dot(x, x));
            x /= nx;
            const double lambda = opt.sigma + 1.0 / theta;
            pairs.emplace_back(lambda, std::move(x));
        }
        if (converged && static_cast<int>(pairs.size()) == want) {
            std::sort(pairs.begin(), pairs.end(), [&](const auto& a2, const auto& b2) {
                return std::abs(a2.first - opt.sigma) < std::abs(b2.first - opt.sigma);
            });
            out.values.resize(want);
            out.vectors.resize(n, want);
            for (int t2 = 0; t2 < want; ++t2) {
                out.values(t2) = pairs[t2].first;
                out.vectors.col(t2) = pairs[t2].second;
            }
            return out;
        }
        if (kk >= std::min(n, opt.max_krylov))
            throw EigensolverStall("Krylov dimension " + std::to_string(kk) +
                                   " exhausted before convergence");
        K = std::min(std::min(n, opt.max_krylov), kk + std::max(20, kk / 2));
    }
}

EigPairs dense_pencil(const SpMat& A, const Vec& Bdiag, int m, double sigma) {
    const int n = static_cast<int>(A.rows());
    if (n > 6000) throw ConfigError("dense_pencil: problem too large");
    Vec isq = Bdiag.cwiseSqrt().cwiseInverse();
    Mat C = Mat(A);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) C(i, j) *= isq(i) * isq(j);
    Eigen::SelfAdjointEigenSolver<Mat> es(C);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a2, int b2) {
        return std::abs(es.eigenvalues()(a2) - sigma) < std::abs(es.eigenvalues()(b2) - sigma);
    });
    EigPairs out;
    const int want = std::min(m, n);
    out.values.resize(want);
    out.vectors.resize(n, want);
    for (int t = 0; t < want; ++t) {
        out.values(t) = es.eigenvalues()(order[t]);
        out.vectors.col(t) = (es.eigenvectors().col(order[t]).array() * isq.array()).matrix();
    }
    return out;
}

Inertia ldlt_inertia(const SpMat& A) {
    Inertia out;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success) return out;
    const Vec& D = ldlt.vectorD();
    if (!D.allFinite()) return out;
    const double tiny = 1e-14 * D.cwiseAbs().maxCoeff();
    for (int i = 0; i < D.size(); ++i) {
        if (D(i) > tiny)
            ++out.pos;
        else if (D(i) < -tiny)
            ++out.neg;
        else
            ++out.zero;
    }
    out.ok = true;
    return out;
}

}  // namespace fg
