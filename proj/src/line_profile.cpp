#include "fg/line_profile.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

namespace fg {

LineGrid LineGrid::make(double S, double h_target) {
    if (S < 15.0) throw ConfigError("line grid half-length must be >= 15");
    if (h_target <= 0.0) throw ConfigError("line grid spacing must be positive");
    int n = static_cast<int>(std::lround(2.0 * S / h_target)) + 1;
    if (n % 2 == 0) ++n;  // keep s = 0 on the grid
    return LineGrid{S, n};
}

ProfileTable heteroclinic(const LineGrid& grid) {
    ProfileTable p;
    p.grid = grid;
    p.s = grid.nodes();
    const int n = grid.n;
    p.H.resize(n);
    p.Hp.resize(n);
    p.Hpp.resize(n);
    p.one_minus_H2.resize(n);
    for (int i = 0; i < n; ++i) {
        const double si = p.s(i);
        const double t = std::tanh(si / kSqrt2);
        const double sech2 = 1.0 - t * t;
        p.H(i) = t;
        p.Hp(i) = sech2 / kSqrt2;
        p.Hpp(i) = -t * sech2;  // H'' = -sqrt2 H H' = H^3 - H
        p.one_minus_H2(i) = sech2;
    }
    const double h = grid.h();
    p.int_Hp2 = trapz2(p.Hp, p.Hp, h);
    p.int_Hp_1mH2 = trapz2(p.Hp, p.one_minus_H2, h);
    Vec sHHp2 = p.s.array() * p.H.array() * p.Hp.array().square();
    p.int_sHHp2 = trapz(sHHp2, h);
    p.A0 = 2.0;
    return p;
}

Vec l0_apply(const Vec& u, const ProfileTable& p) {
    const int n = p.grid.n;
    const double ih2 = 1.0 / (p.grid.h() * p.grid.h());
    Vec out(n);
    for (int i = 0; i < n; ++i) {
        const double um = (i > 0) ? u(i - 1) : 0.0;
        const double up = (i < n - 1) ? u(i + 1) : 0.0;
        out(i) = (um - 2.0 * u(i) + up) * ih2 + (1.0 - 3.0 * p.H(i) * p.H(i)) * u(i);
    }
    return out;
}

Vec l0_spectrum(const ProfileTable& p, int m) {
    if (m > 10) throw ConfigError("l0_spectrum: m <= 10");
    const int n = p.grid.n;
    const double ih2 = 1.0 / (p.grid.h() * p.grid.h());
    Vec diag(n), sub(n - 1);
    for (int i = 0; i < n; ++i) diag(i) = -2.0 * ih2 + 1.0 - 3.0 * p.H(i) * p.H(i);
    sub.setConstant(ih2);
    Eigen::SelfAdjointEigenSolver<Mat> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    const Vec& all = es.eigenvalues();  // ascending
    Vec top(m);
    for (int j = 0; j < m; ++j) top(j) = all(n - 1 - j);
    return top;
}

struct L0Solver::Impl {
    const ProfileTable* p;
    Eigen::SparseMatrix<double> M;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

L0Solver::L0Solver(const ProfileTable& p) : impl_(std::make_unique<Impl>()) {
    impl_->p = &p;
    const int n = p.grid.n;
    const double h = p.grid.h();
    const double ih2 = 1.0 / (h * h);

    // Trapezoid weights for the constraint row.
    Vec w = Vec::Constant(n, h);
    w(0) *= 0.5;
    w(n - 1) *= 0.5;
    Vec wHp = w.array() * p.Hp.array();

    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(5 * static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, i, -2.0 * ih2 + 1.0 - 3.0 * p.H(i) * p.H(i));
        if (i > 0) trips.emplace_back(i, i - 1, ih2);
        if (i < n - 1) trips.emplace_back(i, i + 1, ih2);
        trips.emplace_back(i, n, wHp(i));
        trips.emplace_back(n, i, wHp(i));
    }
    impl_->M.resize(n + 1, n + 1);
    impl_->M.setFromTriplets(trips.begin(), trips.end());
    impl_->M.makeCompressed();
    impl_->lu.compute(impl_->M);
    if (impl_->lu.info() != Eigen::Success)
        throw IllConditioned("bordered L0 factorization failed");
}

L0Solver::~L0Solver() = default;

L0Solve L0Solver::solve(const Vec& f) const {
    const ProfileTable& p = *impl_->p;
    const int n = p.grid.n;
    Vec rhs(n + 1);
    rhs.head(n) = f;
    rhs(n) = 0.0;
    Vec sol = impl_->lu.solve(rhs);

    Vec r = impl_->M * sol - rhs;
    const double scale = std::max(1.0, f.lpNorm<Eigen::Infinity>());
    if (r.lpNorm<Eigen::Infinity>() > 1e-10 * scale)
        throw IllConditioned("bordered L0 solve residual " +
                             std::to_string(r.lpNorm<Eigen::Infinity>()));

    L0Solve out;
    out.u = sol.head(n);
    out.defect = trapz2(f, p.Hp, p.grid.h()) / p.int_Hp2;
    return out;
}

L0Solve l0_solve(const Vec& f, const ProfileTable& p) { return L0Solver(p).solve(f); }

}  // namespace fg
