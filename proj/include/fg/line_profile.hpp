#pragma once

// One-dimensional layer profile H = tanh(s/sqrt(2)), the model operator
// L0 = d^2/ds^2 + (1 - 3H^2) on a truncated line with Dirichlet ends, and a
// constrained (Fredholm) solver that projects out the H' kernel direction.

#include <memory>

#include "fg/common.hpp"

namespace fg {

struct LineGrid {
    double S = 20.0;  // half-length, s in [-S, S]
    int n = 4001;     // node count, odd so s=0 is a node

    double h() const { return 2.0 * S / (n - 1); }
    double s(int i) const { return -S + i * h(); }
    Vec nodes() const { return linspace(-S, S, n); }

    static LineGrid make(double S, double h_target);
};

struct ProfileTable {
    LineGrid grid;
    Vec s;             // nodes
    Vec H, Hp, Hpp;    // profile and derivatives (analytic)
    Vec one_minus_H2;  // 1 - H^2
    double A0 = 2.0;   // tail constant: 1 -/+ H ~ A0 e^{-sqrt2 |s|}
    double int_Hp2 = 0.0;       // trapz of (H')^2      (= 2 sqrt2 / 3)
    double int_Hp_1mH2 = 0.0;   // trapz of H'(1-H^2)   (= 4/3)
    double int_sHHp2 = 0.0;     // trapz of s H (H')^2  (= 1/3)
};

ProfileTable heteroclinic(const LineGrid& grid);

// Apply the centered-difference L0 with homogeneous Dirichlet values at +-S.
Vec l0_apply(const Vec& u, const ProfileTable& p);

// Top-m eigenvalues (non-increasing) of the discretized L0.
Vec l0_spectrum(const ProfileTable& p, int m);

struct L0Solve {
    Vec u;          // solution with <u, H'> = 0 (trapezoid weights)
    double defect;  // <f, H'> / ||H'||^2
};

// Solve L0 u = f - defect * H' subject to the H'-orthogonality constraint,
// via a bordered (saddle) system. Throws IllConditioned if the bordered
// residual exceeds 1e-10 relative.
L0Solve l0_solve(const Vec& f, const ProfileTable& p);

// Same solve with the bordered factorization cached; the profile table must
// outlive the solver. One factorization serves every interface node.
class L0Solver {
public:
    explicit L0Solver(const ProfileTable& p);
    ~L0Solver();
    L0Solver(const L0Solver&) = delete;
    L0Solver& operator=(const L0Solver&) = delete;
    L0Solve solve(const Vec& f) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace fg
