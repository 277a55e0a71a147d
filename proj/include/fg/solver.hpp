#pragma once

// Nonlinear residual S_eps(u) = eps^2 Lap u - (u - a)(u^2 - 1) on the grid,
// damped Newton, the frozen-Jacobian fixed-point map of the contraction
// argument, and eps-continuation.

#include <optional>

#include "fg/grid.hpp"

namespace fg {

// residual_i = -eps^2 (G u)_i / w_i - (u_i - a_i)(u_i^2 - 1)
Vec residual(const Grid& g, const SpMat& G, const Vec& u, double eps);

// weighted Jacobian  J_hat = -eps^2 G - D_w diag(3u^2 - 2au - 1); symmetric,
// equal to D_w times the derivative of the residual.
SpMat jacobian_weighted(const Grid& g, const SpMat& G, const Vec& u, double eps);

// Euler energy J_eps(u) = eps^2/2 u^T G u + sum w F(x,u); its gradient is
// exactly -w .* residual by construction.
double energy(const Grid& g, const SpMat& G, const Vec& u, double eps);
Vec energy_gradient(const Grid& g, const SpMat& G, const Vec& u, double eps);

struct NewtonConfig {
    double tol = 1e-11;          // residual sup-norm
    int max_iter = 30;
    int max_backtrack = 12;
    // resonance guard: if min_eig_guard is set and |guard| < threshold, the
    // solve refuses to start (signals a resonant eps).
    std::optional<double> min_eig_guard;
    double min_eig_threshold = 0.0;
};

struct SolveReport {
    std::vector<double> res_norms;
    std::vector<double> step_norms;
    bool converged = false;
    int iterations = 0;
    double final_res = 0.0;
    Vec u;
    // fixed-point diagnostics
    double first_iterate_norm = 0.0;
    double contraction_factor = 0.0;
};

SolveReport newton_solve(const Grid& g, const SpMat& G, const Vec& u0, double eps,
                         const NewtonConfig& cfg);

struct FixedPointConfig {
    double step_tol = 1e-13;
    double res_tol = 1e-12;
    int max_iter = 400;
    double divergence_ratio = 0.9;  // NotContractive beyond this
};

// Picard iteration of  F(w) = -L^{-1}[S(u_hat) - (3 u_hat - a) w^2 - w^3]
// with the Jacobian frozen at u_hat.
SolveReport fixed_point_solve(const Grid& g, const SpMat& G, const Vec& u_hat, double eps,
                              const FixedPointConfig& cfg);

struct ContinuationStep {
    double eps;
    bool ok = false;
    bool reseeded = false;
    double final_res = 0.0;
    int iterations = 0;
    std::string error;
};

// Monotone eps scan; each solve seeded by the previous solution, with an
// ansatz re-seed (via the callback) after failures.
std::vector<ContinuationStep> continuation(
    const Grid& g, const SpMat& G, const std::vector<double>& eps_seq,
    const std::function<Vec(double)>& seed_at, const NewtonConfig& cfg);

}  // namespace fg
