#pragma once

// Discrete grids over the supported domains with conservative (stiffness +
// lumped volume) operators, so the discrete energy gradient equals the
// negative weighted residual identically. The spectrum module additionally
// uses a 4th-order symmetric weighted Laplacian on the strip.

#include <Eigen/Sparse>

#include "fg/ansatz.hpp"
#include "fg/geometry.hpp"

namespace fg {

using SpMat = Eigen::SparseMatrix<double>;

enum class GridKind { line, radial, strip };

struct Grid {
    GridKind kind = GridKind::line;
    const FermiChart* chart = nullptr;
    int nx = 1;  // periodic direction (strip); 1 otherwise
    int nz = 0;  // bounded direction node count
    double zlo = 0.0, zhi = 0.0;  // bounded coordinate range (x, r, or z)
    double hy() const { return nx > 1 ? chart->lenK / nx : 1.0; }
    double hz() const { return (zhi - zlo) / (nz - 1); }
    int size() const { return nx * nz; }
    int idx(int iy, int iz) const { return iy * nz + iz; }

    Vec w;         // lumped volume weights per node
    Vec zeta_bar;  // signed distance (a-oriented) per node
    Vec a_vals;    // coefficient a per node
    Vec bhat;      // positive extension of b per node

    // chart interface column for a node (strip: iy; otherwise 0)
    int chart_column(int node) const { return kind == GridKind::strip ? node / nz : 0; }
};

// Builds the grid aligned with the chart (strip: nx must equal chart.ny).
Grid make_grid(const FermiChart& chart, const CoefficientField& field, int nx, int nz);

// SPD stiffness: u^T G u ~ int |grad u|^2 (2nd order, Neumann-natural).
SpMat stiffness2(const Grid& g);

// Symmetric weighted 4th-order Laplacian  D_w Lap4  (strip only; other kinds
// fall back to the 2nd-order -G form). Reflected-ghost closure in z keeps the
// matrix symmetric under the trapezoid weights and constants in the null space.
SpMat weighted_lap4(const Grid& g);

// A_hat = eps^2 * (weighted Laplacian) + D_w diag(pot); symmetric.
SpMat pencil_matrix(const Grid& g, const SpMat& lapw, double eps, const Vec& pot);

// potential of the linearized operator at state u: 1 - 3u^2 + 2 a u.
Vec linearized_potential(const Grid& g, const Vec& u);

// Cutoff-extended ansatz and its eps-derivative sampled on the grid.
Vec extended_u(const Grid& g, const LayerAnsatz& A, double eps);
Vec extended_u_eps(const Grid& g, const LayerAnsatz& A, double eps);

// Throws TubeTooWide if the cutoff ramp leaves the chart margin at this eps.
void check_cutoff_fits(const LayerAnsatz& A, double eps);

}  // namespace fg
