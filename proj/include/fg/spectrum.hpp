#pragma once

// Eigen-analysis: the b-weighted Laplace-Beltrami spectrum on K with its Weyl
// fit, the linearized operator's near-zero spectrum, the small-eigenvalue law
// sqrt2 eps - eps^2 lambda_j, eigenfunction decomposition, eigenvalue
// eps-derivatives with Kato-quotient bounds, and the eps-scan (crossings,
// counts, certified spectral gaps).

#include "fg/eigsolve.hpp"
#include "fg/solver.hpp"

namespace fg {

struct KSpectrum {
    Vec lambda;  // ascending, weight b
    Mat phi;     // b-orthonormal columns
    double weyl_C = 0.0;
    double weyl_exponent = 0.0;
    double lenK = 0.0;
    int ny = 0;
};

// Discretized periodic weighted eigenproblem -Lap_K phi = lambda b phi,
// solved densely; Weyl constant fitted on the top half of the computed modes.
KSpectrum k_spectrum(const FermiChart& chart, const Vec& b, int m);

// sqrt2 eps - eps^2 lambda_j for j = 1..count.
Vec predict_small_eigs(const KSpectrum& ks, double eps, int count);

struct SpectralContext {
    const FermiChart* chart = nullptr;
    const CoefficientField* field = nullptr;
    const LayerAnsatz* ansatz = nullptr;
    Grid grid;
    SpMat lapw;  // weighted Laplacian used by the pencil
    SpMat G2;    // stiffness for H1 norms

    Vec Bdiag() const { return (grid.w.array() * grid.bhat.array()).matrix(); }
    SpMat pencil_at(double eps, Vec* u_out = nullptr) const;
    double h1eps_norm(const Vec& x, double eps) const;
};

SpectralContext make_spectral_context(const FermiChart& chart, const CoefficientField& field,
                                      const LayerAnsatz& ansatz, int nx, int nz);

struct EigenReport {
    double eps = 0.0;
    Vec values;   // m nearest zero, sorted by |value|
    Mat vectors;  // B-orthonormal
    int n_pos = -1;  // positive-eigenvalue count (inertia), -1 if unavailable
};

EigenReport linearized_spectrum(const SpectralContext& ctx, double eps, int m,
                                bool dense_oracle = false, bool want_inertia = true);

struct MatchReport {
    Vec computed, predicted, deviation;
    double max_dev = 0.0, mean_dev = 0.0;
};

// Pairs the `count` nearest-zero computed eigenvalues with the predictions by
// sorted order. With count=0, uses all modes inside |lambda| <= window and
// throws CountMismatch if the computed and predicted counts differ.
MatchReport match_predictions(const EigenReport& rep, const KSpectrum& ks, double eps,
                              int count, double window);

struct Decomposition {
    Vec phibar;  // per-y profile of the projection onto Psi
    Vec alpha;   // K-eigenbasis coefficients (weight b)
    double perp_ratio_h1 = 0.0;   // ||phi_perp||_H1eps / ||phi||_H1eps
    double high_mass_frac = 0.0;  // mass of alpha_j with |lambda_{j,eps}| >= eps^{5/4}
    double proj_fraction = 0.0;   // ||phibar Psi||_B^2 / ||phi||_B^2
};

Decomposition decompose_eigenfunction(const SpectralContext& ctx, const KSpectrum& ks,
                                      const Vec& phi, double eps);

// One entry per eigenvalue cluster (degenerate pairs move as a unit; the
// individual eigenvectors inside a pair are an arbitrary rotation, so
// tracking works on the invariant subspaces).
struct ModeDerivative {
    double lambda = 0.0;      // cluster mean eigenvalue
    int multiplicity = 1;
    double fd = 0.0;          // centered difference of the tracked cluster
    double T1 = 0.0, T2 = 0.0;        // exact Kato quotient range on the eigenspace
    double T1_paper = 0.0, T2_paper = 0.0;  // quotient without the 2 a v term
    double overlap = 1.0;     // min subspace overlap across the eps stencil
};

// Tracks near-zero clusters across eps-delta, eps, eps+delta and reports
// centered-difference derivatives plus the Kato-quotient sandwich.
std::vector<ModeDerivative> eig_derivative(const SpectralContext& ctx, double eps,
                                           double delta, int m,
                                           double overlap_threshold = 0.9);

struct CrossingEvent {
    double eps_star = 0.0;
    double predicted = 0.0;  // nearest sqrt2/lambda_j
    int multiplicity = 1;
};

struct GapCertificate {
    int block_l = 0;       // dyadic block (2^{-l-1}, 2^{-l})
    double a = 0.0, b = 0.0;
    double mid = 0.0;
    double min_abs_eig = 0.0;
};

struct EpsScanReport {
    std::vector<double> eps_grid;
    std::vector<int> n_pos;
    std::vector<Vec> small_eigs;
    std::vector<CrossingEvent> crossings;
    std::vector<GapCertificate> gaps;
    double count_slope = 0.0;
    double gap_width_exponent = 0.0;
    double inv_norm_exponent = 0.0;
    bool monotone_ok = true;
};

EpsScanReport scan_eps(const SpectralContext& ctx, const KSpectrum& ks, double eps_lo,
                       double eps_hi, int samples, int m);

}  // namespace fg
