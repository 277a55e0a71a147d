#pragma once

// Order-k layer ansatz u_{k,eps} = H(zeta - Phi(eps y)) + sum_i eps^i h_i,
// built by the Fredholm recursion: Phi_0 from the curvature solvability
// condition, higher (h_N, Phi_{N-1}) from the numerically extracted eps^N
// residual coefficient. The tables are eps-independent; evaluation at a
// given eps happens on demand. Also builds the approximate eigenpair
// (Psi = H' + eps H_1, mu_bar = sqrt2 b) and the cutoff extension.

#include "fg/geometry.hpp"
#include "fg/line_profile.hpp"

namespace fg {

enum class EvalMode { model, exact };

struct AnsatzOptions {
    int k = 2;
    double S = 20.0;
    double hs = 0.01;
    int ny = 128;            // interface nodes (forced to 1 for point interfaces)
    int taylor_order = 4;    // powers of zeta kept in the model coefficient field
    double gamma = 0.7;      // cutoff exponent
    double ladder_eps0 = 0.1;
    double drift_tol = 1e-4;
    double defect_tol = 1e-8;
    // sign-calibration experiment: build with the curvature sign negated while
    // measuring against the true geometry (k = 1 only).
    bool flip_kappa = false;
};

struct LayerAnsatz {
    const FermiChart* chart = nullptr;
    const CoefficientField* field = nullptr;
    AnsatzOptions opt;
    int k = 0;  // levels built so far
    ProfileTable prof;
    NormalTaylor taylor;
    std::shared_ptr<const L0Solver> l0;  // cached bordered factorization

    std::vector<Vec> Phi, Phi_y, Phi_yy;  // index i = 0..k-1

    struct Level {
        Mat h, h_s, h_ss, h_sy, h_yy;  // ny x ns
    };
    std::vector<Level> lev;  // lev[i] holds h_{i+1}

    // approximate eigenpair
    Mat H1, H1_s, H1_ss;
    Vec mu_bar;      // sqrt2 * b(y)
    Vec mu_bar_num;  // discrete-orthogonality value (= sqrt2 b + O(hs^2))

    double kappa_eff(int iy) const {
        return (opt.flip_kappa ? -1.0 : 1.0) * chart->kappa(iy);
    }

    // ---- eps-dependent evaluation helpers ----
    double phi(int iy, double eps) const;
    double phi_y(int iy, double eps) const;
    double phi_yy(int iy, double eps) const;

    // u and its s-derivative at a table node (iy, is); includes H + corrections.
    double u_node(int iy, int is, double eps) const;

    // u(y_iy, s) for off-grid s via cubic interpolation of the h tables.
    double u_interp(int iy, double s, double eps) const;
    double us_interp(int iy, double s, double eps) const;
    // d/d eps of u_{k,eps} at fixed unscaled point (zeta_bar = eps*(s+Phi)).
    double ueps_interp(int iy, double s, double eps) const;

    double cutoff(double zeta, double eps) const;       // chi_eps(|zeta|)
    double cutoff_deps(double zeta_bar, double eps) const;  // d/d eps at fixed zeta_bar
};

// --- construction steps (exposed for tests; assemble_ansatz drives them) ---

// Phi_0 = sqrt2 kappa / (2 b): the value making the h_1 right side
// orthogonal to H' (ratio int (H')^2 / int H'(1-H^2), computed by quadrature).
Vec compute_phi0(const Vec& kappa, const Vec& b, const ProfileTable& prof);

// Right side of the h_1 equation at one interface node.
Vec h1_rhs(const LayerAnsatz& A, int iy);

// Solves the h_1 equation for every y; throws SolvabilityViolation if any
// defect exceeds opt.defect_tol.
void solve_h1(LayerAnsatz& A);

// eps^N Taylor coefficient of the model residual of the order-(N-1) ansatz
// (with Phi_{N-1} = 0), sign-flipped so that L0 h_N = Phi_{N-1} b (1-H^2) + F_N.
Mat extract_FN(const LayerAnsatz& A, int N);

// b Phi_{N-1} = -int H' F_N / int H'(1-H^2)   (denominator cached by quadrature)
Vec compute_phi_next(const Mat& FN, const Vec& b, const ProfileTable& prof);

// Completes level N from F_N (computes Phi_{N-1}, solves for h_N).
void solve_h_level(LayerAnsatz& A, int N, const Mat& FN);

// L0 H1 = -2 b (s+Phi0) H H' - H'' kappa + 6 H H' h1 + mu H', with mu chosen
// to annihilate the discrete defect; asserts |mu/b - sqrt2| < 1e-3.
void build_approx_eigenpair(LayerAnsatz& A);

LayerAnsatz assemble_ansatz(const FermiChart& chart, const CoefficientField& field,
                            const AnsatzOptions& opt);

// Scaled residual S_eps(u_ansatz) on the (y,s) table grid. model mode uses the
// Taylor coefficient field and the Gtilde volume expansion (polynomial in eps,
// globally defined in s); exact mode uses the true a and volume factor and is
// only meaningful where |eps (s+Phi)| stays inside the chart margin.
Mat scaled_residual(const LayerAnsatz& A, double eps, EvalMode mode);

// sup over the physical window of the exact-mode residual.
double residual_sup(const LayerAnsatz& A, double eps);

// sup over the window of  L_eps Psi - eps mu_bar H'  (the zeta-only operator
// applied to the approximate eigenfunction); decays like eps^2.
double eigen_residual_sup(const LayerAnsatz& A, double eps);

struct OrderStudy {
    std::vector<double> eps;
    std::vector<double> sup;
    double slope = 0.0;
};

OrderStudy residual_order_study(const LayerAnsatz& A, const std::vector<double>& eps_list);
OrderStudy eigen_residual_order_study(const LayerAnsatz& A, const std::vector<double>& eps_list);

// Decay diagnostics: max over |s| <= S-2 of |row| e^{sqrt2 |s|} / (1+|s|)^d.
double decay_constant(const Vec& row, const Vec& s, double d);

}  // namespace fg
