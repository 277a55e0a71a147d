#pragma once

// Symmetric generalized eigenproblem  A x = lambda B x  with diagonal SPD B:
// shift-invert Lanczos with full B-reorthogonalization for the eigenvalues
// nearest a shift, a dense oracle for small problems, and LDLT inertia for
// counting positive eigenvalues.

#include "fg/grid.hpp"

namespace fg {

struct EigPairs {
    Vec values;   // sorted by |value - sigma|, ascending
    Mat vectors;  // B-orthonormal columns
};

struct ShiftInvertOptions {
    double sigma = 0.0;
    int krylov = 0;        // 0 -> automatic
    int max_krylov = 320;
    double tol = 1e-10;    // relative Ritz residual
    unsigned seed = 42;    // deterministic start vector
};

// m eigenvalues of (A,B) nearest sigma. Throws EigensolverStall if the Krylov
// space cannot converge the requested pairs.
EigPairs shift_invert(const SpMat& A, const Vec& Bdiag, int m, const ShiftInvertOptions& opt);

// Dense solve of the full pencil (for grids up to ~5000 unknowns); returns the
// m eigenvalues nearest sigma.
EigPairs dense_pencil(const SpMat& A, const Vec& Bdiag, int m, double sigma);

struct Inertia {
    int pos = 0, neg = 0, zero = 0;
    bool ok = false;
};

// Inertia of symmetric A via sparse LDLT (Sylvester: counts of the pencil).
Inertia ldlt_inertia(const SpMat& A);

}  // namespace fg
