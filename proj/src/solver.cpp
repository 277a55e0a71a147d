#include "fg/solver.hpp"

#include <Eigen/SparseLU>

namespace fg {

Vec residual(const Grid& g, const SpMat& G, const Vec& u, double eps) {
    Vec Gu = G * u;
    Vec r(g.size());
    for (int i = 0; i < g.size(); ++i) {
        const double ui = u(i);
        r(i) = -eps * eps * Gu(i) / g.w(i) - (ui - g.a_vals(i)) * (ui * ui - 1.0);
    }
    return r;
}

SpMat jacobian_weighted(const Grid& g, const SpMat& G, const Vec& u, double eps) {
    SpMat J = -eps * eps * G;
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> t;
    t.reserve(g.size());
    for (int i = 0; i < g.size(); ++i) {
        const double fp = 3.0 * u(i) * u(i) - 2.0 * g.a_vals(i) * u(i) - 1.0;
        t.emplace_back(i, i, -g.w(i) * fp);
    }
    SpMat D(g.size(), g.size());
    D.setFromTriplets(t.begin(), t.end());
    J += D;
    J.makeCompressed();
    return J;
}

double energy(const Grid& g, const SpMat& G, const Vec& u, double eps) {
    double e = 0.5 * eps * eps * u.dot(G * u);
    for (int i = 0; i < g.size(); ++i) {
        const double ui = u(i), a = g.a_vals(i);
        const double F = 0.25 * ui * ui * ui * ui - 0.5 * ui * ui + 0.25 -
                         a * (ui * ui * ui / 3.0 - ui - 2.0 / 3.0);
        e += g.w(i) * F;
    }
    return e;
}

Vec energy_gradient(const Grid& g, const SpMat& G, const Vec& u, double eps) {
    Vec grad = eps * eps * (G * u);
    for (int i = 0; i < g.size(); ++i) {
        const double ui = u(i);
        grad(i) += g.w(i) * (ui - g.a_vals(i)) * (ui * ui - 1.0);
    }
    return grad;
}

SolveReport newton_solve(const Grid& g, const SpMat& G, const Vec& u0, double eps,
                         const NewtonConfig& cfg) {
    if (cfg.min_eig_guard && std::abs(*cfg.min_eig_guard) < cfg.min_eig_threshold)
        throw SingularJacobian("weighted min |eigenvalue| " +
                               std::to_string(*cfg.min_eig_guard) + " below threshold " +
                               std::to_string(cfg.min_eig_threshold));
    SolveReport rep;
    rep.u = u0;
    Vec r = residual(g, G, rep.u, eps);
    double rn = r.lpNorm<Eigen::Infinity>();
    rep.res_norms.push_back(rn);

    Eigen::SparseLU<SpMat> lu;
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (rn < cfg.tol) {
            rep.converged = true;
            break;
        }
        SpMat J = jacobian_weighted(g, G, rep.u, eps);
        lu.compute(J);
        if (lu.info() != Eigen::Success)
            throw SingularJacobian("sparse factorization failed at iteration " +
                                   std::to_string(it));
        Vec rhs = -(g.w.array() * r.array()).matrix();
        Vec step = lu.solve(rhs);
        if (!step.allFinite())
            throw SingularJacobian("non-finite Newton step at iteration " + std::to_string(it));

        double lam = 1.0;
        Vec u_try;
        double rn_try = 0.0;
        int bt = 0;
        for (; bt <= cfg.max_backtrack; ++bt) {
            u_try = rep.u + lam * step;
            rn_try = residual(g, G, u_try, eps).lpNorm<Eigen::Infinity>();
            if (rn_try < rn || rn < 1e-6) break;  // undamped near convergence
            lam *= 0.5;
        }
        if (bt > cfg.max_backtrack)
            throw MaxIterations("Newton backtracking stalled at residual " + std::to_string(rn));
        rep.step_norms.push_back(lam * step.lpNorm<Eigen::Infinity>());
        rep.u = u_try;
        r = residual(g, G, rep.u, eps);
        rn = r.lpNorm<Eigen::Infinity>();
        rep.res_norms.push_back(rn);
        rep.iterations = it + 1;
    }
    if (!rep.converged && rn < cfg.tol) rep.converged = true;
    if (!rep.converged)
        throw MaxIterations("Newton did not reach tolerance; final residual " +
                            std::to_string(rn));
    rep.final_res = rn;
    return rep;
}

SolveReport fixed_point_solve(const Grid& g, const SpMat& G, const Vec& u_hat, double eps,
                              const FixedPointConfig& cfg) {
    SolveReport rep;
    SpMat L = jacobian_weighted(g, G, u_hat, eps);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(L);
    if (lu.info() != Eigen::Success)
        throw SingularJacobian("frozen-Jacobian factorization failed");

    const Vec S0 = residual(g, G, u_hat, eps);
    Vec w = Vec::Zero(g.size());
    Vec w_prev = w;
    double prev_step = 0.0;
    int bad = 0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        // F(w) = -L^{-1}[ S(u_hat) - (3 u_hat - a) w^2 - w^3 ]
        Vec bracket = S0.array() - (3.0 * u_hat.array() - g.a_vals.array()) * w.array().square() -
                      w.array().cube();
        Vec rhs = -(g.w.array() * bracket.array()).matrix();
        Vec w_next = lu.solve(rhs);
        const double step = (w_next - w).lpNorm<Eigen::Infinity>();
        rep.step_norms.push_back(step);
        if (it == 0) rep.first_iterate_norm = w_next.lpNorm<Eigen::Infinity>();
        if (it >= 1 && prev_step > 0.0) {
            const double ratio = step / prev_step;
            rep.contraction_factor = std::max(rep.contraction_factor, ratio);
            if (ratio >= cfg.divergence_ratio) {
                if (++bad >= 3)
                    throw NotContractive("contraction ratio " + std::to_string(ratio) +
                                         " at iteration " + std::to_string(it));
            } else {
                bad = 0;
            }
        }
        w_prev = w;
        w = w_next;
        prev_step = step;
        rep.iterations = it + 1;
        const double rn = residual(g, G, u_hat + w, eps).lpNorm<Eigen::Infinity>();
        rep.res_norms.push_back(rn);
        if (step < cfg.step_tol || rn < cfg.res_tol) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged)
        throw NotContractive("fixed-point iteration did not settle in " +
                             std::to_string(cfg.max_iter) + " iterations");
    rep.u = u_hat + w;
    rep.final_res = rep.res_norms.back();
    return rep;
}

std::vector<ContinuationStep> continuation(
    const Grid& g, const SpMat& G, const std::vector<double>& eps_seq,
    const std::function<Vec(double)>& seed_at, const NewtonConfig& cfg) {
    std::vector<ContinuationStep> steps;
    Vec carry;
    bool have_carry = false;
    for (double eps : eps_seq) {
        ContinuationStep st;
        st.eps = eps;
        Vec seed;
        if (have_carry) {
            seed = carry;
        } else {
            seed = seed_at(eps);
            st.reseeded = true;
        }
        try {
            SolveReport rep = newton_solve(g, G, seed, eps, cfg);
            st.ok = true;
            st.final_res = rep.final_res;
            st.iterations = rep.iterations;
            carry = rep.u;
            have_carry = true;
        } catch (const Error& e) {
            st.error = e.what();
            have_carry = false;  // re-seed from the ansatz next step
        }
        steps.push_back(std::move(st));
    }
    return steps;
}

}  // namespace fg
