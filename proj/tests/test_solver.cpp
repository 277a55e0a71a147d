#include <doctest.h>

#include <memory>
#include <random>

#include "fg/eigsolve.hpp"
#include "fg/solver.hpp"

using namespace fg;

namespace {

struct Setup1D {
    std::shared_ptr<FermiChart> chart;
    CoefficientField field;
    Grid grid;
    SpMat G;
};

Setup1D make_1d(int n = 1025) {
    DomainSpec d;
    d.kind = DomainKind::interval;
    d.lo = -0.9;
    d.hi = 0.9;
    d.dim_n = 1;
    InterfaceSpec i;
    i.kind = InterfaceKind::point;
    i.x0 = 0.0;
    Setup1D s;
    s.field = CoefficientField::linear(1.0);
    s.chart = std::make_shared<FermiChart>(build_fermi_chart(d, i, s.field, 0.45, 1));
    s.grid = make_grid(*s.chart, s.field, 1, n);
    s.G = stiffness2(s.grid);
    return s;
}

LayerAnsatz ansatz_1d(const FermiChart& ch, const CoefficientField& f, int k) {
    AnsatzOptions o;
    o.k = k;
    o.hs = 0.01;
    o.ny = 1;
    return assemble_ansatz(ch, f, o);
}

}  // namespace

TEST_CASE("residual: constant equilibria and the uncorrected profile") {
    Setup1D s = make_1d();

    SUBCASE("a = 0: u = +-1 and u = 0 are exact equilibria") {
        Grid g = s.grid;
        g.a_vals.setZero();
        for (double c : {1.0, -1.0, 0.0}) {
            Vec u = Vec::Constant(g.size(), c);
            CHECK(residual(g, s.G, u, 0.05).lpNorm<Eigen::Infinity>() < 1e-14);
        }
    }
    SUBCASE("a = x, u = tanh(x/(sqrt2 eps)): residual is first order in eps") {
        std::vector<double> eps_list = {0.1, 0.05, 0.025};
        std::vector<double> sup;
        for (double eps : eps_list) {
            Vec u(s.grid.size());
            for (int i = 0; i < s.grid.size(); ++i)
                u(i) = std::tanh(s.grid.zeta_bar(i) / (kSqrt2 * eps));
            Vec r = residual(s.grid, s.G, u, eps);
            double m = 0.0;
            for (int i = 2; i + 2 < s.grid.size(); ++i) m = std::max(m, std::abs(r(i)));
            sup.push_back(m);
        }
        const double slope = loglog_slope(eps_list, sup);
        CHECK(slope >= 0.7);
        CHECK(slope <= 1.3);
    }
}

TEST_CASE("discrete Neumann compatibility: stiffness annihilates constants") {
    Setup1D s = make_1d(257);
    Vec one = Vec::Ones(s.grid.size());
    CHECK((s.G * one).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("jacobian is the exact derivative of the residual") {
    Setup1D s = make_1d(257);
    std::mt19937 rng(3);
    std::normal_distribution<double> gauss;
    const double eps = 0.07, dlt = 1e-5;
    for (int trial = 0; trial < 3; ++trial) {
        Vec u(s.grid.size()), v(s.grid.size());
        for (int i = 0; i < s.grid.size(); ++i) {
            u(i) = 0.8 * std::tanh(s.grid.zeta_bar(i) / (kSqrt2 * eps)) + 0.1 * gauss(rng);
            v(i) = gauss(rng);
        }
        SpMat J = jacobian_weighted(s.grid, s.G, u, eps);
        Vec Jv = (J * v).array() / s.grid.w.array();
        Vec fd = (residual(s.grid, s.G, u + dlt * v, eps) -
                  residual(s.grid, s.G, u - dlt * v, eps)) /
                 (2.0 * dlt);
        CHECK((fd - Jv).norm() / Jv.norm() < 1e-6);
        // weighted symmetry
        SpMat JT = SpMat(J.transpose());
        double defect = 0.0;
        for (int k = 0; k < J.outerSize(); ++k)
            for (SpMat::InnerIterator it(J, k); it; ++it)
                defect = std::max(defect, std::abs(it.value() - JT.coeff(it.row(), it.col())));
        CHECK(defect < 1e-12);
    }
}

TEST_CASE("linearization at u=1, a=0 is eps^2 Lap - 2 with top eigenvalue -2") {
    Setup1D s = make_1d(201);
    Grid g = s.grid;
    g.a_vals.setZero();
    Vec u = Vec::Ones(g.size());
    const double eps = 0.1;
    Vec pot = linearized_potential(g, u);
    CHECK((pot.array() + 2.0).abs().maxCoeff() < 1e-14);
    SpMat A = pencil_matrix(g, weighted_lap4(g), eps, pot);
    EigPairs p = dense_pencil(A, g.w, 1, -2.0);
    CHECK(p.values(0) == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("newton: 1D layer solves") {
    Setup1D s = make_1d(2049);
    LayerAnsatz A = ansatz_1d(*s.chart, s.field, 2);
    NewtonConfig cfg;

    SUBCASE("a = x, eps = 0.05, order-2 seed: few iterations, tight residual") {
        Vec u0 = extended_u(s.grid, A, 0.05);
        SolveReport rep = newton_solve(s.grid, s.G, u0, 0.05, cfg);
        CHECK(rep.converged);
        CHECK(rep.iterations <= 6);
        CHECK(rep.final_res < 1e-11);
        CHECK(rep.u.maxCoeff() <= 1.0 + 3 * 0.05);
        CHECK(rep.u.minCoeff() >= -1.0 - 3 * 0.05);
        // quadratic tail on the pre-rounding-floor steps
        const auto& rn = rep.res_norms;
        CHECK(rn[2] < 1e-4 * rn[1]);
    }
    SUBCASE("a = 0 (homogeneous Allen-Cahn): layer at 0 persists") {
        Grid g = s.grid;
        g.a_vals.setZero();
        const double eps = 0.06;
        Vec u0(g.size());
        for (int i = 0; i < g.size(); ++i)
            u0(i) = std::tanh(g.zeta_bar(i) / (kSqrt2 * eps));
        SolveReport rep = newton_solve(g, s.G, u0, eps, cfg);
        CHECK(rep.converged);
        // the homogeneous layer is only exponentially pinned: the zero sits at
        // the center up to the e^{-c/eps} tunneling scale
        int mid = g.size() / 2;
        CHECK(std::abs(rep.u(mid)) < 1e-3);
    }
    SUBCASE("resonance guard raises SingularJacobian") {
        NewtonConfig guard;
        guard.min_eig_guard = 1e-7;
        guard.min_eig_threshold = 1e-4;
        Vec u0 = extended_u(s.grid, A, 0.05);
        CHECK_THROWS_AS(newton_solve(s.grid, s.G, u0, 0.05, guard), SingularJacobian);
    }
}

TEST_CASE("energy gradient equals minus the weighted residual; critical at solutions") {
    Setup1D s = make_1d(513);
    std::mt19937 rng(5);
    std::normal_distribution<double> gauss;
    const double eps = 0.08;
    Vec u(s.grid.size());
    for (int i = 0; i < s.grid.size(); ++i)
        u(i) = std::tanh(s.grid.zeta_bar(i) / (kSqrt2 * eps)) + 0.05 * gauss(rng);
    Vec gr = energy_gradient(s.grid, s.G, u, eps);
    Vec wr = (s.grid.w.array() * residual(s.grid, s.G, u, eps).array()).matrix();
    CHECK((gr + wr).lpNorm<Eigen::Infinity>() < 1e-13);

    LayerAnsatz A = ansatz_1d(*s.chart, s.field, 2);
    SolveReport rep = newton_solve(s.grid, s.G, extended_u(s.grid, A, eps), eps, NewtonConfig{});
    CHECK(energy_gradient(s.grid, s.G, rep.u, eps).lpNorm<Eigen::Infinity>() < 1e-9);
    Vec v(s.grid.size());
    for (int i = 0; i < s.grid.size(); ++i) v(i) = gauss(rng);
    v /= v.lpNorm<Eigen::Infinity>();
    const double d = 1e-6;
    const double ep = energy(s.grid, s.G, rep.u + d * v, eps);
    const double em = energy(s.grid, s.G, rep.u - d * v, eps);
    CHECK(std::abs(ep - em) / (2 * d) < 1e-7);
}

TEST_CASE("mesh convergence of the solved layer is second order") {
    const double eps = 0.06;
    std::vector<double> diffs;
    Vec coarse;
    for (int n : {513, 1025, 2049}) {
        Setup1D s = make_1d(n);
        LayerAnsatz A = ansatz_1d(*s.chart, s.field, 2);
        SolveReport rep =
            newton_solve(s.grid, s.G, extended_u(s.grid, A, eps), eps, NewtonConfig{});
        if (coarse.size() > 0) {
            double dmax = 0.0;
            for (int i = 0; i < coarse.size(); ++i)
                dmax = std::max(dmax, std::abs(rep.u(2 * i) - coarse(i)));
            diffs.push_back(dmax);
        }
        coarse = rep.u;
    }
    CHECK(diffs[0] / diffs[1] == doctest::Approx(4.0).epsilon(0.4));
}

TEST_CASE("fixed point: agreement with Newton and failure modes") {
    Setup1D s = make_1d(2049);
    LayerAnsatz A = ansatz_1d(*s.chart, s.field, 2);
    const double eps = 0.05;
    Vec uhat = extended_u(s.grid, A, eps);

    SUBCASE("contraction to the Newton solution") {
        SolveReport fr = fixed_point_solve(s.grid, s.G, uhat, eps, FixedPointConfig{});
        CHECK(fr.converged);
        CHECK(fr.contraction_factor < 0.5);
        SolveReport nr = newton_solve(s.grid, s.G, uhat, eps, NewtonConfig{});
        CHECK((fr.u - nr.u).lpNorm<Eigen::Infinity>() < 1e-9);
        CHECK(fr.first_iterate_norm > 0.0);
        CHECK(fr.first_iterate_norm < 1e-2);  // ~ C eps^{k+1} ||L^{-1}||
    }
    SUBCASE("a far-off frozen state is not contractive") {
        Vec bad(s.grid.size());
        for (int i = 0; i < s.grid.size(); ++i)
            bad(i) = 0.4 * std::tanh((s.grid.zeta_bar(i) - 0.45) / (kSqrt2 * eps));
        CHECK_THROWS_AS(fixed_point_solve(s.grid, s.G, bad, eps, FixedPointConfig{}),
                        NotContractive);
    }
}

TEST_CASE("continuation over an eps ladder") {
    Setup1D s = make_1d(1025);
    LayerAnsatz A = ansatz_1d(*s.chart, s.field, 2);
    auto seed = [&](double e) { return extended_u(s.grid, A, e); };

    SUBCASE("1D has no resonance: every step converges") {
        std::vector<double> seq;
        for (int i = 0; i <= 19; ++i) seq.push_back(0.1 - i * (0.08 / 19.0));
        auto steps = continuation(s.grid, s.G, seq, seed, NewtonConfig{});
        for (const auto& st : steps) CHECK(st.ok);
        CHECK(steps.front().reseeded);
    }
    SUBCASE("degenerate ladder equals a single solve") {
        auto steps = continuation(s.grid, s.G, {0.05}, seed, NewtonConfig{});
        SolveReport nr = newton_solve(s.grid, s.G, seed(0.05), 0.05, NewtonConfig{});
        CHECK(steps.size() == 1);
        CHECK(steps[0].ok);
        CHECK(steps[0].final_res == doctest::Approx(nr.final_res));
    }
}
