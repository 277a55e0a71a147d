#include "fg/grid.hpp"

#include <cmath>

namespace fg {

Grid make_grid(const FermiChart& chart, const CoefficientField& field, int nx, int nz) {
    Grid g;
    g.chart = &chart;
    g.nz = nz;
    switch (chart.domain.kind) {
        case DomainKind::interval:
            g.kind = GridKind::line;
            g.nx = 1;
            g.zlo = chart.domain.lo;
            g.zhi = chart.domain.hi;
            break;
        case DomainKind::radial_disk:
        case DomainKind::radial_annulus:
            g.kind = GridKind::radial;
            g.nx = 1;
            g.zlo = chart.domain.lo;
            g.zhi = chart.domain.hi;
            break;
        case DomainKind::periodic_strip:
            g.kind = GridKind::strip;
            g.nx = nx;
            if (nx != chart.ny)
                throw ConfigError("strip grid nx must match the chart interface nodes");
            g.zlo = chart.domain.lo;
            g.zhi = chart.domain.hi;
            break;
    }
    if (nz < 8) throw ConfigError("grid nz too small");

    const int n = g.size();
    g.w.resize(n);
    g.zeta_bar.resize(n);
    g.a_vals.resize(n);
    g.bhat.resize(n);
    const double hz = g.hz();
    const double hy = g.hy();
    const int dim = chart.n_ambient;

    for (int iy = 0; iy < g.nx; ++iy) {
        const double yv = chart.y(iy);
        for (int iz = 0; iz < g.nz; ++iz) {
            const int id = g.idx(iy, iz);
            const double z = g.zlo + iz * hz;
            double zb = 0.0, wv = 0.0;
            switch (g.kind) {
                case GridKind::line:
                    zb = chart.sigma * (z - chart.interface_.x0);
                    wv = hz;
                    break;
                case GridKind::radial: {
                    zb = chart.sigma * (z - chart.interface_.radius);
                    // cell-averaged volume of r^{n-1} dr
                    const double rl = std::max(g.zlo, z - 0.5 * hz);
                    const double rr = std::min(g.zhi, z + 0.5 * hz);
                    wv = (std::pow(rr, dim) - std::pow(rl, dim)) / dim;
                    break;
                }
                case GridKind::strip:
                    zb = chart.sigma * z;
                    wv = hy * hz;
                    break;
            }
            if (g.kind != GridKind::radial && (iz == 0 || iz == g.nz - 1)) wv *= 0.5;
            g.w(id) = wv;
            g.zeta_bar(id) = zb;
            g.a_vals(id) = chart.a(field, yv, zb);
        }
    }
    // positive extension of b: constant along the normal
    NormalTaylor nt = normal_taylor(field, chart, 1);
    for (int iy = 0; iy < g.nx; ++iy)
        for (int iz = 0; iz < g.nz; ++iz)
            g.bhat(g.idx(iy, iz)) = nt.b(g.kind == GridKind::strip ? iy : 0);
    return g;
}

SpMat stiffness2(const Grid& g) {
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> t;
    const double hz = g.hz();
    const double hy = g.hy();
    const int dim = g.chart->n_ambient;

    auto add_edge = [&](int i, int j, double c) {
        t.emplace_back(i, i, c);
        t.emplace_back(j, j, c);
        t.emplace_back(i, j, -c);
        t.emplace_back(j, i, -c);
    };

    for (int iy = 0; iy < g.nx; ++iy) {
        for (int iz = 0; iz + 1 < g.nz; ++iz) {
            double c = 1.0 / hz;
            if (g.kind == GridKind::radial) {
                const double rm = g.zlo + (iz + 0.5) * hz;
                c = std::pow(rm, dim - 1) / hz;
            } else if (g.kind == GridKind::strip) {
                c = hy / hz;
            }
            add_edge(g.idx(iy, iz), g.idx(iy, iz + 1), c);
        }
    }
    if (g.kind == GridKind::strip) {
        for (int iy = 0; iy < g.nx; ++iy) {
            const int iyp = (iy + 1) % g.nx;
            for (int iz = 0; iz < g.nz; ++iz) {
                double c = hz / hy;
                if (iz == 0 || iz == g.nz - 1) c *= 0.5;
                add_edge(g.idx(iy, iz), g.idx(iyp, iz), c);
            }
        }
    }
    SpMat G(g.size(), g.size());
    G.setFromTriplets(t.begin(), t.end());
    G.makeCompressed();
    return G;
}

SpMat weighted_lap4(const Grid& g) {
    if (g.kind == GridKind::radial) {
        // conservative 2nd-order flux form (the r^{n-1} weight needs it)
        SpMat G = stiffness2(g);
        return SpMat(-G);
    }
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> t;
    const double hz = g.hz();
    const double hy = g.hy();
    const double iz2 = 1.0 / (12.0 * hz * hz);
    const double iy2 = 1.0 / (12.0 * hy * hy);

    auto wz = [&](int iz) { return (iz == 0 || iz == g.nz - 1) ? 0.5 : 1.0; };

    for (int iy = 0; iy < g.nx; ++iy) {
        for (int iz = 0; iz < g.nz; ++iz) {
            const int row = g.idx(iy, iz);
            const double wrow = wz(iz) * hz * hy;

            // z-direction: folded 4th-order stencil (-1,16,-30,16,-1)/12h^2
            const double cz[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
            for (int o = -2; o <= 2; ++o) {
                int jz = iz + o;
                if (jz < 0) jz = -jz;                         // reflect about 0
                if (jz > g.nz - 1) jz = 2 * (g.nz - 1) - jz;  // reflect about end
                t.emplace_back(row, g.idx(iy, jz), wrow * cz[o + 2] * iz2);
            }
            // y-direction: 4th-order circulant
            if (g.nx > 4) {
                const double cy[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
                for (int o = -2; o <= 2; ++o) {
                    const int jy = (iy + o + 2 * g.nx) % g.nx;
                    t.emplace_back(row, g.idx(jy, iz), wrow * cy[o + 2] * iy2);
                }
            } else if (g.nx > 1) {
                // small periodic direction: 2nd order
                const double c2[3] = {1.0, -2.0, 1.0};
                for (int o = -1; o <= 1; ++o) {
                    const int jy = (iy + o + g.nx) % g.nx;
                    t.emplace_back(row, g.idx(jy, iz), wrow * c2[o + 1] / (hy * hy));
                }
            }
        }
    }
    SpMat L(g.size(), g.size());
    L.setFromTriplets(t.begin(), t.end());
    L.makeCompressed();
    return L;
}

SpMat pencil_matrix(const Grid& g, const SpMat& lapw, double eps, const Vec& pot) {
    SpMat A = eps * eps * lapw;
    SpMat P(g.size(), g.size());
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> t;
    t.reserve(g.size());
    for (int i = 0; i < g.size(); ++i) t.emplace_back(i, i, g.w(i) * pot(i));
    P.setFromTriplets(t.begin(), t.end());
    A += P;
    A.makeCompressed();
    return A;
}

Vec linearized_potential(const Grid& g, const Vec& u) {
    return (1.0 - 3.0 * u.array().square() + 2.0 * g.a_vals.array() * u.array()).matrix();
}

void check_cutoff_fits(const LayerAnsatz& A, double eps) {
    const double ramp_end = 0.75 * std::pow(eps, -A.opt.gamma) * eps;  // in zeta_bar units
    if (ramp_end >= 0.98 * A.chart->margin)
        throw TubeTooWide("cutoff ramp (" + std::to_string(ramp_end) +
                          ") exceeds the chart margin at eps=" + std::to_string(eps));
}

Vec extended_u(const Grid& g, const LayerAnsatz& A, double eps) {
    check_cutoff_fits(A, eps);
    Vec u(g.size());
    for (int id = 0; id < g.size(); ++id) {
        const double zb = g.zeta_bar(id);
        const double zeta = zb / eps;
        const double chi = A.cutoff(zeta, eps);
        const double sgn = zeta >= 0.0 ? 1.0 : -1.0;
        if (chi == 0.0) {
            u(id) = sgn;
            continue;
        }
        const int iy = g.chart_column(id);
        const double s = zeta - A.phi(iy, eps);
        u(id) = sgn + chi * (A.u_interp(iy, s, eps) - sgn);
    }
    return u;
}

Vec extended_u_eps(const Grid& g, const LayerAnsatz& A, double eps) {
    Vec v(g.size());
    for (int id = 0; id < g.size(); ++id) {
        const double zb = g.zeta_bar(id);
        const double zeta = zb / eps;
        const double chi = A.cutoff(zeta, eps);
        if (chi == 0.0) {
            v(id) = 0.0;
            continue;
        }
        const int iy = g.chart_column(id);
        const double s = zeta - A.phi(iy, eps);
        const double sgn = zeta >= 0.0 ? 1.0 : -1.0;
        const double uval = A.u_interp(iy, s, eps);
        v(id) = A.cutoff_deps(zb, eps) * (uval - sgn) + chi * A.ueps_interp(iy, s, eps);
    }
    return v;
}

}  // namespace fg
