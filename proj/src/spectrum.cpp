#include "fg/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace fg {

KSpectrum k_spectrum(const FermiChart& chart, const Vec& b, int m) {
    const int ny = chart.ny;
    if (ny < 8) throw ConfigError("k_spectrum needs an interface grid");
    if (m > ny / 4) throw ConfigError("k_spectrum: m <= ny/4");
    const double h = chart.lenK / ny;

    // -d^2/dy^2, 4th-order periodic, symmetric positive semidefinite.
    Mat A = Mat::Zero(ny, ny);
    const double c[5] = {1.0, -16.0, 30.0, -16.0, 1.0};
    for (int i = 0; i < ny; ++i)
        for (int o = -2; o <= 2; ++o)
            A(i, (i + o + 2 * ny) % ny) += c[o + 2] / (12.0 * h * h);

    Vec D = b * h;  // weight matrix diagonal (b in the L2(K) product)
    Vec isq = D.cwiseSqrt().cwiseInverse();
    Mat C = (isq.asDiagonal() * (h * A) * isq.asDiagonal());
    Eigen::SelfAdjointEigenSolver<Mat> es(C);

    KSpectrum ks;
    ks.ny = ny;
    ks.lenK = chart.lenK;
    ks.lambda = es.eigenvalues().head(m);
    ks.phi.resize(ny, m);
    for (int j = 0; j < m; ++j) ks.phi.col(j) = (es.eigenvectors().col(j).array() * isq.array()).matrix();
    // clamp the constant mode's rounding-level eigenvalue
    if (std::abs(ks.lambda(0)) < 1e-9) ks.lambda(0) = std::abs(ks.lambda(0));

    // Weyl fit on the top half of the computed modes.
    std::vector<double> js, ls;
    for (int j = m / 2; j < m; ++j) {
        if (ks.lambda(j) > 0.0) {
            js.push_back(j + 1.0);
            ls.push_back(ks.lambda(j));
        }
    }
    if (js.size() >= 2) {
        ks.weyl_exponent = loglog_slope(js, ls);
        double lc = 0.0;
        for (size_t i = 0; i < js.size(); ++i)
            lc += std::log(ls[i]) - ks.weyl_exponent * std::log(js[i]);
        ks.weyl_C = std::exp(lc / js.size());
    }
    return ks;
}

Vec predict_small_eigs(const KSpectrum& ks, double eps, int count) {
    const int n = std::min<int>(count, ks.lambda.size());
    Vec out(n);
    for (int j = 0; j < n; ++j) out(j) = kSqrt2 * eps - eps * eps * ks.lambda(j);
    return out;
}

SpMat SpectralContext::pencil_at(double eps, Vec* u_out) const {
    Vec u = extended_u(grid, *ansatz, eps);
    Vec pot = linearized_potential(grid, u);
    if (u_out) *u_out = u;
    return pencil_matrix(grid, lapw, eps, pot);
}

double SpectralContext::h1eps_norm(const Vec& x, double eps) const {
    const double grad2 = x.dot(G2 * x);
    const double l2 = (x.array().square() * grid.w.array()).sum();
    return std::sqrt(eps * eps * grad2 + l2);
}

SpectralContext make_spectral_context(const FermiChart& chart, const CoefficientField& field,
                                      const LayerAnsatz& ansatz, int nx, int nz) {
    SpectralContext ctx;
    ctx.chart = &chart;
    ctx.field = &field;
    ctx.ansatz = &ansatz;
    ctx.grid = make_grid(chart, field, nx, nz);
    ctx.lapw = weighted_lap4(ctx.grid);
    ctx.G2 = stiffness2(ctx.grid);
    return ctx;
}

EigenReport linearized_spectrum(const SpectralContext& ctx, double eps, int m,
                                bool dense_oracle, bool want_inertia) {
    EigenReport rep;
    rep.eps = eps;
    SpMat A = ctx.pencil_at(eps);
    Vec B = ctx.Bdiag();
    if (want_inertia) {
        Inertia in = ldlt_inertia(A);
        rep.n_pos = in.ok ? in.pos : -1;
    }
    if (dense_oracle) {
        EigPairs p = dense_pencil(A, B, m, 0.0);
        rep.values = p.values;
        rep.vectors = p.vectors;
        return rep;
    }
    const double scale = kSqrt2 * eps;
    const double shifts[3] = {0.0, 0.03 * scale, -0.03 * scale};
    for (int attempt = 0; attempt < 3; ++attempt) {
        try {
            ShiftInvertOptions opt;
            opt.sigma = shifts[attempt];
            EigPairs p = shift_invert(A, B, m, opt);
            // re-sort by |lambda| (relative to zero, not the shift)
            std::vector<int> order(p.values.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a2, int b2) {
                return std::abs(p.values(a2)) < std::abs(p.values(b2));
            });
            rep.values.resize(p.values.size());
            rep.vectors.resize(p.vectors.rows(), p.vectors.cols());
            for (size_t t = 0; t < order.size(); ++t) {
                rep.values(t) = p.values(order[t]);
                rep.vectors.col(t) = p.vectors.col(order[t]);
            }
            return rep;
        } catch (const EigensolverStall&) {
            if (attempt == 2) throw;
        }
    }
    throw EigensolverStall("unreachable");
}

MatchReport match_predictions(const EigenReport& rep, const KSpectrum& ks, double eps,
                              int count, double window) {
    std::vector<double> comp, pred;
    if (count > 0) {
        for (int i = 0; i < std::min<int>(count, rep.values.size()); ++i)
            comp.push_back(rep.values(i));
        Vec pall = predict_small_eigs(ks, eps, ks.lambda.size());
        std::vector<double> pv(pall.data(), pall.data() + pall.size());
        std::sort(pv.begin(), pv.end(),
                  [](double a, double b) { return std::abs(a) < std::abs(b); });
        for (int i = 0; i < count && i < static_cast<int>(pv.size()); ++i)
            pred.push_back(pv[i]);
    } else {
        for (int i = 0; i < rep.values.size(); ++i)
            if (std::abs(rep.values(i)) <= window) comp.push_back(rep.values(i));
        Vec pall = predict_small_eigs(ks, eps, ks.lambda.size());
        for (int j = 0; j < pall.size(); ++j)
            if (std::abs(pall(j)) <= window) pred.push_back(pall(j));
        if (comp.size() != pred.size())
            throw CountMismatch("computed " + std::to_string(comp.size()) + " vs predicted " +
                                std::to_string(pred.size()) + " inside the window");
    }
    const size_t n = std::min(comp.size(), pred.size());
    comp.resize(n);
    pred.resize(n);
    std::sort(comp.begin(), comp.end());
    std::sort(pred.begin(), pred.end());
    MatchReport mr;
    mr.computed = Eigen::Map<Vec>(comp.data(), n);
    mr.predicted = Eigen::Map<Vec>(pred.data(), n);
    mr.deviation = mr.computed - mr.predicted;
    mr.max_dev = n ? mr.deviation.cwiseAbs().maxCoeff() : 0.0;
    mr.mean_dev = n ? mr.deviation.cwiseAbs().mean() : 0.0;
    return mr;
}

Decomposition decompose_eigenfunction(const SpectralContext& ctx, const KSpectrum& ks,
                                      const Vec& phi, double eps) {
    const Grid& g = ctx.grid;
    if (g.kind != GridKind::strip) throw ConfigError("decomposition needs a strip grid");
    const LayerAnsatz& A = *ctx.ansatz;
    const int nx = g.nx, nz = g.nz;
    const double hz = g.hz();

    // Psi on the grid and the per-column projection coefficient.
    Vec Psi(g.size());
    Vec phibar(nx);
    for (int iy = 0; iy < nx; ++iy) {
        double num = 0.0, den = 0.0;
        const double Phiv = A.phi(iy, eps);
        for (int iz = 0; iz < nz; ++iz) {
            const int id = g.idx(iy, iz);
            const double zeta = g.zeta_bar(id) / eps;
            const double s = zeta - Phiv;
            double psi = 0.0;
            if (std::abs(s) < A.prof.grid.S - 2.0) {
                const double t = std::tanh(s / kSqrt2);
                psi = (1.0 - t * t) / kSqrt2;
                // H1 correction via cubic interpolation on the table row
                const double s0 = -A.prof.grid.S, hh = A.prof.grid.h();
                const int n = A.prof.grid.n;
                double tt = (s - s0) / hh;
                int i0 = std::max(1, std::min(n - 3, static_cast<int>(std::floor(tt))));
                const double uu = tt - i0;
                const double fm1 = A.H1(iy, i0 - 1), f0 = A.H1(iy, i0), f1 = A.H1(iy, i0 + 1),
                             f2 = A.H1(iy, i0 + 2);
                psi += eps * (f0 + 0.5 * uu *
                                       (f1 - fm1 + uu * (2.0 * fm1 - 5.0 * f0 + 4.0 * f1 - f2 +
                                                         uu * (3.0 * (f0 - f1) + f2 - fm1))));
            }
            Psi(id) = psi;
            const double wz = (iz == 0 || iz == nz - 1) ? 0.5 * hz : hz;
            num += phi(id) * psi * wz;
            den += psi * psi * wz;
        }
        phibar(iy) = den > 0.0 ? num / den : 0.0;
    }

    Vec proj(g.size());
    for (int iy = 0; iy < nx; ++iy)
        for (int iz = 0; iz < nz; ++iz)
            proj(g.idx(iy, iz)) = phibar(iy) * Psi(g.idx(iy, iz));
    Vec perp = phi - proj;

    Decomposition d;
    d.phibar = phibar;
    d.perp_ratio_h1 = ctx.h1eps_norm(perp, eps) / ctx.h1eps_norm(phi, eps);
    const double nB = (phi.array().square() * g.w.array() * g.bhat.array()).sum();
    const double pB = (proj.array().square() * g.w.array() * g.bhat.array()).sum();
    d.proj_fraction = pB / nB;

    // K-eigenbasis coefficients of phibar (weight b, arclength measure).
    const double hy = g.hy();
    NormalTaylor nt = normal_taylor(*ctx.field, *ctx.chart, 1);
    const int mk = static_cast<int>(ks.lambda.size());
    d.alpha.resize(mk);
    for (int j = 0; j < mk; ++j) {
        double acc = 0.0;
        for (int iy = 0; iy < nx; ++iy)
            acc += phibar(iy) * ks.phi(iy, j) * nt.b(iy) * hy;
        d.alpha(j) = acc;
    }
    const double thresh = std::pow(eps, 1.25);
    double tot = 0.0, high = 0.0;
    for (int j = 0; j < mk; ++j) {
        const double lje = kSqrt2 * eps - eps * eps * ks.lambda(j);
        tot += d.alpha(j) * d.alpha(j);
        if (std::abs(lje) >= thresh) high += d.alpha(j) * d.alpha(j);
    }
    d.high_mass_frac = tot > 0.0 ? high / tot : 0.0;
    return d;
}

namespace {

struct Cluster {
    std::vector<int> idx;
    double mean = 0.0;
    Mat basis;  // B-orthonormal columns spanning the cluster subspace
};

std::vector<Cluster> make_clusters(const Vec& values, const Mat& vectors) {
    std::vector<Cluster> cl;
    for (int i = 0; i < values.size(); ++i) {
        bool placed = false;
        for (auto& c : cl) {
            const double ref = values(c.idx[0]);
            if (std::abs(values(i) - ref) < 1e-7 + 1e-4 * std::abs(ref)) {
                c.idx.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) cl.push_back({{i}, 0.0, Mat()});
    }
    for (auto& c : cl) {
        c.basis.resize(vectors.rows(), c.idx.size());
        double acc = 0.0;
        for (size_t j = 0; j < c.idx.size(); ++j) {
            c.basis.col(j) = vectors.col(c.idx[j]);
            acc += values(c.idx[j]);
        }
        c.mean = acc / c.idx.size();
    }
    return cl;
}

// smallest principal cosine between the X subspace and the Y subspace
// (B-orthonormal bases); 1 means X is contained in span(Y).
double subspace_overlap(const Mat& X, const Mat& Y, const Vec& B) {
    if (X.cols() == 0 || Y.cols() == 0) return 0.0;
    Mat M = X.transpose() * (B.asDiagonal() * Y);
    Eigen::JacobiSVD<Mat> svd(M);
    const int k = std::min<int>(X.cols(), Y.cols());
    if (X.cols() > Y.cols()) return 0.0;  // cannot be contained
    return svd.singularValues().head(k).minCoeff();
}

// best-matching cluster for a reference subspace
std::pair<int, double> match_cluster(const Mat& ref, const std::vector<Cluster>& cand,
                                     const Vec& B) {
    int best = -1;
    double ov = 0.0;
    for (size_t j = 0; j < cand.size(); ++j) {
        const double o = subspace_overlap(ref, cand[j].basis, B);
        if (o > ov) {
            ov = o;
            best = static_cast<int>(j);
        }
    }
    return {best, ov};
}

SpMat pencil_derivative(const SpectralContext& ctx, double eps, bool with_2av) {
    Vec u = extended_u(ctx.grid, *ctx.ansatz, eps);
    Vec v = extended_u_eps(ctx.grid, *ctx.ansatz, eps);
    Vec dpot = (-6.0 * u.array() * v.array()).matrix();
    if (with_2av) dpot += (2.0 * ctx.grid.a_vals.array() * v.array()).matrix();
    SpMat Ap = 2.0 * eps * ctx.lapw;
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> t;
    t.reserve(ctx.grid.size());
    for (int i = 0; i < ctx.grid.size(); ++i) t.emplace_back(i, i, ctx.grid.w(i) * dpot(i));
    SpMat D(ctx.grid.size(), ctx.grid.size());
    D.setFromTriplets(t.begin(), t.end());
    Ap += D;
    return Ap;
}

}  // namespace

std::vector<ModeDerivative> eig_derivative(const SpectralContext& ctx, double eps,
                                           double delta, int m, double overlap_threshold) {
    EigenReport r0 = linearized_spectrum(ctx, eps, m, false, false);
    EigenReport rm = linearized_spectrum(ctx, eps - delta, m + 4, false, false);
    EigenReport rp = linearized_spectrum(ctx, eps + delta, m + 4, false, false);
    const Vec B = ctx.Bdiag();

    SpMat Ap = pencil_derivative(ctx, eps, true);
    SpMat Ap_paper = pencil_derivative(ctx, eps, false);

    std::vector<Cluster> c0 = make_clusters(r0.values, r0.vectors);
    std::vector<Cluster> cm = make_clusters(rm.values, rm.vectors);
    std::vector<Cluster> cp = make_clusters(rp.values, rp.vectors);

    std::vector<ModeDerivative> out;
    for (const auto& c : c0) {
        auto [jm, om] = match_cluster(c.basis, cm, B);
        auto [jp, op] = match_cluster(c.basis, cp, B);
        if (jm < 0 || jp < 0 || om < overlap_threshold || op < overlap_threshold)
            throw TrackingLost("subspace overlap " + std::to_string(std::min(om, op)) +
                               " for the cluster at lambda=" + std::to_string(c.mean));
        ModeDerivative md;
        md.lambda = c.mean;
        md.multiplicity = static_cast<int>(c.idx.size());
        md.fd = (cp[jp].mean - cm[jm].mean) / (2.0 * delta);
        md.overlap = std::min(om, op);
        Mat Mq = c.basis.transpose() * (Ap * c.basis);
        Mat Mp = c.basis.transpose() * (Ap_paper * c.basis);
        Mat Gq = c.basis.transpose() * (B.asDiagonal() * c.basis);
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ge(Mq, Gq);
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> gp(Mp, Gq);
        md.T1 = ge.eigenvalues().minCoeff();
        md.T2 = ge.eigenvalues().maxCoeff();
        md.T1_paper = gp.eigenvalues().minCoeff();
        md.T2_paper = gp.eigenvalues().maxCoeff();
        out.push_back(md);
    }
    std::sort(out.begin(), out.end(), [](const ModeDerivative& a, const ModeDerivative& b) {
        return std::abs(a.lambda) < std::abs(b.lambda);
    });
    return out;
}

EpsScanReport scan_eps(const SpectralContext& ctx, const KSpectrum& ks, double eps_lo,
                       double eps_hi, int samples, int m) {
    if (ctx.chart->lenK <= 0.0) throw ConfigError("scan_eps needs a nontrivial interface");
    if (samples < 4) throw ConfigError("scan_eps: need >= 4 samples");
    EpsScanReport rep;
    for (int i = 0; i < samples; ++i)
        rep.eps_grid.push_back(eps_lo * std::pow(eps_hi / eps_lo, static_cast<double>(i) / (samples - 1)));

    const Vec B = ctx.Bdiag();
    std::vector<Cluster> prev;
    double prev_eps = 0.0;

    struct Bracket {
        double ea, eb;  // la = lambda(ea) > 0 > lambda(eb), decreasing in eps
        Mat ref;
        double la, lb;
        int mult;
    };
    std::vector<Bracket> brackets;

    for (int i = 0; i < samples; ++i) {
        const double eps = rep.eps_grid[i];
        EigenReport r = linearized_spectrum(ctx, eps, m, false, true);
        rep.n_pos.push_back(r.n_pos);
        rep.small_eigs.push_back(r.values);
        std::vector<Cluster> cur = make_clusters(r.values, r.vectors);

        if (i > 0) {
            for (const auto& c : prev) {
                auto [jc, ov] = match_cluster(c.basis, cur, B);
                if (jc < 0 || ov < 0.9) continue;  // crossing regions genuinely mix
                const double la = c.mean, lb = cur[jc].mean;
                const double win = std::pow(prev_eps, 1.5);
                if (std::abs(la) < win && std::abs(lb) < win && lb >= la) rep.monotone_ok = false;
                if (la > 0.0 && lb < 0.0)
                    brackets.push_back({prev_eps, eps, c.basis, la, lb,
                                        static_cast<int>(c.idx.size())});
            }
        }
        prev = std::move(cur);
        prev_eps = eps;
    }

    // refine each bracket by secant on the tracked cluster mean
    for (auto& br : brackets) {
        double ea = br.ea, eb = br.eb, la = br.la, lb = br.lb;
        Mat ref = br.ref;
        double ec = ea;
        int mult = br.mult;
        for (int it = 0; it < 24; ++it) {
            ec = ea - la * (eb - ea) / (lb - la);
            ec = std::min(std::max(ec, ea + 1e-8), eb - 1e-8);
            EigenReport r = linearized_spectrum(ctx, ec, m, false, false);
            std::vector<Cluster> cur = make_clusters(r.values, r.vectors);
            auto [jc, ov] = match_cluster(ref, cur, B);
            if (jc < 0 || ov < 0.9) throw TrackingLost("crossing refinement lost the cluster");
            const double lc = cur[jc].mean;
            ref = cur[jc].basis;
            mult = static_cast<int>(cur[jc].idx.size());
            if (lc > 0.0) {
                ea = ec;
                la = lc;
            } else {
                eb = ec;
                lb = lc;
            }
            if ((eb - ea) / ec < 1e-4 || std::abs(lc) < 1e-11) break;
        }
        CrossingEvent ev;
        ev.eps_star = ec;
        ev.multiplicity = mult;
        double bestp = 0.0, bestd = 1e300;
        for (int j = 0; j < ks.lambda.size(); ++j) {
            if (ks.lambda(j) <= 0.0) continue;
            const double p = kSqrt2 / ks.lambda(j);
            if (std::abs(p - ec) < bestd) {
                bestd = std::abs(p - ec);
                bestp = p;
            }
        }
        ev.predicted = bestp;
        rep.crossings.push_back(ev);
    }
    std::sort(rep.crossings.begin(), rep.crossings.end(),
              [](const CrossingEvent& a, const CrossingEvent& b) { return a.eps_star < b.eps_star; });
    // merge refinements that landed on the same crossing from both trajectories
    std::vector<CrossingEvent> merged;
    for (const auto& ev : rep.crossings) {
        if (!merged.empty() && std::abs(merged.back().eps_star - ev.eps_star) <
                                   2e-4 * ev.eps_star) {
            merged.back().multiplicity = std::max(merged.back().multiplicity, ev.multiplicity);
            continue;
        }
        merged.push_back(ev);
    }
    rep.crossings = merged;

    // dyadic blocks and certified gaps
    const int l_min = static_cast<int>(std::floor(-std::log2(eps_hi)));
    const int l_max = static_cast<int>(std::ceil(-std::log2(eps_lo)));
    for (int l = l_min; l <= l_max; ++l) {
        const double blo = std::max(eps_lo, std::pow(2.0, -(l + 1)));
        const double bhi = std::min(eps_hi, std::pow(2.0, -l));
        if (blo >= bhi) continue;
        std::vector<double> pts = {blo, bhi};
        for (const auto& ev : rep.crossings)
            if (ev.eps_star > blo && ev.eps_star < bhi) pts.push_back(ev.eps_star);
        std::sort(pts.begin(), pts.end());
        double ga = blo, gb = bhi, best = -1.0;
        for (size_t q = 0; q + 1 < pts.size(); ++q) {
            if (pts[q + 1] - pts[q] > best) {
                best = pts[q + 1] - pts[q];
                ga = pts[q];
                gb = pts[q + 1];
            }
        }
        GapCertificate gc;
        gc.block_l = l;
        gc.a = ga;
        gc.b = gb;
        gc.mid = 0.5 * (ga + gb);
        EigenReport r = linearized_spectrum(ctx, gc.mid, std::min(m, 6), false, false);
        gc.min_abs_eig = r.values.cwiseAbs().minCoeff();
        rep.gaps.push_back(gc);
    }

    // fits
    std::vector<double> xs, ys;
    for (size_t i = 0; i < rep.eps_grid.size(); ++i) {
        if (rep.n_pos[i] > 0) {
            xs.push_back(rep.eps_grid[i]);
            ys.push_back(static_cast<double>(rep.n_pos[i]));
        }
    }
    if (xs.size() >= 2) rep.count_slope = loglog_slope(xs, ys);
    xs.clear();
    ys.clear();
    for (const auto& gc : rep.gaps) {
        if (gc.min_abs_eig > 0.0) {
            xs.push_back(gc.mid);
            ys.push_back(1.0 / gc.min_abs_eig);
        }
    }
    if (xs.size() >= 2) rep.inv_norm_exponent = loglog_slope(xs, ys);
    xs.clear();
    ys.clear();
    for (const auto& gc : rep.gaps) {
        xs.push_back(gc.mid);
        ys.push_back(gc.b - gc.a);
    }
    if (xs.size() >= 2) rep.gap_width_exponent = loglog_slope(xs, ys);
    return rep;
}

}  // namespace fg
