#include "fg/ansatz.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace fg {

namespace {

// 8th-order centered periodic first/second derivative weights.
constexpr double kD1w[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr double kD2w0 = -205.0 / 72.0;
constexpr double kD2w[4] = {8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};

Vec periodic_d1(const Vec& f, double h) {
    const int n = static_cast<int>(f.size());
    Vec out = Vec::Zero(n);
    if (n == 1) return out;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int r = 1; r <= 4; ++r)
            acc += kD1w[r - 1] * (f((i + r) % n) - f((i - r + 4 * n) % n));
        out(i) = acc / h;
    }
    return out;
}

Vec periodic_d2(const Vec& f, double h) {
    const int n = static_cast<int>(f.size());
    Vec out = Vec::Zero(n);
    if (n == 1) return out;
    for (int i = 0; i < n; ++i) {
        double acc = kD2w0 * f(i);
        for (int r = 1; r <= 4; ++r)
            acc += kD2w[r - 1] * (f((i + r) % n) + f((i - r + 4 * n) % n));
        out(i) = acc / (h * h);
    }
    return out;
}

// s-direction stencils. Second derivative matches l0_apply (zero beyond ends).
Vec row_d1s(const Vec& u, double h) {
    const int n = static_cast<int>(u.size());
    Vec out(n);
    out(0) = (u(1) - 0.0) / (2.0 * h);
    out(n - 1) = (0.0 - u(n - 2)) / (2.0 * h);
    for (int i = 1; i < n - 1; ++i) out(i) = (u(i + 1) - u(i - 1)) / (2.0 * h);
    return out;
}

Vec row_d2s(const Vec& u, double h) {
    const int n = static_cast<int>(u.size());
    const double ih2 = 1.0 / (h * h);
    Vec out(n);
    for (int i = 0; i < n; ++i) {
        const double um = (i > 0) ? u(i - 1) : 0.0;
        const double up = (i < n - 1) ? u(i + 1) : 0.0;
        out(i) = (um - 2.0 * u(i) + up) * ih2;
    }
    return out;
}

void fill_level_tables(LayerAnsatz::Level& L, const LayerAnsatz& A) {
    const int ny = A.chart->ny;
    const int ns = A.prof.grid.n;
    const double hs = A.prof.grid.h();
    const double hy = ny > 1 ? A.chart->lenK / ny : 1.0;
    L.h_s.resize(ny, ns);
    L.h_ss.resize(ny, ns);
    for (int iy = 0; iy < ny; ++iy) {
        Vec row = L.h.row(iy);
        L.h_s.row(iy) = row_d1s(row, hs);
        L.h_ss.row(iy) = row_d2s(row, hs);
    }
    L.h_yy = Mat::Zero(ny, ns);
    L.h_sy = Mat::Zero(ny, ns);
    if (ny > 1) {
        for (int is = 0; is < ns; ++is) {
            Vec col = L.h.col(is);
            L.h_yy.col(is) = periodic_d2(col, hy);
            Vec cols = L.h_s.col(is);
            L.h_sy.col(is) = periodic_d1(cols, hy);
        }
    }
}

double quintic_down(double x) {
    // 1 at x<=0, 0 at x>=1, C^2 ramp.
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double quintic_down_prime(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -(30.0 * x * x - 60.0 * x * x * x + 30.0 * x * x * x * x);
}

double cubic_row(const Mat& M, int row, double s0, double h, double x) {
    const int n = static_cast<int>(M.cols());
    double t = (x - s0) / h;
    int i = static_cast<int>(std::floor(t));
    i = std::max(1, std::min(n - 3, i));
    const double u = t - i;
    const double fm1 = M(row, i - 1), f0 = M(row, i), f1 = M(row, i + 1), f2 = M(row, i + 2);
    return f0 + 0.5 * u * (f1 - fm1 + u * (2.0 * fm1 - 5.0 * f0 + 4.0 * f1 - f2 +
                                           u * (3.0 * (f0 - f1) + f2 - fm1)));
}

}  // namespace

double LayerAnsatz::phi(int iy, double eps) const {
    double acc = 0.0, ep = 1.0;
    for (const auto& P : Phi) {
        acc += ep * P(iy);
        ep *= eps;
    }
    return acc;
}

double LayerAnsatz::phi_y(int iy, double eps) const {
    double acc = 0.0, ep = 1.0;
    for (const auto& P : Phi_y) {
        acc += ep * P(iy);
        ep *= eps;
    }
    return acc;
}

double LayerAnsatz::phi_yy(int iy, double eps) const {
    double acc = 0.0, ep = 1.0;
    for (const auto& P : Phi_yy) {
        acc += ep * P(iy);
        ep *= eps;
    }
    return acc;
}

double LayerAnsatz::u_node(int iy, int is, double eps) const {
    double acc = prof.H(is), ep = 1.0;
    for (const auto& L : lev) {
        ep *= eps;
        acc += ep * L.h(iy, is);
    }
    return acc;
}

double LayerAnsatz::u_interp(int iy, double s, double eps) const {
    if (std::abs(s) > prof.grid.S - 2.0) return s > 0.0 ? 1.0 : -1.0;
    double acc = std::tanh(s / kSqrt2), ep = 1.0;
    const double s0 = -prof.grid.S, h = prof.grid.h();
    for (const auto& L : lev) {
        ep *= eps;
        acc += ep * cubic_row(L.h, iy, s0, h, s);
    }
    return acc;
}

double LayerAnsatz::us_interp(int iy, double s, double eps) const {
    if (std::abs(s) > prof.grid.S - 2.0) return 0.0;
    const double t = std::tanh(s / kSqrt2);
    double acc = (1.0 - t * t) / kSqrt2, ep = 1.0;
    const double s0 = -prof.grid.S, h = prof.grid.h();
    for (const auto& L : lev) {
        ep *= eps;
        acc += ep * cubic_row(L.h_s, iy, s0, h, s);
    }
    return acc;
}

double LayerAnsatz::ueps_interp(int iy, double s, double eps) const {
    if (std::abs(s) > prof.grid.S - 2.0) return 0.0;
    const double s0 = -prof.grid.S, h = prof.grid.h();
    double dphi = 0.0, ep = 1.0;  // d/deps of Phi(., eps)
    for (size_t i = 1; i < Phi.size(); ++i) {
        dphi += static_cast<double>(i) * ep * Phi[i](iy);
        ep *= eps;
    }
    const double ds_deps = -(s + phi(iy, eps)) / eps - dphi;
    double sum_h = 0.0;  // sum i eps^{i-1} h_i
    ep = 1.0;
    for (size_t i = 0; i < lev.size(); ++i) {
        sum_h += static_cast<double>(i + 1) * ep * cubic_row(lev[i].h, iy, s0, h, s);
        ep *= eps;
    }
    return sum_h + us_interp(iy, s, eps) * ds_deps;
}

double LayerAnsatz::cutoff(double zeta, double eps) const {
    const double t = std::pow(eps, -opt.gamma);
    const double tau = (std::abs(zeta) - 0.5 * t) / (0.25 * t);
    return quintic_down(tau);
}

double LayerAnsatz::cutoff_deps(double zeta_bar, double eps) const {
    // chi = q(tau), tau = 4|zeta_bar| eps^{gamma-1} - 2
    const double tau = 4.0 * std::abs(zeta_bar) * std::pow(eps, opt.gamma - 1.0) - 2.0;
    const double dtau = 4.0 * std::abs(zeta_bar) * (opt.gamma - 1.0) * std::pow(eps, opt.gamma - 2.0);
    return quintic_down_prime(tau) * dtau;
}

Vec compute_phi0(const Vec& kappa, const Vec& b, const ProfileTable& prof) {
    const double ratio = prof.int_Hp2 / prof.int_Hp_1mH2;  // = sqrt2/2
    return ratio * (kappa.array() / b.array());
}

Vec h1_rhs(const LayerAnsatz& A, int iy) {
    const auto& p = A.prof;
    const double kap = A.kappa_eff(iy);
    const double b = A.taylor.b(iy);
    const double phi0 = A.Phi[0](iy);
    return (-kap) * p.Hp + b * ((p.s.array() + phi0) * p.one_minus_H2.array()).matrix();
}

static void push_phi(LayerAnsatz& A, const Vec& phi) {
    A.Phi.push_back(phi);
    const double hy = A.chart->ny > 1 ? A.chart->lenK / A.chart->ny : 1.0;
    A.Phi_y.push_back(periodic_d1(phi, hy));
    A.Phi_yy.push_back(periodic_d2(phi, hy));
}

static const L0Solver& solver_of(LayerAnsatz& A) {
    if (!A.l0) A.l0 = std::make_shared<L0Solver>(A.prof);
    return *A.l0;
}

void solve_h1(LayerAnsatz& A) {
    const int ny = A.chart->ny;
    const L0Solver& slv = solver_of(A);
    LayerAnsatz::Level L;
    L.h.resize(ny, A.prof.grid.n);
    for (int iy = 0; iy < ny; ++iy) {
        Vec f = h1_rhs(A, iy);
        L0Solve sol = slv.solve(f);
        if (std::abs(sol.defect) >= A.opt.defect_tol)
            throw SolvabilityViolation("h1 defect " + std::to_string(sol.defect) +
                                       " at y index " + std::to_string(iy));
        L.h.row(iy) = sol.u;
    }
    fill_level_tables(L, A);
    A.lev.push_back(std::move(L));
    A.k = 1;
}

Mat scaled_residual(const LayerAnsatz& A, double eps, EvalMode mode) {
    const auto& p = A.prof;
    const auto& ch = *A.chart;
    const int ny = ch.ny, ns = p.grid.n;
    const bool circle = ch.interface_.kind == InterfaceKind::circle;
    const double R0 = ch.interface_.radius;
    const int LT = A.opt.taylor_order;
    const int LG = FermiChart::kLG;

    // eps powers
    std::vector<double> epspow(std::max(LT, LG) + 3, 1.0);
    for (size_t i = 1; i < epspow.size(); ++i) epspow[i] = epspow[i - 1] * eps;

    Mat R(ny, ns);
    const int klev = static_cast<int>(A.lev.size());
    for (int iy = 0; iy < ny; ++iy) {
        const double yv = ch.y(iy);
        const double Phiv = A.phi(iy, eps);
        const double Phidy = A.phi_y(iy, eps);
        const double Phidyy = A.phi_yy(iy, eps);

        // model coefficient tables for this y
        double acoef[8] = {0};  // acoef[l] multiplies (eps zeta)^l... stored as c_l eps^l
        if (mode == EvalMode::model) {
            acoef[1] = A.taylor.b(iy) * epspow[1];
            for (int l = 2; l <= LT && l - 2 < A.taylor.b_ell.rows(); ++l)
                acoef[l] = A.taylor.b_ell(l - 2, iy) * epspow[l];
        }
        double gcoef[8] = {0};
        if (mode == EvalMode::model) {
            for (int l = 1; l <= LG; ++l) gcoef[l] = ch.Gtilde(l - 1, iy) * epspow[l];
        }

        for (int is = 0; is < ns; ++is) {
            const double s = p.s(is);
            const double zeta = s + Phiv;
            const double zb = eps * zeta;

            double u = p.H(is), u_s = p.Hp(is), u_ss = p.Hpp(is);
            double u_sy = 0.0, u_yy = 0.0;
            double ep = 1.0;
            for (int l = 0; l < klev; ++l) {
                ep *= eps;
                const auto& L = A.lev[l];
                u += ep * L.h(iy, is);
                u_s += ep * L.h_s(iy, is);
                u_ss += ep * L.h_ss(iy, is);
                u_sy += ep * L.h_sy(iy, is);
                u_yy += ep * L.h_yy(iy, is);
            }

            double W, aval, tanfac;
            if (mode == EvalMode::model) {
                // W = sum_l G_l eps^l zeta^{l-1} (Horner in zeta)
                W = gcoef[LG];
                for (int l = LG - 1; l >= 1; --l) W = W * zeta + gcoef[l];
                // a = sum_l c_l eps^l zeta^l
                double av = acoef[LT];
                for (int l = LT - 1; l >= 1; --l) av = av * zeta + acoef[l];
                aval = av * zeta;
                if (circle) {
                    // (R0/r)^2 expanded to the Taylor order
                    const double q = -ch.sigma * zb / R0;
                    double f = (LT + 1);
                    for (int m = LT - 1; m >= 0; --m) f = f * q + (m + 1);
                    tanfac = f;
                } else {
                    tanfac = 1.0;
                }
            } else {
                W = eps * ch.W(zb);
                aval = ch.a(*A.field, yv, zb);
                if (circle) {
                    const double r = R0 + ch.sigma * zb;
                    tanfac = (R0 / r) * (R0 / r);
                } else {
                    tanfac = 1.0;
                }
            }

            const double tan_u = u_yy - 2.0 * Phidy * u_sy + Phidy * Phidy * u_ss - Phidyy * u_s;
            const double nonlin = (u - aval) * (u * u - 1.0);
            R(iy, is) = u_ss + W * u_s + eps * eps * tanfac * tan_u - nonlin;
        }
    }
    return R;
}

Mat extract_FN(const LayerAnsatz& A, int N) {
    if (N < 2) throw ConfigError("extract_FN: N >= 2");
    if (static_cast<int>(A.lev.size()) != N - 1)
        throw ConfigError("extract_FN: need exactly the lower corrections built");
    const double eps0 = A.opt.ladder_eps0;
    const int D = N + 4;     // fit degree
    const int M = N + 8;     // ladder nodes

    auto fit_cN = [&](double tlo, double thi) {
        Vec t(M);
        for (int m = 0; m < M; ++m)
            t(m) = tlo * std::pow(thi / tlo, static_cast<double>(m) / (M - 1));
        Mat V(M, D + 1);
        for (int m = 0; m < M; ++m) {
            double tp = 1.0;
            for (int d = 0; d <= D; ++d) {
                V(m, d) = tp;
                tp *= t(m);
            }
        }
        // Row N of the least-squares pseudoinverse.
        Mat P = V.colPivHouseholderQr().solve(Mat::Identity(M, M));
        Mat cN = Mat::Zero(A.chart->ny, A.prof.grid.n);
        for (int m = 0; m < M; ++m) {
            Mat Rm = scaled_residual(A, eps0 * t(m), EvalMode::model);
            cN += P(N, m) * Rm;
        }
        cN /= std::pow(eps0, N);
        return cN;
    };

    Mat c1 = fit_cN(1.0 / 6.0, 1.0);
    Mat c2 = fit_cN(1.0 / 12.0, 0.5);
    const double scale = std::max(1.0, c1.cwiseAbs().maxCoeff());
    const double drift = (c1 - c2).cwiseAbs().maxCoeff();
    if (drift > A.opt.drift_tol * scale)
        throw ExtrapolationUnstable("F_" + std::to_string(N) + " ladder drift " +
                                    std::to_string(drift));
    return -c1;
}

Vec compute_phi_next(const Mat& FN, const Vec& b, const ProfileTable& prof) {
    const int ny = static_cast<int>(FN.rows());
    Vec phi(ny);
    const double h = prof.grid.h();
    for (int iy = 0; iy < ny; ++iy) {
        Vec row = FN.row(iy);
        phi(iy) = -trapz2(row, prof.Hp, h) / (b(iy) * prof.int_Hp_1mH2);
    }
    return phi;
}

void solve_h_level(LayerAnsatz& A, int N, const Mat& FN) {
    Vec phi = compute_phi_next(FN, A.taylor.b, A.prof);
    push_phi(A, phi);
    const int ny = A.chart->ny;
    const L0Solver& slv = solver_of(A);
    LayerAnsatz::Level L;
    L.h.resize(ny, A.prof.grid.n);
    for (int iy = 0; iy < ny; ++iy) {
        Vec f = phi(iy) * A.taylor.b(iy) * A.prof.one_minus_H2 + FN.row(iy).transpose();
        L0Solve sol = slv.solve(f);
        if (std::abs(sol.defect) >= A.opt.defect_tol)
            throw SolvabilityViolation("h" + std::to_string(N) + " defect " +
                                       std::to_string(sol.defect));
        L.h.row(iy) = sol.u;
    }
    fill_level_tables(L, A);
    A.lev.push_back(std::move(L));
    A.k = N;
}

void build_approx_eigenpair(LayerAnsatz& A) {
    if (A.lev.empty()) throw ConfigError("build_approx_eigenpair: h1 not built");
    const auto& p = A.prof;
    const L0Solver& slv = solver_of(A);
    const int ny = A.chart->ny;
    A.H1.resize(ny, p.grid.n);
    A.mu_bar.resize(ny);
    A.mu_bar_num.resize(ny);
    const double h = p.grid.h();
    for (int iy = 0; iy < ny; ++iy) {
        const double b = A.taylor.b(iy);
        const double kap = A.kappa_eff(iy);
        const double phi0 = A.Phi[0](iy);
        Vec h1 = A.lev[0].h.row(iy);
        Vec rhs0 = (-2.0 * b) * ((p.s.array() + phi0) * p.H.array() * p.Hp.array()).matrix() -
                   kap * p.Hpp + 6.0 * (p.H.array() * p.Hp.array() * h1.array()).matrix();
        const double mu = -trapz2(rhs0, p.Hp, h) / p.int_Hp2;
        A.mu_bar(iy) = kSqrt2 * b;
        A.mu_bar_num(iy) = mu;
        if (std::abs(mu - kSqrt2 * b) > 1e-3 * std::max(1.0, kSqrt2 * b))
            throw SolvabilityViolation("mu_bar deviates from sqrt2 b: " + std::to_string(mu));
        Vec f = rhs0 + mu * p.Hp;
        L0Solve sol = slv.solve(f);
        if (std::abs(sol.defect) >= 1e-10)
            throw SolvabilityViolation("H1 defect " + std::to_string(sol.defect));
        A.H1.row(iy) = sol.u;
    }
    A.H1_s.resize(ny, p.grid.n);
    A.H1_ss.resize(ny, p.grid.n);
    for (int iy = 0; iy < ny; ++iy) {
        Vec row = A.H1.row(iy);
        A.H1_s.row(iy) = row_d1s(row, h);
        A.H1_ss.row(iy) = row_d2s(row, h);
    }
}

LayerAnsatz assemble_ansatz(const FermiChart& chart, const CoefficientField& field,
                            const AnsatzOptions& opt) {
    LayerAnsatz A;
    A.chart = &chart;
    A.field = &field;
    A.opt = opt;
    if (opt.flip_kappa && opt.k > 1)
        throw ConfigError("flip_kappa is a k=1 calibration experiment");
    A.prof = heteroclinic(LineGrid::make(opt.S, opt.hs));
    A.taylor = normal_taylor(field, chart, std::min(6, std::max(opt.taylor_order, opt.k + 2)));
    Vec kap(chart.ny);
    for (int iy = 0; iy < chart.ny; ++iy) kap(iy) = (opt.flip_kappa ? -1.0 : 1.0) * chart.kappa(iy);
    push_phi(A, compute_phi0(kap, A.taylor.b, A.prof));
    solve_h1(A);
    for (int N = 2; N <= opt.k; ++N) {
        Mat FN = extract_FN(A, N);
        solve_h_level(A, N, FN);
    }
    build_approx_eigenpair(A);
    return A;
}

static double window_halfwidth_zeta(const LayerAnsatz& A, double eps) {
    const double zb_max = 0.95 * A.chart->margin;
    return std::min(zb_max / eps, A.prof.grid.S - 1.0);
}

double residual_sup(const LayerAnsatz& A, double eps) {
    Mat R = scaled_residual(A, eps, EvalMode::exact);
    const double win = window_halfwidth_zeta(A, eps);
    double sup = 0.0;
    for (int iy = 0; iy < R.rows(); ++iy) {
        const double Phiv = A.phi(iy, eps);
        for (int is = 0; is < R.cols(); ++is) {
            const double zeta = A.prof.s(is) + Phiv;
            if (std::abs(zeta) <= win) sup = std::max(sup, std::abs(R(iy, is)));
        }
    }
    return sup;
}

double eigen_residual_sup(const LayerAnsatz& A, double eps) {
    const auto& p = A.prof;
    const auto& ch = *A.chart;
    const int ny = ch.ny, ns = p.grid.n;
    const double win = window_halfwidth_zeta(A, eps);
    double sup = 0.0;
    const int klev = static_cast<int>(A.lev.size());
    for (int iy = 0; iy < ny; ++iy) {
        const double yv = ch.y(iy);
        const double Phiv = A.phi(iy, eps);
        const double mu = A.mu_bar_num(iy);
        for (int is = 0; is < ns; ++is) {
            const double s = p.s(is);
            const double zeta = s + Phiv;
            if (std::abs(zeta) > win) continue;
            const double zb = eps * zeta;
            // Psi and its s-derivatives (analytic H parts, discrete H1 parts)
            const double t = p.H(is);
            const double Hp = p.Hp(is), Hpp = p.Hpp(is);
            const double Hppp = -kSqrt2 * (Hp * Hp + t * Hpp);
            const double Psi = Hp + eps * A.H1(iy, is);
            const double Psi_s = Hpp + eps * A.H1_s(iy, is);
            const double Psi_ss = Hppp + eps * A.H1_ss(iy, is);
            double u = t, ep = 1.0;
            for (int l = 0; l < klev; ++l) {
                ep *= eps;
                u += ep * A.lev[l].h(iy, is);
            }
            const double W = eps * ch.W(zb);
            const double aval = ch.a(*A.field, yv, zb);
            const double Lpsi = Psi_ss + W * Psi_s + (1.0 - 3.0 * u * u) * Psi +
                                2.0 * aval * u * Psi;
            sup = std::max(sup, std::abs(Lpsi - eps * mu * Hp));
        }
    }
    return sup;
}

OrderStudy residual_order_study(const LayerAnsatz& A, const std::vector<double>& eps_list) {
    OrderStudy st;
    st.eps = eps_list;
    for (double e : eps_list) st.sup.push_back(residual_sup(A, e));
    st.slope = loglog_slope(st.eps, st.sup);
    return st;
}

OrderStudy eigen_residual_order_study(const LayerAnsatz& A, const std::vector<double>& eps_list) {
    OrderStudy st;
    st.eps = eps_list;
    for (double e : eps_list) st.sup.push_back(eigen_residual_sup(A, e));
    st.slope = loglog_slope(st.eps, st.sup);
    return st;
}

double decay_constant(const Vec& row, const Vec& s, double d) {
    double c = 0.0;
    const double S = std::abs(s(0));
    for (int i = 0; i < row.size(); ++i) {
        if (std::abs(s(i)) > S - 2.0) continue;
        const double w = std::exp(kSqrt2 * std::abs(s(i))) / std::pow(1.0 + std::abs(s(i)), d);
        c = std::max(c, std::abs(row(i)) * w);
    }
    return c;
}

}  // namespace fg
