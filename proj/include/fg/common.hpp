#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kSqrt2 = 1.4142135623730951;

// ---- error types -----------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define FG_DEFINE_ERROR(Name)                                        \
    struct Name : Error {                                            \
        explicit Name(const std::string& w) : Error(#Name ": " + w) {} \
    }

FG_DEFINE_ERROR(ConfigError);
FG_DEFINE_ERROR(TubeTooWide);
FG_DEFINE_ERROR(NonPositiveWeight);
FG_DEFINE_ERROR(IllConditioned);
FG_DEFINE_ERROR(SolvabilityViolation);
FG_DEFINE_ERROR(ExtrapolationUnstable);
FG_DEFINE_ERROR(SingularJacobian);
FG_DEFINE_ERROR(MaxIterations);
FG_DEFINE_ERROR(NotContractive);
FG_DEFINE_ERROR(EigensolverStall);
FG_DEFINE_ERROR(TrackingLost);
FG_DEFINE_ERROR(CountMismatch);
FG_DEFINE_ERROR(WindowTooNarrow);
FG_DEFINE_ERROR(MissingRun);

#undef FG_DEFINE_ERROR

// ---- small numerics --------------------------------------------------------

// Trapezoidal rule on a uniform grid. Exponentially accurate for smooth
// integrands that decay at the ends.
inline double trapz(const Vec& f, double h) {
    if (f.size() < 2) return 0.0;
    return h * (f.sum() - 0.5 * (f(0) + f(f.size() - 1)));
}

inline double trapz2(const Vec& f, const Vec& g, double h) {
    const Eigen::Index n = f.size();
    double s = f.dot(g) - 0.5 * (f(0) * g(0) + f(n - 1) * g(n - 1));
    return h * s;
}

// Fornberg's algorithm: weights of the m-th derivative at x0 given nodes x.
// Returns weights so that f^(m)(x0) ~ sum_i w_i f(x_i).
inline Vec fd_weights(double x0, const Vec& x, int m) {
    const int n = static_cast<int>(x.size());
    Mat c = Mat::Zero(n, m + 1);
    double c1 = 1.0;
    double c4 = x(0) - x0;
    c(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x(i) - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x(i) - x(j);
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c.col(m);
}

// Least-squares slope of log|y| vs log x. Used for order-of-accuracy fits.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n) throw Error("loglog_slope: need >= 2 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(std::abs(y[i]));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double d = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / d;
}

// Cubic (4-point Lagrange) interpolation on a uniform grid. Clamps to the
// grid range; callers keep evaluation points well inside.
inline double interp_cubic(const Vec& f, double x0, double h, double x) {
    const Eigen::Index n = f.size();
    double t = (x - x0) / h;
    if (t <= 1.0) t = std::min(t, 1.0), t = std::max(t, 0.0);  // fall back near ends
    Eigen::Index i = static_cast<Eigen::Index>(std::floor(t));
    i = std::max<Eigen::Index>(1, std::min(n - 3, i));
    const double u = t - static_cast<double>(i);
    const double fm1 = f(i - 1), f0 = f(i), f1 = f(i + 1), f2 = f(i + 2);
    return f0 + 0.5 * u * (f1 - fm1 + u * (2.0 * fm1 - 5.0 * f0 + 4.0 * f1 - f2 +
                                           u * (3.0 * (f0 - f1) + f2 - fm1)));
}

inline Vec linspace(double a, double b, int n) {
    return Vec::LinSpaced(n, a, b);
}

// FNV-1a, used for run ids (content hash of config + version).
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace fg
