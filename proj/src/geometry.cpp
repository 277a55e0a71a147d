#include "fg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace fg {

double CoefficientField::a_geom(double y, double d) const {
    double acc = 0.0;
    for (const auto& t : terms) {
        double coeff = t.c;
        if (t.amp != 0.0 && lenK > 0.0)
            coeff += t.amp * std::cos(2.0 * M_PI * t.mode * y / lenK);
        acc += coeff * std::pow(d, t.power);
    }
    return acc;
}

double CoefficientField::dd_a_geom(double y, double d) const {
    double acc = 0.0;
    for (const auto& t : terms) {
        double coeff = t.c;
        if (t.amp != 0.0 && lenK > 0.0)
            coeff += t.amp * std::cos(2.0 * M_PI * t.mode * y / lenK);
        acc += coeff * t.power * std::pow(d, t.power - 1);
    }
    return acc;
}

CoefficientField CoefficientField::linear(double slope) {
    CoefficientField f;
    f.name = "linear";
    f.terms.push_back({1, slope, 0.0, 0});
    return f;
}

CoefficientField CoefficientField::radial() {
    CoefficientField f;
    f.name = "radial";
    f.terms.push_back({1, 1.0, 0.0, 0});
    return f;
}

CoefficientField CoefficientField::cosine(double c1, double amp, int mode, double lenK,
                                          std::vector<Term> higher) {
    CoefficientField f;
    f.name = "cosine";
    f.lenK = lenK;
    f.terms.push_back({1, c1, amp, mode});
    for (auto& t : higher) f.terms.push_back(t);
    return f;
}

CoefficientField CoefficientField::poly(std::vector<double> coeffs) {
    CoefficientField f;
    f.name = "poly";
    int p = 1;
    for (double c : coeffs) f.terms.push_back({p++, c, 0.0, 0});
    return f;
}

double signed_distance(const DomainSpec& dom, const InterfaceSpec& itf, double sigma, Pt x) {
    switch (itf.kind) {
        case InterfaceKind::point:
            return sigma * (x.u - itf.x0);
        case InterfaceKind::periodic_line:
            return sigma * x.v;  // x = (y, zeta_geom)
        case InterfaceKind::circle: {
            const double r = std::hypot(x.u, x.v);
            return sigma * (r - itf.radius);
        }
    }
    (void)dom;
    throw Error("unreachable");
}

double curvature(const InterfaceSpec& itf, double sigma, int n_ambient) {
    switch (itf.kind) {
        case InterfaceKind::point:
            return 0.0;  // convention for the 1D reduction
        case InterfaceKind::periodic_line:
            return 0.0;
        case InterfaceKind::circle:
            return sigma * (n_ambient - 1) / itf.radius;
    }
    throw Error("unreachable");
}

double interface_margin(const DomainSpec& dom, const InterfaceSpec& itf) {
    switch (dom.kind) {
        case DomainKind::interval:
            return std::min(itf.x0 - dom.lo, dom.hi - itf.x0);
        case DomainKind::periodic_strip:
            return std::min(-dom.lo, dom.hi);
        case DomainKind::radial_disk:
            return std::min(itf.radius - dom.lo, dom.hi - itf.radius);
        case DomainKind::radial_annulus:
            return std::min(itf.radius - dom.lo, dom.hi - itf.radius);
    }
    throw Error("unreachable");
}

double FermiChart::volfac(double zeta) const {
    if (interface_.kind != InterfaceKind::circle) return 1.0;
    const double r = interface_.radius + sigma * zeta;
    return std::pow(r / interface_.radius, n_ambient - 1);
}

double FermiChart::W(double zeta) const {
    if (interface_.kind != InterfaceKind::circle) return 0.0;
    const double r = interface_.radius + sigma * zeta;
    return sigma * (n_ambient - 1) / r;
}

static void validate_geometry(const DomainSpec& dom, const InterfaceSpec& itf) {
    if (!(dom.lo < dom.hi)) throw ConfigError("domain extents must be ordered");
    switch (dom.kind) {
        case DomainKind::interval:
            if (itf.kind != InterfaceKind::point) throw ConfigError("interval needs a point interface");
            if (!(dom.lo < itf.x0 && itf.x0 < dom.hi))
                throw ConfigError("point interface must lie strictly inside the interval");
            if (dom.dim_n != 1) throw ConfigError("interval domain is one-dimensional");
            break;
        case DomainKind::periodic_strip:
            if (itf.kind != InterfaceKind::periodic_line)
                throw ConfigError("periodic_strip needs a periodic_line interface");
            if (itf.period <= 0.0) throw ConfigError("periodic_line period must be positive");
            if (dom.period != itf.period) throw ConfigError("strip period must match interface period");
            if (!(dom.lo < 0.0 && 0.0 < dom.hi))
                throw ConfigError("interface zeta=0 must lie strictly inside the strip");
            if (dom.dim_n != 2) throw ConfigError("strip domain is two-dimensional");
            break;
        case DomainKind::radial_disk:
            if (itf.kind != InterfaceKind::circle) throw ConfigError("radial domain needs a circle interface");
            if (dom.lo != 0.0) throw ConfigError("radial_disk starts at r=0");
            [[fallthrough]];
        case DomainKind::radial_annulus:
            if (itf.kind != InterfaceKind::circle) throw ConfigError("radial domain needs a circle interface");
            if (itf.radius <= 0.0) throw ConfigError("circle radius must be positive");
            if (!(dom.lo < itf.radius && itf.radius < dom.hi))
                throw ConfigError("circle must lie strictly inside the radial domain");
            if (dom.dim_n < 2) throw ConfigError("radial domains need dim_n >= 2");
            break;
    }
    if (interface_margin(dom, itf) <= 0.0)
        throw ConfigError("interface touches the domain boundary");
}

FermiChart build_fermi_chart(const DomainSpec& dom, const InterfaceSpec& itf,
                             const CoefficientField& field, double tube_halfwidth,
                             int ny) {
    validate_geometry(dom, itf);
    FermiChart ch;
    ch.domain = dom;
    ch.interface_ = itf;
    ch.n_ambient = dom.dim_n;
    ch.margin = interface_margin(dom, itf);

    switch (itf.kind) {
        case InterfaceKind::point:
            ch.ny = 1;
            ch.lenK = 0.0;
            break;
        case InterfaceKind::periodic_line:
            ch.ny = ny;
            ch.lenK = itf.period;
            break;
        case InterfaceKind::circle:
            ch.ny = ny;
            ch.lenK = 2.0 * M_PI * itf.radius;
            // the chart folds at r = 0 moving inward
            ch.margin = std::min(ch.margin, itf.radius);
            break;
    }
    ch.y.resize(ch.ny);
    for (int i = 0; i < ch.ny; ++i)
        ch.y(i) = ch.lenK > 0.0 ? ch.lenK * i / ch.ny : 0.0;

    if (tube_halfwidth <= 0.0)
        tube_halfwidth = 0.5 * ch.margin;
    if (tube_halfwidth >= ch.margin)
        throw TubeTooWide("halfwidth " + std::to_string(tube_halfwidth) +
                          " exceeds margin " + std::to_string(ch.margin));
    ch.halfwidth = tube_halfwidth;

    // Orientation: zeta > 0 where a > 0. Probe the field on both sides.
    const double probe = 0.25 * tube_halfwidth;
    double s0 = 0.0;
    for (int i = 0; i < ch.ny; ++i) {
        const double ap = field.a_geom(ch.y(i), probe);
        const double am = field.a_geom(ch.y(i), -probe);
        if (ap == 0.0 || am == 0.0 || ((ap > 0.0) == (am > 0.0)))
            throw ConfigError("field does not change sign across the interface");
        const double s = ap > 0.0 ? 1.0 : -1.0;
        if (i == 0)
            s0 = s;
        else if (s != s0)
            throw ConfigError("field orientation is inconsistent along K");
    }
    ch.sigma = s0;

    const double kap = curvature(itf, ch.sigma, ch.n_ambient);
    ch.kappa = Vec::Constant(ch.ny, kap);
    ch.Gtilde = Mat::Zero(FermiChart::kLG, ch.ny);
    if (itf.kind == InterfaceKind::circle) {
        // W(zeta) = sigma (n-1) / (R0 + sigma zeta) = sum_l G_l zeta^{l-1}
        for (int l = 1; l <= FermiChart::kLG; ++l) {
            const double g = (ch.n_ambient - 1) * std::pow(ch.sigma, l) *
                             std::pow(-1.0, l - 1) / std::pow(itf.radius, l);
            ch.Gtilde.row(l - 1).setConstant(g);
        }
    }
    return ch;
}

NormalTaylor normal_taylor(const CoefficientField& field, const FermiChart& chart, int ell_max) {
    if (ell_max < 1 || ell_max > 6) throw ConfigError("normal_taylor: 1 <= ell_max <= 6");
    const int half = 7;  // 15-point centered stencil
    const double hz = chart.halfwidth / 64.0;
    Vec nodes(2 * half + 1);
    for (int j = -half; j <= half; ++j) nodes(j + half) = j * hz;

    NormalTaylor out;
    out.ell_max = ell_max;
    out.b.resize(chart.ny);
    out.b_ell = Mat::Zero(std::max(0, ell_max - 1), chart.ny);

    std::vector<Vec> weights(ell_max + 1);
    for (int l = 1; l <= ell_max; ++l) weights[l] = fd_weights(0.0, nodes, l);

    Vec samples(2 * half + 1);
    for (int iy = 0; iy < chart.ny; ++iy) {
        for (int j = -half; j <= half; ++j)
            samples(j + half) = chart.a(field, chart.y(iy), nodes(j + half));
        double factorial = 1.0;
        for (int l = 1; l <= ell_max; ++l) {
            factorial *= l;
            const double d = weights[l].dot(samples) / factorial;
            if (l == 1)
                out.b(iy) = d;
            else
                out.b_ell(l - 2, iy) = d;
        }
    }
    if (out.b.minCoeff() <= 0.0)
        throw NonPositiveWeight("min b = " + std::to_string(out.b.minCoeff()));
    return out;
}

void validate_field(const DomainSpec& dom, const InterfaceSpec& itf,
                    const CoefficientField& field) {
    validate_geometry(dom, itf);
    // Sample a on the closure in chart coordinates (exact for these kinds).
    const int nys = 64, nzs = 129;
    double len = 0.0;
    switch (itf.kind) {
        case InterfaceKind::point: len = 0.0; break;
        case InterfaceKind::periodic_line: len = itf.period; break;
        case InterfaceKind::circle: len = 2.0 * M_PI * itf.radius; break;
    }
    double dlo, dhi;
    if (itf.kind == InterfaceKind::circle) {
        dlo = dom.lo - itf.radius;
        dhi = dom.hi - itf.radius;
    } else if (itf.kind == InterfaceKind::point) {
        dlo = dom.lo - itf.x0;
        dhi = dom.hi - itf.x0;
    } else {
        dlo = dom.lo;
        dhi = dom.hi;
    }
    for (int iy = 0; iy < (len > 0.0 ? nys : 1); ++iy) {
        const double yv = len > 0.0 ? len * iy / nys : 0.0;
        for (int iz = 0; iz < nzs; ++iz) {
            const double d = dlo + (dhi - dlo) * iz / (nzs - 1);
            const double av = field.a_geom(yv, d);
            if (!(av > -1.0 && av < 1.0))
                throw ConfigError("field leaves (-1,1) at d=" + std::to_string(d));
        }
        const double a_lo = field.a_geom(yv, dlo);
        const double a_hi = field.a_geom(yv, dhi);
        if (a_lo == 0.0 || a_hi == 0.0)
            throw ConfigError("a vanishes on the domain boundary");
    }
}

}  // namespace fg
