#pragma once

// Domain / interface descriptions, exact Fermi (signed-distance) charts for
// the supported closed-form geometries, and the normal Taylor data of the
// coefficient a. Everything here is immutable after construction.

#include <functional>
#include <string>

#include "fg/common.hpp"

namespace fg {

enum class InterfaceKind { point, periodic_line, circle };
enum class DomainKind { interval, periodic_strip, radial_disk, radial_annulus };

struct InterfaceSpec {
    InterfaceKind kind = InterfaceKind::point;
    double x0 = 0.0;      // point: location
    double period = 0.0;  // periodic_line: period L
    double radius = 0.0;  // circle: R0 (centered at the origin)
};

struct DomainSpec {
    DomainKind kind = DomainKind::interval;
    double lo = -0.9;     // interval: x range; strip: zeta range; radial: r range
    double hi = 0.9;
    double period = 0.0;  // periodic_strip: y period (equals interface period)
    int dim_n = 1;        // ambient dimension used for the radial reduction
};

struct Pt {
    double u = 0.0, v = 0.0;
};

// Coefficient field expressed in the geometric signed coordinate d
// (interval: x - x0; strip: zeta; radial: r - R0), with per-power tangential
// modulation a(y,d) = sum_l (c_l + A_l cos(2 pi m_l y / lenK)) d^l.
struct CoefficientField {
    std::string name;  // builtin name: linear | radial | cosine | poly
    struct Term {
        int power = 1;
        double c = 0.0;
        double amp = 0.0;
        int mode = 0;
    };
    std::vector<Term> terms;
    double lenK = 0.0;  // 0 for point interface (no tangential dependence)

    double a_geom(double y, double d) const;
    double dd_a_geom(double y, double d) const;  // da/dd

    static CoefficientField linear(double slope = 1.0);
    static CoefficientField radial();
    static CoefficientField cosine(double c1, double amp, int mode, double lenK,
                                   std::vector<Term> higher = {});
    static CoefficientField poly(std::vector<double> coeffs);  // c1..c4, constant in y
};

// Exact Fermi chart for the three supported interface kinds. kappa is the
// mean curvature with respect to the +zeta direction (zeta > 0 where a > 0),
// i.e. the first coefficient of d/dzeta log sqrt(det g).
struct FermiChart {
    DomainSpec domain;
    InterfaceSpec interface_;
    int ny = 1;
    double lenK = 0.0;   // |K| (0 for a point)
    Vec y;               // arclength nodes on K (size ny)
    double sigma = 1.0;  // zeta = sigma * d_geom
    double halfwidth = 0.0;  // Taylor tube halfwidth
    double margin = 0.0;     // distance from K to the domain boundary / fold
    int n_ambient = 1;
    Vec kappa;    // per-y curvature table
    Mat Gtilde;   // (LG x ny): coefficients of zeta^{l-1} in W(zeta), l = 1..LG
    static constexpr int kLG = 4;

    // Exact volume factor sqrt(det g)(zeta)/sqrt(det gbar) and its
    // logarithmic derivative W = d/dzeta log sqrt(det g).
    double volfac(double zeta) const;
    double W(double zeta) const;

    // Field evaluation in chart coordinates (converts through sigma).
    double a(const CoefficientField& f, double y_, double zeta) const {
        return f.a_geom(y_, sigma * zeta);
    }
    double dzeta_a(const CoefficientField& f, double y_, double zeta) const {
        return sigma * f.dd_a_geom(y_, sigma * zeta);
    }
};

// Signed distance with the a-orientation (positive where a > 0).
double signed_distance(const DomainSpec& dom, const InterfaceSpec& itf, double sigma, Pt x);

// Curvature of the interface w.r.t. the +zeta orientation.
double curvature(const InterfaceSpec& itf, double sigma, int n_ambient);

// Distance from K to the domain boundary (and to the chart fold for circles).
double interface_margin(const DomainSpec& dom, const InterfaceSpec& itf);

// Builds the chart; determines sigma from the field, validates orientation
// consistency and the tube. Throws TubeTooWide / ConfigError.
FermiChart build_fermi_chart(const DomainSpec& dom, const InterfaceSpec& itf,
                             const CoefficientField& field, double tube_halfwidth,
                             int ny);

struct NormalTaylor {
    Vec b;      // per y
    Mat b_ell;  // rows: ell = 2..ell_max (row index ell-2), cols: y
    int ell_max = 1;
};

// b_ell(y) = (1/ell!) d^ell_zeta a(y, 0) by high-order centered differences
// along the normal (15-point Fornberg stencil, step halfwidth/64).
// Throws NonPositiveWeight if min_y b <= 0.
NormalTaylor normal_taylor(const CoefficientField& field, const FermiChart& chart, int ell_max);

// Eager validation used by the config layer: -1 < a < 1 on the closure,
// a != 0 on the boundary, b > 0 on K.
void validate_field(const DomainSpec& dom, const InterfaceSpec& itf,
                    const CoefficientField& field);

}  // namespace fg
