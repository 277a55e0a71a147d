#include <doctest.h>

#include "fg/geometry.hpp"

using namespace fg;

namespace {

DomainSpec disk_domain() {
    DomainSpec d;
    d.kind = DomainKind::radial_disk;
    d.lo = 0.0;
    d.hi = 1.0;
    d.dim_n = 2;
    return d;
}

InterfaceSpec circle(double R0) {
    InterfaceSpec i;
    i.kind = InterfaceKind::circle;
    i.radius = R0;
    return i;
}

DomainSpec strip_domain(double L) {
    DomainSpec d;
    d.kind = DomainKind::periodic_strip;
    d.lo = -0.9;
    d.hi = 0.9;
    d.period = L;
    d.dim_n = 2;
    return d;
}

InterfaceSpec line(double L) {
    InterfaceSpec i;
    i.kind = InterfaceKind::periodic_line;
    i.period = L;
    return i;
}

}  // namespace

TEST_CASE("signed distance closed forms") {
    // circle R0=0.5, x=(0.75,0), a=|x|-R0 orientation
    CHECK(signed_distance(disk_domain(), circle(0.5), +1.0, {0.75, 0.0}) ==
          doctest::Approx(0.25));
    // point interface at 0 on an interval, a(x)=x
    DomainSpec iv;
    iv.kind = DomainKind::interval;
    iv.lo = -0.9;
    iv.hi = 0.9;
    iv.dim_n = 1;
    InterfaceSpec pt;
    pt.kind = InterfaceKind::point;
    pt.x0 = 0.0;
    CHECK(signed_distance(iv, pt, +1.0, {-0.3, 0.0}) == doctest::Approx(-0.3));
    // periodic line at zeta=0
    CHECK(signed_distance(strip_domain(2 * M_PI), line(2 * M_PI), +1.0, {1.0, 0.1}) ==
          doctest::Approx(0.1));
}

TEST_CASE("curvature conventions") {
    CHECK(curvature(line(5.0), +1.0, 2) == 0.0);
    InterfaceSpec pt;
    pt.kind = InterfaceKind::point;
    CHECK(curvature(pt, +1.0, 1) == 0.0);
    CHECK(std::abs(curvature(circle(0.5), +1.0, 2)) == doctest::Approx(2.0));
    CHECK(std::abs(curvature(circle(1.0), -1.0, 2)) == doctest::Approx(1.0));
}

TEST_CASE("fermi chart: flat strip") {
    CoefficientField f = CoefficientField::linear(1.0);
    FermiChart ch = build_fermi_chart(strip_domain(2 * M_PI), line(2 * M_PI), f, 0.45, 32);
    CHECK(ch.sigma == 1.0);
    CHECK(ch.kappa.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.Gtilde.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.volfac(0.3) == doctest::Approx(1.0));
    CHECK(ch.W(0.3) == 0.0);
}

TEST_CASE("fermi chart: circle volume factor and Gtilde") {
    CoefficientField f = CoefficientField::radial();
    DomainSpec dom = disk_domain();
    dom.hi = 2.0;
    FermiChart ch = build_fermi_chart(dom, circle(1.0), f, 0.45, 32);
    CHECK(ch.sigma == 1.0);
    // exact annular factor (R0 + zeta)/R0
    CHECK(ch.volfac(0.1) == doctest::Approx(1.1).epsilon(1e-12));
    // Gtilde_1 = kappa to 1e-12
    CHECK(ch.Gtilde(0, 0) == doctest::Approx(ch.kappa(0)).epsilon(1e-12));
    // expansion of W matches the closed form on the tube
    for (double z : {-0.3, -0.1, 0.05, 0.2, 0.4}) {
        double w = 0.0;
        for (int l = FermiChart::kLG; l >= 1; --l) w = w * z + ch.Gtilde(l - 1, 0);
        // truncation remainder <= C z^LG
        CHECK(std::abs(w - ch.W(z)) <= 2.0 * std::pow(std::abs(z), FermiChart::kLG));
    }
    // volume-factor expansion: |volfac - (1 + G1 z)| <= C z^2
    for (double z : {-0.2, -0.05, 0.1, 0.3})
        CHECK(std::abs(ch.volfac(z) - (1.0 + ch.Gtilde(0, 0) * z)) <= 1.01 * z * z);
}

TEST_CASE("fermi chart: orientation flips with the field sign") {
    CoefficientField f = CoefficientField::linear(-1.0);  // a = -zeta_geom
    FermiChart ch = build_fermi_chart(strip_domain(2 * M_PI), line(2 * M_PI), f, 0.45, 32);
    CHECK(ch.sigma == -1.0);
    // orientation consistency: sign(a) = sign(zeta)
    for (double zb : {-0.4, -0.1, 0.1, 0.4})
        CHECK(std::signbit(ch.a(f, 0.0, zb)) == std::signbit(zb));
}

TEST_CASE("fermi chart: tube validation") {
    CoefficientField f = CoefficientField::radial();
    CHECK_THROWS_AS(build_fermi_chart(disk_domain(), circle(0.5), f, 0.6, 16), TubeTooWide);
    DomainSpec bad = disk_domain();
    bad.hi = 0.4;  // interface outside
    CHECK_THROWS_AS(build_fermi_chart(bad, circle(0.5), f, 0.1, 16), ConfigError);
}

TEST_CASE("eikonal property of the signed distance") {
    // |grad zeta| = 1 via finite differences of the closed-form distance
    DomainSpec dom = disk_domain();
    InterfaceSpec itf = circle(0.5);
    const double d = 1e-5;
    for (double x : {0.3, 0.55, 0.7}) {
        for (double y : {0.05, 0.2}) {
            const double gx = (signed_distance(dom, itf, 1.0, {x + d, y}) -
                               signed_distance(dom, itf, 1.0, {x - d, y})) /
                              (2 * d);
            const double gy = (signed_distance(dom, itf, 1.0, {x, y + d}) -
                               signed_distance(dom, itf, 1.0, {x, y - d})) /
                              (2 * d);
            CHECK(std::abs(std::hypot(gx, gy) - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("normal taylor tables") {
    SUBCASE("a = zeta") {
        CoefficientField f = CoefficientField::linear(1.0);
        FermiChart ch = build_fermi_chart(strip_domain(2 * M_PI), line(2 * M_PI), f, 0.45, 16);
        NormalTaylor nt = normal_taylor(f, ch, 4);
        CHECK(nt.b.maxCoeff() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(nt.b_ell.cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("a = zeta + zeta^2") {
        CoefficientField f = CoefficientField::poly({1.0, 1.0});
        FermiChart ch = build_fermi_chart(strip_domain(2 * M_PI), line(2 * M_PI), f, 0.45, 16);
        NormalTaylor nt = normal_taylor(f, ch, 4);
        CHECK(nt.b(0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(nt.b_ell(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(nt.b_ell(1, 0)) < 1e-7);
    }
    SUBCASE("radial field on the circle chart: b = 1, higher orders vanish") {
        CoefficientField f = CoefficientField::radial();
        FermiChart ch = build_fermi_chart(disk_domain(), circle(0.5), f, 0.24, 16);
        NormalTaylor nt = normal_taylor(f, ch, 4);
        CHECK(std::abs(nt.b(0) - 1.0) < 1e-8);
        CHECK(nt.b_ell.cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("taylor remainder bound on the tube") {
        CoefficientField f = CoefficientField::cosine(1.0, 0.3, 2, 2 * M_PI,
                                                      {{2, 0.4, 0.1, 1}, {3, -0.2, 0.0, 0}});
        FermiChart ch = build_fermi_chart(strip_domain(2 * M_PI), line(2 * M_PI), f, 0.45, 32);
        NormalTaylor nt = normal_taylor(f, ch, 4);
        for (int k : {1, 2, 3}) {
            double worst = 0.0;
            for (int iy = 0; iy < ch.ny; ++iy) {
                for (double z = -0.4; z <= 0.4; z += 0.05) {
                    if (std::abs(z) < 1e-9) continue;
                    double fit = nt.b(iy) * z;
                    for (int l = 2; l <= k; ++l) fit += nt.b_ell(l - 2, iy) * std::pow(z, l);
                    worst = std::max(worst, std::abs(ch.a(f, ch.y(iy), z) - fit) /
                                                std::pow(std::abs(z), k + 1));
                }
            }
            CHECK(worst < 2.0);  // bounded remainder constant
        }
    }
    SUBCASE("nonpositive weight rejected") {
        // chart from a clean field; the dipping-b field trips the guard
        FermiChart ch = build_fermi_chart(strip_domain(2 * M_PI), line(2 * M_PI),
                                          CoefficientField::linear(1.0), 0.45, 32);
        CoefficientField f = CoefficientField::cosine(0.2, 0.5, 1, 2 * M_PI);
        CHECK_THROWS_AS(normal_taylor(f, ch, 2), NonPositiveWeight);
    }
    SUBCASE("inconsistent orientation rejected at chart build") {
        CoefficientField f = CoefficientField::cosine(0.2, 0.5, 1, 2 * M_PI);
        CHECK_THROWS_AS(build_fermi_chart(strip_domain(2 * M_PI), line(2 * M_PI), f, 0.45, 32),
                        ConfigError);
    }
}

TEST_CASE("field validation") {
    // a = 1.5 zeta leaves (-1,1) on the strip closure
    CoefficientField f = CoefficientField::linear(1.5);
    CHECK_THROWS_AS(validate_field(strip_domain(2 * M_PI), line(2 * M_PI), f), ConfigError);
    CHECK_NOTHROW(validate_field(strip_domain(2 * M_PI), line(2 * M_PI),
                                 CoefficientField::linear(1.0)));
}
