#include "fg/config.hpp"

#include <fstream>
#include <set>

namespace fg {

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double num(const json& j, const std::string& key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) throw ConfigError(key + " must be a number");
    return j.at(key).get<double>();
}

int integer(const json& j, const std::string& key, int dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number_integer()) throw ConfigError(key + " must be an integer");
    return j.at(key).get<int>();
}

CoefficientField parse_field(const json& jf, double lenK) {
    check_keys(jf, "field", {"name", "slope", "c1", "amp", "mode", "higher", "coeffs"});
    const std::string name = jf.value("name", "");
    if (name == "linear") {
        return CoefficientField::linear(num(jf, "slope", 1.0));
    }
    if (name == "radial") {
        return CoefficientField::radial();
    }
    if (name == "cosine") {
        std::vector<CoefficientField::Term> higher;
        if (jf.contains("higher")) {
            for (const auto& t : jf.at("higher")) {
                check_keys(t, "field.higher[]", {"power", "c", "amp", "mode"});
                higher.push_back({integer(t, "power", 2), num(t, "c", 0.0), num(t, "amp", 0.0),
                                  integer(t, "mode", 0)});
            }
        }
        return CoefficientField::cosine(num(jf, "c1", 1.0), num(jf, "amp", 0.0),
                                        integer(jf, "mode", 1), lenK, higher);
    }
    if (name == "poly") {
        if (!jf.contains("coeffs")) throw ConfigError("poly field needs coeffs");
        std::vector<double> c = jf.at("coeffs").get<std::vector<double>>();
        if (c.empty() || c.size() > 4) throw ConfigError("poly coeffs: 1..4 entries");
        return CoefficientField::poly(c);
    }
    throw ConfigError("unknown field builtin '" + name + "'");
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    check_keys(j, "config",
               {"schema", "geometry", "field", "numerics", "approx", "solve", "spectrum",
                "scan", "weyl", "report"});
    if (j.value("schema", "") != std::string("fg-config/1"))
        throw ConfigError("schema must be \"fg-config/1\"");

    ExperimentConfig cfg;
    cfg.raw = j;

    const json& jg = j.at("geometry");
    check_keys(jg, "geometry", {"domain", "interface", "tube_halfwidth"});
    const json& jd = jg.at("domain");
    check_keys(jd, "geometry.domain", {"kind", "lo", "hi", "period", "n"});
    const std::string dk = jd.value("kind", "");
    if (dk == "interval")
        cfg.domain.kind = DomainKind::interval;
    else if (dk == "periodic_strip")
        cfg.domain.kind = DomainKind::periodic_strip;
    else if (dk == "radial_disk")
        cfg.domain.kind = DomainKind::radial_disk;
    else if (dk == "radial_annulus")
        cfg.domain.kind = DomainKind::radial_annulus;
    else
        throw ConfigError("unknown domain kind '" + dk + "'");
    cfg.domain.lo = num(jd, "lo", -0.9);
    cfg.domain.hi = num(jd, "hi", 0.9);
    cfg.domain.period = num(jd, "period", 0.0);
    cfg.domain.dim_n = integer(jd, "n", dk == "interval" ? 1 : 2);

    const json& ji = jg.at("interface");
    check_keys(ji, "geometry.interface", {"kind", "x0", "period", "radius"});
    const std::string ik = ji.value("kind", "");
    if (ik == "point")
        cfg.interface_.kind = InterfaceKind::point;
    else if (ik == "periodic_line")
        cfg.interface_.kind = InterfaceKind::periodic_line;
    else if (ik == "circle")
        cfg.interface_.kind = InterfaceKind::circle;
    else
        throw ConfigError("unknown interface kind '" + ik + "'");
    cfg.interface_.x0 = num(ji, "x0", 0.0);
    cfg.interface_.period = num(ji, "period", cfg.domain.period);
    cfg.interface_.radius = num(ji, "radius", 0.0);
    cfg.tube_halfwidth = num(jg, "tube_halfwidth", 0.0);

    double lenK = 0.0;
    if (cfg.interface_.kind == InterfaceKind::periodic_line) lenK = cfg.interface_.period;
    if (cfg.interface_.kind == InterfaceKind::circle)
        lenK = 2.0 * M_PI * cfg.interface_.radius;
    cfg.field = parse_field(j.at("field"), lenK);

    const json jn = j.contains("numerics") ? j.at("numerics") : json::object();
    check_keys(jn, "numerics",
               {"k", "S", "hs", "ny", "nx", "nz", "gamma", "taylor_order"});
    cfg.numerics.k = integer(jn, "k", 2);
    cfg.numerics.S = num(jn, "S", 20.0);
    cfg.numerics.hs = num(jn, "hs", 0.01);
    cfg.numerics.ny = integer(jn, "ny", 128);
    cfg.numerics.gamma = num(jn, "gamma", 0.7);
    cfg.numerics.taylor_order = integer(jn, "taylor_order", 4);
    cfg.nx = integer(jn, "nx", cfg.numerics.ny);
    cfg.nz = integer(jn, "nz", 1024);
    if (cfg.numerics.k < 1 || cfg.numerics.k > 3) throw ConfigError("k must be 1..3");

    // command blocks: strict keys, values checked by the commands
    if (j.contains("approx"))
        check_keys(j.at("approx"), "approx",
                   {"k_list", "eps_list", "calibrate_sign", "eigen_residual"});
    if (j.contains("solve"))
        check_keys(j.at("solve"), "solve",
                   {"eps", "tol", "fixed_point", "resonance_threshold", "compact_margin"});
    if (j.contains("spectrum"))
        check_keys(j.at("spectrum"), "spectrum",
                   {"eps_list", "modes", "count", "k_modes", "decompose", "window_factor",
                    "derivative"});
    if (j.contains("scan"))
        check_keys(j.at("scan"), "scan", {"eps_lo", "eps_hi", "samples", "modes", "k_modes"});
    if (j.contains("weyl")) check_keys(j.at("weyl"), "weyl", {"ny", "modes", "weights"});

    // eager physical validation
    validate_field(cfg.domain, cfg.interface_, cfg.field);
    make_chart(cfg);  // checks tube / orientation / b > 0
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return parse_config(j);
}

FermiChart make_chart(const ExperimentConfig& cfg, int ny) {
    FermiChart ch = build_fermi_chart(cfg.domain, cfg.interface_, cfg.field,
                                      cfg.tube_halfwidth, ny);
    normal_taylor(cfg.field, ch, 1);  // b > 0 check
    return ch;
}

FermiChart make_chart(const ExperimentConfig& cfg) {
    const int ny = cfg.interface_.kind == InterfaceKind::point ? 1 : cfg.numerics.ny;
    return make_chart(cfg, ny);
}

}  // namespace fg
