// fglab: transition-layer laboratory for the heterogeneous Allen-Cahn problem
//   eps^2 Lap u = (u - a(x))(u^2 - 1),  du/dnu = 0 on the boundary.
//
// Verbs: approx | solve | spectrum | scan | weyl | report.
// Exit codes: 0 ok, 2 config error, 3 numeric failure.

#include <CLI11.hpp>
#include <iostream>

#include "fg/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fglab: interior transition layers, spectra and resonance gaps"};
    app.require_subcommand(1);

    std::string config_path, outdir = "runs";
    int jobs = 1;
    bool seedless = false;  // reserved: the pipeline is deterministic already

    struct Verb {
        CLI::App* sub;
        std::string name;
    };
    std::vector<Verb> verbs;
    for (const char* name : {"approx", "solve", "spectrum", "scan", "weyl"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", outdir, "output directory");
        sub->add_option("--jobs", jobs, "worker count (cells are independent)");
        sub->add_flag("--seedless", seedless, "reserved; all numerics are deterministic");
        verbs.push_back({sub, name});
    }
    CLI::App* rep = app.add_subcommand("report", "aggregate prior runs");
    std::vector<std::string> run_ids;
    rep->add_option("--out", outdir, "output directory holding the runs");
    rep->add_option("ids", run_ids, "run ids to aggregate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rep->parsed()) {
            auto [summary, all_pass] = fg::aggregate_report(run_ids, outdir);
            for (const auto& r : summary["runs"])
                for (const auto& c : r["checks"])
                    std::cout << (c.value("pass", false) ? "[PASS] " : "[FAIL] ")
                              << r.value("command", "?") << "/" << c.value("id", "")
                              << "  value=" << c.value("value", 0.0)
                              << "  threshold=" << c.value("threshold", 0.0) << "\n";
            std::cout << (all_pass ? "ALL PASS" : "FAILURES PRESENT") << " ("
                      << summary["runs"].size() << " runs)\n";
            return 0;
        }
        for (const auto& v : verbs) {
            if (!v.sub->parsed()) continue;
            fg::ExperimentConfig cfg = fg::load_config(config_path);
            fg::RunArtifact art = fg::run_command(v.name, cfg, outdir, jobs);
            std::cout << "run " << art.id << " -> " << art.dir.string() << "\n";
            if (art.result.contains("checks"))
                for (const auto& c : art.result["checks"])
                    std::cout << (c.value("pass", false) ? "[PASS] " : "[FAIL] ")
                              << c.value("id", "") << "  value=" << c.value("value", 0.0)
                              << "\n";
            return 0;
        }
    } catch (const fg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fg::MissingRun& e) {
        std::cerr << "missing run: " << e.what() << "\n";
        return 2;
    } catch (const fg::Error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
