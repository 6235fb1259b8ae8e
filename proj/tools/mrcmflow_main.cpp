#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "mrcmflow/config.hpp"
#include "mrcmflow/errors.hpp"
#include "mrcmflow/report.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& preset_name,
            const std::string& out_override, long seed_override, bool dump_only) {
    mrcmflow::ExperimentConfig cfg;
    if (!preset_name.empty())
        cfg = mrcmflow::preset(preset_name);
    else if (!config_path.empty())
        cfg = mrcmflow::parse_config(config_path);
    else
        throw mrcmflow::ConfigError("run: give a config file or --preset");
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (dump_only) {
        std::cout << mrcmflow::dump_config(cfg);
        return 0;
    }
    mrcmflow::run_experiment(cfg, std::cout);
    return 0;
}

int cmd_generate_field(const std::string& config_path, const std::string& out_path) {
    const mrcmflow::ExperimentConfig cfg = mrcmflow::parse_config(config_path);
    mrcmflow::PreparedExperiment pe = mrcmflow::prepare(cfg);
    const std::string path = out_path.empty() ? cfg.output_dir + "/field.txt" : out_path;
    if (out_path.empty()) std::filesystem::create_directories(cfg.output_dir);
    mrcmflow::save_cell_field(path, pe.permeability, mrcmflow::FieldFormat::PlainMatrix,
                              "permeability");
    std::cout << path << "\n";
    return 0;
}

int cmd_rcr(long nhat, long n, long te, long tm) {
    const double value = mrcmflow::rcr({nhat, n, te, tm});
    std::printf("%.2f\n", value);
    return 0;
}

int cmd_compare(const std::string& run_a, const std::string& run_b) {
    using mrcmflow::CsvRow;
    const auto a = mrcmflow::read_errors_csv(run_a + "/errors.csv");
    const auto b = mrcmflow::read_errors_csv(run_b + "/errors.csv");
    const size_t n = std::min(a.size(), b.size());
    double max_dflux = 0.0, max_dsat = 0.0, max_ratio = 0.0;
    for (size_t i = 0; i < n; ++i) {
        max_dflux = std::max(max_dflux, std::abs(a[i].flux_err - b[i].flux_err));
        max_dsat = std::max(max_dsat, std::abs(a[i].sat_err - b[i].sat_err));
        if (b[i].flux_err > 1e-14)
            max_ratio = std::max(max_ratio, a[i].flux_err / b[i].flux_err);
    }
    std::printf("steps_compared %zu\n", n);
    std::printf("max_abs_flux_err_diff %.15g\n", max_dflux);
    std::printf("max_abs_sat_err_diff %.15g\n", max_dsat);
    std::printf("max_flux_err_ratio %.15g\n", max_ratio);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("MRCMFLOW_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));

    CLI::App app{"Two-phase flow simulator with multiscale pressure solves and basis reuse"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out_override, gen_out, run_a, run_b;
    long seed_override = -1;
    bool dump_only = false;
    long nhat = 0, nsub = 0, te = 0, tm = 0;

    auto* run = app.add_subcommand("run", "Run an experiment from a config file or preset");
    run->add_option("config", config_path, "config file path");
    run->add_option("--preset", preset_name, "built-in preset name");
    run->add_option("--output", out_override, "override the output directory");
    run->add_option("--seed", seed_override, "override the field seed");
    run->add_flag("--dump-config", dump_only, "print the effective config and exit");

    auto* gen = app.add_subcommand("generate-field", "Generate and save a permeability field");
    gen->add_option("config", config_path, "config file path")->required();
    gen->add_option("--output", gen_out, "output file (default <dir>/field.txt)");

    auto* rcr_cmd = app.add_subcommand("rcr", "Relative cost reduction from the counters");
    rcr_cmd->add_option("--nhat", nhat, "homogeneous basis functions per rebuild")->required();
    rcr_cmd->add_option("--n", nsub, "number of subdomains")->required();
    rcr_cmd->add_option("--te", te, "total elliptic solves")->required();
    rcr_cmd->add_option("--tm", tm, "basis rebuild events")->required();

    auto* cmp = app.add_subcommand("compare", "Diff the error curves of two run directories");
    cmp->add_option("runA", run_a, "first run directory")->required();
    cmp->add_option("runB", run_b, "second run directory")->required();

    auto* ref = app.add_subcommand("config-reference", "Print all config keys and defaults");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, preset_name, out_override, seed_override,
                                          dump_only);
        if (gen->parsed()) return cmd_generate_field(config_path, gen_out);
        if (rcr_cmd->parsed()) return cmd_rcr(nhat, nsub, te, tm);
        if (cmp->parsed()) return cmd_compare(run_a, run_b);
        if (ref->parsed()) {
            std::cout << mrcmflow::config_reference();
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const mrcmflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mrcmflow::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const mrcmflow::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
