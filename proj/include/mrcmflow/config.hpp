#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mrcmflow/fields_io.hpp"
#include "mrcmflow/interface_space.hpp"
#include "mrcmflow/simulation.hpp"

namespace mrcmflow {

enum class FieldSource { Gaussian, File, Uniform };
enum class BcPreset { PressureDrop, UnitInflow, Finger };
enum class InitialSat { Zero, Uniform, Finger };

/// A full experiment description: everything a `run` needs.
struct ExperimentConfig {
    // [grid]
    int nx = 64, ny = 64;
    double lx = 1.0, ly = 1.0;
    // [decomposition]
    int sub_nx = 1, sub_ny = 1;
    // [field]
    FieldSource source = FieldSource::Gaussian;
    double delta = 2.5;
    double mean_coeff = 0.8;
    std::uint64_t seed = 1;
    XiNormalization normalization = XiNormalization::None;
    double range_target = 2.7631021115928548;
    std::string field_path;
    double uniform_value = 1.0;
    // [fluid]
    double viscosity_ratio = 1.0;
    // [bc]
    BcPreset bc_preset = BcPreset::PressureDrop;
    // [space]
    InterfaceSpace::Kind space_kind = InterfaceSpace::Kind::Constant;
    HbarSpec hbar = HbarSpec::whole();
    // [alpha]
    AlphaSpec alpha;
    // [splitting]
    SplittingConfig split;
    // [transport]
    double inflow_saturation = 1.0;
    InitialSat initial = InitialSat::Zero;
    double initial_value = 0.0;
    double finger_front_frac = 0.05;
    double finger_bump_frac = 0.05;
    double finger_bump_halfwidth_frac = 0.1;
    // [output]
    std::string output_dir = "out";
    std::vector<long> snapshot_steps;
    FieldFormat snapshot_format = FieldFormat::PlainMatrix;
};

/// Strict line-oriented parser: `[section]` headers and `key = value` lines,
/// `#` comments. Unknown sections or keys are rejected with the line number.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& name);

/// Built-in experiment presets.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Config-file text for a config (parseable by parse_config).
std::string dump_config(const ExperimentConfig& cfg);

/// Generated reference of all keys, defaults and accepted values.
std::string config_reference();

/// Instantiated experiment: grid, decomposition, fields, spaces.
struct PreparedExperiment {
    ExperimentConfig cfg;
    RunInputs inputs;
    CellField permeability;
};

PreparedExperiment prepare(const ExperimentConfig& cfg);

/// Runs an experiment and writes errors.csv, events.csv, summary.txt, the
/// permeability field and scheduled snapshots into cfg.output_dir.
void run_experiment(const ExperimentConfig& cfg, std::ostream& log);

} // namespace mrcmflow
