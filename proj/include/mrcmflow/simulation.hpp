#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mrcmflow/mpm.hpp"
#include "mrcmflow/mrcm.hpp"
#include "mrcmflow/transport.hpp"

namespace mrcmflow {

enum class Method { FineReference, MrcmEveryStep, Mpm2p, Mpm2pNoUpdates };

/// Operator-splitting policy. Exactly `cn` transport substeps run between
/// successive pressure updates, each with the CFL step recomputed from the
/// schedule velocity. Stopping: after `te` elliptic solves, at `pvi_max`,
/// and/or at water breakthrough, whichever comes first.
struct SplittingConfig {
    Method method = Method::Mpm2p;
    int cn = 1;
    double eta = 0.01;  // eta <= 0 forces a rebuild at every step
    EpsilonMode eta_mode = EpsilonMode::Relative;
    double cfl_safety = 0.9;
    double dt_cap = 1.0;
    long te = 0;
    double pvi_max = 0.0;
    bool stop_on_breakthrough = false;
    long max_steps_hard = 50000;
    double breakthrough_threshold = 0.05;
    bool track_errors = true;
};

struct StepRecord {
    long step = 0;
    double pvi = 0.0;
    double epsilon = 0.0;
    int rebuilt = 0;  // 1 = full basis rebuild (or fine solve), 0 = MPM reuse
    double flux_err = 0.0;
    double sat_err = 0.0;
    long bf_homog_cum = 0;
    long bf_part_cum = 0;
    double dt = 0.0;
    double wall_s = 0.0;
    double div_residual = 0.0;
};

struct RunRecord {
    std::vector<StepRecord> steps;
    std::vector<long> update_steps;  // rebuild events, including step 0
    long breakthrough_step = -1;
    double breakthrough_pvi = -1.0;
    long te = 0;          // elliptic solves performed
    long tm_updates = 0;  // rebuilds triggered by epsilon (the update counter)
    long tm_total = 0;    // rebuild events including the initial build
    long nhat = 0;        // homogeneous basis functions per rebuild
    int n_sub = 0;
    SolveCounters counters;
    double max_div_residual = 0.0;
    double max_div_ratio = 0.0;  // max over steps of div residual / residual scale
    int repair_warnings = 0;
    double final_pvi = 0.0;
};

/// Inputs of the cost formulas: N-hat homogeneous basis functions per full
/// update, N subdomains, total elliptic solves, total rebuild events.
struct CostModel {
    long nhat = 0;
    long n = 0;
    long te = 0;
    long tm = 0;
};

/// Relative cost reduction in percent:
/// (te - tm)/te * [1 - 2n/(nhat + 2n)] * 100.
double rcr(const CostModel& m);

/// Estimated basis-function cost of rebuilding every step vs. reusing:
/// cost_every = c_bf (nhat + 2n) te,
/// cost_reuse = c_bf (nhat + 2n) tm + 2 c_bf n (te - tm).
struct CostEstimates {
    double cost_every_step = 0.0;
    double cost_reuse = 0.0;
};
CostEstimates cost_estimates(const CostModel& m, double c_bf);

/// ||u - u_ref||_2 / ||u_ref||_2 over faces, area-weighted.
double relative_flux_error(const FaceField& u, const FaceField& u_ref);

/// ||s - s_ref||_1 / ||s_ref||_1 over cells, area-weighted.
double relative_sat_error(const CellField& s, const CellField& s_ref);

/// Cells adjacent to boundary faces with outgoing flow.
double max_outlet_saturation(const SaturationField& s, const FaceField& u);

/// Water volume entering the domain per unit time for a given velocity field.
double injection_rate(const FaceField& u, double inflow_sat, const FluidModel& fluid);

struct RunInputs {
    std::shared_ptr<const DomainDecomposition> dd;
    CellField K;
    CellField q;  // sources; empty means zero
    FluidModel fluid;
    BoundarySpec bc;
    std::shared_ptr<const InterfaceSpace> space;
    AlphaSpec alpha;
    SplittingConfig split;
    CellField s0;
    double inflow_sat = 1.0;
};

struct RunResult {
    RunRecord record;
    SaturationField s_final;
    CellField p_final;
    FaceField u_final;
};

using SnapshotCallback =
    std::function<void(long step, const SaturationField& s, const CellField& p,
                       const FaceField& u)>;

/// The modified operator-splitting driver. When error tracking is on, a fine
/// reference simulation advances in lockstep on the same transport-step
/// schedule (derived from the reference velocity), and per-step errors are
/// recorded against it.
RunResult run(const RunInputs& in, const std::vector<long>& snapshot_steps = {},
              const SnapshotCallback& snap = nullptr);

} // namespace mrcmflow
