#pragma once

#include <memory>

#include "mrcmflow/mrcm.hpp"

namespace mrcmflow {

/// Drift metric between pressure solves.
///  - Relative: ||kappa_n - kappa_m||_L2 / ||kappa_m||_L2.
///  - Absolute: ||kappa_n - kappa_m||_L2.
///  - Mobility: ||lambda(s_n) - lambda(s_m)||_L2 scaled to the unit-water
///    mobility normalization (divide by M); independent of the permeability.
///    Handled by the splitting driver, which holds the saturation snapshots.
enum class EpsilonMode { Relative, Absolute, Mobility };

/// Discrete L2 distance between conductivity snapshots; the relative mode
/// divides by the L2 norm of the reference snapshot. Mobility mode is not
/// computable from conductivities and is rejected here.
double epsilon(const CellField& kappa_n, const CellField& kappa_m, EpsilonMode mode);

/// Cached multiscale solve: the basis set built at the last rebuild plus the
/// coupled solution it produced, against which perturbation problems are set
/// up. `recon_m` carries the cell pressures and boundary-face traces needed
/// to rebuild the auxiliary flux under a new conductivity.
struct PerturbationState {
    std::shared_ptr<const BasisSet> basis;
    MrcmReconstruction recon_m;
    double eta = 0.01;
    EpsilonMode mode = EpsilonMode::Relative;

    const CellField& kappa_m() const { return basis->kappa_m; }
};

/// true iff epsilon(kappa_n, kappa_m) exceeds eta (strict).
bool needs_update(const PerturbationState& state, const CellField& kappa_n);

struct MpmResult {
    SkeletonCoeffs delta_coeffs;
    MrcmReconstruction recon_n;  // p^m + delta, one-sided fluxes of the new solution
    CellField p;                 // downscaled
    FaceField u;                 // downscaled, conservative under kappa_n
    double repair_max = 0.0;
    bool repair_warning = false;
    double div_residual = 0.0;
    double div_scale = 1.0;
};

/// The zeroth-order perturbation update: solves only the data-driven local
/// problems under the cached conductivity snapshot (reusing the factorized
/// local solvers and interface matrix), shifts by the stored solution, and
/// downscales the skeleton flux under kappa_n.
MpmResult mpm_pressure_update(const PerturbationState& state, const CellField& kappa_n,
                              const CellField& q, const BoundarySpec& bc,
                              SolveCounters& counters);

} // namespace mrcmflow
