#pragma once

#include <cstdint>

#include "mrcmflow/grid.hpp"

namespace mrcmflow {

/// Quadratic relative permeabilities with viscosities normalized to
/// mu_o = 1, mu_w = 1/M, which reproduces f(s) = M s^2 / (M s^2 + (1-s)^2).
struct FluidModel {
    double viscosity_ratio = 1.0;  // M = mu_o / mu_w
};

/// lambda(s) = M s^2 + (1-s)^2. Out-of-range s is clamped (counted).
double total_mobility(double s, const FluidModel& fluid);

/// f(s) = M s^2 / (M s^2 + (1-s)^2), nondecreasing on [0,1].
double fractional_flow(double s, const FluidModel& fluid);

/// max over s in [0,1] of f'(s), by dense sampling at 1e-3 resolution.
double max_fractional_flow_slope(const FluidModel& fluid);

/// Number of clamped mobility/fractional-flow evaluations since reset.
std::int64_t clamp_count();
void reset_clamp_count();

/// Water saturation with the injected value on inflow boundaries.
struct SaturationField {
    CellField s;
    double inflow = 1.0;  // s-bar on the injection boundary
};

struct CflPolicy {
    double safety = 0.9;
    double dt_cap = 1.0;  // returned when the velocity field is identically zero
};

/// dt = safety * min_cells vol / (sum of outgoing face fluxes * max f'),
/// capped at dt_cap.
double cfl_timestep(const FaceField& u, const FluidModel& fluid, const CflPolicy& policy);

/// One explicit upwind step. Face water flux takes f(s) from the upstream
/// cell, or f(s_inflow) on inflow boundary faces. Throws on a detected CFL
/// violation.
SaturationField upwind_step(const SaturationField& s, const FaceField& u, double dt,
                            const FluidModel& fluid);

/// kappa(x) = lambda(s) K(x).
CellField conductivity(const CellField& K, const SaturationField& s, const FluidModel& fluid);

} // namespace mrcmflow
