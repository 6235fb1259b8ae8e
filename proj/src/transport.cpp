#include "mrcmflow/transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

namespace {

std::atomic<std::int64_t> g_clamp_count{0};

double clamp_s(double s) {
    if (s < 0.0 || s > 1.0) {
        ++g_clamp_count;
        return std::clamp(s, 0.0, 1.0);
    }
    return s;
}

double fprime(double s, double M) {
    const double d = M * s * s + (1.0 - s) * (1.0 - s);
    const double dd = 2.0 * M * s - 2.0 * (1.0 - s);
    return (2.0 * M * s * d - M * s * s * dd) / (d * d);
}

} // namespace

std::int64_t clamp_count() { return g_clamp_count.load(); }
void reset_clamp_count() { g_clamp_count.store(0); }

double total_mobility(double s, const FluidModel& fluid) {
    s = clamp_s(s);
    return fluid.viscosity_ratio * s * s + (1.0 - s) * (1.0 - s);
}

double fractional_flow(double s, const FluidModel& fluid) {
    s = clamp_s(s);
    const double w = fluid.viscosity_ratio * s * s;
    return w / (w + (1.0 - s) * (1.0 - s));
}

double max_fractional_flow_slope(const FluidModel& fluid) {
    double m = 0.0;
    for (int k = 0; k <= 1000; ++k) m = std::max(m, fprime(k * 1e-3, fluid.viscosity_ratio));
    return m;
}

double cfl_timestep(const FaceField& u, const FluidModel& fluid, const CflPolicy& policy) {
    const StructuredGrid2D& g = u.grid;
    const double vol = g.cell_volume();
    const double slope = max_fractional_flow_slope(fluid);
    double dt = policy.dt_cap / policy.safety;
    bool any_flow = false;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double outflux = 0.0;
            outflux += std::max(0.0, u[g.vface(i + 1, j)]) * g.hy;
            outflux += std::max(0.0, -u[g.vface(i, j)]) * g.hy;
            outflux += std::max(0.0, u[g.hface(i, j + 1)]) * g.hx;
            outflux += std::max(0.0, -u[g.hface(i, j)]) * g.hx;
            if (outflux > 0.0) {
                any_flow = true;
                dt = std::min(dt, vol / (outflux * slope));
            }
        }
    if (!any_flow) return policy.dt_cap;
    return std::min(policy.safety * dt, policy.dt_cap);
}

SaturationField upwind_step(const SaturationField& sat, const FaceField& u, double dt,
                            const FluidModel& fluid) {
    const StructuredGrid2D& g = u.grid;
    if (!sat.s.grid.same_shape(g)) throw ConfigError("upwind_step: grid mismatch");

    // Water flux per face (global orientation): f(s_upstream) * u * area.
    FaceField wflux(g);
    auto f_of = [&](int cell) { return fractional_flow(sat.s[cell], fluid); };
    const double f_in = fractional_flow(sat.inflow, fluid);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i <= g.nx; ++i) {
            const int f = g.vface(i, j);
            const double un = u[f];
            double fs;
            if (un >= 0.0)
                fs = (i == 0) ? f_in : f_of(g.cell(i - 1, j));  // i==0 with un>=0: inflow
            else
                fs = (i == g.nx) ? f_in : f_of(g.cell(i, j));
            wflux[f] = fs * un * g.hy;
        }
    }
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j <= g.ny; ++j) {
            const int f = g.hface(i, j);
            const double un = u[f];
            double fs;
            if (un >= 0.0)
                fs = (j == 0) ? f_in : f_of(g.cell(i, j - 1));
            else
                fs = (j == g.ny) ? f_in : f_of(g.cell(i, j));
            wflux[f] = fs * un * g.hx;
        }
    }

    SaturationField out = sat;
    const double vol = g.cell_volume();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.cell(i, j);
            const double net_out = wflux[g.vface(i + 1, j)] - wflux[g.vface(i, j)] +
                                   wflux[g.hface(i, j + 1)] - wflux[g.hface(i, j)];
            const double s_new = sat.s[c] - dt / vol * net_out;
            if (s_new < -1e-12 || s_new > 1.0 + 1e-12)
                throw NumericError("upwind_step: saturation left [0,1]; CFL condition violated");
            out.s[c] = std::clamp(s_new, 0.0, 1.0);
        }
    return out;
}

CellField conductivity(const CellField& K, const SaturationField& s, const FluidModel& fluid) {
    CellField kappa(K.grid);
    for (int c = 0; c < K.size(); ++c) kappa[c] = total_mobility(s.s[c], fluid) * K[c];
    return kappa;
}

} // namespace mrcmflow
