#include "mrcmflow/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

double rcr(const CostModel& m) {
    if (m.te <= 0) throw ConfigError("rcr: te must be positive");
    if (m.nhat < 0 || m.n < 0 || m.tm < 0) throw ConfigError("rcr: negative counter");
    if (m.tm > m.te) throw ConfigError("rcr: tm exceeds te");
    const double frac = static_cast<double>(m.te - m.tm) / static_cast<double>(m.te);
    const double bf = 1.0 - 2.0 * static_cast<double>(m.n) /
                                static_cast<double>(m.nhat + 2 * m.n);
    return frac * bf * 100.0;
}

CostEstimates cost_estimates(const CostModel& m, double c_bf) {
    if (!(c_bf > 0.0)) throw ConfigError("cost_estimates: c_bf must be positive");
    CostEstimates e;
    e.cost_every_step = c_bf * static_cast<double>(m.nhat + 2 * m.n) * static_cast<double>(m.te);
    e.cost_reuse = c_bf * static_cast<double>(m.nhat + 2 * m.n) * static_cast<double>(m.tm) +
                   2.0 * c_bf * static_cast<double>(m.n) * static_cast<double>(m.te - m.tm);
    return e;
}

double relative_flux_error(const FaceField& u, const FaceField& u_ref) {
    if (!u.grid.same_shape(u_ref.grid)) throw ConfigError("relative_flux_error: grid mismatch");
    const StructuredGrid2D& g = u.grid;
    double num = 0.0, den = 0.0;
    for (int f = 0; f < g.face_count(); ++f) {
        const double w = g.face_area(f);
        const double d = u[f] - u_ref[f];
        num += w * d * d;
        den += w * u_ref[f] * u_ref[f];
    }
    if (!(den > 0.0)) {
        if (num == 0.0) return 0.0;
        throw NumericError("relative_flux_error: zero reference norm");
    }
    return std::sqrt(num / den);
}

double relative_sat_error(const CellField& s, const CellField& s_ref) {
    if (!s.grid.same_shape(s_ref.grid)) throw ConfigError("relative_sat_error: grid mismatch");
    double num = 0.0, den = 0.0;
    for (int c = 0; c < s.size(); ++c) {
        num += std::abs(s[c] - s_ref[c]);
        den += std::abs(s_ref[c]);
    }
    if (!(den > 0.0)) {
        if (num == 0.0) return 0.0;
        throw NumericError("relative_sat_error: zero reference norm");
    }
    return num / den;
}

double max_outlet_saturation(const SaturationField& s, const FaceField& u) {
    // A boundary side counts as a production boundary only when its net flux
    // leaves the domain; this keeps error-level flow reversals on injection
    // sides from registering as outlets.
    const StructuredGrid2D& g = u.grid;
    double m = 0.0;
    auto side = [&](auto&& face_of, auto&& cell_of, int count, double area) {
        double net = 0.0;
        for (int k = 0; k < count; ++k) net += face_of(k) * area;
        if (!(net > 1e-14)) return;
        for (int k = 0; k < count; ++k)
            if (face_of(k) > 1e-14) m = std::max(m, s.s[cell_of(k)]);
    };
    side([&](int j) { return -u[g.vface(0, j)]; }, [&](int j) { return g.cell(0, j); }, g.ny,
         g.hy);
    side([&](int j) { return u[g.vface(g.nx, j)]; },
         [&](int j) { return g.cell(g.nx - 1, j); }, g.ny, g.hy);
    side([&](int i) { return -u[g.hface(i, 0)]; }, [&](int i) { return g.cell(i, 0); }, g.nx,
         g.hx);
    side([&](int i) { return u[g.hface(i, g.ny)]; },
         [&](int i) { return g.cell(i, g.ny - 1); }, g.nx, g.hx);
    return m;
}

double injection_rate(const FaceField& u, double inflow_sat, const FluidModel& fluid) {
    const StructuredGrid2D& g = u.grid;
    const double f_in = fractional_flow(inflow_sat, fluid);
    double rate = 0.0;
    auto consider = [&](double un_out, double area) {
        if (un_out < 0.0) rate += -un_out * area * f_in;
    };
    for (int j = 0; j < g.ny; ++j) {
        consider(-u[g.vface(0, j)], g.hy);
        consider(u[g.vface(g.nx, j)], g.hy);
    }
    for (int i = 0; i < g.nx; ++i) {
        consider(-u[g.hface(i, 0)], g.hx);
        consider(u[g.hface(i, g.ny)], g.hx);
    }
    return rate;
}

namespace {

double safe_flux_err(const FaceField& u, const FaceField& u_ref) {
    return relative_flux_error(u, u_ref);
}

double safe_sat_err(const CellField& s, const CellField& s_ref) {
    double num = 0.0;
    for (int c = 0; c < s.size(); ++c) num += std::abs(s[c] - s_ref[c]);
    if (num == 0.0) return 0.0;
    return relative_sat_error(s, s_ref);
}

} // namespace

RunResult run(const RunInputs& in, const std::vector<long>& snapshot_steps,
              const SnapshotCallback& snap) {
    const DomainDecomposition& dd = *in.dd;
    const StructuredGrid2D& grid = dd.grid;
    if (!in.K.grid.same_shape(grid)) throw ConfigError("run: permeability grid mismatch");
    if (!in.s0.grid.same_shape(grid)) throw ConfigError("run: initial saturation grid mismatch");
    const SplittingConfig& sc = in.split;
    if (sc.cn < 1) throw ConfigError("run: cn must be >= 1");
    if (sc.te <= 0 && sc.pvi_max <= 0.0 && !sc.stop_on_breakthrough)
        throw ConfigError("run: no stop condition configured");
    if (sc.method == Method::Mpm2p && sc.eta < 0.0)
        throw ConfigError("run: negative eta");

    const CellField q = in.q.size() > 0 ? in.q : CellField(grid, 0.0);
    const bool multiscale = sc.method != Method::FineReference;
    const bool track = sc.track_errors && multiscale;

    RunResult out;
    RunRecord& rec = out.record;
    rec.n_sub = dd.subdomain_count();

    SolveCounters& counters = rec.counters;
    SaturationField s_main{in.s0, in.inflow_sat};
    SaturationField s_ref = s_main;

    CellCenteredSolver fine_solver(grid);
    const std::optional<int> fine_anchor =
        in.bc.pure_neumann() ? std::optional<int>(0) : std::nullopt;
    auto fine_solve = [&](const CellField& kappa) {
        fine_solver.factorize(kappa, in.bc, fine_anchor);
        ++counters.fine;
        return fine_solver.solve(q, in.bc);
    };

    PerturbationState state;
    state.eta = sc.eta;
    state.mode = sc.eta_mode;

    CellField p_main;
    FaceField u_main;
    FaceField u_ref;
    CellField p_ref;
    CellField lambda_rebuild;  // mobility snapshot backing the Mobility drift metric
    double step_div_residual = 0.0;

    auto mobility_field = [&](const SaturationField& s) {
        CellField lam(grid);
        for (int c = 0; c < grid.cell_count(); ++c)
            lam[c] = total_mobility(s.s[c], in.fluid);
        return lam;
    };
    auto drift = [&](const CellField& kappa_n) {
        if (sc.eta_mode == EpsilonMode::Mobility)
            return epsilon(mobility_field(s_main), lambda_rebuild, EpsilonMode::Absolute) /
                   in.fluid.viscosity_ratio;
        return epsilon(kappa_n, state.kappa_m(), sc.eta_mode);
    };

    auto note_downscale = [&](double div_res, double div_scale, bool warn) {
        step_div_residual = div_res;
        rec.max_div_residual = std::max(rec.max_div_residual, div_res);
        rec.max_div_ratio = std::max(rec.max_div_ratio, div_res / div_scale);
        if (warn) ++rec.repair_warnings;
    };

    auto rebuild = [&](const CellField& kappa) {
        const RobinParameter beta = compute_beta(kappa, dd, in.alpha);
        GlobalSolution sol = mrcm_solve(kappa, in.dd, in.space, beta, q, in.bc, counters);
        state.basis = sol.basis;
        state.recon_m = std::move(sol.recon);
        rec.nhat = state.basis->nhat();
        p_main = std::move(sol.p);
        u_main = std::move(sol.u);
        lambda_rebuild = mobility_field(s_main);
        note_downscale(sol.div_residual, sol.div_scale, sol.repair_warning);
    };

    auto reuse = [&](const CellField& kappa) {
        MpmResult r = mpm_pressure_update(state, kappa, q, in.bc, counters);
        p_main = std::move(r.p);
        u_main = std::move(r.u);
        note_downscale(r.div_residual, r.div_scale, r.repair_warning);
    };

    double pvi = 0.0;
    long n = 0;
    long ell = 0;
    double eps = sc.eta;  // Algorithm start: the first branch check reuses

    auto record_step = [&](int rebuilt, double epsilon_value, double dt, double wall_s) {
        StepRecord sr;
        sr.step = n;
        sr.pvi = pvi;
        sr.epsilon = epsilon_value;
        sr.rebuilt = rebuilt;
        if (track) {
            sr.flux_err = safe_flux_err(u_main, u_ref);
            sr.sat_err = safe_sat_err(s_main.s, s_ref.s);
        }
        sr.bf_homog_cum = counters.homogeneous;
        sr.bf_part_cum = counters.particular;
        sr.dt = dt;
        sr.wall_s = wall_s;
        sr.div_residual = step_div_residual;
        rec.steps.push_back(sr);
        if (rebuilt) rec.update_steps.push_back(n);
        if (snap && std::find(snapshot_steps.begin(), snapshot_steps.end(), n) !=
                        snapshot_steps.end())
            snap(n, s_main, p_main, u_main);
    };

    using clock = std::chrono::steady_clock;

    // Initial pressure solve (the basis build for multiscale methods).
    {
        const auto t0 = clock::now();
        const CellField kappa0 = conductivity(in.K, s_main, in.fluid);
        if (track || !multiscale) {
            LocalSolution ref = fine_solve(kappa0);
            u_ref = ref.u;
            p_ref = ref.p;
            if (!multiscale) {
                p_main = p_ref;
                u_main = u_ref;
                note_downscale(conservation_residual(ref, q), residual_scale(ref, q), false);
            }
        }
        if (multiscale) rebuild(kappa0);
        const double wall = std::chrono::duration<double>(clock::now() - t0).count();
        record_step(1, 0.0, 0.0, wall);
        n = 1;
    }

    const CflPolicy cfl_policy{sc.cfl_safety, sc.dt_cap};

    auto breakthrough_check = [&]() {
        if (rec.breakthrough_step >= 0) return;
        if (max_outlet_saturation(s_main, u_main) > sc.breakthrough_threshold) {
            rec.breakthrough_step = n - 1;  // the step whose record was just written
            rec.breakthrough_pvi = pvi;
        }
    };
    breakthrough_check();

    while (true) {
        if (sc.te > 0 && n >= sc.te) break;
        if (sc.pvi_max > 0.0 && pvi >= sc.pvi_max) break;
        if (sc.stop_on_breakthrough && rec.breakthrough_step >= 0) break;
        if (n >= sc.max_steps_hard) break;

        const auto t0 = clock::now();

        // Transport substeps with the previous velocity, on the schedule
        // derived from the reference velocity when tracking. If the
        // multiscale velocity locally exceeds the reference, its substep is
        // subcycled to keep its own CFL bound while preserving alignment.
        const FaceField& u_sched = track ? u_ref : u_main;
        const double dt = cfl_timestep(u_sched, in.fluid, cfl_policy);
        int sub = 1;
        if (track) {
            const double dt_main = cfl_timestep(u_main, in.fluid, cfl_policy);
            if (dt > dt_main * (1.0 + 1e-12))
                sub = static_cast<int>(std::ceil(dt / dt_main - 1e-12));
        }
        const double inj = injection_rate(u_sched, in.inflow_sat, in.fluid);
        const double pore_volume = grid.lx * grid.ly;
        for (int k = 0; k < sc.cn; ++k) {
            for (int j = 0; j < sub; ++j)
                s_main = upwind_step(s_main, u_main, dt / sub, in.fluid);
            if (track) s_ref = upwind_step(s_ref, u_ref, dt, in.fluid);
            pvi += inj * dt / pore_volume;
        }

        // Pressure update.
        const CellField kappa_n = conductivity(in.K, s_main, in.fluid);
        if (track) {
            const CellField kappa_ref = conductivity(in.K, s_ref, in.fluid);
            LocalSolution ref = fine_solve(kappa_ref);
            u_ref = ref.u;
            p_ref = ref.p;
        }

        int rebuilt = 0;
        if (!multiscale) {
            LocalSolution sol = fine_solve(kappa_n);
            p_main = sol.p;
            u_main = sol.u;
            note_downscale(conservation_residual(sol, q), residual_scale(sol, q), false);
            rebuilt = 1;
        } else {
            bool do_rebuild = false;
            switch (sc.method) {
                case Method::MrcmEveryStep: do_rebuild = true; break;
                case Method::Mpm2p: do_rebuild = (sc.eta <= 0.0) || (eps > sc.eta); break;
                case Method::Mpm2pNoUpdates: do_rebuild = false; break;
                case Method::FineReference: break;
            }
            if (do_rebuild) {
                ++ell;
                rebuild(kappa_n);
                rebuilt = 1;
            } else {
                reuse(kappa_n);
            }
            eps = drift(kappa_n);
        }

        const double wall = std::chrono::duration<double>(clock::now() - t0).count();
        record_step(rebuilt, multiscale ? eps : 0.0, dt, wall);
        ++n;
        breakthrough_check();
    }

    rec.te = n;
    rec.tm_updates = ell;
    rec.tm_total = static_cast<long>(rec.update_steps.size());
    rec.final_pvi = pvi;

    out.s_final = std::move(s_main);
    out.p_final = std::move(p_main);
    out.u_final = std::move(u_main);
    return out;
}

} // namespace mrcmflow
