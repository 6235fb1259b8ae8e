// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The heavier criteria drive full slab simulations, so this binary
// runs for a few minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mrcmflow/config.hpp"
#include "mrcmflow/fields_io.hpp"
#include "mrcmflow/mpm.hpp"
#include "mrcmflow/simulation.hpp"

using namespace mrcmflow;

namespace {

int g_failures = 0;

void record(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double rel_l2_cells(const CellField& a, const CellField& b) {
    double num = 0.0, den = 0.0;
    for (int c = 0; c < a.size(); ++c) {
        num += (a[c] - b[c]) * (a[c] - b[c]);
        den += b[c] * b[c];
    }
    return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Criterion 1: RCR arithmetic
// ---------------------------------------------------------------------------
void criterion_1() {
    const double a = rcr({96, 16, 3500, 10});
    const double b = rcr({96, 16, 3283, 10});
    const bool ok = std::abs(a - 74.79) <= 0.01 && std::abs(b - 74.77) <= 0.01;
    record("Criterion 1: RCR arithmetic", ok,
           "rcr(96,16,3500,10)=" + fmt(a) + ", rcr(96,16,3283,10)=" + fmt(b));
}

// ---------------------------------------------------------------------------
// Criterion 2: undecomposed equivalence on the finger-growth configuration
// ---------------------------------------------------------------------------
void criterion_2() {
    const auto g = build_grid(300, 50, 3.0, 0.5);
    auto dd = std::make_shared<DomainDecomposition>(build_decomposition(g, 15, 5));
    const CellField k(g, 1.0);
    const CellField q(g, 0.0);
    const BoundarySpec bc = BoundarySpec::uniform(g, FaceBc::pressure(0.0),
                                                  FaceBc::pressure(-1e4), FaceBc::flux(0.0),
                                                  FaceBc::flux(0.0));
    const RobinParameter beta = compute_beta(k, *dd, AlphaSpec{});
    auto space = std::make_shared<InterfaceSpace>(
        build_interface_space(*dd, InterfaceSpace::Kind::Constant, HbarSpec::per_edge()));
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(k, dd, space, beta, q, bc, c);
    const LocalSolution fine = solve_cell_centered(k, q, bc);
    const double pe = rel_l2_cells(sol.p, fine.p);
    double unum = 0.0, uden = 0.0;
    for (int f = 0; f < g.face_count(); ++f) {
        const double w = g.face_area(f);
        unum += w * (sol.u[f] - fine.u[f]) * (sol.u[f] - fine.u[f]);
        uden += w * fine.u[f] * fine.u[f];
    }
    const double ue = std::sqrt(unum / uden);
    record("Criterion 2: undecomposed equivalence (Hbar = h)", pe <= 1e-6 && ue <= 1e-6,
           "p err=" + fmt(pe) + ", u err=" + fmt(ue));
}

// ---------------------------------------------------------------------------
// Criterion 3: single-subdomain equivalence
// ---------------------------------------------------------------------------
void criterion_3() {
    const auto g = build_grid(16, 16, 1.0, 1.0);
    auto dd = std::make_shared<DomainDecomposition>(build_decomposition(g, 1, 1));
    GaussianFieldSpec fs;
    fs.delta = 2.5;
    fs.normalization = XiNormalization::Range;
    fs.seed = 77;
    const CellField k = generate_gaussian(g, fs).K;
    CellField q(g, 0.0);
    q(4, 7) = 2.0;
    q(11, 3) = -2.0;
    const BoundarySpec bc = BoundarySpec::uniform(g, FaceBc::pressure(1.0), FaceBc::pressure(0.0),
                                                  FaceBc::flux(0.0), FaceBc::flux(0.0));
    const RobinParameter beta = compute_beta(k, *dd, AlphaSpec{});
    auto space = std::make_shared<InterfaceSpace>(
        build_interface_space(*dd, InterfaceSpace::Kind::Constant, HbarSpec::whole()));
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(k, dd, space, beta, q, bc, c);
    const LocalSolution fine = solve_cell_centered(k, q, bc);
    double perr = 0.0, uerr = 0.0, uscale = 0.0;
    for (int cc = 0; cc < g.cell_count(); ++cc)
        perr = std::max(perr, std::abs(sol.p[cc] - fine.p[cc]));
    for (int f = 0; f < g.face_count(); ++f) {
        uerr = std::max(uerr, std::abs(sol.u[f] - fine.u[f]));
        uscale = std::max(uscale, std::abs(fine.u[f]));
    }
    record("Criterion 3: single-subdomain equivalence",
           perr <= 1e-10 && uerr <= 1e-10 * std::max(uscale, 1.0),
           "max |dp|=" + fmt(perr) + ", max |du|=" + fmt(uerr));
}

// ---------------------------------------------------------------------------
// Criteria 4, 7, 9: the Gaussian slab study. One shared set of runs.
// ---------------------------------------------------------------------------
struct SlabRuns {
    RunResult fine, mpm_h, mrcm_h, mpm_h2, mpm_eta05, mpm_frozen, mpm_mobility;
    long bt_step = -1;
    double bt_pvi = -1.0;
};

RunInputs slab_inputs(std::uint64_t seed, Method method, double eta, EpsilonMode mode,
                      const HbarSpec& hbar, long te) {
    ExperimentConfig cfg = preset("gaussian-slab");
    cfg.seed = seed;
    cfg.hbar = hbar;
    cfg.split.method = method;
    cfg.split.eta = eta;
    cfg.split.eta_mode = mode;
    cfg.split.stop_on_breakthrough = false;
    cfg.split.te = te;
    return prepare(cfg).inputs;
}

SlabRuns run_slab_study(std::uint64_t seed) {
    SlabRuns out;
    // Reference run fixes the breakthrough step all others are aligned to.
    {
        ExperimentConfig cfg = preset("gaussian-slab");
        cfg.seed = seed;
        cfg.split.method = Method::FineReference;
        cfg.split.stop_on_breakthrough = true;
        out.fine = run(prepare(cfg).inputs);
        out.bt_step = out.fine.record.breakthrough_step;
        out.bt_pvi = out.fine.record.breakthrough_pvi;
    }
    const auto rel = EpsilonMode::Relative;
    const long te = out.bt_step + 1;
    out.mpm_h = run(slab_inputs(seed, Method::Mpm2p, 0.01, rel, HbarSpec::whole(), te));
    out.mrcm_h = run(slab_inputs(seed, Method::MrcmEveryStep, 0.01, rel, HbarSpec::whole(), te));
    out.mpm_h2 = run(slab_inputs(seed, Method::Mpm2p, 0.01, rel, HbarSpec::half(), te));
    out.mpm_eta05 = run(slab_inputs(seed, Method::Mpm2p, 0.05, rel, HbarSpec::whole(), te));
    out.mpm_frozen =
        run(slab_inputs(seed, Method::Mpm2pNoUpdates, 0.01, rel, HbarSpec::whole(), te));
    out.mpm_mobility =
        run(slab_inputs(seed, Method::Mpm2p, 0.01, EpsilonMode::Mobility, HbarSpec::whole(), te));
    return out;
}

void criterion_4(const SlabRuns& runs) {
    double worst = 0.0;
    for (const RunResult* r : {&runs.mpm_h, &runs.mrcm_h, &runs.mpm_h2})
        worst = std::max(worst, r->record.max_div_ratio);
    record("Criterion 4: conservation through full slab runs", worst <= 1e-10,
           "max |div u - q| / scale = " + fmt(worst));
}

void criterion_7(const SlabRuns& runs) {
    // (a) few rebuilds up to breakthrough, with the conductivity-relative
    // drift metric at eta = 0.01. The mobility change behind an M = 40 front
    // multiplies the conductivity by up to ~29 over the swept region, so the
    // relative drift path to breakthrough is O(1) and the bound cannot be met
    // with this metric on any realization; the mobility drift metric (the
    // presets' default) does meet it. Both results are reported.
    const long rebuilds = runs.mpm_h.record.tm_total;
    const bool a_ok = rebuilds <= 20;
    record("Criterion 7a: MPM-2P rebuild count at breakthrough (relative drift)", a_ok,
           fmt(static_cast<double>(rebuilds)) + " rebuilds over " +
               fmt(static_cast<double>(runs.mpm_h.record.te)) +
               " elliptic steps, breakthrough PVI " + fmt(runs.bt_pvi));
    std::printf("[INFO] mobility-drift metric at the same tolerance: %ld rebuilds over %ld "
                "elliptic steps (terminal flux err %.4g vs %.4g for every-step rebuilds)\n",
                runs.mpm_mobility.record.tm_total, runs.mpm_mobility.record.te,
                runs.mpm_mobility.record.steps.back().flux_err,
                runs.mrcm_h.record.steps.back().flux_err);

    record("Criterion 7 context: breakthrough PVI in the expected band",
           runs.bt_pvi >= 0.08 && runs.bt_pvi <= 0.16, "PVI " + fmt(runs.bt_pvi));

    // (b) error curves within 2x of the every-step baseline
    bool b_ok = true;
    double worst_ratio = 0.0;
    const size_t n = std::min(runs.mpm_h.record.steps.size(), runs.mrcm_h.record.steps.size());
    for (size_t i = 0; i < n; ++i) {
        const auto& m = runs.mpm_h.record.steps[i];
        const auto& r = runs.mrcm_h.record.steps[i];
        const double floor = 1e-12;
        if (m.flux_err > 2.0 * r.flux_err + floor) b_ok = false;
        if (m.sat_err > 2.0 * r.sat_err + floor) b_ok = false;
        if (r.flux_err > floor) worst_ratio = std::max(worst_ratio, m.flux_err / r.flux_err);
    }
    record("Criterion 7b: MPM-2P errors within 2x of every-step MRCM", b_ok,
           "worst flux-error ratio " + fmt(worst_ratio));

    // (c) finer interface segments do not lose accuracy at breakthrough
    const StepRecord& last_h = runs.mpm_h.record.steps.back();
    const StepRecord& last_h2 = runs.mpm_h2.record.steps.back();
    const bool c_ok =
        last_h2.flux_err <= last_h.flux_err * (1.0 + 1e-9) &&
        last_h2.sat_err <= last_h.sat_err * (1.0 + 1e-9);
    record("Criterion 7c: Hbar=H/2 at least as accurate at breakthrough", c_ok,
           "flux " + fmt(last_h2.flux_err) + " vs " + fmt(last_h.flux_err) + ", sat " +
               fmt(last_h2.sat_err) + " vs " + fmt(last_h.sat_err));
}

void criterion_9(const SlabRuns& runs) {
    // eta sweep 0 (always rebuild), 0.01, 0.05, infinity (no updates)
    const long t0 = runs.mrcm_h.record.tm_total;
    const long t1 = runs.mpm_h.record.tm_total;
    const long t2 = runs.mpm_eta05.record.tm_total;
    const long t3 = runs.mpm_frozen.record.tm_total;
    const bool counts_ok = t0 >= t1 && t1 >= t2 && t2 >= t3;

    auto terminal = [](const RunResult& r) {
        return std::pair<double, double>{r.record.steps.back().flux_err,
                                         r.record.steps.back().sat_err};
    };
    const auto e0 = terminal(runs.mrcm_h);
    const auto e1 = terminal(runs.mpm_h);
    const auto e2 = terminal(runs.mpm_eta05);
    const auto e3 = terminal(runs.mpm_frozen);
    const double slack = 1e-9;
    const bool err_ok = e0.second <= e1.second + slack && e1.second <= e2.second + slack &&
                        e2.second <= e3.second + slack && e0.first <= e1.first + slack &&
                        e1.first <= e2.first + slack && e2.first <= e3.first + slack;
    record("Criterion 9: eta sweep monotonicity", counts_ok && err_ok,
           "rebuilds " + fmt(t0) + " >= " + fmt(t1) + " >= " + fmt(t2) + " >= " + fmt(t3) +
               "; terminal flux errors " + fmt(e0.first) + " <= " + fmt(e1.first) + " <= " +
               fmt(e2.first) + " <= " + fmt(e3.first));
}

// ---------------------------------------------------------------------------
// Criterion 5: zero-perturbation idempotence at slab scale
// ---------------------------------------------------------------------------
void criterion_5() {
    const auto g = build_grid(64, 64, 1.0, 1.0);
    auto dd = std::make_shared<DomainDecomposition>(build_decomposition(g, 4, 4));
    GaussianFieldSpec fs;
    fs.delta = 2.5;
    fs.normalization = XiNormalization::Range;
    fs.seed = 5;
    const CellField k = generate_gaussian(g, fs).K;
    const CellField q(g, 0.0);
    const BoundarySpec bc = BoundarySpec::uniform(g, FaceBc::pressure(1.0), FaceBc::pressure(0.0),
                                                  FaceBc::flux(0.0), FaceBc::flux(0.0));
    const RobinParameter beta = compute_beta(k, *dd, AlphaSpec{});
    auto space = std::make_shared<InterfaceSpace>(
        build_interface_space(*dd, InterfaceSpace::Kind::Constant, HbarSpec::whole()));
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(k, dd, space, beta, q, bc, c);
    PerturbationState st;
    st.basis = sol.basis;
    st.recon_m = sol.recon;
    SolveCounters c2;
    const MpmResult r = mpm_pressure_update(st, k, q, bc, c2);
    double umax = 0.0, uerr = 0.0, perr = 0.0, pmax = 0.0;
    for (int f = 0; f < g.face_count(); ++f) {
        umax = std::max(umax, std::abs(sol.u[f]));
        uerr = std::max(uerr, std::abs(r.u[f] - sol.u[f]));
    }
    for (int cc = 0; cc < g.cell_count(); ++cc) {
        pmax = std::max(pmax, std::abs(sol.p[cc]));
        perr = std::max(perr, std::abs(r.p[cc] - sol.p[cc]));
    }
    record("Criterion 5: zero-perturbation idempotence",
           uerr <= 1e-8 * umax && perr <= 1e-8 * pmax,
           "u err=" + fmt(uerr / umax) + ", p err=" + fmt(perr / pmax) + " (relative)");
}

// ---------------------------------------------------------------------------
// Criterion 6: basis-count ledger
// ---------------------------------------------------------------------------
void criterion_6() {
    const auto g = build_grid(64, 64, 1.0, 1.0);
    auto dd = std::make_shared<DomainDecomposition>(build_decomposition(g, 4, 4));
    GaussianFieldSpec fs;
    fs.normalization = XiNormalization::Range;
    fs.seed = 6;
    const CellField k = generate_gaussian(g, fs).K;
    const CellField q(g, 0.0);
    const BoundarySpec bc = BoundarySpec::uniform(g, FaceBc::pressure(1.0), FaceBc::pressure(0.0),
                                                  FaceBc::flux(0.0), FaceBc::flux(0.0));
    const RobinParameter beta = compute_beta(k, *dd, AlphaSpec{});
    auto space = std::make_shared<InterfaceSpace>(
        build_interface_space(*dd, InterfaceSpace::Kind::Constant, HbarSpec::whole()));

    SolveCounters cb;
    const GlobalSolution sol = mrcm_solve(k, dd, space, beta, q, bc, cb);
    const bool build_ok = cb.homogeneous == 96 && cb.particular == 16;

    PerturbationState st;
    st.basis = sol.basis;
    st.recon_m = sol.recon;
    CellField k2 = k;
    for (auto& v : k2.v) v *= 1.002;
    SolveCounters cm;
    (void)mpm_pressure_update(st, k2, q, bc, cm);
    const bool step_ok = cm.homogeneous == 0 && cm.particular == 16 && cm.downscale == 16;

    record("Criterion 6: basis-count ledger", build_ok && step_ok,
           "rebuild " + fmt(cb.homogeneous) + "+" + fmt(cb.particular) + ", reuse " +
               fmt(cm.particular) + "+" + fmt(cm.downscale));
}

// ---------------------------------------------------------------------------
// Criterion 8: saturation physics
// ---------------------------------------------------------------------------
void criterion_8() {
    const FluidModel m40{40.0};
    const bool f_ok = std::abs(fractional_flow(0.5, m40) - 40.0 / 41.0) <= 1e-12;

    // 1e4 random upwind steps under CFL: maximum principle + mass balance.
    const auto g = build_grid(16, 16, 1.0, 1.0);
    const FluidModel m{7.0};
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> udist(0.0, 1.0);
    std::uniform_real_distribution<double> kdist(-2.0, 2.0);
    bool bounds_ok = true, mass_ok = true;
    long steps = 0;
    while (steps < 10000) {
        CellField k(g);
        for (auto& v : k.v) v = std::exp(kdist(rng));
        const BoundarySpec bc = BoundarySpec::uniform(
            g, FaceBc::pressure(1.0 + udist(rng)), FaceBc::pressure(0.0), FaceBc::flux(0.0),
            FaceBc::flux(0.0));
        const CellField q(g, 0.0);
        const LocalSolution sol = solve_cell_centered(k, q, bc);
        SaturationField s{CellField(g), udist(rng)};
        for (auto& v : s.s.v) v = udist(rng);
        double lo = s.inflow, hi = s.inflow;
        for (double v : s.s.v) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double dt = cfl_timestep(sol.u, m, CflPolicy{0.9, 1.0});
        const double f_in = fractional_flow(s.inflow, m);
        for (int burst = 0; burst < 200 && steps < 10000; ++burst, ++steps) {
            double mass0 = 0.0;
            for (double v : s.s.v) mass0 += v * g.cell_volume();
            double net_in = 0.0;
            for (int j = 0; j < g.ny; ++j) {
                const double uw = sol.u[g.vface(0, j)];
                net_in += (uw > 0 ? f_in * uw : fractional_flow(s.s(0, j), m) * uw) * g.hy;
                const double ue = sol.u[g.vface(g.nx, j)];
                net_in -= (ue > 0 ? fractional_flow(s.s(g.nx - 1, j), m) * ue : f_in * ue) * g.hy;
            }
            s = upwind_step(s, sol.u, dt, m);
            double mass1 = 0.0;
            for (double v : s.s.v) mass1 += v * g.cell_volume();
            if (std::abs(mass1 - mass0 - net_in * dt) >
                1e-12 * std::max({1.0, std::abs(mass0), std::abs(net_in * dt)}))
                mass_ok = false;
            for (double v : s.s.v)
                if (v < lo - 1e-12 || v > hi + 1e-12) bounds_ok = false;
        }
    }
    record("Criterion 8: saturation physics", f_ok && bounds_ok && mass_ok,
           std::string("f(0.5;40)=40/41 ") + (f_ok ? "exact" : "off") +
               ", max principle " + (bounds_ok ? "held" : "violated") + ", mass balance " +
               (mass_ok ? "held" : "violated") + " over 10000 steps");
}

// ---------------------------------------------------------------------------
// Criterion 10: RCR from our own counters (the formula route)
// ---------------------------------------------------------------------------
void criterion_10(const SlabRuns& runs) {
    const RunRecord& r = runs.mpm_h.record;
    const CostModel cm{r.nhat, r.n_sub, r.te, r.tm_total};
    const double direct = rcr(cm);
    const CostEstimates ce = cost_estimates(cm, 1.0);
    const double via_costs = (ce.cost_every_step - ce.cost_reuse) / ce.cost_every_step * 100.0;
    record("Criterion 10: RCR from run counters matches the cost model",
           std::abs(direct - via_costs) <= 1e-9,
           "RCR = " + fmt(direct) + "% (nhat=" + fmt(r.nhat) + ", te=" +
               fmt(static_cast<double>(r.te)) + ", tm=" + fmt(static_cast<double>(r.tm_total)) +
               ")");
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_5();
    criterion_6();
    criterion_8();

    std::printf("... running the Gaussian slab study (several minutes)\n");
    std::fflush(stdout);
    const SlabRuns runs = run_slab_study(303);
    criterion_4(runs);
    criterion_7(runs);
    criterion_9(runs);
    criterion_10(runs);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d criterion(s) failed; wall time %.1f s\n", g_failures, wall);
    return g_failures == 0 ? 0 : 1;
}
