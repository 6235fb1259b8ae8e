#include "mrcmflow/mpm.hpp"

#include <cmath>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

double epsilon(const CellField& kappa_n, const CellField& kappa_m, EpsilonMode mode) {
    if (mode == EpsilonMode::Mobility)
        throw ConfigError("epsilon: mobility mode needs saturation fields, not conductivities");
    if (!kappa_n.grid.same_shape(kappa_m.grid))
        throw ConfigError("epsilon: fields live on different grids");
    const double vol = kappa_m.grid.cell_volume();
    double num = 0.0, den = 0.0;
    for (int c = 0; c < kappa_m.size(); ++c) {
        const double d = kappa_n[c] - kappa_m[c];
        num += d * d * vol;
        den += kappa_m[c] * kappa_m[c] * vol;
    }
    const double abs_norm = std::sqrt(num);
    if (mode == EpsilonMode::Absolute) return abs_norm;
    if (!(den > 0.0)) throw NumericError("epsilon: zero reference norm in relative mode");
    return abs_norm / std::sqrt(den);
}

bool needs_update(const PerturbationState& state, const CellField& kappa_n) {
    return epsilon(kappa_n, state.kappa_m(), state.mode) > state.eta;
}

MpmResult mpm_pressure_update(const PerturbationState& state, const CellField& kappa_n,
                              const CellField& q, const BoundarySpec& bc,
                              SolveCounters& counters) {
    const BasisSet& basis = *state.basis;
    const DomainDecomposition& dd = *basis.dd;
    if (!kappa_n.grid.same_shape(dd.grid))
        throw ConfigError("mpm_pressure_update: kappa_n does not match the decomposition grid");
    if (static_cast<int>(state.recon_m.per_sub.size()) != dd.subdomain_count())
        throw ConfigError("mpm_pressure_update: stored solution does not match the basis set");

    // Physical data restricted per subdomain (Robin structure from the basis).
    std::vector<LocalData> data = restrict_physical_data(dd, basis.beta, q, bc);

    // Per-subdomain auxiliary flux w: the stored pressures and boundary-face
    // traces driven through the kappa_n transmissibilities. Modified data:
    //   q' = q - div(w),  g' = g - p^m|_face,  z' = z - w.n_out.
    std::vector<FaceField> w(dd.subdomain_count());
    for (int s = 0; s < dd.subdomain_count(); ++s) {
        const StructuredGrid2D& lg = dd.subgrids[s];
        const LocalSolution& m = state.recon_m.per_sub[s];
        const FaceField tn = transmissibility(dd.restrict_cells(kappa_n, s));
        FaceField& ws = w[s];
        ws = FaceField(lg);
        for (int j = 0; j < lg.ny; ++j)
            for (int i = 1; i < lg.nx; ++i) {
                const int f = lg.vface(i, j);
                ws[f] = tn[f] * (m.p(i - 1, j) - m.p(i, j)) / lg.face_area(f);
            }
        for (int i = 0; i < lg.nx; ++i)
            for (int j = 1; j < lg.ny; ++j) {
                const int f = lg.hface(i, j);
                ws[f] = tn[f] * (m.p(i, j - 1) - m.p(i, j)) / lg.face_area(f);
            }
        const auto& edges = dd.sub_boundary[s];
        for (size_t idx = 0; idx < edges.size(); ++idx) {
            const BoundaryEdge& e = edges[idx];
            const int f = e.local_face;
            const double un_out =
                tn[f] * (m.p[e.local_cell] - m.boundary_p[idx]) / lg.face_area(f);
            ws[f] = e.sign * un_out;

            FaceBc& fb = data[s].bc.faces[idx];
            switch (fb.kind) {
                case BcKind::Pressure:
                    fb.value -= m.boundary_p[idx];
                    break;
                case BcKind::Flux:
                    fb.value -= un_out;
                    break;
                case BcKind::Robin:
                    break;  // skeleton data stays zero; the interface solve supplies it
            }
        }
        const CellField divw = divergence(ws);
        for (int c = 0; c < lg.cell_count(); ++c) data[s].q[c] -= divw[c];
    }

    ParticularSolution delta_bar = solve_particular(basis, data, counters);
    MpmResult out;
    out.delta_coeffs = solve_interface(basis, delta_bar, counters);
    MrcmReconstruction delta = reconstruct(basis, out.delta_coeffs, delta_bar);

    // New one-sided solution: p^n = p^m + dp0, fluxes u-hat0 + w.
    out.recon_n.per_sub.resize(dd.subdomain_count());
    for (int s = 0; s < dd.subdomain_count(); ++s) {
        LocalSolution sol = delta.per_sub[s];
        const LocalSolution& m = state.recon_m.per_sub[s];
        for (size_t i = 0; i < sol.p.v.size(); ++i) sol.p.v[i] += m.p.v[i];
        for (size_t i = 0; i < sol.u.v.size(); ++i) sol.u.v[i] += w[s].v[i];
        for (size_t i = 0; i < sol.boundary_p.size(); ++i)
            sol.boundary_p[i] += m.boundary_p[i];
        out.recon_n.per_sub[s] = std::move(sol);
    }

    const auto skel = averaged_skeleton_flux(dd, out.recon_n);
    DownscaleResult ds = downscale(dd, kappa_n, q, bc, out.recon_n, skel, counters);
    out.p = std::move(ds.p);
    out.u = std::move(ds.u);
    out.repair_max = ds.repair_max;
    out.repair_warning = ds.repair_warning;
    out.div_residual = ds.div_residual;
    out.div_scale = ds.div_scale;
    return out;
}

} // namespace mrcmflow
