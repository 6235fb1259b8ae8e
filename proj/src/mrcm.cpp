#include "mrcmflow/mrcm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

namespace {

// Index into a global BoundarySpec for a global boundary face, or -1.
int global_bc_index(const StructuredGrid2D& g, int f) {
    if (g.is_vface(f)) {
        const int i = f % (g.nx + 1);
        const int j = f / (g.nx + 1);
        if (i == 0) return j;           // west
        if (i == g.nx) return g.ny + j; // east
        return -1;
    }
    const int fh = f - g.vface_count();
    const int i = fh % g.nx;
    const int j = fh / g.nx;
    if (j == 0) return 2 * g.ny + i;              // south
    if (j == g.ny) return 2 * g.ny + g.nx + i;    // north
    return -1;
}

int local_to_global_face(const DomainDecomposition& dd, int s, int lf) {
    const StructuredGrid2D& lg = dd.subgrids[s];
    const SubdomainRect& r = dd.subs[s];
    if (lf < lg.vface_count()) {
        const int i = lf % (lg.nx + 1);
        const int j = lf / (lg.nx + 1);
        return dd.grid.vface(r.i0 + i, r.j0 + j);
    }
    const int fh = lf - lg.vface_count();
    const int i = fh % lg.nx;
    const int j = fh / lg.nx;
    return dd.grid.hface(r.i0 + i, r.j0 + j);
}

// Local face index of each interface edge, per side.
struct InterfaceFaceMap {
    std::vector<std::vector<int>> minus_local, plus_local;
};

InterfaceFaceMap build_interface_face_map(const DomainDecomposition& dd) {
    InterfaceFaceMap map;
    const int ni = dd.interface_count();
    map.minus_local.resize(ni);
    map.plus_local.resize(ni);
    for (int k = 0; k < ni; ++k) {
        map.minus_local[k].assign(dd.interfaces[k].edge_count(), -1);
        map.plus_local[k].assign(dd.interfaces[k].edge_count(), -1);
    }
    for (int s = 0; s < dd.subdomain_count(); ++s)
        for (const BoundaryEdge& e : dd.sub_boundary[s]) {
            if (!e.on_skeleton) continue;
            if (e.sign > 0)
                map.minus_local[e.interface_id][e.pos] = e.local_face;
            else
                map.plus_local[e.interface_id][e.pos] = e.local_face;
        }
    return map;
}

// Interface-system row/column layout: flux-continuity rows (one per pressure
// basis) first, then Robin rows (one per flux basis); flux-basis columns
// first, then pressure-basis columns.
struct SystemLayout {
    int n_flux, n_pressure;
    int row_psi(int r) const { return r; }
    int row_phi(int r) const { return n_pressure + r; }
    int col_flux(int b) const { return b; }
    int col_pressure(int b) const { return n_flux + b; }
};

Eigen::VectorXd assemble_interface_rhs(const BasisSet& basis, const ParticularSolution& bar) {
    const DomainDecomposition& dd = *basis.dd;
    const InterfaceSpace& space = *basis.space;
    const SystemLayout lay{basis.n_flux, basis.n_pressure};
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis.system_dim());
    for (int s = 0; s < dd.subdomain_count(); ++s) {
        for (const BoundaryEdge& e : dd.sub_boundary[s]) {
            if (!e.on_skeleton) continue;
            const int k = e.interface_id;
            const double len = dd.grid.face_area(e.global_face);
            const double beta = basis.beta.beta(k, e.pos, e.sign > 0);
            const double un_out = e.sign * bar.per_sub[s].u[e.local_face];
            for (int r : space.pressure_by_interface[k])
                rhs[lay.row_psi(r)] -= un_out * space.pressure_bases[r].values[e.pos] * len;
            for (int r : space.flux_by_interface[k])
                rhs[lay.row_phi(r)] -=
                    beta * un_out * space.flux_bases[r].values[e.pos] * e.sign * len;
        }
    }
    return rhs;
}

} // namespace

std::vector<LocalData> restrict_physical_data(const DomainDecomposition& dd,
                                              const RobinParameter& beta, const CellField& q,
                                              const BoundarySpec& bc) {
    if (bc.nx != dd.grid.nx || bc.ny != dd.grid.ny)
        throw ConfigError("restrict_physical_data: boundary spec does not match grid");
    std::vector<LocalData> data;
    data.reserve(dd.subs.size());
    for (int s = 0; s < dd.subdomain_count(); ++s) {
        LocalData d{dd.restrict_cells(q, s),
                    BoundarySpec(dd.subs[s].nx, dd.subs[s].ny)};
        const auto& edges = dd.sub_boundary[s];
        for (size_t idx = 0; idx < edges.size(); ++idx) {
            const BoundaryEdge& e = edges[idx];
            if (e.on_skeleton) {
                d.bc.faces[idx] =
                    FaceBc::robin(beta.beta(e.interface_id, e.pos, e.sign > 0), 0.0);
            } else {
                const int gidx = global_bc_index(dd.grid, e.global_face);
                if (gidx < 0)
                    throw NumericError("restrict_physical_data: inconsistent decomposition");
                d.bc.faces[idx] = bc.faces[gidx];
            }
        }
        data.push_back(std::move(d));
    }
    return data;
}

std::shared_ptr<BasisSet> compute_basis_set(const CellField& kappa,
                                            std::shared_ptr<const DomainDecomposition> dd,
                                            std::shared_ptr<const InterfaceSpace> space,
                                            const RobinParameter& beta, const CellField& q,
                                            const BoundarySpec& bc, SolveCounters& counters) {
    auto basis = std::make_shared<BasisSet>();
    basis->dd = dd;
    basis->space = space;
    basis->beta = beta;
    basis->kappa_m = kappa;
    basis->n_flux = space->dim_flux();
    basis->n_pressure = space->dim_pressure();

    const auto data = restrict_physical_data(*dd, beta, q, bc);
    basis->subs.reserve(dd->subs.size());
    basis->particular.per_sub.resize(dd->subdomain_count());

    for (int s = 0; s < dd->subdomain_count(); ++s) {
        BasisSet::SubdomainMachinery mach{CellCenteredSolver(dd->subgrids[s]), data[s].bc, {}};
        const CellField kappa_s = dd->restrict_cells(kappa, s);
        const std::optional<int> anchor =
            mach.bc_struct.pure_neumann() ? std::optional<int>(0) : std::nullopt;
        mach.solver.factorize(kappa_s, mach.bc_struct, anchor);

        // Incident interfaces in ascending id order.
        std::vector<int> incident;
        for (const BoundaryEdge& e : dd->sub_boundary[s])
            if (e.on_skeleton &&
                std::find(incident.begin(), incident.end(), e.interface_id) == incident.end())
                incident.push_back(e.interface_id);
        std::sort(incident.begin(), incident.end());

        const CellField zero_q(dd->subgrids[s], 0.0);
        BoundarySpec hom_bc = mach.bc_struct;
        for (auto& f : hom_bc.faces)
            if (f.kind != BcKind::Robin) f.value = 0.0;

        auto solve_hom = [&](int col, bool flux_basis, const InterfaceBasis& ib) {
            for (size_t idx = 0; idx < dd->sub_boundary[s].size(); ++idx) {
                const BoundaryEdge& e = dd->sub_boundary[s][idx];
                if (!e.on_skeleton) continue;
                double rhs = 0.0;
                if (e.interface_id == ib.interface_id) {
                    const double v = ib.values[e.pos];
                    rhs = flux_basis ? -hom_bc.faces[idx].beta * v * e.sign : v;
                }
                hom_bc.faces[idx].robin_rhs = rhs;
            }
            BasisSet::HomSolution h{col, mach.solver.solve(zero_q, hom_bc)};
            ++counters.homogeneous;
            mach.hom.push_back(std::move(h));
        };

        for (int k : incident)
            for (int b : space->flux_by_interface[k]) solve_hom(b, true, space->flux_bases[b]);
        for (int k : incident)
            for (int b : space->pressure_by_interface[k])
                solve_hom(basis->n_flux + b, false, space->pressure_bases[b]);

        basis->particular.per_sub[s] = mach.solver.solve(data[s].q, data[s].bc);
        ++counters.particular;
        basis->subs.push_back(std::move(mach));
    }

    // Assemble the dense interface matrix from the stored traces.
    const SystemLayout lay{basis->n_flux, basis->n_pressure};
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(basis->system_dim(), basis->system_dim());
    for (int s = 0; s < dd->subdomain_count(); ++s) {
        for (const BoundaryEdge& e : dd->sub_boundary[s]) {
            if (!e.on_skeleton) continue;
            const int k = e.interface_id;
            const double len = dd->grid.face_area(e.global_face);
            const double beta_se = beta.beta(k, e.pos, e.sign > 0);
            for (const auto& h : basis->subs[s].hom) {
                const double un_out = e.sign * h.sol.u[e.local_face];
                for (int r : space->pressure_by_interface[k])
                    M(lay.row_psi(r), h.col) +=
                        un_out * space->pressure_bases[r].values[e.pos] * len;
                for (int r : space->flux_by_interface[k])
                    M(lay.row_phi(r), h.col) +=
                        beta_se * un_out * space->flux_bases[r].values[e.pos] * e.sign * len;
            }
            // The -beta U_H (n.n_i) term of the Robin equation: the (n.n_i)
            // factor appears once with U_H and once with the test function.
            for (int b : space->flux_by_interface[k]) {
                const double ub = space->flux_bases[b].values[e.pos];
                for (int r : space->flux_by_interface[k])
                    M(lay.row_phi(r), lay.col_flux(b)) -= beta_se * ub * e.sign *
                                                          space->flux_bases[r].values[e.pos] *
                                                          e.sign * len;
            }
        }
    }
    basis->iface_matrix = M;
    basis->iface_lu.compute(M);
    if (basis->system_dim() > 0) {
        const double rc = basis->iface_lu.rcond();
        if (!(rc > 1e-14)) {
            Eigen::VectorXd probe = basis->iface_lu.solve(Eigen::VectorXd::Ones(M.rows()));
            int worst = 0;
            probe.cwiseAbs().maxCoeff(&worst);
            throw NumericError(
                "compute_basis_set: interface matrix is numerically singular (rcond=" +
                std::to_string(rc) + ", near-null component at index " + std::to_string(worst) +
                ")");
        }
    }
    return basis;
}

ParticularSolution solve_particular(const BasisSet& basis, const std::vector<LocalData>& data,
                                    SolveCounters& counters) {
    const DomainDecomposition& dd = *basis.dd;
    ParticularSolution part;
    part.per_sub.resize(dd.subdomain_count());
    for (int s = 0; s < dd.subdomain_count(); ++s) {
        part.per_sub[s] = basis.subs[s].solver.solve(data[s].q, data[s].bc);
        ++counters.particular;
    }
    return part;
}

SkeletonCoeffs solve_interface(const BasisSet& basis, const ParticularSolution& particular,
                               SolveCounters& counters) {
    SkeletonCoeffs coeffs;
    ++counters.interface_solves;
    if (basis.system_dim() == 0) {
        coeffs.flux.resize(0);
        coeffs.pressure.resize(0);
        return coeffs;
    }
    const Eigen::VectorXd rhs = assemble_interface_rhs(basis, particular);
    const Eigen::VectorXd x = basis.iface_lu.solve(rhs);
    coeffs.flux = x.head(basis.n_flux);
    coeffs.pressure = x.tail(basis.n_pressure);
    return coeffs;
}

MrcmReconstruction reconstruct(const BasisSet& basis, const SkeletonCoeffs& coeffs,
                               const ParticularSolution& particular) {
    const DomainDecomposition& dd = *basis.dd;
    MrcmReconstruction recon;
    recon.per_sub = particular.per_sub;
    for (int s = 0; s < dd.subdomain_count(); ++s) {
        LocalSolution& sol = recon.per_sub[s];
        for (const auto& h : basis.subs[s].hom) {
            const double c = h.col < basis.n_flux ? coeffs.flux[h.col]
                                                  : coeffs.pressure[h.col - basis.n_flux];
            if (c == 0.0) continue;
            for (size_t i = 0; i < sol.p.v.size(); ++i) sol.p.v[i] += c * h.sol.p.v[i];
            for (size_t i = 0; i < sol.u.v.size(); ++i) sol.u.v[i] += c * h.sol.u.v[i];
            for (size_t i = 0; i < sol.boundary_p.size(); ++i)
                sol.boundary_p[i] += c * h.sol.boundary_p[i];
        }
    }
    return recon;
}

std::vector<std::vector<double>> averaged_skeleton_flux(const DomainDecomposition& dd,
                                                        const MrcmReconstruction& recon) {
    const InterfaceFaceMap map = build_interface_face_map(dd);
    std::vector<std::vector<double>> flux(dd.interface_count());
    for (int k = 0; k < dd.interface_count(); ++k) {
        const Interface& ifc = dd.interfaces[k];
        flux[k].resize(ifc.edge_count());
        for (int e = 0; e < ifc.edge_count(); ++e) {
            const double um = recon.per_sub[ifc.minus_sub].u[map.minus_local[k][e]];
            const double up = recon.per_sub[ifc.plus_sub].u[map.plus_local[k][e]];
            flux[k][e] = 0.5 * (um + up);
        }
    }
    return flux;
}

DownscaleResult downscale(const DomainDecomposition& dd, const CellField& kappa_current,
                          const CellField& q, const BoundarySpec& bc,
                          const MrcmReconstruction& recon,
                          const std::vector<std::vector<double>>& skeleton_flux,
                          SolveCounters& counters) {
    const int n_sub = dd.subdomain_count();
    const double vol = dd.grid.cell_volume();

    DownscaleResult out;
    for (const auto& ifc_flux : skeleton_flux)
        for (double v : ifc_flux) out.flux_scale = std::max(out.flux_scale, std::abs(v));

    // Per-subdomain compatibility residuals of the averaged skeleton fluxes,
    // and the pressure-boundary area available to absorb residual.
    Eigen::VectorXd resid = Eigen::VectorXd::Zero(n_sub);
    Eigen::VectorXd ground = Eigen::VectorXd::Zero(n_sub);
    for (int s = 0; s < n_sub; ++s) {
        double qsum = 0.0;
        const SubdomainRect& r = dd.subs[s];
        for (int jj = 0; jj < r.ny; ++jj)
            for (int ii = 0; ii < r.nx; ++ii) qsum += q(r.i0 + ii, r.j0 + jj) * vol;
        double outflow = 0.0;
        for (const BoundaryEdge& e : dd.sub_boundary[s]) {
            const double len = dd.grid.face_area(e.global_face);
            const double un_out = e.on_skeleton
                                      ? e.sign * skeleton_flux[e.interface_id][e.pos]
                                      : e.sign * recon.per_sub[s].u[e.local_face];
            outflow += un_out * len;
            if (!e.on_skeleton) {
                const int gidx = global_bc_index(dd.grid, e.global_face);
                if (bc.faces[gidx].kind == BcKind::Pressure) ground[s] += len;
            }
        }
        resid[s] = qsum - outflow;
    }

    // One correction constant per subdomain, coupled through the
    // subdomain-adjacency Laplacian so shared edges keep a single flux value
    // while every subdomain becomes exactly compatible. The correction is
    // uniform over each interface; pressure-boundary faces of a subdomain
    // carry its own constant.
    std::vector<double> iface_corr(dd.interface_count(), 0.0);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n_sub);
    const bool grounded = ground.sum() > 0.0;
    if (n_sub > 1 || grounded) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n_sub, n_sub);
        for (int k = 0; k < dd.interface_count(); ++k) {
            const Interface& ifc = dd.interfaces[k];
            const double area =
                ifc.edge_count() * dd.grid.face_area(ifc.global_faces[0]);
            L(ifc.minus_sub, ifc.minus_sub) += area;
            L(ifc.plus_sub, ifc.plus_sub) += area;
            L(ifc.minus_sub, ifc.plus_sub) -= area;
            L(ifc.plus_sub, ifc.minus_sub) -= area;
        }
        Eigen::VectorXd rhs = resid;
        if (grounded) {
            L.diagonal() += ground;
        } else {
            // Pure-flux physical data: the total residual is zero up to the
            // interface-solve tolerance; pin the constant null space.
            L.row(0).setZero();
            L.col(0).setZero();
            L(0, 0) = 1.0;
            rhs[0] = 0.0;
        }
        delta = L.ldlt().solve(rhs);
        for (int k = 0; k < dd.interface_count(); ++k) {
            const Interface& ifc = dd.interfaces[k];
            iface_corr[k] = delta[ifc.minus_sub] - delta[ifc.plus_sub];
            out.repair_max = std::max(out.repair_max, std::abs(iface_corr[k]));
        }
        if (grounded)
            for (int s = 0; s < n_sub; ++s)
                if (ground[s] > 0.0)
                    out.repair_max = std::max(out.repair_max, std::abs(delta[s]));
    }
    out.repair_warning = out.repair_max > 0.1 * (out.flux_scale > 0 ? out.flux_scale : 1.0);

    out.p = CellField(dd.grid);
    out.u = FaceField(dd.grid);

    for (int s = 0; s < n_sub; ++s) {
        const StructuredGrid2D& lg = dd.subgrids[s];
        const SubdomainRect& r = dd.subs[s];
        BoundarySpec local_bc(lg.nx, lg.ny);
        const auto& edges = dd.sub_boundary[s];
        for (size_t idx = 0; idx < edges.size(); ++idx) {
            const BoundaryEdge& e = edges[idx];
            double un_out;
            if (e.on_skeleton) {
                un_out = e.sign *
                         (skeleton_flux[e.interface_id][e.pos] + iface_corr[e.interface_id]);
            } else {
                un_out = e.sign * recon.per_sub[s].u[e.local_face];
                if (grounded) {
                    const int gidx = global_bc_index(dd.grid, e.global_face);
                    if (bc.faces[gidx].kind == BcKind::Pressure) un_out += delta[s];
                }
            }
            local_bc.faces[idx] = FaceBc::flux(un_out);
        }
        CellField q_s = dd.restrict_cells(q, s);
        CellCenteredSolver solver(lg);
        solver.factorize(dd.restrict_cells(kappa_current, s), local_bc, 0);
        LocalSolution sol = solver.solve(q_s, local_bc);
        ++counters.downscale;

        // Match the mean of the multiscale pressure in this subdomain.
        double mean_ref = 0.0, mean_sol = 0.0;
        for (int c = 0; c < lg.cell_count(); ++c) {
            mean_ref += recon.per_sub[s].p[c];
            mean_sol += sol.p[c];
        }
        const double shift = (mean_ref - mean_sol) / lg.cell_count();

        for (int jj = 0; jj < r.ny; ++jj)
            for (int ii = 0; ii < r.nx; ++ii)
                out.p[dd.grid.cell(r.i0 + ii, r.j0 + jj)] = sol.p(ii, jj) + shift;
        for (int lf = 0; lf < lg.face_count(); ++lf)
            out.u[local_to_global_face(dd, s, lf)] = sol.u[lf];
    }

    const CellField div = divergence(out.u);
    for (int c = 0; c < div.size(); ++c)
        out.div_residual = std::max(out.div_residual, std::abs(div[c] - q[c]));
    double scale = 0.0;
    for (double v : q.v) scale = std::max(scale, std::abs(v));
    const double cvol = dd.grid.cell_volume();
    for (int f = 0; f < dd.grid.face_count(); ++f)
        scale = std::max(scale, std::abs(out.u[f]) * dd.grid.face_area(f) / cvol);
    out.div_scale = scale > 0.0 ? scale : 1.0;
    return out;
}

GlobalSolution mrcm_solve(const CellField& kappa, std::shared_ptr<const DomainDecomposition> dd,
                          std::shared_ptr<const InterfaceSpace> space, const RobinParameter& beta,
                          const CellField& q, const BoundarySpec& bc, SolveCounters& counters) {
    GlobalSolution g;
    g.basis = compute_basis_set(kappa, dd, space, beta, q, bc, counters);
    g.coeffs = solve_interface(*g.basis, g.basis->particular, counters);
    g.recon = reconstruct(*g.basis, g.coeffs, g.basis->particular);
    const auto skel = averaged_skeleton_flux(*dd, g.recon);
    DownscaleResult ds = downscale(*dd, kappa, q, bc, g.recon, skel, counters);
    g.p = std::move(ds.p);
    g.u = std::move(ds.u);
    g.repair_max = ds.repair_max;
    g.repair_warning = ds.repair_warning;
    g.div_residual = ds.div_residual;
    g.div_scale = ds.div_scale;
    return g;
}

WeakResiduals weak_continuity_residuals(const BasisSet& basis, const MrcmReconstruction& recon) {
    const DomainDecomposition& dd = *basis.dd;
    const InterfaceSpace& space = *basis.space;
    Eigen::VectorXd flux_jump = Eigen::VectorXd::Zero(std::max(1, basis.n_pressure));
    Eigen::VectorXd p_jump = Eigen::VectorXd::Zero(std::max(1, basis.n_flux));
    for (int s = 0; s < dd.subdomain_count(); ++s) {
        const auto& edges = dd.sub_boundary[s];
        for (size_t idx = 0; idx < edges.size(); ++idx) {
            const BoundaryEdge& e = edges[idx];
            if (!e.on_skeleton) continue;
            const int k = e.interface_id;
            const double len = dd.grid.face_area(e.global_face);
            const double un_out = e.sign * recon.per_sub[s].u[e.local_face];
            const double tp = recon.per_sub[s].boundary_p[idx];
            for (int r : space.pressure_by_interface[k])
                flux_jump[r] += un_out * space.pressure_bases[r].values[e.pos] * len;
            for (int r : space.flux_by_interface[k])
                p_jump[r] -= e.sign * tp * space.flux_bases[r].values[e.pos] * len;
        }
    }
    WeakResiduals res;
    res.flux_jump = basis.n_pressure > 0 ? flux_jump.cwiseAbs().maxCoeff() : 0.0;
    res.pressure_jump = basis.n_flux > 0 ? p_jump.cwiseAbs().maxCoeff() : 0.0;
    return res;
}

} // namespace mrcmflow
