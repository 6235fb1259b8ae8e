#include "mrcmflow/elliptic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <string>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

namespace {

// Uniform enumeration of boundary faces mirroring BoundarySpec order.
// Visits (spec index, side sign, adjacent cell, global face, vertical?).
template <typename F>
void for_each_boundary_face(const StructuredGrid2D& g, F&& fn) {
    for (int j = 0; j < g.ny; ++j) fn(j, -1.0, g.cell(0, j), g.vface(0, j), true);
    for (int j = 0; j < g.ny; ++j) fn(g.ny + j, +1.0, g.cell(g.nx - 1, j), g.vface(g.nx, j), true);
    for (int i = 0; i < g.nx; ++i) fn(2 * g.ny + i, -1.0, g.cell(i, 0), g.hface(i, 0), false);
    for (int i = 0; i < g.nx; ++i)
        fn(2 * g.ny + g.nx + i, +1.0, g.cell(i, g.ny - 1), g.hface(i, g.ny), false);
}

double effective_robin_trans(double t_half, double beta, double area) {
    return 1.0 / (1.0 / t_half + beta / area);
}

} // namespace

BoundarySpec BoundarySpec::uniform(const StructuredGrid2D& g, FaceBc w, FaceBc e, FaceBc s,
                                   FaceBc n) {
    BoundarySpec bc(g.nx, g.ny);
    for (int j = 0; j < g.ny; ++j) {
        bc.faces[bc.west(j)] = w;
        bc.faces[bc.east(j)] = e;
    }
    for (int i = 0; i < g.nx; ++i) {
        bc.faces[bc.south(i)] = s;
        bc.faces[bc.north(i)] = n;
    }
    return bc;
}

FaceField transmissibility(const CellField& kappa) {
    const StructuredGrid2D& g = kappa.grid;
    FaceField t(g);
    auto harm = [](double a, double b) { return 2.0 * a * b / (a + b); };
    for (int j = 0; j < g.ny; ++j) {
        t[g.vface(0, j)] = kappa(0, j) * g.hy / (g.hx / 2.0);
        t[g.vface(g.nx, j)] = kappa(g.nx - 1, j) * g.hy / (g.hx / 2.0);
        for (int i = 1; i < g.nx; ++i)
            t[g.vface(i, j)] = harm(kappa(i - 1, j), kappa(i, j)) * g.hy / g.hx;
    }
    for (int i = 0; i < g.nx; ++i) {
        t[g.hface(i, 0)] = kappa(i, 0) * g.hx / (g.hy / 2.0);
        t[g.hface(i, g.ny)] = kappa(i, g.ny - 1) * g.hx / (g.hy / 2.0);
        for (int j = 1; j < g.ny; ++j)
            t[g.hface(i, j)] = harm(kappa(i, j - 1), kappa(i, j)) * g.hx / g.hy;
    }
    return t;
}

CellCenteredSolver::CellCenteredSolver(const StructuredGrid2D& grid)
    : grid_(grid),
      A_(grid.cell_count(), grid.cell_count()),
      ldlt_(std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>()) {}

void CellCenteredSolver::factorize(const CellField& kappa, const BoundarySpec& bc,
                                   std::optional<int> anchor) {
    const StructuredGrid2D& g = grid_;
    if (bc.nx != g.nx || bc.ny != g.ny)
        throw ConfigError("CellCenteredSolver: boundary spec does not match grid");
    for (double k : kappa.v)
        if (!(k > 0.0) || !std::isfinite(k))
            throw NumericError("CellCenteredSolver: conductivity must be positive and finite");

    if (bc.pure_neumann() && !anchor)
        throw NumericError("CellCenteredSolver: pure-Neumann problem requires an anchor cell");

    trans_ = transmissibility(kappa);
    bc_struct_ = bc;
    anchor_ = anchor;

    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(5) * n);
    const int a = anchor ? *anchor : -1;
    auto add = [&](int r, int c, double v) {
        // Anchored row/column entries are kept (as zeros) so the sparsity
        // pattern is independent of the anchor and can be analyzed once.
        if (r == a || c == a) v = 0.0;
        trip.emplace_back(r, c, v);
    };

    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.cell(i, j);
            double diag = 0.0;
            if (i > 0) {
                const double t = trans_[g.vface(i, j)];
                diag += t;
                add(c, g.cell(i - 1, j), -t);
            }
            if (i < g.nx - 1) {
                const double t = trans_[g.vface(i + 1, j)];
                diag += t;
                add(c, g.cell(i + 1, j), -t);
            }
            if (j > 0) {
                const double t = trans_[g.hface(i, j)];
                diag += t;
                add(c, g.cell(i, j - 1), -t);
            }
            if (j < g.ny - 1) {
                const double t = trans_[g.hface(i, j + 1)];
                diag += t;
                add(c, g.cell(i, j + 1), -t);
            }
            add(c, c, diag);
        }
    }

    for_each_boundary_face(g, [&](int bidx, double, int c, int f, bool) {
        const FaceBc& fb = bc.faces[bidx];
        const double area = g.face_area(f);
        const double t_half = trans_[f];
        switch (fb.kind) {
            case BcKind::Pressure:
                add(c, c, t_half);
                break;
            case BcKind::Flux:
                break;
            case BcKind::Robin:
                if (!(fb.beta > 0.0))
                    throw ConfigError("CellCenteredSolver: Robin face requires beta > 0");
                add(c, c, effective_robin_trans(t_half, fb.beta, area));
                break;
        }
    });

    if (a >= 0) trip.emplace_back(a, a, 1.0);

    A_.setFromTriplets(trip.begin(), trip.end());
    if (!pattern_ready_) {
        ldlt_->analyzePattern(A_);
        pattern_ready_ = true;
    }
    ldlt_->factorize(A_);
    use_cg_ = (ldlt_->info() != Eigen::Success);
}

LocalSolution CellCenteredSolver::solve(const CellField& q, const BoundarySpec& bc) const {
    const StructuredGrid2D& g = grid_;
    if (bc.count() != bc_struct_.count())
        throw NumericError("CellCenteredSolver: boundary spec does not match the factorization");
    for (int i = 0; i < bc.count(); ++i)
        if (bc.faces[i].kind != bc_struct_.faces[i].kind ||
            bc.faces[i].beta != bc_struct_.faces[i].beta)
            throw NumericError(
                "CellCenteredSolver: boundary structure changed since factorization");
    const double vol = g.cell_volume();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(g.cell_count());
    for (int c = 0; c < g.cell_count(); ++c) rhs[c] = q[c] * vol;

    for_each_boundary_face(g, [&](int bidx, double, int c, int f, bool) {
        const FaceBc& fb = bc.faces[bidx];
        const double area = g.face_area(f);
        const double t_half = trans_[f];
        switch (fb.kind) {
            case BcKind::Pressure:
                rhs[c] += t_half * fb.value;
                break;
            case BcKind::Flux:
                rhs[c] -= fb.value * area;
                break;
            case BcKind::Robin:
                rhs[c] += effective_robin_trans(t_half, fb.beta, area) * fb.robin_rhs;
                break;
        }
    });

    if (anchor_) rhs[*anchor_] = 0.0;

    Eigen::VectorXd p;
    if (!use_cg_) {
        p = ldlt_->solve(rhs);
        if (ldlt_->info() != Eigen::Success)
            throw NumericError("CellCenteredSolver: direct solve failed");
    } else {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-12);
        cg.setMaxIterations(20 * grid_.cell_count());
        cg.compute(A_);
        p = cg.solve(rhs);
        if (cg.info() != Eigen::Success)
            throw NumericError("CellCenteredSolver: conjugate-gradient fallback did not converge");
    }

    LocalSolution sol;
    sol.p = CellField(g);
    for (int c = 0; c < g.cell_count(); ++c) sol.p[c] = p[c];
    sol.u = FaceField(g);
    sol.boundary_p.assign(static_cast<size_t>(bc.count()), 0.0);

    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const int f = g.vface(i, j);
            sol.u[f] = trans_[f] * (sol.p(i - 1, j) - sol.p(i, j)) / g.face_area(f);
        }
    for (int i = 0; i < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) {
            const int f = g.hface(i, j);
            sol.u[f] = trans_[f] * (sol.p(i, j - 1) - sol.p(i, j)) / g.face_area(f);
        }

    for_each_boundary_face(g, [&](int bidx, double sgn, int c, int f, bool) {
        const FaceBc& fb = bc.faces[bidx];
        const double area = g.face_area(f);
        const double t_half = trans_[f];
        double un_out = 0.0;  // outward normal velocity
        double pf = 0.0;
        switch (fb.kind) {
            case BcKind::Pressure:
                un_out = t_half * (sol.p[c] - fb.value) / area;
                pf = fb.value;
                break;
            case BcKind::Flux:
                un_out = fb.value;
                pf = sol.p[c] - fb.value * area / t_half;
                break;
            case BcKind::Robin: {
                const double t_eff = effective_robin_trans(t_half, fb.beta, area);
                un_out = t_eff * (sol.p[c] - fb.robin_rhs) / area;
                pf = fb.robin_rhs + fb.beta * un_out;
                break;
            }
        }
        sol.u[f] = sgn * un_out;
        sol.boundary_p[bidx] = pf;
    });

    return sol;
}

LocalSolution solve_cell_centered(const CellField& kappa, const CellField& q,
                                  const BoundarySpec& bc, std::optional<int> anchor) {
    CellCenteredSolver solver(kappa.grid);
    solver.factorize(kappa, bc, anchor);
    return solver.solve(q, bc);
}

double conservation_residual(const LocalSolution& sol, const CellField& q) {
    const CellField div = divergence(sol.u);
    double r = 0.0;
    for (int c = 0; c < div.size(); ++c) r = std::max(r, std::abs(div[c] - q[c]));
    return r;
}

double residual_scale(const LocalSolution& sol, const CellField& q) {
    const StructuredGrid2D& g = sol.p.grid;
    double s = 0.0;
    for (double v : q.v) s = std::max(s, std::abs(v));
    const double vol = g.cell_volume();
    for (int f = 0; f < g.face_count(); ++f)
        s = std::max(s, std::abs(sol.u[f]) * g.face_area(f) / vol);
    return s > 0.0 ? s : 1.0;
}

} // namespace mrcmflow
