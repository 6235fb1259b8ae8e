#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>
#include <vector>

#include "mrcmflow/grid.hpp"

namespace mrcmflow {

enum class BcKind { Pressure, Flux, Robin };

/// Condition on one exterior face.
///  - Pressure: face pressure equals `value`.
///  - Flux:     outward normal velocity u.n equals `value`.
///  - Robin:    -beta * (u.n_out) + p_face = `robin_rhs`.
struct FaceBc {
    BcKind kind = BcKind::Flux;
    double value = 0.0;
    double beta = 0.0;
    double robin_rhs = 0.0;

    static FaceBc pressure(double g) { return {BcKind::Pressure, g, 0.0, 0.0}; }
    static FaceBc flux(double z) { return {BcKind::Flux, z, 0.0, 0.0}; }
    static FaceBc robin(double beta, double rhs) { return {BcKind::Robin, 0.0, beta, rhs}; }
};

/// Boundary conditions for every exterior face of a rectangular grid, stored
/// in the fixed order West(ny), East(ny), South(nx), North(nx) with ascending
/// j (W/E) or i (S/N). This matches the subdomain boundary-edge enumeration.
struct BoundarySpec {
    int nx = 0, ny = 0;
    std::vector<FaceBc> faces;

    BoundarySpec() = default;
    BoundarySpec(int nx_, int ny_) : nx(nx_), ny(ny_), faces(2 * (nx_ + ny_)) {}

    int count() const { return static_cast<int>(faces.size()); }
    int west(int j) const { return j; }
    int east(int j) const { return ny + j; }
    int south(int i) const { return 2 * ny + i; }
    int north(int i) const { return 2 * ny + nx + i; }

    bool pure_neumann() const {
        for (const auto& f : faces)
            if (f.kind != BcKind::Flux) return false;
        return true;
    }

    /// Same condition on every face of each side.
    static BoundarySpec uniform(const StructuredGrid2D& g, FaceBc w, FaceBc e, FaceBc s,
                                FaceBc n);
};

/// Result of one local solve. `u` holds global-oriented normal velocities on
/// all faces; `boundary_p` holds face pressures on the exterior faces in
/// BoundarySpec order. div(u) = q holds cell-wise to solver tolerance.
struct LocalSolution {
    CellField p;
    FaceField u;
    std::vector<double> boundary_p;
};

/// Face transmissibilities for a conductivity field: interior faces carry the
/// harmonic mean of the adjacent cells times area/distance, exterior faces the
/// adjacent-cell value times area/(distance/2).
FaceField transmissibility(const CellField& kappa);

/// Cell-centered finite-volume solver with a cached sparsity pattern, so a
/// grid's solver object can be refactorized cheaply when kappa changes and
/// reused across many right-hand sides.
class CellCenteredSolver {
public:
    explicit CellCenteredSolver(const StructuredGrid2D& grid);

    /// Assembles and factorizes the system for (kappa, bc kinds, Robin betas).
    /// BC values and sources enter only in solve(). `anchor` pins that cell's
    /// pressure to zero and is required for pure-Neumann problems.
    void factorize(const CellField& kappa, const BoundarySpec& bc,
                   std::optional<int> anchor = std::nullopt);

    /// Solves for sources q and the boundary values in `bc` (kinds and betas
    /// must match the factorized ones) and reconstructs fluxes and boundary
    /// face pressures.
    LocalSolution solve(const CellField& q, const BoundarySpec& bc) const;

    const StructuredGrid2D& grid() const { return grid_; }
    bool anchored() const { return anchor_.has_value(); }

private:
    StructuredGrid2D grid_;
    FaceField trans_;
    BoundarySpec bc_struct_;
    std::optional<int> anchor_;
    Eigen::SparseMatrix<double> A_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
    bool pattern_ready_ = false;
    bool use_cg_ = false;

    double face_dist(bool vertical) const { return vertical ? grid_.hx : grid_.hy; }
};

/// One-shot convenience wrapper around CellCenteredSolver.
LocalSolution solve_cell_centered(const CellField& kappa, const CellField& q,
                                  const BoundarySpec& bc,
                                  std::optional<int> anchor = std::nullopt);

/// max_c |div(u) - q| over cells.
double conservation_residual(const LocalSolution& sol, const CellField& q);

/// Magnitude against which conservation residuals are judged:
/// max(|q|, |face flux| / cell volume).
double residual_scale(const LocalSolution& sol, const CellField& q);

} // namespace mrcmflow
