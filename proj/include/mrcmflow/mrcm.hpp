#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "mrcmflow/decomposition.hpp"
#include "mrcmflow/elliptic.hpp"
#include "mrcmflow/interface_space.hpp"
#include "mrcmflow/robin.hpp"

namespace mrcmflow {

/// Running tally of local elliptic solves by role.
struct SolveCounters {
    long homogeneous = 0;
    long particular = 0;
    long downscale = 0;
    long fine = 0;
    long interface_solves = 0;
};

/// Coefficients of the interface unknowns in the given space's bases.
struct SkeletonCoeffs {
    Eigen::VectorXd flux;      // U_H
    Eigen::VectorXd pressure;  // P_H
};

/// Per-subdomain coupled solutions (linear combination of basis solutions
/// plus the data-driven part).
struct MrcmReconstruction {
    std::vector<LocalSolution> per_sub;
};

/// The data-driven local solutions (source terms and physical boundary
/// values, zero Robin data on the skeleton).
struct ParticularSolution {
    std::vector<LocalSolution> per_sub;
};

/// Per-subdomain data for the particular problems; boundary values use the
/// subdomain's local BoundarySpec layout.
struct LocalData {
    CellField q;
    BoundarySpec bc;
};

/// Everything reusable across pressure solves with an unchanged conductivity
/// snapshot: factorized local solvers, homogeneous basis solutions and their
/// skeleton traces, and the factorized global interface matrix.
class BasisSet {
public:
    struct HomSolution {
        int col;  // interface-system column: flux bases first, then pressure bases
        LocalSolution sol;
    };
    struct SubdomainMachinery {
        CellCenteredSolver solver;
        BoundarySpec bc_struct;
        std::vector<HomSolution> hom;
    };

    std::shared_ptr<const DomainDecomposition> dd;
    std::shared_ptr<const InterfaceSpace> space;
    RobinParameter beta;
    CellField kappa_m;
    std::vector<SubdomainMachinery> subs;
    Eigen::MatrixXd iface_matrix;
    Eigen::PartialPivLU<Eigen::MatrixXd> iface_lu;
    ParticularSolution particular;  // for the (q, bc) the set was built with

    int n_flux = 0, n_pressure = 0;
    int system_dim() const { return n_flux + n_pressure; }
    long nhat() const {
        long n = 0;
        for (const auto& s : subs) n += static_cast<long>(s.hom.size());
        return n;
    }
};

/// Builds the multiscale basis: per subdomain, one homogeneous Robin problem
/// per incident interface basis, plus the particular problem for (q, bc);
/// assembles and factorizes the global interface matrix.
std::shared_ptr<BasisSet> compute_basis_set(const CellField& kappa,
                                            std::shared_ptr<const DomainDecomposition> dd,
                                            std::shared_ptr<const InterfaceSpace> space,
                                            const RobinParameter& beta, const CellField& q,
                                            const BoundarySpec& bc, SolveCounters& counters);

/// Restricts global sources and physical boundary data to each subdomain,
/// with zero Robin data on skeleton faces.
std::vector<LocalData> restrict_physical_data(const DomainDecomposition& dd,
                                              const RobinParameter& beta, const CellField& q,
                                              const BoundarySpec& bc);

/// Solves the data-driven problem on every subdomain, reusing the factorized
/// local solvers of the basis set.
ParticularSolution solve_particular(const BasisSet& basis, const std::vector<LocalData>& data,
                                    SolveCounters& counters);

/// Solves the global interface system for the given particular solution.
SkeletonCoeffs solve_interface(const BasisSet& basis, const ParticularSolution& particular,
                               SolveCounters& counters);

/// Additive recombination: hat part (coefficients times homogeneous
/// solutions) plus the particular part.
MrcmReconstruction reconstruct(const BasisSet& basis, const SkeletonCoeffs& coeffs,
                               const ParticularSolution& particular);

/// Single-valued skeleton flux (global orientation): the average of the two
/// one-sided traces, per interface and edge.
std::vector<std::vector<double>> averaged_skeleton_flux(const DomainDecomposition& dd,
                                                        const MrcmReconstruction& recon);

/// Conservative fine fields obtained from skeleton fluxes via local Neumann
/// problems with an exact per-subdomain compatibility repair. The repair
/// solves for one correction constant per subdomain over the adjacency graph
/// (uniform per interface, single-valued on shared edges); subdomains on
/// pressure boundaries can also absorb residual through those boundary
/// fluxes, which closes the balance when the averaged traces carry a net
/// imbalance.
struct DownscaleResult {
    CellField p;
    FaceField u;
    double repair_max = 0.0;     // largest skeleton-flux correction applied
    double flux_scale = 0.0;     // max skeleton |flux| before repair
    bool repair_warning = false; // repair_max > 10% of flux_scale
    double div_residual = 0.0;   // max_c |div u - q| after downscaling
    double div_scale = 1.0;      // max(|q|, |face flux|/volume): residual yardstick
};

DownscaleResult downscale(const DomainDecomposition& dd, const CellField& kappa_current,
                          const CellField& q, const BoundarySpec& bc,
                          const MrcmReconstruction& recon,
                          const std::vector<std::vector<double>>& skeleton_flux,
                          SolveCounters& counters);

/// The composed multiscale solve. Holds the basis set for later reuse.
struct GlobalSolution {
    std::shared_ptr<BasisSet> basis;
    SkeletonCoeffs coeffs;
    MrcmReconstruction recon;
    CellField p;  // downscaled
    FaceField u;  // downscaled, conservative
    double repair_max = 0.0;
    bool repair_warning = false;
    double div_residual = 0.0;
    double div_scale = 1.0;
};

GlobalSolution mrcm_solve(const CellField& kappa, std::shared_ptr<const DomainDecomposition> dd,
                          std::shared_ptr<const InterfaceSpace> space, const RobinParameter& beta,
                          const CellField& q, const BoundarySpec& bc, SolveCounters& counters);

/// Weak jump integrals of a reconstruction against every space member;
/// both vanish for a converged interface solve.
struct WeakResiduals {
    double flux_jump = 0.0;      // max over pressure bases of |sum_i int (u_i . n_i) psi|
    double pressure_jump = 0.0;  // max over flux bases of |int (p+ - p-) phi|
};
WeakResiduals weak_continuity_residuals(const BasisSet& basis, const MrcmReconstruction& recon);

} // namespace mrcmflow
