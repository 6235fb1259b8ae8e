#pragma once

#include <vector>

#include "mrcmflow/decomposition.hpp"

namespace mrcmflow {

enum class AlphaMode { Uniform, Adaptive };

/// The dimensionless algorithmic function alpha in beta = alpha * H / kappa.
/// Adaptive mode classifies each skeleton edge by the harmonic mean of the
/// two adjacent cell conductivities against quantiles of all skeleton edges:
/// high-conductivity edges get alpha_min, low ones alpha_max, the rest 1.
struct AlphaSpec {
    AlphaMode mode = AlphaMode::Uniform;
    double alpha = 1.0;
    double alpha_min = 1e-2;
    double alpha_max = 1e2;
    double percentile_lo = 10.0;
    double percentile_hi = 90.0;
};

/// Robin coupling parameter per skeleton edge and side.
struct RobinParameter {
    // Indexed [interface][edge position]; minus = the subdomain whose outward
    // normal matches the global face orientation.
    std::vector<std::vector<double>> beta_minus;
    std::vector<std::vector<double>> beta_plus;
    std::vector<std::vector<double>> alpha;  // the classified alpha per edge

    double beta(int interface_id, int pos, bool minus_side) const {
        return minus_side ? beta_minus[interface_id][pos] : beta_plus[interface_id][pos];
    }
};

RobinParameter compute_beta(const CellField& kappa, const DomainDecomposition& dd,
                            const AlphaSpec& spec);

} // namespace mrcmflow
