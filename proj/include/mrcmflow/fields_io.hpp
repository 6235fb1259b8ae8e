#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "mrcmflow/grid.hpp"

namespace mrcmflow {

/// How the raw Gaussian sample xi is post-processed before exponentiation.
///  - None:  use the factorized-covariance sample as drawn.
///  - Range: rescale about the midrange so that max(xi) - min(xi) equals
///           `range_target`. This pins the realization's permeability
///           contrast to exp(delta * range_target); the default target makes
///           delta = 2.5 produce a contrast of ~1e3.
enum class XiNormalization { None, Range };

struct GaussianFieldSpec {
    double delta = 2.5;
    double mean_coeff = 0.8;
    std::uint64_t seed = 0;
    XiNormalization normalization = XiNormalization::None;
    double range_target = 2.7631021115928548;  // ln(1e3)/2.5
};

struct PermeabilityField {
    CellField K;
};

/// Draws zero-mean Gaussian samples with covariance |x-y|^(-1/2) between
/// distinct cell centers, via a dense Cholesky factorization built once.
/// The singular diagonal is regularized to (h_min/2)^(-1/2) plus a jitter of
/// 1e-8 * trace/n.
class GaussianSampler {
public:
    GaussianSampler(const StructuredGrid2D& grid, const GaussianFieldSpec& spec);

    /// The xi sample for a given seed (deterministic, independent of delta).
    Eigen::VectorXd sample_xi(std::uint64_t seed) const;

    /// K = mean_coeff * exp(delta * xi(seed)).
    PermeabilityField sample(std::uint64_t seed) const;

private:
    StructuredGrid2D grid_;
    GaussianFieldSpec spec_;
    Eigen::MatrixXd chol_;  // lower factor
};

PermeabilityField generate_gaussian(const StructuredGrid2D& grid, const GaussianFieldSpec& spec);

/// Reads a plain-matrix permeability file and validates positivity and shape.
PermeabilityField load_field(const std::string& path, const StructuredGrid2D& grid);

enum class FieldFormat { PlainMatrix, VtkStructured };

/// Plain-matrix layout: "nx ny" header, then ny rows (bottom row first) of nx
/// values with 17 significant digits. VTK: legacy STRUCTURED_POINTS with one
/// CELL_DATA scalar block.
void save_cell_field(const std::string& path, const CellField& field, FieldFormat format,
                     const std::string& name = "field");

/// Reads back a plain-matrix file written by save_cell_field (any sign).
CellField load_cell_field(const std::string& path, const StructuredGrid2D& grid);

} // namespace mrcmflow
