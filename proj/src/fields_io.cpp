#include "mrcmflow/fields_io.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

namespace {

void check_positive_finite(const CellField& f, const std::string& what) {
    for (double v : f.v) {
        if (!std::isfinite(v)) throw NumericError(what + ": non-finite value");
        if (!(v > 0.0)) throw ConfigError(what + ": non-positive permeability value");
    }
}

} // namespace

GaussianSampler::GaussianSampler(const StructuredGrid2D& grid, const GaussianFieldSpec& spec)
    : grid_(grid), spec_(spec) {
    const int n = grid.cell_count();
    if (n > (1 << 16))
        throw CapacityError("generate_gaussian: grid exceeds the dense-covariance guard (2^16 cells)");
    if (!(spec.delta > 0.0) || !(spec.mean_coeff > 0.0))
        throw ConfigError("generate_gaussian: delta and mean_coeff must be positive");

    Eigen::MatrixXd cov(n, n);
    const double h_min = grid.hx < grid.hy ? grid.hx : grid.hy;
    const double diag = 1.0 / std::sqrt(h_min / 2.0);
    for (int j1 = 0; j1 < grid.ny; ++j1)
        for (int i1 = 0; i1 < grid.nx; ++i1) {
            const int a = grid.cell(i1, j1);
            for (int j2 = 0; j2 < grid.ny; ++j2)
                for (int i2 = 0; i2 < grid.nx; ++i2) {
                    const int b = grid.cell(i2, j2);
                    if (a == b) {
                        cov(a, b) = diag;
                    } else {
                        const double dx = grid.cell_cx(i1) - grid.cell_cx(i2);
                        const double dy = grid.cell_cy(j1) - grid.cell_cy(j2);
                        cov(a, b) = 1.0 / std::sqrt(std::sqrt(dx * dx + dy * dy));
                    }
                }
        }
    const double jitter = 1e-8 * cov.trace() / n;
    cov.diagonal().array() += jitter;

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("generate_gaussian: covariance matrix is not positive definite");
    chol_ = llt.matrixL();
}

Eigen::VectorXd GaussianSampler::sample_xi(std::uint64_t seed) const {
    const int n = grid_.cell_count();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal(rng);
    Eigen::VectorXd xi = chol_ * z;

    if (spec_.normalization == XiNormalization::Range) {
        const double lo = xi.minCoeff();
        const double hi = xi.maxCoeff();
        const double mid = 0.5 * (lo + hi);
        const double span = hi - lo;
        if (span > 0.0) xi = (xi.array() - mid) * (spec_.range_target / span);
    }
    return xi;
}

PermeabilityField GaussianSampler::sample(std::uint64_t seed) const {
    const Eigen::VectorXd xi = sample_xi(seed);
    PermeabilityField field{CellField(grid_)};
    for (int c = 0; c < grid_.cell_count(); ++c)
        field.K[c] = spec_.mean_coeff * std::exp(spec_.delta * xi[c]);
    check_positive_finite(field.K, "generate_gaussian");
    return field;
}

PermeabilityField generate_gaussian(const StructuredGrid2D& grid, const GaussianFieldSpec& spec) {
    return GaussianSampler(grid, spec).sample(spec.seed);
}

PermeabilityField load_field(const std::string& path, const StructuredGrid2D& grid) {
    PermeabilityField field{load_cell_field(path, grid)};
    check_positive_finite(field.K, "load_field(" + path + ")");
    return field;
}

CellField load_cell_field(const std::string& path, const StructuredGrid2D& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_field: cannot open " + path);
    int nx = -1, ny = -1;
    if (!(in >> nx >> ny)) throw ConfigError("load_field: bad header in " + path);
    if (nx != grid.nx || ny != grid.ny)
        throw ConfigError("load_field: " + path + " holds a " + std::to_string(nx) + "x" +
                          std::to_string(ny) + " field, expected " + std::to_string(grid.nx) +
                          "x" + std::to_string(grid.ny));
    CellField f(grid);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double v;
            if (!(in >> v))
                throw ConfigError("load_field: parse failure in " + path + " at row " +
                                  std::to_string(j + 1) + " column " + std::to_string(i + 1));
            f(i, j) = v;
        }
    return f;
}

void save_cell_field(const std::string& path, const CellField& field, FieldFormat format,
                     const std::string& name) {
    std::ofstream out(path);
    if (!out) throw ConfigError("save_cell_field: cannot write " + path);
    const StructuredGrid2D& g = field.grid;
    char buf[32];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    if (format == FieldFormat::PlainMatrix) {
        out << g.nx << " " << g.ny << "\n";
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                if (i) out << " ";
                out << fmt(field(i, j));
            }
            out << "\n";
        }
    } else {
        out << "# vtk DataFile Version 3.0\n";
        out << name << "\n";
        out << "ASCII\n";
        out << "DATASET STRUCTURED_POINTS\n";
        out << "DIMENSIONS " << g.nx + 1 << " " << g.ny + 1 << " 1\n";
        out << "ORIGIN 0 0 0\n";
        out << "SPACING " << fmt(g.hx) << " " << fmt(g.hy) << " 1\n";
        out << "CELL_DATA " << g.cell_count() << "\n";
        out << "SCALARS " << name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) out << fmt(field(i, j)) << "\n";
    }
    if (!out) throw ConfigError("save_cell_field: I/O failure writing " + path);
}

} // namespace mrcmflow
