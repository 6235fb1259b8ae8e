#include "mrcmflow/grid.hpp"

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

StructuredGrid2D::StructuredGrid2D(int nx_, int ny_, double lx_, double ly_)
    : nx(nx_), ny(ny_), lx(lx_), ly(ly_), hx(lx_ / nx_), hy(ly_ / ny_) {}

StructuredGrid2D build_grid(int nx, int ny, double lx, double ly) {
    if (nx < 1 || ny < 1)
        throw ConfigError("build_grid: cell counts must be >= 1, got " + std::to_string(nx) +
                          "x" + std::to_string(ny));
    if (!(lx > 0.0) || !(ly > 0.0))
        throw ConfigError("build_grid: domain lengths must be positive");
    return StructuredGrid2D(nx, ny, lx, ly);
}

CellField divergence(const FaceField& u) {
    const StructuredGrid2D& g = u.grid;
    CellField div(g);
    const double vol = g.cell_volume();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double fx = (u[g.vface(i + 1, j)] - u[g.vface(i, j)]) * g.hy;
            const double fy = (u[g.hface(i, j + 1)] - u[g.hface(i, j)]) * g.hx;
            div(i, j) = (fx + fy) / vol;
        }
    }
    return div;
}

double boundary_net_outflow(const FaceField& u) {
    const StructuredGrid2D& g = u.grid;
    double out = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        out -= u[g.vface(0, j)] * g.hy;      // west: outward normal is -x
        out += u[g.vface(g.nx, j)] * g.hy;   // east
    }
    for (int i = 0; i < g.nx; ++i) {
        out -= u[g.hface(i, 0)] * g.hx;      // south
        out += u[g.hface(i, g.ny)] * g.hx;   // north
    }
    return out;
}

} // namespace mrcmflow
