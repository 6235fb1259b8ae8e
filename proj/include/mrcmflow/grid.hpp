#pragma once

#include <vector>

namespace mrcmflow {

/// Uniform cell-centered rectangular grid.
///
/// Cells are indexed row-major: cell(i,j) = j*nx + i, i in [0,nx), j in [0,ny).
/// Faces carry a fixed global orientation (+x for vertical faces, +y for
/// horizontal faces). Vertical faces come first in the face numbering:
///   vface(i,j) = j*(nx+1) + i          i in [0,nx],  j in [0,ny)
///   hface(i,j) = (nx+1)*ny + j*nx + i  i in [0,nx),  j in [0,ny]
struct StructuredGrid2D {
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    double hx = 0.0, hy = 0.0;

    StructuredGrid2D() = default;
    StructuredGrid2D(int nx_, int ny_, double lx_, double ly_);

    int cell_count() const { return nx * ny; }
    int vface_count() const { return (nx + 1) * ny; }
    int hface_count() const { return nx * (ny + 1); }
    int face_count() const { return vface_count() + hface_count(); }

    int cell(int i, int j) const { return j * nx + i; }
    int vface(int i, int j) const { return j * (nx + 1) + i; }
    int hface(int i, int j) const { return vface_count() + j * nx + i; }

    bool is_vface(int f) const { return f < vface_count(); }

    double cell_cx(int i) const { return (i + 0.5) * hx; }
    double cell_cy(int j) const { return (j + 0.5) * hy; }
    double cell_volume() const { return hx * hy; }

    /// Area of a face (unit thickness in the out-of-plane direction).
    double face_area(int f) const { return is_vface(f) ? hy : hx; }

    bool same_shape(const StructuredGrid2D& o) const {
        return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
    }
};

/// Factory with validation (positive sizes).
StructuredGrid2D build_grid(int nx, int ny, double lx, double ly);

/// One real value per cell, row-major.
struct CellField {
    StructuredGrid2D grid;
    std::vector<double> v;

    CellField() = default;
    explicit CellField(const StructuredGrid2D& g, double init = 0.0)
        : grid(g), v(static_cast<size_t>(g.cell_count()), init) {}

    double& operator()(int i, int j) { return v[grid.cell(i, j)]; }
    double operator()(int i, int j) const { return v[grid.cell(i, j)]; }
    double& operator[](int c) { return v[c]; }
    double operator[](int c) const { return v[c]; }
    int size() const { return static_cast<int>(v.size()); }
};

/// One real value per face: the normal component u.n in global orientation.
struct FaceField {
    StructuredGrid2D grid;
    std::vector<double> v;

    FaceField() = default;
    explicit FaceField(const StructuredGrid2D& g, double init = 0.0)
        : grid(g), v(static_cast<size_t>(g.face_count()), init) {}

    double& operator[](int f) { return v[f]; }
    double operator[](int f) const { return v[f]; }
    int size() const { return static_cast<int>(v.size()); }
};

/// Discrete divergence: per cell, (flux out - flux in) / cell volume.
CellField divergence(const FaceField& u);

/// Net outflow through the domain boundary, for the discrete divergence theorem.
double boundary_net_outflow(const FaceField& u);

} // namespace mrcmflow
