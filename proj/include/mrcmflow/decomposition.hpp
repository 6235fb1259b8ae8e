#pragma once

#include <vector>

#include "mrcmflow/grid.hpp"

namespace mrcmflow {

/// Side of a rectangular subdomain, in the fixed enumeration order used for
/// boundary-edge lists: West(ny), East(ny), South(nx), North(nx).
enum class Side { West, East, South, North };

/// Sign of (global face normal . subdomain outward normal) on a given side.
inline double side_sign(Side s) {
    return (s == Side::East || s == Side::North) ? +1.0 : -1.0;
}

struct SubdomainRect {
    int i0 = 0, j0 = 0;   // first cell (global indices)
    int nx = 0, ny = 0;   // cells
};

/// One interface of the skeleton: the ordered fine faces between two
/// adjacent subdomains. `minus_sub` sits on the side whose outward normal
/// coincides with the global face orientation (left of a vertical interface,
/// below a horizontal one).
struct Interface {
    int minus_sub = -1, plus_sub = -1;
    bool vertical = true;
    std::vector<int> global_faces;   // ordered by increasing y (vertical) or x (horizontal)
    int edge_count() const { return static_cast<int>(global_faces.size()); }
};

/// One fine edge on the boundary of a subdomain.
struct BoundaryEdge {
    int global_face = -1;
    int local_face = -1;    // face index in the subdomain's local grid
    int local_cell = -1;    // adjacent cell, local row-major index
    Side side = Side::West;
    double sign = 0.0;      // side_sign(side)
    bool on_skeleton = false;
    int interface_id = -1;  // valid when on_skeleton
    int pos = -1;           // position within the interface's edge list
};

/// Non-overlapping partition of a grid into Nx_sub x Ny_sub rectangles of
/// whole cells, plus the skeleton of interfaces between them.
struct DomainDecomposition {
    StructuredGrid2D grid;
    int nsx = 0, nsy = 0;
    std::vector<SubdomainRect> subs;                      // index s = sy*nsx + sx
    std::vector<StructuredGrid2D> subgrids;
    std::vector<Interface> interfaces;
    std::vector<std::vector<BoundaryEdge>> sub_boundary;  // fixed W,E,S,N order per subdomain

    int subdomain_count() const { return nsx * nsy; }
    int interface_count() const { return static_cast<int>(interfaces.size()); }
    int skeleton_edge_count() const;

    /// Characteristic subdomain size H used by the Robin parameter.
    double coarse_h() const;

    /// Extracts the restriction of a global cell field to subdomain s.
    CellField restrict_cells(const CellField& global, int s) const;

    /// Global row-major cell index of local cell (ii,jj) in subdomain s.
    int global_cell(int s, int ii, int jj) const;
};

DomainDecomposition build_decomposition(const StructuredGrid2D& grid, int nsx, int nsy);

} // namespace mrcmflow
