#include "mrcmflow/decomposition.hpp"

#include <string>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

int DomainDecomposition::skeleton_edge_count() const {
    int n = 0;
    for (const auto& ifc : interfaces) n += ifc.edge_count();
    return n;
}

double DomainDecomposition::coarse_h() const {
    const double hxs = grid.lx / nsx;
    const double hys = grid.ly / nsy;
    return hxs > hys ? hxs : hys;
}

CellField DomainDecomposition::restrict_cells(const CellField& global, int s) const {
    const SubdomainRect& r = subs[s];
    CellField out(subgrids[s]);
    for (int jj = 0; jj < r.ny; ++jj)
        for (int ii = 0; ii < r.nx; ++ii)
            out(ii, jj) = global(r.i0 + ii, r.j0 + jj);
    return out;
}

int DomainDecomposition::global_cell(int s, int ii, int jj) const {
    const SubdomainRect& r = subs[s];
    return grid.cell(r.i0 + ii, r.j0 + jj);
}

DomainDecomposition build_decomposition(const StructuredGrid2D& grid, int nsx, int nsy) {
    if (nsx < 1 || nsy < 1)
        throw ConfigError("build_decomposition: subdomain counts must be >= 1");
    if (grid.nx % nsx != 0 || grid.ny % nsy != 0)
        throw ConfigError("build_decomposition: " + std::to_string(nsx) + "x" +
                          std::to_string(nsy) + " subdomains do not divide a " +
                          std::to_string(grid.nx) + "x" + std::to_string(grid.ny) + " grid");

    DomainDecomposition dd;
    dd.grid = grid;
    dd.nsx = nsx;
    dd.nsy = nsy;
    const int snx = grid.nx / nsx;
    const int sny = grid.ny / nsy;

    dd.subs.reserve(static_cast<size_t>(nsx) * nsy);
    dd.subgrids.reserve(dd.subs.capacity());
    for (int sy = 0; sy < nsy; ++sy) {
        for (int sx = 0; sx < nsx; ++sx) {
            SubdomainRect r{sx * snx, sy * sny, snx, sny};
            dd.subs.push_back(r);
            dd.subgrids.emplace_back(snx, sny, snx * grid.hx, sny * grid.hy);
        }
    }

    auto sub_id = [&](int sx, int sy) { return sy * nsx + sx; };

    // Vertical interfaces between (sx,sy) and (sx+1,sy), edges ordered by j.
    for (int sy = 0; sy < nsy; ++sy) {
        for (int sx = 0; sx + 1 < nsx; ++sx) {
            Interface ifc;
            ifc.minus_sub = sub_id(sx, sy);
            ifc.plus_sub = sub_id(sx + 1, sy);
            ifc.vertical = true;
            const int iface = (sx + 1) * snx;
            for (int j = sy * sny; j < (sy + 1) * sny; ++j)
                ifc.global_faces.push_back(grid.vface(iface, j));
            dd.interfaces.push_back(std::move(ifc));
        }
    }
    // Horizontal interfaces between (sx,sy) and (sx,sy+1), edges ordered by i.
    for (int sy = 0; sy + 1 < nsy; ++sy) {
        for (int sx = 0; sx < nsx; ++sx) {
            Interface ifc;
            ifc.minus_sub = sub_id(sx, sy);
            ifc.plus_sub = sub_id(sx, sy + 1);
            ifc.vertical = false;
            const int jface = (sy + 1) * sny;
            for (int i = sx * snx; i < (sx + 1) * snx; ++i)
                ifc.global_faces.push_back(grid.hface(i, jface));
            dd.interfaces.push_back(std::move(ifc));
        }
    }

    // Boundary edges per subdomain, W,E,S,N order. Skeleton membership is
    // resolved against the interface lists built above.
    std::vector<int> face_interface(static_cast<size_t>(grid.face_count()), -1);
    std::vector<int> face_pos(static_cast<size_t>(grid.face_count()), -1);
    for (int k = 0; k < dd.interface_count(); ++k) {
        const auto& ifc = dd.interfaces[k];
        for (int e = 0; e < ifc.edge_count(); ++e) {
            face_interface[ifc.global_faces[e]] = k;
            face_pos[ifc.global_faces[e]] = e;
        }
    }

    dd.sub_boundary.resize(dd.subs.size());
    for (size_t s = 0; s < dd.subs.size(); ++s) {
        const SubdomainRect& r = dd.subs[s];
        const StructuredGrid2D& lg = dd.subgrids[s];
        auto& edges = dd.sub_boundary[s];
        edges.reserve(2 * (r.nx + r.ny));
        auto add = [&](Side side, int gface, int lface, int lcell) {
            BoundaryEdge e;
            e.global_face = gface;
            e.local_face = lface;
            e.local_cell = lcell;
            e.side = side;
            e.sign = side_sign(side);
            e.interface_id = face_interface[gface];
            e.pos = face_pos[gface];
            e.on_skeleton = e.interface_id >= 0;
            edges.push_back(e);
        };
        for (int jj = 0; jj < r.ny; ++jj)
            add(Side::West, grid.vface(r.i0, r.j0 + jj), lg.vface(0, jj), lg.cell(0, jj));
        for (int jj = 0; jj < r.ny; ++jj)
            add(Side::East, grid.vface(r.i0 + r.nx, r.j0 + jj), lg.vface(r.nx, jj),
                lg.cell(r.nx - 1, jj));
        for (int ii = 0; ii < r.nx; ++ii)
            add(Side::South, grid.hface(r.i0 + ii, r.j0), lg.hface(ii, 0), lg.cell(ii, 0));
        for (int ii = 0; ii < r.nx; ++ii)
            add(Side::North, grid.hface(r.i0 + ii, r.j0 + r.ny), lg.hface(ii, r.ny),
                lg.cell(ii, r.ny - 1));
    }

    return dd;
}

} // namespace mrcmflow
