#include "mrcmflow/robin.hpp"

#include <algorithm>
#include <cmath>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

namespace {

// Cells on either side of a skeleton fine edge, minus side first.
std::pair<int, int> adjacent_cells(const StructuredGrid2D& g, const Interface& ifc, int pos) {
    const int f = ifc.global_faces[pos];
    if (ifc.vertical) {
        const int i = f % (g.nx + 1);
        const int j = f / (g.nx + 1);
        return {g.cell(i - 1, j), g.cell(i, j)};
    }
    const int fh = f - g.vface_count();
    const int i = fh % g.nx;
    const int j = fh / g.nx;
    return {g.cell(i, j - 1), g.cell(i, j)};
}

double quantile(std::vector<double> sorted_vals, double pct) {
    const size_t m = sorted_vals.size();
    if (m == 0) return 0.0;
    double idx = pct / 100.0 * static_cast<double>(m - 1);
    idx = std::clamp(idx, 0.0, static_cast<double>(m - 1));
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, m - 1);
    const double w = idx - static_cast<double>(lo);
    return (1.0 - w) * sorted_vals[lo] + w * sorted_vals[hi];
}

} // namespace

RobinParameter compute_beta(const CellField& kappa, const DomainDecomposition& dd,
                            const AlphaSpec& spec) {
    for (double k : kappa.v)
        if (!(k > 0.0)) throw NumericError("compute_beta: conductivity must be positive");

    const double H = dd.coarse_h();
    const int ni = dd.interface_count();

    RobinParameter rp;
    rp.beta_minus.resize(ni);
    rp.beta_plus.resize(ni);
    rp.alpha.resize(ni);

    // Face conductivities (harmonic means) drive the adaptive classification.
    std::vector<std::vector<double>> face_kappa(ni);
    std::vector<double> all_face_kappa;
    for (int k = 0; k < ni; ++k) {
        const Interface& ifc = dd.interfaces[k];
        face_kappa[k].resize(ifc.edge_count());
        for (int e = 0; e < ifc.edge_count(); ++e) {
            auto [cm, cp] = adjacent_cells(dd.grid, ifc, e);
            const double hm = 2.0 * kappa[cm] * kappa[cp] / (kappa[cm] + kappa[cp]);
            face_kappa[k][e] = hm;
            all_face_kappa.push_back(hm);
        }
    }

    double q_lo = 0.0, q_hi = 0.0;
    if (spec.mode == AlphaMode::Adaptive && !all_face_kappa.empty()) {
        std::sort(all_face_kappa.begin(), all_face_kappa.end());
        q_lo = quantile(all_face_kappa, spec.percentile_lo);
        q_hi = quantile(all_face_kappa, spec.percentile_hi);
    }

    for (int k = 0; k < ni; ++k) {
        const Interface& ifc = dd.interfaces[k];
        const int n = ifc.edge_count();
        rp.beta_minus[k].resize(n);
        rp.beta_plus[k].resize(n);
        rp.alpha[k].resize(n);
        for (int e = 0; e < n; ++e) {
            double a = spec.alpha;
            if (spec.mode == AlphaMode::Adaptive) {
                const double fk = face_kappa[k][e];
                a = fk > q_hi ? spec.alpha_min : (fk < q_lo ? spec.alpha_max : 1.0);
            }
            auto [cm, cp] = adjacent_cells(dd.grid, ifc, e);
            rp.alpha[k][e] = a;
            rp.beta_minus[k][e] = a * H / kappa[cm];
            rp.beta_plus[k][e] = a * H / kappa[cp];
        }
    }
    return rp;
}

} // namespace mrcmflow
