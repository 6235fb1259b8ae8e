#include "mrcmflow/interface_space.hpp"

#include <string>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

InterfaceSpace build_interface_space(const DomainDecomposition& dd, InterfaceSpace::Kind kind,
                                     const HbarSpec& hbar) {
    InterfaceSpace space;
    space.kind = kind;
    const int ni = dd.interface_count();
    space.flux_by_interface.resize(ni);
    space.pressure_by_interface.resize(ni);

    auto push = [&](int ifc, std::vector<double> vals) {
        InterfaceBasis b{ifc, std::move(vals)};
        space.flux_by_interface[ifc].push_back(space.dim_flux());
        space.flux_bases.push_back(b);
        space.pressure_by_interface[ifc].push_back(space.dim_pressure());
        space.pressure_bases.push_back(std::move(b));
    };

    for (int k = 0; k < ni; ++k) {
        const int n = dd.interfaces[k].edge_count();
        if (kind == InterfaceSpace::Kind::Linear) {
            push(k, std::vector<double>(static_cast<size_t>(n), 1.0));
            std::vector<double> lin(static_cast<size_t>(n));
            for (int e = 0; e < n; ++e) lin[e] = 2.0 * (e + 0.5) / n - 1.0;
            push(k, std::move(lin));
            continue;
        }
        int seg = n;
        switch (hbar.mode) {
            case HbarSpec::Mode::WholeInterface: seg = n; break;
            case HbarSpec::Mode::HalfInterface: seg = n / 2; break;
            case HbarSpec::Mode::PerEdge: seg = 1; break;
            case HbarSpec::Mode::EdgesPerSegment: seg = hbar.edges; break;
        }
        if (seg < 1 || n % seg != 0)
            throw ConfigError("build_interface_space: segment length " + std::to_string(seg) +
                              " does not divide interface " + std::to_string(k) + " (" +
                              std::to_string(n) + " edges)");
        for (int start = 0; start < n; start += seg) {
            std::vector<double> vals(static_cast<size_t>(n), 0.0);
            for (int e = start; e < start + seg; ++e) vals[e] = 1.0;
            push(k, std::move(vals));
        }
    }
    return space;
}

} // namespace mrcmflow
