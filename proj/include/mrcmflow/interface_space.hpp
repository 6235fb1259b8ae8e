#pragma once

#include <vector>

#include "mrcmflow/decomposition.hpp"

namespace mrcmflow {

/// Interface-segment length for constant spaces, expressed against the fine
/// edge count of each interface.
struct HbarSpec {
    enum class Mode { WholeInterface, HalfInterface, PerEdge, EdgesPerSegment };
    Mode mode = Mode::WholeInterface;
    int edges = 0;  // used by EdgesPerSegment

    static HbarSpec whole() { return {Mode::WholeInterface, 0}; }
    static HbarSpec half() { return {Mode::HalfInterface, 0}; }
    static HbarSpec per_edge() { return {Mode::PerEdge, 0}; }
    static HbarSpec segment_edges(int n) { return {Mode::EdgesPerSegment, n}; }
};

/// One basis function of an interface space: piecewise-constant values over
/// the fine edges of a single interface, zero elsewhere on the skeleton.
struct InterfaceBasis {
    int interface_id = -1;
    std::vector<double> values;  // aligned with Interface::global_faces
};

/// Low-dimensional spaces over the skeleton edges for the interface flux
/// (U_H) and pressure (P_H) unknowns. Constant spaces partition each
/// interface into segments of length H-bar; linear spaces hold a constant
/// plus a zero-mean linear per interface.
struct InterfaceSpace {
    enum class Kind { Constant, Linear };
    Kind kind = Kind::Constant;
    std::vector<InterfaceBasis> flux_bases;
    std::vector<InterfaceBasis> pressure_bases;
    std::vector<std::vector<int>> flux_by_interface;
    std::vector<std::vector<int>> pressure_by_interface;

    int dim_flux() const { return static_cast<int>(flux_bases.size()); }
    int dim_pressure() const { return static_cast<int>(pressure_bases.size()); }
};

InterfaceSpace build_interface_space(const DomainDecomposition& dd, InterfaceSpace::Kind kind,
                                     const HbarSpec& hbar = HbarSpec::whole());

} // namespace mrcmflow
