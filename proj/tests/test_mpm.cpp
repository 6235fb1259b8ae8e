#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "mrcmflow/fields_io.hpp"
#include "mrcmflow/mpm.hpp"

using namespace mrcmflow;

namespace {

BoundarySpec pressure_drop(const StructuredGrid2D& g) {
    return BoundarySpec::uniform(g, FaceBc::pressure(1.0), FaceBc::pressure(0.0),
                                 FaceBc::flux(0.0), FaceBc::flux(0.0));
}

struct Setup {
    std::shared_ptr<DomainDecomposition> dd;
    std::shared_ptr<InterfaceSpace> space;
    CellField kappa, q;
    BoundarySpec bc;
    RobinParameter beta;
};

Setup make_setup(const StructuredGrid2D& g, int nsx, int nsy, const CellField& kappa) {
    Setup s;
    s.dd = std::make_shared<DomainDecomposition>(build_decomposition(g, nsx, nsy));
    s.space = std::make_shared<InterfaceSpace>(
        build_interface_space(*s.dd, InterfaceSpace::Kind::Constant, HbarSpec::whole()));
    s.kappa = kappa;
    s.q = CellField(g, 0.0);
    s.bc = pressure_drop(g);
    s.beta = compute_beta(kappa, *s.dd, AlphaSpec{});
    return s;
}

PerturbationState state_from(const GlobalSolution& sol, double eta = 0.01) {
    PerturbationState st;
    st.basis = sol.basis;
    st.recon_m = sol.recon;
    st.eta = eta;
    st.mode = EpsilonMode::Relative;
    return st;
}

} // namespace

TEST_CASE("epsilon norms") {
    const auto g = build_grid(64, 64, 1.0, 1.0);
    CellField a(g, 1.0);

    SUBCASE("identical fields") {
        CHECK(epsilon(a, a, EpsilonMode::Relative) == 0.0);
        CHECK(epsilon(a, a, EpsilonMode::Absolute) == 0.0);
    }
    SUBCASE("uniform scaling") {
        CellField b(g, 1.01);
        CHECK(epsilon(b, a, EpsilonMode::Relative) == doctest::Approx(0.01).epsilon(1e-10));
    }
    SUBCASE("single-cell bump: closed form") {
        CellField b = a;
        b(10, 20) = 2.0;
        // sqrt(1 * h^2) / sqrt(4096 * h^2) = 1/64
        CHECK(epsilon(b, a, EpsilonMode::Relative) ==
              doctest::Approx(1.0 / 64.0).epsilon(1e-12));
        CHECK(epsilon(b, a, EpsilonMode::Absolute) ==
              doctest::Approx(1.0 / 64.0).epsilon(1e-12));
    }
}

TEST_CASE("needs_update uses a strict inequality") {
    const auto g = build_grid(8, 8, 1.0, 1.0);
    CellField kappa(g, 1.0);
    Setup su = make_setup(g, 2, 2, kappa);
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    PerturbationState st = state_from(sol, 0.01);

    SUBCASE("epsilon = 0") { CHECK_FALSE(needs_update(st, kappa)); }
    SUBCASE("epsilon exactly eta") {
        CellField k2(g, 1.01);  // relative epsilon exactly 0.01
        CHECK(epsilon(k2, kappa, EpsilonMode::Relative) == doctest::Approx(0.01).epsilon(1e-14));
        st.eta = epsilon(k2, kappa, EpsilonMode::Relative);
        CHECK_FALSE(needs_update(st, k2));
    }
    SUBCASE("epsilon = 1.5 eta") {
        CellField k2(g, 1.015);
        CHECK(needs_update(st, k2));
    }
}

TEST_CASE("zero-perturbation idempotence") {
    const auto g = build_grid(16, 16, 1.0, 1.0);
    GaussianFieldSpec fs;
    fs.normalization = XiNormalization::Range;
    fs.seed = 4;
    const CellField kappa = generate_gaussian(g, fs).K;
    Setup su = make_setup(g, 4, 4, kappa);
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    const PerturbationState st = state_from(sol);

    SolveCounters c2;
    const MpmResult r = mpm_pressure_update(st, kappa, su.q, su.bc, c2);

    double umax = 0.0;
    for (int f = 0; f < g.face_count(); ++f) umax = std::max(umax, std::abs(sol.u[f]));
    for (int f = 0; f < g.face_count(); ++f)
        CHECK(r.u[f] == doctest::Approx(sol.u[f]).epsilon(1e-8).scale(umax));
    for (int cc = 0; cc < g.cell_count(); ++cc)
        CHECK(r.p[cc] == doctest::Approx(sol.p[cc]).epsilon(1e-8).scale(1.0));
}

TEST_CASE("zero-perturbation idempotence under flux-driven boundaries") {
    const auto g = build_grid(16, 16, 1.0, 1.0);
    GaussianFieldSpec fs;
    fs.normalization = XiNormalization::Range;
    fs.seed = 8;
    const CellField kappa = generate_gaussian(g, fs).K;
    Setup su = make_setup(g, 2, 2, kappa);
    su.bc = BoundarySpec::uniform(g, FaceBc::flux(-1.0), FaceBc::pressure(0.0), FaceBc::flux(0.0),
                                  FaceBc::flux(0.0));
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    const PerturbationState st = state_from(sol);
    SolveCounters c2;
    const MpmResult r = mpm_pressure_update(st, kappa, su.q, su.bc, c2);
    double umax = 0.0;
    for (int f = 0; f < g.face_count(); ++f) umax = std::max(umax, std::abs(sol.u[f]));
    for (int f = 0; f < g.face_count(); ++f)
        CHECK(r.u[f] == doctest::Approx(sol.u[f]).epsilon(1e-8).scale(umax));
    // the imposed inflow is reproduced exactly on the flux boundary
    for (int j = 0; j < g.ny; ++j)
        CHECK(r.u[g.vface(0, j)] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("uniform conductivity doubling is recovered exactly") {
    const auto g = build_grid(16, 16, 1.0, 1.0);
    CellField kappa(g, 1.0);
    Setup su = make_setup(g, 4, 4, kappa);
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    const PerturbationState st = state_from(sol);

    CellField kappa2(g, 2.0);
    SolveCounters c2;
    const MpmResult r = mpm_pressure_update(st, kappa2, su.q, su.bc, c2);
    for (int f = 0; f < g.face_count(); ++f)
        CHECK(r.u[f] == doctest::Approx(2.0 * sol.u[f]).epsilon(1e-9).scale(1.0));
    for (int cc = 0; cc < g.cell_count(); ++cc)
        CHECK(r.p[cc] == doctest::Approx(sol.p[cc]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("an MPM step performs exactly N particular and N downscale solves") {
    const auto g = build_grid(16, 16, 1.0, 1.0);
    GaussianFieldSpec fs;
    fs.normalization = XiNormalization::Range;
    fs.seed = 11;
    const CellField kappa = generate_gaussian(g, fs).K;
    Setup su = make_setup(g, 4, 4, kappa);
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    const PerturbationState st = state_from(sol);

    CellField kappa2 = kappa;
    for (auto& v : kappa2.v) v *= 1.003;
    SolveCounters c2;
    (void)mpm_pressure_update(st, kappa2, su.q, su.bc, c2);
    CHECK(c2.homogeneous == 0);
    CHECK(c2.particular == 16);
    CHECK(c2.downscale == 16);
    CHECK(c2.interface_solves == 1);
}

TEST_CASE("MPM reuses the stored interface matrix bytes") {
    const auto g = build_grid(8, 8, 1.0, 1.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.5, 2.0);
    CellField kappa(g);
    for (auto& v : kappa.v) v = dist(rng);
    Setup su = make_setup(g, 2, 2, kappa);
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    const PerturbationState st = state_from(sol);

    std::vector<double> bytes(sol.basis->iface_matrix.data(),
                              sol.basis->iface_matrix.data() + sol.basis->iface_matrix.size());
    CellField kappa2 = kappa;
    for (auto& v : kappa2.v) v *= 1.004;
    SolveCounters c2;
    (void)mpm_pressure_update(st, kappa2, su.q, su.bc, c2);
    CHECK(st.basis.get() == sol.basis.get());
    CHECK(std::memcmp(bytes.data(), st.basis->iface_matrix.data(),
                      bytes.size() * sizeof(double)) == 0);
}

TEST_CASE("MPM velocity is conservative under the new conductivity") {
    const auto g = build_grid(16, 16, 1.0, 1.0);
    GaussianFieldSpec fs;
    fs.normalization = XiNormalization::Range;
    fs.seed = 23;
    const CellField kappa = generate_gaussian(g, fs).K;
    Setup su = make_setup(g, 4, 4, kappa);
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    const PerturbationState st = state_from(sol);

    CellField kappa2 = kappa;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> bump(1.0, 1.02);
    for (auto& v : kappa2.v) v *= bump(rng);
    SolveCounters c2;
    const MpmResult r = mpm_pressure_update(st, kappa2, su.q, su.bc, c2);
    const CellField div = divergence(r.u);
    double scale = 0.0;
    for (int f = 0; f < g.face_count(); ++f)
        scale = std::max(scale, std::abs(r.u[f]) * g.face_area(f) / g.cell_volume());
    for (int cc = 0; cc < g.cell_count(); ++cc)
        CHECK(std::abs(div[cc] - su.q[cc]) <= 1e-10 * scale);
}

TEST_CASE("MPM accuracy stays comparable to a fresh MRCM solve") {
    // A moderately drifted conductivity: the reused-basis solution must stay
    // within a factor of two of a fresh multiscale solve at the same state.
    const auto g = build_grid(32, 32, 1.0, 1.0);
    GaussianFieldSpec fs;
    fs.normalization = XiNormalization::Range;
    fs.seed = 31;
    const CellField kappa = generate_gaussian(g, fs).K;
    Setup su = make_setup(g, 4, 4, kappa);
    SolveCounters c;
    const GlobalSolution sol = mrcm_solve(su.kappa, su.dd, su.space, su.beta, su.q, su.bc, c);
    const PerturbationState st = state_from(sol);

    // drift: smooth multiplicative field, about 0.5% in relative L2
    CellField kappa2 = kappa;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            kappa2(i, j) *= 1.0 + 0.01 * std::sin(3.0 * g.cell_cx(i)) * std::cos(2.0 * g.cell_cy(j));

    SolveCounters c2;
    const MpmResult mpm = mpm_pressure_update(st, kappa2, su.q, su.bc, c2);
    const RobinParameter beta2 = compute_beta(kappa2, *su.dd, AlphaSpec{});
    const GlobalSolution fresh = mrcm_solve(kappa2, su.dd, su.space, beta2, su.q, su.bc, c2);
    const LocalSolution fine = solve_cell_centered(kappa2, su.q, su.bc);

    auto flux_err = [&](const FaceField& u) {
        double num = 0.0, den = 0.0;
        for (int f = 0; f < g.face_count(); ++f) {
            const double w = g.face_area(f);
            num += w * (u[f] - fine.u[f]) * (u[f] - fine.u[f]);
            den += w * fine.u[f] * fine.u[f];
        }
        return std::sqrt(num / den);
    };
    CHECK(flux_err(mpm.u) <= 2.0 * flux_err(fresh.u) + 1e-12);
}
