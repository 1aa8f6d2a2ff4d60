#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "epsim/diagnostics.hpp"

using namespace epsim;

namespace {

struct Grid {
    Quadrature quad;
    Bases bases;
    Grid(int d, int K, int P) : quad(make_quadrature(d, P, 16)), bases(build_bases(d, K, quad)) {}
};

KernelSpec no_forces() {
    KernelSpec k;
    k.v.kind = Confinement::Kind::None;
    return k;
}

// Node state in one dimension from closed forms; grad Phi from the Poisson solve of rho.
NodeState state_1d(const Grid& g, double (*rho)(double), double (*u)(double), double (*du)(double)) {
    NodeState n;
    std::size_t N = g.quad.size();
    n.rho.resize(N);
    n.u.resize(N);
    n.du.resize(N);
    for (std::size_t q = 0; q < N; ++q) {
        double x = g.quad.nodes[q];
        n.rho[q] = rho(x);
        n.u[q] = u(x);
        n.du[q] = du(x);
    }
    auto p = solve_poisson(Field{Rep::Nodal, 1, n.rho}, integrate(n.rho, g.quad), g.bases.cosine, g.quad);
    n.gphi = grad_at_nodes(p, g.bases.cosine, g.quad);
    return n;
}

double one(double) { return 1.0; }
double zero(double) { return 0.0; }
double bump(double x) { return 1.0 + std::cos(2 * kPi * x); }
double mode1(double x) { return std::numbers::sqrt2 * std::sin(kPi * x); }
double dmode1(double x) { return std::numbers::sqrt2 * kPi * std::cos(kPi * x); }
double wave(double x) { return 0.3 * std::sin(kPi * x) + 0.1 * std::sin(3 * kPi * x); }
double dwave(double x) { return 0.3 * kPi * std::cos(kPi * x) + 0.3 * kPi * std::cos(3 * kPi * x); }
double lumpy(double x) { return 1.0 + 0.3 * std::cos(kPi * x) - 0.2 * std::cos(3 * kPi * x); }

}  // namespace

TEST_CASE("energy examples") {
    Grid g(1, 16, 8);
    std::size_t N = g.quad.size();
    std::vector<double> u(N, 0.0);

    EnergyReport rest = energy_of(g.quad, g.bases.cosine, no_forces(), true, std::vector<double>(N, 1.0), u);
    CHECK(std::abs(rest.total) <= 1e-14);
    CHECK(std::abs(rest.mass - 1.0) <= 1e-14);

    std::vector<double> rho(N);
    for (std::size_t q = 0; q < N; ++q) rho[q] = bump(g.quad.nodes[q]);
    EnergyReport e = energy_of(g.quad, g.bases.cosine, no_forces(), true, rho, u);
    CHECK(std::abs(e.poisson - 1 / (16 * kPi * kPi)) <= 1e-14);
    CHECK(std::abs(e.total - 1 / (16 * kPi * kPi)) <= 1e-14);
    CHECK(e.kinetic == 0.0);
    CHECK(std::abs(e.min_rho) <= 1e-3);

    // int 1/2 (x - 1/2)^2 = 1/24, 1/2 int int |x - y|^2 = 1/12, 1/2 int 2 sin^2(pi x) = 1/2
    KernelSpec k;
    k.v.kind = Confinement::Kind::Quadratic;
    k.v.center = 0.5;
    k.w.kind = Kernel::Kind::Quadratic;
    for (std::size_t q = 0; q < N; ++q) u[q] = mode1(g.quad.nodes[q]);
    EnergyReport f = energy_of(g.quad, g.bases.cosine, k, false, std::vector<double>(N, 1.0), u);
    CHECK(std::abs(f.confinement - 1.0 / 24) <= 1e-14);
    CHECK(std::abs(f.interaction - 1.0 / 12) <= 1e-13);
    CHECK(std::abs(f.kinetic - 0.5) <= 1e-14);
    CHECK(f.poisson == 0.0);
    CHECK(std::abs(f.total - (1.0 / 24 + 1.0 / 12 + 0.5)) <= 1e-13);
}

TEST_CASE("simulator energy of the rest state") {
    SimConfig c;
    c.kernels = no_forces();
    c.rho0 = Profile{{ProfileTerm{ProfileTerm::Kind::Const, 1.0}}};
    c.u0 = Profile{};
    Simulator sim(c);
    SimState s = sim.initial_state();
    EnergyReport e = total_energy(sim, s, 0.0);
    CHECK(std::abs(e.total) <= 1e-14);
    CHECK(std::abs(e.residual) <= 1e-14);
    CHECK(std::abs(e.mass - 1.0) <= 1e-14);
}

TEST_CASE("relative energy examples") {
    Grid g(1, 16, 8);
    KernelSpec k = no_forces();

    NodeState a = state_1d(g, lumpy, wave, dwave);
    RelativeEnergyReport same = relative_energy(a, a, g.quad, k);
    CHECK(same.total == 0.0);
    CHECK(same.convective == 0.0);
    CHECK(same.tensor_field == 0.0);

    // rho = 1, u - U = omega_1
    NodeState u = state_1d(g, one, mode1, dmode1), U = state_1d(g, one, zero, zero);
    RelativeEnergyReport r = relative_energy(u, U, g.quad, k);
    CHECK(std::abs(r.kinetic - 0.5) <= 1e-14);
    CHECK(std::abs(r.field) <= 1e-28);
    CHECK(std::abs(r.damping + 1.0) <= 1e-14);

    // field part only: rho = 1 + cos(2 pi x) against r = 1
    NodeState b = state_1d(g, bump, zero, zero), one_state = state_1d(g, one, zero, zero);
    RelativeEnergyReport f = relative_energy(b, one_state, g.quad, k);
    CHECK(std::abs(f.field - 1 / (16 * kPi * kPi)) <= 1e-14);
    CHECK(f.kinetic == 0.0);
    CHECK(std::abs(f.total - f.field) <= 1e-16);
}

TEST_CASE("relative energy right-hand side terms against closed forms") {
    Grid g(1, 16, 8);
    // rho = r = 1, u = omega_1, U = omega_1 + wave: convective = -int (wave)^2 dwave with a = -wave
    NodeState mv = state_1d(g, one, mode1, dmode1);
    NodeState ref = mv;
    for (std::size_t q = 0; q < g.quad.size(); ++q) {
        double x = g.quad.nodes[q];
        ref.u[q] += wave(x);
        ref.du[q] += dwave(x);
    }
    RelativeEnergyReport r = relative_energy(mv, ref, g.quad, no_forces());
    std::vector<double> conv(g.quad.size()), kin(g.quad.size());
    for (std::size_t q = 0; q < g.quad.size(); ++q) {
        double x = g.quad.nodes[q];
        conv[q] = -wave(x) * wave(x) * (dmode1(x) + dwave(x));
        kin[q] = 0.5 * wave(x) * wave(x);
    }
    CHECK(std::abs(r.convective - integrate(conv, g.quad)) <= 1e-14);
    CHECK(std::abs(r.kinetic - integrate(kin, g.quad)) <= 1e-15);
    // 1/2 int (0.3^2 sin^2 + 0.1^2 sin^2) = (0.09 + 0.01) / 4
    CHECK(std::abs(r.kinetic - 0.025) <= 1e-15);
    double gsup = std::numbers::sqrt2 * kPi + 0.3 * kPi + 0.3 * kPi;
    CHECK(std::abs(r.grad_U_sup - gsup) <= 1e-3 * gsup);
}

TEST_CASE("tensor and interaction bounds hold") {
    for (int d : {1, 2}) {
        Grid g(d, d == 1 ? 16 : 8, d == 1 ? 8 : 2);
        std::size_t N = g.quad.size();
        KernelSpec k = no_forces();
        k.w.kind = Kernel::Kind::Gaussian;
        k.w.param = 0.25;
        NodeState mv, ref;
        mv.dim = ref.dim = d;
        mv.rho.resize(N);
        ref.rho.resize(N);
        mv.u.resize(N * d);
        ref.u.resize(N * d);
        mv.du.assign(N * d * d, 0.0);
        ref.du.resize(N * d * d);
        for (std::size_t q = 0; q < N; ++q) {
            const double* x = g.quad.node(q);
            double c = 1.0, s = 1.0;
            for (int j = 0; j < d; ++j) {
                c *= std::cos(kPi * x[j]);
                s *= std::sin(kPi * x[j]);
            }
            mv.rho[q] = 1.0 + 0.4 * c;
            ref.rho[q] = 1.0 - 0.2 * c;
            for (int i = 0; i < d; ++i) {
                mv.u[q * d + i] = 0.2 * s;
                ref.u[q * d + i] = -0.5 * s * (i + 1);
                for (int j = 0; j < d; ++j) {
                    double dj = kPi;
                    for (int l = 0; l < d; ++l) dj *= l == j ? std::cos(kPi * x[l]) : std::sin(kPi * x[l]);
                    ref.du[(q * d + i) * d + j] = -0.5 * (i + 1) * dj;
                }
            }
        }
        for (NodeState* n : {&mv, &ref}) {
            auto p = solve_poisson(Field{Rep::Nodal, 1, n->rho}, integrate(n->rho, g.quad), g.bases.cosine, g.quad);
            n->gphi = grad_at_nodes(p, g.bases.cosine, g.quad);
        }
        RelativeEnergyReport r = relative_energy(mv, ref, g.quad, k);
        CHECK(r.kinetic > 0.0);
        CHECK(r.field > 0.0);
        CHECK(std::abs(r.tensor_field) <= r.tensor_bound);
        CHECK(std::abs(r.i1) <= r.i1_bound);
        CHECK(std::abs(r.div_field) <= d * r.field * r.grad_U_sup);
    }
}

TEST_CASE("gronwall fit") {
    std::vector<double> t, zero(11, 0.0), grow, decay, steep;
    for (int k = 0; k <= 10; ++k) {
        t.push_back(0.1 * k);
        grow.push_back(1e-6 * std::exp(2.0 * t.back()));
        decay.push_back(1e-3 * std::exp(-2.0 * t.back()));
        steep.push_back(1e-10 * std::exp(10.0 * t.back()));
    }
    GronwallResult z = gronwall_check(t, zero, 1.0);
    CHECK(z.identically_zero);
    CHECK(z.pass);

    GronwallResult g = gronwall_check(t, grow, 0.0);
    CHECK(std::abs(g.slope - 2.0) <= 1e-12);
    CHECK(g.bound == 4.0);
    CHECK(g.pass);

    GronwallResult d = gronwall_check(t, decay, 0.0);
    CHECK(std::abs(d.slope + 2.0) <= 1e-12);
    CHECK(d.pass);

    CHECK_FALSE(gronwall_check(t, steep, 0.0).pass);
    CHECK(gronwall_check(t, steep, 2.0).pass);
}

TEST_CASE("identification residuals") {
    Grid g(1, 16, 8);
    NodeState a = state_1d(g, lumpy, wave, dwave);
    for (double v : identification_residuals(a, a, g.quad).values()) CHECK(v == 0.0);

    // rho = 1, u = 1 against r = 1, U = 0: momentum, flux and kinetic residuals are 1
    NodeState u = state_1d(g, one, one, zero), U = state_1d(g, one, zero, zero);
    IdentificationResiduals r = identification_residuals(u, U, g.quad);
    CHECK(std::abs(r.rho) <= 1e-15);
    CHECK(std::abs(r.momentum - 1.0) <= 1e-14);
    CHECK(std::abs(r.flux - 1.0) <= 1e-14);
    CHECK(std::abs(r.kinetic - 1.0) <= 1e-14);
    CHECK(std::abs(r.field) <= 1e-14);

    // field residual: |grad Phi|_L2 of rho = 1 + cos(2 pi x) is sqrt(1/(8 pi^2))
    NodeState b = state_1d(g, bump, zero, zero);
    IdentificationResiduals f = identification_residuals(b, U, g.quad);
    CHECK(std::abs(f.field - std::sqrt(1 / (8 * kPi * kPi))) <= 1e-14);
    CHECK(std::abs(f.rho - 2 / kPi) <= 1e-3);
    CHECK(IdentificationResiduals::names().size() == f.values().size());
}

TEST_CASE("decrease and decay helpers") {
    CHECK(strictly_decreasing({3.0, 2.0, 1.0}));
    CHECK_FALSE(strictly_decreasing({3.0, 3.0, 1.0}));
    CHECK_FALSE(strictly_decreasing({1.0, 2.0}));
    CHECK(strictly_decreasing({}));

    std::vector<EnergyReport> series(3);
    for (int k = 0; k < 3; ++k) {
        series[k].t = 0.5 * k;
        series[k].kinetic = 2.0 * std::exp(-2.0 * series[k].t) * (k == 2 ? 0.5 : 1.0);
    }
    CHECK(std::abs(kinetic_decay_ratio(series, 2.0, 1.0) - 1.0) <= 1e-15);
    CHECK(kinetic_decay_ratio(series, 2.0, 2.0) > 1.0);
}

TEST_CASE("node state of a run matches its energy report") {
    SimConfig c;
    c.kernels.v.center = 0.5;
    c.T = 0.2;
    Simulator sim(c);
    Trajectory tr = sim.simulate();
    REQUIRE(tr.status == "ok");
    const SimState& s = tr.outputs.back();
    NodeState n = node_state(sim, s);
    EnergyReport e = energy_of(sim.quad(), sim.cosine(), c.kernels, c.poisson, n.rho, n.u);
    CHECK(std::abs(e.total - (tr.energy.back().total - tr.energy.back().forcing)) <= 1e-14);
    RelativeEnergyReport r = relative_energy(n, n, sim.quad(), c.kernels);
    CHECK(r.total == 0.0);
}
