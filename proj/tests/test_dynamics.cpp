#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "epsim/diagnostics.hpp"
#include "epsim/dynamics.hpp"
#include "epsim/errors.hpp"

using namespace epsim;

namespace {

ProfileTerm term(ProfileTerm::Kind k, double a, int mode = 1) {
    ProfileTerm t;
    t.kind = k;
    t.amp = a;
    t.k = mode;
    return t;
}

SimConfig bare() {
    SimConfig c;
    c.poisson = false;
    c.kernels.v.kind = Confinement::Kind::None;
    c.kernels.w.kind = Kernel::Kind::None;
    c.kernels.psi.kind = Kernel::Kind::None;
    c.rho0 = Profile{{term(ProfileTerm::Kind::Const, 1.0)}};
    c.u0 = Profile{};
    return c;
}

// Confinement, repulsive Gaussian interaction, Poisson and friction, with the stationary forcing
// holding the initial density in balance so the perturbed flow stays smooth.
SimConfig smooth_all_forces() {
    SimConfig c;
    c.kernels.v.kind = Confinement::Kind::Quadratic;
    c.kernels.v.center = 0.5;
    c.kernels.w.kind = Kernel::Kind::Gaussian;
    c.kernels.w.param = 0.25;
    c.kernels.gamma = 1.0;
    c.forcing = ForcingKind::Stationary;
    c.u0 = Profile{{term(ProfileTerm::Kind::Sin, 0.1, 1), term(ProfileTerm::Kind::Sin, 0.05, 2)}};
    return c;
}

// Composite Simpson with many panels, independent of the Gauss rule.
double simpson(const std::function<double(double)>& f, int n = 20000) {
    double h = 1.0 / n, s = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return s * h / 3;
}

double omega(int k, double x) { return std::sqrt(2.0) * std::sin(k * kPi * x); }
double domega(int k, double x) { return std::sqrt(2.0) * k * kPi * std::cos(k * kPi * x); }

}  // namespace

TEST_CASE("mass matrix examples") {
    SimConfig c = bare();
    Simulator sim(c);
    const Quadrature& q = sim.quad();
    std::size_t n = sim.sine().size();

    std::vector<double> one(q.size(), 1.0);
    auto M = sim.mass_matrix(one);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(M[i * n + j] - (i == j ? 1.0 : 0.0)) <= 1e-12);

    std::vector<double> rho(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) rho[i] = 1 + 0.1 * omega(1, q.nodes[i]);
    M = sim.mass_matrix(rho);
    double oracle = 1 + 0.1 * simpson([](double x) { return std::pow(omega(1, x), 3); });
    CHECK(std::abs(oracle - (1 + 0.1 * 8 * std::sqrt(2.0) / (3 * kPi))) <= 1e-12);
    CHECK(std::abs(M[0] - oracle) <= 1e-12);
    CHECK(std::abs(M[0] - 1.12004) <= 1e-5);

    for (std::size_t i = 0; i < q.size(); ++i) {
        double x = q.nodes[i];
        rho[i] = 0.3 + x * x + 0.2 * std::cos(7 * x);
    }
    M = sim.mass_matrix(rho);
    Eigen::Map<Eigen::MatrixXd> A(M.data(), n, n);
    double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().minCoeff();
    CHECK(lmin >= *std::min_element(rho.begin(), rho.end()) - 1e-12);
}

TEST_CASE("rest state is stationary") {
    SimConfig c = bare();
    c.poisson = true;
    Simulator sim(c);
    SimState s0 = sim.initial_state();
    for (double v : s0.phi.coeffs) CHECK(std::abs(v) <= 1e-15);
    auto rhs = sim.assemble_rhs(s0.c, s0.rho);
    for (double v : rhs) CHECK(std::abs(v) <= 1e-14);
    SimState s1 = sim.step(s0, 0.01);
    sim.refresh_nodes(s1);
    for (double v : s1.c) CHECK(std::abs(v) <= 1e-14);
    for (std::size_t i = 0; i < s1.rho.size(); ++i) CHECK(std::abs(s1.rho[i] - s0.rho[i]) <= 1e-14);
    Trajectory tr = sim.simulate();
    REQUIRE(tr.status == "ok");
    REQUIRE(tr.energy.size() == 11);
    for (const auto& e : tr.energy) {
        CHECK(std::abs(e.total) <= 1e-14);
        CHECK(std::abs(e.residual) <= 1e-14);
    }
}

TEST_CASE("regularization enters the right-hand side diagonally") {
    SimConfig c = bare();
    c.advection = false;
    c.kernels.gamma = 0.0;
    c.eps = 1e-3;
    c.rho0 = Profile{{term(ProfileTerm::Kind::Const, 1.0 - c.eps)}};
    Simulator sim(c);
    SimState s = sim.initial_state();
    std::vector<double> e1(s.c.size(), 0.0);
    e1[0] = 1.0;
    auto rhs = sim.assemble_rhs(e1, s.rho);
    CHECK(std::abs(rhs[0] + c.eps * sim.sine().eigenvalue(0)) <= 1e-12 * sim.sine().eigenvalue(0));
    for (std::size_t i = 1; i < rhs.size(); ++i) CHECK(std::abs(rhs[i]) <= 1e-12);
}

TEST_CASE("convection term against integration by parts") {
    SimConfig c = bare();
    c.kernels.gamma = 0.0;
    Simulator sim(c);
    SimState s = sim.initial_state();
    std::vector<double> e1(s.c.size(), 0.0);
    e1[0] = 1.0;
    auto rhs = sim.assemble_rhs(e1, s.rho);
    for (int i = 1; i <= 16; ++i) {
        // -int u u' omega_i = 1/2 int u^2 omega_i'
        double oracle = 0.5 * simpson([i](double x) { return omega(1, x) * omega(1, x) * domega(i, x); });
        CHECK(std::abs(rhs[i - 1] - oracle) <= 1e-10);
    }
}

TEST_CASE("additive tableau order and coupling conditions") {
    AdditiveTableau t = ark436l2sa();
    int S = t.stages();
    auto row = [&](const std::vector<std::vector<double>>& A, int i, int j) {
        return j < int(A[i].size()) ? A[i][j] : 0.0;
    };
    const std::vector<std::vector<double>>* As[2] = {&t.ae, &t.ai};
    double sb = 0;
    for (int i = 0; i < S; ++i) sb += t.b[i];
    CHECK(std::abs(sb - 1) <= 1e-14);
    for (int X = 0; X < 2; ++X) {
        const auto& A = *As[X];
        for (int i = 0; i < S; ++i) {
            double rs = 0;
            for (int j = 0; j < S; ++j) rs += row(A, i, j);
            CHECK(std::abs(rs - t.c[i]) <= 1e-11);
        }
    }
    auto bc = [&](int p) {
        double s = 0;
        for (int i = 0; i < S; ++i) s += t.b[i] * std::pow(t.c[i], p);
        return s;
    };
    CHECK(std::abs(bc(1) - 0.5) <= 1e-12);
    CHECK(std::abs(bc(2) - 1.0 / 3) <= 1e-12);
    CHECK(std::abs(bc(3) - 0.25) <= 1e-12);
    for (int X = 0; X < 2; ++X) {
        const auto& A = *As[X];
        double bac = 0, bcac = 0, bac2 = 0;
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                bac += t.b[i] * row(A, i, j) * t.c[j];
                bcac += t.b[i] * t.c[i] * row(A, i, j) * t.c[j];
                bac2 += t.b[i] * row(A, i, j) * t.c[j] * t.c[j];
            }
        CHECK(std::abs(bac - 1.0 / 6) <= 1e-11);
        CHECK(std::abs(bcac - 1.0 / 8) <= 1e-11);
        CHECK(std::abs(bac2 - 1.0 / 12) <= 1e-11);
        for (int Y = 0; Y < 2; ++Y) {
            const auto& B = *As[Y];
            double baac = 0;
            for (int i = 0; i < S; ++i)
                for (int j = 0; j < S; ++j)
                    for (int k = 0; k < S; ++k) baac += t.b[i] * row(A, i, j) * row(B, j, k) * t.c[k];
            CHECK(std::abs(baac - 1.0 / 24) <= 1e-11);
        }
    }
}

TEST_CASE("pure damping follows the closed form") {
    SimConfig c = bare();
    c.advection = false;
    c.u0 = Profile{{term(ProfileTerm::Kind::Sin, 0.1, 1), term(ProfileTerm::Kind::Sin, 0.05, 3)}};
    Simulator sim(c);
    Trajectory tr = sim.simulate();
    REQUIRE(tr.status == "ok");
    const auto& c0 = tr.outputs.front().c;
    const auto& cT = tr.outputs.back().c;
    for (std::size_t k = 0; k < c0.size(); ++k) {
        double exact = c0[k] * std::exp(-1.0);
        if (std::abs(c0[k]) > 1e-12) CHECK(std::abs(cT[k] - exact) <= 1e-6 * std::abs(exact));
    }

    SimConfig e = bare();
    e.advection = false;
    e.eps = 1e-3;
    e.rho0 = Profile{{term(ProfileTerm::Kind::Const, 1.0 - e.eps)}};
    e.u0 = Profile{{term(ProfileTerm::Kind::Sin, 0.1, 1)}};
    Simulator se(e);
    CHECK(e.resolved_integrator() == IntegratorKind::IMEX);
    Trajectory te = se.simulate();
    REQUIRE(te.status == "ok");
    double exact = te.outputs.front().c[0] * std::exp(-(1.0 + e.eps * se.sine().eigenvalue(0)));
    CHECK(std::abs(te.outputs.back().c[0] - exact) <= 1e-6 * std::abs(exact));
    // kinetic energy matches the closed form too
    double ke = 0.5 * exact * exact;
    CHECK(std::abs(te.energy.back().kinetic - ke) <= 1e-6 * ke);
}

TEST_CASE("smooth run conserves mass and satisfies the energy inequality") {
    for (double eps : {0.0, 1e-3}) {
        SimConfig c = smooth_all_forces();
        c.eps = eps;
        c.dt = 0.005;
        Simulator sim(c);
        Trajectory tr = sim.simulate();
        REQUIRE(tr.status == "ok");
        for (const auto& e : tr.energy) {
            CHECK(std::abs(e.mass - tr.mass0) <= 1e-8 * tr.mass0);
            CHECK(e.total + e.friction + e.eps_dissipation <= tr.energy0 * (1 + 1e-6));
            CHECK(e.min_rho > 0.0);
        }
    }
}

TEST_CASE("stationary forcing holds the initial state") {
    SimConfig c = smooth_all_forces();
    c.u0 = Profile{};
    c.T = 0.2;
    Simulator sim(c);
    Trajectory tr = sim.simulate();
    REQUIRE(tr.status == "ok");
    for (double v : tr.outputs.back().c) CHECK(std::abs(v) <= 1e-12);
    for (std::size_t i = 0; i < tr.outputs.back().rho.size(); ++i)
        CHECK(std::abs(tr.outputs.back().rho[i] - tr.outputs.front().rho[i]) <= 1e-12);
}

TEST_CASE("alignment system dissipates and conserves momentum") {
    SimConfig c = smooth_all_forces();
    c.system = SystemKind::EulerAlignment;
    c.poisson = false;
    c.kernels.psi.kind = Kernel::Kind::Gaussian;
    c.kernels.psi.param = 0.25;
    c.T = 0.3;
    Simulator sim(c);
    Trajectory tr = sim.simulate();
    REQUIRE(tr.status == "ok");
    REQUIRE(tr.alignment.size() > 10);
    for (const auto& a : tr.alignment) {
        CHECK(a.dissipation >= -1e-12);
        CHECK(a.work_mismatch <= 1e-8);
        CHECK(a.total_force <= 1e-10);
    }
    for (const auto& e : tr.energy) CHECK(e.total + e.friction + e.alignment <= tr.energy0 * (1 + 1e-6));
}

TEST_CASE("two-dimensional smoke run") {
    SimConfig c = smooth_all_forces();
    c.dim = 2;
    c.K = 8;
    SimConfig::default_resolution(2, 8, c.panels, c.order);
    c.u0 = Profile{{ProfileTerm{ProfileTerm::Kind::Swirl, 0.1}}};
    c.T = 0.2;
    Simulator sim(c);
    Trajectory tr = sim.simulate();
    REQUIRE(tr.status == "ok");
    for (const auto& e : tr.energy) {
        CHECK(std::abs(e.mass - tr.mass0) <= 1e-8 * tr.mass0);
        CHECK(e.residual <= 1e-6 * std::max(tr.energy0, 1.0));
    }
}

TEST_CASE("global error drops sixteenfold under step halving") {
    SimConfig c = smooth_all_forces();
    c.T = 0.5;
    c.output_every = 0.5;
    auto final_c = [&](double dt) {
        SimConfig k = c;
        k.dt = dt;
        Trajectory tr = Simulator(k).simulate();
        REQUIRE(tr.status == "ok");
        return tr.outputs.back().c;
    };
    auto ref = final_c(0.025 / 8);
    double err[2];
    for (int r = 0; r < 2; ++r) {
        auto v = final_c(0.025 / (1 << r));
        double e = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) e = std::max(e, std::abs(v[i] - ref[i]));
        err[r] = e;
    }
    CHECK(err[0] / err[1] >= 16 * 0.8);
    CHECK(err[0] / err[1] <= 16 * 1.2);
}

TEST_CASE("identical configurations give identical trajectories") {
    SimConfig c = smooth_all_forces();
    c.T = 0.3;
    Trajectory a = Simulator(c).simulate(), b = Simulator(c).simulate();
    REQUIRE(a.outputs.size() == b.outputs.size());
    for (std::size_t k = 0; k < a.outputs.size(); ++k) {
        CHECK(a.outputs[k].c == b.outputs[k].c);
        CHECK(a.outputs[k].rho == b.outputs[k].rho);
    }
}

TEST_CASE("invalid configurations are rejected") {
    SimConfig c;
    c.eps = -1;
    CHECK_THROWS_AS(Simulator{c}, ConfigError);
    SimConfig r;
    r.panels = 1;
    r.order = 8;
    CHECK_THROWS_AS(Simulator{r}, ConfigError);
    SimConfig p = bare();
    p.rho0 = Profile{{term(ProfileTerm::Kind::Cos, 1.0, 1)}};
    CHECK_THROWS_AS(Simulator{p}, PositivityError);
}
