#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "epsim/kernels.hpp"

using namespace epsim;

namespace {

Kernel make(Kernel::Kind k, double p = 0.0) { return Kernel{k, p}; }

Sample random_sample(int d, std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    Sample s;
    s.dim = d;
    for (std::size_t i = 0; i < n * d; ++i) s.x.push_back(U(rng));
    for (std::size_t i = 0; i < n; ++i) s.m.push_back(0.5 + U(rng));
    return s;
}

std::vector<double> random_velocity(int d, std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<double> u(n * d);
    for (double& v : u) v = U(rng);
    return u;
}

}  // namespace

TEST_CASE("kernels are even and psi is nonnegative") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1, 1);
    for (auto k : {make(Kernel::Kind::Quadratic), make(Kernel::Kind::Gaussian, 0.3), make(Kernel::Kind::Constant, 2.0)})
        for (int t = 0; t < 100; ++t) {
            double z[2] = {U(rng), U(rng)}, mz[2] = {-z[0], -z[1]};
            CHECK(std::abs(k.value(z, 2) - k.value(mz, 2)) <= 1e-14);
            CHECK(k.value(z, 2) >= 0.0);
        }
}

TEST_CASE("convolution closed forms") {
    Quadrature q = make_quadrature(1, 8, 16);
    Field one{Rep::Nodal, 1, std::vector<double>(q.size(), 1.0)};
    for (auto path : {ConvolutionPath::Direct, ConvolutionPath::Fast}) {
        Field z = convolve(make(Kernel::Kind::None), one, q, path);
        for (double v : z.data) CHECK(v == 0.0);
        Field w = convolve(make(Kernel::Kind::Quadratic), one, q, path);
        for (std::size_t i = 0; i < q.size(); ++i) {
            double x = q.nodes[i];
            CHECK(std::abs(w.data[i] - (x * x - x + 1.0 / 3.0)) <= 1e-13);
        }
        Field rho{Rep::Nodal, 1, std::vector<double>(q.size())};
        for (std::size_t i = 0; i < q.size(); ++i) rho.data[i] = 1 + 0.5 * std::cos(kPi * q.nodes[i]);
        double M = integrate(rho.data, q);
        Field c = convolve(make(Kernel::Kind::Constant, 1.0), rho, q, path);
        for (double v : c.data) CHECK(std::abs(v - M) <= 1e-14);
    }
}

TEST_CASE("fast and direct convolution agree") {
    std::mt19937_64 rng(2);
    for (int d : {1, 2}) {
        Sample s = random_sample(d, 200, rng);
        for (auto k : {make(Kernel::Kind::Quadratic), make(Kernel::Kind::Constant, 0.7)}) {
            std::vector<double> v1(s.size()), v2(s.size()), g1(s.size() * d), g2(s.size() * d);
            convolve(k, s, s.x, v1.data(), g1.data(), ConvolutionPath::Direct);
            convolve(k, s, s.x, v2.data(), g2.data(), ConvolutionPath::Fast);
            for (std::size_t i = 0; i < v1.size(); ++i) CHECK(std::abs(v1[i] - v2[i]) <= 1e-10);
            for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(g1[i] - g2[i]) <= 1e-10);
        }
        auto u = random_velocity(d, s.size(), rng);
        auto a1 = alignment_acceleration(s, u, make(Kernel::Kind::Constant, 0.7), ConvolutionPath::Direct);
        auto a2 = alignment_acceleration(s, u, make(Kernel::Kind::Constant, 0.7), ConvolutionPath::Fast);
        for (std::size_t i = 0; i < a1.size(); ++i) CHECK(std::abs(a1[i] - a2[i]) <= 1e-10);
    }
}

TEST_CASE("confinement force against the closed form") {
    Quadrature q = make_quadrature(1, 8, 16);
    SineBasis b(1, 16);
    double M = 1.7;
    Sample s = sample_from_nodes(q, std::vector<double>(q.size(), M));
    KernelSpec spec;
    spec.v = Confinement{Confinement::Kind::Quadratic, 0.5};
    spec.w = make(Kernel::Kind::None);
    auto f = interaction_confinement_force(s, spec, b);
    for (int k = 1; k <= 16; ++k) {
        double exact = k % 2 == 0 ? M * std::numbers::sqrt2 / (k * kPi) : 0.0;
        CHECK(std::abs(f[k - 1] - exact) <= 1e-13);
    }
    Sample empty = sample_from_nodes(q, std::vector<double>(q.size(), 0.0));
    spec.w = make(Kernel::Kind::Gaussian, 0.2);
    for (double v : interaction_confinement_force(empty, spec, b)) CHECK(v == 0.0);
}

TEST_CASE("interaction conserves momentum and its energy is order independent") {
    std::mt19937_64 rng(3);
    for (int d : {1, 2}) {
        Sample s = random_sample(d, 300, rng);
        for (auto k : {make(Kernel::Kind::Quadratic), make(Kernel::Kind::Gaussian, 0.25)}) {
            std::vector<double> g(s.size() * d);
            convolve(k, s, s.x, nullptr, g.data(), ConvolutionPath::Direct);
            for (int j = 0; j < d; ++j) {
                double tot = 0.0;
                for (std::size_t p = 0; p < s.size(); ++p) tot += s.m[p] * g[p * d + j];
                CHECK(std::abs(tot) <= 1e-10);
            }
            double e1 = 0.0, e2 = 0.0;
            for (std::size_t p = 0; p < s.size(); ++p)
                for (std::size_t r = 0; r < s.size(); ++r) {
                    double z[2], zr[2];
                    for (int j = 0; j < d; ++j) {
                        z[j] = s.point(p)[j] - s.point(r)[j];
                        zr[j] = -z[j];
                    }
                    e1 += 0.5 * s.m[p] * s.m[r] * k.value(z, d);
                    e2 += 0.5 * s.m[r] * s.m[p] * k.value(zr, d);
                }
            CHECK(std::abs(e1 - e2) <= 1e-12 * std::abs(e1));
            CHECK(std::abs(interaction_energy(s, k) - e1) <= 1e-12 * std::abs(e1));
            CHECK(interaction_energy(s, k) >= 0.0);
        }
    }
}

TEST_CASE("alignment examples") {
    Quadrature q = make_quadrature(1, 8, 16);
    Sample s = sample_from_nodes(q, std::vector<double>(q.size(), 1.0));
    std::vector<double> uc(q.size(), 0.8), us(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) us[i] = std::sin(2 * kPi * q.nodes[i]);
    for (auto path : {ConvolutionPath::Direct, ConvolutionPath::Fast}) {
        for (double a : alignment_acceleration(s, uc, make(Kernel::Kind::Gaussian, 0.3), path)) CHECK(std::abs(a) <= 1e-14);
        auto a = alignment_acceleration(s, us, make(Kernel::Kind::Constant, 1.0), path);
        for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(a[i] + us[i]) <= 1e-13);
        for (double v : alignment_acceleration(s, us, make(Kernel::Kind::None), path)) CHECK(v == 0.0);
    }
    CHECK(alignment_dissipation(s, uc, make(Kernel::Kind::Gaussian, 0.3)) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("alignment dissipation identities") {
    std::mt19937_64 rng(4);
    for (int d : {1, 2}) {
        Sample s = random_sample(d, 250, rng);
        auto u = random_velocity(d, s.size(), rng);
        // constant kernel: M int rho |u|^2 - |int rho u|^2
        double M = s.total_mass(), e = 0.0, mom[2] = {0, 0};
        for (std::size_t p = 0; p < s.size(); ++p)
            for (int j = 0; j < d; ++j) {
                e += s.m[p] * u[p * d + j] * u[p * d + j];
                mom[j] += s.m[p] * u[p * d + j];
            }
        double expect = M * e - (mom[0] * mom[0] + mom[1] * mom[1]);
        CHECK(std::abs(alignment_dissipation(s, u, make(Kernel::Kind::Constant, 1.0)) - expect) <= 1e-10 * expect);
        for (auto k : {make(Kernel::Kind::Gaussian, 0.2), make(Kernel::Kind::Constant, 0.5)}) {
            double D = alignment_dissipation(s, u, k);
            CHECK(D >= -1e-12);
            auto a = alignment_acceleration(s, u, k, ConvolutionPath::Direct);
            double work = 0.0, tot[2] = {0, 0};
            for (std::size_t p = 0; p < s.size(); ++p)
                for (int j = 0; j < d; ++j) {
                    work += s.m[p] * a[p * d + j] * u[p * d + j];
                    tot[j] += s.m[p] * a[p * d + j];
                }
            CHECK(std::abs(D + work) <= 1e-8);
            for (int j = 0; j < d; ++j) CHECK(std::abs(tot[j]) <= 1e-10);
        }
    }
}
