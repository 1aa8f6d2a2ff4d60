#include "epsim/poisson.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "epsim/errors.hpp"

namespace epsim {

double Sample::total_mass() const {
    KahanSum s;
    for (double v : m) s.add(v);
    return s.value();
}

Sample sample_from_nodes(const Quadrature& quad, const std::vector<double>& rho) {
    Sample s;
    s.dim = quad.dim;
    s.x = quad.nodes;
    s.m.resize(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i) s.m[i] = quad.weights[i] * rho[i];
    return s;
}

double PotentialState::energy(const CosineBasis& basis) const {
    KahanSum s;
    for (std::size_t k = 0; k < coeffs.size(); ++k) s.add(0.5 * basis.eigenvalue(k) * coeffs[k] * coeffs[k]);
    return s.value();
}

void PotentialState::grad_at(const CosineBasis& basis, const double* x, double* g) const {
    std::size_t n = basis.size();
    std::vector<double> val(n), grad(n * dim);
    basis.eval(x, val.data(), grad.data());
    for (int j = 0; j < dim; ++j) g[j] = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        for (int j = 0; j < dim; ++j) g[j] += coeffs[k] * grad[k * dim + j];
}

double PotentialState::value_at(const CosineBasis& basis, const double* x) const {
    std::vector<double> val(basis.size());
    basis.eval(x, val.data(), nullptr);
    double s = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) s += coeffs[k] * val[k];
    return s;
}

PotentialState solve_poisson(const Sample& rho, double M, const CosineBasis& basis) {
    double total = rho.total_mass();
    if (std::abs(total - M) > kCompatibilityTol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "Poisson source incompatible: total mass %.17g differs from M = %.17g by %.3e",
                      total, M, total - M);
        throw CompatibilityError(buf);
    }
    std::size_t n = basis.size();
    std::vector<KahanSum> acc(n);
    std::vector<double> val(n);
    for (std::size_t p = 0; p < rho.size(); ++p) {
        basis.eval(rho.point(p), val.data(), nullptr);
        for (std::size_t k = 0; k < n; ++k) acc[k].add(rho.m[p] * val[k]);
    }
    PotentialState s;
    s.dim = basis.dim();
    s.mass = M;
    s.coeffs.resize(n);
    for (std::size_t k = 0; k < n; ++k) s.coeffs[k] = acc[k].value() / basis.eigenvalue(k);
    return s;
}

PotentialState solve_poisson(const Field& rho, double M, const CosineBasis& basis, const Quadrature& quad) {
    if (rho.rep != Rep::Nodal || rho.components != 1) throw DomainError("solve_poisson expects scalar node values");
    return solve_poisson(sample_from_nodes(quad, rho.data), M, basis);
}

std::vector<double> grad_at_nodes(const PotentialState& s, const CosineBasis& basis, const Quadrature& quad) {
    int d = quad.dim;
    std::vector<double> g(quad.size() * d);
    for (std::size_t q = 0; q < quad.size(); ++q) s.grad_at(basis, quad.node(q), g.data() + q * d);
    return g;
}

std::vector<double> newform_tensor_term(const PotentialState& s, const CosineBasis& cb, const SineBasis& sb,
                                        const Quadrature& quad) {
    int d = quad.dim;
    std::size_t n = sb.size();
    std::vector<KahanSum> acc(d * n);
    std::vector<double> val(n), grad(n * d);
    for (std::size_t q = 0; q < quad.size(); ++q) {
        double g[2];
        s.grad_at(cb, quad.node(q), g);
        double g2 = 0.0;
        for (int j = 0; j < d; ++j) g2 += g[j] * g[j];
        sb.eval(quad.node(q), val.data(), grad.data());
        double w = quad.weights[q];
        for (int c = 0; c < d; ++c)
            for (std::size_t m = 0; m < n; ++m) {
                // row c of T = g g^T - 1/2 |g|^2 I contracted with grad of e_c phi_m
                double t = 0.0;
                for (int j = 0; j < d; ++j) t += (g[c] * g[j] - (c == j ? 0.5 * g2 : 0.0)) * grad[m * d + j];
                acc[c * n + m].add(w * t);
            }
    }
    std::vector<double> out(d * n);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[i].value();
    return out;
}

std::vector<double> poisson_force_weak(const PotentialState& s, const CosineBasis& cb, const SineBasis& sb,
                                       const Quadrature& quad) {
    int d = quad.dim;
    std::size_t n = sb.size();
    std::vector<double> out = newform_tensor_term(s, cb, sb, quad);
    std::vector<KahanSum> acc(d * n);
    std::vector<double> val(n);
    for (std::size_t q = 0; q < quad.size(); ++q) {
        double g[2];
        s.grad_at(cb, quad.node(q), g);
        sb.eval(quad.node(q), val.data(), nullptr);
        for (int c = 0; c < d; ++c)
            for (std::size_t m = 0; m < n; ++m) acc[c * n + m].add(quad.weights[q] * g[c] * val[m]);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i] - s.mass * acc[i].value();
    return out;
}

double check_newform_identity(const PotentialState& a, const std::vector<double>& rho_a, const PotentialState& b,
                              const std::vector<double>& rho_b, const std::vector<double>& phi,
                              const CosineBasis& cb, const SineBasis& sb, const Quadrature& quad) {
    int d = quad.dim;
    KahanSum lhs, rhs;
    for (std::size_t q = 0; q < quad.size(); ++q) {
        const double* x = quad.node(q);
        double ga[2], gb[2], u[2], du[4];
        a.grad_at(cb, x, ga);
        b.grad_at(cb, x, gb);
        eval_velocity(sb, phi.data(), x, u, du);
        double w = quad.weights[q];
        double l = 0.0, dot = 0.0, div = 0.0, sym = 0.0;
        for (int c = 0; c < d; ++c) {
            l += ((rho_b[q] - b.mass) * ga[c] + (rho_a[q] - a.mass) * gb[c]) * u[c];
            dot += ga[c] * gb[c];
            div += du[c * d + c];
            for (int j = 0; j < d; ++j) sym += (ga[c] * gb[j] + gb[c] * ga[j]) * du[c * d + j];
        }
        lhs.add(w * l);
        rhs.add(w * (-dot * div + sym));
    }
    return std::abs(lhs.value() - rhs.value());
}

}  // namespace epsim
