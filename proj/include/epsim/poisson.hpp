#pragma once

#include <vector>

#include "epsim/geometry.hpp"

namespace epsim {

/// Point masses m_p located at x_p; the discrete stand-in for a density. A density
/// known at quadrature nodes becomes the sample {x_q, w_q rho(x_q)}.
struct Sample {
    int dim = 1;
    std::vector<double> x;
    std::vector<double> m;

    std::size_t size() const { return m.size(); }
    const double* point(std::size_t i) const { return x.data() + i * dim; }
    double total_mass() const;
};

Sample sample_from_nodes(const Quadrature& quad, const std::vector<double>& rho);

/// Neumann potential with zero mean: phi_hat_k = rho_hat_k / (pi^2 |k|^2).
struct PotentialState {
    int dim = 1;
    double mass = 0.0;
    std::vector<double> coeffs;

    /// int 1/2 |grad Phi|^2 by Parseval.
    double energy(const CosineBasis& basis) const;
    void grad_at(const CosineBasis& basis, const double* x, double* g) const;
    double value_at(const CosineBasis& basis, const double* x) const;
};

inline constexpr double kCompatibilityTol = 1e-10;

/// Throws CompatibilityError when |total mass - M| > 1e-10.
PotentialState solve_poisson(const Sample& rho, double M, const CosineBasis& basis);
PotentialState solve_poisson(const Field& rho_nodal, double M, const CosineBasis& basis, const Quadrature& quad);

/// grad Phi at every quadrature node (node-major, dim entries per node).
std::vector<double> grad_at_nodes(const PotentialState& s, const CosineBasis& basis, const Quadrature& quad);

/// int (grad Phi (x) grad Phi - 1/2 |grad Phi|^2 I) : grad omega_i for every vector sine mode;
/// equals int (rho - M) grad Phi . omega_i for band-limited rho.
std::vector<double> newform_tensor_term(const PotentialState& s, const CosineBasis& cb, const SineBasis& sb,
                                        const Quadrature& quad);

/// Momentum source of the potential in divergence form: the tensor term taken with a minus
/// sign, minus M int grad Phi . omega_i. Equals -int rho grad Phi . omega_i.
std::vector<double> poisson_force_weak(const PotentialState& s, const CosineBasis& cb, const SineBasis& sb,
                                       const Quadrature& quad);

/// |LHS - RHS| of
///   int [(r - M_r) grad Phi_rho + (rho - M_rho) grad Phi_r] . phi
///     = int [-grad Phi_rho . grad Phi_r div phi + (grad Phi_rho (x) grad Phi_r + grad Phi_r (x) grad Phi_rho) : grad phi]
/// with rho, r given at the quadrature nodes and phi a vector sine field (coefficients).
double check_newform_identity(const PotentialState& a, const std::vector<double>& rho_a, const PotentialState& b,
                              const std::vector<double>& rho_b, const std::vector<double>& phi_coeffs,
                              const CosineBasis& cb, const SineBasis& sb, const Quadrature& quad);

}  // namespace epsim
