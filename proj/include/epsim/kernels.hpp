#pragma once

#include <string>
#include <vector>

#include "epsim/geometry.hpp"
#include "epsim/poisson.hpp"

namespace epsim {

/// Confinement V(x) = 1/2 |x - center|^2 (center repeated on every axis), or zero.
struct Confinement {
    enum class Kind { None, Quadratic } kind = Kind::Quadratic;
    double center = 0.0;

    double value(const double* x, int dim) const;
    void grad(const double* x, int dim, double* g) const;
    std::string describe() const;
};

/// Even radial kernel: |z|^2, c (constant), exp(-|z|^2 / (2 sigma^2)), or zero.
struct Kernel {
    enum class Kind { None, Quadratic, Constant, Gaussian } kind = Kind::None;
    double param = 0.0;

    double value(const double* z, int dim) const;
    void grad(const double* z, int dim, double* g) const;
    /// sup over z of the spectral norm of the Hessian.
    double hessian_bound() const;
    /// sup over the box difference set [-1,1]^dim of |grad K|.
    double grad_bound(int dim) const;
    std::string describe() const;
};

struct KernelSpec {
    Confinement v;
    Kernel w;
    Kernel psi;
    double gamma = 1.0;
};

enum class ConvolutionPath { Direct, Fast };

/// (K * mu)(y_t) = sum_p m_p K(y_t - x_p) and its gradient at every target (grad may be null).
/// The Fast path uses closed forms for quadratic and constant kernels and falls back to
/// Direct otherwise.
void convolve(const Kernel& k, const Sample& mu, std::span<const double> targets, double* val, double* grad,
              ConvolutionPath path = ConvolutionPath::Fast);

/// Node-value convolution int K(x - y) f(y) dy at every quadrature node.
Field convolve(const Kernel& k, const Field& f, const Quadrature& quad, ConvolutionPath path = ConvolutionPath::Direct);

/// sum_p m_p f_p . omega_i for every vector sine mode (f holds dim entries per point).
std::vector<double> galerkin_project(const Sample& mu, const std::vector<double>& f, const SineBasis& basis);

/// -sum_p m_p (grad V + grad (W * mu))(x_p) . omega_i.
std::vector<double> interaction_confinement_force(const Sample& mu, const KernelSpec& spec, const SineBasis& basis,
                                                  ConvolutionPath path = ConvolutionPath::Fast);

/// Per-point alignment acceleration a_p = sum_q m_q psi(x_p - x_q) (u_q - u_p); the force
/// density at x_p is m_p a_p. `u` holds dim entries per point.
std::vector<double> alignment_acceleration(const Sample& mu, const std::vector<double>& u, const Kernel& psi,
                                           ConvolutionPath path = ConvolutionPath::Fast);

/// Galerkin projection of the alignment force density rho [(psi * rho u) - (psi * rho) u].
std::vector<double> alignment_force(const Sample& mu, const std::vector<double>& u, const Kernel& psi,
                                    const SineBasis& basis, ConvolutionPath path = ConvolutionPath::Fast);

/// 1/2 sum_{p,q} psi(x_p - x_q) m_p m_q |u_q - u_p|^2.
double alignment_dissipation(const Sample& mu, const std::vector<double>& u, const Kernel& psi);

double confinement_energy(const Sample& mu, const Confinement& v);
/// 1/2 sum_{p,q} m_p m_q W(x_p - x_q).
double interaction_energy(const Sample& mu, const Kernel& w);

}  // namespace epsim
