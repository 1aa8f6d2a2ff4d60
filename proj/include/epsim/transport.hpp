#pragma once

#include <functional>
#include <vector>

#include "epsim/geometry.hpp"

namespace epsim {

/// Explicit Runge-Kutta tableau driving the characteristics (strictly lower-triangular a).
struct ExplicitTableau {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::vector<double> c;
    int stages() const { return int(b.size()); }
};

ExplicitTableau classical_rk4();

enum class Interpolation { Gauss, Cubic };

/// Off-node reads of node values on the tensor quadrature grid. Gauss uses the panel-local
/// Lagrange polynomial through the panel's Gauss nodes; Cubic uses the four nearest nodes
/// per axis.
class GridInterpolator {
public:
    GridInterpolator(const Quadrature& quad, Interpolation kind);
    /// Interpolates `nf` node-major fields (nf values per node) at y.
    void eval(const double* y, const double* values, int nf, double* out) const;
    Interpolation kind() const { return kind_; }

private:
    void axis_weights(double y, int& first, int& count, double* w) const;

    const Quadrature* quad_;
    Interpolation kind_;
    std::vector<double> bary_;
};

/// Backward flow map B(t, x) ~ X(0; t, x) and divergence accumulator J at the quadrature nodes.
struct FlowState {
    int dim = 1;
    std::vector<double> B;
    std::vector<double> J;
    Interpolation stencil = Interpolation::Gauss;

    static FlowState identity(const Quadrature& quad, Interpolation stencil = Interpolation::Gauss);
};

/// Velocity u and gradient du[c*dim+j] of RK stage s at x.
using StageVelocity = std::function<void(int s, const double* x, double* u, double* du)>;

/// Forward map of one RK step from x0 with the given stage velocities; optional Jacobian G
/// (dim*dim, row-major) of the map.
void forward_characteristic(const ExplicitTableau& tab, const StageVelocity& vel, double h, int dim,
                            const double* x0, double* x1, double* G);

/// Preimage of x under the forward map (Newton); returns log det of the forward Jacobian at it.
double backward_characteristic(const ExplicitTableau& tab, const StageVelocity& vel, double h, int dim,
                               const double* x, double* x0);

/// B_{m+1}(x) = B_m(phi(x)), J_{m+1}(x) = J_m(phi(x)) + log det D(forward map)(phi(x)), phi the
/// exact preimage map of the discrete step. Throws CharacteristicEscape if phi(x) leaves the
/// closed box by more than 1e-12.
FlowState step_backward_flow(const FlowState& flow, const ExplicitTableau& tab, const StageVelocity& vel, double h,
                             const Quadrature& quad);

/// Stage velocity coefficients (sine basis) of one recorded step of the particle map.
struct FlowStep {
    double h = 0.0;
    std::vector<std::vector<double>> stage_coeffs;
};

/// Backward flow at the nodes by exact composition of the recorded one-step maps (newest
/// first), each inverted by Newton; no interpolation. Throws CharacteristicEscape like
/// step_backward_flow.
FlowState trace_flow(const std::vector<FlowStep>& history, const ExplicitTableau& tab, const SineBasis& basis,
                     const Quadrature& quad);

using ScalarFunction = std::function<double(const double*)>;

/// rho(x) = rho0(B(x)) exp(-J(x)) at the nodes; throws PositivityError on a nonpositive value.
std::vector<double> density(const FlowState& flow, const ScalarFunction& rho0, const Quadrature& quad);

double total_mass(const std::vector<double>& rho, const Quadrature& quad);

}  // namespace epsim
