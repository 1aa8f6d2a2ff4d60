#pragma once

#include <string>
#include <vector>

#include "epsim/dynamics.hpp"

namespace epsim {

/// Node values of a state on its quadrature grid: rho, u (dim per node), du (dim*dim per node,
/// du[c*dim+j] = d_j u_c) and grad Phi (dim per node).
struct NodeState {
    int dim = 1;
    double t = 0.0;
    std::vector<double> rho;
    std::vector<double> u;
    std::vector<double> du;
    std::vector<double> gphi;
};

NodeState node_state(const Simulator& sim, const SimState& s);

/// Energy functionals of node fields: kinetic, Poisson (when `poisson`), confinement, interaction.
EnergyReport energy_of(const Quadrature& quad, const CosineBasis& cb, const KernelSpec& kernels, bool poisson,
                       const std::vector<double>& rho, const std::vector<double>& u);

/// Energy report of a simulator state; residual = E + dissipations - E0, E including the
/// forcing potential.
EnergyReport total_energy(const Simulator& sim, const SimState& s, double E0);

struct RelativeEnergyReport {
    double t = 0.0;
    double kinetic = 0.0;
    double field = 0.0;
    double total = 0.0;
    /// -int rho (u-U) (x) (u-U) : grad U
    double convective = 0.0;
    /// -gamma int rho |u-U|^2
    double damping = 0.0;
    /// -1/2 int |dgradPhi|^2 div U
    double div_field = 0.0;
    /// int dgradPhi (x) dgradPhi : grad U and its trace bound 2 d field max|d_j U_i|
    double tensor_field = 0.0;
    double tensor_bound = 0.0;
    /// int rho (u-U) . grad W * (r - rho) and its bound
    /// 1/2 int rho |u-U|^2 + M (|D^2W|^2 |dgradPhi|^2_L2 + |grad W|^2 dM^2)
    double i1 = 0.0;
    double i1_bound = 0.0;
    /// max over nodes and entries of |d_j U_i|
    double grad_U_sup = 0.0;
};

/// Relative energy of (rho, u) against the reference (r, U) on a shared grid.
RelativeEnergyReport relative_energy(const NodeState& mv, const NodeState& ref, const Quadrature& quad,
                                     const KernelSpec& kernels);

struct GronwallResult {
    double slope = 0.0;
    double bound = 0.0;
    bool identically_zero = false;
    bool pass = false;
};

inline constexpr double kRelEnergyFloor = 1e-14;

/// Least-squares slope of log E_rel against t; pass iff slope <= c_fit (1 + grad_U_sup).
/// A series entirely below the floor is identically zero and passes.
GronwallResult gronwall_check(const std::vector<double>& t, const std::vector<double>& e_rel, double grad_U_sup,
                              double c_fit = 4.0);

struct IdentificationResiduals {
    double rho = 0.0;       ///< |rho - r|_L1
    double momentum = 0.0;  ///< |rho u - r U|_L1
    double flux = 0.0;      ///< |rho u (x) u - r U (x) U|_L1 (entrywise)
    double kinetic = 0.0;   ///< |rho |u|^2 - r |U|^2|_L1
    double field = 0.0;     ///< |grad Phi - grad Phi_r|_L2

    std::vector<double> values() const { return {rho, momentum, flux, kinetic, field}; }
    static std::vector<std::string> names() { return {"rho", "momentum", "flux", "kinetic", "field"}; }
};

IdentificationResiduals identification_residuals(const NodeState& mv, const NodeState& ref, const Quadrature& quad);

/// True when every entry is strictly smaller than its predecessor.
bool strictly_decreasing(const std::vector<double>& v);

/// max_k KE(t_k) / (E0 exp(-2 gamma t_k)) over the energy series; at most 1 + 1e-6 passes.
double kinetic_decay_ratio(const std::vector<EnergyReport>& energy, double E0, double gamma);

}  // namespace epsim
