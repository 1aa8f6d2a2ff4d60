#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "epsim/geometry.hpp"
#include "epsim/kernels.hpp"
#include "epsim/poisson.hpp"
#include "epsim/transport.hpp"

namespace epsim {

/// One additive term of an initial profile.
struct ProfileTerm {
    enum class Kind { Const, Cos, Sin, Gauss, Swirl } kind = Kind::Const;
    double amp = 0.0;
    int k = 1;
    double center = 0.5;
    double sigma = 0.1;

    std::string describe() const;
};

/// Sum of terms. Density terms: const(m), cos(a,k) = a prod_j cos(k pi x_j),
/// gauss(a,x0,sigma) = a exp(-|x-x0|^2/(2 sigma^2)). Velocity terms (every component):
/// sin(a,k) = a prod_j sin(k pi x_j), swirl(a) (d = 2, divergence free); empty means zero.
struct Profile {
    std::vector<ProfileTerm> terms;

    double scalar(const double* x, int dim) const;
    void vector(const double* x, int dim, double* u) const;
    std::string describe() const;
};

enum class SystemKind { EulerPoisson, EulerAlignment };
enum class IntegratorKind { Auto, RK4, IMEX };
/// Stationary forcing: the force density rho grad Psi_r with Psi_r = V + W * r + Phi_r frozen at
/// the initial density r, so that (r, 0) is an exact steady solution.
enum class ForcingKind { None, Stationary };

struct SimConfig {
    int dim = 1;
    int K = 16;
    int panels = 8;
    int order = 16;

    SystemKind system = SystemKind::EulerPoisson;
    bool poisson = true;
    bool advection = true;
    double eps = 0.0;
    KernelSpec kernels;
    ForcingKind forcing = ForcingKind::None;

    Profile rho0{{ProfileTerm{ProfileTerm::Kind::Const, 1.0}, ProfileTerm{ProfileTerm::Kind::Cos, 0.2, 1}}};
    Profile u0{{ProfileTerm{ProfileTerm::Kind::Sin, 0.1, 1}}};

    double T = 1.0;
    double dt = 0.01;
    double cfl = 0.5;
    double output_every = 0.1;
    IntegratorKind integrator = IntegratorKind::Auto;
    bool snapshots = true;
    std::uint64_t seed = 0;

    /// Default panel count and Gauss order for a dimension and mode count.
    static void default_resolution(int dim, int K, int& panels, int& order);
    bool is_reference() const { return eps == 0.0; }
    IntegratorKind resolved_integrator() const;
    /// Throws ConfigError on invalid combinations.
    void validate() const;
};

/// Additive Runge-Kutta tableau: explicit (a_e) and diagonally implicit (a_i) parts
/// sharing b and c.
struct AdditiveTableau {
    std::vector<std::vector<double>> ae;
    std::vector<std::vector<double>> ai;
    std::vector<double> b;
    std::vector<double> c;
    int stages() const { return int(b.size()); }
};

AdditiveTableau ark436l2sa();

/// Velocity coefficients plus the particle sample (positions X started at the nodes, fixed
/// masses w_q rho0(x_q)) and the recorded steps. flow, rho and phi are node caches, valid after
/// Simulator::refresh_nodes.
struct SimState {
    double t = 0.0;
    long step = 0;
    std::vector<double> c;
    std::vector<double> X;
    std::vector<double> m;
    std::vector<FlowStep> history;
    FlowState flow;
    std::vector<double> rho;
    PotentialState phi;
    double diss_friction = 0.0;
    double diss_eps = 0.0;
    double diss_alignment = 0.0;
};

/// Per-step alignment monitor (symmetrized dissipation, its mismatch against the force work,
/// and the largest component of the total alignment force).
struct AlignmentMonitor {
    double t = 0.0;
    double dissipation = 0.0;
    double work_mismatch = 0.0;
    double total_force = 0.0;
};

class Simulator;

struct EnergyReport {
    double t = 0.0;
    double kinetic = 0.0;
    double poisson = 0.0;
    double confinement = 0.0;
    double interaction = 0.0;
    double total = 0.0;
    double friction = 0.0;
    double eps_dissipation = 0.0;
    double alignment = 0.0;
    /// -int (rho - r) Psi_r for the stationary forcing, zero otherwise
    double forcing = 0.0;
    double residual = 0.0;
    double mass = 0.0;
    double min_rho = 0.0;
};

struct Trajectory {
    SimConfig config;
    std::vector<SimState> outputs;
    std::vector<EnergyReport> energy;
    std::vector<AlignmentMonitor> alignment;
    double mass0 = 0.0;
    double energy0 = 0.0;
    std::string status = "ok";
    std::string error;
};

class Simulator {
public:
    explicit Simulator(SimConfig cfg);

    const SimConfig& config() const { return cfg_; }
    const Quadrature& quad() const { return quad_; }
    const SineBasis& sine() const { return bases_.sine; }
    const CosineBasis& cosine() const { return bases_.cosine; }
    /// Mollified initial density P_K rho0 + eps.
    double rho0(const double* x) const;
    double mass0() const { return mass0_; }

    SimState initial_state() const;
    /// One step of size h; advances coefficients and particles, leaves the node caches stale.
    SimState step(const SimState& s, double h) const;
    /// Recomputes flow, rho and phi at the nodes by tracing the recorded steps back to t = 0.
    void refresh_nodes(SimState& s) const;
    /// The particle sample {X, m}.
    Sample particles(const SimState& s) const;
    /// Largest step allowed by dt and the characteristic step rule at this state.
    double max_step(const SimState& s) const;

    /// Velocity and gradient at the quadrature nodes of a state.
    void velocity_at_nodes(const SimState& s, std::vector<double>& u, std::vector<double>& du) const;
    std::vector<double> grad_phi_at_nodes(const SimState& s) const;
    /// Node sample {x_q, w_q rho(x_q)} from the node cache.
    Sample node_sample(const SimState& s) const;

    /// Mass matrix int rho omega_i . omega_j for the vector basis (block diagonal).
    std::vector<double> mass_matrix(const std::vector<double>& rho) const;
    /// Right-hand side M c' for coefficients c and the node sample of rho (the stepper evaluates
    /// the same terms on the particle sample).
    std::vector<double> assemble_rhs(const std::vector<double>& c, const std::vector<double>& rho) const;

    AlignmentMonitor monitor_alignment(const SimState& s) const;
    /// -sum_p m_p Psi_r(x_p) + int r Psi_r; zero without forcing.
    double forcing_energy(const Sample& mu) const;

    /// Runs to T; `on_output` fires at every output time (including t = 0). A failure is
    /// recorded in the trajectory status and the partial trajectory is returned.
    Trajectory simulate(const std::function<void(const SimState&, const EnergyReport&)>& on_output = {}) const;

private:
    struct StageEval;
    void evaluate_stage(const std::vector<double>& c, const Sample& pts, StageEval& out, bool need_rhs) const;

    AdditiveTableau tableau() const;

    SimConfig cfg_;
    Quadrature quad_;
    Bases bases_;
    std::vector<double> rho0_hat_;
    double rho0_mean_ = 0.0;
    double mass0_ = 0.0;
    void forcing_grad(const Sample& pts, std::vector<double>& g) const;

    Sample forcing_ref_;
    PotentialState forcing_phi_;
    double forcing_energy0_ = 0.0;
};

/// Runs one simulation per eps value with otherwise identical configuration.
std::vector<Trajectory> sweep_epsilon(const SimConfig& base, const std::vector<double>& eps_list);

}  // namespace epsim
