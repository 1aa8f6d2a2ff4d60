#include "epsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace epsim {

NodeState node_state(const Simulator& sim, const SimState& s) {
    NodeState n;
    n.dim = sim.config().dim;
    n.t = s.t;
    n.rho = s.rho;
    sim.velocity_at_nodes(s, n.u, n.du);
    if (sim.config().poisson)
        n.gphi = sim.grad_phi_at_nodes(s);
    else
        n.gphi.assign(s.rho.size() * n.dim, 0.0);
    return n;
}

EnergyReport energy_of(const Quadrature& quad, const CosineBasis& cb, const KernelSpec& kernels, bool poisson,
                       const std::vector<double>& rho, const std::vector<double>& u) {
    int d = quad.dim;
    EnergyReport e;
    Sample smp = sample_from_nodes(quad, rho);
    KahanSum ke;
    for (std::size_t q = 0; q < smp.size(); ++q) {
        double u2 = 0.0;
        for (int j = 0; j < d; ++j) u2 += u[q * d + j] * u[q * d + j];
        ke.add(0.5 * smp.m[q] * u2);
    }
    e.kinetic = ke.value();
    e.mass = smp.total_mass();
    if (poisson) e.poisson = solve_poisson(smp, e.mass, cb).energy(cb);
    e.confinement = confinement_energy(smp, kernels.v);
    e.interaction = interaction_energy(smp, kernels.w);
    e.total = e.kinetic + e.poisson + e.confinement + e.interaction;
    e.min_rho = *std::min_element(rho.begin(), rho.end());
    return e;
}

EnergyReport total_energy(const Simulator& sim, const SimState& s, double E0) {
    std::vector<double> u, du;
    sim.velocity_at_nodes(s, u, du);
    const SimConfig& cfg = sim.config();
    EnergyReport e = energy_of(sim.quad(), sim.cosine(), cfg.kernels, cfg.poisson, s.rho, u);
    e.t = s.t;
    e.friction = s.diss_friction;
    e.eps_dissipation = s.diss_eps;
    e.alignment = s.diss_alignment;
    e.forcing = sim.forcing_energy(sim.node_sample(s));
    e.total += e.forcing;
    e.residual = e.total + e.friction + e.eps_dissipation + e.alignment - E0;
    return e;
}

RelativeEnergyReport relative_energy(const NodeState& mv, const NodeState& ref, const Quadrature& quad,
                                     const KernelSpec& kernels) {
    int d = quad.dim;
    std::size_t N = quad.size();
    RelativeEnergyReport r;
    r.t = mv.t;

    std::vector<double> gw_r(N * d, 0.0), gw_m(N * d, 0.0);
    Sample sm = sample_from_nodes(quad, mv.rho), sr = sample_from_nodes(quad, ref.rho);
    if (kernels.w.kind != Kernel::Kind::None) {
        convolve(kernels.w, sr, quad.nodes, nullptr, gw_r.data(), ConvolutionPath::Direct);
        convolve(kernels.w, sm, quad.nodes, nullptr, gw_m.data(), ConvolutionPath::Direct);
    }

    KahanSum kin, fld, conv, damp, divf, tens, i1;
    double gsup = 0.0;
    for (std::size_t q = 0; q < N; ++q) {
        double w = quad.weights[q], rho = mv.rho[q];
        double a[2], g[2];
        double a2 = 0.0, g2 = 0.0;
        for (int i = 0; i < d; ++i) {
            a[i] = mv.u[q * d + i] - ref.u[q * d + i];
            g[i] = mv.gphi[q * d + i] - ref.gphi[q * d + i];
            a2 += a[i] * a[i];
            g2 += g[i] * g[i];
        }
        const double* DU = ref.du.data() + q * d * d;
        double aa = 0.0, gg = 0.0, div = 0.0, ai1 = 0.0;
        for (int i = 0; i < d; ++i) {
            div += DU[i * d + i];
            ai1 += a[i] * (gw_r[q * d + i] - gw_m[q * d + i]);
            for (int j = 0; j < d; ++j) {
                aa += a[i] * a[j] * DU[i * d + j];
                gg += g[i] * g[j] * DU[i * d + j];
                gsup = std::max(gsup, std::abs(DU[i * d + j]));
            }
        }
        kin.add(0.5 * w * rho * a2);
        fld.add(0.5 * w * g2);
        conv.add(-w * rho * aa);
        damp.add(-kernels.gamma * w * rho * a2);
        divf.add(-0.5 * w * g2 * div);
        tens.add(w * gg);
        i1.add(w * rho * ai1);
    }
    r.kinetic = kin.value();
    r.field = fld.value();
    r.total = r.kinetic + r.field;
    r.convective = conv.value();
    r.damping = damp.value();
    r.div_field = divf.value();
    r.tensor_field = tens.value();
    r.grad_U_sup = gsup;
    r.tensor_bound = 2.0 * d * r.field * gsup;
    r.i1 = i1.value();
    double M = sm.total_mass(), dM = sr.total_mass() - M;
    double H = kernels.w.hessian_bound(), G = kernels.w.grad_bound(d);
    r.i1_bound = r.kinetic + M * (H * H * 2.0 * r.field + G * G * dM * dM);
    return r;
}

GronwallResult gronwall_check(const std::vector<double>& t, const std::vector<double>& e_rel, double grad_U_sup,
                              double c_fit) {
    GronwallResult g;
    g.bound = c_fit * (1.0 + grad_U_sup);
    std::vector<double> x, y;
    for (std::size_t k = 0; k < t.size() && k < e_rel.size(); ++k)
        if (e_rel[k] >= kRelEnergyFloor) {
            x.push_back(t[k]);
            y.push_back(std::log(e_rel[k]));
        }
    if (x.size() < 2) {
        g.identically_zero = x.empty();
        g.pass = g.identically_zero;
        return g;
    }
    double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    g.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    g.pass = g.slope <= g.bound;
    return g;
}

IdentificationResiduals identification_residuals(const NodeState& mv, const NodeState& ref, const Quadrature& quad) {
    int d = quad.dim;
    IdentificationResiduals r;
    KahanSum a, b, c, e, f;
    for (std::size_t q = 0; q < quad.size(); ++q) {
        double w = quad.weights[q], rho = mv.rho[q], rr = ref.rho[q];
        const double* u = mv.u.data() + q * d;
        const double* U = ref.u.data() + q * d;
        a.add(w * std::abs(rho - rr));
        double mom = 0.0, flux = 0.0, u2 = 0.0, U2 = 0.0, g2 = 0.0;
        for (int i = 0; i < d; ++i) {
            mom += std::abs(rho * u[i] - rr * U[i]);
            for (int j = 0; j < d; ++j) flux += std::abs(rho * u[i] * u[j] - rr * U[i] * U[j]);
            u2 += u[i] * u[i];
            U2 += U[i] * U[i];
            double g = mv.gphi[q * d + i] - ref.gphi[q * d + i];
            g2 += g * g;
        }
        b.add(w * mom);
        c.add(w * flux);
        e.add(w * std::abs(rho * u2 - rr * U2));
        f.add(w * g2);
    }
    r.rho = a.value();
    r.momentum = b.value();
    r.flux = c.value();
    r.kinetic = e.value();
    r.field = std::sqrt(f.value());
    return r;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

double kinetic_decay_ratio(const std::vector<EnergyReport>& energy, double E0, double gamma) {
    double worst = 0.0;
    for (const auto& e : energy) worst = std::max(worst, e.kinetic / (E0 * std::exp(-2.0 * gamma * e.t)));
    return worst;
}

}  // namespace epsim
