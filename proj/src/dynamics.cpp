#include "epsim/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "epsim/diagnostics.hpp"
#include "epsim/errors.hpp"

namespace epsim {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

}  // namespace

std::string ProfileTerm::describe() const {
    switch (kind) {
        case Kind::Const: return "const(" + num(amp) + ")";
        case Kind::Cos: return "cos(" + num(amp) + "," + std::to_string(k) + ")";
        case Kind::Sin: return "sin(" + num(amp) + "," + std::to_string(k) + ")";
        case Kind::Gauss: return "gauss(" + num(amp) + "," + num(center) + "," + num(sigma) + ")";
        case Kind::Swirl: return "swirl(" + num(amp) + ")";
    }
    return "";
}

double Profile::scalar(const double* x, int dim) const {
    double v = 0.0;
    for (const auto& t : terms) {
        switch (t.kind) {
            case ProfileTerm::Kind::Const: v += t.amp; break;
            case ProfileTerm::Kind::Cos: {
                double p = t.amp;
                for (int j = 0; j < dim; ++j) p *= std::cos(t.k * kPi * x[j]);
                v += p;
                break;
            }
            case ProfileTerm::Kind::Sin: {
                double p = t.amp;
                for (int j = 0; j < dim; ++j) p *= std::sin(t.k * kPi * x[j]);
                v += p;
                break;
            }
            case ProfileTerm::Kind::Gauss: {
                double r2 = 0.0;
                for (int j = 0; j < dim; ++j) r2 += (x[j] - t.center) * (x[j] - t.center);
                v += t.amp * std::exp(-r2 / (2 * t.sigma * t.sigma));
                break;
            }
            case ProfileTerm::Kind::Swirl: break;
        }
    }
    return v;
}

void Profile::vector(const double* x, int dim, double* u) const {
    for (int j = 0; j < dim; ++j) u[j] = 0.0;
    for (const auto& t : terms) {
        if (t.kind == ProfileTerm::Kind::Swirl) {
            double sx = std::sin(kPi * x[0]), sy = std::sin(kPi * x[1]);
            u[0] += t.amp * sx * sx * std::sin(2 * kPi * x[1]);
            u[1] -= t.amp * std::sin(2 * kPi * x[0]) * sy * sy;
            continue;
        }
        Profile single{{t}};
        double v = single.scalar(x, dim);
        for (int j = 0; j < dim; ++j) u[j] += v;
    }
}

std::string Profile::describe() const {
    if (terms.empty()) return "zero";
    std::string s;
    for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? " + " : "") + terms[i].describe();
    return s;
}

void SimConfig::default_resolution(int dim, int K, int& panels, int& order) {
    order = 16;
    int need = std::max(4 * K, dim == 1 ? 128 : 32);
    panels = std::max(1, (need + order - 1) / order);
}

IntegratorKind SimConfig::resolved_integrator() const {
    if (integrator != IntegratorKind::Auto) return integrator;
    return eps == 0.0 ? IntegratorKind::RK4 : IntegratorKind::IMEX;
}

void SimConfig::validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("dimension must be 1 or 2");
    if (K < 1) throw ConfigError("modes must be >= 1");
    if (!(eps >= 0.0)) throw ConfigError("eps must be >= 0");
    if (!(kernels.gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    if (!(T > 0.0)) throw ConfigError("T must be > 0");
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (!(cfl > 0.0)) throw ConfigError("cfl must be > 0");
    if (!(output_every > 0.0)) throw ConfigError("output_every must be > 0");
    if (panels * order < 2 * K + 2)
        throw ConfigError("quadrature with " + std::to_string(panels * order) + " nodes per axis underresolves K = " +
                          std::to_string(K));
    for (const auto& t : u0.terms)
        if (t.kind == ProfileTerm::Kind::Swirl && dim != 2) throw ConfigError("swirl velocity requires dimension 2");
    if (kernels.w.kind == Kernel::Kind::Constant) throw ConfigError("interaction kernel must be quadratic, gaussian or none");
    if (kernels.psi.kind == Kernel::Kind::Quadratic) throw ConfigError("alignment kernel must be constant, gaussian or none");
    if (kernels.psi.kind == Kernel::Kind::Constant && kernels.psi.param < 0)
        throw ConfigError("alignment kernel must be nonnegative");
    if ((kernels.psi.kind == Kernel::Kind::Gaussian || kernels.w.kind == Kernel::Kind::Gaussian) &&
        ((kernels.psi.kind == Kernel::Kind::Gaussian && !(kernels.psi.param > 0)) ||
         (kernels.w.kind == Kernel::Kind::Gaussian && !(kernels.w.param > 0))))
        throw ConfigError("gaussian kernel width must be > 0");
}

AdditiveTableau ark436l2sa() {
    AdditiveTableau t;
    t.c = {0.0, 0.5, 83.0 / 250, 31.0 / 50, 17.0 / 20, 1.0};
    t.b = {82889.0 / 524892, 0.0, 15625.0 / 83664, 69875.0 / 102672, -2260.0 / 8211, 0.25};
    t.ae = {{},
            {0.5},
            {13861.0 / 62500, 6889.0 / 62500},
            {-116923316275.0 / 2393684061468, -2731218467317.0 / 15368042101831, 9408046702089.0 / 11113171139209},
            {-451086348788.0 / 2902428689909, -2682348792572.0 / 7519795681897, 12662868775082.0 / 11960479115383,
             3355817975965.0 / 11060851509271},
            {647845179188.0 / 3216320057751, 73281519250.0 / 8382639484533, 552539513391.0 / 3454668386233,
             3354512671639.0 / 8306763924573, 4040.0 / 17871}};
    t.ai = {{0.0},
            {0.25, 0.25},
            {8611.0 / 62500, -1743.0 / 31250, 0.25},
            {5012029.0 / 34652500, -654441.0 / 2922500, 174375.0 / 388108, 0.25},
            {15267082809.0 / 155376265600, -71443401.0 / 120774400, 730878875.0 / 902184768, 2285395.0 / 8070912, 0.25},
            {82889.0 / 524892, 0.0, 15625.0 / 83664, 69875.0 / 102672, -2260.0 / 8211, 0.25}};
    return t;
}

namespace {

AdditiveTableau rk4_as_additive() {
    ExplicitTableau e = classical_rk4();
    AdditiveTableau t;
    t.ae = e.a;
    t.ai = e.a;
    for (int s = 0; s < e.stages(); ++s) t.ai[s].push_back(0.0);
    t.b = e.b;
    t.c = e.c;
    return t;
}

}  // namespace

struct Simulator::StageEval {
    Mat phi;                    // sine values, points x modes
    std::vector<Mat> dphi;      // per-axis sine derivatives
    Mat block;                  // scalar mass block
    Eigen::LLT<Mat> llt;
    std::vector<double> u, du;  // velocity and gradient at the points
    std::vector<double> fe;     // explicit coefficient derivative
    double rate_friction = 0.0, rate_alignment = 0.0, rate_eps = 0.0;
};

Simulator::Simulator(SimConfig cfg) : cfg_((cfg.validate(), std::move(cfg))),
                                      quad_(make_quadrature(cfg_.dim, cfg_.panels, cfg_.order)),
                                      bases_(build_bases(cfg_.dim, cfg_.K, quad_)) {
    int d = cfg_.dim;
    std::size_t N = quad_.size();
    Field f{Rep::Nodal, 1, std::vector<double>(N)};
    for (std::size_t q = 0; q < N; ++q) f.data[q] = cfg_.rho0.scalar(quad_.node(q), d);
    rho0_mean_ = integrate(f.data, quad_);
    rho0_hat_ = project(f, bases_.cosine, quad_).data;
    std::vector<double> rho(N);
    for (std::size_t q = 0; q < N; ++q) {
        rho[q] = rho0(quad_.node(q));
        if (!(rho[q] > 0.0))
            throw PositivityError("mollified initial density is not positive at node " + std::to_string(q));
    }
    mass0_ = integrate(rho, quad_);

    if (cfg_.forcing == ForcingKind::Stationary) {
        forcing_ref_ = sample_from_nodes(quad_, rho);
        forcing_phi_ = solve_poisson(forcing_ref_, forcing_ref_.total_mass(), bases_.cosine);
        forcing_energy0_ = forcing_energy(forcing_ref_);
    }
}

void Simulator::forcing_grad(const Sample& pts, std::vector<double>& g) const {
    int d = cfg_.dim;
    std::size_t N = pts.size();
    g.assign(N * d, 0.0);
    if (cfg_.forcing == ForcingKind::None) return;
    convolve(cfg_.kernels.w, forcing_ref_, pts.x, nullptr, g.data(), ConvolutionPath::Fast);
    for (std::size_t p = 0; p < N; ++p) {
        double gv[2], gp[2] = {0.0, 0.0};
        cfg_.kernels.v.grad(pts.point(p), d, gv);
        if (cfg_.poisson) forcing_phi_.grad_at(bases_.cosine, pts.point(p), gp);
        for (int j = 0; j < d; ++j) g[p * d + j] += gv[j] + gp[j];
    }
}

double Simulator::forcing_energy(const Sample& mu) const {
    if (cfg_.forcing == ForcingKind::None) return 0.0;
    std::vector<double> w(mu.size(), 0.0);
    convolve(cfg_.kernels.w, forcing_ref_, mu.x, w.data(), nullptr, ConvolutionPath::Fast);
    KahanSum e;
    for (std::size_t p = 0; p < mu.size(); ++p) {
        double psi = w[p] + cfg_.kernels.v.value(mu.point(p), cfg_.dim);
        if (cfg_.poisson) psi += forcing_phi_.value_at(bases_.cosine, mu.point(p));
        e.add(-mu.m[p] * psi);
    }
    return e.value() - forcing_energy0_;
}

double Simulator::rho0(const double* x) const {
    std::vector<double> val(bases_.cosine.size());
    bases_.cosine.eval(x, val.data(), nullptr);
    double s = rho0_mean_;
    for (std::size_t k = 0; k < val.size(); ++k) s += rho0_hat_[k] * val[k];
    return s + cfg_.eps;
}

SimState Simulator::initial_state() const {
    int d = cfg_.dim;
    std::size_t N = quad_.size();
    SimState s;
    Field u{Rep::Nodal, d, std::vector<double>(N * d)};
    for (std::size_t q = 0; q < N; ++q) cfg_.u0.vector(quad_.node(q), d, u.data.data() + q * d);
    s.c = project(u, bases_.sine, quad_).data;
    s.flow = FlowState::identity(quad_);
    s.rho = density(s.flow, [this](const double* x) { return rho0(x); }, quad_);
    Sample smp = sample_from_nodes(quad_, s.rho);
    s.X = smp.x;
    s.m = smp.m;
    s.phi = solve_poisson(smp, smp.total_mass(), bases_.cosine);
    return s;
}

void Simulator::refresh_nodes(SimState& s) const {
    AdditiveTableau tab = tableau();
    s.flow = trace_flow(s.history, ExplicitTableau{tab.ae, tab.b, tab.c}, bases_.sine, quad_);
    s.rho = density(s.flow, [this](const double* x) { return rho0(x); }, quad_);
    Sample smp = node_sample(s);
    s.phi = solve_poisson(smp, smp.total_mass(), bases_.cosine);
}

Sample Simulator::particles(const SimState& s) const { return Sample{cfg_.dim, s.X, s.m}; }

AdditiveTableau Simulator::tableau() const {
    return cfg_.resolved_integrator() == IntegratorKind::IMEX ? ark436l2sa() : rk4_as_additive();
}

Sample Simulator::node_sample(const SimState& s) const { return sample_from_nodes(quad_, s.rho); }

void Simulator::velocity_at_nodes(const SimState& s, std::vector<double>& u, std::vector<double>& du) const {
    int d = cfg_.dim;
    std::size_t N = quad_.size();
    u.resize(N * d);
    du.resize(N * d * d);
    for (std::size_t q = 0; q < N; ++q)
        eval_velocity(bases_.sine, s.c.data(), quad_.node(q), u.data() + q * d, du.data() + q * d * d);
}

std::vector<double> Simulator::grad_phi_at_nodes(const SimState& s) const {
    return grad_at_nodes(s.phi, bases_.cosine, quad_);
}

double Simulator::max_step(const SimState& s) const {
    std::vector<double> u, du;
    velocity_at_nodes(s, u, du);
    double umax = 0.0;
    for (std::size_t q = 0; q < quad_.size(); ++q) {
        double n2 = 0.0;
        for (int j = 0; j < cfg_.dim; ++j) n2 += u[q * cfg_.dim + j] * u[q * cfg_.dim + j];
        umax = std::max(umax, std::sqrt(n2));
    }
    double h = cfg_.dt;
    if (cfg_.advection && umax > 0.0) h = std::min(h, cfg_.cfl * quad_.spacing() / umax);
    return h;
}

std::vector<double> Simulator::mass_matrix(const std::vector<double>& rho) const {
    int d = cfg_.dim;
    std::size_t n = bases_.sine.size(), nv = d * n;
    std::vector<double> M(nv * nv, 0.0), val(n);
    Mat phi(quad_.size(), n);
    Vec m(quad_.size());
    for (std::size_t q = 0; q < quad_.size(); ++q) {
        bases_.sine.eval(quad_.node(q), val.data(), nullptr);
        for (std::size_t k = 0; k < n; ++k) phi(q, k) = val[k];
        m(q) = quad_.weights[q] * rho[q];
    }
    Mat block = phi.transpose() * (phi.array().colwise() * m.array()).matrix();
    for (int c = 0; c < d; ++c)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) M[(c * n + i) * nv + c * n + j] = block(i, j);
    return M;
}

void Simulator::evaluate_stage(const std::vector<double>& c, const Sample& pts, StageEval& e, bool geometry_only) const {
    int d = cfg_.dim;
    std::size_t n = bases_.sine.size();
    long N = long(pts.size());
    if (e.phi.rows() != N) {
        e.phi.resize(N, n);
        e.dphi.assign(d, Mat(N, n));
        std::vector<double> val(n), grad(n * d);
        for (long p = 0; p < N; ++p) {
            bases_.sine.eval(pts.point(p), val.data(), grad.data());
            for (std::size_t k = 0; k < n; ++k) {
                e.phi(p, k) = val[k];
                for (int j = 0; j < d; ++j) e.dphi[j](p, k) = grad[k * d + j];
            }
        }
        Vec m = Eigen::Map<const Vec>(pts.m.data(), N);
        e.block = e.phi.transpose() * (e.phi.array().colwise() * m.array()).matrix();
        e.llt.compute(e.block);
        if (e.llt.info() != Eigen::Success) throw FactorizationError("mass matrix factorization failed");
    }
    if (geometry_only) return;

    // velocity and gradient at the points
    e.u.assign(N * d, 0.0);
    e.du.assign(N * d * d, 0.0);
    for (int comp = 0; comp < d; ++comp) {
        Eigen::Map<const Vec> cc(c.data() + comp * n, n);
        Vec uc = e.phi * cc;
        for (long p = 0; p < N; ++p) e.u[p * d + comp] = uc(p);
        for (int j = 0; j < d; ++j) {
            Vec g = e.dphi[j] * cc;
            for (long p = 0; p < N; ++p) e.du[(p * d + comp) * d + j] = g(p);
        }
    }

    const KernelSpec& ks = cfg_.kernels;
    std::vector<double> acc(N * d, 0.0);
    std::vector<double> gw(N * d, 0.0);
    convolve(ks.w, pts, pts.x, nullptr, gw.data(), ConvolutionPath::Fast);
    std::vector<double> gphi(N * d, 0.0);
    if (cfg_.poisson) {
        const CosineBasis& cb = bases_.cosine;
        std::size_t nc = cb.size();
        std::vector<double> val(nc), grad(nc * d);
        std::vector<KahanSum> hat(nc);
        Mat cgrad(N * d, nc);
        for (long p = 0; p < N; ++p) {
            cb.eval(pts.point(p), val.data(), grad.data());
            for (std::size_t k = 0; k < nc; ++k) {
                hat[k].add(pts.m[p] * val[k]);
                for (int j = 0; j < d; ++j) cgrad(p * d + j, k) = grad[k * d + j];
            }
        }
        Vec coef(nc);
        for (std::size_t k = 0; k < nc; ++k) coef(k) = hat[k].value() / cb.eigenvalue(k);
        Vec g = cgrad * coef;
        for (long i = 0; i < N * d; ++i) gphi[i] = g(i);
    }
    std::vector<double> gf;
    forcing_grad(pts, gf);
    std::vector<double> align;
    if (cfg_.system == SystemKind::EulerAlignment) align = alignment_acceleration(pts, e.u, ks.psi, ConvolutionPath::Fast);

    double fr = 0.0, al = 0.0;
    for (long p = 0; p < N; ++p) {
        const double* x = pts.point(p);
        const double* u = e.u.data() + p * d;
        const double* du = e.du.data() + p * d * d;
        double gv[2];
        ks.v.grad(x, d, gv);
        double u2 = 0.0, au = 0.0;
        for (int i = 0; i < d; ++i) {
            double a = -ks.gamma * u[i] - gv[i] - gw[p * d + i] - gphi[p * d + i] + gf[p * d + i];
            if (cfg_.advection)
                for (int j = 0; j < d; ++j) a -= du[i * d + j] * u[j];
            if (!align.empty()) {
                a += align[p * d + i];
                au += align[p * d + i] * u[i];
            }
            acc[p * d + i] = a;
            u2 += u[i] * u[i];
        }
        fr += pts.m[p] * u2;
        al -= pts.m[p] * au;
    }
    e.rate_friction = ks.gamma * fr;
    e.rate_alignment = al;

    double eps_rate = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) eps_rate += bases_.sine.eigenvalue(i % n) * c[i] * c[i];
    e.rate_eps = cfg_.eps * eps_rate;


    bool implicit = cfg_.resolved_integrator() == IntegratorKind::IMEX;
    e.fe.assign(d * n, 0.0);
    Vec m = Eigen::Map<const Vec>(pts.m.data(), N);
    for (int comp = 0; comp < d; ++comp) {
        Vec ma(N);
        for (long p = 0; p < N; ++p) ma(p) = m(p) * acc[p * d + comp];
        Vec rhs = e.phi.transpose() * ma;
        for (std::size_t k = 0; k < n; ++k) {
            if (!implicit) rhs(k) -= cfg_.eps * bases_.sine.eigenvalue(k) * c[comp * n + k];
        }
        Vec sol = e.llt.solve(rhs);
        for (std::size_t k = 0; k < n; ++k) e.fe[comp * n + k] = sol(k);
    }
}

std::vector<double> Simulator::assemble_rhs(const std::vector<double>& c, const std::vector<double>& rho) const {
    Sample pts = sample_from_nodes(quad_, rho);
    StageEval e;
    evaluate_stage(c, pts, e, false);
    // return M fe, the assembled right-hand side, including the eps term
    int d = cfg_.dim;
    std::size_t n = bases_.sine.size();
    std::vector<double> out(d * n);
    bool implicit = cfg_.resolved_integrator() == IntegratorKind::IMEX;
    for (int comp = 0; comp < d; ++comp) {
        Vec r = e.block * Eigen::Map<const Vec>(e.fe.data() + comp * n, n);
        for (std::size_t k = 0; k < n; ++k)
            out[comp * n + k] = r(k) - (implicit ? cfg_.eps * bases_.sine.eigenvalue(k) * c[comp * n + k] : 0.0);
    }
    return out;
}

SimState Simulator::step(const SimState& s0, double h) const {
    int d = cfg_.dim;
    std::size_t n = bases_.sine.size(), nv = d * n;
    bool implicit = cfg_.resolved_integrator() == IntegratorKind::IMEX;
    AdditiveTableau tab = tableau();
    int S = tab.stages();

    Sample base = particles(s0);
    std::size_t N = base.size();
    std::vector<std::vector<double>> cs(S), fe(S), fi(S, std::vector<double>(nv, 0.0)), xdot(S);
    std::vector<StageEval> ev(S);
    for (int s = 0; s < S; ++s) {
        Sample pts = base;
        if (cfg_.advection)
            for (int r = 0; r < s; ++r) {
                double a = tab.ae[s][r];
                if (a == 0.0) continue;
                for (std::size_t i = 0; i < N * d; ++i) pts.x[i] += h * a * xdot[r][i];
            }
        evaluate_stage({}, pts, ev[s], true);

        std::vector<double> r(s0.c);
        for (int j = 0; j < s; ++j)
            for (std::size_t i = 0; i < nv; ++i) r[i] += h * (tab.ae[s][j] * fe[j][i] + tab.ai[s][j] * fi[j][i]);
        double g = implicit ? tab.ai[s][s] : 0.0;
        if (implicit && g != 0.0 && cfg_.eps > 0.0) {
            Mat A = ev[s].block;
            for (std::size_t k = 0; k < n; ++k) A(k, k) += h * g * cfg_.eps * bases_.sine.eigenvalue(k);
            Eigen::LLT<Mat> llt(A);
            if (llt.info() != Eigen::Success) throw FactorizationError("implicit stage factorization failed");
            cs[s].resize(nv);
            for (int comp = 0; comp < d; ++comp) {
                Vec rhs = ev[s].block * Eigen::Map<const Vec>(r.data() + comp * n, n);
                Vec sol = llt.solve(rhs);
                for (std::size_t k = 0; k < n; ++k) {
                    cs[s][comp * n + k] = sol(k);
                    fi[s][comp * n + k] = (sol(k) - r[comp * n + k]) / (h * g);
                }
            }
        } else {
            cs[s] = r;
            if (implicit && cfg_.eps > 0.0)
                for (int comp = 0; comp < d; ++comp) {
                    Vec rhs(n);
                    for (std::size_t k = 0; k < n; ++k) rhs(k) = -cfg_.eps * bases_.sine.eigenvalue(k) * r[comp * n + k];
                    Vec sol = ev[s].llt.solve(rhs);
                    for (std::size_t k = 0; k < n; ++k) fi[s][comp * n + k] = sol(k);
                }
        }
        evaluate_stage(cs[s], pts, ev[s], false);
        fe[s] = ev[s].fe;
        xdot[s] = ev[s].u;
    }

    SimState out = s0;
    for (int s = 0; s < S; ++s) {
        double w = h * tab.b[s];
        for (std::size_t i = 0; i < nv; ++i) out.c[i] += w * (fe[s][i] + fi[s][i]);
        out.diss_friction += w * ev[s].rate_friction;
        out.diss_alignment += w * ev[s].rate_alignment;
        out.diss_eps += w * ev[s].rate_eps;
    }
    out.t = s0.t + h;
    out.step = s0.step + 1;
    if (cfg_.advection) {
        for (int s = 0; s < S; ++s)
            for (std::size_t i = 0; i < N * d; ++i) out.X[i] += h * tab.b[s] * xdot[s][i];
        for (std::size_t i = 0; i < N * d; ++i) {
            double excess = std::max(-out.X[i], out.X[i] - 1.0);
            if (excess > 1e-12) throw CharacteristicEscape("particle left the domain by " + std::to_string(excess));
            out.X[i] = std::clamp(out.X[i], 0.0, 1.0);
        }
        out.history.push_back(FlowStep{h, cs});
    }
    return out;
}

AlignmentMonitor Simulator::monitor_alignment(const SimState& s) const {
    AlignmentMonitor m;
    m.t = s.t;
    Sample smp = particles(s);
    int d = cfg_.dim;
    std::vector<double> u(smp.size() * d);
    for (std::size_t p = 0; p < smp.size(); ++p)
        eval_velocity(bases_.sine, s.c.data(), smp.point(p), u.data() + p * d, nullptr);
    m.dissipation = alignment_dissipation(smp, u, cfg_.kernels.psi);
    auto a = alignment_acceleration(smp, u, cfg_.kernels.psi, ConvolutionPath::Direct);
    KahanSum work, tot[2];
    for (std::size_t p = 0; p < smp.size(); ++p)
        for (int j = 0; j < d; ++j) {
            work.add(smp.m[p] * a[p * d + j] * u[p * d + j]);
            tot[j].add(smp.m[p] * a[p * d + j]);
        }
    m.work_mismatch = std::abs(m.dissipation + work.value());
    m.total_force = std::max(std::abs(tot[0].value()), std::abs(tot[1].value()));
    return m;
}

Trajectory Simulator::simulate(const std::function<void(const SimState&, const EnergyReport&)>& on_output) const {
    Trajectory tr;
    tr.config = cfg_;
    tr.mass0 = mass0_;
    bool align = cfg_.system == SystemKind::EulerAlignment && cfg_.kernels.psi.kind != Kernel::Kind::None;
    try {
        SimState s = initial_state();
        EnergyReport e0 = total_energy(*this, s, 0.0);
        tr.energy0 = e0.total;
        e0.residual = 0.0;
        auto record = [&](const SimState& st, const EnergyReport& er) {
            tr.energy.push_back(er);
            if (cfg_.snapshots) tr.outputs.push_back(st);
            if (on_output) on_output(st, er);
        };
        record(s, e0);
        if (align) tr.alignment.push_back(monitor_alignment(s));
        long k = 0;
        while (s.t < cfg_.T * (1 - 1e-14)) {
            ++k;
            double t_next = std::min(cfg_.T, k * cfg_.output_every);
            if (t_next <= s.t) continue;
            double span = t_next - s.t;
            double hmax = max_step(s);
            long nsteps = std::max(1L, long(std::ceil(span / hmax * (1 - 1e-12))));
            double h = span / nsteps;
            for (long i = 0; i < nsteps; ++i) {
                s = step(s, h);
                if (align) tr.alignment.push_back(monitor_alignment(s));
            }
            s.t = t_next;
            refresh_nodes(s);
            record(s, total_energy(*this, s, tr.energy0));
        }
    } catch (const std::exception& ex) {
        tr.status = "failed";
        tr.error = ex.what();
    }
    return tr;
}

std::vector<Trajectory> sweep_epsilon(const SimConfig& base, const std::vector<double>& eps_list) {
    std::vector<Trajectory> out;
    for (double eps : eps_list) {
        SimConfig c = base;
        c.eps = eps;
        try {
            Simulator sim(c);
            out.push_back(sim.simulate());
        } catch (const std::exception& ex) {
            Trajectory t;
            t.config = c;
            t.status = "failed";
            t.error = ex.what();
            out.push_back(t);
        }
    }
    return out;
}

}  // namespace epsim
