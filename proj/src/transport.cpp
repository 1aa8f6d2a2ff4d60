#include "epsim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "epsim/errors.hpp"

namespace epsim {

ExplicitTableau classical_rk4() {
    ExplicitTableau t;
    t.a = {{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}};
    t.b = {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6};
    t.c = {0.0, 0.5, 0.5, 1.0};
    return t;
}

GridInterpolator::GridInterpolator(const Quadrature& quad, Interpolation kind) : quad_(&quad), kind_(kind) {
    int q = quad.order;
    bary_.resize(q);
    for (int i = 0; i < q; ++i) {
        double p = 1.0;
        for (int k = 0; k < q; ++k)
            if (k != i) p *= quad.axis_nodes[i] - quad.axis_nodes[k];
        bary_[i] = 1.0 / p;
    }
}

void GridInterpolator::axis_weights(double y, int& first, int& count, double* w) const {
    const auto& xs = quad_->axis_nodes;
    int n = int(xs.size());
    if (kind_ == Interpolation::Gauss) {
        int P = quad_->panels, q = quad_->order;
        int p = std::clamp(int(std::floor(y * P)), 0, P - 1);
        first = p * q;
        count = q;
        double s = 0.0;
        for (int i = 0; i < q; ++i) {
            double dx = y - xs[first + i];
            if (dx == 0.0) {
                for (int k = 0; k < q; ++k) w[k] = k == i ? 1.0 : 0.0;
                return;
            }
            w[i] = bary_[i] / dx;
            s += w[i];
        }
        for (int i = 0; i < q; ++i) w[i] /= s;
        return;
    }
    int i = int(std::upper_bound(xs.begin(), xs.end(), y) - xs.begin()) - 1;
    first = std::clamp(i - 1, 0, std::max(0, n - 4));
    count = std::min(4, n);
    for (int a = 0; a < count; ++a) {
        double l = 1.0;
        for (int b = 0; b < count; ++b)
            if (b != a) l *= (y - xs[first + b]) / (xs[first + a] - xs[first + b]);
        w[a] = l;
    }
}

void GridInterpolator::eval(const double* y, const double* values, int nf, double* out) const {
    double wx[64], wy[64];
    int fx, cx, fy = 0, cy = 1;
    axis_weights(y[0], fx, cx, wx);
    if (quad_->dim == 2)
        axis_weights(y[1], fy, cy, wy);
    else
        wy[0] = 1.0;
    int n = quad_->nodes_per_axis();
    for (int f = 0; f < nf; ++f) out[f] = 0.0;
    for (int j = 0; j < cy; ++j) {
        double row[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        std::size_t base = quad_->dim == 2 ? std::size_t(fy + j) * n : 0;
        for (int i = 0; i < cx; ++i) {
            const double* v = values + (base + fx + i) * nf;
            for (int f = 0; f < nf; ++f) row[f] += wx[i] * v[f];
        }
        for (int f = 0; f < nf; ++f) out[f] += wy[j] * row[f];
    }
}

FlowState FlowState::identity(const Quadrature& quad, Interpolation stencil) {
    FlowState f;
    f.dim = quad.dim;
    f.B = quad.nodes;
    f.J.assign(quad.size(), 0.0);
    f.stencil = stencil;
    return f;
}

void forward_characteristic(const ExplicitTableau& tab, const StageVelocity& vel, double h, int dim,
                            const double* x0, double* x1, double* G) {
    int S = tab.stages();
    int dd = dim * dim;
    std::vector<double> U(S * dim), DU(S * dim * dim), GS(S * dd);
    for (int s = 0; s < S; ++s) {
        double X[2], Gs[4];
        for (int j = 0; j < dim; ++j) X[j] = x0[j];
        for (int k = 0; k < dd; ++k) Gs[k] = (k % (dim + 1) == 0) ? 1.0 : 0.0;
        for (int r = 0; r < s; ++r) {
            double a = tab.a[s][r];
            if (a == 0.0) continue;
            for (int j = 0; j < dim; ++j) X[j] += h * a * U[r * dim + j];
            if (G)
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j) {
                        double t = 0.0;
                        for (int k = 0; k < dim; ++k) t += DU[r * dd + i * dim + k] * GS[r * dd + k * dim + j];
                        Gs[i * dim + j] += h * a * t;
                    }
        }
        vel(s, X, U.data() + s * dim, G ? DU.data() + s * dd : nullptr);
        for (int k = 0; k < dd; ++k) GS[s * dd + k] = Gs[k];
    }
    for (int j = 0; j < dim; ++j) {
        x1[j] = x0[j];
        for (int s = 0; s < S; ++s) x1[j] += h * tab.b[s] * U[s * dim + j];
    }
    if (G) {
        for (int k = 0; k < dd; ++k) G[k] = (k % (dim + 1) == 0) ? 1.0 : 0.0;
        for (int s = 0; s < S; ++s)
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) {
                    double t = 0.0;
                    for (int k = 0; k < dim; ++k) t += DU[s * dd + i * dim + k] * GS[s * dd + k * dim + j];
                    G[i * dim + j] += h * tab.b[s] * t;
                }
    }
}

double backward_characteristic(const ExplicitTableau& tab, const StageVelocity& vel, double h, int dim,
                               const double* x, double* x0) {
    double u[2], du[4];
    vel(0, x, u, du);
    for (int j = 0; j < dim; ++j) x0[j] = x[j] - h * u[j];
    double x1[2], G[4];
    for (int it = 0; it < 30; ++it) {
        forward_characteristic(tab, vel, h, dim, x0, x1, G);
        double r[2] = {0.0, 0.0}, dx[2] = {0.0, 0.0};
        for (int j = 0; j < dim; ++j) r[j] = x1[j] - x[j];
        if (dim == 1) {
            dx[0] = r[0] / G[0];
        } else {
            double det = G[0] * G[3] - G[1] * G[2];
            dx[0] = (G[3] * r[0] - G[1] * r[1]) / det;
            dx[1] = (-G[2] * r[0] + G[0] * r[1]) / det;
        }
        double step = 0.0;
        for (int j = 0; j < dim; ++j) {
            x0[j] -= dx[j];
            step = std::max(step, std::abs(dx[j]));
        }
        if (step <= 1e-16) break;
    }
    forward_characteristic(tab, vel, h, dim, x0, x1, G);
    double det = dim == 1 ? G[0] : G[0] * G[3] - G[1] * G[2];
    return std::log(det);
}

FlowState step_backward_flow(const FlowState& flow, const ExplicitTableau& tab, const StageVelocity& vel, double h,
                             const Quadrature& quad) {
    int d = quad.dim;
    long n = long(quad.size());
    GridInterpolator interp(quad, flow.stencil);
    std::vector<double> packed(n * (d + 1));
    for (long i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) packed[i * (d + 1) + j] = flow.B[i * d + j];
        packed[i * (d + 1) + d] = flow.J[i];
    }
    FlowState out = flow;
    int escaped = 0;
    double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : escaped) reduction(max : worst)
    for (long i = 0; i < n; ++i) {
        double y[2];
        double ldet = backward_characteristic(tab, vel, h, d, quad.node(i), y);
        for (int j = 0; j < d; ++j) {
            double excess = std::max(-y[j], y[j] - 1.0);
            if (excess > 1e-12) {
                ++escaped;
                worst = std::max(worst, excess);
            }
            y[j] = std::clamp(y[j], 0.0, 1.0);
        }
        double v[3];
        interp.eval(y, packed.data(), d + 1, v);
        for (int j = 0; j < d; ++j) out.B[i * d + j] = std::clamp(v[j], 0.0, 1.0);
        out.J[i] = v[d] + ldet;
    }
    if (escaped > 0) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%d characteristics left the domain (worst excess %.3e)", escaped, worst);
        throw CharacteristicEscape(buf);
    }
    return out;
}

FlowState trace_flow(const std::vector<FlowStep>& history, const ExplicitTableau& tab, const SineBasis& basis,
                     const Quadrature& quad) {
    int d = quad.dim;
    long n = long(quad.size());
    FlowState out = FlowState::identity(quad);
    int escaped = 0;
    double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : escaped) reduction(max : worst)
    for (long i = 0; i < n; ++i) {
        double x[2], y[2];
        for (int j = 0; j < d; ++j) x[j] = quad.node(i)[j];
        double J = 0.0;
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            const auto& cs = it->stage_coeffs;
            StageVelocity vel = [&](int s, const double* p, double* u, double* du) {
                eval_velocity(basis, cs[s].data(), p, u, du);
            };
            J += backward_characteristic(tab, vel, it->h, d, x, y);
            for (int j = 0; j < d; ++j) {
                double excess = std::max(-y[j], y[j] - 1.0);
                if (excess > 1e-12) {
                    ++escaped;
                    worst = std::max(worst, excess);
                }
                x[j] = std::clamp(y[j], 0.0, 1.0);
            }
        }
        for (int j = 0; j < d; ++j) out.B[i * d + j] = x[j];
        out.J[i] = J;
    }
    if (escaped > 0) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%d characteristics left the domain (worst excess %.3e)", escaped, worst);
        throw CharacteristicEscape(buf);
    }
    return out;
}

std::vector<double> density(const FlowState& flow, const ScalarFunction& rho0, const Quadrature& quad) {
    int d = quad.dim;
    std::vector<double> rho(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i) {
        rho[i] = rho0(flow.B.data() + i * d) * std::exp(-flow.J[i]);
        if (!(rho[i] > 0.0)) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "nonpositive density %.6e at node %zu", rho[i], i);
            throw PositivityError(buf);
        }
    }
    return rho;
}

double total_mass(const std::vector<double>& rho, const Quadrature& quad) { return integrate(rho, quad); }

}  // namespace epsim
