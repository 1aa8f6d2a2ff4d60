#include "epsim/kernels.hpp"

#include <cmath>
#include <cstdio>

namespace epsim {

namespace {

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double Confinement::value(const double* x, int dim) const {
    if (kind == Kind::None) return 0.0;
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += (x[j] - center) * (x[j] - center);
    return 0.5 * s;
}

void Confinement::grad(const double* x, int dim, double* g) const {
    for (int j = 0; j < dim; ++j) g[j] = kind == Kind::None ? 0.0 : x[j] - center;
}

std::string Confinement::describe() const {
    if (kind == Kind::None) return "none";
    return center == 0.0 ? "quadratic" : "quadratic(" + fmt_num(center) + ")";
}

double Kernel::value(const double* z, int dim) const {
    double r2 = 0.0;
    for (int j = 0; j < dim; ++j) r2 += z[j] * z[j];
    switch (kind) {
        case Kind::None: return 0.0;
        case Kind::Quadratic: return r2;
        case Kind::Constant: return param;
        case Kind::Gaussian: return std::exp(-r2 / (2 * param * param));
    }
    return 0.0;
}

void Kernel::grad(const double* z, int dim, double* g) const {
    double r2 = 0.0;
    for (int j = 0; j < dim; ++j) r2 += z[j] * z[j];
    double s = 0.0;
    switch (kind) {
        case Kind::None:
        case Kind::Constant: s = 0.0; break;
        case Kind::Quadratic: s = 2.0; break;
        case Kind::Gaussian: s = -std::exp(-r2 / (2 * param * param)) / (param * param); break;
    }
    for (int j = 0; j < dim; ++j) g[j] = s * z[j];
}

double Kernel::hessian_bound() const {
    switch (kind) {
        case Kind::Quadratic: return 2.0;
        case Kind::Gaussian: return 1.0 / (param * param);
        default: return 0.0;
    }
}

double Kernel::grad_bound(int dim) const {
    double rmax = std::sqrt(double(dim));
    switch (kind) {
        case Kind::Quadratic: return 2.0 * rmax;
        case Kind::Gaussian: {
            double r = std::min(param, rmax);
            return r / (param * param) * std::exp(-r * r / (2 * param * param));
        }
        default: return 0.0;
    }
}

std::string Kernel::describe() const {
    switch (kind) {
        case Kind::None: return "none";
        case Kind::Quadratic: return "quadratic";
        case Kind::Constant: return "constant(" + fmt_num(param) + ")";
        case Kind::Gaussian: return "gaussian(" + fmt_num(param) + ")";
    }
    return "none";
}

void convolve(const Kernel& k, const Sample& mu, std::span<const double> targets, double* val, double* grad,
              ConvolutionPath path) {
    int d = mu.dim;
    long nt = long(targets.size() / d);
    if (k.kind == Kernel::Kind::None) {
        for (long t = 0; t < nt; ++t) {
            if (val) val[t] = 0.0;
            if (grad)
                for (int j = 0; j < d; ++j) grad[t * d + j] = 0.0;
        }
        return;
    }
    if (path == ConvolutionPath::Fast && (k.kind == Kernel::Kind::Quadratic || k.kind == Kernel::Kind::Constant)) {
        KahanSum M, m1[2], m2;
        for (std::size_t p = 0; p < mu.size(); ++p) {
            M.add(mu.m[p]);
            double r2 = 0.0;
            for (int j = 0; j < d; ++j) {
                m1[j].add(mu.m[p] * mu.point(p)[j]);
                r2 += mu.point(p)[j] * mu.point(p)[j];
            }
            m2.add(mu.m[p] * r2);
        }
        double mass = M.value(), first[2] = {m1[0].value(), m1[1].value()}, second = m2.value();
        for (long t = 0; t < nt; ++t) {
            const double* y = targets.data() + t * d;
            if (k.kind == Kernel::Kind::Constant) {
                if (val) val[t] = k.param * mass;
                if (grad)
                    for (int j = 0; j < d; ++j) grad[t * d + j] = 0.0;
                continue;
            }
            double y2 = 0.0, yf = 0.0;
            for (int j = 0; j < d; ++j) {
                y2 += y[j] * y[j];
                yf += y[j] * first[j];
            }
            if (val) val[t] = mass * y2 - 2 * yf + second;
            if (grad)
                for (int j = 0; j < d; ++j) grad[t * d + j] = 2 * (mass * y[j] - first[j]);
        }
        return;
    }
#pragma omp parallel for schedule(static)
    for (long t = 0; t < nt; ++t) {
        const double* y = targets.data() + t * d;
        double v = 0.0, g[2] = {0.0, 0.0};
        for (std::size_t p = 0; p < mu.size(); ++p) {
            double z[2];
            for (int j = 0; j < d; ++j) z[j] = y[j] - mu.point(p)[j];
            if (val) v += mu.m[p] * k.value(z, d);
            if (grad) {
                double gk[2];
                k.grad(z, d, gk);
                for (int j = 0; j < d; ++j) g[j] += mu.m[p] * gk[j];
            }
        }
        if (val) val[t] = v;
        if (grad)
            for (int j = 0; j < d; ++j) grad[t * d + j] = g[j];
    }
}

Field convolve(const Kernel& k, const Field& f, const Quadrature& quad, ConvolutionPath path) {
    Sample mu = sample_from_nodes(quad, f.data);
    Field out{Rep::Nodal, 1, std::vector<double>(quad.size())};
    convolve(k, mu, quad.nodes, out.data.data(), nullptr, path);
    return out;
}

std::vector<double> galerkin_project(const Sample& mu, const std::vector<double>& f, const SineBasis& basis) {
    int d = mu.dim;
    std::size_t n = basis.size();
    std::vector<KahanSum> acc(d * n);
    std::vector<double> val(n);
    for (std::size_t p = 0; p < mu.size(); ++p) {
        basis.eval(mu.point(p), val.data(), nullptr);
        for (int c = 0; c < d; ++c) {
            double mf = mu.m[p] * f[p * d + c];
            for (std::size_t m = 0; m < n; ++m) acc[c * n + m].add(mf * val[m]);
        }
    }
    std::vector<double> out(d * n);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[i].value();
    return out;
}

std::vector<double> interaction_confinement_force(const Sample& mu, const KernelSpec& spec, const SineBasis& basis,
                                                  ConvolutionPath path) {
    int d = mu.dim;
    std::vector<double> g(mu.size() * d);
    convolve(spec.w, mu, mu.x, nullptr, g.data(), path);
    for (std::size_t p = 0; p < mu.size(); ++p) {
        double gv[2];
        spec.v.grad(mu.point(p), d, gv);
        for (int j = 0; j < d; ++j) g[p * d + j] = -(g[p * d + j] + gv[j]);
    }
    return galerkin_project(mu, g, basis);
}

std::vector<double> alignment_acceleration(const Sample& mu, const std::vector<double>& u, const Kernel& psi,
                                           ConvolutionPath path) {
    int d = mu.dim;
    long np = long(mu.size());
    std::vector<double> a(np * d, 0.0);
    if (psi.kind == Kernel::Kind::None) return a;
    if (path == ConvolutionPath::Fast && psi.kind == Kernel::Kind::Constant) {
        KahanSum M, mom[2];
        for (long p = 0; p < np; ++p) {
            M.add(mu.m[p]);
            for (int j = 0; j < d; ++j) mom[j].add(mu.m[p] * u[p * d + j]);
        }
        for (long p = 0; p < np; ++p)
            for (int j = 0; j < d; ++j) a[p * d + j] = psi.param * (mom[j].value() - M.value() * u[p * d + j]);
        return a;
    }
#pragma omp parallel for schedule(static)
    for (long p = 0; p < np; ++p) {
        double acc[2] = {0.0, 0.0};
        for (long q = 0; q < np; ++q) {
            double z[2];
            for (int j = 0; j < d; ++j) z[j] = mu.point(p)[j] - mu.point(q)[j];
            double w = mu.m[q] * psi.value(z, d);
            for (int j = 0; j < d; ++j) acc[j] += w * (u[q * d + j] - u[p * d + j]);
        }
        for (int j = 0; j < d; ++j) a[p * d + j] = acc[j];
    }
    return a;
}

std::vector<double> alignment_force(const Sample& mu, const std::vector<double>& u, const Kernel& psi,
                                    const SineBasis& basis, ConvolutionPath path) {
    return galerkin_project(mu, alignment_acceleration(mu, u, psi, path), basis);
}

double alignment_dissipation(const Sample& mu, const std::vector<double>& u, const Kernel& psi) {
    int d = mu.dim;
    long np = long(mu.size());
    if (psi.kind == Kernel::Kind::None) return 0.0;
    std::vector<double> row(np);
#pragma omp parallel for schedule(static)
    for (long p = 0; p < np; ++p) {
        double s = 0.0;
        for (long q = 0; q < np; ++q) {
            double z[2], du2 = 0.0;
            for (int j = 0; j < d; ++j) {
                z[j] = mu.point(p)[j] - mu.point(q)[j];
                double dv = u[q * d + j] - u[p * d + j];
                du2 += dv * dv;
            }
            s += mu.m[q] * psi.value(z, d) * du2;
        }
        row[p] = mu.m[p] * s;
    }
    KahanSum tot;
    for (double r : row) tot.add(r);
    return 0.5 * tot.value();
}

double confinement_energy(const Sample& mu, const Confinement& v) {
    KahanSum s;
    for (std::size_t p = 0; p < mu.size(); ++p) s.add(mu.m[p] * v.value(mu.point(p), mu.dim));
    return s.value();
}

double interaction_energy(const Sample& mu, const Kernel& w) {
    if (w.kind == Kernel::Kind::None) return 0.0;
    std::vector<double> conv(mu.size());
    convolve(w, mu, mu.x, conv.data(), nullptr, ConvolutionPath::Direct);
    KahanSum s;
    for (std::size_t p = 0; p < mu.size(); ++p) s.add(mu.m[p] * conv[p]);
    return 0.5 * s.value();
}

}  // namespace epsim
