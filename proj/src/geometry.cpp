#include "epsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epsim/errors.hpp"

namespace epsim {

namespace {

struct AxisTrig {
    double s[64];
    double c[64];
};

void fill_trig(double x, int K, AxisTrig& t) {
    double s1 = std::sin(kPi * x), c1 = std::cos(kPi * x);
    t.s[0] = 0.0;
    t.c[0] = 1.0;
    for (int k = 1; k <= K; ++k) {
        t.s[k] = t.s[k - 1] * c1 + t.c[k - 1] * s1;
        t.c[k] = t.c[k - 1] * c1 - t.s[k - 1] * s1;
    }
}

double sin_derivative(int k, double x, int a) {
    double w = k * kPi;
    double s = std::sin(w * x), c = std::cos(w * x);
    double f = std::pow(w, a);
    switch (a % 4) {
        case 0: return f * s;
        case 1: return f * c;
        case 2: return -f * s;
        default: return -f * c;
    }
}

double cos_derivative(int k, double x, int a) {
    double w = k * kPi;
    double s = std::sin(w * x), c = std::cos(w * x);
    double f = a == 0 ? 1.0 : std::pow(w, a);
    switch (a % 4) {
        case 0: return f * c;
        case 1: return -f * s;
        case 2: return -f * c;
        default: return f * s;
    }
}

constexpr int kMaxK = 63;

void check_K(int K) {
    if (K < 1 || K > kMaxK) throw ResolutionError("modes per axis must be in [1, 63], got " + std::to_string(K));
}

void check_dim(int dim) {
    if (dim != 1 && dim != 2) throw DomainError("dimension must be 1 or 2, got " + std::to_string(dim));
}

}  // namespace

GaussRule gauss_legendre(int n) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    // P_n(z) and P_n'(z) by the three-term recurrence
    auto legendre = [n](double z, double& dp) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        return p1;
    };
    for (int i = 0; i < n; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double dz = legendre(z, dp) / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        legendre(z, dp);
        r.x[n - 1 - i] = z;
        r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
}

Quadrature make_quadrature(int dim, int panels, int order) {
    check_dim(dim);
    if (panels < 1 || order < 1) throw ResolutionError("quadrature needs panels >= 1 and order >= 1");
    Quadrature q;
    q.dim = dim;
    q.panels = panels;
    q.order = order;
    GaussRule g = gauss_legendre(order);
    double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p)
        for (int i = 0; i < order; ++i) {
            q.axis_nodes.push_back(h * (p + 0.5 * (g.x[i] + 1.0)));
            q.axis_weights.push_back(0.5 * h * g.w[i]);
        }
    int n = q.nodes_per_axis();
    if (dim == 1) {
        q.nodes = q.axis_nodes;
        q.weights = q.axis_weights;
    } else {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                q.nodes.push_back(q.axis_nodes[i]);
                q.nodes.push_back(q.axis_nodes[j]);
                q.weights.push_back(q.axis_weights[i] * q.axis_weights[j]);
            }
    }
    return q;
}

double integrate(std::span<const double> f, const Quadrature& quad) {
    KahanSum s;
    for (std::size_t i = 0; i < quad.size(); ++i) s.add(quad.weights[i] * f[i]);
    return s.value();
}

SineBasis::SineBasis(int dim, int K) : dim_(dim), K_(K) {
    check_dim(dim);
    check_K(K);
    int n2 = dim == 2 ? K : 1;
    for (int k2 = 1; k2 <= n2; ++k2)
        for (int k1 = 1; k1 <= K; ++k1) modes_.push_back({k1, dim == 2 ? k2 : 0});
    for (const auto& k : modes_) {
        double lam = 0.0;
        double a = std::pow(k[0] * kPi, 2);
        double b = dim == 2 ? std::pow(k[1] * kPi, 2) : 0.0;
        for (int a1 = 0; a1 <= 3; ++a1)
            for (int a2 = 0; a1 + a2 <= 3; ++a2) {
                if (dim == 1 && a2 > 0) continue;
                lam += std::pow(a, a1) * std::pow(b, a2);
            }
        lambda_.push_back(lam);
    }
}

void SineBasis::eval(const double* x, double* val, double* grad) const {
    AxisTrig t0, t1;
    fill_trig(x[0], K_, t0);
    if (dim_ == 1) {
        for (int k = 1; k <= K_; ++k) {
            val[k - 1] = std::numbers::sqrt2 * t0.s[k];
            if (grad) grad[k - 1] = std::numbers::sqrt2 * k * kPi * t0.c[k];
        }
        return;
    }
    fill_trig(x[1], K_, t1);
    std::size_t m = 0;
    for (int k2 = 1; k2 <= K_; ++k2)
        for (int k1 = 1; k1 <= K_; ++k1, ++m) {
            val[m] = 2.0 * t0.s[k1] * t1.s[k2];
            if (grad) {
                grad[2 * m] = 2.0 * k1 * kPi * t0.c[k1] * t1.s[k2];
                grad[2 * m + 1] = 2.0 * k2 * kPi * t0.s[k1] * t1.c[k2];
            }
        }
}

double SineBasis::derivative(std::size_t m, const double* x, const std::array<int, 2>& alpha) const {
    const auto& k = modes_[m];
    double v = std::numbers::sqrt2 * sin_derivative(k[0], x[0], alpha[0]);
    if (dim_ == 2) v *= std::numbers::sqrt2 * sin_derivative(k[1], x[1], alpha[1]);
    return v;
}

CosineBasis::CosineBasis(int dim, int K) : dim_(dim), K_(K) {
    check_dim(dim);
    check_K(K);
    int n2 = dim == 2 ? K : 0;
    for (int k2 = 0; k2 <= n2; ++k2)
        for (int k1 = 0; k1 <= K; ++k1) {
            if (k1 == 0 && k2 == 0) continue;
            modes_.push_back({k1, k2});
            lap_.push_back(kPi * kPi * (double(k1) * k1 + double(k2) * k2));
        }
}

void CosineBasis::eval(const double* x, double* val, double* grad) const {
    AxisTrig t0, t1;
    fill_trig(x[0], K_, t0);
    auto nrm = [](int k) { return k == 0 ? 1.0 : std::numbers::sqrt2; };
    if (dim_ == 1) {
        for (int k = 1; k <= K_; ++k) {
            val[k - 1] = std::numbers::sqrt2 * t0.c[k];
            if (grad) grad[k - 1] = -std::numbers::sqrt2 * k * kPi * t0.s[k];
        }
        return;
    }
    fill_trig(x[1], K_, t1);
    for (std::size_t m = 0; m < modes_.size(); ++m) {
        int k1 = modes_[m][0], k2 = modes_[m][1];
        double n = nrm(k1) * nrm(k2);
        val[m] = n * t0.c[k1] * t1.c[k2];
        if (grad) {
            grad[2 * m] = -n * k1 * kPi * t0.s[k1] * t1.c[k2];
            grad[2 * m + 1] = -n * k2 * kPi * t0.c[k1] * t1.s[k2];
        }
    }
}

double CosineBasis::derivative(std::size_t m, const double* x, const std::array<int, 2>& alpha) const {
    const auto& k = modes_[m];
    auto nrm = [](int kk) { return kk == 0 ? 1.0 : std::numbers::sqrt2; };
    double v = nrm(k[0]) * cos_derivative(k[0], x[0], alpha[0]);
    if (dim_ == 2) v *= nrm(k[1]) * cos_derivative(k[1], x[1], alpha[1]);
    return v;
}

void check_resolution(const Quadrature& quad, int K) {
    if (quad.nodes_per_axis() < 2 * K + 2)
        throw ResolutionError("quadrature with " + std::to_string(quad.nodes_per_axis()) +
                              " nodes per axis underresolves K = " + std::to_string(K) + " (need >= " +
                              std::to_string(2 * K + 2) + ")");
}

Bases build_bases(int dim, int K, const Quadrature& quad) {
    if (quad.dim != dim) throw ResolutionError("quadrature dimension does not match basis dimension");
    check_resolution(quad, K);
    return Bases{SineBasis(dim, K), CosineBasis(dim, K)};
}

void check_in_box(const double* x, int dim) {
    for (int j = 0; j < dim; ++j)
        if (!(x[j] >= 0.0 && x[j] <= 1.0))
            throw DomainError("evaluation point coordinate " + std::to_string(x[j]) + " outside [0,1]");
}

namespace {

template <class Basis>
Field project_impl(const Field& f, const Basis& basis, const Quadrature& quad) {
    if (f.rep != Rep::Nodal) throw DomainError("project expects node values");
    std::size_t n = basis.size();
    int nc = f.components;
    std::vector<KahanSum> acc(n * nc);
    std::vector<double> val(n);
    for (std::size_t q = 0; q < quad.size(); ++q) {
        basis.eval(quad.node(q), val.data(), nullptr);
        for (int c = 0; c < nc; ++c) {
            double wf = quad.weights[q] * f.data[q * nc + c];
            for (std::size_t m = 0; m < n; ++m) acc[c * n + m].add(wf * val[m]);
        }
    }
    Field out{Rep::Coefficients, nc, std::vector<double>(n * nc)};
    for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = acc[i].value();
    return out;
}

template <class Basis>
std::vector<double> evaluate_impl(const Field& c, const Basis& basis, std::span<const double> pts) {
    if (c.rep != Rep::Coefficients) throw DomainError("evaluate expects coefficients");
    int d = basis.dim();
    std::size_t n = basis.size();
    std::size_t np = pts.size() / d;
    int nc = c.components;
    std::vector<double> out(np * nc);
    std::vector<double> val(n);
    for (std::size_t p = 0; p < np; ++p) {
        check_in_box(pts.data() + p * d, d);
        basis.eval(pts.data() + p * d, val.data(), nullptr);
        for (int k = 0; k < nc; ++k) {
            double s = 0.0;
            for (std::size_t m = 0; m < n; ++m) s += c.data[k * n + m] * val[m];
            out[p * nc + k] = s;
        }
    }
    return out;
}

}  // namespace

Field project(const Field& f, const SineBasis& b, const Quadrature& q) { return project_impl(f, b, q); }
Field project(const Field& f, const CosineBasis& b, const Quadrature& q) { return project_impl(f, b, q); }

std::vector<double> evaluate(const Field& c, const SineBasis& b, std::span<const double> pts) {
    return evaluate_impl(c, b, pts);
}
std::vector<double> evaluate(const Field& c, const CosineBasis& b, std::span<const double> pts) {
    return evaluate_impl(c, b, pts);
}

Field synthesize(const Field& c, const SineBasis& b, const Quadrature& q) {
    return Field{Rep::Nodal, c.components, evaluate_impl(c, b, q.nodes)};
}
Field synthesize(const Field& c, const CosineBasis& b, const Quadrature& q) {
    return Field{Rep::Nodal, c.components, evaluate_impl(c, b, q.nodes)};
}

void eval_velocity(const SineBasis& basis, const double* coeffs, const double* x, double* u, double* du) {
    int d = basis.dim();
    int K = basis.K();
    AxisTrig t0, t1;
    fill_trig(x[0], K, t0);
    std::size_t n = basis.size();
    if (d == 1) {
        double s = 0.0, g = 0.0;
        for (int k = 1; k <= K; ++k) {
            s += coeffs[k - 1] * t0.s[k];
            g += coeffs[k - 1] * k * t0.c[k];
        }
        if (u) u[0] = std::numbers::sqrt2 * s;
        if (du) du[0] = std::numbers::sqrt2 * kPi * g;
        return;
    }
    fill_trig(x[1], K, t1);
    for (int c = 0; c < 2; ++c) {
        const double* cc = coeffs + c * n;
        double s = 0.0, g0 = 0.0, g1 = 0.0;
        std::size_t m = 0;
        for (int k2 = 1; k2 <= K; ++k2) {
            double a = 0.0, b = 0.0;
            for (int k1 = 1; k1 <= K; ++k1, ++m) {
                a += cc[m] * t0.s[k1];
                b += cc[m] * k1 * t0.c[k1];
            }
            s += a * t1.s[k2];
            g0 += b * t1.s[k2];
            g1 += a * k2 * t1.c[k2];
        }
        if (u) u[c] = 2.0 * s;
        if (du) {
            du[2 * c] = 2.0 * kPi * g0;
            du[2 * c + 1] = 2.0 * kPi * g1;
        }
    }
}

}  // namespace epsim
