#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace epsim {

inline constexpr double kPi = std::numbers::pi;

/// Unit box [0,1]^dim with dim in {1,2}.
struct Domain {
    int dim = 1;
};

/// Gauss-Legendre rule on [-1,1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

GaussRule gauss_legendre(int order);

/// Composite Gauss-Legendre tensor rule on the unit box. Node index runs
/// with axis 0 fastest; `nodes` stores dim coordinates per node.
struct Quadrature {
    int dim = 1;
    int panels = 1;
    int order = 1;
    std::vector<double> axis_nodes;
    std::vector<double> axis_weights;
    std::vector<double> nodes;
    std::vector<double> weights;

    int nodes_per_axis() const { return panels * order; }
    std::size_t size() const { return weights.size(); }
    double spacing() const { return 1.0 / nodes_per_axis(); }
    const double* node(std::size_t i) const { return nodes.data() + i * dim; }
};

Quadrature make_quadrature(int dim, int panels, int order);

/// Compensated sum of w_i f_i.
double integrate(std::span<const double> f, const Quadrature& quad);

/// Compensated (Neumaier) accumulator with a fixed summation order.
class KahanSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Tensorized Dirichlet sine modes prod_j sqrt(2) sin(k_j pi x_j), 1 <= k_j <= K.
class SineBasis {
public:
    SineBasis(int dim, int K);

    int dim() const { return dim_; }
    int K() const { return K_; }
    std::size_t size() const { return modes_.size(); }
    const std::array<int, 2>& mode(std::size_t m) const { return modes_[m]; }
    /// W^{3,2} eigenvalue sum_{|alpha|<=3} prod_j (k_j pi)^{2 alpha_j}.
    double eigenvalue(std::size_t m) const { return lambda_[m]; }
    const std::vector<double>& eigenvalues() const { return lambda_; }

    /// Values of all modes at x (size()), gradients (size()*dim, mode-major) if grad != nullptr.
    void eval(const double* x, double* val, double* grad) const;
    /// Mixed partial derivative D^alpha of mode m at x.
    double derivative(std::size_t m, const double* x, const std::array<int, 2>& alpha) const;

private:
    int dim_;
    int K_;
    std::vector<std::array<int, 2>> modes_;
    std::vector<double> lambda_;
};

/// Tensorized Neumann cosine modes prod_j c_{k_j} cos(k_j pi x_j), 0 <= k_j <= K, k != 0,
/// with c_0 = 1 and c_k = sqrt(2).
class CosineBasis {
public:
    CosineBasis(int dim, int K);

    int dim() const { return dim_; }
    int K() const { return K_; }
    std::size_t size() const { return modes_.size(); }
    const std::array<int, 2>& mode(std::size_t m) const { return modes_[m]; }
    /// Laplacian eigenvalue pi^2 |k|^2.
    double eigenvalue(std::size_t m) const { return lap_[m]; }

    void eval(const double* x, double* val, double* grad) const;
    double derivative(std::size_t m, const double* x, const std::array<int, 2>& alpha) const;

private:
    int dim_;
    int K_;
    std::vector<std::array<int, 2>> modes_;
    std::vector<double> lap_;
};

/// Throws ResolutionError unless the rule resolves K modes per axis.
void check_resolution(const Quadrature& quad, int K);

struct Bases {
    SineBasis sine;
    CosineBasis cosine;
};

Bases build_bases(int dim, int K, const Quadrature& quad);

/// Throws DomainError if x lies outside the closed unit box.
void check_in_box(const double* x, int dim);

enum class Rep { Nodal, Coefficients };

/// Scalar or vector field held either as node values (node-major, `components`
/// entries per node) or as coefficients (component-major, basis-size per component).
struct Field {
    Rep rep = Rep::Nodal;
    int components = 1;
    std::vector<double> data;
};

/// c_i = sum_q w_q f(x_q) omega_i(x_q), per component.
Field project(const Field& nodal, const SineBasis& basis, const Quadrature& quad);
Field project(const Field& nodal, const CosineBasis& basis, const Quadrature& quad);

/// Synthesis at arbitrary points (dim coordinates each).
std::vector<double> evaluate(const Field& coeffs, const SineBasis& basis, std::span<const double> pts);
std::vector<double> evaluate(const Field& coeffs, const CosineBasis& basis, std::span<const double> pts);

/// Synthesis at quadrature nodes.
Field synthesize(const Field& coeffs, const SineBasis& basis, const Quadrature& quad);
Field synthesize(const Field& coeffs, const CosineBasis& basis, const Quadrature& quad);

/// Velocity u (dim comps) and gradient du[c*dim+j] = d_j u_c at x from coefficients laid
/// out as c[comp*size + m]. Either output may be null.
void eval_velocity(const SineBasis& basis, const double* coeffs, const double* x, double* u, double* du);

}  // namespace epsim
