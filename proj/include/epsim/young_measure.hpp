#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "epsim/diagnostics.hpp"

namespace epsim {

/// Weighted point samples of the state z = (s, v, F) = (rho, u, grad Phi): `points` and `u`,
/// `gphi` hold dim entries per sample. Weights are Lebesgue weights summing to |Omega| = 1.
struct YMSnapshot {
    int dim = 1;
    double t = 0.0;
    std::vector<double> points;
    std::vector<double> weights;
    std::vector<double> rho;
    std::vector<double> u;
    std::vector<double> gphi;

    std::size_t size() const { return weights.size(); }
    int state_dim() const { return 1 + 2 * dim; }
    void state(std::size_t p, double* z) const;
    /// Largest |z|_inf over the samples.
    double max_abs() const;
    /// Throws DomainError on inconsistent sizes.
    void validate() const;
};

YMSnapshot snapshot_from_nodes(const NodeState& n, const Quadrature& quad);

/// Family of snapshots indexed by eps in decreasing order; the last member is the finest.
struct YMFamily {
    std::vector<double> eps;
    std::vector<YMSnapshot> members;

    const YMSnapshot& finest() const { return members.back(); }
    const YMSnapshot& coarsest() const { return members.front(); }
    /// 10 times the sample max at the coarsest member.
    double default_radius() const { return 10.0 * coarsest().max_abs(); }
};

struct YMBin {
    double weight = 0.0;
    std::vector<double> sum;  ///< weight-weighted state, for the bin centroid
};

/// Histogram of one spatial cell, normalized by the cell volume.
struct YMCell {
    double volume = 0.0;
    std::size_t samples = 0;
    std::map<std::uint64_t, YMBin> bins;
    double overflow = 0.0;

    double finite_weight() const;
};

/// Cell-averaged Dirac samples binned in state space: s in [0, R], v and F in [-R, R],
/// `bins` uniform bins per coordinate, overflow when |z|_inf > R.
struct EmpiricalYoungMeasure {
    int dim = 1;
    int cells = 1;
    int bins = 32;
    double radius = 1.0;
    std::vector<YMCell> cell;

    int state_dim() const { return 1 + 2 * dim; }
    std::size_t cell_count() const { return cell.size(); }
    std::size_t cell_of(const double* x) const;
    double center_of(std::size_t c, int axis) const;
    std::uint64_t bin_key(const double* z) const;
    void bin_index(std::uint64_t key, int* idx) const;
    /// Lower and upper edge of bin `i` along state coordinate `coord`.
    double bin_lo(int coord, int i) const;
    double bin_hi(int coord, int i) const;
};

struct YMOptions {
    int cells = 8;
    int bins = 32;
    /// Truncation radius; <= 0 selects the family default.
    double radius = 0.0;
};

/// Throws DomainError when a cell holds no sample (cells finer than the grid).
EmpiricalYoungMeasure build_empirical_measure(const YMSnapshot& snap, int cells, int bins, double radius);

/// Nonlinearities of the state: s, s v, s v (x) v, s |v|^2, F (x) F, |F|^2, s |v|.
enum class YMTag { S, SV, SVV, SV2, FF, F2, SVAbs };

std::string tag_name(YMTag tag);
YMTag tag_from_name(const std::string& name);
std::vector<YMTag> all_tags();
int tag_components(YMTag tag, int dim);
bool tag_nonnegative(YMTag tag);
void tag_eval(YMTag tag, const double* z, int dim, double* out);

/// Levels k with theta^k(r) = 1 on [0, k], 1 + k - r on [k, k + 1], 0 beyond.
struct TruncationLadder {
    std::vector<int> levels{1, 2, 4, 8, 16};

    static double theta(int k, double r);
    int top() const { return levels.back(); }
};

/// Per-cell moments <nu; theta^k f> at every ladder level, evaluated at bin centroids.
/// values[(cell * levels + level) * comps + comp]; `limit` is the top level.
struct YMMoment {
    YMTag tag = YMTag::S;
    int comps = 1;
    std::size_t cells = 0;
    std::size_t levels = 0;
    std::vector<double> values;

    double at(std::size_t cell, std::size_t level, int comp = 0) const {
        return values[(cell * levels + level) * comps + comp];
    }
    double limit(std::size_t cell, int comp = 0) const { return at(cell, levels - 1, comp); }
};

YMMoment moment(const EmpiricalYoungMeasure& nu, YMTag tag, const TruncationLadder& ladder = {});

/// Cell averages of f(z) over the samples: out[cell * comps + comp].
std::vector<double> cell_average(const YMSnapshot& snap, const EmpiricalYoungMeasure& layout, YMTag tag);

/// Defect per cell: finest-member cell average of f minus the top-level truncated moment of the
/// finest member's measure. `mass` is the defect times the cell volume; `by_level` holds the
/// defect against every ladder level (ladder-level sensitivity).
struct ConcentrationDefect {
    YMTag tag = YMTag::S;
    int comps = 1;
    std::size_t cells = 0;
    std::size_t levels = 0;
    std::vector<double> value;
    std::vector<double> mass;
    std::vector<double> by_level;

    double at(std::size_t cell, int comp = 0) const { return value[cell * comps + comp]; }
    double mass_at(std::size_t cell, int comp = 0) const { return mass[cell * comps + comp]; }
};

ConcentrationDefect concentration_defect(const YMFamily& family, YMTag tag, const YMOptions& opt = {},
                                         const TruncationLadder& ladder = {});

struct DominationEntry {
    std::string relation;
    std::size_t cell = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

struct DominationReport {
    std::vector<DominationEntry> entries;
    bool all_pass = true;
    /// Smallest rhs - lhs over the entries.
    double min_margin = 0.0;
};

/// Per cell: |m^{s v v}|_1 <= d m^{s|v|^2}, |m^{F F}|_1 <= d m^{|F|^2}, |m^{s|v|}| <= m^s + m^{s|v|^2},
/// each with additive tolerance `tol`. The map must hold all seven tags.
DominationReport domination_check(const std::map<YMTag, ConcentrationDefect>& defects, double tol = 1e-12);

/// All seven defects of a family.
std::map<YMTag, ConcentrationDefect> all_defects(const YMFamily& family, const YMOptions& opt = {},
                                                 const TruncationLadder& ladder = {});

struct ProjectionEntry {
    double alpha = 0.0;
    /// Histogram of the samples with rho > alpha against the joint histogram restricted to
    /// s-bins above alpha: largest per-bin weight difference over bins entirely above alpha
    /// and total difference in the bin straddling alpha.
    double max_above = 0.0;
    double straddle = 0.0;
    double restricted_weight = 0.0;
    double marginal_weight = 0.0;
    bool both_empty = false;
};

std::vector<ProjectionEntry> projection_consistency(const YMSnapshot& snap, const std::vector<double>& alphas,
                                                    const YMOptions& opt);

/// Constants of the pairwise estimate
///   |u_i u_j - U_i U_j| <= c delta + C_delta (|u_i - U_i|^2 + |u_j - U_j|^2)
/// with c = 2|U|_inf + 1, C1 = 1 + |U|_inf, C2 = 1 + 2|U|_inf and C_delta = max(C1, C2, K / delta^2),
/// K the largest |v_i v_j + U_j v_i + U_i v_j| over |v| <= 1 (i != j) or |v^2 + 2 U v| (i = j).
struct PairConstants {
    double c = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double K = 0.0;
    double C_delta = 0.0;
};

PairConstants pair_constants(double Ui, double Uj, double U_inf, double delta, bool diagonal);

struct InequalityStats {
    std::size_t samples = 0;
    std::size_t pair_checks = 0;
    std::size_t pair_pass = 0;
    std::size_t trace_checks = 0;
    std::size_t trace_pass = 0;
    /// Largest lhs / rhs seen.
    double worst_pair_ratio = 0.0;
    double worst_trace_ratio = 0.0;

    bool all_pass() const { return pair_pass == pair_checks && trace_pass == trace_checks; }
};

/// Seeded samples of u, U in [-10, 10]^d and delta in (0, 1); checks every pair (i, j) of the
/// pairwise estimate and sum |a_ij| <= d tr(A) for A = v (x) v, v = u - U.
InequalityStats inequality_suite(std::size_t n, int dim, std::uint64_t seed);

/// d tr(A) - sum |a_ij| for A = v (x) v at v = (1, ..., 1).
double trace_bound_gap_ones(int dim);

/// Constructed one-dimensional families on n midpoint samples.
/// Oscillation: rho = 1, u = sgn(sin(x / eps)), F = 0.
YMSnapshot oscillation_snapshot(double eps, std::size_t n);
/// Concentration: rho = eps^{-1} 1_[0, eps], u = u0 + u1 x, F = grad Phi of rho (closed form).
YMSnapshot concentration_snapshot(double eps, std::size_t n, double u0 = 0.5, double u1 = 0.5);
/// Two-dimensional concentration on n x n midpoints: rho = eps^{-2} 1_[0, eps]^2, u = (v0, v1), F = 0.
YMSnapshot concentration_snapshot_2d(double eps, std::size_t n, double v0 = 1.0, double v1 = 1.0);
/// Smooth bounded: rho = 1 + 0.5 cos(pi x) + eps sin(x / eps), u = 0.3 sin(pi x), F closed form of the
/// leading part.
YMSnapshot smooth_snapshot(double eps, std::size_t n);

YMFamily make_family(const std::vector<double>& eps, YMSnapshot (*make)(double, std::size_t), std::size_t n);
YMFamily concentration_family(const std::vector<double>& eps, std::size_t n, double u0 = 0.5, double u1 = 0.5);

}  // namespace epsim
