#include "epsim/young_measure.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "epsim/errors.hpp"

namespace epsim {

void YMSnapshot::state(std::size_t p, double* z) const {
    z[0] = rho[p];
    for (int j = 0; j < dim; ++j) {
        z[1 + j] = u[p * dim + j];
        z[1 + dim + j] = gphi[p * dim + j];
    }
}

double YMSnapshot::max_abs() const {
    double m = 0.0, z[5];
    for (std::size_t p = 0; p < size(); ++p) {
        state(p, z);
        for (int c = 0; c < state_dim(); ++c) m = std::max(m, std::abs(z[c]));
    }
    return m;
}

void YMSnapshot::validate() const {
    std::size_t n = weights.size();
    if (dim != 1 && dim != 2) throw DomainError("snapshot dimension must be 1 or 2");
    if (points.size() != n * dim || rho.size() != n || u.size() != n * dim || gphi.size() != n * dim)
        throw DomainError("snapshot arrays have inconsistent sizes");
}

YMSnapshot snapshot_from_nodes(const NodeState& n, const Quadrature& quad) {
    YMSnapshot s;
    s.dim = n.dim;
    s.t = n.t;
    s.points = quad.nodes;
    s.weights = quad.weights;
    s.rho = n.rho;
    s.u = n.u;
    s.gphi = n.gphi;
    s.validate();
    return s;
}

double YMCell::finite_weight() const {
    KahanSum s;
    for (const auto& [k, b] : bins) s.add(b.weight);
    return s.value();
}

std::size_t EmpiricalYoungMeasure::cell_of(const double* x) const {
    std::size_t idx = 0, stride = 1;
    for (int j = 0; j < dim; ++j) {
        int i = std::clamp(int(std::floor(x[j] * cells)), 0, cells - 1);
        idx += std::size_t(i) * stride;
        stride *= std::size_t(cells);
    }
    return idx;
}

double EmpiricalYoungMeasure::center_of(std::size_t c, int axis) const {
    for (int j = 0; j < axis; ++j) c /= std::size_t(cells);
    return (double(c % std::size_t(cells)) + 0.5) / cells;
}

double EmpiricalYoungMeasure::bin_lo(int coord, int i) const {
    double lo = coord == 0 ? 0.0 : -radius, w = (coord == 0 ? radius : 2 * radius) / bins;
    return lo + i * w;
}

double EmpiricalYoungMeasure::bin_hi(int coord, int i) const { return bin_lo(coord, i + 1); }

std::uint64_t EmpiricalYoungMeasure::bin_key(const double* z) const {
    std::uint64_t key = 0, stride = 1;
    for (int c = 0; c < state_dim(); ++c) {
        double lo = bin_lo(c, 0), w = bin_lo(c, 1) - lo;
        int i = std::clamp(int(std::floor((z[c] - lo) / w)), 0, bins - 1);
        key += std::uint64_t(i) * stride;
        stride *= std::uint64_t(bins);
    }
    return key;
}

void EmpiricalYoungMeasure::bin_index(std::uint64_t key, int* idx) const {
    for (int c = 0; c < state_dim(); ++c) {
        idx[c] = int(key % std::uint64_t(bins));
        key /= std::uint64_t(bins);
    }
}

namespace {

EmpiricalYoungMeasure layout(const YMSnapshot& snap, int cells, int bins, double radius) {
    if (cells < 1) throw DomainError("cell count must be >= 1");
    if (bins < 1) throw DomainError("bin count must be >= 1");
    if (!(radius > 0.0)) throw DomainError("truncation radius must be positive");
    snap.validate();
    EmpiricalYoungMeasure nu;
    nu.dim = snap.dim;
    nu.cells = cells;
    nu.bins = bins;
    nu.radius = radius;
    std::size_t nc = 1;
    for (int j = 0; j < snap.dim; ++j) nc *= std::size_t(cells);
    nu.cell.resize(nc);
    std::vector<KahanSum> vol(nc);
    for (std::size_t p = 0; p < snap.size(); ++p) {
        std::size_t c = nu.cell_of(snap.points.data() + p * snap.dim);
        vol[c].add(snap.weights[p]);
        ++nu.cell[c].samples;
    }
    for (std::size_t c = 0; c < nc; ++c) {
        if (nu.cell[c].samples == 0) throw DomainError("cells finer than the sample grid: cell " + std::to_string(c) + " is empty");
        nu.cell[c].volume = vol[c].value();
    }
    return nu;
}

// Accumulates the samples accepted by `keep` into the histogram of `nu`.
template <class Keep>
void accumulate(EmpiricalYoungMeasure& nu, const YMSnapshot& snap, Keep keep) {
    int D = nu.state_dim();
    double z[5];
    for (std::size_t p = 0; p < snap.size(); ++p) {
        snap.state(p, z);
        if (!keep(z)) continue;
        YMCell& cell = nu.cell[nu.cell_of(snap.points.data() + p * snap.dim)];
        double w = snap.weights[p] / cell.volume;
        double zmax = 0.0;
        for (int c = 0; c < D; ++c) zmax = std::max(zmax, std::abs(z[c]));
        if (zmax > nu.radius) {
            cell.overflow += w;
            continue;
        }
        YMBin& b = cell.bins[nu.bin_key(z)];
        if (b.sum.empty()) b.sum.assign(D, 0.0);
        b.weight += w;
        for (int c = 0; c < D; ++c) b.sum[c] += w * z[c];
    }
}

}  // namespace

EmpiricalYoungMeasure build_empirical_measure(const YMSnapshot& snap, int cells, int bins, double radius) {
    EmpiricalYoungMeasure nu = layout(snap, cells, bins, radius);
    accumulate(nu, snap, [](const double*) { return true; });
    return nu;
}

std::string tag_name(YMTag tag) {
    switch (tag) {
        case YMTag::S: return "s";
        case YMTag::SV: return "sv";
        case YMTag::SVV: return "svv";
        case YMTag::SV2: return "sv2";
        case YMTag::FF: return "FF";
        case YMTag::F2: return "F2";
        case YMTag::SVAbs: return "svabs";
    }
    return "";
}

YMTag tag_from_name(const std::string& name) {
    for (YMTag t : all_tags())
        if (tag_name(t) == name) return t;
    throw ConfigError("unknown tag '" + name + "'");
}

std::vector<YMTag> all_tags() {
    return {YMTag::S, YMTag::SV, YMTag::SVV, YMTag::SV2, YMTag::FF, YMTag::F2, YMTag::SVAbs};
}

int tag_components(YMTag tag, int dim) {
    switch (tag) {
        case YMTag::SV: return dim;
        case YMTag::SVV:
        case YMTag::FF: return dim * dim;
        default: return 1;
    }
}

bool tag_nonnegative(YMTag tag) {
    return tag == YMTag::S || tag == YMTag::SV2 || tag == YMTag::F2 || tag == YMTag::SVAbs;
}

void tag_eval(YMTag tag, const double* z, int dim, double* out) {
    double s = z[0];
    const double* v = z + 1;
    const double* F = z + 1 + dim;
    double v2 = 0.0, F2 = 0.0;
    for (int j = 0; j < dim; ++j) {
        v2 += v[j] * v[j];
        F2 += F[j] * F[j];
    }
    switch (tag) {
        case YMTag::S: out[0] = s; break;
        case YMTag::SV:
            for (int j = 0; j < dim; ++j) out[j] = s * v[j];
            break;
        case YMTag::SVV:
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) out[i * dim + j] = s * v[i] * v[j];
            break;
        case YMTag::SV2: out[0] = s * v2; break;
        case YMTag::FF:
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) out[i * dim + j] = F[i] * F[j];
            break;
        case YMTag::F2: out[0] = F2; break;
        case YMTag::SVAbs: out[0] = s * std::sqrt(v2); break;
    }
}

double TruncationLadder::theta(int k, double r) {
    if (r <= k) return 1.0;
    if (r >= k + 1) return 0.0;
    return 1.0 + k - r;
}

YMMoment moment(const EmpiricalYoungMeasure& nu, YMTag tag, const TruncationLadder& ladder) {
    int d = nu.dim, D = nu.state_dim();
    YMMoment m;
    m.tag = tag;
    m.comps = tag_components(tag, d);
    m.cells = nu.cell_count();
    m.levels = ladder.levels.size();
    m.values.assign(m.cells * m.levels * m.comps, 0.0);
    std::vector<double> f(m.comps);
    for (std::size_t c = 0; c < m.cells; ++c) {
        std::vector<KahanSum> acc(m.levels * m.comps);
        for (const auto& [key, b] : nu.cell[c].bins) {
            double zc[5], r2 = 0.0;
            for (int i = 0; i < D; ++i) {
                zc[i] = b.sum[i] / b.weight;
                r2 += zc[i] * zc[i];
            }
            double r = std::sqrt(r2);
            tag_eval(tag, zc, d, f.data());
            for (std::size_t l = 0; l < m.levels; ++l) {
                double th = TruncationLadder::theta(ladder.levels[l], r);
                if (th == 0.0) continue;
                for (int i = 0; i < m.comps; ++i) acc[l * m.comps + i].add(b.weight * th * f[i]);
            }
        }
        for (std::size_t l = 0; l < m.levels; ++l)
            for (int i = 0; i < m.comps; ++i) m.values[(c * m.levels + l) * m.comps + i] = acc[l * m.comps + i].value();
    }
    return m;
}

std::vector<double> cell_average(const YMSnapshot& snap, const EmpiricalYoungMeasure& layout, YMTag tag) {
    int d = snap.dim, comps = tag_components(tag, d);
    std::size_t nc = layout.cell_count();
    std::vector<KahanSum> acc(nc * comps);
    std::vector<double> f(comps);
    double z[5];
    for (std::size_t p = 0; p < snap.size(); ++p) {
        snap.state(p, z);
        tag_eval(tag, z, d, f.data());
        std::size_t c = layout.cell_of(snap.points.data() + p * d);
        for (int i = 0; i < comps; ++i) acc[c * comps + i].add(snap.weights[p] * f[i]);
    }
    std::vector<double> out(nc * comps);
    for (std::size_t c = 0; c < nc; ++c)
        for (int i = 0; i < comps; ++i) out[c * comps + i] = acc[c * comps + i].value() / layout.cell[c].volume;
    return out;
}

namespace {

double radius_of(const YMFamily& family, const YMOptions& opt) {
    return opt.radius > 0.0 ? opt.radius : family.default_radius();
}

ConcentrationDefect defect_from(const YMSnapshot& snap, const EmpiricalYoungMeasure& nu, YMTag tag,
                                const TruncationLadder& ladder) {
    YMMoment m = moment(nu, tag, ladder);
    std::vector<double> avg = cell_average(snap, nu, tag);
    ConcentrationDefect def;
    def.tag = tag;
    def.comps = m.comps;
    def.cells = m.cells;
    def.levels = m.levels;
    def.value.resize(m.cells * m.comps);
    def.mass.resize(m.cells * m.comps);
    def.by_level.resize(m.cells * m.levels * m.comps);
    for (std::size_t c = 0; c < m.cells; ++c)
        for (int i = 0; i < m.comps; ++i) {
            double a = avg[c * m.comps + i];
            def.value[c * m.comps + i] = a - m.limit(c, i);
            def.mass[c * m.comps + i] = def.value[c * m.comps + i] * nu.cell[c].volume;
            for (std::size_t l = 0; l < m.levels; ++l) def.by_level[(c * m.levels + l) * m.comps + i] = a - m.at(c, l, i);
        }
    return def;
}

void check_family(const YMFamily& family) {
    if (family.members.size() < 2) throw DomainError("a defect needs at least two family members");
    if (family.eps.size() != family.members.size()) throw DomainError("family eps and members differ in length");
    for (std::size_t i = 1; i < family.eps.size(); ++i)
        if (!(family.eps[i] < family.eps[i - 1])) throw DomainError("family eps must be strictly decreasing");
}

}  // namespace

ConcentrationDefect concentration_defect(const YMFamily& family, YMTag tag, const YMOptions& opt,
                                         const TruncationLadder& ladder) {
    check_family(family);
    EmpiricalYoungMeasure nu = build_empirical_measure(family.finest(), opt.cells, opt.bins, radius_of(family, opt));
    return defect_from(family.finest(), nu, tag, ladder);
}

std::map<YMTag, ConcentrationDefect> all_defects(const YMFamily& family, const YMOptions& opt,
                                                 const TruncationLadder& ladder) {
    check_family(family);
    EmpiricalYoungMeasure nu = build_empirical_measure(family.finest(), opt.cells, opt.bins, radius_of(family, opt));
    std::map<YMTag, ConcentrationDefect> out;
    for (YMTag t : all_tags()) out.emplace(t, defect_from(family.finest(), nu, t, ladder));
    return out;
}

DominationReport domination_check(const std::map<YMTag, ConcentrationDefect>& defects, double tol) {
    for (YMTag t : all_tags())
        if (!defects.count(t)) throw DomainError("domination check needs the " + tag_name(t) + " defect");
    const ConcentrationDefect& svv = defects.at(YMTag::SVV);
    const ConcentrationDefect& sv2 = defects.at(YMTag::SV2);
    const ConcentrationDefect& ff = defects.at(YMTag::FF);
    const ConcentrationDefect& f2 = defects.at(YMTag::F2);
    const ConcentrationDefect& s = defects.at(YMTag::S);
    const ConcentrationDefect& sva = defects.at(YMTag::SVAbs);
    int d = int(std::lround(std::sqrt(double(svv.comps))));
    DominationReport rep;
    rep.min_margin = INFINITY;
    auto add = [&](const char* rel, std::size_t c, double lhs, double rhs) {
        DominationEntry e{rel, c, lhs, rhs, lhs <= rhs + tol};
        rep.all_pass = rep.all_pass && e.pass;
        rep.min_margin = std::min(rep.min_margin, rhs - lhs);
        rep.entries.push_back(e);
    };
    for (std::size_t c = 0; c < svv.cells; ++c) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < svv.comps; ++i) {
            a += std::abs(svv.at(c, i));
            b += std::abs(ff.at(c, i));
        }
        add("|m_svv|_1 <= d m_sv2", c, a, d * sv2.at(c));
        add("|m_FF|_1 <= d m_F2", c, b, d * f2.at(c));
        add("|m_svabs| <= m_s + m_sv2", c, std::abs(sva.at(c)), s.at(c) + sv2.at(c));
    }
    return rep;
}

std::vector<ProjectionEntry> projection_consistency(const YMSnapshot& snap, const std::vector<double>& alphas,
                                                    const YMOptions& opt) {
    double R = opt.radius > 0.0 ? opt.radius : 10.0 * snap.max_abs();
    EmpiricalYoungMeasure full = build_empirical_measure(snap, opt.cells, opt.bins, R);
    std::vector<ProjectionEntry> out;
    for (double alpha : alphas) {
        EmpiricalYoungMeasure part = layout(snap, opt.cells, opt.bins, R);
        accumulate(part, snap, [alpha](const double* z) { return z[0] > alpha; });
        ProjectionEntry e;
        e.alpha = alpha;
        KahanSum rw, mw, st;
        for (std::size_t c = 0; c < full.cell_count(); ++c) {
            double vol = full.cell[c].volume;
            for (const auto& [key, b] : full.cell[c].bins) {
                int idx[5];
                full.bin_index(key, idx);
                double lo = full.bin_lo(0, idx[0]), hi = full.bin_hi(0, idx[0]);
                auto it = part.cell[c].bins.find(key);
                double pw = it == part.cell[c].bins.end() ? 0.0 : it->second.weight;
                if (lo > alpha) {
                    mw.add(vol * b.weight);
                    e.max_above = std::max(e.max_above, std::abs(pw - b.weight));
                } else if (hi > alpha) {
                    st.add(vol * std::abs(pw - b.weight));
                }
            }
            rw.add(vol * part.cell[c].finite_weight());
        }
        e.restricted_weight = rw.value();
        e.marginal_weight = mw.value();
        e.straddle = st.value();
        e.both_empty = e.restricted_weight == 0.0 && e.marginal_weight == 0.0;
        out.push_back(e);
    }
    return out;
}

PairConstants pair_constants(double Ui, double Uj, double U_inf, double delta, bool diagonal) {
    PairConstants k;
    k.c = 2 * U_inf + 1;
    k.C1 = 1 + U_inf;
    k.C2 = 1 + 2 * U_inf;
    const double pts[4] = {-1.0, -delta, delta, 1.0};
    if (diagonal) {
        for (double v : pts) k.K = std::max(k.K, std::abs(v * v + 2 * Ui * v));
        if (std::abs(Ui) >= delta && std::abs(Ui) <= 1.0) k.K = std::max(k.K, Ui * Ui);
    } else {
        for (double a : pts)
            for (double b : pts) k.K = std::max(k.K, std::abs(a * b + Uj * a + Ui * b));
    }
    k.C_delta = std::max({k.C1, k.C2, k.K / (delta * delta)});
    return k;
}

InequalityStats inequality_suite(std::size_t n, int dim, std::uint64_t seed) {
    if (dim < 1) throw DomainError("dimension must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-10.0, 10.0), unit(0.0, 1.0);
    InequalityStats st;
    std::vector<double> u(dim), U(dim), v(dim);
    for (std::size_t s = 0; s < n; ++s) {
        double U_inf = 0.0;
        for (int i = 0; i < dim; ++i) {
            u[i] = box(rng);
            U[i] = box(rng);
        }
        double delta = 0.0;
        while (delta == 0.0) delta = unit(rng);
        for (int i = 0; i < dim; ++i) {
            v[i] = u[i] - U[i];
            U_inf = std::max(U_inf, std::abs(U[i]));
        }
        ++st.samples;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                PairConstants k = pair_constants(U[i], U[j], U_inf, delta, i == j);
                double lhs = std::abs(u[i] * u[j] - U[i] * U[j]);
                double rhs = k.c * delta + k.C_delta * (v[i] * v[i] + v[j] * v[j]);
                ++st.pair_checks;
                if (lhs <= rhs) ++st.pair_pass;
                st.worst_pair_ratio = std::max(st.worst_pair_ratio, lhs / rhs);
            }
        double sum = 0.0, tr = 0.0;
        for (int i = 0; i < dim; ++i) {
            tr += v[i] * v[i];
            for (int j = 0; j < dim; ++j) sum += std::abs(v[i] * v[j]);
        }
        ++st.trace_checks;
        if (sum <= dim * tr) ++st.trace_pass;
        if (tr > 0.0) st.worst_trace_ratio = std::max(st.worst_trace_ratio, sum / (dim * tr));
    }
    return st;
}

double trace_bound_gap_ones(int dim) {
    double sum = 0.0, tr = 0.0;
    for (int i = 0; i < dim; ++i) {
        tr += 1.0;
        for (int j = 0; j < dim; ++j) sum += 1.0;
    }
    return dim * tr - sum;
}

namespace {

YMSnapshot midpoint_snapshot(std::size_t n) {
    YMSnapshot s;
    s.dim = 1;
    s.points.resize(n);
    s.weights.assign(n, 1.0 / double(n));
    for (std::size_t i = 0; i < n; ++i) s.points[i] = (double(i) + 0.5) / double(n);
    s.rho.resize(n);
    s.u.resize(n);
    s.gphi.resize(n);
    return s;
}

}  // namespace

YMSnapshot oscillation_snapshot(double eps, std::size_t n) {
    YMSnapshot s = midpoint_snapshot(n);
    for (std::size_t i = 0; i < n; ++i) {
        double w = std::sin(s.points[i] / eps);
        s.rho[i] = 1.0;
        s.u[i] = w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0);
        s.gphi[i] = 0.0;
    }
    return s;
}

YMSnapshot concentration_snapshot(double eps, std::size_t n, double u0, double u1) {
    YMSnapshot s = midpoint_snapshot(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = s.points[i];
        s.rho[i] = x < eps ? 1.0 / eps : 0.0;
        s.u[i] = u0 + u1 * x;
        s.gphi[i] = x - std::min(x, eps) / eps;
    }
    return s;
}

YMSnapshot concentration_snapshot_2d(double eps, std::size_t n, double v0, double v1) {
    YMSnapshot s;
    s.dim = 2;
    std::size_t N = n * n;
    s.points.resize(2 * N);
    s.weights.assign(N, 1.0 / double(N));
    s.rho.resize(N);
    s.u.resize(2 * N);
    s.gphi.assign(2 * N, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t p = j * n + i;
            double x = (double(i) + 0.5) / double(n), y = (double(j) + 0.5) / double(n);
            s.points[2 * p] = x;
            s.points[2 * p + 1] = y;
            s.rho[p] = x < eps && y < eps ? 1.0 / (eps * eps) : 0.0;
            s.u[2 * p] = v0;
            s.u[2 * p + 1] = v1;
        }
    return s;
}

YMSnapshot smooth_snapshot(double eps, std::size_t n) {
    YMSnapshot s = midpoint_snapshot(n);
    double M = 1.0 + eps * eps * (1.0 - std::cos(1.0 / eps));
    for (std::size_t i = 0; i < n; ++i) {
        double x = s.points[i];
        s.rho[i] = 1.0 + 0.5 * std::cos(kPi * x) + eps * std::sin(x / eps);
        s.u[i] = 0.3 * std::sin(kPi * x);
        double cum = x + 0.5 * std::sin(kPi * x) / kPi + eps * eps * (1.0 - std::cos(x / eps));
        s.gphi[i] = -(cum - M * x);
    }
    return s;
}

YMFamily make_family(const std::vector<double>& eps, YMSnapshot (*make)(double, std::size_t), std::size_t n) {
    YMFamily f;
    f.eps = eps;
    for (double e : eps) f.members.push_back(make(e, n));
    return f;
}

YMFamily concentration_family(const std::vector<double>& eps, std::size_t n, double u0, double u1) {
    YMFamily f;
    f.eps = eps;
    for (double e : eps) f.members.push_back(concentration_snapshot(e, n, u0, u1));
    return f;
}

}  // namespace epsim
