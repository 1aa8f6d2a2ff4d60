#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "epsim/errors.hpp"
#include "epsim/young_measure.hpp"

using namespace epsim;

namespace {

constexpr std::size_t kSamples = 1 << 14;

YMSnapshot constant_state(std::size_t n) {
    YMSnapshot s = oscillation_snapshot(1.0, n);
    for (double& v : s.u) v = 0.0;
    return s;
}

}  // namespace

TEST_CASE("constant state has a single bin of mass one per cell") {
    YMSnapshot s = constant_state(1024);
    EmpiricalYoungMeasure nu = build_empirical_measure(s, 8, 32, 10.0);
    REQUIRE(nu.cell_count() == 8);
    for (const YMCell& c : nu.cell) {
        CHECK(c.bins.size() == 1);
        CHECK(std::abs(c.bins.begin()->second.weight - 1.0) <= 1e-12);
        CHECK(c.overflow == 0.0);
        CHECK(std::abs(c.volume - 0.125) <= 1e-15);
    }
    YMMoment m = moment(nu, YMTag::S);
    for (std::size_t c = 0; c < 8; ++c)
        for (std::size_t l = 0; l < m.levels; ++l) CHECK(std::abs(m.at(c, l) - 1.0) <= 1e-12);
}

TEST_CASE("two-point oscillation gives half and half") {
    YMSnapshot s = oscillation_snapshot(1e-4, kSamples);
    EmpiricalYoungMeasure nu = build_empirical_measure(s, 8, 32, 10.0);
    YMMoment v = moment(nu, YMTag::SV), v2 = moment(nu, YMTag::SV2);
    for (std::size_t c = 0; c < nu.cell_count(); ++c) {
        const YMCell& cell = nu.cell[c];
        REQUIRE(cell.bins.size() == 2);
        for (const auto& [key, b] : cell.bins) {
            CHECK(std::abs(b.weight - 0.5) <= 0.02);
            CHECK(std::abs(std::abs(b.sum[1] / b.weight) - 1.0) <= 1e-12);
        }
        CHECK(std::abs(v.limit(c)) <= 0.02);
        CHECK(std::abs(v2.limit(c) - 1.0) <= 1e-12);
    }
}

TEST_CASE("weights form a sub-probability per cell") {
    for (double eps : {1.0 / 16, 1.0 / 256}) {
        YMSnapshot s = concentration_snapshot(eps, kSamples);
        EmpiricalYoungMeasure nu = build_empirical_measure(s, 8, 32, 160.0);
        for (const YMCell& c : nu.cell) {
            double fw = c.finite_weight();
            CHECK(fw >= 0.0);
            CHECK(fw <= 1.0 + 1e-12);
            CHECK(std::abs(fw + c.overflow - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("concentrating density leaves unit defect in the first cell") {
    YMFamily f = concentration_family({1.0 / 16, 1.0 / 64, 1.0 / 256}, kSamples);
    CHECK(f.default_radius() == 160.0);
    ConcentrationDefect d = concentration_defect(f, YMTag::S);
    CHECK(std::abs(d.mass_at(0) - 1.0) <= 0.02);
    EmpiricalYoungMeasure nu = build_empirical_measure(f.finest(), 8, 32, f.default_radius());
    YMMoment s = moment(nu, YMTag::S);
    for (std::size_t c = 0; c < nu.cell_count(); ++c) {
        CHECK(s.limit(c) <= 0.02);
        if (c > 0) CHECK(std::abs(d.mass_at(c)) <= 0.02);
    }
    // m^{s|v|^2} = |u(0)|^2 m^s for bounded u
    ConcentrationDefect k = concentration_defect(f, YMTag::SV2);
    double u0 = 0.5;
    CHECK(std::abs(k.mass_at(0) - u0 * u0 * d.mass_at(0)) <= 0.05 * u0 * u0 * d.mass_at(0));
}

TEST_CASE("truncated moments are monotone in the ladder level") {
    YMSnapshot s = concentration_snapshot(1.0 / 16, kSamples);
    EmpiricalYoungMeasure nu = build_empirical_measure(s, 8, 32, 160.0);
    for (YMTag t : all_tags()) {
        if (!tag_nonnegative(t)) continue;
        YMMoment m = moment(nu, t);
        for (std::size_t c = 0; c < m.cells; ++c)
            for (std::size_t l = 1; l < m.levels; ++l) CHECK(m.at(c, l) >= m.at(c, l - 1));
    }
    CHECK(TruncationLadder::theta(4, 3.0) == 1.0);
    CHECK(TruncationLadder::theta(4, 4.25) == 0.75);
    CHECK(TruncationLadder::theta(4, 5.0) == 0.0);
}

TEST_CASE("smooth bounded family has defects within binning error") {
    YMFamily f = make_family({1e-2, 1e-3, 1e-4}, smooth_snapshot, kSamples);
    auto defects = all_defects(f);
    for (const auto& [tag, d] : defects) {
        std::vector<double> avg = cell_average(f.finest(), build_empirical_measure(f.finest(), 8, 32, f.default_radius()), tag);
        for (std::size_t i = 0; i < d.value.size(); ++i)
            CHECK(std::abs(d.value[i]) <= 0.02 * std::max(1.0, std::abs(avg[i])));
        if (tag_nonnegative(tag))
            for (double v : d.value) CHECK(v >= -0.02);
    }
    CHECK(domination_check(defects, 0.02).all_pass);
}

TEST_CASE("domination relations") {
    SUBCASE("zero defects pass") {
        std::map<YMTag, ConcentrationDefect> zero;
        for (YMTag t : all_tags()) {
            ConcentrationDefect d;
            d.tag = t;
            d.comps = tag_components(t, 1);
            d.cells = 2;
            d.value.assign(2 * d.comps, 0.0);
            zero.emplace(t, d);
        }
        CHECK(domination_check(zero).all_pass);
    }
    SUBCASE("concentrating family with bounded velocity") {
        YMFamily f = concentration_family({1.0 / 16, 1.0 / 64, 1.0 / 256}, kSamples);
        auto defects = all_defects(f);
        DominationReport r = domination_check(defects);
        CHECK(r.all_pass);
        for (const auto& e : r.entries)
            if (e.relation == "|m_svabs| <= m_s + m_sv2" && e.cell == 0) CHECK(e.lhs < e.rhs);
    }
    SUBCASE("rank-one tensor defect makes the trace bound tight") {
        YMFamily f;
        f.eps = {1.0 / 8, 1.0 / 64};
        for (double e : f.eps) f.members.push_back(concentration_snapshot_2d(e, 256));
        auto defects = all_defects(f, YMOptions{4, 32, 0.0});
        DominationReport r = domination_check(defects);
        CHECK(r.all_pass);
        const ConcentrationDefect& svv = defects.at(YMTag::SVV);
        const ConcentrationDefect& sv2 = defects.at(YMTag::SV2);
        double l1 = 0.0;
        for (int i = 0; i < 4; ++i) l1 += std::abs(svv.at(0, i));
        CHECK(sv2.mass_at(0) > 0.9);
        CHECK(std::abs(l1 - 2 * sv2.at(0)) <= 1e-12 * l1);
    }
    SUBCASE("a violated relation is reported") {
        std::map<YMTag, ConcentrationDefect> bad;
        for (YMTag t : all_tags()) {
            ConcentrationDefect d;
            d.tag = t;
            d.comps = tag_components(t, 1);
            d.cells = 1;
            d.value.assign(d.comps, t == YMTag::SVAbs ? 1.0 : 0.0);
            bad.emplace(t, d);
        }
        DominationReport r = domination_check(bad);
        CHECK_FALSE(r.all_pass);
        CHECK(r.min_margin == -1.0);
    }
}

TEST_CASE("projection onto positive-density sets") {
    YMOptions opt{8, 32, 0.0};
    SUBCASE("strictly positive smooth snapshot agrees exactly") {
        YMSnapshot s = smooth_snapshot(1e-3, kSamples);
        for (const ProjectionEntry& e : projection_consistency(s, {0.1, 0.3}, opt)) {
            CHECK(e.max_above == 0.0);
            CHECK(e.straddle == 0.0);
            CHECK(std::abs(e.restricted_weight - 1.0) <= 1e-12);
        }
    }
    SUBCASE("near-vacuum cells differ only in the straddling bin") {
        YMSnapshot s = smooth_snapshot(1e-3, kSamples);
        for (std::size_t i = 0; i < s.size(); ++i) s.rho[i] = 0.01 + 2 * std::pow(s.points[i], 4);
        auto es = projection_consistency(s, {0.5, 0.05, 0.02}, opt);
        for (const ProjectionEntry& e : es) {
            CHECK(e.max_above == 0.0);
            CHECK(e.straddle > 0.0);
            CHECK(e.restricted_weight >= e.marginal_weight);
        }
        CHECK(es[2].restricted_weight > es[0].restricted_weight);
    }
    SUBCASE("alpha above the maximum density empties both sides") {
        YMSnapshot s = smooth_snapshot(1e-3, kSamples);
        auto es = projection_consistency(s, {2.0}, opt);
        CHECK(es[0].both_empty);
    }
}

TEST_CASE("pairwise and trace inequalities") {
    PairConstants k = pair_constants(0.0, 0.0, 0.0, 0.5, true);
    CHECK(k.c == 1.0);
    CHECK(k.K == 1.0);
    CHECK(k.C_delta == 4.0);
    // U = (2, -3), delta = 0.25, i != j: v_i v_j - 3 v_i + 2 v_j peaks in modulus at (1, -1) with 6
    PairConstants o = pair_constants(2.0, -3.0, 3.0, 0.25, false);
    CHECK(o.c == 7.0);
    CHECK(o.K == 6.0);
    CHECK(o.C_delta == 96.0);
    // U = 0.5 in [delta, 1]: the interior extremum v = -U gives U^2 = 0.25,
    // below the endpoint value |1 + 1| = 2
    CHECK(pair_constants(0.5, 0.5, 0.5, 0.1, true).K == 2.0);

    for (int d : {1, 2, 3}) {
        InequalityStats st = inequality_suite(10000, d, 1234 + d);
        CHECK(st.samples == 10000);
        CHECK(st.pair_checks == std::size_t(10000 * d * d));
        CHECK(st.all_pass());
        CHECK(st.worst_pair_ratio <= 1.0);
        CHECK(st.worst_trace_ratio <= 1.0);
    }
    CHECK(trace_bound_gap_ones(2) == 0.0);
    CHECK(std::abs(trace_bound_gap_ones(5)) <= 1e-12);
}

TEST_CASE("equal arguments make the pairwise left side vanish") {
    double U[2] = {3.0, -1.0}, delta = 0.3;
    PairConstants k = pair_constants(U[0], U[1], 3.0, delta, false);
    double lhs = std::abs(U[0] * U[1] - U[0] * U[1]);
    double rhs = k.c * delta + k.C_delta * 0.0;
    CHECK(lhs == 0.0);
    CHECK(std::abs(rhs - 2.1) <= 1e-15);
}

TEST_CASE("cells finer than the grid are rejected") {
    YMSnapshot s = constant_state(16);
    CHECK_THROWS_AS(build_empirical_measure(s, 32, 32, 10.0), DomainError);
    CHECK_NOTHROW(build_empirical_measure(s, 16, 32, 10.0));
    YMFamily one;
    one.eps = {0.1};
    one.members = {s};
    CHECK_THROWS_AS(concentration_defect(one, YMTag::S), DomainError);
}

TEST_CASE("tag names round trip") {
    for (YMTag t : all_tags()) CHECK(tag_from_name(tag_name(t)) == t);
    CHECK_THROWS_AS(tag_from_name("rho"), ConfigError);
    CHECK(tag_components(YMTag::SVV, 2) == 4);
    CHECK(tag_components(YMTag::SV, 2) == 2);
}
