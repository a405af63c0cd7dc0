#include <doctest.h>

#include <cmath>
#include <random>

#include "cgc/errors.hpp"
#include "cgc/latency.hpp"
#include "cgc/oracles.hpp"
#include "cgc/saddlepoint.hpp"

using namespace cgc;

TEST_CASE("empirical distribution") {
    EmpiricalDistribution d({3, 1, 2, 4});
    CHECK(d.cdf(0.5) == 0);
    CHECK(d.cdf(2) == 0.5);
    CHECK(d.cdf(4) == 1);
    CHECK(d.mean() == 2.5);
    CHECK(d.std_error(2) == doctest::Approx(std::sqrt(0.25 / 4)));
    CHECK(d.quantile(0.5) == 2);
    auto e = d.mean_excess(2.0);
    CHECK(e.mean == doctest::Approx((0 + 0 + 1 + 2) / 4.0));
}

TEST_CASE("Monte Carlo is reproducible and thread-count independent") {
    auto sc = preset("fig6");
    McOptions a, b;
    a.threads = 1;
    b.threads = 3;
    auto r1 = mc_closed_loop(sc, 1.2, 20000, 42, a);
    auto r2 = mc_closed_loop(sc, 1.2, 20000, 42, b);
    auto r3 = mc_closed_loop(sc, 1.2, 20000, 43, a);
    CHECK(r1.draws.at("T").sorted() == r2.draws.at("T").sorted());
    CHECK(r1.curves.at("T_ET").ps == r2.curves.at("T_ET").ps);
    CHECK(r1.summary_json(false) == r2.summary_json(false));
    CHECK(r1.draws.at("T").sorted() != r3.draws.at("T").sorted());
    CHECK_THROWS_AS(mc_closed_loop(sc, 1.2, 999, 1), ConfigError);
}

TEST_CASE("empirical curves are proper") {
    auto r = mc_closed_loop(preset("fig4"), 1.1, 20000, 3);
    for (const auto& [k, c] : r.curves) {
        for (std::size_t i = 1; i < c.ps.size(); ++i) CHECK(c.ps[i] >= c.ps[i - 1]);
        CHECK(c.ps.front() >= 0);
        CHECK(c.ps.back() <= 1);
    }
    CHECK(r.curves.at("T_CL").ps.back() == 1);
    // T_FL = max(tau_PF, T_ET), T = T_CL + T_FL
    const auto& fl = r.draws.at("T_FL").sorted();
    CHECK(fl.front() >= 0.15);
    CHECK(r.draws.at("T").mean() == doctest::Approx(r.draws.at("T_CL").mean() + r.draws.at("T_FL").mean()).epsilon(1e-12));
}

TEST_CASE("error-free links give exact slot offsets") {
    auto sc = preset("fig6");
    for (auto& [id, l] : sc.links) l.outage_prob = 0;
    auto r = mc_closed_loop(sc, 1.2, 5000, 8);
    LatencyModel lm(sc, 1.2);
    double cl_offset = double(lm.cl_pmf().base_index) * sc.t_u;
    double et_offset = double(lm.et_pmf().base_index) * sc.t_u;
    CHECK(r.draws.at("T_CL").sorted().front() > cl_offset);
    CHECK(r.draws.at("T_ET").sorted().front() > et_offset);
    CHECK(r.draws.at("T_ET").mean() == doctest::Approx(et_mean(sc, 1.2)).epsilon(0.03));
}

TEST_CASE("Monte Carlo agrees with the analytic ET law at its 0.99 point") {
    auto sc = preset("fig4");
    auto r = mc_closed_loop(sc, 1.1, 200000, 7);
    LatencyModel lm(sc, 1.1);
    const auto& d = r.draws.at("T_ET");
    double x = d.quantile(0.99);
    CHECK(std::abs(lm.et(x).cdf - d.cdf(x)) <= 3 * d.std_error(x) + 1e-4);
}

TEST_CASE("truncated convolution on a single gamma") {
    std::vector<GammaTerm> one{{2, 1}};
    auto err = [&](double d1, Discretization mode) {
        TruncConvOptions o;
        o.mode = mode;
        auto c = truncated_convolution_cdf(one, d1, 20, o);
        double w = 0;
        for (double x = 0; x < 19; x += 0.01) w = std::max(w, std::abs(step_value(c, x) - exact_gamma_cdf(2, 1, x)));
        return w;
    };
    CHECK(err(1e-3, Discretization::CellMass) <= 2e-3);
    CHECK(err(1e-3, Discretization::DensitySample) <= 2e-3);
    double ratio = err(2e-3, Discretization::DensitySample) / err(1e-3, Discretization::DensitySample);
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.5);
}

TEST_CASE("a narrow gamma shifts the convolution by its mean") {
    std::vector<GammaTerm> terms{{2, 1}, {1e6, 1e6 / 2.0}};
    auto c = truncated_convolution_cdf(terms, 1e-3, 20);
    for (double x : {2.5, 3.0, 4.0, 6.0}) CHECK(std::abs(step_value(c, x) - exact_gamma_cdf(2, 1, x - 2)) < 5e-3);
    TruncConvOptions tiny;
    tiny.budget = 10;
    CHECK_THROWS_AS(truncated_convolution_cdf(terms, 1e-3, 20, tiny), ConfigError);
}

TEST_CASE("exact lattice convolution") {
    LatticeTerm a{2, 0.3, 1.0}, b{3, 0.1, 1.0};
    auto one = exact_lattice_convolution({a});
    for (long k = 2; k < 15; ++k) CHECK(one.at(k) == doctest::Approx(exact_negbin_pmf(a, k)).epsilon(1e-9));
    auto two = exact_lattice_convolution({a, b});
    CHECK(two.total() == doctest::Approx(1).epsilon(1e-9));
    CHECK(two.base_index == 5);
    CgfModel m;
    m.lattice_terms = {a, b};
    double cum = two.at(5);
    for (long k = 6; cum < 0.999; ++k) {
        cum += two.at(k);
        CHECK(std::abs(spa_pmf(m, k) / two.at(k) - 1) <= 0.1);
    }
}
