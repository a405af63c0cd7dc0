#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cgc/distributions.hpp"
#include "cgc/errors.hpp"

using namespace cgc;

namespace {

// 1 - e^-x sum_{j<n} x^j/j!, the integer-shape gamma CDF
double erlang_cdf(int n, double x) {
    double term = 1, sum = 0;
    for (int j = 0; j < n; ++j) {
        sum += term;
        term *= x / (j + 1);
    }
    return 1 - std::exp(-x) * sum;
}

double binom(long n, long k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

// log E[e^{s X}] by summing the attempt distribution directly
double lattice_cgf_series(const LatticeTerm& t, double s) {
    // log-space terms, summed relative to the first
    std::vector<double> lt;
    for (long k = t.packets; k < t.packets + 4000; ++k)
        lt.push_back(std::log(binom(k - 1, t.packets - 1)) + t.packets * std::log1p(-t.failure_prob) +
                     double(k - t.packets) * std::log(t.failure_prob) + s * double(k) * t.spacing);
    double top = *std::max_element(lt.begin(), lt.end()), m = 0;
    for (double v : lt) m += std::exp(v - top);
    return top + std::log(m);
}

}  // namespace

TEST_CASE("gamma CDF agrees with the Erlang sum") {
    CHECK(exact_gamma_cdf(8, 1, 8) == doctest::Approx(0.5470391905).epsilon(1e-9));
    for (double x : {0.1, 1.0, 3.3, 8.0, 15.0})
        CHECK(exact_gamma_cdf(4, 2, x) == doctest::Approx(erlang_cdf(4, 2 * x)).epsilon(1e-12));
    CHECK(exact_gamma_cdf(2, 1, 0) == 0);
    CHECK(exact_gamma_cdf(2, 1, 3) + exact_gamma_sf(2, 1, 3) == doctest::Approx(1).epsilon(1e-15));
}

TEST_CASE("gamma term derivatives match finite differences") {
    CgfModel m;
    m.gamma_terms = {{1.5, 3.0}, {2.5, 7.0}};
    for (double s : {-4.0, -0.3, 0.0, 1.2, 2.7}) {
        double h = 1e-5;
        auto c = m.eval(s), p = m.eval(s + h), q = m.eval(s - h);
        CHECK(c.k1 == doctest::Approx((p.k0 - q.k0) / (2 * h)).epsilon(1e-7));
        CHECK(c.k2 == doctest::Approx((p.k1 - q.k1) / (2 * h)).epsilon(1e-7));
        CHECK(c.k3 == doctest::Approx((p.k2 - q.k2) / (2 * h)).epsilon(1e-6));
    }
    CHECK(m.domain_upper() == 3.0);
    CHECK_THROWS_AS(m.eval(3.0), DomainError);
}

TEST_CASE("lattice CGF equals the summed moment generating function") {
    LatticeTerm t{3, 0.2, 0.05};
    CgfModel m;
    m.lattice_terms = {t};
    for (double s : {-20.0, -1.0, 0.0, 5.0, 20.0}) CHECK(m.eval(s).k0 == doctest::Approx(lattice_cgf_series(t, s)).epsilon(1e-10));
    CHECK(m.domain_upper() == doctest::Approx(-std::log(0.2) / 0.05).epsilon(1e-14));
    double h = 1e-4;
    double s = 3.0;
    auto c = m.eval(s), p = m.eval(s + h), q = m.eval(s - h);
    CHECK(c.k1 == doctest::Approx((p.k0 - q.k0) / (2 * h)).epsilon(1e-7));
    CHECK(c.k2 == doctest::Approx((p.k1 - q.k1) / (2 * h)).epsilon(1e-7));
    CHECK(c.k3 == doctest::Approx((p.k2 - q.k2) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("model cumulants are sums of term cumulants") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int i = 0; i < 20; ++i) {
        CgfModel m;
        m.gamma_terms = {{u(rng), u(rng)}, {u(rng), u(rng)}};
        LatticeTerm l{int(u(rng) * 2) + 1, u(rng) / 10, 0.01};
        m.lattice_terms = {l};
        m.gaussian_terms = {{u(rng), u(rng) / 100}};
        double mean = l.spacing * negbin_mean(l) + m.gaussian_terms[0].mean;
        double var = l.spacing * l.spacing * negbin_variance(l) + m.gaussian_terms[0].variance;
        double k3 = 0;
        for (auto& g : m.gamma_terms) {
            mean += g.shape / g.rate;
            var += g.shape / (g.rate * g.rate);
            k3 += 2 * g.shape / std::pow(g.rate, 3);
        }
        double e = l.failure_prob, n = l.packets, t = l.spacing;
        k3 += t * t * t * n * e * (1 + e) / std::pow(1 - e, 3);
        CHECK(m.mean() == doctest::Approx(mean).epsilon(1e-12));
        CHECK(m.variance() == doctest::Approx(var).epsilon(1e-12));
        CHECK(m.third_cumulant() == doctest::Approx(k3).epsilon(1e-12));
        auto c = m.eval(0.0);
        CHECK(c.k0 == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(c.k1 == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("gaussian term and support") {
    CgfModel m;
    m.gaussian_terms = {{2.0, 0.5}};
    auto c = m.eval(1.5);
    CHECK(c.k0 == doctest::Approx(2.0 * 1.5 + 0.5 * 1.5 * 1.5 / 2));
    CHECK(c.k2 == 0.5);
    CHECK(c.k3 == 0);
    CHECK(std::isinf(m.support_infimum()));
    CgfModel g;
    g.gamma_terms = {{1, 1}};
    g.lattice_terms = {{4, 0.1, 0.5}};
    g.shift = 0.25;
    CHECK(g.support_infimum() == doctest::Approx(2.25));
}

TEST_CASE("negative binomial mass function") {
    LatticeTerm t{4, 0.3, 1.0};
    double total = 0, mean = 0;
    for (long k = 0; k < 400; ++k) {
        double p = exact_negbin_pmf(t, k);
        if (k < 4) CHECK(p == 0);
        else CHECK(p == doctest::Approx(binom(k - 1, 3) * std::pow(0.7, 4) * std::pow(0.3, double(k - 4))).epsilon(1e-12));
        total += p;
        mean += p * double(k);
    }
    CHECK(total == doctest::Approx(1).epsilon(1e-13));
    CHECK(mean == doctest::Approx(negbin_mean(t)).epsilon(1e-12));
    CHECK(negbin_mean(t) == doctest::Approx(4 / 0.7));
    CHECK(negbin_variance(t) == doctest::Approx(4 * 0.3 / (0.7 * 0.7)));
    LatticeTerm sure{3, 0.0, 1.0};
    CHECK(exact_negbin_pmf(sure, 3) == 1);
    CHECK(exact_negbin_pmf(sure, 4) == 0);
}

TEST_CASE("samplers reproduce the component moments") {
    Rng rng(11);
    GammaTerm g{1.5, 4.0};
    LatticeTerm l{3, 0.2, 0.01};
    const int n = 200000;
    double sg = 0, sl = 0;
    long attempts = 0;
    for (int i = 0; i < n; ++i) {
        sg += sample_term(g, rng);
        sl += sample_term(l, rng);
        long a = sample_attempts(l, rng);
        CHECK_FALSE(a < 3);
        attempts += a;
    }
    double se_g = std::sqrt(g.shape) / g.rate / std::sqrt(n);
    CHECK(std::abs(sg / n - g.shape / g.rate) < 5 * se_g);
    double se_l = l.spacing * std::sqrt(negbin_variance(l) / n);
    CHECK(std::abs(sl / n - l.spacing * negbin_mean(l)) < 5 * se_l);
    CHECK(std::abs(double(attempts) / n - negbin_mean(l)) < 5 * se_l / l.spacing);
}

TEST_CASE("invalid terms are rejected") {
    CgfModel m;
    m.gamma_terms = {{-1, 1}};
    CHECK_THROWS(m.validate());
    CgfModel l;
    l.lattice_terms = {{2, 1.0, 1.0}};
    CHECK_THROWS(l.validate());
}
