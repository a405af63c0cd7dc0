#include "cgc/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "cgc/errors.hpp"

namespace cgc {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();

double lattice_bound(const LatticeTerm& t) {
    if (t.failure_prob <= 0.0) return inf;
    return -std::log(t.failure_prob) / t.spacing;
}
}  // namespace

void CgfModel::validate() const {
    for (const auto& g : gamma_terms)
        if (!(g.shape > 0) || !(g.rate > 0) || !std::isfinite(g.shape) || !std::isfinite(g.rate))
            throw ConfigError("gamma term needs positive finite shape and rate");
    for (const auto& l : lattice_terms)
        if (l.packets < 1 || !(l.failure_prob >= 0 && l.failure_prob < 1) || !(l.spacing > 0))
            throw ConfigError("lattice term needs packets >= 1, failure_prob in [0,1), spacing > 0");
    for (const auto& n : gaussian_terms)
        if (!(n.variance >= 0)) throw ConfigError("gaussian variance must be nonnegative");
}

double CgfModel::domain_upper() const {
    double s = inf;
    for (const auto& g : gamma_terms) s = std::min(s, g.rate);
    for (const auto& l : lattice_terms) s = std::min(s, lattice_bound(l));
    return s;
}

double CgfModel::support_infimum() const {
    double lo = shift;
    for (const auto& n : gaussian_terms) {
        if (n.variance > 0) return -inf;
        lo += n.mean;
    }
    for (const auto& l : lattice_terms) lo += l.packets * l.spacing;
    return lo;
}

CgfValue CgfModel::eval(double s) const {
    CgfValue c;
    c.k0 = shift * s;
    c.k1 = shift;
    for (const auto& g : gamma_terms) {
        if (!(s < g.rate))
            throw DomainError("cgf argument " + std::to_string(s) + " outside gamma domain");
        double d = g.rate - s;
        c.k0 += -g.shape * std::log1p(-s / g.rate);
        c.k1 += g.shape / d;
        c.k2 += g.shape / (d * d);
        c.k3 += 2.0 * g.shape / (d * d * d);
    }
    for (const auto& l : lattice_terms) {
        double t = l.spacing, n = l.packets, sig = t * s;
        if (l.failure_prob == 0.0) {
            c.k0 += n * sig;
            c.k1 += n * t;
            continue;
        }
        if (!(s < lattice_bound(l)))
            throw DomainError("cgf argument " + std::to_string(s) + " outside lattice domain");
        double e = l.failure_prob * std::exp(sig);
        double q = 1.0 - e;
        c.k0 += n * (sig + std::log1p(-l.failure_prob) - std::log1p(-e));
        c.k1 += t * n / q;
        c.k2 += t * t * n * e / (q * q);
        c.k3 += t * t * t * n * e * (1.0 + e) / (q * q * q);
    }
    for (const auto& g : gaussian_terms) {
        c.k0 += g.mean * s + 0.5 * g.variance * s * s;
        c.k1 += g.mean + g.variance * s;
        c.k2 += g.variance;
    }
    return c;
}

double CgfModel::mean() const { return eval(0.0).k1; }
double CgfModel::variance() const { return eval(0.0).k2; }
double CgfModel::third_cumulant() const { return eval(0.0).k3; }

CgfValue cgf_eval(const CgfModel& model, double s) { return model.eval(s); }

double exact_gamma_cdf(double shape, double rate, double x) {
    if (!(shape > 0) || !(rate > 0)) throw ConfigError("gamma needs positive shape and rate");
    if (x <= 0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(shape, rate * x);
}

double exact_gamma_sf(double shape, double rate, double x) {
    if (!(shape > 0) || !(rate > 0)) throw ConfigError("gamma needs positive shape and rate");
    if (x <= 0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(shape, rate * x);
}

double exact_gamma_pdf(double shape, double rate, double x) {
    if (x < 0) return 0.0;
    return rate * boost::math::gamma_p_derivative(shape, rate * x);
}

double exact_negbin_pmf(const LatticeTerm& term, long k) {
    long n = term.packets;
    if (k < n) return 0.0;
    double eps = term.failure_prob;
    if (eps == 0.0) return k == n ? 1.0 : 0.0;
    double lp = std::lgamma(double(k)) - std::lgamma(double(n)) - std::lgamma(double(k - n + 1)) +
                n * std::log1p(-eps) + double(k - n) * std::log(eps);
    return std::exp(lp);
}

double negbin_mean(const LatticeTerm& t) { return t.packets / (1.0 - t.failure_prob); }

double negbin_variance(const LatticeTerm& t) {
    double q = 1.0 - t.failure_prob;
    return t.packets * t.failure_prob / (q * q);
}

double sample_term(const GammaTerm& term, Rng& rng) {
    std::gamma_distribution<double> g(term.shape, 1.0 / term.rate);
    return g(rng);
}

long sample_attempts(const LatticeTerm& term, Rng& rng) {
    if (term.failure_prob == 0.0) return term.packets;
    std::negative_binomial_distribution<long> nb(term.packets, 1.0 - term.failure_prob);
    return term.packets + nb(rng);
}

double sample_term(const LatticeTerm& term, Rng& rng) {
    return term.spacing * double(sample_attempts(term, rng));
}

}  // namespace cgc
