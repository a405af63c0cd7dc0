#pragma once

#include <random>
#include <vector>

namespace cgc {

struct GammaTerm {
    double shape = 1.0;
    double rate = 1.0;  // 1/s
};

// Time to deliver `packets` packets when each attempt fails independently
// with prob failure_prob and takes `spacing` seconds.
struct LatticeTerm {
    int packets = 1;
    double failure_prob = 0.0;
    double spacing = 1.0;
};

struct GaussianTerm {
    double mean = 0.0;
    double variance = 0.0;
};

struct CgfValue {
    double k0 = 0, k1 = 0, k2 = 0, k3 = 0;
};

struct CgfModel {
    std::vector<GammaTerm> gamma_terms;
    std::vector<LatticeTerm> lattice_terms;
    std::vector<GaussianTerm> gaussian_terms;
    double shift = 0.0;

    // Sup of the CGF domain; +inf when no term restricts it.
    double domain_upper() const;
    // Left end of the support; -inf with any nondegenerate Gaussian term.
    double support_infimum() const;
    bool lattice_only() const { return gamma_terms.empty() && gaussian_terms.empty(); }

    CgfValue eval(double s) const;
    double mean() const;
    double variance() const;
    double third_cumulant() const;

    void validate() const;
};

CgfValue cgf_eval(const CgfModel& model, double s);

double exact_gamma_cdf(double shape, double rate, double x);
double exact_gamma_sf(double shape, double rate, double x);
double exact_gamma_pdf(double shape, double rate, double x);

// P{count == k}, count = number of attempts; zero below `packets`.
double exact_negbin_pmf(const LatticeTerm& term, long k);
double negbin_mean(const LatticeTerm& term);
double negbin_variance(const LatticeTerm& term);

using Rng = std::mt19937_64;

double sample_term(const GammaTerm& term, Rng& rng);
double sample_term(const LatticeTerm& term, Rng& rng);
long sample_attempts(const LatticeTerm& term, Rng& rng);

}  // namespace cgc
