#pragma once

#include <vector>

#include "cgc/distributions.hpp"
#include "cgc/scenario.hpp"

namespace cgc {

struct LinkRate {
    double rate = 0;         // bits/s
    double packet_time = 0;  // s, inf when degenerate
    bool degenerate = false;
};

// Fixed rate that fails with the link's outage probability under Rayleigh fading.
LinkRate outage_rate(const LinkConfig& link);
// Rate achieved with every packet inside deadline tau (two-antenna MRC fit).
double deadline_capacity(const LinkConfig& link, double tau, const CapacityConstants& cc = {});
double pf_phi(const LinkConfig& link, double T_s, double n_PF, const CapacityConstants& cc = {});
double pf_power_for_deadline(const LinkConfig& link, double tau, double T_s, double n_PF,
                             const CapacityConstants& cc = {});
// Same power, solved straight from the capacity expression.
double pf_power_inverted(const LinkConfig& link, double tau, double T_s, double n_PF,
                         const CapacityConstants& cc = {});

// Cycles per bit spent compressing / decompressing at ratio kappa.
double zeta_c(const CompressionModel& m, double kappa);
double zeta_d(const CompressionModel& m, double kappa);
double zeta_c_slope(const CompressionModel& m, double kappa);
double zeta_d_slope(const CompressionModel& m, double kappa);

enum class CgfKind { ET, CL, Loop };

// Gamma-only part. rate_slopes[i] = d rate_i / d kappa for gamma_terms[i].
struct ContinuousCgf {
    CgfModel model;
    std::vector<double> rate_slopes;
    double theta = 0;  // mean
    double iota1 = 0;  // variance^(3/2)
    double iota2 = 0;  // third cumulant
};

struct LatticeCgf {
    CgfModel model;
    long base = 0;
    double vartheta = 0;  // expected attempts
    double variance = 0;  // s^2
};

// Continuous part plus the normal stand-in for the lattice sum.
struct CltCgf {
    CgfModel model;
    double Psi = 0;
    double Upsilon = 0;
    double iota2 = 0;
};

void check_kappa(const ScenarioConfig& sc, double kappa);
int cd_packets(const ScenarioConfig& sc, double kappa);
double cd_bits_at_kappa1(const ScenarioConfig& sc);

GammaTerm ll_compute_term(const ScenarioConfig& sc);
ContinuousCgf build_continuous_cgf(const ScenarioConfig& sc, double kappa, CgfKind kind);
LatticeCgf build_lattice_cgf(const ScenarioConfig& sc, double kappa, CgfKind kind);
CltCgf build_clt_cgf(const ScenarioConfig& sc, double kappa, CgfKind kind);

// Exact component sums.
double et_mean(const ScenarioConfig& sc, double kappa);
double et_variance(const ScenarioConfig& sc, double kappa);
double et_variance_floor(const ScenarioConfig& sc, double kappa);
double cl_mean(const ScenarioConfig& sc);

// Normal replacement of the lattice sum is trusted when many packets or small spacing.
bool clt_regime_ok(const ScenarioConfig& sc, double kappa);

}  // namespace cgc
