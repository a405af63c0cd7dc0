#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cgc/model.hpp"
#include "cgc/saddlepoint.hpp"

namespace cgc {

struct PmfTable {
    long base_index = 0;
    double spacing = 1.0;
    std::vector<double> probs;  // probs[i] is the mass at base_index + i attempts
    bool normalized = false;
    bool coarse = false;  // stopped at or right after the base point

    long k_max() const { return base_index + long(probs.size()) - 1; }
    double at(long k) const;
    double total() const;
};

// Enumerate the lattice sum's mass upward until it drops below delta, then rescale the
// non-base entries so the table carries 1 - P{base}.
PmfTable pmf_discrete_sum(const CgfModel& lattice, double delta);

enum class Method { Theorem1, Lemma3, Theorem2, MonteCarlo, TruncConv, Exact };
const char* method_name(Method m);

enum class Quantity { CL, ET, FL, T1, T };
const char* quantity_name(Quantity q);
Quantity quantity_from_name(const std::string& s);

struct LatencyCurve {
    std::vector<double> xs;
    std::vector<double> ps;
    Method method = Method::Theorem1;
    std::string quantity = "ET";
    std::string scenario;
    double kappa = 0;
    double delta = 0;
};

void write_curve_csv(const LatencyCurve& c, std::ostream& out, bool header = true);
void write_curve_csv(const LatencyCurve& c, const std::string& path);

// Sum over a lattice table of a shifted continuous law, both tails kept.
TailPair lattice_mix(const PmfTable& pmf, double x, const std::function<TailPair(double)>& cont);

// All the loop latency laws for one (scenario, kappa, delta); tables built once.
class LatencyModel {
public:
    LatencyModel(const ScenarioConfig& sc, double kappa, double delta = 1e-5);

    const ScenarioConfig& scenario() const { return sc_; }
    double kappa() const { return kappa_; }
    double delta() const { return delta_; }

    const PmfTable& et_pmf() const { return et_pmf_; }
    const PmfTable& cl_pmf() const { return cl_pmf_; }
    const PmfTable& loop_pmf() const { return loop_pmf_; }
    const ContinuousCgf& et_continuous() const { return et_cont_; }
    const ContinuousCgf& loop_continuous() const { return loop_cont_; }
    const CltCgf& et_clt() const { return et_clt_; }
    const CltCgf& loop_clt() const { return loop_clt_; }

    // discrete + saddlepoint forms
    TailPair et(double x) const;
    TailPair cl(double x) const;
    TailPair fl(double x) const;
    TailPair t1(double x) const;
    TailPair t(double x) const;

    // normal-lattice forms
    TailPair et_clt_tails(double x) const;
    double et_clt_pdf(double x) const;
    TailPair t1_clt(double x) const;
    TailPair t_clt(double x) const;

    TailPair eval(Quantity q, Method m, double x) const;

    // Mean excess over tau of T_ET from the normal-lattice form.
    double conditional_excess(double tau) const;

    // d/dkappa of P{T > x} with the lattice table held fixed.
    double tail_t_grad_kappa(double x, double clip = 1e6) const;

    double quantile(Quantity q, Method m, double p) const;
    LatencyCurve curve(Quantity q, Method m, const std::vector<double>& xs) const;

private:
    ScenarioConfig sc_;
    double kappa_, delta_;
    ContinuousCgf et_cont_, loop_cont_;
    CltCgf et_clt_, loop_clt_;
    GammaTerm ll_term_;
    PmfTable et_pmf_, cl_pmf_, loop_pmf_;
};

double cdf_ET(const ScenarioConfig& sc, double kappa, double x, double delta = 1e-5);
double cdf_CL(const ScenarioConfig& sc, double x, double delta = 1e-5);
double cdf_FL(const ScenarioConfig& sc, double kappa, double x, double delta = 1e-5);
double cdf_T(const ScenarioConfig& sc, double kappa, double x, double delta = 1e-5, Method m = Method::Theorem1);
double cdf_ET_clt(const ScenarioConfig& sc, double kappa, double x);
double pdf_ET_clt(const ScenarioConfig& sc, double kappa, double x);
double conditional_excess(const ScenarioConfig& sc, double kappa, double tau);

struct GradientOptions {
    double clip = 1e6;
    double fd_step = 1e-5;
    CgfKind kind = CgfKind::Loop;
};

// d/dkappa of the continuous-part saddlepoint CDF at x (implicit differentiation).
double cdf_grad_kappa(const ScenarioConfig& sc, double kappa, double x, const GradientOptions& opt = {});
// Same quantity by central differences, used near the mean.
double cdf_grad_kappa_fd(const ScenarioConfig& sc, double kappa, double x, double h, CgfKind kind = CgfKind::Loop);

std::vector<double> linspace(double a, double b, int n);
// Smallest x on [lo, hi] with f(x) >= p, by bisection.
double invert_cdf(const std::function<double(double)>& f, double p, double lo, double hi, double tol = 1e-12);

}  // namespace cgc
