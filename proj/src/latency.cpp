#include "cgc/latency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

#include "cgc/errors.hpp"

namespace cgc {

double PmfTable::at(long k) const {
    if (k < base_index || k > k_max()) return 0.0;
    return probs[std::size_t(k - base_index)];
}

double PmfTable::total() const {
    double s = 0;
    for (double p : probs) s += p;
    return s;
}

PmfTable pmf_discrete_sum(const CgfModel& lattice, double delta) {
    if (!(delta > 0 && delta < 1)) throw DomainError("delta must be in (0,1)");
    PmfTable t;
    t.spacing = lattice_spacing(lattice);
    t.base_index = lattice_base(lattice);
    const long limit = 10'000'000;
    long k = t.base_index;
    while (true) {
        double p = spa_pmf(lattice, k);
        t.probs.push_back(p);
        if (p < delta) break;
        if (++k - t.base_index > limit) throw NonConvergenceError("lattice table did not fall below delta");
    }
    double p0 = t.probs.front();
    double nu = 0;
    for (std::size_t i = 1; i < t.probs.size(); ++i) nu += t.probs[i];
    if (nu > 0) {
        for (std::size_t i = 1; i < t.probs.size(); ++i) t.probs[i] = (1.0 - p0) * t.probs[i] / nu;
        t.normalized = true;
    } else {
        t.normalized = p0 == 1.0;
    }
    t.coarse = t.probs.size() <= 2;
    return t;
}

const char* method_name(Method m) {
    switch (m) {
        case Method::Theorem1: return "Theorem1";
        case Method::Lemma3: return "Lemma3";
        case Method::Theorem2: return "Theorem2";
        case Method::MonteCarlo: return "MonteCarlo";
        case Method::TruncConv: return "TruncConv";
        case Method::Exact: return "Exact";
    }
    return "?";
}

const char* quantity_name(Quantity q) {
    switch (q) {
        case Quantity::CL: return "CL";
        case Quantity::ET: return "ET";
        case Quantity::FL: return "FL";
        case Quantity::T1: return "T1";
        case Quantity::T: return "T";
    }
    return "?";
}

Quantity quantity_from_name(const std::string& s) {
    for (auto q : {Quantity::CL, Quantity::ET, Quantity::FL, Quantity::T1, Quantity::T})
        if (s == quantity_name(q)) return q;
    throw ConfigError("unknown quantity '" + s + "'");
}

void write_curve_csv(const LatencyCurve& c, std::ostream& out, bool header) {
    if (header) out << "x_seconds,probability,method,scenario,kappa,delta\n";
    char buf[160];
    for (std::size_t i = 0; i < c.xs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,", c.xs[i], c.ps[i]);
        out << buf << method_name(c.method) << ',' << c.scenario << ',';
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.kappa, c.delta);
        out << buf;
    }
}

void write_curve_csv(const LatencyCurve& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    write_curve_csv(c, out);
}

TailPair lattice_mix(const PmfTable& pmf, double x, const std::function<TailPair(double)>& cont) {
    TailPair r{0.0, 0.0};
    long top = long(std::floor(x / pmf.spacing));
    for (long k = pmf.base_index; k <= pmf.k_max(); ++k) {
        double p = pmf.at(k);
        if (k > top) {
            r.sf += p;
            continue;
        }
        double y = x - double(k) * pmf.spacing;
        TailPair c = y > 0 ? cont(y) : TailPair{0.0, 1.0};
        r.cdf += p * c.cdf;
        r.sf += p * c.sf;
    }
    // the table sums to 1 only up to rounding
    r.cdf = std::clamp(r.cdf, 0.0, 1.0);
    r.sf = std::clamp(r.sf, 0.0, 1.0);
    return r;
}

LatencyModel::LatencyModel(const ScenarioConfig& sc, double kappa, double delta)
    : sc_(sc), kappa_(kappa), delta_(delta) {
    sc_.validate();
    et_cont_ = build_continuous_cgf(sc_, kappa, CgfKind::ET);
    loop_cont_ = build_continuous_cgf(sc_, kappa, CgfKind::Loop);
    et_clt_ = build_clt_cgf(sc_, kappa, CgfKind::ET);
    loop_clt_ = build_clt_cgf(sc_, kappa, CgfKind::Loop);
    ll_term_ = ll_compute_term(sc_);
    et_pmf_ = pmf_discrete_sum(build_lattice_cgf(sc_, kappa, CgfKind::ET).model, delta);
    cl_pmf_ = pmf_discrete_sum(build_lattice_cgf(sc_, kappa, CgfKind::CL).model, delta);
    loop_pmf_ = pmf_discrete_sum(build_lattice_cgf(sc_, kappa, CgfKind::Loop).model, delta);
}

TailPair LatencyModel::et(double x) const {
    return lattice_mix(et_pmf_, x, [&](double y) { return spa_tails(et_cont_.model, y); });
}

TailPair LatencyModel::cl(double x) const {
    return lattice_mix(cl_pmf_, x, [&](double y) {
        return TailPair{exact_gamma_cdf(ll_term_.shape, ll_term_.rate, y), exact_gamma_sf(ll_term_.shape, ll_term_.rate, y)};
    });
}

TailPair LatencyModel::fl(double x) const {
    if (x <= sc_.tau_PF) return {0.0, 1.0};
    return et(x);
}

TailPair LatencyModel::t1(double x) const {
    return lattice_mix(loop_pmf_, x, [&](double y) { return spa_tails(loop_cont_.model, y); });
}

namespace {
TailPair product_form(const TailPair& cl, const TailPair& t1) {
    return {cl.cdf * t1.cdf, cl.sf + t1.sf - cl.sf * t1.sf};
}
}  // namespace

TailPair LatencyModel::t(double x) const {
    if (x <= sc_.tau_PF) return {0.0, 1.0};
    return product_form(cl(x - sc_.tau_PF), t1(x));
}

TailPair LatencyModel::et_clt_tails(double x) const { return spa_tails(et_clt_.model, x); }

double LatencyModel::et_clt_pdf(double x) const { return spa_pdf(et_clt_.model, x); }

TailPair LatencyModel::t1_clt(double x) const { return spa_tails(loop_clt_.model, x); }

TailPair LatencyModel::t_clt(double x) const {
    if (x <= sc_.tau_PF) return {0.0, 1.0};
    return product_form(cl(x - sc_.tau_PF), t1_clt(x));
}

TailPair LatencyModel::eval(Quantity q, Method m, double x) const {
    bool clt = m == Method::Lemma3 || m == Method::Theorem2;
    if (!clt && m != Method::Theorem1) throw UnsupportedError(std::string("no analytic form for ") + method_name(m));
    switch (q) {
        case Quantity::CL: return cl(x);
        case Quantity::ET: return clt ? et_clt_tails(x) : et(x);
        case Quantity::FL:
            if (x <= sc_.tau_PF) return {0.0, 1.0};
            return clt ? et_clt_tails(x) : et(x);
        case Quantity::T1: return clt ? t1_clt(x) : t1(x);
        case Quantity::T: return clt ? t_clt(x) : t(x);
    }
    return {0.0, 1.0};
}

double LatencyModel::conditional_excess(double tau) const {
    const CgfModel& m = et_clt_.model;
    double psi = m.mean();
    auto at = [&](double x) {
        auto sol = solve_saddlepoint(m, x);
        double sf = spa_tails(m, x).sf;
        double f = std::exp(sol.cgf.k0 - x * sol.s_star) / std::sqrt(2.0 * std::numbers::pi * sol.cgf.k2);
        return (psi - x) * sf + (x - psi) / sol.s_star * f;
    };
    double h = 2.0 * std::max(mean_branch_rel * std::max(1.0, std::abs(psi)), mean_branch_v * std::sqrt(m.variance()));
    if (std::abs(tau - psi) <= h) return 0.5 * (at(psi - h) + at(psi + h));
    return at(tau);
}

namespace {

// Implicit-differentiation gradient on a built continuous model; false near the mean.
bool analytic_grad(const ContinuousCgf& c, double x, double& out) {
    const CgfModel& m = c.model;
    auto sol = solve_saddlepoint(m, x);
    if (near_mean(m, x, sol.v)) return false;
    double z = sol.s_star;
    double k_k = 0, k1_k = 0, k2_k = 0;
    for (std::size_t i = 0; i < m.gamma_terms.size(); ++i) {
        double b = c.rate_slopes[i];
        if (b == 0.0) continue;
        double a = m.gamma_terms[i].shape, beta = m.gamma_terms[i].rate, d = beta - z;
        k_k += -a * z / (beta * d) * b;
        k1_k += -a / (d * d) * b;
        k2_k += -2.0 * a / (d * d * d) * b;
    }
    const CgfValue& k = sol.cgf;
    double dz = -k1_k / k.k2;
    double d_omega0 = k_k + x * dz;
    double d_omega2 = k2_k + k.k3 * dz;
    double v = sol.v, u = sol.u;
    double sg = z > 0 ? 1.0 : -1.0;
    double dv = (x * dz - d_omega0) / (sg * std::sqrt(std::max(0.0, 2.0 * x * z - 2.0 * k.k0)));
    double du = std::sqrt(k.k2) * dz + z / (2.0 * std::sqrt(k.k2)) * d_omega2;
    out = std_normal_pdf(v) * ((v / u - 1.0 / (v * v)) * dv + du / (u * u));
    return true;
}

double clip_to(double g, double clip) { return std::clamp(g, -clip, clip); }

void check_grad_kappa(const ScenarioConfig& sc, double kappa) {
    check_kappa(sc, kappa);
    if (sc.compression.kind == CompressionKind::Exp && kappa <= 1.0)
        throw DomainError("compression terms vanish at ratio 1; the gradient is not defined there");
    if (kappa >= sc.compression.kappa_max) throw DomainError("ratio at the upper edge of its domain");
}

}  // namespace

double cdf_grad_kappa_fd(const ScenarioConfig& sc, double kappa, double x, double h, CgfKind kind) {
    double lo = std::max(kappa - h, 1.0 + 1e-12), hi = std::min(kappa + h, sc.compression.kappa_max);
    double f_hi = spa_cdf(build_continuous_cgf(sc, hi, kind).model, x);
    double f_lo = spa_cdf(build_continuous_cgf(sc, lo, kind).model, x);
    return (f_hi - f_lo) / (hi - lo);
}

double cdf_grad_kappa(const ScenarioConfig& sc, double kappa, double x, const GradientOptions& opt) {
    check_grad_kappa(sc, kappa);
    if (x <= 0) return 0.0;
    ContinuousCgf c = build_continuous_cgf(sc, kappa, opt.kind);
    double g;
    if (!analytic_grad(c, x, g)) g = cdf_grad_kappa_fd(sc, kappa, x, opt.fd_step, opt.kind);
    return clip_to(g, opt.clip);
}

double LatencyModel::tail_t_grad_kappa(double x, double clip) const {
    check_grad_kappa(sc_, kappa_);
    if (x <= sc_.tau_PF) return 0.0;
    double fcl = cl(x - sc_.tau_PF).cdf;
    double sum = 0;
    for (long k = loop_pmf_.base_index; k <= loop_pmf_.k_max(); ++k) {
        double y = x - double(k) * loop_pmf_.spacing;
        if (y <= 0) break;
        double g;
        if (!analytic_grad(loop_cont_, y, g)) g = cdf_grad_kappa_fd(sc_, kappa_, y, 1e-5, CgfKind::Loop);
        sum += loop_pmf_.at(k) * clip_to(g, clip);
    }
    return clip_to(-fcl * sum, clip);
}

double LatencyModel::quantile(Quantity q, Method m, double p) const {
    auto f = [&](double x) { return eval(q, m, x).cdf; };
    double hi = std::max(1e-3, 2.0 * (et_clt_.Psi + cl_mean(sc_) + sc_.tau_PF));
    for (int i = 0; i < 200 && f(hi) < p; ++i) hi *= 2;
    return invert_cdf(f, p, 0.0, hi);
}

LatencyCurve LatencyModel::curve(Quantity q, Method m, const std::vector<double>& xs) const {
    LatencyCurve c;
    c.xs = xs;
    c.method = m;
    c.quantity = quantity_name(q);
    c.scenario = sc_.preset_name;
    c.kappa = kappa_;
    c.delta = delta_;
    c.ps.reserve(xs.size());
    for (double x : xs) c.ps.push_back(eval(q, m, x).cdf);
    return c;
}

double cdf_ET(const ScenarioConfig& sc, double kappa, double x, double delta) {
    return LatencyModel(sc, kappa, delta).et(x).cdf;
}

double cdf_CL(const ScenarioConfig& sc, double x, double delta) { return LatencyModel(sc, 1.0, delta).cl(x).cdf; }

double cdf_FL(const ScenarioConfig& sc, double kappa, double x, double delta) {
    return LatencyModel(sc, kappa, delta).fl(x).cdf;
}

double cdf_T(const ScenarioConfig& sc, double kappa, double x, double delta, Method m) {
    return LatencyModel(sc, kappa, delta).eval(Quantity::T, m, x).cdf;
}

double cdf_ET_clt(const ScenarioConfig& sc, double kappa, double x) {
    return spa_cdf(build_clt_cgf(sc, kappa, CgfKind::ET).model, x);
}

double pdf_ET_clt(const ScenarioConfig& sc, double kappa, double x) {
    return spa_pdf(build_clt_cgf(sc, kappa, CgfKind::ET).model, x);
}

double conditional_excess(const ScenarioConfig& sc, double kappa, double tau) {
    return LatencyModel(sc, kappa).conditional_excess(tau);
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(std::size_t(std::max(n, 0)));
    for (int i = 0; i < n; ++i) v[std::size_t(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

double invert_cdf(const std::function<double(double)>& f, double p, double lo, double hi, double tol) {
    for (int i = 0; i < 200 && hi - lo > tol * std::max(1.0, std::abs(hi)); ++i) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) >= p) hi = mid; else lo = mid;
    }
    return hi;
}

}  // namespace cgc
