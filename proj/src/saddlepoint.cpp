#include "cgc/saddlepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cgc/errors.hpp"

namespace cgc {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
}  // namespace

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double std_normal_pdf(double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); }

SaddlepointSolution solve_saddlepoint(const CgfModel& model, double x, const SolverOptions& opt) {
    double inf_x = model.support_infimum();
    if (!(x > inf_x))
        throw DomainError("x=" + std::to_string(x) + " is not above the support infimum");
    double smax = model.domain_upper();
    CgfValue c0 = model.eval(0.0);
    // scale by the spread too, so x = 0 still has a reachable tolerance
    double tol = opt.tol_abs + opt.tol_rel * std::max(std::abs(x), std::sqrt(c0.k2));

    SaddlepointSolution sol;
    sol.x = x;
    if (c0.k1 == x) {
        sol.cgf = c0;
        return sol;
    }

    // bracket [lo, hi] with K'(lo) < x < K'(hi); hi may equal smax where K' blows up
    double lo, hi;
    if (x > c0.k1) {
        lo = 0.0;
        if (std::isfinite(smax)) {
            hi = smax;
        } else {
            hi = 1.0;
            while (model.eval(hi).k1 < x) {
                lo = hi;
                hi *= 2;
                if (hi > 1e300) throw NonConvergenceError("saddlepoint upper bracket diverged");
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while (model.eval(lo).k1 > x) {
            hi = lo;
            lo *= 2;
            if (lo < opt.lower_limit)
                throw NonConvergenceError("saddlepoint lower bracket passed " + std::to_string(opt.lower_limit));
        }
    }

    double s = 0.5 * (lo + hi);
    double best_s = s, best_f = inf;
    CgfValue best_c;
    int polish = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        CgfValue c = model.eval(s);
        double f = c.k1 - x;
        if (std::abs(f) < best_f) {
            best_f = std::abs(f);
            best_s = s;
            best_c = c;
        }
        if (f == 0.0) break;
        if (f < 0) lo = s; else hi = s;
        if (best_f <= tol && ++polish > 3) break;
        double next = s - f / c.k2;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == s || next <= lo || next >= hi) break;
        s = next;
    }
    if (!(best_f <= tol))
        throw NonConvergenceError("saddlepoint solver did not converge at x=" + std::to_string(x));

    sol.s_star = best_s;
    sol.cgf = best_c;
    sol.residual = best_f;
    double w = std::max(0.0, 2.0 * (x * best_s - best_c.k0));
    double sg = best_s > 0 ? 1.0 : (best_s < 0 ? -1.0 : 0.0);
    sol.v = sg * std::sqrt(w);
    sol.u = best_s * std::sqrt(best_c.k2);
    return sol;
}

bool near_mean(const CgfModel& model, double x, double v) {
    double m = model.mean();
    return std::abs(x - m) <= mean_branch_rel * std::max(1.0, std::abs(m)) || std::abs(v) < mean_branch_v;
}

double mean_branch_cdf(const CgfModel& model) {
    CgfValue c = model.eval(0.0);
    return 0.5 + c.k3 / (6.0 * std::sqrt(2.0 * std::numbers::pi) * std::pow(c.k2, 1.5));
}

namespace {
// Unclamped pair; cdf + sf = 1 up to rounding.
TailPair tails_raw(const CgfModel& model, double x) {
    if (!(x > model.support_infimum())) return {0.0, 1.0};
    double m = model.mean();
    if (std::abs(x - m) <= mean_branch_rel * std::max(1.0, std::abs(m))) {
        double c = mean_branch_cdf(model);
        return {c, 1.0 - c};
    }
    auto sol = solve_saddlepoint(model, x);
    if (std::abs(sol.v) < mean_branch_v) {
        double c = mean_branch_cdf(model);
        return {c, 1.0 - c};
    }
    double corr = std_normal_pdf(sol.v) * (1.0 / sol.v - 1.0 / sol.u);
    return {std_normal_cdf(sol.v) + corr, std_normal_cdf(-sol.v) - corr};
}
}  // namespace

double spa_cdf_unclamped(const CgfModel& model, double x) { return tails_raw(model, x).cdf; }

TailPair spa_tails(const CgfModel& model, double x) {
    TailPair t = tails_raw(model, x);
    return {std::clamp(t.cdf, 0.0, 1.0), std::clamp(t.sf, 0.0, 1.0)};
}

double spa_cdf(const CgfModel& model, double x) { return spa_tails(model, x).cdf; }

double spa_sf(const CgfModel& model, double x) { return spa_tails(model, x).sf; }

double spa_pdf(const CgfModel& model, double x) {
    if (model.lattice_only()) throw UnsupportedError("saddlepoint density needs a continuous term");
    if (!(x > model.support_infimum())) return 0.0;
    auto sol = solve_saddlepoint(model, x);
    return std::exp(sol.cgf.k0 - x * sol.s_star) / std::sqrt(2.0 * std::numbers::pi * sol.cgf.k2);
}

long lattice_base(const CgfModel& model) {
    long n = 0;
    for (const auto& l : model.lattice_terms) n += l.packets;
    return n;
}

double lattice_spacing(const CgfModel& model) {
    if (model.lattice_terms.empty()) throw ConfigError("model has no lattice terms");
    double t = model.lattice_terms.front().spacing;
    for (const auto& l : model.lattice_terms)
        if (std::abs(l.spacing - t) > 1e-12 * t) throw ConfigError("lattice terms have mismatched spacings");
    return t;
}

double spa_pmf(const CgfModel& model, long k) {
    if (!model.lattice_only()) throw UnsupportedError("mass function needs a lattice-only model");
    lattice_spacing(model);
    long base = lattice_base(model);
    if (k < base) return 0.0;
    if (k == base) {
        double lp = 0.0;
        for (const auto& l : model.lattice_terms) lp += l.packets * std::log1p(-l.failure_prob);
        return std::exp(lp);
    }
    // count units: unit spacing, no shift
    CgfModel counts;
    bool random = false;
    for (const auto& l : model.lattice_terms) {
        counts.lattice_terms.push_back({l.packets, l.failure_prob, 1.0});
        random = random || l.failure_prob > 0;
    }
    if (!random) return 0.0;
    auto sol = solve_saddlepoint(counts, double(k));
    return std::exp(sol.cgf.k0 - double(k) * sol.s_star) / std::sqrt(2.0 * std::numbers::pi * sol.cgf.k2);
}

}  // namespace cgc
