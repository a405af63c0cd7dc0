// Acceptance checks 1-9. One line per check; exit status is nonzero when a check fails
// that was not listed with --expect-fail. --only 2,3 runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cgc/latency.hpp"
#include "cgc/optimizer.hpp"
#include "cgc/oracles.hpp"
#include "cgc/saddlepoint.hpp"

using namespace cgc;

namespace {

// pinned tolerances
constexpr double c1_max_err = 5e-3, c1_mean_err = 1e-3, c1_win_frac = 0.70, c1_seconds = 30;
constexpr long mc_samples = 1000000;
constexpr std::uint64_t mc_seed = 7;
constexpr double c2_floor = 1e-3, c2_se_mult = 3, c2_seconds = 300;
constexpr double c3_thm1 = 5e-3, c3_clt = 5e-2;
constexpr double c4_rel = 0.02, c4_min_excess = 1e-3;
constexpr double c5_kkt = 1e-9;
constexpr int c5_draws = 50, c5_cells = 100;
constexpr int c6_draws = 20;
constexpr double c7_obj_gap = 1e-6, c7_kappa_gap = 1e-3, c7_grid = 1e-4, c7_T_th_tradeoff = 0.35;
constexpr double c8_rel = 1e-4, c8_h = 1e-5, c8_min_v = 0.1;
constexpr int c8_points = 50;
constexpr double c9_cumulant = 1e-12, c9_pmf_rel = 0.10;
constexpr int c9_instances = 20;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome gamma_sum_vs_truncated() {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<GammaTerm> terms(4, GammaTerm{2.0, 1.0});
    CgfModel m;
    m.gamma_terms = terms;
    auto tc = truncated_convolution_cdf(terms, 1e-3, 20.0);
    auto xs = linspace(0.0, 16.0, 400);
    double worst = 0;
    int wins = 0;
    for (double x : xs) {
        double ex = exact_gamma_cdf(8.0, 1.0, x);
        double es = std::abs(spa_cdf(m, x) - ex), ec = std::abs(step_value(tc, x) - ex);
        worst = std::max(worst, es);
        if (es <= ec) ++wins;
    }
    double at_mean = std::abs(spa_cdf(m, 8.0) - exact_gamma_cdf(8.0, 1.0, 8.0));
    double frac = double(wins) / double(xs.size());
    double secs = seconds_since(t0);
    bool ok = worst <= c1_max_err && at_mean <= c1_mean_err && frac >= c1_win_frac && secs < c1_seconds;
    return {ok, "max_err=" + fmt("%.3g", worst) + " err_at_mean=" + fmt("%.3g", at_mean) +
                    " spa_not_worse=" + fmt("%.3f", frac) + " runtime=" + fmt("%.1fs", secs)};
}

Outcome loop_vs_mc_fig4() {
    auto t0 = std::chrono::steady_clock::now();
    auto sc = preset("fig4");
    const double kappa = 1.1;
    auto rep = mc_closed_loop(sc, kappa, mc_samples, mc_seed);
    LatencyModel lm(sc, kappa);
    double worst_ratio = 0, worst_abs = 0;
    int checked = 0;
    for (auto [key, q] : {std::pair{"T_ET", Quantity::ET}, std::pair{"T", Quantity::T}}) {
        const auto& d = rep.draws.at(key);
        for (double x : rep.grid) {
            double e = d.cdf(x);
            if (e < 0.5 || e > 0.999) continue;
            ++checked;
            double tol = std::max(c2_se_mult * d.std_error(x), c2_floor);
            double err = std::abs(lm.eval(q, Method::Theorem1, x).cdf - e);
            worst_ratio = std::max(worst_ratio, err / tol);
            worst_abs = std::max(worst_abs, err);
        }
    }
    // at the point where the empirical tail of T is 1%
    const auto& dt = rep.draws.at("T");
    double x99 = dt.quantile(0.99);
    double err99 = std::abs(lm.t(x99).cdf - dt.cdf(x99));
    double secs = seconds_since(t0);
    bool ok = checked > 0 && worst_ratio <= 1.0 && err99 <= c2_floor && secs < c2_seconds;
    return {ok, "points=" + std::to_string(checked) + " max_abs=" + fmt("%.3g", worst_abs) +
                    " worst_err/tol=" + fmt("%.3f", worst_ratio) + " err_at_tail_0.01=" + fmt("%.3g", err99) +
                    " runtime=" + fmt("%.1fs", secs)};
}

Outcome regime_separation_fig7() {
    auto sc = preset("fig7");
    const double kappa = 1.1;
    auto rep = mc_closed_loop(sc, kappa, mc_samples, mc_seed);
    LatencyModel lm(sc, kappa);
    double thm1 = 0, clt = 0;
    for (auto [key, q] : {std::pair{"T_ET", Quantity::ET}, std::pair{"T", Quantity::T}}) {
        const auto& d = rep.draws.at(key);
        for (double x : rep.grid) {
            double e = d.cdf(x);
            thm1 = std::max(thm1, std::abs(lm.eval(q, Method::Theorem1, x).cdf - e));
            Method m = q == Quantity::ET ? Method::Lemma3 : Method::Theorem2;
            clt = std::max(clt, std::abs(lm.eval(q, m, x).cdf - e));
        }
    }
    bool ok = thm1 <= c3_thm1 && clt > c3_clt;
    return {ok, "discrete_form_max=" + fmt("%.3g", thm1) + " normal_form_max=" + fmt("%.3g", clt)};
}

Outcome excess_vs_mc_fig5() {
    auto sc = preset("fig5");
    const double kappa = 1.1;
    LatencyModel lm(sc, kappa);
    McOptions opt;
    opt.excess_taus = linspace(lm.quantile(Quantity::ET, Method::Theorem1, 0.05),
                               lm.quantile(Quantity::ET, Method::Theorem1, 0.995), 10);
    auto rep = mc_closed_loop(sc, kappa, mc_samples, mc_seed, opt);
    double worst = 0;
    int checked = 0;
    std::string per;
    for (const auto& [tau, e] : rep.excess_estimates) {
        if (e.mean <= c4_min_excess) continue;
        ++checked;
        double rel = std::abs(lm.conditional_excess(tau) - e.mean) / e.mean;
        worst = std::max(worst, rel);
        per += fmt(" %.3f", rel);
    }
    return {checked > 0 && worst <= c4_rel,
            "points=" + std::to_string(checked) + " max_rel=" + fmt("%.3g", worst) + " rel_errs:" + per};
}

Outcome pf_allocation() {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> u(0.1, 10.0), ut(0.01, 1.0);
    CapacityConstants cc;
    double worst_kkt = 0;
    int off_grid = 0;
    for (int i = 0; i < c5_draws; ++i) {
        double p1 = u(rng), p2 = u(rng), tau = ut(rng);
        auto [t1, t2] = allocate_pf_deadlines(p1, p2, tau);
        double a = cc.c3 * std::pow(p1, -cc.c3 - 1) * std::pow(t1, -cc.c3 - 1);
        double b = cc.c3 * std::pow(p2, -cc.c3 - 1) * std::pow(t2, -cc.c3 - 1);
        worst_kkt = std::max(worst_kkt, std::abs(a - b) / std::max(a, b));
        // 100 x 100 cells over [0, tau]^2, deadline sum constraint respected
        double h = tau / c5_cells, best = INFINITY, g1 = 0, g2 = 0;
        for (int x = 1; x <= c5_cells; ++x)
            for (int y = 1; x + y <= c5_cells; ++y) {
                double s1 = x * h, s2 = y * h;
                double v = std::pow(p1, -cc.c3 - 1) * (cc.c2 + std::pow(s1, -cc.c3)) +
                           std::pow(p2, -cc.c3 - 1) * (cc.c2 + std::pow(s2, -cc.c3));
                if (v < best) best = v, g1 = s1, g2 = s2;
            }
        if (std::abs(g1 - t1) > h || std::abs(g2 - t2) > h) ++off_grid;
    }
    return {worst_kkt <= c5_kkt && off_grid == 0,
            "draws=" + std::to_string(c5_draws) + " max_kkt_residual=" + fmt("%.3g", worst_kkt) +
                " outside_one_cell=" + std::to_string(off_grid)};
}

// +1 strictly increasing, -1 strictly decreasing, 0 otherwise
int ratio_trend(const CompressionModel& m) {
    int up = 0, down = 0;
    double prev = NAN;
    for (double k = 1.001; k <= m.kappa_max + 1e-12; k += 1e-3) {
        double v = k / zeta_d(m, std::min(k, m.kappa_max));
        if (!std::isnan(prev)) (v > prev ? up : down)++;
        prev = v;
    }
    return up && !down ? 1 : (down && !up ? -1 : 0);
}

Outcome decompression_monotone() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bad[3] = {0, 0, 0};
    for (int i = 0; i < c6_draws; ++i) {
        CompressionModel e;
        e.psi = 1.0 + 5.0 * u(rng);
        e.omega0 = 0.01 + 0.9 * u(rng);
        e.kappa_max = 1.5 + 2.0 * u(rng);
        if (ratio_trend(e) != -1) ++bad[0];

        CompressionModel p;
        p.kind = CompressionKind::Power;
        p.kappa_max = e.kappa_max;
        p.omegas = {1, 1, 1, 1, 0.05 + u(rng), 0.5 + 10 * u(rng), 0, 0.05 + 3 * u(rng)};
        p.omegas[6] = 1.0 + p.omegas[7] / p.omegas[5] + 1e-3 + 3 * u(rng);
        if (ratio_trend(p) != -1) ++bad[1];
        p.omegas[6] = 0.01 + 0.99 * u(rng);
        if (ratio_trend(p) != 1) ++bad[2];
    }
    return {bad[0] + bad[1] + bad[2] == 0, "violations exp=" + std::to_string(bad[0]) + " power_steep=" +
                                               std::to_string(bad[1]) + " power_flat=" + std::to_string(bad[2]) +
                                               " of " + std::to_string(c6_draws) + " each"};
}

Outcome optimizer_checks() {
    auto sc = preset("opt-default");
    double obj_gap = 0, k_gap = 0, prev = INFINITY;
    bool decreasing = true;
    std::string ks;
    for (double w : {0.2, 0.5, 0.8, 1.0}) {
        OptimizationConfig c;
        c.weight = w;
        auto t = optimize(sc, c);
        c.search.kind = SearchKind::Grid;
        c.search.granularity = c7_grid;
        auto g = optimize(sc, c);
        obj_gap = std::max(obj_gap, std::abs(t.objective - g.objective));
        k_gap = std::max(k_gap, std::abs(t.kappa_star - g.kappa_star));
        if (!(t.kappa_star < prev)) decreasing = false;
        prev = t.kappa_star;
        ks += fmt(" %.4f", t.kappa_star);
    }
    OptimizationConfig c;
    c.T_th = c7_T_th_tradeoff;
    auto grid = linspace(1.0, sc.compression.kappa_max, 201);
    auto fr = tradeoff_curve(sc, c, {0.2, 0.25, 0.3}, grid);
    int violations = 0, shared = 0;
    for (std::size_t a = 0; a + 1 < fr.size(); ++a)
        for (const auto& p : fr[a].pareto) {
            double other = frontier_power_at(fr[a + 1], p.tail_prob);
            if (std::isnan(other)) continue;
            ++shared;
            if (p.P_total < other - 1e-9) ++violations;
        }
    bool ok = obj_gap <= c7_obj_gap && k_gap <= c7_kappa_gap && decreasing && violations == 0 && shared > 0;
    return {ok, "kappa*:" + ks + " max_obj_gap=" + fmt("%.3g", obj_gap) + " max_kappa_gap=" + fmt("%.3g", k_gap) +
                    " frontier_points=" + std::to_string(shared) + " dominance_violations=" + std::to_string(violations)};
}

Outcome gradient_vs_fd() {
    auto sc = preset("opt-default");
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uk(1.05, 1.5), uz(-3.0, 4.0);
    double worst = 0;
    int n = 0, tries = 0;
    while (n < c8_points && tries < 100000) {
        ++tries;
        double k = uk(rng);
        auto c = build_continuous_cgf(sc, k, CgfKind::Loop);
        double x = c.theta + uz(rng) * std::pow(c.iota1, 1.0 / 3.0);
        if (x <= c.model.support_infimum()) continue;
        double F = spa_cdf(c.model, x);
        if (F < 1e-3 || F > 0.999) continue;
        if (std::abs(solve_saddlepoint(c.model, x).v) <= c8_min_v) continue;
        ++n;
        double a = cdf_grad_kappa(sc, k, x), f = cdf_grad_kappa_fd(sc, k, x, c8_h);
        worst = std::max(worst, std::abs(a - f) / std::abs(f));
    }
    return {n == c8_points && worst <= c8_rel, "points=" + std::to_string(n) + " max_rel=" + fmt("%.3g", worst)};
}

Outcome property_suites() {
    int bad_cdf = 0;
    for (const auto& name : preset_names()) {
        auto sc = preset(name);
        for (double k : {1.0, 1.1, 1.5}) {
            LatencyModel lm(sc, k);
            auto xs = linspace(0.0, 1.2 * lm.quantile(Quantity::T, Method::Theorem1, 0.9999), 400);
            for (auto q : {Quantity::CL, Quantity::ET, Quantity::FL, Quantity::T1, Quantity::T})
                for (auto m : {Method::Theorem1, Method::Lemma3}) {
                    double prev = 0;
                    for (double x : xs) {
                        auto t = lm.eval(q, m, x);
                        if (t.cdf < 0 || t.cdf > 1 || t.cdf < prev - 1e-12 || std::abs(t.cdf + t.sf - 1) > 1e-9)
                            ++bad_cdf;
                        prev = t.cdf;
                    }
                }
        }
    }

    double worst_cum = 0;
    auto rel = [&](double a, double b) { worst_cum = std::max(worst_cum, std::abs(a - b) / std::abs(b)); };
    for (const auto& name : preset_names()) {
        auto sc = preset(name);
        for (double k : {1.05, 1.4, 1.9})
            for (auto kind : {CgfKind::ET, CgfKind::Loop}) {
                auto c = build_continuous_cgf(sc, k, kind);
                rel(c.theta, c.model.mean());
                rel(c.iota1, std::pow(c.model.variance(), 1.5));
                rel(c.iota2, c.model.third_cumulant());
                auto l = build_lattice_cgf(sc, k, kind);
                rel(l.vartheta * sc.t_u, l.model.mean());
                rel(l.variance, l.model.variance());
                auto t = build_clt_cgf(sc, k, kind);
                rel(t.Psi, t.model.mean());
                rel(t.Upsilon, std::pow(t.model.variance(), 1.5));
                rel(t.iota2, t.model.third_cumulant());
            }
    }

    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> un(1, 5), terms(2, 3);
    std::uniform_real_distribution<double> ue(0.05, 0.5);
    double worst_pmf = 0;
    for (int i = 0; i < c9_instances; ++i) {
        std::vector<LatticeTerm> ts;
        for (int j = terms(rng); j > 0; --j) ts.push_back({un(rng), ue(rng), 1.0});
        CgfModel m;
        m.lattice_terms = ts;
        auto ex = exact_lattice_convolution(ts);
        double cum = ex.probs[0];
        for (long k = ex.base_index + 1; cum < 0.999; ++k) {
            cum += ex.at(k);
            worst_pmf = std::max(worst_pmf, std::abs(spa_pmf(m, k) / ex.at(k) - 1));
        }
    }

    auto iid_err = [](int n) {
        std::vector<LatticeTerm> ts(std::size_t(n), LatticeTerm{1, 0.3, 1.0});
        CgfModel m;
        m.lattice_terms = ts;
        auto ex = exact_lattice_convolution(ts);
        double w = 0, cum = ex.probs[0];
        for (long k = n + 1; cum < 0.999; ++k) {
            cum += ex.at(k);
            w = std::max(w, std::abs(spa_pmf(m, k) / ex.at(k) - 1));
        }
        return w;
    };
    double e3 = iid_err(3), e6 = iid_err(6);

    bool ok = bad_cdf == 0 && worst_cum <= c9_cumulant && worst_pmf <= c9_pmf_rel && e6 < e3;
    return {ok, "cdf_violations=" + std::to_string(bad_cdf) + " cumulant_rel=" + fmt("%.3g", worst_cum) +
                    " pmf_rel=" + fmt("%.3g", worst_pmf) + " iid_err_n3=" + fmt("%.3g", e3) +
                    " iid_err_n6=" + fmt("%.3g", e6)};
}

}  // namespace

int main(int argc, char** argv) {
    auto parse_list = [](const std::string& list) {
        std::set<int> out;
        for (std::size_t p = 0; p < list.size();) {
            std::size_t q = list.find(',', p);
            out.insert(std::atoi(list.substr(p, q - p).c_str()));
            p = q == std::string::npos ? list.size() : q + 1;
        }
        return out;
    };
    std::set<int> expected, only;
    for (int i = 1; i + 1 < argc; ++i) {
        if (!std::strcmp(argv[i], "--expect-fail")) expected = parse_list(argv[++i]);
        else if (!std::strcmp(argv[i], "--only")) only = parse_list(argv[++i]);
    }

    struct Check {
        int id;
        const char* what;
        std::function<Outcome()> run;
    };
    std::vector<Check> checks = {
        {1, "gamma sum CDF vs exact law and truncated convolution", gamma_sum_vs_truncated},
        {2, "fig4 discrete-form CDFs vs Monte Carlo", loop_vs_mc_fig4},
        {3, "fig7 regime separation vs Monte Carlo", regime_separation_fig7},
        {4, "fig5 mean excess vs Monte Carlo", excess_vs_mc_fig5},
        {5, "PF deadline allocation vs grid and KKT", pf_allocation},
        {6, "ratio over decompression cycles monotone in three regimes", decompression_monotone},
        {7, "ternary vs grid search, ratio trend, frontier dominance", optimizer_checks},
        {8, "analytic ratio derivative vs finite differences", gradient_vs_fd},
        {9, "property suites", property_suites},
    };

    int unexpected = 0;
    for (const auto& c : checks) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        bool known = expected.count(c.id) > 0;
        std::printf("criterion %d %s: %s | %s%s\n", c.id, o.pass ? "PASS" : "FAIL", c.what, o.detail.c_str(),
                    !o.pass && known ? " (known failure)" : "");
        std::fflush(stdout);
        if (!o.pass && !known) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
