#include "cgc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "cgc/errors.hpp"

namespace cgc {

const char* search_name(SearchKind k) {
    switch (k) {
        case SearchKind::Ternary: return "ternary";
        case SearchKind::Grid: return "grid";
        case SearchKind::GradientDescent: return "gd";
    }
    return "?";
}

SearchKind search_from_name(const std::string& s) {
    if (s == "ternary") return SearchKind::Ternary;
    if (s == "grid") return SearchKind::Grid;
    if (s == "gd" || s == "gradient") return SearchKind::GradientDescent;
    throw ConfigError("unknown search '" + s + "' (ternary, grid, gd)");
}

void OptimizationConfig::validate() const {
    if (!(weight >= 0 && weight <= 1)) throw ConfigError("weight must be in [0,1]");
    if (!(T_th > tau_PF)) throw ConfigError("T_th must exceed tau_PF");
    if (!(tau_PF > 0)) throw ConfigError("tau_PF must be positive");
    if (!(eta_ts >= 0 && eta_ts < 1)) throw ConfigError("eta_ts must be in [0,1)");
    if (!(rho_ts > 0)) throw ConfigError("rho_ts must be positive");
    if (!(search.granularity > 0)) throw ConfigError("granularity must be positive");
}

std::pair<double, double> allocate_pf_deadlines(double phi1, double phi2, double tau_PF) {
    if (!(phi1 > 0 && phi2 > 0 && tau_PF > 0)) throw DomainError("allocation needs positive phi and tau");
    double s = phi1 + phi2;
    return {tau_PF * phi2 / s, tau_PF * phi1 / s};
}

double pf_power_pair(double phi1, double phi2, double tau_PF, const CapacityConstants& cc) {
    double c3 = cc.c3;
    return cc.c2 * (std::pow(phi1, -c3 - 1) + std::pow(phi2, -c3 - 1)) +
           std::pow(tau_PF * phi1 * phi2 / (phi1 + phi2), -c3) * (1.0 / phi1 + 1.0 / phi2);
}

double pf_power_total(const ScenarioConfig& sc, double tau_PF) {
    if (!(tau_PF > 0)) throw DomainError("tau_PF must be positive");
    double p1 = pf_phi(sc.link(LinkId::PF1), sc.T_s, sc.n_PF, sc.capacity);
    double p2 = pf_phi(sc.link(LinkId::PF2), sc.T_s, sc.n_PF, sc.capacity);
    return pf_power_pair(p1, p2, tau_PF, sc.capacity);
}

namespace {
// 2^(a/kappa) - 1 prefactor and exponent a of the CD power law.
std::pair<double, double> cd_law(const ScenarioConfig& sc) {
    const auto& l = sc.link(LinkId::CD);
    if (!(l.outage_prob > 0)) throw DomainError("CD power needs a positive outage probability");
    double n1 = cd_bits_at_kappa1(sc);
    double a = sc.corrected_cd_rate ? n1 / (sc.t_u * l.bandwidth) : sc.t_u * n1 / l.bandwidth;
    double pre = -l.noise_psd * l.bandwidth / (l.gain() * std::log1p(-l.outage_prob));
    return {pre, a};
}
}  // namespace

double cd_power(const ScenarioConfig& sc, double kappa) {
    check_kappa(sc, kappa);
    auto [pre, a] = cd_law(sc);
    return pre * std::expm1(std::log(2.0) * a / kappa);
}

double cd_power_slope(const ScenarioConfig& sc, double kappa) {
    check_kappa(sc, kappa);
    auto [pre, a] = cd_law(sc);
    return -pre * std::log(2.0) * a / (kappa * kappa) * std::exp2(a / kappa);
}

double kappa_upper_variance(const ScenarioConfig& sc, double rho_ts) {
    double kmax = sc.compression.kappa_max;
    if (et_variance(sc, 1.0) > rho_ts * (1.0 + 1e-12))
        throw InfeasibleError("variance bound is below Var{T_ET} at ratio 1", "variance");
    if (et_variance(sc, kmax) <= rho_ts) return kmax;
    double lo = 1.0, hi = kmax;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        if (et_variance(sc, mid) <= rho_ts) lo = mid; else hi = mid;
    }
    return lo;
}

double kappa_upper_tail(const ScenarioConfig& sc, double eta_ts, double tau_PF, double delta) {
    double kmax = sc.compression.kappa_max;
    if (eta_ts <= 0) return kmax;
    ScenarioConfig s2 = sc;
    s2.tau_PF = tau_PF;
    auto g = [&](double k) { return LatencyModel(s2, k, delta).et(tau_PF).cdf; };
    double g1 = g(1.0);
    if (g1 < eta_ts) throw InfeasibleError("P{T_ET < tau_PF} is below eta_ts already at ratio 1", "tail");
    double gmax = g(kmax);
    if (gmax >= eta_ts) return kmax;

    std::vector<std::pair<double, double>> path{{1.0, g1}, {kmax, gmax}};
    double lo = 1.0, hi = kmax;
    while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        double v = g(mid);
        path.emplace_back(mid, v);
        if (v >= eta_ts) lo = mid; else hi = mid;
    }
    std::sort(path.begin(), path.end());
    bool monotone = true;
    for (std::size_t i = 1; i < path.size(); ++i)
        if (path[i].second > path[i - 1].second + 1e-12) monotone = false;
    if (monotone) return lo;

    // first crossing on a fine scan, then bisect inside that cell
    double step = 1e-3, a = 1.0;
    while (a + step <= kmax && g(a + step) >= eta_ts) a += step;
    double b = std::min(kmax, a + step);
    while (b - a > 1e-12) {
        double mid = 0.5 * (a + b);
        if (g(mid) >= eta_ts) a = mid; else b = mid;
    }
    return a;
}

double resolved_P_max(const ScenarioConfig& sc, const OptimizationConfig& cfg) {
    if (cfg.P_max > 0) return cfg.P_max;
    return pf_power_total(sc, cfg.tau_PF) + cd_power(sc, 1.0);
}

TracePoint evaluate_objective(const ScenarioConfig& sc, const OptimizationConfig& cfg, double kappa) {
    ScenarioConfig s2 = sc;
    s2.tau_PF = cfg.tau_PF;
    LatencyModel lm(s2, kappa, cfg.delta);
    TracePoint p;
    p.kappa = kappa;
    p.tail_prob = lm.t(cfg.T_th).sf;
    p.P_total = pf_power_total(sc, cfg.tau_PF) + cd_power(sc, kappa);
    p.objective = cfg.weight * p.tail_prob + (1.0 - cfg.weight) * p.P_total / resolved_P_max(sc, cfg);
    return p;
}

double objective(const ScenarioConfig& sc, const OptimizationConfig& cfg, double kappa) {
    return evaluate_objective(sc, cfg, kappa).objective;
}

double objective_slope(const ScenarioConfig& sc, const OptimizationConfig& cfg, double kappa) {
    ScenarioConfig s2 = sc;
    s2.tau_PF = cfg.tau_PF;
    double g = 0;
    if (cfg.weight > 0) g += cfg.weight * LatencyModel(s2, kappa, cfg.delta).tail_t_grad_kappa(cfg.T_th, cfg.search.clip);
    g += (1.0 - cfg.weight) * cd_power_slope(sc, kappa) / resolved_P_max(sc, cfg);
    return std::clamp(g, -cfg.search.clip, cfg.search.clip);
}

namespace {

struct Search {
    const ScenarioConfig& sc;
    const OptimizationConfig& cfg;
    std::vector<TracePoint>& trace;

    TracePoint eval(double k) {
        TracePoint p = evaluate_objective(sc, cfg, k);
        trace.push_back(p);
        return p;
    }
};

bool better(const TracePoint& a, const TracePoint& b) {
    return a.objective < b.objective || (a.objective == b.objective && a.kappa < b.kappa);
}

TracePoint grid_search(Search& s, double lo, double hi, double g) {
    long n = long(std::floor((hi - lo) / g + 1e-9));
    TracePoint best = s.eval(lo);
    for (long i = 1; i <= n; ++i) {
        TracePoint p = s.eval(std::min(hi, lo + double(i) * g));
        if (better(p, best)) best = p;
    }
    if (lo + double(n) * g < hi - 1e-12) {
        TracePoint p = s.eval(hi);
        if (better(p, best)) best = p;
    }
    return best;
}

// More than one change of slope sign along the scan, ignoring flat steps.
bool looks_multimodal(const std::vector<TracePoint>& scan) {
    int changes = 0, last = 0;
    for (std::size_t i = 1; i < scan.size(); ++i) {
        double d = scan[i].objective - scan[i - 1].objective;
        double scale = 1e-12 * std::max(1.0, std::abs(scan[i].objective));
        int sg = d > scale ? 1 : (d < -scale ? -1 : 0);
        if (sg == 0) continue;
        if (last != 0 && sg != last) ++changes;
        last = sg;
    }
    return changes > 1 || (changes == 1 && last < 0);
}

TracePoint ternary_search(Search& s, double lo, double hi, bool& fallback) {
    std::vector<TracePoint> scan;
    int m = std::max(2, s.cfg.search.prescan);
    for (int i = 0; i < m; ++i) scan.push_back(s.eval(lo + (hi - lo) * i / (m - 1)));
    if (looks_multimodal(scan)) {
        fallback = true;
        return grid_search(s, lo, hi, s.cfg.search.granularity);
    }
    double a = lo, b = hi;
    while (b - a > s.cfg.search.tol) {
        double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (s.eval(m1).objective <= s.eval(m2).objective) b = m2; else a = m1;
    }
    TracePoint best = scan.front();
    for (double k : {a, 0.5 * (a + b), b, hi}) {
        TracePoint p = s.eval(k);
        if (better(p, best)) best = p;
    }
    return best;
}

TracePoint gradient_search(Search& s, double lo, double hi) {
    const auto& sc = s.sc;
    double glo = lo;
    if (sc.compression.kind == CompressionKind::Exp) glo = std::max(lo, 1.0 + 1e-9);
    double ghi = std::min(hi, sc.compression.kappa_max - 1e-9);
    std::mt19937_64 rng(s.cfg.search.seed);
    std::uniform_real_distribution<double> unif(glo, std::max(glo, ghi));
    TracePoint best = s.eval(lo);
    if (ghi <= glo) return best;
    for (int r = 0; r < std::max(1, s.cfg.search.restarts); ++r) {
        double k = unif(rng);
        TracePoint cur = s.eval(k);
        double step = s.cfg.search.step;
        for (int it = 0; it < 500; ++it) {
            double g = objective_slope(sc, s.cfg, k);
            double t = step;
            TracePoint trial;
            double kn = k;
            while (true) {
                kn = std::clamp(k - t * g, glo, ghi);
                trial = s.eval(kn);
                if (trial.objective <= cur.objective - 1e-4 * g * (k - kn) || t < 1e-12) break;
                t *= 0.5;
            }
            double moved = std::abs(kn - k);
            if (trial.objective <= cur.objective) {
                k = kn;
                cur = trial;
            }
            if (moved < 1e-6) break;
        }
        if (better(cur, best)) best = cur;
    }
    TracePoint end = s.eval(hi);
    if (better(end, best)) best = end;
    return best;
}

}  // namespace

OptResult optimize(const ScenarioConfig& sc, const OptimizationConfig& cfg) {
    cfg.validate();
    OptResult r;
    r.method = search_name(cfg.search.kind);
    double kmax = sc.compression.kappa_max;
    if (cfg.kappa_max > 0) kmax = std::min(kmax, cfg.kappa_max);
    r.kappa_lo = std::max(1.0, cfg.kappa_min);
    r.kappa_hi = kmax;
    r.binding_bound = "kappa_max";
    double k1 = kappa_upper_variance(sc, cfg.rho_ts);
    if (k1 < r.kappa_hi) {
        r.kappa_hi = k1;
        r.binding_bound = "variance";
    }
    double k2 = kappa_upper_tail(sc, cfg.eta_ts, cfg.tau_PF, cfg.delta);
    if (k2 < r.kappa_hi) {
        r.kappa_hi = k2;
        r.binding_bound = "tail";
    }
    if (r.kappa_hi < r.kappa_lo)
        throw InfeasibleError("empty feasible ratio interval; binding bound: " + r.binding_bound, r.binding_bound);

    Search s{sc, cfg, r.trace};
    TracePoint best;
    if (r.kappa_hi - r.kappa_lo < 1e-12) {
        best = s.eval(r.kappa_lo);
    } else {
        switch (cfg.search.kind) {
            case SearchKind::Grid: best = grid_search(s, r.kappa_lo, r.kappa_hi, cfg.search.granularity); break;
            case SearchKind::Ternary: best = ternary_search(s, r.kappa_lo, r.kappa_hi, r.fell_back_to_grid); break;
            case SearchKind::GradientDescent: best = gradient_search(s, r.kappa_lo, r.kappa_hi); break;
        }
    }
    r.kappa_star = best.kappa;
    r.objective = best.objective;
    r.tail_prob = best.tail_prob;
    r.boundary = std::abs(best.kappa - r.kappa_lo) < 1e-9 || std::abs(best.kappa - r.kappa_hi) < 1e-9;

    double p1 = pf_phi(sc.link(LinkId::PF1), sc.T_s, sc.n_PF, sc.capacity);
    double p2 = pf_phi(sc.link(LinkId::PF2), sc.T_s, sc.n_PF, sc.capacity);
    auto [t1, t2] = allocate_pf_deadlines(p1, p2, cfg.tau_PF);
    r.P_PF1 = pf_power_for_deadline(sc.link(LinkId::PF1), t1, sc.T_s, sc.n_PF, sc.capacity);
    r.P_PF2 = pf_power_for_deadline(sc.link(LinkId::PF2), t2, sc.T_s, sc.n_PF, sc.capacity);
    r.P_CD = cd_power(sc, r.kappa_star);

    ScenarioConfig s2 = sc;
    s2.tau_PF = cfg.tau_PF;
    VertexConfig vc;
    vc.vertex = 8;
    vc.eta_ts = cfg.eta_ts;
    vc.rho_ts = cfg.rho_ts;
    r.constraint_slacks = evaluate_vertex_constraints(s2, r.kappa_star, vc, cfg.delta).slacks;
    r.constraint_slacks["kappa_upper"] = r.kappa_hi - r.kappa_star;
    return r;
}

std::string OptResult::to_json() const {
    nlohmann::json j;
    j["kappa_star"] = kappa_star;
    j["powers"] = {{"P_PF1", P_PF1}, {"P_PF2", P_PF2}, {"P_CD", P_CD}};
    j["objective"] = objective;
    j["tail_prob"] = tail_prob;
    j["constraint_slacks"] = constraint_slacks;
    j["method"] = method;
    j["feasible_interval"] = {kappa_lo, kappa_hi};
    j["binding_bound"] = binding_bound;
    j["boundary"] = boundary;
    j["fell_back_to_grid"] = fell_back_to_grid;
    j["evaluations"] = trace.size();
    return j.dump(2);
}

std::vector<Frontier> tradeoff_curve(const ScenarioConfig& sc, const OptimizationConfig& cfg,
                                     const std::vector<double>& tau_list, const std::vector<double>& kappa_grid) {
    std::vector<Frontier> out;
    for (double tau : tau_list) {
        OptimizationConfig c = cfg;
        c.tau_PF = tau;
        c.validate();
        Frontier f;
        f.tau_PF = tau;
        f.kappa_hi = std::min({sc.compression.kappa_max, kappa_upper_variance(sc, c.rho_ts),
                               kappa_upper_tail(sc, c.eta_ts, tau, c.delta)});
        for (double k : kappa_grid) {
            if (k < 1.0 || k > f.kappa_hi) continue;
            f.sweep.push_back(evaluate_objective(sc, c, k));
        }
        std::vector<TracePoint> sorted = f.sweep;
        std::sort(sorted.begin(), sorted.end(), [](const TracePoint& a, const TracePoint& b) {
            return a.P_total < b.P_total || (a.P_total == b.P_total && a.tail_prob < b.tail_prob);
        });
        double best_tail = std::numeric_limits<double>::infinity();
        for (const auto& p : sorted) {
            if (p.tail_prob < best_tail) {
                f.pareto.push_back(p);
                best_tail = p.tail_prob;
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

double frontier_power_at(const Frontier& f, double tail) {
    const auto& p = f.pareto;
    if (p.empty()) return std::nan("");
    // tails decrease along the frontier
    if (tail > p.front().tail_prob || tail < p.back().tail_prob) return std::nan("");
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (tail >= p[i].tail_prob) {
            double t0 = p[i - 1].tail_prob, t1 = p[i].tail_prob;
            double w = t0 == t1 ? 0.0 : (t0 - tail) / (t0 - t1);
            return p[i - 1].P_total + w * (p[i].P_total - p[i - 1].P_total);
        }
    }
    return p.front().P_total;
}

SlackReport evaluate_vertex_constraints(const ScenarioConfig& sc, double kappa, const VertexConfig& vc, double delta) {
    if (vc.vertex != 2 && vc.vertex != 4 && vc.vertex != 6 && vc.vertex != 8)
        throw ConfigError("vertex must be 2, 4, 6 or 8");
    SlackReport r;
    r.vertex = vc.vertex;
    LatencyModel lm(sc, kappa, delta);

    double p1 = pf_phi(sc.link(LinkId::PF1), sc.T_s, sc.n_PF, sc.capacity);
    double p2 = pf_phi(sc.link(LinkId::PF2), sc.T_s, sc.n_PF, sc.capacity);
    auto [t1, t2] = allocate_pf_deadlines(p1, p2, sc.tau_PF);
    r.slacks["pf_deadline_sum"] = sc.tau_PF - (t1 + t2);

    auto cl_cdf = [&](double x) { return lm.cl(x).cdf; };
    double hi = std::max(1e-3, 4.0 * cl_mean(sc));
    while (cl_cdf(hi) < vc.eta_CL) hi *= 2;
    r.var_CL = invert_cdf(cl_cdf, vc.eta_CL, 0.0, hi, 1e-14);

    bool with_cl = vc.vertex == 2 || vc.vertex == 4;
    if (vc.vertex == 2 || vc.vertex == 6) {
        if (with_cl) r.slacks["mean_CL"] = vc.rho_CL - cl_mean(sc);
        r.slacks["mean_excess_ET"] = vc.rho_FLs - lm.conditional_excess(sc.tau_PF);
    } else {
        if (with_cl) r.slacks["tail_CL"] = lm.cl(vc.tau_CL).cdf - vc.eta_CL;
        r.slacks["tail_ET"] = lm.et(sc.tau_PF).cdf - vc.eta_ts;
        r.slacks["variance_ET"] = vc.rho_ts - et_variance(sc, kappa);
    }
    for (const auto& [k, v] : r.slacks)
        if (v < -1e-12 && !std::isnan(v)) r.feasible = false;
    return r;
}

}  // namespace cgc
