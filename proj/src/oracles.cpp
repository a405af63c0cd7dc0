#include "cgc/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "cgc/errors.hpp"

namespace cgc {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples) : sorted_(std::move(samples)) {
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDistribution::cdf(double x) const {
    if (sorted_.empty()) return 0.0;
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return double(it - sorted_.begin()) / double(sorted_.size());
}

double EmpiricalDistribution::std_error(double x) const {
    double p = cdf(x);
    return std::sqrt(p * (1.0 - p) / double(sorted_.size()));
}

double EmpiricalDistribution::quantile(double p) const {
    if (sorted_.empty()) return 0.0;
    auto n = sorted_.size();
    auto i = std::size_t(std::ceil(p * double(n)));
    i = std::clamp<std::size_t>(i, 1, n);
    return sorted_[i - 1];
}

double EmpiricalDistribution::mean() const {
    if (sorted_.empty()) return 0.0;
    return std::accumulate(sorted_.begin(), sorted_.end(), 0.0) / double(sorted_.size());
}

EmpiricalDistribution::Excess EmpiricalDistribution::mean_excess(double tau) const {
    Excess e;
    if (sorted_.empty()) return e;
    double s = 0, s2 = 0;
    for (double v : sorted_) {
        double d = std::max(0.0, v - tau);
        s += d;
        s2 += d * d;
    }
    double n = double(sorted_.size());
    e.mean = s / n;
    double var = std::max(0.0, s2 / n - e.mean * e.mean) * n / std::max(1.0, n - 1.0);
    e.std_error = std::sqrt(var / n);
    return e;
}

namespace {

struct Components {
    std::vector<GammaTerm> et_gamma;
    std::vector<LatticeTerm> et_lattice;
    std::vector<LatticeTerm> cl_lattice;
    GammaTerm ll;
};

struct ShardOut {
    std::vector<double> cl, et, t1;
};

void run_shard(const Components& c, long n, std::uint64_t seed, int shard, ShardOut& out) {
    std::seed_seq seq{std::uint32_t(seed & 0xffffffffu), std::uint32_t(seed >> 32), std::uint32_t(shard)};
    Rng rng(seq);
    out.cl.resize(std::size_t(n));
    out.et.resize(std::size_t(n));
    out.t1.resize(std::size_t(n));
    for (long i = 0; i < n; ++i) {
        double tcl = sample_term(c.ll, rng);
        for (const auto& l : c.cl_lattice) tcl += sample_term(l, rng);
        double tet = 0;
        for (const auto& g : c.et_gamma) tet += sample_term(g, rng);
        for (const auto& l : c.et_lattice) tet += sample_term(l, rng);
        out.cl[std::size_t(i)] = tcl;
        out.et[std::size_t(i)] = tet;
        out.t1[std::size_t(i)] = tcl + tet;
    }
}

LatencyCurve empirical_curve(const EmpiricalDistribution& d, const std::vector<double>& grid, const std::string& q,
                             const std::string& scenario, double kappa) {
    LatencyCurve c;
    c.xs = grid;
    c.method = Method::MonteCarlo;
    c.quantity = q;
    c.scenario = scenario;
    c.kappa = kappa;
    for (double x : grid) c.ps.push_back(d.cdf(x));
    return c;
}

}  // namespace

McReport mc_closed_loop(const ScenarioConfig& sc, double kappa, long samples, std::uint64_t seed,
                        const McOptions& opt) {
    if (samples < 1000) throw ConfigError("Monte Carlo needs at least 1000 samples");
    auto t0 = std::chrono::steady_clock::now();
    Components c;
    c.et_gamma = build_continuous_cgf(sc, kappa, CgfKind::ET).model.gamma_terms;
    c.et_lattice = build_lattice_cgf(sc, kappa, CgfKind::ET).model.lattice_terms;
    c.cl_lattice = build_lattice_cgf(sc, kappa, CgfKind::CL).model.lattice_terms;
    c.ll = ll_compute_term(sc);

    int shards = std::max(1, opt.shards);
    std::vector<ShardOut> outs(static_cast<std::size_t>(shards));
    std::vector<long> counts(std::size_t(shards), samples / shards);
    for (long i = 0; i < samples % shards; ++i) counts[std::size_t(i)]++;

    int threads = opt.threads > 0 ? opt.threads : int(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, shards);
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (int s = w; s < shards; s += threads) run_shard(c, counts[std::size_t(s)], seed, s, outs[std::size_t(s)]);
        });
    }
    for (auto& th : pool) th.join();

    std::vector<double> cl, et, t1, fl, t;
    for (auto& o : outs) {
        cl.insert(cl.end(), o.cl.begin(), o.cl.end());
        et.insert(et.end(), o.et.begin(), o.et.end());
        t1.insert(t1.end(), o.t1.begin(), o.t1.end());
    }
    fl.resize(et.size());
    t.resize(et.size());
    for (std::size_t i = 0; i < et.size(); ++i) {
        fl[i] = std::max(sc.tau_PF, et[i]);
        t[i] = cl[i] + fl[i];
    }

    McReport r;
    r.samples = samples;
    r.seed = seed;
    r.kappa = kappa;
    r.scenario = sc.preset_name;
    r.draws["T_CL"] = EmpiricalDistribution(std::move(cl));
    r.draws["T_ET"] = EmpiricalDistribution(std::move(et));
    r.draws["T_FL"] = EmpiricalDistribution(std::move(fl));
    r.draws["T1"] = EmpiricalDistribution(std::move(t1));
    r.draws["T"] = EmpiricalDistribution(std::move(t));

    r.grid = opt.grid.empty() ? linspace(0.0, r.draws["T"].quantile(0.9999), opt.grid_points) : opt.grid;
    for (const auto& [name, d] : r.draws) r.curves[name] = empirical_curve(d, r.grid, name, sc.preset_name, kappa);
    for (double tau : opt.excess_taus) r.excess_estimates[tau] = r.draws["T_ET"].mean_excess(tau);
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string McReport::summary_json(bool with_runtime) const {
    nlohmann::json j;
    j["samples"] = samples;
    j["seed"] = seed;
    j["kappa"] = kappa;
    j["scenario"] = scenario;
    for (const auto& [name, d] : draws) {
        auto& q = j["quantities"][name];
        q["mean"] = d.mean();
        for (double p : {0.5, 0.9, 0.99, 0.999, 0.9999}) {
            char key[16];
            std::snprintf(key, sizeof key, "q%g", p);
            q["quantiles"][key] = d.quantile(p);
        }
    }
    j["excess"] = nlohmann::json::array();
    for (const auto& [tau, e] : excess_estimates)
        j["excess"].push_back({{"tau_PF", tau}, {"mean", e.mean}, {"std_error", e.std_error}});
    if (with_runtime) j["runtime_seconds"] = runtime;
    return j.dump(2);
}

LatencyCurve truncated_convolution_cdf(const std::vector<GammaTerm>& terms, double delta1, double lambda1,
                                       const TruncConvOptions& opt) {
    if (terms.empty()) throw ConfigError("truncated convolution needs at least one term");
    if (!(delta1 > 0 && lambda1 > delta1)) throw ConfigError("need 0 < delta1 < lambda1");
    std::size_t n = std::size_t(std::ceil(lambda1 / delta1 - 1e-9));
    double cost = double(terms.size()) * double(n) * double(n) / 2.0;
    if (cost > opt.budget) throw ConfigError("truncated convolution grid exceeds the work budget");

    auto discretize = [&](const GammaTerm& g) {
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            double a = double(i) * delta1;
            if (opt.mode == Discretization::CellMass)
                w[i] = exact_gamma_cdf(g.shape, g.rate, a + delta1) - exact_gamma_cdf(g.shape, g.rate, a);
            else
                w[i] = exact_gamma_pdf(g.shape, g.rate, a) * delta1;
        }
        return w;
    };

    std::vector<double> acc = discretize(terms[0]);
    for (std::size_t t = 1; t < terms.size(); ++t) {
        std::vector<double> w = discretize(terms[t]);
        std::vector<double> next(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double a = acc[i];
            if (a == 0.0) continue;
            double* out = next.data() + i;
            std::size_t m = n - i;
            for (std::size_t j = 0; j < m; ++j) out[j] += a * w[j];
        }
        acc.swap(next);
    }
    LatencyCurve c;
    c.method = Method::TruncConv;
    c.quantity = "sum";
    c.delta = delta1;
    c.xs.resize(n);
    c.ps.resize(n);
    double run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        run += acc[i];
        c.xs[i] = double(i) * delta1;
        c.ps[i] = std::min(1.0, run);
    }
    return c;
}

double step_value(const LatencyCurve& c, double x) {
    if (c.xs.empty() || x < c.xs.front()) return 0.0;
    double d = c.xs.size() > 1 ? c.xs[1] - c.xs[0] : 1.0;
    auto i = std::size_t(std::floor((x - c.xs.front()) / d + 1e-9));
    if (i >= c.ps.size()) return c.ps.back();
    return c.ps[i];
}

PmfTable exact_lattice_convolution(const std::vector<LatticeTerm>& terms) {
    if (terms.empty()) throw ConfigError("need at least one lattice term");
    PmfTable t;
    t.spacing = terms.front().spacing;
    std::vector<double> acc{1.0};
    for (const auto& term : terms) {
        if (std::abs(term.spacing - t.spacing) > 1e-12 * t.spacing)
            throw ConfigError("lattice terms have mismatched spacings");
        std::vector<double> w;
        double cum = 0;
        for (long k = term.packets;; ++k) {
            double p = exact_negbin_pmf(term, k);
            w.push_back(p);
            cum += p;
            if (1.0 - cum < 1e-12 && double(k) > negbin_mean(term)) break;
            if (w.size() > 50'000'000) throw NonConvergenceError("negative binomial tail too long");
        }
        std::vector<double> next(acc.size() + w.size() - 1, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i)
            for (std::size_t j = 0; j < w.size(); ++j) next[i + j] += acc[i] * w[j];
        acc.swap(next);
        t.base_index += term.packets;
    }
    double s = std::accumulate(acc.begin(), acc.end(), 0.0);
    for (double& p : acc) p /= s;
    t.probs = std::move(acc);
    t.normalized = true;
    return t;
}

}  // namespace cgc
