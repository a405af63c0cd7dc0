#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgc/errors.hpp"
#include "cgc/latency.hpp"
#include "cgc/optimizer.hpp"
#include "cgc/oracles.hpp"
#include "cgc/saddlepoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cgc::cli {

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

namespace {

std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%g", v);
    return b;
}

std::string num17(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

struct Run {
    std::ostream& out;
    std::ostream& err;
    std::vector<std::string> argv;
    std::string command;
    std::string scenario;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::map<std::string, std::string> params;
    std::vector<std::string> outputs;

    std::string path(const std::string& name) {
        fs::create_directories(out_dir);
        std::string p = (fs::path(out_dir) / name).string();
        outputs.push_back(p);
        return p;
    }

    void write_text(const std::string& name, const std::string& text) {
        std::ofstream f(path(name));
        if (!f) throw ConfigError("cannot write " + name);
        f << text << '\n';
    }

    void write_manifest() {
        json j;
        j["command"] = command;
        j["scenario"] = scenario;
        j["parameters"] = params;
        j["seed"] = seed;
        j["tool_version"] = tool_version;
        j["argv"] = argv;
        j["outputs"] = json::array();
        for (const auto& p : outputs)
            j["outputs"].push_back({{"file", fs::path(p).filename().string()}, {"path", p}, {"fnv1a", file_digest(p)}});
        fs::create_directories(out_dir);
        std::ofstream f(fs::path(out_dir) / "manifest.json");
        f << j.dump(2) << '\n';
    }
};

void collect_params(const CLI::App* sub, Run& r) {
    for (const CLI::Option* o : sub->get_options()) {
        if (o->count() == 0 || o->get_name() == "--help") continue;
        std::string v;
        for (const auto& s : o->results()) v += (v.empty() ? "" : ",") + s;
        std::string key = o->get_name();
        while (!key.empty() && key.front() == '-') key.erase(key.begin());
        r.params[key] = o->get_expected_max() == 0 ? "true" : v;
    }
}

Method method_from_cli(const std::string& s) {
    if (s == "theorem1") return Method::Theorem1;
    if (s == "lemma3") return Method::Lemma3;
    if (s == "theorem2") return Method::Theorem2;
    throw ConfigError("unknown method '" + s + "' (theorem1, lemma3, theorem2)");
}

bool is_normal_lattice(Method m) { return m == Method::Lemma3 || m == Method::Theorem2; }

std::string draw_key(Quantity q) {
    switch (q) {
        case Quantity::CL: return "T_CL";
        case Quantity::ET: return "T_ET";
        case Quantity::FL: return "T_FL";
        case Quantity::T1: return "T1";
        case Quantity::T: return "T";
    }
    return "T";
}

void regime_warning(Run& r, const ScenarioConfig& sc, double kappa) {
    if (!clt_regime_ok(sc, kappa))
        r.err << "warning: normal replacement of the retransmission count is unreliable for scenario '"
              << sc.preset_name << "' at kappa " << num(kappa) << " (few packets, long slot)\n";
}

struct ErrorStats {
    double max = 0, mean = 0, at_099 = 0;
};

// at_099 is taken where the reference is closest to 0.99
ErrorStats error_stats(const std::vector<double>& ref, const std::vector<double>& approx) {
    ErrorStats s;
    double best = 2.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        double e = std::abs(approx[i] - ref[i]);
        s.max = std::max(s.max, e);
        s.mean += e;
        if (std::abs(ref[i] - 0.99) < best) {
            best = std::abs(ref[i] - 0.99);
            s.at_099 = e;
        }
    }
    if (!ref.empty()) s.mean /= double(ref.size());
    return s;
}

json stats_json(const ErrorStats& s) { return {{"max", s.max}, {"mean", s.mean}, {"at_cdf_0.99", s.at_099}}; }

// ---- cdf

struct CdfArgs {
    std::string scenario;
    std::vector<double> kappas{1.1};
    std::vector<std::string> methods{"theorem1"};
    std::vector<std::string> quantities{"ET", "T"};
    double delta = 1e-5;
    int points = 400;
    double x_min = 0, x_max = 0;
};

void cmd_cdf(Run& r, const CdfArgs& a) {
    ScenarioConfig sc = load_scenario(a.scenario);
    r.scenario = a.scenario;
    std::vector<Method> methods;
    for (const auto& m : a.methods) methods.push_back(method_from_cli(m));
    std::vector<Quantity> qs;
    for (const auto& q : a.quantities) qs.push_back(quantity_from_name(q));
    if (a.points < 2) throw ConfigError("--points must be at least 2");

    for (double kappa : a.kappas) {
        LatencyModel lm(sc, kappa, a.delta);
        for (Method m : methods)
            if (is_normal_lattice(m)) {
                regime_warning(r, sc, kappa);
                break;
            }
        double hi = a.x_max > 0 ? a.x_max : lm.quantile(Quantity::T, Method::Theorem1, 0.9999);
        auto xs = linspace(a.x_min, hi, a.points);
        for (Quantity q : qs)
            for (std::size_t i = 0; i < methods.size(); ++i) {
                auto c = lm.curve(q, methods[i], xs);
                std::string name = "cdf_" + sc.preset_name + "_" + quantity_name(q) + "_" + a.methods[i] + "_k" +
                                   num(kappa) + ".csv";
                write_curve_csv(c, r.path(name));
                r.out << name << '\n';
            }
    }
}

// ---- compare

struct CompareArgs {
    std::string preset, scenario;
    std::string reference;
    std::vector<std::string> methods{"theorem1", "theorem2"};
    std::vector<std::string> quantities{"ET", "T"};
    double kappa = 1.1;
    double samples = 1e6;
    std::uint64_t seed = 1;
    int threads = 0;
    double delta = 1e-5;
    double delta1 = 1e-3, lambda1 = 20;
    std::vector<double> taus;
};

void compare_fig3(Run& r, const CompareArgs& a) {
    r.scenario = "fig3";
    if (!a.reference.empty() && a.reference != "exact")
        throw ConfigError("the fig3 comparison uses the exact reference");
    std::vector<GammaTerm> terms(4, GammaTerm{2.0, 1.0});
    CgfModel m;
    m.gamma_terms = terms;
    auto tc = truncated_convolution_cdf(terms, a.delta1, a.lambda1);
    auto xs = linspace(0.0, 16.0, 400);
    std::vector<double> ex, spa, conv;
    int spa_wins = 0;
    std::ostringstream csv;
    csv << "x,exact,spa,trunc_conv,err_spa,err_trunc_conv\n";
    for (double x : xs) {
        ex.push_back(exact_gamma_cdf(8.0, 1.0, x));
        spa.push_back(spa_cdf(m, x));
        conv.push_back(step_value(tc, x));
        double es = std::abs(spa.back() - ex.back()), ec = std::abs(conv.back() - ex.back());
        if (es <= ec) ++spa_wins;
        csv << num17(x) << ',' << num17(ex.back()) << ',' << num17(spa.back()) << ',' << num17(conv.back()) << ','
            << num17(es) << ',' << num17(ec) << '\n';
    }
    r.write_text("compare_fig3.csv", csv.str());
    json s;
    s["grid"] = {{"from", 0.0}, {"to", 16.0}, {"points", 400}};
    s["delta1"] = a.delta1;
    s["lambda1"] = a.lambda1;
    s["spa"] = stats_json(error_stats(ex, spa));
    s["trunc_conv"] = stats_json(error_stats(ex, conv));
    s["spa_not_worse_fraction"] = double(spa_wins) / double(xs.size());
    s["at_mean"] = {{"x", 8.0}, {"spa", spa_cdf(m, 8.0)}, {"exact", exact_gamma_cdf(8.0, 1.0, 8.0)}};
    r.write_text("compare_fig3_summary.json", s.dump(2));
    r.out << s.dump(2) << '\n';
}

void compare_mc(Run& r, const CompareArgs& a) {
    ScenarioConfig sc = load_scenario(a.scenario);
    r.scenario = a.scenario;
    if (a.reference == "exact")
        throw ConfigError("an exact reference exists only for --preset fig3; use --reference montecarlo");
    if (!a.reference.empty() && a.reference != "montecarlo")
        throw ConfigError("unknown reference '" + a.reference + "' (exact, montecarlo)");
    long n = std::lround(a.samples);
    r.seed = a.seed;
    LatencyModel lm(sc, a.kappa, a.delta);
    McOptions opt;
    opt.threads = a.threads;

    bool excess = a.quantities.size() == 1 && a.quantities[0] == "excess";
    if (excess) {
        opt.excess_taus = a.taus;
        if (opt.excess_taus.empty())
            opt.excess_taus = linspace(lm.quantile(Quantity::ET, Method::Theorem1, 0.05),
                                       lm.quantile(Quantity::ET, Method::Theorem1, 0.995), 10);
        auto rep = mc_closed_loop(sc, a.kappa, n, a.seed, opt);
        std::ostringstream csv;
        csv << "tau_PF,mc,mc_se,analytic,rel_err\n";
        double worst = 0;
        for (const auto& [tau, e] : rep.excess_estimates) {
            double v = lm.conditional_excess(tau);
            double rel = e.mean > 0 ? (v - e.mean) / e.mean : std::nan("");
            if (e.mean > 1e-3) worst = std::max(worst, std::abs(rel));
            csv << num17(tau) << ',' << num17(e.mean) << ',' << num17(e.std_error) << ',' << num17(v) << ','
                << num17(rel) << '\n';
        }
        r.write_text("compare_" + sc.preset_name + "_excess.csv", csv.str());
        json s = {{"samples", n}, {"seed", a.seed}, {"kappa", a.kappa}, {"max_rel_err_mc_above_1ms", worst}};
        r.write_text("compare_" + sc.preset_name + "_excess_summary.json", s.dump(2));
        r.out << s.dump(2) << '\n';
        return;
    }

    std::vector<Method> methods;
    for (const auto& m : a.methods) methods.push_back(method_from_cli(m));
    for (Method m : methods)
        if (is_normal_lattice(m)) {
            regime_warning(r, sc, a.kappa);
            break;
        }
    auto rep = mc_closed_loop(sc, a.kappa, n, a.seed, opt);
    json s = {{"samples", n}, {"seed", a.seed}, {"kappa", a.kappa}};
    for (const auto& qn : a.quantities) {
        Quantity q = quantity_from_name(qn);
        const auto& d = rep.draws.at(draw_key(q));
        std::vector<double> ref;
        std::vector<std::vector<double>> vals(methods.size());
        std::ostringstream csv;
        csv << "x,mc,mc_se";
        for (const auto& m : a.methods) csv << ',' << m << ",err_" << m;
        csv << '\n';
        for (double x : rep.grid) {
            ref.push_back(d.cdf(x));
            csv << num17(x) << ',' << num17(ref.back()) << ',' << num17(d.std_error(x));
            for (std::size_t i = 0; i < methods.size(); ++i) {
                vals[i].push_back(lm.eval(q, methods[i], x).cdf);
                csv << ',' << num17(vals[i].back()) << ',' << num17(std::abs(vals[i].back() - ref.back()));
            }
            csv << '\n';
        }
        r.write_text("compare_" + sc.preset_name + "_" + qn + "_mc.csv", csv.str());
        for (std::size_t i = 0; i < methods.size(); ++i) s[qn][a.methods[i]] = stats_json(error_stats(ref, vals[i]));
    }
    r.write_text("compare_" + sc.preset_name + "_summary.json", s.dump(2));
    r.out << s.dump(2) << '\n';
}

// ---- optimize

struct OptimizeArgs {
    std::string scenario = "opt-default";
    OptimizationConfig cfg;
    std::vector<double> taus{0.25};
    std::string search = "ternary";
    bool tradeoff = false;
    bool T_th_given = false;
    double kappa_step = 1e-2;
};

// sweeps reach tau_PF = 0.3, so the threshold default moves above it
constexpr double tradeoff_T_th = 0.35;

void write_points(Run& r, const std::string& name, const std::vector<TracePoint>& pts) {
    std::ostringstream csv;
    csv << "kappa,objective,P_total,tail_prob\n";
    for (const auto& p : pts)
        csv << num17(p.kappa) << ',' << num17(p.objective) << ',' << num17(p.P_total) << ',' << num17(p.tail_prob)
            << '\n';
    r.write_text(name, csv.str());
}

void cmd_optimize(Run& r, OptimizeArgs a) {
    ScenarioConfig sc = load_scenario(a.scenario);
    r.scenario = a.scenario;
    a.cfg.search.kind = search_from_name(a.search);
    r.seed = a.cfg.search.seed;
    if (a.taus.empty()) throw ConfigError("--tau-PF needs at least one value");

    if (a.tradeoff) {
        if (!a.T_th_given) a.cfg.T_th = tradeoff_T_th;
        if (!(a.kappa_step > 0)) throw ConfigError("--kappa-step must be positive");
        double kmax = a.cfg.kappa_max > 0 ? std::min(a.cfg.kappa_max, sc.compression.kappa_max) : sc.compression.kappa_max;
        int n = int(std::floor((kmax - 1.0) / a.kappa_step + 1e-9)) + 1;
        auto grid = linspace(1.0, 1.0 + (n - 1) * a.kappa_step, n);
        auto fronts = tradeoff_curve(sc, a.cfg, a.taus, grid);
        json s = json::array();
        for (const auto& f : fronts) {
            std::string name = "tradeoff_tau" + num(f.tau_PF) + ".csv";
            write_points(r, name, f.pareto);
            s.push_back({{"tau_PF", f.tau_PF}, {"kappa_hi", f.kappa_hi}, {"points", f.pareto.size()}, {"file", name}});
        }
        r.write_text("tradeoff_summary.json", s.dump(2));
        r.out << s.dump(2) << '\n';
        return;
    }
    if (a.taus.size() != 1) throw ConfigError("several --tau-PF values need --tradeoff");
    a.cfg.tau_PF = a.taus[0];
    auto res = optimize(sc, a.cfg);
    r.write_text("optimize_result.json", res.to_json());
    write_points(r, "optimize_trace.csv", res.trace);
    r.out << res.to_json() << '\n';
}

// ---- simulate

struct SimulateArgs {
    std::string scenario;
    double kappa = 1.1;
    double samples = 1e6;
    std::uint64_t seed = 1;
    int threads = 0;
    int points = 400;
    std::vector<double> taus;
};

void cmd_simulate(Run& r, const SimulateArgs& a) {
    ScenarioConfig sc = load_scenario(a.scenario);
    r.scenario = a.scenario;
    r.seed = a.seed;
    long n = std::lround(a.samples);
    if (n >= 10000000) r.err << "warning: " << n << " samples; expect minutes of runtime and several GB of memory\n";
    McOptions opt;
    opt.threads = a.threads;
    opt.grid_points = a.points;
    opt.excess_taus = a.taus;
    auto rep = mc_closed_loop(sc, a.kappa, n, a.seed, opt);
    for (const auto& [name, c] : rep.curves) write_curve_csv(c, r.path("mc_" + name + ".csv"));
    r.write_text("mc_summary.json", rep.summary_json(false));
    r.out << rep.summary_json(true) << '\n';
}

// ---- replay

int cmd_replay(Run& r, const std::string& manifest, std::string out_dir) {
    std::ifstream in(manifest);
    if (!in) throw ConfigError("cannot read manifest " + manifest);
    json m = json::parse(in);
    std::vector<std::string> args = m.at("argv").get<std::vector<std::string>>();
    if (out_dir.empty()) out_dir = (fs::path(manifest).parent_path() / "replay").string();

    std::vector<std::string> fixed;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out") {
            ++i;
            continue;
        }
        if (args[i].rfind("--out=", 0) == 0) continue;
        fixed.push_back(args[i]);
    }
    fixed.push_back("--out");
    fixed.push_back(out_dir);
    std::ostringstream sink;
    int code = run(fixed, sink, r.err);
    if (code != ok) return code;

    int mismatches = 0;
    for (const auto& o : m.at("outputs")) {
        std::string file = o.at("file");
        std::string p = (fs::path(out_dir) / file).string();
        bool same = fs::exists(p) && file_digest(p) == o.at("fnv1a").get<std::string>();
        r.out << (same ? "same    " : "DIFFERS ") << file << '\n';
        if (!same) ++mismatches;
    }
    return mismatches == 0 ? ok : failure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"closed-loop latency analysis and power/compression optimization"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    Run r{out, err, args, "", "", ".", 0, {}, {}};

    CdfArgs ca;
    auto* cdf = app.add_subcommand("cdf", "analytic CDF curves");
    cdf->add_option("--scenario", ca.scenario, "preset name or JSON file")->required();
    cdf->add_option("--kappa", ca.kappas, "compression ratios")->delimiter(',');
    cdf->add_option("--method", ca.methods, "theorem1, lemma3, theorem2")->delimiter(',');
    cdf->add_option("--quantity", ca.quantities, "CL, ET, FL, T1, T")->delimiter(',');
    cdf->add_option("--delta", ca.delta, "PMF truncation threshold");
    cdf->add_option("--points", ca.points);
    cdf->add_option("--x-min", ca.x_min);
    cdf->add_option("--x-max", ca.x_max, "default: 0.9999 quantile of T");
    cdf->add_option("--out", r.out_dir);

    CompareArgs cm;
    auto* cmp = app.add_subcommand("compare", "error tables against a reference");
    auto* preset_opt = cmp->add_option("--preset", cm.preset, "fig3");
    auto* scen_opt = cmp->add_option("--scenario", cm.scenario);
    preset_opt->excludes(scen_opt);
    cmp->add_option("--reference", cm.reference, "exact or montecarlo");
    cmp->add_option("--method", cm.methods)->delimiter(',');
    cmp->add_option("--quantity", cm.quantities, "CL, ET, FL, T1, T or excess")->delimiter(',');
    cmp->add_option("--kappa", cm.kappa);
    cmp->add_option("--samples", cm.samples);
    cmp->add_option("--seed", cm.seed);
    cmp->add_option("--threads", cm.threads);
    cmp->add_option("--delta", cm.delta);
    cmp->add_option("--delta1", cm.delta1, "truncated convolution step");
    cmp->add_option("--lambda1", cm.lambda1, "truncated convolution range");
    cmp->add_option("--taus", cm.taus, "tau_PF grid for excess")->delimiter(',');
    cmp->add_option("--out", r.out_dir);

    OptimizeArgs oa;
    auto* opt = app.add_subcommand("optimize", "compression ratio and power optimization");
    opt->add_option("--scenario", oa.scenario);
    opt->add_option("--epsilon", oa.cfg.weight, "tail weight in [0,1]");
    auto* tth = opt->add_option("--T-th", oa.cfg.T_th, "latency threshold (s); 0.35 with --tradeoff");
    opt->add_option("--tau-PF", oa.taus, "PF deadline(s)")->delimiter(',');
    opt->add_option("--eta-ts", oa.cfg.eta_ts);
    opt->add_option("--rho-ts", oa.cfg.rho_ts);
    opt->add_option("--P-max", oa.cfg.P_max, "normalizing power; default is the ratio-1 total");
    opt->add_option("--kappa-max", oa.cfg.kappa_max);
    opt->add_option("--delta", oa.cfg.delta);
    opt->add_option("--search", oa.search, "ternary, grid, gd");
    opt->add_option("--granularity", oa.cfg.search.granularity);
    opt->add_option("--restarts", oa.cfg.search.restarts);
    opt->add_option("--step", oa.cfg.search.step);
    opt->add_option("--clip", oa.cfg.search.clip);
    opt->add_option("--seed", oa.cfg.search.seed);
    opt->add_flag("--tradeoff", oa.tradeoff, "sweep kappa for each tau_PF");
    opt->add_option("--kappa-step", oa.kappa_step, "tradeoff sweep step");
    opt->add_option("--out", r.out_dir);

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo of the loop");
    sim->add_option("--scenario", sa.scenario)->required();
    sim->add_option("--kappa", sa.kappa);
    sim->add_option("--samples", sa.samples, "accepts 1e6 notation");
    sim->add_option("--seed", sa.seed);
    sim->add_option("--threads", sa.threads);
    sim->add_option("--points", sa.points);
    sim->add_option("--taus", sa.taus, "mean-excess thresholds")->delimiter(',');
    sim->add_option("--out", r.out_dir);

    std::string manifest, replay_out;
    auto* rep = app.add_subcommand("replay", "re-run a manifest and compare outputs");
    rep->add_option("--manifest", manifest)->required();
    rep->add_option("--out", replay_out);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (rep->parsed()) return cmd_replay(r, manifest, replay_out);
        CLI::App* sub = app.get_subcommands().front();
        r.command = sub->get_name();
        collect_params(sub, r);
        if (cdf->parsed()) cmd_cdf(r, ca);
        if (cmp->parsed()) {
            if (cm.preset.empty() && cm.scenario.empty()) throw ConfigError("compare needs --preset or --scenario");
            if (!cm.preset.empty() && cm.preset != "fig3")
                throw ConfigError("unknown compare preset '" + cm.preset + "' (fig3)");
            if (!cm.preset.empty()) compare_fig3(r, cm);
            else compare_mc(r, cm);
        }
        if (opt->parsed()) {
            oa.T_th_given = tth->count() > 0;
            cmd_optimize(r, oa);
        }
        if (sim->parsed()) cmd_simulate(r, sa);
        r.write_manifest();
        return ok;
    } catch (const InfeasibleError& e) {
        err << "infeasible (" << e.binding << "): " << e.what() << '\n';
        return infeasible;
    } catch (const NonConvergenceError& e) {
        err << "no convergence: " << e.what() << '\n';
        return nonconvergence;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const UnsupportedError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return failure;
    }
}

int run_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace cgc::cli
