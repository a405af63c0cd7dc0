#include "cgc/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cgc/errors.hpp"

namespace cgc {

using nlohmann::json;

namespace {

const std::array<LinkId, 6> all_links{LinkId::HL, LinkId::LL, LinkId::PF1, LinkId::PF2, LinkId::CD, LinkId::VI};

LinkConfig make_link(double eps, int packets, double bits, double bandwidth) {
    LinkConfig l;
    l.bandwidth = bandwidth;
    l.noise_psd = 1.0 / bandwidth;  // N0 B / d^-l = 1 with unit distance
    l.power = 1.0;
    l.distance = 1.0;
    l.path_loss_exp = 3.0;
    l.outage_prob = eps;
    l.packets = packets;
    l.packet_bits = bits;
    return l;
}

ScenarioConfig base_scenario() {
    ScenarioConfig sc;
    const double hl_bits = 1048576.0;  // 128 KB
    sc.links[LinkId::HL] = make_link(1e-5, 3, hl_bits, 1e6);
    sc.links[LinkId::LL] = make_link(1e-5, 1, hl_bits, 1e6);
    sc.links[LinkId::PF1] = make_link(0.0, 1, 1000.0, 1e6);
    sc.links[LinkId::PF2] = make_link(0.0, 1, 1000.0, 1e6);
    sc.links[LinkId::CD] = make_link(1e-3, 20, 8388608.0 / 20, 1e3);
    sc.links[LinkId::VI] = make_link(1e-4, 3, 8388608.0 / 3, 1e6);
    sc.compute.hl_total_bits = 3 * hl_bits;
    sc.t_u = 5e-3;
    sc.T_s = 1e-3;
    sc.n_PF = 1000.0;
    return sc;
}

ScenarioConfig figure_scenario(const std::string& name, double t_u, int n_cd, int n_vi, double eps_cd,
                               double eps_vi, double tau) {
    ScenarioConfig sc = base_scenario();
    sc.preset_name = name;
    sc.t_u = t_u;
    sc.links[LinkId::CD].packets = n_cd;
    sc.links[LinkId::CD].outage_prob = eps_cd;
    sc.links[LinkId::CD].packet_bits = sc.compute.et_bits / (1.1 * n_cd);
    sc.links[LinkId::VI].packets = n_vi;
    sc.links[LinkId::VI].outage_prob = eps_vi;
    sc.links[LinkId::VI].packet_bits = sc.compute.et_bits / n_vi;
    sc.cd_reference_kappa = 1.1;
    sc.N_CD_at_kappa1 = int(std::ceil(1.1 * n_cd - 1e-9));
    sc.tau_PF = tau;
    return sc;
}

const char* kind_name(CompressionKind k) { return k == CompressionKind::Exp ? "Exp" : "Power"; }

}  // namespace

const char* link_name(LinkId id) {
    switch (id) {
        case LinkId::HL: return "HL";
        case LinkId::LL: return "LL";
        case LinkId::PF1: return "PF1";
        case LinkId::PF2: return "PF2";
        case LinkId::CD: return "CD";
        case LinkId::VI: return "VI";
    }
    return "?";
}

LinkId link_from_name(const std::string& name) {
    for (auto id : all_links)
        if (name == link_name(id)) return id;
    throw ConfigError("unknown link id '" + name + "'");
}

double LinkConfig::gain() const { return std::pow(distance, -path_loss_exp); }

const LinkConfig& ScenarioConfig::link(LinkId id) const {
    auto it = links.find(id);
    if (it == links.end()) throw ConfigError(std::string("scenario has no link ") + link_name(id));
    return it->second;
}

void ScenarioConfig::validate() const {
    for (auto id : all_links) {
        const auto& l = link(id);
        if (!(l.bandwidth > 0 && l.power > 0 && l.distance > 0 && l.path_loss_exp > 0 && l.noise_psd > 0 &&
              l.packet_bits > 0))
            throw ConfigError(std::string("link ") + link_name(id) + " needs positive physical parameters");
        if (!(l.outage_prob >= 0 && l.outage_prob < 1))
            throw ConfigError(std::string("link ") + link_name(id) + " outage_prob must be in [0,1)");
        if (l.packets < 1) throw ConfigError(std::string("link ") + link_name(id) + " needs packets >= 1");
    }
    const auto& c = compute;
    if (!(c.mec_shape > 0 && c.ra_shape > 0 && c.rate_LL > 0 && c.rate_VI > 0 && c.mec_freq > 0 && c.ra_freq > 0 &&
          c.hl_total_bits > 0 && c.et_bits > 0))
        throw ConfigError("compute parameters must be positive");
    const auto& m = compression;
    if (!(m.psi > 0)) throw ConfigError("psi must be positive");
    if (!(m.omega0 > 0 && m.omega0 < 1)) throw ConfigError("omega0 must be in (0,1)");
    for (int i = 1; i <= 8; ++i)
        if (i != 7 && !(m.omega(i) > 0)) throw ConfigError("omega" + std::to_string(i) + " must be positive");
    if (!(m.kappa_max > 1)) throw ConfigError("kappa_max must exceed 1");
    if (!(t_u > 0 && T_s > 0 && tau_PF >= 0 && n_PF > 0)) throw ConfigError("timing parameters must be positive");
    if (N_CD_at_kappa1 < 1) throw ConfigError("N_CD_at_kappa1 must be >= 1");
    if (cd_reference_kappa < 0) throw ConfigError("cd_reference_kappa must be >= 0");
}

std::vector<std::string> preset_names() { return {"fig4", "fig5", "fig6", "fig7", "opt-default"}; }

ScenarioConfig preset(const std::string& name) {
    if (name == "fig4") return figure_scenario(name, 5e-3, 20, 3, 1e-3, 1e-4, 0.15);
    if (name == "fig5") return figure_scenario(name, 5e-3, 50, 3, 1e-3, 1e-4, 0.30);
    if (name == "fig6") return figure_scenario(name, 5e-3, 5, 1, 0.1, 1e-3, 0.06);
    if (name == "fig7") return figure_scenario(name, 0.1, 5, 1, 0.1, 1e-3, 0.70);
    if (name == "opt-default") {
        ScenarioConfig sc = base_scenario();
        sc.preset_name = name;
        sc.tau_PF = 0.25;
        sc.N_CD_at_kappa1 = 20;
        sc.cd_reference_kappa = 0.0;
        return sc;
    }
    throw ConfigError("unknown preset '" + name + "'");
}

std::string scenario_to_json(const ScenarioConfig& sc) {
    json j;
    for (const auto& [id, l] : sc.links) {
        j["links"][link_name(id)] = {{"bandwidth", l.bandwidth},     {"power", l.power},
                                     {"distance", l.distance},       {"path_loss_exp", l.path_loss_exp},
                                     {"noise_psd", l.noise_psd},     {"outage_prob", l.outage_prob},
                                     {"packets", l.packets},         {"packet_bits", l.packet_bits}};
    }
    const auto& c = sc.compute;
    j["compute"] = {{"mec_shape", c.mec_shape}, {"ra_shape", c.ra_shape}, {"rate_LL", c.rate_LL},
                    {"rate_VI", c.rate_VI},     {"mec_freq", c.mec_freq}, {"ra_freq", c.ra_freq},
                    {"hl_total_bits", c.hl_total_bits}, {"et_bits", c.et_bits}};
    const auto& m = sc.compression;
    j["compression"] = {{"kind", kind_name(m.kind)}, {"psi", m.psi}, {"omega0", m.omega0},
                        {"omegas", m.omegas},        {"kappa_max", m.kappa_max}};
    j["capacity"] = {{"c1", sc.capacity.c1}, {"c2", sc.capacity.c2}, {"c3", sc.capacity.c3}};
    j["t_u"] = sc.t_u;
    j["T_s"] = sc.T_s;
    j["tau_PF"] = sc.tau_PF;
    j["n_PF"] = sc.n_PF;
    j["N_CD_at_kappa1"] = sc.N_CD_at_kappa1;
    j["cd_reference_kappa"] = sc.cd_reference_kappa;
    j["corrected_cd_rate"] = sc.corrected_cd_rate;
    j["preset_name"] = sc.preset_name;
    return j.dump(2);
}

namespace {
template <class T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario file is not valid JSON: ") + e.what());
    }
    // Missing fields fall back to the opt-default values.
    ScenarioConfig sc = preset("opt-default");
    sc.preset_name = "custom";
    try {
        if (j.contains("links")) {
            for (auto it = j["links"].begin(); it != j["links"].end(); ++it) {
                LinkConfig& l = sc.links[link_from_name(it.key())];
                const json& v = it.value();
                take(v, "bandwidth", l.bandwidth);
                take(v, "power", l.power);
                take(v, "distance", l.distance);
                take(v, "path_loss_exp", l.path_loss_exp);
                take(v, "noise_psd", l.noise_psd);
                take(v, "outage_prob", l.outage_prob);
                take(v, "packets", l.packets);
                take(v, "packet_bits", l.packet_bits);
            }
        }
        if (j.contains("compute")) {
            const json& v = j["compute"];
            auto& c = sc.compute;
            take(v, "mec_shape", c.mec_shape);
            take(v, "ra_shape", c.ra_shape);
            take(v, "rate_LL", c.rate_LL);
            take(v, "rate_VI", c.rate_VI);
            take(v, "mec_freq", c.mec_freq);
            take(v, "ra_freq", c.ra_freq);
            take(v, "hl_total_bits", c.hl_total_bits);
            take(v, "et_bits", c.et_bits);
        }
        if (j.contains("compression")) {
            const json& v = j["compression"];
            auto& m = sc.compression;
            if (v.contains("kind")) {
                std::string k = v["kind"].get<std::string>();
                if (k == "Exp") m.kind = CompressionKind::Exp;
                else if (k == "Power") m.kind = CompressionKind::Power;
                else throw ConfigError("compression kind must be Exp or Power");
            }
            take(v, "psi", m.psi);
            take(v, "omega0", m.omega0);
            take(v, "omegas", m.omegas);
            take(v, "kappa_max", m.kappa_max);
        }
        if (j.contains("capacity")) {
            take(j["capacity"], "c1", sc.capacity.c1);
            take(j["capacity"], "c2", sc.capacity.c2);
            take(j["capacity"], "c3", sc.capacity.c3);
        }
        take(j, "t_u", sc.t_u);
        take(j, "T_s", sc.T_s);
        take(j, "tau_PF", sc.tau_PF);
        take(j, "n_PF", sc.n_PF);
        take(j, "N_CD_at_kappa1", sc.N_CD_at_kappa1);
        take(j, "cd_reference_kappa", sc.cd_reference_kappa);
        take(j, "corrected_cd_rate", sc.corrected_cd_rate);
        take(j, "preset_name", sc.preset_name);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad scenario field: ") + e.what());
    }
    sc.validate();
    return sc;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

void save_scenario_file(const ScenarioConfig& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << scenario_to_json(sc) << "\n";
}

ScenarioConfig load_scenario(const std::string& name) {
    namespace fs = std::filesystem;
    if (const char* env = std::getenv("CGC_SCENARIO_PATH")) {
        std::stringstream dirs(env);
        std::string dir;
        while (std::getline(dirs, dir, ':')) {
            if (dir.empty()) continue;
            fs::path p = fs::path(dir) / (name + ".json");
            if (fs::exists(p)) return load_scenario_file(p.string());
        }
    }
    if (fs::exists(name) && fs::is_regular_file(name)) return load_scenario_file(name);
    return preset(name);
}

}  // namespace cgc
