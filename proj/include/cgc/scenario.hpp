#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace cgc {

enum class LinkId { HL, LL, PF1, PF2, CD, VI };

const char* link_name(LinkId id);
LinkId link_from_name(const std::string& name);

struct LinkConfig {
    double bandwidth = 1e6;      // Hz
    double power = 1.0;          // W
    double distance = 1.0;       // m
    double path_loss_exp = 3.0;
    double noise_psd = 1e-6;     // W/Hz
    double outage_prob = 0.0;
    int packets = 1;
    double packet_bits = 1.0;

    double gain() const;  // d^-l
};

struct ComputeConfig {
    double mec_shape = 1.25;
    double ra_shape = 1.5;
    double rate_LL = 1.0;
    double rate_VI = 1.0;
    double mec_freq = 15e9;
    double ra_freq = 5e9;
    double hl_total_bits = 3.0 * 1048576.0;
    double et_bits = 8388608.0;
};

enum class CompressionKind { Exp, Power };

struct CompressionModel {
    CompressionKind kind = CompressionKind::Exp;
    double psi = 3.5;
    double omega0 = 0.1;
    std::array<double, 8> omegas{1.0, 10.0, 1.5, 1.0, 0.1, 10.0, 1.5, 1.0};  // omega_1 .. omega_8
    double kappa_max = 2.0;

    double omega(int i) const { return omegas.at(i - 1); }
};

struct CapacityConstants {
    double c1 = 2.8771;
    double c2 = 1.8771;
    double c3 = 3.411;
};

struct ScenarioConfig {
    std::map<LinkId, LinkConfig> links;
    ComputeConfig compute;
    CompressionModel compression;
    CapacityConstants capacity;
    double t_u = 5e-3;
    double T_s = 1e-3;
    double tau_PF = 0.25;
    double n_PF = 1000.0;
    // CD packets when the ratio is 1 (fixes n_CD^(1) = et_bits / N_CD_at_kappa1)
    int N_CD_at_kappa1 = 20;
    // > 0: CD packets scale as ceil(cd_reference_kappa / kappa * links[CD].packets)
    // 0: CD packet count stays at N_CD_at_kappa1 for every kappa
    double cd_reference_kappa = 0.0;
    bool corrected_cd_rate = false;
    std::string preset_name = "custom";

    const LinkConfig& link(LinkId id) const;
    void validate() const;
};

std::vector<std::string> preset_names();
ScenarioConfig preset(const std::string& name);

// Name lookup: CGC_SCENARIO_PATH directories (<name>.json), then a file path, then built-in presets.
ScenarioConfig load_scenario(const std::string& name_or_path);
ScenarioConfig load_scenario_file(const std::string& path);
void save_scenario_file(const ScenarioConfig& sc, const std::string& path);
std::string scenario_to_json(const ScenarioConfig& sc);
ScenarioConfig scenario_from_json(const std::string& text);

}  // namespace cgc
