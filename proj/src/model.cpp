#include "cgc/model.hpp"

#include <cmath>
#include <string>

#include "cgc/errors.hpp"

namespace cgc {

LinkRate outage_rate(const LinkConfig& link) {
    LinkRate r;
    if (!(link.outage_prob >= 0 && link.outage_prob < 1)) throw DomainError("outage_prob must be in [0,1)");
    double snr = link.gain() * link.power / (link.noise_psd * link.bandwidth);
    r.rate = link.bandwidth * std::log2(1.0 - snr * std::log1p(-link.outage_prob));
    r.degenerate = link.outage_prob == 0.0;
    r.packet_time = r.rate > 0 ? link.packet_bits / r.rate : std::numeric_limits<double>::infinity();
    return r;
}

double deadline_capacity(const LinkConfig& link, double tau, const CapacityConstants& cc) {
    if (!(tau > 0)) throw DomainError("deadline must be positive");
    double snr = cc.c1 * link.gain() * link.power / (link.noise_psd * link.bandwidth * (cc.c2 + std::pow(tau, -cc.c3)));
    return link.bandwidth * std::log2(1.0 + snr);
}

double pf_phi(const LinkConfig& link, double T_s, double n_PF, const CapacityConstants& cc) {
    double need = link.noise_psd * link.bandwidth / (cc.c1 * link.gain()) * (std::exp2(n_PF / (T_s * link.bandwidth)) - 1.0);
    return std::pow(need, -1.0 / (cc.c3 + 1.0));
}

double pf_power_for_deadline(const LinkConfig& link, double tau, double T_s, double n_PF,
                             const CapacityConstants& cc) {
    if (!(tau > 0)) throw DomainError("deadline must be positive");
    double phi = pf_phi(link, T_s, n_PF, cc);
    return std::pow(phi, -cc.c3 - 1.0) * (cc.c2 + std::pow(tau, -cc.c3));
}

double pf_power_inverted(const LinkConfig& link, double tau, double T_s, double n_PF, const CapacityConstants& cc) {
    if (!(tau > 0)) throw DomainError("deadline must be positive");
    double rate = n_PF / T_s;
    return std::expm1(std::log(2.0) * rate / link.bandwidth) * link.noise_psd * link.bandwidth *
           (cc.c2 + std::pow(tau, -cc.c3)) / (cc.c1 * link.gain());
}

namespace {
void check_ratio(const CompressionModel& m, double kappa) {
    if (!(kappa >= 1.0 && kappa <= m.kappa_max))
        throw DomainError("compression ratio " + std::to_string(kappa) + " outside [1, kappa_max]");
}
}  // namespace

double zeta_c(const CompressionModel& m, double kappa) {
    check_ratio(m, kappa);
    if (m.kind == CompressionKind::Exp) return std::exp(m.psi * kappa) - std::exp(m.psi);
    return m.omega(1) * (m.omega(2) * std::pow(kappa, m.omega(3)) + m.omega(4));
}

double zeta_d(const CompressionModel& m, double kappa) {
    check_ratio(m, kappa);
    if (m.kind == CompressionKind::Exp) return m.omega0 * (std::exp(m.psi * kappa) - std::exp(m.psi));
    return m.omega(5) * (m.omega(6) * std::pow(kappa, m.omega(7)) + m.omega(8));
}

double zeta_c_slope(const CompressionModel& m, double kappa) {
    check_ratio(m, kappa);
    if (m.kind == CompressionKind::Exp) return m.psi * std::exp(m.psi * kappa);
    return m.omega(1) * m.omega(2) * m.omega(3) * std::pow(kappa, m.omega(3) - 1.0);
}

double zeta_d_slope(const CompressionModel& m, double kappa) {
    check_ratio(m, kappa);
    if (m.kind == CompressionKind::Exp) return m.omega0 * m.psi * std::exp(m.psi * kappa);
    return m.omega(5) * m.omega(6) * m.omega(7) * std::pow(kappa, m.omega(7) - 1.0);
}

void check_kappa(const ScenarioConfig& sc, double kappa) { check_ratio(sc.compression, kappa); }

int cd_packets(const ScenarioConfig& sc, double kappa) {
    check_kappa(sc, kappa);
    if (sc.cd_reference_kappa <= 0) return sc.N_CD_at_kappa1;
    double n = sc.cd_reference_kappa / kappa * sc.link(LinkId::CD).packets;
    return std::max(1, int(std::ceil(n * (1.0 - 1e-9))));
}

double cd_bits_at_kappa1(const ScenarioConfig& sc) { return sc.compute.et_bits / sc.N_CD_at_kappa1; }

GammaTerm ll_compute_term(const ScenarioConfig& sc) {
    const auto& c = sc.compute;
    return {c.mec_shape, c.mec_freq * c.rate_LL / c.hl_total_bits};
}

ContinuousCgf build_continuous_cgf(const ScenarioConfig& sc, double kappa, CgfKind kind) {
    if (kind == CgfKind::CL) throw ConfigError("continuous model exists for ET and Loop only");
    check_kappa(sc, kappa);
    const auto& c = sc.compute;
    const auto& m = sc.compression;
    const double n = c.et_bits;
    double zc = zeta_c(m, kappa), zd = zeta_d(m, kappa);

    ContinuousCgf out;
    // compression at the robot arm, decompression at the edge server (both vanish when zeta is 0)
    if (zc > 0) {
        double rate = c.ra_freq * c.ra_shape / (n * zc);
        out.model.gamma_terms.push_back({c.ra_shape, rate});
        out.rate_slopes.push_back(-rate * zeta_c_slope(m, kappa) / zc);
    }
    if (zd > 0) {
        double rate = c.mec_freq * c.mec_shape * kappa / (n * zd);
        out.model.gamma_terms.push_back({c.mec_shape, rate});
        out.rate_slopes.push_back(rate * (1.0 / kappa - zeta_d_slope(m, kappa) / zd));
    }
    out.model.gamma_terms.push_back({c.mec_shape, c.mec_freq * c.rate_VI / n});
    out.rate_slopes.push_back(0.0);

    double a = c.mec_shape;
    double cv = c.mec_freq * c.rate_VI;
    out.theta = n * a / cv + n * zc / c.ra_freq + n * zd / (c.mec_freq * kappa);
    double var = n * n * zc * zc / (c.ra_freq * c.ra_freq * c.ra_shape) +
                 n * n * zd * zd / (c.mec_freq * c.mec_freq * kappa * kappa * a) + n * n * a / (cv * cv);
    out.iota1 = std::pow(var, 1.5);
    out.iota2 = 2 * n * n * n * zc * zc * zc / (std::pow(c.ra_freq, 3) * c.ra_shape * c.ra_shape) +
                2 * n * n * n * zd * zd * zd / (std::pow(kappa * c.mec_freq, 3) * a * a) +
                2 * a * n * n * n / std::pow(cv, 3);

    if (kind == CgfKind::Loop) {
        out.model.gamma_terms.push_back(ll_compute_term(sc));
        out.rate_slopes.push_back(0.0);
        double nh = c.hl_total_bits, cl = c.mec_freq * c.rate_LL;
        out.theta += nh * a / cl;
        out.iota1 = std::pow(std::pow(out.iota1, 2.0 / 3.0) + nh * nh * a / (cl * cl), 1.5);
        out.iota2 += 2 * a * nh * nh * nh / std::pow(cl, 3);
    }
    return out;
}

namespace {
struct LinkUse {
    LinkId id;
    int packets;
};

std::vector<LinkUse> lattice_links(const ScenarioConfig& sc, double kappa, CgfKind kind) {
    std::vector<LinkUse> v;
    if (kind == CgfKind::CL || kind == CgfKind::Loop) {
        v.push_back({LinkId::HL, sc.link(LinkId::HL).packets});
        v.push_back({LinkId::LL, sc.link(LinkId::LL).packets});
    }
    if (kind == CgfKind::ET || kind == CgfKind::Loop) {
        v.push_back({LinkId::CD, cd_packets(sc, kappa)});
        v.push_back({LinkId::VI, sc.link(LinkId::VI).packets});
    }
    return v;
}
}  // namespace

LatticeCgf build_lattice_cgf(const ScenarioConfig& sc, double kappa, CgfKind kind) {
    LatticeCgf out;
    for (const auto& [id, packets] : lattice_links(sc, kappa, kind)) {
        double eps = sc.link(id).outage_prob;
        LatticeTerm t{packets, eps, sc.t_u};
        out.model.lattice_terms.push_back(t);
        out.base += packets;
        out.vartheta += packets / (1.0 - eps);
        out.variance += eps * packets * sc.t_u * sc.t_u / ((1.0 - eps) * (1.0 - eps));
    }
    out.model.validate();
    return out;
}

CltCgf build_clt_cgf(const ScenarioConfig& sc, double kappa, CgfKind kind) {
    if (kind == CgfKind::CL) throw ConfigError("normal-approximation model exists for ET and Loop only");
    ContinuousCgf cont = build_continuous_cgf(sc, kappa, kind);
    LatticeCgf lat = build_lattice_cgf(sc, kappa, kind);
    CltCgf out;
    out.model = cont.model;
    out.model.gaussian_terms.push_back({lat.vartheta * sc.t_u, lat.variance});
    out.Psi = cont.theta + lat.vartheta * sc.t_u;
    out.Upsilon = std::pow(std::pow(cont.iota1, 2.0 / 3.0) + lat.variance, 1.5);
    out.iota2 = cont.iota2;
    return out;
}

double et_mean(const ScenarioConfig& sc, double kappa) {
    double m = 0;
    for (const auto& g : build_continuous_cgf(sc, kappa, CgfKind::ET).model.gamma_terms) m += g.shape / g.rate;
    for (const auto& l : build_lattice_cgf(sc, kappa, CgfKind::ET).model.lattice_terms)
        m += l.spacing * negbin_mean(l);
    return m;
}

double et_variance(const ScenarioConfig& sc, double kappa) {
    double v = 0;
    for (const auto& g : build_continuous_cgf(sc, kappa, CgfKind::ET).model.gamma_terms)
        v += g.shape / (g.rate * g.rate);
    for (const auto& l : build_lattice_cgf(sc, kappa, CgfKind::ET).model.lattice_terms)
        v += l.spacing * l.spacing * negbin_variance(l);
    return v;
}

double et_variance_floor(const ScenarioConfig& sc, double kappa) {
    const auto& c = sc.compute;
    double rate = c.mec_freq * c.rate_VI / c.et_bits;
    return c.mec_shape / (rate * rate) + build_lattice_cgf(sc, kappa, CgfKind::ET).variance;
}

double cl_mean(const ScenarioConfig& sc) {
    GammaTerm g = ll_compute_term(sc);
    double m = g.shape / g.rate;
    for (const auto& l : build_lattice_cgf(sc, 1.0, CgfKind::CL).model.lattice_terms)
        m += l.spacing * negbin_mean(l);
    return m;
}

bool clt_regime_ok(const ScenarioConfig& sc, double kappa) {
    LatticeCgf lat = build_lattice_cgf(sc, kappa, CgfKind::ET);
    ContinuousCgf cont = build_continuous_cgf(sc, kappa, CgfKind::ET);
    double sd = std::pow(cont.iota1, 1.0 / 3.0);
    return lat.base >= 30 || sc.t_u <= 0.5 * sd;
}

}  // namespace cgc
