#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cgc/latency.hpp"

namespace cgc {

enum class SearchKind { Ternary, Grid, GradientDescent };
const char* search_name(SearchKind k);
SearchKind search_from_name(const std::string& s);

struct SearchConfig {
    SearchKind kind = SearchKind::Ternary;
    double granularity = 1e-4;  // grid step, also the ternary fallback grid
    double tol = 1e-6;          // ternary final width
    double step = 0.05;         // gradient descent initial step
    double clip = 1e6;
    int restarts = 5;
    std::uint64_t seed = 1;
    int prescan = 20;
};

struct VertexConfig {
    int vertex = 8;
    double rho_CL = std::numeric_limits<double>::infinity();   // bound on E{T_CL}
    double rho_FLs = std::numeric_limits<double>::infinity();  // bound on E{(T_ET - tau_PF)+}
    double tau_CL = 0.05;
    double eta_CL = 0.99;
    double eta_ts = 0.5;
    double rho_ts = 0.02;
};

struct OptimizationConfig {
    double weight = 0.5;
    double T_th = 0.3;
    double tau_PF = 0.25;
    double eta_ts = 0.5;
    double rho_ts = 0.02;
    double P_max = 0.0;  // <= 0: PF power at tau_PF plus CD power at ratio 1
    double kappa_min = 1.0;
    double kappa_max = 0.0;  // <= 0: the compression model's kappa_max
    double delta = 1e-5;
    SearchConfig search;

    void validate() const;
};

struct TracePoint {
    double kappa = 0;
    double objective = 0;
    double P_total = 0;
    double tail_prob = 0;
};

struct OptResult {
    double kappa_star = 0;
    double P_PF1 = 0, P_PF2 = 0, P_CD = 0;
    double objective = 0;
    double tail_prob = 0;
    std::map<std::string, double> constraint_slacks;
    std::vector<TracePoint> trace;
    std::string method;
    double kappa_lo = 1, kappa_hi = 1;
    std::string binding_bound;  // which upper bound set kappa_hi
    bool boundary = false;
    bool fell_back_to_grid = false;

    std::string to_json() const;
};

std::pair<double, double> allocate_pf_deadlines(double phi1, double phi2, double tau_PF);
double pf_power_pair(double phi1, double phi2, double tau_PF, const CapacityConstants& cc = {});
double pf_power_total(const ScenarioConfig& sc, double tau_PF);
double cd_power(const ScenarioConfig& sc, double kappa);
double cd_power_slope(const ScenarioConfig& sc, double kappa);

double kappa_upper_variance(const ScenarioConfig& sc, double rho_ts);
double kappa_upper_tail(const ScenarioConfig& sc, double eta_ts, double tau_PF, double delta = 1e-5);

double resolved_P_max(const ScenarioConfig& sc, const OptimizationConfig& cfg);
TracePoint evaluate_objective(const ScenarioConfig& sc, const OptimizationConfig& cfg, double kappa);
double objective(const ScenarioConfig& sc, const OptimizationConfig& cfg, double kappa);
double objective_slope(const ScenarioConfig& sc, const OptimizationConfig& cfg, double kappa);

OptResult optimize(const ScenarioConfig& sc, const OptimizationConfig& cfg);

struct Frontier {
    double tau_PF = 0;
    double kappa_hi = 0;
    std::vector<TracePoint> sweep;
    std::vector<TracePoint> pareto;  // increasing power, decreasing tail
};

std::vector<Frontier> tradeoff_curve(const ScenarioConfig& sc, const OptimizationConfig& cfg,
                                     const std::vector<double>& tau_list, const std::vector<double>& kappa_grid);
// Power needed on frontier f to reach the given tail level (linear in between); nan outside its range.
double frontier_power_at(const Frontier& f, double tail);

struct SlackReport {
    int vertex = 8;
    std::map<std::string, double> slacks;  // >= 0 means satisfied
    double var_CL = 0;                     // smallest t with P{T_CL < t} >= eta_CL
    bool feasible = true;
};

SlackReport evaluate_vertex_constraints(const ScenarioConfig& sc, double kappa, const VertexConfig& vc,
                                        double delta = 1e-5);

}  // namespace cgc
