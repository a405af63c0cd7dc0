#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cgc/latency.hpp"

namespace cgc {

class EmpiricalDistribution {
public:
    EmpiricalDistribution() = default;
    explicit EmpiricalDistribution(std::vector<double> samples);

    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted() const { return sorted_; }
    double cdf(double x) const;  // fraction of samples <= x
    double std_error(double x) const;
    double quantile(double p) const;
    double mean() const;

    struct Excess {
        double mean = 0;
        double std_error = 0;
    };
    Excess mean_excess(double tau) const;

private:
    std::vector<double> sorted_;
};

struct McOptions {
    int shards = 16;
    int threads = 0;  // 0: hardware concurrency
    int grid_points = 400;
    std::vector<double> grid;  // overrides the default [0, q_0.9999(T)] grid
    std::vector<double> excess_taus;
};

struct McReport {
    long samples = 0;
    std::uint64_t seed = 0;
    double kappa = 0;
    std::string scenario;
    std::vector<double> grid;
    std::map<std::string, LatencyCurve> curves;            // T_CL, T_ET, T_FL, T1, T
    std::map<std::string, EmpiricalDistribution> draws;    // same keys
    std::map<double, EmpiricalDistribution::Excess> excess_estimates;
    double runtime = 0;

    std::string summary_json(bool with_runtime = true) const;
};

McReport mc_closed_loop(const ScenarioConfig& sc, double kappa, long samples, std::uint64_t seed,
                        const McOptions& opt = {});

enum class Discretization { CellMass, DensitySample };

struct TruncConvOptions {
    Discretization mode = Discretization::CellMass;
    double budget = 1e11;  // multiply-adds
};

// CDF of a gamma sum by discretizing each density on a delta1 grid up to lambda1.
LatencyCurve truncated_convolution_cdf(const std::vector<GammaTerm>& terms, double delta1, double lambda1,
                                       const TruncConvOptions& opt = {});
// Value of a grid curve at x (left-closed cells).
double step_value(const LatencyCurve& c, double x);

PmfTable exact_lattice_convolution(const std::vector<LatticeTerm>& terms);

}  // namespace cgc
