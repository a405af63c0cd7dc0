#pragma once

#include "cgc/distributions.hpp"

namespace cgc {

struct SaddlepointSolution {
    double x = 0;
    double s_star = 0;
    double residual = 0;  // |K'(s*) - x|
    double v = 0;         // signed root of 2(x s* - K(s*))
    double u = 0;         // s* sqrt(K''(s*))
    CgfValue cgf;         // K and derivatives at s*
};

struct SolverOptions {
    double tol_rel = 1e-10;
    double tol_abs = 1e-300;
    double lower_limit = -1e9;
    int max_iter = 2000;
};

// Width of the mean branch of the CDF formula.
inline constexpr double mean_branch_rel = 1e-8;
inline constexpr double mean_branch_v = 1e-5;

SaddlepointSolution solve_saddlepoint(const CgfModel& model, double x, const SolverOptions& opt = {});

bool near_mean(const CgfModel& model, double x, double v);
double mean_branch_cdf(const CgfModel& model);

// Lugannani-Rice tail formulas. The raw form is not clamped.
double spa_cdf_unclamped(const CgfModel& model, double x);

// Both tails from one solve; each computed directly so small values keep precision.
struct TailPair {
    double cdf = 0;
    double sf = 1;
};
TailPair spa_tails(const CgfModel& model, double x);
double spa_cdf(const CgfModel& model, double x);
double spa_sf(const CgfModel& model, double x);
double spa_pdf(const CgfModel& model, double x);

// Mass at k attempts for a lattice-only model; all terms must share a spacing.
double spa_pmf(const CgfModel& model, long k);
long lattice_base(const CgfModel& model);
double lattice_spacing(const CgfModel& model);

double std_normal_cdf(double z);
double std_normal_pdf(double z);

}  // namespace cgc
