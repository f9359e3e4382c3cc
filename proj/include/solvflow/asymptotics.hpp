#pragma once

#include "solvflow/construct.hpp"
#include "solvflow/core.hpp"
#include "solvflow/integrate.hpp"

#include <string>
#include <vector>

namespace solvflow {

/// Coordinates near the degenerate point (0, 0, z0, v = 0) at the forward end.
struct CentreVars {
    double s = 0.0;
    double tau = 0.0;   // d tau = w ds
    double v = 0.0;     // 1 / w
    double xi1 = 0.0;   // z - z0
    double xi2 = 0.0;   // v
    double eta1 = 0.0;  // x - a v
    double eta2 = 0.0;  // y - b v
    double a = 0.0;     // z0 / n - lambda
    double b = 0.0;     // z0 / s0
    double z0 = 0.0;
};

struct RateFit {
    std::string quantity;
    double predicted_limit = 0.0;  // NaN when the limit is trajectory-dependent
    double s_lo = 0.0;
    double s_hi = 0.0;
    double fitted_value = 0.0;
    /// |fitted - predicted| / |predicted|, or |fitted| when the predicted limit is 0.
    double relative_error = 0.0;
};

struct RateReport {
    std::vector<RateFit> fits;
    double alpha = 0.0;  // z ~ -alpha / s^2
    double alpha_early = 0.0;
    double alpha_late = 0.0;
    double alpha_variation = 0.0;  // |early - late| / alpha
    /// (y s^2)(s_end) / (y s^2)(s_end / 5).
    double y_decay_ratio = 0.0;

    const RateFit& fit(const std::string& quantity) const;
};

/// Cumulative integral of w, zero at the sample nearest s = 0.
std::vector<double> tau_time(const Trajectory& t);

std::vector<CentreVars> centre_coords(const Trajectory& t, double z0, const SolvsolitonParams& params);

struct CentreDiagnostics {
    double max_eta_ratio = 0.0;  // max(|eta1|, |eta2|) / xi2 over the last 10%
    double v_tau_ratio = 0.0;    // mean of v sqrt(2 (-lambda) tau) over the last 10%
    double log_eta_slope = 0.0;  // slope of log(max|eta| / xi2) against tau over the last half
};

CentreDiagnostics centre_diagnostics(const std::vector<CentreVars>& cv, const SolvsolitonParams& params);

struct ZLimit {
    double z0 = 0.0;
    double terminal_z = 0.0;
    double gap = 0.0;      // |terminal z - z0|
    double gap_mid = 0.0;  // same at the middle of the forward span
    bool gap_shrinking = false;
};

ZLimit classify_z_limit(const Trajectory& t, const SolvsolitonParams& params);

/// Window-averaged compensated quantities over the last 20% of the forward
/// span; alpha is reported on both 10% halves.
RateReport fit_rates(const Trajectory& t, const SolvsolitonParams& params);

struct ConeReport {
    double target = 0.0;  // |s0| / alpha
    double ratio_early = 0.0;
    double ratio_late = 0.0;
    double variation = 0.0;
};

/// c^2 / s^2 against |s0| / alpha on the last two 10% spans.
ConeReport cone_profile(const MetricProfile& profile, double alpha, const SolvsolitonParams& params);

/// Least-squares slope of log c on s in [s_lo, s_hi].
double log_c_slope(const MetricProfile& profile, double s_lo, double s_hi);

struct SweepRow {
    double theta = 0.0;
    double alpha = 0.0;
    double alpha_variation = 0.0;
    double sup_x = 0.0;
    double sup_y = 0.0;
    double capture_distance = 0.0;
    double z0 = 0.0;
    bool omega_clean = false;
    std::string error;  // empty on success
};

/// Admissible-angle grid with margin 0.05 (theta0 + pi/2) at both ends.
std::vector<double> sweep_grid(double theta0, int count);

/// Shots over the grid, run on up to `threads` threads (0: hardware).
std::vector<SweepRow> sweep_family(const SolvsolitonParams& params, int count,
                                   const ShotConfig& config, unsigned threads = 0);

/// Smallest |a - b| / max(|a|, |b|) over pairs of alphas.
double min_pairwise_relative_gap(const std::vector<double>& values);

}  // namespace solvflow
