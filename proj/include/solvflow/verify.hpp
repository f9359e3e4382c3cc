#pragma once

#include "solvflow/core.hpp"
#include "solvflow/integrate.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace solvflow {

enum class CheckStatus { Pass, Fail, Skip };

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Fail;
    std::string detail;
};

struct VerifyOptions {
    double s_forward = 200.0;
    IntegrateOptions opts;
    unsigned seed = 20240607;
};

/// Max over sampled points of |J - J_fd| / max(1, |J|), central differences.
double jacobian_fd_error(const SolvsolitonParams& params, int samples, unsigned seed, double box = 2.0);

/// sup |R gamma(s) - gamma_R(-s)| over s in [0, span], where gamma starts at p0
/// and gamma_R at R p0 is integrated backward.
double reflection_conjugacy_error(const SolvsolitonParams& params, const Eigen::Vector4d& p0, double span);

/// sup distance between the rescaled lambda-curve and the curve integrated at
/// lambda2, at matched times.
double rescaling_error(const SolvsolitonParams& params, double lambda2, const Eigen::Vector4d& p0, double span);

/// Angles used by the Omega checks, restricted to the admissible interval.
std::vector<double> omega_check_angles(double theta0);

std::vector<CheckResult> verify_preset(const Preset& preset, const VerifyOptions& opts = {});

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace solvflow
