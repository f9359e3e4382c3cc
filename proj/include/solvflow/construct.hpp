#pragma once

#include "solvflow/core.hpp"
#include "solvflow/flow.hpp"
#include "solvflow/integrate.hpp"

#include <Eigen/Dense>

#include <vector>

namespace solvflow {

struct ShotConfig {
    double theta = 0.0;
    /// Offset along the launch direction from the stationary point.
    double delta = 1e-6;
    double s_forward = 100.0;
    /// The backward leg runs at least this far, and further if needed to
    /// reach the capture ball.
    double s_backward = -60.0;
    IntegrateOptions opts;
    /// true: launch at s = log(delta)/rate, so that gamma - gamma^S ~ e^{rate s} v
    /// independently of delta. false: launch at s = 0.
    bool canonical_time = true;
};

struct Shot {
    Trajectory trajectory;  // backward leg reversed, then forward leg
    Trajectory forward;
    Trajectory backward;
    Eigen::Vector4d direction = Eigen::Vector4d::Zero();
    PhasePoint launch;
    double s_launch = 0.0;
    bool captured_backward = false;
    double capture_distance = 0.0;  // distance of the backward end from gamma^S
};

struct MetricProfile {
    std::vector<double> s;
    std::vector<double> c;        // c^2 = s0 / z
    std::vector<double> h;        // integral of y, h = 0 at the sample nearest s = 0
    std::vector<double> f_prime;  // w - n x
    std::vector<double> phi;      // empty unless the trajectory emerges from gamma^S
    std::vector<std::vector<double>> L_spectrum;  // x + y (d_i - tr D / n)
};

double launch_time(double delta, double rate, bool canonical);

/// Unchecked shot from gamma^S along a unit vector of the unstable subspace.
Shot shoot_direction(const Eigen::Vector4d& direction, const SolvsolitonParams& params,
                     const ShotConfig& config);

/// Shot at an admissible angle with the invariant-set assertions. Throws
/// OutsideAdmissibleRange, CaptureFailed or PropertyViolated.
Shot shoot_family(const SolvsolitonParams& params, const ShotConfig& config);

bool theta_admissible(double theta, const EigenData& eig);

struct EinsteinShot {
    Trajectory planar;    // (x, y), backward leg reversed, then forward leg
    Trajectory embedded;  // (x, y, z, w) at the same samples, no dense output
    Eigen::Vector2d direction = Eigen::Vector2d::Zero();
    double s_launch = 0.0;
    double capture_distance = 0.0;  // terminal distance from gamma^H restricted to E
    double z_drift = 0.0;
    bool x_monotone = false;
    bool y_monotone = false;
    bool retried = false;
};

/// Heteroclinic connection inside the Einstein set. Throws LeftK or CaptureFailed.
EinsteinShot shoot_einstein(const SolvsolitonParams& params, const ShotConfig& config);

struct NoScalShot {
    Trajectory trajectory;  // (y, w)
    Eigen::Vector2d direction = Eigen::Vector2d::Zero();
    double s_launch = 0.0;
};

/// Forward shot from (1, 1) along the unstable direction. delta = 0 launches
/// at the stationary point itself with capture disabled.
NoScalShot shoot_noscal(double lambda, const ShotConfig& config);

/// 4D trajectory of a no-scal shot, embedded with x = y tr D / n, z = s0.
Trajectory embed_noscal_trajectory(const Trajectory& t, const SolvsolitonParams& params);

MetricProfile reconstruct(const Trajectory& t, const SolvsolitonParams& params);

struct SolitonResidual {
    std::vector<double> shape;      // per sample, sup over the D-eigenbasis
    std::vector<double> potential;  // per sample
    double sup_shape = 0.0;
    double sup_potential = 0.0;
    double sup() const { return std::max(sup_shape, sup_potential); }
};

/// Residuals of the cohomogeneity-one soliton equations with derivatives taken
/// from `field`, so that a wrong reduction shows up as a nonzero residual.
SolitonResidual soliton_residual(const MetricProfile& profile, const Trajectory& t,
                                 const SolvsolitonParams& params,
                                 const VectorField4& field = vector_field);

struct ShiftReport {
    double expected_shift = 0.0;
    double measured_shift = 0.0;
    double relative_error = 0.0;
    double sup_distance = 0.0;
};

/// Compares raw-time shots at delta and delta/2, aligned where z crosses s0/2.
ShiftReport shift_covariance(const SolvsolitonParams& params, const ShotConfig& config,
                             double compare_span = 40.0);

}  // namespace solvflow
