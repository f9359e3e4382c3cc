#pragma once

#include "solvflow/core.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <utility>

namespace solvflow {

/// A point (x, y, z, w) of the reduced phase space.
///   x: orbit mean curvature divided by n
///   y: speed in the automorphism direction
///   z: scalar curvature of the orbit (z <= 0 when geometric)
///   w: dilation mean curvature, n x + f'
struct PhasePoint {
    double x = 0.0, y = 0.0, z = 0.0, w = 0.0;

    Eigen::Vector4d vec() const { return {x, y, z, w}; }
    static PhasePoint from(const Eigen::Ref<const Eigen::VectorXd>& v) {
        return {v[0], v[1], v[2], v[3]};
    }
    friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

struct EinsteinPoint {
    double x = 0.0, y = 0.0;
    Eigen::Vector2d vec() const { return {x, y}; }
};

struct NoScalPoint {
    double y = 0.0, w = 0.0;
    Eigen::Vector2d vec() const { return {y, w}; }
};

struct EigenData {
    double eps_plus = 0.0;
    double eps_minus = 0.0;
    /// w_basis[0]: Einstein direction (w = n x, z > 0);
    /// w_basis[1]: no-scal direction (z = 0, x < 0).
    std::array<Eigen::Vector4d, 2> w_basis;
    /// Orthonormal basis of the unstable subspace, as returned by the SVD.
    Eigen::Matrix<double, 4, 2> null_basis;
    double theta0 = 0.0;
};

/// Order of the four stationary solutions returned by stationary_points.
enum class Stationary { SPlus = 0, SMinus = 1, HPlus = 2, HMinus = 3 };

using VectorField4 = std::function<Eigen::Vector4d(const PhasePoint&, const SolvsolitonParams&)>;

Eigen::Vector4d vector_field(const PhasePoint& p, const SolvsolitonParams& params);
Eigen::Matrix4d jacobian(const PhasePoint& p, const SolvsolitonParams& params);

std::array<PhasePoint, 4> stationary_points(const SolvsolitonParams& params);
PhasePoint stationary_point(const SolvsolitonParams& params, Stationary which);

/// Closed-form eps_+ / eps_- of the linearisation at gamma^S.
std::pair<double, double> unstable_eigenvalues(const SolvsolitonParams& params);

EigenData unstable_eigendata(const SolvsolitonParams& params);

/// Unit vector of W whose xz-projection is proportional to (sin theta, cos theta).
Eigen::Vector4d direction_from_angle(double theta, const EigenData& eig);

/// (x, y, z, w) -> (-x, -y, z, -w); pairs with time reversal.
PhasePoint reflect(const PhasePoint& p);

/// Maps a point at time s on an F_{lambda1} curve to the matching point and
/// time on the F_{lambda2} curve.
std::pair<PhasePoint, double> rescale_lambda(const PhasePoint& p, double s, double lambda1,
                                             double lambda2);

// Einstein subsystem on E = {w = n x, z = einstein_z(x, y)}.
Eigen::Vector2d einstein_field(const EinsteinPoint& q, const SolvsolitonParams& params);
double einstein_z(const EinsteinPoint& q, const SolvsolitonParams& params);
Eigen::Matrix2d einstein_jacobian(const EinsteinPoint& q, const SolvsolitonParams& params);
/// x, y >= 0, E_1 >= 0 and E_2 <= 0, each up to `tol`.
bool in_region_K(const EinsteinPoint& q, const SolvsolitonParams& params, double tol = 0.0);
PhasePoint embed_einstein(const EinsteinPoint& q, const SolvsolitonParams& params);
/// Unit eigenvector of the Einstein linearisation at gamma^S for eps_+,
/// oriented into K (x > 0, y < 0).
Eigen::Vector2d einstein_unstable_direction(const SolvsolitonParams& params);
/// Closed form of the same eigenvector (unnormalized).
Eigen::Vector2d einstein_unstable_direction_closed_form(const SolvsolitonParams& params);
/// Tangent vector of the embedding E -> R^4 at gamma^S applied to u.
Eigen::Vector4d einstein_tangent_at_gamma_s(const Eigen::Vector2d& u, const SolvsolitonParams& params);

// No-scal subsystem on {y tr D = n x, z = s0}.
Eigen::Vector2d noscal_field(const NoScalPoint& q, double lambda);
Eigen::Matrix2d noscal_jacobian(const NoScalPoint& q, double lambda);
/// Unit unstable eigenvector at (1, 1), oriented so that w increases.
Eigen::Vector2d noscal_unstable_direction(double lambda);
double noscal_unstable_eigenvalue(double lambda);
PhasePoint embed_noscal(const NoScalPoint& q, const SolvsolitonParams& params);

}  // namespace solvflow
