#include "solvflow/flow.hpp"

#include "solvflow/error.hpp"

#include <cmath>
#include <numbers>

namespace solvflow {

namespace {

void require_not_scalar_flat(const SolvsolitonParams& params) {
    if (params.scalar_flat || params.s0 == 0.0) {
        throw Error(ErrorKind::ScalarFlat, "s0 = 0: the full flow divides by s0");
    }
}

void require_negative_s0(const SolvsolitonParams& params) {
    require_not_scalar_flat(params);
    if (!(params.s0 < 0.0)) throw Error(ErrorKind::InvalidArgument, "s0 must be negative");
}

// Null vector of a 1x2 row (r0, r1).
Eigen::Vector2d null_of_row(const Eigen::Vector2d& r) { return {-r[1], r[0]}; }

}  // namespace

Eigen::Vector4d vector_field(const PhasePoint& p, const SolvsolitonParams& params) {
    require_not_scalar_flat(params);
    const double n = params.n;
    const double lam = params.lambda;
    return {
        p.z / n - lam - p.w * p.x,
        p.z / params.s0 - p.w * p.y,
        2.0 * p.z * (params.tr_d * p.y / n - p.x),
        -lam - p.x * p.x * n - p.y * p.y * params.tr_d0_sq,
    };
}

Eigen::Matrix4d jacobian(const PhasePoint& p, const SolvsolitonParams& params) {
    require_not_scalar_flat(params);
    const double n = params.n;
    Eigen::Matrix4d J;
    J << -p.w, 0.0, 1.0 / n, -p.x,
         0.0, -p.w, 1.0 / params.s0, -p.y,
         -2.0 * p.z, 2.0 * p.z * params.tr_d / n, 2.0 * (params.tr_d * p.y / n - p.x), 0.0,
         -2.0 * n * p.x, -2.0 * p.y * params.tr_d0_sq, 0.0, 0.0;
    return J;
}

std::array<PhasePoint, 4> stationary_points(const SolvsolitonParams& params) {
    require_negative_s0(params);
    const double n = params.n;
    const double hx = std::sqrt(-params.lambda / n);
    const double hw = std::sqrt(-params.lambda * n);
    return {{
        {1.0 / n, 1.0, params.s0, 1.0},
        {-1.0 / n, -1.0, params.s0, -1.0},
        {hx, 0.0, 0.0, hw},
        {-hx, 0.0, 0.0, -hw},
    }};
}

PhasePoint stationary_point(const SolvsolitonParams& params, Stationary which) {
    return stationary_points(params)[static_cast<std::size_t>(which)];
}

std::pair<double, double> unstable_eigenvalues(const SolvsolitonParams& params) {
    require_negative_s0(params);
    const double n = params.n;
    const double root = std::sqrt(8.0 + n - 8.0 * params.s0) / (2.0 * std::sqrt(n));
    return {-0.5 + root, -0.5 - root};
}

EigenData unstable_eigendata(const SolvsolitonParams& params) {
    EigenData eig;
    std::tie(eig.eps_plus, eig.eps_minus) = unstable_eigenvalues(params);

    const PhasePoint gs = stationary_point(params, Stationary::SPlus);
    const Eigen::Matrix4d shifted = jacobian(gs, params) - eig.eps_plus * Eigen::Matrix4d::Identity();
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(shifted, Eigen::ComputeFullV);
    const Eigen::Vector4d sv = svd.singularValues();
    const double cutoff = 1e-8 * std::max(1.0, sv[0]);
    int nullity = 0;
    for (int i = 0; i < 4; ++i)
        if (sv[i] <= cutoff) ++nullity;
    if (nullity != 2) {
        throw Error(ErrorKind::DegenerateEigenspace,
                    "unstable subspace has dimension " + std::to_string(nullity) + ", expected 2");
    }
    eig.null_basis = svd.matrixV().rightCols<2>();
    const auto& N = eig.null_basis;
    const double n = params.n;

    // Einstein direction: the element of W tangent to {w = n x}.
    Eigen::Vector2d row = N.row(3).transpose() - n * N.row(0).transpose();
    if (row.norm() < 1e-12) throw Error(ErrorKind::DegenerateEigenspace, "W lies inside {w = n x}");
    Eigen::Vector4d w0 = N * null_of_row(row);
    w0.normalize();
    if (w0[2] < 0) w0 = -w0;

    // No-scal direction: the element of W with zero z-component.
    row = N.row(2).transpose();
    if (row.norm() < 1e-12) throw Error(ErrorKind::DegenerateEigenspace, "W lies inside {z = 0}");
    Eigen::Vector4d w1 = N * null_of_row(row);
    w1.normalize();
    if (w1[0] > 0) w1 = -w1;
    w1[2] = 0.0;

    if (!(w0[2] > 0.0)) throw Error(ErrorKind::DegenerateEigenspace, "Einstein direction has z = 0");
    eig.w_basis = {w0, w1};
    eig.theta0 = std::atan2(w0[0], w0[2]);
    return eig;
}

Eigen::Vector4d direction_from_angle(double theta, const EigenData& eig) {
    if (!std::isfinite(theta) || theta < -std::numbers::pi || theta > std::numbers::pi) {
        throw Error(ErrorKind::InvalidArgument, "theta must lie in [-pi, pi]");
    }
    const auto& [w0, w1] = eig.w_basis;
    Eigen::Matrix2d P;
    P << w0[0], w1[0], w0[2], w1[2];
    Eigen::FullPivLU<Eigen::Matrix2d> lu(P);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::DegenerateEigenspace, "xz-projection of W is singular");
    }
    const Eigen::Vector2d c = lu.solve(Eigen::Vector2d(std::sin(theta), std::cos(theta)));
    Eigen::Vector4d v = c[0] * w0 + c[1] * w1;
    return v.normalized();
}

PhasePoint reflect(const PhasePoint& p) { return {-p.x, -p.y, p.z, -p.w}; }

std::pair<PhasePoint, double> rescale_lambda(const PhasePoint& p, double s, double lambda1,
                                             double lambda2) {
    if (!(lambda1 < 0.0) || !(lambda2 < 0.0)) {
        throw Error(ErrorKind::NonNegativeLambda, "both cosmological constants must be negative");
    }
    const double k = std::sqrt(lambda2 / lambda1);
    return {{k * p.x, k * p.y, k * k * p.z, k * p.w}, s / k};
}

Eigen::Vector2d einstein_field(const EinsteinPoint& q, const SolvsolitonParams& params) {
    require_negative_s0(params);
    const double n = params.n;
    const double lam = params.lambda;
    const double s0 = params.s0;
    const double t0 = params.tr_d0_sq;
    // F restricted to E; equals the printed E_2 (y^2/n term) when lambda = lambda0, tr D = 1.
    return {
        -lam / n - q.x * q.x - q.y * q.y * t0 / n,
        lam * (n - 1) / s0 + q.x * q.x * n * (n - 1) / s0 - q.y * q.y * t0 / s0 - n * q.x * q.y,
    };
}

double einstein_z(const EinsteinPoint& q, const SolvsolitonParams& params) {
    const double n = params.n;
    return params.lambda * (n - 1) + q.x * q.x * n * (n - 1) - q.y * q.y * params.tr_d0_sq;
}

Eigen::Matrix2d einstein_jacobian(const EinsteinPoint& q, const SolvsolitonParams& params) {
    require_negative_s0(params);
    const double n = params.n;
    const double s0 = params.s0;
    const double t0 = params.tr_d0_sq;
    Eigen::Matrix2d J;
    J << -2.0 * q.x, -2.0 * q.y * t0 / n,
         2.0 * q.x * n * (n - 1) / s0 - n * q.y, -2.0 * q.y * t0 / s0 - n * q.x;
    return J;
}

bool in_region_K(const EinsteinPoint& q, const SolvsolitonParams& params, double tol) {
    const Eigen::Vector2d e = einstein_field(q, params);
    return q.x >= -tol && q.y >= -tol && e[0] >= -tol && e[1] <= tol;
}

PhasePoint embed_einstein(const EinsteinPoint& q, const SolvsolitonParams& params) {
    return {q.x, q.y, einstein_z(q, params), params.n * q.x};
}

Eigen::Vector2d einstein_unstable_direction(const SolvsolitonParams& params) {
    const double n = params.n;
    const Eigen::Matrix2d J = einstein_jacobian({1.0 / n, 1.0}, params);
    const double tr = J.trace();
    const double det = J.determinant();
    const double disc = tr * tr - 4.0 * det;
    if (disc <= 0.0) throw Error(ErrorKind::DegenerateEigenspace, "Einstein linearisation not real-split");
    const double mu = 0.5 * (tr + std::sqrt(disc));
    const Eigen::Matrix2d M = J - mu * Eigen::Matrix2d::Identity();
    // Null vector from the row of larger norm.
    Eigen::Vector2d row = M.row(0).norm() >= M.row(1).norm() ? Eigen::Vector2d(M.row(0))
                                                              : Eigen::Vector2d(M.row(1));
    Eigen::Vector2d u = null_of_row(row).normalized();
    if (u[0] < 0) u = -u;
    return u;
}

Eigen::Vector2d einstein_unstable_direction_closed_form(const SolvsolitonParams& params) {
    require_negative_s0(params);
    const double n = params.n;
    const double root = std::sqrt(1.0 - 8.0 * params.lambda);
    return {n - 4.0 + n * root, -(4.0 * n * (n - 1) / (-params.s0) + 2.0 * n * n)};
}

Eigen::Vector4d einstein_tangent_at_gamma_s(const Eigen::Vector2d& u, const SolvsolitonParams& params) {
    const double n = params.n;
    const double x = 1.0 / n, y = 1.0;
    const double dz = 2.0 * x * n * (n - 1) * u[0] - 2.0 * y * params.tr_d0_sq * u[1];
    return {u[0], u[1], dz, n * u[0]};
}

Eigen::Vector2d noscal_field(const NoScalPoint& q, double lambda) {
    if (!(lambda > -1.0 && lambda < 0.0)) {
        throw Error(ErrorKind::LambdaOutOfRange, "no-scal subsystem needs -1 < lambda < 0");
    }
    return {1.0 - q.w * q.y, -lambda * (1.0 - q.y * q.y)};
}

Eigen::Matrix2d noscal_jacobian(const NoScalPoint& q, double lambda) {
    if (!(lambda > -1.0 && lambda < 0.0)) {
        throw Error(ErrorKind::LambdaOutOfRange, "no-scal subsystem needs -1 < lambda < 0");
    }
    Eigen::Matrix2d J;
    J << -q.w, -q.y, 2.0 * lambda * q.y, 0.0;
    return J;
}

double noscal_unstable_eigenvalue(double lambda) {
    if (!(lambda > -1.0 && lambda < 0.0)) {
        throw Error(ErrorKind::LambdaOutOfRange, "no-scal subsystem needs -1 < lambda < 0");
    }
    return 0.5 * (-1.0 + std::sqrt(1.0 - 8.0 * lambda));
}

Eigen::Vector2d noscal_unstable_direction(double lambda) {
    const double mu = noscal_unstable_eigenvalue(lambda);
    // First row of J - mu I at (1,1): (-1 - mu, -1).
    Eigen::Vector2d u(-1.0, 1.0 + mu);
    return u.normalized();
}

PhasePoint embed_noscal(const NoScalPoint& q, const SolvsolitonParams& params) {
    return {q.y * params.tr_d / params.n, q.y, params.s0, q.w};
}

}  // namespace solvflow
