#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "solvflow/construct.hpp"
#include "solvflow/core.hpp"
#include "solvflow/error.hpp"

#include <cmath>
#include <numbers>

using namespace solvflow;

namespace {

const SolvsolitonParams& h3() {
    static const SolvsolitonParams p = preset("heisenberg3").params;
    return p;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::InvalidArgument;
}

Shot family(double theta, const SolvsolitonParams& p = h3()) {
    ShotConfig cfg;
    cfg.theta = theta;
    return shoot_family(p, cfg);
}

// Corrupted reduction: sign flip in the y equation.
Eigen::Vector4d mutated(const PhasePoint& p, const SolvsolitonParams& params) {
    Eigen::Vector4d f = vector_field(p, params);
    f[1] = -f[1];
    return f;
}

Trajectory stationary_trajectory(const SolvsolitonParams& p) {
    IntegrateOptions o;
    o.capture_points = std::vector<Eigen::VectorXd>{};
    return integrate(SystemKind::Full, p, Eigen::VectorXd(stationary_point(p, Stationary::SPlus).vec()), 0.0, 5.0, o);
}

}  // namespace

TEST_CASE("launch time") {
    CHECK(launch_time(1e-6, 0.5, true) == doctest::Approx(2 * std::log(1e-6)));
    CHECK(launch_time(1e-6, 0.5, false) == 0.0);
}

TEST_CASE("admissible angles") {
    const EigenData eig = unstable_eigendata(h3());
    CHECK(theta_admissible(0.0, eig));
    CHECK(theta_admissible(-1.5, eig));
    CHECK_FALSE(theta_admissible(-std::numbers::pi / 2, eig));
    CHECK_FALSE(theta_admissible(eig.theta0, eig));
    CHECK_FALSE(theta_admissible(2.0, eig));
    CHECK(kind_of([] { family(2.0); }) == ErrorKind::OutsideAdmissibleRange);
}

TEST_CASE("reconstruction at gamma S") {
    const auto& p = h3();
    const Trajectory t = stationary_trajectory(p);
    const MetricProfile m = reconstruct(t, p);
    for (std::size_t i = 0; i < m.s.size(); ++i) {
        CHECK(m.c[i] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(m.f_prime[i]) <= 1e-15);
        CHECK(m.h[i] == doctest::Approx(m.s[i]).epsilon(1e-12));
        for (std::size_t k = 0; k < p.d_spectrum.size(); ++k) CHECK(m.L_spectrum[i][k] == doctest::Approx(p.d_spectrum[k]));
    }
    const SolitonResidual r = soliton_residual(m, t, p);
    CHECK(r.sup() <= 1e-13);
}

TEST_CASE("reconstruction rejects z >= 0") {
    const auto& p = h3();
    IntegrateOptions o;
    o.capture_points = std::vector<Eigen::VectorXd>{};
    const Trajectory t = integrate(SystemKind::Full, p, Eigen::VectorXd(Eigen::Vector4d(0.1, 0.1, 0.0, 1.0)), 0.0, 1.0, o);
    CHECK(kind_of([&] { reconstruct(t, p); }) == ErrorKind::NonNegativeZ);
}

TEST_CASE("family shots") {
    const auto& p = h3();
    for (double theta : {-1.4, -0.7, 0.0, unstable_eigendata(p).theta0 / 2}) {
        CAPTURE(theta);
        const Shot shot = family(theta);
        CHECK(shot.captured_backward);
        CHECK(shot.capture_distance <= 1e-8);
        CHECK(shot.trajectory.times.back() == doctest::Approx(100.0));

        double sup_x = 0.0, sup_y = 0.0;
        for (std::size_t i = 0; i < shot.trajectory.size(); ++i) {
            sup_x = std::max(sup_x, shot.trajectory.states[i][0]);
            sup_y = std::max(sup_y, shot.trajectory.states[i][1]);
        }
        CHECK(sup_x < 10.0);
        CHECK(sup_y < 10.0);
        const auto& end = shot.trajectory.states.back();
        CHECK(end[0] < 0.05);
        CHECK(end[1] < 0.05);
        CHECK(end[3] > 10.0);

        const MetricProfile m = reconstruct(shot.trajectory, p);
        bool positive = true;
        for (const auto& row : m.L_spectrum)
            for (double l : row) positive = positive && l > 0.0;
        CHECK(positive);
        // the backward end looks like the Einstein solvmanifold
        CHECK(m.c.front() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(shot.trajectory.states.front()[1] == doctest::Approx(1.0).epsilon(1e-6));

        const SolitonResidual r = soliton_residual(m, shot.trajectory, p);
        CHECK(r.sup() <= 1e-9);
        CHECK(soliton_residual(m, shot.trajectory, p, mutated).sup() > 1e-2);
    }
}

TEST_CASE("backward leg approaches gamma S at the unstable rate") {
    const auto& p = h3();
    const Shot shot = family(0.0);
    const Eigen::Vector4d gs = stationary_point(p, Stationary::SPlus).vec();
    // least squares of log distance on s over the backward leg
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < shot.backward.size(); ++i) {
        const double s = shot.backward.times[i];
        const double d = (shot.backward.states[i] - gs).norm();
        if (d > 1e-3 || d < 1e-12) continue;
        const double l = std::log(d);
        sx += s, sy += l, sxx += s * s, sxy += s * l, ++m;
    }
    REQUIRE(m > 5);
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("einstein heteroclinic") {
    const auto& p = h3();
    const EinsteinShot e = shoot_einstein(p, ShotConfig{});
    CHECK(e.capture_distance <= 1e-6);
    CHECK(e.z_drift <= 1e-9);
    CHECK(e.x_monotone);
    CHECK(e.y_monotone);
    const auto& end = e.planar.states.back();
    CHECK(end[0] == doctest::Approx(std::sqrt(0.125)).epsilon(1e-5));
    CHECK(std::abs(end[1]) <= 1e-6);

    const MetricProfile m = reconstruct(e.embedded, p);
    bool positive = true;
    for (const auto& row : m.L_spectrum)
        for (double l : row) positive = positive && l > 0.0;
    CHECK(positive);
}

namespace {

double einstein_gap(double dtheta, double s_hi) {
    const auto& p = h3();
    static const EinsteinShot e = shoot_einstein(p, ShotConfig{});
    ShotConfig cfg;
    cfg.theta = unstable_eigendata(p).theta0 - dtheta;
    cfg.s_forward = s_hi;
    const Shot shot = shoot_family(p, cfg);
    double sup = 0.0;
    for (double s = 0.0; s <= s_hi; s += 0.25) {
        const Eigen::VectorXd a = shot.trajectory.eval(s);
        const Eigen::VectorXd b = e.planar.eval(s);
        sup = std::max(sup, std::hypot(a[0] - b[0], a[1] - b[1]));
    }
    return sup;
}

}  // namespace

// gamma^H repels off the Einstein set, so at dtheta = 1e-3 the gap on [0, 20] is O(1e-1).
TEST_CASE("family shot at theta0 - 1e-3 tracks the Einstein shot on [0, 20]" * doctest::may_fail()) {
    CHECK(einstein_gap(1e-3, 20.0) < 1e-2);
}

TEST_CASE("family shots converge to the Einstein shot as theta -> theta0") {
    const double g3 = einstein_gap(1e-3, 20.0);
    const double g4 = einstein_gap(1e-4, 20.0);
    const double g5 = einstein_gap(1e-5, 20.0);
    CHECK(g4 < g3);
    CHECK(g5 < g4);
    CHECK(g5 < 0.2 * g3);
    CHECK(einstein_gap(1e-3, 4.0) < 1e-2);
}

TEST_CASE("no-scal shots") {
    const double lam = h3().lambda;
    ShotConfig still;
    still.delta = 0.0;
    still.s_forward = 10.0;
    const NoScalShot s0 = shoot_noscal(lam, still);
    for (const auto& st : s0.trajectory.states) CHECK((st - Eigen::Vector2d(1, 1)).norm() == 0.0);

    ShotConfig cfg;
    cfg.s_forward = 200.0;
    const NoScalShot ns = shoot_noscal(lam, cfg);
    const auto& end = ns.trajectory.states.back();
    const double s = ns.trajectory.times.back();
    CHECK(s == doctest::Approx(200.0));
    CHECK(end[1] / (-lam * s) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(end[0] * (-lam * s) == doctest::Approx(1.0).epsilon(0.10));

    const auto p = h3();
    const Trajectory full = embed_noscal_trajectory(ns.trajectory, p);
    for (std::size_t i = 0; i < full.size(); ++i) {
        CHECK(full.states[i][2] == p.s0);
        CHECK(full.states[i][0] * p.n == doctest::Approx(full.states[i][1] * p.tr_d));
    }
    const MetricProfile m = reconstruct(full, p);
    const SolitonResidual r = soliton_residual(m, full, p);
    CHECK(r.sup() <= 1e-9);
}

TEST_CASE("shift covariance") {
    const ShiftReport r = shift_covariance(h3(), ShotConfig{});
    CHECK(r.expected_shift == doctest::Approx(2 * std::log(2.0)));
    CHECK(r.relative_error <= 0.01);
    CHECK(r.sup_distance <= 1e-5);
}

TEST_CASE("other presets") {
    for (const char* name : {"heisenberg:5", "heisenberg:7", "sol"}) {
        CAPTURE(name);
        const auto p = preset(name).params;
        const Shot shot = family(-0.7, p);
        CHECK(monitor_omega(shot.trajectory, p).stays_inside());
        const MetricProfile m = reconstruct(shot.trajectory, p);
        CHECK(soliton_residual(m, shot.trajectory, p).sup() <= 1e-9);
        const EinsteinShot e = shoot_einstein(p, ShotConfig{});
        CHECK(e.capture_distance <= 1e-6);
    }
}
