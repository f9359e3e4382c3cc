#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "solvflow/construct.hpp"
#include "solvflow/core.hpp"
#include "solvflow/error.hpp"
#include "solvflow/integrate.hpp"

#include <cmath>
#include <random>

using namespace solvflow;

namespace {

const SolvsolitonParams& h3() {
    static const SolvsolitonParams p = preset("heisenberg3").params;
    return p;
}

Eigen::VectorXd vec(const Eigen::Vector4d& v) { return Eigen::VectorXd(v); }

}  // namespace

TEST_CASE("harmonic oscillator with dense output") {
    const Field f = [](const Eigen::VectorXd& u) {
        Eigen::VectorXd d(2);
        d << u[1], -u[0];
        return d;
    };
    Eigen::VectorXd p0(2);
    p0 << 1.0, 0.0;
    IntegrateOptions o;
    o.capture_points = std::vector<Eigen::VectorXd>{};
    o.norm_cap = 1e6;
    const Trajectory t = integrate_field(f, p0, 0.0, 10.0, o, {});
    CHECK(t.times.back() == 10.0);
    CHECK(std::abs(t.states.back()[0] - std::cos(10.0)) <= 1e-8);
    for (double s : {0.3, 2.71, 7.77}) CHECK(std::abs(t.eval(s)[0] - std::cos(s)) <= 1e-8);
    CHECK(t.count(EventKind::MaxTime) == 1);
}

TEST_CASE("event localization") {
    const Field f = [](const Eigen::VectorXd& u) { return Eigen::VectorXd::Ones(1) + 0.0 * u; };
    EventSpec ev{EventKind::OmegaExit, 0, [](const Eigen::VectorXd& u) { return 1.2345 - u[0]; },
                 EventSpec::Trigger::Falling, true};
    IntegrateOptions o;
    o.capture_points = std::vector<Eigen::VectorXd>{};
    const Trajectory t = integrate_field(f, Eigen::VectorXd::Zero(1), 0.0, 5.0, o, {ev});
    const Event* e = t.first(EventKind::OmegaExit);
    REQUIRE(e != nullptr);
    CHECK(std::abs(e->s - 1.2345) <= 1e-10);
    CHECK(t.times.back() == doctest::Approx(e->s));
}

TEST_CASE("stationary start is captured immediately") {
    const auto& p = h3();
    const auto gs = stationary_point(p, Stationary::SPlus).vec();
    const Trajectory t = integrate(SystemKind::Full, p, vec(gs), 0.0, 100.0);
    const Event* e = t.first(EventKind::Captured);
    REQUIRE(e != nullptr);
    CHECK(e->s == 0.0);
    CHECK(e->detail == static_cast<int>(Stationary::SPlus));
    for (const auto& st : t.states) CHECK((st - gs).norm() == 0.0);
}

TEST_CASE("forward shot at theta 0 stays in Omega and the backward leg is captured") {
    const auto& p = h3();
    const EigenData eig = unstable_eigendata(p);
    const Eigen::Vector4d v = direction_from_angle(0.0, eig);
    const Eigen::Vector4d gs = stationary_point(p, Stationary::SPlus).vec();
    const Eigen::VectorXd p0 = vec(gs + 1e-6 * v);
    for (double tol : {1e-10, 1e-12}) {
        IntegrateOptions o;
        o.rel_tol = tol;
        o.abs_tol = tol * 1e-2;
        const Trajectory fw = integrate(SystemKind::Full, p, p0, 0.0, 100.0, o);
        CHECK(fw.count(EventKind::OmegaExit) == 0);
        CHECK(fw.count(EventKind::WMinusNXSignChange) == 0);
        CHECK(fw.times.back() == 100.0);
    }
    ShotConfig cfg;
    cfg.theta = 0.0;
    cfg.canonical_time = false;
    const Shot shot = shoot_family(p, cfg);
    CHECK(shot.captured_backward);
    CHECK(shot.capture_distance <= 1e-8);
    CHECK(shot.backward.times.back() >= -60.0);
}

TEST_CASE("time reversal returns to the start") {
    const auto& p = h3();
    const Eigen::VectorXd p0 = vec(Eigen::Vector4d(0.3, 0.45, -0.06, 1.4));
    IntegrateOptions o;
    o.capture_points = std::vector<Eigen::VectorXd>{};
    const Trajectory fw = integrate(SystemKind::Full, p, p0, 0.0, 3.0, o);
    REQUIRE(fw.times.back() == 3.0);
    const Trajectory bw = integrate(SystemKind::Full, p, fw.states.back(), 3.0, 0.0, o);
    REQUIRE(bw.times.back() == 0.0);
    CHECK((bw.states.back() - p0).norm() <= 100 * o.rel_tol);
}

TEST_CASE("halving tolerances moves the endpoint by less than ten tolerances") {
    const auto& p = h3();
    const Eigen::VectorXd p0 = vec(Eigen::Vector4d(0.3, 0.45, -0.06, 1.4));
    IntegrateOptions a;
    a.capture_points = std::vector<Eigen::VectorXd>{};
    IntegrateOptions b = a;
    b.rel_tol /= 2;
    b.abs_tol /= 2;
    const Trajectory ta = integrate(SystemKind::Full, p, p0, 0.0, 20.0, a);
    const Trajectory tb = integrate(SystemKind::Full, p, p0, 0.0, 20.0, b);
    const Eigen::VectorXd ea = ta.states.back(), eb = tb.states.back();
    CHECK((ea - eb).cwiseAbs().maxCoeff() <= 10 * a.rel_tol * std::max(1.0, ea.cwiseAbs().maxCoeff()));
}

TEST_CASE("random starts in Omega do not exit before s = 50") {
    const auto& p = h3();
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int k = 0; k < 20; ++k) {
        const double x = 1.5 * u(rng);
        const double y = p.n * x * u(rng);
        const double z = p.s0 * u(rng);
        const double w = p.n * x + 2 * u(rng);  // Phi' > 0 at the start
        const Eigen::VectorXd p0 = vec(Eigen::Vector4d(x, y, z, w));
        const Trajectory t = integrate(SystemKind::Full, p, p0, 0.0, 50.0);
        CAPTURE(p0.transpose());
        CHECK(t.count(EventKind::OmegaExit) == 0);
        const bool finished = t.count(EventKind::MaxTime) + t.count(EventKind::Blowup) + t.count(EventKind::Captured) > 0;
        CHECK(finished);
    }
}

TEST_CASE("omega monitor reports a start outside Omega") {
    const auto& p = h3();
    const PhasePoint q{0.1, 1.0, p.s0 / 2, 0.0};
    const auto m = omega_margins(q, p);
    CHECK(m[static_cast<int>(OmegaBound::YBelowNX)] < 0.0);
    CHECK(m[static_cast<int>(OmegaBound::YPositive)] > 0.0);
    const Trajectory t = integrate(SystemKind::Full, p, vec(q.vec()), 0.0, 1.0);
    const Event* e = t.first(EventKind::OmegaExit);
    REQUIRE(e != nullptr);
    CHECK(e->s == 0.0);
    CHECK(e->detail == static_cast<int>(OmegaBound::YBelowNX));
}

TEST_CASE("omega monitor along a family shot") {
    const auto& p = h3();
    for (double theta : {-1.4, -0.7, 0.0}) {
        ShotConfig cfg;
        cfg.theta = theta;
        const Shot shot = shoot_family(p, cfg);
        const OmegaReport r = monitor_omega(shot.trajectory, p);
        CAPTURE(theta);
        CHECK(r.stays_inside());
        for (double m : r.min_margins) CHECK(m > 0.0);
    }
}

TEST_CASE("potential along family shots") {
    const auto& p = h3();
    for (double theta : {-1.4, -0.7, 0.0, unstable_eigendata(p).theta0 / 2}) {
        ShotConfig cfg;
        cfg.theta = theta;
        const Shot shot = shoot_family(p, cfg);
        const PhiReport r = monitor_phi(shot.trajectory, p);
        CAPTURE(theta);
        CHECK(r.sup_residual < 1e-7);
        bool positive = true;
        for (std::size_t i = 0; i < r.s.size(); ++i) positive = positive && r.phi[i] > 0 && r.dphi[i] > 0 && r.d2phi[i] > 0;
        CHECK(positive);
        // once Phi and Phi' are positive they stay positive
        CHECK(r.phi.back() > r.phi.front());
    }
}

TEST_CASE("potential requires a trajectory captured at gamma S") {
    const auto& p = h3();
    IntegrateOptions o;
    const Trajectory t = integrate(SystemKind::Full, p, vec(Eigen::Vector4d(0.3, 0.45, -0.06, 1.4)), 0.0, 5.0, o);
    try {
        monitor_phi(t, p);
        FAIL("expected NotCaptured");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotCaptured);
    }
}

TEST_CASE("blow-up is reported") {
    const auto& p = h3();
    const Trajectory t = integrate(SystemKind::Full, p, vec(Eigen::Vector4d(0.3, 0.1, -0.05, -2.0)), 0.0, 100.0);
    CHECK(t.count(EventKind::Blowup) == 1);
    CHECK(t.states.back().norm() >= 1e6 * 0.999);
}

TEST_CASE("join legs") {
    const auto& p = h3();
    const Eigen::VectorXd p0 = vec(Eigen::Vector4d(0.3, 0.45, -0.06, 1.4));
    IntegrateOptions o;
    o.capture_points = std::vector<Eigen::VectorXd>{};
    const Trajectory bw = integrate(SystemKind::Full, p, p0, 0.0, -1.0, o);
    const Trajectory fw = integrate(SystemKind::Full, p, p0, 0.0, 1.0, o);
    const Trajectory j = join_legs(bw, fw);
    for (std::size_t i = 1; i < j.size(); ++i) CHECK(j.times[i] > j.times[i - 1]);
    CHECK(j.times.front() == -1.0);
    CHECK(j.times.back() == 1.0);
    CHECK((j.eval(-0.5) - bw.eval(-0.5)).norm() <= 1e-14);
    CHECK((j.eval(0.5) - fw.eval(0.5)).norm() <= 1e-14);
}
