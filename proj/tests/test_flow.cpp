#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "solvflow/core.hpp"
#include "solvflow/error.hpp"
#include "solvflow/flow.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace solvflow;

namespace {

const SolvsolitonParams& h3() {
    static const SolvsolitonParams p = preset("heisenberg3").params;
    return p;
}

std::vector<SolvsolitonParams> flow_presets() {
    std::vector<SolvsolitonParams> out;
    for (const auto& name : preset_names()) {
        auto p = preset(name).params;
        if (!p.scalar_flat) out.push_back(p);
    }
    return out;
}

Eigen::Vector4d random_point(std::mt19937& rng, double box = 2.0) {
    std::uniform_real_distribution<double> u(-box, box);
    return {u(rng), u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("vector field oracles on h3") {
    const auto& p = h3();
    CHECK(vector_field({1.0 / 3, 1.0, -0.125, 1.0}, p).norm() <= 1e-15);
    CHECK(vector_field({std::sqrt(0.125), 0.0, 0.0, std::sqrt(9.0 / 8)}, p).norm() <= 1e-15);
    const Eigen::Vector4d f0 = vector_field({0, 0, 0, 0}, p);
    CHECK(f0[0] == doctest::Approx(0.375));
    CHECK(f0[1] == 0.0);
    CHECK(f0[2] == 0.0);
    CHECK(f0[3] == doctest::Approx(0.375));
}

TEST_CASE("stationary points") {
    const auto pts = stationary_points(h3());
    CHECK(pts[0].x == doctest::Approx(1.0 / 3));
    CHECK(pts[0].y == doctest::Approx(1.0));
    CHECK(pts[0].z == doctest::Approx(-0.125));
    CHECK(pts[0].w == doctest::Approx(1.0));
    CHECK(pts[2].x == doctest::Approx(0.3535533906));
    CHECK(pts[2].w == doctest::Approx(1.0606601718));
    CHECK(reflect(pts[0]) == pts[1]);
    CHECK(reflect(pts[2]) == pts[3]);
    for (const auto& p : flow_presets()) {
        CAPTURE(p.name);
        for (const auto& s : stationary_points(p)) CHECK(vector_field(s, p).norm() <= 1e-13);
    }
}

TEST_CASE("eigenvalues at gamma S") {
    for (const auto& p : flow_presets()) {
        CAPTURE(p.name);
        const auto [ep, em] = unstable_eigenvalues(p);
        const double n = p.n;
        const double root = std::sqrt(8 + n - 8 * p.s0) / (2 * std::sqrt(n));
        CHECK(std::abs(ep - (-0.5 + root)) <= 1e-12);
        CHECK(std::abs(em - (-0.5 - root)) <= 1e-12);

        const Eigen::Matrix4d J = jacobian(stationary_point(p, Stationary::SPlus), p);
        Eigen::Vector4d ev = J.eigenvalues().real();
        std::sort(ev.data(), ev.data() + 4);
        CHECK(std::abs(ev[0] - em) <= 1e-7);  // double roots: eigensolver accuracy ~ sqrt(eps)
        CHECK(std::abs(ev[3] - ep) <= 1e-7);
        // (J - ep)(J - em) = 0 pins both multiplicities exactly
        const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
        CHECK(((J - ep * I) * (J - em * I)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    const auto [ep, em] = unstable_eigenvalues(h3());
    CHECK(ep == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(em == doctest::Approx(-1.5).epsilon(1e-14));
}

TEST_CASE("jacobian against central differences") {
    std::mt19937 rng(7);
    for (const auto& p : flow_presets()) {
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const Eigen::Vector4d x = random_point(rng);
            const Eigen::Matrix4d J = jacobian(PhasePoint::from(x), p);
            Eigen::Matrix4d fd;
            const double h = 1e-6;
            for (int j = 0; j < 4; ++j) {
                Eigen::Vector4d e = Eigen::Vector4d::Zero();
                e[j] = h;
                fd.col(j) = (vector_field(PhasePoint::from(x + e), p) - vector_field(PhasePoint::from(x - e), p)) / (2 * h);
            }
            worst = std::max(worst, (J - fd).cwiseAbs().maxCoeff() / std::max(1.0, J.cwiseAbs().maxCoeff()));
        }
        CAPTURE(p.name);
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("unstable subspace") {
    const auto& p = h3();
    const EigenData eig = unstable_eigendata(p);
    const Eigen::Matrix4d J = jacobian(stationary_point(p, Stationary::SPlus), p);
    for (const auto& v : eig.w_basis) CHECK(((J - eig.eps_plus * Eigen::Matrix4d::Identity()) * v).norm() <= 1e-8 * v.norm());
    CHECK(eig.theta0 == doctest::Approx(0.13255153229667407).epsilon(1e-12));

    // Einstein direction has w = n x and z > 0; ratio x : y = 1 : -42
    const auto& w0 = eig.w_basis[0];
    CHECK(w0[2] > 0.0);
    CHECK(w0[3] == doctest::Approx(3 * w0[0]));
    CHECK(w0[1] / w0[0] == doctest::Approx(-42.0));
    CHECK(w0[2] / w0[0] == doctest::Approx(7.5));
    // z component of w0 matches 2 (b (n - 1) + c tr D0^2) with b = x, c = -y
    CHECK(w0[2] == doctest::Approx(2 * (w0[0] * 2 - w0[1] * p.tr_d0_sq)));

    // no-scal direction: (-1, -3, 0, 4.5) up to scale
    const auto& w1 = eig.w_basis[1];
    CHECK(std::abs(w1[2]) <= 1e-12);
    CHECK(w1[0] < 0.0);
    CHECK(w1[1] / w1[0] == doctest::Approx(3.0));
    CHECK(w1[3] / w1[0] == doctest::Approx(-4.5));

    // (x, z) parametrizes W
    Eigen::Matrix2d xz;
    xz << eig.null_basis(0, 0), eig.null_basis(0, 1), eig.null_basis(2, 0), eig.null_basis(2, 1);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(xz);
    CHECK(svd.singularValues()[1] > 1e-3 * svd.singularValues()[0]);
}

TEST_CASE("direction from angle") {
    const EigenData eig = unstable_eigendata(h3());
    const Eigen::Vector4d v0 = direction_from_angle(0.0, eig);
    CHECK(std::abs(v0[0]) <= 1e-14);
    CHECK(v0[2] > 0.0);
    CHECK(v0.norm() == doctest::Approx(1.0));

    const Eigen::Vector4d ve = direction_from_angle(eig.theta0, eig);
    const Eigen::Vector4d w0 = eig.w_basis[0].normalized();
    CHECK(std::abs(std::abs(ve.dot(w0)) - 1.0) <= 1e-12);
    CHECK(ve[2] > 0.0);

    const Eigen::Vector4d vm = direction_from_angle(-std::numbers::pi / 2, eig);
    const Eigen::Vector4d w1 = eig.w_basis[1].normalized();
    CHECK(std::abs(std::abs(vm.dot(w1)) - 1.0) <= 1e-12);
    CHECK(vm[0] < 0.0);
    CHECK(std::abs(vm[2]) <= 1e-14);
}

TEST_CASE("reflection conjugates the flow") {
    const auto& p = h3();
    CHECK(reflect({0, 0, -0.3, 0}) == PhasePoint{0, 0, -0.3, 0});
    std::mt19937 rng(11);
    const Eigen::Vector4d dR(-1, -1, 1, -1);
    for (int k = 0; k < 100; ++k) {
        const PhasePoint q = PhasePoint::from(random_point(rng));
        const Eigen::Vector4d lhs = vector_field(reflect(q), p);
        const Eigen::Vector4d rhs = -dR.cwiseProduct(vector_field(q, p));
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("lambda rescaling") {
    const auto& p = h3();
    const PhasePoint q{0.2, 0.4, -0.05, 0.9};
    const auto [same, s_same] = rescale_lambda(q, 1.5, p.lambda, p.lambda);
    CHECK((same.vec() - q.vec()).norm() <= 1e-15);
    CHECK(s_same == doctest::Approx(1.5));

    const double l2 = 2 * p.lambda;
    const auto [h2, s2] = rescale_lambda(stationary_point(p, Stationary::HPlus), 0.0, p.lambda, l2);
    CHECK(vector_field(h2, p.with_lambda(l2)).norm() <= 1e-14);
    CHECK((h2.vec() - stationary_point(p.with_lambda(l2), Stationary::HPlus).vec()).norm() <= 1e-14);

    // the image of an integral curve is an integral curve: F_l2(R q) = (ds/ds2) dR F_l1(q)
    const auto [r, s] = rescale_lambda(q, 0.0, p.lambda, l2);
    const double eps = 1e-6;
    const Eigen::Vector4d qe = q.vec() + eps * vector_field(q, p);
    const auto [re, se] = rescale_lambda(PhasePoint::from(qe), eps, p.lambda, l2);
    const Eigen::Vector4d fd = (re.vec() - r.vec()) / (se - s);
    CHECK((fd - vector_field(r, p.with_lambda(l2))).norm() <= 1e-5);
}

TEST_CASE("einstein subsystem") {
    const auto& p = h3();
    CHECK(einstein_field({1.0 / 3, 1.0}, p).norm() <= 1e-15);
    CHECK(einstein_z({1.0 / 3, 1.0}, p) == doctest::Approx(-0.125).epsilon(1e-14));
    const EinsteinPoint qh{std::sqrt(0.125), 0.0};
    CHECK(std::abs(einstein_z(qh, p)) <= 1e-15);
    CHECK(std::abs(einstein_field(qh, p)[0]) <= 1e-15);

    const Eigen::Vector2d u = einstein_unstable_direction(p);
    CHECK(u[0] > 0.0);
    CHECK(u[1] < 0.0);
    CHECK(u[1] / u[0] == doctest::Approx(-42.0));
    const Eigen::Vector2d c = einstein_unstable_direction_closed_form(p);
    CHECK(std::abs(c.normalized().dot(u)) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(in_region_K({0.34, 0.5}, p, 0.0) == (einstein_field({0.34, 0.5}, p)[0] >= 0 && einstein_field({0.34, 0.5}, p)[1] <= 0));
}

TEST_CASE("full flow is tangent to the Einstein set") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (const auto& p : flow_presets()) {
        for (int k = 0; k < 100; ++k) {
            const EinsteinPoint q{u(rng), u(rng)};
            const PhasePoint e = embed_einstein(q, p);
            const Eigen::Vector4d f = vector_field(e, p);
            const Eigen::Vector2d g = einstein_field(q, p);
            const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
            CHECK(std::abs(f[0] - g[0]) <= 1e-12 * scale);
            CHECK(std::abs(f[1] - g[1]) <= 1e-12 * scale);
            // dz/ds along the planar flow by the chain rule
            const double dzdx = 2 * q.x * p.n * (p.n - 1);
            const double dzdy = -2 * q.y * p.tr_d0_sq;
            CHECK(std::abs(f[2] - (dzdx * g[0] + dzdy * g[1])) <= 1e-12 * scale);
            CHECK(std::abs(f[3] - p.n * g[0]) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("no-scal subsystem") {
    const double lam = h3().lambda;
    CHECK(noscal_field({1, 1}, lam).norm() == 0.0);
    const Eigen::Vector2d a = noscal_field({0, 0}, lam);
    CHECK(a[0] == 1.0);
    CHECK(a[1] == doctest::Approx(-lam));
    const Eigen::Vector2d b = noscal_field({2, 0}, lam);
    CHECK(b[0] == 1.0);
    CHECK(b[1] == doctest::Approx(3 * lam));

    const Eigen::Vector2d v = noscal_unstable_direction(lam);
    CHECK(v[1] > 0.0);
    const double mu = noscal_unstable_eigenvalue(lam);
    CHECK(mu > 0.0);
    CHECK((noscal_jacobian({1, 1}, lam) * v - mu * v).norm() <= 1e-13);
}

TEST_CASE("full flow is tangent to the no-scal set") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (const auto& p : flow_presets()) {
        for (int k = 0; k < 100; ++k) {
            const NoScalPoint q{u(rng), u(rng)};
            const PhasePoint e = embed_noscal(q, p);
            CHECK(e.x * p.n == doctest::Approx(q.y * p.tr_d));
            CHECK(e.z == p.s0);
            const Eigen::Vector4d f = vector_field(e, p);
            const Eigen::Vector2d g = noscal_field(q, p.lambda);
            const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
            CHECK(std::abs(f[2]) <= 1e-12 * scale);
            CHECK(std::abs(f[0] * p.n - f[1] * p.tr_d) <= 1e-12 * scale);
            CHECK(std::abs(f[1] - g[0]) <= 1e-12 * scale);
            CHECK(std::abs(f[3] - g[1]) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("scalar-flat presets are rejected by the main flow") {
    const auto p = preset("abelian:2").params;
    CHECK_THROWS_AS(unstable_eigendata(p), Error);
}
