#include "solvflow/construct.hpp"

#include "solvflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace solvflow {

namespace {

constexpr double kKTolerance = 1e-10;
constexpr double kMonotoneSlack = 1e-13;

double backward_end(double s_launch, double delta, double rate, const ShotConfig& config) {
    double end = config.s_backward;
    const double r = config.opts.capture_radius;
    if (delta > r && rate > 0.0) end = std::min(end, s_launch + 1.5 * std::log(1e-2 * r / delta) / rate);
    return std::min(end, s_launch);
}

std::size_t nearest_index(const std::vector<double>& s, double target) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (std::abs(s[i] - target) < std::abs(s[best] - target)) best = i;
    return best;
}

// Time at which the monotone quantity component `k` first reaches `level`.
double crossing_time(const Trajectory& t, int k, double level) {
    for (std::size_t i = 1; i < t.size(); ++i) {
        if ((t.states[i - 1][k] - level) * (t.states[i][k] - level) <= 0.0) {
            double lo = t.times[i - 1], hi = t.times[i];
            const double sign_lo = t.states[i - 1][k] - level;
            for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((t.eval(mid)[k] - level) * sign_lo > 0.0) lo = mid;
                else hi = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    throw Error(ErrorKind::PropertyViolated, "level crossing not found for shift alignment");
}

Eigen::Vector3d einstein_augmented(const Eigen::Vector3d& v, const SolvsolitonParams& params) {
    const Eigen::Vector2d e = einstein_field({v[0], v[1]}, params);
    return {e[0], e[1], 2.0 * v[2] * (params.tr_d * v[1] / params.n - v[0])};
}

// Point at parameter t on the unstable manifold along the ray through u:
// gamma = base + sum_k t^k a_k, with t ~ e^{rate s}. For a quadratic field with
// bilinear part B the coefficients satisfy (k rate - J) a_k = sum_{i+j=k} B(a_i, a_j).
Eigen::VectorXd manifold_point(const Field& f, const Eigen::VectorXd& base, const Eigen::VectorXd& u,
                               double rate, double t, int order = 8) {
    const Eigen::Index dim = base.size();
    const Eigen::VectorXd f0 = f(base);
    Eigen::MatrixXd J(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(dim, k);
        J.col(k) = 0.5 * (f(base + e) - f(base - e));
    }
    auto quad = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return 0.5 * (f(base + v) + f(base - v)) - f0;
    };
    auto bilinear = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) -> Eigen::VectorXd {
        return 0.25 * (quad(a + b) - quad(a - b));
    };
    std::vector<Eigen::VectorXd> a{Eigen::VectorXd::Zero(dim), u};
    Eigen::VectorXd dev = t * u;
    double tk = t;
    for (int k = 2; k <= order; ++k) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        for (int i = 1; i < k; ++i) rhs += bilinear(a[i], a[k - i]);
        const Eigen::MatrixXd A = k * rate * Eigen::MatrixXd::Identity(dim, dim) - J;
        a.push_back(A.fullPivLu().solve(rhs));
        tk *= t;
        dev += tk * a.back();
    }
    return dev;
}

// Backward integration toward a saddle in deviation coordinates d = gamma - base.
// The field is quadratic, so f(base + d) = J d + |d|^2 Q(d/|d|) with J and Q
// recovered exactly from unit-scale central differences; rounding is then
// relative to |d| instead of |base|, which the stable directions would amplify.
Trajectory integrate_deviation(const Field& f, const Eigen::VectorXd& base, const Eigen::VectorXd& dev0,
                               double s_start, double s_end, const IntegrateOptions& opts,
                               const std::vector<EventSpec>& specs) {
    const Eigen::Index dim = base.size();
    const Eigen::VectorXd f0 = f(base);
    Eigen::MatrixXd J(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(dim, k);
        J.col(k) = 0.5 * (f(base + e) - f(base - e));
    }
    const Field g = [&, f0, J](const Eigen::VectorXd& d) -> Eigen::VectorXd {
        const double r = d.norm();
        if (r == 0.0) return Eigen::VectorXd::Zero(d.size());
        const Eigen::VectorXd u = d / r;
        return J * d + r * r * (0.5 * (f(base + u) + f(base - u)) - f0);
    };
    std::vector<EventSpec> shifted;
    for (const auto& spec : specs) {
        EventSpec s = spec;
        s.g = [inner = spec.g, &base](const Eigen::VectorXd& d) { return inner(base + d); };
        shifted.push_back(std::move(s));
    }
    IntegrateOptions o = opts;
    o.abs_tol = std::min(opts.abs_tol, opts.rel_tol * opts.capture_radius);
    Trajectory t = integrate_field(g, dev0, s_start, s_end, o, shifted);
    for (auto& v : t.states) v += base;
    for (auto& e : t.events) e.state += base;
    for (auto& seg : t.dense) seg.coeff[0] += base;
    return t;
}

struct Legs {
    Trajectory backward, forward;
};

Legs integrate_legs(SystemKind system, const SolvsolitonParams& params, const Eigen::VectorXd& base,
                    const Eigen::VectorXd& dev0, double s_launch, double s_back, double s_fwd,
                    const IntegrateOptions& opts) {
    Legs legs;
    const Field f = system_field(system, params);
    legs.backward = integrate_deviation(f, base, dev0, s_launch, s_back, opts,
                                        system_events(system, params, opts));
    legs.forward = integrate(system, params, base + dev0, s_launch, s_fwd, opts);
    return legs;
}

bool stays_in_K(const Trajectory& t, const SolvsolitonParams& params) {
    for (const auto& q : t.states)
        if (!in_region_K({q[0], q[1]}, params, kKTolerance)) return false;
    return true;
}

}  // namespace

double launch_time(double delta, double rate, bool canonical) {
    if (!canonical || delta <= 0.0) return 0.0;
    return std::log(delta) / rate;
}

bool theta_admissible(double theta, const EigenData& eig) {
    return theta > -std::numbers::pi / 2 && theta < eig.theta0;
}

Shot shoot_direction(const Eigen::Vector4d& direction, const SolvsolitonParams& params,
                     const ShotConfig& config) {
    if (!(config.delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
    const double eps_plus = unstable_eigenvalues(params).first;
    const PhasePoint gs = stationary_point(params, Stationary::SPlus);

    Shot shot;
    shot.direction = direction.normalized();
    const Eigen::VectorXd base = gs.vec();
    const Eigen::VectorXd dev0 = manifold_point(system_field(SystemKind::Full, params), base,
                                                shot.direction, eps_plus, config.delta);
    shot.launch = PhasePoint::from(base + dev0);
    shot.s_launch = launch_time(config.delta, eps_plus, config.canonical_time);

    Legs legs = integrate_legs(SystemKind::Full, params, base, dev0, shot.s_launch,
                               backward_end(shot.s_launch, config.delta, eps_plus, config),
                               std::max(config.s_forward, shot.s_launch), config.opts);
    shot.forward = std::move(legs.forward);
    shot.backward = std::move(legs.backward);
    shot.trajectory = join_legs(shot.backward, shot.forward);

    const Event* cap = shot.backward.first(EventKind::Captured);
    shot.captured_backward = cap && cap->detail == static_cast<int>(Stationary::SPlus);
    shot.capture_distance = (shot.backward.states.back() - gs.vec()).norm();
    return shot;
}

Shot shoot_family(const SolvsolitonParams& params, const ShotConfig& config) {
    const EigenData eig = unstable_eigendata(params);
    if (!theta_admissible(config.theta, eig)) {
        throw Error(ErrorKind::OutsideAdmissibleRange,
                    "theta = " + std::to_string(config.theta) + " is outside (-pi/2, " +
                        std::to_string(eig.theta0) + ")");
    }
    Shot shot = shoot_direction(direction_from_angle(config.theta, eig), params, config);
    if (!shot.captured_backward) {
        throw Error(ErrorKind::CaptureFailed, "backward leg did not reach gamma^S");
    }
    if (shot.forward.count(EventKind::OmegaExit) > 0) {
        const Event* e = shot.forward.first(EventKind::OmegaExit);
        throw Error(ErrorKind::PropertyViolated,
                    "forward leg left Omega at s = " + std::to_string(e->s) + " (bound " +
                        std::to_string(e->detail) + ")");
    }
    if (shot.forward.count(EventKind::WMinusNXSignChange) > 0) {
        throw Error(ErrorKind::PropertyViolated, "w - n x changed sign on the forward leg");
    }
    if (shot.forward.count(EventKind::Blowup) > 0 || shot.forward.stats.step_underflow) {
        throw Error(ErrorKind::PropertyViolated, "forward leg did not reach the end of the span");
    }
    return shot;
}

EinsteinShot shoot_einstein(const SolvsolitonParams& params, const ShotConfig& config) {
    if (!(config.delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
    const double n = params.n;
    const double eps_plus = unstable_eigenvalues(params).first;

    EinsteinShot shot;
    shot.direction = einstein_unstable_direction(params);
    const Eigen::Vector2d gs(1.0 / n, 1.0);
    const Eigen::Vector2d gh(std::sqrt(-params.lambda / n), 0.0);
    const Eigen::Vector2d dev0 = manifold_point(system_field(SystemKind::Einstein, params), gs,
                                                shot.direction, eps_plus, config.delta);
    const Eigen::Vector2d q0 = gs + dev0;
    // Same clock as the 4D shots: the 4D offset is delta |T u|.
    const double offset4 = config.delta * einstein_tangent_at_gamma_s(shot.direction, params).norm();
    shot.s_launch = launch_time(offset4, eps_plus, config.canonical_time);
    const double s_back = backward_end(shot.s_launch, offset4, eps_plus, config);
    const double s_fwd = std::max(config.s_forward, shot.s_launch);

    IntegrateOptions opts = config.opts;
    Legs legs = integrate_legs(SystemKind::Einstein, params, gs, dev0, shot.s_launch, s_back, s_fwd, opts);
    if (!stays_in_K(legs.backward, params) || !stays_in_K(legs.forward, params)) {
        shot.retried = true;
        opts.rel_tol = std::min(opts.rel_tol, 1e-12);
        opts.abs_tol = std::min(opts.abs_tol, 1e-14);
        legs = integrate_legs(SystemKind::Einstein, params, gs, dev0, shot.s_launch, s_back, s_fwd, opts);
        if (!stays_in_K(legs.backward, params) || !stays_in_K(legs.forward, params)) {
            throw Error(ErrorKind::LeftK, "Einstein shot left K at tightened tolerance");
        }
    }
    const Event* cap = legs.forward.first(EventKind::Captured);
    if (!cap || cap->detail != 2) {
        throw Error(ErrorKind::CaptureFailed, "Einstein shot did not reach gamma^H");
    }
    shot.capture_distance = (legs.forward.states.back() - gh).norm();
    if (shot.capture_distance > 1e-6) {
        throw Error(ErrorKind::CaptureFailed, "Einstein shot ended away from gamma^H");
    }
    shot.planar = join_legs(legs.backward, legs.forward);

    shot.x_monotone = shot.y_monotone = true;
    for (std::size_t i = 1; i < shot.planar.size(); ++i) {
        const auto& a = shot.planar.states[i - 1];
        const auto& b = shot.planar.states[i];
        if (b[0] < a[0] - kMonotoneSlack) shot.x_monotone = false;
        if (b[1] > a[1] + kMonotoneSlack) shot.y_monotone = false;
    }

    shot.embedded.dim = 4;
    shot.embedded.times = shot.planar.times;
    for (const auto& e : shot.planar.events) {
        shot.embedded.events.push_back(
            {e.s, e.kind, e.detail, embed_einstein({e.state[0], e.state[1]}, params).vec()});
    }
    shot.embedded.stats = shot.planar.stats;
    for (const auto& q : shot.planar.states)
        shot.embedded.states.emplace_back(embed_einstein({q[0], q[1]}, params).vec());

    // z carried as an independent variable must stay on the level set.
    const Eigen::Vector3d a_base(gs[0], gs[1], einstein_z({gs[0], gs[1]}, params));
    const Eigen::Vector3d a_dev(dev0[0], dev0[1], einstein_z({q0[0], q0[1]}, params) - a_base[2]);
    const Field aug = [&params](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return einstein_augmented(v, params);
    };
    IntegrateOptions aopts = opts;
    aopts.capture_points = std::vector<Eigen::VectorXd>{};
    const Trajectory aug_back =
        integrate_deviation(aug, a_base, a_dev, shot.s_launch, shot.planar.times.front(), aopts, {});
    const Trajectory aug_fwd =
        integrate_field(aug, a_base + a_dev, shot.s_launch, shot.planar.times.back(), aopts, {});
    for (const Trajectory* t : {&aug_back, &aug_fwd}) {
        for (const auto& v : t->states) {
            shot.z_drift = std::max(shot.z_drift, std::abs(v[2] - einstein_z({v[0], v[1]}, params)));
        }
    }
    return shot;
}

NoScalShot shoot_noscal(double lambda, const ShotConfig& config) {
    if (config.delta < 0.0) throw Error(ErrorKind::InvalidArgument, "delta must be non-negative");
    const double mu = noscal_unstable_eigenvalue(lambda);
    NoScalShot shot;
    shot.direction = noscal_unstable_direction(lambda);
    shot.s_launch = launch_time(config.delta, mu, config.canonical_time);
    SolvsolitonParams p;
    p.lambda = lambda;
    const Eigen::Vector2d base(1.0, 1.0);
    const Eigen::Vector2d q0 =
        base + manifold_point(system_field(SystemKind::NoScal, p), base, shot.direction, mu, config.delta);

    IntegrateOptions opts = config.opts;
    if (config.delta == 0.0) opts.capture_points = std::vector<Eigen::VectorXd>{};
    shot.trajectory = integrate(SystemKind::NoScal, p, q0, shot.s_launch,
                                std::max(config.s_forward, shot.s_launch), opts);
    if (shot.trajectory.count(EventKind::Blowup) > 0 || shot.trajectory.stats.step_underflow) {
        throw Error(ErrorKind::PropertyViolated, "no-scal shot did not reach the end of the span");
    }
    return shot;
}

Trajectory embed_noscal_trajectory(const Trajectory& t, const SolvsolitonParams& params) {
    if (t.dim != 2) throw Error(ErrorKind::InvalidArgument, "expected a no-scal trajectory");
    const double kx = params.tr_d / params.n;
    auto lift = [&](const Eigen::VectorXd& q, double z) {
        return Eigen::VectorXd(Eigen::Vector4d(kx * q[0], q[0], z, q[1]));
    };
    Trajectory out;
    out.dim = 4;
    out.times = t.times;
    out.stats = t.stats;
    for (const auto& q : t.states) out.states.push_back(lift(q, params.s0));
    for (const auto& e : t.events) out.events.push_back({e.s, e.kind, e.detail, lift(e.state, params.s0)});
    for (const auto& seg : t.dense) {
        DenseSegment d;
        d.s_start = seg.s_start;
        d.h = seg.h;
        d.coeff[0] = lift(seg.coeff[0], params.s0);
        for (int k = 1; k < 5; ++k) d.coeff[k] = lift(seg.coeff[k], 0.0);
        out.dense.push_back(std::move(d));
    }
    return out;
}

MetricProfile reconstruct(const Trajectory& t, const SolvsolitonParams& params) {
    if (t.dim != 4 || t.empty()) throw Error(ErrorKind::InvalidArgument, "expected a full-system trajectory");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t.states[i][2] < 0.0)) {
            throw Error(ErrorKind::NonNegativeZ, "z >= 0 at s = " + std::to_string(t.times[i]));
        }
    }
    const std::size_t N = t.size();
    const double n = params.n;
    MetricProfile prof;
    prof.s = t.times;
    prof.c.resize(N);
    prof.h.assign(N, 0.0);
    prof.f_prime.resize(N);
    prof.L_spectrum.resize(N);

    std::vector<double> dy(N);
    for (std::size_t i = 0; i < N; ++i) {
        const PhasePoint p = t.point(i);
        prof.c[i] = std::sqrt(params.s0 / p.z);
        prof.f_prime[i] = p.w - n * p.x;
        dy[i] = vector_field(p, params)[1];
        auto& L = prof.L_spectrum[i];
        for (double d : params.d_spectrum) L.push_back(p.x + p.y * (d - params.tr_d / n));
    }
    auto step = [&](std::size_t i) {  // integral of y over [s_i, s_{i+1}]
        const double h = t.times[i + 1] - t.times[i];
        return 0.5 * h * (t.states[i][1] + t.states[i + 1][1]) + h * h / 12.0 * (dy[i] - dy[i + 1]);
    };
    const std::size_t anchor = nearest_index(t.times, 0.0);
    for (std::size_t i = anchor + 1; i < N; ++i) prof.h[i] = prof.h[i - 1] + step(i - 1);
    for (std::size_t i = anchor; i-- > 0;) prof.h[i] = prof.h[i + 1] - step(i);

    try {
        prof.phi = monitor_phi(t, params).phi;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotCaptured) throw;
    }
    return prof;
}

SolitonResidual soliton_residual(const MetricProfile& profile, const Trajectory& t,
                                 const SolvsolitonParams& params, const VectorField4& field) {
    if (t.dim != 4 || profile.s.size() != t.size()) {
        throw Error(ErrorKind::InvalidArgument, "profile does not match the trajectory");
    }
    const double n = params.n;
    SolitonResidual res;
    res.shape.resize(t.size());
    res.potential.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const PhasePoint p = t.point(i);
        const Eigen::Vector4d dp = field(p, params);
        const double fp = profile.f_prime[i];
        const double fpp = dp[3] - n * dp[0];
        const double ratio = p.z / params.s0;
        double trL = 0.0, trL2 = 0.0, trdL = 0.0, worst = 0.0;
        for (std::size_t k = 0; k < params.d_spectrum.size(); ++k) {
            const double d0 = params.d_spectrum[k] - params.tr_d / n;
            const double ell = p.x + p.y * d0;
            trL += ell;
            trL2 += ell * ell;
            trdL += dp[0] + dp[1] * d0;
        }
        for (std::size_t k = 0; k < params.d_spectrum.size(); ++k) {
            const double d = params.d_spectrum[k];
            const double d0 = d - params.tr_d / n;
            const double ell = p.x + p.y * d0;
            const double dell = dp[0] + dp[1] * d0;
            const double r = ratio * (params.lambda0 + d);
            worst = std::max(worst, std::abs(dell + fp * ell - r + trL * ell + params.lambda));
        }
        res.shape[i] = worst;
        res.potential[i] = std::abs(trdL + fpp + params.lambda + trL2);
        res.sup_shape = std::max(res.sup_shape, res.shape[i]);
        res.sup_potential = std::max(res.sup_potential, res.potential[i]);
    }
    return res;
}

ShiftReport shift_covariance(const SolvsolitonParams& params, const ShotConfig& config,
                             double compare_span) {
    const EigenData eig = unstable_eigendata(params);
    const Eigen::Vector4d v = direction_from_angle(config.theta, eig);
    ShotConfig a = config;
    a.canonical_time = false;
    ShotConfig b = a;
    b.delta = 0.5 * a.delta;
    const Shot sa = shoot_direction(v, params, a);
    const Shot sb = shoot_direction(v, params, b);

    const double level = 0.5 * params.s0;
    const double ta = crossing_time(sa.forward, 2, level);
    const double tb = crossing_time(sb.forward, 2, level);

    ShiftReport rep;
    rep.expected_shift = std::log(2.0) / eig.eps_plus;
    rep.measured_shift = tb - ta;
    rep.relative_error = std::abs(rep.measured_shift - rep.expected_shift) / rep.expected_shift;

    const double hi = std::min({ta + compare_span, sa.forward.times.back(),
                                sb.forward.times.back() - rep.measured_shift});
    const double lo = 0.0;
    const int samples = 4000;
    for (int k = 0; k <= samples; ++k) {
        const double s = lo + (hi - lo) * k / samples;
        rep.sup_distance = std::max(rep.sup_distance,
                                    (sa.forward.eval(s) - sb.forward.eval(s + rep.measured_shift)).norm());
    }
    return rep;
}

}  // namespace solvflow
