#include "solvflow/verify.hpp"

#include "solvflow/asymptotics.hpp"
#include "solvflow/construct.hpp"
#include "solvflow/error.hpp"
#include "solvflow/flow.hpp"
#include "solvflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <numbers>
#include <random>
#include <sstream>

namespace solvflow {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

CheckResult check(std::string name, bool ok, std::string detail) {
    return {std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, std::move(detail)};
}

// Runs one check, turning exceptions into failures.
void run(std::vector<CheckResult>& out, const std::string& name, const std::function<CheckResult()>& f) {
    try {
        out.push_back(f());
    } catch (const std::exception& e) {
        out.push_back({name, CheckStatus::Fail, e.what()});
    }
}

IntegrateOptions plain(IntegrateOptions o) {
    o.capture_points = std::vector<Eigen::VectorXd>{};
    o.monitor_omega = false;
    o.monitor_w_minus_nx = false;
    return o;
}

double sup_on_grid(double span, const std::function<double(double)>& f, int m = 1000) {
    double worst = 0.0;
    for (int k = 0; k <= m; ++k) worst = std::max(worst, f(span * k / m));
    return worst;
}

}  // namespace

double jacobian_fd_error(const SolvsolitonParams& params, int samples, unsigned seed, double box) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-box, box);
    const double h = 1e-5;
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Eigen::Vector4d p(U(rng), U(rng), U(rng), U(rng));
        const Eigen::Matrix4d J = jacobian(PhasePoint::from(p), params);
        Eigen::Matrix4d fd;
        for (int k = 0; k < 4; ++k) {
            const Eigen::Vector4d e = h * Eigen::Vector4d::Unit(k);
            fd.col(k) = (vector_field(PhasePoint::from(p + e), params) -
                         vector_field(PhasePoint::from(p - e), params)) / (2.0 * h);
        }
        worst = std::max(worst, (J - fd).norm() / std::max(1.0, J.norm()));
    }
    return worst;
}

double reflection_conjugacy_error(const SolvsolitonParams& params, const Eigen::Vector4d& p0, double span) {
    const IntegrateOptions o = plain({});
    const Trajectory fwd = integrate(SystemKind::Full, params, p0, 0.0, span, o);
    const Trajectory bwd = integrate(SystemKind::Full, params, reflect(PhasePoint::from(p0)).vec(), 0.0, -span, o);
    if (fwd.times.back() != span || bwd.times.back() != -span) {
        throw Error(ErrorKind::PropertyViolated, "reflection test trajectories stopped early");
    }
    return sup_on_grid(span, [&](double s) {
        return (reflect(PhasePoint::from(fwd.eval(s))).vec() - bwd.eval(-s)).norm();
    });
}

double rescaling_error(const SolvsolitonParams& params, double lambda2, const Eigen::Vector4d& p0, double span) {
    const IntegrateOptions o = plain({});
    const SolvsolitonParams p2 = params.with_lambda(lambda2);
    const double k = std::sqrt(lambda2 / params.lambda);
    const Trajectory a = integrate(SystemKind::Full, params, p0, 0.0, span, o);
    const auto [q0, s0] = rescale_lambda(PhasePoint::from(p0), 0.0, params.lambda, lambda2);
    const Trajectory b = integrate(SystemKind::Full, p2, q0.vec(), s0, span / k, o);
    if (a.times.back() != span || std::abs(b.times.back() - span / k) > 1e-12 * span) {
        throw Error(ErrorKind::PropertyViolated, "rescaling test trajectories stopped early");
    }
    return sup_on_grid(span, [&](double s) {
        const auto [q, t] = rescale_lambda(PhasePoint::from(a.eval(s)), s, params.lambda, lambda2);
        return (q.vec() - b.eval(std::min(t, b.times.back()))).norm();
    });
}

std::vector<double> omega_check_angles(double theta0) {
    std::vector<double> out;
    const EigenData dummy{0, 0, {}, {}, theta0};
    for (double th : {-1.4, -0.7, 0.0, theta0 / 2})
        if (theta_admissible(th, dummy) && std::find(out.begin(), out.end(), th) == out.end()) out.push_back(th);
    if (out.size() < 3) {
        for (double th : sweep_grid(theta0, 3)) out.push_back(th);
    }
    return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
    return std::none_of(results.begin(), results.end(),
                        [](const CheckResult& r) { return r.status == CheckStatus::Fail; });
}

std::vector<CheckResult> verify_preset(const Preset& preset, const VerifyOptions& vo) {
    std::vector<CheckResult> out;
    const SolvsolitonParams& P = preset.params;
    const double n = P.n;

    run(out, "lie_algebra", [&] {
        const double jac = preset.algebra.jacobi_residual();
        const double der = preset.detection.derivation_residual;
        return check("lie_algebra", jac <= 1e-12 && der <= 1e-10,
                     "Jacobi " + fmt(jac) + ", derivation residual " + fmt(der));
    });
    run(out, "normalization", [&] {
        double sd = 0, sd2 = 0;
        for (double d : P.d_spectrum) {
            sd += d;
            sd2 += d * d;
        }
        const double err = std::max({std::abs(sd - 1.0), std::abs(P.lambda0 + sd2 / sd),
                                     std::abs(P.s0 - (P.lambda0 * n + P.tr_d))});
        return check("normalization", err <= 1e-12, "tr D = 1, lambda0 = -tr D^2, s0 = n lambda0 + 1 to " + fmt(err));
    });

    if (P.lambda > -1.0 && P.lambda < 0.0) {
        run(out, "noscal", [&] {
            ShotConfig c;
            c.s_forward = 200.0;
            c.opts = vo.opts;
            const NoScalShot shot = shoot_noscal(P.lambda, c);
            const auto& q = shot.trajectory.states.back();
            const double s = shot.trajectory.times.back();
            const double wr = q[1] / (-P.lambda * s);
            const double yr = q[0] * (-P.lambda * s);
            return check("noscal", std::abs(wr - 1) <= 0.05 && std::abs(yr - 1) <= 0.10,
                         "w/(-lambda s) = " + fmt(wr) + ", y (-lambda s) = " + fmt(yr) + " at s = " + fmt(s));
        });
    } else {
        out.push_back({"noscal", CheckStatus::Skip, "lambda outside (-1, 0)"});
    }

    if (P.scalar_flat) {
        for (const char* name : {"stationarity", "eigenvalues", "jacobian_fd", "omega_invariance",
                                 "potential_identity", "soliton_residual", "metric_profile",
                                 "einstein_connection", "hyperbolic_end", "forward_rates", "symmetries",
                                 "shift_covariance"}) {
            out.push_back({name, CheckStatus::Skip, "scalar-flat: the full flow divides by s0 = 0"});
        }
        return out;
    }

    run(out, "stationarity", [&] {
        double worst = 0.0;
        for (const auto& p : stationary_points(P)) worst = std::max(worst, vector_field(p, P).norm());
        return check("stationarity", worst <= 1e-13, "max |F| at stationary points " + fmt(worst));
    });
    run(out, "eigenvalues", [&] {
        const auto [ep, em] = unstable_eigenvalues(P);
        Eigen::EigenSolver<Eigen::Matrix4d> es(jacobian(stationary_point(P, Stationary::SPlus), P));
        std::vector<double> re;
        double imag = 0.0;
        for (int i = 0; i < 4; ++i) {
            re.push_back(es.eigenvalues()[i].real());
            imag = std::max(imag, std::abs(es.eigenvalues()[i].imag()));
        }
        std::sort(re.begin(), re.end());
        const double err = std::max({std::abs(re[0] - em), std::abs(re[1] - em), std::abs(re[2] - ep),
                                     std::abs(re[3] - ep), imag});
        return check("eigenvalues", err <= 1e-10, "eps+ = " + fmt(ep) + ", eps- = " + fmt(em) + ", error " + fmt(err));
    });
    run(out, "jacobian_fd", [&] {
        const double err = jacobian_fd_error(P, 100, vo.seed);
        return check("jacobian_fd", err <= 1e-6, "max relative error " + fmt(err));
    });

    const EigenData eig = unstable_eigendata(P);
    std::vector<Shot> shots;
    run(out, "omega_invariance", [&] {
        std::string detail;
        for (double th : omega_check_angles(eig.theta0)) {
            ShotConfig c;
            c.theta = th;
            c.s_forward = 100.0;
            c.opts = vo.opts;
            shots.push_back(shoot_family(P, c));
            detail += (detail.empty() ? "theta = " : ", ") + fmt(th);
        }
        return check("omega_invariance", true, detail + ": no exits to s = 100");
    });
    run(out, "potential_identity", [&] {
        if (shots.empty()) throw Error(ErrorKind::PropertyViolated, "no shots to check");
        double sup = 0.0, minpos = std::numeric_limits<double>::infinity();
        for (const auto& s : shots) {
            const PhiReport ph = monitor_phi(s.trajectory, P);
            sup = std::max(sup, ph.sup_residual);
            for (std::size_t i = 0; i < ph.phi.size(); ++i)
                minpos = std::min({minpos, ph.phi[i], ph.dphi[i], ph.d2phi[i]});
        }
        return check("potential_identity", sup <= 1e-6 && minpos > 0.0,
                     "sup residual " + fmt(sup) + ", min(Phi, Phi', Phi'') " + fmt(minpos));
    });
    run(out, "soliton_residual", [&] {
        if (shots.empty()) throw Error(ErrorKind::PropertyViolated, "no shots to check");
        double sup = 0.0, mutated = 0.0;
        const VectorField4 broken = [](const PhasePoint& p, const SolvsolitonParams& q) {
            Eigen::Vector4d f = vector_field(p, q);
            f[1] = -f[1];
            return f;
        };
        for (const auto& s : shots) {
            const MetricProfile prof = reconstruct(s.trajectory, P);
            sup = std::max(sup, soliton_residual(prof, s.trajectory, P).sup());
            mutated = std::max(mutated, soliton_residual(prof, s.trajectory, P, broken).sup());
        }
        return check("soliton_residual", sup <= 1e-9 && mutated > 1e-2,
                     "sup " + fmt(sup) + ", mutated field " + fmt(mutated));
    });
    run(out, "metric_profile", [&] {
        if (shots.empty()) throw Error(ErrorKind::PropertyViolated, "no shots to check");
        double cz = 0.0, minL = std::numeric_limits<double>::infinity();
        bool c_monotone = true;
        for (const auto& s : shots) {
            const MetricProfile prof = reconstruct(s.trajectory, P);
            for (std::size_t i = 0; i < prof.s.size(); ++i) {
                cz = std::max(cz, std::abs(prof.c[i] * prof.c[i] * s.trajectory.states[i][2] - P.s0));
                for (double l : prof.L_spectrum[i]) minL = std::min(minL, l);
                if (i > 0 && prof.c[i] < prof.c[i - 1]) c_monotone = false;
            }
        }
        return check("metric_profile", cz <= 1e-12 && minL > 0.0 && c_monotone,
                     "|c^2 z - s0| " + fmt(cz) + ", min L eigenvalue " + fmt(minL) +
                         (c_monotone ? ", c increasing" : ", c NOT increasing"));
    });

    std::optional<EinsteinShot> es;
    run(out, "einstein_connection", [&] {
        ShotConfig c;
        c.opts = vo.opts;
        es = shoot_einstein(P, c);
        const bool ok = es->capture_distance <= 1e-6 && es->z_drift <= 1e-9 && es->x_monotone && es->y_monotone;
        return check("einstein_connection", ok,
                     "capture " + fmt(es->capture_distance) + ", z drift " + fmt(es->z_drift) +
                         (es->x_monotone && es->y_monotone ? ", monotone" : ", NOT monotone"));
    });
    run(out, "hyperbolic_end", [&] {
        if (!es) throw Error(ErrorKind::PropertyViolated, "no Einstein shot");
        const MetricProfile prof = reconstruct(es->embedded, P);
        const double end = prof.s.back();
        const double slope = log_c_slope(prof, end - 10.0, end);
        const double target = std::sqrt(-P.lambda / n);
        const double rel = std::abs(slope - target) / target;
        return check("hyperbolic_end", rel <= 0.02, "log c slope " + fmt(slope) + " vs " + fmt(target));
    });
    run(out, "forward_rates", [&] {
        ShotConfig c;
        c.theta = theta_admissible(0.0, eig) ? 0.0 : sweep_grid(eig.theta0, 3)[1];
        c.s_forward = vo.s_forward;
        c.opts = vo.opts;
        const Shot shot = shoot_family(P, c);
        const RateReport r = fit_rates(shot.trajectory, P);
        const ZLimit z = classify_z_limit(shot.trajectory, P);
        const double w = r.fit("w/(-lambda s)").relative_error;
        const double x = r.fit("x s").relative_error;
        const bool ok = w <= 0.05 && x <= 0.05 && r.alpha > 0.0 && r.alpha_variation <= 0.10 &&
                        r.y_decay_ratio < 1.0 && z.z0 == 0.0;
        return check("forward_rates", ok,
                     "s_end " + fmt(c.s_forward) + ": w " + fmt(w) + ", x " + fmt(x) + ", alpha " + fmt(r.alpha) +
                         " (variation " + fmt(r.alpha_variation) + "), y s^2 ratio " + fmt(r.y_decay_ratio) +
                         ", z0 = " + fmt(z.z0));
    });
    run(out, "symmetries", [&] {
        const Eigen::Vector4d p0(0.3, 0.15 * n, 0.5 * P.s0, 0.3 * n + 0.5);
        const double refl = reflection_conjugacy_error(P, p0, 5.0);
        const double resc = rescaling_error(P, 2.0 * P.lambda, p0, 5.0);
        return check("symmetries", refl <= 1e-7 && resc <= 1e-7,
                     "reflection " + fmt(refl) + ", lambda rescaling " + fmt(resc));
    });
    run(out, "shift_covariance", [&] {
        ShotConfig c;
        c.opts = vo.opts;
        const ShiftReport r = shift_covariance(P, c);
        return check("shift_covariance", r.relative_error <= 0.01 && r.sup_distance <= 1e-5,
                     "shift " + fmt(r.measured_shift) + " vs " + fmt(r.expected_shift) + ", sup distance " +
                         fmt(r.sup_distance));
    });
    return out;
}

}  // namespace solvflow
