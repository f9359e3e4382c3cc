#include "solvflow/integrate.hpp"

#include "solvflow/error.hpp"

#include <algorithm>
#include <cmath>

namespace solvflow {

namespace {

// Dormand-Prince 5(4) tableau (Hairer, Norsett & Wanner, DOPRI5).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0, const Eigen::VectorXd& y1,
                  double rtol, double atol) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sk = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        sum += (err[i] / sk) * (err[i] / sk);
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double initial_step(const Field& f, const Eigen::VectorXd& y0, const Eigen::VectorXd& f0,
                    double direction, double rtol, double atol, double max_step, long& nfev) {
    auto scaled = [&](const Eigen::VectorXd& v) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double sk = atol + rtol * std::abs(y0[i]);
            s += (v[i] / sk) * (v[i] / sk);
        }
        return std::sqrt(s / static_cast<double>(v.size()));
    };
    const double dnf = scaled(f0);
    const double dny = scaled(y0);
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min(h, max_step);
    const Eigen::VectorXd y1 = y0 + direction * h * f0;
    const Eigen::VectorXd f1 = f(y1);
    ++nfev;
    const double der2 = scaled(f1 - f0) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                      : std::pow(0.01 / der12, 0.2);
    return std::min({100 * std::abs(h), h1, max_step});
}

struct PendingEvent {
    double s;
    std::size_t spec;
    int sign_after;
};

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::OmegaExit: return "OmegaExit";
        case EventKind::WMinusNXSignChange: return "WMinusNXSignChange";
        case EventKind::Blowup: return "Blowup";
        case EventKind::Captured: return "Captured";
        case EventKind::MaxTime: return "MaxTime";
    }
    return "Unknown";
}

Eigen::VectorXd DenseSegment::eval(double s) const {
    const double theta = h == 0.0 ? 0.0 : (s - s_start) / h;
    const double theta1 = 1.0 - theta;
    return coeff[0] + theta * (coeff[1] + theta1 * (coeff[2] + theta * (coeff[3] + theta1 * coeff[4])));
}

Eigen::VectorXd Trajectory::eval(double s) const {
    if (dense.empty()) {
        throw Error(ErrorKind::InvalidArgument, "trajectory carries no dense output");
    }
    const double lo = std::min(times.front(), times.back());
    const double hi = std::max(times.front(), times.back());
    const double slack = 1e-12 * std::max(1.0, std::abs(hi));
    if (s < lo - slack || s > hi + slack) {
        throw Error(ErrorKind::InvalidArgument, "evaluation time outside the trajectory span");
    }
    // Segments are stored in the order they were produced; for joined or
    // backward trajectories they are sorted by lo() during construction.
    auto it = std::lower_bound(dense.begin(), dense.end(), s,
                               [](const DenseSegment& seg, double v) { return seg.hi() < v; });
    if (it == dense.end()) it = std::prev(dense.end());
    return it->eval(s);
}

std::size_t Trajectory::count(EventKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [&](const Event& e) { return e.kind == kind; }));
}

const Event* Trajectory::first(EventKind kind) const {
    for (const auto& e : events)
        if (e.kind == kind) return &e;
    return nullptr;
}

void Trajectory::shift_time(double ds) {
    for (double& s : times) s += ds;
    for (auto& e : events) e.s += ds;
    for (auto& seg : dense) seg.s_start += ds;
}

Trajectory join_legs(const Trajectory& backward, const Trajectory& forward) {
    Trajectory out;
    out.dim = forward.dim;
    for (std::size_t i = backward.size(); i-- > 1;) {
        out.times.push_back(backward.times[i]);
        out.states.push_back(backward.states[i]);
    }
    out.times.insert(out.times.end(), forward.times.begin(), forward.times.end());
    out.states.insert(out.states.end(), forward.states.begin(), forward.states.end());

    for (auto it = backward.events.rbegin(); it != backward.events.rend(); ++it) {
        if (it->kind != EventKind::MaxTime) out.events.push_back(*it);
    }
    out.events.insert(out.events.end(), forward.events.begin(), forward.events.end());

    // backward dense segments are already sorted by time
    out.dense = backward.dense;
    out.dense.insert(out.dense.end(), forward.dense.begin(), forward.dense.end());

    out.stats = forward.stats;
    out.stats.accepted += backward.stats.accepted;
    out.stats.rejected += backward.stats.rejected;
    out.stats.evaluations += backward.stats.evaluations;
    out.stats.step_underflow = forward.stats.step_underflow || backward.stats.step_underflow;
    return out;
}

Trajectory integrate_field(const Field& field, const Eigen::VectorXd& p0, double s_start,
                           double s_end, const IntegrateOptions& opts,
                           const std::vector<EventSpec>& specs) {
    if (!all_finite(p0)) throw Error(ErrorKind::InvalidArgument, "initial state is not finite");
    if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
    }

    Trajectory traj;
    traj.dim = static_cast<int>(p0.size());
    traj.stats.rel_tol = opts.rel_tol;
    traj.stats.abs_tol = opts.abs_tol;
    traj.times.push_back(s_start);
    traj.states.push_back(p0);

    // Last nonzero sign of each event function.
    std::vector<int> last_sign(specs.size(), 0);
    bool stop = false;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const double g = specs[i].g(p0);
        last_sign[i] = g > 0 ? 1 : (g < 0 ? -1 : 0);
        if (specs[i].trigger == EventSpec::Trigger::Falling && g <= 0.0) {
            traj.events.push_back({s_start, specs[i].kind, specs[i].detail, p0});
            if (specs[i].terminal) stop = true;
        }
    }
    if (stop || s_start == s_end) {
        if (!stop) traj.events.push_back({s_start, EventKind::MaxTime, -1, p0});
        return traj;
    }

    const double direction = s_end > s_start ? 1.0 : -1.0;
    const int dim = traj.dim;
    Eigen::VectorXd y = p0;
    Eigen::VectorXd k1 = field(y), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    long nfev = 1;
    double s = s_start;
    double h = opts.initial_step > 0.0
                   ? opts.initial_step
                   : initial_step(field, y, k1, direction, opts.rel_tol, opts.abs_tol, opts.max_step, nfev);
    bool last_rejected = false;
    long steps = 0;

    while (!stop) {
        if (++steps > opts.max_steps) {
            traj.stats.step_underflow = true;
            break;
        }
        const double remaining = std::abs(s_end - s);
        bool hits_end = false;
        if (h >= remaining) {
            h = remaining;
            hits_end = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(s))) {
            traj.stats.step_underflow = true;
            break;
        }
        const double hs = direction * h;

        k2 = field(y + hs * a21 * k1);
        k3 = field(y + hs * (a31 * k1 + a32 * k2));
        k4 = field(y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = field(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = field(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Eigen::VectorXd y_new = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        k7 = field(y_new);
        nfev += 6;

        Eigen::VectorXd err_vec = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err = error_norm(err_vec, y, y_new, opts.rel_tol, opts.abs_tol);
        if (!std::isfinite(err) || !all_finite(y_new)) err = 1e10;

        if (err > 1.0) {
            ++traj.stats.rejected;
            h *= std::max(kFacMin, kSafety * std::pow(err, -0.2));
            last_rejected = true;
            continue;
        }

        DenseSegment seg;
        seg.s_start = s;
        seg.h = hs;
        const Eigen::VectorXd ydiff = y_new - y;
        const Eigen::VectorXd bspl = hs * k1 - ydiff;
        seg.coeff[0] = y;
        seg.coeff[1] = ydiff;
        seg.coeff[2] = bspl;
        seg.coeff[3] = ydiff - hs * k7 - bspl;
        seg.coeff[4] = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        const double s_new = hits_end ? s_end : s + hs;

        // Event detection over the step.
        std::vector<PendingEvent> pending;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const double g_new = specs[i].g(y_new);
            const int sign_new = g_new > 0 ? 1 : (g_new < 0 ? -1 : 0);
            bool fired = false;
            if (specs[i].trigger == EventSpec::Trigger::Falling) {
                fired = last_sign[i] > 0 && g_new <= 0.0;
            } else {
                fired = last_sign[i] != 0 && sign_new != 0 && sign_new != last_sign[i];
            }
            if (fired) {
                // Bisection on the dense output; keep the post-crossing end.
                double before = s, after = s_new;
                const int sign_before = last_sign[i];
                while (std::abs(after - before) > opts.event_time_tol) {
                    const double mid = 0.5 * (before + after);
                    const double gm = specs[i].g(seg.eval(mid));
                    const int sm = gm > 0 ? 1 : (gm < 0 ? -1 : 0);
                    const bool crossed = specs[i].trigger == EventSpec::Trigger::Falling
                                             ? gm <= 0.0
                                             : (sm != 0 && sm != sign_before);
                    if (crossed) after = mid;
                    else before = mid;
                }
                pending.push_back({after, i, sign_new});
            }
            if (sign_new != 0) last_sign[i] = sign_new;
        }
        std::sort(pending.begin(), pending.end(), [&](const PendingEvent& a, const PendingEvent& b) {
            return direction * a.s < direction * b.s;
        });

        double s_stop = s_new;
        for (const auto& pe : pending) {
            if (stop && direction * pe.s > direction * s_stop) break;
            const auto& spec = specs[pe.spec];
            const int detail = spec.kind == EventKind::WMinusNXSignChange ? pe.sign_after : spec.detail;
            traj.events.push_back({pe.s, spec.kind, detail, seg.eval(pe.s)});
            if (spec.terminal && !stop) {
                stop = true;
                s_stop = pe.s;
            }
        }

        ++traj.stats.accepted;
        traj.dense.push_back(seg);
        if (stop) {
            traj.times.push_back(s_stop);
            traj.states.push_back(seg.eval(s_stop));
            break;
        }
        traj.times.push_back(s_new);
        traj.states.push_back(y_new);

        y = std::move(y_new);
        k1 = k7;
        s = s_new;
        if (hits_end) {
            traj.events.push_back({s, EventKind::MaxTime, -1, y});
            break;
        }

        double fac = kSafety * std::pow(std::max(err, 1e-16), -0.2);
        fac = std::clamp(fac, kFacMin, kFacMax);
        if (last_rejected) fac = std::min(fac, 1.0);
        h = std::min(h * fac, opts.max_step);
        last_rejected = false;
    }

    if (direction < 0) std::reverse(traj.dense.begin(), traj.dense.end());
    traj.stats.evaluations = nfev;
    return traj;
}

Field system_field(SystemKind system, const SolvsolitonParams& params) {
    switch (system) {
        case SystemKind::Full:
            return [params](const Eigen::VectorXd& v) -> Eigen::VectorXd {
                return vector_field(PhasePoint::from(v), params);
            };
        case SystemKind::Einstein:
            return [params](const Eigen::VectorXd& v) -> Eigen::VectorXd {
                return einstein_field({v[0], v[1]}, params);
            };
        case SystemKind::NoScal:
            return [lam = params.lambda](const Eigen::VectorXd& v) -> Eigen::VectorXd {
                return noscal_field({v[0], v[1]}, lam);
            };
    }
    throw Error(ErrorKind::InvalidArgument, "unknown system");
}

std::vector<EventSpec> system_events(SystemKind system, const SolvsolitonParams& params,
                                     const IntegrateOptions& opts) {
    std::vector<EventSpec> specs;
    const int expected_dim = system == SystemKind::Full ? 4 : 2;

    std::vector<Eigen::VectorXd> captures;
    if (opts.capture_points) {
        captures = *opts.capture_points;
    } else if (system == SystemKind::Full) {
        for (const auto& p : stationary_points(params)) captures.emplace_back(p.vec());
    } else if (system == SystemKind::Einstein) {
        const double hx = std::sqrt(-params.lambda / params.n);
        captures = {Eigen::Vector2d(1.0 / params.n, 1.0), Eigen::Vector2d(-1.0 / params.n, -1.0),
                    Eigen::Vector2d(hx, 0.0), Eigen::Vector2d(-hx, 0.0)};
    } else {
        captures = {Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(-1.0, -1.0)};
    }
    for (std::size_t i = 0; i < captures.size(); ++i) {
        if (captures[i].size() != expected_dim) {
            throw Error(ErrorKind::InvalidArgument, "capture point has the wrong dimension");
        }
        specs.push_back({EventKind::Captured, static_cast<int>(i),
                         [c = captures[i], r = opts.capture_radius](const Eigen::VectorXd& v) {
                             return (v - c).norm() - r;
                         },
                         EventSpec::Trigger::Falling, true});
    }

    specs.push_back({EventKind::Blowup, -1,
                     [cap = opts.norm_cap](const Eigen::VectorXd& v) { return cap - v.norm(); },
                     EventSpec::Trigger::Falling, true});

    if (system == SystemKind::Full) {
        if (opts.monitor_omega) {
            for (int b = 0; b < 4; ++b) {
                specs.push_back({EventKind::OmegaExit, b,
                                 [params, b](const Eigen::VectorXd& v) {
                                     return omega_margins(PhasePoint::from(v), params)[b];
                                 },
                                 EventSpec::Trigger::Falling, opts.stop_on_omega_exit});
            }
        }
        if (opts.monitor_w_minus_nx) {
            specs.push_back({EventKind::WMinusNXSignChange, 0,
                             [n = params.n](const Eigen::VectorXd& v) { return v[3] - n * v[0]; },
                             EventSpec::Trigger::AnySignChange, false});
        }
    }
    return specs;
}

Trajectory integrate(SystemKind system, const SolvsolitonParams& params, const Eigen::VectorXd& p0,
                     double s_start, double s_end, const IntegrateOptions& opts) {
    const int expected_dim = system == SystemKind::Full ? 4 : 2;
    if (p0.size() != expected_dim) throw Error(ErrorKind::InvalidArgument, "initial state has the wrong dimension");
    return integrate_field(system_field(system, params), p0, s_start, s_end, opts,
                           system_events(system, params, opts));
}

std::array<double, 4> omega_margins(const PhasePoint& p, const SolvsolitonParams& params) {
    return {p.y, params.n * p.x - p.y, p.z - params.s0, -p.z};
}

OmegaReport monitor_omega(const Trajectory& t, const SolvsolitonParams& params) {
    if (t.dim != 4) throw Error(ErrorKind::InvalidArgument, "Omega monitoring needs a full-system trajectory");
    OmegaReport rep;
    rep.min_margins.fill(std::numeric_limits<double>::infinity());
    rep.margins.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto m = omega_margins(t.point(i), params);
        rep.margins.push_back(m);
        const bool inside = std::all_of(m.begin(), m.end(), [](double v) { return v > 0.0; });
        if (rep.entry_index < 0) {
            if (inside) rep.entry_index = static_cast<std::ptrdiff_t>(i);
            else continue;
        }
        for (int b = 0; b < 4; ++b) rep.min_margins[b] = std::min(rep.min_margins[b], m[b]);
        if (!inside && rep.first_exit_index < 0) rep.first_exit_index = static_cast<std::ptrdiff_t>(i);
    }
    return rep;
}

PhiReport monitor_phi(const Trajectory& t, const SolvsolitonParams& params) {
    if (t.dim != 4 || t.empty()) throw Error(ErrorKind::InvalidArgument, "Phi needs a full-system trajectory");
    const double s_first = t.times.front();
    const bool captured = std::any_of(t.events.begin(), t.events.end(), [&](const Event& e) {
        return e.kind == EventKind::Captured && e.detail == static_cast<int>(Stationary::SPlus) &&
               std::abs(e.s - s_first) <= 1e-9 * std::max(1.0, std::abs(s_first));
    });
    if (!captured) {
        throw Error(ErrorKind::NotCaptured, "backward end of the trajectory never reached gamma^S");
    }
    const double eps_plus = unstable_eigenvalues(params).first;
    const double n = params.n;

    PhiReport rep;
    const std::size_t N = t.size();
    rep.s = t.times;
    rep.phi.resize(N);
    rep.dphi.resize(N);
    rep.d2phi.resize(N);
    rep.residual.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const PhasePoint p = t.point(i);
        const Eigen::Vector4d f = vector_field(p, params);
        rep.dphi[i] = p.w - n * p.x;
        rep.d2phi[i] = f[3] - n * f[0];
    }
    // Exponential tail: phi ~ C e^{eps_+ s} integrates to phi / eps_+.
    rep.tail = rep.dphi[0] / eps_plus;
    rep.phi[0] = rep.tail;
    for (std::size_t i = 1; i < N; ++i) {
        const double h = t.times[i] - t.times[i - 1];
        // Cubic Hermite quadrature (trapezoid with endpoint-derivative correction).
        rep.phi[i] = rep.phi[i - 1] + 0.5 * h * (rep.dphi[i - 1] + rep.dphi[i]) +
                     h * h / 12.0 * (rep.d2phi[i - 1] - rep.d2phi[i]);
    }
    for (std::size_t i = 0; i < N; ++i) {
        const double w = t.states[i][3];
        rep.residual[i] = rep.d2phi[i] + w * rep.dphi[i] + 2.0 * params.lambda * rep.phi[i];
        rep.sup_residual = std::max(rep.sup_residual, std::abs(rep.residual[i]));
    }
    return rep;
}

}  // namespace solvflow
