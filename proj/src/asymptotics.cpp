#include "solvflow/asymptotics.hpp"

#include "solvflow/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace solvflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd sample_at(const Trajectory& t, double s) {
    if (t.has_dense()) return t.eval(s);
    auto it = std::lower_bound(t.times.begin(), t.times.end(), s);
    if (it == t.times.begin()) return t.states.front();
    if (it == t.times.end()) return t.states.back();
    const std::size_t i = static_cast<std::size_t>(it - t.times.begin());
    const double u = (s - t.times[i - 1]) / (t.times[i] - t.times[i - 1]);
    return (1.0 - u) * t.states[i - 1] + u * t.states[i];
}

// Mean of per-sample values over [lo, hi] by the trapezoid rule, with linear
// interpolation at the window ends.
double sample_window_mean(const std::vector<double>& s, const std::vector<double>& q, double lo, double hi) {
    auto interp = [&](double at) {
        auto it = std::lower_bound(s.begin(), s.end(), at);
        if (it == s.begin()) return q.front();
        if (it == s.end()) return q.back();
        const std::size_t i = static_cast<std::size_t>(it - s.begin());
        const double u = (at - s[i - 1]) / (s[i] - s[i - 1]);
        return (1.0 - u) * q[i - 1] + u * q[i];
    };
    std::vector<std::pair<double, double>> pts{{lo, interp(lo)}};
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] > lo && s[i] < hi) pts.emplace_back(s[i], q[i]);
    pts.emplace_back(hi, interp(hi));
    double acc = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        acc += 0.5 * (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second);
    return acc / (hi - lo);
}

// Mean of q(s, state) over [lo, hi]: Simpson on the dense output when present.
template <class Q>
double window_mean(const Trajectory& t, double lo, double hi, Q q) {
    if (t.has_dense()) {
        const int m = 400;
        double acc = 0.0;
        for (int k = 0; k <= m; ++k) {
            const double s = lo + (hi - lo) * k / m;
            const double wgt = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            acc += wgt * q(s, t.eval(s));
        }
        return acc / (3.0 * m);
    }
    std::vector<double> vals(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) vals[i] = q(t.times[i], t.states[i]);
    return sample_window_mean(t.times, vals, lo, hi);
}

std::size_t samples_in(const std::vector<double>& s, double lo, double hi) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double v) { return v >= lo && v <= hi; }));
}

double least_squares_slope(const std::vector<double>& u, const std::vector<double>& v) {
    const double n = static_cast<double>(u.size());
    double su = 0, sv = 0, suu = 0, suv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        su += u[i];
        sv += v[i];
        suu += u[i] * u[i];
        suv += u[i] * v[i];
    }
    return (n * suv - su * sv) / (n * suu - su * su);
}

RateFit make_fit(std::string name, double predicted, double lo, double hi, double value) {
    RateFit f{std::move(name), predicted, lo, hi, value, kNaN};
    if (std::isnan(predicted)) f.relative_error = kNaN;
    else if (predicted == 0.0) f.relative_error = std::abs(value);
    else f.relative_error = std::abs(value - predicted) / std::abs(predicted);
    return f;
}

}  // namespace

const RateFit& RateReport::fit(const std::string& quantity) const {
    for (const auto& f : fits)
        if (f.quantity == quantity) return f;
    throw Error(ErrorKind::InvalidArgument, "no fit named " + quantity);
}

std::vector<double> tau_time(const Trajectory& t) {
    if (t.dim != 4 || t.empty()) throw Error(ErrorKind::InvalidArgument, "expected a full-system trajectory");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t.states[i][3] > 0.0)) {
            throw Error(ErrorKind::NonPositiveW, "w <= 0 at s = " + std::to_string(t.times[i]));
        }
    }
    std::vector<double> tau(t.size(), 0.0);
    // Three-point Gauss-Legendre on each step; trapezoid without dense output.
    static const double gx = std::sqrt(0.6);
    auto step = [&](std::size_t i) {
        const double a = t.times[i], b = t.times[i + 1];
        if (!t.has_dense()) return 0.5 * (b - a) * (t.states[i][3] + t.states[i + 1][3]);
        const double m = 0.5 * (a + b), r = 0.5 * (b - a);
        return r * (5.0 / 9 * t.eval(m - r * gx)[3] + 8.0 / 9 * t.eval(m)[3] + 5.0 / 9 * t.eval(m + r * gx)[3]);
    };
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs(t.times[i]) < std::abs(t.times[anchor])) anchor = i;
    for (std::size_t i = anchor + 1; i < t.size(); ++i) tau[i] = tau[i - 1] + step(i - 1);
    for (std::size_t i = anchor; i-- > 0;) tau[i] = tau[i + 1] - step(i);
    return tau;
}

std::vector<CentreVars> centre_coords(const Trajectory& t, double z0, const SolvsolitonParams& params) {
    const std::vector<double> tau = tau_time(t);
    const double a = z0 / params.n - params.lambda;
    const double b = z0 / params.s0;
    std::vector<CentreVars> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const PhasePoint p = t.point(i);
        const double v = 1.0 / p.w;
        out[i] = {t.times[i], tau[i], v, p.z - z0, v, p.x - a * v, p.y - b * v, a, b, z0};
    }
    return out;
}

CentreDiagnostics centre_diagnostics(const std::vector<CentreVars>& cv, const SolvsolitonParams& params) {
    if (cv.size() < 10) throw Error(ErrorKind::WindowTooShort, "too few samples for centre diagnostics");
    const double s_end = cv.back().s;
    if (!(s_end > 0.0)) throw Error(ErrorKind::WindowTooShort, "forward span is empty");
    CentreDiagnostics d;
    std::vector<double> s, ratio, taus, logs;
    for (const auto& c : cv) {
        const double eta = std::max(std::abs(c.eta1), std::abs(c.eta2)) / c.xi2;
        if (c.s >= 0.9 * s_end) {
            d.max_eta_ratio = std::max(d.max_eta_ratio, eta);
            s.push_back(c.s);
            ratio.push_back(c.v * std::sqrt(2.0 * -params.lambda * c.tau));
        }
        if (c.s >= 0.5 * s_end && eta > 0.0) {
            taus.push_back(c.tau);
            logs.push_back(std::log(eta));
        }
    }
    if (s.size() < 2 || taus.size() < 3) throw Error(ErrorKind::WindowTooShort, "tail window too short");
    d.v_tau_ratio = sample_window_mean(s, ratio, s.front(), s.back());
    d.log_eta_slope = least_squares_slope(taus, logs);
    return d;
}

ZLimit classify_z_limit(const Trajectory& t, const SolvsolitonParams& params) {
    if (t.dim != 4 || t.empty()) throw Error(ErrorKind::InvalidArgument, "expected a full-system trajectory");
    const double s_end = t.times.back();
    ZLimit out;
    out.terminal_z = t.states.back()[2];
    const double to_zero = std::abs(out.terminal_z);
    const double to_s0 = std::abs(out.terminal_z - params.s0);
    out.z0 = to_zero <= to_s0 ? 0.0 : params.s0;
    out.gap = std::min(to_zero, to_s0);
    if (out.gap > 0.25 * std::abs(params.s0)) {
        throw Error(ErrorKind::Ambiguous, "terminal z = " + std::to_string(out.terminal_z) +
                                              " is far from both 0 and s0");
    }
    const double s_mid = std::max(t.times.front(), 0.5 * s_end);
    out.gap_mid = std::abs(sample_at(t, s_mid)[2] - out.z0);
    out.gap_shrinking = out.gap <= out.gap_mid;
    return out;
}

RateReport fit_rates(const Trajectory& t, const SolvsolitonParams& params) {
    if (t.dim != 4 || t.empty()) throw Error(ErrorKind::InvalidArgument, "expected a full-system trajectory");
    const double s_end = t.times.back();
    if (s_end < 10.0 || t.times.front() > 0.2 * s_end) {
        throw Error(ErrorKind::WindowTooShort, "forward span must reach s >= 10 and cover [s_end/5, s_end]");
    }
    const double lo = 0.8 * s_end, mid = 0.9 * s_end, hi = s_end;
    if (!t.has_dense() && samples_in(t.times, lo, hi) < 5) {
        throw Error(ErrorKind::WindowTooShort, "fewer than 5 samples in the fit window");
    }
    const double lam = params.lambda;
    const double nan = kNaN;
    RateReport rep;

    auto w_rate = [&](double s, const Eigen::VectorXd& v) { return v[3] / (-lam * s); };
    auto x_rate = [](double s, const Eigen::VectorXd& v) { return v[0] * s; };
    auto y_rate = [](double s, const Eigen::VectorXd& v) { return v[1] * s * s; };
    auto z_rate = [](double s, const Eigen::VectorXd& v) { return v[2] * s * s; };

    rep.fits.push_back(make_fit("w/(-lambda s)", 1.0, lo, hi, window_mean(t, lo, hi, w_rate)));
    rep.fits.push_back(make_fit("x s", 1.0, lo, hi, window_mean(t, lo, hi, x_rate)));
    rep.fits.push_back(make_fit("y s^2", 0.0, lo, hi, window_mean(t, lo, hi, y_rate)));
    const double zs2 = window_mean(t, lo, hi, z_rate);
    rep.fits.push_back(make_fit("z s^2", nan, lo, hi, zs2));
    rep.alpha = -zs2;
    rep.alpha_early = -window_mean(t, lo, mid, z_rate);
    rep.alpha_late = -window_mean(t, mid, hi, z_rate);
    rep.alpha_variation = std::abs(rep.alpha_early - rep.alpha_late) / std::abs(rep.alpha);

    const double y_start = y_rate(0.2 * s_end, sample_at(t, 0.2 * s_end));
    rep.y_decay_ratio = y_rate(s_end, t.states.back()) / y_start;

    const std::vector<double> tau = tau_time(t);
    std::vector<double> xt(t.size()), vt(t.size()), yt(t.size()), ts(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& v = t.states[i];
        const double tt = std::max(tau[i], 0.0);
        xt[i] = v[0] * std::sqrt(2.0 * tt / -lam);
        vt[i] = std::sqrt(2.0 * -lam * tt) / v[3];
        yt[i] = v[1] * tt;
        ts[i] = t.times[i] != 0.0 ? tau[i] / (t.times[i] * t.times[i]) : 0.0;
    }
    rep.fits.push_back(make_fit("x sqrt(2 tau/(-lambda))", 1.0, lo, hi, sample_window_mean(t.times, xt, lo, hi)));
    rep.fits.push_back(make_fit("v sqrt(2 (-lambda) tau)", 1.0, lo, hi, sample_window_mean(t.times, vt, lo, hi)));
    rep.fits.push_back(make_fit("y tau", 0.0, lo, hi, sample_window_mean(t.times, yt, lo, hi)));
    rep.fits.push_back(make_fit("tau/s^2", -lam / 2.0, lo, hi, sample_window_mean(t.times, ts, lo, hi)));
    return rep;
}

ConeReport cone_profile(const MetricProfile& profile, double alpha, const SolvsolitonParams& params) {
    if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
    const double s_end = profile.s.back();
    if (!(s_end > 0.0) || samples_in(profile.s, 0.8 * s_end, s_end) < 4) {
        throw Error(ErrorKind::WindowTooShort, "profile tail too short");
    }
    ConeReport rep;
    rep.target = std::abs(params.s0) / alpha;
    std::vector<double> q(profile.s.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double s = profile.s[i];
        q[i] = s != 0.0 ? profile.c[i] * profile.c[i] / (s * s) / rep.target : 0.0;
    }
    rep.ratio_early = sample_window_mean(profile.s, q, 0.8 * s_end, 0.9 * s_end);
    rep.ratio_late = sample_window_mean(profile.s, q, 0.9 * s_end, s_end);
    rep.variation = std::abs(rep.ratio_early - rep.ratio_late) / rep.ratio_late;
    return rep;
}

double log_c_slope(const MetricProfile& profile, double s_lo, double s_hi) {
    std::vector<double> u, v;
    for (std::size_t i = 0; i < profile.s.size(); ++i) {
        if (profile.s[i] >= s_lo && profile.s[i] <= s_hi) {
            u.push_back(profile.s[i]);
            v.push_back(std::log(profile.c[i]));
        }
    }
    if (u.size() < 3) throw Error(ErrorKind::WindowTooShort, "fewer than 3 samples in the slope window");
    return least_squares_slope(u, v);
}

std::vector<double> sweep_grid(double theta0, int count) {
    if (count < 1) throw Error(ErrorKind::InvalidArgument, "count must be positive");
    const double lo = -std::numbers::pi / 2;
    const double margin = 0.05 * (theta0 - lo);
    const double a = lo + margin, b = theta0 - margin;
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i) grid[i] = count == 1 ? 0.5 * (a + b) : a + (b - a) * i / (count - 1);
    return grid;
}

std::vector<SweepRow> sweep_family(const SolvsolitonParams& params, int count,
                                   const ShotConfig& config, unsigned threads) {
    const EigenData eig = unstable_eigendata(params);
    const std::vector<double> grid = sweep_grid(eig.theta0, count);
    std::vector<SweepRow> rows(grid.size());

    auto work = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.theta = grid[i];
        try {
            ShotConfig cfg = config;
            cfg.theta = grid[i];
            const Shot shot = shoot_family(params, cfg);
            const RateReport rates = fit_rates(shot.trajectory, params);
            row.alpha = rates.alpha;
            row.alpha_variation = rates.alpha_variation;
            for (const auto& v : shot.forward.states) {
                row.sup_x = std::max(row.sup_x, v[0]);
                row.sup_y = std::max(row.sup_y, v[1]);
            }
            row.capture_distance = shot.capture_distance;
            row.z0 = classify_z_limit(shot.trajectory, params).z0;
            row.omega_clean = monitor_omega(shot.forward, params).stays_inside();
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };

    unsigned n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(grid.size()));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) work(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < n_threads; ++k) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < grid.size(); i = next++) work(i);
        });
    }
    for (auto& th : pool) th.join();
    return rows;
}

double min_pairwise_relative_gap(const std::vector<double>& values) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j) {
            const double scale = std::max(std::abs(values[i]), std::abs(values[j]));
            best = std::min(best, scale > 0 ? std::abs(values[i] - values[j]) / scale : 0.0);
        }
    return best;
}

}  // namespace solvflow
