#include "solvflow/cli.hpp"

#include "solvflow/asymptotics.hpp"
#include "solvflow/construct.hpp"
#include "solvflow/error.hpp"
#include "solvflow/io.hpp"
#include "solvflow/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace solvflow {

namespace {

struct NumericOpts {
    double delta = 1e-6;
    double smax = 100.0;
    double rtol = 1e-10;
    double atol = 1e-12;
    double capture_radius = 1e-8;
    double norm_cap = 1e6;
    bool raw_time = false;
};

void add_numeric(CLI::App* cmd, NumericOpts& o, bool with_smax = true) {
    cmd->add_option("--delta", o.delta, "offset from the stationary point")->check(CLI::PositiveNumber);
    if (with_smax) cmd->add_option("--smax", o.smax, "forward end of the span")->check(CLI::PositiveNumber);
    cmd->add_option("--rtol", o.rtol, "relative tolerance")->check(CLI::Range(1e-15, 1e-2));
    cmd->add_option("--atol", o.atol, "absolute tolerance")->check(CLI::Range(1e-18, 1e-2));
    cmd->add_option("--capture-radius", o.capture_radius, "stationary-point capture radius")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--cap", o.norm_cap, "blow-up norm cap")->check(CLI::PositiveNumber);
    cmd->add_flag("--raw-time", o.raw_time, "launch at s = 0 instead of s = log(delta)/eps+");
}

ShotConfig shot_config(const NumericOpts& o) {
    ShotConfig c;
    c.delta = o.delta;
    c.s_forward = o.smax;
    c.canonical_time = !o.raw_time;
    c.opts.rel_tol = o.rtol;
    c.opts.abs_tol = o.atol;
    c.opts.capture_radius = o.capture_radius;
    c.opts.norm_cap = o.norm_cap;
    return c;
}

std::string num(double v) { return format_double(v); }

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    body(f);
}

unsigned thread_cap() {
    if (const char* env = std::getenv("SOLVFLOW_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 0;
}

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::ParseError:
        case ErrorKind::UnknownPreset:
        case ErrorKind::NonAntisymmetric:
        case ErrorKind::JacobiViolated:
        case ErrorKind::NonUnimodular:
        case ErrorKind::NotASoliton:
        case ErrorKind::PositiveLambda0:
        case ErrorKind::ZeroTrace:
        case ErrorKind::NegativeSpectrum:
        case ErrorKind::InconsistentSoliton:
        case ErrorKind::ScalarFlat:
        case ErrorKind::LambdaOutOfRange:
        case ErrorKind::NonNegativeLambda:
        case ErrorKind::OutsideAdmissibleRange:
            return 2;
        default:
            return 1;
    }
}

void print_preset_text(std::ostream& out, const Preset& p) {
    const auto& q = p.params;
    out << "name          " << q.name << '\n'
        << "n             " << q.n << '\n'
        << "d_spectrum   ";
    for (double d : q.d_spectrum) out << ' ' << num(d);
    out << '\n'
        << "lambda0       " << num(q.lambda0) << '\n'
        << "s0            " << num(q.s0) << '\n'
        << "tr_d0_sq      " << num(q.tr_d0_sq) << '\n'
        << "lambda        " << num(q.lambda) << '\n'
        << "scalar_flat   " << (q.scalar_flat ? "true" : "false") << '\n'
        << "metric_scale  " << num(q.metric_scale) << '\n';
}

nlohmann::ordered_json events_json(const Trajectory& t) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : t.events) arr.push_back(to_json(e));
    return arr;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shooting and verification for cohomogeneity-one expanding solitons over solvmanifolds",
                 "solvflow"};
    app.require_subcommand(1);

    std::string preset_arg;
    bool json = false;
    NumericOpts num_opts;
    double theta = 0.0;
    std::string dump, profile_path, table_path;
    int count = 9;
    double lambda = -0.375;
    std::string csv_path;

    auto* c_preset = app.add_subcommand("preset", "show normalized soliton data (no name: list the catalog)");
    c_preset->add_option("preset", preset_arg, "catalog name or algebra JSON file");
    c_preset->add_flag("--json", json, "JSON output");

    auto* c_stat = app.add_subcommand("stationary", "stationary points, eigenvalues and the unstable subspace");
    c_stat->add_option("preset", preset_arg)->required();

    auto* c_shoot = app.add_subcommand("shoot", "shoot from gamma^S at an angle");
    c_shoot->add_option("preset", preset_arg)->required();
    c_shoot->add_option("--theta", theta, "emergence angle")->required()->check(CLI::Range(-3.14159265358979, 3.14159265358979));
    add_numeric(c_shoot, num_opts);
    c_shoot->add_option("--dump", dump, "trajectory CSV");
    c_shoot->add_option("--profile", profile_path, "metric profile CSV");

    auto* c_sweep = app.add_subcommand("sweep", "shots over a grid of admissible angles");
    c_sweep->add_option("preset", preset_arg)->required();
    c_sweep->add_option("--count", count, "grid size")->check(CLI::Range(2, 1000));
    add_numeric(c_sweep, num_opts);
    c_sweep->add_flag("--json", json, "JSON output");

    auto* c_ein = app.add_subcommand("einstein", "heteroclinic Einstein shot from gamma^S to gamma^H");
    c_ein->add_option("preset", preset_arg)->required();
    add_numeric(c_ein, num_opts);
    c_ein->add_option("--dump", dump, "embedded trajectory CSV");
    c_ein->add_option("--profile", profile_path, "metric profile CSV");

    auto* c_ns = app.add_subcommand("noscal", "shot in the no-scal subsystem");
    c_ns->add_option("--lambda", lambda, "cosmological constant in (-1, 0)")->required();
    c_ns->add_option("--delta", num_opts.delta, "offset from (1, 1)")->check(CLI::NonNegativeNumber);
    c_ns->add_option("--smax", num_opts.smax, "forward end of the span")->check(CLI::PositiveNumber);
    c_ns->add_option("--rtol", num_opts.rtol)->check(CLI::Range(1e-15, 1e-2));
    c_ns->add_option("--atol", num_opts.atol)->check(CLI::Range(1e-18, 1e-2));
    c_ns->add_flag("--raw-time", num_opts.raw_time);
    c_ns->add_option("--dump", dump, "trajectory CSV (s, y, w)");

    auto* c_ver = app.add_subcommand("verify", "run the property suite");
    c_ver->add_option("preset", preset_arg)->required();

    auto* c_asy = app.add_subcommand("asymptotics", "rate fits from a trajectory CSV");
    c_asy->add_option("csv", csv_path, "trajectory CSV with columns s,x,y,z,w")->required();
    c_asy->add_option("--preset", preset_arg, "preset the trajectory belongs to")->required();
    c_asy->add_option("--table", table_path, "compensated-quantity table for plotting");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_preset->parsed()) {
            if (preset_arg.empty()) {
                for (const auto& name : preset_names()) out << name << '\n';
                return 0;
            }
            const Preset p = load_preset(preset_arg);
            if (json) out << to_json(p).dump(2) << '\n';
            else print_preset_text(out, p);
            return 0;
        }

        if (c_stat->parsed()) {
            const Preset p = load_preset(preset_arg);
            const auto& P = p.params;
            nlohmann::ordered_json j;
            j["preset"] = P.name;
            nlohmann::ordered_json pts;
            const char* names[] = {"S+", "S-", "H+", "H-"};
            const auto sp = stationary_points(P);
            for (int i = 0; i < 4; ++i) pts[names[i]] = as_vector(sp[i].vec());
            j["stationary_points"] = pts;
            const EigenData eig = unstable_eigendata(P);
            j["eps_plus"] = eig.eps_plus;
            j["eps_minus"] = eig.eps_minus;
            j["einstein_direction"] = as_vector(eig.w_basis[0]);
            j["noscal_direction"] = as_vector(eig.w_basis[1]);
            j["theta0"] = eig.theta0;
            out << j.dump(2) << '\n';
            return 0;
        }

        if (c_shoot->parsed()) {
            const Preset p = load_preset(preset_arg);
            const auto& P = p.params;
            const EigenData eig = unstable_eigendata(P);
            ShotConfig cfg = shot_config(num_opts);
            cfg.theta = theta;
            const bool admissible = theta_admissible(theta, eig);
            Shot shot;
            if (admissible) {
                shot = shoot_family(P, cfg);
            } else {
                err << "warning: OutsideAdmissibleRange: theta = " << num(theta) << " is outside (-pi/2, "
                    << num(eig.theta0) << "); events are reported, nothing is asserted\n";
                shot = shoot_direction(direction_from_angle(theta, eig), P, cfg);
            }
            nlohmann::ordered_json j;
            j["preset"] = P.name;
            j["theta"] = theta;
            j["admissible"] = admissible;
            j["s_launch"] = shot.s_launch;
            j["launch"] = as_vector(shot.launch.vec());
            j["captured_backward"] = shot.captured_backward;
            j["capture_distance"] = shot.capture_distance;
            j["forward_end"] = {{"s", shot.forward.times.back()}, {"state", as_vector(shot.forward.states.back())}};
            j["forward_events"] = events_json(shot.forward);
            j["steps"] = {{"accepted", shot.trajectory.stats.accepted}, {"rejected", shot.trajectory.stats.rejected}};
            if (admissible) {
                try {
                    j["rates"] = to_json(fit_rates(shot.trajectory, P));
                } catch (const Error& e) {
                    j["rates"] = std::string(e.what());
                }
            }
            out << j.dump(2) << '\n';

            std::vector<double> phi;
            bool have_phi = false;
            if (shot.captured_backward) {
                phi = monitor_phi(shot.trajectory, P).phi;
                have_phi = true;
            }
            if (!dump.empty()) {
                write_file(dump, [&](std::ostream& f) {
                    write_trajectory_csv(f, shot.trajectory, P, {true, have_phi ? &phi : nullptr});
                });
            }
            if (!profile_path.empty()) {
                const MetricProfile prof = reconstruct(shot.trajectory, P);
                write_file(profile_path, [&](std::ostream& f) { write_profile_csv(f, prof); });
            }
            return 0;
        }

        if (c_sweep->parsed()) {
            const Preset p = load_preset(preset_arg);
            const auto rows = sweep_family(p.params, count, shot_config(num_opts), thread_cap());
            std::vector<double> alphas;
            bool ok = true;
            for (const auto& r : rows) {
                if (!r.error.empty() || !r.omega_clean || r.z0 != 0.0) ok = false;
                alphas.push_back(r.alpha);
            }
            const double gap = min_pairwise_relative_gap(alphas);
            if (gap < 0.01) ok = false;
            if (json) {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const auto& r : rows) {
                    arr.push_back({{"theta", r.theta},
                                   {"alpha", r.alpha},
                                   {"alpha_variation", r.alpha_variation},
                                   {"sup_x", r.sup_x},
                                   {"sup_y", r.sup_y},
                                   {"capture_distance", r.capture_distance},
                                   {"z_limit", r.z0},
                                   {"omega_clean", r.omega_clean},
                                   {"error", r.error}});
                }
                nlohmann::ordered_json j;
                j["preset"] = p.params.name;
                j["rows"] = arr;
                j["min_pairwise_alpha_gap"] = gap;
                out << j.dump(2) << '\n';
            } else {
                out << "# theta alpha alpha_variation sup_x sup_y capture_distance z_limit omega_clean\n";
                for (const auto& r : rows) {
                    out << num(r.theta) << ' ' << num(r.alpha) << ' ' << num(r.alpha_variation) << ' ' << num(r.sup_x)
                        << ' ' << num(r.sup_y) << ' ' << num(r.capture_distance) << ' ' << num(r.z0) << ' '
                        << (r.omega_clean ? "yes" : "no");
                    if (!r.error.empty()) out << "  # " << r.error;
                    out << '\n';
                }
                out << "# min pairwise relative alpha gap " << num(gap) << '\n';
            }
            return ok ? 0 : 1;
        }

        if (c_ein->parsed()) {
            const Preset p = load_preset(preset_arg);
            const auto& P = p.params;
            const EinsteinShot shot = shoot_einstein(P, shot_config(num_opts));
            const MetricProfile prof = reconstruct(shot.embedded, P);
            const double end = prof.s.back();
            nlohmann::ordered_json j;
            j["preset"] = P.name;
            j["direction"] = as_vector(shot.direction);
            j["s_launch"] = shot.s_launch;
            j["end"] = {{"s", end}, {"state", as_vector(shot.planar.states.back())}};
            j["capture_distance"] = shot.capture_distance;
            j["z_drift"] = shot.z_drift;
            j["x_monotone"] = shot.x_monotone;
            j["y_monotone"] = shot.y_monotone;
            j["retried_at_tight_tolerance"] = shot.retried;
            j["log_c_slope"] = log_c_slope(prof, end - 10.0, end);
            j["hyperbolic_rate"] = std::sqrt(-P.lambda / P.n);
            out << j.dump(2) << '\n';
            if (!dump.empty()) {
                write_file(dump, [&](std::ostream& f) {
                    write_trajectory_csv(f, shot.embedded, P, {true, prof.phi.empty() ? nullptr : &prof.phi});
                });
            }
            if (!profile_path.empty()) write_file(profile_path, [&](std::ostream& f) { write_profile_csv(f, prof); });
            const bool ok = shot.z_drift <= 1e-9 && shot.x_monotone && shot.y_monotone;
            return ok ? 0 : 1;
        }

        if (c_ns->parsed()) {
            ShotConfig cfg = shot_config(num_opts);
            const NoScalShot shot = shoot_noscal(lambda, cfg);
            const auto& t = shot.trajectory;
            const double s = t.times.back();
            nlohmann::ordered_json j;
            j["lambda"] = lambda;
            j["direction"] = as_vector(shot.direction);
            j["s_launch"] = shot.s_launch;
            j["end"] = {{"s", s}, {"y", t.states.back()[0]}, {"w", t.states.back()[1]}};
            j["w_over_minus_lambda_s"] = t.states.back()[1] / (-lambda * s);
            j["y_times_minus_lambda_s"] = t.states.back()[0] * (-lambda * s);
            j["events"] = events_json(t);
            out << j.dump(2) << '\n';
            if (!dump.empty()) {
                SolvsolitonParams dummy;
                dummy.lambda = lambda;
                write_file(dump, [&](std::ostream& f) {
                    f << "s,y,w\n";
                    for (std::size_t i = 0; i < t.size(); ++i)
                        f << num(t.times[i]) << ',' << num(t.states[i][0]) << ',' << num(t.states[i][1]) << '\n';
                });
            }
            return 0;
        }

        if (c_ver->parsed()) {
            const Preset p = load_preset(preset_arg);
            const auto results = verify_preset(p);
            out << "verify " << p.params.name << '\n';
            for (const auto& r : results) {
                const char* tag = r.status == CheckStatus::Pass ? "PASS" : r.status == CheckStatus::Fail ? "FAIL" : "SKIP";
                out << "  [" << tag << "] " << std::left << std::setw(20) << r.name << ' ' << r.detail << '\n';
            }
            const bool ok = all_passed(results);
            out << (ok ? "all checks passed" : "some checks FAILED") << '\n';
            return ok ? 0 : 1;
        }

        if (c_asy->parsed()) {
            const Preset p = load_preset(preset_arg);
            const auto& P = p.params;
            std::ifstream in(csv_path);
            if (!in) throw Error(ErrorKind::ParseError, "cannot open " + csv_path);
            const Trajectory t = read_trajectory_csv(in);
            const RateReport r = fit_rates(t, P);
            nlohmann::ordered_json j = to_json(r);
            try {
                const ZLimit z = classify_z_limit(t, P);
                j["z_limit"] = {{"z0", z.z0}, {"gap", z.gap}, {"gap_shrinking", z.gap_shrinking}};
            } catch (const Error& e) {
                j["z_limit"] = std::string(e.what());
            }
            out << j.dump(2) << '\n';
            if (!table_path.empty()) {
                write_file(table_path, [&](std::ostream& f) {
                    f << "# s w/(-lambda s) x*s y*s^2 z*s^2\n";
                    for (std::size_t i = 0; i < t.size(); ++i) {
                        const double s = t.times[i];
                        if (s <= 0.0) continue;
                        const auto& v = t.states[i];
                        f << num(s) << ' ' << num(v[3] / (-P.lambda * s)) << ' ' << num(v[0] * s) << ' '
                          << num(v[1] * s * s) << ' ' << num(v[2] * s * s) << '\n';
                    }
                });
            }
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace solvflow
