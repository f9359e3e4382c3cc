#pragma once

#include "solvflow/core.hpp"
#include "solvflow/flow.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace solvflow {

enum class SystemKind { Full, Einstein, NoScal };

enum class EventKind { OmegaExit, WMinusNXSignChange, Blowup, Captured, MaxTime };

std::string_view to_string(EventKind kind);

/// Which inequality of Omega = {0 < y < n x, s0 < z < 0} failed.
enum class OmegaBound { YPositive = 0, YBelowNX = 1, ZAboveS0 = 2, ZNegative = 3 };

struct Event {
    double s = 0.0;
    EventKind kind = EventKind::MaxTime;
    /// OmegaExit: OmegaBound index. Captured: index into the capture points.
    /// WMinusNXSignChange: sign of w - n x after the crossing.
    int detail = -1;
    Eigen::VectorXd state;
};

struct IntegrateOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double norm_cap = 1e6;
    double capture_radius = 1e-8;
    double event_time_tol = 1e-10;
    double initial_step = 0.0;  // 0: automatic
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 5'000'000;
    bool monitor_omega = true;
    bool monitor_w_minus_nx = true;
    bool stop_on_omega_exit = false;
    /// nullopt: the system's stationary points. Empty vector: no capture.
    std::optional<std::vector<Eigen::VectorXd>> capture_points;
};

struct IntegratorStats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
    double rel_tol = 0.0;
    double abs_tol = 0.0;
    bool step_underflow = false;
};

/// Dormand-Prince continuous extension over one accepted step.
struct DenseSegment {
    double s_start = 0.0;
    double h = 0.0;
    std::array<Eigen::VectorXd, 5> coeff;

    double lo() const { return h >= 0 ? s_start : s_start + h; }
    double hi() const { return h >= 0 ? s_start + h : s_start; }
    Eigen::VectorXd eval(double s) const;
};

class Trajectory {
public:
    int dim = 0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Event> events;
    IntegratorStats stats;
    std::vector<DenseSegment> dense;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    PhasePoint point(std::size_t i) const { return PhasePoint::from(states[i]); }

    bool has_dense() const { return !dense.empty(); }
    /// Interpolates with the integrator's continuous extension.
    Eigen::VectorXd eval(double s) const;

    std::size_t count(EventKind kind) const;
    const Event* first(EventKind kind) const;
    /// Relabels time: s -> s + ds.
    void shift_time(double ds);
};

/// Reverses a backward leg and appends a forward leg that starts where the
/// backward one started. Times of the result are increasing.
Trajectory join_legs(const Trajectory& backward, const Trajectory& forward);

using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct EventSpec {
    enum class Trigger { Falling, AnySignChange };
    EventKind kind;
    int detail = -1;
    std::function<double(const Eigen::VectorXd&)> g;
    Trigger trigger = Trigger::Falling;
    bool terminal = false;
};

/// Adaptive Dormand-Prince 5(4) integration of an autonomous field; s_end may
/// be smaller than s_start.
Trajectory integrate_field(const Field& field, const Eigen::VectorXd& p0, double s_start,
                           double s_end, const IntegrateOptions& opts,
                           const std::vector<EventSpec>& events);

Trajectory integrate(SystemKind system, const SolvsolitonParams& params, const Eigen::VectorXd& p0,
                     double s_start, double s_end, const IntegrateOptions& opts = {});

Field system_field(SystemKind system, const SolvsolitonParams& params);
std::vector<EventSpec> system_events(SystemKind system, const SolvsolitonParams& params,
                                     const IntegrateOptions& opts);

struct OmegaReport {
    std::vector<std::array<double, 4>> margins;  // per sample, in OmegaBound order
    std::array<double, 4> min_margins{};          // after entry
    std::ptrdiff_t entry_index = -1;              // first sample with all margins > 0
    std::ptrdiff_t first_exit_index = -1;         // first sample after entry with a margin <= 0
    bool stays_inside() const { return entry_index >= 0 && first_exit_index < 0; }
};

std::array<double, 4> omega_margins(const PhasePoint& p, const SolvsolitonParams& params);
OmegaReport monitor_omega(const Trajectory& t, const SolvsolitonParams& params);

struct PhiReport {
    std::vector<double> s;
    std::vector<double> phi;    // Phi
    std::vector<double> dphi;   // Phi' = w - n x
    std::vector<double> d2phi;  // Phi'' = w' - n x'
    std::vector<double> residual;
    double sup_residual = 0.0;
    double tail = 0.0;
};

/// Potential normalized to vanish at the solvmanifold end, by quadrature from
/// the captured end of a trajectory emerging from gamma^S.
PhiReport monitor_phi(const Trajectory& t, const SolvsolitonParams& params);

}  // namespace solvflow
