#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace impdiff::ode {

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
  Method method = Method::rk45_adaptive;
  double step_size = 1e-3;  ///< rk4_fixed
  double rel_tol = 1e-10;   ///< rk45_adaptive
  double abs_tol = 1e-12;   ///< rk45_adaptive
  std::size_t max_steps = 10'000'000;
  double initial_step = 0.0;  ///< rk45_adaptive; 0 selects automatically
};

/// dz/dt = field(t, z), written into dz.
using Field = std::function<void(double t, std::span<const double> z, std::span<double> dz)>;

/// Called after every accepted step with the new time, state and derivative.
using StepObserver =
    std::function<void(double t, std::span<const double> z, std::span<const double> dz)>;

struct AdvanceStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Integrates from t0 to t1 (either direction) and returns z(t1). The last
/// step lands on t1 exactly.
///
/// rk4_fixed takes ceil(|t1 - t0| / step_size) equal steps. rk45_adaptive is
/// Dormand–Prince 5(4) with a PI step-size controller on the RMS of the
/// scaled embedded error.
///
/// Throws IntegrationError on step-size underflow, an exhausted step budget or
/// a non-finite state.
std::vector<double> advance(const Field& field, std::span<const double> z0, double t0,
                            double t1, const IntegratorConfig& cfg,
                            const StepObserver& observer = {}, AdvanceStats* stats = nullptr);

/// Number of equal rk4_fixed steps used across [t0, t1].
std::size_t fixed_step_count(double t0, double t1, double step_size);

struct Knot {
  double t = 0.0;
  std::vector<double> y;
  std::vector<double> ydot;
};

/// Knots strictly increasing in t with cubic Hermite interpolation between
/// neighbours.
struct DenseTrajectory {
  std::vector<Knot> knots;

  const std::vector<double>& final_state() const { return knots.back().y; }
  double start() const { return knots.front().t; }
  double end() const { return knots.back().t; }

  /// y(t) for t within [start(), end()]; throws StructuralError outside.
  std::vector<double> interpolate(double t) const;
  void interpolate(double t, std::span<double> out) const;
};

/// Forward integration from t0 to t1 > t0 recording every accepted step.
DenseTrajectory integrate_field(const Field& field, std::span<const double> z0, double t0,
                                double t1, const IntegratorConfig& cfg,
                                AdvanceStats* stats = nullptr);

}  // namespace impdiff::ode
