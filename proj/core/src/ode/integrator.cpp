#include "impdiff/ode/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "impdiff/errors.hpp"

namespace impdiff::ode {
namespace {

void check_finite(std::span<const double> z, double t) {
  for (double v : z) {
    if (!std::isfinite(v)) {
      throw IntegrationError("non-finite state at t = " + std::to_string(t));
    }
  }
}

void check_config(const IntegratorConfig& cfg) {
  if (cfg.max_steps == 0) throw StructuralError("integrator: max_steps must be positive");
  if (cfg.method == Method::rk4_fixed && !(cfg.step_size > 0.0)) {
    throw StructuralError("integrator: step_size must be positive");
  }
  if (cfg.method == Method::rk45_adaptive &&
      (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0))) {
    throw StructuralError("integrator: tolerances must be positive");
  }
}

// z + h Σ a_j k_j
void combine(std::span<const double> z, double h,
             std::initializer_list<std::pair<double, const std::vector<double>*>> terms,
             std::vector<double>& out) {
  const std::size_t n = z.size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const auto& [a, k] : terms) acc += a * (*k)[i];
    out[i] = z[i] + h * acc;
  }
}

std::vector<double> advance_rk4(const Field& field, std::span<const double> z0, double t0,
                                double t1, const IntegratorConfig& cfg,
                                const StepObserver& observer, AdvanceStats& stats) {
  const std::size_t n = z0.size();
  const std::size_t steps = fixed_step_count(t0, t1, cfg.step_size);
  if (steps > cfg.max_steps) {
    throw IntegrationError("rk4: " + std::to_string(steps) + " steps exceed max_steps");
  }
  const double h = (t1 - t0) / static_cast<double>(steps);
  std::vector<double> z(z0.begin(), z0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  field(t0, z, k1);
  ++stats.evaluations;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = t0 + static_cast<double>(s) * h;
    const double t_next = s + 1 == steps ? t1 : t0 + static_cast<double>(s + 1) * h;
    combine(z, 0.5 * h, {{1.0, &k1}}, tmp);
    field(t + 0.5 * h, tmp, k2);
    combine(z, 0.5 * h, {{1.0, &k2}}, tmp);
    field(t + 0.5 * h, tmp, k3);
    combine(z, h, {{1.0, &k3}}, tmp);
    field(t + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    check_finite(z, t_next);
    field(t_next, z, k1);
    stats.evaluations += 4;
    ++stats.steps;
    if (observer) observer(t_next, z, k1);
  }
  return z;
}

// Dormand–Prince 5(4).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double scaled_rms(std::span<const double> err, std::span<const double> z,
                  std::span<const double> z_new, const IntegratorConfig& cfg) {
  if (err.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(z[i]), std::abs(z_new[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const Field& field, std::span<const double> z, std::span<const double> f0,
                    double t0, double span, const IntegratorConfig& cfg,
                    AdvanceStats& stats) {
  const std::size_t n = z.size();
  auto rms = [&](std::span<const double> v) {
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = v[i] / (cfg.abs_tol + cfg.rel_tol * std::abs(z[i]));
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n));
  };
  const double d0 = rms(z);
  const double d1 = rms(f0);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, std::abs(span));
  const double dir = span < 0 ? -1.0 : 1.0;
  std::vector<double> z1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) z1[i] = z[i] + dir * h0 * f0[i];
  field(t0 + dir * h0, z1, f1);
  ++stats.evaluations;
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = f1[i] - f0[i];
  const double d2 = rms(diff) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h0, h1, std::abs(span)});
}

std::vector<double> advance_rk45(const Field& field, std::span<const double> z0, double t0,
                                 double t1, const IntegratorConfig& cfg,
                                 const StepObserver& observer, AdvanceStats& stats) {
  const std::size_t n = z0.size();
  const double dir = t1 < t0 ? -1.0 : 1.0;
  std::vector<double> z(z0.begin(), z0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), z_new(n),
      err(n);
  field(t0, z, k1);
  ++stats.evaluations;

  double h = cfg.initial_step > 0.0
                 ? std::min(cfg.initial_step, std::abs(t1 - t0))
                 : initial_step(field, z, k1, t0, t1 - t0, cfg, stats);
  double err_old = 1e-4;
  constexpr double safety = 0.9;
  constexpr double beta = 0.04;
  constexpr double alpha = 0.2 - 0.75 * beta;
  double t = t0;
  std::size_t steps = 0;
  bool last_rejected = false;

  while (dir * (t1 - t) > 0.0) {
    if (steps >= cfg.max_steps) {
      throw IntegrationError("rk45: step budget of " + std::to_string(cfg.max_steps) +
                             " exhausted at t = " + std::to_string(t));
    }
    bool last = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      throw IntegrationError("rk45: step size underflow at t = " + std::to_string(t));
    }
    const double hs = dir * h;
    combine(z, hs, {{a21, &k1}}, tmp);
    field(t + c2 * hs, tmp, k2);
    combine(z, hs, {{a31, &k1}, {a32, &k2}}, tmp);
    field(t + c3 * hs, tmp, k3);
    combine(z, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, tmp);
    field(t + c4 * hs, tmp, k4);
    combine(z, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, tmp);
    field(t + c5 * hs, tmp, k5);
    combine(z, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, tmp);
    field(t + hs, tmp, k6);
    combine(z, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, z_new);
    const double t_new = last ? t1 : t + hs;
    field(t_new, z_new, k7);
    stats.evaluations += 6;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                     e7 * k7[i]);
    }
    double e = scaled_rms(err, z, z_new, cfg);
    bool finite = std::isfinite(e);
    for (double v : z_new) finite = finite && std::isfinite(v);
    if (!finite) {
      // Treat as a hard rejection; shrink and retry.
      ++stats.rejected;
      h *= 0.1;
      last_rejected = true;
      continue;
    }
    const double fac11 = std::pow(std::max(e, 1e-300), alpha);
    if (e <= 1.0) {
      double fac = fac11 / std::pow(err_old, beta) / safety;
      fac = std::clamp(fac, 0.2, 10.0);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      err_old = std::max(e, 1e-4);
      t = t_new;
      z.swap(z_new);
      k1.swap(k7);
      ++steps;
      ++stats.steps;
      if (observer) observer(t, z, k1);
      h = h_new;
      last_rejected = false;
    } else {
      ++stats.rejected;
      h /= std::min(5.0, fac11 / safety);
      last_rejected = true;
    }
  }
  check_finite(z, t1);
  return z;
}

}  // namespace

std::size_t fixed_step_count(double t0, double t1, double step_size) {
  const double ratio = std::abs(t1 - t0) / step_size;
  // Tolerate representation error in τ/h so that 1/1e-3 is 1000 steps.
  const auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
  return std::max<std::size_t>(steps, 1);
}

std::vector<double> advance(const Field& field, std::span<const double> z0, double t0,
                            double t1, const IntegratorConfig& cfg,
                            const StepObserver& observer, AdvanceStats* stats) {
  check_config(cfg);
  check_finite(z0, t0);
  AdvanceStats local;
  AdvanceStats& s = stats ? *stats : local;
  if (t0 == t1) return {z0.begin(), z0.end()};
  return cfg.method == Method::rk4_fixed ? advance_rk4(field, z0, t0, t1, cfg, observer, s)
                                         : advance_rk45(field, z0, t0, t1, cfg, observer, s);
}

void DenseTrajectory::interpolate(double t, std::span<double> out) const {
  if (knots.empty()) throw StructuralError("interpolate: empty trajectory");
  const double lo = knots.front().t;
  const double hi = knots.back().t;
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (t < lo - slack || t > hi + slack) {
    throw StructuralError("interpolate: t = " + std::to_string(t) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (knots.size() == 1) {
    std::copy(knots[0].y.begin(), knots[0].y.end(), out.begin());
    return;
  }
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double v, const Knot& k) { return v < k.t; });
  std::size_t k1 = static_cast<std::size_t>(it - knots.begin());
  k1 = std::clamp<std::size_t>(k1, 1, knots.size() - 1);
  const Knot& a = knots[k1 - 1];
  const Knot& b = knots[k1];
  const double h = b.t - a.t;
  if (t == a.t) {
    std::copy(a.y.begin(), a.y.end(), out.begin());
    return;
  }
  if (t == b.t) {
    std::copy(b.y.begin(), b.y.end(), out.begin());
    return;
  }
  const double s = (t - a.t) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  for (std::size_t i = 0; i < a.y.size(); ++i) {
    out[i] = h00 * a.y[i] + h10 * h * a.ydot[i] + h01 * b.y[i] + h11 * h * b.ydot[i];
  }
}

std::vector<double> DenseTrajectory::interpolate(double t) const {
  std::vector<double> out(knots.empty() ? 0 : knots.front().y.size());
  interpolate(t, out);
  return out;
}

DenseTrajectory integrate_field(const Field& field, std::span<const double> z0, double t0,
                                double t1, const IntegratorConfig& cfg, AdvanceStats* stats) {
  if (!(t1 > t0)) throw StructuralError("integrate: horizon must be positive");
  DenseTrajectory traj;
  std::vector<double> dz(z0.size());
  field(t0, z0, dz);
  traj.knots.push_back({t0, {z0.begin(), z0.end()}, dz});
  advance(
      field, z0, t0, t1, cfg,
      [&traj](double t, std::span<const double> z, std::span<const double> d) {
        traj.knots.push_back({t, {z.begin(), z.end()}, {d.begin(), d.end()}});
      },
      stats);
  return traj;
}

}  // namespace impdiff::ode
