#include "impdiff/ode/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impdiff/ad/sweeps.hpp"
#include "impdiff/errors.hpp"

namespace impdiff::ode {
namespace {

using ad::Tape;
using ad::Var;
using ad::VarVector;

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw StructuralError(std::string(what) + ": expected length " + std::to_string(want) +
                          ", got " + std::to_string(got));
  }
}

void validate(const OdeSystem& sys, std::span<const double> x) {
  if (!sys.rhs || !sys.initial) throw StructuralError("ODE system is missing rhs or initial");
  if (!(sys.horizon > 0.0)) throw StructuralError("ODE horizon must be positive");
  expect_size(x.size(), sys.input_dim, "x");
}

void set_outputs(Tape& tape, const VarVector& out) {
  std::vector<ad::NodeId> ids;
  ids.reserve(out.size());
  for (const Var& v : out) ids.push_back(v.id());
  tape.set_outputs(std::move(ids));
}

Tape record_initial(const OdeSystem& sys, std::span<const double> x) {
  Tape tape;
  const VarVector xv = ad::inputs(tape, x);
  const VarVector u = sys.initial(xv);
  expect_size(u.size(), sys.state_dim, "initial state");
  set_outputs(tape, u);
  return tape;
}

void read_outputs(const Tape& tape, std::span<double> out) {
  const auto outs = tape.outputs();
  for (std::size_t k = 0; k < outs.size(); ++k) out[k] = tape.node(outs[k]).value.value;
}

void check_span(const OdeSystem& sys, const DenseTrajectory& traj) {
  if (traj.knots.size() < 2) throw StructuralError("trajectory has fewer than two knots");
  const double slack = 1e-12 * std::max(1.0, sys.horizon);
  if (std::abs(traj.start()) > slack || std::abs(traj.end() - sys.horizon) > slack) {
    throw StructuralError("trajectory does not span [0, " + std::to_string(sys.horizon) +
                          "]: it covers [" + std::to_string(traj.start()) + ", " +
                          std::to_string(traj.end()) + "]");
  }
  for (std::size_t k = 1; k < traj.knots.size(); ++k) {
    if (!(traj.knots[k].t > traj.knots[k - 1].t)) {
      throw StructuralError("trajectory knots are not strictly increasing");
    }
  }
}

}  // namespace

std::vector<double> initial_state(const OdeSystem& sys, std::span<const double> x) {
  validate(sys, x);
  const Tape tape = record_initial(sys, x);
  std::vector<double> y0(sys.state_dim);
  read_outputs(tape, y0);
  return y0;
}

void record_rhs(Tape& tape, const OdeSystem& sys, std::span<const double> x,
                std::span<const double> y, double t) {
  tape.clear();
  const VarVector xv = ad::inputs(tape, x);
  const VarVector yv = ad::inputs(tape, y);
  const Var tv = ad::constant(tape, t);
  const VarVector r = sys.rhs(xv, yv, tv);
  expect_size(r.size(), sys.state_dim, "rhs output");
  set_outputs(tape, r);
}

DenseTrajectory integrate(const OdeSystem& sys, std::span<const double> x,
                          const IntegratorConfig& cfg, AdvanceStats* stats) {
  const std::vector<double> y0 = initial_state(sys, x);
  Tape tape;
  const Field field = [&](double t, std::span<const double> y, std::span<double> dy) {
    record_rhs(tape, sys, x, y, t);
    read_outputs(tape, dy);
  };
  return integrate_field(field, y0, 0.0, sys.horizon, cfg, stats);
}

OdeAdjointResult adjoint_reverse(const OdeSystem& sys, std::span<const double> x,
                                 const DenseTrajectory& trajectory,
                                 std::span<const double> alpha, const IntegratorConfig& cfg) {
  validate(sys, x);
  check_span(sys, trajectory);
  expect_size(alpha.size(), sys.state_dim, "alpha");
  const std::size_t n = sys.state_dim;
  const std::size_t in = sys.input_dim;

  Tape tape;
  std::vector<double> y(n), a(n);
  // z = (λ, q); q accumulates -∫_τ^t (∂r/∂x)ᵀa, which is +∫_t^τ at the end.
  const Field field = [&](double t, std::span<const double> z, std::span<double> dz) {
    trajectory.interpolate(t, y);
    record_rhs(tape, sys, x, y, t);
    for (std::size_t k = 0; k < n; ++k) a[k] = alpha[k] - z[k];
    const auto adj = ad::reverse_sweep(tape, a);
    for (std::size_t k = 0; k < n; ++k) dz[k] = adj[in + k];
    for (std::size_t k = 0; k < in; ++k) dz[n + k] = -adj[k];
  };

  OdeAdjointResult res;
  std::vector<double> z(n + in, 0.0);
  std::vector<double> dz(n + in);
  field(sys.horizon, z, dz);
  auto push_knot = [&res, n](double t, std::span<const double> zz, std::span<const double> d) {
    res.adjoint.knots.push_back(
        {t, {zz.begin(), zz.begin() + static_cast<std::ptrdiff_t>(n)},
         {d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n)}});
  };
  push_knot(sys.horizon, z, dz);

  IntegratorConfig bcfg = cfg;
  const auto& knots = trajectory.knots;
  for (std::size_t k = knots.size() - 1; k-- > 0;) {
    if (cfg.method == Method::rk45_adaptive) bcfg.initial_step = knots[k + 1].t - knots[k].t;
    z = advance(field, z, knots[k + 1].t, knots[k].t, bcfg, push_knot, &res.stats);
  }
  std::reverse(res.adjoint.knots.begin(), res.adjoint.knots.end());

  res.lambda0.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t k = 0; k < n; ++k) a[k] = alpha[k] - res.lambda0[k];
  const auto ux = ad::reverse_sweep(record_initial(sys, x), a);
  res.gradient.resize(in);
  for (std::size_t k = 0; k < in; ++k) res.gradient[k] = ux[k] + z[n + k];
  return res;
}

ForwardSensitivityResult forward_sensitivity(const OdeSystem& sys, std::span<const double> x,
                                             const IntegratorConfig& cfg) {
  validate(sys, x);
  const std::size_t n = sys.state_dim;
  const std::size_t in = sys.input_dim;

  const Tape init = record_initial(sys, x);
  std::vector<double> z0(n + n * in);
  read_outputs(init, z0);
  const linalg::DenseMatrix ux = ad::jacobian(init);
  for (std::size_t j = 0; j < in; ++j) {
    for (std::size_t k = 0; k < n; ++k) z0[n + j * n + k] = ux(k, j);
  }

  Tape tape;
  std::vector<double> seed(in + n);
  const Field field = [&](double t, std::span<const double> z, std::span<double> dz) {
    record_rhs(tape, sys, x, z.subspan(0, n), t);
    read_outputs(tape, dz.subspan(0, n));
    for (std::size_t j = 0; j < in; ++j) {
      std::fill(seed.begin(), seed.end(), 0.0);
      seed[j] = 1.0;
      std::copy_n(z.begin() + static_cast<std::ptrdiff_t>(n + j * n), n,
                  seed.begin() + static_cast<std::ptrdiff_t>(in));
      const auto col = ad::forward_sweep(tape, seed);
      std::copy(col.begin(), col.end(), dz.begin() + static_cast<std::ptrdiff_t>(n + j * n));
    }
  };

  ForwardSensitivityResult res;
  const auto z = advance(field, z0, 0.0, sys.horizon, cfg, {}, &res.stats);
  res.final_state.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
  res.sensitivity = linalg::DenseMatrix(n, in);
  for (std::size_t j = 0; j < in; ++j) {
    for (std::size_t k = 0; k < n; ++k) res.sensitivity(k, j) = z[n + j * n + k];
  }
  return res;
}

OdeTraceResult trace_reverse_ode(const OdeSystem& sys, std::span<const double> x,
                                 const IntegratorConfig& cfg, std::span<const double> alpha) {
  validate(sys, x);
  expect_size(alpha.size(), sys.state_dim, "alpha");
  if (cfg.method != Method::rk4_fixed) {
    throw StructuralError("trace_reverse_ode requires the rk4_fixed method");
  }
  const std::size_t n = sys.state_dim;
  const std::size_t steps = fixed_step_count(0.0, sys.horizon, cfg.step_size);
  if (steps > cfg.max_steps) throw IntegrationError("trace: step count exceeds max_steps");
  const double h = sys.horizon / static_cast<double>(steps);

  Tape tape;
  const VarVector xv = ad::inputs(tape, x);
  VarVector y = sys.initial(xv);
  expect_size(y.size(), n, "initial state");
  auto rhs = [&](const VarVector& state, double t) {
    VarVector r = sys.rhs(xv, state, ad::constant(tape, t));
    expect_size(r.size(), n, "rhs output");
    return r;
  };
  auto shifted = [&](const VarVector& base, double c, const VarVector& k) {
    VarVector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + c * k[i];
    return out;
  };
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    const VarVector k1 = rhs(y, t);
    const VarVector k2 = rhs(shifted(y, 0.5 * h, k1), t + 0.5 * h);
    const VarVector k3 = rhs(shifted(y, 0.5 * h, k2), t + 0.5 * h);
    const VarVector k4 = rhs(shifted(y, h, k3), t + h);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  set_outputs(tape, y);
  OdeTraceResult res;
  res.gradient = ad::reverse_sweep(tape, alpha);
  res.final_state = ad::values(y);
  res.tape_length = tape.size();
  res.steps = steps;
  return res;
}

}  // namespace impdiff::ode
