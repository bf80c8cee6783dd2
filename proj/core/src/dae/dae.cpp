#include "impdiff/dae/dae.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "impdiff/ad/sweeps.hpp"
#include "impdiff/errors.hpp"

namespace impdiff::dae {
namespace {

using ad::Tape;
using ad::Var;
using ad::VarSpan;
using ad::VarVector;
using linalg::DenseMatrix;

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw StructuralError(std::string(what) + ": expected length " + std::to_string(want) +
                          ", got " + std::to_string(got));
  }
}

void validate(const DaeSystem& sys, std::span<const double> x) {
  if (!sys.rhs_differential || !sys.initial_differential) {
    throw StructuralError("DAE system is missing its differential part");
  }
  if (sys.algebraic_dim > 0 && !sys.algebraic_constraint) {
    throw StructuralError("DAE system has algebraic states but no constraint");
  }
  if (sys.differential_dim == 0) throw StructuralError("DAE needs at least one differential state");
  if (!(sys.horizon > 0.0)) throw StructuralError("DAE horizon must be positive");
  expect_size(x.size(), sys.input_dim, "x");
}

void set_outputs(Tape& tape, const VarVector& out) {
  std::vector<ad::NodeId> ids;
  ids.reserve(out.size());
  for (const Var& v : out) ids.push_back(v.id());
  tape.set_outputs(std::move(ids));
}

void read_outputs(const Tape& tape, std::span<double> out) {
  const auto outs = tape.outputs();
  for (std::size_t k = 0; k < outs.size(); ++k) out[k] = tape.node(outs[k]).value.value;
}

VarVector concat(VarSpan a, VarSpan b) {
  VarVector out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

enum class TimeSlot { constant, input };

// Inputs (x, yᵈ, yᵃ[, t]); outputs rᵈ or cᵃ.
void record(Tape& tape, const DaeFn& fn, std::size_t out_dim, std::span<const double> x,
            std::span<const double> yd, std::span<const double> ya, double t,
            TimeSlot slot = TimeSlot::constant) {
  tape.clear();
  const VarVector xv = ad::inputs(tape, x);
  const VarVector ydv = ad::inputs(tape, yd);
  const VarVector yav = ad::inputs(tape, ya);
  const Var tv = slot == TimeSlot::input ? ad::input(tape, t) : ad::constant(tape, t);
  const VarVector out = fn(xv, concat(ydv, yav), tv);
  expect_size(out.size(), out_dim, "DAE function output");
  set_outputs(tape, out);
}

Tape record_initial(const DaeSystem& sys, std::span<const double> x) {
  Tape tape;
  const VarVector xv = ad::inputs(tape, x);
  const VarVector u = sys.initial_differential(xv);
  expect_size(u.size(), sys.differential_dim, "initial differential state");
  set_outputs(tape, u);
  return tape;
}

// cᵃ(x, (yᵈ, ·), t) = 0 as a constraint system over inputs (x, yᵈ), with t
// read from a shared slot so one system serves every time point.
algebraic::ConstraintSystem projection_system(const DaeSystem& sys,
                                              std::shared_ptr<double> time) {
  const std::size_t in = sys.input_dim;
  return {sys.input_dim + sys.differential_dim, sys.algebraic_dim,
          [fn = sys.algebraic_constraint, in, time](VarSpan xin, VarSpan ya) {
            const Var t = ad::constant(ya[0].tape(), *time);
            return fn(xin.subspan(0, in), concat(xin.subspan(in), ya), t);
          },
          {},
          0};
}

class Projector {
 public:
  Projector(const DaeSystem& sys, std::span<const double> x)
      : sys_(sys),
        time_(std::make_shared<double>(0.0)),
        cs_(projection_system(sys, time_)),
        xin_(x.begin(), x.end()) {
    xin_.resize(sys.input_dim + sys.differential_dim);
  }

  std::vector<double>& warm() { return warm_; }
  const algebraic::ConstraintSystem& system() const { return cs_; }
  std::span<const double> xin() const { return xin_; }

  const std::vector<double>& solve(std::span<const double> yd, double t) {
    if (sys_.algebraic_dim == 0) return warm_;
    std::copy(yd.begin(), yd.end(), xin_.begin() + static_cast<std::ptrdiff_t>(sys_.input_dim));
    *time_ = t;
    warm_ = algebraic::newton_solve(cs_, xin_, warm_, sys_.newton).y_star;
    return warm_;
  }

 private:
  const DaeSystem& sys_;
  std::shared_ptr<double> time_;
  algebraic::ConstraintSystem cs_;
  std::vector<double> xin_;
  std::vector<double> warm_;
};

std::vector<double> initial_guess(const DaeSystem& sys, std::span<const double> x) {
  if (!sys.algebraic_guess) return std::vector<double>(sys.algebraic_dim, 0.0);
  auto g = sys.algebraic_guess(x);
  expect_size(g.size(), sys.algebraic_dim, "algebraic guess");
  return g;
}

// ẏᵃ = -(∂cᵃ/∂yᵃ)⁻¹(∂cᵃ/∂yᵈ·ẏᵈ + ∂cᵃ/∂t)
std::vector<double> algebraic_rate(const DaeSystem& sys, std::span<const double> x,
                                   std::span<const double> yd, std::span<const double> ya,
                                   std::span<const double> yd_rate, double t) {
  const std::size_t in = sys.input_dim;
  const std::size_t d = sys.differential_dim;
  const std::size_t a = sys.algebraic_dim;
  Tape tape;
  record(tape, sys.algebraic_constraint, a, x, yd, ya, t, TimeSlot::input);
  const DenseMatrix jac = ad::jacobian(tape);
  DenseMatrix c_a(a, a);
  std::vector<double> rhs(a, 0.0);
  for (std::size_t r = 0; r < a; ++r) {
    double acc = jac(r, in + d + a);
    for (std::size_t k = 0; k < d; ++k) acc += jac(r, in + k) * yd_rate[k];
    rhs[r] = acc;
    for (std::size_t k = 0; k < a; ++k) c_a(r, k) = jac(r, in + d + k);
  }
  const auto f = linalg::lu_factor(c_a);
  if (f.singular) throw SingularSystemError("algebraic Jacobian singular along the trajectory");
  auto rate = linalg::lu_solve(f, rhs);
  for (double& v : rate) v = -v;
  return rate;
}

linalg::LuFactors algebraic_block(const Tape& ctape, std::size_t offset, std::size_t a) {
  const DenseMatrix jac = ad::jacobian(ctape);
  DenseMatrix c_a(a, a);
  for (std::size_t r = 0; r < a; ++r) {
    for (std::size_t k = 0; k < a; ++k) c_a(r, k) = jac(r, offset + k);
  }
  auto f = linalg::lu_factor(c_a);
  if (f.singular) {
    throw SingularSystemError("algebraic adjoint solve singular: dcᵃ/dyᵃ is not invertible");
  }
  return f;
}

void check_trajectory(const DaeSystem& sys, const DaeTrajectory& traj) {
  const auto& knots = traj.differential.knots;
  if (knots.size() < 2) throw StructuralError("DAE trajectory has fewer than two knots");
  if (traj.algebraic.size() != knots.size() || traj.algebraic_rate.size() != knots.size()) {
    throw StructuralError("DAE trajectory: algebraic data does not match the knots");
  }
  const double slack = 1e-12 * std::max(1.0, sys.horizon);
  if (std::abs(knots.front().t) > slack || std::abs(knots.back().t - sys.horizon) > slack) {
    throw StructuralError("DAE trajectory does not span [0, horizon]");
  }
}

}  // namespace

std::vector<double> DaeTrajectory::final_state() const {
  return concat(differential.final_state(), algebraic.back());
}

ConsistentState consistent_initialize(const DaeSystem& sys, std::span<const double> x) {
  validate(sys, x);
  ConsistentState s;
  s.differential.resize(sys.differential_dim);
  read_outputs(record_initial(sys, x), s.differential);
  if (sys.algebraic_dim == 0) return s;
  Projector proj(sys, x);
  proj.warm() = initial_guess(sys, x);
  try {
    s.algebraic = proj.solve(s.differential, 0.0);
  } catch (const Error& e) {
    throw InitializationError(std::string("no consistent algebraic initial state: ") +
                              e.what());
  }
  return s;
}

double constraint_residual(const DaeSystem& sys, std::span<const double> x,
                           std::span<const double> y, double t) {
  if (sys.algebraic_dim == 0) return 0.0;
  expect_size(y.size(), sys.state_dim(), "y");
  Tape tape;
  const auto yd = y.subspan(0, sys.differential_dim);
  const auto ya = y.subspan(sys.differential_dim);
  record(tape, sys.algebraic_constraint, sys.algebraic_dim, x, yd, ya, t);
  std::vector<double> c(sys.algebraic_dim);
  read_outputs(tape, c);
  return linalg::norm_inf(c);
}

DaeTrajectory dae_integrate(const DaeSystem& sys, std::span<const double> x,
                            const ode::IntegratorConfig& cfg, ode::AdvanceStats* stats) {
  const ConsistentState init = consistent_initialize(sys, x);
  Projector proj(sys, x);
  proj.warm() = init.algebraic;
  Tape tape;
  const ode::Field field = [&](double t, std::span<const double> yd, std::span<double> dyd) {
    const auto& ya = proj.solve(yd, t);
    record(tape, sys.rhs_differential, sys.differential_dim, x, yd, ya, t);
    read_outputs(tape, dyd);
  };

  DaeTrajectory traj;
  traj.differential = ode::integrate_field(field, init.differential, 0.0, sys.horizon, cfg, stats);
  const auto& knots = traj.differential.knots;
  traj.algebraic.reserve(knots.size());
  traj.algebraic_rate.reserve(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (sys.algebraic_dim == 0) {
      traj.algebraic.emplace_back();
      traj.algebraic_rate.emplace_back();
      continue;
    }
    proj.warm() = k == 0 ? init.algebraic : traj.algebraic.back();
    traj.algebraic.push_back(proj.solve(knots[k].y, knots[k].t));
    traj.algebraic_rate.push_back(
        algebraic_rate(sys, x, knots[k].y, traj.algebraic.back(), knots[k].ydot, knots[k].t));
  }
  return traj;
}

DaeAdjointResult dae_adjoint_reverse(const DaeSystem& sys, std::span<const double> x,
                                     const DaeTrajectory& trajectory,
                                     std::span<const double> alpha,
                                     const ode::IntegratorConfig& cfg) {
  validate(sys, x);
  check_trajectory(sys, trajectory);
  expect_size(alpha.size(), sys.state_dim(), "alpha");
  const std::size_t in = sys.input_dim;
  const std::size_t d = sys.differential_dim;
  const std::size_t a = sys.algebraic_dim;
  const auto& knots = trajectory.differential.knots;

  DaeAdjointResult res;
  res.alpha_effective.assign(alpha.begin(), alpha.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> direct(in, 0.0);
  Tape ctape;
  if (a > 0) {
    // yᵃ(τ) = h(x, yᵈ(τ), τ): pull α_a back through the terminal constraint.
    record(ctape, sys.algebraic_constraint, a, x, knots.back().y, trajectory.algebraic.back(),
           sys.horizon);
    const auto f = algebraic_block(ctape, in + d, a);
    const auto w = linalg::lu_solve(f, alpha.subspan(d), linalg::Transpose::yes);
    const auto pulled = ad::reverse_sweep(ctape, w);
    for (std::size_t k = 0; k < in; ++k) direct[k] = -pulled[k];
    for (std::size_t k = 0; k < d; ++k) res.alpha_effective[k] -= pulled[in + k];
  }

  // Algebraic state along the backward pass: Hermite guess, then projection.
  ode::DenseTrajectory alg_guess;
  if (a > 0) {
    for (std::size_t k = 0; k < knots.size(); ++k) {
      alg_guess.knots.push_back(
          {knots[k].t, trajectory.algebraic[k], trajectory.algebraic_rate[k]});
    }
  }
  Projector proj(sys, x);
  Tape tape;
  std::vector<double> yd(d), adj_in(d), lam_a(a);
  std::vector<double> last_lambda_a;

  const ode::Field field = [&](double t, std::span<const double> z, std::span<double> dz) {
    trajectory.differential.interpolate(t, yd);
    if (a > 0) proj.warm() = alg_guess.interpolate(t);
    const auto& ya = proj.solve(yd, t);
    record(tape, sys.rhs_differential, d, x, yd, ya, t);
    for (std::size_t k = 0; k < d; ++k) adj_in[k] = res.alpha_effective[k] - z[k];
    const auto g = ad::reverse_sweep(tape, adj_in);
    if (a == 0) {
      for (std::size_t k = 0; k < d; ++k) dz[k] = g[in + k];
      for (std::size_t k = 0; k < in; ++k) dz[d + k] = -g[k];
      return;
    }
    record(ctape, sys.algebraic_constraint, a, x, yd, ya, t);
    const auto f = algebraic_block(ctape, in + d, a);
    std::span<const double> g_a(g.data() + in + d, a);
    lam_a = linalg::lu_solve(f, g_a, linalg::Transpose::yes);
    for (double& v : lam_a) v = -v;
    last_lambda_a = lam_a;
    const auto h = ad::reverse_sweep(ctape, lam_a);
    for (std::size_t k = 0; k < d; ++k) dz[k] = g[in + k] + h[in + k];
    for (std::size_t k = 0; k < in; ++k) dz[d + k] = -(g[k] + h[k]);
  };

  std::vector<double> z(d + in, 0.0);
  {
    std::vector<double> dz(d + in);
    field(sys.horizon, z, dz);
    res.lambda_a_terminal = last_lambda_a;
  }
  ode::IntegratorConfig bcfg = cfg;
  for (std::size_t k = knots.size() - 1; k-- > 0;) {
    if (cfg.method == ode::Method::rk45_adaptive) bcfg.initial_step = knots[k + 1].t - knots[k].t;
    z = ode::advance(field, z, knots[k + 1].t, knots[k].t, bcfg, {}, &res.stats);
  }

  res.lambda_d0.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> w(d);
  for (std::size_t k = 0; k < d; ++k) w[k] = res.alpha_effective[k] - res.lambda_d0[k];
  const auto ux = ad::reverse_sweep(record_initial(sys, x), w);
  res.gradient.resize(in);
  for (std::size_t k = 0; k < in; ++k) res.gradient[k] = ux[k] + z[d + k] + direct[k];
  return res;
}

ode::OdeSystem reduce_to_ode(const DaeSystem& sys) {
  ode::OdeSystem out;
  out.state_dim = sys.differential_dim;
  out.input_dim = sys.input_dim;
  out.horizon = sys.horizon;
  out.initial = sys.initial_differential;
  if (sys.algebraic_dim == 0) {
    out.rhs = sys.rhs_differential;
    return out;
  }
  auto time = std::make_shared<double>(0.0);
  auto cs = std::make_shared<algebraic::ConstraintSystem>(projection_system(sys, time));
  auto warm = std::make_shared<std::vector<double>>();
  out.rhs = [sys, time, cs, warm](VarSpan x, VarSpan yd, const Var& t) {
    Tape& tape = yd[0].tape();
    const VarVector operands = concat(x, yd);
    const std::vector<double> xin = ad::values(operands);
    *time = t.value();
    if (warm->empty()) *warm = initial_guess(sys, std::span<const double>(xin).first(sys.input_dim));
    const auto sol = algebraic::newton_solve(*cs, xin, *warm, sys.newton);
    *warm = sol.y_star;
    VarVector ya;
    std::vector<double> e(sys.algebraic_dim, 0.0);
    for (std::size_t k = 0; k < sys.algebraic_dim; ++k) {
      e[k] = 1.0;
      const auto row = algebraic::ift_reverse(*cs, xin, sol.y_star, e);
      e[k] = 0.0;
      ya.push_back(ad::implicit_node(tape, operands, sol.y_star[k], row));
    }
    return sys.rhs_differential(x, concat(yd, ya), t);
  };
  return out;
}

namespace {

struct TerminalAlgebraic {
  std::vector<double> ya;
  algebraic::ConstraintSystem cs;
  std::vector<double> xin;
};

TerminalAlgebraic terminal_algebraic(const DaeSystem& sys, std::span<const double> x,
                                     std::span<const double> yd_final) {
  auto time = std::make_shared<double>(sys.horizon);
  TerminalAlgebraic t{{}, projection_system(sys, time), concat(x, yd_final)};
  t.ya = algebraic::newton_solve(t.cs, t.xin, initial_guess(sys, x), sys.newton).y_star;
  return t;
}

}  // namespace

std::vector<double> reduction_gradient(const DaeSystem& sys, std::span<const double> x,
                                       std::span<const double> alpha,
                                       const ode::IntegratorConfig& cfg) {
  validate(sys, x);
  expect_size(alpha.size(), sys.state_dim(), "alpha");
  const std::size_t in = sys.input_dim;
  const std::size_t d = sys.differential_dim;
  const ode::OdeSystem reduced = reduce_to_ode(sys);
  const auto traj = ode::integrate(reduced, x, cfg);

  std::vector<double> alpha_eff(alpha.begin(), alpha.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> direct(in, 0.0);
  if (sys.algebraic_dim > 0) {
    const auto term = terminal_algebraic(sys, x, traj.final_state());
    const auto pulled = algebraic::ift_reverse(term.cs, term.xin, term.ya, alpha.subspan(d));
    for (std::size_t k = 0; k < in; ++k) direct[k] = pulled[k];
    for (std::size_t k = 0; k < d; ++k) alpha_eff[k] += pulled[in + k];
  }
  auto g = ode::adjoint_reverse(reduced, x, traj, alpha_eff, cfg).gradient;
  for (std::size_t k = 0; k < in; ++k) g[k] += direct[k];
  return g;
}

DenseMatrix dae_forward_sensitivity(const DaeSystem& sys, std::span<const double> x,
                                    const ode::IntegratorConfig& cfg) {
  validate(sys, x);
  const std::size_t in = sys.input_dim;
  const std::size_t d = sys.differential_dim;
  const std::size_t a = sys.algebraic_dim;
  const auto fs = ode::forward_sensitivity(reduce_to_ode(sys), x, cfg);
  DenseMatrix s(d + a, in);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < in; ++c) s(r, c) = fs.sensitivity(r, c);
  }
  if (a == 0) return s;
  // S_a = -(∂cᵃ/∂yᵃ)⁻¹(∂cᵃ/∂x + ∂cᵃ/∂yᵈ·S_d)
  const auto term = terminal_algebraic(sys, x, fs.final_state);
  const auto jac = algebraic::constraint_jacobians(term.cs, term.xin, term.ya);
  const auto f = linalg::lu_factor(jac.c_y);
  if (f.singular) throw SingularSystemError("algebraic Jacobian singular at the horizon");
  std::vector<double> col(a);
  for (std::size_t c = 0; c < in; ++c) {
    for (std::size_t r = 0; r < a; ++r) {
      double acc = jac.c_x(r, c);
      for (std::size_t k = 0; k < d; ++k) acc += jac.c_x(r, in + k) * fs.sensitivity(k, c);
      col[r] = acc;
    }
    const auto sa = linalg::lu_solve(f, col);
    for (std::size_t r = 0; r < a; ++r) s(d + r, c) = -sa[r];
  }
  return s;
}

}  // namespace impdiff::dae
