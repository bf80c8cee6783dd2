#include "impdiff/registry/registry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

#include "impdiff/errors.hpp"

namespace impdiff::registry {
namespace {

using ad::Var;
using ad::VarSpan;
using ad::VarVector;
using linalg::DenseMatrix;

constexpr std::array<std::pair<ProblemKind, std::string_view>, 6> kKindNames{{
    {ProblemKind::algebraic, "algebraic"},
    {ProblemKind::difference, "difference"},
    {ProblemKind::optimization, "optimization"},
    {ProblemKind::constrained_optimization, "constrained_optimization"},
    {ProblemKind::ode, "ode"},
    {ProblemKind::dae, "dae"},
}};

DenseMatrix column(std::initializer_list<double> v) {
  DenseMatrix m(v.size(), 1);
  std::size_t r = 0;
  for (double e : v) m(r++, 0) = e;
  return m;
}

GuessFn constant_guess(std::vector<double> y0) {
  return [y0 = std::move(y0)](std::span<const double>) { return y0; };
}

// ---- algebraic -------------------------------------------------------------

ProblemSpec algebraic_sqrt(const Overrides&) {
  ProblemSpec s;
  s.name = "algebraic-sqrt";
  s.kind = ProblemKind::algebraic;
  s.description = "c = y^2 - x; y* = sqrt(x), singular at x = 0";
  s.dims = {1, 1, 0};
  s.default_x = {4.0};
  // Starting at y0 = x keeps Newton on the positive branch and makes x = 0 a
  // zero-residual start with C_y = 0, which is the IFT failure case.
  s.default_y0 = [](std::span<const double> x) { return std::vector<double>{x[0]}; };
  s.algebraic = algebraic::ConstraintSystem{
      1, 1, [](VarSpan x, VarSpan y) { return VarVector{y[0] * y[0] - x[0]}; }, {}, 0};
  s.analytic_jacobian = [](std::span<const double> x) {
    return column({0.5 / std::sqrt(x[0])});
  };
  return s;
}

ProblemSpec algebraic_linear(const Overrides&) {
  ProblemSpec s;
  s.name = "algebraic-linear";
  s.kind = ProblemKind::algebraic;
  s.description = "c = A y - x with A = [[2,1],[1,3]]; y* = A^-1 x";
  s.dims = {2, 2, 0};
  s.default_x = {1.0, 2.0};
  s.default_y0 = constant_guess({0.0, 0.0});
  s.algebraic = algebraic::ConstraintSystem{
      2, 2,
      [](VarSpan x, VarSpan y) {
        return VarVector{2.0 * y[0] + y[1] - x[0], y[0] + 3.0 * y[1] - x[1]};
      },
      {},
      0};
  s.analytic_jacobian = [](std::span<const double>) {
    DenseMatrix m(2, 2);
    m(0, 0) = 0.6;
    m(0, 1) = -0.2;
    m(1, 0) = -0.2;
    m(1, 1) = 0.4;
    return m;
  };
  return s;
}

ProblemSpec algebraic_coupled(const Overrides&) {
  ProblemSpec s;
  s.name = "algebraic-coupled";
  s.kind = ProblemKind::algebraic;
  s.description = "two coupled cubics with a summary y1*y2 + sin(y1)";
  s.dims = {2, 2, 0};
  s.default_x = {0.8, -0.5};
  s.default_y0 = constant_guess({0.0, 0.0});
  s.algebraic = algebraic::ConstraintSystem{
      2, 2,
      [](VarSpan x, VarSpan y) {
        return VarVector{y[0] * y[0] * y[0] + y[0] + 0.2 * y[1] - x[0],
                         y[1] * y[1] * y[1] + 2.0 * y[1] - x[1] * y[0] - x[1]};
      },
      [](VarSpan y) { return VarVector{y[0] * y[1] + sin(y[0])}; },
      1};
  s.dims.output = 1;
  return s;
}

// ---- difference equations ----------------------------------------------------

ProblemSpec diffeq_constant(const Overrides& o) {
  const std::size_t steps = o.steps.value_or(5);
  ProblemSpec s;
  s.name = "diffeq-constant";
  s.kind = ProblemKind::difference;
  s.description = "y_{i+1} = y_i + x, y_0 = 0; y_I = I*x";
  s.dims = {1, 1, 0};
  s.default_x = {0.7};
  s.difference = difference::DifferenceSystem{
      1, 1, steps, [](VarSpan, VarSpan x, std::size_t) { return VarVector{x[0] * 1.0}; },
      [](VarSpan x) { return VarVector{0.0 * x[0]}; }};
  s.analytic_jacobian = [steps](std::span<const double>) {
    return column({static_cast<double>(steps)});
  };
  return s;
}

ProblemSpec diffeq_geometric(const Overrides& o) {
  const std::size_t steps = o.steps.value_or(3);
  const double n = static_cast<double>(steps);
  ProblemSpec s;
  s.name = "diffeq-geometric";
  s.kind = ProblemKind::difference;
  s.description = "y_{i+1} = (1 + a) y_i, y_0 = 1; y_I = (1 + a)^I";
  s.dims = {1, 1, 0};
  s.default_x = {0.3 / n};  // keeps (1 + a)^I near e^0.3 for any step count
  s.difference = difference::DifferenceSystem{
      1, 1, steps, [](VarSpan y, VarSpan x, std::size_t) { return VarVector{x[0] * y[0]}; },
      [](VarSpan x) { return VarVector{0.0 * x[0] + 1.0}; }};
  s.analytic_jacobian = [n](std::span<const double> x) {
    return column({n * std::pow(1.0 + x[0], n - 1.0)});
  };
  return s;
}

ProblemSpec diffeq_logistic(const Overrides& o) {
  const std::size_t steps = o.steps.value_or(50);
  const double h = 5.0 / static_cast<double>(steps);
  ProblemSpec s;
  s.name = "diffeq-logistic";
  s.kind = ProblemKind::difference;
  s.description = "explicit Euler logistic growth, rate x0, capacity x1, y_0 = x2";
  s.dims = {3, 1, 0};
  s.default_x = {1.5, 2.0, 0.2};
  s.difference = difference::DifferenceSystem{
      1, 3, steps,
      [h](VarSpan y, VarSpan x, std::size_t) {
        return VarVector{h * x[0] * y[0] * (1.0 - y[0] / x[1])};
      },
      [](VarSpan x) { return VarVector{x[2] * 1.0}; }};
  return s;
}

// ---- optimization ----------------------------------------------------------

ProblemSpec opt_quadratic(const Overrides&) {
  ProblemSpec s;
  s.name = "opt-quadratic";
  s.kind = ProblemKind::optimization;
  s.description = "F = -(y1^2 + 2 y2^2)/2 + x y1; y* = (x, 0)";
  s.dims = {1, 2, 0};
  s.default_x = {1.5};
  s.default_y0 = constant_guess({0.0, 0.0});
  s.objective = optimize::ObjectiveProblem{1, 2, [](VarSpan x, VarSpan y) {
                                             return -(y[0] * y[0] + 2.0 * y[1] * y[1]) / 2.0 +
                                                    x[0] * y[0];
                                           }};
  s.analytic_jacobian = [](std::span<const double>) { return column({1.0, 0.0}); };
  return s;
}

ProblemSpec opt_exp(const Overrides&) {
  ProblemSpec s;
  s.name = "opt-exp";
  s.kind = ProblemKind::optimization;
  s.description = "F = x y - exp(y); y* = log(x)";
  s.dims = {1, 1, 0};
  s.default_x = {2.0};
  s.default_y0 = constant_guess({0.0});
  s.objective = optimize::ObjectiveProblem{
      1, 1, [](VarSpan x, VarSpan y) { return x[0] * y[0] - exp(y[0]); }};
  s.analytic_jacobian = [](std::span<const double> x) { return column({1.0 / x[0]}); };
  return s;
}

ProblemSpec opt_saddle(const Overrides&) {
  ProblemSpec s;
  s.name = "opt-saddle";
  s.kind = ProblemKind::optimization;
  s.description = "F = y1^2/2 - x y1 - y2^2/2; stationary saddle at (x, 0)";
  s.dims = {1, 2, 0};
  s.default_x = {0.5};
  s.default_y0 = constant_guess({0.0, 0.3});
  s.objective = optimize::ObjectiveProblem{1, 2, [](VarSpan x, VarSpan y) {
                                             return y[0] * y[0] / 2.0 - x[0] * y[0] -
                                                    y[1] * y[1] / 2.0;
                                           }};
  s.analytic_jacobian = [](std::span<const double>) { return column({1.0, 0.0}); };
  return s;
}

ProblemSpec opt_constrained_sum(const Overrides&) {
  ProblemSpec s;
  s.name = "opt-constrained-sum";
  s.kind = ProblemKind::constrained_optimization;
  s.description = "F = -(y1^2 + y2^2)/2 subject to y1 + y2 = x; y* = (x/2, x/2)";
  s.dims = {1, 2, 1};
  s.default_x = {1.0};
  s.default_y0 = constant_guess({0.0, 0.0});
  s.constrained = optimize::ConstrainedProblem{
      1, 2, 1, [](VarSpan, VarSpan y) { return -(y[0] * y[0] + y[1] * y[1]) / 2.0; },
      [](VarSpan x, VarSpan y) { return VarVector{y[0] + y[1] - x[0]}; }};
  s.analytic_jacobian = [](std::span<const double>) { return column({0.5, 0.5}); };
  return s;
}

// ---- ODEs ----------------------------------------------------------------------

ProblemSpec ode_decay(const Overrides&) {
  constexpr double tau = 1.0;
  ProblemSpec s;
  s.name = "ode-decay";
  s.kind = ProblemKind::ode;
  s.description = "y' = -x1 y, y(0) = x2, tau = 1";
  s.dims = {2, 1, 0};
  s.default_x = {0.5, 2.0};
  s.ode = ode::OdeSystem{1, 2, tau,
                         [](VarSpan x, VarSpan y, const Var&) { return VarVector{-x[0] * y[0]}; },
                         [](VarSpan x) { return VarVector{x[1] * 1.0}; }};
  s.analytic_jacobian = [](std::span<const double> x) {
    const double e = std::exp(-x[0] * tau);
    DenseMatrix m(1, 2);
    m(0, 0) = -tau * x[1] * e;
    m(0, 1) = e;
    return m;
  };
  return s;
}

ProblemSpec ode_harmonic(const Overrides&) {
  constexpr double tau = 2.0;
  ProblemSpec s;
  s.name = "ode-harmonic";
  s.kind = ProblemKind::ode;
  s.description = "y1' = y2, y2' = -x y1, y(0) = (1, 0), tau = 2";
  s.dims = {1, 2, 0};
  s.default_x = {1.5};
  s.ode = ode::OdeSystem{
      2, 1, tau,
      [](VarSpan x, VarSpan y, const Var&) { return VarVector{y[1] * 1.0, -x[0] * y[0]}; },
      [](VarSpan x) { return VarVector{0.0 * x[0] + 1.0, 0.0 * x[0]}; }};
  // y1 = cos(w t), y2 = -w sin(w t), w = sqrt(x), dw/dx = 1/(2w)
  s.analytic_jacobian = [](std::span<const double> x) {
    const double w = std::sqrt(x[0]);
    const double sn = std::sin(w * tau);
    const double cs = std::cos(w * tau);
    return column({-tau * sn / (2.0 * w), -(sn + w * tau * cs) / (2.0 * w)});
  };
  return s;
}

ProblemSpec ode_linear_nd(const Overrides& o) {
  const std::size_t n = o.state_dim.value_or(4);
  const std::size_t in = o.input_dim.value_or(3);
  if (n == 0 || in == 0) throw StructuralError("ode-linear-nd needs state_dim, input_dim >= 1");
  // Fixed seed: the problem is part of the CLI contract.
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  DenseMatrix a(n, n), b(n, in), c(n, in);
  const double spread = 0.5 / std::sqrt(static_cast<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < n; ++k) a(r, k) = (r == k ? -1.0 : 0.0) + spread * unit(rng);
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < in; ++k) b(r, k) = unit(rng);
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < in; ++k) c(r, k) = unit(rng);
  }

  ProblemSpec s;
  s.name = "ode-linear-nd";
  s.kind = ProblemKind::ode;
  s.description = "y' = A y + B x, y(0) = C x with seeded A (stable), B, C; tau = 1";
  s.dims = {in, n, 0};
  s.default_x.resize(in);
  for (std::size_t k = 0; k < in; ++k) s.default_x[k] = static_cast<double>(k + 1) / in;
  s.ode = ode::OdeSystem{
      n, in, 1.0,
      [a, b, n, in](VarSpan x, VarSpan y, const Var&) {
        VarVector r;
        r.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          Var acc = a(i, 0) * y[0];
          for (std::size_t k = 1; k < n; ++k) acc = acc + a(i, k) * y[k];
          for (std::size_t k = 0; k < in; ++k) acc = acc + b(i, k) * x[k];
          r.push_back(acc);
        }
        return r;
      },
      [c, n, in](VarSpan x) {
        VarVector u;
        u.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          Var acc = c(i, 0) * x[0];
          for (std::size_t k = 1; k < in; ++k) acc = acc + c(i, k) * x[k];
          u.push_back(acc);
        }
        return u;
      }};
  return s;
}

// ---- DAEs ----------------------------------------------------------------------

ProblemSpec dae_conserved_sum(const Overrides&) {
  constexpr double tau = 1.0;
  ProblemSpec s;
  s.name = "dae-conserved-sum";
  s.kind = ProblemKind::dae;
  s.description = "y1' = -x y1, 0 = y1 + y2 - 1, y1(0) = 0.5, tau = 1";
  s.dims = {1, 2, 1};
  s.default_x = {1.0};
  dae::DaeSystem d;
  d.differential_dim = 1;
  d.algebraic_dim = 1;
  d.input_dim = 1;
  d.horizon = tau;
  d.rhs_differential = [](VarSpan x, VarSpan y, const Var&) { return VarVector{-x[0] * y[0]}; };
  d.algebraic_constraint = [](VarSpan, VarSpan y, const Var&) {
    return VarVector{y[0] + y[1] - 1.0};
  };
  d.initial_differential = [](VarSpan x) { return VarVector{0.0 * x[0] + 0.5}; };
  s.dae = std::move(d);
  s.analytic_jacobian = [](std::span<const double> x) {
    const double g = 0.5 * tau * std::exp(-x[0] * tau);
    return column({-g, g});
  };
  return s;
}

ProblemSpec dae_cubic(const Overrides&) {
  ProblemSpec s;
  s.name = "dae-cubic";
  s.kind = ProblemKind::dae;
  s.description = "two differential states coupled to y3 with y3^3 + y3 = y1 + 0.3 x3 t";
  s.dims = {3, 3, 1};
  s.default_x = {0.7, 0.4, 1.1};
  dae::DaeSystem d;
  d.differential_dim = 2;
  d.algebraic_dim = 1;
  d.input_dim = 3;
  d.horizon = 1.5;
  d.rhs_differential = [](VarSpan x, VarSpan y, const Var&) {
    return VarVector{-x[0] * y[0] + 0.5 * y[2], y[0] - x[1] * y[1] * y[2]};
  };
  d.algebraic_constraint = [](VarSpan x, VarSpan y, const Var& t) {
    return VarVector{y[2] * y[2] * y[2] + y[2] - y[0] - 0.3 * x[2] * t};
  };
  d.initial_differential = [](VarSpan x) { return VarVector{x[0] * 1.0, x[1] + 1.0}; };
  s.dae = std::move(d);
  return s;
}

// ---- table -------------------------------------------------------------------

struct Entry {
  std::string_view name;
  ProblemKind kind;
  std::vector<std::string> override_keys;
  ProblemSpec (*build)(const Overrides&);
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t{
        {"algebraic-coupled", ProblemKind::algebraic, {}, algebraic_coupled},
        {"algebraic-linear", ProblemKind::algebraic, {}, algebraic_linear},
        {"algebraic-sqrt", ProblemKind::algebraic, {}, algebraic_sqrt},
        {"dae-conserved-sum", ProblemKind::dae, {}, dae_conserved_sum},
        {"dae-cubic", ProblemKind::dae, {}, dae_cubic},
        {"diffeq-constant", ProblemKind::difference, {"steps"}, diffeq_constant},
        {"diffeq-geometric", ProblemKind::difference, {"steps"}, diffeq_geometric},
        {"diffeq-logistic", ProblemKind::difference, {"steps"}, diffeq_logistic},
        {"ode-decay", ProblemKind::ode, {}, ode_decay},
        {"ode-harmonic", ProblemKind::ode, {}, ode_harmonic},
        {"ode-linear-nd", ProblemKind::ode, {"state_dim", "input_dim"}, ode_linear_nd},
        {"opt-constrained-sum", ProblemKind::constrained_optimization, {}, opt_constrained_sum},
        {"opt-exp", ProblemKind::optimization, {}, opt_exp},
        {"opt-quadratic", ProblemKind::optimization, {}, opt_quadratic},
        {"opt-saddle", ProblemKind::optimization, {}, opt_saddle},
    };
    std::sort(t.begin(), t.end(), [](const Entry& a, const Entry& b) { return a.name < b.name; });
    return t;
  }();
  return table;
}

void check_overrides(const Entry& e, const Overrides& o) {
  auto reject = [&](bool present, const char* key) {
    if (present && std::find(e.override_keys.begin(), e.override_keys.end(), key) ==
                       e.override_keys.end()) {
      throw StructuralError(std::string(e.name) + " does not accept the override '" + key + "'");
    }
  };
  reject(o.state_dim.has_value(), "state_dim");
  reject(o.input_dim.has_value(), "input_dim");
  reject(o.steps.has_value(), "steps");
  if (o.steps && *o.steps == 0) throw StructuralError("steps must be at least 1");
}

void check_dims(const ProblemSpec& s) {
  auto fail = [&s] { throw std::logic_error("registry problem " + s.name + ": dims mismatch"); };
  if (s.default_x.size() != s.dims.input) fail();
  switch (s.kind) {
    case ProblemKind::algebraic:
      if (!s.algebraic || s.algebraic->input_dim != s.dims.input ||
          s.algebraic->effective_summary_dim() != s.dims.output) {
        fail();
      }
      break;
    case ProblemKind::difference:
      if (!s.difference || s.difference->input_dim != s.dims.input ||
          s.difference->state_dim != s.dims.output) {
        fail();
      }
      break;
    case ProblemKind::optimization:
      if (!s.objective || s.objective->input_dim != s.dims.input ||
          s.objective->output_dim != s.dims.output) {
        fail();
      }
      break;
    case ProblemKind::constrained_optimization:
      if (!s.constrained || s.constrained->input_dim != s.dims.input ||
          s.constrained->output_dim != s.dims.output ||
          s.constrained->constraint_dim != s.dims.constraints) {
        fail();
      }
      break;
    case ProblemKind::ode:
      if (!s.ode || s.ode->input_dim != s.dims.input || s.ode->state_dim != s.dims.output) fail();
      break;
    case ProblemKind::dae:
      if (!s.dae || s.dae->input_dim != s.dims.input || s.dae->state_dim() != s.dims.output ||
          s.dae->algebraic_dim != s.dims.constraints) {
        fail();
      }
      break;
  }
}

void self_check_all() {
  for (const Entry& e : entries()) {
    const ProblemSpec s = e.build({});
    check_dims(s);
    if (!s.analytic_jacobian) continue;
    // Integrated problems need a wider stencil: the re-solves carry ~1e-12 error.
    const bool integrated = s.kind == ProblemKind::ode || s.kind == ProblemKind::dae;
    const double err = analytic_self_check(s, s.default_x, integrated ? 1e-4 : 1e-6);
    if (!(err <= 1e-6)) {
      throw std::logic_error("registry self-check failed for " + s.name + ": rel err " +
                             std::to_string(err));
    }
  }
}

void ensure_checked() {
  static std::once_flag flag;
  std::call_once(flag, self_check_all);
}

std::vector<double> initial_guess_or_zeros(const ProblemSpec& s, std::span<const double> x,
                                           std::size_t n) {
  if (s.default_y0) return s.default_y0(x);
  return std::vector<double>(n, 0.0);
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<ProblemKind> parse_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::vector<double> ProblemSpec::initial_guess(std::span<const double> x) const {
  std::size_t n = dims.output;
  if (algebraic) n = algebraic->output_dim;
  return initial_guess_or_zeros(*this, x, n);
}

ProblemSpec lookup(std::string_view name, const Overrides& overrides) {
  ensure_checked();
  for (const Entry& e : entries()) {
    if (e.name != name) continue;
    check_overrides(e, overrides);
    ProblemSpec s = e.build(overrides);
    check_dims(s);
    return s;
  }
  std::string names;
  for (const Entry& e : entries()) {
    if (!names.empty()) names += ", ";
    names += e.name;
  }
  throw NotFoundError("unknown problem '" + std::string(name) + "'; available: " + names);
}

std::vector<ProblemInfo> enumerate() {
  ensure_checked();
  std::vector<ProblemInfo> out;
  for (const Entry& e : entries()) {
    out.push_back({std::string(e.name), e.kind, e.build({}).description, e.override_keys});
  }
  return out;
}

Solution solve(const ProblemSpec& spec, std::span<const double> x, const SolveOptions& opts) {
  if (x.size() != spec.dims.input) {
    throw StructuralError(spec.name + ": expected " + std::to_string(spec.dims.input) +
                          " inputs, got " + std::to_string(x.size()));
  }
  Solution sol;
  switch (spec.kind) {
    case ProblemKind::algebraic: {
      const auto r = algebraic::newton_solve(*spec.algebraic, x, spec.initial_guess(x), spec.newton);
      sol.value = algebraic::summarize(*spec.algebraic, r.y_star);
      sol.iterations = r.iterations;
      break;
    }
    case ProblemKind::difference: {
      sol.value = difference::simulate(*spec.difference, x).final_state();
      sol.iterations = spec.difference->steps;
      break;
    }
    case ProblemKind::optimization: {
      auto r = optimize::maximize(*spec.objective, x, spec.initial_guess(x), spec.newton);
      sol.value = std::move(r.y_star);
      sol.iterations = r.iterations;
      sol.warning = std::move(r.warning);
      break;
    }
    case ProblemKind::constrained_optimization: {
      auto r = optimize::maximize_constrained(*spec.constrained, x, spec.initial_guess(x),
                                              spec.default_mu0, spec.newton);
      sol.value = std::move(r.y_star);
      sol.iterations = r.iterations;
      sol.warning = std::move(r.warning);
      break;
    }
    case ProblemKind::ode: {
      ode::AdvanceStats stats;
      sol.value = ode::integrate(*spec.ode, x, opts.integrator, &stats).final_state();
      sol.iterations = stats.steps;
      break;
    }
    case ProblemKind::dae: {
      ode::AdvanceStats stats;
      sol.value = dae::dae_integrate(*spec.dae, x, opts.integrator, &stats).final_state();
      sol.iterations = stats.steps;
      break;
    }
  }
  return sol;
}

double analytic_self_check(const ProblemSpec& spec, std::span<const double> x, double h_rel) {
  if (!spec.analytic_jacobian) throw StructuralError(spec.name + " has no analytic Jacobian");
  SolveOptions opts;
  opts.integrator = opts.fd_integrator;
  const DenseMatrix exact = spec.analytic_jacobian(x);
  std::vector<double> xp(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = h_rel * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const auto fp = solve(spec, xp, opts).value;
    xp[i] = x[i] - h;
    const auto fm = solve(spec, xp, opts).value;
    xp[i] = x[i];
    for (std::size_t r = 0; r < fp.size(); ++r) {
      const double fd = (fp[r] - fm[r]) / (2.0 * h);
      worst = std::max(worst, std::abs(exact(r, i) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

}  // namespace impdiff::registry
