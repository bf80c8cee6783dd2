#include "impdiff/ad/sweeps.hpp"

#include <cmath>
#include <string>

#include "impdiff/errors.hpp"

namespace impdiff::ad {
namespace {

void check_finite(const Tape& tape, NodeId id) {
  const TapeNode& n = tape.node(id);
  bool ok = is_finite(n.value);
  for (const Scalar& p : tape.partials(id)) ok = ok && is_finite(p);
  if (!ok) {
    throw NonFiniteError(id, "non-finite value or partial at tape node " +
                                 std::to_string(id) + " (" +
                                 std::string(to_string(n.op)) + ")");
  }
}

void check_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw StructuralError(std::string(what) + ": expected " + std::to_string(want) +
                          " entries, got " + std::to_string(got));
  }
}

}  // namespace

std::vector<double> forward_sweep(const Tape& tape, std::span<const double> input_tangents) {
  check_length(input_tangents.size(), tape.inputs().size(), "forward_sweep");
  std::vector<double> dot(tape.size(), 0.0);
  for (std::size_t k = 0; k < tape.inputs().size(); ++k) {
    dot[tape.inputs()[k]] = input_tangents[k];
  }
  for (NodeId i = 0; i < tape.size(); ++i) {
    check_finite(tape, i);
    const auto ops = tape.operands(i);
    if (ops.empty()) continue;
    const auto ps = tape.partials(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < ops.size(); ++k) acc += ps[k].value * dot[ops[k]];
    dot[i] = acc;
  }
  std::vector<double> out;
  out.reserve(tape.outputs().size());
  for (NodeId o : tape.outputs()) out.push_back(dot[o]);
  return out;
}

std::vector<double> reverse_sweep(const Tape& tape,
                                  std::span<const double> output_cotangents) {
  check_length(output_cotangents.size(), tape.outputs().size(), "reverse_sweep");
  std::vector<double> adj(tape.size(), 0.0);
  for (std::size_t k = 0; k < tape.outputs().size(); ++k) {
    adj[tape.outputs()[k]] += output_cotangents[k];
  }
  for (NodeId i = static_cast<NodeId>(tape.size()); i-- > 0;) {
    check_finite(tape, i);
    const double a = adj[i];
    if (a == 0.0) continue;
    const auto ops = tape.operands(i);
    const auto ps = tape.partials(i);
    for (std::size_t k = 0; k < ops.size(); ++k) adj[ops[k]] += ps[k].value * a;
  }
  std::vector<double> out;
  out.reserve(tape.inputs().size());
  for (NodeId in : tape.inputs()) out.push_back(adj[in]);
  return out;
}

std::vector<Scalar> reverse_sweep_nested(const Tape& tape,
                                         std::span<const double> output_cotangents) {
  check_length(output_cotangents.size(), tape.outputs().size(), "reverse_sweep_nested");
  std::vector<Scalar> adj(tape.size());
  for (std::size_t k = 0; k < tape.outputs().size(); ++k) {
    adj[tape.outputs()[k]] += Scalar{output_cotangents[k]};
  }
  for (NodeId i = static_cast<NodeId>(tape.size()); i-- > 0;) {
    check_finite(tape, i);
    const Scalar a = adj[i];
    if (a.value == 0.0 && a.tangent == 0.0) continue;
    const auto ops = tape.operands(i);
    const auto ps = tape.partials(i);
    for (std::size_t k = 0; k < ops.size(); ++k) adj[ops[k]] += ps[k] * a;
  }
  std::vector<Scalar> out;
  out.reserve(tape.inputs().size());
  for (NodeId in : tape.inputs()) out.push_back(adj[in]);
  return out;
}

linalg::DenseMatrix jacobian(const Tape& tape) {
  const std::size_t n_in = tape.inputs().size();
  const std::size_t n_out = tape.outputs().size();
  linalg::DenseMatrix jac(n_out, n_in);
  if (n_in <= n_out) {
    std::vector<double> seed(n_in, 0.0);
    for (std::size_t j = 0; j < n_in; ++j) {
      seed[j] = 1.0;
      jac.set_column(j, forward_sweep(tape, seed));
      seed[j] = 0.0;
    }
  } else {
    std::vector<double> seed(n_out, 0.0);
    for (std::size_t i = 0; i < n_out; ++i) {
      seed[i] = 1.0;
      const auto row = reverse_sweep(tape, seed);
      std::copy(row.begin(), row.end(), jac.row(i).begin());
      seed[i] = 0.0;
    }
  }
  return jac;
}

Tape record(const VectorProgram& program, std::span<const double> x) {
  Tape tape;
  const VarVector in = inputs(tape, x);
  const VarVector out = program(in);
  std::vector<NodeId> ids;
  ids.reserve(out.size());
  for (const Var& v : out) ids.push_back(v.id());
  tape.set_outputs(std::move(ids));
  return tape;
}

std::vector<double> hessian_vector(const ScalarProgram& program, std::span<const double> x,
                                   std::span<const double> v) {
  check_length(v.size(), x.size(), "hessian_vector");
  Tape tape(TapeMode::nested);
  const VarVector in = inputs(tape, x, v);
  const Var out = program(in);
  tape.set_outputs({out.id()});
  const double one = 1.0;
  const auto adj = reverse_sweep_nested(tape, std::span(&one, 1));
  std::vector<double> hv;
  hv.reserve(adj.size());
  for (const Scalar& a : adj) hv.push_back(a.tangent);
  return hv;
}

std::vector<double> gradient(const ScalarProgram& program, std::span<const double> x) {
  Tape tape;
  const VarVector in = inputs(tape, x);
  const Var out = program(in);
  tape.set_outputs({out.id()});
  const double one = 1.0;
  return reverse_sweep(tape, std::span(&one, 1));
}

}  // namespace impdiff::ad
