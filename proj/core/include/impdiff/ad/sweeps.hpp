#pragma once

#include <functional>
#include <span>
#include <vector>

#include "impdiff/ad/tape.hpp"
#include "impdiff/ad/var.hpp"
#include "impdiff/linalg/dense.hpp"

namespace impdiff::ad {

/// J·v for the recorded program: tangents flow input to output.
std::vector<double> forward_sweep(const Tape& tape,
                                  std::span<const double> input_tangents);

/// Jᵀ·α for the recorded program: cotangents flow output to input, visiting
/// nodes in reverse tape order.
std::vector<double> reverse_sweep(const Tape& tape,
                                  std::span<const double> output_cotangents);

/// Reverse sweep over a nested tape. The tangent parts of the returned input
/// adjoints are the directional derivatives of Jᵀ·α along the recorded input
/// tangent.
std::vector<Scalar> reverse_sweep_nested(const Tape& tape,
                                         std::span<const double> output_cotangents);

/// Full J×I Jacobian from min(I, J) unit sweeps.
linalg::DenseMatrix jacobian(const Tape& tape);

using ScalarProgram = std::function<Var(VarSpan)>;
using VectorProgram = std::function<VarVector(VarSpan)>;

/// Records `program` at `x` on a fresh first-order tape.
Tape record(const VectorProgram& program, std::span<const double> x);

/// (∂²F/∂x²)·v for a scalar program, by forward-over-reverse nesting.
std::vector<double> hessian_vector(const ScalarProgram& program,
                                   std::span<const double> x,
                                   std::span<const double> v);

/// ∂F/∂x for a scalar program.
std::vector<double> gradient(const ScalarProgram& program, std::span<const double> x);

}  // namespace impdiff::ad
