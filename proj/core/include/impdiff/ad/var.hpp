#pragma once

#include <span>
#include <vector>

#include "impdiff/ad/tape.hpp"

namespace impdiff::ad {

/// Handle to a node on a tape. Arithmetic on Vars records new nodes on the
/// same tape; mixing Vars from different tapes is a StructuralError.
class Var {
 public:
  Var() = default;
  Var(Tape& tape, NodeId id) : tape_(&tape), id_(id) {}

  double value() const { return tape_->node(id_).value.value; }
  double tangent() const { return tape_->node(id_).value.tangent; }
  Scalar scalar() const { return tape_->node(id_).value; }
  NodeId id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

using VarSpan = std::span<const Var>;
using VarVector = std::vector<Var>;

Var constant(Tape& tape, double value);
Var input(Tape& tape, double value, double tangent = 0.0);
VarVector inputs(Tape& tape, std::span<const double> values);
VarVector inputs(Tape& tape, std::span<const double> values,
                 std::span<const double> tangents);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

Var& operator+=(Var& a, const Var& b);
Var& operator-=(Var& a, const Var& b);
Var& operator*=(Var& a, const Var& b);

Var exp(const Var& a);
Var log(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var pow(const Var& a, const Var& b);
Var pow(const Var& a, double b);
Var pow(double a, const Var& b);
Var sqrt(const Var& a);
Var square(const Var& a);

/// Records an opaque first-order node with caller-supplied local partials.
Var implicit_node(Tape& tape, VarSpan operands, double value,
                  std::span<const double> partials);

/// Values of a list of Vars.
std::vector<double> values(VarSpan vars);

}  // namespace impdiff::ad
