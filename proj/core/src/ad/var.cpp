#include "impdiff/ad/var.hpp"

#include <array>

#include "impdiff/errors.hpp"

namespace impdiff::ad {
namespace {

Tape& common_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw StructuralError("operation on an unbound Var");
  if (&a.tape() != &b.tape()) throw StructuralError("Vars from different tapes");
  return a.tape();
}

Var unary(OpKind op, const Var& a, Scalar value, Scalar partial) {
  if (!a.valid()) throw StructuralError("operation on an unbound Var");
  const std::array<NodeId, 1> ids{a.id()};
  const std::array<Scalar, 1> partials{partial};
  return {a.tape(), a.tape().record(op, ids, value, partials)};
}

Var binary(OpKind op, const Var& a, const Var& b, Scalar value, Scalar pa, Scalar pb) {
  Tape& tape = common_tape(a, b);
  const std::array<NodeId, 2> ids{a.id(), b.id()};
  const std::array<Scalar, 2> partials{pa, pb};
  return {tape, tape.record(op, ids, value, partials)};
}

bool is_constant(const Var& v) { return v.tape().node(v.id()).op == OpKind::constant; }

}  // namespace

Var constant(Tape& tape, double value) { return {tape, tape.add_constant(value)}; }

Var input(Tape& tape, double value, double tangent) {
  return {tape, tape.add_input(Scalar{value, tangent})};
}

VarVector inputs(Tape& tape, std::span<const double> values) {
  VarVector out;
  out.reserve(values.size());
  for (double v : values) out.push_back(input(tape, v));
  return out;
}

VarVector inputs(Tape& tape, std::span<const double> values,
                 std::span<const double> tangents) {
  if (values.size() != tangents.size()) {
    throw StructuralError("inputs: values and tangents differ in length");
  }
  VarVector out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back(input(tape, values[i], tangents[i]));
  }
  return out;
}

Var operator+(const Var& a, const Var& b) {
  return binary(OpKind::add, a, b, a.scalar() + b.scalar(), 1.0, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  return binary(OpKind::sub, a, b, a.scalar() - b.scalar(), 1.0, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  return binary(OpKind::mul, a, b, a.scalar() * b.scalar(), b.scalar(), a.scalar());
}

Var operator/(const Var& a, const Var& b) {
  const Scalar q = a.scalar() / b.scalar();
  const Scalar inv = Scalar{1.0} / b.scalar();
  return binary(OpKind::div, a, b, q, inv, -(q * inv));
}

Var operator-(const Var& a) { return unary(OpKind::neg, a, -a.scalar(), -1.0); }

Var operator+(const Var& a, double b) { return a + constant(a.tape(), b); }
Var operator+(double a, const Var& b) { return constant(b.tape(), a) + b; }
Var operator-(const Var& a, double b) { return a - constant(a.tape(), b); }
Var operator-(double a, const Var& b) { return constant(b.tape(), a) - b; }
Var operator*(const Var& a, double b) { return a * constant(a.tape(), b); }
Var operator*(double a, const Var& b) { return constant(b.tape(), a) * b; }
Var operator/(const Var& a, double b) { return a / constant(a.tape(), b); }
Var operator/(double a, const Var& b) { return constant(b.tape(), a) / b; }

Var& operator+=(Var& a, const Var& b) { return a = a + b; }
Var& operator-=(Var& a, const Var& b) { return a = a - b; }
Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var exp(const Var& a) {
  const Scalar e = exp(a.scalar());
  return unary(OpKind::exp, a, e, e);
}

Var log(const Var& a) {
  return unary(OpKind::log, a, log(a.scalar()), Scalar{1.0} / a.scalar());
}

Var sin(const Var& a) { return unary(OpKind::sin, a, sin(a.scalar()), cos(a.scalar())); }

Var cos(const Var& a) { return unary(OpKind::cos, a, cos(a.scalar()), -sin(a.scalar())); }

Var pow(const Var& a, const Var& b) {
  const Scalar base = a.scalar();
  const Scalar expo = b.scalar();
  const Scalar p = pow(base, expo);
  const Scalar pa = expo * pow(base, expo - Scalar{1.0});
  // A constant exponent has no cotangent to receive; skipping log(base) keeps
  // negative bases finite.
  const Scalar pb = is_constant(b) ? Scalar{0.0} : p * log(base);
  return binary(OpKind::pow, a, b, p, pa, pb);
}

Var pow(const Var& a, double b) { return pow(a, constant(a.tape(), b)); }
Var pow(double a, const Var& b) { return pow(constant(b.tape(), a), b); }
Var sqrt(const Var& a) { return pow(a, 0.5); }
Var square(const Var& a) { return a * a; }

Var implicit_node(Tape& tape, VarSpan operands, double value,
                  std::span<const double> partials) {
  if (tape.nested()) {
    throw StructuralError("implicit nodes are first-order only; cannot nest them");
  }
  std::vector<NodeId> ids;
  std::vector<Scalar> ps;
  ids.reserve(operands.size());
  ps.reserve(partials.size());
  for (const Var& v : operands) {
    if (&v.tape() != &tape) throw StructuralError("Vars from different tapes");
    ids.push_back(v.id());
  }
  for (double p : partials) ps.emplace_back(p);
  return {tape, tape.record(OpKind::implicit, ids, Scalar{value}, ps)};
}

std::vector<double> values(VarSpan vars) {
  std::vector<double> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(v.value());
  return out;
}

}  // namespace impdiff::ad
