#include "impdiff/ad/tape.hpp"

#include <string>

#include "impdiff/errors.hpp"

namespace impdiff::ad {

std::string_view to_string(OpKind op) {
  switch (op) {
    case OpKind::input: return "input";
    case OpKind::constant: return "constant";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::neg: return "neg";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::sin: return "sin";
    case OpKind::cos: return "cos";
    case OpKind::pow: return "pow";
    case OpKind::implicit: return "implicit";
  }
  return "unknown";
}

NodeId Tape::add_input(Scalar value) {
  if (has_computed_) {
    throw StructuralError("tape inputs must be registered before any computed node");
  }
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back({OpKind::input, static_cast<std::uint32_t>(operands_.size()), 0, value});
  inputs_.push_back(id);
  return id;
}

NodeId Tape::add_constant(double value) {
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(
      {OpKind::constant, static_cast<std::uint32_t>(operands_.size()), 0, Scalar{value}});
  return id;
}

NodeId Tape::record(OpKind op, std::span<const NodeId> operands, Scalar value,
                    std::span<const Scalar> partials) {
  if (op == OpKind::input) return add_input(value);
  if (operands.size() != partials.size()) {
    throw StructuralError("record: " + std::to_string(operands.size()) +
                          " operands but " + std::to_string(partials.size()) +
                          " local partials");
  }
  if (op == OpKind::constant && !operands.empty()) {
    throw StructuralError("record: constant nodes take no operands");
  }
  const auto id = static_cast<NodeId>(nodes_.size());
  for (NodeId operand : operands) {
    if (operand >= id) {
      throw StructuralError("record: unknown operand id " + std::to_string(operand));
    }
  }
  if (op != OpKind::constant) has_computed_ = true;
  nodes_.push_back({op, static_cast<std::uint32_t>(operands_.size()),
                    static_cast<std::uint32_t>(operands.size()), value});
  operands_.insert(operands_.end(), operands.begin(), operands.end());
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  return id;
}

void Tape::set_outputs(std::vector<NodeId> ids) {
  for (NodeId id : ids) {
    if (id >= nodes_.size()) {
      throw StructuralError("set_outputs: unknown node id " + std::to_string(id));
    }
  }
  outputs_ = std::move(ids);
}

void Tape::clear() {
  has_computed_ = false;
  nodes_.clear();
  operands_.clear();
  partials_.clear();
  inputs_.clear();
  outputs_.clear();
}

}  // namespace impdiff::ad
