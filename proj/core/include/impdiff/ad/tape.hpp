#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "impdiff/ad/scalar.hpp"

namespace impdiff::ad {

using NodeId = std::uint32_t;

/// Elementary operations a tape can hold. `implicit` is an opaque node whose
/// local partials were supplied by the caller (for instance by the implicit
/// function theorem); it is first-order only.
enum class OpKind : std::uint8_t {
  input,
  constant,
  add,
  sub,
  mul,
  div,
  neg,
  exp,
  log,
  sin,
  cos,
  pow,
  implicit,
};

std::string_view to_string(OpKind op);

enum class TapeMode : std::uint8_t {
  first_order,
  nested,  ///< values and partials carry tangents (forward-over-reverse)
};

struct TapeNode {
  OpKind op = OpKind::constant;
  std::uint32_t operand_offset = 0;
  std::uint32_t operand_count = 0;
  Scalar value;
};

/// Recorded expression graph in topological order.
///
/// Nodes can only reference earlier nodes, so append order is a valid
/// topological sort and no explicit sort pass exists. Each node keeps its
/// operand ids and the local partials of its value with respect to those
/// operands, evaluated at record time; nothing else about the operation is
/// needed to sweep it.
///
/// A tape is single-writer while recording. Once recording is finished it is
/// only read, and concurrent sweeps over the same tape are safe.
class Tape {
 public:
  explicit Tape(TapeMode mode = TapeMode::first_order) : mode_(mode) {}

  TapeMode mode() const noexcept { return mode_; }
  bool nested() const noexcept { return mode_ == TapeMode::nested; }

  /// Registers an independent input. Inputs must precede every computed
  /// node; constants may be interleaved freely.
  NodeId add_input(Scalar value);
  NodeId add_constant(double value);

  /// Appends a node. Throws StructuralError for a dangling operand id or a
  /// partials/operands length mismatch.
  NodeId record(OpKind op, std::span<const NodeId> operands, Scalar value,
                std::span<const Scalar> partials);

  void set_outputs(std::vector<NodeId> ids);

  std::size_t size() const noexcept { return nodes_.size(); }
  const TapeNode& node(NodeId id) const { return nodes_[id]; }
  std::span<const NodeId> operands(NodeId id) const {
    const auto& n = nodes_[id];
    return {operands_.data() + n.operand_offset, n.operand_count};
  }
  std::span<const Scalar> partials(NodeId id) const {
    const auto& n = nodes_[id];
    return {partials_.data() + n.operand_offset, n.operand_count};
  }
  std::span<const NodeId> inputs() const noexcept { return inputs_; }
  std::span<const NodeId> outputs() const noexcept { return outputs_; }

  /// Drops every node but keeps allocated capacity, so a tape can be reused
  /// for repeated evaluations of the same program.
  void clear();

 private:
  TapeMode mode_;
  bool has_computed_ = false;
  std::vector<TapeNode> nodes_;
  std::vector<NodeId> operands_;
  std::vector<Scalar> partials_;
  std::vector<NodeId> inputs_;
  std::vector<NodeId> outputs_;
};

}  // namespace impdiff::ad
