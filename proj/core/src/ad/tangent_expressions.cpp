#include "impdiff/ad/tangent_expressions.hpp"

#include <unordered_map>

#include "impdiff/errors.hpp"

namespace impdiff::ad {
namespace {

void accumulate(std::optional<Var>& acc, const Var& term) {
  acc = acc ? *acc + term : term;
}

}  // namespace

std::vector<std::optional<Var>> tangent_expressions(
    Tape& tape, NodeId segment_begin, std::span<const std::pair<NodeId, Var>> seeds,
    std::span<const Var> targets) {
  const auto segment_end = static_cast<NodeId>(tape.size());
  if (segment_begin > segment_end) {
    throw StructuralError("tangent_expressions: segment starts past the end of the tape");
  }
  std::unordered_map<NodeId, Var> seed_map;
  for (const auto& [id, v] : seeds) seed_map.emplace(id, v);

  std::vector<std::optional<Var>> seg(segment_end - segment_begin);
  auto tangent_of = [&](NodeId id) -> std::optional<Var> {
    if (auto it = seed_map.find(id); it != seed_map.end()) return it->second;
    if (id >= segment_begin && id < segment_end) return seg[id - segment_begin];
    return std::nullopt;
  };

  std::vector<NodeId> ops;
  std::vector<Scalar> ps;
  for (NodeId i = segment_begin; i < segment_end; ++i) {
    if (seed_map.contains(i)) {
      seg[i - segment_begin] = seed_map.at(i);
      continue;
    }
    // Copy out: recording new nodes may reallocate the tape's storage.
    const OpKind op = tape.node(i).op;
    const auto src_ops = tape.operands(i);
    ops.assign(src_ops.begin(), src_ops.end());
    const auto src_ps = tape.partials(i);
    ps.assign(src_ps.begin(), src_ps.end());
    if (ops.empty()) continue;

    std::vector<std::optional<Var>> t(ops.size());
    bool any = false;
    for (std::size_t k = 0; k < ops.size(); ++k) {
      t[k] = tangent_of(ops[k]);
      any = any || t[k].has_value();
    }
    if (!any) continue;

    const Var z(tape, i);
    const Var a(tape, ops[0]);
    std::optional<Var> out;
    switch (op) {
      case OpKind::add:
        for (const auto& tk : t) {
          if (tk) accumulate(out, *tk);
        }
        break;
      case OpKind::sub:
        if (t[0]) out = *t[0];
        if (t[1]) out = out ? *out - *t[1] : -*t[1];
        break;
      case OpKind::mul: {
        const Var b(tape, ops[1]);
        if (t[0]) accumulate(out, *t[0] * b);
        if (t[1]) accumulate(out, a * *t[1]);
        break;
      }
      case OpKind::div: {
        const Var b(tape, ops[1]);
        Var num = t[0] ? *t[0] : constant(tape, 0.0);
        if (t[1]) num = num - z * *t[1];
        out = num / b;
        break;
      }
      case OpKind::neg:
        out = -*t[0];
        break;
      case OpKind::exp:
        out = z * *t[0];
        break;
      case OpKind::log:
        out = *t[0] / a;
        break;
      case OpKind::sin:
        out = cos(a) * *t[0];
        break;
      case OpKind::cos:
        out = -(sin(a) * *t[0]);
        break;
      case OpKind::pow: {
        const Var b(tape, ops[1]);
        if (t[0]) accumulate(out, b * pow(a, b - 1.0) * *t[0]);
        if (t[1]) accumulate(out, z * log(a) * *t[1]);
        break;
      }
      case OpKind::implicit:
        for (std::size_t k = 0; k < ops.size(); ++k) {
          if (t[k]) accumulate(out, ps[k].value * *t[k]);
        }
        break;
      case OpKind::input:
      case OpKind::constant:
        break;
    }
    seg[i - segment_begin] = out;
  }

  std::vector<std::optional<Var>> result;
  result.reserve(targets.size());
  for (const Var& target : targets) result.push_back(tangent_of(target.id()));
  return result;
}

}  // namespace impdiff::ad
