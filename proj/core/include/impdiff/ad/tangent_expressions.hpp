#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "impdiff/ad/tape.hpp"
#include "impdiff/ad/var.hpp"

namespace impdiff::ad {

/// Forward mode at the expression level.
///
/// Walks the tape segment [segment_begin, end) and records, on the same tape,
/// expressions for the tangent of every segment node given tangent
/// expressions for a set of seed nodes. The result is the tangent of each
/// requested target, or nullopt when the target does not depend on any seed.
///
/// Because the tangents are themselves recorded nodes, a later reverse sweep
/// differentiates through them. This is how a solver's Jacobian enters a
/// trace that is differentiated end to end.
std::vector<std::optional<Var>> tangent_expressions(
    Tape& tape, NodeId segment_begin,
    std::span<const std::pair<NodeId, Var>> seeds, std::span<const Var> targets);

}  // namespace impdiff::ad
