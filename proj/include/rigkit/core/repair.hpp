#pragma once

#include "rigkit/core/types.hpp"

namespace rigkit {

/// Re-sorts every children list ascending by (tail.z, tail.y, tail.x), ties
/// broken by original storage index, and re-topologizes storage order so
/// parents precede children (pre-order). Joint identity is preserved.
SkeletonTree sort_children(const SkeletonTree& tree);

/// Detects the star-root pathology: root out-degree > 4 and the heavy
/// child's subtree covering more than half of the skeleton. When triggered,
/// cuts all root outgoing edges, promotes the heavy child to root and
/// reconnects the remaining components with a Euclidean minimum spanning
/// tree over joint tails. Otherwise returns the input unchanged.
std::pair<SkeletonTree, bool> repair_topology(const SkeletonTree& tree);

}  // namespace rigkit
