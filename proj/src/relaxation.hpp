// Shared machinery for building the moment side of a relaxation: moment and
// localizing pencils for measures on a basic semi-algebraic set, with
// opposing constraint pairs folded into exact moment substitutions and the
// induced invariant subspaces factored out of every pencil.
#pragma once

#include <vector>

#include "msos/moment.hpp"
#include "msos/poly.hpp"
#include "msos/sdp.hpp"

namespace msos::detail {

struct MomentSide {
  moment::MonomialBasis ybasis;  // (nvars, 2r)
  std::vector<int> y;            // scalar id per basis index
  int moment_block = -1;
  std::vector<int> localizing_blocks;  // -1 when folded or identically zero
  std::vector<int> vdeg;               // ceil(deg g_j / 2)
  std::vector<poly::Polynomial> fold_polys;
};

MomentSide build_moment_side(sdp::Problem& P, int nvars,
                             const std::vector<poly::Polynomial>& constraints,
                             int r);

}  // namespace msos::detail
