#pragma once

#include "tomonet/tensor.hpp"

namespace tomonet {

// Periodic shuffling between (H, W, r^2*D) and (r*H, r*W, D). Both operators
// are pure permutations of the element multiset, exact inverses of each
// other, and each one's adjoint is the other.

// Upscale: output(x, y, d) = T(x/r, y/r, D*(mod(y,r)*r + mod(x,r)) + d)
// with D = T.depth / r^2. Requires T.depth divisible by r^2.
Tensor3 ps_up(const Tensor3& t, int r);

// Downscale: output(x, y, d) = T(x*r + mod(d/D, r), y*r + (d/D)/r, mod(d, D))
// with D = T.depth. Requires T.height and T.width divisible by r.
Tensor3 ps_down(const Tensor3& t, int r);

// Gradients: the forward maps are permutations, so each gradient is the
// inverse permutation applied to the upstream cotangent.
Tensor3 ps_up_grad(const Tensor3& upstream, int r);
Tensor3 ps_down_grad(const Tensor3& upstream, int r);

}  // namespace tomonet
