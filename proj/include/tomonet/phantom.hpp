#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tomonet/tensor.hpp"

namespace tomonet {

enum class PhantomKind { SheppLogan, Ellipses, HotSpots };

PhantomKind phantom_kind_from_string(const std::string& s);
std::string to_string(PhantomKind kind);

// Ground-truth tracer image (depth 1, values in [0, 1]) plus an integer
// region-of-interest label map of the same spatial shape. Label 0 is
// background; labels 1..n_labels each occupy at least one pixel.
//
// For HotSpots phantoms label 1 is the warm background field and labels
// >= 2 are the hot discs (the tumour analogues).
struct Phantom {
  Tensor3 image;
  std::vector<int> labels;  // (y * width + x), same spatial shape as image
  int n_labels = 0;

  int label_at(int x, int y) const {
    return labels[static_cast<size_t>(y) * image.width() + x];
  }
};

// Deterministic phantom generator. SheppLogan ignores the seed; the random
// kinds draw every shape parameter from the seed. All phantoms are supported
// inside the inscribed circle so projections never clip.
Phantom make_phantom(PhantomKind kind, int size, uint64_t seed);

}  // namespace tomonet
