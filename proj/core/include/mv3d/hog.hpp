#pragma once

#include <vector>

#include "mv3d/image.hpp"

namespace mv3d {

using HogDescriptor = std::vector<float>;

// Rec.601 luma in [0,1].
ImageF grayscale(const ImageU8& rgb);

// Block-normalized orientation histograms: centered-difference gradients
// (replicated border), 9 unsigned bins over [0,180) with linear
// interpolation between neighboring bin centers, 8x8-pixel cells, 2x2-cell
// blocks at stride 1 cell, L2 normalization with eps = 1e-6. Dimensions must
// be multiples of the cell size.
HogDescriptor hog(const ImageF& gray);

std::size_t hog_length(int width, int height);

float hog_distance(const HogDescriptor& a, const HogDescriptor& b);

}  // namespace mv3d
