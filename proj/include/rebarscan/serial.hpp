#pragma once

#include <span>

#include "rebarscan/colorfilter.hpp"
#include "rebarscan/raster.hpp"

// Straightforward single-threaded versions of the parallel kernels. They
// share no code with the optimized paths and serve as test references.
namespace rebarscan::serial {

HsvImage rgb_to_hsv(const RasterImage& image);

BinaryMask hsv_filter(const RasterImage& image, const HsvRange& range);

/// Direct (non-separable) 2D convolution with clamp-to-edge borders.
RasterImage gaussian_blur(const RasterImage& image, int half_width, double sigma);

BinaryMask threshold_mask(const ConfidenceMap& conf, double tau);

/// Same contract as rebarscan::color_affinity, evaluating exp directly.
void color_affinity(const HsvImage& hsv, std::span<const HsvPixel> colors, double sigma,
                    ConfidenceMap& affinity, BinaryMask& within);

}  // namespace rebarscan::serial
