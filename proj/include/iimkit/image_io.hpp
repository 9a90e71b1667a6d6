// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include <string>

#include "iimkit/image.hpp"

namespace iim {

/// Reads an 8-bit PNG or binary PPM (P6), detected by magic bytes, and
/// maps samples to [0, 1] as v / 255.
ImageRGB load_image(const std::string& path);

/// Writes an 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void save_png(const ImageRGB& img, const std::string& path);

/// Writes a single plane as an 8-bit grayscale PNG; expects values in
/// [0, 1] (clamped otherwise).
void save_gray_png(const Grid& plane, const std::string& path);

/// IIMF1 container: magic "IIMF1\n", ASCII header "width height n_kernels\n",
/// then 3*n_kernels planes of row-major little-endian binary32.
void save_feature_stack(const FeatureStack& stack, const std::string& path);
FeatureStack load_feature_stack(const std::string& path);

} // namespace iim
