// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include "iimkit/image.hpp"
#include "iimkit/kernels.hpp"

namespace iim {

/// Log cross-color ratio between pixels p1 and p2 for the channel pair
/// (A, B):  ln A(p1) - ln A(p2) + ln B(p2) - ln B(p1), every sample
/// clamped to epsilon before the log. Gains and shading cancel exactly.
double ccr_pair(const ImageRGB& img, int x1, int y1, int x2, int y2, Pair pair,
                double epsilon = kDefaultLogEpsilon);

/// Fixed-kernel features from adjacent-pixel differences: kernel 0 pairs
/// each pixel with its right neighbor, kernel 1 with the one below
/// (+1 at the pixel, -1 at the neighbor, replicate at borders). Produces
/// the same values, bit for bit, as features() with edge_bank().
FeatureStack edge_features(const LogImage& logimg);

/// The two fixed adjacent-pixel kernels embedded in 3x3 grids, stored in
/// the conv2d_same (true convolution) parameterization.
KernelBank edge_bank();

} // namespace iim
