// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include <array>

#include "iimkit/grid.hpp"

namespace iim {

/// Default floor used when taking logarithms of pixel values. It sits
/// below the 8-bit quantization step 1/255, so only true zeros clamp.
inline constexpr double kDefaultLogEpsilon = 1e-4;

/// Channel indices for ImageRGB / LogImage planes.
enum Channel : int { kR = 0, kG = 1, kB = 2 };

/// Channel pairs, in the fixed plane order used everywhere: the pair
/// (A, B) means plane = response(A) - response(B).
enum class Pair : int { RB = 0, RG = 1, GB = 2 };

inline constexpr std::array<Pair, 3> kAllPairs{Pair::RB, Pair::RG, Pair::GB};

inline Channel pair_first(Pair p) { return p == Pair::GB ? kG : kR; }
inline Channel pair_second(Pair p) { return p == Pair::RG ? kG : kB; }
const char* pair_name(Pair p);

/// Linear-light RGB image. Values loaded from files are in [0, 1];
/// synthetic operations (gains, fields) may push values above 1, which
/// the log-domain math tolerates.
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::array<Grid, 3> planes;

    ImageRGB() = default;
    ImageRGB(int w, int h, double fill = 0.0)
        : width(w), height(h), planes{Grid(w, h, fill), Grid(w, h, fill), Grid(w, h, fill)} {}
};

/// Per-channel natural-log planes of an ImageRGB, with the clamp floor
/// recorded at conversion time.
struct LogImage {
    int width = 0;
    int height = 0;
    double epsilon = kDefaultLogEpsilon;
    std::array<Grid, 3> planes;
};

/// n_kernels x 3 response planes, ordered (rb, rg, gb) per kernel.
struct FeatureStack {
    int width = 0;
    int height = 0;
    int n_kernels = 0;
    std::vector<Grid> planes;

    Grid& plane(int kernel, Pair p) {
        return planes[static_cast<std::size_t>(kernel) * 3 + static_cast<int>(p)];
    }
    const Grid& plane(int kernel, Pair p) const {
        return planes[static_cast<std::size_t>(kernel) * 3 + static_cast<int>(p)];
    }
};

/// ln(max(v, epsilon)) per pixel and channel.
LogImage to_log(const ImageRGB& img, double epsilon = kDefaultLogEpsilon);

/// Min-max normalization to [0, 1]; a constant plane maps to all 0.5.
Grid normalize_for_display(const Grid& plane);

/// Largest |a - b| over two stacks of identical shape.
double max_abs_difference(const FeatureStack& a, const FeatureStack& b);

/// Largest |v| over all planes.
double max_abs_value(const FeatureStack& s);

/// Stack with every value rounded through IEEE binary32, as serialization
/// stores it.
FeatureStack narrow_to_float(const FeatureStack& s);

} // namespace iim
