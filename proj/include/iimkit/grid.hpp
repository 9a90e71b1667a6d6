// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include <cstddef>
#include <vector>

namespace iim {

/// Row-major 2D grid of doubles; the pixel container used for image
/// planes, multiplicative fields and feature maps.
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int w, int h, double fill = 0.0)
        : width(w), height(h),
          data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    double at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Grid& o) const {
        return width == o.width && height == o.height;
    }
};

/// Index clamped to [0, n-1]; replicate padding for border reads.
inline int clamp_index(int i, int n) {
    if (i < 0) return 0;
    if (i >= n) return n - 1;
    return i;
}

} // namespace iim
