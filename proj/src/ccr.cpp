// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include "iimkit/ccr.hpp"

#include <cmath>
#include <stdexcept>

namespace iim {

namespace {

double log_clamped(const Grid& plane, int x, int y, double epsilon) {
    return std::log(std::max(plane.at(x, y), epsilon));
}

} // namespace

double ccr_pair(const ImageRGB& img, int x1, int y1, int x2, int y2, Pair pair,
                double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("ccr_pair: epsilon must be positive");
    if (x1 < 0 || x1 >= img.width || y1 < 0 || y1 >= img.height || x2 < 0 ||
        x2 >= img.width || y2 < 0 || y2 >= img.height)
        throw std::out_of_range("ccr_pair: pixel index out of bounds");
    const Grid& a = img.planes[pair_first(pair)];
    const Grid& b = img.planes[pair_second(pair)];
    const double da = log_clamped(a, x1, y1, epsilon) - log_clamped(a, x2, y2, epsilon);
    const double db = log_clamped(b, x1, y1, epsilon) - log_clamped(b, x2, y2, epsilon);
    return da - db;
}

FeatureStack edge_features(const LogImage& logimg) {
    FeatureStack out;
    out.width = logimg.width;
    out.height = logimg.height;
    out.n_kernels = 2;
    const Grid& lr = logimg.planes[kR];
    const Grid& lg = logimg.planes[kG];
    const Grid& lb = logimg.planes[kB];
    // Kernel 0 pairs with the right neighbor, kernel 1 with the one below;
    // replicate padding makes border pixels pair with themselves.
    for (int dir = 0; dir < 2; ++dir) {
        Grid rb(out.width, out.height), rg(out.width, out.height), gb(out.width, out.height);
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                const int qx = dir == 0 ? clamp_index(x + 1, out.width) : x;
                const int qy = dir == 0 ? y : clamp_index(y + 1, out.height);
                const double dr = lr.at(x, y) - lr.at(qx, qy);
                const double dg = lg.at(x, y) - lg.at(qx, qy);
                const double db = lb.at(x, y) - lb.at(qx, qy);
                rb.at(x, y) = dr - db;
                rg.at(x, y) = dr - dg;
                gb.at(x, y) = dg - db;
            }
        }
        out.planes.push_back(std::move(rb));
        out.planes.push_back(std::move(rg));
        out.planes.push_back(std::move(gb));
    }
    return out;
}

KernelBank edge_bank() {
    KernelBank bank;
    bank.n = 2;
    bank.k = 3;
    bank.seed = 0;
    // conv2d_same rotates the kernel, so the weight acting on the pixel to
    // the right of the center sits at column 0 (and the one below at row 0).
    Kernel horizontal(3);
    horizontal.at(1, 1) = 1.0;
    horizontal.at(1, 0) = -1.0;
    Kernel vertical(3);
    vertical.at(1, 1) = 1.0;
    vertical.at(0, 1) = -1.0;
    bank.kernels.push_back(std::move(horizontal));
    bank.kernels.push_back(std::move(vertical));
    return bank;
}

} // namespace iim
