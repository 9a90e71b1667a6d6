// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include "iimkit/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iim {

const char* pair_name(Pair p) {
    switch (p) {
        case Pair::RB: return "rb";
        case Pair::RG: return "rg";
        case Pair::GB: return "gb";
    }
    return "?";
}

LogImage to_log(const ImageRGB& img, double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("to_log: epsilon must be positive");
    LogImage out;
    out.width = img.width;
    out.height = img.height;
    out.epsilon = epsilon;
    for (int c = 0; c < 3; ++c) {
        const Grid& src = img.planes[c];
        Grid dst(src.width, src.height);
        for (std::size_t i = 0; i < src.data.size(); ++i)
            dst.data[i] = std::log(std::max(src.data[i], epsilon));
        out.planes[c] = std::move(dst);
    }
    return out;
}

Grid normalize_for_display(const Grid& plane) {
    if (plane.empty())
        throw std::invalid_argument("normalize_for_display: empty plane");
    const auto [lo_it, hi_it] = std::minmax_element(plane.data.begin(), plane.data.end());
    const double lo = *lo_it, hi = *hi_it;
    Grid out(plane.width, plane.height);
    if (hi == lo) {
        std::fill(out.data.begin(), out.data.end(), 0.5);
        return out;
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < plane.data.size(); ++i)
        out.data[i] = (plane.data[i] - lo) / range;
    return out;
}

double max_abs_difference(const FeatureStack& a, const FeatureStack& b) {
    if (a.planes.size() != b.planes.size())
        throw std::invalid_argument("max_abs_difference: stack shape mismatch");
    double worst = 0.0;
    for (std::size_t p = 0; p < a.planes.size(); ++p) {
        const Grid& ga = a.planes[p];
        const Grid& gb = b.planes[p];
        if (!ga.same_shape(gb))
            throw std::invalid_argument("max_abs_difference: plane shape mismatch");
        for (std::size_t i = 0; i < ga.data.size(); ++i)
            worst = std::max(worst, std::abs(ga.data[i] - gb.data[i]));
    }
    return worst;
}

double max_abs_value(const FeatureStack& s) {
    double worst = 0.0;
    for (const Grid& g : s.planes)
        for (double v : g.data) worst = std::max(worst, std::abs(v));
    return worst;
}

FeatureStack narrow_to_float(const FeatureStack& s) {
    FeatureStack out = s;
    for (Grid& g : out.planes)
        for (double& v : g.data) v = static_cast<double>(static_cast<float>(v));
    return out;
}

} // namespace iim
