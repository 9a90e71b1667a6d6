// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include "iimkit/lambertian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iimkit/rng.hpp"

namespace iim {

namespace {

void require_shape(const Grid& g, int w, int h, const char* what) {
    if (g.width != w || g.height != h)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// Catmull-Rom interpolation through p1 and p2 with tangents from p0/p3.
double catmull_rom(double p0, double p1, double p2, double p3, double t) {
    const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
    const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    const double c = -0.5 * p0 + 0.5 * p2;
    return ((a * t + b) * t + c) * t + p1;
}

double maybe_clamp01(double v, bool clamp) {
    return clamp ? std::min(v, 1.0) : v;
}

} // namespace

ImageRGB render(const SceneSpec& scene) {
    if (scene.width <= 0 || scene.height <= 0)
        throw std::invalid_argument("render: empty scene");
    require_shape(scene.shading, scene.width, scene.height, "render shading");
    for (int c = 0; c < 3; ++c) {
        require_shape(scene.reflectance[c], scene.width, scene.height, "render reflectance");
        require_shape(scene.spectral_gain[c], scene.width, scene.height, "render spectral gain");
    }
    ImageRGB img(scene.width, scene.height);
    for (int c = 0; c < 3; ++c) {
        const Grid& rho = scene.reflectance[c];
        const Grid& e = scene.spectral_gain[c];
        Grid& out = img.planes[c];
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const double m = scene.shading.data[i];
            if (!(m > 0.0) || !(rho.data[i] > 0.0) || !(e.data[i] > 0.0))
                throw std::invalid_argument("render: scene factors must be strictly positive");
            out.data[i] = m * e.data[i] * rho.data[i];
        }
    }
    return img;
}

Grid gen_smooth_field(int width, int height, const SmoothFieldSpec& spec) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("gen_smooth_field: empty field");
    if (!(spec.smoothness > 0.0))
        throw std::invalid_argument("gen_smooth_field: smoothness must be positive");
    if (!(spec.lo > 0.0) || !(spec.lo <= spec.hi) || !(spec.hi <= 1.0))
        throw std::invalid_argument("gen_smooth_field: need 0 < lo <= hi <= 1");

    const double pitch = spec.smoothness;
    const int nx = static_cast<int>(std::floor((width - 0.5) / pitch)) + 4;
    const int ny = static_cast<int>(std::floor((height - 0.5) / pitch)) + 4;

    Rng rng(spec.seed);
    std::vector<double> lattice(static_cast<std::size_t>(nx) * ny);
    for (double& v : lattice) v = rng.uniform01();
    const auto lat = [&](int i, int j) {
        return lattice[static_cast<std::size_t>(clamp_index(j, ny)) * nx + clamp_index(i, nx)];
    };

    Grid out(width, height);
    const double span = spec.hi - spec.lo;
    for (int y = 0; y < height; ++y) {
        const double v = (y + 0.5) / pitch;
        const int j0 = static_cast<int>(std::floor(v));
        const double ty = v - j0;
        for (int x = 0; x < width; ++x) {
            const double u = (x + 0.5) / pitch;
            const int i0 = static_cast<int>(std::floor(u));
            const double tx = u - i0;
            double rows[4];
            for (int jj = 0; jj < 4; ++jj) {
                const int j = j0 - 1 + jj;
                rows[jj] = catmull_rom(lat(i0 - 1, j), lat(i0, j), lat(i0 + 1, j),
                                       lat(i0 + 2, j), tx);
            }
            const double raw = catmull_rom(rows[0], rows[1], rows[2], rows[3], ty);
            out.at(x, y) = spec.lo + span * std::clamp(raw, 0.0, 1.0);
        }
    }
    return out;
}

ImageRGB apply_channel_gains(const ImageRGB& img, double gain_r, double gain_g,
                             double gain_b, bool clamp) {
    if (!(gain_r > 0.0) || !(gain_g > 0.0) || !(gain_b > 0.0))
        throw std::invalid_argument("apply_channel_gains: gains must be positive");
    const double gains[3] = {gain_r, gain_g, gain_b};
    ImageRGB out = img;
    for (int c = 0; c < 3; ++c)
        for (double& v : out.planes[c].data) v = maybe_clamp01(v * gains[c], clamp);
    return out;
}

ImageRGB apply_gamma(const ImageRGB& img, double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("apply_gamma: gamma must be positive");
    ImageRGB out = img;
    for (int c = 0; c < 3; ++c)
        for (double& v : out.planes[c].data) {
            if (v < 0.0)
                throw std::invalid_argument("apply_gamma: image values must be >= 0");
            v = std::pow(v, gamma);
        }
    return out;
}

ImageRGB apply_field(const ImageRGB& img, const Grid& field, bool clamp) {
    return apply_field(img, field, field, field, clamp);
}

ImageRGB apply_field(const ImageRGB& img, const Grid& field_r, const Grid& field_g,
                     const Grid& field_b, bool clamp) {
    const Grid* fields[3] = {&field_r, &field_g, &field_b};
    ImageRGB out = img;
    for (int c = 0; c < 3; ++c) {
        require_shape(*fields[c], img.width, img.height, "apply_field");
        for (std::size_t i = 0; i < out.planes[c].data.size(); ++i) {
            const double f = fields[c]->data[i];
            if (!(f > 0.0))
                throw std::invalid_argument("apply_field: field values must be positive");
            out.planes[c].data[i] = maybe_clamp01(out.planes[c].data[i] * f, clamp);
        }
    }
    return out;
}

double mean_gradient_magnitude(const Grid& g) {
    if (g.width < 2 || g.height < 2)
        return 0.0;
    double acc = 0.0;
    std::size_t count = 0;
    for (int y = 0; y + 1 < g.height; ++y)
        for (int x = 0; x + 1 < g.width; ++x) {
            const double dx = g.at(x + 1, y) - g.at(x, y);
            const double dy = g.at(x, y + 1) - g.at(x, y);
            acc += std::sqrt(dx * dx + dy * dy);
            ++count;
        }
    return acc / static_cast<double>(count);
}

} // namespace iim
