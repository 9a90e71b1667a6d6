// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include <cstdint>

#include "iimkit/image.hpp"

namespace iim {

/// Factored Lambertian scene: pixel value per channel C is
/// shading(p) * spectral_gain[C](p) * reflectance[C](p).
/// Shading is one grid shared by all channels; every factor must be in
/// (0, 1] so rendered values stay positive.
struct SceneSpec {
    int width = 0;
    int height = 0;
    std::array<Grid, 3> reflectance;
    Grid shading;
    std::array<Grid, 3> spectral_gain;
};

/// Parameters of a procedurally generated smooth multiplicative field.
/// `smoothness` is the correlation length in pixels; values land in
/// [lo, hi] with 0 < lo <= hi <= 1.
struct SmoothFieldSpec {
    double smoothness = 8.0;
    double lo = 0.5;
    double hi = 1.0;
    std::uint64_t seed = 0;
};

/// Renders the per-pixel factor product; throws on dimension mismatch or
/// non-positive factors.
ImageRGB render(const SceneSpec& scene);

/// Low-resolution uniform noise lattice of pitch `smoothness`, bicubic
/// (Catmull-Rom) upsampled, clamped to [0, 1] and affinely mapped to
/// [lo, hi]. Deterministic per seed.
Grid gen_smooth_field(int width, int height, const SmoothFieldSpec& spec);

/// Multiplies each channel by its gain. No clamping by default so exact
/// cancellation checks stay valid; pass clamp=true for displayable output.
ImageRGB apply_channel_gains(const ImageRGB& img, double gain_r, double gain_g,
                             double gain_b, bool clamp = false);

/// v -> v^gamma per pixel; values must be non-negative.
ImageRGB apply_gamma(const ImageRGB& img, double gamma);

/// Multiplies all channels by one shared field.
ImageRGB apply_field(const ImageRGB& img, const Grid& field, bool clamp = false);

/// Multiplies each channel by its own field.
ImageRGB apply_field(const ImageRGB& img, const Grid& field_r, const Grid& field_g,
                     const Grid& field_b, bool clamp = false);

/// Mean forward-difference gradient magnitude of a grid; the smoothness
/// diagnostic used by the field tests.
double mean_gradient_magnitude(const Grid& g);

} // namespace iim
