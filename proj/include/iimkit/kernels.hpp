// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iimkit/image.hpp"

namespace iim {

/// Largest kernel-weight mean accepted by the checked feature pass.
inline constexpr double kZeroMeanTolerance = 1e-9;

/// Square convolution kernel, odd side length k >= 3, row-major weights.
struct Kernel {
    int k = 0;
    std::vector<double> weights;

    Kernel() = default;
    Kernel(int side, double fill = 0.0)
        : k(side), weights(static_cast<std::size_t>(side) * side, fill) {}

    double at(int row, int col) const { return weights[static_cast<std::size_t>(row) * k + col]; }
    double& at(int row, int col) { return weights[static_cast<std::size_t>(row) * k + col]; }

    double mean() const;
    double frobenius_norm() const;
};

/// Set of kernels sharing one side length.
struct KernelBank {
    int n = 0;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<Kernel> kernels;
};

/// Weights drawn i.i.d. N(0, 0.1^2), then zero-mean projected and scaled
/// to unit Frobenius norm. Deterministic per seed. Features of the result
/// are illumination-invariant from the start.
KernelBank init_bank(int n, int k, std::uint64_t seed);

/// Subtracts the weight mean. Implemented as a fixed-point iteration so
/// projecting an already-projected kernel returns it bit-identically.
Kernel project_zero_mean(const Kernel& kernel);

/// Scales to Frobenius norm 1 (within a few ulp); also a fixed point, so
/// renormalizing is a bitwise no-op. Throws on the zero kernel.
Kernel normalize_unit(const Kernel& kernel);

/// True convolution (kernel rotated 180 degrees) with replicate padding
/// and same-size output; accumulation in binary64.
Grid conv2d_same(const Grid& plane, const Kernel& kernel);

/// Gradient of sum_p upstream(p) * conv2d_same(plane, kernel)(p) with
/// respect to the kernel weights; the adjoint of conv2d_same.
Kernel conv2d_kernel_grad(const Grid& upstream, const Grid& plane, int k);

/// Per kernel, the three channel-pair response planes
///   rb = K (*) ln R - K (*) ln B,  rg = ... ln G,  gb = ln G ... ln B.
/// The effective kernel is the zero-mean projection of the stored weights;
/// a stored mean above kZeroMeanTolerance is rejected.
FeatureStack features(const LogImage& logimg, const KernelBank& bank);

/// Same forward pass without the precondition check; the training path,
/// where stored weights are free parameters.
FeatureStack features_unchecked(const LogImage& logimg, const KernelBank& bank);

/// JSON bank file: {"k":int,"n":int,"seed":int,"kernels":[[k*k floats],..]}.
void save_bank(const KernelBank& bank, const std::string& path);

struct LoadedBank {
    KernelBank bank;
    /// Weight means as stored in the file, before any re-projection.
    std::vector<double> pre_projection_means;
};

/// Loads and validates a bank file; re-projects each kernel unless
/// reproject is false. Pre-projection means are always reported.
LoadedBank load_bank(const std::string& path, bool reproject = true);

} // namespace iim
