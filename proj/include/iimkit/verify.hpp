// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iimkit/image.hpp"
#include "iimkit/kernels.hpp"
#include "iimkit/lambertian.hpp"

namespace iim {

/// Outcome of one verification suite.
struct CheckResult {
    std::string name;
    bool pass = false;
    double stat = 0.0; // worst observed value
    double tol = 0.0;
    std::string detail;
    std::vector<double> per_trial; // populated by multi-trial suites
};

/// Well-conditioned random Lambertian scene: every factor is bounded away
/// from zero so rendered pixels stay >= ~0.05 and the log clamp never
/// fires for gammas in [0.5, 2] or gains down to 0.25.
SceneSpec make_test_scene(int width, int height, std::uint64_t seed);
ImageRGB make_test_image(int width, int height, std::uint64_t seed);

/// Feature change under per-channel uniform gains from {0.25, 1, 4}^3,
/// for edge features and every bank given.
CheckResult check_gain_invariance(const std::vector<KernelBank>& banks, int n_images,
                                  int image_size, std::uint64_t seed, double tol);

/// f(I^gamma) = gamma * f(I) for gamma in {0.5, 1, 2}; error measured
/// relative to the largest |feature| in the reference stack.
CheckResult check_gamma_scaling(const std::vector<KernelBank>& banks, int n_images,
                                int image_size, std::uint64_t seed, double tol);

/// Feature change under one shared multiplicative field, any roughness.
CheckResult check_shared_field(const std::vector<KernelBank>& banks, int n_images,
                               int image_size, std::uint64_t seed, double tol);

/// project(project(K)) == project(K) bitwise, and post-projection |mean|.
CheckResult check_projection_idempotence(std::uint64_t seed);

/// Analytic loss gradient against central finite differences; per-trial
/// errors are relative to the largest gradient component.
CheckResult check_gradcheck(int trials, std::uint64_t seed, double h, double tol);

/// Kernel means and norms of a bank as loaded (used by verify --bank).
CheckResult check_bank_constraints(const KernelBank& bank, double mean_tol);

} // namespace iim
