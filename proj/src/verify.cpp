// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include "iimkit/verify.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "iimkit/ccr.hpp"
#include "iimkit/rng.hpp"
#include "iimkit/train.hpp"

namespace iim {

namespace {

bool bitwise_equal(const Kernel& a, const Kernel& b) {
    if (a.k != b.k || a.weights.size() != b.weights.size()) return false;
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        if (std::bit_cast<std::uint64_t>(a.weights[i]) !=
            std::bit_cast<std::uint64_t>(b.weights[i]))
            return false;
    return true;
}

std::string format_stat(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

/// Largest |a - gamma*b| over two stacks, relative to the largest
/// |gamma*b| element.
double max_scaled_difference(const FeatureStack& a, const FeatureStack& b, double scale) {
    double worst = 0.0, ref = 0.0;
    for (std::size_t p = 0; p < a.planes.size(); ++p)
        for (std::size_t i = 0; i < a.planes[p].data.size(); ++i) {
            const double want = scale * b.planes[p].data[i];
            worst = std::max(worst, std::abs(a.planes[p].data[i] - want));
            ref = std::max(ref, std::abs(want));
        }
    return worst / (ref + 1e-300);
}

} // namespace

SceneSpec make_test_scene(int width, int height, std::uint64_t seed) {
    Rng rng(seed);
    SceneSpec scene;
    scene.width = width;
    scene.height = height;
    SmoothFieldSpec spec;
    for (int c = 0; c < 3; ++c) {
        spec.smoothness = 3.0;
        spec.lo = 0.35;
        spec.hi = 0.95;
        spec.seed = rng.next_u64();
        scene.reflectance[c] = gen_smooth_field(width, height, spec);
    }
    spec.smoothness = std::max(4.0, std::min(width, height) / 8.0);
    spec.lo = 0.45;
    spec.hi = 1.0;
    spec.seed = rng.next_u64();
    scene.shading = gen_smooth_field(width, height, spec);
    for (int c = 0; c < 3; ++c) {
        spec.smoothness = std::max(8.0, std::min(width, height) / 4.0);
        spec.lo = 0.45;
        spec.hi = 1.0;
        spec.seed = rng.next_u64();
        scene.spectral_gain[c] = gen_smooth_field(width, height, spec);
    }
    return scene;
}

ImageRGB make_test_image(int width, int height, std::uint64_t seed) {
    return render(make_test_scene(width, height, seed));
}

CheckResult check_gain_invariance(const std::vector<KernelBank>& banks, int n_images,
                                  int image_size, std::uint64_t seed, double tol) {
    constexpr double kGains[3] = {0.25, 1.0, 4.0};
    double worst = 0.0;
    for (int i = 0; i < n_images; ++i) {
        const ImageRGB img = make_test_image(image_size, image_size, seed + i);
        const LogImage base = to_log(img);
        const FeatureStack edge_ref = edge_features(base);
        std::vector<FeatureStack> bank_ref;
        for (const KernelBank& bank : banks) bank_ref.push_back(features(base, bank));
        for (double gr : kGains)
            for (double gg : kGains)
                for (double gb : kGains) {
                    const LogImage gained =
                        to_log(apply_channel_gains(img, gr, gg, gb));
                    worst = std::max(worst,
                                     max_abs_difference(edge_features(gained), edge_ref));
                    for (std::size_t b = 0; b < banks.size(); ++b)
                        worst = std::max(
                            worst, max_abs_difference(features(gained, banks[b]), bank_ref[b]));
                }
    }
    return {"gain-invariance", worst < tol, worst, tol,
            "max |delta feature| = " + format_stat(worst), {}};
}

CheckResult check_gamma_scaling(const std::vector<KernelBank>& banks, int n_images,
                                int image_size, std::uint64_t seed, double tol) {
    constexpr double kGammas[3] = {0.5, 1.0, 2.0};
    double worst = 0.0;
    for (int i = 0; i < n_images; ++i) {
        const ImageRGB img = make_test_image(image_size, image_size, seed + i);
        const LogImage base = to_log(img);
        const FeatureStack edge_ref = edge_features(base);
        std::vector<FeatureStack> bank_ref;
        for (const KernelBank& bank : banks) bank_ref.push_back(features(base, bank));
        for (double gamma : kGammas) {
            const LogImage powed = to_log(apply_gamma(img, gamma));
            worst = std::max(worst,
                             max_scaled_difference(edge_features(powed), edge_ref, gamma));
            for (std::size_t b = 0; b < banks.size(); ++b)
                worst = std::max(worst, max_scaled_difference(features(powed, banks[b]),
                                                              bank_ref[b], gamma));
        }
    }
    return {"gamma-scaling", worst < tol, worst, tol,
            "max relative error = " + format_stat(worst), {}};
}

CheckResult check_shared_field(const std::vector<KernelBank>& banks, int n_images,
                               int image_size, std::uint64_t seed, double tol) {
    double worst = 0.0;
    for (int i = 0; i < n_images; ++i) {
        const ImageRGB img = make_test_image(image_size, image_size, seed + i);
        const LogImage base = to_log(img);
        // Roughness does not matter for a channel-shared field; try a very
        // rough one and a moderate one.
        for (double smoothness : {2.0, 8.0}) {
            SmoothFieldSpec spec;
            spec.smoothness = smoothness;
            spec.lo = 0.3;
            spec.hi = 1.0;
            spec.seed = seed + 977 * i + static_cast<std::uint64_t>(smoothness);
            const Grid field = gen_smooth_field(image_size, image_size, spec);
            const LogImage shaded = to_log(apply_field(img, field));
            worst = std::max(worst,
                             max_abs_difference(edge_features(shaded), edge_features(base)));
            for (const KernelBank& bank : banks)
                worst = std::max(worst, max_abs_difference(features(shaded, bank),
                                                           features(base, bank)));
        }
    }
    return {"shared-field", worst < tol, worst, tol,
            "max |delta feature| = " + format_stat(worst), {}};
}

CheckResult check_projection_idempotence(std::uint64_t seed) {
    Rng rng(seed);
    double worst_mean = 0.0;
    bool all_bitwise = true;
    for (int k : {3, 5, 7}) {
        for (int rep = 0; rep < 8; ++rep) {
            Kernel kernel(k);
            for (double& w : kernel.weights) w = rng.uniform(-2.0, 2.0);
            const Kernel once = project_zero_mean(kernel);
            const Kernel twice = project_zero_mean(once);
            if (!bitwise_equal(once, twice)) all_bitwise = false;
            worst_mean = std::max(worst_mean, std::abs(once.mean()));
        }
    }
    const double tol = 1e-12;
    const bool pass = all_bitwise && worst_mean < tol;
    return {"projection-idempotence", pass, worst_mean, tol,
            std::string(all_bitwise ? "bitwise idempotent, " : "NOT bitwise idempotent, ") +
                "max post-projection |mean| = " + format_stat(worst_mean),
            {}};
}

CheckResult check_gradcheck(int trials, std::uint64_t seed, double h, double tol) {
    CheckResult result;
    result.name = "gradcheck";
    result.tol = tol;
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int k = (t % 2 == 0) ? 3 : 5;
        const int n = 1 + t % 2;
        const ImageRGB img = make_test_image(16, 16, rng.next_u64());

        // The perturbations must leave a non-trivial feature gap; a pure
        // channel gain would put the loss at its flat minimum where both
        // gradient routes are rounding noise.
        ImageRGB perturbed;
        switch (t % 3) {
            case 0:
                perturbed = apply_gamma(img, rng.uniform(0.5, 2.0));
                break;
            case 1:
                perturbed = make_test_image(16, 16, rng.next_u64());
                break;
            default: {
                SmoothFieldSpec spec;
                spec.smoothness = 4.0;
                spec.lo = 0.2;
                spec.hi = 1.0;
                spec.seed = rng.next_u64();
                const Grid fr = gen_smooth_field(16, 16, spec);
                spec.seed = rng.next_u64();
                const Grid fg = gen_smooth_field(16, 16, spec);
                spec.seed = rng.next_u64();
                const Grid fb = gen_smooth_field(16, 16, spec);
                perturbed = apply_field(img, fr, fg, fb);
            }
        }

        // Stored weights stay unprojected on purpose; the forward pass owns
        // the projection and the gradient must account for it.
        KernelBank bank;
        bank.n = n;
        bank.k = k;
        for (int i = 0; i < n; ++i) {
            Kernel kernel(k);
            for (double& w : kernel.weights) w = 0.3 * rng.normal();
            bank.kernels.push_back(std::move(kernel));
        }

        const LogImage log_a = to_log(img);
        const LogImage log_b = to_log(perturbed);
        const double beta = 1.0;
        const IILossGrad analytic = ii_loss_grad(log_a, log_b, bank, beta);
        const auto fd = finite_diff_grad(
            [&](const KernelBank& probe) { return ii_loss_value(log_a, log_b, probe, beta); },
            bank, h);

        double scale = 0.0, err = 0.0;
        for (std::size_t ki = 0; ki < fd.size(); ++ki)
            for (std::size_t wi = 0; wi < fd[ki].weights.size(); ++wi) {
                scale = std::max({scale, std::abs(analytic.grad[ki].weights[wi]),
                                  std::abs(fd[ki].weights[wi])});
                err = std::max(err, std::abs(analytic.grad[ki].weights[wi] -
                                             fd[ki].weights[wi]));
            }
        const double rel = err / (scale + 1e-300);
        result.per_trial.push_back(rel);
        worst = std::max(worst, rel);
    }
    result.stat = worst;
    result.pass = worst < tol;
    result.detail = "max relative error over " + std::to_string(trials) +
                    " trials = " + format_stat(worst);
    return result;
}

CheckResult check_bank_constraints(const KernelBank& bank, double mean_tol) {
    double worst = 0.0;
    bool idempotent = true;
    for (const Kernel& kernel : bank.kernels) {
        worst = std::max(worst, std::abs(kernel.mean()));
        if (!bitwise_equal(project_zero_mean(kernel),
                           project_zero_mean(project_zero_mean(kernel))))
            idempotent = false;
    }
    const bool pass = worst < mean_tol && idempotent;
    return {"constraints", pass, worst, mean_tol,
            "max kernel |mean| = " + format_stat(worst) +
                (idempotent ? "" : ", projection not idempotent"),
            {}};
}

} // namespace iim
