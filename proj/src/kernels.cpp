// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include "iimkit/kernels.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "iimkit/rng.hpp"

namespace iim {

namespace {

void require_valid_size(int n, int k) {
    if (n < 1)
        throw std::invalid_argument("kernel bank needs at least one kernel");
    if (k < 3 || k % 2 == 0)
        throw std::invalid_argument("kernel size must be odd and >= 3");
}

} // namespace

double Kernel::mean() const {
    double sum = 0.0;
    for (double w : weights) sum += w;
    return sum / static_cast<double>(weights.size());
}

double Kernel::frobenius_norm() const {
    double sum = 0.0;
    for (double w : weights) sum += w * w;
    return std::sqrt(sum);
}

Kernel project_zero_mean(const Kernel& kernel) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    Kernel out = kernel;
    // A mean at the rounding floor of the weights counts as projected; one
    // subtraction pass lands below that floor, so projecting an already
    // projected kernel returns it bit-identically.
    for (int pass = 0; pass < 4; ++pass) {
        const double m = out.mean();
        double max_w = 0.0;
        for (double w : out.weights) max_w = std::max(max_w, std::abs(w));
        if (std::abs(m) <= 8.0 * eps * max_w) break;
        for (double& w : out.weights) w -= m;
    }
    return out;
}

Kernel normalize_unit(const Kernel& kernel) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    Kernel out = kernel;
    for (int pass = 0; pass < 4; ++pass) {
        const double n = out.frobenius_norm();
        if (n == 0.0)
            throw std::invalid_argument("normalize_unit: zero kernel");
        // Norms at the rounding floor of 1.0 count as normalized, which
        // makes renormalization a bitwise no-op.
        if (std::abs(n - 1.0) <= 64.0 * eps) break;
        for (double& w : out.weights) w /= n;
    }
    return out;
}

KernelBank init_bank(int n, int k, std::uint64_t seed) {
    require_valid_size(n, k);
    KernelBank bank;
    bank.n = n;
    bank.k = k;
    bank.seed = seed;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        Kernel kernel(k);
        for (double& w : kernel.weights) w = 0.1 * rng.normal();
        bank.kernels.push_back(normalize_unit(project_zero_mean(kernel)));
    }
    return bank;
}

Grid conv2d_same(const Grid& plane, const Kernel& kernel) {
    if (plane.empty())
        throw std::invalid_argument("conv2d_same: empty plane");
    const int k = kernel.k;
    const int c = k / 2;
    Grid out(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
        for (int x = 0; x < plane.width; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) {
                const int sy = clamp_index(y - (i - c), plane.height);
                for (int j = 0; j < k; ++j) {
                    const int sx = clamp_index(x - (j - c), plane.width);
                    acc += kernel.weights[static_cast<std::size_t>(i) * k + j] * plane.at(sx, sy);
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

Kernel conv2d_kernel_grad(const Grid& upstream, const Grid& plane, int k) {
    if (!upstream.same_shape(plane))
        throw std::invalid_argument("conv2d_kernel_grad: shape mismatch");
    const int c = k / 2;
    Kernel grad(k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int y = 0; y < plane.height; ++y) {
                const int sy = clamp_index(y - (i - c), plane.height);
                for (int x = 0; x < plane.width; ++x) {
                    const int sx = clamp_index(x - (j - c), plane.width);
                    acc += upstream.at(x, y) * plane.at(sx, sy);
                }
            }
            grad.at(i, j) = acc;
        }
    }
    return grad;
}

namespace {

Grid plane_difference(const Grid& a, const Grid& b) {
    Grid out(a.width, a.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
    return out;
}

} // namespace

FeatureStack features_unchecked(const LogImage& logimg, const KernelBank& bank) {
    FeatureStack out;
    out.width = logimg.width;
    out.height = logimg.height;
    out.n_kernels = bank.n;
    out.planes.reserve(static_cast<std::size_t>(bank.n) * 3);
    for (const Kernel& stored : bank.kernels) {
        const Kernel kernel = project_zero_mean(stored);
        const Grid cr = conv2d_same(logimg.planes[kR], kernel);
        const Grid cg = conv2d_same(logimg.planes[kG], kernel);
        const Grid cb = conv2d_same(logimg.planes[kB], kernel);
        out.planes.push_back(plane_difference(cr, cb)); // rb
        out.planes.push_back(plane_difference(cr, cg)); // rg
        out.planes.push_back(plane_difference(cg, cb)); // gb
    }
    return out;
}

FeatureStack features(const LogImage& logimg, const KernelBank& bank) {
    if (bank.n < 1 || bank.kernels.size() != static_cast<std::size_t>(bank.n))
        throw std::invalid_argument("features: malformed kernel bank");
    for (const Kernel& kernel : bank.kernels)
        if (std::abs(kernel.mean()) >= kZeroMeanTolerance)
            throw std::invalid_argument(
                "features: kernel violates the zero-mean constraint (|mean| >= 1e-9)");
    return features_unchecked(logimg, bank);
}

void save_bank(const KernelBank& bank, const std::string& path) {
    nlohmann::json j;
    j["k"] = bank.k;
    j["n"] = bank.n;
    j["seed"] = bank.seed;
    auto& arr = j["kernels"] = nlohmann::json::array();
    for (const Kernel& kernel : bank.kernels) arr.push_back(kernel.weights);
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out)
        throw std::runtime_error(path + ": write failed");
}

LoadedBank load_bank(const std::string& path, bool reproject) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": invalid bank JSON: " + e.what());
    }
    LoadedBank loaded;
    try {
        loaded.bank.k = j.at("k").get<int>();
        loaded.bank.n = j.at("n").get<int>();
        loaded.bank.seed = j.value("seed", std::uint64_t{0});
        const auto& arr = j.at("kernels");
        if (!arr.is_array() || arr.size() != static_cast<std::size_t>(loaded.bank.n))
            throw std::runtime_error("kernel count does not match n");
        require_valid_size(loaded.bank.n, loaded.bank.k);
        const std::size_t expect = static_cast<std::size_t>(loaded.bank.k) * loaded.bank.k;
        for (const auto& kj : arr) {
            Kernel kernel;
            kernel.k = loaded.bank.k;
            kernel.weights = kj.get<std::vector<double>>();
            if (kernel.weights.size() != expect)
                throw std::runtime_error("kernel weight count does not match k*k");
            loaded.pre_projection_means.push_back(kernel.mean());
            loaded.bank.kernels.push_back(reproject ? project_zero_mean(kernel)
                                                    : std::move(kernel));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": invalid bank JSON: " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": invalid bank file: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": invalid bank file: " + e.what());
    }
    return loaded;
}

} // namespace iim
