// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "iimkit/image.hpp"
#include "iimkit/kernels.hpp"

#include <json.hpp>

namespace iim {

/// Illumination perturbation applied to the second branch of the
/// consistency loss.
enum class SigmaKind { Gamma, ChannelGain, SmoothField, Composed };

const char* sigma_kind_name(SigmaKind kind);
SigmaKind sigma_kind_from_name(const std::string& name);

struct TrainConfig {
    double learning_rate = 1.0;
    int steps = 200;
    double beta = 1.0;        // smooth-L1 threshold
    double loss_scale = 0.01; // multiplies the *reported* loss only
    std::array<double, 2> gamma_range{0.5, 2.0};
    SigmaKind sigma_kind = SigmaKind::Gamma;
    bool unit_norm = true;
    std::uint64_t seed = 0;
    double epsilon = kDefaultLogEpsilon;
    // channel-gain sigma: per-channel gains, log-uniform over this range
    std::array<double, 2> gain_range{0.25, 4.0};
    // smooth-field sigma: one independent field per channel
    double field_smoothness = 8.0;
    std::array<double, 2> field_amplitude{0.1, 1.0};
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

struct LossReport {
    std::vector<double> loss;            // per step, scaled by loss_scale
    std::vector<double> local_mean_stat; // per step, mean over kernels
    std::vector<double> max_abs_mean;    // per step, post-update
    std::vector<double> max_norm_error;  // per step, post-update (|norm-1|)
    std::vector<double> final_local_mean_stats; // per kernel
};

/// Smooth-L1 consistency loss: mean over all elements of
/// 0.5 d^2 for |d| <= beta, |d| - beta/2 otherwise, d = a - b.
double ii_loss(const FeatureStack& a, const FeatureStack& b, double beta);

/// The training objective: ii_loss of the (projection-parameterized)
/// features of two log images under one bank.
double ii_loss_value(const LogImage& a, const LogImage& b, const KernelBank& bank,
                     double beta);

struct IILossGrad {
    double loss = 0.0;
    std::vector<Kernel> grad; // d loss / d stored weights, one per kernel
};

/// Exact gradient of ii_loss_value with respect to the stored (free)
/// weights, including the projection backward rule g <- g - mean(g).
IILossGrad ii_loss_grad(const LogImage& a, const LogImage& b, const KernelBank& bank,
                        double beta);

/// Central differences (L(w+h) - L(w-h)) / 2h per weight, in binary64.
std::vector<Kernel> finite_diff_grad(const std::function<double(const KernelBank&)>& loss_fn,
                                     const KernelBank& bank, double h);

/// Mean |window x window windowed mean| over all fully-inside positions
/// of the kernel grid; small values mean cancellation stays local.
double local_mean_stat(const Kernel& kernel, int window = 3);

struct TrainResult {
    KernelBank bank;
    LossReport report;
};

/// SGD on the consistency loss: per step, pick the next image round-robin,
/// sample a perturbation per cfg.sigma_kind, step the weights against the
/// analytic gradient, re-project and (by default) renormalize each kernel.
/// Deterministic per cfg.seed.
TrainResult train(const KernelBank& bank, const std::vector<ImageRGB>& images,
                  const TrainConfig& cfg);

/// Writes "step,loss,local_mean_stat" rows for a report.
void save_loss_csv(const LossReport& report, const std::string& path);

} // namespace iim
