// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include "iimkit/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "iimkit/lambertian.hpp"
#include "iimkit/rng.hpp"

namespace iim {

namespace {

double smooth_l1(double d, double beta) {
    const double a = std::abs(d);
    return a <= beta ? 0.5 * d * d : a - 0.5 * beta;
}

double smooth_l1_deriv(double d, double beta) {
    if (std::abs(d) <= beta) return d;
    return d > 0.0 ? 1.0 : -1.0;
}

void require_same_shape(const LogImage& a, const LogImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("log image shape mismatch");
}

void validate_config(const TrainConfig& cfg) {
    if (!(cfg.learning_rate >= 0.0))
        throw std::invalid_argument("train: learning_rate must be >= 0");
    if (cfg.steps < 0)
        throw std::invalid_argument("train: steps must be >= 0");
    if (!(cfg.beta > 0.0))
        throw std::invalid_argument("train: beta must be positive");
    if (!(cfg.epsilon > 0.0))
        throw std::invalid_argument("train: epsilon must be positive");
    if (!(cfg.gamma_range[0] > 0.0) || !(cfg.gamma_range[0] <= cfg.gamma_range[1]))
        throw std::invalid_argument("train: bad gamma_range");
    if (!(cfg.gain_range[0] > 0.0) || !(cfg.gain_range[0] <= cfg.gain_range[1]))
        throw std::invalid_argument("train: bad gain_range");
    if (!(cfg.field_smoothness > 0.0))
        throw std::invalid_argument("train: field_smoothness must be positive");
    if (!(cfg.field_amplitude[0] > 0.0) ||
        !(cfg.field_amplitude[0] <= cfg.field_amplitude[1]) ||
        !(cfg.field_amplitude[1] <= 1.0))
        throw std::invalid_argument("train: bad field_amplitude");
}

ImageRGB apply_sampled_gains(const ImageRGB& img, const TrainConfig& cfg, Rng& rng) {
    const double llo = std::log(cfg.gain_range[0]);
    const double lhi = std::log(cfg.gain_range[1]);
    const double gr = std::exp(rng.uniform(llo, lhi));
    const double gg = std::exp(rng.uniform(llo, lhi));
    const double gb = std::exp(rng.uniform(llo, lhi));
    return apply_channel_gains(img, gr, gg, gb);
}

ImageRGB apply_sampled_fields(const ImageRGB& img, const TrainConfig& cfg, Rng& rng) {
    SmoothFieldSpec spec;
    spec.smoothness = cfg.field_smoothness;
    spec.lo = cfg.field_amplitude[0];
    spec.hi = cfg.field_amplitude[1];
    spec.seed = rng.next_u64();
    const Grid fr = gen_smooth_field(img.width, img.height, spec);
    spec.seed = rng.next_u64();
    const Grid fg = gen_smooth_field(img.width, img.height, spec);
    spec.seed = rng.next_u64();
    const Grid fb = gen_smooth_field(img.width, img.height, spec);
    return apply_field(img, fr, fg, fb);
}

/// One perturbed copy of an image; consumes the RNG in a fixed order.
ImageRGB sample_sigma(const ImageRGB& img, const TrainConfig& cfg, Rng& rng) {
    switch (cfg.sigma_kind) {
        case SigmaKind::Gamma:
            return apply_gamma(img, rng.uniform(cfg.gamma_range[0], cfg.gamma_range[1]));
        case SigmaKind::ChannelGain:
            return apply_sampled_gains(img, cfg, rng);
        case SigmaKind::SmoothField:
            return apply_sampled_fields(img, cfg, rng);
        case SigmaKind::Composed: {
            const double gamma = rng.uniform(cfg.gamma_range[0], cfg.gamma_range[1]);
            const ImageRGB gained = apply_sampled_gains(apply_gamma(img, gamma), cfg, rng);
            return apply_sampled_fields(gained, cfg, rng);
        }
    }
    throw std::logic_error("sample_sigma: unknown sigma kind");
}

} // namespace

const char* sigma_kind_name(SigmaKind kind) {
    switch (kind) {
        case SigmaKind::Gamma: return "gamma";
        case SigmaKind::ChannelGain: return "channel-gain";
        case SigmaKind::SmoothField: return "smooth-field";
        case SigmaKind::Composed: return "composed";
    }
    return "?";
}

SigmaKind sigma_kind_from_name(const std::string& name) {
    if (name == "gamma") return SigmaKind::Gamma;
    if (name == "channel-gain") return SigmaKind::ChannelGain;
    if (name == "smooth-field") return SigmaKind::SmoothField;
    if (name == "composed") return SigmaKind::Composed;
    throw std::invalid_argument("unknown sigma kind: " + name);
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.loss_scale = j.value("loss_scale", cfg.loss_scale);
    if (j.contains("gamma_range")) cfg.gamma_range = j.at("gamma_range").get<std::array<double, 2>>();
    if (j.contains("sigma_kind")) cfg.sigma_kind = sigma_kind_from_name(j.at("sigma_kind").get<std::string>());
    cfg.unit_norm = j.value("unit_norm", cfg.unit_norm);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    if (j.contains("gain_range")) cfg.gain_range = j.at("gain_range").get<std::array<double, 2>>();
    cfg.field_smoothness = j.value("field_smoothness", cfg.field_smoothness);
    if (j.contains("field_amplitude"))
        cfg.field_amplitude = j.at("field_amplitude").get<std::array<double, 2>>();
    return cfg;
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    return nlohmann::json{{"learning_rate", cfg.learning_rate},
                          {"steps", cfg.steps},
                          {"beta", cfg.beta},
                          {"loss_scale", cfg.loss_scale},
                          {"gamma_range", cfg.gamma_range},
                          {"sigma_kind", sigma_kind_name(cfg.sigma_kind)},
                          {"unit_norm", cfg.unit_norm},
                          {"seed", cfg.seed},
                          {"epsilon", cfg.epsilon},
                          {"gain_range", cfg.gain_range},
                          {"field_smoothness", cfg.field_smoothness},
                          {"field_amplitude", cfg.field_amplitude}};
}

double ii_loss(const FeatureStack& a, const FeatureStack& b, double beta) {
    if (!(beta > 0.0))
        throw std::invalid_argument("ii_loss: beta must be positive");
    if (a.planes.size() != b.planes.size() || a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ii_loss: stack shape mismatch");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < a.planes.size(); ++p) {
        const Grid& ga = a.planes[p];
        const Grid& gb = b.planes[p];
        if (!ga.same_shape(gb))
            throw std::invalid_argument("ii_loss: plane shape mismatch");
        for (std::size_t i = 0; i < ga.data.size(); ++i)
            total += smooth_l1(ga.data[i] - gb.data[i], beta);
        count += ga.data.size();
    }
    if (count == 0)
        throw std::invalid_argument("ii_loss: empty stacks");
    return total / static_cast<double>(count);
}

double ii_loss_value(const LogImage& a, const LogImage& b, const KernelBank& bank,
                     double beta) {
    require_same_shape(a, b);
    return ii_loss(features_unchecked(a, bank), features_unchecked(b, bank), beta);
}

IILossGrad ii_loss_grad(const LogImage& a, const LogImage& b, const KernelBank& bank,
                        double beta) {
    require_same_shape(a, b);
    if (!(beta > 0.0))
        throw std::invalid_argument("ii_loss_grad: beta must be positive");
    const int w = a.width, h = a.height;
    const std::size_t per_plane = static_cast<std::size_t>(w) * h;
    const double n_elements = static_cast<double>(per_plane * 3 * bank.kernels.size());

    // d(feature pair)/d(kernel) correlates with these planes, shared by all
    // kernels: S_pair = (A_first - B_first) - (A_second - B_second) in logs.
    std::array<Grid, 3> channel_diff;
    for (int c = 0; c < 3; ++c) {
        Grid g(w, h);
        for (std::size_t i = 0; i < per_plane; ++i)
            g.data[i] = a.planes[c].data[i] - b.planes[c].data[i];
        channel_diff[c] = std::move(g);
    }
    std::array<Grid, 3> pair_diff;
    for (Pair p : kAllPairs) {
        Grid g(w, h);
        const Grid& first = channel_diff[pair_first(p)];
        const Grid& second = channel_diff[pair_second(p)];
        for (std::size_t i = 0; i < per_plane; ++i)
            g.data[i] = first.data[i] - second.data[i];
        pair_diff[static_cast<int>(p)] = std::move(g);
    }

    IILossGrad result;
    double total = 0.0;
    for (const Kernel& stored : bank.kernels) {
        const Kernel kernel = project_zero_mean(stored);
        const Grid car = conv2d_same(a.planes[kR], kernel);
        const Grid cag = conv2d_same(a.planes[kG], kernel);
        const Grid cab = conv2d_same(a.planes[kB], kernel);
        const Grid cbr = conv2d_same(b.planes[kR], kernel);
        const Grid cbg = conv2d_same(b.planes[kG], kernel);
        const Grid cbb = conv2d_same(b.planes[kB], kernel);

        Kernel grad(kernel.k);
        for (Pair p : kAllPairs) {
            const Grid* a1 = nullptr;
            const Grid* a2 = nullptr;
            const Grid* b1 = nullptr;
            const Grid* b2 = nullptr;
            switch (p) {
                case Pair::RB: a1 = &car; a2 = &cab; b1 = &cbr; b2 = &cbb; break;
                case Pair::RG: a1 = &car; a2 = &cag; b1 = &cbr; b2 = &cbg; break;
                case Pair::GB: a1 = &cag; a2 = &cab; b1 = &cbg; b2 = &cbb; break;
            }
            Grid upstream(w, h);
            for (std::size_t i = 0; i < per_plane; ++i) {
                const double fa = a1->data[i] - a2->data[i];
                const double fb = b1->data[i] - b2->data[i];
                const double d = fa - fb;
                total += smooth_l1(d, beta);
                upstream.data[i] = smooth_l1_deriv(d, beta);
            }
            const Kernel partial =
                conv2d_kernel_grad(upstream, pair_diff[static_cast<int>(p)], kernel.k);
            for (std::size_t i = 0; i < grad.weights.size(); ++i)
                grad.weights[i] += partial.weights[i];
        }
        for (double& g : grad.weights) g /= n_elements;
        // Projection backward: the effective kernel is w - mean(w).
        const double gm = grad.mean();
        for (double& g : grad.weights) g -= gm;
        result.grad.push_back(std::move(grad));
    }
    result.loss = total / n_elements;
    return result;
}

std::vector<Kernel> finite_diff_grad(const std::function<double(const KernelBank&)>& loss_fn,
                                     const KernelBank& bank, double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("finite_diff_grad: h must be positive");
    std::vector<Kernel> grads;
    KernelBank probe = bank;
    for (std::size_t ki = 0; ki < bank.kernels.size(); ++ki) {
        Kernel grad(bank.kernels[ki].k);
        for (std::size_t wi = 0; wi < grad.weights.size(); ++wi) {
            const double saved = probe.kernels[ki].weights[wi];
            probe.kernels[ki].weights[wi] = saved + h;
            const double up = loss_fn(probe);
            probe.kernels[ki].weights[wi] = saved - h;
            const double down = loss_fn(probe);
            probe.kernels[ki].weights[wi] = saved;
            grad.weights[wi] = (up - down) / (2.0 * h);
        }
        grads.push_back(std::move(grad));
    }
    return grads;
}

double local_mean_stat(const Kernel& kernel, int window) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("local_mean_stat: window must be odd and >= 1");
    if (window > kernel.k)
        throw std::invalid_argument("local_mean_stat: window exceeds kernel size");
    const int span = kernel.k - window + 1;
    const double cells = static_cast<double>(window) * window;
    double acc = 0.0;
    for (int r = 0; r < span; ++r)
        for (int c = 0; c < span; ++c) {
            double s = 0.0;
            for (int i = 0; i < window; ++i)
                for (int j = 0; j < window; ++j) s += kernel.at(r + i, c + j);
            acc += std::abs(s / cells);
        }
    return acc / static_cast<double>(span * span);
}

TrainResult train(const KernelBank& bank, const std::vector<ImageRGB>& images,
                  const TrainConfig& cfg) {
    if (images.empty())
        throw std::invalid_argument("train: empty image list");
    validate_config(cfg);

    TrainResult result;
    result.bank = bank;
    for (Kernel& kernel : result.bank.kernels) {
        kernel = project_zero_mean(kernel);
        if (cfg.unit_norm) kernel = normalize_unit(kernel);
    }

    std::vector<LogImage> logs;
    logs.reserve(images.size());
    for (const ImageRGB& img : images) logs.push_back(to_log(img, cfg.epsilon));

    Rng rng(cfg.seed);
    for (int step = 0; step < cfg.steps; ++step) {
        const std::size_t idx = static_cast<std::size_t>(step) % images.size();
        const ImageRGB perturbed = sample_sigma(images[idx], cfg, rng);
        const LogImage log_b = to_log(perturbed, cfg.epsilon);
        IILossGrad lg = ii_loss_grad(logs[idx], log_b, result.bank, cfg.beta);

        for (std::size_t ki = 0; ki < result.bank.kernels.size(); ++ki) {
            Kernel& kernel = result.bank.kernels[ki];
            for (std::size_t wi = 0; wi < kernel.weights.size(); ++wi)
                kernel.weights[wi] -= cfg.learning_rate * lg.grad[ki].weights[wi];
            kernel = project_zero_mean(kernel);
            if (cfg.unit_norm) kernel = normalize_unit(kernel);
        }

        double stat = 0.0, worst_mean = 0.0, worst_norm = 0.0;
        for (const Kernel& kernel : result.bank.kernels) {
            stat += local_mean_stat(kernel);
            worst_mean = std::max(worst_mean, std::abs(kernel.mean()));
            worst_norm = std::max(worst_norm, std::abs(kernel.frobenius_norm() - 1.0));
        }
        result.report.loss.push_back(cfg.loss_scale * lg.loss);
        result.report.local_mean_stat.push_back(stat / static_cast<double>(bank.kernels.size()));
        result.report.max_abs_mean.push_back(worst_mean);
        result.report.max_norm_error.push_back(worst_norm);
    }

    for (const Kernel& kernel : result.bank.kernels)
        result.report.final_local_mean_stats.push_back(local_mean_stat(kernel));
    return result;
}

void save_loss_csv(const LossReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error(path + ": cannot open for writing");
    out << "step,loss,local_mean_stat\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < report.loss.size(); ++i)
        out << i << "," << report.loss[i] << "," << report.local_mean_stat[i] << "\n";
    if (!out)
        throw std::runtime_error(path + ": write failed");
}

} // namespace iim
