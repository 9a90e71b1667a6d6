// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.
//
// Command-line surface: synth, extract, train, verify, inspect-kernel and
// rerun. Every file-producing run writes a manifest.json with the resolved
// configuration so it can be reproduced byte for byte.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iimkit/ccr.hpp"
#include "iimkit/image_io.hpp"
#include "iimkit/kernels.hpp"
#include "iimkit/lambertian.hpp"
#include "iimkit/rng.hpp"
#include "iimkit/train.hpp"
#include "iimkit/verify.hpp"
#include "iimkit/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommandError {
    int code;
    std::string message;
};

void parse_size(const std::string& text, int& width, int& height) {
    const auto xpos = text.find('x');
    if (xpos == std::string::npos)
        throw CommandError{kExitUsage, "--size must look like 64x64"};
    try {
        width = std::stoi(text.substr(0, xpos));
        height = std::stoi(text.substr(xpos + 1));
    } catch (const std::exception&) {
        throw CommandError{kExitUsage, "--size must look like 64x64"};
    }
    if (width <= 0 || height <= 0)
        throw CommandError{kExitUsage, "--size dimensions must be positive"};
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw CommandError{kExitRuntime, "cannot create output directory " + dir.string()};
    return dir;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    std::uint64_t seed, const json& config, const json& inputs,
                    const json& outputs) {
    json manifest{{"tool", iim::kToolName},   {"version", iim::kVersion},
                  {"subcommand", subcommand}, {"seed", seed},
                  {"config", config},         {"inputs", inputs},
                  {"outputs", outputs}};
    std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << "\n";
    if (!out)
        throw CommandError{kExitRuntime, "cannot write manifest.json"};
}

// Nearest-neighbor upscale for kernel visualizations.
iim::Grid upscale(const iim::Grid& g, int factor) {
    iim::Grid out(g.width * factor, g.height * factor);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(x, y) = g.at(x / factor, y / factor);
    return out;
}

// ---------------------------------------------------------------- synth --

struct FieldParams {
    double smoothness = 8.0;
    double lo = 0.3;
    double hi = 1.0;
};

json field_to_json(const FieldParams& f) {
    return json{{"smoothness", f.smoothness}, {"lo", f.lo}, {"hi", f.hi}};
}

FieldParams field_from_json(const json& j) {
    return FieldParams{j.at("smoothness").get<double>(), j.at("lo").get<double>(),
                       j.at("hi").get<double>()};
}

struct SynthConfig {
    int width = 64;
    int height = 64;
    std::uint64_t seed = 0;
    FieldParams rho{4.0, 0.2, 0.9};
    FieldParams shading{12.0, 0.3, 1.0};
    FieldParams gain{24.0, 0.3, 1.0};
};

json synth_to_json(const SynthConfig& cfg) {
    return json{{"width", cfg.width},
                {"height", cfg.height},
                {"seed", cfg.seed},
                {"reflectance", field_to_json(cfg.rho)},
                {"shading", field_to_json(cfg.shading)},
                {"spectral_gain", field_to_json(cfg.gain)}};
}

SynthConfig synth_from_json(const json& j) {
    SynthConfig cfg;
    cfg.width = j.at("width").get<int>();
    cfg.height = j.at("height").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.rho = field_from_json(j.at("reflectance"));
    cfg.shading = field_from_json(j.at("shading"));
    cfg.gain = field_from_json(j.at("spectral_gain"));
    return cfg;
}

void run_synth(const SynthConfig& cfg, const fs::path& out_dir) {
    if (cfg.width <= 0 || cfg.height <= 0)
        throw CommandError{kExitUsage, "scene dimensions must be positive"};
    iim::Rng rng(cfg.seed);
    iim::SceneSpec scene;
    scene.width = cfg.width;
    scene.height = cfg.height;
    auto field = [&](const FieldParams& p) {
        iim::SmoothFieldSpec spec{p.smoothness, p.lo, p.hi, rng.next_u64()};
        return iim::gen_smooth_field(cfg.width, cfg.height, spec);
    };
    for (int c = 0; c < 3; ++c) scene.reflectance[c] = field(cfg.rho);
    scene.shading = field(cfg.shading);
    for (int c = 0; c < 3; ++c) scene.spectral_gain[c] = field(cfg.gain);

    const iim::ImageRGB img = iim::render(scene);
    iim::save_png(img, (out_dir / "scene.png").string());

    // Factor sidecar reuses the IIMF1 container: group 0 = reflectance RGB,
    // group 1 = spectral gain RGB, group 2 = shading replicated x3.
    iim::FeatureStack factors;
    factors.width = cfg.width;
    factors.height = cfg.height;
    factors.n_kernels = 3;
    for (int c = 0; c < 3; ++c) factors.planes.push_back(scene.reflectance[c]);
    for (int c = 0; c < 3; ++c) factors.planes.push_back(scene.spectral_gain[c]);
    for (int c = 0; c < 3; ++c) factors.planes.push_back(scene.shading);
    iim::save_feature_stack(factors, (out_dir / "factors.iimf").string());

    write_manifest(out_dir, "synth", cfg.seed, synth_to_json(cfg), json::object(),
                   json{{"image", "scene.png"},
                        {"factors", "factors.iimf"},
                        {"factors_layout",
                         json::array({"reflectance_rgb", "spectral_gain_rgb", "shading_x3"})}});
}

// -------------------------------------------------------------- extract --

struct ExtractConfig {
    std::string image;
    std::string mode = "edge"; // edge | learned
    std::string kernels;       // bank JSON for learned mode
    double epsilon = iim::kDefaultLogEpsilon;
    bool reproject = true;
    bool concat = false;
};

json extract_to_json(const ExtractConfig& cfg) {
    return json{{"image", cfg.image},     {"mode", cfg.mode},
                {"kernels", cfg.kernels}, {"epsilon", cfg.epsilon},
                {"reproject", cfg.reproject}, {"concat", cfg.concat}};
}

ExtractConfig extract_from_json(const json& j) {
    ExtractConfig cfg;
    cfg.image = j.at("image").get<std::string>();
    cfg.mode = j.at("mode").get<std::string>();
    cfg.kernels = j.at("kernels").get<std::string>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.reproject = j.at("reproject").get<bool>();
    cfg.concat = j.at("concat").get<bool>();
    return cfg;
}

void run_extract(const ExtractConfig& cfg, const fs::path& out_dir) {
    if (cfg.mode != "edge" && cfg.mode != "learned")
        throw CommandError{kExitUsage, "--mode must be edge or learned"};
    if (cfg.mode == "learned" && cfg.kernels.empty())
        throw CommandError{kExitUsage, "--mode learned requires --kernels"};

    const iim::ImageRGB img = iim::load_image(cfg.image);
    const iim::LogImage logimg = iim::to_log(img, cfg.epsilon);

    iim::FeatureStack stack;
    if (cfg.mode == "edge") {
        stack = iim::edge_features(logimg);
    } else {
        const iim::LoadedBank loaded = iim::load_bank(cfg.kernels, cfg.reproject);
        stack = iim::features(logimg, loaded.bank);
    }
    iim::save_feature_stack(stack, (out_dir / "features.iimf").string());

    json planes = json::array();
    for (int ki = 0; ki < stack.n_kernels; ++ki)
        for (iim::Pair p : iim::kAllPairs) {
            std::ostringstream name;
            name << "plane_k" << ki << "_" << iim::pair_name(p) << ".png";
            iim::save_gray_png(iim::normalize_for_display(stack.plane(ki, p)),
                               (out_dir / name.str()).string());
            planes.push_back(name.str());
        }

    json outputs{{"features", "features.iimf"}, {"planes", planes}};
    if (cfg.concat) {
        // Raw image planes followed by the feature planes, no fusion.
        iim::FeatureStack concat;
        concat.width = stack.width;
        concat.height = stack.height;
        concat.n_kernels = stack.n_kernels + 1;
        for (int c = 0; c < 3; ++c) concat.planes.push_back(img.planes[c]);
        for (const iim::Grid& g : stack.planes) concat.planes.push_back(g);
        iim::save_feature_stack(concat, (out_dir / "concat.iimf").string());
        outputs["concat"] = "concat.iimf";
    }
    write_manifest(out_dir, "extract", 0, extract_to_json(cfg),
                   json{{"image", cfg.image}, {"kernels", cfg.kernels}}, outputs);
}

// ---------------------------------------------------------------- train --

struct TrainCliConfig {
    std::string images_dir;
    std::string init_bank; // optional bank JSON
    int bank_n = 4;
    int bank_k = 3;
    iim::TrainConfig train;
};

json train_cli_to_json(const TrainCliConfig& cfg) {
    return json{{"images_dir", cfg.images_dir},
                {"init_bank", cfg.init_bank},
                {"bank_n", cfg.bank_n},
                {"bank_k", cfg.bank_k},
                {"train", iim::train_config_to_json(cfg.train)}};
}

TrainCliConfig train_cli_from_json(const json& j) {
    TrainCliConfig cfg;
    cfg.images_dir = j.at("images_dir").get<std::string>();
    cfg.init_bank = j.at("init_bank").get<std::string>();
    cfg.bank_n = j.at("bank_n").get<int>();
    cfg.bank_k = j.at("bank_k").get<int>();
    cfg.train = iim::train_config_from_json(j.at("train"));
    return cfg;
}

void run_train(const TrainCliConfig& cfg, const fs::path& out_dir) {
    std::vector<fs::path> paths;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(cfg.images_dir, ec)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".png" || ext == ".ppm"))
            paths.push_back(entry.path());
    }
    if (ec)
        throw CommandError{kExitRuntime, "cannot read image directory " + cfg.images_dir};
    std::sort(paths.begin(), paths.end());
    if (paths.empty())
        throw CommandError{kExitRuntime, "no .png or .ppm images in " + cfg.images_dir};

    std::vector<iim::ImageRGB> images;
    images.reserve(paths.size());
    for (const fs::path& p : paths) images.push_back(iim::load_image(p.string()));

    iim::KernelBank bank;
    if (cfg.init_bank.empty())
        bank = iim::init_bank(cfg.bank_n, cfg.bank_k, cfg.train.seed);
    else
        bank = iim::load_bank(cfg.init_bank).bank;

    const iim::TrainResult result = iim::train(bank, images, cfg.train);
    iim::save_bank(result.bank, (out_dir / "bank.json").string());
    iim::save_loss_csv(result.report, (out_dir / "loss.csv").string());

    if (!result.report.loss.empty()) {
        std::cout << "trained " << cfg.train.steps << " steps on " << images.size()
                  << " images: loss " << result.report.loss.front() << " -> "
                  << result.report.loss.back() << "\n";
    }
    json inputs = json::array();
    for (const fs::path& p : paths) inputs.push_back(p.string());
    write_manifest(out_dir, "train", cfg.train.seed, train_cli_to_json(cfg),
                   json{{"images", inputs}, {"init_bank", cfg.init_bank}},
                   json{{"bank", "bank.json"}, {"loss_csv", "loss.csv"}});
}

// --------------------------------------------------------------- verify --

struct VerifyConfig {
    std::string bank;
    bool reproject = true;
    std::string suite;
    int trials = 20;
    std::uint64_t seed = 1;
};

json verify_to_json(const VerifyConfig& cfg) {
    return json{{"bank", cfg.bank},     {"reproject", cfg.reproject},
                {"suite", cfg.suite},   {"trials", cfg.trials},
                {"seed", cfg.seed}};
}

VerifyConfig verify_from_json(const json& j) {
    VerifyConfig cfg;
    cfg.bank = j.at("bank").get<std::string>();
    cfg.reproject = j.at("reproject").get<bool>();
    cfg.suite = j.at("suite").get<std::string>();
    cfg.trials = j.at("trials").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

// Suites report failures instead of throwing; a bank that violates its
// constraints shows up as failed suites, not a crash.
iim::CheckResult run_suite(const std::string& name,
                           const std::function<iim::CheckResult()>& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        return iim::CheckResult{name, false, 0.0, 0.0, std::string("error: ") + e.what(), {}};
    }
}

int run_verify(const VerifyConfig& cfg, const std::string& out, std::ostream& os) {
    std::vector<iim::KernelBank> banks;
    if (!cfg.bank.empty()) {
        const iim::LoadedBank loaded = iim::load_bank(cfg.bank, cfg.reproject);
        banks.push_back(loaded.bank);
        double worst_pre = 0.0;
        for (double m : loaded.pre_projection_means)
            worst_pre = std::max(worst_pre, std::abs(m));
        os << "bank " << cfg.bank << ": " << loaded.bank.n << " kernels, k="
           << loaded.bank.k << ", max pre-projection |mean| = " << worst_pre
           << (cfg.reproject ? " (re-projected)" : " (loaded as stored)") << "\n";
    } else {
        banks.push_back(iim::init_bank(2, 3, cfg.seed + 21));
        banks.push_back(iim::init_bank(2, 5, cfg.seed + 22));
    }

    const bool all_suites = cfg.suite.empty();
    std::vector<iim::CheckResult> results;
    auto want = [&](const char* name) { return all_suites || cfg.suite == name; };

    if (want("constraints"))
        results.push_back(run_suite("constraints", [&] {
            iim::CheckResult r =
                iim::check_bank_constraints(banks[0], iim::kZeroMeanTolerance);
            for (std::size_t b = 1; b < banks.size(); ++b) {
                const iim::CheckResult extra =
                    iim::check_bank_constraints(banks[b], iim::kZeroMeanTolerance);
                r.pass = r.pass && extra.pass;
                if (extra.stat > r.stat) r.stat = extra.stat;
            }
            return r;
        }));
    if (want("projection-idempotence"))
        results.push_back(run_suite("projection-idempotence",
                                    [&] { return iim::check_projection_idempotence(cfg.seed + 31); }));
    if (want("gain-invariance"))
        results.push_back(run_suite("gain-invariance", [&] {
            return iim::check_gain_invariance(banks, 4, 48, cfg.seed + 41, 1e-11);
        }));
    if (want("gamma-scaling"))
        results.push_back(run_suite("gamma-scaling", [&] {
            return iim::check_gamma_scaling(banks, 4, 48, cfg.seed + 51, 1e-6);
        }));
    if (want("shared-field"))
        results.push_back(run_suite("shared-field", [&] {
            return iim::check_shared_field(banks, 4, 48, cfg.seed + 61, 1e-9);
        }));
    if (want("gradcheck")) {
        const iim::CheckResult r = run_suite(
            "gradcheck", [&] { return iim::check_gradcheck(cfg.trials, cfg.seed + 71, 1e-3, 1e-4); });
        if (!all_suites)
            for (std::size_t t = 0; t < r.per_trial.size(); ++t) {
                std::ostringstream line;
                line.precision(3);
                line << std::scientific << r.per_trial[t];
                os << "gradcheck trial " << t << ": rel err = " << line.str()
                   << " (tol 1e-04)\n";
            }
        results.push_back(r);
    }

    if (results.empty())
        throw CommandError{kExitUsage, "unknown suite: " + cfg.suite};

    bool all_pass = true;
    for (const iim::CheckResult& r : results) {
        std::ostringstream tol;
        tol.precision(0);
        tol << std::scientific << r.tol;
        os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << " (tol "
           << tol.str() << ")\n";
        all_pass = all_pass && r.pass;
    }
    os << (all_pass ? "verify: all suites passed" : "verify: FAILURES above") << "\n";

    if (!out.empty()) {
        const fs::path out_dir = prepare_out_dir(out);
        std::ostringstream report;
        for (const iim::CheckResult& r : results)
            report << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        std::ofstream rf(out_dir / "report.txt", std::ios::trunc);
        rf << report.str();
        write_manifest(out_dir, "verify", cfg.seed, verify_to_json(cfg),
                       json{{"bank", cfg.bank}}, json{{"report", "report.txt"}});
    }
    return all_pass ? kExitOk : kExitRuntime;
}

// ------------------------------------------------------- inspect-kernel --

struct InspectConfig {
    std::string bank;
};

void run_inspect(const InspectConfig& cfg, const fs::path& out_dir) {
    // Diagnostics run on the stored weights, so a bank that violates the
    // zero-mean constraint shows up as-is.
    const iim::LoadedBank loaded = iim::load_bank(cfg.bank, /*reproject=*/false);
    json outputs = json::array();
    for (int ki = 0; ki < loaded.bank.n; ++ki) {
        const iim::Kernel& kernel = loaded.bank.kernels[ki];
        const int k = kernel.k;
        iim::Grid weights(k, k);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) weights.at(c, r) = kernel.at(r, c);

        const int span = k - 2; // 3x3 windows fully inside the kernel
        if (span < 1)
            throw CommandError{kExitRuntime, "kernel too small for a 3x3 local-mean map"};
        iim::Grid mean_map(span, span);
        for (int r = 0; r < span; ++r)
            for (int c = 0; c < span; ++c) {
                double s = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) s += kernel.at(r + i, c + j);
                mean_map.at(c, r) = s / 9.0;
            }

        std::ostringstream wname, mname;
        wname << "kernel" << ki << "_weights.png";
        mname << "kernel" << ki << "_local_mean.png";
        iim::save_gray_png(upscale(iim::normalize_for_display(weights), 32),
                           (out_dir / wname.str()).string());
        iim::save_gray_png(upscale(iim::normalize_for_display(mean_map), 32),
                           (out_dir / mname.str()).string());
        outputs.push_back(wname.str());
        outputs.push_back(mname.str());

        std::cout << "kernel " << ki << ": local_mean_stat = " << iim::local_mean_stat(kernel)
                  << "\n";
    }
    write_manifest(out_dir, "inspect-kernel", 0, json{{"bank", cfg.bank}},
                   json{{"bank", cfg.bank}}, json{{"images", outputs}});
}

// ---------------------------------------------------------------- rerun --

int run_rerun(const std::string& manifest_path, const std::string& out) {
    std::ifstream in(manifest_path);
    if (!in)
        throw CommandError{kExitRuntime, "cannot open manifest " + manifest_path};
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw CommandError{kExitRuntime, std::string("invalid manifest JSON: ") + e.what()};
    }
    const std::string sub = manifest.value("subcommand", "");
    const std::string target =
        out.empty() ? fs::path(manifest_path).parent_path().string() : out;
    const json config = manifest.value("config", json::object());
    try {
        if (sub == "synth")
            run_synth(synth_from_json(config), prepare_out_dir(target));
        else if (sub == "extract")
            run_extract(extract_from_json(config), prepare_out_dir(target));
        else if (sub == "train")
            run_train(train_cli_from_json(config), prepare_out_dir(target));
        else if (sub == "inspect-kernel")
            run_inspect(InspectConfig{config.at("bank").get<std::string>()},
                        prepare_out_dir(target));
        else if (sub == "verify")
            return run_verify(verify_from_json(config), target, std::cout);
        else
            throw CommandError{kExitRuntime, "manifest subcommand not rerunnable: " + sub};
    } catch (const json::exception& e) {
        throw CommandError{kExitRuntime, std::string("manifest config incomplete: ") + e.what()};
    }
    return kExitOk;
}

std::string absolute_path(const std::string& p) {
    return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"illumination-invariant feature toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "render a factored Lambertian scene");
    std::string synth_size = "64x64", synth_out = ".";
    SynthConfig synth_cfg;
    double rho_const = -1.0, m_const = -1.0, e_const = -1.0;
    synth->add_option("--size", synth_size, "image size WxH");
    synth->add_option("--seed", synth_cfg.seed, "RNG seed");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--rho-smoothness", synth_cfg.rho.smoothness);
    synth->add_option("--rho-lo", synth_cfg.rho.lo);
    synth->add_option("--rho-hi", synth_cfg.rho.hi);
    synth->add_option("--rho-const", rho_const, "constant reflectance (overrides lo/hi)");
    synth->add_option("--m-smoothness", synth_cfg.shading.smoothness);
    synth->add_option("--m-lo", synth_cfg.shading.lo);
    synth->add_option("--m-hi", synth_cfg.shading.hi);
    synth->add_option("--m-const", m_const, "constant shading (overrides lo/hi)");
    synth->add_option("--e-smoothness", synth_cfg.gain.smoothness);
    synth->add_option("--e-lo", synth_cfg.gain.lo);
    synth->add_option("--e-hi", synth_cfg.gain.hi);
    synth->add_option("--e-const", e_const, "constant spectral gain (overrides lo/hi)");

    // extract
    auto* extract = app.add_subcommand("extract", "extract illumination-invariant features");
    ExtractConfig extract_cfg;
    std::string extract_out = ".";
    bool extract_no_reproject = false;
    extract->add_option("--image", extract_cfg.image, "input PNG or PPM")->required();
    extract->add_option("--mode", extract_cfg.mode, "edge | learned");
    extract->add_option("--kernels", extract_cfg.kernels, "kernel bank JSON (learned mode)");
    extract->add_option("--epsilon", extract_cfg.epsilon, "log clamp floor");
    extract->add_flag("--no-reproject", extract_no_reproject,
                      "use bank weights as stored, skipping re-projection");
    extract->add_flag("--concat", extract_cfg.concat,
                      "also write image planes + feature planes as concat.iimf");
    extract->add_option("--out", extract_out, "output directory");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a kernel bank with the consistency loss");
    TrainCliConfig train_cfg;
    std::string train_out = ".", train_config_path;
    int train_steps_override = -1;
    std::int64_t train_seed_override = -1;
    train_cmd->add_option("--images", train_cfg.images_dir, "directory of .png/.ppm images")
        ->required();
    train_cmd->add_option("--config", train_config_path, "training config JSON");
    train_cmd->add_option("--init-bank", train_cfg.init_bank, "starting bank JSON");
    train_cmd->add_option("--bank-n", train_cfg.bank_n, "kernels in a fresh bank");
    train_cmd->add_option("--bank-k", train_cfg.bank_k, "kernel size of a fresh bank");
    train_cmd->add_option("--steps", train_steps_override, "override config steps");
    train_cmd->add_option("--seed", train_seed_override, "override config seed");
    train_cmd->add_option("--out", train_out, "output directory");

    // verify
    auto* verify = app.add_subcommand("verify", "run the invariance and gradient suites");
    VerifyConfig verify_cfg;
    std::string verify_out;
    bool verify_no_reproject = false;
    verify->add_option("--bank", verify_cfg.bank, "kernel bank JSON to verify");
    verify->add_flag("--no-reproject", verify_no_reproject,
                     "verify bank weights exactly as stored");
    verify->add_option("--suite", verify_cfg.suite,
                       "run one suite: constraints, projection-idempotence, gain-invariance, "
                       "gamma-scaling, shared-field, gradcheck");
    verify->add_option("--trials", verify_cfg.trials, "gradcheck trials");
    verify->add_option("--seed", verify_cfg.seed, "suite RNG seed");
    verify->add_option("--out", verify_out, "also write report.txt and a manifest here");

    // inspect-kernel
    auto* inspect = app.add_subcommand("inspect-kernel", "visualize bank weights and local means");
    InspectConfig inspect_cfg;
    std::string inspect_out = ".";
    inspect->add_option("--bank", inspect_cfg.bank, "kernel bank JSON")->required();
    inspect->add_option("--out", inspect_out, "output directory");

    // rerun
    auto* rerun = app.add_subcommand("rerun", "re-execute a run from its manifest");
    std::string rerun_manifest, rerun_out;
    rerun->add_option("--manifest", rerun_manifest, "manifest.json of a previous run")
        ->required();
    rerun->add_option("--out", rerun_out, "output directory (defaults to the manifest's)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed()) {
            parse_size(synth_size, synth_cfg.width, synth_cfg.height);
            if (rho_const > 0) synth_cfg.rho.lo = synth_cfg.rho.hi = rho_const;
            if (m_const > 0) synth_cfg.shading.lo = synth_cfg.shading.hi = m_const;
            if (e_const > 0) synth_cfg.gain.lo = synth_cfg.gain.hi = e_const;
            run_synth(synth_cfg, prepare_out_dir(synth_out));
        } else if (extract->parsed()) {
            extract_cfg.reproject = !extract_no_reproject;
            extract_cfg.image = absolute_path(extract_cfg.image);
            extract_cfg.kernels = absolute_path(extract_cfg.kernels);
            run_extract(extract_cfg, prepare_out_dir(extract_out));
        } else if (train_cmd->parsed()) {
            if (!train_config_path.empty()) {
                std::ifstream in(train_config_path);
                if (!in)
                    throw CommandError{kExitRuntime,
                                       "cannot open config " + train_config_path};
                json j;
                try {
                    in >> j;
                } catch (const json::exception& e) {
                    throw CommandError{kExitRuntime,
                                       std::string("invalid config JSON: ") + e.what()};
                }
                train_cfg.train = iim::train_config_from_json(j);
                train_cfg.bank_n = j.value("bank_n", train_cfg.bank_n);
                train_cfg.bank_k = j.value("bank_k", train_cfg.bank_k);
            }
            if (train_steps_override >= 0) train_cfg.train.steps = train_steps_override;
            if (train_seed_override >= 0)
                train_cfg.train.seed = static_cast<std::uint64_t>(train_seed_override);
            train_cfg.images_dir = absolute_path(train_cfg.images_dir);
            train_cfg.init_bank = absolute_path(train_cfg.init_bank);
            run_train(train_cfg, prepare_out_dir(train_out));
        } else if (verify->parsed()) {
            verify_cfg.reproject = !verify_no_reproject;
            verify_cfg.bank = absolute_path(verify_cfg.bank);
            return run_verify(verify_cfg, verify_out, std::cout);
        } else if (inspect->parsed()) {
            inspect_cfg.bank = absolute_path(inspect_cfg.bank);
            run_inspect(inspect_cfg, prepare_out_dir(inspect_out));
        } else if (rerun->parsed()) {
            return run_rerun(rerun_manifest, rerun_out);
        }
    } catch (const CommandError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
