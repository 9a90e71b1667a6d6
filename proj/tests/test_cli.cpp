// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.
//
// Drives the installed binary end to end; the path comes from IIMKIT_BIN.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

#include "iimkit/ccr.hpp"
#include "iimkit/image_io.hpp"
#include "iimkit/kernels.hpp"
#include "iimkit/lambertian.hpp"
#include "iimkit/train.hpp"
#include "iimkit/verify.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string binary() {
    const char* bin = std::getenv("IIMKIT_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "IIMKIT_BIN must point at the CLI binary");
    return bin;
}

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const auto out_file = testutil::make_temp_dir("cli_out") / "out.txt";
    const std::string cmd =
        binary() + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = testutil::read_file(out_file);
    fs::remove_all(out_file.parent_path());
    return result;
}

} // namespace

TEST_CASE("synth is deterministic and validates its flags") {
    const auto dir = testutil::make_temp_dir("cli_synth");
    const std::string base = "synth --size 24x24 --seed 7 --out ";
    CHECK(run_cli(base + (dir / "a").string()).exit_code == 0);
    CHECK(run_cli(base + (dir / "b").string()).exit_code == 0);
    for (const char* name : {"scene.png", "factors.iimf", "manifest.json"})
        CHECK(testutil::read_file(dir / "a" / name) == testutil::read_file(dir / "b" / name));

    CHECK(run_cli("synth --size 0x0 --out " + (dir / "zero").string()).exit_code == 2);
    CHECK(run_cli("synth --size banana --out " + (dir / "nan").string()).exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("synth with constant factors renders a constant image") {
    const auto dir = testutil::make_temp_dir("cli_const");
    const RunResult r = run_cli("synth --size 8x8 --rho-const 0.5 --m-const 1 --e-const 1 --out " +
                                dir.string());
    REQUIRE(r.exit_code == 0);
    const iim::ImageRGB img = iim::load_image((dir / "scene.png").string());
    for (int c = 0; c < 3; ++c)
        for (double v : img.planes[c].data) CHECK(v == 128.0 / 255.0);

    const iim::FeatureStack factors = iim::load_feature_stack((dir / "factors.iimf").string());
    CHECK(factors.n_kernels == 3);
    for (double v : factors.planes[0].data) CHECK(v == 0.5); // reflectance
    fs::remove_all(dir);
}

TEST_CASE("extract edge mode on a constant image yields the zero stack") {
    const auto dir = testutil::make_temp_dir("cli_extract");
    REQUIRE(run_cli("synth --size 12x12 --rho-const 0.4 --m-const 1 --e-const 1 --out " +
                    dir.string())
                .exit_code == 0);
    const RunResult r = run_cli("extract --image " + (dir / "scene.png").string() +
                                " --mode edge --out " + (dir / "feat").string());
    REQUIRE(r.exit_code == 0);
    const iim::FeatureStack stack =
        iim::load_feature_stack((dir / "feat" / "features.iimf").string());
    CHECK(stack.n_kernels == 2);
    for (const iim::Grid& g : stack.planes)
        for (double v : g.data) CHECK(v == 0.0);
    CHECK(fs::exists(dir / "feat" / "plane_k0_rb.png"));
    CHECK(fs::exists(dir / "feat" / "plane_k1_gb.png"));
    CHECK(fs::exists(dir / "feat" / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("extract learned mode with the embedded +-1 bank equals edge mode") {
    const auto dir = testutil::make_temp_dir("cli_modes");
    REQUIRE(run_cli("synth --size 20x20 --seed 3 --out " + dir.string()).exit_code == 0);
    iim::save_bank(iim::edge_bank(), (dir / "edges.json").string());

    REQUIRE(run_cli("extract --image " + (dir / "scene.png").string() +
                    " --mode edge --out " + (dir / "e").string())
                .exit_code == 0);
    REQUIRE(run_cli("extract --image " + (dir / "scene.png").string() +
                    " --mode learned --kernels " + (dir / "edges.json").string() +
                    " --out " + (dir / "l").string())
                .exit_code == 0);
    CHECK(testutil::read_file(dir / "e" / "features.iimf") ==
          testutil::read_file(dir / "l" / "features.iimf"));

    // learned mode without a bank is a usage error
    CHECK(run_cli("extract --image " + (dir / "scene.png").string() +
                  " --mode learned --out " + (dir / "x").string())
              .exit_code == 2);
    // unreadable image is a runtime error
    CHECK(run_cli("extract --image " + (dir / "missing.png").string() +
                  " --mode edge --out " + (dir / "y").string())
              .exit_code == 1);
    fs::remove_all(dir);
}

TEST_CASE("extract output is invariant to an exactly representable gain") {
    const auto dir = testutil::make_temp_dir("cli_gain");
    // keep samples <= 127 so a gain of 2 stays exact in 8 bits
    REQUIRE(run_cli("synth --size 16x16 --seed 9 --rho-lo 0.1 --rho-hi 0.3 "
                    "--m-lo 0.5 --m-hi 0.9 --e-lo 0.5 --e-hi 0.9 --out " +
                    dir.string())
                .exit_code == 0);
    const iim::ImageRGB img = iim::load_image((dir / "scene.png").string());
    iim::save_png(iim::apply_channel_gains(img, 2.0, 1.0, 2.0),
                  (dir / "gained.png").string());

    REQUIRE(run_cli("extract --image " + (dir / "scene.png").string() + " --mode edge --out " +
                    (dir / "a").string())
                .exit_code == 0);
    REQUIRE(run_cli("extract --image " + (dir / "gained.png").string() +
                    " --mode edge --out " + (dir / "b").string())
                .exit_code == 0);
    const iim::FeatureStack fa =
        iim::load_feature_stack((dir / "a" / "features.iimf").string());
    const iim::FeatureStack fb =
        iim::load_feature_stack((dir / "b" / "features.iimf").string());
    CHECK(iim::max_abs_difference(fa, fb) < 1e-5);
    fs::remove_all(dir);
}

TEST_CASE("extract --concat prepends the raw image planes") {
    const auto dir = testutil::make_temp_dir("cli_concat");
    REQUIRE(run_cli("synth --size 10x10 --seed 4 --out " + dir.string()).exit_code == 0);
    REQUIRE(run_cli("extract --image " + (dir / "scene.png").string() +
                    " --mode edge --concat --out " + (dir / "c").string())
                .exit_code == 0);
    const iim::FeatureStack concat =
        iim::load_feature_stack((dir / "c" / "concat.iimf").string());
    const iim::FeatureStack feats =
        iim::load_feature_stack((dir / "c" / "features.iimf").string());
    const iim::ImageRGB img = iim::load_image((dir / "scene.png").string());
    REQUIRE(concat.n_kernels == feats.n_kernels + 1);
    for (std::size_t i = 0; i < img.planes[0].data.size(); ++i)
        CHECK(concat.planes[0].data[i] ==
              static_cast<double>(static_cast<float>(img.planes[0].data[i])));
    for (std::size_t p = 0; p < feats.planes.size(); ++p)
        CHECK(concat.planes[p + 3].data == feats.planes[p].data);
    fs::remove_all(dir);
}

TEST_CASE("train writes bank, loss CSV and manifest deterministically") {
    const auto dir = testutil::make_temp_dir("cli_train");
    const auto images = dir / "imgs";
    fs::create_directories(images);
    for (int i = 0; i < 3; ++i)
        iim::save_png(iim::make_test_image(16, 16, 700 + i),
                      (images / ("img" + std::to_string(i) + ".png")).string());

    json cfg{{"steps", 6}, {"sigma_kind", "smooth-field"}, {"seed", 11},
             {"bank_n", 2},  {"bank_k", 3}};
    testutil::write_file(dir / "cfg.json", cfg.dump());

    const std::string cmd = "train --images " + images.string() + " --config " +
                            (dir / "cfg.json").string() + " --out ";
    REQUIRE(run_cli(cmd + (dir / "a").string()).exit_code == 0);
    REQUIRE(run_cli(cmd + (dir / "b").string()).exit_code == 0);
    CHECK(testutil::read_file(dir / "a" / "bank.json") ==
          testutil::read_file(dir / "b" / "bank.json"));
    CHECK(testutil::read_file(dir / "a" / "loss.csv") ==
          testutil::read_file(dir / "b" / "loss.csv"));

    std::ifstream csv(dir / "a" / "loss.csv");
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "step,loss,local_mean_stat");

    // empty directory: runtime failure with a message
    const auto empty = dir / "none";
    fs::create_directories(empty);
    const RunResult fail = run_cli("train --images " + empty.string() + " --out " +
                                   (dir / "c").string());
    CHECK(fail.exit_code == 1);
    CHECK(fail.output.find("no .png or .ppm images") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("train records a decreasing loss in the CSV") {
    const auto dir = testutil::make_temp_dir("cli_train_loss");
    const auto images = dir / "imgs";
    fs::create_directories(images);
    for (int i = 0; i < 4; ++i)
        iim::save_png(iim::make_test_image(32, 32, 760 + i),
                      (images / ("img" + std::to_string(i) + ".png")).string());
    json cfg{{"steps", 60}, {"sigma_kind", "smooth-field"}, {"seed", 3}};
    testutil::write_file(dir / "cfg.json", cfg.dump());
    REQUIRE(run_cli("train --images " + images.string() + " --config " +
                    (dir / "cfg.json").string() + " --out " + (dir / "out").string())
                .exit_code == 0);

    std::ifstream csv(dir / "out" / "loss.csv");
    std::string line;
    REQUIRE(std::getline(csv, line)); // header
    double first = -1.0, last = -1.0;
    while (std::getline(csv, line)) {
        const auto c1 = line.find(','), c2 = line.rfind(',');
        REQUIRE(c1 != std::string::npos);
        last = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        if (first < 0.0) first = last;
    }
    CHECK(first > 0.0);
    CHECK(last < first);
    fs::remove_all(dir);
}

TEST_CASE("train --steps 0 returns the projected, normalized input bank") {
    const auto dir = testutil::make_temp_dir("cli_train0");
    const auto images = dir / "imgs";
    fs::create_directories(images);
    iim::save_png(iim::make_test_image(12, 12, 800), (images / "img.png").string());

    iim::KernelBank dirty = iim::init_bank(2, 3, 81);
    for (double& w : dirty.kernels[0].weights) w = 3.0 * w + 0.25;
    iim::save_bank(dirty, (dir / "init.json").string());

    REQUIRE(run_cli("train --images " + images.string() + " --init-bank " +
                    (dir / "init.json").string() + " --steps 0 --out " + (dir / "out").string())
                .exit_code == 0);
    const iim::KernelBank got =
        iim::load_bank((dir / "out" / "bank.json").string(), false).bank;
    for (int i = 0; i < 2; ++i) {
        // loader already re-projected the stored weights once on the way in
        const iim::Kernel want = iim::normalize_unit(
            iim::project_zero_mean(iim::project_zero_mean(dirty.kernels[i])));
        for (std::size_t wi = 0; wi < want.weights.size(); ++wi)
            CHECK(got.kernels[i].weights[wi] == want.weights[wi]);
    }
    fs::remove_all(dir);
}

TEST_CASE("verify passes on a fresh install and fails on a dirty bank") {
    const auto dir = testutil::make_temp_dir("cli_verify");
    const RunResult ok = run_cli("verify --seed 5 --trials 4");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("[PASS] gain-invariance") != std::string::npos);
    CHECK(ok.output.find("all suites passed") != std::string::npos);

    iim::KernelBank dirty = iim::init_bank(2, 3, 82);
    for (double& w : dirty.kernels[1].weights) w += 0.5;
    iim::save_bank(dirty, (dir / "dirty.json").string());

    const RunResult fail = run_cli("verify --bank " + (dir / "dirty.json").string() +
                                   " --no-reproject --suite constraints");
    CHECK(fail.exit_code == 1);
    CHECK(fail.output.find("[FAIL] constraints") != std::string::npos);

    // with re-projection (the default) the same file passes
    CHECK(run_cli("verify --bank " + (dir / "dirty.json").string() + " --suite constraints")
              .exit_code == 0);

    const RunResult grad = run_cli("verify --suite gradcheck --trials 3 --seed 6");
    CHECK(grad.exit_code == 0);
    int trial_lines = 0;
    std::size_t pos = 0;
    while ((pos = grad.output.find("gradcheck trial", pos)) != std::string::npos) {
        ++trial_lines;
        pos += 1;
    }
    CHECK(trial_lines == 3);
    fs::remove_all(dir);
}

TEST_CASE("inspect-kernel prints the local-mean stat of stored weights") {
    const auto dir = testutil::make_temp_dir("cli_inspect");
    iim::KernelBank bank;
    bank.n = 2;
    bank.k = 5;
    bank.kernels.push_back(iim::Kernel(5, 1.0 / 25.0)); // stat 0.04
    bank.kernels.push_back(iim::Kernel(5));             // zero kernel, stat 0
    iim::save_bank(bank, (dir / "bank.json").string());

    const RunResult r = run_cli("inspect-kernel --bank " + (dir / "bank.json").string() +
                                " --out " + (dir / "out").string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("kernel 0: local_mean_stat = 0.04") != std::string::npos);
    CHECK(r.output.find("kernel 1: local_mean_stat = 0") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "kernel0_weights.png"));
    CHECK(fs::exists(dir / "out" / "kernel1_local_mean.png"));
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("rerun reproduces a synth run byte for byte from its manifest") {
    const auto dir = testutil::make_temp_dir("cli_rerun");
    REQUIRE(run_cli("synth --size 18x14 --seed 21 --out " + (dir / "first").string())
                .exit_code == 0);
    REQUIRE(run_cli("rerun --manifest " + (dir / "first" / "manifest.json").string() +
                    " --out " + (dir / "second").string())
                .exit_code == 0);
    for (const char* name : {"scene.png", "factors.iimf", "manifest.json"})
        CHECK(testutil::read_file(dir / "first" / name) ==
              testutil::read_file(dir / "second" / name));
    fs::remove_all(dir);
}
