// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include "iimkit/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <png.h>

namespace iim {

namespace {

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

std::uint8_t quantize8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// --- PPM (P6, 8-bit) ---

// Reads one whitespace-delimited token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

ImageRGB load_ppm(std::ifstream& in, const std::string& path) {
    if (ppm_token(in) != "P6")
        io_fail(path, "unsupported PPM variant (only binary P6)");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(ppm_token(in));
        height = std::stoi(ppm_token(in));
        maxval = std::stoi(ppm_token(in));
    } catch (const std::exception&) {
        io_fail(path, "malformed PPM header");
    }
    if (width <= 0 || height <= 0)
        io_fail(path, "malformed PPM dimensions");
    if (maxval != 255)
        io_fail(path, "unsupported PPM maxval (only 8-bit, maxval 255)");

    const std::size_t count = static_cast<std::size_t>(width) * height * 3;
    std::vector<std::uint8_t> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        io_fail(path, "truncated PPM pixel data");

    ImageRGB img(width, height);
    std::size_t idx = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                img.planes[c].at(x, y) = raw[idx++] / 255.0;
    return img;
}

// --- PNG via libpng's simplified API ---

ImageRGB load_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        io_fail(path, std::string("PNG read failed: ") + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        io_fail(path, std::string("PNG decode failed: ") + image.message);
    }
    ImageRGB img(static_cast<int>(image.width), static_cast<int>(image.height));
    std::size_t idx = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                img.planes[c].at(x, y) = buffer[idx++] / 255.0;
    return img;
}

void write_png_bytes(const std::string& path, int width, int height, bool gray,
                     const std::vector<std::uint8_t>& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr))
        io_fail(path, std::string("PNG write failed: ") + image.message);
}

void put_f32_le(std::string& out, float f) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>((u >> 8) & 0xff));
    out.push_back(static_cast<char>((u >> 16) & 0xff));
    out.push_back(static_cast<char>((u >> 24) & 0xff));
}

float get_f32_le(const unsigned char* p) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(u);
}

} // namespace

ImageRGB load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        io_fail(path, "cannot open file");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2)
        io_fail(path, "file too short to identify");
    in.seekg(0);
    if (magic[0] == 'P' && magic[1] == '6')
        return load_ppm(in, path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
        in.close();
        return load_png(path);
    }
    io_fail(path, "unsupported raster format (expected PNG or binary PPM)");
}

void save_png(const ImageRGB& img, const std::string& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                bytes.push_back(quantize8(img.planes[c].at(x, y)));
    write_png_bytes(path, img.width, img.height, /*gray=*/false, bytes);
}

void save_gray_png(const Grid& plane, const std::string& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(plane.size());
    for (double v : plane.data) bytes.push_back(quantize8(v));
    write_png_bytes(path, plane.width, plane.height, /*gray=*/true, bytes);
}

void save_feature_stack(const FeatureStack& stack, const std::string& path) {
    std::string payload;
    payload.reserve(32 + stack.planes.size() * static_cast<std::size_t>(stack.width) *
                             static_cast<std::size_t>(stack.height) * 4);
    payload += "IIMF1\n";
    payload += std::to_string(stack.width) + " " + std::to_string(stack.height) + " " +
               std::to_string(stack.n_kernels) + "\n";
    if (stack.planes.size() != static_cast<std::size_t>(stack.n_kernels) * 3)
        throw std::invalid_argument("save_feature_stack: plane count != 3 * n_kernels");
    for (const Grid& g : stack.planes) {
        if (g.width != stack.width || g.height != stack.height)
            throw std::invalid_argument("save_feature_stack: plane shape mismatch");
        for (double v : g.data) put_f32_le(payload, static_cast<float>(v));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        io_fail(path, "cannot open for writing");
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out)
        io_fail(path, "write failed");
}

FeatureStack load_feature_stack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        io_fail(path, "cannot open file");
    std::string magic(6, '\0');
    in.read(magic.data(), 6);
    if (in.gcount() != 6 || magic != "IIMF1\n")
        io_fail(path, "not an IIMF1 feature-stack file");
    std::string header;
    if (!std::getline(in, header))
        io_fail(path, "missing IIMF1 header line");
    std::istringstream hs(header);
    long long w = -1, h = -1, n = -1;
    hs >> w >> h >> n;
    std::string trailing;
    if (!hs || (hs >> trailing, !trailing.empty()))
        io_fail(path, "malformed IIMF1 header");
    if (w < 0 || h < 0 || n < 0 || w > (1 << 24) || h > (1 << 24) || n > (1 << 20))
        io_fail(path, "IIMF1 header out of range");

    FeatureStack stack;
    stack.width = static_cast<int>(w);
    stack.height = static_cast<int>(h);
    stack.n_kernels = static_cast<int>(n);
    const std::size_t plane_count = static_cast<std::size_t>(n) * 3;
    const std::size_t plane_bytes = static_cast<std::size_t>(w) * h * 4;
    std::vector<unsigned char> buf(plane_bytes);
    for (std::size_t p = 0; p < plane_count; ++p) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(plane_bytes));
        if (static_cast<std::size_t>(in.gcount()) != plane_bytes)
            io_fail(path, "truncated IIMF1 payload (shape mismatch)");
        Grid g(stack.width, stack.height);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            g.data[i] = static_cast<double>(get_f32_le(&buf[i * 4]));
        stack.planes.push_back(std::move(g));
    }
    if (in.peek() != EOF)
        io_fail(path, "trailing bytes after IIMF1 payload (shape mismatch)");
    return stack;
}

} // namespace iim
