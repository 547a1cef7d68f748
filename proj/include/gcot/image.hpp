// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gcot {

using Bytes = std::vector<std::uint8_t>;

/// 8-bit grayscale raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 255)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const GrayImage&) const = default;
};

struct ImageSize {
    int width = 0;
    int height = 0;
};

using TextChunks = std::vector<std::pair<std::string, std::string>>;

Bytes read_file_bytes(const std::filesystem::path& path);

/// "image/png" or "image/jpeg"; throws ImageDecodeError for anything else.
std::string sniff_media_type(std::span<const std::uint8_t> bytes);

/// Reads dimensions from the PNG IHDR or JPEG SOF header without decoding pixels.
ImageSize probe_image_size(std::span<const std::uint8_t> bytes);

/// Decodes PNG or JPEG to grayscale. Throws ImageDecodeError.
GrayImage decode_image(std::span<const std::uint8_t> bytes);

/// Grayscale PNG with stored (uncompressed) deflate blocks, so output bytes
/// depend only on the pixels and chunks. tEXt chunks precede IDAT.
Bytes encode_png(const GrayImage& image, const TextChunks& text = {});

/// Value of the first tEXt chunk with this keyword in a PNG stream.
std::optional<std::string> png_text_chunk(std::span<const std::uint8_t> bytes, std::string_view keyword);

/// Copies the w x h region at (x, y). Throws InvalidArgument if it leaves the image.
GrayImage crop_image(const GrayImage& image, int x, int y, int w, int h);

std::string base64_encode(std::span<const std::uint8_t> bytes);
Bytes base64_decode(std::string_view text);

std::string sha256_hex(std::string_view data);

}  // namespace gcot
