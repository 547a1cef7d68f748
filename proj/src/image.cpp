// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/image.hpp"

#include "gcot/core_model.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <csetjmp>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <png.h>

namespace gcot {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_be32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

const std::array<std::uint32_t, 256>& crc_table() {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    return table;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    std::uint32_t c = 0xFFFFFFFFu;
    for (auto b : data) c = crc_table()[(c ^ b) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void put_chunk(Bytes& out, const char (&type)[5], std::span<const std::uint8_t> data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_from = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    put_be32(out, crc32(std::span(out).subspan(crc_from)));
}

bool is_png(std::span<const std::uint8_t> b) {
    return b.size() >= 8 && std::memcmp(b.data(), kPngSignature.data(), 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) { return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF; }

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw ImageDecodeError(std::string("png: ") + img.message);
    }
    img.format = PNG_FORMAT_GRAY;
    GrayImage out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw ImageDecodeError("png: " + msg);
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

GrayImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    GrayImage out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw ImageDecodeError(std::string("jpeg: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_GRAYSCALE;
    jpeg_start_decompress(&cinfo);
    out.width = static_cast<int>(cinfo.output_width);
    out.height = static_cast<int>(cinfo.output_height);
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

}  // namespace

Bytes read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string sniff_media_type(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) return "image/png";
    if (is_jpeg(bytes)) return "image/jpeg";
    throw ImageDecodeError("unrecognized image format");
}

ImageSize probe_image_size(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) {
        if (bytes.size() < 24 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
            throw ImageDecodeError("png: missing IHDR");
        }
        return {static_cast<int>(read_be32(bytes.data() + 16)), static_cast<int>(read_be32(bytes.data() + 20))};
    }
    if (is_jpeg(bytes)) {
        std::size_t p = 2;
        while (p + 4 <= bytes.size()) {
            if (bytes[p] != 0xFF) throw ImageDecodeError("jpeg: bad marker");
            const std::uint8_t marker = bytes[p + 1];
            if (marker == 0xFF) {
                ++p;
                continue;
            }
            const std::size_t len = (std::size_t{bytes[p + 2]} << 8) | bytes[p + 3];
            const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
            if (sof) {
                if (p + 9 > bytes.size()) break;
                const int h = (bytes[p + 5] << 8) | bytes[p + 6];
                const int w = (bytes[p + 7] << 8) | bytes[p + 8];
                return {w, h};
            }
            p += 2 + len;
        }
        throw ImageDecodeError("jpeg: no frame header");
    }
    throw ImageDecodeError("unrecognized image format");
}

GrayImage decode_image(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) return decode_png(bytes);
    if (is_jpeg(bytes)) return decode_jpeg(bytes);
    throw ImageDecodeError("unrecognized image format");
}

Bytes encode_png(const GrayImage& image, const TextChunks& text) {
    if (image.width < 1 || image.height < 1) throw InvalidArgument("cannot encode an empty image");
    Bytes out(kPngSignature.begin(), kPngSignature.end());

    Bytes ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(image.width));
    put_be32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // depth 8, grayscale, deflate, no filter, no interlace
    put_chunk(out, "IHDR", ihdr);

    for (const auto& [key, value] : text) {
        Bytes body(key.begin(), key.end());
        body.push_back(0);
        body.insert(body.end(), value.begin(), value.end());
        put_chunk(out, "tEXt", body);
    }

    // Filter byte 0 before every scanline.
    Bytes raw;
    raw.reserve(static_cast<std::size_t>(image.height) * (image.width + 1));
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);
        const auto* row = image.pixels.data() + static_cast<std::size_t>(y) * image.width;
        raw.insert(raw.end(), row, row + image.width);
    }

    Bytes zlib{0x78, 0x01};
    std::size_t pos = 0;
    do {
        const std::size_t n = std::min<std::size_t>(65535, raw.size() - pos);
        const bool final = pos + n == raw.size();
        zlib.push_back(final ? 1 : 0);
        zlib.push_back(static_cast<std::uint8_t>(n & 0xFF));
        zlib.push_back(static_cast<std::uint8_t>(n >> 8));
        zlib.push_back(static_cast<std::uint8_t>(~n & 0xFF));
        zlib.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xFF));
        zlib.insert(zlib.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
                    raw.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
    } while (pos < raw.size());
    std::uint32_t a = 1, b = 0;
    for (auto byte : raw) {
        a = (a + byte) % 65521;
        b = (b + a) % 65521;
    }
    put_be32(zlib, (b << 16) | a);
    put_chunk(out, "IDAT", zlib);
    put_chunk(out, "IEND", {});
    return out;
}

std::optional<std::string> png_text_chunk(std::span<const std::uint8_t> bytes, std::string_view keyword) {
    if (!is_png(bytes)) return std::nullopt;
    std::size_t p = 8;
    while (p + 12 <= bytes.size()) {
        const std::size_t len = read_be32(bytes.data() + p);
        if (p + 12 + len > bytes.size()) return std::nullopt;
        const auto* type = bytes.data() + p + 4;
        const auto* data = bytes.data() + p + 8;
        if (std::memcmp(type, "tEXt", 4) == 0) {
            const std::string_view body(reinterpret_cast<const char*>(data), len);
            const auto nul = body.find('\0');
            if (nul != std::string_view::npos && body.substr(0, nul) == keyword) {
                return std::string(body.substr(nul + 1));
            }
        }
        if (std::memcmp(type, "IEND", 4) == 0) break;
        p += 12 + len;
    }
    return std::nullopt;
}

GrayImage crop_image(const GrayImage& image, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > image.width || y + h > image.height) {
        throw InvalidArgument("crop rectangle outside image");
    }
    GrayImage out(w, h);
    for (int row = 0; row < h; ++row) {
        const auto* src = image.pixels.data() + static_cast<std::size_t>(y + row) * image.width + x;
        std::copy(src, src + w, out.pixels.data() + static_cast<std::size_t>(row) * w);
    }
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw ProtocolError("base64 payload length not a multiple of 4");
    Bytes out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw ProtocolError("invalid base64 payload");
    // EVP_DecodeBlock keeps the padding bytes as zeros.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    std::string out;
    out.reserve(digest.size() * 2);
    char buf[3];
    for (auto d : digest) {
        std::snprintf(buf, sizeof buf, "%02x", d);
        out += buf;
    }
    return out;
}

}  // namespace gcot
