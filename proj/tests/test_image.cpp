// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/core_model.hpp"
#include "gcot/image.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

#include <random>

using namespace gcot;
using gcot::testing::fixture;

namespace {

Bytes as_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

GrayImage noise(int w, int h, unsigned seed) {
    GrayImage img(w, h);
    std::mt19937 gen(seed);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen() & 0xFF);
    return img;
}

}  // namespace

TEST_CASE("base64 matches the RFC 4648 vectors") {
    const std::pair<const char*, const char*> vectors[] = {
        {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"},
        {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
    };
    for (const auto& [plain, encoded] : vectors) {
        CHECK(base64_encode(as_bytes(plain)) == encoded);
        CHECK(base64_decode(encoded) == as_bytes(plain));
    }
    CHECK_THROWS_AS(base64_decode("abc"), ProtocolError);
}

TEST_CASE("sha256 known digests") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("decodes the reference gradient PNG") {
    const auto bytes = read_file_bytes(fixture("wire/tiny.png"));
    CHECK(sniff_media_type(bytes) == "image/png");
    const auto size = probe_image_size(bytes);
    CHECK(size.width == 16);
    CHECK(size.height == 12);
    const auto img = decode_image(bytes);
    REQUIRE(img.width == 16);
    REQUIRE(img.height == 12);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) CHECK(img.at(x, y) == (16 * x + 5 * y) % 256);
}

TEST_CASE("decodes a JPEG to grayscale") {
    const auto bytes = read_file_bytes(fixture("tiny.jpg"));
    CHECK(sniff_media_type(bytes) == "image/jpeg");
    CHECK(probe_image_size(bytes).width == 24);
    CHECK(probe_image_size(bytes).height == 16);
    const auto img = decode_image(bytes);
    CHECK(img.width == 24);
    CHECK(img.height == 16);
    for (auto p : img.pixels) CHECK(std::abs(int(p) - 81) <= 2);
}

TEST_CASE("PNG round trip with text chunks") {
    const auto img = noise(37, 21, 5);
    const auto png = encode_png(img, {{"Source", "img004#1,2,3,4"}, {"Note", "x"}});
    CHECK(decode_image(png) == img);
    CHECK(png_text_chunk(png, "Source") == "img004#1,2,3,4");
    CHECK(png_text_chunk(png, "Note") == "x");
    CHECK_FALSE(png_text_chunk(png, "Missing").has_value());
    CHECK(encode_png(img, {{"Source", "img004#1,2,3,4"}, {"Note", "x"}}) == png);
}

TEST_CASE("crop copies the region") {
    const auto img = noise(20, 10, 6);
    const auto c = crop_image(img, 3, 2, 5, 4);
    REQUIRE(c.width == 5);
    REQUIRE(c.height == 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) CHECK(c.at(x, y) == img.at(x + 3, y + 2));
    CHECK_THROWS_AS(crop_image(img, 16, 0, 5, 4), InvalidArgument);
    CHECK_THROWS_AS(crop_image(img, -1, 0, 5, 4), InvalidArgument);
}

TEST_CASE("corrupt bytes raise ImageDecodeError") {
    CHECK_THROWS_AS(decode_image(as_bytes("not an image at all")), ImageDecodeError);
    auto png = encode_png(noise(8, 8, 1));
    png.resize(png.size() / 2);
    CHECK_THROWS_AS(decode_image(png), ImageDecodeError);
    auto jpg = read_file_bytes(fixture("tiny.jpg"));
    jpg.resize(40);
    CHECK_THROWS_AS(decode_image(jpg), ImageDecodeError);
    CHECK_THROWS_AS(sniff_media_type(as_bytes("GIF89a")), ImageDecodeError);
}

TEST_CASE("missing file raises IoError") {
    CHECK_THROWS_AS(read_file_bytes("/nonexistent/definitely/not/here.png"), IoError);
}
