// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "stegano/image_io.hpp"
#include "test_images.hpp"

using namespace stegano;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("stegano_io_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(ImageIo, PgmRoundTrip) {
    std::mt19937_64 rng(1);
    const Planes img{fixtures::random_grid(13, 7, rng)};
    EXPECT_EQ(io::decode_netpbm(io::encode_netpbm(img)), img);
}

TEST(ImageIo, PpmRoundTrip) {
    std::mt19937_64 rng(2);
    const Planes img{fixtures::random_grid(5, 9, rng), fixtures::random_grid(5, 9, rng), fixtures::random_grid(5, 9, rng)};
    EXPECT_EQ(io::decode_netpbm(io::encode_netpbm(img)), img);
}

TEST(ImageIo, PngRoundTripGrayAndRgb) {
    std::mt19937_64 rng(3);
    const Planes gray{fixtures::random_grid(17, 4, rng)};
    EXPECT_EQ(io::decode_png(io::encode_png(gray)), gray);
    const Planes rgb{fixtures::random_grid(6, 6, rng), fixtures::random_grid(6, 6, rng), fixtures::random_grid(6, 6, rng)};
    EXPECT_EQ(io::decode_png(io::encode_png(rgb)), rgb);
}

TEST(ImageIo, FileDispatchByExtensionAndMagic) {
    std::mt19937_64 rng(4);
    const Planes img{fixtures::random_grid(9, 9, rng)};
    for (const char* name : {"a.png", "a.pgm"}) {
        const auto path = temp_path(name);
        io::write_image(path, img);
        EXPECT_EQ(io::read_image(path), img);
        std::filesystem::remove(path);
    }
}

TEST(ImageIo, RejectsGarbage) {
    const std::vector<std::uint8_t> junk{'h', 'e', 'l', 'l', 'o'};
    EXPECT_THROW(io::decode_netpbm(junk), IoError);
    EXPECT_THROW(io::decode_png(junk), IoError);
    const std::string p5 = "P5\n4 4\n65535\n";
    EXPECT_THROW(io::decode_netpbm(std::vector<std::uint8_t>(p5.begin(), p5.end())), IoError);
    const std::string truncated = "P5\n4 4\n255\nabc";
    EXPECT_THROW(io::decode_netpbm(std::vector<std::uint8_t>(truncated.begin(), truncated.end())), IoError);
    EXPECT_THROW(io::read_image("/nonexistent/dir/x.png"), IoError);
}
