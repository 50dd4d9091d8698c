// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "stegano/image.hpp"
#include "test_images.hpp"

using namespace stegano;

TEST(Partition, SingleBlock) {
    const auto p = partition(3, 3);
    EXPECT_EQ(p.block_count(), 1u);
    EXPECT_TRUE(p.residual.empty());
    EXPECT_EQ(p.blocks[0], (BlockCoord{0, 0}));
}

TEST(Partition, ResidualStripes) {
    const auto p = partition(7, 8);  // width 7, height 8
    EXPECT_EQ(p.block_rows, 2u);
    EXPECT_EQ(p.block_cols, 2u);
    EXPECT_EQ(p.block_count(), 4u);
    EXPECT_EQ(p.residual.size(), 7u * 8u - 36u);
    EXPECT_EQ(p.residual.size(), 20u);
    EXPECT_EQ(p.blocks[1], (BlockCoord{0, 3}));
    EXPECT_EQ(p.blocks[2], (BlockCoord{3, 0}));
}

TEST(Partition, CoversEveryPixelExactlyOnce) {
    for (std::size_t w : {3u, 4u, 5u, 9u, 10u, 17u, 256u}) {
        for (std::size_t h : {3u, 5u, 8u, 256u}) {
            const auto p = partition(w, h);
            std::vector<int> hits(w * h, 0);
            for (std::size_t b = 0; b < p.block_count(); ++b) {
                ++hits[block_center_pixel(p, b)];
                for (std::size_t k = 0; k < kPredictedPerBlock; ++k) ++hits[error_slot_pixel(p, b * kPredictedPerBlock + k)];
            }
            for (auto idx : p.residual) ++hits[idx];
            for (int h1 : hits) ASSERT_EQ(h1, 1) << w << "x" << h;
        }
    }
}

TEST(Partition, RejectsTinyImages) {
    EXPECT_THROW(partition(2, 10), DimensionError);
    EXPECT_THROW(partition(10, 2), DimensionError);
    EXPECT_THROW(partition(0, 0), DimensionError);
}

TEST(Predict, WorkedBlock) {
    PixelGrid g(3, 3, std::vector<std::uint8_t>{98, 100, 99, 101, 100, 102, 99, 98, 100});
    const auto m = predict_errors(g);
    ASSERT_EQ(m.block_count(), 1u);
    EXPECT_EQ(m.centers[0], 100);
    EXPECT_EQ(m.errors, (std::vector<int>{-2, 0, -1, 1, 2, -1, -2, 0}));
    EXPECT_EQ(m.histogram[0], 2u);
    EXPECT_EQ(m.histogram[-2], 2u);
    EXPECT_EQ(m.histogram[-1], 2u);
    EXPECT_EQ(m.histogram[1], 1u);
    EXPECT_EQ(m.histogram[2], 1u);
    EXPECT_EQ(m.zero_bin, 3);
}

TEST(Predict, HistogramCountsEveryPredictedPixel) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20; ++i) {
        const auto g = fixtures::random_grid(31, 20, rng);
        const auto m = predict_errors(g);
        EXPECT_EQ(m.histogram.total(), 8 * m.block_count());
        EXPECT_EQ(m.block_count(), 10u * 6u);
    }
}

TEST(Predict, ReconstructIsInverse) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const auto g = fixtures::random_grid(8 + i % 9, 5 + i % 13, rng);
        const auto part = partition(g);
        EXPECT_EQ(reconstruct_pixels(predict_errors(g, part), part, g), g);
    }
}

TEST(Predict, ReconstructRejectsOverflow) {
    PixelGrid g(3, 3, 255);
    const auto part = partition(g);
    auto m = predict_errors(g, part);
    m.errors[0] = 1;
    EXPECT_THROW(reconstruct_pixels(m, part, g), RangeError);
}

TEST(Predict, ZeroBinIsSmallestEmptyPositiveBin) {
    ErrorHistogram h;
    for (int e : {0, 0, 1, 2, 4, -3}) h.add(e);
    EXPECT_EQ(h.first_zero_bin_right_of_peak(), 3);
    ErrorHistogram full;
    for (int e = 1; e <= 255; ++e) full.add(e);
    EXPECT_FALSE(full.first_zero_bin_right_of_peak().has_value());
}
