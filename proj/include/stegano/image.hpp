// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stegano/error.hpp"

namespace stegano {

/// 8-bit single-channel raster, row-major.
class PixelGrid {
public:
    PixelGrid() = default;

    PixelGrid(std::size_t width, std::size_t height, std::uint8_t fill = 0)
        : width_(width), height_(height), pixels_(width * height, fill) {}

    PixelGrid(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (pixels_.size() != width_ * height_) {
            throw DimensionError("pixel buffer holds " + std::to_string(pixels_.size()) +
                                 " values, expected " + std::to_string(width_ * height_));
        }
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    std::uint8_t operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
    std::uint8_t& operator()(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// A stack of equally sized planes (1 for grayscale, 3 for RGB).
using Planes = std::vector<PixelGrid>;

struct BlockCoord {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const BlockCoord&, const BlockCoord&) = default;
};

/// Non-overlapping 3x3 tiling of the largest divisible sub-rectangle.
struct BlockPartition {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t block_rows = 0;
    std::size_t block_cols = 0;
    std::vector<BlockCoord> blocks;    // raster order
    std::vector<std::size_t> residual; // linear pixel indices outside every block

    std::size_t block_count() const noexcept { return blocks.size(); }
};

inline constexpr std::size_t kBlockSide = 3;
inline constexpr std::size_t kPredictedPerBlock = 8;

// Within-block order of the predicted pixels: raster order, center skipped.
inline constexpr std::array<std::pair<std::size_t, std::size_t>, kPredictedPerBlock> kNeighborOffsets{{
    {0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}, {2, 2},
}};

inline constexpr int kMinError = -255;
inline constexpr int kMaxError = 255;

class ErrorHistogram {
public:
    std::size_t operator[](int e) const { return counts_.at(static_cast<std::size_t>(e - kMinError)); }
    void add(int e) { ++counts_.at(static_cast<std::size_t>(e - kMinError)); }

    std::size_t total() const noexcept {
        std::size_t n = 0;
        for (auto c : counts_) n += c;
        return n;
    }

    /// Smallest a in (0, 255] with H(a) == 0.
    std::optional<int> first_zero_bin_right_of_peak() const {
        for (int a = 1; a <= kMaxError; ++a) {
            if ((*this)[a] == 0) return a;
        }
        return std::nullopt;
    }

    friend bool operator==(const ErrorHistogram&, const ErrorHistogram&) = default;

private:
    std::array<std::size_t, kMaxError - kMinError + 1> counts_{};
};

struct PredictionErrorMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<int> errors;           // kPredictedPerBlock per block, block-major
    std::vector<std::uint8_t> centers; // one per block
    ErrorHistogram histogram;
    std::optional<int> zero_bin;
    // Set once the map has been histogram-shifted: the bound a used for the shift.
    std::optional<int> shift_bound;

    std::size_t block_count() const noexcept { return centers.size(); }

    void refresh_histogram() {
        histogram = ErrorHistogram{};
        for (int e : errors) histogram.add(e);
        zero_bin = histogram.first_zero_bin_right_of_peak();
    }
};

inline BlockPartition partition(std::size_t width, std::size_t height) {
    if (width < kBlockSide || height < kBlockSide) {
        throw DimensionError("image is " + std::to_string(width) + "x" + std::to_string(height) +
                             "; both sides must be at least 3");
    }
    BlockPartition part;
    part.width = width;
    part.height = height;
    part.block_rows = height / kBlockSide;
    part.block_cols = width / kBlockSide;
    part.blocks.reserve(part.block_rows * part.block_cols);
    for (std::size_t br = 0; br < part.block_rows; ++br) {
        for (std::size_t bc = 0; bc < part.block_cols; ++bc) {
            part.blocks.push_back({br * kBlockSide, bc * kBlockSide});
        }
    }
    const std::size_t covered_rows = part.block_rows * kBlockSide;
    const std::size_t covered_cols = part.block_cols * kBlockSide;
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            if (r >= covered_rows || c >= covered_cols) part.residual.push_back(r * width + c);
        }
    }
    return part;
}

inline BlockPartition partition(const PixelGrid& grid) { return partition(grid.width(), grid.height()); }

/// Linear pixel index carrying error slot `slot` of `part`.
inline std::size_t error_slot_pixel(const BlockPartition& part, std::size_t slot) {
    const auto& block = part.blocks[slot / kPredictedPerBlock];
    const auto [dr, dc] = kNeighborOffsets[slot % kPredictedPerBlock];
    return (block.row + dr) * part.width + block.col + dc;
}

inline std::size_t block_center_pixel(const BlockPartition& part, std::size_t block) {
    const auto& b = part.blocks[block];
    return (b.row + 1) * part.width + b.col + 1;
}

/// Center-value prediction: every non-center block pixel is predicted by its block center.
inline PredictionErrorMap predict_errors(const PixelGrid& grid, const BlockPartition& part) {
    if (grid.width() != part.width || grid.height() != part.height) {
        throw DimensionError("partition does not match the grid dimensions");
    }
    PredictionErrorMap map;
    map.width = part.width;
    map.height = part.height;
    map.centers.reserve(part.block_count());
    map.errors.reserve(part.block_count() * kPredictedPerBlock);
    const auto px = grid.pixels();
    for (std::size_t b = 0; b < part.block_count(); ++b) {
        const int center = px[block_center_pixel(part, b)];
        map.centers.push_back(static_cast<std::uint8_t>(center));
        for (std::size_t k = 0; k < kPredictedPerBlock; ++k) {
            map.errors.push_back(static_cast<int>(px[error_slot_pixel(part, b * kPredictedPerBlock + k)]) - center);
        }
    }
    map.refresh_histogram();
    return map;
}

inline PredictionErrorMap predict_errors(const PixelGrid& grid) { return predict_errors(grid, partition(grid)); }

/// Inverse of predict_errors. Residual pixels are copied from `residual_source`.
inline PixelGrid reconstruct_pixels(const PredictionErrorMap& map, const BlockPartition& part,
                                    const PixelGrid& residual_source) {
    if (map.width != part.width || map.height != part.height || residual_source.width() != part.width ||
        residual_source.height() != part.height) {
        throw DimensionError("error map, partition and residual source disagree on dimensions");
    }
    if (map.centers.size() != part.block_count() || map.errors.size() != part.block_count() * kPredictedPerBlock) {
        throw DimensionError("error map does not cover the partition");
    }
    PixelGrid out(part.width, part.height);
    auto dst = out.pixels();
    const auto src = residual_source.pixels();
    for (std::size_t idx : part.residual) dst[idx] = src[idx];
    for (std::size_t b = 0; b < part.block_count(); ++b) {
        const int center = map.centers[b];
        dst[block_center_pixel(part, b)] = map.centers[b];
        for (std::size_t k = 0; k < kPredictedPerBlock; ++k) {
            const std::size_t slot = b * kPredictedPerBlock + k;
            const int value = center + map.errors[slot];
            if (value < 0 || value > 255) {
                throw RangeError("reconstructed pixel " + std::to_string(value) + " at block " + std::to_string(b) +
                                 " leaves [0,255]; the error map is corrupted");
            }
            dst[error_slot_pixel(part, slot)] = static_cast<std::uint8_t>(value);
        }
    }
    return out;
}

}  // namespace stegano
