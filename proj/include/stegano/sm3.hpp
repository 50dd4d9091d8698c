// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace stegano {

using Sm3Digest = std::array<std::uint8_t, 32>;

/// GB/T 32905-2016 SM3, incremental.
class Sm3 {
public:
    Sm3() { reset(); }

    void reset() {
        state_ = {0x7380166f, 0x4914b2b9, 0x172442d7, 0xda8a0600,
                  0xa96f30bc, 0x163138aa, 0xe38dee4d, 0xb0fb0e4e};
        buffered_ = 0;
        total_bytes_ = 0;
    }

    Sm3& update(std::span<const std::uint8_t> data) {
        total_bytes_ += data.size();
        std::size_t i = 0;
        if (buffered_ != 0) {
            while (buffered_ < kBlock && i < data.size()) buffer_[buffered_++] = data[i++];
            if (buffered_ < kBlock) return *this;
            compress(buffer_.data());
            buffered_ = 0;
        }
        for (; i + kBlock <= data.size(); i += kBlock) compress(data.data() + i);
        while (i < data.size()) buffer_[buffered_++] = data[i++];
        return *this;
    }

    Sm3& update(std::string_view text) {
        return update({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    }

    Sm3Digest finalize() {
        const std::uint64_t bit_length = total_bytes_ * 8;
        std::array<std::uint8_t, kBlock * 2> tail{};
        std::size_t n = buffered_;
        std::copy_n(buffer_.begin(), n, tail.begin());
        tail[n++] = 0x80;
        const std::size_t padded = n + 8 <= kBlock ? kBlock : kBlock * 2;
        for (int k = 0; k < 8; ++k) tail[padded - 1 - k] = static_cast<std::uint8_t>(bit_length >> (8 * k));
        compress(tail.data());
        if (padded == kBlock * 2) compress(tail.data() + kBlock);

        Sm3Digest out{};
        for (std::size_t w = 0; w < 8; ++w) {
            for (std::size_t b = 0; b < 4; ++b) out[w * 4 + b] = static_cast<std::uint8_t>(state_[w] >> (24 - 8 * b));
        }
        reset();
        return out;
    }

private:
    static constexpr std::size_t kBlock = 64;

    static constexpr std::uint32_t p0(std::uint32_t x) { return x ^ std::rotl(x, 9) ^ std::rotl(x, 17); }
    static constexpr std::uint32_t p1(std::uint32_t x) { return x ^ std::rotl(x, 15) ^ std::rotl(x, 23); }

    void compress(const std::uint8_t* block) {
        std::array<std::uint32_t, 68> w{};
        for (std::size_t j = 0; j < 16; ++j) {
            w[j] = static_cast<std::uint32_t>(block[4 * j]) << 24 | static_cast<std::uint32_t>(block[4 * j + 1]) << 16 |
                   static_cast<std::uint32_t>(block[4 * j + 2]) << 8 | block[4 * j + 3];
        }
        for (std::size_t j = 16; j < 68; ++j) {
            w[j] = p1(w[j - 16] ^ w[j - 9] ^ std::rotl(w[j - 3], 15)) ^ std::rotl(w[j - 13], 7) ^ w[j - 6];
        }

        auto [a, b, c, d, e, f, g, h] = state_;
        for (int j = 0; j < 64; ++j) {
            const std::uint32_t t = j < 16 ? 0x79cc4519u : 0x7a879d8au;
            const std::uint32_t ss1 = std::rotl(std::rotl(a, 12) + e + std::rotl(t, j % 32), 7);
            const std::uint32_t ss2 = ss1 ^ std::rotl(a, 12);
            const std::uint32_t ff = j < 16 ? (a ^ b ^ c) : ((a & b) | (a & c) | (b & c));
            const std::uint32_t gg = j < 16 ? (e ^ f ^ g) : ((e & f) | (~e & g));
            const std::uint32_t tt1 = ff + d + ss2 + (w[static_cast<std::size_t>(j)] ^ w[static_cast<std::size_t>(j) + 4]);
            const std::uint32_t tt2 = gg + h + ss1 + w[static_cast<std::size_t>(j)];
            d = c;
            c = std::rotl(b, 9);
            b = a;
            a = tt1;
            h = g;
            g = std::rotl(f, 19);
            f = e;
            e = p0(tt2);
        }
        const std::array<std::uint32_t, 8> mixed{a, b, c, d, e, f, g, h};
        for (std::size_t i = 0; i < 8; ++i) state_[i] ^= mixed[i];
    }

    std::array<std::uint32_t, 8> state_{};
    std::array<std::uint8_t, kBlock> buffer_{};
    std::size_t buffered_ = 0;
    std::uint64_t total_bytes_ = 0;
};

inline Sm3Digest sm3(std::span<const std::uint8_t> message) { return Sm3{}.update(message).finalize(); }

inline Sm3Digest sm3(std::string_view message) { return Sm3{}.update(message).finalize(); }

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xF]);
    }
    return out;
}

}  // namespace stegano
