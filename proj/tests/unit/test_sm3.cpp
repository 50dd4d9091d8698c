// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <openssl/evp.h>

#include <bit>
#include <random>

#include "stegano/sm3.hpp"

using namespace stegano;

namespace {

Sm3Digest openssl_sm3(std::span<const std::uint8_t> data) {
    Sm3Digest out{};
    unsigned len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sm3(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, out.data(), &len);
    EVP_MD_CTX_free(ctx);
    return out;
}

}  // namespace

TEST(Sm3, StandardVectors) {
    EXPECT_EQ(to_hex(sm3("abc")), "66c7f0f462eeedd9d1f2d46bdc10e4e24167c4875cf2f7a2297da02b8f4ba8e0");
    EXPECT_EQ(to_hex(sm3("")), "1ab21d8355cfa17f8e61194831e81a8f22bec8c728fefb747ed035eb5082aa2b");
    std::string block;
    for (int i = 0; i < 16; ++i) block += "abcd";
    EXPECT_EQ(to_hex(sm3(block)), "debe9ff92275b8a138604889c18e5a4d6fdb70e5387e5765293dcba39c0c5732");
}

TEST(Sm3, MatchesOpenSslAcrossLengths) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> byte(0, 255);
    for (std::size_t len = 0; len < 300; ++len) {
        std::vector<std::uint8_t> msg(len);
        for (auto& b : msg) b = static_cast<std::uint8_t>(byte(rng));
        ASSERT_EQ(sm3(msg), openssl_sm3(msg)) << "length " << len;
    }
}

TEST(Sm3, IncrementalEqualsOneShot) {
    std::mt19937_64 rng(32);
    std::vector<std::uint8_t> msg(1000);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
    for (std::size_t chunk : {1u, 7u, 63u, 64u, 65u, 333u}) {
        Sm3 h;
        for (std::size_t i = 0; i < msg.size(); i += chunk) {
            h.update(std::span<const std::uint8_t>(msg).subspan(i, std::min(chunk, msg.size() - i)));
        }
        EXPECT_EQ(h.finalize(), sm3(msg)) << chunk;
    }
}

TEST(Sm3, Avalanche) {
    std::mt19937_64 rng(33);
    double total = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::uint8_t> msg(64);
        for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
        const auto a = sm3(msg);
        msg[rng() % msg.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        const auto b = sm3(msg);
        for (std::size_t i = 0; i < a.size(); ++i) total += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
    }
    EXPECT_GE(total / trials, 100.0);
}
