// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "stegano/integrity.hpp"
#include "test_images.hpp"

using namespace stegano;
using namespace stegano::integrity;

namespace {

const chaos::RealKey kKey = chaos::RealKey::parse("3.799200023214331", "0.8888564633215454");

}  // namespace

TEST(AuxPayload, FramedLength) {
    const Planes c{PixelGrid(9, 9, 7)};
    EXPECT_EQ(frame_payload("", "", c).size(), 272u);
    EXPECT_EQ(frame_payload("a", "b", c).size(), 288u);
    EXPECT_EQ(frame_payload("a cat", "a dog in snow", c).size(), 8u * (5 + 13 + 2) + 256u);
}

TEST(AuxPayload, ParseRoundTrip) {
    const Planes c{PixelGrid(9, 9, 7)};
    const auto p = make_payload("private prompt", "public prompt", c);
    const auto bytes = p.serialize();
    EXPECT_EQ(AuxPayload::parse(bytes), p);
    // Digest bytes may contain '#'; parsing is anchored on the fixed digest length.
    AuxPayload hashy{"x", "y", {}};
    hashy.digest.fill(kSeparator);
    EXPECT_EQ(AuxPayload::parse(hashy.serialize()), hashy);
}

TEST(AuxPayload, RejectsSeparatorInConditions) {
    const Planes c{PixelGrid(9, 9, 7)};
    EXPECT_THROW(make_payload("a#b", "c", c), SeparatorCollision);
    EXPECT_THROW(make_payload("a", "#", c), SeparatorCollision);
}

TEST(AuxPayload, RejectsBadStructure) {
    std::vector<std::uint8_t> too_short(20, 'a');
    EXPECT_THROW(AuxPayload::parse(too_short), MalformedStego);
    std::vector<std::uint8_t> one_sep{'a', '#'};
    one_sep.resize(one_sep.size() + 32, 0);
    EXPECT_THROW(AuxPayload::parse(one_sep), MalformedStego);
    std::vector<std::uint8_t> three{'a', '#', 'b', '#', 'c', '#'};
    three.resize(three.size() + 32, 0);
    EXPECT_THROW(AuxPayload::parse(three), MalformedStego);
}

TEST(Digest, BindsContainerAndConditions) {
    std::mt19937_64 rng(41);
    Planes c{fixtures::smooth_grid(12, 12, rng)};
    const auto d = container_digest(c, "p", "q");
    EXPECT_NE(d, container_digest(c, "p", "r"));
    EXPECT_NE(d, container_digest(c, "pq", ""));
    Planes c2 = c;
    c2[0](3, 4) ^= 1;
    EXPECT_NE(d, container_digest(c2, "p", "q"));
    EXPECT_EQ(canonical_bytes(c).size(), 8u + 144u);
    EXPECT_EQ(canonical_bytes(Planes{PixelGrid(16, 9)}).size(), 8u + 144u);
    EXPECT_NE(canonical_bytes(Planes{PixelGrid(16, 9)}), canonical_bytes(Planes{PixelGrid(9, 16)}));
}

TEST(Verify, AuthenticTamperedMalformed) {
    std::mt19937_64 rng(42);
    const Planes container{fixtures::smooth_grid(96, 96, rng)};
    for (const std::optional<chaos::RealKey> key : {std::optional<chaos::RealKey>{}, std::optional(kKey)}) {
        const auto strategy = key ? rdh::Strategy::keyed(*key) : rdh::Strategy::sequential();
        const auto stego = seal(container, "pri", "pub", strategy);
        const auto ok = verify(stego, key);
        ASSERT_EQ(ok.verdict, Verdict::authentic) << ok.detail;
        EXPECT_EQ(ok.payload->k_pri, "pri");
        EXPECT_EQ(ok.payload->k_pub, "pub");
        EXPECT_EQ(*ok.container, container);

        int authentic = 0;
        for (int i = 0; i < 300; ++i) {
            Planes t = stego;
            const std::size_t idx = rng() % t[0].size();
            auto& px = t[0].pixels()[idx];
            px = px == 0 ? 1 : (px == 255 ? 254 : static_cast<std::uint8_t>(px + (rng() % 2 ? 1 : -1)));
            if (verify(t, key).verdict == Verdict::authentic) ++authentic;
        }
        EXPECT_EQ(authentic, 0);

        const Planes unrelated{fixtures::smooth_grid(96, 96, rng)};
        EXPECT_NE(verify(unrelated, key).verdict, Verdict::authentic);
    }
    EXPECT_EQ(verify(Planes{PixelGrid(2, 2)}, std::nullopt).verdict, Verdict::malformed);
}

TEST(Verify, WrongKeyIsNotAuthentic) {
    std::mt19937_64 rng(43);
    const Planes container{fixtures::smooth_grid(96, 96, rng)};
    const auto stego = seal(container, "pri", "pub", rdh::Strategy::keyed(kKey));
    for (int i = 0; i < 10; ++i) {
        EXPECT_NE(verify(stego, chaos::random_key(rng)).verdict, Verdict::authentic);
    }
    EXPECT_NE(verify(stego, std::nullopt).verdict, Verdict::authentic);
}

TEST(Verify, EditsOnUnreadCarriersAreCaught) {
    std::mt19937_64 rng(44);
    const Planes container{fixtures::smooth_grid(96, 96, rng)};
    const auto stego = seal(container, "pri", "pub", rdh::Strategy::keyed(kKey));
    const auto part = partition(stego[0]);
    const auto map = predict_errors(stego[0], part);
    std::size_t tried = 0;
    for (std::size_t slot = 0; slot < map.errors.size(); ++slot) {
        if (map.errors[slot] != 2) continue;
        Planes t = stego;
        --t[0].pixels()[error_slot_pixel(part, slot)];  // error 2 -> 1: a new carrier
        ASSERT_NE(verify(t, kKey).verdict, Verdict::authentic) << "slot " << slot;
        ++tried;
    }
    EXPECT_GT(tried, 0u);
}
