// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stegano/chaos.hpp"
#include "stegano/error.hpp"
#include "stegano/image.hpp"
#include "stegano/rdh.hpp"
#include "stegano/sm3.hpp"

namespace stegano::integrity {

inline constexpr std::uint8_t kSeparator = 0x23;  // '#'

inline void require_no_separator(std::string_view condition, std::string_view name) {
    if (condition.find(static_cast<char>(kSeparator)) != std::string_view::npos) {
        throw SeparatorCollision(std::string(name) + " contains the '#' separator");
    }
}

/// K_pri # K_pub # digest
struct AuxPayload {
    std::string k_pri;
    std::string k_pub;
    Sm3Digest digest{};

    std::vector<std::uint8_t> serialize() const {
        require_no_separator(k_pri, "K_pri");
        require_no_separator(k_pub, "K_pub");
        std::vector<std::uint8_t> out(k_pri.begin(), k_pri.end());
        out.push_back(kSeparator);
        out.insert(out.end(), k_pub.begin(), k_pub.end());
        out.push_back(kSeparator);
        out.insert(out.end(), digest.begin(), digest.end());
        return out;
    }

    static AuxPayload parse(std::span<const std::uint8_t> bytes) {
        if (bytes.size() < digest_size + 2) throw MalformedStego("auxiliary payload too short");
        const auto head = bytes.first(bytes.size() - digest_size);
        if (head.back() != kSeparator) throw MalformedStego("auxiliary payload lacks the separator before the digest");
        const auto keys = head.first(head.size() - 1);
        const auto sep = std::find(keys.begin(), keys.end(), kSeparator);
        if (sep == keys.end() || std::find(sep + 1, keys.end(), kSeparator) != keys.end()) {
            throw MalformedStego("auxiliary payload must hold exactly two separators");
        }
        AuxPayload p;
        p.k_pri.assign(keys.begin(), sep);
        p.k_pub.assign(sep + 1, keys.end());
        std::copy(bytes.end() - digest_size, bytes.end(), p.digest.begin());
        return p;
    }

    friend bool operator==(const AuxPayload&, const AuxPayload&) = default;

    static constexpr std::size_t digest_size = 32;
};

/// width, height (u32 LE) then row-major pixels, channels interleaved.
inline std::vector<std::uint8_t> canonical_bytes(const Planes& planes) {
    if (planes.empty()) throw DimensionError("no image planes");
    std::vector<std::uint8_t> out;
    const auto put_u32 = [&](std::uint64_t v) {
        if (v > 0xFFFFFFFFu) throw DimensionError("image side does not fit in 32 bits");
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put_u32(planes[0].width());
    put_u32(planes[0].height());
    const std::size_t n = planes[0].size();
    out.reserve(out.size() + n * planes.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& p : planes) out.push_back(p.pixels()[i]);
    }
    return out;
}

/// SM3 over the canonical container bytes, bound to the condition strings.
inline Sm3Digest container_digest(const Planes& container, std::string_view k_pri, std::string_view k_pub) {
    Sm3 h;
    h.update(canonical_bytes(container));
    h.update(k_pri);
    h.update(std::string_view("#"));
    h.update(k_pub);
    return h.finalize();
}

inline AuxPayload make_payload(std::string k_pri, std::string k_pub, const Planes& container) {
    require_no_separator(k_pri, "K_pri");
    require_no_separator(k_pub, "K_pub");
    AuxPayload p{std::move(k_pri), std::move(k_pub), {}};
    p.digest = container_digest(container, p.k_pri, p.k_pub);
    return p;
}

/// Framed auxiliary bits: 8 * (|K_pri| + |K_pub| + 2) + 256 of them.
inline rdh::BitPayload frame_payload(std::string k_pri, std::string k_pub, const Planes& container) {
    return rdh::BitPayload::from_bytes(make_payload(std::move(k_pri), std::move(k_pub), container).serialize());
}

inline rdh::BitPayload frame_payload(std::string k_pri, std::string k_pub, const PixelGrid& container) {
    return frame_payload(std::move(k_pri), std::move(k_pub), Planes{container});
}

/// Embeds K_pri # K_pub # digest into the container; returns the stego planes.
inline Planes seal(const Planes& container, const std::string& k_pri, const std::string& k_pub,
                   const rdh::Strategy& strategy, rdh::EmbedReport* report = nullptr) {
    const auto bytes = make_payload(k_pri, k_pub, container).serialize();
    return rdh::embed_message(container, bytes, strategy, report);
}

enum class Verdict { authentic, tampered, malformed };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::authentic: return "authentic";
        case Verdict::tampered: return "tampered";
        case Verdict::malformed: return "malformed";
    }
    return "malformed";
}

struct Verification {
    Verdict verdict = Verdict::malformed;
    std::optional<AuxPayload> payload;
    std::optional<Planes> container;
    std::string detail;
};

/// Extract, recover the container, recompute its digest and re-embed. Never throws for bad input images.
inline Verification verify(const Planes& stego, const std::optional<chaos::RealKey>& key) {
    Verification out;
    const auto strategy = key ? rdh::Strategy::keyed(*key) : rdh::Strategy::sequential();
    try {
        auto extracted = rdh::extract_message(stego, strategy);
        auto payload = AuxPayload::parse(extracted.message);
        const auto digest = container_digest(extracted.cover, payload.k_pri, payload.k_pub);
        if (digest != payload.digest) {
            out.verdict = Verdict::tampered;
            out.detail = "digest mismatch";
        } else if (seal(extracted.cover, payload.k_pri, payload.k_pub, strategy) != stego) {
            // Edits confined to unread carriers leave container and payload intact; embedding is
            // deterministic, so the genuine stego object is the only one that re-seals to itself.
            out.verdict = Verdict::tampered;
            out.detail = "stego object differs from the re-embedded container";
        } else {
            out.verdict = Verdict::authentic;
            out.detail = "digest matches";
        }
        out.payload = std::move(payload);
        out.container = std::move(extracted.cover);
    } catch (const MalformedStego& e) {
        out.verdict = Verdict::malformed;
        out.detail = e.what();
    } catch (const DimensionError& e) {
        out.verdict = Verdict::malformed;
        out.detail = e.what();
    } catch (const CapacityError& e) {
        out.verdict = Verdict::malformed;
        out.detail = e.what();
    }
    return out;
}

inline Verification verify(const PixelGrid& stego, const std::optional<chaos::RealKey>& key) {
    return verify(Planes{stego}, key);
}

}  // namespace stegano::integrity
