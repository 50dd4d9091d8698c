// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bitset>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stegano/error.hpp"

namespace stegano::chaos {

using u128 = unsigned __int128;
using i128 = __int128;

/// Decimal fixed point with 16 fractional digits. Products round half to even.
class Fixed16 {
public:
    static constexpr std::int64_t kScale = 10'000'000'000'000'000;  // 1e16

    constexpr Fixed16() = default;
    static constexpr Fixed16 from_raw(std::int64_t raw) { return Fixed16(raw); }
    static constexpr Fixed16 one() { return Fixed16(kScale); }
    static constexpr Fixed16 half() { return Fixed16(kScale / 2); }
    static constexpr Fixed16 ulp() { return Fixed16(1); }

    constexpr std::int64_t raw() const { return raw_; }
    double to_double() const { return static_cast<double>(raw_) / static_cast<double>(kScale); }

    friend constexpr Fixed16 operator+(Fixed16 a, Fixed16 b) { return Fixed16(a.raw_ + b.raw_); }
    friend constexpr Fixed16 operator-(Fixed16 a, Fixed16 b) { return Fixed16(a.raw_ - b.raw_); }
    friend constexpr Fixed16 operator*(std::int64_t k, Fixed16 a) { return Fixed16(k * a.raw_); }

    friend constexpr Fixed16 operator*(Fixed16 a, Fixed16 b) {
        const i128 prod = static_cast<i128>(a.raw_) * b.raw_;
        const bool neg = prod < 0;
        const u128 mag = static_cast<u128>(neg ? -prod : prod);
        u128 q = mag / static_cast<u128>(kScale);
        const u128 r = mag % static_cast<u128>(kScale);
        const u128 half_scale = static_cast<u128>(kScale / 2);
        if (r > half_scale || (r == half_scale && (q & 1) != 0)) ++q;
        const auto result = static_cast<std::int64_t>(q);
        return Fixed16(neg ? -result : result);
    }

    friend constexpr auto operator<=>(Fixed16, Fixed16) = default;

    /// Exactly 16 fractional digits, e.g. "0.9360000000000000".
    std::string to_string() const {
        std::int64_t v = raw_;
        std::string sign;
        if (v < 0) {
            sign = "-";
            v = -v;
        }
        std::string frac = std::to_string(v % kScale);
        frac.insert(0, 16 - frac.size(), '0');
        return sign + std::to_string(v / kScale) + "." + frac;
    }

private:
    constexpr explicit Fixed16(std::int64_t raw) : raw_(raw) {}
    std::int64_t raw_ = 0;
};

namespace detail {

/// Parses "<int>.<digits>" into an integer scaled by 10^digits; fewer digits are zero-padded.
inline std::int64_t parse_decimal(std::string_view text, int digits, std::string_view what) {
    const auto dot = text.find('.');
    const std::string_view int_part = dot == std::string_view::npos ? text : text.substr(0, dot);
    const std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    auto all_digits = [](std::string_view s) {
        for (char c : s) {
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        }
        return true;
    };
    if (int_part.empty() || int_part.size() > 2 || !all_digits(int_part) || !all_digits(frac_part) ||
        frac_part.size() > static_cast<std::size_t>(digits)) {
        throw InvalidKey(std::string(what) + " must be a decimal with at most " + std::to_string(digits) +
                         " fractional digits, got '" + std::string(text) + "'");
    }
    std::int64_t value = 0;
    for (char c : int_part) value = value * 10 + (c - '0');
    for (int i = 0; i < digits; ++i) {
        const int d = i < static_cast<int>(frac_part.size()) ? frac_part[static_cast<std::size_t>(i)] - '0' : 0;
        value = value * 10 + d;
    }
    return value;
}

inline std::string format_decimal(std::int64_t raw, int digits) {
    std::int64_t scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    std::string frac = std::to_string(raw % scale);
    frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
    return std::to_string(raw / scale) + "." + frac;
}

}  // namespace detail

/// Real key (mu, a0): mu with 15 decimals in [3.6, 4), a0 with 16 decimals in (0, 1).
class RealKey {
public:
    static constexpr std::int64_t kMuScale = 1'000'000'000'000'000;  // 1e15
    static constexpr std::int64_t kMuMin = 3'600'000'000'000'000;    // 3.6
    static constexpr std::int64_t kMuEnd = 4'000'000'000'000'000;    // 4.0, exclusive

    static RealKey from_raw(std::int64_t mu_e15, std::int64_t a0_e16) {
        if (mu_e15 < kMuMin || mu_e15 >= kMuEnd) {
            throw InvalidKey("mu must lie in [3.6, 4) with first decimal digit in {6,7,8,9}");
        }
        if (a0_e16 <= 0 || a0_e16 >= Fixed16::kScale) throw InvalidKey("a0 must lie strictly inside (0, 1)");
        return RealKey(mu_e15, a0_e16);
    }

    static RealKey parse(std::string_view mu, std::string_view a0) {
        return from_raw(detail::parse_decimal(mu, 15, "mu"), detail::parse_decimal(a0, 16, "a0"));
    }

    std::int64_t mu_raw() const { return mu_; }
    std::int64_t a0_raw() const { return a0_; }
    Fixed16 mu() const { return Fixed16::from_raw(mu_ * 10); }
    Fixed16 a0() const { return Fixed16::from_raw(a0_); }

    std::string mu_string() const { return detail::format_decimal(mu_, 15); }
    std::string a0_string() const { return detail::format_decimal(a0_, 16); }

    friend bool operator==(const RealKey&, const RealKey&) = default;

private:
    RealKey(std::int64_t mu, std::int64_t a0) : mu_(mu), a0_(a0) {}
    std::int64_t mu_;
    std::int64_t a0_;
};

template <class Engine>
RealKey random_key(Engine& engine) {
    std::uniform_int_distribution<std::int64_t> mu(RealKey::kMuMin, RealKey::kMuEnd - 1);
    std::uniform_int_distribution<std::int64_t> a0(1, Fixed16::kScale - 1);
    const auto m = mu(engine);
    return RealKey::from_raw(m, a0(engine));
}

enum class MapVariant {
    corrected,  // second branch 1 - 4mu*a*(a-0.5)*(1-a)
    verbatim,   // second branch 1 - 4mu*a*(0.5-a)*(1-a); escapes from (0,1) are rejected
};

/// One step of the piecewise logistic map.
inline Fixed16 next_value(Fixed16 a, Fixed16 mu, MapVariant variant = MapVariant::corrected) {
    if (a <= Fixed16{} || a >= Fixed16::one()) throw DomainError("chaotic state must lie in (0, 1): " + a.to_string());
    if (mu < Fixed16::from_raw(36 * Fixed16::kScale / 10) || mu >= Fixed16::from_raw(4 * Fixed16::kScale)) {
        throw DomainError("mu must lie in [3.6, 4): " + mu.to_string());
    }
    const Fixed16 four_mu = 4 * mu;
    Fixed16 next;
    if (a < Fixed16::half()) {
        next = (four_mu * a) * (Fixed16::half() - a);
    } else if (variant == MapVariant::corrected) {
        next = Fixed16::one() - ((four_mu * a) * (a - Fixed16::half())) * (Fixed16::one() - a);
        // Only a == 0.5 lands on 1 exactly; 1 is an unstable fixed point, step just inside.
        if (next >= Fixed16::one()) next = Fixed16::one() - Fixed16::ulp();
    } else {
        next = Fixed16::one() - ((four_mu * a) * (Fixed16::half() - a)) * (Fixed16::one() - a);
        if (next <= Fixed16{} || next >= Fixed16::one()) {
            throw DomainError("verbatim map left (0, 1): " + next.to_string());
        }
    }
    return next;
}

class ChaoticGenerator {
public:
    explicit ChaoticGenerator(const RealKey& key, MapVariant variant = MapVariant::corrected)
        : mu_(key.mu()), state_(key.a0()), variant_(variant) {}

    /// a_1, a_2, ... (no burn-in).
    Fixed16 next() {
        state_ = next_value(state_, mu_, variant_);
        return state_;
    }

private:
    Fixed16 mu_;
    Fixed16 state_;
    MapVariant variant_;
};

struct ChaoticSequence {
    std::vector<Fixed16> values;
    RealKey source_key;
};

inline ChaoticSequence chaotic_sequence(const RealKey& key, std::size_t count,
                                        MapVariant variant = MapVariant::corrected) {
    ChaoticSequence seq{{}, key};
    seq.values.reserve(count);
    ChaoticGenerator gen(key, variant);
    for (std::size_t i = 0; i < count; ++i) seq.values.push_back(gen.next());
    return seq;
}

inline constexpr std::size_t kJumpStride = 5;

/// ceil(5 * a) for a in (0, 1); always in 1..5.
inline std::size_t jump_offset(Fixed16 a) {
    const auto scaled = static_cast<u128>(a.raw()) * kJumpStride;
    const auto s = static_cast<u128>(Fixed16::kScale);
    return static_cast<std::size_t>((scaled + s - 1) / s);
}

/// 1-based positions p_i = 5(i-1) + ceil(5 a_i), one per disjoint window of 5.
inline std::vector<std::size_t> jump_positions(const RealKey& key, std::size_t count) {
    std::vector<std::size_t> positions;
    positions.reserve(count);
    ChaoticGenerator gen(key);
    for (std::size_t i = 0; i < count; ++i) positions.push_back(kJumpStride * i + jump_offset(gen.next()));
    return positions;
}

// --- 102-bit key codec ------------------------------------------------------

inline constexpr std::size_t kKeyBits = 102;
inline constexpr std::size_t kKeyHexDigits = 26;

inline constexpr u128 pow10_u128(int n) {
    u128 v = 1;
    for (int i = 0; i < n; ++i) v *= 10;
    return v;
}

/// Size of the key space: 4 * 10^14 mu values times 10^16 a0 slots.
inline constexpr u128 kKeySpace = 4 * pow10_u128(30);

class KeyCodeword {
public:
    static KeyCodeword from_value(u128 v) {
        if (v >> kKeyBits) throw RangeError("codeword value exceeds 102 bits");
        return KeyCodeword(v);
    }

    static KeyCodeword from_bits(const std::bitset<kKeyBits>& bits) {
        u128 v = 0;
        for (std::size_t i = kKeyBits; i-- > 0;) v = (v << 1) | (bits[i] ? 1 : 0);
        return KeyCodeword(v);
    }

    static KeyCodeword from_hex(std::string_view hex) {
        if (hex.size() != kKeyHexDigits) throw InvalidKey("codeword must be 26 hex characters");
        u128 v = 0;
        for (char c : hex) {
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else throw InvalidKey("codeword contains a non-hex character");
            v = (v << 4) | static_cast<u128>(d);
        }
        if (v >> kKeyBits) throw InvalidKey("codeword top 2 bits must be zero");
        return KeyCodeword(v);
    }

    u128 value() const { return value_; }

    /// bit i is the coefficient of 2^i.
    std::bitset<kKeyBits> bits() const {
        std::bitset<kKeyBits> b;
        for (std::size_t i = 0; i < kKeyBits; ++i) b[i] = ((value_ >> i) & 1) != 0;
        return b;
    }

    std::string to_hex() const {
        static constexpr char kDigits[] = "0123456789abcdef";
        std::string out(kKeyHexDigits, '0');
        u128 v = value_;
        for (std::size_t i = kKeyHexDigits; i-- > 0;) {
            out[i] = kDigits[static_cast<int>(v & 0xF)];
            v >>= 4;
        }
        return out;
    }

    std::string to_decimal() const {
        if (value_ == 0) return "0";
        std::string out;
        for (u128 v = value_; v != 0; v /= 10) out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        return out;
    }

    friend bool operator==(const KeyCodeword&, const KeyCodeword&) = default;

private:
    explicit KeyCodeword(u128 v) : value_(v) {}
    u128 value_;
};

inline KeyCodeword encode_key(const RealKey& key) {
    if (key.mu_raw() < RealKey::kMuMin || key.mu_raw() >= RealKey::kMuEnd) {
        throw InvalidKey("first decimal digit of mu must be in {6,7,8,9}");
    }
    const u128 mu_index = static_cast<u128>(key.mu_raw() - RealKey::kMuMin);
    const u128 a0_index = static_cast<u128>(key.a0_raw() - 1);
    return KeyCodeword::from_value(mu_index * static_cast<u128>(Fixed16::kScale) + a0_index);
}

inline RealKey decode_key(const KeyCodeword& word) {
    if (word.value() >= kKeySpace) throw RangeError("codeword value is outside the 4e30 key space");
    const u128 scale = static_cast<u128>(Fixed16::kScale);
    const auto mu_index = static_cast<std::int64_t>(word.value() / scale);
    const auto a0_index = static_cast<std::int64_t>(word.value() % scale);
    if (a0_index == Fixed16::kScale - 1) throw RangeError("codeword decodes to a0 = 1, outside (0, 1)");
    return RealKey::from_raw(RealKey::kMuMin + mu_index, a0_index + 1);
}

/// "mu=<15 decimals>;a0=<16 decimals>"
inline std::string format_key_line(const RealKey& key) {
    return "mu=" + key.mu_string() + ";a0=" + key.a0_string();
}

/// Accepts either the mu/a0 line or a 26-hex-digit codeword; surrounding whitespace is ignored.
inline RealKey parse_key_text(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.starts_with("mu=")) {
        const auto semi = text.find(';');
        if (semi == std::string_view::npos || text.substr(semi + 1, 3) != "a0=") {
            throw InvalidKey("key line must read mu=<decimal>;a0=<decimal>");
        }
        return RealKey::parse(text.substr(3, semi - 3), text.substr(semi + 4));
    }
    return decode_key(KeyCodeword::from_hex(text));
}

}  // namespace stegano::chaos
