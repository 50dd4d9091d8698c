// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stegano/chaos.hpp"
#include "stegano/error.hpp"
#include "stegano/image.hpp"

namespace stegano::rdh {

/// Ordered bit sequence; bytes are expanded MSB first.
class BitPayload {
public:
    BitPayload() = default;
    explicit BitPayload(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_) {
            if (b > 1) throw DomainError("bit payload entries must be 0 or 1");
        }
    }

    static BitPayload from_bytes(std::span<const std::uint8_t> bytes) {
        BitPayload p;
        p.bits_.reserve(bytes.size() * 8);
        for (auto byte : bytes) p.append_uint(byte, 8);
        return p;
    }

    std::vector<std::uint8_t> to_bytes() const {
        if (bits_.size() % 8 != 0) throw DomainError("bit payload length is not a whole number of bytes");
        std::vector<std::uint8_t> out(bits_.size() / 8, 0);
        for (std::size_t i = 0; i < bits_.size(); ++i) out[i / 8] = static_cast<std::uint8_t>(out[i / 8] << 1 | bits_[i]);
        return out;
    }

    void push_back(bool bit) { bits_.push_back(bit ? 1 : 0); }

    void append_uint(std::uint64_t value, unsigned width) {
        for (unsigned i = width; i-- > 0;) bits_.push_back(static_cast<std::uint8_t>((value >> i) & 1));
    }

    void append(const BitPayload& other) { bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end()); }

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    friend bool operator==(const BitPayload&, const BitPayload&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Sequential reader over a BitPayload; running past the end is a MalformedStego.
class BitReader {
public:
    explicit BitReader(const BitPayload& payload) : bits_(payload.bits()) {}

    bool read_bit() {
        if (pos_ >= bits_.size()) throw MalformedStego("embedded stream ended early");
        return bits_[pos_++] != 0;
    }

    std::uint64_t read_uint(unsigned width) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < width; ++i) v = v << 1 | (read_bit() ? 1u : 0u);
        return v;
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bits_.size() - pos_; }

private:
    std::span<const std::uint8_t> bits_;
    std::size_t pos_ = 0;
};

// Elias-gamma code for n >= 1.
inline void append_gamma(BitPayload& out, std::uint64_t n) {
    unsigned width = 0;
    while ((n >> width) > 1) ++width;
    for (unsigned i = 0; i < width; ++i) out.push_back(false);
    out.append_uint(n, width + 1);
}

inline std::uint64_t read_gamma(BitReader& in) {
    unsigned zeros = 0;
    while (!in.read_bit()) {
        if (++zeros > 62) throw MalformedStego("gamma code too long");
    }
    return (std::uint64_t{1} << zeros) | in.read_uint(zeros);
}

// --- position planning -----------------------------------------------------

enum class Mode { sequential, cdjb };

inline const char* to_string(Mode m) { return m == Mode::sequential ? "sequential" : "cdjb"; }

/// Error-map slot in a (possibly multi-plane) stack of maps.
struct SlotRef {
    std::size_t plane = 0;
    std::size_t slot = 0;
    friend bool operator==(const SlotRef&, const SlotRef&) = default;
};

struct PositionPlan {
    std::vector<SlotRef> eligible;      // raster order, plane-major
    std::vector<std::size_t> selected;  // strictly increasing indices into `eligible`
    std::size_t window_size = 1;

    std::size_t required_positions() const noexcept { return selected.size() * window_size; }
};

inline std::size_t window_size(Mode mode) { return mode == Mode::sequential ? 1 : chaos::kJumpStride; }

inline std::size_t capacity_from_eligible(std::size_t eligible, Mode mode) { return eligible / window_size(mode); }

/// Non-center slots whose error is exactly 0.
inline std::vector<SlotRef> eligible_positions(std::span<const PredictionErrorMap> maps) {
    std::vector<SlotRef> out;
    for (std::size_t p = 0; p < maps.size(); ++p) {
        for (std::size_t s = 0; s < maps[p].errors.size(); ++s) {
            if (maps[p].errors[s] == 0) out.push_back({p, s});
        }
    }
    return out;
}

inline std::vector<SlotRef> eligible_positions(const PredictionErrorMap& map) {
    return eligible_positions(std::span<const PredictionErrorMap>(&map, 1));
}

/// Slots of a stego map that carried payload: errors 0 or 1 (bin 1 is empty after shifting).
inline std::vector<SlotRef> carrier_positions(std::span<const PredictionErrorMap> maps) {
    std::vector<SlotRef> out;
    for (std::size_t p = 0; p < maps.size(); ++p) {
        for (std::size_t s = 0; s < maps[p].errors.size(); ++s) {
            const int e = maps[p].errors[s];
            if (e == 0 || e == 1) out.push_back({p, s});
        }
    }
    return out;
}

inline std::size_t capacity(const PredictionErrorMap& map, Mode mode) {
    return capacity_from_eligible(eligible_positions(map).size(), mode);
}

inline PositionPlan sequential_plan(std::vector<SlotRef> eligible, std::size_t bits) {
    if (bits > eligible.size()) throw CapacityError(bits, eligible.size());
    PositionPlan plan{std::move(eligible), {}, 1};
    plan.selected.resize(bits);
    for (std::size_t i = 0; i < bits; ++i) plan.selected[i] = i;
    return plan;
}

/// One selected position per disjoint window of five, chosen by the key's chaotic sequence.
inline PositionPlan cdjb_plan(std::vector<SlotRef> eligible, const chaos::RealKey& key, std::size_t bits) {
    if (bits * chaos::kJumpStride > eligible.size()) throw CapacityError(bits * chaos::kJumpStride, eligible.size());
    PositionPlan plan{std::move(eligible), {}, chaos::kJumpStride};
    plan.selected = chaos::jump_positions(key, bits);
    for (auto& p : plan.selected) --p;  // 1-based -> 0-based
    return plan;
}

/// Position strategy: sequential (no key) or chaos-keyed jumps.
struct Strategy {
    Mode mode = Mode::sequential;
    std::optional<chaos::RealKey> key;

    static Strategy sequential() { return {Mode::sequential, std::nullopt}; }
    static Strategy keyed(const chaos::RealKey& k) { return {Mode::cdjb, k}; }

    PositionPlan plan(std::vector<SlotRef> eligible, std::size_t bits) const {
        if (mode == Mode::sequential) return sequential_plan(std::move(eligible), bits);
        if (!key) throw InvalidKey("chaos-keyed embedding needs a real key");
        return cdjb_plan(std::move(eligible), *key, bits);
    }
};

// --- histogram shifting and embedding --------------------------------------

/// Right shift of the bins (0, a): e -> e + 1 for 0 < e < a.
inline PredictionErrorMap shift_histogram(PredictionErrorMap map) {
    if (!map.zero_bin) throw CapacityError("no zero-frequency bin right of the peak; image is not embeddable");
    const int a = *map.zero_bin;
    // Single pass; same result as the cascading right-to-left bin moves.
    for (auto& e : map.errors) {
        if (e > 0 && e < a) ++e;
    }
    map.refresh_histogram();
    map.shift_bound = a;
    return map;
}

/// Inverse shift for a map whose payload has been extracted: e' in [2, a] -> e' - 1, left to right.
inline PredictionErrorMap unshift_histogram(PredictionErrorMap map, int a) {
    for (auto& e : map.errors) {
        if (e >= 2 && e <= a) --e;
    }
    map.shift_bound.reset();
    map.refresh_histogram();
    return map;
}

inline PredictionErrorMap unshift_histogram(PredictionErrorMap map) {
    if (!map.shift_bound) throw DomainError("map carries no shift bound");
    const int a = *map.shift_bound;
    return unshift_histogram(std::move(map), a);
}

inline void embed_into(std::span<PredictionErrorMap> maps, const BitPayload& payload, const PositionPlan& plan) {
    if (payload.size() > plan.selected.size()) {
        throw CapacityError(payload.size() * plan.window_size, plan.eligible.size());
    }
    for (std::size_t i = 0; i < payload.size(); ++i) {
        const SlotRef ref = plan.eligible.at(plan.selected[i]);
        int& e = maps[ref.plane].errors.at(ref.slot);
        if (e != 0) throw DomainError("selected position does not hold a zero error");
        e += payload[i];
    }
    for (auto& m : maps) m.refresh_histogram();
}

/// e -> e + m at each selected zero-error position.
inline PredictionErrorMap embed(PredictionErrorMap map, const BitPayload& payload, const PositionPlan& plan) {
    embed_into(std::span<PredictionErrorMap>(&map, 1), payload, plan);
    return map;
}

/// Reads one bit per selected position (1 iff e' == 1) and resets those positions to 0.
inline BitPayload extract_from(std::span<PredictionErrorMap> maps, const PositionPlan& plan) {
    BitPayload bits;
    for (std::size_t idx : plan.selected) {
        const SlotRef ref = plan.eligible.at(idx);
        int& e = maps[ref.plane].errors.at(ref.slot);
        if (e != 0 && e != 1) throw MalformedStego("selected position holds error " + std::to_string(e));
        bits.push_back(e == 1);
        e = 0;
    }
    for (auto& m : maps) m.refresh_histogram();
    return bits;
}

inline std::pair<BitPayload, PredictionErrorMap> extract(PredictionErrorMap map, const PositionPlan& plan) {
    auto bits = extract_from(std::span<PredictionErrorMap>(&map, 1), plan);
    return {std::move(bits), std::move(map)};
}

// --- overflow prevention ---------------------------------------------------

struct LocationMap {
    std::vector<std::size_t> saturated;  // sorted linear pixel indices

    BitPayload encode() const {
        BitPayload out;
        append_gamma(out, saturated.size() + 1);
        std::size_t prev = 0;
        for (std::size_t i = 0; i < saturated.size(); ++i) {
            const std::size_t gap = i == 0 ? saturated[0] : saturated[i] - prev - 1;
            append_gamma(out, gap + 1);
            prev = saturated[i];
        }
        return out;
    }

    static LocationMap decode(BitReader& in, std::size_t pixel_count) {
        const std::uint64_t count = read_gamma(in) - 1;
        if (count > pixel_count) throw MalformedStego("location map lists more pixels than the image has");
        LocationMap map;
        map.saturated.reserve(count);
        std::uint64_t next = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            const std::uint64_t idx = next + read_gamma(in) - 1;
            if (idx >= pixel_count) throw MalformedStego("location map index outside the image");
            map.saturated.push_back(static_cast<std::size_t>(idx));
            next = idx + 1;
        }
        return map;
    }

    friend bool operator==(const LocationMap&, const LocationMap&) = default;
};

/// Lowers every non-center block pixel equal to 255 to 254 so a +1 shift cannot overflow.
inline std::pair<PixelGrid, LocationMap> flatten_saturated(PixelGrid grid) {
    LocationMap loc;
    if (grid.width() < kBlockSide || grid.height() < kBlockSide) return {std::move(grid), loc};
    const auto part = partition(grid);
    auto px = grid.pixels();
    for (std::size_t slot = 0; slot < part.block_count() * kPredictedPerBlock; ++slot) {
        const std::size_t idx = error_slot_pixel(part, slot);
        if (px[idx] == 255) loc.saturated.push_back(idx);
    }
    std::sort(loc.saturated.begin(), loc.saturated.end());
    for (auto idx : loc.saturated) px[idx] = 254;
    return {std::move(grid), std::move(loc)};
}

inline PixelGrid unflatten(PixelGrid grid, const LocationMap& loc) {
    auto px = grid.pixels();
    for (auto idx : loc.saturated) {
        if (idx >= px.size() || px[idx] != 254) throw MalformedStego("location map points at a pixel that is not 254");
        px[idx] = 255;
    }
    return grid;
}

// --- complete reversible message channel -----------------------------------

struct EmbedReport {
    std::size_t stream_bits = 0;          // header + length prefix + message
    std::size_t required_positions = 0;   // stream_bits * window
    std::size_t eligible_positions = 0;
    std::size_t flattened_pixels = 0;
    std::vector<int> zero_bins;
};

inline constexpr unsigned kZeroBinBits = 8;
inline constexpr unsigned kLengthPrefixBits = 32;

/// Embeds `message` into the planes. Stream: per plane [zero bin (8) | location map], then
/// [byte length (32) | message]. Returns the stego planes.
inline Planes embed_message(const Planes& cover, std::span<const std::uint8_t> message, const Strategy& strategy,
                            EmbedReport* report = nullptr) {
    if (cover.empty()) throw DimensionError("no image planes to embed into");
    if (message.size() > 0xFFFFFFFFu) throw CapacityError("message longer than the 32-bit length prefix allows");
    std::vector<PixelGrid> flat;
    std::vector<PredictionErrorMap> maps;
    BitPayload stream;
    EmbedReport rep;
    const auto part = partition(cover[0]);
    for (const auto& plane : cover) {
        if (plane.width() != cover[0].width() || plane.height() != cover[0].height()) {
            throw DimensionError("image planes differ in size");
        }
        auto [flattened, loc] = flatten_saturated(plane);
        rep.flattened_pixels += loc.saturated.size();
        auto map = shift_histogram(predict_errors(flattened, part));
        rep.zero_bins.push_back(*map.shift_bound);
        stream.append_uint(static_cast<std::uint64_t>(*map.shift_bound), kZeroBinBits);
        stream.append(loc.encode());
        flat.push_back(std::move(flattened));
        maps.push_back(std::move(map));
    }
    stream.append_uint(message.size(), kLengthPrefixBits);
    stream.append(BitPayload::from_bytes(message));

    auto eligible = eligible_positions(maps);
    rep.eligible_positions = eligible.size();
    rep.stream_bits = stream.size();
    rep.required_positions = stream.size() * window_size(strategy.mode);
    const auto plan = strategy.plan(std::move(eligible), stream.size());
    embed_into(maps, stream, plan);

    Planes stego;
    for (std::size_t p = 0; p < maps.size(); ++p) stego.push_back(reconstruct_pixels(maps[p], part, flat[p]));
    if (report) *report = std::move(rep);
    return stego;
}

struct ExtractedMessage {
    std::vector<std::uint8_t> message;
    Planes cover;
};

/// Inverse of embed_message. Any structural inconsistency raises MalformedStego.
inline ExtractedMessage extract_message(const Planes& stego, const Strategy& strategy) {
    if (stego.empty()) throw DimensionError("no image planes to extract from");
    const auto part = partition(stego[0]);
    std::vector<PredictionErrorMap> maps;
    for (const auto& plane : stego) {
        if (plane.width() != stego[0].width() || plane.height() != stego[0].height()) {
            throw DimensionError("image planes differ in size");
        }
        maps.push_back(predict_errors(plane, part));
    }
    auto carriers = carrier_positions(maps);
    const std::size_t cap = capacity_from_eligible(carriers.size(), strategy.mode);
    const auto plan = strategy.plan(std::move(carriers), cap);
    const BitPayload stream = extract_from(maps, plan);

    BitReader in(stream);
    std::vector<int> zero_bins;
    std::vector<LocationMap> locs;
    for (std::size_t p = 0; p < stego.size(); ++p) {
        const int a = static_cast<int>(in.read_uint(kZeroBinBits));
        if (a == 0) throw MalformedStego("zero bin of 0 is not possible");
        zero_bins.push_back(a);
        locs.push_back(LocationMap::decode(in, stego[p].size()));
    }
    const std::uint64_t length = in.read_uint(kLengthPrefixBits);
    if (length * 8 > in.remaining()) throw MalformedStego("length prefix exceeds the embedded stream");
    ExtractedMessage out;
    out.message.reserve(static_cast<std::size_t>(length));
    for (std::uint64_t i = 0; i < length; ++i) out.message.push_back(static_cast<std::uint8_t>(in.read_uint(8)));
    while (in.remaining() > 0) {
        if (in.read_bit()) throw MalformedStego("non-zero bits after the end of the message");
    }

    for (std::size_t p = 0; p < stego.size(); ++p) {
        auto restored = unshift_histogram(std::move(maps[p]), zero_bins[p]);
        if (restored.zero_bin != zero_bins[p]) throw MalformedStego("recovered histogram contradicts its zero bin");
        try {
            out.cover.push_back(unflatten(reconstruct_pixels(restored, part, stego[p]), locs[p]));
        } catch (const RangeError& e) {
            throw MalformedStego(e.what());
        }
    }
    return out;
}

}  // namespace stegano::rdh
