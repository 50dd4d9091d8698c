// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "stegano/backend.hpp"
#include "stegano/chaos.hpp"
#include "stegano/ddim.hpp"
#include "stegano/error.hpp"
#include "stegano/image.hpp"
#include "stegano/integrity.hpp"
#include "stegano/rdh.hpp"

namespace stegano::pipeline {

inline constexpr std::string_view kDefaultBackend = "toy:flow";

/// "toy:flow" | "toy:gaussian" | "toy:zero" | "toy:linear" | "external:<shell command>"
inline std::unique_ptr<ddim::NoiseEstimator> make_estimator(std::string_view selector,
                                                            const ddim::DiffusionSchedule& sched) {
    if (selector == "toy:flow") return std::make_unique<ddim::FlowEstimator>(sched);
    if (selector == "toy:gaussian") return std::make_unique<ddim::GaussianEstimator>(sched, 0.5);
    if (selector == "toy:zero") return std::make_unique<ddim::ZeroEstimator>();
    if (selector == "toy:linear") return std::make_unique<ddim::LinearEstimator>(0.01);
    if (selector.starts_with("external:")) {
        const auto command = selector.substr(9);
        if (command.empty()) throw BackendError("external backend needs a command");
        return std::make_unique<backend::ExternalEstimator>(std::string(command));
    }
    throw BackendError("unknown backend selector '" + std::string(selector) + "'");
}

struct HideRequest {
    Planes secret;
    std::string k_pri;
    std::string k_pub;
    std::optional<chaos::RealKey> real_key;  // present: real-key scheme; absent: without-key scheme
    ddim::ScheduleConfig schedule;
    std::string backend = std::string(kDefaultBackend);
};

struct HideResult {
    Planes stego;
    Planes container;
    std::size_t container_clamped = 0;
    rdh::EmbedReport embed;
    double generation_ms = 0.0;
    double embedding_ms = 0.0;
};

struct RevealOptions {
    ddim::ScheduleConfig schedule;
    std::string backend = std::string(kDefaultBackend);
    bool strict = true;  // stop before the DDIM stage when the digest does not match
};

struct RevealResult {
    std::optional<Planes> secret;
    std::optional<Planes> container;
    std::string k_pri;
    std::string k_pub;
    integrity::Verdict verdict = integrity::Verdict::malformed;
    std::string detail;
    std::size_t secret_clamped = 0;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// ODESolve(x; eps, from_condition, 0, T) followed by ODESolve(.; eps, to_condition, T, 0).
inline ddim::Quantized regenerate(const Planes& image, const ddim::NoiseEstimator& est, std::string_view from_condition,
                                  std::string_view to_condition, const ddim::DiffusionSchedule& sched) {
    const auto noise = ddim::ode_invert(ddim::dequantize(image), est, from_condition, sched);
    return ddim::quantize(ddim::ode_reverse(noise, est, to_condition, sched));
}

inline rdh::Strategy strategy_for(const std::optional<chaos::RealKey>& key) {
    return key ? rdh::Strategy::keyed(*key) : rdh::Strategy::sequential();
}

}  // namespace detail

/// Sender: secret -> noise (K_pri) -> container (K_pub) -> stego (auxiliary payload embedded).
inline HideResult hide(const HideRequest& req, const ddim::NoiseEstimator& est) {
    if (req.secret.empty()) throw DimensionError("secret image has no planes");
    if (req.secret[0].width() < kBlockSide || req.secret[0].height() < kBlockSide) {
        throw DimensionError("secret image sides must be at least 3");
    }
    integrity::require_no_separator(req.k_pri, "K_pri");
    integrity::require_no_separator(req.k_pub, "K_pub");
    const auto sched = ddim::build_schedule(req.schedule);

    HideResult out;
    auto start = detail::Clock::now();
    auto container = detail::regenerate(req.secret, est, req.k_pri, req.k_pub, sched);
    out.generation_ms = detail::elapsed_ms(start);
    out.container = std::move(container.planes);
    out.container_clamped = container.clamped;

    start = detail::Clock::now();
    out.stego = integrity::seal(out.container, req.k_pri, req.k_pub, detail::strategy_for(req.real_key), &out.embed);
    out.embedding_ms = detail::elapsed_ms(start);
    return out;
}

inline HideResult hide(const HideRequest& req) {
    const auto sched = ddim::build_schedule(req.schedule);
    const auto est = make_estimator(req.backend, sched);
    return hide(req, *est);
}

/// Receiver: stego -> container + conditions (verified) -> noise (K_pub) -> secret (K_pri).
inline RevealResult reveal(const Planes& stego, const std::optional<chaos::RealKey>& key, const RevealOptions& opts,
                           const ddim::NoiseEstimator& est) {
    RevealResult out;
    auto check = integrity::verify(stego, key);
    out.verdict = check.verdict;
    out.detail = check.detail;
    if (check.verdict == integrity::Verdict::malformed) return out;
    out.k_pri = check.payload->k_pri;
    out.k_pub = check.payload->k_pub;
    out.container = std::move(check.container);
    if (check.verdict != integrity::Verdict::authentic && opts.strict) return out;

    const auto sched = ddim::build_schedule(opts.schedule);
    auto secret = detail::regenerate(*out.container, est, out.k_pub, out.k_pri, sched);
    out.secret = std::move(secret.planes);
    out.secret_clamped = secret.clamped;
    return out;
}

inline RevealResult reveal(const Planes& stego, const std::optional<chaos::RealKey>& key,
                           const RevealOptions& opts = {}) {
    const auto sched = ddim::build_schedule(opts.schedule);
    const auto est = make_estimator(opts.backend, sched);
    return reveal(stego, key, opts, *est);
}

struct AttackReport {
    integrity::Verdict verdict = integrity::Verdict::malformed;
    bool detected = true;
    std::string detail;
};

/// Delivers `replacement` in place of `stego` and records whether the receiver notices.
/// Detection only needs the integrity stage, so no DDIM work is done.
inline AttackReport substitution_attack(const Planes& stego, const Planes& replacement,
                                        const std::optional<chaos::RealKey>& key) {
    if (stego.size() != replacement.size() || stego.empty() || stego[0].width() != replacement[0].width() ||
        stego[0].height() != replacement[0].height()) {
        throw DimensionError("replacement must have the stego object's format and dimensions");
    }
    const auto check = integrity::verify(replacement, key);
    return {check.verdict, check.verdict != integrity::Verdict::authentic, check.detail};
}

/// Peak signal-to-noise ratio in dB over all planes; +inf for identical images.
inline double psnr(const Planes& a, const Planes& b) {
    if (a.size() != b.size()) throw DimensionError("PSNR needs images with equal plane counts");
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < a.size(); ++p) {
        if (a[p].width() != b[p].width() || a[p].height() != b[p].height()) {
            throw DimensionError("PSNR needs equally sized images");
        }
        const auto x = a[p].pixels();
        const auto y = b[p].pixels();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
            sq += d * d;
        }
        n += x.size();
    }
    if (sq == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / (sq / static_cast<double>(n)));
}

// --- key-exchange accounting ------------------------------------------------

/// Reference pseudo-key total for transmitting 10 secret images with a
/// prompt-as-key scheme; used as the comparison baseline.
inline constexpr std::uint64_t kPseudoKeyBaselineBits = 3568;
inline constexpr std::size_t kPseudoKeyBaselineImages = 10;

/// Counts key-exchange bits across hide sessions. A real key is negotiated once (102 bits)
/// however many sessions reuse it. For comparison the ledger also tallies what a
/// prompt-as-key scheme would have exchanged: every condition byte, every session.
class SessionLedger {
public:
    void record_session(std::string_view k_pri, std::string_view k_pub, const std::optional<chaos::RealKey>& key) {
        ++sessions_;
        if (key) {
            ++real_key_sessions_;
            negotiated_.insert(chaos::encode_key(*key).to_hex());
        }
        pseudo_key_bits_ += 8 * (k_pri.size() + k_pub.size());
    }

    std::uint64_t sessions() const { return sessions_; }
    std::uint64_t real_key_sessions() const { return real_key_sessions_; }
    std::uint64_t negotiated_keys() const { return negotiated_.size(); }
    std::uint64_t key_exchange_bits() const { return negotiated_.size() * chaos::kKeyBits; }
    std::uint64_t pseudo_key_equivalent_bits() const { return pseudo_key_bits_; }

    const std::set<std::string>& negotiated_codewords() const { return negotiated_; }

    void restore(std::uint64_t sessions, std::uint64_t real_key_sessions, std::uint64_t pseudo_bits,
                 std::set<std::string> codewords) {
        sessions_ = sessions;
        real_key_sessions_ = real_key_sessions;
        pseudo_key_bits_ = pseudo_bits;
        negotiated_ = std::move(codewords);
    }

private:
    std::uint64_t sessions_ = 0;
    std::uint64_t real_key_sessions_ = 0;
    std::uint64_t pseudo_key_bits_ = 0;
    std::set<std::string> negotiated_;
};

}  // namespace stegano::pipeline
