// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stegano/error.hpp"
#include "stegano/image.hpp"
#include "stegano/sm3.hpp"

namespace stegano::ddim {

/// Linear-beta noise schedule: alphas[t] = prod_{s<=t} (1 - beta_s), alphas[0] = 1.
struct DiffusionSchedule {
    int total_steps = 0;
    std::vector<double> alphas;  // t = 0..T
    std::vector<int> grid;       // sub-step grid t_0 = 0 < ... < t_S = T

    int sub_steps() const noexcept { return static_cast<int>(grid.size()) - 1; }
    double alpha(int t) const { return alphas.at(static_cast<std::size_t>(t)); }

    /// sqrt((1 - abar_t) / abar_t), the time variable of the probability-flow ODE.
    double sigma(int t) const {
        const double a = alpha(t);
        return std::sqrt((1.0 - a) / a);
    }
};

struct ScheduleConfig {
    int total_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int sub_steps = 50;
};

inline DiffusionSchedule build_schedule(int total_steps, double beta_start, double beta_end, int sub_steps) {
    if (total_steps < 1) throw DomainError("schedule needs at least one step");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw DomainError("betas must satisfy 0 < beta_start <= beta_end < 1");
    }
    if (sub_steps < 1 || sub_steps > total_steps) throw DomainError("sub-steps must lie in [1, T]");
    DiffusionSchedule s;
    s.total_steps = total_steps;
    s.alphas.resize(static_cast<std::size_t>(total_steps) + 1);
    s.alphas[0] = 1.0;
    for (int t = 1; t <= total_steps; ++t) {
        const double frac = total_steps == 1 ? 0.0 : static_cast<double>(t - 1) / (total_steps - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        s.alphas[static_cast<std::size_t>(t)] = s.alphas[static_cast<std::size_t>(t) - 1] * (1.0 - beta);
    }
    s.grid.resize(static_cast<std::size_t>(sub_steps) + 1);
    for (int i = 0; i <= sub_steps; ++i) {
        s.grid[static_cast<std::size_t>(i)] =
            static_cast<int>(static_cast<long long>(i) * total_steps / sub_steps);
    }
    return s;
}

inline DiffusionSchedule build_schedule(const ScheduleConfig& c) {
    return build_schedule(c.total_steps, c.beta_start, c.beta_end, c.sub_steps);
}

struct Shape {
    std::size_t channels = 1;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t count() const noexcept { return channels * height * width; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Real-valued image-shaped tensor at diffusion step `step`.
struct LatentState {
    Shape shape;
    std::vector<double> values;  // channel-major, then row-major
    int step = 0;
};

/// eps_theta(x_t, t, condition). Implementations must be callable concurrently.
class NoiseEstimator {
public:
    virtual ~NoiseEstimator() = default;
    virtual std::vector<double> evaluate(const LatentState& x, int step, std::string_view condition) const = 0;
};

namespace detail {

inline void check_finite(const LatentState& s) {
    for (double v : s.values) {
        if (!std::isfinite(v)) throw NonFiniteState("latent state became non-finite at step " + std::to_string(s.step));
    }
}

inline std::vector<double> checked_eval(const NoiseEstimator& est, const LatentState& x, int t,
                                        std::string_view condition) {
    auto eps = est.evaluate(x, t, condition);
    if (eps.size() != x.values.size()) throw BackendError("noise estimate has the wrong number of entries");
    return eps;
}

/// x_to / sqrt(abar_to) = x_from / sqrt(abar_from) + (sigma_to - sigma_from) * eps(x_from, t_eval)
inline void euler_step(LatentState& x, const DiffusionSchedule& s, int from, int to, const std::vector<double>& eps) {
    const double inv_from = 1.0 / std::sqrt(s.alpha(from));
    const double sqrt_to = std::sqrt(s.alpha(to));
    const double dsigma = s.sigma(to) - s.sigma(from);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        x.values[i] = (x.values[i] * inv_from + dsigma * eps[i]) * sqrt_to;
    }
    x.step = to;
    check_finite(x);
}

}  // namespace detail

/// Deterministic inversion: step 0 -> T over the sub-step grid, eps evaluated at the current point.
inline LatentState ode_invert(LatentState x, const NoiseEstimator& est, std::string_view condition,
                              const DiffusionSchedule& sched) {
    if (x.step != 0) throw DomainError("inversion starts from step 0");
    if (x.values.size() != x.shape.count()) throw DimensionError("latent values do not match its shape");
    detail::check_finite(x);
    for (int i = 0; i < sched.sub_steps(); ++i) {
        const int t0 = sched.grid[static_cast<std::size_t>(i)];
        const int t1 = sched.grid[static_cast<std::size_t>(i) + 1];
        const auto eps = detail::checked_eval(est, x, t0, condition);
        detail::euler_step(x, sched, t0, t1, eps);
    }
    return x;
}

/// Deterministic reverse process (sigma_t = 0): step T -> 0.
inline LatentState ode_reverse(LatentState x, const NoiseEstimator& est, std::string_view condition,
                               const DiffusionSchedule& sched) {
    if (x.step != sched.total_steps) throw DomainError("reverse process starts from step T");
    if (x.values.size() != x.shape.count()) throw DimensionError("latent values do not match its shape");
    detail::check_finite(x);
    for (int i = sched.sub_steps(); i > 0; --i) {
        const int t1 = sched.grid[static_cast<std::size_t>(i)];
        const int t0 = sched.grid[static_cast<std::size_t>(i) - 1];
        const auto eps = detail::checked_eval(est, x, t1, condition);
        detail::euler_step(x, sched, t1, t0, eps);
    }
    return x;
}

// --- latent <-> 8-bit boundary ---------------------------------------------

/// [0,255] -> [-1,1]
inline LatentState dequantize(const Planes& planes) {
    if (planes.empty()) throw DimensionError("no planes to dequantize");
    LatentState s;
    s.shape = {planes.size(), planes[0].height(), planes[0].width()};
    s.values.reserve(s.shape.count());
    for (const auto& p : planes) {
        if (p.width() != s.shape.width || p.height() != s.shape.height) throw DimensionError("planes differ in size");
        for (auto v : p.pixels()) s.values.push_back(static_cast<double>(v) / 127.5 - 1.0);
    }
    return s;
}

struct Quantized {
    Planes planes;
    std::size_t clamped = 0;
};

/// [-1,1] -> [0,255], round half to even, out-of-range values clamped and counted.
inline Quantized quantize(const LatentState& s) {
    detail::check_finite(s);
    Quantized q;
    q.planes.assign(s.shape.channels, PixelGrid(s.shape.width, s.shape.height));
    const std::size_t plane = s.shape.height * s.shape.width;
    for (std::size_t c = 0; c < s.shape.channels; ++c) {
        auto px = q.planes[c].pixels();
        for (std::size_t i = 0; i < plane; ++i) {
            double v = std::nearbyint((s.values[c * plane + i] + 1.0) * 127.5);  // FE_TONEAREST: ties to even
            if (v < 0.0 || v > 255.0) {
                ++q.clamped;
                v = v < 0.0 ? 0.0 : 255.0;
            }
            px[i] = static_cast<std::uint8_t>(v);
        }
    }
    return q;
}

// --- toy estimators ---------------------------------------------------------

class ZeroEstimator final : public NoiseEstimator {
public:
    std::vector<double> evaluate(const LatentState& x, int, std::string_view) const override {
        return std::vector<double>(x.values.size(), 0.0);
    }
};

class ConstantEstimator final : public NoiseEstimator {
public:
    explicit ConstantEstimator(double c) : c_(c) {}
    std::vector<double> evaluate(const LatentState& x, int, std::string_view) const override {
        return std::vector<double>(x.values.size(), c_);
    }

private:
    double c_;
};

/// eps = k * x
class LinearEstimator final : public NoiseEstimator {
public:
    explicit LinearEstimator(double k) : k_(k) {}
    std::vector<double> evaluate(const LatentState& x, int, std::string_view) const override {
        std::vector<double> out(x.values.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = k_ * x.values[i];
        return out;
    }

private:
    double k_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Uniform in [-sqrt(3), sqrt(3)): zero mean, unit variance.
inline double unit_noise(std::uint64_t seed, std::size_t index) {
    const std::uint64_t bits = splitmix64(seed ^ splitmix64(index)) >> 11;
    const double u = static_cast<double>(bits) * 0x1.0p-53;
    return (2.0 * u - 1.0) * std::numbers::sqrt3;
}

inline constexpr std::size_t kTemplateTile = 12;

/// Condition-dependent template, constant on 12x12 tiles (aligned with the 3x3 block grid)
/// with per-tile levels in [-amplitude, amplitude] drawn from the SM3 digest of the condition.
inline std::vector<double> condition_template(std::string_view condition, const Shape& shape, double amplitude) {
    const Sm3Digest d = sm3(condition);
    std::uint64_t seed = 0;
    for (std::size_t i = 0; i < 8; ++i) seed = seed << 8 | d[i];
    const std::size_t tiles_x = (shape.width + kTemplateTile - 1) / kTemplateTile;
    const std::size_t tiles_y = (shape.height + kTemplateTile - 1) / kTemplateTile;
    std::vector<double> out(shape.count());
    for (std::size_t c = 0; c < shape.channels; ++c) {
        for (std::size_t r = 0; r < shape.height; ++r) {
            for (std::size_t col = 0; col < shape.width; ++col) {
                const std::size_t tile = (c * tiles_y + r / kTemplateTile) * tiles_x + col / kTemplateTile;
                out[(c * shape.height + r) * shape.width + col] =
                    amplitude * unit_noise(seed, tile) / std::numbers::sqrt3;
            }
        }
    }
    return out;
}

}  // namespace detail

/// Exact noise predictor for per-entry Gaussian data N(M_c, s^2), M_c a condition template.
class GaussianEstimator final : public NoiseEstimator {
public:
    GaussianEstimator(DiffusionSchedule schedule, double scale, double amplitude = 0.05)
        : sched_(std::move(schedule)), scale_(scale), amplitude_(amplitude) {}

    std::vector<double> evaluate(const LatentState& x, int step, std::string_view condition) const override {
        const auto mean = detail::condition_template(condition, x.shape, amplitude_);
        const double a = sched_.alpha(step);
        const double denom = a * scale_ * scale_ + 1.0 - a;
        std::vector<double> out(x.values.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = std::sqrt(1.0 - a) * (x.values[i] - std::sqrt(a) * mean[i]) / denom;
        }
        return out;
    }

private:
    DiffusionSchedule sched_;
    double scale_;
    double amplitude_;
};

/// Estimator whose flow lines are straight in (sigma, x / sqrt(abar)):
/// y(sigma) = y0 + sigma * (R + y0 - M_c), with R a fixed unit-variance field and M_c a
/// condition template. Euler steps on it are exact, so invert/reverse round trips only
/// lose floating-point rounding.
class FlowEstimator final : public NoiseEstimator {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x5354'4547'414e'4f31ull;

    explicit FlowEstimator(DiffusionSchedule schedule, double amplitude = 0.03, std::uint64_t seed = kDefaultSeed)
        : sched_(std::move(schedule)), amplitude_(amplitude), seed_(seed) {}

    std::vector<double> evaluate(const LatentState& x, int step, std::string_view condition) const override {
        const auto mean = detail::condition_template(condition, x.shape, amplitude_);
        const double sigma = sched_.sigma(step);
        const double scale = std::sqrt(sched_.alpha(step));
        std::vector<double> out(x.values.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double r = detail::unit_noise(seed_, i);
            const double y = x.values[i] / scale;
            const double y0 = (y - sigma * (r - mean[i])) / (1.0 + sigma);
            out[i] = r + y0 - mean[i];
        }
        return out;
    }

private:
    DiffusionSchedule sched_;
    double amplitude_;
    std::uint64_t seed_;
};

}  // namespace stegano::ddim
