// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stegano/ddim.hpp"
#include "stegano/error.hpp"

// EPS1 estimator protocol. Every frame on the wire is a u32 little-endian byte length
// followed by that many bytes.
//
//   request  = "EPS1" | u32 step | u32 cond_len | cond bytes | u32 ndims | u32 dims[ndims] | f32 data
//   response = f32 data (4 * product(dims) bytes), or "ERR1" | UTF-8 message
namespace stegano::backend {

static_assert(std::endian::native == std::endian::little, "EPS1 codec assumes a little-endian host");

inline constexpr std::array<std::uint8_t, 4> kMagic{'E', 'P', 'S', '1'};
inline constexpr std::array<std::uint8_t, 4> kErrorMagic{'E', 'R', 'R', '1'};
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

struct Request {
    std::uint32_t step = 0;
    std::string condition;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    friend bool operator==(const Request&, const Request&) = default;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ProtocolError("EPS1 frame truncated");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

inline std::uint64_t element_count(const std::vector<std::uint32_t>& dims) {
    std::uint64_t n = 1;
    for (auto d : dims) {
        n *= d;
        if (n > kMaxFrameBytes) throw ProtocolError("EPS1 tensor too large");
    }
    return n;
}

}  // namespace detail

/// Frame body of a request (without the outer length prefix).
inline std::vector<std::uint8_t> encode_request(const Request& r) {
    if (detail::element_count(r.dims) != r.data.size()) throw ProtocolError("EPS1 request dims do not match data");
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    detail::put_u32(out, r.step);
    detail::put_u32(out, static_cast<std::uint32_t>(r.condition.size()));
    out.insert(out.end(), r.condition.begin(), r.condition.end());
    detail::put_u32(out, static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) detail::put_u32(out, d);
    for (float f : r.data) detail::put_f32(out, f);
    return out;
}

inline Request decode_request(std::span<const std::uint8_t> body) {
    detail::Cursor c(body);
    const auto magic = c.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw ProtocolError("EPS1 magic missing");
    Request r;
    r.step = c.u32();
    const auto cond_len = c.u32();
    const auto cond = c.take(cond_len);
    r.condition.assign(cond.begin(), cond.end());
    const auto ndims = c.u32();
    if (ndims > 8) throw ProtocolError("EPS1 request has too many dims");
    for (std::uint32_t i = 0; i < ndims; ++i) r.dims.push_back(c.u32());
    const auto n = detail::element_count(r.dims);
    if (c.remaining() != n * 4) throw ProtocolError("EPS1 request data length does not match dims");
    r.data.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) r.data.push_back(c.f32());
    return r;
}

inline std::vector<std::uint8_t> encode_response(std::span<const float> data) {
    std::vector<std::uint8_t> out;
    out.reserve(data.size() * 4);
    for (float f : data) detail::put_f32(out, f);
    return out;
}

inline std::vector<std::uint8_t> encode_error(std::string_view message) {
    std::vector<std::uint8_t> out(kErrorMagic.begin(), kErrorMagic.end());
    out.insert(out.end(), message.begin(), message.end());
    return out;
}

/// Decodes a response body for a request with `expected` elements.
inline std::vector<float> decode_response(std::span<const std::uint8_t> body, std::size_t expected) {
    if (body.size() == expected * 4) {
        detail::Cursor c(body);
        std::vector<float> out(expected);
        for (auto& f : out) f = c.f32();
        return out;
    }
    if (body.size() >= 4 && std::equal(kErrorMagic.begin(), kErrorMagic.end(), body.begin())) {
        throw BackendError("backend error: " + std::string(body.begin() + 4, body.end()));
    }
    throw ProtocolError("EPS1 response has " + std::to_string(body.size()) + " bytes, expected " +
                        std::to_string(expected * 4));
}

inline std::vector<std::uint8_t> frame(std::span<const std::uint8_t> body) {
    std::vector<std::uint8_t> out;
    out.reserve(body.size() + 4);
    detail::put_u32(out, static_cast<std::uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

inline Request make_request(const ddim::LatentState& x, int step, std::string_view condition) {
    Request r;
    r.step = static_cast<std::uint32_t>(step);
    r.condition = std::string(condition);
    r.dims = {static_cast<std::uint32_t>(x.shape.channels), static_cast<std::uint32_t>(x.shape.height),
              static_cast<std::uint32_t>(x.shape.width)};
    r.data.assign(x.values.begin(), x.values.end());
    return r;
}

// --- blocking fd helpers ----------------------------------------------------

namespace detail {

inline void write_all(int fd, std::span<const std::uint8_t> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("write to backend failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

/// Returns false on clean EOF before any byte was read.
inline bool read_exact(int fd, std::uint8_t* dst, std::size_t len) {
    std::size_t done = 0;
    while (done < len) {
        const auto n = ::read(fd, dst + done, len - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("read from backend failed: ") + std::strerror(errno));
        }
        if (n == 0) {
            if (done == 0) return false;
            throw ProtocolError("EPS1 frame truncated by EOF");
        }
        done += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace detail

/// Reads one length-prefixed frame. When `eof` is given, a clean EOF sets it and returns an empty body.
inline std::vector<std::uint8_t> read_frame(int fd, bool* eof = nullptr) {
    std::array<std::uint8_t, 4> len_bytes{};
    if (!detail::read_exact(fd, len_bytes.data(), 4)) {
        if (eof) {
            *eof = true;
            return {};
        }
        throw BackendError("backend closed its output");
    }
    detail::Cursor c(len_bytes);
    const auto len = c.u32();
    if (len > kMaxFrameBytes) throw ProtocolError("EPS1 frame length too large");
    std::vector<std::uint8_t> body(len);
    if (len > 0 && !detail::read_exact(fd, body.data(), len)) throw ProtocolError("EPS1 frame truncated by EOF");
    if (eof) *eof = false;
    return body;
}

inline void write_frame(int fd, std::span<const std::uint8_t> body) { detail::write_all(fd, frame(body)); }

/// A child process speaking EPS1 on its stdin/stdout, started with /bin/sh -c.
class ExternalEstimator final : public ddim::NoiseEstimator {
public:
    explicit ExternalEstimator(const std::string& command) {
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) throw BackendError("pipe() failed");
        const pid_t pid = ::fork();
        if (pid < 0) throw BackendError("fork() failed");
        if (pid == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        pid_ = pid;
        to_child_ = to_child[1];
        from_child_ = from_child[0];
        ::signal(SIGPIPE, SIG_IGN);
    }

    ExternalEstimator(const ExternalEstimator&) = delete;
    ExternalEstimator& operator=(const ExternalEstimator&) = delete;

    ~ExternalEstimator() override {
        if (to_child_ >= 0) ::close(to_child_);
        if (from_child_ >= 0) ::close(from_child_);
        if (pid_ > 0) {
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
    }

    std::vector<double> evaluate(const ddim::LatentState& x, int step, std::string_view condition) const override {
        const auto body = encode_request(make_request(x, step, condition));
        std::lock_guard lock(mutex_);
        write_frame(to_child_, body);
        const auto reply = read_frame(from_child_);
        const auto floats = decode_response(reply, x.values.size());
        return {floats.begin(), floats.end()};
    }

private:
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    mutable std::mutex mutex_;
};

}  // namespace stegano::backend
