// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "stegano/backend.hpp"
#include "stegano/ddim.hpp"

using namespace stegano;
using namespace stegano::backend;

namespace {

std::vector<std::uint8_t> golden(const std::string& name) {
    std::ifstream in(std::string(STEGANO_TEST_DATA) + "/eps1/" + name, std::ios::binary);
    if (!in) throw std::runtime_error("missing golden file " + name);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::span<const std::uint8_t> body_of(const std::vector<std::uint8_t>& framed) {
    return std::span<const std::uint8_t>(framed).subspan(4);
}

Request small_request() { return Request{20, "cat", {1, 2, 2}, {0.5f, -1.0f, 0.25f, 2.0f}}; }

std::string echo_command() { return std::string("exec ") + STEGANO_ECHO_SERVER; }

}  // namespace

TEST(Eps1Codec, RequestMatchesGoldenBytes) {
    EXPECT_EQ(frame(encode_request(small_request())), golden("request_small.bin"));
    EXPECT_EQ(decode_request(body_of(golden("request_small.bin"))), small_request());
}

TEST(Eps1Codec, ResponseMatchesGoldenBytes) {
    const std::vector<float> zeros(4, 0.0f);
    EXPECT_EQ(frame(encode_response(zeros)), golden("response_small_zero.bin"));
    EXPECT_EQ(decode_response(body_of(golden("response_small_zero.bin")), 4), zeros);
}

TEST(Eps1Codec, RejectsMalformedRequests) {
    EXPECT_THROW(decode_request(body_of(golden("request_bad_magic.bin"))), ProtocolError);
    EXPECT_THROW(decode_request(body_of(golden("request_short_data.bin"))), ProtocolError);
    Request bad = small_request();
    bad.data.pop_back();
    EXPECT_THROW(encode_request(bad), ProtocolError);
}

TEST(Eps1Codec, ResponseErrors) {
    const auto err = encode_error("model exploded");
    try {
        decode_response(err, 4);
        FAIL();
    } catch (const ProtocolError&) {
        FAIL() << "error frames are backend errors, not protocol errors";
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("model exploded"), std::string::npos);
    }
    const std::vector<std::uint8_t> wrong(12, 0);
    EXPECT_THROW(decode_response(wrong, 4), ProtocolError);
}

TEST(Eps1Server, EchoZeroTranscript) {
    ExternalEstimator est(echo_command());
    ddim::LatentState x{{1, 64, 64}, std::vector<double>(64 * 64, 0.3), 0};
    const auto a = est.evaluate(x, 500, "a prompt");
    ASSERT_EQ(a.size(), 64u * 64u);
    for (double v : a) ASSERT_EQ(v, 0.0);
    EXPECT_EQ(est.evaluate(x, 500, "a prompt"), a);
    ddim::LatentState rgb{{3, 5, 7}, std::vector<double>(105, -0.5), 0};
    EXPECT_EQ(est.evaluate(rgb, 0, "").size(), 105u);
}

TEST(Eps1Server, DrivesSolver) {
    const auto sched = ddim::build_schedule(100, 1e-4, 0.02, 10);
    ExternalEstimator remote(echo_command());
    ddim::LatentState x{{1, 4, 4}, std::vector<double>(16, 0.25), 0};
    const auto via_remote = ddim::ode_invert(x, remote, "c", sched);
    const auto via_local = ddim::ode_invert(x, ddim::ZeroEstimator{}, "c", sched);
    EXPECT_EQ(via_remote.values, via_local.values);
}

TEST(Eps1Server, FramesAreRawPipeBytes) {
    int to_child[2];
    int from_child[2];
    ASSERT_EQ(::pipe(to_child), 0);
    ASSERT_EQ(::pipe(from_child), 0);
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::execl(STEGANO_ECHO_SERVER, STEGANO_ECHO_SERVER, static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    const auto good = golden("request_small.bin");
    const auto bad = golden("request_bad_magic.bin");
    detail::write_all(to_child[1], good);
    detail::write_all(to_child[1], bad);
    detail::write_all(to_child[1], good);
    ::close(to_child[1]);
    EXPECT_EQ(frame(read_frame(from_child[0])), golden("response_small_zero.bin"));
    const auto err = read_frame(from_child[0]);
    ASSERT_GE(err.size(), 4u);
    EXPECT_TRUE(std::equal(kErrorMagic.begin(), kErrorMagic.end(), err.begin()));
    EXPECT_EQ(frame(read_frame(from_child[0])), golden("response_small_zero.bin"));
    bool eof = false;
    read_frame(from_child[0], &eof);
    EXPECT_TRUE(eof);
    ::close(from_child[0]);
    int status = 0;
    ::waitpid(pid, &status, 0);
    EXPECT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0);
}

TEST(Eps1Server, MissingCommandSurfacesAsBackendError) {
    ExternalEstimator est("exit 0");
    ddim::LatentState x{{1, 2, 2}, std::vector<double>(4, 0.0), 0};
    EXPECT_THROW(est.evaluate(x, 1, "c"), BackendError);
}
