// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "stegano/stegano.hpp"

namespace {

using json = nlohmann::json;
using namespace stegano;

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kTampered = 2,
    kMalformed = 3,
    kCapacity = 4,
};

struct GlobalOptions {
    std::string backend = std::string(pipeline::kDefaultBackend);
    ddim::ScheduleConfig schedule;
    std::string key_text;
    std::string key_file;
    std::string ledger_path;
    std::string report_path;
    bool permissive = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

std::optional<chaos::RealKey> load_key(const GlobalOptions& g) {
    if (!g.key_text.empty() && !g.key_file.empty()) throw InvalidKey("give --key or --key-file, not both");
    if (!g.key_text.empty()) return chaos::parse_key_text(g.key_text);
    if (!g.key_file.empty()) return chaos::parse_key_text(slurp(g.key_file));
    return std::nullopt;
}

const char* scheme_name(const std::optional<chaos::RealKey>& key) { return key ? "real-key" : "without-key"; }

void emit_report(const GlobalOptions& g, const json& report) {
    if (!g.report_path.empty()) write_text(g.report_path, report.dump(2) + "\n");
}

json image_shape(const Planes& p) {
    return {{"width", p[0].width()}, {"height", p[0].height()}, {"channels", p.size()}};
}

// --- ledger file ------------------------------------------------------------

pipeline::SessionLedger load_ledger(const std::string& path) {
    pipeline::SessionLedger ledger;
    if (path.empty() || !std::filesystem::exists(path)) return ledger;
    const auto j = json::parse(slurp(path));
    ledger.restore(j.at("sessions").get<std::uint64_t>(), j.at("real_key_sessions").get<std::uint64_t>(),
                   j.at("pseudo_key_equivalent_bits").get<std::uint64_t>(),
                   j.at("negotiated_codewords").get<std::set<std::string>>());
    return ledger;
}

json ledger_json(const pipeline::SessionLedger& l) {
    return {{"sessions", l.sessions()},
            {"real_key_sessions", l.real_key_sessions()},
            {"negotiated_codewords", l.negotiated_codewords()},
            {"key_exchange_bits", l.key_exchange_bits()},
            {"pseudo_key_equivalent_bits", l.pseudo_key_equivalent_bits()},
            {"pseudo_key_baseline_bits", pipeline::kPseudoKeyBaselineBits},
            {"pseudo_key_baseline_images", pipeline::kPseudoKeyBaselineImages}};
}

// --- subcommands ------------------------------------------------------------

int run_keygen(const std::string& out, std::optional<std::uint64_t> seed) {
    std::mt19937_64 rng(seed ? *seed : std::random_device{}() ^ static_cast<std::uint64_t>(
                                          std::chrono::steady_clock::now().time_since_epoch().count()));
    const auto key = chaos::random_key(rng);
    const auto word = chaos::encode_key(key);
    if (!out.empty()) write_text(out, chaos::format_key_line(key) + "\n");
    std::cout << json{{"mu", key.mu_string()},
                      {"a0", key.a0_string()},
                      {"codeword", word.to_hex()},
                      {"bits", chaos::kKeyBits}}
                     .dump()
              << "\n";
    return kOk;
}

int run_capacity(const std::string& image) {
    const auto planes = io::read_image(image);
    std::size_t eligible = 0;
    json per_plane = json::array();
    const auto part = partition(planes[0]);
    for (const auto& plane : planes) {
        auto [flat, loc] = rdh::flatten_saturated(plane);
        const auto map = predict_errors(flat, part);
        if (!map.zero_bin) {
            per_plane.push_back({{"zero_bin", nullptr}, {"eligible", 0}});
            continue;
        }
        const auto shifted = rdh::shift_histogram(map);
        const auto n = rdh::eligible_positions(shifted).size();
        eligible += n;
        per_plane.push_back({{"zero_bin", *shifted.shift_bound}, {"eligible", n}, {"saturated", loc.saturated.size()}});
    }
    std::cout << json{{"image", image_shape(planes)},
                      {"eligible_zeros", eligible},
                      {"sequential_bits", rdh::capacity_from_eligible(eligible, rdh::Mode::sequential)},
                      {"cdjb_bits", rdh::capacity_from_eligible(eligible, rdh::Mode::cdjb)},
                      {"planes", per_plane}}
                     .dump()
              << "\n";
    return kOk;
}

int run_hide(const GlobalOptions& g, const std::string& secret_path, const std::string& out, const std::string& k_pri,
             const std::string& k_pub, const std::string& container_out) {
    pipeline::HideRequest req;
    req.secret = io::read_image(secret_path);
    req.k_pri = k_pri;
    req.k_pub = k_pub;
    req.real_key = load_key(g);
    req.schedule = g.schedule;
    req.backend = g.backend;
    if (!req.real_key) {
        std::cerr << "warning: no real key given; embedding sequentially (without-key scheme). Anyone who knows "
                     "the method can read K_pri and recover the secret.\n";
    }
    const auto result = pipeline::hide(req);
    io::write_image(out, result.stego);
    if (!container_out.empty()) io::write_image(container_out, result.container);

    json report{{"command", "hide"},
                {"scheme", scheme_name(req.real_key)},
                {"backend", g.backend},
                {"schedule",
                 {{"steps", g.schedule.total_steps},
                  {"beta_start", g.schedule.beta_start},
                  {"beta_end", g.schedule.beta_end},
                  {"sub_steps", g.schedule.sub_steps}}},
                {"image", image_shape(req.secret)},
                {"stream_bits", result.embed.stream_bits},
                {"required_positions", result.embed.required_positions},
                {"eligible_positions", result.embed.eligible_positions},
                {"flattened_pixels", result.embed.flattened_pixels},
                {"container_clamped", result.container_clamped},
                {"generation_ms", result.generation_ms},
                {"embedding_ms", result.embedding_ms},
                {"psnr_container_stego_db", pipeline::psnr(result.container, result.stego)}};
    if (req.real_key) report["codeword"] = chaos::encode_key(*req.real_key).to_hex();

    if (!g.ledger_path.empty()) {
        auto ledger = load_ledger(g.ledger_path);
        ledger.record_session(k_pri, k_pub, req.real_key);
        write_text(g.ledger_path, ledger_json(ledger).dump(2) + "\n");
        report["key_exchange_bits"] = ledger.key_exchange_bits();
    }
    emit_report(g, report);
    std::cout << report.dump() << "\n";
    return kOk;
}

int verdict_exit(integrity::Verdict v) {
    switch (v) {
        case integrity::Verdict::authentic: return kOk;
        case integrity::Verdict::tampered: return kTampered;
        case integrity::Verdict::malformed: return kMalformed;
    }
    return kMalformed;
}

int run_reveal(const GlobalOptions& g, const std::string& stego_path, const std::string& out,
               const std::string& container_out) {
    const auto stego = io::read_image(stego_path);
    const auto key = load_key(g);
    pipeline::RevealOptions opts;
    opts.schedule = g.schedule;
    opts.backend = g.backend;
    opts.strict = !g.permissive;
    const auto result = pipeline::reveal(stego, key, opts);
    if (result.secret) io::write_image(out, *result.secret);
    if (result.container && !container_out.empty()) io::write_image(container_out, *result.container);
    json report{{"command", "reveal"},
                {"scheme", scheme_name(key)},
                {"verdict", integrity::to_string(result.verdict)},
                {"detail", result.detail},
                {"secret_written", result.secret.has_value()},
                {"secret_clamped", result.secret_clamped}};
    if (result.verdict != integrity::Verdict::malformed) {
        report["k_pri"] = result.k_pri;
        report["k_pub"] = result.k_pub;
    }
    emit_report(g, report);
    std::cout << report.dump() << "\n";
    return verdict_exit(result.verdict);
}

int run_verify(const GlobalOptions& g, const std::string& stego_path) {
    const auto key = load_key(g);
    const auto check = integrity::verify(io::read_image(stego_path), key);
    json line{{"verdict", integrity::to_string(check.verdict)}, {"detail", check.detail}};
    if (check.payload) {
        line["k_pri"] = check.payload->k_pri;
        line["k_pub"] = check.payload->k_pub;
    }
    std::cout << line.dump() << "\n";
    return verdict_exit(check.verdict);
}

int run_attack(const GlobalOptions& g, const std::string& stego_path, const std::string& replacement_path,
               std::size_t tamper_trials, std::uint64_t seed) {
    const auto stego = io::read_image(stego_path);
    const auto key = load_key(g);
    json report{{"command", "attack-sim"}, {"scheme", scheme_name(key)}};
    if (!replacement_path.empty()) {
        const auto attack = pipeline::substitution_attack(stego, io::read_image(replacement_path), key);
        report["replacement"] = {{"verdict", integrity::to_string(attack.verdict)},
                                 {"detected", attack.detected},
                                 {"detail", attack.detail}};
    }
    if (tamper_trials > 0) {
        std::mt19937_64 rng(seed);
        std::size_t detected = 0;
        std::size_t tampered = 0;
        std::size_t malformed = 0;
        for (std::size_t i = 0; i < tamper_trials; ++i) {
            Planes t = stego;
            auto& plane = t[rng() % t.size()];
            auto& px = plane.pixels()[rng() % plane.size()];
            px = static_cast<std::uint8_t>(px ^ (1u << (rng() % 8)));
            const auto attack = pipeline::substitution_attack(stego, t, key);
            detected += attack.detected ? 1 : 0;
            tampered += attack.verdict == integrity::Verdict::tampered ? 1 : 0;
            malformed += attack.verdict == integrity::Verdict::malformed ? 1 : 0;
        }
        report["single_pixel"] = {{"trials", tamper_trials},
                                  {"detected", detected},
                                  {"tampered", tampered},
                                  {"malformed", malformed},
                                  {"missed", tamper_trials - detected}};
    }
    emit_report(g, report);
    std::cout << report.dump() << "\n";
    return kOk;
}

int run_histogram(const std::string& image, std::optional<std::size_t> plane) {
    const auto planes = io::read_image(image);
    ErrorHistogram total;
    for (std::size_t p = 0; p < planes.size(); ++p) {
        if (plane && *plane != p) continue;
        for (int e : predict_errors(planes[p]).errors) total.add(e);
    }
    if (plane && *plane >= planes.size()) throw DimensionError("image has no plane " + std::to_string(*plane));
    std::cout << "value,count\n";
    for (int e = kMinError; e <= kMaxError; ++e) {
        if (total[e] != 0) std::cout << e << "," << total[e] << "\n";
    }
    return kOk;
}

int run_ledger(const GlobalOptions& g) {
    if (g.ledger_path.empty()) throw IoError("--ledger is required");
    std::cout << ledger_json(load_ledger(g.ledger_path)).dump() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coverless image steganography: diffusion regeneration, reversible data hiding, chaos-keyed "
                 "positions and SM3 integrity."};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file; command-line flags take precedence");

    GlobalOptions g;
    app.add_option("--backend", g.backend, "noise estimator: toy:flow, toy:gaussian, toy:zero, toy:linear, external:<cmd>")
        ->envname("STEGANO_BACKEND")
        ->capture_default_str();
    app.add_option("--steps", g.schedule.total_steps, "diffusion steps T")->capture_default_str();
    app.add_option("--beta-start", g.schedule.beta_start)->capture_default_str();
    app.add_option("--beta-end", g.schedule.beta_end)->capture_default_str();
    app.add_option("--sub-steps", g.schedule.sub_steps, "solver steps S")->capture_default_str();
    app.add_option("--key", g.key_text, "real key as mu=..;a0=.. or 26 hex digits");
    app.add_option("--key-file", g.key_file, "file holding the real key");
    app.add_option("--ledger", g.ledger_path, "JSON session ledger to update or show");
    app.add_option("--report", g.report_path, "write a JSON run report here");
    app.add_flag("--permissive,!--strict", g.permissive, "continue past a failed integrity check");

    std::string out;
    std::optional<std::uint64_t> seed;
    auto* keygen = app.add_subcommand("keygen", "generate a random real key");
    keygen->add_option("--out", out, "write the key line to this file");
    keygen->add_option("--seed", seed, "deterministic generator seed");

    std::string image;
    auto* capacity = app.add_subcommand("capacity", "eligible zero-error count and payload capacity");
    capacity->add_option("image", image)->required()->check(CLI::ExistingFile);

    std::string k_pri;
    std::string k_pub;
    std::string container_out;
    auto* hide = app.add_subcommand("hide", "secret image -> stego image");
    hide->add_option("secret", image)->required()->check(CLI::ExistingFile);
    hide->add_option("--out,-o", out)->required();
    hide->add_option("--k-pri", k_pri, "private condition")->required();
    hide->add_option("--k-pub", k_pub, "public condition")->required();
    hide->add_option("--container-out", container_out);

    auto* reveal = app.add_subcommand("reveal", "stego image -> secret image");
    reveal->add_option("stego", image)->required()->check(CLI::ExistingFile);
    reveal->add_option("--out,-o", out)->required();
    reveal->add_option("--container-out", container_out);

    auto* verify = app.add_subcommand("verify", "integrity verdict only");
    verify->add_option("stego", image)->required()->check(CLI::ExistingFile);

    std::string replacement;
    std::size_t trials = 0;
    std::uint64_t attack_seed = 1;
    auto* attack = app.add_subcommand("attack-sim", "substitution and single-pixel tamper simulation");
    attack->add_option("stego", image)->required()->check(CLI::ExistingFile);
    attack->add_option("--replacement", replacement)->check(CLI::ExistingFile);
    attack->add_option("--tamper-trials", trials, "random single-pixel tampers to try");
    attack->add_option("--seed", attack_seed);

    std::optional<std::size_t> plane;
    auto* histogram = app.add_subcommand("histogram", "prediction-error histogram as CSV");
    histogram->add_option("image", image)->required()->check(CLI::ExistingFile);
    histogram->add_option("--plane", plane);

    auto* ledger = app.add_subcommand("ledger", "show the session ledger");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*keygen) return run_keygen(out, seed);
        if (*capacity) return run_capacity(image);
        if (*hide) return run_hide(g, image, out, k_pri, k_pub, container_out);
        if (*reveal) return run_reveal(g, image, out, container_out);
        if (*verify) return run_verify(g, image);
        if (*attack) {
            if (replacement.empty() && trials == 0) throw CLI::ValidationError("give --replacement or --tamper-trials");
            return run_attack(g, image, replacement, trials, attack_seed);
        }
        if (*histogram) return run_histogram(image, plane);
        if (*ledger) return run_ledger(g);
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCapacity;
    } catch (const MalformedStego& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMalformed;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
