#pragma once

// Run manifest: everything needed to reproduce a CLI run. Requires linking
// OpenSSL::Crypto for the content hash.

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <string>

#include <openssl/evp.h>

#include "spde/config_io.hpp"
#include "spde/error.hpp"
#include "spde/report_io.hpp"

namespace spde {

inline constexpr const char* artifact_version = "0.1.0";

/// SHA-1 of "blob <len>\0<content>", i.e. the id git assigns to a file with
/// this content.
[[nodiscard]] inline std::string git_blob_hash(const std::string& content) {
    const std::string header = "blob " + std::to_string(content.size()) + '\0';
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    const bool ok = ctx != nullptr && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, md.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("SHA-1 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

[[nodiscard]] inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string command;
    ExperimentConfig config;
    json extra = json::object(); // command-specific settings (mode, path options)
    std::string output_dir;
    std::chrono::system_clock::time_point started = std::chrono::system_clock::now();
    std::optional<double> elapsed_seconds;

    /// Canonical text of everything that determines the results.
    [[nodiscard]] std::string canonical_text() const {
        std::string text = "command = " + command + '\n';
        for (const auto& [k, v] : extra.items()) text += k + " = " + (v.is_string() ? v.get<std::string>() : v.dump()) + '\n';
        return text + serialize_config(config);
    }

    [[nodiscard]] json to_json() const {
        json j = {{"command", command},
                  {"config", spde::to_json(config)},
                  {"settings", extra},
                  {"config_text", canonical_text()},
                  {"config_hash", git_blob_hash(canonical_text())},
                  {"output_dir", output_dir},
                  {"started_at", utc_timestamp(started)},
                  {"artifact_version", artifact_version}};
        if (elapsed_seconds) j["elapsed_seconds"] = *elapsed_seconds;
        return j;
    }
};

} // namespace spde
