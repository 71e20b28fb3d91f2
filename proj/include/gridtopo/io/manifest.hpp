#pragma once
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>
#include <openssl/evp.h>
#include <gridtopo/io/report.hpp>
#include <gridtopo/io/text.hpp>

namespace gridtopo::io {

inline constexpr const char* tool_name = "gridtopo";
inline constexpr const char* tool_version = "1.0.0";

inline std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw error(errc::io_error, "SHA-256 digest failed");
    }
    std::string out;
    char hex[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(hex, sizeof hex, "%02x", md[i]);
        out += hex;
    }
    return out;
}

inline std::string file_sha256(const std::filesystem::path& p)
{
    return sha256_hex(read_file(p));
}

/**
 * Provenance of one CLI run: the argument vector that reproduces it, a
 * config snapshot, digests of every input and output file, and stage timings.
 * Output paths are relative to the manifest's directory.
 */
struct RunManifest
{
    std::string subcommand;
    std::vector<std::string> args;
    json config = json::object();
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::string> inputs;   ///< path -> sha256
    std::map<std::string, std::string> outputs;  ///< file name -> sha256
    std::map<std::string, double> timings_s;

    json to_json() const
    {
        json j{{"tool", tool_name},
               {"version", tool_version},
               {"subcommand", subcommand},
               {"args", args},
               {"config", config},
               {"inputs", inputs},
               {"outputs", outputs},
               {"timings_s", timings_s}};
        j["seed"] = seed ? json(*seed) : json(nullptr);
        return j;
    }

    static RunManifest from_json(const json& j)
    {
        RunManifest m;
        try {
            if (j.at("tool").get<std::string>() != tool_name) throw error(errc::parse_error, "manifest from another tool");
            m.subcommand = j.at("subcommand").get<std::string>();
            m.args = j.at("args").get<std::vector<std::string>>();
            m.config = j.value("config", json::object());
            if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::uint64_t>();
            m.inputs = j.value("inputs", std::map<std::string, std::string>{});
            m.outputs = j.value("outputs", std::map<std::string, std::string>{});
            m.timings_s = j.value("timings_s", std::map<std::string, double>{});
        } catch (const json::exception& ex) {
            throw error(errc::parse_error, std::string("malformed manifest: ") + ex.what());
        }
        return m;
    }

    void add_input(const std::filesystem::path& p) { inputs[p.string()] = file_sha256(p); }

    /// Writes `content` to dir/name and records its digest.
    void emit(const std::filesystem::path& dir, const std::string& name, const std::string& content)
    {
        write_file(dir / name, content);
        outputs[name] = sha256_hex(content);
    }
};

inline RunManifest load_manifest(const std::filesystem::path& p)
{
    try {
        return RunManifest::from_json(json::parse(read_file(p)));
    } catch (const json::parse_error& ex) {
        throw error(errc::parse_error, p.string() + ": " + ex.what());
    }
}

} // namespace gridtopo::io
