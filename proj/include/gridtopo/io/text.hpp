#pragma once
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>
#include <gridtopo/core/error.hpp>

namespace gridtopo::io {

/// Environment variable naming the directory that relative data paths resolve against.
inline constexpr const char* data_dir_env = "GRIDTOPO_DATA_DIR";

/// `p` unchanged if absolute or if GRIDTOPO_DATA_DIR is unset, otherwise joined to it.
inline std::filesystem::path resolve_data_path(const std::filesystem::path& p)
{
    if (p.is_absolute()) return p;
    const char* dir = std::getenv(data_dir_env);
    if (!dir || !*dir) return p;
    return std::filesystem::path(dir) / p;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw error(errc::io_error, "cannot open '" + p.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content)
{
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io_error, "cannot open '" + p.string() + "' for writing");
    out << content;
    if (!out) throw error(errc::io_error, "write to '" + p.string() + "' failed");
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    for (;;) {
        const auto cut = s.find(sep);
        out.push_back(trim(s.substr(0, cut)));
        if (cut == std::string_view::npos) return out;
        s.remove_prefix(cut + 1);
    }
}

/// Lines with their 1-based numbers; blank lines are skipped.
inline std::vector<std::pair<std::size_t, std::string_view>> lines(std::string_view text)
{
    std::vector<std::pair<std::size_t, std::string_view>> out;
    std::size_t n = 0;
    while (!text.empty()) {
        const auto cut = text.find('\n');
        ++n;
        const auto line = trim(text.substr(0, cut));
        if (!line.empty()) out.emplace_back(n, line);
        if (cut == std::string_view::npos) break;
        text.remove_prefix(cut + 1);
    }
    return out;
}

inline error parse_failure(std::size_t line, const std::string& what)
{
    return error(errc::parse_error, "line " + std::to_string(line) + ": " + what);
}

} // namespace detail

inline double parse_double(std::string_view s, std::size_t line)
{
    s = detail::trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw detail::parse_failure(line, "not a number: '" + std::string(s) + "'");
    }
    if (!std::isfinite(v)) throw detail::parse_failure(line, "non-finite value '" + std::string(s) + "'");
    return v;
}

template <class Int>
Int parse_integer(std::string_view s, std::size_t line)
{
    s = detail::trim(s);
    Int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw detail::parse_failure(line, "not an integer: '" + std::string(s) + "'");
    }
    return v;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw error(errc::invalid_argument, "cannot format number");
    return std::string(buf, p);
}

} // namespace gridtopo::io
