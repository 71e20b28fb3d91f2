#pragma once
#include <stdexcept>
#include <string>

namespace gridtopo {

/// Machine-readable failure category carried by every library exception.
enum class errc
{
    invalid_argument,
    insufficient_data,
    disconnected_network,
    duplicate_branch,
    mode_mismatch,
    singular_matrix,
    rank_deficient,
    undefined_statistic,
    unknown_network,
    parse_error,
    io_error,
};

inline const char* to_string(errc code)
{
    switch (code) {
        case errc::invalid_argument: return "invalid_argument";
        case errc::insufficient_data: return "insufficient_data";
        case errc::disconnected_network: return "disconnected_network";
        case errc::duplicate_branch: return "duplicate_branch";
        case errc::mode_mismatch: return "mode_mismatch";
        case errc::singular_matrix: return "singular_matrix";
        case errc::rank_deficient: return "rank_deficient";
        case errc::undefined_statistic: return "undefined_statistic";
        case errc::unknown_network: return "unknown_network";
        case errc::parse_error: return "parse_error";
        case errc::io_error: return "io_error";
    }
    return "unknown";
}

class error : public std::runtime_error
{
public:
    error(errc code, const std::string& what)
        : std::runtime_error(what), code_(code)
    {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace gridtopo
