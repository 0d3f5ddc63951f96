#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace emprag {

// All recoverable failures carry a short machine-readable code alongside the
// human message; the CLI maps these to its JSON error output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

namespace errc {
inline constexpr const char* capacity = "capacity";
inline constexpr const char* dim_mismatch = "dim_mismatch";
inline constexpr const char* bad_argument = "bad_argument";
inline constexpr const char* bounds = "bounds";
inline constexpr const char* bad_method = "bad_method";
inline constexpr const char* bad_config = "bad_config";
inline constexpr const char* missing_artifact = "missing_artifact";
inline constexpr const char* diverged = "diverged";
inline constexpr const char* io = "io";
} // namespace errc

} // namespace emprag
