#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repcx {

enum class ErrorCode {
    Format,
    Validation,
    UnsupportedDtype,
    Io,
    Dimension,
    InsufficientData,
    Parameter,
};

/// Short machine-greppable tag, e.g. "E_FORMAT".
std::string_view error_tag(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace repcx
