#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egospeak {

// Precondition or domain violation on an input value.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FileErrc {
    Io,
    BadMagic,
    VersionMismatch,
    BadHeader,
    Truncated,
    TrailingData,
    NonFinite,
};

std::string_view to_string(FileErrc code);

class FileFormatError : public std::runtime_error {
public:
    FileFormatError(FileErrc code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what),
          code_(code) {}

    FileErrc code() const noexcept { return code_; }

private:
    FileErrc code_;
};

} // namespace egospeak
