#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace meshseq {

enum class ErrorKind {
    Parse,        // malformed text; location() holds a line number or byte offset
    Validation,   // index out of range, degenerate face, non-canonical order
    EmptyMesh,
    Range,        // coordinate outside the permitted interval
    Degenerate,   // zero extent / zero area
    Budget,       // token or face budget exceeded
    Coverage,     // label table does not cover every face
    InvalidArgument,
    Io,
    Config,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> location = std::nullopt);

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> location() const noexcept { return location_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> location_;
};

} // namespace meshseq
