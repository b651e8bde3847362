#include "meshseq/error.hpp"

namespace meshseq {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::EmptyMesh: return "empty mesh";
    case ErrorKind::Range: return "range error";
    case ErrorKind::Degenerate: return "degenerate geometry";
    case ErrorKind::Budget: return "budget exceeded";
    case ErrorKind::Coverage: return "coverage error";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Config: return "config error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> location)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), location_(location) {}

} // namespace meshseq
