#include "mmmem/error.hpp"

namespace mmmem {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Io: return "io";
        case ErrorKind::Corruption: return "corruption";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::Adapter: return "adapter";
        case ErrorKind::Transport: return "transport";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Training: return "training";
    }
    return "unknown";
}

}  // namespace mmmem
