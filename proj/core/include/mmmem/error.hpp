#pragma once
// Error hierarchy for the memory engine.
//
// Every failure the engine raises derives from mmmem::Error and carries an
// ErrorKind. The CLI maps kinds onto its exit-code contract, so new error
// types must pick the kind that matches how a script should react.

#include <stdexcept>
#include <string>

namespace mmmem {

enum class ErrorKind {
    Shape,        // vector / frame dimension mismatch
    Contract,     // precondition violated by the caller
    Domain,       // numerically invalid input (not a distribution, ...)
    Parse,        // malformed text/binary input
    Io,           // filesystem failure
    Corruption,   // snapshot digest / magic / length mismatch
    Consistency,  // snapshot files disagree with each other
    Adapter,      // model adapter failed (stub or remote)
    Transport,    // remote call could not be delivered
    Protocol,     // remote answered with something unparseable
    Numeric,      // non-finite value produced during computation
    Training,     // toy trainer diverged
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define MMMEM_DEFINE_ERROR(Name, Kind)                                   \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& message) : Error(Kind, message) {} \
    }

MMMEM_DEFINE_ERROR(ShapeError, ErrorKind::Shape);
MMMEM_DEFINE_ERROR(ContractError, ErrorKind::Contract);
MMMEM_DEFINE_ERROR(DomainError, ErrorKind::Domain);
MMMEM_DEFINE_ERROR(ParseError, ErrorKind::Parse);
MMMEM_DEFINE_ERROR(IoError, ErrorKind::Io);
MMMEM_DEFINE_ERROR(CorruptionError, ErrorKind::Corruption);
MMMEM_DEFINE_ERROR(ConsistencyError, ErrorKind::Consistency);
MMMEM_DEFINE_ERROR(AdapterError, ErrorKind::Adapter);
MMMEM_DEFINE_ERROR(TransportError, ErrorKind::Transport);
MMMEM_DEFINE_ERROR(NumericError, ErrorKind::Numeric);
MMMEM_DEFINE_ERROR(TrainingError, ErrorKind::Training);

#undef MMMEM_DEFINE_ERROR

// Remote answered, but the body could not be interpreted. The raw body is
// kept so callers can log exactly what the server sent.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& message, std::string raw_body)
        : Error(ErrorKind::Protocol, message), raw_body_(std::move(raw_body)) {}

    const std::string& raw_body() const noexcept { return raw_body_; }

private:
    std::string raw_body_;
};

}  // namespace mmmem
