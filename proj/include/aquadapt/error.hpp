#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aquadapt {

enum class ErrorCode {
    EmptyInput,
    DuplicateDocId,
    UnknownDoc,
    EmptyQuery,
    ParseError,
    ValidationError,
    NotEnoughSeeds,
    BackendUnavailable,
    BackendMalformedReply,
    UnknownPair,
    IllegalScore,
    PairFinalized,
    PairNotFlagged,
    RoundsExhausted,
    StaleVersion,
    LengthMismatch,
    DegenerateInput,
    UnparseableScore,
    UnscoredPair,
    BadFraction,
    EmptyHypothesis,
    EmptyCorpus,
    ConfigError,
    IoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure the library reports carries one of the codes above so the CLI
// and HTTP layers can map it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Thrown by generation backends; keeps the raw reply for the audit trail.
class MalformedReplyError : public Error {
public:
    MalformedReplyError(const std::string& message, std::string raw_reply)
        : Error(ErrorCode::BackendMalformedReply, message), raw_reply_(std::move(raw_reply)) {}

    const std::string& raw_reply() const noexcept { return raw_reply_; }

private:
    std::string raw_reply_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace aquadapt
