#include "aquadapt/error.hpp"

namespace aquadapt {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DuplicateDocId: return "DuplicateDocId";
        case ErrorCode::UnknownDoc: return "UnknownDoc";
        case ErrorCode::EmptyQuery: return "EmptyQuery";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::NotEnoughSeeds: return "NotEnoughSeeds";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::BackendMalformedReply: return "BackendMalformedReply";
        case ErrorCode::UnknownPair: return "UnknownPair";
        case ErrorCode::IllegalScore: return "IllegalScore";
        case ErrorCode::PairFinalized: return "PairFinalized";
        case ErrorCode::PairNotFlagged: return "PairNotFlagged";
        case ErrorCode::RoundsExhausted: return "RoundsExhausted";
        case ErrorCode::StaleVersion: return "StaleVersion";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::UnparseableScore: return "UnparseableScore";
        case ErrorCode::UnscoredPair: return "UnscoredPair";
        case ErrorCode::BadFraction: return "BadFraction";
        case ErrorCode::EmptyHypothesis: return "EmptyHypothesis";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace aquadapt
