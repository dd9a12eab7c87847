#include "locsse/common.hpp"

namespace locsse {

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::PlaintextTooLong: return "PlaintextTooLong";
        case ErrorCode::DecryptError: return "DecryptError";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::NestedOp: return "NestedOp";
        case ErrorCode::NoOpenOp: return "NoOpenOp";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::WeightOutOfRange: return "WeightOutOfRange";
        case ErrorCode::DuplicateBall: return "DuplicateBall";
        case ErrorCode::BallNotFound: return "BallNotFound";
        case ErrorCode::WeightDecrease: return "WeightDecrease";
        case ErrorCode::CapacityExceeded: return "CapacityExceeded";
        case ErrorCode::PendingLost: return "PendingLost";
        case ErrorCode::UnknownKeyword: return "UnknownKeyword";
        case ErrorCode::UpdateRejected: return "UpdateRejected";
        case ErrorCode::BlockTooSmall: return "BlockTooSmall";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::BadSpec: return "BadSpec";
        case ErrorCode::Protocol: return "Protocol";
    }
    return "Unknown";
}

}  // namespace locsse
