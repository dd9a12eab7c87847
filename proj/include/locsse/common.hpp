#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace locsse {

using Word = std::uint64_t;
using Bytes = std::vector<std::uint8_t>;
using Tag = std::array<std::uint8_t, 32>;

enum class ErrorCode {
    PlaintextTooLong,
    DecryptError,
    DomainError,
    NestedOp,
    NoOpenOp,
    OutOfBounds,
    WeightOutOfRange,
    DuplicateBall,
    BallNotFound,
    WeightDecrease,
    CapacityExceeded,
    PendingLost,
    UnknownKeyword,
    UpdateRejected,
    BlockTooSmall,
    IndexOutOfRange,
    BadSpec,
    Protocol,
};

const char* error_name(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::uint64_t load_le64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline void store_le64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

/// ⌈log2 x⌉ for x ≥ 1; 0 for x ≤ 1.
inline int ceil_log2(std::uint64_t x) {
    int k = 0;
    while ((std::uint64_t{1} << k) < x) ++k;
    return k;
}

/// splitmix64 finalizer; used for non-cryptographic mixing inside encrypted payloads.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace locsse
