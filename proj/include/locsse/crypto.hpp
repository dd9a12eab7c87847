#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

#include "locsse/common.hpp"

namespace locsse {

inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::uint32_t kKeyVersion = 1;

struct PrfKey {
    std::array<std::uint8_t, kKeyBytes> bytes{};
    bool operator==(const PrfKey&) const = default;
};

struct EncKey {
    std::array<std::uint8_t, kKeyBytes> bytes{};
    bool operator==(const EncKey&) const = default;
};

/// `declared_len` is the padded target length, which is all the ciphertext reveals.
struct Ciphertext {
    Bytes bytes;
    std::size_t declared_len = 0;
};

// HMAC-SHA256.
Tag prf(const PrfKey& key, std::span<const std::uint8_t> input);
Tag prf(const PrfKey& key, std::string_view input);
Tag prf(const Tag& key, std::span<const std::uint8_t> input);
/// prf over (label || le64(x)); the common case of indexing a family by a counter.
Tag prf_indexed(const Tag& key, std::string_view label, std::uint64_t x);
Tag prf_indexed(const PrfKey& key, std::string_view label, std::uint64_t x);

std::uint64_t tag_prefix64(const Tag& t);

/// Bytes added by encrypt_padded on top of target_len.
inline constexpr std::size_t kCipherOverhead = 4 + 12 + 16;
inline constexpr std::size_t ciphertext_len(std::size_t target_len) { return target_len + kCipherOverhead; }

/// AES-256-GCM over (le32 len || plaintext || zero padding up to target_len).
Ciphertext encrypt_padded(const EncKey& key, std::span<const std::uint8_t> plaintext, std::size_t target_len);
Bytes decrypt_padded(const EncKey& key, std::span<const std::uint8_t> ciphertext);

/// Two bin choices from disjoint 16-byte halves of the tag, each reduced mod m.
std::pair<std::uint64_t, std::uint64_t> hash_choices(const Tag& tag, std::uint64_t m);

/// 4-round alternating Feistel over ⌈log2 n⌉ bits with cycle-walking into [0, n).
class Prp {
public:
    Prp(const PrfKey& key, std::uint64_t n);
    std::uint64_t eval(std::uint64_t x) const;
    std::uint64_t invert(std::uint64_t y) const;
    std::uint64_t domain() const { return n_; }

private:
    std::uint64_t permute(std::uint64_t v) const;
    std::uint64_t unpermute(std::uint64_t v) const;

    std::uint64_t n_;
    int left_bits_ = 0;
    int right_bits_ = 0;
    std::array<std::uint64_t, 4> round_keys_{};
};

std::uint64_t prp_eval(const PrfKey& key, std::uint64_t n, std::uint64_t x);
std::uint64_t prp_invert(const PrfKey& key, std::uint64_t n, std::uint64_t y);

/// Keys derive from a 64-bit experiment seed:
///   master = SHA256("locsse/master" || le64(seed)), key(label) = HMAC(master, label).
class KeyTree {
public:
    explicit KeyTree(std::uint64_t seed);
    KeyTree(const Tag& master) : master_(master) {}
    PrfKey prf_key(std::string_view label) const;
    EncKey enc_key(std::string_view label) const;
    std::uint64_t salt(std::string_view label) const;
    KeyTree child(std::string_view label) const;

private:
    Tag master_{};
};

Bytes serialize_key(const PrfKey& key);
Bytes serialize_key(const EncKey& key);
PrfKey deserialize_prf_key(std::span<const std::uint8_t> raw);
EncKey deserialize_enc_key(std::span<const std::uint8_t> raw);

}  // namespace locsse
