#include "locsse/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstring>
#include <memory>

namespace locsse {

namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

/// HMAC over a reused digest context; one-shot HMAC() re-fetches SHA-256 on every call.
Tag hmac_sha256(const std::uint8_t* key, std::size_t key_len, const std::uint8_t* data, std::size_t len) {
    static EVP_MD* const md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
    thread_local std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    std::uint8_t k[64] = {};
    unsigned int n = 0;
    bool ok = true;
    if (key_len > sizeof k)
        ok = EVP_Digest(key, key_len, k, &n, md, nullptr) == 1;
    else
        std::memcpy(k, key, key_len);
    std::uint8_t pad[64];
    Tag inner{}, out{};
    for (int i = 0; i < 64; ++i) pad[i] = k[i] ^ 0x36;
    ok = ok && EVP_DigestInit_ex(ctx.get(), md, nullptr) == 1 && EVP_DigestUpdate(ctx.get(), pad, 64) == 1 &&
         EVP_DigestUpdate(ctx.get(), data, len) == 1 && EVP_DigestFinal_ex(ctx.get(), inner.data(), &n) == 1;
    for (int i = 0; i < 64; ++i) pad[i] = k[i] ^ 0x5c;
    ok = ok && EVP_DigestInit_ex(ctx.get(), md, nullptr) == 1 && EVP_DigestUpdate(ctx.get(), pad, 64) == 1 &&
         EVP_DigestUpdate(ctx.get(), inner.data(), inner.size()) == 1 &&
         EVP_DigestFinal_ex(ctx.get(), out.data(), &n) == 1;
    if (!ok) throw Error(ErrorCode::Protocol, "HMAC failure");
    return out;
}

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

EVP_CIPHER_CTX* cipher_ctx() {
    thread_local std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx(EVP_CIPHER_CTX_new());
    return ctx.get();
}

const EVP_CIPHER* aes_gcm() {
    static EVP_CIPHER* const c = EVP_CIPHER_fetch(nullptr, "AES-256-GCM", nullptr);
    return c;
}

constexpr std::size_t kNonce = 12;
constexpr std::size_t kTagLen = 16;

}  // namespace

Tag prf(const PrfKey& key, std::span<const std::uint8_t> input) {
    return hmac_sha256(key.bytes.data(), key.bytes.size(), input.data(), input.size());
}

Tag prf(const PrfKey& key, std::string_view input) {
    return hmac_sha256(key.bytes.data(), key.bytes.size(), reinterpret_cast<const std::uint8_t*>(input.data()),
                       input.size());
}

Tag prf(const Tag& key, std::span<const std::uint8_t> input) {
    return hmac_sha256(key.data(), key.size(), input.data(), input.size());
}

Tag prf_indexed(const Tag& key, std::string_view label, std::uint64_t x) {
    Bytes buf(label.begin(), label.end());
    buf.resize(label.size() + 8);
    store_le64(buf.data() + label.size(), x);
    return prf(key, buf);
}

Tag prf_indexed(const PrfKey& key, std::string_view label, std::uint64_t x) {
    Tag k;
    std::memcpy(k.data(), key.bytes.data(), k.size());
    return prf_indexed(k, label, x);
}

std::uint64_t tag_prefix64(const Tag& t) { return load_le64(t.data()); }

Ciphertext encrypt_padded(const EncKey& key, std::span<const std::uint8_t> plaintext, std::size_t target_len) {
    if (plaintext.size() > target_len)
        throw Error(ErrorCode::PlaintextTooLong,
                    std::to_string(plaintext.size()) + " > " + std::to_string(target_len));
    Bytes framed(4 + target_len, 0);
    const auto n = static_cast<std::uint32_t>(plaintext.size());
    for (int i = 0; i < 4; ++i) framed[i] = static_cast<std::uint8_t>(n >> (8 * i));
    if (!plaintext.empty()) std::memcpy(framed.data() + 4, plaintext.data(), plaintext.size());

    Ciphertext ct;
    ct.declared_len = target_len;
    ct.bytes.resize(kNonce + framed.size() + kTagLen);
    if (RAND_bytes(ct.bytes.data(), kNonce) != 1) throw Error(ErrorCode::Protocol, "RAND_bytes failure");

    EVP_CIPHER_CTX* ctx = cipher_ctx();
    int len = 0;
    bool ok = EVP_EncryptInit_ex(ctx, aes_gcm(), nullptr, key.bytes.data(), ct.bytes.data()) == 1;
    ok = ok && EVP_EncryptUpdate(ctx, ct.bytes.data() + kNonce, &len, framed.data(),
                                 static_cast<int>(framed.size())) == 1;
    int fin = 0;
    ok = ok && EVP_EncryptFinal_ex(ctx, ct.bytes.data() + kNonce + len, &fin) == 1;
    ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kTagLen, ct.bytes.data() + kNonce + framed.size()) == 1;
    if (!ok) throw Error(ErrorCode::Protocol, "AES-GCM encryption failure");
    return ct;
}

Bytes decrypt_padded(const EncKey& key, std::span<const std::uint8_t> ciphertext) {
    if (ciphertext.size() < kCipherOverhead) throw Error(ErrorCode::DecryptError, "ciphertext too short");
    const std::size_t body = ciphertext.size() - kNonce - kTagLen;
    Bytes framed(body);
    EVP_CIPHER_CTX* ctx = cipher_ctx();
    int len = 0;
    bool ok = EVP_DecryptInit_ex(ctx, aes_gcm(), nullptr, key.bytes.data(), ciphertext.data()) == 1;
    ok = ok && EVP_DecryptUpdate(ctx, framed.data(), &len, ciphertext.data() + kNonce, static_cast<int>(body)) == 1;
    Bytes tag(ciphertext.end() - kTagLen, ciphertext.end());
    ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kTagLen, tag.data()) == 1;
    int fin = 0;
    ok = ok && EVP_DecryptFinal_ex(ctx, framed.data() + len, &fin) == 1;
    if (!ok) throw Error(ErrorCode::DecryptError, "authentication failed");
    std::uint32_t n = 0;
    for (int i = 3; i >= 0; --i) n = (n << 8) | framed[i];
    if (n > body - 4) throw Error(ErrorCode::DecryptError, "bad length prefix");
    return Bytes(framed.begin() + 4, framed.begin() + 4 + n);
}

std::pair<std::uint64_t, std::uint64_t> hash_choices(const Tag& tag, std::uint64_t m) {
    if (m <= 1) return {0, 0};
    auto half = [&](std::size_t off) {
        unsigned __int128 v = 0;
        for (int i = 15; i >= 0; --i) v = (v << 8) | tag[off + static_cast<std::size_t>(i)];
        return static_cast<std::uint64_t>(v % m);
    };
    return {half(0), half(16)};
}

Prp::Prp(const PrfKey& key, std::uint64_t n) : n_(n) {
    if (n == 0) throw Error(ErrorCode::DomainError, "empty PRP domain");
    const int bits = ceil_log2(n);
    left_bits_ = (bits + 1) / 2;
    right_bits_ = bits / 2;
    for (std::size_t r = 0; r < round_keys_.size(); ++r)
        round_keys_[r] = tag_prefix64(prf_indexed(key, "prp-round", (n << 2) | r));
}

std::uint64_t Prp::permute(std::uint64_t v) const {
    const std::uint64_t lmask = (std::uint64_t{1} << left_bits_) - 1;
    const std::uint64_t rmask = (std::uint64_t{1} << right_bits_) - 1;
    std::uint64_t l = (v >> right_bits_) & lmask;
    std::uint64_t r = v & rmask;
    for (std::size_t i = 0; i < round_keys_.size(); ++i) {
        if (i % 2 == 0)
            l ^= mix64(round_keys_[i] ^ r) & lmask;
        else
            r ^= mix64(round_keys_[i] ^ l) & rmask;
    }
    return (l << right_bits_) | r;
}

std::uint64_t Prp::unpermute(std::uint64_t v) const {
    const std::uint64_t lmask = (std::uint64_t{1} << left_bits_) - 1;
    const std::uint64_t rmask = (std::uint64_t{1} << right_bits_) - 1;
    std::uint64_t l = (v >> right_bits_) & lmask;
    std::uint64_t r = v & rmask;
    for (std::size_t i = round_keys_.size(); i-- > 0;) {
        if (i % 2 == 0)
            l ^= mix64(round_keys_[i] ^ r) & lmask;
        else
            r ^= mix64(round_keys_[i] ^ l) & rmask;
    }
    return (l << right_bits_) | r;
}

std::uint64_t Prp::eval(std::uint64_t x) const {
    if (x >= n_) throw Error(ErrorCode::DomainError, std::to_string(x) + " >= " + std::to_string(n_));
    std::uint64_t v = permute(x);
    while (v >= n_) v = permute(v);
    return v;
}

std::uint64_t Prp::invert(std::uint64_t y) const {
    if (y >= n_) throw Error(ErrorCode::DomainError, std::to_string(y) + " >= " + std::to_string(n_));
    std::uint64_t v = unpermute(y);
    while (v >= n_) v = unpermute(v);
    return v;
}

std::uint64_t prp_eval(const PrfKey& key, std::uint64_t n, std::uint64_t x) { return Prp(key, n).eval(x); }
std::uint64_t prp_invert(const PrfKey& key, std::uint64_t n, std::uint64_t y) { return Prp(key, n).invert(y); }

KeyTree::KeyTree(std::uint64_t seed) {
    std::uint8_t buf[13 + 8];
    std::memcpy(buf, "locsse/master", 13);
    store_le64(buf + 13, seed);
    SHA256(buf, sizeof(buf), master_.data());
}

PrfKey KeyTree::prf_key(std::string_view label) const {
    PrfKey k;
    const Tag t = prf(master_, {reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
    std::memcpy(k.bytes.data(), t.data(), k.bytes.size());
    return k;
}

EncKey KeyTree::enc_key(std::string_view label) const {
    EncKey k;
    const std::string l = std::string("enc/") + std::string(label);
    const Tag t = prf(master_, {reinterpret_cast<const std::uint8_t*>(l.data()), l.size()});
    std::memcpy(k.bytes.data(), t.data(), k.bytes.size());
    return k;
}

std::uint64_t KeyTree::salt(std::string_view label) const {
    const std::string l = std::string("salt/") + std::string(label);
    return tag_prefix64(prf(master_, {reinterpret_cast<const std::uint8_t*>(l.data()), l.size()}));
}

KeyTree KeyTree::child(std::string_view label) const {
    const std::string l = std::string("child/") + std::string(label);
    return KeyTree(prf(master_, {reinterpret_cast<const std::uint8_t*>(l.data()), l.size()}));
}

namespace {

template <class K>
Bytes serialize_raw(const K& key) {
    Bytes out(4 + key.bytes.size());
    for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(kKeyVersion >> (8 * i));
    std::memcpy(out.data() + 4, key.bytes.data(), key.bytes.size());
    return out;
}

template <class K>
K deserialize_raw(std::span<const std::uint8_t> raw) {
    K key;
    if (raw.size() != 4 + key.bytes.size()) throw Error(ErrorCode::BadSpec, "key blob has wrong length");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | raw[static_cast<std::size_t>(i)];
    if (v != kKeyVersion) throw Error(ErrorCode::BadSpec, "unsupported key version " + std::to_string(v));
    std::memcpy(key.bytes.data(), raw.data() + 4, key.bytes.size());
    return key;
}

}  // namespace

Bytes serialize_key(const PrfKey& key) { return serialize_raw(key); }
Bytes serialize_key(const EncKey& key) { return serialize_raw(key); }
PrfKey deserialize_prf_key(std::span<const std::uint8_t> raw) { return deserialize_raw<PrfKey>(raw); }
EncKey deserialize_enc_key(std::span<const std::uint8_t> raw) { return deserialize_raw<EncKey>(raw); }

}  // namespace locsse
