#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "locsse/crypto.hpp"
#include "locsse/layered_sse.hpp"
#include "locsse/traced_store.hpp"
#include "locsse/wire.hpp"

namespace locsse {

struct OcParams {
    std::uint64_t N = 1;
    std::uint64_t m = 1;    // power of 2
    std::uint64_t tau = 1;  // bucket capacity in ids
    double alpha = 4;
    double d = 1;
};

/// m = 2^⌈log2(N / llog N)⌉, τ = ⌈α · log2 log2 N⌉.
OcParams make_oc_params(std::uint64_t N, double alpha = 4, double d = 1);

/// H(w) for one-choice allocation: first index of hash_choices.
std::uint64_t oc_hash(const Tag& w_tag, std::uint64_t m);

struct BucketRange {
    std::uint64_t first = 0;
    std::uint64_t count = 0;
};

/// Superbucket of size 2^⌈log2 ℓ⌉ containing h, or all m buckets.
BucketRange oc_fetch_range(std::uint64_t m, std::uint64_t h, std::uint64_t ell);
std::vector<std::uint64_t> oc_fetch(std::uint64_t m, std::uint64_t h, std::uint64_t ell);
/// Bucket for the element at position ℓ (0-based) of a list with hash h.
std::uint64_t oc_add(std::uint64_t m, std::uint64_t h, std::uint64_t ell);

struct ClipConfig {
    std::uint64_t N = 1 << 14;
    double alpha = 4;
    double d = 1;
    /// Test hook: every keyword hashes to this bucket.
    std::optional<std::uint64_t> force_h;
};

struct ClipKeys {
    EncKey k_enc;
    PrfKey k_prf;
};
ClipKeys clip_keygen(const KeyTree& tree);

/// Ids refused by the buckets for one keyword, with the keyword's total length.
struct ClipEntry {
    std::string keyword;
    std::uint64_t ell = 0;
    std::vector<std::uint64_t> clipped;
};

struct ClipLayout {
    std::uint64_t buckets_base = 0;
    std::uint64_t bucket_ct_words = 0;
    std::uint64_t table_base = 0;
    std::uint64_t table_slots = 0;
    std::uint64_t total_words = 0;
};

struct ClipSearchResult {
    std::vector<std::uint64_t> ids;
    std::uint64_t ell = 0;  // total length recorded in T, clipped ids included
};

struct ClipUpdateResult {
    std::optional<std::uint64_t> clipped;
    std::uint64_t ell_before = 0;
};

class ClipServer {
public:
    ClipServer(PageStore& store, const OcParams& params, const ClipLayout& layout, std::optional<std::uint64_t> force_h);
    Bytes handle(const Bytes& request);
    void install(const std::vector<Bytes>& buckets, const std::vector<Word>& table);

private:
    std::uint64_t read_len(std::uint64_t slot, const Tag& kw_key);
    std::uint64_t h_of(const Tag& h_tag) const;
    Bytes read_bucket(std::uint64_t i);

    PageStore& store_;
    OcParams params_;
    ClipLayout layout_;
    std::optional<std::uint64_t> force_h_;
};

/// ClipOSSE client with its length table T. T is shared with the transform built on top.
class ClipOsse {
public:
    ClipOsse(PageStore& store, const ClipConfig& cfg, const ClipKeys& keys, const Database& db,
             std::uint64_t rng_seed = 0);
    ClipOsse(const ClipOsse&) = delete;
    ClipOsse& operator=(const ClipOsse&) = delete;

    const OcParams& params() const { return params_; }
    const ClipLayout& layout() const { return layout_; }
    /// Overflowing ids from setup, one entry per keyword that clipped anything.
    const std::vector<ClipEntry>& clip_list() const { return clip_list_; }
    bool setup_precondition_ok() const { return precondition_ok_; }

    /// Throws UnknownKeyword for absent keywords unless `allow_absent`, which runs a
    /// same-shaped query that returns nothing.
    ClipSearchResult search(const std::string& keyword, bool allow_absent = false);
    ClipUpdateResult update(const std::string& keyword, std::uint64_t id);

    bool knows(const std::string& keyword) const { return slots_.count(keyword) != 0; }
    void set_transcript(Transcript* t) { transport_->set_transcript(t); }
    std::uint64_t storage_words() const { return layout_.total_words; }

private:
    struct KwMaterial {
        Tag key;    // K_w
        Tag h_tag;  // bucket hash input, independent of K_w
        std::uint64_t slot;
        bool known;
    };
    KwMaterial material(const std::string& keyword);
    Tag kw_key(const std::string& keyword) const;
    Tag pad_key(std::uint64_t slot) const;
    std::uint64_t h_of(const Tag& h_tag) const;

    PageStore& store_;
    ClipConfig cfg_;
    OcParams params_;
    ClipKeys keys_;
    ClipLayout layout_;
    std::unique_ptr<ClipServer> server_;
    std::unique_ptr<LoopbackTransport> transport_;
    std::map<std::string, std::uint64_t> slots_;
    std::vector<bool> slot_used_;
    std::vector<ClipEntry> clip_list_;
    bool precondition_ok_ = true;
    std::mt19937_64 rng_;
};

/// Length-table entry: [nonce, ℓ xor prf64(K, nonce)].
std::uint64_t len_pad(const Tag& kw_key, std::uint64_t nonce);

}  // namespace locsse
