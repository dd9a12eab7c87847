#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "locsse/alloc.hpp"
#include "locsse/crypto.hpp"
#include "locsse/traced_store.hpp"
#include "locsse/wire.hpp"

namespace locsse {

/// Keyword -> identifier list, in insertion order.
using Database = std::vector<std::pair<std::string, std::vector<std::uint64_t>>>;

/// Identifiers stored in bins and buckets carry a keyed check in their top bits.
inline constexpr int kIdBits = 28;
inline constexpr std::uint64_t kMaxId = (std::uint64_t{1} << kIdBits) - 1;

/// id word = (check << 28) | id, with check the top 36 bits of mix64(key ^ mix64(id)).
Word encode_member(std::uint64_t key, std::uint64_t id);
/// Returns the id if `w` was encoded under `key`.
std::optional<std::uint64_t> decode_member(std::uint64_t key, Word w);

struct LseConfig {
    std::uint64_t N = 1 << 14;
    std::uint64_t p = 16;
    double load_const = 4;
    DeltaMode delta_mode = DeltaMode::LogLogLog;
    int lambda = 128;
};

struct LseParams {
    LseConfig cfg;
    L2CParams l2c;
    std::uint64_t m = 1;
    std::uint64_t capacity_ids = 0;
    std::uint64_t x_max = 1;          // ⌈N/p⌉, clamp for unmasked lengths
    std::uint64_t entry_bytes = 1;    // t_len entry width
    std::uint64_t n_full = 1;         // t_full slots
    std::uint64_t hdr_words = 0;      // bin header: used count + packed tier counts
    std::uint64_t bin_ct_words = 0;
    std::uint64_t bin_stride = 0;     // page-aligned
    std::uint64_t slot_ct_words = 0;
};

LseParams make_lse_params(const LseConfig& cfg);

struct LseKeys {
    EncKey k_enc;
    PrfKey k_prf;
};

LseKeys lse_keygen(std::uint64_t seed);
LseKeys lse_keygen(const KeyTree& tree);

struct LseLayout {
    std::uint64_t bins_base = 0;
    std::uint64_t tlen_base = 0;
    std::uint64_t tlen_words = 0;
    std::uint64_t index_base = 0;
    std::uint64_t slots_base = 0;
    std::uint64_t total_words = 0;
};

enum class RttMode { TwoRtt, Piggyback };
enum class UpdateOutcomeKind { Applied, Rejected };

/// Server half: owns nothing but region addresses in a shared PageStore.
class LseServer {
public:
    LseServer(PageStore& store, const LseParams& params, const LseLayout& layout);
    Bytes handle(const Bytes& request);

    /// Offline install of setup-time regions (inside the caller's open op).
    void install(const std::vector<Bytes>& bins, const std::vector<std::uint8_t>& tlen,
                 const std::vector<Word>& index, const std::vector<Bytes>& slots);
    std::vector<Word> dump_regions() const;

private:
    std::uint64_t read_entry(std::uint64_t slot);
    void write_entry(std::uint64_t slot, std::uint64_t value);
    Bytes read_bin(std::uint64_t i);
    void write_bin(std::uint64_t i, const Bytes& ct);
    std::optional<std::uint64_t> probe_full(std::uint64_t tag64, bool for_insert);
    Bytes read_slot(std::uint64_t i);
    void write_slot(std::uint64_t i, std::uint64_t tag64, const Bytes& ct);
    std::uint64_t unmask(std::uint64_t entry, std::uint64_t mask) const;
    std::vector<std::uint64_t> pair_bins(const Tag& token, std::uint64_t x) const;

    Frame on_search(const Frame& req);
    Frame on_fetch(const Frame& req);
    Frame on_write(const Frame& req);

    PageStore& store_;
    LseParams params_;
    LseLayout layout_;
};

struct LseSearchResult {
    std::vector<std::uint64_t> ids;
    std::uint64_t x = 0;
};

/// Client half plus a loopback channel to its server.
class LayeredSse {
public:
    /// Allocates regions in `store`, builds the EDB from `db` and installs it in one "setup" op.
    LayeredSse(PageStore& store, const LseConfig& cfg, const LseKeys& keys, const Database& db,
               std::uint64_t rng_seed = 0);
    ~LayeredSse();
    LayeredSse(const LayeredSse&) = delete;
    LayeredSse& operator=(const LayeredSse&) = delete;

    const LseParams& params() const { return params_; }
    const LseLayout& layout() const { return layout_; }

    LseSearchResult search(const std::string& keyword);
    /// |ids| ≤ p. An empty list performs a dummy update.
    UpdateOutcomeKind update_add(const std::string& keyword, const std::vector<std::uint64_t>& ids);

    void set_rtt_mode(RttMode mode) { mode_ = mode; }
    RttMode rtt_mode() const { return mode_; }
    bool has_pending() const { return pending_.has_value(); }
    void flush_pending();
    /// Ends the client session; throws PendingLost if a stashed flow was never delivered.
    void close();

    void set_transcript(Transcript* t) { transport_->set_transcript(t); }
    bool knows(const std::string& keyword) const { return slots_.count(keyword) != 0; }
    Bytes serialize_edb() const;
    std::uint64_t storage_words() const { return layout_.total_words; }
    std::uint64_t rejected_updates() const { return rejected_; }

private:
    struct KwMaterial {
        Tag token;
        std::uint64_t mask;
        std::uint64_t slot;
        bool known;
    };
    KwMaterial material(const std::string& keyword);
    std::uint64_t pad_entry(std::uint64_t slot) const;
    Bytes send(const Frame& f);

    PageStore& store_;
    LseParams params_;
    LseKeys keys_;
    LseLayout layout_;
    std::unique_ptr<LseServer> server_;
    std::unique_ptr<LoopbackTransport> transport_;
    std::map<std::string, std::uint64_t> slots_;
    std::vector<bool> slot_used_;
    std::mt19937_64 rng_;
    RttMode mode_ = RttMode::TwoRtt;
    std::optional<Bytes> pending_;
    bool closed_ = false;
    std::uint64_t rejected_ = 0;
};

/// Twin add/delete instances on one store; search returns ids whose add count exceeds their delete count.
class LayeredSystem {
public:
    LayeredSystem(const LseConfig& cfg, std::uint64_t seed, const Database& db);
    std::vector<std::uint64_t> search(const std::string& keyword, OpMetrics* metrics = nullptr);
    /// Splits into p-sized chunks. Returns false if any chunk was rejected.
    bool add(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics = nullptr);
    bool remove(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics = nullptr);
    PageStore& store() { return *store_; }
    LayeredSse& add_instance() { return *add_; }
    LayeredSse& del_instance() { return *del_; }

private:
    bool apply(LayeredSse& inst, const std::string& label, const std::string& keyword,
               const std::vector<std::uint64_t>& ids, OpMetrics* metrics);
    std::unique_ptr<PageStore> store_;
    std::unique_ptr<LayeredSse> add_;
    std::unique_ptr<LayeredSse> del_;
};

/// Multiset difference: each id appears once if its count in `adds` exceeds its count in `dels`.
std::vector<std::uint64_t> multiset_difference(const std::vector<std::uint64_t>& adds,
                                               const std::vector<std::uint64_t>& dels);

}  // namespace locsse
