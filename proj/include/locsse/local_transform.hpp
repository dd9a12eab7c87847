#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "locsse/clip_osse.hpp"
#include "locsse/layered_sse.hpp"

namespace locsse {

/// ⌈log2 max(ℓ, 1)⌉
int level_of(std::uint64_t ell);

struct LtConfig {
    std::uint64_t N = 1 << 14;
    std::uint64_t page_size = 16;  // store page size used for metrics
    double alpha = 4;
    double d = 1;
    double load_const = 4;
    DeltaMode delta_mode = DeltaMode::LogLogLog;
    std::optional<std::uint64_t> force_h;
};

struct LtParams {
    std::uint64_t N = 0;
    std::uint64_t layer_N = 0;  // ⌈N / log2 N⌉
    int n_level = 0;            // ⌈log2 N⌉; layers 0..n_level
};

LtParams make_lt_params(const LtConfig& cfg);

struct LtSearchResult {
    std::vector<std::uint64_t> ids;
    std::uint64_t ell = 0;
    int level = 0;
};

/// ClipOSSE for the bulk plus one LayeredSSE layer per power-of-two list size for the overflow.
class LocalSse {
public:
    LocalSse(PageStore& store, const LtConfig& cfg, const KeyTree& keys, const Database& db, std::uint64_t rng_seed = 0);

    const LtParams& params() const { return params_; }
    /// Two round trips: length table plus superbucket, then the layer of level(ℓ). Absent keywords return nothing.
    LtSearchResult search(const std::string& keyword);
    /// Adds one id. Throws UpdateRejected if a layer rejects.
    void update(const std::string& keyword, std::uint64_t id);

    ClipOsse& clip() { return *clip_; }
    LayeredSse& layer(int i) { return *layers_.at(static_cast<std::size_t>(i)); }
    std::uint64_t storage_words() const;
    void set_transcript(Transcript* t);

private:
    PageStore& store_;
    LtConfig cfg_;
    LtParams params_;
    std::unique_ptr<ClipOsse> clip_;
    std::vector<std::unique_ptr<LayeredSse>> layers_;
};

/// Twin add/delete transforms on one store.
class LocalSystem {
public:
    LocalSystem(const LtConfig& cfg, std::uint64_t seed, const Database& db);
    std::vector<std::uint64_t> search(const std::string& keyword, OpMetrics* metrics = nullptr);
    bool add(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics = nullptr);
    bool remove(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics = nullptr);
    PageStore& store() { return *store_; }
    LocalSse& add_instance() { return *add_; }
    LocalSse& del_instance() { return *del_; }

private:
    bool apply(LocalSse& inst, const std::string& label, const std::string& keyword,
               const std::vector<std::uint64_t>& ids, OpMetrics* metrics);
    std::unique_ptr<PageStore> store_;
    std::unique_ptr<LocalSse> add_;
    std::unique_ptr<LocalSse> del_;
};

}  // namespace locsse
