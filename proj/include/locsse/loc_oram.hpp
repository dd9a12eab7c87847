#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "locsse/crypto.hpp"
#include "locsse/traced_store.hpp"

namespace locsse {

/// ⌈n^(i/c)⌉ computed exactly.
std::uint64_t ceil_root_pow(std::uint64_t n, int i, int c);

struct SortStats {
    std::uint64_t records_moved = 0;  // records read plus records written
    std::uint64_t chunk_ios = 0;      // chunk-sized transfers
};

/// Region of `count` (a power of two) encrypted fixed-size records in a PageStore.
struct RecordRegion {
    std::uint64_t base = 0;
    std::uint64_t count = 0;
    std::uint64_t pt_words = 0;  // plaintext words per record
    std::uint64_t ct_words = 0;  // ciphertext words per record
};

std::vector<std::vector<Word>> read_records(PageStore& store, const EncKey& key, const RecordRegion& r,
                                            std::uint64_t first, std::uint64_t n);
void write_records(PageStore& store, const EncKey& key, const RecordRegion& r, std::uint64_t first,
                   const std::vector<std::vector<Word>>& recs);

/// Chunked bitonic network over the region, ascending by `key_of`. The addresses touched depend
/// only on (count, chunk). Ties are not ordered stably; callers use distinct keys where it matters.
SortStats obl_sort(PageStore& store, const EncKey& key, const RecordRegion& region,
                   const std::function<std::uint64_t(std::span<const Word>)>& key_of, std::uint64_t chunk);

struct OramConfig {
    std::uint64_t n = 64;
    int c = 2;
    std::uint64_t beta = 0;   // value words per block; 0 selects ⌈n^((c−1)/c)⌉
    std::uint64_t chunk = 0;  // sort chunk in records; 0 selects ⌈n^(1/c)⌉·⌈log2 n⌉²
};

struct OramParams {
    std::uint64_t n = 0;
    int c = 2;
    std::uint64_t beta = 0;
    std::uint64_t chunk = 0;
    std::vector<std::uint64_t> data_slots;  // D_i, index 1..c (D_1 = n_1)
    std::vector<std::uint64_t> size;        // n_i, index 1..c
    std::vector<std::uint64_t> trigger;     // e_i = ⌈n^((i−1)/c)⌉, index 2..c
};

OramParams make_oram_params(const OramConfig& cfg);

struct AccessInfo {
    std::vector<Word> value;
    std::vector<std::uint64_t> positions;  // index i = physical position read in A_i (i ≥ 2)
    int found_level = 0;                   // 1 = A_1 scan
    int rebuilt = 0;                       // level rebuilt after this access, 0 if none
    std::uint64_t words_moved = 0;
};

/// Read-only hierarchical ORAM with c levels over a PageStore.
class LocOram {
public:
    LocOram(PageStore& store, const OramConfig& cfg, std::uint64_t seed, const std::vector<std::vector<Word>>& memory);

    const OramParams& params() const { return params_; }
    /// 1 ≤ k ≤ n. Must run inside an open store op.
    AccessInfo access(std::uint64_t k);
    std::uint64_t record_words() const { return rec_ct_words_; }
    std::uint64_t total_words_moved() const { return words_moved_; }

private:
    Prp level_prp(int i) const;
    void rebuild(int level);
    std::vector<Word> read_table(int i);
    void write_table(int i, const std::vector<Word>& t);
    void empty_level(int i);
    std::vector<Word> dummy_record() const;

    PageStore& store_;
    OramParams params_;
    KeyTree keys_;
    EncKey enc_;
    std::uint64_t rec_pt_words_ = 0, rec_ct_words_ = 0, table_ct_words_ = 0;
    std::vector<RecordRegion> levels_;        // index 1..c
    std::vector<std::uint64_t> table_base_;   // index 2..c−1
    RecordRegion scratch_;
    std::vector<std::uint64_t> epoch_;        // PRP generation per level
    std::vector<std::uint64_t> cnt_;          // index 2..c
    std::uint64_t words_moved_ = 0;
};

}  // namespace locsse
