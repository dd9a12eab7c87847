#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "locsse/loc_oram.hpp"

using namespace locsse;

namespace {

std::vector<std::vector<Word>> make_memory(std::uint64_t n, std::uint64_t beta, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Word>> m(n, std::vector<Word>(beta));
    for (auto& v : m)
        for (auto& w : v) w = rng();
    return m;
}

struct SortFixture {
    PageStore store{16};
    EncKey key = KeyTree(1).enc_key("sort");
    RecordRegion region;
    explicit SortFixture(std::uint64_t count) {
        region.count = count;
        region.pt_words = 3;
        region.ct_words = ceil_div(ciphertext_len(24), 8);
        region.base = store.alloc_region(count * region.ct_words);
    }
    void fill(const std::vector<std::uint64_t>& keys) {
        std::vector<std::vector<Word>> recs;
        for (std::uint64_t i = 0; i < keys.size(); ++i) recs.push_back({keys[i], i, keys[i] * 3});
        const auto op = store.begin_op("fill");
        write_records(store, key, region, 0, recs);
        store.end_op(op);
    }
    std::vector<std::uint64_t> sorted_keys(std::uint64_t chunk, std::vector<TraceEntry>* trace = nullptr) {
        store.clear_trace();
        store.set_record_trace(true);
        const auto op = store.begin_op("sort");
        obl_sort(store, key, region, [](std::span<const Word> r) { return r[0]; }, chunk);
        const auto out = read_records(store, key, region, 0, region.count);
        store.end_op(op);
        store.set_record_trace(false);
        if (trace) *trace = store.trace();
        std::vector<std::uint64_t> k;
        for (const auto& r : out) {
            CHECK(r[2] == r[0] * 3);
            k.push_back(r[0]);
        }
        return k;
    }
};

bool same_trace(const std::vector<TraceEntry>& a, const std::vector<TraceEntry>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].kind != b[i].kind || a[i].start != b[i].start || a[i].len != b[i].len) return false;
    return true;
}

}  // namespace

TEST_CASE("exact fractional powers") {
    CHECK(ceil_root_pow(64, 1, 3) == 4);
    CHECK(ceil_root_pow(64, 2, 3) == 16);
    CHECK(ceil_root_pow(256, 1, 3) == 7);
    CHECK(ceil_root_pow(256, 2, 3) == 41);
    CHECK(ceil_root_pow(16, 1, 2) == 4);
    CHECK(ceil_root_pow(17, 1, 2) == 5);
    CHECK(ceil_root_pow(1000, 3, 3) == 1000);
}

TEST_CASE("oram params") {
    OramConfig cfg;
    cfg.n = 64;
    cfg.c = 3;
    const auto P = make_oram_params(cfg);
    CHECK(P.beta == 16);
    CHECK(P.size[1] == 4);
    CHECK(P.trigger[2] == 4);
    CHECK(P.size[2] == 20);
    CHECK(P.trigger[3] == 16);
    CHECK(P.size[3] == 80);
    cfg.beta = 15;
    CHECK_THROWS_AS(make_oram_params(cfg), Error);
    try {
        make_oram_params(cfg);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BlockTooSmall);
    }
}

TEST_CASE("obl_sort sorts and its trace ignores the data") {
    for (std::uint64_t count : {64ULL, 256ULL})
        for (std::uint64_t chunk : {1ULL, 8ULL, 1024ULL}) {
            SortFixture f(count);
            std::mt19937_64 rng(count + chunk);
            std::vector<TraceEntry> first;
            for (int trial = 0; trial < 4; ++trial) {
                std::vector<std::uint64_t> keys(count);
                for (auto& k : keys) k = rng() % 1000;
                if (trial == 1) std::sort(keys.begin(), keys.end());
                if (trial == 2) std::sort(keys.rbegin(), keys.rend());
                f.fill(keys);
                std::vector<TraceEntry> t;
                const auto got = f.sorted_keys(chunk, &t);
                std::sort(keys.begin(), keys.end());
                CHECK(got == keys);
                if (trial == 0)
                    first = t;
                else
                    CHECK(same_trace(first, t));
            }
        }
}

TEST_CASE("initial accesses come from the top level, repeats from A1") {
    PageStore store(16);
    OramConfig cfg;
    cfg.n = 4;
    cfg.c = 2;
    const auto mem = make_memory(4, 2, 1);
    LocOram o(store, cfg, 7, mem);
    const auto op = store.begin_op("a");
    const auto r1 = o.access(3);
    CHECK(r1.value == mem[2]);
    CHECK(r1.found_level == 2);
    CHECK(r1.rebuilt == 0);
    const auto r2 = o.access(3);
    CHECK(r2.value == mem[2]);
    CHECK(r2.found_level == 1);
    CHECK(r2.positions[2] != r1.positions[2]);
    store.end_op(op);
}

TEST_CASE("level-2 rebuild fires after n^(1/c) accesses") {
    PageStore store(16);
    OramConfig cfg;
    cfg.n = 64;
    cfg.c = 3;
    LocOram o(store, cfg, 8, make_memory(64, 16, 2));
    const auto op = store.begin_op("a");
    for (std::uint64_t k = 1; k <= 3; ++k) CHECK(o.access(k).rebuilt == 0);
    CHECK(o.access(4).rebuilt == 2);
    store.end_op(op);
}

TEST_CASE("random accesses return the right values and read fresh positions") {
    for (std::uint64_t n : {16ULL, 64ULL})
        for (int c : {2, 3}) {
            PageStore store(16);
            OramConfig cfg;
            cfg.n = n;
            cfg.c = c;
            const auto P = make_oram_params(cfg);
            const auto mem = make_memory(n, P.beta, n + static_cast<std::uint64_t>(c));
            LocOram o(store, cfg, 9, mem);
            std::mt19937_64 rng(n * 10 + static_cast<std::uint64_t>(c));
            std::vector<std::set<std::uint64_t>> seen(static_cast<std::size_t>(c) + 1);
            std::uint64_t wrong = 0, stale = 0;
            for (std::uint64_t t = 0; t < 10 * n; ++t) {
                const std::uint64_t k = 1 + rng() % n;
                const auto op = store.begin_op("a");
                const auto r = o.access(k);
                store.end_op(op);
                if (r.value != mem[k - 1]) ++wrong;
                for (int i = 2; i <= c; ++i)
                    if (!seen[static_cast<std::size_t>(i)].insert(r.positions[static_cast<std::size_t>(i)]).second) ++stale;
                for (int i = 2; i <= r.rebuilt; ++i) seen[static_cast<std::size_t>(i)].clear();
            }
            CHECK(wrong == 0);
            CHECK(stale == 0);
        }
}
