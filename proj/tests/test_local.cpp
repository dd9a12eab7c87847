#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "locsse/local_transform.hpp"

using namespace locsse;

namespace {

std::vector<std::uint64_t> sorted(std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<std::uint64_t> iota_ids(std::uint64_t from, std::uint64_t n) {
    std::vector<std::uint64_t> v(n);
    for (std::uint64_t i = 0; i < n; ++i) v[i] = from + i;
    return v;
}

template <class F>
auto in_op(PageStore& s, F f, OpMetrics* m = nullptr) {
    const auto op = s.begin_op("op");
    auto r = f();
    const auto mm = s.end_op(op);
    if (m) *m = mm;
    return r;
}

}  // namespace

TEST_CASE("level_of") {
    CHECK(level_of(0) == 0);
    CHECK(level_of(1) == 0);
    CHECK(level_of(2) == 1);
    CHECK(level_of(3) == 2);
    CHECK(level_of(5) == 3);
    CHECK(level_of(1024) == 10);
    CHECK(level_of(1025) == 11);
}

TEST_CASE("transform params") {
    LtConfig c;
    c.N = 1 << 16;
    const auto P = make_lt_params(c);
    CHECK(P.n_level == 16);
    CHECK(P.layer_N == 4096);
}

TEST_CASE("setup routes a clipped suffix to its level layer") {
    LtConfig cfg;
    cfg.N = 256;
    cfg.force_h = 0;
    PageStore store(16);
    Database db;
    for (std::uint64_t k = 0; k < 12; ++k) db.push_back({"f" + std::to_string(k), iota_ids(3 * k, 3)});
    const auto w_ids = iota_ids(100, 20);
    db.push_back({"w", w_ids});
    LocalSse lt(store, cfg, KeyTree(1), db);
    REQUIRE(lt.clip().clip_list().size() == 1);
    CHECK(lt.clip().clip_list()[0].clipped == std::vector<std::uint64_t>{100, 101, 102});
    const auto o = in_op(store, [&] { return lt.layer(5).search("w"); });
    CHECK(sorted(o.ids) == std::vector<std::uint64_t>{100, 101, 102});
    const auto r = in_op(store, [&] { return lt.search("w"); });
    CHECK(r.level == 5);
    CHECK(sorted(r.ids) == w_ids);
}

TEST_CASE("updates migrate overflow between levels") {
    LtConfig cfg;
    cfg.N = 256;
    cfg.force_h = 0;
    PageStore store(16);
    Database db;
    for (std::uint64_t k = 0; k < 12; ++k) db.push_back({"f" + std::to_string(k), iota_ids(3 * k, 3)});
    LocalSse lt(store, cfg, KeyTree(2), db);
    std::vector<std::uint64_t> expect;
    for (std::uint64_t j = 0; j < 20; ++j) {
        in_op(store, [&] {
            lt.update("w", 200 + j);
            return 0;
        });
        expect.push_back(200 + j);
        const auto r = in_op(store, [&] { return lt.search("w"); });
        CHECK(r.ell == j + 1);
        CHECK(sorted(r.ids) == expect);
    }
}

TEST_CASE("same-level update pattern does not depend on clipping") {
    auto build = [](std::uint64_t filler_len) {
        LtConfig cfg;
        cfg.N = 256;
        cfg.force_h = 0;
        Database db;
        for (std::uint64_t k = 0; k < 12; ++k) db.push_back({"f" + std::to_string(k), iota_ids(10 * k, filler_len)});
        db.push_back({"w", iota_ids(500, 5)});
        return db;
    };
    LtConfig cfg;
    cfg.N = 256;
    cfg.force_h = 0;
    PageStore sa(16), sb(16);
    LocalSse a(sa, cfg, KeyTree(3), build(6), 3), b(sb, cfg, KeyTree(3), build(5), 3);
    OpMetrics ma, mb;
    in_op(sa, [&] { a.update("w", 999); return 0; }, &ma);
    in_op(sb, [&] { b.update("w", 999); return 0; }, &mb);
    CHECK(ma.page_pattern == mb.page_pattern);
    const auto ra = in_op(sa, [&] { return a.search("w"); });
    const auto rb = in_op(sb, [&] { return b.search("w"); });
    CHECK(sorted(ra.ids) == sorted(rb.ids));
}

TEST_CASE("search locality stays constant across list lengths") {
    LtConfig cfg;
    cfg.N = 1 << 12;
    Database db;
    std::uint64_t next = 0;
    for (std::uint64_t ell : {1, 4, 16, 64, 300}) {
        db.push_back({"l" + std::to_string(ell), iota_ids(next, ell)});
        next += ell;
    }
    PageStore store(16);
    LocalSse lt(store, cfg, KeyTree(4), db);
    for (std::uint64_t ell : {1, 4, 16, 64, 300}) {
        OpMetrics m;
        const auto r = in_op(store, [&] { return lt.search("l" + std::to_string(ell)); }, &m);
        CHECK(r.ids.size() == ell);
        CHECK(m.locality <= 5);
    }
    LocalSystem sys(cfg, 4, db);
    OpMetrics m;
    sys.search("l64", &m);
    CHECK(m.locality <= 10);
}

TEST_CASE("local system matches a plaintext oracle with deletes") {
    LtConfig cfg;
    cfg.N = 1 << 10;
    std::mt19937_64 rng(5);
    Database db;
    std::map<std::string, std::multiset<std::uint64_t>> added, deleted;
    std::uint64_t next = 1;
    for (int k = 0; k < 20; ++k) {
        const auto n = rng() % 12;
        db.push_back({"k" + std::to_string(k), iota_ids(next, n)});
        for (auto id : iota_ids(next, n)) added["k" + std::to_string(k)].insert(id);
        next += n;
    }
    LocalSystem sys(cfg, 6, db);
    auto expect = [&](const std::string& w) {
        std::vector<std::uint64_t> a(added[w].begin(), added[w].end()), d(deleted[w].begin(), deleted[w].end());
        return multiset_difference(a, d);
    };
    for (int i = 0; i < 300; ++i) {
        const std::string w = "k" + std::to_string(rng() % 30);
        switch (rng() % 3) {
            case 0: {
                const auto ids = iota_ids(next, 1 + rng() % 3);
                next += ids.size();
                REQUIRE(sys.add(w, ids));
                for (auto id : ids) added[w].insert(id);
                break;
            }
            case 1: {
                const auto live = expect(w);
                if (live.empty()) break;
                const auto id = live[rng() % live.size()];
                REQUIRE(sys.remove(w, {id}));
                deleted[w].insert(id);
                break;
            }
            default: CHECK(sys.search(w) == expect(w));
        }
    }
    for (int k = 0; k < 30; ++k) CHECK(sys.search("k" + std::to_string(k)) == expect("k" + std::to_string(k)));
}
