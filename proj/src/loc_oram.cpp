#include "locsse/loc_oram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "locsse/wire.hpp"

namespace locsse {

namespace {

constexpr std::uint64_t kDummy = std::numeric_limits<std::uint64_t>::max();

using u128 = unsigned __int128;

u128 sat_pow(std::uint64_t x, int e) {
    const u128 cap = ~u128{0} >> 1;
    u128 r = 1;
    for (int k = 0; k < e; ++k) {
        if (x != 0 && r > cap / x) return cap;
        r *= x;
    }
    return r;
}

std::uint64_t floor_pow2(std::uint64_t x) {
    std::uint64_t p = 1;
    while (p * 2 <= x) p *= 2;
    return p;
}

}  // namespace

std::uint64_t ceil_root_pow(std::uint64_t n, int i, int c) {
    if (c <= 0 || i < 0) throw Error(ErrorCode::DomainError, "bad root exponent");
    if (i == 0) return 1;
    if (i % c == 0) return static_cast<std::uint64_t>(sat_pow(n, i / c));
    const u128 target = sat_pow(n, i);
    auto x = static_cast<std::uint64_t>(std::ceil(std::pow(static_cast<long double>(n), static_cast<long double>(i) / c)));
    while (x > 1 && sat_pow(x - 1, c) >= target) --x;
    while (sat_pow(x, c) < target) ++x;
    return x;
}

std::vector<std::vector<Word>> read_records(PageStore& store, const EncKey& key, const RecordRegion& r,
                                            std::uint64_t first, std::uint64_t n) {
    const auto w = store.read_range(r.base + first * r.ct_words, n * r.ct_words);
    std::vector<std::vector<Word>> out(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const Bytes ct = words_to_bytes(std::span(w).subspan(i * r.ct_words, r.ct_words));
        out[i] = bytes_to_words(decrypt_padded(key, ct));
        if (out[i].size() != r.pt_words) throw Error(ErrorCode::DecryptError, "record has wrong size");
    }
    return out;
}

void write_records(PageStore& store, const EncKey& key, const RecordRegion& r, std::uint64_t first,
                   const std::vector<std::vector<Word>>& recs) {
    std::vector<Word> w;
    w.reserve(recs.size() * r.ct_words);
    for (const auto& rec : recs) {
        const Bytes pt = words_to_bytes(rec);
        const auto ct = bytes_to_words(encrypt_padded(key, pt, 8 * r.pt_words).bytes);
        w.insert(w.end(), ct.begin(), ct.end());
    }
    store.write_range(r.base + first * r.ct_words, w);
}

SortStats obl_sort(PageStore& store, const EncKey& key, const RecordRegion& region,
                   const std::function<std::uint64_t(std::span<const Word>)>& key_of, std::uint64_t chunk) {
    SortStats st;
    const std::uint64_t M = region.count;
    if (M <= 1) return st;
    if ((M & (M - 1)) != 0) throw Error(ErrorCode::DomainError, "sort length must be a power of two");
    const std::uint64_t b = floor_pow2(std::clamp<std::uint64_t>(chunk, 1, M));

    auto cmpx = [&](std::vector<Word>& x, std::vector<Word>& y, bool asc) {
        const std::uint64_t kx = key_of(x), ky = key_of(y);
        if (asc ? kx > ky : kx < ky) std::swap(x, y);
    };
    auto io = [&](std::uint64_t recs) {
        st.records_moved += recs;
        st.chunk_ios += 1;
    };

    for (std::uint64_t k = 2; k <= M; k *= 2) {
        for (std::uint64_t j = k / 2; j > 0; j /= 2) {
            if (j >= b) {
                for (std::uint64_t a = 0; a < M; a += b) {
                    if (a & j) continue;
                    auto lo = read_records(store, key, region, a, b);
                    auto hi = read_records(store, key, region, a + j, b);
                    io(b);
                    io(b);
                    for (std::uint64_t t = 0; t < b; ++t) cmpx(lo[t], hi[t], ((a + t) & k) == 0);
                    write_records(store, key, region, a, lo);
                    write_records(store, key, region, a + j, hi);
                    io(b);
                    io(b);
                }
                continue;
            }
            for (std::uint64_t a = 0; a < M; a += b) {
                auto c = read_records(store, key, region, a, b);
                io(b);
                for (std::uint64_t jj = j; jj > 0; jj /= 2)
                    for (std::uint64_t t = 0; t < b; ++t) {
                        const std::uint64_t l = t ^ jj;
                        if (l > t) cmpx(c[t], c[l], ((a + t) & k) == 0);
                    }
                write_records(store, key, region, a, c);
                io(b);
            }
            break;
        }
    }
    return st;
}

OramParams make_oram_params(const OramConfig& cfg) {
    if (cfg.n < 2) throw Error(ErrorCode::BadSpec, "ORAM needs at least 2 blocks");
    if (cfg.c < 2) throw Error(ErrorCode::BadSpec, "ORAM needs at least 2 levels");
    OramParams P;
    P.n = cfg.n;
    P.c = cfg.c;
    const std::uint64_t min_beta = ceil_root_pow(cfg.n, cfg.c - 1, cfg.c);
    P.beta = cfg.beta == 0 ? min_beta : cfg.beta;
    if (P.beta < min_beta)
        throw Error(ErrorCode::BlockTooSmall,
                    "block of " + std::to_string(P.beta) + " words is below n^((c-1)/c) = " + std::to_string(min_beta));
    const auto lg = static_cast<std::uint64_t>(ceil_log2(cfg.n));
    P.chunk = cfg.chunk == 0 ? ceil_root_pow(cfg.n, 1, cfg.c) * lg * lg : cfg.chunk;
    const auto c = static_cast<std::size_t>(cfg.c);
    P.data_slots.assign(c + 1, 0);
    P.size.assign(c + 1, 0);
    P.trigger.assign(c + 1, 0);
    P.data_slots[1] = P.size[1] = ceil_root_pow(cfg.n, 1, cfg.c);
    for (int i = 2; i <= cfg.c; ++i) {
        const auto u = static_cast<std::size_t>(i);
        P.trigger[u] = ceil_root_pow(cfg.n, i - 1, cfg.c);
        P.data_slots[u] = ceil_root_pow(cfg.n, i, cfg.c);
        P.size[u] = P.data_slots[u] + P.trigger[u];
    }
    return P;
}

LocOram::LocOram(PageStore& store, const OramConfig& cfg, std::uint64_t seed,
                 const std::vector<std::vector<Word>>& memory)
    : store_(store), params_(make_oram_params(cfg)), keys_(KeyTree(seed).child("oram")) {
    const OramParams& P = params_;
    if (memory.size() != P.n) throw Error(ErrorCode::BadSpec, "memory must hold exactly n blocks");
    for (const auto& v : memory)
        if (v.size() > P.beta) throw Error(ErrorCode::BadSpec, "block value longer than beta");
    enc_ = keys_.enc_key("enc");
    rec_pt_words_ = 2 + P.beta;
    rec_ct_words_ = ceil_div(ciphertext_len(8 * rec_pt_words_), 8);
    table_ct_words_ = ceil_div(ciphertext_len(8 * P.n), 8);

    const auto c = static_cast<std::size_t>(P.c);
    levels_.assign(c + 1, RecordRegion{});
    table_base_.assign(c + 1, 0);
    auto region = [&](std::uint64_t count) {
        RecordRegion r;
        r.count = count;
        r.pt_words = rec_pt_words_;
        r.ct_words = rec_ct_words_;
        r.base = store_.alloc_region(count * rec_ct_words_);
        return r;
    };
    levels_[1] = region(P.size[1]);
    for (std::size_t i = 2; i + 1 <= c; ++i) table_base_[i] = store_.alloc_region(table_ct_words_);
    std::uint64_t all = P.size[1];
    for (std::size_t i = 2; i <= c; ++i) {
        levels_[i] = region(P.size[i]);
        all += P.size[i];
    }
    scratch_ = region(std::uint64_t{1} << ceil_log2(all));
    epoch_.assign(c + 1, 0);
    cnt_.assign(c + 1, 0);

    const auto op = store_.begin_op("oram-init");
    std::vector<std::vector<Word>> top(P.size[c], dummy_record());
    const Prp pc = level_prp(P.c);
    for (std::uint64_t k = 1; k <= P.n; ++k) {
        auto& rec = top[pc.eval(k - 1)];
        rec.assign(rec_pt_words_, 0);
        rec[0] = k;
        std::copy(memory[k - 1].begin(), memory[k - 1].end(), rec.begin() + 2);
    }
    write_records(store_, enc_, levels_[c], 0, top);
    empty_level(1);
    for (int i = 2; i < P.c; ++i) {
        empty_level(i);
        write_table(i, std::vector<Word>(P.n, 0));
    }
    store_.end_op(op);
    words_moved_ = 0;
}

std::vector<Word> LocOram::dummy_record() const {
    std::vector<Word> r(rec_pt_words_, 0);
    r[0] = kDummy;
    r[1] = kDummy;
    return r;
}

Prp LocOram::level_prp(int i) const {
    const auto u = static_cast<std::size_t>(i);
    return Prp(keys_.prf_key("pi/" + std::to_string(i) + "/" + std::to_string(epoch_[u])), params_.size[u]);
}

std::vector<Word> LocOram::read_table(int i) {
    const auto w = store_.read_range(table_base_[static_cast<std::size_t>(i)], table_ct_words_);
    words_moved_ += table_ct_words_;
    return bytes_to_words(decrypt_padded(enc_, words_to_bytes(w)));
}

void LocOram::write_table(int i, const std::vector<Word>& t) {
    const Bytes pt = words_to_bytes(t);
    store_.write_range(table_base_[static_cast<std::size_t>(i)], bytes_to_words(encrypt_padded(enc_, pt, pt.size()).bytes));
    words_moved_ += table_ct_words_;
}

void LocOram::empty_level(int i) {
    const RecordRegion& r = levels_[static_cast<std::size_t>(i)];
    const std::uint64_t b = std::max<std::uint64_t>(1, params_.chunk);
    for (std::uint64_t a = 0; a < r.count; a += b) {
        const std::uint64_t n = std::min(b, r.count - a);
        write_records(store_, enc_, r, a, std::vector<std::vector<Word>>(n, dummy_record()));
        words_moved_ += n * rec_ct_words_;
    }
}

AccessInfo LocOram::access(std::uint64_t k) {
    const OramParams& P = params_;
    if (k < 1 || k > P.n) throw Error(ErrorCode::IndexOutOfRange, "block index " + std::to_string(k));
    const auto c = static_cast<std::size_t>(P.c);
    AccessInfo info;
    info.positions.assign(c + 1, 0);
    const std::uint64_t moved_before = words_moved_;

    const auto a1 = read_records(store_, enc_, levels_[1], 0, levels_[1].count);
    words_moved_ += levels_[1].count * rec_ct_words_;
    std::vector<std::vector<Word>> tables(c + 1);
    for (int i = 2; i < P.c; ++i) tables[static_cast<std::size_t>(i)] = read_table(i);
    for (std::size_t i = 2; i <= c; ++i) cnt_[i] += 1;

    bool found = false;
    for (const auto& rec : a1)
        if (rec[0] == k) {
            info.value.assign(rec.begin() + 2, rec.end());
            info.found_level = 1;
            found = true;
            break;
        }

    for (std::size_t i = 2; i <= c; ++i) {
        const Prp pi = level_prp(static_cast<int>(i));
        std::uint64_t slot;
        bool real = false;
        if (i < c) {
            const Word t = tables[i][k - 1];
            real = !found && t != 0;
            slot = real ? t - 1 : P.data_slots[i] + cnt_[i] - 1;
        } else {
            real = !found;
            slot = real ? k - 1 : P.n + cnt_[i] - 1;
        }
        const std::uint64_t pos = pi.eval(slot);
        info.positions[i] = pos;
        const auto rec = read_records(store_, enc_, levels_[i], pos, 1)[0];
        words_moved_ += rec_ct_words_;
        if (real) {
            if (rec[0] != k) throw Error(ErrorCode::DecryptError, "block missing from its level");
            info.value.assign(rec.begin() + 2, rec.end());
            info.found_level = static_cast<int>(i);
            found = true;
        }
    }

    std::vector<Word> rec(rec_pt_words_, 0);
    rec[0] = k;
    std::copy(info.value.begin(), info.value.end(), rec.begin() + 2);
    write_records(store_, enc_, levels_[1], cnt_[2] - 1, {rec});
    words_moved_ += rec_ct_words_;

    for (int i = P.c; i >= 2; --i)
        if (cnt_[static_cast<std::size_t>(i)] >= P.trigger[static_cast<std::size_t>(i)]) {
            rebuild(i);
            info.rebuilt = i;
            break;
        }
    info.words_moved = words_moved_ - moved_before;
    return info;
}

void LocOram::rebuild(int level) {
    const OramParams& P = params_;
    const auto L = static_cast<std::size_t>(level);
    const std::uint64_t b = std::max<std::uint64_t>(1, P.chunk);
    std::uint64_t total = 0;
    for (std::size_t j = 1; j <= L; ++j) total += levels_[j].count;
    RecordRegion s = scratch_;
    s.count = std::uint64_t{1} << ceil_log2(total);
    const std::uint64_t rw = rec_ct_words_;

    // gather levels 1..L into scratch, padded with dummies
    std::uint64_t at = 0;
    for (std::size_t j = 1; j <= L; ++j)
        for (std::uint64_t a = 0; a < levels_[j].count; a += b) {
            const std::uint64_t n = std::min(b, levels_[j].count - a);
            write_records(store_, enc_, s, at, read_records(store_, enc_, levels_[j], a, n));
            words_moved_ += 2 * n * rw;
            at += n;
        }
    for (; at < s.count;) {
        const std::uint64_t n = std::min(b, s.count - at);
        write_records(store_, enc_, s, at, std::vector<std::vector<Word>>(n, dummy_record()));
        words_moved_ += n * rw;
        at += n;
    }

    auto by_key = [](std::span<const Word> r) { return r[0]; };
    auto by_dest = [](std::span<const Word> r) { return r[1]; };
    words_moved_ += obl_sort(store_, enc_, s, by_key, b).records_moved * rw;

    // drop duplicate copies of a block
    std::uint64_t prev = kDummy;
    for (std::uint64_t a = 0; a < s.count; a += b) {
        const std::uint64_t n = std::min(b, s.count - a);
        auto recs = read_records(store_, enc_, s, a, n);
        for (auto& r : recs) {
            const std::uint64_t k = r[0];
            if (k != kDummy && k == prev) r = dummy_record();
            prev = k;
        }
        write_records(store_, enc_, s, a, recs);
        words_moved_ += 2 * n * rw;
    }
    words_moved_ += obl_sort(store_, enc_, s, by_key, b).records_moved * rw;

    for (std::size_t j = 2; j <= L; ++j) epoch_[j] += 1;
    const Prp pi = level_prp(level);
    std::vector<Word> table;
    if (level < P.c) table.assign(P.n, 0);
    for (std::uint64_t a = 0; a < s.count; a += b) {
        const std::uint64_t n = std::min(b, s.count - a);
        auto recs = read_records(store_, enc_, s, a, n);
        for (std::uint64_t t = 0; t < n; ++t) {
            const std::uint64_t j = a + t;
            auto& r = recs[t];
            if (r[0] != kDummy && j >= P.data_slots[L]) throw Error(ErrorCode::CapacityExceeded, "level overfull");
            r[1] = j < levels_[L].count ? pi.eval(j) : kDummy;
            if (r[0] != kDummy && level < P.c) table[r[0] - 1] = j + 1;
        }
        write_records(store_, enc_, s, a, recs);
        words_moved_ += 2 * n * rw;
    }
    words_moved_ += obl_sort(store_, enc_, s, by_dest, b).records_moved * rw;

    for (std::uint64_t a = 0; a < levels_[L].count; a += b) {
        const std::uint64_t n = std::min(b, levels_[L].count - a);
        write_records(store_, enc_, levels_[L], a, read_records(store_, enc_, s, a, n));
        words_moved_ += 2 * n * rw;
    }
    if (level < P.c) write_table(level, table);
    empty_level(1);
    for (int j = 2; j < level; ++j) {
        empty_level(j);
        write_table(j, std::vector<Word>(P.n, 0));
    }
    for (std::size_t j = 2; j <= L; ++j) cnt_[j] = 0;
}

}  // namespace locsse
