#include "locsse/layered_sse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <set>
#include <unordered_map>

namespace locsse {

namespace {

enum MsgType : std::uint32_t {
    kSearch = 1,
    kFetch = 2,
    kWrite = 3,
    kPiggy = 4,
    kAck = 5,
    kReply = 6,
};

constexpr std::uint32_t kEdbVersion = 1;

Bytes tag_bytes(const Tag& t) { return Bytes(t.begin(), t.end()); }

Tag bytes_tag(const Bytes& b) {
    if (b.size() != 32) throw Error(ErrorCode::Protocol, "expected 32-byte token");
    Tag t;
    std::memcpy(t.data(), b.data(), 32);
    return t;
}

Tag ball_tag(const Tag& token, std::uint64_t x) { return prf_indexed(token, "ball", x); }

std::uint64_t full_tag64(const Tag& token, std::uint64_t j) {
    const std::uint64_t t = tag_prefix64(prf_indexed(token, "full", j));
    return t == 0 ? 1 : t;
}

/// Decrypted bin: used word count, per-tier ball counts, id words.
struct BinPt {
    std::uint64_t used = 0;
    std::vector<std::uint64_t> counts;
    std::vector<Word> words;
};

std::uint64_t count_words(int num_tiers) { return (static_cast<std::uint64_t>(num_tiers) + 2) / 2; }

Bytes encode_bin(const LseParams& P, const EncKey& k, const BinPt& b) {
    std::vector<Word> w(P.hdr_words + P.capacity_ids, 0);
    w[0] = b.used;
    for (std::size_t t = 0; t < b.counts.size(); ++t)
        w[1 + t / 2] |= (b.counts[t] & 0xffffffffULL) << (32 * (t % 2));
    std::copy(b.words.begin(), b.words.end(), w.begin() + static_cast<std::ptrdiff_t>(P.hdr_words));
    const Bytes pt = words_to_bytes(w);
    return encrypt_padded(k, pt, pt.size()).bytes;
}

BinPt decode_bin(const LseParams& P, const EncKey& k, const Bytes& ct) {
    const auto w = bytes_to_words(decrypt_padded(k, ct));
    if (w.size() != P.hdr_words + P.capacity_ids) throw Error(ErrorCode::DecryptError, "bin has wrong size");
    BinPt b;
    b.used = w[0];
    b.counts.assign(static_cast<std::size_t>(P.l2c.num_tiers) + 1, 0);
    for (std::size_t t = 0; t < b.counts.size(); ++t) b.counts[t] = (w[1 + t / 2] >> (32 * (t % 2))) & 0xffffffffULL;
    b.words.assign(w.begin() + static_cast<std::ptrdiff_t>(P.hdr_words), w.end());
    return b;
}

Bytes encode_slot(const LseParams& P, const EncKey& k, const std::vector<Word>& ids) {
    std::vector<Word> w(P.cfg.p, 0);
    std::copy(ids.begin(), ids.end(), w.begin());
    const Bytes pt = words_to_bytes(w);
    return encrypt_padded(k, pt, pt.size()).bytes;
}

std::vector<std::uint64_t> pair_of(const LseParams& P, const Tag& token, std::uint64_t x) {
    const auto [a1, a2] = hash_choices(ball_tag(token, x), P.m);
    if (a1 == a2) return {a1};
    return {a1, a2};
}

void append_unique(std::vector<std::uint64_t>& out, const std::vector<std::uint64_t>& add) {
    for (auto v : add)
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
}

}  // namespace

Word encode_member(std::uint64_t key, std::uint64_t id) {
    const std::uint64_t check = mix64(key ^ mix64(id)) >> kIdBits;
    return (check << kIdBits) | (id & kMaxId);
}

std::optional<std::uint64_t> decode_member(std::uint64_t key, Word w) {
    const std::uint64_t id = w & kMaxId;
    if (encode_member(key, id) == w) return id;
    return std::nullopt;
}

LseParams make_lse_params(const LseConfig& cfg) {
    if (cfg.N == 0 || cfg.p == 0) throw Error(ErrorCode::BadSpec, "N and p must be positive");
    LseParams P;
    P.cfg = cfg;
    const double w_max = std::max(1.0, static_cast<double>(cfg.N) / static_cast<double>(cfg.p));
    P.l2c = make_l2c_params(w_max, cfg.delta_mode, cfg.load_const, cfg.lambda);
    P.m = P.l2c.m;
    P.capacity_ids = static_cast<std::uint64_t>(
        std::ceil(static_cast<double>(cfg.p) * cfg.load_const * P.l2c.delta * llog(w_max) - 1e-9));
    P.x_max = std::max<std::uint64_t>(1, ceil_div(cfg.N, cfg.p));
    const int bits = std::max(ceil_log2(cfg.N), ceil_log2(P.x_max + 2));
    P.entry_bytes = std::max<std::uint64_t>(1, ceil_div(static_cast<std::uint64_t>(bits), 8));
    P.n_full = std::max<std::uint64_t>(1, cfg.N / cfg.p);
    P.hdr_words = 1 + count_words(P.l2c.num_tiers);
    P.bin_ct_words = ceil_div(ciphertext_len(8 * (P.hdr_words + P.capacity_ids)), 8);
    P.bin_stride = ceil_div(P.bin_ct_words, cfg.p) * cfg.p;
    P.slot_ct_words = ceil_div(ciphertext_len(8 * cfg.p), 8);
    return P;
}

LseKeys lse_keygen(const KeyTree& tree) { return {tree.enc_key("lse"), tree.prf_key("lse")}; }
LseKeys lse_keygen(std::uint64_t seed) { return lse_keygen(KeyTree(seed)); }

// ---------------------------------------------------------------- server

LseServer::LseServer(PageStore& store, const LseParams& params, const LseLayout& layout)
    : store_(store), params_(params), layout_(layout) {}

std::uint64_t LseServer::unmask(std::uint64_t entry, std::uint64_t mask) const {
    return std::min(entry ^ mask, params_.x_max);
}

std::uint64_t LseServer::read_entry(std::uint64_t slot) {
    const std::uint64_t off = slot * params_.entry_bytes;
    const std::uint64_t w0 = off / 8, w1 = (off + params_.entry_bytes - 1) / 8;
    const auto w = store_.read_range(layout_.tlen_base + w0, w1 - w0 + 1);
    const Bytes b = words_to_bytes(w);
    std::uint64_t v = 0;
    for (std::uint64_t i = params_.entry_bytes; i-- > 0;) v = (v << 8) | b[off - 8 * w0 + i];
    return v;
}

void LseServer::write_entry(std::uint64_t slot, std::uint64_t value) {
    const std::uint64_t off = slot * params_.entry_bytes;
    const std::uint64_t w0 = off / 8, w1 = (off + params_.entry_bytes - 1) / 8;
    const auto w = store_.read_range(layout_.tlen_base + w0, w1 - w0 + 1);
    Bytes b = words_to_bytes(w);
    for (std::uint64_t i = 0; i < params_.entry_bytes; ++i) b[off - 8 * w0 + i] = static_cast<std::uint8_t>(value >> (8 * i));
    store_.write_range(layout_.tlen_base + w0, bytes_to_words(b));
}

Bytes LseServer::read_bin(std::uint64_t i) {
    return words_to_bytes(store_.read_range(layout_.bins_base + i * params_.bin_stride, params_.bin_ct_words));
}

void LseServer::write_bin(std::uint64_t i, const Bytes& ct) {
    if (ct.size() != 8 * params_.bin_ct_words) throw Error(ErrorCode::Protocol, "bin ciphertext has wrong size");
    store_.write_range(layout_.bins_base + i * params_.bin_stride, bytes_to_words(ct));
}

std::optional<std::uint64_t> LseServer::probe_full(std::uint64_t tag64, bool for_insert) {
    const std::uint64_t n = params_.n_full;
    const std::uint64_t h = tag64 % n;
    for (std::uint64_t k = 0; k < n; ++k) {
        const std::uint64_t pos = (h + k) % n;
        const Word w = store_.read_range(layout_.index_base + pos, 1)[0];
        if (for_insert) {
            if (w == 0) return pos;
        } else {
            if (w == tag64) return pos;
            if (w == 0) return std::nullopt;
        }
    }
    return std::nullopt;
}

Bytes LseServer::read_slot(std::uint64_t i) {
    return words_to_bytes(store_.read_range(layout_.slots_base + i * params_.slot_ct_words, params_.slot_ct_words));
}

void LseServer::write_slot(std::uint64_t i, std::uint64_t tag64, const Bytes& ct) {
    const Word t[1] = {tag64};
    store_.write_range(layout_.index_base + i, t);
    store_.write_range(layout_.slots_base + i * params_.slot_ct_words, bytes_to_words(ct));
}

std::vector<std::uint64_t> LseServer::pair_bins(const Tag& token, std::uint64_t x) const {
    return pair_of(params_, token, x);
}

Frame LseServer::on_search(const Frame& req) {
    if (req.fields.size() != 3) throw Error(ErrorCode::Protocol, "search expects 3 fields");
    const std::uint64_t slot = bytes_u64(req.fields[0]);
    const Tag token = bytes_tag(req.fields[1]);
    const std::uint64_t mask = bytes_u64(req.fields[2]);
    if (slot >= params_.cfg.N) throw Error(ErrorCode::Protocol, "t_len slot out of range");
    const std::uint64_t entry = read_entry(slot);
    const std::uint64_t xe = std::max<std::uint64_t>(1, unmask(entry, mask));
    Frame r{kReply, {u64_bytes(entry), u64_bytes(xe - 1)}};
    for (std::uint64_t j = 1; j < xe; ++j) {
        const auto pos = probe_full(full_tag64(token, j), false);
        r.fields.push_back(pos ? read_slot(*pos) : Bytes{});
    }
    const auto bins = pair_bins(token, xe);
    r.fields.push_back(u64_bytes(bins.size()));
    for (auto b : bins) {
        r.fields.push_back(u64_bytes(b));
        r.fields.push_back(read_bin(b));
    }
    return r;
}

Frame LseServer::on_fetch(const Frame& req) {
    if (req.fields.size() != 3) throw Error(ErrorCode::Protocol, "fetch expects 3 fields");
    const std::uint64_t slot = bytes_u64(req.fields[0]);
    const Tag token = bytes_tag(req.fields[1]);
    const std::uint64_t mask = bytes_u64(req.fields[2]);
    if (slot >= params_.cfg.N) throw Error(ErrorCode::Protocol, "t_len slot out of range");
    const std::uint64_t entry = read_entry(slot);
    const std::uint64_t xe = std::max<std::uint64_t>(1, unmask(entry, mask));
    std::vector<std::uint64_t> bins = pair_bins(token, xe);
    append_unique(bins, pair_bins(token, xe + 1));
    Frame r{kReply, {u64_bytes(entry), u64_bytes(bins.size())}};
    for (auto b : bins) {
        r.fields.push_back(u64_bytes(b));
        r.fields.push_back(read_bin(b));
    }
    return r;
}

Frame LseServer::on_write(const Frame& req) {
    if (req.fields.size() < 3) throw Error(ErrorCode::Protocol, "write too short");
    const std::uint64_t slot = bytes_u64(req.fields[0]);
    const std::uint64_t entry = bytes_u64(req.fields[1]);
    const std::uint64_t nb = bytes_u64(req.fields[2]);
    if (req.fields.size() != 3 + 2 * nb + 3) throw Error(ErrorCode::Protocol, "write field count");
    write_entry(slot, entry);
    for (std::uint64_t i = 0; i < nb; ++i) {
        const std::uint64_t idx = bytes_u64(req.fields[3 + 2 * i]);
        if (idx >= params_.m) throw Error(ErrorCode::Protocol, "bin index out of range");
        write_bin(idx, req.fields[4 + 2 * i]);
    }
    const std::size_t f = 3 + 2 * nb;
    if (bytes_u64(req.fields[f]) != 0) {
        const std::uint64_t tag64 = bytes_u64(req.fields[f + 1]);
        const auto pos = probe_full(tag64, true);
        if (!pos) throw Error(ErrorCode::CapacityExceeded, "t_full table full");
        write_slot(*pos, tag64, req.fields[f + 2]);
    }
    return Frame{kAck, {}};
}

Bytes LseServer::handle(const Bytes& request) {
    const Frame req = decode_frame(request);
    switch (req.type) {
        case kSearch: return encode_frame(on_search(req));
        case kFetch: return encode_frame(on_fetch(req));
        case kWrite: return encode_frame(on_write(req));
        case kPiggy: {
            if (req.fields.size() != 2) throw Error(ErrorCode::Protocol, "piggyback expects 2 fields");
            handle(req.fields[0]);
            return handle(req.fields[1]);
        }
        default: throw Error(ErrorCode::Protocol, "unknown message type " + std::to_string(req.type));
    }
}

void LseServer::install(const std::vector<Bytes>& bins, const std::vector<std::uint8_t>& tlen,
                        const std::vector<Word>& index, const std::vector<Bytes>& slots) {
    std::vector<Word> region(params_.m * params_.bin_stride, 0);
    for (std::uint64_t i = 0; i < params_.m; ++i) {
        const auto w = bytes_to_words(bins[i]);
        std::copy(w.begin(), w.end(), region.begin() + static_cast<std::ptrdiff_t>(i * params_.bin_stride));
    }
    store_.write_range(layout_.bins_base, region);
    store_.write_range(layout_.tlen_base, bytes_to_words(tlen));
    store_.write_range(layout_.index_base, index);
    region.assign(params_.n_full * params_.slot_ct_words, 0);
    for (std::uint64_t i = 0; i < params_.n_full; ++i) {
        const auto w = bytes_to_words(slots[i]);
        std::copy(w.begin(), w.end(), region.begin() + static_cast<std::ptrdiff_t>(i * params_.slot_ct_words));
    }
    store_.write_range(layout_.slots_base, region);
}

std::vector<Word> LseServer::dump_regions() const {
    std::vector<Word> out;
    for (auto [base, len] : {std::pair{layout_.bins_base, params_.m * params_.bin_stride},
                             std::pair{layout_.tlen_base, layout_.tlen_words},
                             std::pair{layout_.index_base, params_.n_full},
                             std::pair{layout_.slots_base, params_.n_full * params_.slot_ct_words}}) {
        const auto w = store_.snapshot(base, len);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

// ---------------------------------------------------------------- client

LayeredSse::LayeredSse(PageStore& store, const LseConfig& cfg, const LseKeys& keys, const Database& db,
                       std::uint64_t rng_seed)
    : store_(store), params_(make_lse_params(cfg)), keys_(keys), rng_(rng_seed) {
    const LseParams& P = params_;
    const std::uint64_t N = cfg.N, p = cfg.p;

    std::uint64_t total = 0;
    std::set<std::string> seen;
    for (const auto& [kw, ids] : db) {
        if (!seen.insert(kw).second) throw Error(ErrorCode::BadSpec, "duplicate keyword '" + kw + "'");
        total += ids.size();
        for (auto id : ids)
            if (id > kMaxId) throw Error(ErrorCode::BadSpec, "identifier exceeds 28 bits");
    }
    if (total > N) throw Error(ErrorCode::BadSpec, "database holds more than N identifiers");

    layout_.bins_base = store_.alloc_region(P.m * P.bin_stride, p);
    layout_.tlen_words = ceil_div(N * P.entry_bytes, 8);
    layout_.tlen_base = store_.alloc_region(layout_.tlen_words, p);
    layout_.index_base = store_.alloc_region(P.n_full, p);
    layout_.slots_base = store_.alloc_region(P.n_full * P.slot_ct_words, p);
    layout_.total_words = P.m * P.bin_stride + layout_.tlen_words + P.n_full + P.n_full * P.slot_ct_words;
    server_ = std::make_unique<LseServer>(store_, P, layout_);
    transport_ = std::make_unique<LoopbackTransport>([this](const Bytes& b) { return server_->handle(b); });
    slot_used_.assign(N, false);

    std::vector<BinPt> bins(P.m);
    for (auto& b : bins) {
        b.counts.assign(static_cast<std::size_t>(P.l2c.num_tiers) + 1, 0);
        b.words.assign(P.capacity_ids, 0);
    }
    std::vector<Word> index(P.n_full, 0);
    std::vector<std::vector<Word>> slot_ids(P.n_full);
    std::vector<std::uint64_t> entries(N);
    for (std::uint64_t s = 0; s < N; ++s) entries[s] = pad_entry(s);

    for (const auto& [kw, ids] : db) {
        if (ids.empty()) continue;
        KwMaterial mat = material(kw);
        slots_[kw] = mat.slot;
        slot_used_[mat.slot] = true;
        const std::uint64_t l = ids.size(), x = ceil_div(l, p);
        for (std::uint64_t j = 1; j < x; ++j) {
            const std::uint64_t t = full_tag64(mat.token, j);
            std::uint64_t pos = t % P.n_full;
            while (index[pos] != 0) pos = (pos + 1) % P.n_full;
            index[pos] = t;
            slot_ids[pos].assign(ids.begin() + static_cast<std::ptrdiff_t>((j - 1) * p),
                                 ids.begin() + static_cast<std::ptrdiff_t>(j * p));
        }
        const std::uint64_t rem = l - (x - 1) * p;
        const Tag bt = ball_tag(mat.token, x);
        const std::uint64_t key = tag_prefix64(bt);
        const int tier = tier_of(static_cast<double>(rem) / static_cast<double>(p), P.m);
        const auto [a1, a2] = hash_choices(bt, P.m);
        const auto t = static_cast<std::size_t>(tier);
        const std::uint64_t bi = choose_bin(tier, a1, a2, bins[a1].counts[t], bins[a2].counts[t]);
        BinPt& b = bins[bi];
        if (b.used + rem > P.capacity_ids)
            throw Error(ErrorCode::CapacityExceeded, "bin " + std::to_string(bi) + " overflows during setup");
        for (std::uint64_t k = 0; k < rem; ++k) b.words[b.used++] = encode_member(key, ids[(x - 1) * p + k]);
        b.counts[t] += 1;
        entries[mat.slot] = x ^ mat.mask;
    }

    std::vector<Bytes> bin_cts(P.m), slot_cts(P.n_full);
    for (std::uint64_t i = 0; i < P.m; ++i) bin_cts[i] = encode_bin(P, keys_.k_enc, bins[i]);
    for (std::uint64_t i = 0; i < P.n_full; ++i) slot_cts[i] = encode_slot(P, keys_.k_enc, slot_ids[i]);
    std::vector<std::uint8_t> tlen(8 * layout_.tlen_words, 0);
    for (std::uint64_t s = 0; s < N; ++s)
        for (std::uint64_t i = 0; i < P.entry_bytes; ++i)
            tlen[s * P.entry_bytes + i] = static_cast<std::uint8_t>(entries[s] >> (8 * i));

    const std::uint64_t op = store_.begin_op("setup");
    server_->install(bin_cts, tlen, index, slot_cts);
    store_.end_op(op);
}

LayeredSse::~LayeredSse() {
    if (pending_ && !closed_) std::cerr << "locsse: PendingLost: client dropped with an undelivered update flow\n";
}

std::uint64_t LayeredSse::pad_entry(std::uint64_t slot) const {
    const std::uint64_t mask = params_.entry_bytes >= 8 ? ~0ULL : ((1ULL << (8 * params_.entry_bytes)) - 1);
    return tag_prefix64(prf_indexed(keys_.k_prf, "pad", slot)) & mask;
}

LayeredSse::KwMaterial LayeredSse::material(const std::string& keyword) {
    KwMaterial m;
    m.token = prf(keys_.k_prf, "tok/" + keyword);
    const std::uint64_t emask = params_.entry_bytes >= 8 ? ~0ULL : ((1ULL << (8 * params_.entry_bytes)) - 1);
    m.mask = tag_prefix64(prf(keys_.k_prf, "mask/" + keyword)) & emask;
    auto it = slots_.find(keyword);
    m.known = it != slots_.end();
    if (m.known) {
        m.slot = it->second;
    } else {
        const std::uint64_t N = params_.cfg.N;
        std::uint64_t s = tag_prefix64(prf(keys_.k_prf, "slot/" + keyword)) % N;
        for (std::uint64_t k = 0; k < N && slot_used_[s]; ++k) s = (s + 1) % N;
        if (slot_used_[s]) throw Error(ErrorCode::CapacityExceeded, "t_len has no free slot");
        m.slot = s;
    }
    return m;
}

Bytes LayeredSse::send(const Frame& f) {
    Bytes req = encode_frame(f);
    if (pending_) {
        req = encode_frame(Frame{kPiggy, {*pending_, req}});
        pending_.reset();
    }
    return transport_->roundtrip(req);
}

LseSearchResult LayeredSse::search(const std::string& keyword) {
    const KwMaterial mat = material(keyword);
    const std::uint64_t mask = mat.known ? mat.mask : pad_entry(mat.slot);
    const Frame r = decode_frame(send(Frame{kSearch, {u64_bytes(mat.slot), tag_bytes(mat.token), u64_bytes(mask)}}));
    LseSearchResult out;
    if (r.fields.size() < 3) throw Error(ErrorCode::Protocol, "short search reply");
    const std::uint64_t entry = bytes_u64(r.fields[0]);
    const std::uint64_t nfull = bytes_u64(r.fields[1]);
    const std::uint64_t x = mat.known ? std::min(entry ^ mask, params_.x_max) : 0;
    out.x = x;
    for (std::uint64_t j = 0; j < nfull; ++j) {
        const Bytes& ct = r.fields[2 + j];
        if (ct.empty()) throw Error(ErrorCode::DecryptError, "missing full page");
        const auto ids = bytes_to_words(decrypt_padded(keys_.k_enc, ct));
        out.ids.insert(out.ids.end(), ids.begin(), ids.end());
    }
    const std::size_t f = 2 + nfull;
    const std::uint64_t nb = bytes_u64(r.fields[f]);
    if (x == 0) return out;
    const std::uint64_t key = tag_prefix64(ball_tag(mat.token, x));
    for (std::uint64_t i = 0; i < nb; ++i) {
        const BinPt b = decode_bin(params_, keys_.k_enc, r.fields[f + 2 + 2 * i]);
        for (std::uint64_t k = 0; k < b.used; ++k)
            if (auto id = decode_member(key, b.words[k])) out.ids.push_back(*id);
    }
    return out;
}

UpdateOutcomeKind LayeredSse::update_add(const std::string& keyword, const std::vector<std::uint64_t>& ids) {
    const LseParams& P = params_;
    const std::uint64_t p = P.cfg.p;
    if (ids.size() > p) throw Error(ErrorCode::BadSpec, "update list longer than one page");
    for (auto id : ids)
        if (id > kMaxId) throw Error(ErrorCode::BadSpec, "identifier exceeds 28 bits");
    const KwMaterial mat = material(keyword);
    const std::uint64_t mask = mat.known ? mat.mask : pad_entry(mat.slot);
    const Frame r = decode_frame(send(Frame{kFetch, {u64_bytes(mat.slot), tag_bytes(mat.token), u64_bytes(mask)}}));
    if (r.fields.size() < 2) throw Error(ErrorCode::Protocol, "short fetch reply");
    const std::uint64_t entry = bytes_u64(r.fields[0]);
    const std::uint64_t nb = bytes_u64(r.fields[1]);
    const std::uint64_t x = mat.known ? std::min(entry ^ mask, P.x_max) : 0;

    std::vector<std::uint64_t> order;
    std::unordered_map<std::uint64_t, BinPt> orig;
    for (std::uint64_t i = 0; i < nb; ++i) {
        const std::uint64_t idx = bytes_u64(r.fields[2 + 2 * i]);
        order.push_back(idx);
        orig[idx] = decode_bin(P, keys_.k_enc, r.fields[3 + 2 * i]);
    }
    auto bins = orig;
    std::uint64_t new_x = x;
    std::optional<std::pair<std::uint64_t, std::vector<Word>>> full;

    auto place = [&](std::uint64_t bx, const std::vector<std::uint64_t>& content) {
        const Tag bt = ball_tag(mat.token, bx);
        const std::uint64_t key = tag_prefix64(bt);
        const int tier = tier_of(static_cast<double>(content.size()) / static_cast<double>(p), P.m);
        const auto [a1, a2] = hash_choices(bt, P.m);
        const auto t = static_cast<std::size_t>(tier);
        const std::uint64_t bi = choose_bin(tier, a1, a2, bins.at(a1).counts[t], bins.at(a2).counts[t]);
        BinPt& b = bins.at(bi);
        b.counts[t] += 1;
        for (auto id : content) {
            if (b.used < P.capacity_ids) b.words[b.used] = encode_member(key, id);
            ++b.used;
        }
    };

    if (!ids.empty()) {
        if (x == 0) {
            place(1, ids);
            new_x = 1;
        } else {
            const std::uint64_t key = tag_prefix64(ball_tag(mat.token, x));
            std::vector<std::uint64_t> rem_ids;
            std::vector<std::pair<std::uint64_t, std::uint64_t>> where;
            for (auto bi : pair_of(P, mat.token, x)) {
                const BinPt& b = bins.at(bi);
                for (std::uint64_t k = 0; k < b.used; ++k)
                    if (auto id = decode_member(key, b.words[k])) {
                        rem_ids.push_back(*id);
                        where.push_back({bi, k});
                    }
            }
            const std::uint64_t rem = rem_ids.size();
            auto make_residual = [&] {
                for (auto [bi, k] : where) bins.at(bi).words[k] = rng_();
            };
            if (rem + ids.size() <= p) {
                const int t_old = tier_of(static_cast<double>(rem) / static_cast<double>(p), P.m);
                const int t_new = tier_of(static_cast<double>(rem + ids.size()) / static_cast<double>(p), P.m);
                if (rem > 0 && t_old == t_new) {
                    BinPt& b = bins.at(where.front().first);
                    for (auto id : ids) {
                        if (b.used < P.capacity_ids) b.words[b.used] = encode_member(key, id);
                        ++b.used;
                    }
                } else {
                    make_residual();
                    std::vector<std::uint64_t> merged = rem_ids;
                    merged.insert(merged.end(), ids.begin(), ids.end());
                    place(x, merged);
                }
            } else {
                std::vector<std::uint64_t> merged = rem_ids;
                merged.insert(merged.end(), ids.begin(), ids.end());
                make_residual();
                full = std::make_pair(full_tag64(mat.token, x),
                                      std::vector<Word>(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(p)));
                place(x + 1, std::vector<std::uint64_t>(merged.begin() + static_cast<std::ptrdiff_t>(p), merged.end()));
                new_x = x + 1;
            }
        }
    }

    bool overflow = false;
    for (const auto& [idx, b] : bins) overflow = overflow || b.used > P.capacity_ids;
    const bool applied = !overflow;
    const auto& out_bins = applied ? bins : orig;

    Frame w{kWrite, {u64_bytes(mat.slot)}};
    std::uint64_t new_entry = entry;
    if (applied && !ids.empty()) new_entry = new_x ^ mat.mask;
    w.fields.push_back(u64_bytes(new_entry));
    w.fields.push_back(u64_bytes(order.size()));
    for (auto idx : order) {
        w.fields.push_back(u64_bytes(idx));
        w.fields.push_back(encode_bin(P, keys_.k_enc, out_bins.at(idx)));
    }
    if (applied && full) {
        w.fields.push_back(u64_bytes(1));
        w.fields.push_back(u64_bytes(full->first));
        w.fields.push_back(encode_slot(P, keys_.k_enc, full->second));
    } else {
        w.fields.push_back(u64_bytes(0));
        w.fields.push_back(u64_bytes(0));
        w.fields.push_back(Bytes{});
    }
    if (applied && !ids.empty() && !mat.known) {
        slots_[keyword] = mat.slot;
        slot_used_[mat.slot] = true;
    }

    if (mode_ == RttMode::Piggyback) {
        pending_ = encode_frame(w);
    } else {
        const Frame ack = decode_frame(send(w));
        if (ack.type != kAck) throw Error(ErrorCode::Protocol, "write not acknowledged");
    }
    if (!applied) ++rejected_;
    return applied ? UpdateOutcomeKind::Applied : UpdateOutcomeKind::Rejected;
}

void LayeredSse::flush_pending() {
    if (!pending_) return;
    const Bytes req = std::move(*pending_);
    pending_.reset();
    const Frame ack = decode_frame(transport_->roundtrip(req));
    if (ack.type != kAck) throw Error(ErrorCode::Protocol, "flush not acknowledged");
}

void LayeredSse::close() {
    closed_ = true;
    if (pending_) {
        pending_.reset();
        throw Error(ErrorCode::PendingLost, "client closed with an undelivered update flow");
    }
}

Bytes LayeredSse::serialize_edb() const {
    Bytes out;
    auto put = [&](std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put(kEdbVersion, 4);
    put(params_.cfg.N, 8);
    put(params_.cfg.p, 8);
    put(params_.m, 8);
    put(params_.capacity_ids, 8);
    const Bytes body = words_to_bytes(server_->dump_regions());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

// ---------------------------------------------------------------- twin system

std::vector<std::uint64_t> multiset_difference(const std::vector<std::uint64_t>& adds,
                                               const std::vector<std::uint64_t>& dels) {
    std::map<std::uint64_t, std::int64_t> c;
    for (auto a : adds) c[a] += 1;
    for (auto d : dels) c[d] -= 1;
    std::vector<std::uint64_t> out;
    for (const auto& [id, n] : c)
        if (n > 0) out.push_back(id);
    return out;
}

LayeredSystem::LayeredSystem(const LseConfig& cfg, std::uint64_t seed, const Database& db)
    : store_(std::make_unique<PageStore>(cfg.p)) {
    const KeyTree tree(seed);
    add_ = std::make_unique<LayeredSse>(*store_, cfg, lse_keygen(tree.child("add")), db, tree.salt("add"));
    del_ = std::make_unique<LayeredSse>(*store_, cfg, lse_keygen(tree.child("del")), Database{}, tree.salt("del"));
}

std::vector<std::uint64_t> LayeredSystem::search(const std::string& keyword, OpMetrics* metrics) {
    const auto op = store_->begin_op("search");
    const auto a = add_->search(keyword);
    const auto d = del_->search(keyword);
    const auto m = store_->end_op(op);
    if (metrics) *metrics = m;
    return multiset_difference(a.ids, d.ids);
}

bool LayeredSystem::apply(LayeredSse& inst, const std::string& label, const std::string& keyword,
                          const std::vector<std::uint64_t>& ids, OpMetrics* metrics) {
    const std::uint64_t p = inst.params().cfg.p;
    const auto op = store_->begin_op(label);
    bool ok = true;
    std::size_t i = 0;
    do {
        const std::size_t n = std::min<std::size_t>(p, ids.size() - i);
        const std::vector<std::uint64_t> chunk(ids.begin() + static_cast<std::ptrdiff_t>(i),
                                               ids.begin() + static_cast<std::ptrdiff_t>(i + n));
        ok = inst.update_add(keyword, chunk) == UpdateOutcomeKind::Applied && ok;
        i += n;
    } while (i < ids.size());
    const auto m = store_->end_op(op);
    if (metrics) *metrics = m;
    return ok;
}

bool LayeredSystem::add(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics) {
    return apply(*add_, "add", keyword, ids, metrics);
}

bool LayeredSystem::remove(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics) {
    return apply(*del_, "delete", keyword, ids, metrics);
}

}  // namespace locsse
