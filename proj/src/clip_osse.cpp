#include "locsse/clip_osse.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace locsse {

namespace {

enum MsgType : std::uint32_t {
    kSearch = 1,
    kFetch = 2,
    kWrite = 3,
    kAck = 5,
    kReply = 6,
};

Bytes tag_bytes(const Tag& t) { return Bytes(t.begin(), t.end()); }

Tag bytes_tag(const Bytes& b) {
    if (b.size() != 32) throw Error(ErrorCode::Protocol, "expected 32-byte key");
    Tag t;
    std::copy(b.begin(), b.end(), t.begin());
    return t;
}

std::uint64_t h_for(const Tag& h_tag, std::uint64_t m, const std::optional<std::uint64_t>& force_h) {
    if (force_h) return *force_h % m;
    return oc_hash(h_tag, m);
}

struct BucketPt {
    std::uint64_t count = 0;
    std::vector<Word> words;
};

Bytes encode_bucket(const OcParams& P, const EncKey& k, const BucketPt& b) {
    std::vector<Word> w(1 + P.tau, 0);
    w[0] = b.count;
    std::copy(b.words.begin(), b.words.end(), w.begin() + 1);
    const Bytes pt = words_to_bytes(w);
    return encrypt_padded(k, pt, pt.size()).bytes;
}

BucketPt decode_bucket(const OcParams& P, const EncKey& k, std::span<const std::uint8_t> ct) {
    const auto w = bytes_to_words(decrypt_padded(k, ct));
    if (w.size() != 1 + P.tau || w[0] > P.tau) throw Error(ErrorCode::DecryptError, "bucket has wrong shape");
    BucketPt b;
    b.count = w[0];
    b.words.assign(w.begin() + 1, w.end());
    return b;
}

}  // namespace

OcParams make_oc_params(std::uint64_t N, double alpha, double d) {
    if (N < 2) throw Error(ErrorCode::BadSpec, "N must be at least 2");
    OcParams P;
    P.N = N;
    P.alpha = alpha;
    P.d = d;
    const double n = static_cast<double>(N);
    P.m = std::uint64_t{1} << ceil_log2(static_cast<std::uint64_t>(std::ceil(n / llog(n) - 1e-9)));
    const double ll = std::log2(std::max(1.0, std::log2(n)));
    P.tau = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(alpha * ll - 1e-9)));
    return P;
}

std::uint64_t oc_hash(const Tag& w_tag, std::uint64_t m) { return hash_choices(w_tag, m).first; }

BucketRange oc_fetch_range(std::uint64_t m, std::uint64_t h, std::uint64_t ell) {
    const std::uint64_t lp = std::uint64_t{1} << ceil_log2(std::max<std::uint64_t>(ell, 1));
    if (lp >= m) return {0, m};
    return {(h / lp) * lp, lp};
}

std::vector<std::uint64_t> oc_fetch(std::uint64_t m, std::uint64_t h, std::uint64_t ell) {
    const auto r = oc_fetch_range(m, h, ell);
    std::vector<std::uint64_t> out(r.count);
    for (std::uint64_t i = 0; i < r.count; ++i) out[i] = r.first + i;
    return out;
}

std::uint64_t oc_add(std::uint64_t m, std::uint64_t h, std::uint64_t ell) {
    ell %= m;
    const std::uint64_t lp = std::uint64_t{1} << ceil_log2(ell + 1);
    const std::uint64_t i = h / lp;
    if ((2 * h / lp) % 2 == 0) return lp * i + ell;
    return lp * i + ell - lp / 2;
}

ClipKeys clip_keygen(const KeyTree& tree) { return {tree.enc_key("clip"), tree.prf_key("clip")}; }

std::uint64_t len_pad(const Tag& kw_key, std::uint64_t nonce) {
    return tag_prefix64(prf_indexed(kw_key, "len", nonce));
}

// ---------------------------------------------------------------- server

ClipServer::ClipServer(PageStore& store, const OcParams& params, const ClipLayout& layout,
                       std::optional<std::uint64_t> force_h)
    : store_(store), params_(params), layout_(layout), force_h_(force_h) {}

std::uint64_t ClipServer::read_len(std::uint64_t slot, const Tag& kw_key) {
    if (slot >= layout_.table_slots) throw Error(ErrorCode::Protocol, "length slot out of range");
    const auto e = store_.read_range(layout_.table_base + 2 * slot, 2);
    return e[1] ^ len_pad(kw_key, e[0]);
}

std::uint64_t ClipServer::h_of(const Tag& h_tag) const { return h_for(h_tag, params_.m, force_h_); }

Bytes ClipServer::read_bucket(std::uint64_t i) {
    return words_to_bytes(
        store_.read_range(layout_.buckets_base + i * layout_.bucket_ct_words, layout_.bucket_ct_words));
}

Bytes ClipServer::handle(const Bytes& request) {
    const Frame req = decode_frame(request);
    switch (req.type) {
        case kSearch: {
            if (req.fields.size() != 3) throw Error(ErrorCode::Protocol, "search expects 3 fields");
            const std::uint64_t ell = read_len(bytes_u64(req.fields[0]), bytes_tag(req.fields[1]));
            const auto r = oc_fetch_range(params_.m, h_of(bytes_tag(req.fields[2])), std::max<std::uint64_t>(ell, 1));
            const auto words =
                store_.read_range(layout_.buckets_base + r.first * layout_.bucket_ct_words, r.count * layout_.bucket_ct_words);
            return encode_frame(Frame{kReply, {u64_bytes(ell), u64_bytes(r.first), u64_bytes(r.count), words_to_bytes(words)}});
        }
        case kFetch: {
            if (req.fields.size() != 3) throw Error(ErrorCode::Protocol, "fetch expects 3 fields");
            const std::uint64_t ell = read_len(bytes_u64(req.fields[0]), bytes_tag(req.fields[1]));
            const std::uint64_t i = oc_add(params_.m, h_of(bytes_tag(req.fields[2])), ell);
            return encode_frame(Frame{kReply, {u64_bytes(ell), u64_bytes(i), read_bucket(i)}});
        }
        case kWrite: {
            if (req.fields.size() != 5) throw Error(ErrorCode::Protocol, "write expects 5 fields");
            const std::uint64_t slot = bytes_u64(req.fields[0]);
            const std::uint64_t i = bytes_u64(req.fields[3]);
            if (slot >= layout_.table_slots || i >= params_.m) throw Error(ErrorCode::Protocol, "write out of range");
            const Word e[2] = {bytes_u64(req.fields[1]), bytes_u64(req.fields[2])};
            store_.write_range(layout_.table_base + 2 * slot, e);
            if (req.fields[4].size() != 8 * layout_.bucket_ct_words) throw Error(ErrorCode::Protocol, "bucket size");
            store_.write_range(layout_.buckets_base + i * layout_.bucket_ct_words, bytes_to_words(req.fields[4]));
            return encode_frame(Frame{kAck, {}});
        }
        default: throw Error(ErrorCode::Protocol, "unknown message type " + std::to_string(req.type));
    }
}

void ClipServer::install(const std::vector<Bytes>& buckets, const std::vector<Word>& table) {
    std::vector<Word> region;
    region.reserve(params_.m * layout_.bucket_ct_words);
    for (const auto& b : buckets) {
        const auto w = bytes_to_words(b);
        region.insert(region.end(), w.begin(), w.end());
    }
    store_.write_range(layout_.buckets_base, region);
    store_.write_range(layout_.table_base, table);
}

// ---------------------------------------------------------------- client

ClipOsse::ClipOsse(PageStore& store, const ClipConfig& cfg, const ClipKeys& keys, const Database& db,
                   std::uint64_t rng_seed)
    : store_(store), cfg_(cfg), params_(make_oc_params(cfg.N, cfg.alpha, cfg.d)), keys_(keys), rng_(rng_seed) {
    const OcParams& P = params_;
    std::uint64_t total = 0, longest = 0;
    std::set<std::string> seen;
    for (const auto& [kw, ids] : db) {
        if (!seen.insert(kw).second) throw Error(ErrorCode::BadSpec, "duplicate keyword '" + kw + "'");
        total += ids.size();
        longest = std::max<std::uint64_t>(longest, ids.size());
        for (auto id : ids)
            if (id > kMaxId) throw Error(ErrorCode::BadSpec, "identifier exceeds 28 bits");
    }
    if (total > cfg.N) throw Error(ErrorCode::BadSpec, "database holds more than N identifiers");
    const double n = static_cast<double>(cfg.N);
    precondition_ok_ = static_cast<double>(longest) <= n / std::pow(std::log2(n), cfg.d);

    layout_.bucket_ct_words = ceil_div(ciphertext_len(8 * (1 + P.tau)), 8);
    layout_.table_slots = cfg.N;
    layout_.buckets_base = store_.alloc_region(P.m * layout_.bucket_ct_words);
    layout_.table_base = store_.alloc_region(2 * layout_.table_slots);
    layout_.total_words = P.m * layout_.bucket_ct_words + 2 * layout_.table_slots;
    server_ = std::make_unique<ClipServer>(store_, P, layout_, cfg.force_h);
    transport_ = std::make_unique<LoopbackTransport>([this](const Bytes& b) { return server_->handle(b); });
    slot_used_.assign(layout_.table_slots, false);

    std::vector<BucketPt> buckets(P.m);
    for (auto& b : buckets) b.words.assign(P.tau, 0);
    std::vector<std::uint64_t> lens(layout_.table_slots, 0);
    std::vector<Tag> table_keys(layout_.table_slots);
    for (std::uint64_t s = 0; s < layout_.table_slots; ++s) table_keys[s] = pad_key(s);

    for (const auto& [kw, ids] : db) {
        if (ids.empty()) continue;
        const KwMaterial mat = material(kw);
        slots_[kw] = mat.slot;
        slot_used_[mat.slot] = true;
        lens[mat.slot] = ids.size();
        table_keys[mat.slot] = mat.key;
        const std::uint64_t h = h_of(mat.h_tag), member = tag_prefix64(mat.key);
        ClipEntry entry{kw, ids.size(), {}};
        for (std::uint64_t j = 0; j < ids.size(); ++j) {
            BucketPt& b = buckets[oc_add(P.m, h, j)];
            if (b.count < P.tau)
                b.words[b.count++] = encode_member(member, ids[j]);
            else
                entry.clipped.push_back(ids[j]);
        }
        if (!entry.clipped.empty()) clip_list_.push_back(std::move(entry));
    }

    std::vector<Bytes> cts(P.m);
    for (std::uint64_t i = 0; i < P.m; ++i) cts[i] = encode_bucket(P, keys_.k_enc, buckets[i]);
    std::vector<Word> table(2 * layout_.table_slots);
    for (std::uint64_t s = 0; s < layout_.table_slots; ++s) {
        const std::uint64_t nonce = rng_();
        table[2 * s] = nonce;
        table[2 * s + 1] = lens[s] ^ len_pad(table_keys[s], nonce);
    }
    const auto op = store_.begin_op("setup");
    server_->install(cts, table);
    store_.end_op(op);
}

Tag ClipOsse::kw_key(const std::string& keyword) const { return prf(keys_.k_prf, "kw/" + keyword); }

Tag ClipOsse::pad_key(std::uint64_t slot) const { return prf_indexed(keys_.k_prf, "clip-pad", slot); }

std::uint64_t ClipOsse::h_of(const Tag& h_tag) const { return h_for(h_tag, params_.m, cfg_.force_h); }

ClipOsse::KwMaterial ClipOsse::material(const std::string& keyword) {
    KwMaterial m;
    m.h_tag = prf(keys_.k_prf, "H/" + keyword);
    auto it = slots_.find(keyword);
    m.known = it != slots_.end();
    if (m.known) {
        m.slot = it->second;
        m.key = kw_key(keyword);
        return m;
    }
    const std::uint64_t n = layout_.table_slots;
    std::uint64_t s = tag_prefix64(prf(keys_.k_prf, "cslot/" + keyword)) % n;
    for (std::uint64_t k = 0; k < n && slot_used_[s]; ++k) s = (s + 1) % n;
    if (slot_used_[s]) throw Error(ErrorCode::CapacityExceeded, "length table has no free slot");
    m.slot = s;
    m.key = kw_key(keyword);
    return m;
}

ClipSearchResult ClipOsse::search(const std::string& keyword, bool allow_absent) {
    KwMaterial mat = material(keyword);
    if (!mat.known && !allow_absent) throw Error(ErrorCode::UnknownKeyword, "unknown keyword '" + keyword + "'");
    const Tag sent = mat.known ? mat.key : pad_key(mat.slot);
    const Frame r = decode_frame(
        transport_->roundtrip(encode_frame(Frame{kSearch, {u64_bytes(mat.slot), tag_bytes(sent), tag_bytes(mat.h_tag)}})));
    if (r.type != kReply || r.fields.size() != 4) throw Error(ErrorCode::Protocol, "bad search reply");
    ClipSearchResult out;
    if (!mat.known) return out;
    out.ell = bytes_u64(r.fields[0]);
    const std::uint64_t count = bytes_u64(r.fields[2]);
    const std::uint64_t ctb = 8 * layout_.bucket_ct_words;
    if (r.fields[3].size() != count * ctb) throw Error(ErrorCode::Protocol, "bucket payload size");
    const std::uint64_t member = tag_prefix64(mat.key);
    for (std::uint64_t i = 0; i < count; ++i) {
        const BucketPt b = decode_bucket(params_, keys_.k_enc, std::span(r.fields[3]).subspan(i * ctb, ctb));
        for (std::uint64_t k = 0; k < b.count; ++k)
            if (auto id = decode_member(member, b.words[k])) out.ids.push_back(*id);
    }
    return out;
}

ClipUpdateResult ClipOsse::update(const std::string& keyword, std::uint64_t id) {
    if (id > kMaxId) throw Error(ErrorCode::BadSpec, "identifier exceeds 28 bits");
    KwMaterial mat = material(keyword);
    const Tag sent = mat.known ? mat.key : pad_key(mat.slot);
    const Frame r = decode_frame(
        transport_->roundtrip(encode_frame(Frame{kFetch, {u64_bytes(mat.slot), tag_bytes(sent), tag_bytes(mat.h_tag)}})));
    if (r.type != kReply || r.fields.size() != 3) throw Error(ErrorCode::Protocol, "bad fetch reply");
    ClipUpdateResult out;
    out.ell_before = mat.known ? bytes_u64(r.fields[0]) : 0;
    const std::uint64_t idx = bytes_u64(r.fields[1]);
    BucketPt b = decode_bucket(params_, keys_.k_enc, r.fields[2]);
    if (b.count < params_.tau)
        b.words[b.count++] = encode_member(tag_prefix64(mat.key), id);
    else
        out.clipped = id;
    const std::uint64_t nonce = rng_();
    const std::uint64_t value = (out.ell_before + 1) ^ len_pad(mat.key, nonce);
    const Frame w{kWrite,
                  {u64_bytes(mat.slot), u64_bytes(nonce), u64_bytes(value), u64_bytes(idx),
                   encode_bucket(params_, keys_.k_enc, b)}};
    const Frame ack = decode_frame(transport_->roundtrip(encode_frame(w)));
    if (ack.type != kAck) throw Error(ErrorCode::Protocol, "write not acknowledged");
    if (!mat.known) {
        slots_[keyword] = mat.slot;
        slot_used_[mat.slot] = true;
    }
    return out;
}

}  // namespace locsse
