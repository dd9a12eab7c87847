#include "locsse/local_transform.hpp"

#include <algorithm>
#include <cmath>

namespace locsse {

int level_of(std::uint64_t ell) { return ceil_log2(std::max<std::uint64_t>(ell, 1)); }

LtParams make_lt_params(const LtConfig& cfg) {
    if (cfg.N < 4) throw Error(ErrorCode::BadSpec, "N must be at least 4");
    LtParams P;
    P.N = cfg.N;
    P.n_level = ceil_log2(cfg.N);
    P.layer_N = static_cast<std::uint64_t>(std::ceil(static_cast<double>(cfg.N) / std::log2(static_cast<double>(cfg.N)) - 1e-9));
    return P;
}

LocalSse::LocalSse(PageStore& store, const LtConfig& cfg, const KeyTree& keys, const Database& db,
                   std::uint64_t rng_seed)
    : store_(store), cfg_(cfg), params_(make_lt_params(cfg)) {
    ClipConfig cc;
    cc.N = cfg.N;
    cc.alpha = cfg.alpha;
    cc.d = cfg.d;
    cc.force_h = cfg.force_h;
    clip_ = std::make_unique<ClipOsse>(store_, cc, clip_keygen(keys.child("clip")), db, rng_seed);

    std::vector<Database> per_level(static_cast<std::size_t>(params_.n_level) + 1);
    for (const auto& e : clip_->clip_list())
        per_level[static_cast<std::size_t>(level_of(e.ell))].push_back({e.keyword, e.clipped});
    for (int i = 0; i <= params_.n_level; ++i) {
        LseConfig lc;
        lc.N = params_.layer_N;
        lc.p = std::uint64_t{1} << i;
        lc.load_const = cfg.load_const;
        lc.delta_mode = cfg.delta_mode;
        const KeyTree lk = keys.child("layer" + std::to_string(i));
        layers_.push_back(std::make_unique<LayeredSse>(store_, lc, lse_keygen(lk), per_level[static_cast<std::size_t>(i)],
                                                       rng_seed + 1 + static_cast<std::uint64_t>(i)));
    }
}

LtSearchResult LocalSse::search(const std::string& keyword) {
    const auto c = clip_->search(keyword, true);
    LtSearchResult out;
    out.ell = c.ell;
    out.level = level_of(c.ell);
    const auto o = layer(out.level).search(keyword);
    out.ids = c.ids;
    out.ids.insert(out.ids.end(), o.ids.begin(), o.ids.end());
    return out;
}

void LocalSse::update(const std::string& keyword, std::uint64_t id) {
    const auto u = clip_->update(keyword, id);
    std::vector<std::uint64_t> c;
    if (u.clipped) c.push_back(*u.clipped);
    const int i = level_of(u.ell_before), j = level_of(u.ell_before + 1);
    UpdateOutcomeKind r;
    if (i == j) {
        r = layer(i).update_add(keyword, c);
    } else {
        auto s = layer(i).search(keyword).ids;
        s.insert(s.end(), c.begin(), c.end());
        r = layer(j).update_add(keyword, s);
    }
    if (r == UpdateOutcomeKind::Rejected)
        throw Error(ErrorCode::UpdateRejected, "layer rejected overflow update for '" + keyword + "'");
}

std::uint64_t LocalSse::storage_words() const {
    std::uint64_t w = clip_->storage_words();
    for (const auto& l : layers_) w += l->storage_words();
    return w;
}

void LocalSse::set_transcript(Transcript* t) {
    clip_->set_transcript(t);
    for (auto& l : layers_) l->set_transcript(t);
}

LocalSystem::LocalSystem(const LtConfig& cfg, std::uint64_t seed, const Database& db)
    : store_(std::make_unique<PageStore>(cfg.page_size)) {
    const KeyTree tree(seed);
    add_ = std::make_unique<LocalSse>(*store_, cfg, tree.child("add"), db, tree.salt("add"));
    del_ = std::make_unique<LocalSse>(*store_, cfg, tree.child("del"), Database{}, tree.salt("del"));
}

std::vector<std::uint64_t> LocalSystem::search(const std::string& keyword, OpMetrics* metrics) {
    const auto op = store_->begin_op("search");
    const auto a = add_->search(keyword);
    const auto d = del_->search(keyword);
    const auto m = store_->end_op(op);
    if (metrics) *metrics = m;
    return multiset_difference(a.ids, d.ids);
}

bool LocalSystem::apply(LocalSse& inst, const std::string& label, const std::string& keyword,
                        const std::vector<std::uint64_t>& ids, OpMetrics* metrics) {
    const auto op = store_->begin_op(label);
    bool ok = true;
    try {
        for (auto id : ids) inst.update(keyword, id);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UpdateRejected) {
            store_->end_op(op);
            throw;
        }
        ok = false;
    }
    const auto m = store_->end_op(op);
    if (metrics) *metrics = m;
    return ok;
}

bool LocalSystem::add(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics) {
    return apply(*add_, "add", keyword, ids, metrics);
}

bool LocalSystem::remove(const std::string& keyword, const std::vector<std::uint64_t>& ids, OpMetrics* metrics) {
    return apply(*del_, "delete", keyword, ids, metrics);
}

}  // namespace locsse
