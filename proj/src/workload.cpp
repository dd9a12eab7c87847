#include "locsse/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "locsse/clip_osse.hpp"
#include "locsse/loc_oram.hpp"
#include "locsse/local_transform.hpp"

namespace locsse {

namespace {

constexpr char kDbMagic[4] = {'L', 'S', 'D', 'B'};
constexpr std::uint32_t kDbVersion = 1;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Keyword i of a workload: a PRF token rendered as 16 hex digits.
std::string keyword_token(const PrfKey& k, std::uint64_t i) { return hex64(tag_prefix64(prf_indexed(k, "kw", i))); }

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t label) {
    std::seed_seq seq{seed, label};
    return std::mt19937_64(seq);
}

std::vector<std::uint64_t> list_lengths(const WorkloadSpec& spec, std::uint64_t total, std::mt19937_64& rng) {
    std::vector<std::uint64_t> len;
    switch (spec.dist) {
        case Distribution::Single: {
            const auto ell = static_cast<std::uint64_t>(spec.dist_param);
            for (std::uint64_t s = 0; s + ell <= total; s += ell) len.push_back(ell);
            break;
        }
        case Distribution::Uniform: {
            const auto ell = static_cast<std::uint64_t>(spec.dist_param);
            std::uniform_int_distribution<std::uint64_t> pick(1, 2 * ell - 1);
            for (std::uint64_t s = 0; s < total;) {
                const std::uint64_t l = std::min(pick(rng), total - s);
                len.push_back(l);
                s += l;
            }
            break;
        }
        case Distribution::Zipf: {
            const std::uint64_t k = std::max<std::uint64_t>(1, total / 16);
            double h = 0;
            for (std::uint64_t r = 1; r <= k; ++r) h += std::pow(static_cast<double>(r), -spec.dist_param);
            std::uint64_t s = 0;
            for (std::uint64_t r = 1; r <= k && s < total; ++r) {
                const double want = static_cast<double>(total) * std::pow(static_cast<double>(r), -spec.dist_param) / h;
                const std::uint64_t l = std::min(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(want)), total - s);
                len.push_back(l);
                s += l;
            }
            break;
        }
        case Distribution::Script: break;
    }
    if (spec.cap_longest) {
        const double lg = std::log2(static_cast<double>(std::max<std::uint64_t>(spec.N, 2)));
        const auto cap = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(static_cast<double>(spec.N) / std::pow(lg, spec.d)));
        for (auto& l : len) l = std::min(l, cap);
    }
    return len;
}

void put32(std::ostream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>(v >> (8 * i)));
}
void put64(std::ostream& os, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>(v >> (8 * i)));
}
std::uint64_t get(std::istream& is, int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof()) throw Error(ErrorCode::BadSpec, "truncated database file");
        v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(c)) << (8 * i);
    }
    return v;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

ReportRow base_row(const WorkloadSpec& spec, std::uint64_t op_id, const std::string& label) {
    ReportRow r;
    r.scheme = scheme_name(spec.scheme);
    r.seed = spec.seed;
    r.N = spec.N;
    r.p = spec.p;
    r.op_id = op_id;
    r.label = label;
    return r;
}

void fill_metrics(ReportRow& r, const OpMetrics& m, std::uint64_t answer_words, std::uint64_t p) {
    r.locality = m.locality;
    r.read_eff = read_efficiency(m, answer_words);
    r.page_eff = page_efficiency(m, answer_words, p);
}

const char* op_label(OpKind k) {
    switch (k) {
        case OpKind::Search: return "search";
        case OpKind::Add: return "add";
        case OpKind::Delete: return "delete";
    }
    return "?";
}

std::vector<WorkOp> load_ops(const WorkloadSpec& spec, const Database& db) {
    if (spec.dist != Distribution::Script) return gen_ops(spec, db);
    std::ifstream in(spec.script_path);
    if (!in) throw Error(ErrorCode::BadSpec, "cannot open script " + spec.script_path);
    return read_script(in);
}

void mismatch(RunResult& res, std::uint64_t op_id, const std::string& w) {
    if (res.mismatches++ == 0) res.message = "search mismatch at op " + std::to_string(op_id) + " keyword " + w;
}

/// Twin add/delete systems: layered and local-layered.
template <class Sys>
void run_dynamic(const WorkloadSpec& spec, Sys& sys, Oracle& oracle, const std::vector<WorkOp>& ops,
                 double storage_eff, RunResult& res) {
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const WorkOp& op = ops[i];
        const std::uint64_t op_id = i + 1;
        OpMetrics m;
        std::uint64_t answer = op.ids.size();
        bool ok = true;
        if (op.kind == OpKind::Search) {
            auto got = sys.search(op.keyword, &m);
            std::sort(got.begin(), got.end());
            ++res.searches;
            answer = got.size();
            if (got != oracle.lookup(op.keyword)) mismatch(res, op_id, op.keyword);
        } else if (op.kind == OpKind::Add) {
            ok = sys.add(op.keyword, op.ids, &m);
            if (ok) oracle.add(op.keyword, op.ids);
        } else {
            ok = sys.remove(op.keyword, op.ids, &m);
            if (ok) oracle.remove(op.keyword, op.ids);
        }
        if (!ok) ++res.overflows;
        ReportRow row = base_row(spec, op_id, op_label(op.kind));
        fill_metrics(row, m, answer, spec.p);
        row.storage_eff = storage_eff;
        row.overflow_count = res.overflows;
        res.rows.push_back(std::move(row));
        if (!ok) {
            res.message = "update rejected at op " + std::to_string(op_id);
            return;
        }
    }
}

void run_layered(const WorkloadSpec& spec, const Database& db, const std::vector<WorkOp>& ops, RunResult& res) {
    LseConfig cfg;
    cfg.N = spec.N;
    cfg.p = spec.p;
    cfg.load_const = spec.load_const;
    cfg.delta_mode = spec.delta_mode;
    cfg.lambda = spec.lambda;
    LayeredSystem sys(cfg, spec.seed, db);
    if (spec.piggyback) {
        sys.add_instance().set_rtt_mode(RttMode::Piggyback);
        sys.del_instance().set_rtt_mode(RttMode::Piggyback);
    }
    Oracle oracle(db);
    const double se = static_cast<double>(sys.add_instance().storage_words()) / static_cast<double>(spec.N);
    run_dynamic(spec, sys, oracle, ops, se, res);
    const auto op = sys.store().begin_op("flush");
    sys.add_instance().flush_pending();
    sys.del_instance().flush_pending();
    sys.store().end_op(op);
}

void run_local(const WorkloadSpec& spec, const Database& db, const std::vector<WorkOp>& ops, RunResult& res) {
    LtConfig cfg;
    cfg.N = spec.N;
    cfg.page_size = spec.p;
    cfg.alpha = spec.alpha;
    cfg.d = spec.d;
    cfg.load_const = spec.load_const;
    cfg.delta_mode = spec.delta_mode;
    LocalSystem sys(cfg, spec.seed, db);
    Oracle oracle(db);
    const double se = static_cast<double>(sys.add_instance().storage_words()) / static_cast<double>(spec.N);
    run_dynamic(spec, sys, oracle, ops, se, res);
}

void run_clip(const WorkloadSpec& spec, const Database& db, const std::vector<WorkOp>& ops, RunResult& res) {
    ClipConfig cfg;
    cfg.N = spec.N;
    cfg.alpha = spec.alpha;
    cfg.d = spec.d;
    PageStore store(spec.p);
    ClipOsse clip(store, cfg, clip_keygen(KeyTree(spec.seed).child("clip-run")), db, KeyTree(spec.seed).salt("clip-run"));
    Oracle oracle(db);
    std::map<std::string, std::vector<std::uint64_t>> clipped;
    for (const auto& e : clip.clip_list()) {
        clipped[e.keyword] = e.clipped;
        res.overflows += e.clipped.size();
    }
    const double se = static_cast<double>(clip.storage_words()) / static_cast<double>(spec.N);
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const WorkOp& op = ops[i];
        const std::uint64_t op_id = i + 1;
        if (op.kind == OpKind::Delete) throw Error(ErrorCode::BadSpec, "clip has no delete");
        const auto h = store.begin_op(op_label(op.kind));
        std::uint64_t answer = op.ids.size();
        if (op.kind == OpKind::Search) {
            const bool known = clip.knows(op.keyword);
            const auto r = clip.search(op.keyword, true);
            const auto m = store.end_op(h);
            auto got = r.ids;
            if (known) {
                const auto& c = clipped[op.keyword];
                got.insert(got.end(), c.begin(), c.end());
            }
            std::sort(got.begin(), got.end());
            ++res.searches;
            answer = r.ids.size();
            if (got != oracle.lookup(op.keyword)) mismatch(res, op_id, op.keyword);
            ReportRow row = base_row(spec, op_id, "search");
            fill_metrics(row, m, answer, spec.p);
            row.storage_eff = se;
            row.overflow_count = res.overflows;
            res.rows.push_back(std::move(row));
            continue;
        }
        for (auto id : op.ids) {
            const auto u = clip.update(op.keyword, id);
            if (u.clipped) {
                clipped[op.keyword].push_back(*u.clipped);
                ++res.overflows;
            }
        }
        const auto m = store.end_op(h);
        oracle.add(op.keyword, op.ids);
        ReportRow row = base_row(spec, op_id, "add");
        fill_metrics(row, m, answer, spec.p);
        row.storage_eff = se;
        row.overflow_count = res.overflows;
        res.rows.push_back(std::move(row));
    }
}

void run_oram(const WorkloadSpec& spec, RunResult& res) {
    OramConfig cfg;
    cfg.n = spec.N;
    cfg.c = spec.oram_c;
    cfg.beta = spec.oram_beta;
    const OramParams P = make_oram_params(cfg);
    auto rng = stream(spec.seed, 3);
    std::vector<std::vector<Word>> mem(P.n, std::vector<Word>(P.beta));
    for (auto& b : mem)
        for (auto& w : b) w = rng();
    PageStore store(spec.p);
    LocOram oram(store, cfg, spec.seed, mem);
    const double se = static_cast<double>(store.words_in_use()) / static_cast<double>(P.n * P.beta);
    for (std::uint64_t i = 1; i <= spec.ops; ++i) {
        const std::uint64_t k = 1 + rng() % P.n;
        const auto h = store.begin_op("access");
        const auto a = oram.access(k);
        const auto m = store.end_op(h);
        ++res.searches;
        if (a.value != mem[k - 1]) mismatch(res, i, std::to_string(k));
        ReportRow row = base_row(spec, i, a.rebuilt ? "access+rebuild" + std::to_string(a.rebuilt) : "access");
        fill_metrics(row, m, P.beta, spec.p);
        row.storage_eff = se;
        res.rows.push_back(std::move(row));
    }
}

void run_alloc(const WorkloadSpec& spec, RunResult& res) {
    const double w_max = static_cast<double>(spec.N) / static_cast<double>(spec.p);
    for (std::uint64_t t = 0; t < spec.trials; ++t) {
        const AllocRow a = alloc_trial(spec.seed, w_max, spec.p, spec.delta_mode, spec.load_const, t);
        if (a.overflowed) ++res.overflows;
        ReportRow row = base_row(spec, t, "trial");
        row.overflow_count = a.overflowed ? 1 : 0;
        row.max_load = a.max_load;
        res.rows.push_back(std::move(row));
    }
    if (res.overflows) res.message = std::to_string(res.overflows) + " trials exceeded bin capacity";
}

}  // namespace

Scheme parse_scheme(const std::string& s) {
    if (s == "layered") return Scheme::Layered;
    if (s == "clip") return Scheme::Clip;
    if (s == "local-layered") return Scheme::LocalLayered;
    if (s == "loc-oram-demo") return Scheme::LocOramDemo;
    if (s == "alloc-stats") return Scheme::AllocStats;
    throw Error(ErrorCode::BadSpec, "unknown scheme " + s);
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Layered: return "layered";
        case Scheme::Clip: return "clip";
        case Scheme::LocalLayered: return "local-layered";
        case Scheme::LocOramDemo: return "loc-oram-demo";
        case Scheme::AllocStats: return "alloc-stats";
    }
    return "?";
}

void validate(const WorkloadSpec& spec) {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::BadSpec, m); };
    if (spec.N < 4) bad("N must be at least 4");
    if (spec.p < 1) bad("p must be positive");
    if (spec.search_pct < 0 || spec.add_pct < 0 || spec.delete_pct < 0 ||
        spec.search_pct + spec.add_pct + spec.delete_pct != 100)
        bad("op mix percentages must be non-negative and sum to 100");
    if (spec.fill < 0 || spec.fill > 1) bad("fill must lie in [0, 1]");
    if ((spec.dist == Distribution::Uniform || spec.dist == Distribution::Single) && spec.dist_param < 1)
        bad("list length must be at least 1");
    if (spec.dist == Distribution::Zipf && spec.dist_param <= 0) bad("zipf exponent must be positive");
    if (spec.dist == Distribution::Script && spec.script_path.empty()) bad("adversarial-script needs a path");
    if (spec.alpha <= 0 || spec.d <= 0 || spec.load_const <= 0) bad("alpha, d and load-const must be positive");
    if (spec.lambda < 2) bad("lambda must be at least 2");
    if (spec.scheme == Scheme::LocOramDemo && spec.oram_c < 2) bad("c must be at least 2");
    if (spec.scheme == Scheme::AllocStats && spec.trials < 1) bad("trials must be positive");
}

Database gen_db(const WorkloadSpec& spec) {
    validate(spec);
    Database db;
    if (spec.dist == Distribution::Script) return db;
    const std::uint64_t total = static_cast<std::uint64_t>(spec.fill * static_cast<double>(spec.N));
    auto rng = stream(spec.seed, 1);
    const auto lens = list_lengths(spec, total, rng);
    const PrfKey k = KeyTree(spec.seed).prf_key("workload");
    std::uint64_t next = 1;
    for (std::uint64_t i = 0; i < lens.size(); ++i) {
        std::vector<std::uint64_t> ids(lens[i]);
        for (auto& id : ids) id = next++;
        db.emplace_back(keyword_token(k, i), std::move(ids));
    }
    return db;
}

void write_db(std::ostream& os, const Database& db) {
    os.write(kDbMagic, 4);
    put32(os, kDbVersion);
    put64(os, db.size());
    for (const auto& [w, ids] : db) {
        put32(os, static_cast<std::uint32_t>(w.size()));
        os.write(w.data(), static_cast<std::streamsize>(w.size()));
        put64(os, ids.size());
        for (auto id : ids) put64(os, id);
    }
}

Database read_db(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kDbMagic)) throw Error(ErrorCode::BadSpec, "not a database file");
    if (get(is, 4) != kDbVersion) throw Error(ErrorCode::BadSpec, "unsupported database file version");
    Database db(get(is, 8));
    for (auto& [w, ids] : db) {
        w.resize(get(is, 4));
        if (!is.read(w.data(), static_cast<std::streamsize>(w.size()))) throw Error(ErrorCode::BadSpec, "truncated database file");
        ids.resize(get(is, 8));
        for (auto& id : ids) id = get(is, 8);
    }
    return db;
}

Oracle::Oracle(const Database& db) {
    for (const auto& [w, ids] : db) add(w, ids);
}

void Oracle::add(const std::string& w, const std::vector<std::uint64_t>& ids) {
    auto& c = counts_[w];
    for (auto id : ids) ++c[id];
    total_added_ += ids.size();
}

void Oracle::remove(const std::string& w, const std::vector<std::uint64_t>& ids) {
    auto& c = counts_[w];
    for (auto id : ids) --c[id];
}

std::vector<std::uint64_t> Oracle::lookup(const std::string& w) const {
    std::vector<std::uint64_t> out;
    const auto it = counts_.find(w);
    if (it == counts_.end()) return out;
    for (const auto& [id, n] : it->second)
        if (n > 0) out.push_back(id);
    return out;
}

std::vector<std::string> Oracle::keywords() const {
    std::vector<std::string> out;
    for (const auto& kv : counts_) out.push_back(kv.first);
    return out;
}

std::vector<WorkOp> gen_ops(const WorkloadSpec& spec, const Database& db) {
    validate(spec);
    auto rng = stream(spec.seed, 2);
    const PrfKey k = KeyTree(spec.seed).prf_key("workload");
    Oracle oracle(db);
    std::vector<std::string> known;
    for (const auto& kv : db) known.push_back(kv.first);
    std::uint64_t next_kw = db.size();
    std::uint64_t next_id = 1;
    for (const auto& kv : db) next_id += kv.second.size();
    std::uint64_t added = oracle.total_added(), deleted = 0;
    const bool deletes = spec.scheme != Scheme::Clip;
    std::uniform_int_distribution<int> pct(0, 99);

    std::vector<WorkOp> ops;
    while (ops.size() < spec.ops) {
        const int r = pct(rng);
        OpKind kind = r < spec.search_pct ? OpKind::Search
                      : r < spec.search_pct + spec.add_pct ? OpKind::Add
                                                           : OpKind::Delete;
        if (kind == OpKind::Delete && !deletes) kind = OpKind::Search;
        WorkOp op;
        op.kind = kind;
        if (kind == OpKind::Add) {
            const std::uint64_t n = std::min<std::uint64_t>(1 + rng() % 4, spec.N - std::min(spec.N, added));
            if (n == 0) op.kind = OpKind::Search;
            else {
                if (known.empty() || rng() % 5 == 0) {
                    op.keyword = keyword_token(k, next_kw++);
                    known.push_back(op.keyword);
                } else {
                    op.keyword = known[rng() % known.size()];
                }
                for (std::uint64_t i = 0; i < n; ++i) op.ids.push_back(next_id++);
                oracle.add(op.keyword, op.ids);
                added += n;
            }
        } else if (kind == OpKind::Delete) {
            op.kind = OpKind::Search;
            if (!known.empty() && deleted < spec.N) {
                const std::string w = known[rng() % known.size()];
                auto live = oracle.lookup(w);
                if (!live.empty()) {
                    std::shuffle(live.begin(), live.end(), rng);
                    live.resize(std::min<std::size_t>({live.size(), 1 + rng() % 2, spec.N - deleted}));
                    op.kind = OpKind::Delete;
                    op.keyword = w;
                    op.ids = live;
                    oracle.remove(w, live);
                    deleted += live.size();
                }
            }
        }
        if (op.kind == OpKind::Search) {
            op.ids.clear();
            if (known.empty()) continue;
            op.keyword = known[rng() % known.size()];
        }
        ops.push_back(std::move(op));
    }
    return ops;
}

std::vector<WorkOp> read_script(std::istream& is) {
    std::vector<WorkOp> ops;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string verb;
        if (!(ls >> verb) || verb[0] == '#') continue;
        WorkOp op;
        if (verb == "search") op.kind = OpKind::Search;
        else if (verb == "add") op.kind = OpKind::Add;
        else if (verb == "delete") op.kind = OpKind::Delete;
        else throw Error(ErrorCode::BadSpec, "unknown script verb " + verb);
        if (!(ls >> op.keyword)) throw Error(ErrorCode::BadSpec, "script line without keyword");
        std::uint64_t id;
        while (ls >> id) op.ids.push_back(id);
        if (op.kind != OpKind::Search && op.ids.empty()) throw Error(ErrorCode::BadSpec, "script update without ids");
        ops.push_back(std::move(op));
    }
    return ops;
}

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
    os << "#schema=" << kReportSchema << '\n';
    os << "scheme,seed,N,p,op_id,label,locality,read_eff,page_eff,storage_eff,overflow_count,max_load\n";
    for (const auto& r : rows)
        os << r.scheme << ',' << r.seed << ',' << r.N << ',' << r.p << ',' << r.op_id << ',' << r.label << ','
           << r.locality << ',' << fmt(r.read_eff) << ',' << fmt(r.page_eff) << ',' << fmt(r.storage_eff) << ','
           << r.overflow_count << ',' << fmt(r.max_load) << '\n';
}

RunResult run(const WorkloadSpec& spec) {
    RunResult res;
    try {
        validate(spec);
        switch (spec.scheme) {
            case Scheme::LocOramDemo: run_oram(spec, res); break;
            case Scheme::AllocStats: run_alloc(spec, res); break;
            default: {
                const Database db = gen_db(spec);
                const auto ops = load_ops(spec, db);
                if (spec.scheme == Scheme::Layered) run_layered(spec, db, ops, res);
                else if (spec.scheme == Scheme::LocalLayered) run_local(spec, db, ops, res);
                else run_clip(spec, db, ops, res);
            }
        }
    } catch (const Error& e) {
        switch (e.code()) {
            case ErrorCode::BadSpec:
            case ErrorCode::BlockTooSmall:
            case ErrorCode::IndexOutOfRange:
            case ErrorCode::UnknownKeyword:
                res.status = RunStatus::BadSpec;
                res.message = e.what();
                return res;
            case ErrorCode::CapacityExceeded:
            case ErrorCode::UpdateRejected:
                ++res.overflows;
                res.status = RunStatus::Overflow;
                res.message = e.what();
                return res;
            default: throw;
        }
    }
    if (res.mismatches) res.status = RunStatus::CorrectnessFailure;
    else if (res.overflows && spec.scheme != Scheme::Clip) res.status = RunStatus::Overflow;
    return res;
}

}  // namespace locsse
