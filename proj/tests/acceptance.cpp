#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "locsse/alloc.hpp"
#include "locsse/clip_osse.hpp"
#include "locsse/layered_sse.hpp"
#include "locsse/loc_oram.hpp"
#include "locsse/local_transform.hpp"
#include "locsse/workload.hpp"

using namespace locsse;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::vector<std::uint64_t> iota_ids(std::uint64_t from, std::uint64_t n) {
    std::vector<std::uint64_t> v(n);
    for (std::uint64_t i = 0; i < n; ++i) v[i] = from + i;
    return v;
}

template <class F>
auto in_op(PageStore& s, F f, OpMetrics* m) {
    const auto op = s.begin_op("op");
    auto r = f();
    *m = s.end_op(op);
    return r;
}

// ------------------------------------------------------------------ 1

WorkloadSpec mixed_spec(std::uint64_t seed, Scheme scheme) {
    WorkloadSpec s;
    s.seed = seed;
    s.N = 1 << 14;
    s.p = 16;
    s.scheme = scheme;
    s.dist = Distribution::Uniform;
    s.dist_param = 4;
    s.fill = 0.25;
    s.search_pct = 40;
    s.add_pct = 40;
    s.delete_pct = 20;
    s.ops = 2000;
    return s;
}

std::string csv_of(const RunResult& r) {
    std::ostringstream os;
    write_report_csv(os, r.rows);
    return os.str();
}

Verdict criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t searches = 0, bad_runs = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
        for (Scheme sc : {Scheme::Layered, Scheme::LocalLayered}) {
            const RunResult r = run(mixed_spec(seed, sc));
            searches += r.searches;
            if (r.status != RunStatus::Ok || r.mismatches) {
                ++bad_runs;
                std::cerr << scheme_name(sc) << " seed " << seed << ": " << r.message << '\n';
            }
        }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {bad_runs == 0 && searches > 0 && secs < 60,
            std::to_string(searches) + " searches checked over 100 runs, " + std::to_string(bad_runs) +
                " failing runs, " + fmt("%.1f s", secs)};
}

// ------------------------------------------------------------------ 2

struct AllocPoint {
    double mean_ratio = 0;
    std::uint64_t overflows = 0;
};

AllocPoint alloc_point(double w_max, double lc, std::vector<AllocRow>* rows = nullptr) {
    AllocPoint pt;
    const int dl = make_l2c_params(w_max, DeltaMode::LogLogLog, lc).delta * llog(w_max);
    for (std::uint64_t t = 0; t < 100; ++t) {
        const AllocRow r = alloc_trial(2, w_max, 16, DeltaMode::LogLogLog, lc, t);
        pt.mean_ratio += r.max_load / dl / 100.0;
        pt.overflows += r.overflowed ? 1 : 0;
        if (rows) rows->push_back(r);
    }
    return pt;
}

double g_load_const = 0;

Verdict criterion2() {
    const double grid[] = {1, 2, 3, 4};
    double lc = 0;
    AllocPoint cal;
    for (double g : grid) {
        cal = alloc_point(1024, g);
        if (cal.overflows == 0) {
            lc = g;
            break;
        }
    }
    if (lc == 0) return {false, "no grid constant calibrates without overflow"};
    g_load_const = lc;
    bool ok = true;
    std::string d = "load_const " + fmt("%.0f", lc) + ", ratio@2^10 " + fmt("%.3f", cal.mean_ratio);
    for (int e : {12, 14, 16}) {
        const AllocPoint pt = alloc_point(std::ldexp(1.0, e), lc);
        d += ", @2^" + std::to_string(e) + " " + fmt("%.3f", pt.mean_ratio) + " (" + std::to_string(pt.overflows) + " ovf)";
        if (pt.overflows || pt.mean_ratio > 2 * cal.mean_ratio || pt.mean_ratio < cal.mean_ratio / 2) ok = false;
    }
    return {ok, d};
}

// ------------------------------------------------------------------ 3

Verdict criterion3() {
    std::uint64_t violations = 0, steps = 0;
    double worst = 0;
    std::mt19937_64 rng(3);
    for (std::uint64_t m : {16ull, 256ull, 4096ull}) {
        auto st = make_l2c_state(make_l2c_params(static_cast<double>(m) * 8), 3);
        auto new_tag = [&] {
            Tag t;
            for (std::size_t i = 0; i < t.size(); i += 8) store_le64(t.data() + i, rng());
            return t;
        };
        const std::uint64_t mm = st.params.m;
        // Scripts: unit increments of 1/64, doubling, and jumps just past each tier boundary.
        std::vector<std::vector<double>> scripts;
        std::vector<double> unit, dbl, edge;
        for (int k = 1; k <= 64; ++k) unit.push_back(k / 64.0);
        for (double w = 1.0 / 64; w < 1.0; w *= 2) dbl.push_back(w);
        dbl.push_back(1.0);
        const double lm = std::log2(static_cast<double>(std::max<std::uint64_t>(mm, 4)));
        edge.push_back(0.5 / lm);
        for (int k = 0; k <= llog(static_cast<double>(mm)); ++k) {
            const double b = std::ldexp(1.0, k) / lm;
            if (b < 1) {
                edge.push_back(b);
                edge.push_back(std::min(1.0, b * 1.0001));
            }
        }
        edge.push_back(1.0);
        scripts = {unit, dbl, edge};
        for (const auto& sc : scripts)
            for (int rep = 0; rep < 20; ++rep) {
                const Tag id = new_tag();
                insert_ball(st, id, sc[0], {});
                for (std::size_t i = 1; i < sc.size(); ++i) {
                    if (sc[i] <= sc[i - 1]) continue;
                    update_ball(st, id, sc[i - 1], sc[i], {});
                    ++steps;
                    const double res = st.residual_weight[id];
                    worst = std::max(worst, res / sc[i]);
                    if (res >= 2 * sc[i]) ++violations;
                }
            }
        if (std::abs(load_conservation_gap(st)) > 1e-6) ++violations;
    }
    return {violations == 0, std::to_string(steps) + " update steps, worst residual/live " + fmt("%.3f", worst) + ", " +
                                 std::to_string(violations) + " violations"};
}

// ------------------------------------------------------------------ 4

Verdict criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t bad = 0, checks = 0;
    for (std::uint64_t m = 2; m <= 256; m *= 2)
        for (std::uint64_t h = 0; h < m; ++h)
            for (std::uint64_t ell = 1; ell <= 2 * m; ++ell) {
                const auto r = oc_fetch_range(m, h, ell);
                std::vector<std::set<std::uint64_t>> window((ell + m - 1) / m);
                for (std::uint64_t i = 0; i < ell; ++i) {
                    const auto b = oc_add(m, h, i);
                    ++checks;
                    if (b < r.first || b >= r.first + r.count) ++bad;
                    if (!window[i / m].insert(b).second) ++bad;
                }
            }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {bad == 0 && secs < 5,
            std::to_string(checks) + " adds checked, " + std::to_string(bad) + " violations, " + fmt("%.2f s", secs)};
}

// ------------------------------------------------------------------ 5

double clip_fraction(std::uint64_t N, std::uint64_t seed) {
    Database db;
    for (std::uint64_t k = 0; k < N / 16; ++k) db.push_back({"u" + std::to_string(k), iota_ids(16 * k, 16)});
    ClipConfig cfg;
    cfg.N = N;
    cfg.alpha = 4;
    PageStore store(16);
    ClipOsse clip(store, cfg, clip_keygen(KeyTree(seed)), db, seed);
    std::uint64_t c = 0;
    for (const auto& e : clip.clip_list()) c += e.clipped.size();
    return static_cast<double>(c) / static_cast<double>(N);
}

Verdict criterion5() {
    bool ok = true;
    double prev = 1e9;
    std::string d;
    for (int e : {14, 16, 18}) {
        const std::uint64_t N = std::uint64_t{1} << e;
        double f = 0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) f += clip_fraction(N, seed) / 3;
        const double bound = 1.5 / e;
        if (f > bound || f > prev) ok = false;
        prev = f;
        d += (d.empty() ? "" : ", ") + std::string("2^") + std::to_string(e) + " " + fmt("%.5f", f) + " (bound " +
             fmt("%.4f", bound) + ")";
    }
    return {ok, d};
}

// ------------------------------------------------------------------ 6

Verdict criterion6() {
    const std::uint64_t N = 1 << 16;
    const std::vector<std::uint64_t> lens{1, 4, 64, 1024, 4096};
    Database db;
    std::uint64_t next = 1;
    for (auto ell : lens) {
        db.push_back({"len" + std::to_string(ell), iota_ids(next, ell)});
        next += ell;
    }
    std::mt19937_64 rng(6);
    while (next < N / 2) {
        const std::uint64_t ell = 1 + rng() % 15;
        db.push_back({"f" + std::to_string(next), iota_ids(next, ell)});
        next += ell;
    }
    LtConfig cfg;
    cfg.N = N;
    PageStore store(16);
    LocalSse lt(store, cfg, KeyTree(6), db, 6);
    std::uint64_t worst = 0;
    bool ok = true;
    std::string d = "locality per l:";
    for (auto ell : lens) {
        OpMetrics m;
        const auto r = in_op(store, [&] { return lt.search("len" + std::to_string(ell)); }, &m);
        if (r.ids.size() != ell) ok = false;
        worst = std::max(worst, m.locality);
        d += " " + std::to_string(m.locality);
    }
    LocalSystem twin(cfg, 6, db);
    std::uint64_t twin_worst = 0;
    for (auto ell : lens) {
        OpMetrics m;
        twin.search("len" + std::to_string(ell), &m);
        twin_worst = std::max(twin_worst, m.locality);
    }
    d += "; add/delete twin max " + std::to_string(twin_worst);
    return {ok && worst <= 8, d};
}

// ------------------------------------------------------------------ 7

Verdict criterion7() {
    const std::uint64_t N = 1 << 16, p = 16;
    LseConfig cfg;
    cfg.N = N;
    cfg.p = p;
    cfg.load_const = g_load_const;
    const auto P = make_lse_params(cfg);
    const std::vector<std::uint64_t> lens{1, 5, 16, 17, 33, 100, 256, 1000, 4096};
    Database db;
    std::uint64_t next = 1;
    for (auto ell : lens) {
        db.push_back({"len" + std::to_string(ell), iota_ids(next, ell)});
        next += ell;
    }
    std::mt19937_64 rng(7);
    while (next < N / 2) {
        const std::uint64_t ell = 1 + rng() % 40;
        db.push_back({"f" + std::to_string(next), iota_ids(next, ell)});
        next += ell;
    }
    PageStore store(p);
    LayeredSse lse(store, cfg, lse_keygen(7), db, 7);
    std::map<std::string, std::uint64_t> len;
    for (const auto& [w, ids] : db) len[w] = ids.size();
    double worst = 0;
    bool ok = true;
    auto search = [&](const std::string& w) {
        OpMetrics m;
        const auto r = in_op(store, [&] { return lse.search(w); }, &m);
        if (r.ids.size() != len[w]) ok = false;
        worst = std::max(worst, static_cast<double>(m.pages_touched) / static_cast<double>(std::max<std::uint64_t>(1, ceil_div(len[w], p))));
    };
    for (auto ell : lens) search("len" + std::to_string(ell));
    for (int i = 0; i < 300; ++i) {
        const std::string w = i % 3 == 0 ? "len" + std::to_string(lens[rng() % lens.size()]) : db[rng() % db.size()].first;
        if (rng() % 2) {
            const auto ids = iota_ids(next, 1 + rng() % p);
            OpMetrics m;
            const auto o = in_op(store, [&] { return lse.update_add(w, ids); }, &m);
            if (o == UpdateOutcomeKind::Applied) {
                next += ids.size();
                len[w] += ids.size();
            }
        } else {
            search(w);
        }
    }
    const double bound = 2.0 * static_cast<double>(ceil_div(P.capacity_ids, p)) + 3;
    const double storage = static_cast<double>(lse.storage_words()) / static_cast<double>(N);
    return {ok && worst <= bound && storage <= 4,
            "max pages/ceil(l/p) " + fmt("%.3f", worst) + " (bound " + fmt("%.0f", bound) + "), storage " +
                fmt("%.4f", storage) + ", load_const " + fmt("%.0f", g_load_const) + ", rejected " +
                std::to_string(lse.rejected_updates())};
}

// ------------------------------------------------------------------ 8

struct LeakOp {
    OpKind kind = OpKind::Search;
    std::string w;
    std::vector<std::uint64_t> ids;
};

struct LeakPair {
    Database a, b;
    std::vector<LeakOp> ops_a, ops_b;
};

/// Two databases and scripts over the same keywords. `exact` keeps every length equal;
/// otherwise only page counts ⌈l/p⌉ and ⌈(l+|L'|)/p⌉ match.
LeakPair leak_pair(std::uint64_t seed, std::uint64_t p, bool exact) {
    std::mt19937_64 rng(seed);
    LeakPair lp;
    const int K = 40;
    std::map<std::string, std::uint64_t> add_a, add_b, del_a, del_b;
    std::uint64_t next_a = 1, next_b = 500000;
    auto same_pages = [&](std::uint64_t ell) {
        if (exact) return ell;
        const std::uint64_t x = ceil_div(ell, p);
        return (x - 1) * p + 1 + rng() % p;
    };
    for (int k = 0; k < K; ++k) {
        const std::string w = "k" + std::to_string(k);
        const std::uint64_t la = 1 + rng() % 80, lb = same_pages(la);
        lp.a.push_back({w, iota_ids(next_a, la)});
        lp.b.push_back({w, iota_ids(next_b, lb)});
        next_a += la;
        next_b += lb;
        add_a[w] = la;
        add_b[w] = lb;
    }
    // Update sizes for instance lengths (la, lb) whose page counts agree before and after.
    auto sizes = [&](std::uint64_t la, std::uint64_t lb) {
        if (exact) {
            const std::uint64_t n = 1 + rng() % p;
            return std::pair{n, n};
        }
        const std::uint64_t x = ceil_div(la, p);
        const std::uint64_t room_a = x * p - la, room_b = x * p - lb;
        if (room_a > 0 && room_b > 0 && rng() % 2) return std::pair{1 + rng() % room_a, 1 + rng() % room_b};
        auto grow = [&](std::uint64_t l) {
            const std::uint64_t lo = x * p + 1 - l, hi = std::min(p, (x + 1) * p - l);
            return lo + rng() % (hi - lo + 1);
        };
        const std::uint64_t na = grow(la);
        return std::pair{na, grow(lb)};
    };
    for (int i = 0; i < 300; ++i) {
        const std::string w = "k" + std::to_string(rng() % K);
        const int r = static_cast<int>(rng() % 10);
        if (r < 4) {
            lp.ops_a.push_back({OpKind::Search, w, {}});
            lp.ops_b.push_back({OpKind::Search, w, {}});
        } else if (r < 8) {
            const auto [na, nb] = sizes(add_a[w], add_b[w]);
            lp.ops_a.push_back({OpKind::Add, w, iota_ids(next_a, na)});
            lp.ops_b.push_back({OpKind::Add, w, iota_ids(next_b, nb)});
            next_a += na;
            next_b += nb;
            add_a[w] += na;
            add_b[w] += nb;
        } else {
            const auto [na, nb] = sizes(del_a[w], del_b[w]);
            const auto& ia = lp.a[std::stoul(w.substr(1))].second;
            const auto& ib = lp.b[std::stoul(w.substr(1))].second;
            std::vector<std::uint64_t> da, dbv;
            for (std::uint64_t j = 0; j < na; ++j) da.push_back(ia[j % ia.size()]);
            for (std::uint64_t j = 0; j < nb; ++j) dbv.push_back(ib[j % ib.size()]);
            lp.ops_a.push_back({OpKind::Delete, w, da});
            lp.ops_b.push_back({OpKind::Delete, w, dbv});
            del_a[w] += na;
            del_b[w] += nb;
        }
    }
    return lp;
}

template <class Sys>
std::vector<std::set<std::uint64_t>> patterns(Sys& sys, const std::vector<LeakOp>& ops) {
    std::vector<std::set<std::uint64_t>> out;
    for (const auto& op : ops) {
        OpMetrics m;
        if (op.kind == OpKind::Search)
            sys.search(op.w, &m);
        else if (op.kind == OpKind::Add)
            sys.add(op.w, op.ids, &m);
        else
            sys.remove(op.w, op.ids, &m);
        out.push_back(m.page_pattern);
    }
    return out;
}

std::uint64_t count_mismatch(const std::vector<std::set<std::uint64_t>>& a, const std::vector<std::set<std::uint64_t>>& b) {
    std::uint64_t bad = a.size() == b.size() ? 0 : 1;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) bad += a[i] != b[i] ? 1 : 0;
    return bad;
}

Verdict criterion8() {
    std::uint64_t bad_l = 0, bad_t = 0, ops = 0, differing_contents = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        LseConfig lc;
        lc.N = 1 << 12;
        lc.p = 16;
        const LeakPair pl = leak_pair(seed, lc.p, false);
        for (std::size_t k = 0; k < pl.a.size(); ++k) differing_contents += pl.a[k].second.size() != pl.b[k].second.size();
        LayeredSystem la(lc, 80 + seed, pl.a), lb(lc, 80 + seed, pl.b);
        bad_l += count_mismatch(patterns(la, pl.ops_a), patterns(lb, pl.ops_b));
        ops += pl.ops_a.size();

        LtConfig tc;
        tc.N = 1 << 12;
        const LeakPair pt = leak_pair(seed + 10, 16, true);
        LocalSystem ta(tc, 90 + seed, pt.a), tb(tc, 90 + seed, pt.b);
        bad_t += count_mismatch(patterns(ta, pt.ops_a), patterns(tb, pt.ops_b));
        ops += pt.ops_a.size();
    }
    // Control: scripts with different leakage must be told apart.
    LseConfig lc;
    lc.N = 1 << 12;
    const LeakPair c1 = leak_pair(21, lc.p, false), c2 = leak_pair(22, lc.p, false);
    LayeredSystem ca(lc, 80, c1.a), cb(lc, 80, c2.a);
    const std::uint64_t control = count_mismatch(patterns(ca, c1.ops_a), patterns(cb, c2.ops_a));
    return {bad_l == 0 && bad_t == 0 && differing_contents > 0 && control > 0,
            std::to_string(ops) + " ops compared, layered mismatches " + std::to_string(bad_l) +
                ", local-layered mismatches " + std::to_string(bad_t) + ", keywords with differing lengths " +
                std::to_string(differing_contents) + ", control mismatches " + std::to_string(control)};
}

// ------------------------------------------------------------------ 9

std::vector<std::vector<Word>> make_memory(std::uint64_t n, std::uint64_t beta, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Word>> m(n, std::vector<Word>(beta));
    for (auto& v : m)
        for (auto& w : v) w = rng();
    return m;
}

bool same_trace(const std::vector<TraceEntry>& a, const std::vector<TraceEntry>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].kind != b[i].kind || a[i].start != b[i].start || a[i].len != b[i].len) return false;
    return true;
}

struct OramFit {
    double c_min = 1e18, c_max = 0;
    std::string detail;
};

/// Mean records moved per access over four top-level epochs, divided by n^(1/c)·⌈log2 n⌉².
double oram_constant(std::uint64_t n, int c, std::string* csv = nullptr) {
    OramConfig cfg;
    cfg.n = n;
    cfg.c = c;
    const auto P = make_oram_params(cfg);
    PageStore store(16);
    LocOram o(store, cfg, 9, make_memory(n, P.beta, 9));
    const std::uint64_t T = 4 * P.trigger[static_cast<std::size_t>(c)];
    const auto op = store.begin_op("access");
    for (std::uint64_t t = 0; t < T; ++t) o.access(1 + t % n);
    store.end_op(op);
    const double blocks = static_cast<double>(o.total_words_moved()) / static_cast<double>(o.record_words()) / static_cast<double>(T);
    const double lg = std::ceil(std::log2(static_cast<double>(n)));
    const double C = blocks / (std::pow(static_cast<double>(n), 1.0 / c) * lg * lg);
    if (csv) *csv += std::to_string(n) + ',' + std::to_string(c) + ',' + std::to_string(T) + ',' + fmt("%.6f", blocks) + ',' + fmt("%.6f", C) + '\n';
    return C;
}

Verdict criterion9() {
    std::uint64_t wrong = 0, stale = 0, accesses = 0;
    for (std::uint64_t n : {16ull, 64ull, 256ull})
        for (int c : {2, 3}) {
            OramConfig cfg;
            cfg.n = n;
            cfg.c = c;
            const auto P = make_oram_params(cfg);
            const auto mem = make_memory(n, P.beta, n * 7 + static_cast<std::uint64_t>(c));
            PageStore store(16);
            LocOram o(store, cfg, n + static_cast<std::uint64_t>(c), mem);
            std::vector<std::set<std::uint64_t>> seen(static_cast<std::size_t>(c) + 1);
            std::uint64_t k = 1;
            for (std::uint64_t t = 0; t < 10 * n; ++t) {
                const auto op = store.begin_op("access");
                const auto r = o.access(k);
                store.end_op(op);
                ++accesses;
                if (r.value != mem[k - 1]) ++wrong;
                for (int i = 2; i <= c; ++i)
                    if (!seen[static_cast<std::size_t>(i)].insert(r.positions[static_cast<std::size_t>(i)]).second) ++stale;
                for (int i = 2; i <= r.rebuilt; ++i) seen[static_cast<std::size_t>(i)].clear();
                // Adaptive: the next index depends on the value just read.
                k = 1 + (r.value[0] ^ t) % n;
            }
        }

    std::uint64_t trace_bad = 0;
    for (std::uint64_t count : {64ull, 256ull}) {
        PageStore store(16);
        const EncKey key = KeyTree(9).enc_key("sort");
        RecordRegion region;
        region.count = count;
        region.pt_words = 3;
        region.ct_words = ceil_div(ciphertext_len(24), 8);
        region.base = store.alloc_region(count * region.ct_words);
        std::mt19937_64 rng(count);
        std::vector<TraceEntry> first;
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::vector<Word>> recs(count);
            for (std::uint64_t i = 0; i < count; ++i) recs[i] = {rng() % 1000, i, 0};
            auto op = store.begin_op("fill");
            write_records(store, key, region, 0, recs);
            store.end_op(op);
            store.clear_trace();
            store.set_record_trace(true);
            op = store.begin_op("sort");
            obl_sort(store, key, region, [](std::span<const Word> r) { return r[0]; }, 16);
            const auto out = read_records(store, key, region, 0, count);
            store.end_op(op);
            store.set_record_trace(false);
            for (std::uint64_t i = 1; i < count; ++i)
                if (out[i - 1][0] > out[i][0]) ++trace_bad;
            if (trial == 0)
                first = store.trace();
            else if (!same_trace(first, store.trace()))
                ++trace_bad;
        }
    }

    std::string fit;
    bool fit_ok = true;
    for (int c : {2, 3}) {
        double lo = 1e18, hi = 0;
        for (std::uint64_t n : {16ull, 64ull, 256ull}) {
            const double C = oram_constant(n, c);
            lo = std::min(lo, C);
            hi = std::max(hi, C);
            fit += (fit.empty() ? "" : " ") + std::string("C(") + std::to_string(n) + ",c" + std::to_string(c) + ")=" + fmt("%.2f", C);
        }
        if (hi > 2 * lo) fit_ok = false;
        fit += " [spread " + fmt("%.2f", hi / lo) + "]";
    }
    const bool ok = wrong == 0 && stale == 0 && trace_bad == 0 && fit_ok;
    return {ok, "(a) " + std::to_string(wrong) + " wrong of " + std::to_string(accesses) + "; (b) " + std::to_string(stale) +
                    " stale reads; (c) " + std::to_string(trace_bad) + " trace/order faults; (d) " + fit +
                    (fit_ok ? "" : " exceeds factor 2")};
}

// ------------------------------------------------------------------ 10

std::string acceptance_csvs() {
    std::string out;
    for (Scheme sc : {Scheme::Layered, Scheme::LocalLayered}) out += csv_of(run(mixed_spec(1, sc)));
    WorkloadSpec clip = mixed_spec(1, Scheme::Clip);
    clip.dist = Distribution::Single;
    clip.dist_param = 16;
    clip.fill = 0.5;
    out += csv_of(run(clip));
    WorkloadSpec oram = mixed_spec(1, Scheme::LocOramDemo);
    oram.N = 64;
    oram.ops = 200;
    out += csv_of(run(oram));
    std::vector<AllocRow> rows;
    alloc_point(1024, 2, &rows);
    std::ostringstream os;
    write_alloc_csv(os, rows);
    out += os.str();
    for (int c : {2, 3}) oram_constant(64, c, &out);
    return out;
}

Verdict criterion10() {
    const std::string a = acceptance_csvs(), b = acceptance_csvs();
    return {a == b && !a.empty(), std::to_string(a.size()) + " CSV bytes per run, " + (a == b ? "identical" : "different")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"correctness round-trips", criterion1},
        {"L2C max-load scaling", criterion2},
        {"residual overhead", criterion3},
        {"1C-Alloc correctness", criterion4},
        {"ClipOSSE overflow", criterion5},
        {"Local[LayeredSSE] locality", criterion6},
        {"LayeredSSE page efficiency", criterion7},
        {"leakage invariance", criterion8},
        {"LocORAM", criterion9},
        {"determinism", criterion10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " " << criteria[i].first << ": "
                  << v.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria pass\n";
    return failed == 0 ? 0 : 1;
}
