#include "locsse/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "locsse/crypto.hpp"

namespace locsse {

namespace {

int ceil_eps(double v) { return static_cast<int>(std::ceil(v - 1e-12)); }

Tag random_tag(std::mt19937_64& rng) {
    Tag t;
    for (std::size_t i = 0; i < t.size(); i += 8) store_le64(t.data() + i, rng());
    return t;
}

}  // namespace

int llog(double x) { return std::max(1, ceil_eps(std::log2(std::log2(std::max(x, 4.0))))); }

int delta_of(DeltaMode mode, int lambda) {
    if (mode == DeltaMode::One) return 1;
    const double l = std::max(lambda, 4);
    const double v = std::log2(std::log2(std::log2(l)));
    return std::max(1, ceil_eps(std::max(v, 0.0)));
}

L2CParams make_l2c_params(double w_max, DeltaMode mode, double load_const, int lambda) {
    L2CParams p;
    p.w_max = w_max;
    p.lambda = lambda;
    p.delta_mode = mode;
    p.delta = delta_of(mode, lambda);
    p.load_const = load_const;
    const int ll = llog(w_max);
    p.m = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(w_max / (p.delta * ll) - 1e-12)));
    p.num_tiers = llog(static_cast<double>(p.m));
    p.capacity = load_const * p.delta * ll;
    return p;
}

int tier_of(double weight, std::uint64_t m) {
    if (!(weight >= 0.0) || weight > 1.0 + 1e-12)
        throw Error(ErrorCode::WeightOutOfRange, "weight " + std::to_string(weight));
    const double lm = std::log2(static_cast<double>(std::max<std::uint64_t>(m, 4)));
    const double scaled = weight * lm;
    if (scaled <= 1.0 + 1e-12) return 0;
    const int k = ceil_eps(std::log2(scaled));
    return std::clamp(k, 1, llog(static_cast<double>(m)));
}

std::uint64_t choose_bin(int tier, std::uint64_t a1, std::uint64_t a2, std::uint64_t count_a1,
                         std::uint64_t count_a2) {
    if (tier == 0) return a1;
    return count_a2 < count_a1 ? a2 : a1;
}

L2CState make_l2c_state(const L2CParams& params, std::uint64_t seed) {
    L2CState s;
    s.params = params;
    s.bins.resize(params.m);
    for (auto& b : s.bins) b.tier_counts.assign(static_cast<std::size_t>(params.num_tiers) + 1, 0);
    s.rng.seed(seed);
    return s;
}

std::uint64_t insert_ball(L2CState& state, const Tag& id, double weight, std::vector<Word> payload) {
    if (state.live.count(id)) throw Error(ErrorCode::DuplicateBall, "ball already live");
    const int tier = tier_of(weight, state.params.m);
    const auto [a1, a2] = hash_choices(id, state.params.m);
    const auto t = static_cast<std::size_t>(tier);
    const std::uint64_t bin =
        choose_bin(tier, a1, a2, state.bins[a1].tier_counts[t], state.bins[a2].tier_counts[t]);
    auto& b = state.bins[bin];
    b.balls.push_back(Ball{id, tier, weight, std::move(payload), false});
    b.tier_counts[t] += 1;
    b.load += weight;
    state.live[id] = bin;
    return bin;
}

UpdateOutcome update_ball(L2CState& state, const Tag& id, double old_weight, double new_weight,
                          const std::vector<Word>& extra_payload) {
    if (new_weight < old_weight) throw Error(ErrorCode::WeightDecrease, "weights only grow");
    auto it = state.live.find(id);
    if (it == state.live.end()) throw Error(ErrorCode::BallNotFound, "no live ball with this id");
    const std::uint64_t bin = it->second;
    const auto [a1, a2] = hash_choices(id, state.params.m);
    if (bin != a1 && bin != a2) throw Error(ErrorCode::BallNotFound, "ball outside its choices");
    auto& b = state.bins[bin];
    auto ball = std::find_if(b.balls.begin(), b.balls.end(), [&](const Ball& x) { return !x.residual && x.id == id; });
    if (ball == b.balls.end()) throw Error(ErrorCode::BallNotFound, "live index out of sync");

    const int new_tier = tier_of(new_weight, state.params.m);
    if (new_tier == ball->tier) {
        b.load += new_weight - ball->weight;
        ball->weight = new_weight;
        ball->payload.insert(ball->payload.end(), extra_payload.begin(), extra_payload.end());
        return {false, bin};
    }
    std::vector<Word> merged = ball->payload;
    merged.insert(merged.end(), extra_payload.begin(), extra_payload.end());
    ball->residual = true;
    for (auto& w : ball->payload) w = state.rng();
    state.residual_weight[id] += ball->weight;
    state.live.erase(it);
    const std::uint64_t nb = insert_ball(state, id, new_weight, std::move(merged));
    return {true, nb};
}

L2CState l2c_setup(const L2CParams& params, const std::vector<BallSpec>& balls, std::uint64_t seed) {
    L2CState s = make_l2c_state(params, seed);
    for (const auto& b : balls) insert_ball(s, b.id, b.weight, b.payload);
    return s;
}

double max_load(const L2CState& state) {
    double m = 0;
    for (const auto& b : state.bins) m = std::max(m, b.load);
    return m;
}

bool overflow_check(const L2CState& state) {
    for (const auto& b : state.bins)
        if (b.load > state.params.capacity + 1e-9) return true;
    return false;
}

double load_conservation_gap(const L2CState& state) {
    double bins = 0, live = 0, residual = 0;
    for (const auto& b : state.bins) {
        bins += b.load;
        for (const auto& ball : b.balls) (ball.residual ? residual : live) += ball.weight;
    }
    return bins - live - residual;
}

double baseline_one_choice(const std::vector<double>& weights, std::uint64_t m, std::mt19937_64& rng) {
    std::vector<double> load(m, 0);
    std::uniform_int_distribution<std::uint64_t> pick(0, m - 1);
    for (double w : weights) load[pick(rng)] += w;
    return weights.empty() ? 0 : *std::max_element(load.begin(), load.end());
}

std::uint64_t baseline_two_choice(std::uint64_t n, std::uint64_t m, std::mt19937_64& rng) {
    std::vector<std::uint64_t> count(m, 0);
    std::uniform_int_distribution<std::uint64_t> pick(0, m - 1);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t a = pick(rng), b = pick(rng);
        count[count[b] < count[a] ? b : a] += 1;
    }
    return n == 0 ? 0 : *std::max_element(count.begin(), count.end());
}

AllocRow alloc_trial(std::uint64_t seed, double w_max, std::uint64_t p, DeltaMode mode, double load_const,
                     std::uint64_t trial) {
    const L2CParams params = make_l2c_params(w_max, mode, load_const);
    std::seed_seq seq{seed, trial, static_cast<std::uint64_t>(w_max)};
    std::mt19937_64 rng(seq);
    L2CState s = make_l2c_state(params, rng());
    std::uniform_int_distribution<std::uint64_t> rem(1, p);
    double total = 0;
    for (;;) {
        const double w = static_cast<double>(rem(rng)) / static_cast<double>(p);
        if (total + w > w_max) break;
        insert_ball(s, random_tag(rng), w, {});
        total += w;
    }
    AllocRow row;
    row.seed = seed;
    row.w_max = w_max;
    row.m = params.m;
    row.delta_mode = mode;
    row.trial = trial;
    row.max_load = max_load(s);
    row.capacity = params.capacity;
    row.overflowed = overflow_check(s);
    return row;
}

void write_alloc_csv(std::ostream& os, const std::vector<AllocRow>& rows) {
    os << "seed,w_max,m,delta_mode,trial,max_load,capacity,overflowed\n";
    for (const auto& r : rows)
        os << r.seed << ',' << r.w_max << ',' << r.m << ',' << (r.delta_mode == DeltaMode::One ? "one" : "logloglog")
           << ',' << r.trial << ',' << r.max_load << ',' << r.capacity << ',' << (r.overflowed ? 1 : 0) << '\n';
}

}  // namespace locsse
