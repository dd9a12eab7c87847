#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <unordered_map>
#include <vector>

#include "locsse/common.hpp"

namespace locsse {

enum class DeltaMode { One, LogLogLog };

/// max(1, ⌈log2 log2 max(x, 4)⌉)
int llog(double x);
/// δ(λ): 1, or max(1, ⌈log2 log2 log2 λ⌉).
int delta_of(DeltaMode mode, int lambda);

struct L2CParams {
    double w_max = 1;
    int lambda = 128;
    DeltaMode delta_mode = DeltaMode::LogLogLog;
    int delta = 3;
    std::uint64_t m = 1;
    int num_tiers = 1;
    double load_const = 4;
    double capacity = 0;
};

L2CParams make_l2c_params(double w_max, DeltaMode mode = DeltaMode::LogLogLog, double load_const = 4,
                          int lambda = 128);

/// Tier 0 iff weight ≤ 1/log2 m, else ⌈log2(weight · log2 m)⌉ clamped to [1, llog(m)].
/// m below 4 is evaluated as 4.
int tier_of(double weight, std::uint64_t m);

/// Bin for a new ball of `tier` given its two choices' tier counts; ties go to α1.
std::uint64_t choose_bin(int tier, std::uint64_t a1, std::uint64_t a2, std::uint64_t count_a1,
                         std::uint64_t count_a2);

struct Ball {
    Tag id{};
    int tier = 0;
    double weight = 0;
    std::vector<Word> payload;
    bool residual = false;
};

struct BinState {
    std::vector<Ball> balls;
    std::vector<std::uint64_t> tier_counts;
    double load = 0;
};

/// Tags are PRF outputs, so their low word is already uniform.
struct TagHash {
    std::size_t operator()(const Tag& t) const noexcept { return static_cast<std::size_t>(load_le64(t.data())); }
};

struct L2CState {
    L2CParams params;
    std::vector<BinState> bins;
    /// bin index of every live ball
    std::unordered_map<Tag, std::uint64_t, TagHash> live;
    /// accumulated residual weight per ball id
    std::map<Tag, double> residual_weight;
    /// random source for dummy payload words
    std::mt19937_64 rng{0};
};

L2CState make_l2c_state(const L2CParams& params, std::uint64_t seed = 0);

std::uint64_t insert_ball(L2CState& state, const Tag& id, double weight, std::vector<Word> payload);

struct UpdateOutcome {
    bool moved = false;
    std::uint64_t bin = 0;
};

UpdateOutcome update_ball(L2CState& state, const Tag& id, double old_weight, double new_weight,
                          const std::vector<Word>& extra_payload);

struct BallSpec {
    Tag id{};
    double weight = 0;
    std::vector<Word> payload;
};

L2CState l2c_setup(const L2CParams& params, const std::vector<BallSpec>& balls, std::uint64_t seed = 0);

double max_load(const L2CState& state);
bool overflow_check(const L2CState& state);
/// Σ bin loads − Σ live weights − Σ residual weights; zero up to rounding.
double load_conservation_gap(const L2CState& state);

/// Weighted one-choice baseline: each weight lands in one uniform bin.
double baseline_one_choice(const std::vector<double>& weights, std::uint64_t m, std::mt19937_64& rng);
/// Unweighted two-choice baseline: max ball count after n balls into m bins.
std::uint64_t baseline_two_choice(std::uint64_t n, std::uint64_t m, std::mt19937_64& rng);

struct AllocRow {
    std::uint64_t seed = 0;
    double w_max = 0;
    std::uint64_t m = 0;
    DeltaMode delta_mode = DeltaMode::LogLogLog;
    std::uint64_t trial = 0;
    double max_load = 0;
    double capacity = 0;
    bool overflowed = false;
};

/// One trial: balls with weights r/p, r uniform in [1, p], inserted until the next would exceed w_max.
AllocRow alloc_trial(std::uint64_t seed, double w_max, std::uint64_t p, DeltaMode mode, double load_const,
                     std::uint64_t trial);

void write_alloc_csv(std::ostream& os, const std::vector<AllocRow>& rows);

}  // namespace locsse
