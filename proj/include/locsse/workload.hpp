#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "locsse/alloc.hpp"
#include "locsse/layered_sse.hpp"

namespace locsse {

enum class Scheme { Layered, Clip, LocalLayered, LocOramDemo, AllocStats };
enum class Distribution { Uniform, Zipf, Single, Script };

Scheme parse_scheme(const std::string& s);
std::string scheme_name(Scheme s);

struct WorkloadSpec {
    std::uint64_t seed = 1;
    std::uint64_t N = 1 << 14;
    std::uint64_t p = 16;
    Scheme scheme = Scheme::Layered;
    Distribution dist = Distribution::Uniform;
    double dist_param = 4;         // ℓ for uniform/single, s for zipf
    std::string script_path;       // adversarial-script
    double fill = 0.25;            // initial Σℓ as a fraction of N
    bool cap_longest = false;      // clamp lists to N/(log2 N)^d
    int search_pct = 40, add_pct = 40, delete_pct = 20;
    std::uint64_t ops = 1000;
    double alpha = 4, d = 1;
    double load_const = 4;
    DeltaMode delta_mode = DeltaMode::LogLogLog;
    int lambda = 128;
    bool piggyback = false;
    std::uint64_t trials = 1;      // alloc-stats
    int oram_c = 2;                // loc-oram-demo
    std::uint64_t oram_beta = 0;
};

/// Throws BadSpec on inconsistent fields.
void validate(const WorkloadSpec& spec);

/// Deterministic from the seed. Keywords are PRF-derived tokens; Σℓ ≤ fill·N by truncation.
Database gen_db(const WorkloadSpec& spec);

void write_db(std::ostream& os, const Database& db);
Database read_db(std::istream& is);

enum class OpKind { Search, Add, Delete };

struct WorkOp {
    OpKind kind = OpKind::Search;
    std::string keyword;
    std::vector<std::uint64_t> ids;
};

/// Plaintext reference: per keyword multiset of adds minus deletes.
class Oracle {
public:
    explicit Oracle(const Database& db = {});
    void add(const std::string& w, const std::vector<std::uint64_t>& ids);
    void remove(const std::string& w, const std::vector<std::uint64_t>& ids);
    /// Sorted distinct ids whose add count exceeds their delete count.
    std::vector<std::uint64_t> lookup(const std::string& w) const;
    std::vector<std::string> keywords() const;
    std::uint64_t total_added() const { return total_added_; }

private:
    std::map<std::string, std::map<std::uint64_t, std::int64_t>> counts_;
    std::uint64_t total_added_ = 0;
};

/// Op sequence drawn from the mix; adds use fresh ids, deletes remove present ids.
std::vector<WorkOp> gen_ops(const WorkloadSpec& spec, const Database& db);
/// Lines "search w", "add w id...", "delete w id...".
std::vector<WorkOp> read_script(std::istream& is);

struct ReportRow {
    std::string scheme;
    std::uint64_t seed = 0, N = 0, p = 0, op_id = 0;
    std::string label;
    std::uint64_t locality = 0;
    double read_eff = 0, page_eff = 0, storage_eff = 0;
    std::uint64_t overflow_count = 0;
    double max_load = 0;
};

inline constexpr int kReportSchema = 1;
void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);

enum class RunStatus { Ok = 0, CorrectnessFailure = 2, Overflow = 3, BadSpec = 4 };

struct RunResult {
    std::vector<ReportRow> rows;
    RunStatus status = RunStatus::Ok;
    std::uint64_t searches = 0;
    std::uint64_t mismatches = 0;
    std::uint64_t overflows = 0;
    std::string message;
};

/// Setup + op sequence, every search checked against the oracle.
RunResult run(const WorkloadSpec& spec);

}  // namespace locsse
