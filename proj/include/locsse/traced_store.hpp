#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "locsse/common.hpp"

namespace locsse {

enum class AccessKind { Read, Write };

struct Range {
    std::uint64_t start = 0;
    std::uint64_t len = 0;
    AccessKind kind = AccessKind::Read;
};

struct TraceEntry {
    std::uint64_t op_id = 0;
    std::string label;
    AccessKind kind = AccessKind::Read;
    std::uint64_t start = 0;
    std::uint64_t len = 0;
};

struct OpMetrics {
    std::uint64_t op_id = 0;
    std::string label;
    /// Disjoint intervals over reads and writes; touching ranges merge.
    std::uint64_t locality = 0;
    std::uint64_t read_locality = 0;
    /// Distinct words touched.
    std::uint64_t read_words = 0;
    std::set<std::uint64_t> page_pattern;
    std::uint64_t pages_touched = 0;
};

struct Interval {
    std::uint64_t start = 0;
    std::uint64_t end = 0;  // exclusive
};

/// Merge ranges into maximal disjoint intervals (adjacent ranges merge).
std::vector<Interval> merge_ranges(std::vector<Interval> ranges);

/// Pure function of a range list; `end_op` and trace replay both use it.
OpMetrics compute_metrics(std::uint64_t op_id, const std::string& label, const std::vector<Range>& ranges,
                          std::uint64_t page_size);

/// Simulated server memory: pages of `page_size` words, per-op access recording.
class PageStore {
public:
    explicit PageStore(std::uint64_t page_size, std::uint64_t num_pages = 0);

    std::uint64_t page_size() const { return page_size_; }
    std::uint64_t num_pages() const { return words_.size() / page_size_; }
    std::uint64_t size_words() const { return words_.size(); }

    /// Appends a region of `words` words starting on a multiple of `align` words
    /// (and of the page size); returns its first word address.
    std::uint64_t alloc_region(std::uint64_t words, std::uint64_t align = 0);
    /// Words covered by allocated regions (padding between regions excluded).
    std::uint64_t words_in_use() const { return in_use_; }

    std::uint64_t begin_op(const std::string& label);
    OpMetrics end_op(std::uint64_t op_id);
    bool op_open() const { return open_.has_value(); }

    std::vector<Word> read_range(std::uint64_t addr, std::uint64_t len);
    void write_range(std::uint64_t addr, std::span<const Word> words);

    /// Untraced copy for offline inspection (EDB dumps, tests); not part of any protocol.
    std::vector<Word> snapshot(std::uint64_t addr, std::uint64_t len) const;

    void set_record_trace(bool on) { record_trace_ = on; }
    const std::vector<TraceEntry>& trace() const { return trace_; }
    void clear_trace() { trace_.clear(); }

private:
    void record(AccessKind kind, std::uint64_t addr, std::uint64_t len);

    std::uint64_t page_size_;
    std::vector<Word> words_;
    std::uint64_t in_use_ = 0;
    std::uint64_t next_op_ = 0;
    struct Open {
        std::uint64_t id;
        std::string label;
        std::vector<Range> ranges;
    };
    std::optional<Open> open_;
    bool record_trace_ = true;
    std::vector<TraceEntry> trace_;
};

struct EfficiencyReport {
    std::uint64_t max_locality = 0;
    double max_read_eff = 0;
    double max_page_eff = 0;
    double storage_eff = 0;
};

EfficiencyReport summarize(const std::vector<OpMetrics>& ops, const std::vector<std::uint64_t>& answer_words,
                           std::uint64_t p, std::uint64_t storage_words, std::uint64_t plaintext_words);

double read_efficiency(const OpMetrics& m, std::uint64_t answer_words);
double page_efficiency(const OpMetrics& m, std::uint64_t answer_words, std::uint64_t p);

void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace);
void write_metrics_csv(std::ostream& os, const std::vector<OpMetrics>& ops,
                       const std::vector<std::uint64_t>& answer_words);

/// Recompute per-op metrics from a recorded trace.
std::vector<OpMetrics> replay_trace(const std::vector<TraceEntry>& trace, std::uint64_t page_size);

}  // namespace locsse
