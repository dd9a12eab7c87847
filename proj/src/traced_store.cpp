#include "locsse/traced_store.hpp"

#include <algorithm>
#include <map>
#include <ostream>

namespace locsse {

std::vector<Interval> merge_ranges(std::vector<Interval> ranges) {
    std::erase_if(ranges, [](const Interval& r) { return r.end <= r.start; });
    std::sort(ranges.begin(), ranges.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> out;
    for (const auto& r : ranges) {
        if (!out.empty() && r.start <= out.back().end)
            out.back().end = std::max(out.back().end, r.end);
        else
            out.push_back(r);
    }
    return out;
}

OpMetrics compute_metrics(std::uint64_t op_id, const std::string& label, const std::vector<Range>& ranges,
                          std::uint64_t page_size) {
    OpMetrics m;
    m.op_id = op_id;
    m.label = label;
    std::vector<Interval> all, reads;
    for (const auto& r : ranges) {
        all.push_back({r.start, r.start + r.len});
        if (r.kind == AccessKind::Read) reads.push_back({r.start, r.start + r.len});
    }
    const auto merged = merge_ranges(std::move(all));
    m.locality = merged.size();
    m.read_locality = merge_ranges(std::move(reads)).size();
    for (const auto& iv : merged) {
        m.read_words += iv.end - iv.start;
        for (std::uint64_t pg = iv.start / page_size; pg <= (iv.end - 1) / page_size; ++pg) m.page_pattern.insert(pg);
    }
    m.pages_touched = m.page_pattern.size();
    return m;
}

PageStore::PageStore(std::uint64_t page_size, std::uint64_t num_pages) : page_size_(page_size) {
    if (page_size == 0) throw Error(ErrorCode::BadSpec, "page size must be positive");
    words_.assign(page_size * num_pages, 0);
    in_use_ = words_.size();
}

std::uint64_t PageStore::alloc_region(std::uint64_t words, std::uint64_t align) {
    const std::uint64_t a = std::max<std::uint64_t>(1, align);
    std::uint64_t start = words_.size();
    start = ceil_div(start, page_size_) * page_size_;
    start = ceil_div(start, a) * a;
    const std::uint64_t end = ceil_div(start + words, page_size_) * page_size_;
    words_.resize(end, 0);
    in_use_ += words;
    return start;
}

std::uint64_t PageStore::begin_op(const std::string& label) {
    if (open_) throw Error(ErrorCode::NestedOp, "op '" + open_->label + "' still open when beginning '" + label + "'");
    open_ = Open{next_op_++, label, {}};
    return open_->id;
}

OpMetrics PageStore::end_op(std::uint64_t op_id) {
    if (!open_ || open_->id != op_id) throw Error(ErrorCode::NoOpenOp, "end_op for op " + std::to_string(op_id));
    OpMetrics m = compute_metrics(open_->id, open_->label, open_->ranges, page_size_);
    open_.reset();
    return m;
}

void PageStore::record(AccessKind kind, std::uint64_t addr, std::uint64_t len) {
    if (!open_) throw Error(ErrorCode::NoOpenOp, "access outside an op");
    if (addr > words_.size() || len > words_.size() - addr)
        throw Error(ErrorCode::OutOfBounds, "[" + std::to_string(addr) + ", +" + std::to_string(len) + ") beyond " +
                                                std::to_string(words_.size()));
    if (len == 0) return;
    open_->ranges.push_back({addr, len, kind});
    if (record_trace_) trace_.push_back({open_->id, open_->label, kind, addr, len});
}

std::vector<Word> PageStore::read_range(std::uint64_t addr, std::uint64_t len) {
    record(AccessKind::Read, addr, len);
    return std::vector<Word>(words_.begin() + static_cast<std::ptrdiff_t>(addr),
                             words_.begin() + static_cast<std::ptrdiff_t>(addr + len));
}

void PageStore::write_range(std::uint64_t addr, std::span<const Word> words) {
    record(AccessKind::Write, addr, words.size());
    std::copy(words.begin(), words.end(), words_.begin() + static_cast<std::ptrdiff_t>(addr));
}

std::vector<Word> PageStore::snapshot(std::uint64_t addr, std::uint64_t len) const {
    if (addr > words_.size() || len > words_.size() - addr) throw Error(ErrorCode::OutOfBounds, "snapshot range");
    return std::vector<Word>(words_.begin() + static_cast<std::ptrdiff_t>(addr),
                             words_.begin() + static_cast<std::ptrdiff_t>(addr + len));
}

double read_efficiency(const OpMetrics& m, std::uint64_t answer_words) {
    return static_cast<double>(m.read_words) / static_cast<double>(std::max<std::uint64_t>(1, answer_words));
}

double page_efficiency(const OpMetrics& m, std::uint64_t answer_words, std::uint64_t p) {
    const std::uint64_t x = std::max<std::uint64_t>(1, ceil_div(answer_words, p));
    return static_cast<double>(m.pages_touched) / static_cast<double>(x);
}

EfficiencyReport summarize(const std::vector<OpMetrics>& ops, const std::vector<std::uint64_t>& answer_words,
                           std::uint64_t p, std::uint64_t storage_words, std::uint64_t plaintext_words) {
    EfficiencyReport r;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const std::uint64_t a = i < answer_words.size() ? answer_words[i] : 0;
        r.max_locality = std::max(r.max_locality, ops[i].locality);
        r.max_read_eff = std::max(r.max_read_eff, read_efficiency(ops[i], a));
        r.max_page_eff = std::max(r.max_page_eff, page_efficiency(ops[i], a, p));
    }
    r.storage_eff = static_cast<double>(storage_words) / static_cast<double>(std::max<std::uint64_t>(1, plaintext_words));
    return r;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace) {
    os << "op_id,label,kind,start,len\n";
    for (const auto& t : trace)
        os << t.op_id << ',' << t.label << ',' << (t.kind == AccessKind::Read ? "read" : "write") << ',' << t.start
           << ',' << t.len << '\n';
}

void write_metrics_csv(std::ostream& os, const std::vector<OpMetrics>& ops,
                       const std::vector<std::uint64_t>& answer_words) {
    os << "op_id,label,locality,read_words,pages,answer_words\n";
    for (std::size_t i = 0; i < ops.size(); ++i)
        os << ops[i].op_id << ',' << ops[i].label << ',' << ops[i].locality << ',' << ops[i].read_words << ','
           << ops[i].pages_touched << ',' << (i < answer_words.size() ? answer_words[i] : 0) << '\n';
}

std::vector<OpMetrics> replay_trace(const std::vector<TraceEntry>& trace, std::uint64_t page_size) {
    std::map<std::uint64_t, std::pair<std::string, std::vector<Range>>> ops;
    for (const auto& t : trace) {
        auto& slot = ops[t.op_id];
        slot.first = t.label;
        slot.second.push_back({t.start, t.len, t.kind});
    }
    std::vector<OpMetrics> out;
    for (const auto& [id, v] : ops) out.push_back(compute_metrics(id, v.first, v.second, page_size));
    return out;
}

}  // namespace locsse
