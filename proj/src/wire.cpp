#include "locsse/wire.hpp"

#include <cstring>

namespace locsse {

namespace {

void put32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get32(std::span<const std::uint8_t> raw, std::size_t& pos) {
    if (pos + 4 > raw.size()) throw Error(ErrorCode::Protocol, "truncated frame");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | raw[pos + static_cast<std::size_t>(i)];
    pos += 4;
    return v;
}

}  // namespace

Bytes encode_frame(const Frame& f) {
    std::size_t body = 8;
    for (const auto& x : f.fields) body += 4 + x.size();
    Bytes out;
    out.reserve(4 + body);
    put32(out, static_cast<std::uint32_t>(body));
    put32(out, f.type);
    put32(out, static_cast<std::uint32_t>(f.fields.size()));
    for (const auto& x : f.fields) {
        put32(out, static_cast<std::uint32_t>(x.size()));
        out.insert(out.end(), x.begin(), x.end());
    }
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> raw) {
    std::size_t pos = 0;
    const std::uint32_t body = get32(raw, pos);
    if (raw.size() != 4 + static_cast<std::size_t>(body)) throw Error(ErrorCode::Protocol, "frame length mismatch");
    Frame f;
    f.type = get32(raw, pos);
    const std::uint32_t n = get32(raw, pos);
    f.fields.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t len = get32(raw, pos);
        if (pos + len > raw.size()) throw Error(ErrorCode::Protocol, "truncated field");
        f.fields.emplace_back(raw.begin() + static_cast<std::ptrdiff_t>(pos),
                              raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return f;
}

Bytes u64_bytes(std::uint64_t v) {
    Bytes b(8);
    store_le64(b.data(), v);
    return b;
}

std::uint64_t bytes_u64(std::span<const std::uint8_t> b) {
    if (b.size() != 8) throw Error(ErrorCode::Protocol, "expected 8-byte integer");
    return load_le64(b.data());
}

Bytes words_to_bytes(std::span<const Word> w) {
    Bytes b(w.size() * 8);
    if (!w.empty()) std::memcpy(b.data(), w.data(), b.size());
    return b;
}

std::vector<Word> bytes_to_words(std::span<const std::uint8_t> b) {
    std::vector<Word> w((b.size() + 7) / 8, 0);
    if (!b.empty()) std::memcpy(w.data(), b.data(), b.size());
    return w;
}

Bytes LoopbackTransport::roundtrip(const Bytes& request) {
    if (transcript_) {
        std::uint32_t type = request.size() >= 8 ? static_cast<std::uint32_t>(load_le64(request.data() + 4) & 0xffffffffu) : 0;
        transcript_->messages.push_back({true, type, request.size()});
    }
    Bytes reply = handler_(request);
    if (transcript_) {
        std::uint32_t type = reply.size() >= 8 ? static_cast<std::uint32_t>(load_le64(reply.data() + 4) & 0xffffffffu) : 0;
        transcript_->messages.push_back({false, type, reply.size()});
    }
    return reply;
}

}  // namespace locsse
