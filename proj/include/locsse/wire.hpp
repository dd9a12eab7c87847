#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "locsse/common.hpp"

namespace locsse {

/// A protocol message: a type code and a list of byte fields.
/// Encoded as le32 body length, le32 type, le32 field count, then (le32 len, bytes) per field.
struct Frame {
    std::uint32_t type = 0;
    std::vector<Bytes> fields;
};

Bytes encode_frame(const Frame& f);
Frame decode_frame(std::span<const std::uint8_t> raw);

Bytes u64_bytes(std::uint64_t v);
std::uint64_t bytes_u64(std::span<const std::uint8_t> b);
Bytes words_to_bytes(std::span<const Word> w);
std::vector<Word> bytes_to_words(std::span<const std::uint8_t> b);

struct MessageRecord {
    bool to_server = true;
    std::uint32_t type = 0;
    std::size_t bytes = 0;
};

struct Transcript {
    std::vector<MessageRecord> messages;
    void clear() { messages.clear(); }
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual Bytes roundtrip(const Bytes& request) = 0;
};

/// In-process transport; records frame sizes into an optional transcript.
class LoopbackTransport : public Transport {
public:
    using Handler = std::function<Bytes(const Bytes&)>;
    explicit LoopbackTransport(Handler handler, Transcript* transcript = nullptr)
        : handler_(std::move(handler)), transcript_(transcript) {}
    Bytes roundtrip(const Bytes& request) override;
    void set_transcript(Transcript* t) { transcript_ = t; }

private:
    Handler handler_;
    Transcript* transcript_;
};

}  // namespace locsse
