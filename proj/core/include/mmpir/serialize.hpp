#pragma once

#include <cstdint>
#include <vector>

#include "mmpir/protocol.hpp"

namespace mmpir {

using Bytes = std::vector<std::uint8_t>;

/// Wire message kinds. Framing on the wire: 4-byte unsigned little-endian
/// payload length, 1-byte kind tag, payload. Field elements and counts are
/// 4-byte unsigned little-endian throughout.
enum class MessageKind : std::uint8_t {
    Hello = 0,
    Query = 1,
    Answer = 2,
    Error = 3,
};

struct WireMessage {
    MessageKind kind = MessageKind::Hello;
    Bytes payload;
    bool operator==(const WireMessage &other) const = default;
};

inline constexpr std::uint32_t kMaxFrameBytes = 64u * 1024u * 1024u;

/// Serializes a message into its framed byte form.
Bytes frame_message(const WireMessage &message);

/// Parses one framed message from a byte buffer holding exactly one frame.
WireMessage parse_frame(const Bytes &bytes);

// --- payload codecs ---

Bytes serialize_query(const Query &query);
Query parse_query(const Bytes &bytes);

Bytes serialize_answer(const Answer &answer, std::uint32_t modulus);
Answer parse_answer(const Bytes &bytes);

/// Canonical framed bytes of one server's query; the privacy audit compares
/// distributions of exactly these strings.
Bytes canonical_query_bytes(const Query &query);

struct ErrorBody {
    std::uint32_t code = 0;
    std::string message;
};

inline constexpr std::uint32_t kErrMalformedQuery = 1;
inline constexpr std::uint32_t kErrBadFrame = 2;
inline constexpr std::uint32_t kErrInternal = 3;

Bytes serialize_error(const ErrorBody &body);
ErrorBody parse_error(const Bytes &bytes);

struct HelloBody {
    std::uint32_t modulus = 0;
    std::uint32_t file_count = 0;
    std::uint32_t file_symbols = 0;
};

Bytes serialize_hello(const HelloBody &body);
HelloBody parse_hello(const Bytes &bytes);

/// Canonical byte serialization of a full transcript (golden tests,
/// cross-path equality checks).
Bytes serialize_transcript(const Transcript &transcript);

} // namespace mmpir
