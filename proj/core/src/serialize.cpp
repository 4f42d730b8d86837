#include "mmpir/serialize.hpp"

#include <string>

namespace mmpir {

namespace {

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        bytes_.push_back(static_cast<std::uint8_t>(v));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 16));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 24));
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v));
        u32(static_cast<std::uint32_t>(v >> 32));
    }
    void raw(const Bytes &b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
    Bytes take() { return std::move(bytes_); }

private:
    Bytes bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const Bytes &bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = std::uint32_t(bytes_[pos_]) | std::uint32_t(bytes_[pos_ + 1]) << 8 |
                          std::uint32_t(bytes_[pos_ + 2]) << 16 |
                          std::uint32_t(bytes_[pos_ + 3]) << 24;
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t lo = u32();
        std::uint64_t hi = u32();
        return lo | hi << 32;
    }
    Bytes rest() {
        Bytes out(bytes_.begin() + pos_, bytes_.end());
        pos_ = bytes_.size();
        return out;
    }
    bool done() const { return pos_ == bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw MalformedQueryError("truncated message body");
    }
    const Bytes &bytes_;
    std::size_t pos_ = 0;
};

void write_chunk_ref(ByteWriter &w, const ChunkRef &ref) {
    for (std::uint32_t pos : ref.positions) w.u32(pos);
}

ChunkRef read_chunk_ref(ByteReader &r, std::uint32_t chunk_symbols) {
    ChunkRef ref;
    ref.positions.reserve(chunk_symbols);
    for (std::uint32_t i = 0; i < chunk_symbols; ++i) ref.positions.push_back(r.u32());
    return ref;
}

} // namespace

Bytes frame_message(const WireMessage &message) {
    if (message.payload.size() > kMaxFrameBytes) throw NetworkError("frame exceeds 64 MiB limit");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(message.payload.size()));
    w.u8(static_cast<std::uint8_t>(message.kind));
    w.raw(message.payload);
    return w.take();
}

WireMessage parse_frame(const Bytes &bytes) {
    ByteReader r(bytes);
    std::uint32_t length = r.u32();
    std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(MessageKind::Error))
        throw MalformedQueryError("unknown message kind");
    if (length != r.remaining()) throw MalformedQueryError("frame length mismatch");
    WireMessage m;
    m.kind = static_cast<MessageKind>(kind);
    m.payload = r.rest();
    return m;
}

Bytes serialize_query(const Query &query) {
    ByteWriter w;
    w.u32(query.modulus);
    w.u32(query.file_count);
    w.u32(query.file_symbols);
    w.u32(query.chunk_symbols);
    w.u32(query.row_count);
    w.u32(static_cast<std::uint32_t>(query.instances.size()));
    w.u32(query.outer_length);
    w.u32(query.outer_dimension);
    for (const ChunkRef &ref : query.phase1) write_chunk_ref(w, ref);
    for (const Phase2Instance &inst : query.instances) {
        for (std::uint32_t r = 0; r < inst.coefficients.rows(); ++r)
            for (std::uint32_t c = 0; c < inst.coefficients.cols(); ++c)
                w.u32(inst.coefficients.at(r, c).value);
        for (const ChunkRef &ref : inst.chunk_refs) write_chunk_ref(w, ref);
    }
    return w.take();
}

Query parse_query(const Bytes &bytes) {
    ByteReader r(bytes);
    Query query;
    query.modulus = r.u32();
    query.file_count = r.u32();
    query.file_symbols = r.u32();
    query.chunk_symbols = r.u32();
    query.row_count = r.u32();
    const std::uint32_t instances = r.u32();
    query.outer_length = r.u32();
    query.outer_dimension = r.u32();
    if (query.modulus < 2 || !is_prime_u32(query.modulus))
        throw MalformedQueryError("query modulus is not prime");
    if (query.file_count == 0 || query.chunk_symbols == 0 || query.row_count == 0)
        throw MalformedQueryError("query has empty dimensions");

    // Reject absurd sizes before allocating.
    const std::uint64_t expected =
        std::uint64_t(query.file_count) * query.chunk_symbols * (1 + instances) * 4 +
        std::uint64_t(instances) * query.row_count * query.file_count * 4;
    if (expected != r.remaining()) throw MalformedQueryError("query body size mismatch");

    FieldModulus modulus(query.modulus);
    query.phase1.reserve(query.file_count);
    for (std::uint32_t i = 0; i < query.file_count; ++i)
        query.phase1.push_back(read_chunk_ref(r, query.chunk_symbols));
    query.instances.reserve(instances);
    for (std::uint32_t t = 0; t < instances; ++t) {
        Phase2Instance inst;
        inst.coefficients = Matrix(query.row_count, query.file_count, modulus);
        for (std::uint32_t row = 0; row < query.row_count; ++row)
            for (std::uint32_t col = 0; col < query.file_count; ++col) {
                std::uint32_t v = r.u32();
                if (v >= query.modulus)
                    throw MalformedQueryError("coefficient not reduced modulo q");
                inst.coefficients.set(row, col, FieldElement{v, query.modulus});
            }
        inst.chunk_refs.reserve(query.file_count);
        for (std::uint32_t i = 0; i < query.file_count; ++i)
            inst.chunk_refs.push_back(read_chunk_ref(r, query.chunk_symbols));
        query.instances.push_back(std::move(inst));
    }
    return query;
}

Bytes serialize_answer(const Answer &answer, std::uint32_t modulus) {
    ByteWriter w;
    w.u32(modulus);
    w.u32(static_cast<std::uint32_t>(answer.coded_chunks.size()));
    w.u32(answer.coded_chunks.empty()
              ? 0
              : static_cast<std::uint32_t>(answer.coded_chunks.front().size()));
    for (const auto &chunk : answer.coded_chunks)
        for (FieldElement v : chunk) w.u32(v.value);
    return w.take();
}

Answer parse_answer(const Bytes &bytes) {
    ByteReader r(bytes);
    const std::uint32_t modulus = r.u32();
    const std::uint32_t chunks = r.u32();
    const std::uint32_t chunk_symbols = r.u32();
    if (std::uint64_t(chunks) * chunk_symbols * 4 != r.remaining())
        throw MalformedQueryError("answer body size mismatch");
    if (!is_prime_u32(modulus)) throw MalformedQueryError("answer modulus is not prime");
    Answer answer;
    answer.coded_chunks.assign(chunks, {});
    for (std::uint32_t i = 0; i < chunks; ++i) {
        answer.coded_chunks[i].reserve(chunk_symbols);
        for (std::uint32_t s = 0; s < chunk_symbols; ++s) {
            std::uint32_t v = r.u32();
            if (v >= modulus) throw MalformedQueryError("answer symbol not reduced modulo q");
            answer.coded_chunks[i].push_back(FieldElement{v, modulus});
        }
    }
    return answer;
}

Bytes canonical_query_bytes(const Query &query) {
    return frame_message(WireMessage{MessageKind::Query, serialize_query(query)});
}

Bytes serialize_error(const ErrorBody &body) {
    ByteWriter w;
    w.u32(body.code);
    for (char ch : body.message) w.u8(static_cast<std::uint8_t>(ch));
    return w.take();
}

ErrorBody parse_error(const Bytes &bytes) {
    ByteReader r(bytes);
    ErrorBody body;
    body.code = r.u32();
    Bytes rest = r.rest();
    body.message.assign(rest.begin(), rest.end());
    return body;
}

Bytes serialize_hello(const HelloBody &body) {
    ByteWriter w;
    w.u32(body.modulus);
    w.u32(body.file_count);
    w.u32(body.file_symbols);
    return w.take();
}

HelloBody parse_hello(const Bytes &bytes) {
    ByteReader r(bytes);
    HelloBody body;
    body.modulus = r.u32();
    body.file_count = r.u32();
    body.file_symbols = r.u32();
    if (!r.done()) throw MalformedQueryError("hello body size mismatch");
    return body;
}

Bytes serialize_transcript(const Transcript &transcript) {
    ByteWriter w;
    w.u32(transcript.params.servers);
    w.u32(transcript.params.files);
    w.u32(transcript.params.requests);
    w.u32(transcript.params.side_files);
    w.u32(transcript.params.chunk_symbols);
    w.u32(transcript.params.modulus.q);
    w.u64(transcript.seed);
    w.u32(static_cast<std::uint32_t>(transcript.request.size()));
    for (std::uint32_t i : transcript.request) w.u32(i);
    w.u32(static_cast<std::uint32_t>(transcript.side_indices.size()));
    for (std::uint32_t i : transcript.side_indices) w.u32(i);
    w.u32(static_cast<std::uint32_t>(transcript.queries.size()));
    for (const Query &q : transcript.queries) {
        Bytes body = serialize_query(q);
        w.u32(static_cast<std::uint32_t>(body.size()));
        w.raw(body);
    }
    for (const Answer &a : transcript.answers) {
        Bytes body = serialize_answer(a, transcript.params.modulus.q);
        w.u32(static_cast<std::uint32_t>(body.size()));
        w.raw(body);
    }
    w.u32(static_cast<std::uint32_t>(transcript.decoded.size()));
    for (const auto &file : transcript.decoded) {
        w.u32(static_cast<std::uint32_t>(file.size()));
        for (FieldElement v : file) w.u32(v.value);
    }
    w.u64(transcript.downloaded_symbols);
    w.u64(static_cast<std::uint64_t>(transcript.achieved_load.numerator()));
    w.u64(static_cast<std::uint64_t>(transcript.achieved_load.denominator()));
    w.u8(transcript.optimal_claimed ? 1 : 0);
    return w.take();
}

} // namespace mmpir
