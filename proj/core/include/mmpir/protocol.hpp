#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mmpir/field.hpp"
#include "mmpir/rational.hpp"
#include "mmpir/rng.hpp"

namespace mmpir {

/// Problem parameters. Each of the `files` library files holds
/// file_symbols() = chunk_symbols * servers^2 field elements; queries
/// address them in chunks of chunk_symbols consecutive symbols.
struct Params {
    std::uint32_t servers = 0;       // N >= 2
    std::uint32_t files = 0;         // K >= 1
    std::uint32_t requests = 0;      // P >= 1
    std::uint32_t side_files = 0;    // M >= 0, P + M <= K
    std::uint32_t chunk_symbols = 1; // c >= 1
    FieldModulus modulus;

    Params() = default;
    Params(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
           std::uint32_t side_files, std::uint32_t chunk_symbols, FieldModulus modulus);

    std::uint32_t chunk_slots() const { return servers * servers; }
    std::uint32_t file_symbols() const { return chunk_symbols * chunk_slots(); }

    /// True when 2P >= K - M; only then is the achieved load optimal.
    bool high_regime() const { return 2 * requests >= files - side_files; }

    bool operator==(const Params &other) const = default;
};

/// Derived per-exchange structure, in chunk units.
struct SchemePlan {
    std::uint32_t chunks_per_file = 0; // N^2
    std::uint32_t plain_chunks = 0;    // p' = K + P(N-1) per server
    std::uint32_t known_chunks = 0;    // q' = M reconstructible from side info
    std::uint32_t answer_chunks = 0;   // p' - q' transmitted per server
    std::uint32_t outer_length = 0;    // 2p' - q' (p' when M = 0: rate-1)
    std::uint32_t outer_dimension = 0; // p'
    Rational load_per_symbol;          // (K + P(N-1) - M) / (P N)
};

SchemePlan plan_scheme(const Params &params);

struct Library {
    std::vector<std::vector<FieldElement>> files;
};

Library random_library(std::uint32_t files, std::uint32_t file_symbols, FieldModulus modulus,
                       std::uint64_t seed);

/// Indices (0-based) of the P files the user wants. Stored sorted.
struct RequestSet {
    std::vector<std::uint32_t> indices;
};

/// Indices and contents of the M files the user already holds.
struct SideInfo {
    std::vector<std::uint32_t> indices;
    std::vector<std::vector<FieldElement>> contents; // aligned with indices
};

/// All user randomness for one exchange: a permutation of the N^2 chunk
/// slots per file (slot -> physical chunk) and one column permutation of the
/// combination matrix per (server, instance).
struct Randomness {
    std::uint64_t seed = 0;
    std::vector<std::vector<std::uint32_t>> chunk_perm;                // [file][slot]
    std::vector<std::vector<std::vector<std::uint32_t>>> column_perm; // [server][instance][col]
};

Randomness draw_randomness(const Params &params, std::uint64_t seed);
Randomness draw_randomness(const Params &params, Rng &rng);

/// Degenerate randomness (all permutations identity). Breaks privacy by
/// construction; used as the audit's negative control.
Randomness identity_randomness(const Params &params);

/// The raw symbol positions making up one referenced chunk.
struct ChunkRef {
    std::vector<std::uint32_t> positions; // chunk_symbols entries
    bool operator==(const ChunkRef &other) const = default;
};

/// One phase-2 combination instance: a P x K coefficient matrix (a column
/// permutation of the canonical inner generator, columns aligned to files in
/// index order) over one referenced chunk per file.
struct Phase2Instance {
    Matrix coefficients;
    std::vector<ChunkRef> chunk_refs; // K, file order
    bool operator==(const Phase2Instance &other) const = default;
};

/// Everything one server receives. Carries enough static context to be
/// validated and answered in isolation.
struct Query {
    std::uint32_t modulus = 0;
    std::uint32_t file_count = 0;     // K
    std::uint32_t file_symbols = 0;   // L
    std::uint32_t chunk_symbols = 0;  // c
    std::uint32_t row_count = 0;      // P
    std::uint32_t outer_length = 0;   // codeword chunks
    std::uint32_t outer_dimension = 0; // p'
    std::vector<ChunkRef> phase1;           // K, file order
    std::vector<Phase2Instance> instances;  // N-1

    bool operator==(const Query &other) const = default;
};

struct Answer {
    std::vector<std::vector<FieldElement>> coded_chunks; // (p'-q') x c
    bool operator==(const Answer &other) const = default;
};

/// Ordered list of chunk slots of one file referenced by one server's query:
/// the phase-1 slot first, then one slot per phase-2 instance.
std::vector<std::uint32_t> referenced_slots(const Params &params, const RequestSet &request,
                                            std::uint32_t server, std::uint32_t file);

/// Builds server `server`'s query from explicit randomness. Only the
/// referenced entries of chunk_perm are read.
Query build_server_query(const Params &params, const RequestSet &request, std::uint32_t server,
                         const std::vector<std::vector<std::uint32_t>> &chunk_perm,
                         const std::vector<std::vector<std::uint32_t>> &column_perm);

std::vector<Query> build_queries(const Params &params, const RequestSet &request,
                                 const std::vector<std::uint32_t> &side_indices,
                                 const Randomness &randomness);

/// Queries are a deterministic function of (params, request, side, seed).
std::vector<Query> generate_queries(const Params &params, const RequestSet &request,
                                    const std::vector<std::uint32_t> &side_indices,
                                    std::uint64_t seed);

/// Server side: gathers the referenced chunks, forms the p' plain chunks,
/// and outer-encodes them, emitting only the non-systematic part (all p'
/// plain chunks when the outer code is rate-1).
Answer answer_query(const Library &library, const Query &query);

/// User side: reconstructs every server's p' plain chunks from the answers
/// and side information, peels the phase-2 combinations, and reassembles the
/// requested files. Returns them in ascending request-index order.
std::vector<std::vector<FieldElement>> decode(const Params &params,
                                              const std::vector<Query> &queries,
                                              const std::vector<Answer> &answers,
                                              const RequestSet &request, const SideInfo &side,
                                              const Randomness &randomness);

/// Full record of one exchange. `decoded_equals_library` is only known when
/// the exchange ran against a local library (run_exchange); a networked
/// fetch cannot evaluate it and leaves it empty. Content equality between
/// transcripts deliberately ignores that flag.
struct Transcript {
    Params params;
    std::vector<std::uint32_t> request;
    std::vector<std::uint32_t> side_indices;
    std::uint64_t seed = 0;
    std::vector<Query> queries;
    std::vector<Answer> answers;
    std::vector<std::vector<FieldElement>> decoded;
    std::uint64_t downloaded_symbols = 0;
    Rational achieved_load;
    bool optimal_claimed = false; // high-regime flag
    std::optional<bool> decoded_equals_library;
};

bool content_equal(const Transcript &a, const Transcript &b);

/// End-to-end in-memory exchange driver.
Transcript run_exchange(const Params &params, const Library &library, const RequestSet &request,
                        const SideInfo &side, std::uint64_t seed);

/// Extracts the side-info files (indices + contents) from a library.
SideInfo side_info_from_library(const Library &library, const std::vector<std::uint32_t> &indices);

} // namespace mmpir
