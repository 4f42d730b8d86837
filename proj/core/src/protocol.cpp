#include "mmpir/protocol.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "mmpir/mds.hpp"

namespace mmpir {

namespace {

void validate_indices(const std::vector<std::uint32_t> &indices, std::uint32_t expected,
                      std::uint32_t file_count, const char *what) {
    if (indices.size() != expected)
        throw UsageError(std::string(what) + " must contain exactly " +
                         std::to_string(expected) + " indices");
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= file_count)
            throw UsageError(std::string(what) + " index out of range");
        if (i > 0 && indices[i] <= indices[i - 1])
            throw UsageError(std::string(what) + " indices must be strictly increasing");
    }
}

void validate_request_side(const Params &params, const RequestSet &request,
                           const std::vector<std::uint32_t> &side_indices) {
    validate_indices(request.indices, params.requests, params.files, "request set");
    validate_indices(side_indices, params.side_files, params.files, "side information");
    std::set<std::uint32_t> req(request.indices.begin(), request.indices.end());
    for (std::uint32_t s : side_indices)
        if (req.count(s)) throw UsageError("request and side information sets must be disjoint");
}

/// Server paired with instance t of server n (the other servers in
/// ascending order).
std::uint32_t paired_server(std::uint32_t server, std::uint32_t instance) {
    return instance < server ? instance : instance + 1;
}

/// Position of instance (server, t) in the fixed global instance order.
std::uint32_t global_instance(const Params &params, std::uint32_t server, std::uint32_t instance) {
    return server * (params.servers - 1) + instance;
}

ChunkRef chunk_ref_for(const Params &params, std::uint32_t physical_chunk) {
    ChunkRef ref;
    ref.positions.reserve(params.chunk_symbols);
    std::uint32_t base = physical_chunk * params.chunk_symbols;
    for (std::uint32_t i = 0; i < params.chunk_symbols; ++i) ref.positions.push_back(base + i);
    return ref;
}

std::vector<FieldElement> gather_chunk(const Library &library, std::uint32_t file,
                                       const ChunkRef &ref) {
    std::vector<FieldElement> chunk;
    chunk.reserve(ref.positions.size());
    for (std::uint32_t pos : ref.positions) chunk.push_back(library.files[file][pos]);
    return chunk;
}

} // namespace

Params::Params(std::uint32_t servers_, std::uint32_t files_, std::uint32_t requests_,
               std::uint32_t side_files_, std::uint32_t chunk_symbols_, FieldModulus modulus_)
    : servers(servers_), files(files_), requests(requests_), side_files(side_files_),
      chunk_symbols(chunk_symbols_), modulus(modulus_) {
    if (servers < 2) throw UsageError("at least 2 servers are required");
    if (files < 1) throw UsageError("library must hold at least one file");
    if (requests < 1) throw UsageError("at least one file must be requested");
    if (requests + side_files > files)
        throw UsageError("request and side information sizes exceed the library");
    if (chunk_symbols < 1) throw UsageError("chunk size must be positive");
    const std::uint64_t longest_code =
        2ull * (files + std::uint64_t(requests) * (servers - 1)) - side_files;
    if (modulus.q <= std::max<std::uint64_t>(files, longest_code))
        throw UsageError("field modulus too small for the code lengths of these parameters");
}

SchemePlan plan_scheme(const Params &params) {
    SchemePlan plan;
    plan.chunks_per_file = params.chunk_slots();
    plan.plain_chunks = params.files + params.requests * (params.servers - 1);
    plan.known_chunks = params.side_files;
    plan.answer_chunks = plan.plain_chunks - plan.known_chunks;
    plan.outer_dimension = plan.plain_chunks;
    plan.outer_length = params.side_files == 0 ? plan.plain_chunks
                                               : 2 * plan.plain_chunks - params.side_files;
    plan.load_per_symbol = Rational(plan.answer_chunks, params.requests * params.servers);
    return plan;
}

Library random_library(std::uint32_t files, std::uint32_t file_symbols, FieldModulus modulus,
                       std::uint64_t seed) {
    Rng rng(seed);
    Library library;
    library.files.resize(files);
    for (auto &file : library.files) {
        file.reserve(file_symbols);
        for (std::uint32_t i = 0; i < file_symbols; ++i)
            file.push_back(fe(rng.uniform(modulus.q), modulus));
    }
    return library;
}

Randomness draw_randomness(const Params &params, Rng &rng) {
    Randomness r;
    r.chunk_perm.reserve(params.files);
    for (std::uint32_t i = 0; i < params.files; ++i)
        r.chunk_perm.push_back(rng.permutation(params.chunk_slots()));
    r.column_perm.resize(params.servers);
    for (std::uint32_t n = 0; n < params.servers; ++n) {
        r.column_perm[n].reserve(params.servers - 1);
        for (std::uint32_t t = 0; t + 1 < params.servers; ++t)
            r.column_perm[n].push_back(rng.permutation(params.files));
    }
    return r;
}

Randomness draw_randomness(const Params &params, std::uint64_t seed) {
    Rng rng(seed);
    Randomness r = draw_randomness(params, rng);
    r.seed = seed;
    return r;
}

Randomness identity_randomness(const Params &params) {
    Randomness r;
    std::vector<std::uint32_t> slot_id(params.chunk_slots());
    for (std::uint32_t i = 0; i < slot_id.size(); ++i) slot_id[i] = i;
    std::vector<std::uint32_t> col_id(params.files);
    for (std::uint32_t i = 0; i < col_id.size(); ++i) col_id[i] = i;
    r.chunk_perm.assign(params.files, slot_id);
    r.column_perm.assign(params.servers,
                         std::vector<std::vector<std::uint32_t>>(params.servers - 1, col_id));
    return r;
}

std::vector<std::uint32_t> referenced_slots(const Params &params, const RequestSet &request,
                                            std::uint32_t server, std::uint32_t file) {
    const bool requested =
        std::binary_search(request.indices.begin(), request.indices.end(), file);
    std::vector<std::uint32_t> slots;
    slots.reserve(params.servers);
    slots.push_back(server); // phase 1
    for (std::uint32_t t = 0; t + 1 < params.servers; ++t) {
        if (requested)
            slots.push_back(params.servers + global_instance(params, server, t));
        else
            slots.push_back(paired_server(server, t));
    }
    return slots;
}

Query build_server_query(const Params &params, const RequestSet &request, std::uint32_t server,
                         const std::vector<std::vector<std::uint32_t>> &chunk_perm,
                         const std::vector<std::vector<std::uint32_t>> &column_perm) {
    const SchemePlan plan = plan_scheme(params);
    Query query;
    query.modulus = params.modulus.q;
    query.file_count = params.files;
    query.file_symbols = params.file_symbols();
    query.chunk_symbols = params.chunk_symbols;
    query.row_count = params.requests;
    query.outer_length = plan.outer_length;
    query.outer_dimension = plan.outer_dimension;

    query.phase1.reserve(params.files);
    for (std::uint32_t i = 0; i < params.files; ++i)
        query.phase1.push_back(chunk_ref_for(params, chunk_perm[i][server]));

    const Matrix base = inner_generator(params.requests, params.files, params.modulus);
    query.instances.reserve(params.servers - 1);
    for (std::uint32_t t = 0; t + 1 < params.servers; ++t) {
        Phase2Instance instance;
        instance.coefficients = Matrix(params.requests, params.files, params.modulus);
        const std::vector<std::uint32_t> &perm = column_perm[t];
        for (std::uint32_t j = 0; j < params.files; ++j)
            for (std::uint32_t r = 0; r < params.requests; ++r)
                instance.coefficients.set(r, j, base.at(r, perm[j]));

        const std::uint32_t fresh_slot = params.servers + global_instance(params, server, t);
        const std::uint32_t partner = paired_server(server, t);
        instance.chunk_refs.reserve(params.files);
        for (std::uint32_t i = 0; i < params.files; ++i) {
            const bool requested =
                std::binary_search(request.indices.begin(), request.indices.end(), i);
            const std::uint32_t slot = requested ? fresh_slot : partner;
            instance.chunk_refs.push_back(chunk_ref_for(params, chunk_perm[i][slot]));
        }
        query.instances.push_back(std::move(instance));
    }
    return query;
}

std::vector<Query> build_queries(const Params &params, const RequestSet &request,
                                 const std::vector<std::uint32_t> &side_indices,
                                 const Randomness &randomness) {
    validate_request_side(params, request, side_indices);
    std::vector<Query> queries;
    queries.reserve(params.servers);
    for (std::uint32_t n = 0; n < params.servers; ++n)
        queries.push_back(build_server_query(params, request, n, randomness.chunk_perm,
                                             randomness.column_perm[n]));
    return queries;
}

std::vector<Query> generate_queries(const Params &params, const RequestSet &request,
                                    const std::vector<std::uint32_t> &side_indices,
                                    std::uint64_t seed) {
    return build_queries(params, request, side_indices, draw_randomness(params, seed));
}

Answer answer_query(const Library &library, const Query &query) {
    if (library.files.size() != query.file_count)
        throw MalformedQueryError("query file count does not match library");
    for (const auto &file : library.files)
        if (file.size() != query.file_symbols)
            throw MalformedQueryError("query file length does not match library");
    if (query.chunk_symbols == 0) throw MalformedQueryError("zero chunk size");
    if (query.phase1.size() != query.file_count)
        throw MalformedQueryError("phase-1 descriptor count mismatch");

    const std::uint32_t expected_plain =
        query.file_count + query.row_count * static_cast<std::uint32_t>(query.instances.size());
    if (query.outer_dimension != expected_plain)
        throw MalformedQueryError("outer code dimension does not match query shape");
    if (query.outer_length < query.outer_dimension ||
        query.outer_length > 2 * query.outer_dimension || query.outer_length >= query.modulus)
        throw MalformedQueryError("outer code length out of range");

    auto check_ref = [&](const ChunkRef &ref) {
        if (ref.positions.size() != query.chunk_symbols)
            throw MalformedQueryError("chunk descriptor has wrong size");
        for (std::uint32_t pos : ref.positions)
            if (pos >= query.file_symbols)
                throw MalformedQueryError("chunk position out of range");
    };
    for (const ChunkRef &ref : query.phase1) check_ref(ref);
    for (const Phase2Instance &instance : query.instances) {
        if (instance.chunk_refs.size() != query.file_count)
            throw MalformedQueryError("instance descriptor count mismatch");
        if (instance.coefficients.rows() != query.row_count ||
            instance.coefficients.cols() != query.file_count ||
            instance.coefficients.modulus().q != query.modulus)
            throw MalformedQueryError("coefficient matrix has wrong shape");
        for (const ChunkRef &ref : instance.chunk_refs) check_ref(ref);
    }

    const FieldModulus modulus(query.modulus);
    const std::uint32_t c = query.chunk_symbols;

    // The p' plain chunks: phase-1 chunks in file order, then P combination
    // chunks per instance.
    std::vector<std::vector<FieldElement>> plain;
    plain.reserve(query.outer_dimension);
    for (std::uint32_t i = 0; i < query.file_count; ++i)
        plain.push_back(gather_chunk(library, i, query.phase1[i]));
    for (const Phase2Instance &instance : query.instances) {
        std::vector<std::vector<FieldElement>> referenced;
        referenced.reserve(query.file_count);
        for (std::uint32_t i = 0; i < query.file_count; ++i)
            referenced.push_back(gather_chunk(library, i, instance.chunk_refs[i]));
        for (std::uint32_t r = 0; r < query.row_count; ++r) {
            std::vector<FieldElement> combo(c, fe(0, modulus));
            for (std::uint32_t i = 0; i < query.file_count; ++i) {
                FieldElement coeff = instance.coefficients.at(r, i);
                for (std::uint32_t s = 0; s < c; ++s)
                    combo[s] = add(combo[s], mul(coeff, referenced[i][s]));
            }
            plain.push_back(std::move(combo));
        }
    }

    Answer answer;
    if (query.outer_length == query.outer_dimension) {
        answer.coded_chunks = std::move(plain); // rate-1 outer code
        return answer;
    }

    const MdsCode outer = make_mds(query.outer_dimension, query.outer_length, modulus);
    const std::uint32_t parity = query.outer_length - query.outer_dimension;
    answer.coded_chunks.assign(parity, std::vector<FieldElement>(c, fe(0, modulus)));
    std::vector<FieldElement> lane(query.outer_dimension, fe(0, modulus));
    for (std::uint32_t s = 0; s < c; ++s) {
        for (std::uint32_t i = 0; i < query.outer_dimension; ++i) lane[i] = plain[i][s];
        std::vector<FieldElement> codeword = encode(outer, lane);
        for (std::uint32_t j = 0; j < parity; ++j)
            answer.coded_chunks[j][s] = codeword[query.outer_dimension + j];
    }
    return answer;
}

std::vector<std::vector<FieldElement>> decode(const Params &params,
                                              const std::vector<Query> &queries,
                                              const std::vector<Answer> &answers,
                                              const RequestSet &request, const SideInfo &side,
                                              const Randomness &randomness) {
    validate_request_side(params, request, side.indices);
    if (side.contents.size() != side.indices.size())
        throw UsageError("side information contents do not match its indices");
    for (const auto &content : side.contents)
        if (content.size() != params.file_symbols())
            throw UsageError("side information file has wrong length");
    if (queries.size() != params.servers || answers.size() != params.servers)
        throw UsageError("need one query and one answer per server");

    const SchemePlan plan = plan_scheme(params);
    const std::uint32_t c = params.chunk_symbols;
    const std::uint32_t p_plain = plan.plain_chunks;
    for (const Answer &answer : answers) {
        if (answer.coded_chunks.size() != plan.answer_chunks)
            throw ProtocolViolationError("answer chunk count does not match the plan");
        for (const auto &chunk : answer.coded_chunks)
            if (chunk.size() != c) throw ProtocolViolationError("answer chunk has wrong size");
    }

    // Reconstruct every server's p' plain chunks.
    std::vector<std::vector<std::vector<FieldElement>>> plain(params.servers);
    if (plan.known_chunks == 0) {
        for (std::uint32_t n = 0; n < params.servers; ++n)
            plain[n] = answers[n].coded_chunks;
    } else {
        const MdsCode outer = make_mds(plan.outer_dimension, plan.outer_length, params.modulus);
        for (std::uint32_t n = 0; n < params.servers; ++n) {
            // The q' = M systematic chunks the user can compute itself: the
            // phase-1 chunks of the side-information files.
            std::vector<std::vector<FieldElement>> side_chunks(side.indices.size());
            for (std::size_t j = 0; j < side.indices.size(); ++j) {
                const std::uint32_t file = side.indices[j];
                const std::uint32_t physical = randomness.chunk_perm[file][n];
                side_chunks[j].reserve(c);
                for (std::uint32_t s = 0; s < c; ++s)
                    side_chunks[j].push_back(side.contents[j][physical * c + s]);
            }

            plain[n].assign(p_plain, std::vector<FieldElement>(c, fe(0, params.modulus)));
            std::vector<KnownSymbol> known(side.indices.size() + plan.answer_chunks);
            for (std::uint32_t s = 0; s < c; ++s) {
                std::size_t w = 0;
                for (std::size_t j = 0; j < side.indices.size(); ++j)
                    known[w++] = KnownSymbol{side.indices[j], side_chunks[j][s]};
                for (std::uint32_t j = 0; j < plan.answer_chunks; ++j)
                    known[w++] = KnownSymbol{p_plain + j, answers[n].coded_chunks[j][s]};
                std::vector<FieldElement> lane;
                try {
                    lane = recover(outer, known);
                } catch (const Error &e) {
                    throw ProtocolViolationError(std::string("outer code recovery failed: ") +
                                                 e.what());
                }
                for (std::uint32_t i = 0; i < p_plain; ++i) plain[n][i][s] = lane[i];
            }
        }
    }

    // Logical chunk table of each requested file. Phase 1 provides slots
    // 0..N-1 directly.
    std::vector<std::vector<std::vector<FieldElement>>> file_chunks(
        request.indices.size(),
        std::vector<std::vector<FieldElement>>(params.chunk_slots()));
    for (std::size_t idx = 0; idx < request.indices.size(); ++idx)
        for (std::uint32_t n = 0; n < params.servers; ++n)
            file_chunks[idx][n] = plain[n][request.indices[idx]];

    // Peel each phase-2 instance: subtract the known non-requested chunks,
    // then solve for the P fresh requested chunks.
    for (std::uint32_t n = 0; n < params.servers; ++n) {
        for (std::uint32_t t = 0; t + 1 < params.servers; ++t) {
            const Matrix &coeff = queries[n].instances[t].coefficients;
            const std::uint32_t partner = paired_server(n, t);
            const std::uint32_t fresh_slot =
                params.servers + global_instance(params, n, t);

            Matrix system(params.requests, params.requests, params.modulus);
            for (std::uint32_t r = 0; r < params.requests; ++r)
                for (std::uint32_t idx = 0; idx < params.requests; ++idx)
                    system.set(r, idx, coeff.at(r, request.indices[idx]));

            std::vector<std::vector<FieldElement>> residual(
                params.requests, std::vector<FieldElement>(c, fe(0, params.modulus)));
            for (std::uint32_t r = 0; r < params.requests; ++r) {
                residual[r] = plain[n][params.files + t * params.requests + r];
                for (std::uint32_t i = 0; i < params.files; ++i) {
                    if (std::binary_search(request.indices.begin(), request.indices.end(), i))
                        continue;
                    FieldElement weight = coeff.at(r, i);
                    for (std::uint32_t s = 0; s < c; ++s)
                        residual[r][s] = sub(residual[r][s], mul(weight, plain[partner][i][s]));
                }
            }

            std::vector<FieldElement> rhs(params.requests, fe(0, params.modulus));
            for (std::uint32_t idx = 0; idx < params.requests; ++idx)
                file_chunks[idx][fresh_slot].assign(c, fe(0, params.modulus));
            for (std::uint32_t s = 0; s < c; ++s) {
                for (std::uint32_t r = 0; r < params.requests; ++r) rhs[r] = residual[r][s];
                std::vector<FieldElement> fresh;
                try {
                    fresh = solve_linear(system, rhs);
                } catch (const SingularMatrixError &e) {
                    throw ProtocolViolationError(
                        std::string("phase-2 combination system is singular: ") + e.what());
                }
                for (std::uint32_t idx = 0; idx < params.requests; ++idx)
                    file_chunks[idx][fresh_slot][s] = fresh[idx];
            }
        }
    }

    // Undo the chunk permutation to reassemble each requested file.
    std::vector<std::vector<FieldElement>> decoded(request.indices.size());
    for (std::size_t idx = 0; idx < request.indices.size(); ++idx) {
        const std::uint32_t file = request.indices[idx];
        decoded[idx].assign(params.file_symbols(), fe(0, params.modulus));
        for (std::uint32_t slot = 0; slot < params.chunk_slots(); ++slot) {
            if (file_chunks[idx][slot].size() != c)
                throw ProtocolViolationError("missing chunk during reassembly");
            const std::uint32_t physical = randomness.chunk_perm[file][slot];
            for (std::uint32_t s = 0; s < c; ++s)
                decoded[idx][physical * c + s] = file_chunks[idx][slot][s];
        }
    }
    return decoded;
}

SideInfo side_info_from_library(const Library &library,
                                const std::vector<std::uint32_t> &indices) {
    SideInfo side;
    side.indices = indices;
    side.contents.reserve(indices.size());
    for (std::uint32_t i : indices) {
        if (i >= library.files.size()) throw UsageError("side index out of range");
        side.contents.push_back(library.files[i]);
    }
    return side;
}

bool content_equal(const Transcript &a, const Transcript &b) {
    return a.params == b.params && a.request == b.request && a.side_indices == b.side_indices &&
           a.seed == b.seed && a.queries == b.queries && a.answers == b.answers &&
           a.decoded == b.decoded && a.downloaded_symbols == b.downloaded_symbols &&
           a.achieved_load == b.achieved_load && a.optimal_claimed == b.optimal_claimed;
}

Transcript run_exchange(const Params &params, const Library &library, const RequestSet &request,
                        const SideInfo &side, std::uint64_t seed) {
    if (library.files.size() != params.files)
        throw UsageError("library file count does not match parameters");
    for (const auto &file : library.files)
        if (file.size() != params.file_symbols())
            throw UsageError("library file length does not match parameters");
    for (std::size_t j = 0; j < side.indices.size(); ++j)
        if (side.contents.size() == side.indices.size() &&
            !(side.contents[j] == library.files[side.indices[j]]))
            throw UsageError("side information contents disagree with the library");

    const SchemePlan plan = plan_scheme(params);
    const Randomness randomness = draw_randomness(params, seed);

    Transcript transcript;
    transcript.params = params;
    transcript.request = request.indices;
    transcript.side_indices = side.indices;
    transcript.seed = seed;
    transcript.queries = build_queries(params, request, side.indices, randomness);
    transcript.answers.reserve(params.servers);
    for (std::uint32_t n = 0; n < params.servers; ++n)
        transcript.answers.push_back(answer_query(library, transcript.queries[n]));
    transcript.decoded =
        decode(params, transcript.queries, transcript.answers, request, side, randomness);
    transcript.downloaded_symbols =
        std::uint64_t(params.servers) * plan.answer_chunks * params.chunk_symbols;
    transcript.achieved_load =
        Rational(static_cast<std::int64_t>(transcript.downloaded_symbols),
                 static_cast<std::int64_t>(params.requests) * params.file_symbols());
    transcript.optimal_claimed = params.high_regime();

    bool match = true;
    for (std::size_t idx = 0; idx < request.indices.size(); ++idx)
        match = match && transcript.decoded[idx] == library.files[request.indices[idx]];
    transcript.decoded_equals_library = match;
    return transcript;
}

} // namespace mmpir
