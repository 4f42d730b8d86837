#include "doctest.h"

#include <algorithm>
#include <set>

#include "mmpir/audit.hpp"
#include "mmpir/mds.hpp"
#include "mmpir/protocol.hpp"

using namespace mmpir;

namespace {

Params example1_params(std::uint32_t side_files) {
    return Params(2, 4, 2, side_files, 1, FieldModulus(65537));
}

/// Structural skeleton of a query: every count and dimension, no contents.
std::vector<std::uint32_t> skeleton(const Query &q) {
    std::vector<std::uint32_t> s = {q.file_count,   q.chunk_symbols,  q.row_count,
                                    q.outer_length, q.outer_dimension,
                                    static_cast<std::uint32_t>(q.phase1.size()),
                                    static_cast<std::uint32_t>(q.instances.size())};
    for (const ChunkRef &ref : q.phase1)
        s.push_back(static_cast<std::uint32_t>(ref.positions.size()));
    for (const Phase2Instance &inst : q.instances) {
        s.push_back(inst.coefficients.rows());
        s.push_back(inst.coefficients.cols());
        s.push_back(static_cast<std::uint32_t>(inst.chunk_refs.size()));
        for (const ChunkRef &ref : inst.chunk_refs)
            s.push_back(static_cast<std::uint32_t>(ref.positions.size()));
    }
    return s;
}

/// Test oracle: recomputes the p' plain chunks straight from the library and
/// the query descriptors.
std::vector<std::vector<FieldElement>> plain_chunks_oracle(const Library &library,
                                                           const Query &query) {
    std::vector<std::vector<FieldElement>> plain;
    auto gather = [&](std::uint32_t file, const ChunkRef &ref) {
        std::vector<FieldElement> chunk;
        for (std::uint32_t pos : ref.positions) chunk.push_back(library.files[file][pos]);
        return chunk;
    };
    for (std::uint32_t i = 0; i < query.file_count; ++i)
        plain.push_back(gather(i, query.phase1[i]));
    for (const Phase2Instance &inst : query.instances) {
        for (std::uint32_t r = 0; r < query.row_count; ++r) {
            std::vector<FieldElement> combo(query.chunk_symbols,
                                            fe(0, FieldModulus(query.modulus)));
            for (std::uint32_t i = 0; i < query.file_count; ++i) {
                std::vector<FieldElement> chunk = gather(i, inst.chunk_refs[i]);
                for (std::uint32_t s = 0; s < query.chunk_symbols; ++s)
                    combo[s] = add(combo[s], mul(inst.coefficients.at(r, i), chunk[s]));
            }
            plain.push_back(std::move(combo));
        }
    }
    return plain;
}

} // namespace

TEST_CASE("plan_scheme reproduces the reference loads") {
    SchemePlan with_side = plan_scheme(example1_params(1));
    CHECK(with_side.plain_chunks == 6);
    CHECK(with_side.known_chunks == 1);
    CHECK(with_side.answer_chunks == 5);
    CHECK(with_side.outer_length == 11);
    CHECK(with_side.outer_dimension == 6);
    CHECK(with_side.load_per_symbol == Rational(5, 4));

    SchemePlan no_side = plan_scheme(example1_params(0));
    CHECK(no_side.plain_chunks == 6);
    CHECK(no_side.answer_chunks == 6);
    CHECK(no_side.outer_length == 6); // rate-1 outer code
    CHECK(no_side.load_per_symbol == Rational(3, 2));

    SchemePlan three = plan_scheme(Params(3, 4, 2, 0, 1, FieldModulus(65537)));
    CHECK(three.plain_chunks == 8);
    CHECK(three.load_per_symbol == Rational(8, 6));
}

TEST_CASE("params validation") {
    FieldModulus q(65537);
    CHECK_THROWS_AS(Params(1, 4, 2, 1, 1, q), UsageError);
    CHECK_THROWS_AS(Params(2, 4, 0, 1, 1, q), UsageError);
    CHECK_THROWS_AS(Params(2, 3, 2, 2, 1, q), UsageError);
    CHECK_THROWS_AS(Params(2, 4, 2, 1, 0, q), UsageError);
    // q = 11 <= 2(K + P(N-1)) - M = 11 for (2,4,2,1).
    CHECK_THROWS_AS(Params(2, 4, 2, 1, 1, FieldModulus(11)), UsageError);
    CHECK_NOTHROW(Params(2, 4, 2, 1, 1, FieldModulus(13)));
}

TEST_CASE("reference parameters: query shape and answer length") {
    Params params = example1_params(1);
    RequestSet request{{0, 1}};
    std::vector<std::uint32_t> side = {2};
    Library library = random_library(4, params.file_symbols(), params.modulus, 99);

    std::vector<Query> queries = generate_queries(params, request, side, 7);
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].phase1.size() == 4);
    REQUIRE(queries[0].instances.size() == 1);
    CHECK(queries[0].instances[0].coefficients.rows() == 2);
    CHECK(queries[0].instances[0].coefficients.cols() == 4);
    CHECK(queries[0].instances[0].chunk_refs.size() == 4);

    for (const Query &query : queries) {
        Answer answer = answer_query(library, query);
        CHECK(answer.coded_chunks.size() == 5);
        for (const auto &chunk : answer.coded_chunks) CHECK(chunk.size() == 1);
    }
}

TEST_CASE("queries are deterministic in the seed and differ only in contents") {
    Params params = example1_params(1);
    RequestSet request{{0, 3}};
    std::vector<std::uint32_t> side = {1};

    std::vector<Query> a = generate_queries(params, request, side, 42);
    std::vector<Query> b = generate_queries(params, request, side, 42);
    CHECK(a == b);

    std::vector<Query> c = generate_queries(params, request, side, 43);
    CHECK(a != c);
    for (std::uint32_t n = 0; n < 2; ++n) REQUIRE(skeleton(a[n]) == skeleton(c[n]));
}

TEST_CASE("query skeleton is identical across all admissible (S,P) pairs") {
    Params params = example1_params(1);
    std::vector<IndexPair> pairs = admissible_pairs(4, 2, 1);
    REQUIRE(pairs.size() == 12);
    std::vector<Query> reference =
        generate_queries(params, RequestSet{pairs[0].request}, pairs[0].side, 5);
    for (const IndexPair &pair : pairs) {
        std::vector<Query> queries =
            generate_queries(params, RequestSet{pair.request}, pair.side, 17);
        for (std::uint32_t n = 0; n < 2; ++n)
            REQUIRE(skeleton(queries[n]) == skeleton(reference[n]));
    }
}

TEST_CASE("chunk descriptors within one query are pairwise disjoint per file") {
    Params params(3, 5, 2, 1, 2, FieldModulus(65537));
    RequestSet request{{1, 3}};
    std::vector<std::uint32_t> side = {0};
    std::vector<Query> queries = generate_queries(params, request, side, 21);
    for (const Query &query : queries) {
        for (std::uint32_t i = 0; i < params.files; ++i) {
            std::set<std::uint32_t> seen(query.phase1[i].positions.begin(),
                                         query.phase1[i].positions.end());
            std::size_t expected = query.phase1[i].positions.size();
            for (const Phase2Instance &inst : query.instances) {
                seen.insert(inst.chunk_refs[i].positions.begin(),
                            inst.chunk_refs[i].positions.end());
                expected += inst.chunk_refs[i].positions.size();
            }
            REQUIRE(seen.size() == expected);
        }
    }
}

TEST_CASE("chunk freshness across a whole exchange") {
    Params params(3, 5, 2, 1, 1, FieldModulus(65537));
    RequestSet request{{1, 3}};
    std::vector<std::uint32_t> side = {0};
    std::vector<Query> queries = generate_queries(params, request, side, 33);

    for (std::uint32_t file = 0; file < params.files; ++file) {
        std::set<std::uint32_t> chunks;
        for (const Query &query : queries) {
            chunks.insert(query.phase1[file].positions[0] / params.chunk_symbols);
            for (const Phase2Instance &inst : query.instances)
                chunks.insert(inst.chunk_refs[file].positions[0] / params.chunk_symbols);
        }
        const bool requested =
            std::binary_search(request.indices.begin(), request.indices.end(), file);
        if (requested)
            REQUIRE(chunks.size() == params.chunk_slots()); // N phase-1 + N(N-1) fresh
        else
            REQUIRE(chunks.size() == params.servers);
    }
}

TEST_CASE("all-zero library yields an all-zero answer") {
    Params params = example1_params(1);
    Library zero;
    zero.files.assign(4, std::vector<FieldElement>(params.file_symbols(), fe(0, params.modulus)));
    std::vector<Query> queries = generate_queries(params, RequestSet{{0, 1}}, {2}, 3);
    for (const Query &query : queries)
        for (const auto &chunk : answer_query(zero, query).coded_chunks)
            for (FieldElement v : chunk) CHECK(v.value == 0);
}

TEST_CASE("with M = 0 the answer is the plain chunks in order") {
    Params params = example1_params(0);
    Library library = random_library(4, params.file_symbols(), params.modulus, 5);
    std::vector<Query> queries = generate_queries(params, RequestSet{{0, 1}}, {}, 11);
    for (const Query &query : queries) {
        Answer answer = answer_query(library, query);
        REQUIRE(answer.coded_chunks == plain_chunks_oracle(library, query));
    }
}

TEST_CASE("answers are the outer parity of the plain chunks") {
    Params params = example1_params(1);
    Library library = random_library(4, params.file_symbols(), params.modulus, 6);
    std::vector<Query> queries = generate_queries(params, RequestSet{{0, 1}}, {2}, 13);
    MdsCode outer = make_mds(6, 11, params.modulus);
    for (const Query &query : queries) {
        Answer answer = answer_query(library, query);
        std::vector<std::vector<FieldElement>> plain = plain_chunks_oracle(library, query);
        std::vector<FieldElement> lane;
        for (std::uint32_t i = 0; i < 6; ++i) lane.push_back(plain[i][0]);
        std::vector<FieldElement> codeword = encode(outer, lane);
        for (std::uint32_t j = 0; j < 5; ++j) REQUIRE(answer.coded_chunks[j][0] == codeword[6 + j]);
    }
}

TEST_CASE("malformed queries are rejected by the server side") {
    Params params = example1_params(1);
    Library library = random_library(4, params.file_symbols(), params.modulus, 8);
    std::vector<Query> queries = generate_queries(params, RequestSet{{0, 1}}, {2}, 15);

    Query out_of_range = queries[0];
    out_of_range.phase1[0].positions[0] = params.file_symbols();
    CHECK_THROWS_AS(answer_query(library, out_of_range), MalformedQueryError);

    Query wrong_library = queries[0];
    wrong_library.file_count = 5;
    CHECK_THROWS_AS(answer_query(library, wrong_library), MalformedQueryError);

    Query bad_outer = queries[0];
    bad_outer.outer_dimension = 7;
    CHECK_THROWS_AS(answer_query(library, bad_outer), MalformedQueryError);
}

TEST_CASE("round trip on the reference parameters decodes the requested files") {
    Params params = example1_params(1);
    Library library = random_library(4, params.file_symbols(), params.modulus, 123);
    RequestSet request{{0, 1}};
    SideInfo side = side_info_from_library(library, {2});

    Transcript t = run_exchange(params, library, request, side, 77);
    REQUIRE(t.decoded.size() == 2);
    CHECK(t.decoded[0] == library.files[0]);
    CHECK(t.decoded[1] == library.files[1]);
    CHECK(t.decoded_equals_library == std::optional<bool>(true));
    CHECK(t.downloaded_symbols == 10);
    CHECK(t.achieved_load == Rational(5, 4));
    CHECK(t.optimal_claimed);
}

TEST_CASE("run_exchange loads match the closed form") {
    struct Case {
        std::uint32_t servers, files, requests, side;
        Rational load;
    };
    const Case cases[] = {
        {2, 4, 2, 1, Rational(5, 4)},
        {2, 4, 2, 0, Rational(3, 2)},
        {3, 5, 2, 1, Rational(4, 3)},
    };
    for (const Case &c : cases) {
        Params params(c.servers, c.files, c.requests, c.side, 1, FieldModulus(65537));
        Library library = random_library(c.files, params.file_symbols(), params.modulus, 31);
        std::vector<std::uint32_t> request_idx, side_idx;
        for (std::uint32_t i = 0; i < c.requests; ++i) request_idx.push_back(i);
        for (std::uint32_t i = 0; i < c.side; ++i) side_idx.push_back(c.requests + i);
        Transcript t = run_exchange(params, library, RequestSet{request_idx},
                                    side_info_from_library(library, side_idx), 9);
        REQUIRE(t.achieved_load == c.load);
        REQUIRE(t.decoded_equals_library == std::optional<bool>(true));
        const SchemePlan plan = plan_scheme(params);
        REQUIRE(t.downloaded_symbols ==
                std::uint64_t(c.servers) * plan.answer_chunks * params.chunk_symbols);
    }
}

TEST_CASE("decodability holds for multi-symbol chunks and the low regime") {
    // c > 1 exercises the lane-wise outer code; P < (K-M)/2 still decodes.
    Params params(2, 6, 1, 1, 3, FieldModulus(65537));
    CHECK(!params.high_regime());
    Library library = random_library(6, params.file_symbols(), params.modulus, 55);
    RequestSet request{{4}};
    SideInfo side = side_info_from_library(library, {2});
    Transcript t = run_exchange(params, library, request, side, 19);
    CHECK(t.decoded[0] == library.files[4]);
    CHECK(!t.optimal_claimed);
    CHECK(t.achieved_load == Rational(6, 2)); // 1 + (6-1-1)/(1*2)
}

TEST_CASE("decodability sweep over a small grid") {
    for (std::uint32_t servers : {2u, 3u}) {
        for (std::uint32_t files = 1; files <= 4; ++files) {
            for (std::uint32_t requests = 1; requests <= files; ++requests) {
                for (std::uint32_t side = 0; side + requests <= files; ++side) {
                    Params params(servers, files, requests, side, 1, FieldModulus(65537));
                    Library library =
                        random_library(files, params.file_symbols(), params.modulus,
                                       1000 + files * 10 + requests);
                    auto pairs = admissible_pairs(files, requests, side);
                    // One representative pair and a couple of seeds per tuple.
                    const IndexPair &pair = pairs[pairs.size() / 2];
                    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
                        Transcript t = run_exchange(params, library, RequestSet{pair.request},
                                                    side_info_from_library(library, pair.side),
                                                    seed);
                        REQUIRE(t.decoded_equals_library == std::optional<bool>(true));
                    }
                }
            }
        }
    }
}

TEST_CASE("tampered answers produce wrong output or an error") {
    Params params = example1_params(1);
    Library library = random_library(4, params.file_symbols(), params.modulus, 321);
    RequestSet request{{0, 1}};
    SideInfo side = side_info_from_library(library, {3});
    Randomness randomness = draw_randomness(params, 101);
    std::vector<Query> queries = build_queries(params, request, side.indices, randomness);
    std::vector<Answer> answers;
    for (const Query &q : queries) answers.push_back(answer_query(library, q));

    answers[0].coded_chunks[2][0] = add(answers[0].coded_chunks[2][0], fe(1, params.modulus));
    bool detected = false;
    try {
        auto decoded = decode(params, queries, answers, request, side, randomness);
        detected = decoded[0] != library.files[0] || decoded[1] != library.files[1];
    } catch (const Error &) {
        detected = true;
    }
    CHECK(detected);
}

TEST_CASE("request/side validation") {
    Params params = example1_params(1);
    CHECK_THROWS_AS(generate_queries(params, RequestSet{{0, 1}}, {0}, 1), UsageError);
    CHECK_THROWS_AS(generate_queries(params, RequestSet{{0}}, {1}, 1), UsageError);
    CHECK_THROWS_AS(generate_queries(params, RequestSet{{1, 0}}, {2}, 1), UsageError);
    CHECK_THROWS_AS(generate_queries(params, RequestSet{{0, 4}}, {2}, 1), UsageError);
}
