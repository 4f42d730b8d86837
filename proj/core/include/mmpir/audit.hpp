#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmpir/protocol.hpp"
#include "mmpir/rational.hpp"
#include "mmpir/serialize.hpp"

namespace mmpir {

/// The serialized wire form of one server's query; queries are equal iff
/// these byte strings are equal.
using CanonicalQuery = Bytes;

/// Exact or empirical distribution over canonical queries.
struct QueryDistribution {
    std::map<CanonicalQuery, Rational> mass;
    std::uint64_t outcomes = 0;
};

bool distributions_equal(const QueryDistribution &a, const QueryDistribution &b);

struct AuditOptions {
    /// Negative control: reference chunk slots without permuting them.
    bool permute_chunks = true;
};

/// All admissible (side, request) index pairs for a K-file library:
/// |S| = M, |P| = P, disjoint. Lexicographic order.
struct IndexPair {
    std::vector<std::uint32_t> side;
    std::vector<std::uint32_t> request;
};
std::vector<IndexPair> admissible_pairs(std::uint32_t files, std::uint32_t requests,
                                        std::uint32_t side_files);

/// Exact query distribution of one server under uniform user randomness,
/// obtained by enumerating the randomness components the query depends on
/// (images of the referenced chunk slots, column permutations). Guarded;
/// throws EnumerationLimitError with a pointer to the statistical mode when
/// the reduced outcome count would exceed 10^7.
QueryDistribution exact_distribution(const Params &params, const RequestSet &request,
                                     const std::vector<std::uint32_t> &side_indices,
                                     std::uint32_t server, const AuditOptions &options = {});

struct ExactAuditReport {
    std::uint32_t pair_count = 0;
    std::uint64_t outcomes_per_pair = 0;
    bool identical = true;
    std::vector<std::uint32_t> failing_servers;
};

/// Runs exact_distribution for every admissible pair and every server and
/// compares the distributions pairwise.
ExactAuditReport run_exact_audit(const Params &params, const AuditOptions &options = {});

struct ChiSquareResult {
    double statistic = 0.0;
    std::uint64_t degrees_of_freedom = 0;
    double p_value = 1.0;
    bool degenerate = false; // < 2 feature classes: no test possible
};

/// Pearson chi-square homogeneity test across rows of category counts.
/// Categories with expected count below 5 are pooled.
ChiSquareResult chi_square_homogeneity(const std::vector<std::map<std::string, std::uint64_t>> &rows);

/// Upper regularized incomplete gamma Q(a, x); the chi-square survival
/// function is Q(df/2, stat/2).
double gamma_q(double a, double x);

/// Samples `samples` queries of one server for a fixed request set and
/// counts the finite feature projection of each (per-file sorted multiset of
/// referenced chunks + coefficient column multiset).
std::map<std::string, std::uint64_t> sample_feature_counts(const Params &params,
                                                           const RequestSet &request,
                                                           std::uint32_t server,
                                                           std::uint64_t samples,
                                                           std::uint64_t seed,
                                                           const AuditOptions &options = {});

struct StatisticalAuditReport {
    std::uint32_t server = 0;
    std::uint32_t pair_count = 0;
    std::uint64_t samples_per_pair = 0;
    double alpha = 0.01;
    ChiSquareResult chi;
    bool pass = false;
};

/// Samples queries per admissible pair, projects them onto a finite feature
/// (per-file sorted multiset of referenced chunks + coefficient column
/// multiset), and tests homogeneity across pairs at significance `alpha`.
StatisticalAuditReport statistical_audit(const Params &params, std::uint32_t server,
                                         std::uint64_t samples, std::uint64_t seed,
                                         double alpha = 0.01, const AuditOptions &options = {});

/// All servers, Bonferroni-corrected: each tested at alpha / N.
std::vector<StatisticalAuditReport> statistical_audit_all(const Params &params,
                                                          std::uint64_t samples,
                                                          std::uint64_t seed,
                                                          double alpha = 0.01,
                                                          const AuditOptions &options = {});

} // namespace mmpir
