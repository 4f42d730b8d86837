#pragma once

#include <cstdint>
#include <vector>

#include "mmpir/field.hpp"

namespace mmpir {

/// Systematic [length, dimension] Reed-Solomon-style code: the generator is
/// a Vandermonde matrix on evaluation points 0..length-1, row-reduced so the
/// first `dimension` columns form the identity. Any `dimension` codeword
/// positions determine the message.
struct MdsCode {
    std::uint32_t length = 0;    // n
    std::uint32_t dimension = 0; // k
    FieldModulus modulus;
    std::vector<FieldElement> eval_points;
    Matrix generator; // k x n, systematic [I | parity]
};

/// Deterministic construction for given (dimension, length, modulus).
/// Throws FieldTooSmallError when length >= modulus.
MdsCode make_mds(std::uint32_t dimension, std::uint32_t length, FieldModulus modulus);

/// message (k symbols) -> codeword (n symbols); systematic prefix.
std::vector<FieldElement> encode(const MdsCode &code, const std::vector<FieldElement> &message);

struct KnownSymbol {
    std::uint32_t position = 0;
    FieldElement value;
};

/// Erasure recovery from >= k known positions. Extra positions beyond k are
/// checked for consistency; disagreement raises CorruptionError.
std::vector<FieldElement> recover(const MdsCode &code, const std::vector<KnownSymbol> &known);

/// Exhaustively verifies the MDS property (every k columns independent).
/// Guarded to C(n, k) <= 10^6 subsets.
bool check_mds(const MdsCode &code);

/// rows x cols matrix whose row i holds the i-th powers of
/// first_point..first_point+cols-1.
Matrix vandermonde(std::uint32_t rows, std::uint32_t cols, FieldModulus modulus,
                   std::uint32_t first_point);

/// The non-systematic phase-2 combination matrix: a request_count x
/// file_count Vandermonde on points 1..file_count. Every request_count of
/// its columns are linearly independent.
Matrix inner_generator(std::uint32_t request_count, std::uint32_t file_count,
                       FieldModulus modulus);

} // namespace mmpir
