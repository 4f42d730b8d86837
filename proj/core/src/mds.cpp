#include "mmpir/mds.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace mmpir {

Matrix vandermonde(std::uint32_t rows, std::uint32_t cols, FieldModulus modulus,
                   std::uint32_t first_point) {
    if (std::uint64_t(first_point) + cols > modulus.q)
        throw FieldTooSmallError("field too small for " + std::to_string(cols) +
                                 " evaluation points");
    Matrix m(rows, cols, modulus);
    for (std::uint32_t j = 0; j < cols; ++j) {
        FieldElement point = fe(first_point + j, modulus);
        FieldElement power = fe(1, modulus); // point^0, including 0^0 = 1
        for (std::uint32_t i = 0; i < rows; ++i) {
            m.set(i, j, power);
            power = mul(power, point);
        }
    }
    return m;
}

Matrix inner_generator(std::uint32_t request_count, std::uint32_t file_count,
                       FieldModulus modulus) {
    if (request_count == 0 || file_count == 0)
        throw UsageError("inner generator needs positive dimensions");
    if (request_count > file_count)
        throw UsageError("inner generator cannot have more rows than columns");
    return vandermonde(request_count, file_count, modulus, 1);
}

MdsCode make_mds(std::uint32_t dimension, std::uint32_t length, FieldModulus modulus) {
    if (dimension == 0) throw UsageError("code dimension must be positive");
    if (dimension > length) throw UsageError("code dimension exceeds length");
    if (length >= modulus.q)
        throw FieldTooSmallError("code length " + std::to_string(length) +
                                 " does not fit in F_" + std::to_string(modulus.q));

    Matrix gen = vandermonde(dimension, length, modulus, 0);

    // Row-reduce so the first k columns become the identity. The leading
    // k x k block is Vandermonde on distinct points, hence invertible.
    const std::uint32_t k = dimension;
    const std::uint32_t n = length;
    for (std::uint32_t col = 0; col < k; ++col) {
        std::uint32_t pivot = col;
        while (pivot < k && gen.at(pivot, col).value == 0) ++pivot;
        if (pivot == k) throw SingularMatrixError("vandermonde block unexpectedly singular");
        if (pivot != col) {
            for (std::uint32_t j = 0; j < n; ++j) {
                FieldElement tmp = gen.at(col, j);
                gen.set(col, j, gen.at(pivot, j));
                gen.set(pivot, j, tmp);
            }
        }
        FieldElement scale = inv(gen.at(col, col));
        for (std::uint32_t j = 0; j < n; ++j) gen.set(col, j, mul(gen.at(col, j), scale));
        for (std::uint32_t row = 0; row < k; ++row) {
            if (row == col || gen.at(row, col).value == 0) continue;
            FieldElement factor = gen.at(row, col);
            for (std::uint32_t j = 0; j < n; ++j)
                gen.set(row, j, sub(gen.at(row, j), mul(factor, gen.at(col, j))));
        }
    }

    MdsCode code;
    code.length = length;
    code.dimension = dimension;
    code.modulus = modulus;
    code.eval_points.reserve(length);
    for (std::uint32_t j = 0; j < length; ++j) code.eval_points.push_back(fe(j, modulus));
    code.generator = std::move(gen);
    return code;
}

std::vector<FieldElement> encode(const MdsCode &code, const std::vector<FieldElement> &message) {
    if (message.size() != code.dimension)
        throw UsageError("message length does not match code dimension");
    return vec_mat_mul(message, code.generator);
}

std::vector<FieldElement> recover(const MdsCode &code, const std::vector<KnownSymbol> &known) {
    if (known.size() < code.dimension)
        throw InsufficientDataError("need " + std::to_string(code.dimension) +
                                    " known symbols, have " + std::to_string(known.size()));
    std::set<std::uint32_t> seen;
    for (const KnownSymbol &s : known) {
        if (s.position >= code.length) throw UsageError("known position out of range");
        if (!seen.insert(s.position).second) throw UsageError("duplicate known position");
    }

    const std::uint32_t k = code.dimension;
    Matrix system(k, k, code.modulus);
    std::vector<FieldElement> rhs(k, fe(0, code.modulus));
    for (std::uint32_t row = 0; row < k; ++row) {
        for (std::uint32_t i = 0; i < k; ++i)
            system.set(row, i, code.generator.at(i, known[row].position));
        rhs[row] = known[row].value;
    }
    std::vector<FieldElement> message = solve_linear(system, rhs);

    // Surplus positions must agree with the recovered codeword.
    for (std::size_t extra = k; extra < known.size(); ++extra) {
        FieldElement acc = fe(0, code.modulus);
        for (std::uint32_t i = 0; i < k; ++i)
            acc = add(acc, mul(message[i], code.generator.at(i, known[extra].position)));
        if (!(acc == known[extra].value))
            throw CorruptionError("known symbols are inconsistent with the code");
    }
    return message;
}

bool check_mds(const MdsCode &code) {
    const std::uint32_t n = code.length;
    const std::uint32_t k = code.dimension;

    // C(n, k) with an enumeration guard.
    std::uint64_t subsets = 1;
    for (std::uint32_t i = 0; i < k; ++i) {
        subsets = subsets * (n - i) / (i + 1);
        if (subsets > 1000000ull)
            throw EnumerationLimitError("too many column subsets to enumerate");
    }

    std::vector<std::uint32_t> subset(k);
    for (std::uint32_t i = 0; i < k; ++i) subset[i] = i;
    while (true) {
        Matrix sub(k, k, code.modulus);
        for (std::uint32_t col = 0; col < k; ++col)
            for (std::uint32_t row = 0; row < k; ++row)
                sub.set(row, col, code.generator.at(row, subset[col]));
        if (!invertible(sub)) return false;

        // Next k-combination of [0, n).
        std::int32_t i = static_cast<std::int32_t>(k) - 1;
        while (i >= 0 && subset[i] == n - k + i) --i;
        if (i < 0) break;
        ++subset[i];
        for (std::uint32_t j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
    }
    return true;
}

} // namespace mmpir
