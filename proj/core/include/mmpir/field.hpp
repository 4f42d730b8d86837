#pragma once

#include <cstdint>
#include <vector>

#include "mmpir/errors.hpp"

namespace mmpir {

/// Deterministic primality test, valid for all 32-bit inputs.
bool is_prime_u32(std::uint32_t n);

/// Prime modulus of the working field F_q. Primality is verified at
/// construction.
struct FieldModulus {
    std::uint32_t q = 0;

    FieldModulus() = default;
    explicit FieldModulus(std::uint32_t modulus);

    bool operator==(const FieldModulus &other) const { return q == other.q; }
};

/// One element of F_q, stored canonically (value < modulus). Elements carry
/// their modulus so that accidental cross-field arithmetic is caught.
struct FieldElement {
    std::uint32_t value = 0;
    std::uint32_t modulus = 0;

    bool operator==(const FieldElement &other) const {
        return value == other.value && modulus == other.modulus;
    }
};

/// Builds a canonical element, reducing the input value.
FieldElement fe(std::uint64_t value, FieldModulus m);

FieldElement add(FieldElement a, FieldElement b);
FieldElement sub(FieldElement a, FieldElement b);
FieldElement mul(FieldElement a, FieldElement b);
FieldElement neg(FieldElement a);

/// Multiplicative inverse via extended Euclid. Throws DivisionByZeroError
/// for the zero element.
FieldElement inv(FieldElement a);

/// Dense row-major matrix over F_q.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::uint32_t rows, std::uint32_t cols, FieldModulus modulus);

    std::uint32_t rows() const { return rows_; }
    std::uint32_t cols() const { return cols_; }
    FieldModulus modulus() const { return modulus_; }

    FieldElement at(std::uint32_t r, std::uint32_t c) const {
        return FieldElement{entries_[index(r, c)], modulus_.q};
    }
    void set(std::uint32_t r, std::uint32_t c, FieldElement v);

    static Matrix identity(std::uint32_t n, FieldModulus modulus);

    bool operator==(const Matrix &other) const = default;

private:
    std::size_t index(std::uint32_t r, std::uint32_t c) const {
        return static_cast<std::size_t>(r) * cols_ + c;
    }

    std::uint32_t rows_ = 0;
    std::uint32_t cols_ = 0;
    FieldModulus modulus_;
    std::vector<std::uint32_t> entries_;
};

Matrix mat_mul(const Matrix &a, const Matrix &b);
Matrix transpose(const Matrix &m);

/// Row vector times matrix: message (1 x k) * m (k x n) -> (1 x n).
std::vector<FieldElement> vec_mat_mul(const std::vector<FieldElement> &v, const Matrix &m);

/// Solves A x = b by Gaussian elimination with first-nonzero pivoting.
/// Throws SingularMatrixError when A has no inverse.
std::vector<FieldElement> solve_linear(const Matrix &a, const std::vector<FieldElement> &b);

/// True iff the square matrix has full rank.
bool invertible(const Matrix &m);

} // namespace mmpir
