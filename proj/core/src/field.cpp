#include "mmpir/field.hpp"

#include <cstdint>
#include <string>

namespace mmpir {

namespace {

std::uint64_t pow_mod_u64(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
    std::uint64_t result = 1;
    base %= mod;
    while (exp > 0) {
        if (exp & 1) result = (__uint128_t(result) * base) % mod;
        base = (__uint128_t(base) * base) % mod;
        exp >>= 1;
    }
    return result;
}

bool miller_rabin(std::uint32_t n, std::uint32_t a) {
    std::uint32_t d = n - 1;
    std::uint32_t r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    std::uint64_t x = pow_mod_u64(a % n, d, n);
    if (x == 1 || x == n - 1) return true;
    for (std::uint32_t i = 1; i < r; ++i) {
        x = (__uint128_t(x) * x) % n;
        if (x == n - 1) return true;
    }
    return false;
}

void require_same_field(FieldElement a, FieldElement b) {
    if (a.modulus == 0 || b.modulus == 0)
        throw UsageError("field element used before initialization");
    if (a.modulus != b.modulus)
        throw UsageError("field elements have different moduli: " + std::to_string(a.modulus) +
                         " vs " + std::to_string(b.modulus));
}

} // namespace

bool is_prime_u32(std::uint32_t n) {
    if (n < 2) return false;
    for (std::uint32_t p : {2u, 3u, 5u, 7u, 11u, 13u, 17u, 19u, 23u, 29u, 31u, 37u}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    // Deterministic for all n < 2^32 with these witnesses.
    for (std::uint32_t a : {2u, 7u, 61u}) {
        if (!miller_rabin(n, a)) return false;
    }
    return true;
}

FieldModulus::FieldModulus(std::uint32_t modulus) : q(modulus) {
    if (!is_prime_u32(modulus))
        throw UsageError("field modulus " + std::to_string(modulus) + " is not prime");
}

FieldElement fe(std::uint64_t value, FieldModulus m) {
    if (m.q == 0) throw UsageError("field modulus is uninitialized");
    return FieldElement{static_cast<std::uint32_t>(value % m.q), m.q};
}

FieldElement add(FieldElement a, FieldElement b) {
    require_same_field(a, b);
    std::uint64_t s = std::uint64_t(a.value) + b.value;
    if (s >= a.modulus) s -= a.modulus;
    return FieldElement{static_cast<std::uint32_t>(s), a.modulus};
}

FieldElement sub(FieldElement a, FieldElement b) {
    require_same_field(a, b);
    std::uint64_t s = std::uint64_t(a.value) + a.modulus - b.value;
    if (s >= a.modulus) s -= a.modulus;
    return FieldElement{static_cast<std::uint32_t>(s), a.modulus};
}

FieldElement mul(FieldElement a, FieldElement b) {
    require_same_field(a, b);
    return FieldElement{static_cast<std::uint32_t>(std::uint64_t(a.value) * b.value % a.modulus),
                        a.modulus};
}

FieldElement neg(FieldElement a) {
    if (a.modulus == 0) throw UsageError("field element used before initialization");
    return FieldElement{a.value == 0 ? 0 : a.modulus - a.value, a.modulus};
}

FieldElement inv(FieldElement a) {
    if (a.modulus == 0) throw UsageError("field element used before initialization");
    if (a.value == 0) throw DivisionByZeroError("inverse of zero");
    // Extended Euclid on (value, modulus).
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = a.modulus, new_r = a.value;
    while (new_r != 0) {
        std::int64_t quotient = r / new_r;
        std::int64_t tmp = t - quotient * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - quotient * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (t < 0) t += a.modulus;
    return FieldElement{static_cast<std::uint32_t>(t), a.modulus};
}

Matrix::Matrix(std::uint32_t rows, std::uint32_t cols, FieldModulus modulus)
    : rows_(rows), cols_(cols), modulus_(modulus),
      entries_(static_cast<std::size_t>(rows) * cols, 0) {}

void Matrix::set(std::uint32_t r, std::uint32_t c, FieldElement v) {
    if (v.modulus != modulus_.q)
        throw UsageError("matrix entry from a different field");
    entries_[index(r, c)] = v.value;
}

Matrix Matrix::identity(std::uint32_t n, FieldModulus modulus) {
    Matrix m(n, n, modulus);
    for (std::uint32_t i = 0; i < n; ++i) m.set(i, i, fe(1, modulus));
    return m;
}

Matrix mat_mul(const Matrix &a, const Matrix &b) {
    if (!(a.modulus() == b.modulus())) throw UsageError("matrix product across fields");
    if (a.cols() != b.rows()) throw UsageError("matrix dimensions do not match");
    Matrix out(a.rows(), b.cols(), a.modulus());
    for (std::uint32_t i = 0; i < a.rows(); ++i) {
        for (std::uint32_t j = 0; j < b.cols(); ++j) {
            FieldElement acc = fe(0, a.modulus());
            for (std::uint32_t k = 0; k < a.cols(); ++k)
                acc = add(acc, mul(a.at(i, k), b.at(k, j)));
            out.set(i, j, acc);
        }
    }
    return out;
}

Matrix transpose(const Matrix &m) {
    Matrix out(m.cols(), m.rows(), m.modulus());
    for (std::uint32_t i = 0; i < m.rows(); ++i)
        for (std::uint32_t j = 0; j < m.cols(); ++j) out.set(j, i, m.at(i, j));
    return out;
}

std::vector<FieldElement> vec_mat_mul(const std::vector<FieldElement> &v, const Matrix &m) {
    if (v.size() != m.rows()) throw UsageError("vector length does not match matrix rows");
    std::vector<FieldElement> out(m.cols(), fe(0, m.modulus()));
    for (std::uint32_t j = 0; j < m.cols(); ++j) {
        FieldElement acc = fe(0, m.modulus());
        for (std::uint32_t i = 0; i < m.rows(); ++i) acc = add(acc, mul(v[i], m.at(i, j)));
        out[j] = acc;
    }
    return out;
}

std::vector<FieldElement> solve_linear(const Matrix &a, const std::vector<FieldElement> &b) {
    if (a.rows() != a.cols()) throw UsageError("solve_linear requires a square matrix");
    if (b.size() != a.rows()) throw UsageError("right-hand side length does not match");
    const std::uint32_t n = a.rows();
    const FieldModulus m = a.modulus();

    // Augmented working copy of raw values.
    std::vector<std::vector<FieldElement>> aug(n, std::vector<FieldElement>(n + 1, fe(0, m)));
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) aug[i][j] = a.at(i, j);
        aug[i][n] = b[i];
    }

    for (std::uint32_t col = 0; col < n; ++col) {
        // First-nonzero pivot; exact arithmetic needs no magnitude strategy.
        std::uint32_t pivot = col;
        while (pivot < n && aug[pivot][col].value == 0) ++pivot;
        if (pivot == n) throw SingularMatrixError("singular matrix in solve_linear");
        std::swap(aug[col], aug[pivot]);

        FieldElement scale = inv(aug[col][col]);
        for (std::uint32_t j = col; j <= n; ++j) aug[col][j] = mul(aug[col][j], scale);
        for (std::uint32_t row = 0; row < n; ++row) {
            if (row == col || aug[row][col].value == 0) continue;
            FieldElement factor = aug[row][col];
            for (std::uint32_t j = col; j <= n; ++j)
                aug[row][j] = sub(aug[row][j], mul(factor, aug[col][j]));
        }
    }

    std::vector<FieldElement> x(n, fe(0, m));
    for (std::uint32_t i = 0; i < n; ++i) x[i] = aug[i][n];
    return x;
}

bool invertible(const Matrix &mat) {
    if (mat.rows() != mat.cols()) return false;
    const std::uint32_t n = mat.rows();
    std::vector<std::vector<FieldElement>> w(n, std::vector<FieldElement>(n, fe(0, mat.modulus())));
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) w[i][j] = mat.at(i, j);

    for (std::uint32_t col = 0; col < n; ++col) {
        std::uint32_t pivot = col;
        while (pivot < n && w[pivot][col].value == 0) ++pivot;
        if (pivot == n) return false;
        std::swap(w[col], w[pivot]);
        FieldElement scale = inv(w[col][col]);
        for (std::uint32_t j = col; j < n; ++j) w[col][j] = mul(w[col][j], scale);
        for (std::uint32_t row = col + 1; row < n; ++row) {
            if (w[row][col].value == 0) continue;
            FieldElement factor = w[row][col];
            for (std::uint32_t j = col; j < n; ++j)
                w[row][j] = sub(w[row][j], mul(factor, w[col][j]));
        }
    }
    return true;
}

} // namespace mmpir
