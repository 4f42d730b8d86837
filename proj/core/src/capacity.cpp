#include "mmpir/capacity.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "mmpir/errors.hpp"

namespace mmpir {

namespace {

void validate_tuple(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                    std::uint32_t side_files) {
    if (servers < 2) throw UsageError("capacity formulas require N >= 2");
    if (requests < 1) throw UsageError("capacity formulas require P >= 1");
    if (files < 1) throw UsageError("capacity formulas require K >= 1");
    if (requests + side_files > files) throw UsageError("P + M must not exceed K");
}

std::int64_t ipow_checked(std::int64_t base, std::uint32_t exp) {
    std::int64_t result = 1;
    for (std::uint32_t i = 0; i < exp; ++i) {
        if (result > (std::int64_t(1) << 62) / base)
            throw UsageError("parameters too large for exact rational arithmetic");
        result *= base;
    }
    return result;
}

/// Integer b >= 2 with b^P == N, when one exists.
std::optional<std::int64_t> perfect_root(std::uint32_t n, std::uint32_t p) {
    if (p == 1) return static_cast<std::int64_t>(n);
    for (std::int64_t b = 2; ; ++b) {
        std::int64_t v = 1;
        bool over = false;
        for (std::uint32_t i = 0; i < p && !over; ++i) {
            v *= b;
            if (v > n) over = true;
        }
        if (!over && v == n) return b;
        if (over || v > n) return std::nullopt;
    }
}

Real real_pow(const Real &base, std::uint32_t exp) {
    Real r = 1;
    for (std::uint32_t i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Shared low-regime evaluation. With x = N^(1/P):
///   p(N,K)/L   = (P/N) (x^K - 1) / (x^K - x^(K-P))
///   q(N,K,M)/L = (P/N) (x^M - 1) / (x^K - x^(K-P))
/// following from alpha(k) proportional to r^(K-P-k), beta(k) = 1, and the
/// useful-equation normalization of the chunk size.
struct LowRegimeBasis {
    Real x;
    std::optional<std::int64_t> root; // set when N is a perfect P-th power
};

LowRegimeBasis low_basis(std::uint32_t servers, std::uint32_t requests) {
    LowRegimeBasis basis;
    basis.root = perfect_root(servers, requests);
    if (basis.root) {
        basis.x = Real(*basis.root);
    } else {
        basis.x = boost::multiprecision::pow(Real(servers), Real(1) / Real(requests));
    }
    return basis;
}

LoadValue low_ratio(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                    std::uint32_t numerator_exponent) {
    const LowRegimeBasis basis = low_basis(servers, requests);
    LoadValue out;
    const Real xk = real_pow(basis.x, files);
    const Real xkp = real_pow(basis.x, files - requests);
    const Real num = real_pow(basis.x, numerator_exponent) - 1;
    out.value = Real(requests) / Real(servers) * num / (xk - xkp);
    if (basis.root) {
        const std::int64_t b = *basis.root;
        const std::int64_t bk = ipow_checked(b, files);
        const std::int64_t bkp = ipow_checked(b, files - requests);
        const std::int64_t bn = ipow_checked(b, numerator_exponent);
        out.exact = Rational(requests, servers) * Rational(bn - 1, bk - bkp);
    }
    return out;
}

} // namespace

Regime regime_of(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                 std::uint32_t side_files) {
    validate_tuple(servers, files, requests, side_files);
    return 2 * requests >= files - side_files ? Regime::HighP : Regime::LowP;
}

bool theorem_applies(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                     std::uint32_t side_files) {
    validate_tuple(servers, files, requests, side_files);
    return 2 * requests >= files - side_files || (files - side_files) % requests == 0;
}

DpsiResult dpsi(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                std::uint32_t side_files) {
    validate_tuple(servers, files, requests, side_files);
    DpsiResult result;
    result.regime = regime_of(servers, files, requests, side_files);
    const std::uint32_t effective = files - side_files; // K - M
    if (result.regime == Regime::HighP) {
        result.known = true;
        result.value = Rational(1) + Rational(std::int64_t(effective) - requests,
                                              std::int64_t(requests) * servers);
        return result;
    }
    if (effective % requests != 0) return result; // capacity unknown here
    const std::uint32_t e = effective / requests;
    const std::int64_t ne = ipow_checked(servers, e);
    const std::int64_t ne1 = ipow_checked(servers, e - 1);
    result.known = true;
    result.value = Rational(ne - 1, ne1 * (std::int64_t(servers) - 1));
    return result;
}

bool dpsi_equiv_check(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                      std::uint32_t side_files) {
    DpsiResult with_side = dpsi(servers, files, requests, side_files);
    DpsiResult reduced = dpsi(servers, files - side_files, requests, 0);
    if (!with_side.known || !reduced.known)
        throw UsageError("theorem does not cover this parameter tuple");
    return *with_side.value == *reduced.value;
}

LoadValue accounting_p(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                       Regime regime) {
    validate_tuple(servers, files, requests, 0);
    if (regime == Regime::HighP) {
        LoadValue out;
        out.exact = Rational(std::int64_t(files) + std::int64_t(requests) * (servers - 1),
                             std::int64_t(servers) * servers);
        out.value = to_real(*out.exact);
        return out;
    }
    return low_ratio(servers, files, requests, files);
}

LoadValue accounting_q(std::uint32_t servers, std::uint32_t files, std::uint32_t side_files,
                       std::uint32_t requests, Regime regime) {
    validate_tuple(servers, files, requests, side_files);
    if (regime == Regime::HighP) {
        // Only the k=1 terms of the savings sum survive when M < K.
        LoadValue out;
        out.exact = Rational(side_files, std::int64_t(servers) * servers);
        out.value = to_real(*out.exact);
        return out;
    }
    return low_ratio(servers, files, requests, side_files);
}

IdentityReport verify_reduction_identity(std::uint32_t servers, std::uint32_t files,
                                         std::uint32_t requests, std::uint32_t side_files) {
    return verify_reduction_identity(servers, files, requests, side_files,
                                     regime_of(servers, files, requests, side_files));
}

IdentityReport verify_reduction_identity(std::uint32_t servers, std::uint32_t files,
                                         std::uint32_t requests, std::uint32_t side_files,
                                         Regime regime) {
    if (regime == Regime::LowP && 2 * requests > files - side_files)
        throw UsageError("low-regime accounting requires 2P <= K - M");
    IdentityReport report;
    report.regime = regime;
    report.p_full = accounting_p(servers, files, requests, report.regime);
    report.q_side = accounting_q(servers, files, side_files, requests, report.regime);
    report.p_reduced = accounting_p(servers, files - side_files, requests, report.regime);
    report.lhs = report.p_full.value - report.q_side.value;
    report.rhs = report.p_reduced.value;
    report.abs_error = boost::multiprecision::abs(report.lhs - report.rhs);
    if (report.p_full.exact && report.q_side.exact && report.p_reduced.exact) {
        report.exact = true;
        report.pass = (*report.p_full.exact - *report.q_side.exact) == *report.p_reduced.exact;
    } else {
        report.pass = report.abs_error <= Real("1e-9");
    }
    return report;
}

Rational converse_bound(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                        std::uint32_t side_files) {
    validate_tuple(servers, files, requests, side_files);
    const std::int64_t n = servers;
    const std::int64_t effective = std::int64_t(files) - side_files;
    if (2 * std::int64_t(requests) >= effective)
        return Rational(1) + Rational(effective - requests, std::int64_t(requests) * n);
    const std::uint32_t f = static_cast<std::uint32_t>(effective / requests);
    const std::int64_t nf = ipow_checked(n, f);
    Rational geometric = (Rational(1) - Rational(1, nf)) / (Rational(1) - Rational(1, n));
    Rational fractional(effective - std::int64_t(f) * requests,
                        std::int64_t(requests) * nf);
    return geometric + fractional;
}

CapacityReport capacity_report(std::uint32_t servers, std::uint32_t files,
                               std::uint32_t requests, std::uint32_t side_files) {
    CapacityReport report;
    report.servers = servers;
    report.files = files;
    report.requests = requests;
    report.side_files = side_files;
    report.regime = regime_of(servers, files, requests, side_files);
    report.theorem = theorem_applies(servers, files, requests, side_files);
    DpsiResult d = dpsi(servers, files, requests, side_files);
    report.achievable = d.value;
    report.engine_load =
        Rational(std::int64_t(files) + std::int64_t(requests) * (servers - 1) - side_files,
                 std::int64_t(requests) * servers);
    report.converse = converse_bound(servers, files, requests, side_files);
    report.optimal = report.theorem && report.achievable && *report.achievable == report.converse;
    report.identity_ok = verify_reduction_identity(servers, files, requests, side_files).pass;
    return report;
}

std::string regime_name(Regime regime) {
    return regime == Regime::HighP ? "high" : "low";
}

void write_sweep_csv(std::ostream &out, const std::vector<CapacityReport> &rows) {
    out << "N,K,P,M,regime,achievable,converse,optimal,identity_ok\n";
    for (const CapacityReport &row : rows) {
        const Rational shown = row.achievable ? *row.achievable : row.engine_load;
        out << row.servers << ',' << row.files << ',' << row.requests << ',' << row.side_files
            << ',' << regime_name(row.regime) << ',' << to_string(shown) << ','
            << to_string(row.converse) << ',' << (row.optimal ? "yes" : "no") << ','
            << (row.identity_ok ? "yes" : "no") << '\n';
    }
}

} // namespace mmpir
