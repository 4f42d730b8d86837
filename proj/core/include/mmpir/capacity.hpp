#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mmpir/rational.hpp"

namespace mmpir {

enum class Regime { HighP, LowP };

/// HighP when 2P >= K - M, LowP otherwise.
Regime regime_of(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                 std::uint32_t side_files);

/// True when the capacity is characterized: 2P >= K - M, or (K - M)
/// divisible by P.
bool theorem_applies(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                     std::uint32_t side_files);

struct DpsiResult {
    Regime regime = Regime::HighP;
    bool known = false;            // theorem covers this tuple
    std::optional<Rational> value; // set iff known
};

/// Optimal download per decoded symbol:
///   1 + (K-M-P)/(PN)                      when 2P >= K-M,
///   (1 - N^-(K-M)/P) / (1 - 1/N)          when 2P <= K-M and P | (K-M),
/// and unknown otherwise.
DpsiResult dpsi(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                std::uint32_t side_files);

/// Checks the library-size-reduction equivalence
/// dpsi(N,K,P,M) == dpsi(N,K-M,P,0) as exact rationals.
bool dpsi_equiv_check(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                      std::uint32_t side_files);

/// A per-server load in units of L. `exact` is set in the high regime and on
/// the low-regime fast path (N a perfect P-th power); `value` always holds
/// the 50-digit evaluation.
struct LoadValue {
    Real value;
    std::optional<Rational> exact;
};

/// Per-server symbols transmitted by the underlying no-side-information
/// scheme, divided by L.
LoadValue accounting_p(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                       Regime regime);

/// Per-server symbols reconstructible from M side files, divided by L.
LoadValue accounting_q(std::uint32_t servers, std::uint32_t files, std::uint32_t side_files,
                       std::uint32_t requests, Regime regime);

struct IdentityReport {
    Regime regime = Regime::HighP;
    LoadValue p_full;    // p(N,K)/L
    LoadValue q_side;    // q(N,K,M)/L
    LoadValue p_reduced; // p(N,K-M)/L
    Real lhs;            // (p - q)/L
    Real rhs;            // p(N,K-M)/L
    Real abs_error;
    bool exact = false; // both sides compared as rationals
    bool pass = false;
};

/// Verifies p(N,K) - q(N,K,M) = p(N,K-M); exact rational equality in the
/// high regime (and on the fast path), within 1e-9 otherwise. The
/// four-argument form derives the regime from the tuple; on the boundary
/// 2P = K-M both coefficient families apply and may be selected explicitly.
IdentityReport verify_reduction_identity(std::uint32_t servers, std::uint32_t files,
                                         std::uint32_t requests, std::uint32_t side_files);
IdentityReport verify_reduction_identity(std::uint32_t servers, std::uint32_t files,
                                         std::uint32_t requests, std::uint32_t side_files,
                                         Regime regime);

/// Information-theoretic lower bound on the load, always an exact rational:
///   1 + (K-M-P)/(NP)  when 2P >= K-M, and otherwise
///   (1 - N^-floor(e))/(1 - 1/N) + (e - floor(e))/N^floor(e),  e = (K-M)/P.
Rational converse_bound(std::uint32_t servers, std::uint32_t files, std::uint32_t requests,
                        std::uint32_t side_files);

struct CapacityReport {
    std::uint32_t servers = 0, files = 0, requests = 0, side_files = 0;
    Regime regime = Regime::HighP;
    bool theorem = false;
    std::optional<Rational> achievable; // dpsi when known
    Rational engine_load;               // what the implemented scheme downloads
    Rational converse;
    bool optimal = false; // theorem holds and achievable == converse
    bool identity_ok = false;
};

CapacityReport capacity_report(std::uint32_t servers, std::uint32_t files,
                               std::uint32_t requests, std::uint32_t side_files);

/// CSV rows: N,K,P,M,regime,achievable,converse,optimal,identity_ok.
void write_sweep_csv(std::ostream &out, const std::vector<CapacityReport> &rows);

std::string regime_name(Regime regime);

} // namespace mmpir
