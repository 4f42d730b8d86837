#include "doctest.h"

#include <cmath>

#include "mmpir/audit.hpp"

using namespace mmpir;

namespace {

Params audit_params(std::uint32_t files, std::uint32_t requests, std::uint32_t side) {
    return Params(2, files, requests, side, 1, FieldModulus(65537));
}

} // namespace

TEST_CASE("admissible pair enumeration") {
    CHECK(admissible_pairs(2, 1, 0).size() == 2);
    CHECK(admissible_pairs(3, 1, 1).size() == 6);
    CHECK(admissible_pairs(3, 2, 0).size() == 3);
    CHECK(admissible_pairs(4, 2, 1).size() == 12);
}

TEST_CASE("exact distributions are identical across requests (2,2,1,0)") {
    Params params = audit_params(2, 1, 0);
    QueryDistribution first = exact_distribution(params, RequestSet{{0}}, {}, 0);
    QueryDistribution second = exact_distribution(params, RequestSet{{1}}, {}, 0);
    CHECK(first.outcomes == second.outcomes);
    CHECK(distributions_equal(first, second));

    // Probabilities sum to one.
    Rational total(0);
    for (const auto &[bytes, mass] : first.mass) total += mass;
    CHECK(total == Rational(1));
}

TEST_CASE("exact audit passes for every pair and server (2,3,1,1)") {
    Params params = audit_params(3, 1, 1);
    ExactAuditReport report = run_exact_audit(params);
    CHECK(report.pair_count == 6);
    CHECK(report.identical);
    CHECK(report.failing_servers.empty());
}

TEST_CASE("disabling the chunk permutation leaks the request") {
    Params params = audit_params(2, 1, 0);
    AuditOptions broken;
    broken.permute_chunks = false;
    QueryDistribution first = exact_distribution(params, RequestSet{{0}}, {}, 0, broken);
    QueryDistribution second = exact_distribution(params, RequestSet{{1}}, {}, 0, broken);
    CHECK(!distributions_equal(first, second));
}

TEST_CASE("enumeration guard refuses oversized spaces") {
    Params params(3, 4, 2, 0, 1, FieldModulus(65537));
    CHECK_THROWS_AS(exact_distribution(params, RequestSet{{0, 1}}, {}, 0),
                    EnumerationLimitError);
}

TEST_CASE("gamma_q matches closed forms") {
    // df = 2: survival(x) = exp(-x/2) -> Q(1, y) = exp(-y).
    for (double y : {0.1, 0.5, 1.0, 3.0, 10.0})
        CHECK(gamma_q(1.0, y) == doctest::Approx(std::exp(-y)).epsilon(1e-10));
    // df = 1: survival(x) = erfc(sqrt(x/2)) -> Q(0.5, y) = erfc(sqrt(y)).
    for (double y : {0.1, 0.5, 1.0, 2.0, 5.0})
        CHECK(gamma_q(0.5, y) == doctest::Approx(std::erfc(std::sqrt(y))).epsilon(1e-10));
}

TEST_CASE("chi-square homogeneity on hand-computed tables") {
    // Balanced table: statistic 0.
    std::vector<std::map<std::string, std::uint64_t>> balanced = {
        {{"a", 50}, {"b", 50}},
        {{"a", 50}, {"b", 50}},
    };
    ChiSquareResult same = chi_square_homogeneity(balanced);
    CHECK(same.statistic == doctest::Approx(0.0));
    CHECK(same.p_value == doctest::Approx(1.0));

    // 2x2 table [30,10;10,30]: chi2 = sum (O-E)^2/E with E = 20 everywhere.
    std::vector<std::map<std::string, std::uint64_t>> skewed = {
        {{"a", 30}, {"b", 10}},
        {{"a", 10}, {"b", 30}},
    };
    ChiSquareResult diff = chi_square_homogeneity(skewed);
    CHECK(diff.statistic == doctest::Approx(4 * 100.0 / 20.0));
    CHECK(diff.degrees_of_freedom == 1);
    CHECK(diff.p_value < 0.01);

    // Single row or single column: degenerate, not a failure.
    CHECK(chi_square_homogeneity({{{"a", 10}}}).degenerate);
    CHECK(chi_square_homogeneity({{{"a", 500}}, {{"a", 500}}}).degenerate);
}

TEST_CASE("statistical audit passes on the honest scheme and fails the control") {
    Params params(2, 3, 1, 1, 1, FieldModulus(65537));
    StatisticalAuditReport honest = statistical_audit(params, 0, 20000, 42);
    CHECK(honest.pair_count == 6);
    CHECK(!honest.chi.degenerate);
    CHECK(honest.pass);

    AuditOptions broken;
    broken.permute_chunks = false;
    StatisticalAuditReport control = statistical_audit(params, 0, 20000, 42, 0.01, broken);
    CHECK(!control.pass);
}

TEST_CASE("splitting one pair's samples in half stays homogeneous") {
    Params params(2, 4, 2, 1, 1, FieldModulus(65537));
    RequestSet request{{0, 1}};
    auto half1 = sample_feature_counts(params, request, 0, 20000, 7);
    auto half2 = sample_feature_counts(params, request, 0, 20000, 8);
    ChiSquareResult chi = chi_square_homogeneity({half1, half2});
    CHECK(!chi.degenerate);
    CHECK(chi.p_value >= 0.01);
}

TEST_CASE("statistical audit across all servers with correction") {
    Params params(2, 3, 1, 0, 1, FieldModulus(65537));
    auto reports = statistical_audit_all(params, 10000, 5);
    REQUIRE(reports.size() == 2);
    for (const auto &report : reports) {
        CHECK(report.alpha == doctest::Approx(0.005));
        CHECK(report.pass);
    }
}
