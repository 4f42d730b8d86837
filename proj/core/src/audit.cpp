#include "mmpir/audit.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace mmpir {

namespace {

std::vector<std::vector<std::uint32_t>> combinations(std::uint32_t n, std::uint32_t k,
                                                     const std::vector<std::uint32_t> &pool) {
    std::vector<std::vector<std::uint32_t>> out;
    if (k > pool.size()) return out;
    if (k == 0) {
        out.push_back({});
        return out;
    }
    std::vector<std::uint32_t> idx(k);
    for (std::uint32_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        std::vector<std::uint32_t> combo(k);
        for (std::uint32_t i = 0; i < k; ++i) combo[i] = pool[idx[i]];
        out.push_back(std::move(combo));
        std::int32_t i = static_cast<std::int32_t>(k) - 1;
        while (i >= 0 && idx[i] == pool.size() - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (std::uint32_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    (void)n;
    return out;
}

/// All ordered arrangements of `count` distinct values from [0, domain).
std::vector<std::vector<std::uint32_t>> all_injections(std::uint32_t count,
                                                       std::uint32_t domain) {
    std::vector<std::vector<std::uint32_t>> out;
    std::vector<std::uint32_t> current;
    std::vector<bool> used(domain, false);
    auto rec = [&](auto &&self) -> void {
        if (current.size() == count) {
            out.push_back(current);
            return;
        }
        for (std::uint32_t v = 0; v < domain; ++v) {
            if (used[v]) continue;
            used[v] = true;
            current.push_back(v);
            self(self);
            current.pop_back();
            used[v] = false;
        }
    };
    rec(rec);
    return out;
}

std::vector<std::vector<std::uint32_t>> all_permutations(std::uint32_t n) {
    std::vector<std::uint32_t> base(n);
    for (std::uint32_t i = 0; i < n; ++i) base[i] = i;
    std::vector<std::vector<std::uint32_t>> out;
    do {
        out.push_back(base);
    } while (std::next_permutation(base.begin(), base.end()));
    return out;
}

std::uint64_t checked_scale(std::uint64_t a, std::uint64_t b, std::uint64_t cap) {
    if (b != 0 && a > cap / b) return cap + 1;
    return a * b;
}

constexpr std::uint64_t kEnumerationCap = 10000000ull;

} // namespace

std::vector<IndexPair> admissible_pairs(std::uint32_t files, std::uint32_t requests,
                                        std::uint32_t side_files) {
    std::vector<std::uint32_t> everything(files);
    for (std::uint32_t i = 0; i < files; ++i) everything[i] = i;
    std::vector<IndexPair> pairs;
    for (const auto &side : combinations(files, side_files, everything)) {
        std::vector<std::uint32_t> rest;
        for (std::uint32_t i : everything)
            if (!std::binary_search(side.begin(), side.end(), i)) rest.push_back(i);
        for (const auto &request : combinations(files, requests, rest))
            pairs.push_back(IndexPair{side, request});
    }
    return pairs;
}

bool distributions_equal(const QueryDistribution &a, const QueryDistribution &b) {
    return a.mass == b.mass;
}

QueryDistribution exact_distribution(const Params &params, const RequestSet &request,
                                     const std::vector<std::uint32_t> &side_indices,
                                     std::uint32_t server, const AuditOptions &options) {
    if (server >= params.servers) throw UsageError("server index out of range");
    // Validate (request, side) via the query builder's own checks.
    (void)generate_queries(params, request, side_indices, 0);

    const std::uint32_t slots = params.chunk_slots();
    const std::uint32_t per_file = params.servers; // referenced slots per file
    const std::uint32_t instances = params.servers - 1;

    // Only the slots a query actually references affect its bytes, so the
    // enumeration ranges over injections of those slots into the physical
    // chunks rather than over whole permutations.
    std::uint64_t injections = 1;
    for (std::uint32_t i = 0; i < per_file; ++i) injections *= slots - i;
    std::uint64_t perms = 1;
    for (std::uint32_t i = 2; i <= params.files; ++i) perms *= i;

    std::uint64_t total = 1;
    if (options.permute_chunks)
        for (std::uint32_t f = 0; f < params.files; ++f)
            total = checked_scale(total, injections, kEnumerationCap);
    for (std::uint32_t t = 0; t < instances; ++t)
        total = checked_scale(total, perms, kEnumerationCap);
    if (total > kEnumerationCap)
        throw EnumerationLimitError(
            "exact enumeration would exceed 10^7 outcomes; use the statistical audit");

    const auto injection_list = all_injections(per_file, slots);
    const auto permutation_list = all_permutations(params.files);

    // Referenced slot order per file matches the builder: phase-1 slot
    // first, then one slot per instance.
    std::vector<std::vector<std::uint32_t>> ref_slots(params.files);
    for (std::uint32_t i = 0; i < params.files; ++i)
        ref_slots[i] = referenced_slots(params, request, server, i);

    std::vector<std::vector<std::uint32_t>> chunk_perm(
        params.files, std::vector<std::uint32_t>(slots, 0));
    if (!options.permute_chunks) {
        for (std::uint32_t i = 0; i < params.files; ++i)
            for (std::uint32_t s = 0; s < slots; ++s) chunk_perm[i][s] = s;
    }
    std::vector<std::vector<std::uint32_t>> column_perm(instances);

    QueryDistribution distribution;
    const Rational weight(1, static_cast<std::int64_t>(total));

    std::vector<std::size_t> file_choice(params.files, 0);
    std::vector<std::size_t> perm_choice(instances, 0);

    auto emit = [&]() {
        Query query = build_server_query(params, request, server, chunk_perm, column_perm);
        distribution.mass[canonical_query_bytes(query)] += weight;
        ++distribution.outcomes;
    };

    auto enumerate_perms = [&](auto &&self, std::uint32_t t) -> void {
        if (t == instances) {
            emit();
            return;
        }
        for (std::size_t p = 0; p < permutation_list.size(); ++p) {
            column_perm[t] = permutation_list[p];
            self(self, t + 1);
        }
    };

    auto enumerate_files = [&](auto &&self, std::uint32_t f) -> void {
        if (f == params.files) {
            enumerate_perms(enumerate_perms, 0);
            return;
        }
        if (!options.permute_chunks) {
            self(self, f + 1);
            return;
        }
        for (const auto &inj : injection_list) {
            for (std::uint32_t i = 0; i < per_file; ++i) chunk_perm[f][ref_slots[f][i]] = inj[i];
            self(self, f + 1);
        }
    };

    enumerate_files(enumerate_files, 0);
    return distribution;
}

ExactAuditReport run_exact_audit(const Params &params, const AuditOptions &options) {
    const auto pairs = admissible_pairs(params.files, params.requests, params.side_files);
    ExactAuditReport report;
    report.pair_count = static_cast<std::uint32_t>(pairs.size());
    for (std::uint32_t server = 0; server < params.servers; ++server) {
        QueryDistribution baseline;
        bool server_ok = true;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            QueryDistribution dist = exact_distribution(
                params, RequestSet{pairs[i].request}, pairs[i].side, server, options);
            if (i == 0) {
                report.outcomes_per_pair = dist.outcomes;
                baseline = std::move(dist);
            } else if (!distributions_equal(baseline, dist)) {
                server_ok = false;
                break;
            }
        }
        if (!server_ok) {
            report.identical = false;
            report.failing_servers.push_back(server);
        }
    }
    return report;
}

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw UsageError("gamma_q requires a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        // Series for P(a, x); Q = 1 - P.
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        double p = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        return 1.0 - p;
    }
    // Lentz continued fraction for Q(a, x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

ChiSquareResult chi_square_homogeneity(
    const std::vector<std::map<std::string, std::uint64_t>> &rows) {
    ChiSquareResult result;
    const std::size_t r = rows.size();
    if (r < 2) {
        result.degenerate = true;
        return result;
    }

    std::map<std::string, std::uint64_t> column_totals;
    std::vector<std::uint64_t> row_totals(r, 0);
    for (std::size_t i = 0; i < r; ++i) {
        for (const auto &[key, count] : rows[i]) {
            column_totals[key] += count;
            row_totals[i] += count;
        }
    }
    std::uint64_t grand = 0;
    for (std::uint64_t t : row_totals) grand += t;
    if (grand == 0) {
        result.degenerate = true;
        return result;
    }

    // Pool sparse categories so every expected cell count stays reasonable.
    std::vector<std::string> kept;
    std::uint64_t pooled_total = 0;
    for (const auto &[key, total] : column_totals) {
        if (total < 5 * r)
            pooled_total += total;
        else
            kept.push_back(key);
    }

    const std::size_t cols = kept.size() + (pooled_total > 0 ? 1 : 0);
    if (cols < 2) {
        result.degenerate = true;
        return result;
    }

    auto cell = [&](std::size_t i, std::size_t j) -> std::uint64_t {
        if (j < kept.size()) {
            auto it = rows[i].find(kept[j]);
            return it == rows[i].end() ? 0 : it->second;
        }
        std::uint64_t pooled = row_totals[i];
        for (const std::string &key : kept) {
            auto it = rows[i].find(key);
            if (it != rows[i].end()) pooled -= it->second;
        }
        return pooled;
    };
    auto column_total = [&](std::size_t j) -> std::uint64_t {
        return j < kept.size() ? column_totals.at(kept[j]) : pooled_total;
    };

    double statistic = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double expected =
                double(row_totals[i]) * double(column_total(j)) / double(grand);
            if (expected <= 0.0) continue;
            double diff = double(cell(i, j)) - expected;
            statistic += diff * diff / expected;
        }
    }
    result.statistic = statistic;
    result.degrees_of_freedom = (r - 1) * (cols - 1);
    result.p_value = gamma_q(double(result.degrees_of_freedom) / 2.0, statistic / 2.0);
    return result;
}

namespace {

/// Finite projection of a query: per file the sorted multiset of referenced
/// physical chunks, plus each instance's sorted column multiset.
std::string query_feature(const Query &query) {
    std::string key;
    key.reserve(64);
    const std::uint32_t c = query.chunk_symbols;
    for (std::uint32_t i = 0; i < query.file_count; ++i) {
        std::vector<std::uint32_t> chunks;
        chunks.push_back(query.phase1[i].positions[0] / c);
        for (const Phase2Instance &inst : query.instances)
            chunks.push_back(inst.chunk_refs[i].positions[0] / c);
        std::sort(chunks.begin(), chunks.end());
        for (std::uint32_t v : chunks) key.push_back(static_cast<char>('0' + v % 64));
        key.push_back('|');
    }
    for (const Phase2Instance &inst : query.instances) {
        std::vector<std::string> columns;
        for (std::uint32_t j = 0; j < inst.coefficients.cols(); ++j) {
            std::string col;
            for (std::uint32_t row = 0; row < inst.coefficients.rows(); ++row) {
                std::uint32_t v = inst.coefficients.at(row, j).value;
                col.append(reinterpret_cast<const char *>(&v), 4);
            }
            columns.push_back(std::move(col));
        }
        std::sort(columns.begin(), columns.end());
        for (const std::string &col : columns) key += col;
        key.push_back('|');
    }
    return key;
}

} // namespace

std::map<std::string, std::uint64_t> sample_feature_counts(const Params &params,
                                                           const RequestSet &request,
                                                           std::uint32_t server,
                                                           std::uint64_t samples,
                                                           std::uint64_t seed,
                                                           const AuditOptions &options) {
    if (server >= params.servers) throw UsageError("server index out of range");
    const std::uint32_t slots = params.chunk_slots();
    const std::uint32_t instances = params.servers - 1;

    Rng rng(seed);
    std::vector<std::vector<std::uint32_t>> chunk_perm(params.files);
    std::vector<std::vector<std::uint32_t>> column_perm(instances);
    std::vector<std::uint32_t> identity_slots(slots);
    for (std::uint32_t s = 0; s < slots; ++s) identity_slots[s] = s;

    std::unordered_map<std::string, std::uint64_t> local;
    local.reserve(4096);
    for (std::uint64_t s = 0; s < samples; ++s) {
        for (std::uint32_t f = 0; f < params.files; ++f)
            chunk_perm[f] = options.permute_chunks ? rng.permutation(slots) : identity_slots;
        for (std::uint32_t t = 0; t < instances; ++t)
            column_perm[t] = rng.permutation(params.files);
        Query query = build_server_query(params, request, server, chunk_perm, column_perm);
        ++local[query_feature(query)];
    }
    return {local.begin(), local.end()};
}

StatisticalAuditReport statistical_audit(const Params &params, std::uint32_t server,
                                         std::uint64_t samples, std::uint64_t seed,
                                         double alpha, const AuditOptions &options) {
    if (server >= params.servers) throw UsageError("server index out of range");
    if (samples < 10000) throw UsageError("statistical audit needs at least 10^4 samples");
    const auto pairs = admissible_pairs(params.files, params.requests, params.side_files);

    StatisticalAuditReport report;
    report.server = server;
    report.pair_count = static_cast<std::uint32_t>(pairs.size());
    report.samples_per_pair = samples;
    report.alpha = alpha;

    std::vector<std::map<std::string, std::uint64_t>> counts(pairs.size());
    for (std::size_t pi = 0; pi < pairs.size(); ++pi)
        counts[pi] =
            sample_feature_counts(params, RequestSet{pairs[pi].request}, server, samples,
                                  seed + 0x9E3779B97F4A7C15ull * (pi + 1), options);

    report.chi = chi_square_homogeneity(counts);
    report.pass = report.chi.degenerate || report.chi.p_value >= alpha;
    return report;
}

std::vector<StatisticalAuditReport> statistical_audit_all(const Params &params,
                                                          std::uint64_t samples,
                                                          std::uint64_t seed, double alpha,
                                                          const AuditOptions &options) {
    std::vector<StatisticalAuditReport> reports;
    const double corrected = alpha / params.servers; // Bonferroni across servers
    for (std::uint32_t server = 0; server < params.servers; ++server)
        reports.push_back(
            statistical_audit(params, server, samples, seed + server, corrected, options));
    return reports;
}

} // namespace mmpir
