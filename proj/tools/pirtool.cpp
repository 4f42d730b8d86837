// pirtool: command-line front end for the multi-message PIR toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 verification/audit failure,
// 3 I/O or network error.

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mmpir/audit.hpp"
#include "mmpir/capacity.hpp"
#include "mmpir/net.hpp"

using json = nlohmann::json;
using namespace mmpir;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;
constexpr int kExitIo = 3;

struct Range {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
};

/// "N=2..3" or "K=5".
std::pair<std::string, Range> parse_range(const std::string &token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos) throw UsageError("range must look like N=2..3: " + token);
    const std::string name = token.substr(0, eq);
    const std::string body = token.substr(eq + 1);
    const std::size_t dots = body.find("..");
    Range range;
    try {
        if (dots == std::string::npos) {
            range.lo = range.hi = static_cast<std::uint32_t>(std::stoul(body));
        } else {
            range.lo = static_cast<std::uint32_t>(std::stoul(body.substr(0, dots)));
            range.hi = static_cast<std::uint32_t>(std::stoul(body.substr(dots + 2)));
        }
    } catch (const std::exception &) {
        throw UsageError("cannot parse range: " + token);
    }
    if (range.lo > range.hi) throw UsageError("empty range: " + token);
    return {name, range};
}

std::vector<std::uint32_t> parse_index_list(const std::string &text) {
    std::vector<std::uint32_t> out;
    if (text.empty()) return out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        try {
            out.push_back(static_cast<std::uint32_t>(std::stoul(item)));
        } catch (const std::exception &) {
            throw UsageError("cannot parse index list: " + text);
        }
    }
    return out;
}

std::string show(const Rational &r, bool decimal) {
    if (!decimal) return to_string(r);
    std::ostringstream out;
    out << std::setprecision(12) << to_double(r);
    return out.str();
}

// ----- capacity -----

struct CapacityArgs {
    std::uint32_t servers = 0, files = 0, requests = 0, side = 0;
    std::vector<std::string> sweep;
    std::string format = "csv";
    bool decimal = false;
};

int cmd_capacity(const CapacityArgs &args) {
    if (!args.sweep.empty()) {
        std::map<std::string, Range> ranges;
        for (const auto &token : args.sweep) ranges.insert(parse_range(token));
        auto range_or = [&](const std::string &name, Range fallback) {
            auto it = ranges.find(name);
            return it == ranges.end() ? fallback : it->second;
        };
        const Range n_range = range_or("N", {2, 3});
        const Range k_range = range_or("K", {1, 8});

        std::vector<CapacityReport> rows;
        for (std::uint32_t n = n_range.lo; n <= n_range.hi; ++n) {
            for (std::uint32_t k = k_range.lo; k <= k_range.hi; ++k) {
                const Range p_range = range_or("P", {1, k});
                const Range m_range = range_or("M", {0, k});
                for (std::uint32_t p = p_range.lo; p <= std::min(p_range.hi, k); ++p)
                    for (std::uint32_t m = m_range.lo;
                         m <= m_range.hi && p + m <= k; ++m)
                        rows.push_back(capacity_report(n, k, p, m));
            }
        }
        if (args.format == "csv") {
            write_sweep_csv(std::cout, rows);
        } else {
            for (const CapacityReport &row : rows) {
                std::cout << "N=" << row.servers << " K=" << row.files << " P=" << row.requests
                          << " M=" << row.side_files << " regime=" << regime_name(row.regime)
                          << " achievable="
                          << (row.achievable ? show(*row.achievable, args.decimal)
                                             : std::string("unknown"))
                          << " converse=" << show(row.converse, args.decimal)
                          << (row.optimal ? " (optimal)" : "")
                          << (row.identity_ok ? "" : " identity=FAIL") << "\n";
            }
        }
        return kExitOk;
    }

    if (args.servers == 0 || args.files == 0)
        throw UsageError("capacity needs --N and --K (plus --P/--M), or --sweep");
    CapacityReport report = capacity_report(args.servers, args.files, args.requests, args.side);
    std::cout << "N=" << report.servers << " K=" << report.files << " P=" << report.requests
              << " M=" << report.side_files << " regime=" << regime_name(report.regime) << "\n";
    std::cout << "converse bound = " << show(report.converse, args.decimal) << "\n";
    if (report.achievable) {
        std::cout << "achievable     = " << show(*report.achievable, args.decimal) << "\n";
        std::cout << "D = " << show(*report.achievable, args.decimal)
                  << (report.optimal ? " (optimal)" : "") << "\n";
    } else {
        std::cout << "achievable     = " << show(report.engine_load, args.decimal)
                  << " (scheme load; capacity unknown in this regime)\n";
        std::cout << "D in [" << show(report.converse, args.decimal) << ", "
                  << show(report.engine_load, args.decimal) << "]\n";
    }
    return kExitOk;
}

// ----- simulate -----

struct SimulateArgs {
    std::uint32_t servers = 0, files = 0, requests = 0, side = 0;
    std::uint32_t chunk = 1;
    std::uint64_t seed = 1;
    std::uint32_t trials = 100;
    std::uint32_t modulus = 65537;
};

int cmd_simulate(const SimulateArgs &args) {
    Params params(args.servers, args.files, args.requests, args.side, args.chunk,
                  FieldModulus(args.modulus));
    Rng rng(args.seed);
    Library library =
        random_library(params.files, params.file_symbols(), params.modulus, rng.next_u64());

    std::uint32_t successes = 0;
    Rational load;
    for (std::uint32_t trial = 0; trial < args.trials; ++trial) {
        // Random admissible (S, P) pair.
        std::vector<std::uint32_t> order = rng.permutation(params.files);
        std::vector<std::uint32_t> side_idx(order.begin(), order.begin() + params.side_files);
        std::vector<std::uint32_t> request_idx(order.begin() + params.side_files,
                                               order.begin() + params.side_files +
                                                   params.requests);
        std::sort(side_idx.begin(), side_idx.end());
        std::sort(request_idx.begin(), request_idx.end());

        Transcript t = run_exchange(params, library, RequestSet{request_idx},
                                    side_info_from_library(library, side_idx), rng.next_u64());
        if (t.decoded_equals_library == std::optional<bool>(true)) ++successes;
        load = t.achieved_load;
    }

    std::cout << successes << "/" << args.trials << " trials decoded correctly\n";
    std::cout << "load = " << to_string(load) << " per decoded symbol"
              << (params.high_regime() ? " (optimal per theorem)"
                                       : " (not claimed optimal: P < (K-M)/2)")
              << "\n";
    return successes == args.trials ? kExitOk : kExitVerification;
}

// ----- audit -----

struct AuditArgs {
    std::uint32_t servers = 0, files = 0, requests = 0, side = 0;
    std::uint32_t chunk = 1;
    std::uint32_t modulus = 65537;
    bool exact = false;
    std::uint64_t samples = 100000;
    std::uint64_t seed = 1;
    double alpha = 0.01;
    bool negative_control = false;
    std::string json_path;
};

int cmd_audit(const AuditArgs &args) {
    Params params(args.servers, args.files, args.requests, args.side, args.chunk,
                  FieldModulus(args.modulus));
    AuditOptions options;
    options.permute_chunks = !args.negative_control;

    json report;
    report["params"] = {{"N", args.servers}, {"K", args.files},   {"P", args.requests},
                        {"M", args.side},    {"c", args.chunk},   {"q", args.modulus}};
    bool pass = true;

    if (args.exact) {
        ExactAuditReport exact = run_exact_audit(params, options);
        pass = exact.identical;
        report["mode"] = "exact";
        report["pairs"] = exact.pair_count;
        report["outcomes_per_pair"] = exact.outcomes_per_pair;
        report["identical"] = exact.identical;
        report["failing_servers"] = exact.failing_servers;
        if (exact.identical)
            std::cout << "PRIVATE: all " << exact.pair_count
                      << " admissible (S,P) pairs induce identical per-server query "
                         "distributions ("
                      << exact.outcomes_per_pair << " outcomes each)\n";
        else
            std::cout << "LEAK: query distributions differ across (S,P) pairs\n";
    } else {
        auto reports = statistical_audit_all(params, args.samples, args.seed, args.alpha, options);
        report["mode"] = "statistical";
        report["samples_per_pair"] = args.samples;
        report["alpha"] = args.alpha;
        report["servers"] = json::array();
        for (const StatisticalAuditReport &r : reports) {
            pass = pass && r.pass;
            report["servers"].push_back({{"server", r.server},
                                         {"pairs", r.pair_count},
                                         {"statistic", r.chi.statistic},
                                         {"df", r.chi.degrees_of_freedom},
                                         {"p_value", r.chi.p_value},
                                         {"degenerate", r.chi.degenerate},
                                         {"alpha", r.alpha},
                                         {"pass", r.pass}});
            std::cout << "server " << r.server << ": chi2=" << r.chi.statistic
                      << " df=" << r.chi.degrees_of_freedom << " p=" << r.chi.p_value
                      << (r.chi.degenerate ? " (degenerate)" : "")
                      << (r.pass ? " PASS" : " FAIL") << "\n";
        }
        std::cout << (pass ? "PRIVATE" : "LEAK")
                  << ": chi-square homogeneity across all admissible (S,P) pairs\n";
    }
    report["pass"] = pass;

    if (!args.json_path.empty()) {
        std::ofstream out(args.json_path);
        if (!out) throw Error("cannot write " + args.json_path);
        out << report.dump(2) << "\n";
    }
    return pass ? kExitOk : kExitVerification;
}

// ----- verify-identity -----

struct VerifyArgs {
    std::uint32_t servers = 0, files = 0, requests = 0, side = 0;
    std::vector<std::string> sweep;
    bool decimal = false;
};

int verify_one(std::uint32_t n, std::uint32_t k, std::uint32_t p, std::uint32_t m,
               bool decimal, bool &all_ok) {
    IdentityReport report = verify_reduction_identity(n, k, p, m);
    std::ostringstream lhs, rhs;
    if (report.exact && report.p_full.exact && report.q_side.exact) {
        lhs << show(*report.p_full.exact - *report.q_side.exact, decimal);
        rhs << show(*report.p_reduced.exact, decimal);
    } else {
        lhs << std::setprecision(12) << report.lhs;
        rhs << std::setprecision(12) << report.rhs;
    }
    std::cout << "N=" << n << " K=" << k << " P=" << p << " M=" << m
              << " regime=" << regime_name(report.regime) << " p-q=" << lhs.str()
              << " p(K-M)=" << rhs.str() << (report.exact ? " [exact]" : " [1e-9]")
              << (report.pass ? " OK" : " FAIL") << "\n";
    all_ok = all_ok && report.pass;
    return report.pass ? kExitOk : kExitVerification;
}

int cmd_verify_identity(const VerifyArgs &args) {
    bool all_ok = true;
    if (!args.sweep.empty()) {
        std::map<std::string, Range> ranges;
        for (const auto &token : args.sweep) ranges.insert(parse_range(token));
        auto range_or = [&](const std::string &name, Range fallback) {
            auto it = ranges.find(name);
            return it == ranges.end() ? fallback : it->second;
        };
        const Range n_range = range_or("N", {2, 3});
        const Range k_range = range_or("K", {1, 8});
        for (std::uint32_t n = n_range.lo; n <= n_range.hi; ++n)
            for (std::uint32_t k = k_range.lo; k <= k_range.hi; ++k) {
                const Range p_range = range_or("P", {1, k});
                const Range m_range = range_or("M", {0, k});
                for (std::uint32_t p = p_range.lo; p <= std::min(p_range.hi, k); ++p)
                    for (std::uint32_t m = m_range.lo; m <= m_range.hi && p + m <= k; ++m) {
                        if (!theorem_applies(n, k, p, m)) continue;
                        verify_one(n, k, p, m, args.decimal, all_ok);
                    }
            }
    } else {
        if (args.servers == 0 || args.files == 0)
            throw UsageError("verify-identity needs --N/--K/--P/--M or --sweep");
        verify_one(args.servers, args.files, args.requests, args.side, args.decimal, all_ok);
    }
    return all_ok ? kExitOk : kExitVerification;
}

// ----- serve -----

PirServer *g_server = nullptr;

void handle_signal(int) {
    if (g_server != nullptr) g_server->stop();
}

struct ServeArgs {
    std::string library_path;
    std::string listen = "127.0.0.1:0";
};

int cmd_serve(const ServeArgs &args) {
    LoadedLibrary loaded = read_library_file(args.library_path);
    Endpoint endpoint = parse_endpoint(args.listen);
    PirServer server(std::move(loaded.library), loaded.modulus, endpoint.host, endpoint.port);
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cout << "listening on " << endpoint.host << ":" << server.port() << std::endl;
    server.run();
    g_server = nullptr;
    return kExitOk;
}

// ----- fetch -----

struct FetchArgs {
    std::string servers_text;
    std::uint32_t files = 0, requests = 0, side = 0;
    std::uint32_t chunk = 1;
    std::uint32_t modulus = 65537;
    std::string request_text;
    std::string side_text;
    std::string side_library;
    std::string verify_library;
    std::string out_path;
    std::uint64_t seed = 1;
};

int cmd_fetch(const FetchArgs &args) {
    std::vector<Endpoint> endpoints;
    {
        std::stringstream stream(args.servers_text);
        std::string item;
        while (std::getline(stream, item, ',')) endpoints.push_back(parse_endpoint(item));
    }
    if (endpoints.empty()) throw UsageError("--servers must list at least two endpoints");

    Params params(static_cast<std::uint32_t>(endpoints.size()), args.files, args.requests,
                  args.side, args.chunk, FieldModulus(args.modulus));
    RequestSet request{parse_index_list(args.request_text)};
    std::vector<std::uint32_t> side_idx = parse_index_list(args.side_text);

    SideInfo side;
    side.indices = side_idx;
    if (!side_idx.empty()) {
        if (args.side_library.empty())
            throw UsageError("--side-library is required when --side is nonempty");
        LoadedLibrary own = read_library_file(args.side_library);
        side = side_info_from_library(own.library, side_idx);
    }

    Transcript t = fetch(endpoints, params, request, side, args.seed);
    std::cout << "downloaded " << t.downloaded_symbols << " symbols; load = "
              << to_string(t.achieved_load) << " per decoded symbol\n";

    if (!args.out_path.empty()) {
        Library decoded;
        decoded.files = t.decoded;
        write_library_file(args.out_path, decoded, params.modulus);
        std::cout << "wrote " << t.decoded.size() << " decoded files to " << args.out_path
                  << "\n";
    }

    if (!args.verify_library.empty()) {
        LoadedLibrary expected = read_library_file(args.verify_library);
        bool ok = true;
        for (std::size_t i = 0; i < request.indices.size(); ++i)
            ok = ok && t.decoded[i] == expected.library.files[request.indices[i]];
        std::cout << (ok ? "decoded output matches the reference library\n"
                         : "decoded output DOES NOT match the reference library\n");
        if (!ok) return kExitVerification;
    }
    return kExitOk;
}

// ----- gen-library -----

struct GenArgs {
    std::uint32_t files = 0;
    std::uint32_t file_symbols = 0;
    std::uint32_t modulus = 65537;
    std::uint64_t seed = 0;
    std::string out_path;
};

int cmd_gen_library(const GenArgs &args) {
    FieldModulus modulus(args.modulus);
    Library library = random_library(args.files, args.file_symbols, modulus, args.seed);
    write_library_file(args.out_path, library, modulus);
    std::cout << "wrote " << args.files << " files x " << args.file_symbols << " symbols (q="
              << args.modulus << ") to " << args.out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"multi-message private information retrieval toolkit"};
    app.require_subcommand(1);

    CapacityArgs capacity_args;
    auto *capacity = app.add_subcommand("capacity", "capacity and converse bounds");
    capacity->add_option("--N", capacity_args.servers, "server count");
    capacity->add_option("--K", capacity_args.files, "library size");
    capacity->add_option("--P", capacity_args.requests, "requested files");
    capacity->add_option("--M", capacity_args.side, "side-information files");
    capacity->add_option("--sweep", capacity_args.sweep, "ranges like N=2..3 K=2..8");
    capacity->add_option("--format", capacity_args.format, "csv or table")
        ->check(CLI::IsMember({"csv", "table"}));
    capacity->add_flag("--decimal", capacity_args.decimal, "print decimals instead of a/b");

    SimulateArgs simulate_args;
    auto *simulate = app.add_subcommand("simulate", "end-to-end exchanges on a random library");
    simulate->add_option("--N", simulate_args.servers)->required();
    simulate->add_option("--K", simulate_args.files)->required();
    simulate->add_option("--P", simulate_args.requests)->required();
    simulate->add_option("--M", simulate_args.side);
    simulate->add_option("--c", simulate_args.chunk, "chunk size in symbols");
    simulate->add_option("--q", simulate_args.modulus, "field modulus");
    simulate->add_option("--seed", simulate_args.seed);
    simulate->add_option("--trials", simulate_args.trials);

    AuditArgs audit_args;
    auto *audit = app.add_subcommand("audit", "query-privacy audit");
    audit->add_option("--N", audit_args.servers)->required();
    audit->add_option("--K", audit_args.files)->required();
    audit->add_option("--P", audit_args.requests)->required();
    audit->add_option("--M", audit_args.side);
    audit->add_option("--c", audit_args.chunk);
    audit->add_option("--q", audit_args.modulus);
    audit->add_flag("--exact", audit_args.exact, "exhaustive distribution comparison");
    audit->add_option("--samples", audit_args.samples, "samples per (S,P) pair");
    audit->add_option("--seed", audit_args.seed);
    audit->add_option("--alpha", audit_args.alpha, "significance level");
    audit->add_flag("--negative-control", audit_args.negative_control,
                    "disable the chunk permutation (must leak)");
    audit->add_option("--json", audit_args.json_path, "write a JSON report here");

    VerifyArgs verify_args;
    auto *verify = app.add_subcommand("verify-identity",
                                      "check p(N,K) - q(N,K,M) = p(N,K-M)");
    verify->add_option("--N", verify_args.servers);
    verify->add_option("--K", verify_args.files);
    verify->add_option("--P", verify_args.requests);
    verify->add_option("--M", verify_args.side);
    verify->add_option("--sweep", verify_args.sweep, "ranges like N=2..3 K=2..8");
    verify->add_flag("--decimal", verify_args.decimal);

    ServeArgs serve_args;
    auto *serve = app.add_subcommand("serve", "run one PIR server");
    serve->add_option("--library", serve_args.library_path, "PIRL library file")->required();
    serve->add_option("--listen", serve_args.listen, "host:port (port 0 = ephemeral)");

    FetchArgs fetch_args;
    auto *fetch_cmd = app.add_subcommand("fetch", "retrieve files from running servers");
    fetch_cmd->add_option("--servers", fetch_args.servers_text, "host:port,host:port,...")
        ->required();
    fetch_cmd->add_option("--K", fetch_args.files)->required();
    fetch_cmd->add_option("--P", fetch_args.requests)->required();
    fetch_cmd->add_option("--M", fetch_args.side);
    fetch_cmd->add_option("--c", fetch_args.chunk);
    fetch_cmd->add_option("--q", fetch_args.modulus);
    fetch_cmd->add_option("--request", fetch_args.request_text, "indices like 0,1")->required();
    fetch_cmd->add_option("--side", fetch_args.side_text, "indices like 2");
    fetch_cmd->add_option("--side-library", fetch_args.side_library,
                          "library file holding the side-information contents");
    fetch_cmd->add_option("--verify-library", fetch_args.verify_library,
                          "compare decoded files against this library");
    fetch_cmd->add_option("--out", fetch_args.out_path, "write decoded files as a PIRL file");
    fetch_cmd->add_option("--seed", fetch_args.seed);

    GenArgs gen_args;
    auto *gen = app.add_subcommand("gen-library", "write a random PIRL library");
    gen->add_option("--K", gen_args.files)->required();
    gen->add_option("--L", gen_args.file_symbols, "symbols per file")->required();
    gen->add_option("--q", gen_args.modulus);
    gen->add_option("--seed", gen_args.seed);
    gen->add_option("--out", gen_args.out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (capacity->parsed()) return cmd_capacity(capacity_args);
        if (simulate->parsed()) return cmd_simulate(simulate_args);
        if (audit->parsed()) return cmd_audit(audit_args);
        if (verify->parsed()) return cmd_verify_identity(verify_args);
        if (serve->parsed()) return cmd_serve(serve_args);
        if (fetch_cmd->parsed()) return cmd_fetch(fetch_args);
        if (gen->parsed()) return cmd_gen_library(gen_args);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NetworkError &e) {
        std::cerr << "network error: " << e.what() << "\n";
        return kExitIo;
    } catch (const mmpir::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
