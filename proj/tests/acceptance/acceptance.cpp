// Acceptance suite: one check per shipping criterion, each printed as a
// single PASS/FAIL line with its runtime. Run all of them or a single one
// with --criterion <n>. Criterion 9 spawns two `pirtool serve` processes and
// needs the PIRTOOL environment variable (set by ctest) or --pirtool.

#include <csignal>
#include <cstring>
#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "mmpir/audit.hpp"
#include "mmpir/capacity.hpp"
#include "mmpir/net.hpp"

using namespace mmpir;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string &message) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += message;
    }
    void note(const std::string &message) {
        if (detail.empty()) detail = message;
    }
};

using Criterion = std::function<void(Outcome &)>;

FieldModulus default_modulus() { return FieldModulus(65537); }

// ---- criterion 1: Example-scale reproduction ----

void criterion1(Outcome &out) {
    Params with_side(2, 4, 2, 1, 1, default_modulus());
    Library library = random_library(4, with_side.file_symbols(), with_side.modulus, 2024);
    Transcript t = run_exchange(with_side, library, RequestSet{{0, 1}},
                                side_info_from_library(library, {2}), 7);
    for (const Answer &answer : t.answers) {
        std::uint64_t symbols = 0;
        for (const auto &chunk : answer.coded_chunks) symbols += chunk.size();
        if (symbols != 5) out.fail("per-server answer is not 5 symbols");
    }
    if (!(t.achieved_load == Rational(5, 4))) out.fail("load with M=1 is not exactly 5/4");
    if (t.decoded_equals_library != std::optional<bool>(true)) out.fail("M=1 decode mismatch");

    Params no_side(2, 4, 2, 0, 1, default_modulus());
    Transcript t0 = run_exchange(no_side, library, RequestSet{{0, 1}}, SideInfo{}, 7);
    if (!(t0.achieved_load == Rational(3, 2))) out.fail("load with M=0 is not exactly 3/2");
    if (t0.decoded_equals_library != std::optional<bool>(true)) out.fail("M=0 decode mismatch");
    out.note("answers are 5 symbols, loads 5/4 and 3/2 exact");
}

// ---- criterion 2: decodability sweep ----

void criterion2(Outcome &out) {
    std::uint64_t trials = 0, successes = 0;
    for (std::uint32_t servers : {2u, 3u}) {
        for (std::uint32_t files = 1; files <= 6; ++files) {
            for (std::uint32_t requests = 1; requests <= files; ++requests) {
                for (std::uint32_t side = 0; side + requests <= files; ++side) {
                    Params params(servers, files, requests, side, 1, default_modulus());
                    Library library = random_library(files, params.file_symbols(),
                                                     params.modulus,
                                                     9000 + servers * 100 + files * 10 + side);
                    for (const IndexPair &pair :
                         admissible_pairs(files, requests, side)) {
                        SideInfo info = side_info_from_library(library, pair.side);
                        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
                            Transcript t = run_exchange(params, library,
                                                        RequestSet{pair.request}, info, seed);
                            ++trials;
                            if (t.decoded_equals_library == std::optional<bool>(true))
                                ++successes;
                        }
                    }
                }
            }
        }
    }
    if (successes != trials)
        out.fail(std::to_string(trials - successes) + " of " + std::to_string(trials) +
                 " trials decoded incorrectly");
    out.note(std::to_string(successes) + "/" + std::to_string(trials) +
             " exchanges decoded bit-exactly");
}

// ---- criterion 3: load formula match on high-regime tuples ----

void criterion3(Outcome &out) {
    std::uint64_t tuples = 0;
    for (std::uint32_t servers : {2u, 3u}) {
        for (std::uint32_t files = 1; files <= 6; ++files) {
            for (std::uint32_t requests = 1; requests <= files; ++requests) {
                for (std::uint32_t side = 0; side + requests <= files; ++side) {
                    if (2 * requests < files - side) continue; // high regime only
                    Params params(servers, files, requests, side, 1, default_modulus());
                    Library library = random_library(files, params.file_symbols(),
                                                     params.modulus, 333 + files);
                    auto pairs = admissible_pairs(files, requests, side);
                    Transcript t =
                        run_exchange(params, library, RequestSet{pairs.front().request},
                                     side_info_from_library(library, pairs.front().side), 11);
                    Rational downloaded(
                        static_cast<std::int64_t>(t.downloaded_symbols),
                        static_cast<std::int64_t>(requests) * params.file_symbols());
                    Rational formula = *dpsi(servers, files, requests, side).value;
                    ++tuples;
                    if (!(downloaded == formula && t.achieved_load == formula)) {
                        out.fail("load mismatch at N=" + std::to_string(servers) +
                                 " K=" + std::to_string(files) + " P=" + std::to_string(requests) +
                                 " M=" + std::to_string(side));
                        return;
                    }
                }
            }
        }
    }
    out.note(std::to_string(tuples) + " high-regime tuples match 1 + (K-M-P)/(PN) exactly");
}

// ---- criterion 4: reduction identity ----

void criterion4(Outcome &out) {
    std::uint64_t high_rows = 0, low_rows = 0;
    for (std::uint32_t servers = 2; servers <= 4; ++servers)
        for (std::uint32_t files = 1; files <= 10; ++files)
            for (std::uint32_t requests = 1; requests <= files; ++requests)
                for (std::uint32_t side = 0; side + requests <= files; ++side) {
                    if (2 * requests < files - side) continue;
                    IdentityReport report =
                        verify_reduction_identity(servers, files, requests, side);
                    ++high_rows;
                    if (!report.exact || !report.pass) {
                        out.fail("high-regime identity not exact at N=" +
                                 std::to_string(servers) + " K=" + std::to_string(files));
                        return;
                    }
                }
    for (std::uint32_t servers : {2u, 3u})
        for (std::uint32_t requests : {1u, 2u})
            for (std::uint32_t ratio : {2u, 3u, 4u})
                for (std::uint32_t side : {0u, 1u, 2u, 3u}) {
                    const std::uint32_t files = ratio * requests + side;
                    IdentityReport report = verify_reduction_identity(
                        servers, files, requests, side, Regime::LowP);
                    ++low_rows;
                    if (!report.pass || report.abs_error > Real("1e-9")) {
                        out.fail("low-regime identity beyond 1e-9 at N=" +
                                 std::to_string(servers) + " K=" + std::to_string(files) +
                                 " P=" + std::to_string(requests));
                        return;
                    }
                }
    out.note(std::to_string(high_rows) + " high-regime rows exact, " +
             std::to_string(low_rows) + " low-regime rows within 1e-9");
}

// ---- criterion 5: theorem equivalence ----

void criterion5(Outcome &out) {
    std::uint64_t rows = 0;
    for (std::uint32_t servers = 2; servers <= 4; ++servers)
        for (std::uint32_t files = 1; files <= 10; ++files)
            for (std::uint32_t requests = 1; requests <= files; ++requests)
                for (std::uint32_t side = 0; side + requests <= files; ++side) {
                    if (!theorem_applies(servers, files, requests, side)) continue;
                    ++rows;
                    if (!dpsi_equiv_check(servers, files, requests, side)) {
                        out.fail("dpsi(N,K,P,M) != dpsi(N,K-M,P,0) at N=" +
                                 std::to_string(servers) + " K=" + std::to_string(files) +
                                 " P=" + std::to_string(requests) +
                                 " M=" + std::to_string(side));
                        return;
                    }
                }
    out.note(std::to_string(rows) + " theorem tuples satisfy the library-size reduction");
}

// ---- criterion 6: converse consistency ----

void criterion6(Outcome &out) {
    std::uint64_t rows = 0;
    for (std::uint32_t servers : {2u, 3u}) {
        for (std::uint32_t files = 1; files <= 6; ++files) {
            for (std::uint32_t requests = 1; requests <= files; ++requests) {
                for (std::uint32_t side = 0; side + requests <= files; ++side) {
                    Params params(servers, files, requests, side, 1, default_modulus());
                    Library library = random_library(files, params.file_symbols(),
                                                     params.modulus, 555 + files);
                    auto pairs = admissible_pairs(files, requests, side);
                    Transcript t =
                        run_exchange(params, library, RequestSet{pairs.front().request},
                                     side_info_from_library(library, pairs.front().side), 3);
                    Rational bound = converse_bound(servers, files, requests, side);
                    ++rows;
                    if (!(bound <= t.achieved_load)) {
                        out.fail("converse exceeds achieved load at N=" +
                                 std::to_string(servers) + " K=" + std::to_string(files));
                        return;
                    }
                    DpsiResult d = dpsi(servers, files, requests, side);
                    if (d.known) {
                        if (!(bound == *d.value)) {
                            out.fail("converse != dpsi on a theorem tuple");
                            return;
                        }
                    } else if (!(bound < t.achieved_load)) {
                        out.fail("expected strict gap off the theorem grid");
                        return;
                    }
                }
            }
        }
    }
    out.note(std::to_string(rows) +
             " tuples: converse <= achieved, equality exactly on theorem tuples");
}

// ---- criterion 7: exact privacy ----

void criterion7(Outcome &out) {
    struct Case {
        std::uint32_t servers, files, requests, side;
    };
    const Case cases[] = {{2, 2, 1, 0}, {2, 3, 1, 1}, {2, 3, 2, 0}};
    std::string summary;
    for (const Case &c : cases) {
        Params params(c.servers, c.files, c.requests, c.side, 1, default_modulus());
        ExactAuditReport report = run_exact_audit(params);
        if (!report.identical) {
            out.fail("distributions differ for (N,K,P,M)=(" + std::to_string(c.servers) + "," +
                     std::to_string(c.files) + "," + std::to_string(c.requests) + "," +
                     std::to_string(c.side) + ")");
            return;
        }
        if (!summary.empty()) summary += ", ";
        summary += "(" + std::to_string(c.servers) + "," + std::to_string(c.files) + "," +
                   std::to_string(c.requests) + "," + std::to_string(c.side) + "): " +
                   std::to_string(report.pair_count) + " pairs x " +
                   std::to_string(report.outcomes_per_pair) + " outcomes";
    }
    out.note("identical exact distributions; " + summary);
}

// ---- criterion 8: statistical privacy ----

void criterion8(Outcome &out) {
    Params params(2, 4, 2, 1, 1, default_modulus());
    auto honest = statistical_audit_all(params, 100000, 20250811);
    for (const StatisticalAuditReport &r : honest) {
        if (r.chi.degenerate) out.fail("honest audit degenerate");
        if (!r.pass)
            out.fail("honest scheme rejected at server " + std::to_string(r.server) +
                     " (p=" + std::to_string(r.chi.p_value) + ")");
    }
    AuditOptions broken;
    broken.permute_chunks = false;
    auto control = statistical_audit_all(params, 100000, 20250811, 0.01, broken);
    bool control_failed = false;
    for (const StatisticalAuditReport &r : control) control_failed |= !r.pass;
    if (!control_failed) out.fail("permutation-disabled negative control went undetected");
    if (out.pass) {
        std::ostringstream note;
        note << "honest p-values";
        for (const StatisticalAuditReport &r : honest) note << " " << r.chi.p_value;
        note << "; negative control rejected";
        out.note(note.str());
    }
}

// ---- criterion 9: network equivalence ----

struct ServerProcess {
    pid_t pid = -1;
    std::uint16_t port = 0;
};

ServerProcess spawn_server(const std::string &pirtool, const std::string &library_path) {
    int pipe_fds[2];
    if (::pipe(pipe_fds) != 0) throw Error("pipe failed");
    pid_t pid = ::fork();
    if (pid < 0) throw Error("fork failed");
    if (pid == 0) {
        ::close(pipe_fds[0]);
        ::dup2(pipe_fds[1], STDOUT_FILENO);
        ::close(pipe_fds[1]);
        ::execl(pirtool.c_str(), pirtool.c_str(), "serve", "--library", library_path.c_str(),
                "--listen", "127.0.0.1:0", static_cast<char *>(nullptr));
        ::_exit(127);
    }
    ::close(pipe_fds[1]);

    // Read one line: "listening on 127.0.0.1:PORT".
    std::string line;
    char ch;
    while (line.find('\n') == std::string::npos) {
        ssize_t n = ::read(pipe_fds[0], &ch, 1);
        if (n <= 0) break;
        line.push_back(ch);
    }
    ::close(pipe_fds[0]);
    ServerProcess proc;
    proc.pid = pid;
    const std::size_t colon = line.rfind(':');
    if (line.rfind("listening on ", 0) == 0 && colon != std::string::npos)
        proc.port = static_cast<std::uint16_t>(std::stoul(line.substr(colon + 1)));
    return proc;
}

void stop_server(ServerProcess &proc) {
    if (proc.pid > 0) {
        ::kill(proc.pid, SIGTERM);
        int status = 0;
        ::waitpid(proc.pid, &status, 0);
        proc.pid = -1;
    }
}

void criterion9(Outcome &out, const std::string &pirtool) {
    if (pirtool.empty()) {
        out.fail("PIRTOOL is not set; cannot spawn server processes");
        return;
    }
    Params params(2, 4, 2, 1, 1, default_modulus());
    Library library = random_library(4, params.file_symbols(), params.modulus, 77);
    const std::string library_path =
        "/tmp/mmpir_acceptance_" + std::to_string(::getpid()) + ".pirl";
    write_library_file(library_path, library, params.modulus);

    ServerProcess s0, s1;
    try {
        s0 = spawn_server(pirtool, library_path);
        s1 = spawn_server(pirtool, library_path);
        if (s0.port == 0 || s1.port == 0) {
            out.fail("server process did not report a listening port");
        } else {
            std::vector<Endpoint> endpoints = {{"127.0.0.1", s0.port}, {"127.0.0.1", s1.port}};
            RequestSet request{{0, 1}};
            SideInfo side = side_info_from_library(library, {2});
            Rng seeds(4242);
            for (int i = 0; i < 10 && out.pass; ++i) {
                std::uint64_t seed = seeds.next_u64();
                Transcript networked = fetch(endpoints, params, request, side, seed);
                Transcript local = run_exchange(params, library, request, side, seed);
                if (!content_equal(networked, local))
                    out.fail("transcripts diverge at seed " + std::to_string(seed));
                if (!(networked.decoded[0] == library.files[0] &&
                      networked.decoded[1] == library.files[1]))
                    out.fail("networked decode is wrong at seed " + std::to_string(seed));
            }
        }
    } catch (const Error &e) {
        out.fail(e.what());
    }
    stop_server(s0);
    stop_server(s1);
    std::remove(library_path.c_str());
    out.note("10 seeds: networked transcript equals the in-memory transcript");
}

} // namespace

int main(int argc, char **argv) {
    int only = 0;
    std::string pirtool = std::getenv("PIRTOOL") ? std::getenv("PIRTOOL") : "";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
        if (std::strcmp(argv[i], "--pirtool") == 0 && i + 1 < argc) pirtool = argv[++i];
    }

    struct Entry {
        int id;
        double time_limit_s;
        const char *name;
        Criterion run;
    };
    const std::vector<Entry> entries = {
        {1, 1.0, "reference reproduction (answers 5 symbols, loads 5/4 and 3/2)", criterion1},
        {2, 60.0, "decodability sweep (N in {2,3}, K <= 6, 20 seeds)", criterion2},
        {3, 60.0, "downloaded symbols match the closed-form load", criterion3},
        {4, 10.0, "reduction identity p(N,K) - q(N,K,M) = p(N,K-M)", criterion4},
        {5, 10.0, "capacity equivalence D(N,K,P,M) = D(N,K-M,P,0)", criterion5},
        {6, 60.0, "converse bound consistency", criterion6},
        {7, 300.0, "exact privacy (enumerated query distributions)", criterion7},
        {8, 120.0, "statistical privacy (chi-square, 1e5 samples/pair)", criterion8},
        {9, 30.0, "network/in-memory transcript equivalence",
         [&pirtool](Outcome &out) { criterion9(out, pirtool); }},
    };

    bool all_pass = true;
    for (const Entry &entry : entries) {
        if (only != 0 && entry.id != only) continue;
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            entry.run(outcome);
        } catch (const std::exception &e) {
            outcome.fail(std::string("exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > entry.time_limit_s)
            outcome.fail("runtime " + std::to_string(seconds) + "s exceeds " +
                         std::to_string(entry.time_limit_s) + "s");
        std::cout << "criterion " << entry.id << " [" << (outcome.pass ? "PASS" : "FAIL")
                  << "] " << entry.name << " — " << outcome.detail << " (" << std::fixed
                  << std::setprecision(2) << seconds << " s)\n"
                  << std::defaultfloat;
        all_pass = all_pass && outcome.pass;
    }
    return all_pass ? 0 : 1;
}
