// Command-line front end: run protocol scripts, verify the published
// identities, dump recoupling tables, and calibrate the default protocol.
//
// Exit codes: 0 pass, 1 check failure, 2 usage or parse error.
// ANYONSIM_TOL overrides the default 1e-9 comparison tolerance.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "anyonsim/protocol.hpp"

namespace {

using namespace anyonsim;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::string fmt12(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void print_matrix(const Mat& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j)
            std::cout << (j ? " " : "") << format_complex(m(i, j));
        std::cout << '\n';
    }
}

void print_transcript(const std::vector<MeasurementRecord>& transcript) {
    for (const auto& r : transcript) {
        std::cout << "  " << (r.kind == MeasurementRecord::Kind::fusion ? "fuse" : "charge")
                  << ' ' << r.lo << ".." << r.hi << " -> " << r.outcome << "  (p=";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9f", r.probability);
        std::cout << buf << ")\n";
    }
}

int cmd_run(const std::string& path, const std::string& mode, std::uint64_t seed,
            const std::string& input_pair) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open script '" << path << "'\n";
        return kExitUsage;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();

    ProtocolScript script;
    try {
        script = parse_script(buffer.str());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    auto errors = validate(script);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "error: " << e << '\n';
        return kExitUsage;
    }

    AnyonState input = [&] {
        if (script.leaves == LeafRow(8, 2) && script.total == 0 && input_pair.size() == 2) {
            Label a = input_pair[0] - '0', b = input_pair[1] - '0';
            return logical_basis_state(a, b);
        }
        // Default input: the lexicographically first basis path.
        auto basis = get_basis(script.leaves, script.total);
        auto st = AnyonState::zero(basis);
        st.amplitudes()[0] = Cx{1.0, 0.0};
        return st;
    }();

    std::cout << "script: " << script.name << "  (" << script.instructions.size()
              << " instructions)\n";
    if (mode == "sample") {
        auto branch = execute_sampled(script, input, seed);
        std::cout << "mode: sample  seed: " << seed << '\n';
        std::cout << "decision word:";
        for (Label d : branch.decisions) std::cout << ' ' << d;
        std::cout << "\nweight: " << fmt12(branch.branch.weight) << "\ntranscript:\n";
        print_transcript(branch.branch.transcript);
        return kExitPass;
    }
    auto started = std::chrono::steady_clock::now();
    auto result = execute_branches(script, input);
    std::cout << "mode: branches\nclosed branches: " << result.closed.size()
              << "  total weight " << fmt12(result.closed_weight()) << '\n';
    if (!result.unterminated.empty())
        std::cout << "unterminated weight: " << fmt12(result.open_weight()) << '\n';
    int index = 0;
    std::set<std::vector<Label>> words;
    for (const auto& br : result.closed) {
        words.insert(br.decisions);
        std::cout << "branch " << index++ << "  weight " << fmt12(br.branch.weight)
                  << "  decisions:";
        for (Label d : br.decisions) std::cout << ' ' << d;
        std::cout << '\n';
        print_transcript(br.branch.transcript);
    }

    // Gate verdict per decision word: match / mismatch / not-applicable.
    const double tol = comparison_tol();
    for (const auto& word : words) {
        std::cout << "gate verdict for decisions";
        for (Label d : word) std::cout << ' ' << d;
        std::cout << ": ";
        try {
            auto extraction = extract_gate(script, word, {}, tol);
            auto vs1 = compare_projective(extraction.gate, paper_gates::gate1().matrix(), 1e-6);
            auto vs2 = compare_projective(extraction.gate, paper_gates::gate2().matrix(), 1e-6);
            if (vs1.match)
                std::cout << "match gate1 (distance " << fmt12(vs1.distance) << ")\n";
            else if (vs2.match)
                std::cout << "match gate2 (distance " << fmt12(vs2.distance) << ")\n";
            else
                std::cout << "mismatch (distance to gate1 " << fmt12(vs1.distance)
                          << ", to gate2 " << fmt12(vs2.distance) << ")\n";
        } catch (const std::exception&) {
            std::cout << "not-applicable\n";
        }
    }
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    std::cerr << "elapsed: " << fmt12(elapsed.count()) << " s\n";
    return kExitPass;
}

int cmd_verify(const std::string& target) {
    const double tol = comparison_tol();
    auto report = [&](const std::string& what, double residual, double limit) {
        bool ok = residual <= limit;
        std::cout << what << ": residual " << fmt12(residual) << "  (limit " << fmt12(limit)
                  << ")  " << (ok ? "pass" : "FAIL") << '\n';
        return ok ? kExitPass : kExitFail;
    };

    if (target == "sixj-zero") {
        return report("sixj(2,2,2,2,2,2)", std::abs(sixj(2, 2, 2, 2, 2, 2)), 1e-12);
    }
    if (target == "pentagon") {
        int rc = report("pentagon", pentagon_residual(), tol);
        rc |= report("hexagon (right)", hexagon_residual(+1), tol);
        rc |= report("hexagon (left)", hexagon_residual(-1), tol);
        rc |= report("f-matrix unitarity", f_unitarity_residual(), tol);
        return rc;
    }
    if (target == "recovery-algebra") {
        using namespace paper_gates;
        bool id1 = (gate2() * recovery_t()) == d_gate();
        bool id2 = (gate2() * d_gate()) == gate1().scaled(omega_bar());
        bool id3 = (gate1() * d_gate() * recovery_t()) ==
                   ExactDiagonalGate::identity().scaled(omega());
        std::cout << "gate2*T == D: " << (id1 ? "pass" : "FAIL") << '\n'
                  << "gate2*D == conj(w)*gate1: " << (id2 ? "pass" : "FAIL") << '\n'
                  << "gate1*D*T == w*identity: " << (id3 ? "pass" : "FAIL") << '\n';
        return (id1 && id2 && id3) ? kExitPass : kExitFail;
    }
    if (target == "entangling") {
        auto r1 = entangling_rank(paper_gates::gate1().matrix());
        auto r2 = entangling_rank(paper_gates::gate2().matrix());
        std::cout << "entangling rank gate1: " << r1 << "  gate2: " << r2 << '\n';
        // The paper's test vector v = |00>+|02>+|04>+|20>+|22>+|24>.
        Mat coeffs(2, 3);
        for (int ia = 0; ia < 2; ++ia)
            for (int jb = 0; jb < 3; ++jb) {
                int k = ia * 3 + jb;
                coeffs(ia, jb) = paper_gates::gate1().diag[k].to_complex();
            }
        double minor = max_factorization_minor(coeffs);
        std::cout << "factorization minor of gate1*v: " << fmt12(minor)
                  << (minor > tol ? "  (no product decomposition)" : "") << '\n';
        return (r1 == 2 && r2 == 2 && minor > tol) ? kExitPass : kExitFail;
    }
    if (target == "gate1" || target == "gate2") {
        auto script = default_script();
        bool first = target == "gate1";
        auto extraction =
            extract_gate(script, first ? gate1_selector() : gate2_selector());
        auto expected = first ? paper_gates::gate1() : paper_gates::gate2();
        auto cmp = compare_projective(extraction.gate, expected.matrix(), 1e-6);
        std::cout << "branch " << (first ? "2" : "0") << " gate vs " << target
                  << ": projective distance " << fmt12(cmp.distance) << "  phase "
                  << format_complex(cmp.phase) << '\n'
                  << "branch weight " << fmt12(extraction.branch_weight)
                  << "  input-independence defect " << fmt12(extraction.weight_spread)
                  << '\n';
        print_matrix(extraction.gate);
        return cmp.match ? kExitPass : kExitFail;
    }
    std::cerr << "error: unknown verify target '" << target << "'\n";
    return kExitUsage;
}

int cmd_tables(const std::string& what) {
    auto emit = [](std::initializer_list<std::string> cols) {
        bool first = true;
        for (const auto& c : cols) {
            if (!first) std::cout << '\t';
            std::cout << c;
            first = false;
        }
        std::cout << '\n';
    };
    if (what == "r") {
        emit({"a", "b", "c", "re", "im"});
        for (Label a = 0; a <= kLevel; ++a)
            for (Label b = 0; b <= kLevel; ++b)
                for (Label c = 0; c <= kLevel; ++c) {
                    if (!admissible(a, b, c)) continue;
                    Cx v = r_symbol(a, b, c);
                    emit({std::to_string(a), std::to_string(b), std::to_string(c),
                          fmt12(v.real()), fmt12(v.imag())});
                }
        return kExitPass;
    }
    if (what == "sixj") {
        emit({"a", "b", "m", "c", "d", "n", "re", "im"});
        for (Label a = 0; a <= kLevel; ++a)
            for (Label b = 0; b <= kLevel; ++b)
                for (Label m = 0; m <= kLevel; ++m)
                    for (Label c = 0; c <= kLevel; ++c)
                        for (Label d = 0; d <= kLevel; ++d)
                            for (Label n = 0; n <= kLevel; ++n) {
                                if (!admissible(a, b, m) || !admissible(m, c, d) ||
                                    !admissible(b, c, n) || !admissible(a, n, d))
                                    continue;
                                emit({std::to_string(a), std::to_string(b), std::to_string(m),
                                      std::to_string(c), std::to_string(d), std::to_string(n),
                                      fmt12(sixj(a, b, m, c, d, n)), fmt12(0.0)});
                            }
        return kExitPass;
    }
    if (what == "f") {
        emit({"a", "b", "c", "d", "m", "n", "re", "im"});
        for (Label a = 0; a <= kLevel; ++a)
            for (Label b = 0; b <= kLevel; ++b)
                for (Label c = 0; c <= kLevel; ++c)
                    for (Label d = 0; d <= kLevel; ++d) {
                        bool any = false;
                        for (Label m = 0; m <= kLevel && !any; ++m)
                            any = admissible(a, b, m) && admissible(m, c, d);
                        if (!any) continue;
                        const FMatrix& f = f_matrix(a, b, c, d);
                        for (Label m : f.row_channels)
                            for (Label n : f.col_channels) {
                                Cx v = f.at(m, n);
                                emit({std::to_string(a), std::to_string(b), std::to_string(c),
                                      std::to_string(d), std::to_string(m), std::to_string(n),
                                      fmt12(v.real()), fmt12(v.imag())});
                            }
                    }
        return kExitPass;
    }
    std::cerr << "error: unknown table '" << what << "'\n";
    return kExitUsage;
}

int cmd_calibrate(const std::string& grid_name) {
    std::vector<ScriptParams> grid;
    if (grid_name == "default") {
        grid = default_calibration_grid();
    } else if (grid_name == "empty") {
        std::cerr << "error: empty calibration grid\n";
        return kExitUsage;
    } else {
        std::cerr << "error: unknown grid '" << grid_name << "'\n";
        return kExitUsage;
    }
    auto report = calibrate_script(grid);
    std::cout << "calibration over " << report.candidates.size() << " candidates  (tolerance "
              << fmt12(report.tolerance) << ")\n";
    int shown = 0;
    for (const auto& cand : report.candidates) {
        if (shown++ >= 8) break;
        std::cout << "  read " << (cand.params.read_sign > 0 ? "+" : "-") << "/"
                  << (cand.params.read_mirror > 0 ? "+" : "-") << "  central "
                  << (cand.params.central_sign > 0 ? "+" : "-") << "x"
                  << cand.params.central_count << "  restore "
                  << (cand.params.restore_sign > 0 ? "+" : "-") << "/"
                  << (cand.params.restore_mirror > 0 ? "+" : "-");
        if (!cand.extracted) {
            std::cout << "  failed: " << cand.error << '\n';
            continue;
        }
        std::cout << "  d(gate1)=" << fmt12(cand.dist_gate1)
                  << "  d(gate2)=" << fmt12(cand.dist_gate2)
                  << "  weights=(" << fmt12(cand.weight2) << "," << fmt12(cand.weight0)
                  << ")  independence=" << fmt12(cand.independence_defect) << '\n';
    }
    const auto& best = report.best();
    std::cout << "best: d(gate1)=" << fmt12(best.dist_gate1)
              << " d(gate2)=" << fmt12(best.dist_gate2) << "  within tolerance: "
              << (report.within_tolerance ? "yes" : "no") << '\n';
    return report.within_tolerance ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for the SU(2) level-4 anyon theory and its 2-qutrit protocol"};
    app.require_subcommand(1);

    std::string script_path, mode = "branches", input_pair = "00";
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Execute a protocol script");
    run->add_option("script", script_path, "script file")->required();
    run->add_option("--mode", mode, "branches|sample")
        ->check(CLI::IsMember({"branches", "sample"}));
    run->add_option("--seed", seed, "sampling seed");
    run->add_option("--input", input_pair, "logical input pair, e.g. 02");

    std::string target;
    auto* verify = app.add_subcommand("verify", "Run a named acceptance check");
    verify->add_option("--target", target, "gate1|gate2|recovery-algebra|entangling|sixj-zero|pentagon")
        ->required();

    std::string what, format = "tsv";
    auto* tables = app.add_subcommand("tables", "Dump recoupling tables");
    tables->add_option("--what", what, "sixj|f|r")->required();
    tables->add_option("--format", format, "tsv")->check(CLI::IsMember({"tsv"}));

    std::string grid = "default";
    auto* calibrate = app.add_subcommand("calibrate", "Search the protocol convention grid");
    calibrate->add_option("--grid", grid, "default|empty");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(script_path, mode, seed, input_pair);
        if (verify->parsed()) return cmd_verify(target);
        if (tables->parsed()) return cmd_tables(what);
        if (calibrate->parsed()) return cmd_calibrate(grid);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitUsage;
}
