// Protocol scripts: parsing, validation, both executors, gate extraction,
// the reconstructed default protocol and the recovery algorithm.

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "anyonsim/protocol.hpp"

using namespace anyonsim;

TEST_CASE("parse/print round trip is bit-stable") {
    auto script = default_script();
    std::string text = print_script(script);
    auto reparsed = parse_script(text);
    CHECK(print_script(reparsed) == text);

    // hand-written script with comments and both directive forms
    std::string hand = R"(# demo
name demo
leaves 2 2 2 2 2 2 2 2
total 0
create_pair 5 1          # ancilla
full_twist 3 -1
fuse 5 expect=2
on_outcome 4: ffo 5 6
repeat_until 0: braid 5 +1; measure_charge 6 9
)";
    auto parsed = parse_script(hand);
    CHECK(parsed.name == "demo");
    CHECK(parsed.instructions.size() == 5);
    auto again = parse_script(print_script(parsed));
    CHECK(print_script(again) == print_script(parsed));
}

#ifdef ANYONSIM_SCRIPTS_DIR
TEST_CASE("the shipped default script matches the generator") {
    std::ifstream in(std::string(ANYONSIM_SCRIPTS_DIR) + "/default.proto");
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto parsed = parse_script(buffer.str());
    CHECK(print_script(parsed) == print_script(default_script()));
}
#endif

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse_script("leaves 2 2\nbogus 1 2\n"), ScriptError);
    CHECK_THROWS_AS(parse_script("braid 1 +1\n"), ScriptError);  // no leaf row
    CHECK_THROWS_AS(parse_script("leaves 2 2\nbraid 1 +3\n"), ScriptError);
    CHECK_THROWS_AS(parse_script("leaves 2 2\non_outcome 2 braid 1 +1\n"), ScriptError);
    CHECK_THROWS_AS(parse_script("leaves 2 2\nrepeat_until 0:\n"), ScriptError);
}

TEST_CASE("validation") {
    CHECK(validate(default_script()).empty());

    ProtocolScript bad;
    bad.leaves = {2, 2};
    bad.total = 0;
    Instruction f;
    f.op = Instruction::Op::fuse;
    f.arg1 = 7;  // nonexistent position
    bad.instructions.push_back(f);
    CHECK_FALSE(validate(bad).empty());

    ProtocolScript odd;
    odd.leaves = {2, 2};
    odd.total = 0;
    Instruction f2;
    f2.op = Instruction::Op::fuse;
    f2.arg1 = 1;
    f2.expect = 3;  // not a channel of 2 x 2
    odd.instructions.push_back(f2);
    CHECK_FALSE(validate(odd).empty());

    // positions are tracked through outcome-dependent row lengths
    ProtocolScript shrink;
    shrink.leaves = {2, 2, 2, 2};
    shrink.total = 0;
    Instruction f3;
    f3.op = Instruction::Op::fuse;
    f3.arg1 = 1;
    Instruction b;
    b.op = Instruction::Op::braid;
    b.arg1 = 3;  // valid only when the fusion outcome was nonzero
    b.arg2 = 1;
    shrink.instructions.push_back(f3);
    shrink.instructions.push_back(b);
    CHECK_FALSE(validate(shrink).empty());
}

TEST_CASE("empty script is the identity") {
    ProtocolScript empty;
    empty.name = "empty";
    empty.leaves = LeafRow(8, 2);
    empty.total = 0;
    auto input = logical_basis_state(2, 4);
    auto result = execute_branches(empty, input);
    REQUIRE(result.closed.size() == 1);
    CHECK(result.closed[0].branch.weight == doctest::Approx(1.0));
    CHECK(std::abs(std::abs(inner_product(result.closed[0].branch.state, input)) - 1.0) <
          1e-12);

    auto ext = extract_gate(empty, {});
    CHECK(ext.gate.max_abs_diff(Mat::identity(9)) < 1e-9);
}

TEST_CASE("single fuse of a vacuum pair gives one branch of weight 1") {
    ProtocolScript s;
    s.leaves = LeafRow(8, 2);
    s.total = 0;
    Instruction cp;
    cp.op = Instruction::Op::create_pair;
    cp.arg1 = 5;
    cp.arg2 = 1;
    Instruction f;
    f.op = Instruction::Op::fuse;
    f.arg1 = 5;
    s.instructions.push_back(cp);
    s.instructions.push_back(f);
    auto result = execute_branches(s, logical_basis_state(0, 0));
    REQUIRE(result.closed.size() == 1);
    CHECK(result.closed[0].branch.weight == doctest::Approx(1.0));
    REQUIRE(result.closed[0].branch.transcript.size() == 1);
    CHECK(result.closed[0].branch.transcript[0].outcome == 0);
}

TEST_CASE("default script: two decision branches with input-independent weights") {
    auto script = default_script();
    double w2 = -1.0, w0 = -1.0;
    for (Label a : {0, 2, 4})
        for (Label b : {0, 2, 4}) {
            auto result = execute_branches(script, logical_basis_state(a, b));
            CHECK(result.open_weight() < 1e-9);
            CHECK(result.closed_weight() == doctest::Approx(1.0).epsilon(1e-9));
            double p2 = 0.0, p0 = 0.0;
            std::set<std::vector<Label>> words;
            for (const auto& br : result.closed) {
                REQUIRE(br.decisions.size() == 1);
                words.insert(br.decisions);
                (br.decisions[0] == 2 ? p2 : p0) += br.branch.weight;
            }
            CHECK(words.size() == 2);
            if (w2 < 0) {
                w2 = p2;
                w0 = p0;
            }
            CHECK(std::abs(p2 - w2) < 1e-9);
            CHECK(std::abs(p0 - w0) < 1e-9);
        }
    CHECK(w2 == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(w0 == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("default script reproduces both published gates projectively") {
    auto script = default_script();
    auto ext2 = extract_gate(script, gate1_selector());
    auto cmp1 = compare_projective(ext2.gate, paper_gates::gate1().matrix(), 1e-6);
    CHECK(cmp1.match);
    CHECK(cmp1.distance < 1e-9);
    CHECK(ext2.gate.unitarity_defect() < 1e-9);
    CHECK(ext2.max_leakage < 1e-9);
    CHECK(ext2.linearity_defect < 1e-6);
    CHECK(ext2.route_agreement < 1e-6);

    auto ext0 = extract_gate(script, gate2_selector());
    auto cmp2 = compare_projective(ext0.gate, paper_gates::gate2().matrix(), 1e-6);
    CHECK(cmp2.match);
    CHECK(cmp2.distance < 1e-9);

    // Extracted branch gates are diagonal in the logical basis.
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            if (i != j) {
                CHECK(std::abs(ext2.gate(i, j)) < 1e-9);
                CHECK(std::abs(ext0.gate(i, j)) < 1e-9);
            }
}

TEST_CASE("interferometric outcome 2 has zero weight in the winning branch") {
    auto script = default_script();
    for (Label a : {0, 2, 4})
        for (Label b : {0, 2, 4}) {
            auto result = execute_branches(script, logical_basis_state(a, b));
            for (const auto& br : result.closed) {
                if (br.decisions != gate1_selector()) continue;
                for (const auto& r : br.branch.transcript)
                    if (r.kind == MeasurementRecord::Kind::charge)
                        CHECK(r.outcome != 2);
            }
        }
}

TEST_CASE("script consisting only of the recovery twists extracts T") {
    ProtocolScript s;
    s.name = "twists";
    s.leaves = LeafRow(8, 2);
    s.total = 0;
    Instruction t;
    t.op = Instruction::Op::apply_recovery_twists;
    s.instructions.push_back(t);
    auto ext = extract_gate(s, {});
    auto cmp = compare_projective(ext.gate, paper_gates::recovery_t().matrix(), 1e-6);
    CHECK(cmp.match);
}

TEST_CASE("sampling reproducibility and agreement with branch weights") {
    auto script = default_script();
    auto input = logical_basis_state(0, 0);
    auto b1 = execute_sampled(script, input, 42);
    auto b2 = execute_sampled(script, input, 42);
    REQUIRE(b1.branch.transcript.size() == b2.branch.transcript.size());
    for (std::size_t k = 0; k < b1.branch.transcript.size(); ++k) {
        CHECK(b1.branch.transcript[k].outcome == b2.branch.transcript[k].outcome);
        CHECK(b1.branch.transcript[k].probability ==
              doctest::Approx(b2.branch.transcript[k].probability));
    }
    CHECK(b1.decisions == b2.decisions);

    // Empirical fusion-branch frequency vs the exact weight 1/2 (3 sigma).
    const int runs = 600;
    int count2 = 0;
    for (int t = 0; t < runs; ++t) {
        auto br = execute_sampled(script, input, 777 + t);
        REQUIRE(br.decisions.size() == 1);
        if (br.decisions[0] == 2) ++count2;
    }
    double freq = static_cast<double>(count2) / runs;
    double sigma = std::sqrt(0.25 / runs);
    CHECK(std::abs(freq - 0.5) < 3.0 * sigma + 1e-12);
}

TEST_CASE("deterministic script sampling equals the unique branch") {
    ProtocolScript s;
    s.leaves = LeafRow(8, 2);
    s.total = 0;
    Instruction cp;
    cp.op = Instruction::Op::create_pair;
    cp.arg1 = 5;
    cp.arg2 = 1;
    Instruction f;
    f.op = Instruction::Op::fuse;
    f.arg1 = 5;
    s.instructions.push_back(cp);
    s.instructions.push_back(f);
    auto input = logical_basis_state(4, 2);
    auto sampled = execute_sampled(s, input, 5);
    auto branches = execute_branches(s, input);
    REQUIRE(branches.closed.size() == 1);
    CHECK(std::abs(std::abs(inner_product(sampled.branch.state,
                                          branches.closed[0].branch.state)) -
                   1.0) < 1e-9);
}

TEST_CASE("recovery loop terminates on gate1 along every word") {
    auto input = logical_basis_state(2, 2);
    auto rec = run_recovery_branches(input, 4);
    CHECK(rec.route_defect < 1e-6);
    double closed = 0.0;
    for (const auto& p : rec.terminated) {
        CHECK(p.composite_is_gate1);
        CHECK(p.state_defect < 1e-6);
        closed += p.weight;
    }
    CHECK(closed + rec.unterminated_weight == doctest::Approx(1.0).epsilon(1e-9));
    // geometric decay of the open weight
    REQUIRE(rec.open_weight_by_depth.size() == 4);
    for (std::size_t d = 0; d < 4; ++d)
        CHECK(rec.open_weight_by_depth[d] ==
              doctest::Approx(std::pow(0.5, d + 1)).epsilon(1e-6));

    // word algebra spot checks: (2) -> gate1, (0,0) -> gate2 T gate2 ~ gate1
    for (const auto& p : rec.terminated) {
        if (p.word == std::vector<Label>{2})
            CHECK(p.composite == paper_gates::gate1());
        if (p.word == std::vector<Label>{0, 0})
            CHECK(p.composite ==
                  (paper_gates::gate2() * paper_gates::recovery_t() * paper_gates::gate2()));
    }

    auto sampled = run_recovery_sampled(input, 2024);
    CHECK(sampled.composite_is_gate1);
    CHECK(sampled.state_defect < 1e-6);
}

TEST_CASE("calibration over the default grid finds the convention") {
    auto grid = default_calibration_grid();
    // Keep the unit-test run quick: score a slice containing the winner and
    // some losers; the full grid is exercised by the acceptance suite.
    std::vector<ScriptParams> slice;
    for (std::size_t k = 0; k < grid.size(); k += 7) slice.push_back(grid[k]);
    slice.push_back(ScriptParams{});
    auto report = calibrate_script(slice);
    CHECK(report.within_tolerance);
    CHECK(report.best().score() < 1e-6);
    CHECK(report.best().independence_defect < 1e-9);
    CHECK_THROWS_AS(calibrate_script({}), std::invalid_argument);
}
