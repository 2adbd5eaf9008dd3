// Non-unitary primitives: pair creation, fusion and collective-charge
// measurements (Born rule, idempotence), unfusion retry statistics, FFO.

#include <doctest.h>

#include <cmath>

#include "anyonsim/operations.hpp"

using namespace anyonsim;

namespace {

double total_probability(const std::vector<MeasurementOutcome>& outcomes) {
    double p = 0.0;
    for (const auto& o : outcomes) p += o.probability;
    return p;
}

}  // namespace

TEST_CASE("vacuum pair creation and immediate fusion") {
    auto st = logical_basis_state(0, 0);
    for (Label q : {1, 2, 3, 4}) {
        auto with_pair = create_pair(st, 5, q);
        CHECK(std::abs(with_pair.norm() - 1.0) < 1e-12);
        auto outcomes = fuse_measure(with_pair, 5);
        REQUIRE(outcomes.size() == 1);
        CHECK(outcomes[0].outcome == 0);
        CHECK(outcomes[0].probability == doctest::Approx(1.0));
        // collective charge of the fresh pair is 0 with probability 1
        auto charge = measure_total_charge(with_pair, 5, 6);
        REQUIRE(charge.size() == 1);
        CHECK(charge[0].outcome == 0);
    }
    CHECK_THROWS_AS(create_pair(st, 99, 1), std::invalid_argument);
    CHECK_THROWS_AS(create_pair(st, 1, 0), std::invalid_argument);
}

TEST_CASE("pair creation dimension matches the enumeration") {
    auto st = logical_basis_state(0, 0);
    auto with_pair = create_pair(st, 5, 1);
    LeafRow expect = {2, 2, 2, 2, 1, 1, 2, 2, 2, 2};
    CHECK(with_pair.leaves() == expect);
    CHECK(with_pair.dim() == get_basis(expect, 0)->dim());
}

TEST_CASE("pair creation commutes with braids strictly left of the insertion") {
    auto basis = get_basis(LeafRow(8, 2), 0);
    for (std::uint64_t seed : {3u, 17u}) {
        auto st = random_state(basis, seed);
        for (int i : {1, 2, 3}) {
            auto a = create_pair(apply_braid(st, i, +1), 6, 2);
            auto b = apply_braid(create_pair(st, 6, 2), i, +1);
            REQUIRE(a.leaves() == b.leaves());
            double d = 0.0;
            for (std::size_t k = 0; k < a.dim(); ++k)
                d = std::max(d, std::abs(a.amplitude(k) - b.amplitude(k)));
            CHECK(d < 1e-9);
        }
    }
}

TEST_CASE("Born rule with loop-value weights on a (2,2) pair") {
    // State whose (1,2) channel amplitudes are sqrt(d_c / 4): fusing must give
    // probabilities (1/4, 1/2, 1/4).
    auto basis = get_basis(LeafRow(4, 2), 0);
    auto st = AnyonState::zero(basis);
    st.amplitudes()[basis->index({2, 0, 2, 0})] = std::sqrt(0.25);
    st.amplitudes()[basis->index({2, 2, 2, 0})] = std::sqrt(0.5);
    st.amplitudes()[basis->index({2, 4, 2, 0})] = std::sqrt(0.25);
    auto outcomes = fuse_measure(st, 1);
    REQUIRE(outcomes.size() == 3);
    CHECK(outcomes[0].outcome == 0);
    CHECK(outcomes[0].probability == doctest::Approx(0.25));
    CHECK(outcomes[1].outcome == 2);
    CHECK(outcomes[1].probability == doctest::Approx(0.5));
    CHECK(outcomes[2].outcome == 4);
    CHECK(outcomes[2].probability == doctest::Approx(0.25));
    CHECK(total_probability(outcomes) == doctest::Approx(1.0));
}

TEST_CASE("measurements are normalized, complete and idempotent") {
    auto basis = get_basis(LeafRow(8, 2), 0);
    for (std::uint64_t seed : {5u, 6u}) {
        auto st = random_state(basis, seed);
        for (auto [lo, hi] : std::vector<std::pair<int, int>>{{1, 8}, {2, 5}, {3, 6}, {5, 6}}) {
            auto outcomes = measure_total_charge(st, lo, hi);
            CHECK(total_probability(outcomes) == doctest::Approx(1.0).epsilon(1e-9));
            for (const auto& o : outcomes) {
                CHECK(std::abs(o.state.norm() - 1.0) < 1e-9);
                auto again = measure_total_charge(o.state, lo, hi);
                REQUIRE(again.size() == 1);
                CHECK(again[0].outcome == o.outcome);
                CHECK(again[0].probability == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
        // fusion completeness
        auto fused = fuse_measure(st, 4);
        CHECK(total_probability(fused) == doctest::Approx(1.0).epsilon(1e-9));
    }
    // measuring the whole row returns the fixed total
    auto st = logical_basis_state(2, 4);
    auto whole = measure_total_charge(st, 1, 8);
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].outcome == 0);
    CHECK_THROWS_AS(measure_total_charge(st, 0, 3), std::invalid_argument);
}

TEST_CASE("fusion distribution is invariant under braids outside the pair") {
    auto basis = get_basis(LeafRow(8, 2), 0);
    auto st = random_state(basis, 8);
    auto base = fuse_measure(st, 4);
    for (int i : {1, 6, 7}) {
        auto braided = apply_braid(st, i, +1);
        auto outcomes = fuse_measure(braided, 4);
        REQUIRE(outcomes.size() == base.size());
        for (std::size_t k = 0; k < outcomes.size(); ++k) {
            CHECK(outcomes[k].outcome == base[k].outcome);
            CHECK(outcomes[k].probability ==
                  doctest::Approx(base[k].probability).epsilon(1e-9));
        }
    }
}

TEST_CASE("unfusion: per-try success 1/2, joint channel 2, geometric retries") {
    auto basis = get_basis(LeafRow{2, 2}, 0);
    auto st = AnyonState::zero(basis);
    st.amplitudes()[0] = Cx{1.0, 0.0};

    auto r = unfuse_two_two_branch(st, 1);
    CHECK(r.per_try_success == doctest::Approx(0.5));
    CHECK(r.state.leaves() == LeafRow{2, 2, 2});
    // The unfused pair carries the original charge line: joint channel 2.
    auto joint = measure_total_charge(r.state, 1, 2);
    REQUIRE(joint.size() == 1);
    CHECK(joint[0].outcome == 2);

    // Seeded sampling: retry count is geometric with mean 2.
    Rng rng(12345);
    const int runs = 10000;
    long total_tries = 0;
    for (int t = 0; t < runs; ++t) total_tries += unfuse_two_two_sampled(st, 1, rng).tries;
    double mean = static_cast<double>(total_tries) / runs;
    // sd of the mean for geometric(1/2) is sqrt(2)/100 ~ 0.014
    CHECK(std::abs(mean - 2.0) < 0.06);

    auto charge4 = AnyonState::zero(get_basis(LeafRow{4, 2}, 2));
    charge4.amplitudes()[0] = Cx{1.0, 0.0};
    CHECK_THROWS_AS(unfuse_two_two_branch(charge4, 1), std::invalid_argument);
}

TEST_CASE("unfusion retry depths agree projectively") {
    // A failed round is a scalar on the charge-2 strand, so success states of
    // different retry depths must coincide up to phase.
    auto basis = get_basis(LeafRow{2, 2}, 0);
    auto st = AnyonState::zero(basis);
    st.amplitudes()[0] = Cx{1.0, 0.0};

    auto round1 = anyonsim::detail::unfuse_round(st, 1);
    REQUIRE(round1.success_index >= 0);
    auto success1 = round1.outcomes[round1.success_index].state;
    for (const auto& failed : round1.outcomes) {
        if (failed.outcome == 2) continue;
        auto recovered = anyonsim::detail::unfuse_recover(failed, 1);
        auto round2 = anyonsim::detail::unfuse_round(recovered, 1);
        REQUIRE(round2.success_index >= 0);
        CHECK(round2.outcomes[round2.success_index].probability ==
              doctest::Approx(round1.outcomes[round1.success_index].probability));
        Cx overlap = inner_product(round2.outcomes[round2.success_index].state, success1);
        CHECK(std::abs(std::abs(overlap) - 1.0) < 1e-9);
    }
}

TEST_CASE("ffo is deterministic, involutive up to phase, and flips charges") {
    auto st = logical_basis_state(2, 2);
    auto once = ffo(st, 5, 6);
    CHECK(once.leaves() == LeafRow(8, 2));  // 2 -> 4-2 = 2
    CHECK(std::abs(once.norm() - 1.0) < 1e-9);
    auto twice = ffo(once, 5, 6);
    CHECK(std::abs(std::abs(inner_product(twice, st)) - 1.0) < 1e-9);

    // distant pair, charge flip on a mixed row
    LeafRow mixed = {2, 4, 2, 2, 2, 2, 2, 2};
    auto basis = get_basis(mixed, 0);
    auto rnd = random_state(basis, 31);
    auto mapped = ffo(rnd, 2, 5);
    LeafRow expect = mixed;
    expect[1] = 0;
    expect[4] = 2;
    CHECK(mapped.leaves() == expect);
}

TEST_CASE("ffo clears a measured collective charge 4") {
    // Protocol context: blocks joined to the ancilla region by charge-2
    // lines, ancilla fused to 0 and replaced by a fresh (2,2) pair.  The
    // interferometric outcome 4 on anyons 6..10 is cleared by ffo on 5,6.
    auto with_ancilla = create_pair(logical_basis_state(2, 2), 5, 1);
    auto lines = full_twist(full_twist(with_ancilla, 4, +1), 6, +1);
    auto fused = fuse_measure(lines, 5);
    AnyonState eight_leaf = [&] {
        for (const auto& o : fused)
            if (o.outcome == 0) return o.state;
        FAIL("no outcome-0 branch");
        return fused[0].state;
    }();
    // drop the vacuum leaf at position 5
    {
        LeafRow lv = eight_leaf.leaves();
        REQUIRE(lv[4] == 0);
        lv.erase(lv.begin() + 4);
        auto nb = get_basis(lv, eight_leaf.total());
        auto ns = AnyonState::zero(nb);
        for (std::size_t k = 0; k < eight_leaf.dim(); ++k) {
            if (std::abs(eight_leaf.amplitude(k)) < 1e-14) continue;
            Interior p = eight_leaf.basis().path(k);
            p.erase(p.begin() + 4);
            int kk = nb->index(p);
            REQUIRE(kk >= 0);
            ns.amplitudes()[kk] += eight_leaf.amplitude(k);
        }
        eight_leaf = ns;
    }
    auto st = create_pair(eight_leaf, 5, 2);
    auto outcomes = measure_total_charge(st, 6, 10);
    bool found4 = false;
    for (const auto& o : outcomes) {
        if (o.outcome != 4) continue;
        found4 = true;
        auto cleared = ffo(o.state, 5, 6);
        auto again = measure_total_charge(cleared, 6, 10);
        REQUIRE(again.size() == 1);
        CHECK(again[0].outcome == 0);
        CHECK(again[0].probability == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(found4);
}
