// Recoupling data against independent oracles: the sin-form quantum integer,
// hand-evaluated net values, the category consistency identities, and the
// exact Q(zeta_24) backend.

#include <doctest.h>

#include <cmath>

#include "anyonsim/recoupling.hpp"

using namespace anyonsim;

namespace {
// Oracle: [n] = sin(n pi / 6) / sin(pi / 6) at the chosen root.
double qint_oracle(int n) { return std::sin(n * M_PI / 6.0) / std::sin(M_PI / 6.0); }
}  // namespace

TEST_CASE("A is a primitive 4r-th root of unity") {
    const auto& params = theory_params();
    CHECK(params.level == 4);
    CHECK(params.r == 6);
    Cx power{1.0, 0.0};
    for (int m = 1; m < 2 * params.r; ++m) {
        power *= params.a * params.a;  // A^{2m}
        CHECK(std::abs(power - Cx{1.0, 0.0}) > 1e-6);
    }
    power *= params.a * params.a;  // A^{4r}
    CHECK(std::abs(power - Cx{1.0, 0.0}) < 1e-12);
}

TEST_CASE("double exchange equals the ribbon twist ratio") {
    for (Label a = 0; a <= 4; ++a)
        for (Label b = 0; b <= 4; ++b)
            for (Label c = 0; c <= 4; ++c) {
                if (!admissible(a, b, c)) continue;
                Cx monodromy = r_symbol(a, b, c) * r_symbol(b, a, c);
                Cx ratio = twist(a) * twist(b) / twist(c);
                CHECK(std::abs(monodromy - ratio) < 1e-12);
            }
}

TEST_CASE("quantum integers match the sin-form oracle") {
    CHECK(quantum_int(0) == doctest::Approx(0.0));
    CHECK(quantum_int(3) == doctest::Approx(2.0));
    CHECK(quantum_int(6) == doctest::Approx(0.0).epsilon(1e-12));
    for (int n = 0; n <= 8; ++n)
        CHECK(quantum_int(n) == doctest::Approx(qint_oracle(n)).epsilon(1e-12));
    // [n] = [r - n]
    for (int n = 0; n <= kR; ++n)
        CHECK(std::abs(quantum_int(n) - quantum_int(kR - n)) < 1e-12);
}

TEST_CASE("loop values carry the Kauffman-Lins sign") {
    CHECK(loop_value(0) == doctest::Approx(1.0));
    CHECK(loop_value(2) == doctest::Approx(2.0));
    CHECK(loop_value(4) == doctest::Approx(1.0));
    CHECK(loop_value(1) == doctest::Approx(-std::sqrt(3.0)));
    // |Delta_a| = |Delta_{4-a}| at level 4
    for (Label a = 0; a <= 4; ++a)
        CHECK(std::abs(std::abs(loop_value(a)) - std::abs(loop_value(4 - a))) < 1e-12);
}

TEST_CASE("theta nets") {
    CHECK(theta(0, 0, 0) == doctest::Approx(1.0));
    for (Label a = 0; a <= 4; ++a) CHECK(theta(a, 0, a) == doctest::Approx(loop_value(a)));
    // theta(2,2,2) = -2/sqrt(3); cross-check against tet with one 0 label
    CHECK(theta(2, 2, 2) == doctest::Approx(-2.0 / std::sqrt(3.0)));
    CHECK(theta(2, 2, 2) == doctest::Approx(tet(2, 2, 2, 2, 2, 0)));
    CHECK_THROWS_AS(theta(1, 0, 2), AdmissibilityError);
    CHECK_THROWS_AS(theta(4, 4, 4), AdmissibilityError);  // level cutoff
}

TEST_CASE("tetrahedral nets") {
    // One label 0 reduces to a theta value.
    CHECK(tet(2, 2, 2, 2, 4, 0) == doctest::Approx(theta(2, 2, 4)));
    CHECK(tet(1, 1, 1, 1, 2, 0) == doctest::Approx(theta(1, 1, 2)));
    // The all-2 tetrahedron vanishes at level 4.
    CHECK(std::abs(tet(2, 2, 2, 2, 2, 2)) < 1e-12);
    // Hand-evaluated sum: single term s=2 gives [3]!/E! * I! = 2/sqrt(3).
    CHECK(tet(1, 1, 1, 1, 2, 2) == doctest::Approx(2.0 / std::sqrt(3.0)));
    CHECK_THROWS_AS(tet(1, 1, 1, 1, 1, 1), AdmissibilityError);
}

TEST_CASE("6j symbols") {
    CHECK(std::abs(sixj(2, 2, 2, 2, 2, 2)) < 1e-12);
    CHECK(sixj(2, 2, 0, 2, 2, 2) ==
          doctest::Approx(tet(2, 2, 2, 2, 0, 2) * loop_value(2) /
                          (theta(2, 2, 2) * theta(2, 2, 2))));
    // b = 0 is the trivial recoupling: a single entry equal to 1.
    for (Label a : {0, 1, 2, 3, 4})
        for (Label c : {0, 1, 2, 3, 4})
            for (Label d = 0; d <= 4; ++d) {
                if (!admissible(a, c, d)) continue;
                CHECK(sixj(a, 0, a, c, d, c) == doctest::Approx(1.0));
            }
    CHECK_THROWS_AS(sixj(2, 2, 1, 2, 2, 2), AdmissibilityError);
}

TEST_CASE("f-matrices are unitary with the expected zero") {
    const FMatrix& f = f_matrix(2, 2, 2, 2);
    REQUIRE(f.row_channels == std::vector<Label>{0, 2, 4});
    REQUIRE(f.col_channels == std::vector<Label>{0, 2, 4});
    CHECK(std::abs(f.at(2, 2)) < 1e-12);
    CHECK(f.entries.unitarity_defect() < 1e-9);

    // trivial move: b = 0
    const FMatrix& id = f_matrix(2, 0, 2, 0);
    CHECK(id.entries.rows() == 1);
    CHECK(std::abs(id.at(2, 2) - Cx{1.0, 0.0}) < 1e-12);

    CHECK(f_unitarity_residual() < 1e-9);
    CHECK_THROWS_AS(f_matrix(1, 1, 1, 0), std::domain_error);  // empty channel set
}

TEST_CASE("r-symbols") {
    // Squared sigma_1 eigenvalues over channels (0,2,4) of (2,2) match
    // diag(1, e^{-i2pi/3}, 1) up to one global phase.
    Cx r0 = r_symbol(2, 2, 0), r2 = r_symbol(2, 2, 2), r4 = r_symbol(2, 2, 4);
    Cx ratio2 = (r2 * r2) / (r0 * r0);
    Cx ratio4 = (r4 * r4) / (r0 * r0);
    CHECK(std::abs(ratio2 - std::polar(1.0, -2.0 * M_PI / 3.0)) < 1e-9);
    CHECK(std::abs(ratio4 - Cx{1.0, 0.0}) < 1e-9);

    // Exchange with the vacuum is twist-free.
    for (Label a = 0; a <= 4; ++a) {
        Cx r = r_symbol(a, 0, a);
        CHECK(std::abs(r * r - Cx{1.0, 0.0}) < 1e-12);
    }

    // Label 4 is abelian: a unique channel against anything.
    CHECK(fusion_channels(4, 2) == std::vector<Label>{2});
    CHECK(std::abs(std::abs(r_symbol(4, 2, 2)) - 1.0) < 1e-12);
}

TEST_CASE("fusion channels") {
    CHECK(fusion_channels(2, 2) == std::vector<Label>{0, 2, 4});
    for (Label a = 0; a <= 4; ++a) CHECK(fusion_channels(0, a) == std::vector<Label>{a});
    for (Label a = 0; a <= 4; ++a) CHECK(fusion_channels(4, a) == std::vector<Label>{4 - a});
}

TEST_CASE("pentagon and hexagon identities over all admissible assignments") {
    CHECK(pentagon_residual() < 1e-9);
    CHECK(hexagon_residual(+1) < 1e-9);
    CHECK(hexagon_residual(-1) < 1e-9);
}

TEST_CASE("exact backend agrees with doubles and is exactly zero where predicted") {
    CHECK(exact::sixj(2, 2, 2, 2, 2, 2).is_zero());
    CHECK(exact::quantum_int(6).is_zero());
    for (int n = 0; n <= 5; ++n)
        CHECK(std::abs(exact::quantum_int(n).to_complex() - Cx{quantum_int(n), 0.0}) < 1e-12);
    for (Label a = 0; a <= 4; ++a)
        for (Label b = 0; b <= 4; ++b)
            for (Label c = 0; c <= 4; ++c) {
                if (!admissible(a, b, c)) continue;
                CHECK(std::abs(exact::theta(a, b, c).to_complex() - Cx{theta(a, b, c), 0.0}) <
                      1e-12);
                CHECK(std::abs(exact::r_symbol(a, b, c).to_complex() - r_symbol(a, b, c)) <
                      1e-12);
            }
}
