#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qstoch/errors.hpp"
#include "qstoch/flow.hpp"
#include "test_util.hpp"

using namespace qstoch;
using namespace qstoch::testutil;

namespace {

// random unitarity-satisfying coefficients through the (W, K, H) parameters
CoefficientBlock random_unitary_coeffs(const CounterRng& rng, std::uint64_t base, int d, int n) {
    HPTriple hp{random_unitary(rng, base, n * d),
                random_complex_matrix(rng, base + stride, n * d, d),
                random_hermitian(rng, base + 2 * stride, d)};
    return ito_from_hp(hp);
}

} // namespace

TEST_CASE("zero coefficients give the zero flow generator") {
    FlowGenerator f = eh_generator(CoefficientBlock(2, 1));
    CHECK(f.maps.max_block_norm() == 0.0);
}

TEST_CASE("non-unitary coefficients are refused") {
    CoefficientBlock g(2, 1);
    g.block(1, 0) = sigma_minus(); // coupling without its drift counterpart
    CHECK_THROWS_AS(eh_generator(g), UnitarityViolated);
}

TEST_CASE("damped-qubit flow") {
    HPTriple hp{Mat::Identity(2, 2), sigma_minus(), Mat::Zero(2, 2)};
    FlowGenerator f = eh_generator(ito_from_hp(hp));
    Mat num = sigma_plus() * sigma_minus();

    SUBCASE("dt block is the textbook damping generator") {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                Mat x = matrix_unit(2, i, j);
                Mat expected = sigma_plus() * x * sigma_minus() - 0.5 * (num * x + x * num);
                CHECK((f.apply(0, 0, x) - expected).norm() < 1e-14);
            }
    }
    SUBCASE("vacuum forward derivative decays the excited population") {
        CHECK((vacuum_forward_derivative(f, num) + num).norm() < 1e-14); // u(n) = -n
        CHECK(vacuum_forward_derivative(f, Mat::Identity(2, 2)).norm() < 1e-14);
    }
    SUBCASE("matches the Lindblad helper") {
        Mat lind = heisenberg_lindblad(Mat::Zero(2, 2), {sigma_minus()});
        CHECK((f.maps.block(0, 0) - lind).norm() < 1e-13);
    }
}

TEST_CASE("Hamiltonian-only flow obeys the Heisenberg equation") {
    CounterRng rng(200);
    Mat h = random_hermitian(rng, 0, 3);
    HPTriple hp{Mat::Identity(3, 3), Mat::Zero(3, 3), h};
    FlowGenerator f = eh_generator(ito_from_hp(hp));
    Mat x = random_complex_matrix(rng, stride, 3, 3);
    CHECK((vacuum_forward_derivative(f, x) - iu * (h * x - x * h)).norm() < 1e-13);
}

TEST_CASE("maps kill the identity exactly when unitarity holds") {
    CounterRng rng(201);
    CoefficientBlock g = random_unitary_coeffs(rng, 0, 2, 2);
    FlowGenerator f = eh_generator(g);
    Mat id = Mat::Identity(2, 2);
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 2; ++b)
            CHECK(f.apply(a, b, id).norm() < 1e-12);
}

TEST_CASE("oracle at X = I reproduces the unitarity residuals") {
    CounterRng rng(202);
    CoefficientBlock g = random_block(rng, 0, 2, 1, 0.6); // generic, not unitary
    OperatorGenerator table = differential_oracle(g, Mat::Identity(2, 2));
    ConversionReport rep = check_ito_unitarity(g);
    for (int a = 0; a <= 1; ++a)
        for (int b = 0; b <= 1; ++b) {
            double lhs = table.block(a, b).norm();
            double rhs = rep.residual_norms.at(std::to_string(a) + "," + std::to_string(b));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
}

TEST_CASE("structure equations hold for generated flows") {
    SUBCASE("identity pair is trivially balanced") {
        CounterRng rng(203);
        FlowGenerator f = eh_generator(random_unitary_coeffs(rng, 0, 2, 1));
        Mat id = Mat::Identity(2, 2);
        CHECK(structure_residual(f, id, id).max_block_norm() < 1e-12);
    }
    SUBCASE("random coefficients and operands") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            CounterRng rng(300 + seed);
            int d = 2 + static_cast<int>(rng.word(0) % 3);
            int n = 1 + static_cast<int>(rng.word(1) % 2);
            FlowGenerator f = eh_generator(random_unitary_coeffs(rng, 10 * stride, d, n));
            Mat x = random_complex_matrix(rng, 20 * stride, d, d);
            Mat y = random_complex_matrix(rng, 21 * stride, d, d);
            CHECK(structure_residual(f, x, y).max_block_norm() < 1e-10);
        }
    }
    SUBCASE("dissipation without fluctuation is detected") {
        // hand-built flow: Lindblad dt block, but no channel maps to balance it
        FlowGenerator f{SuperGenerator(2, 1), CoefficientBlock(2, 1)};
        f.maps.block(0, 0) = heisenberg_lindblad(Mat::Zero(2, 2), {sigma_minus()});
        Mat x = sigma_minus(), y = sigma_plus();
        OperatorGenerator r = structure_residual(f, x, y);
        CHECK(r.block(0, 0).norm() > 0.1);
    }
}

TEST_CASE("flow generator agrees with the differential oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(400 + seed);
        int d = 2 + static_cast<int>(rng.word(0) % 3);
        int n = 1 + static_cast<int>(rng.word(1) % 2);
        CoefficientBlock g = random_unitary_coeffs(rng, 0, d, n);
        FlowGenerator f = eh_generator(g);
        Mat x = random_complex_matrix(rng, 30 * stride, d, d);
        OperatorGenerator lhs = apply_blockwise(f.maps, x);
        OperatorGenerator rhs = differential_oracle(g, x);
        CHECK(block_distance(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("dt block takes the Lindblad form of the extracted parameters") {
    CounterRng rng(500);
    const int d = 3, n = 2;
    CoefficientBlock g = random_unitary_coeffs(rng, 0, d, n);
    FlowGenerator f = eh_generator(g);
    HPTriple hp = hp_from_ito(g);
    std::vector<Mat> ks = {hp.k.topRows(d), hp.k.bottomRows(d)};
    CHECK((f.maps.block(0, 0) - heisenberg_lindblad(hp.h, ks)).norm() < 1e-10);
}

TEST_CASE("dt block does not depend on the channel unitary") {
    CounterRng rng(501);
    const int d = 2;
    Mat k = random_complex_matrix(rng, 0, d, d);
    Mat h = random_hermitian(rng, stride, d);
    FlowGenerator fa = eh_generator(ito_from_hp({Mat::Identity(d, d), k, h}));
    FlowGenerator fb = eh_generator(ito_from_hp({random_unitary(rng, 2 * stride, d), k, h}));
    CHECK((fa.maps.block(0, 0) - fb.maps.block(0, 0)).norm() < 1e-12);
}

TEST_CASE("trace duality against the predual map") {
    CounterRng rng(502);
    const int d = 3;
    CoefficientBlock g = random_unitary_coeffs(rng, 0, d, 1);
    Mat l = eh_generator(g).maps.block(0, 0);
    Mat x = random_complex_matrix(rng, 40 * stride, d, d);
    Mat rho = random_complex_matrix(rng, 41 * stride, d, d);
    cx lhs = (apply_superop(l, x) * rho).trace();
    cx rhs = (x * predual_apply(l, rho)).trace();
    CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("verify_flow summarizes every residual family") {
    CounterRng rng(503);
    CoefficientBlock g = random_unitary_coeffs(rng, 0, 3, 2);
    FlowSummary s = verify_flow(g);
    CHECK(s.dim == 3);
    CHECK(s.channels == 2);
    CHECK(s.sample_pairs == 81); // full matrix-unit basis at d = 3
    CHECK(s.unitality_residual < 1e-11);
    CHECK(s.reality_residual < 1e-11);
    CHECK(s.structure_residual < 1e-10);
    CHECK(s.oracle_residual < 1e-12);
    CHECK(s.lindblad_residual < 1e-10);

    CoefficientBlock big = random_unitary_coeffs(rng, 100 * stride, 6, 1);
    FlowSummary sb = verify_flow(big); // random sampling branch
    CHECK(sb.sample_pairs == 20);
    CHECK(sb.structure_residual < 1e-9);
}
