#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qstoch/coeffs.hpp"
#include "qstoch/errors.hpp"
#include "test_util.hpp"

using namespace qstoch;
using namespace qstoch::testutil;

namespace {
const GaugeParameter half = GaugeParameter::symmetric();

CoefficientBlock scalar_e11(cx value) {
    CoefficientBlock e(1, 1);
    e.block(1, 1)(0, 0) = value;
    return e;
}
} // namespace

TEST_CASE("gauge parameter enforces Re kappa = 1/2 exactly") {
    CHECK_NOTHROW(GaugeParameter(cx(0.5, -3.0)));
    CHECK_THROWS_AS(GaugeParameter(cx(0.5 + 1e-12, 0.0)), InvalidGauge);
    CHECK_THROWS_AS(GaugeParameter(cx(0.0, 0.5)), InvalidGauge);
    CHECK(half.conjugate() == cx(0.5, 0.0));
}

TEST_CASE("zero exponent maps to zero generator and back") {
    CoefficientBlock e(2, 1);
    CoefficientBlock g = strat_to_ito(e, half);
    CHECK(block_distance(g, e) == 0.0);
    CHECK(block_distance(ito_to_strat(g, half), e) == 0.0);
}

TEST_CASE("scalar channel conversion: E11 = 2 <-> G11 = 1 - i at kappa = 1/2") {
    CoefficientBlock g = strat_to_ito(scalar_e11(2.0), half);
    CHECK(std::abs(g.block(1, 1)(0, 0) - cx(1, -1)) < 1e-15);
    CHECK(std::abs(g.block(0, 0)(0, 0)) == 0.0);

    CoefficientBlock e = ito_to_strat(g, half);
    CHECK(std::abs(e.block(1, 1)(0, 0) - cx(2, 0)) < 1e-14);
}

TEST_CASE("channel-free exponent reproduces the coupling form of the generator") {
    CounterRng rng(5);
    Mat k = random_complex_matrix(rng, 0, 2, 2);
    Mat h = random_hermitian(rng, stride, 2);
    CoefficientBlock e(2, 1);
    e.block(1, 0) = k;
    e.block(0, 1) = k.adjoint();
    e.block(0, 0) = h;

    CoefficientBlock g = strat_to_ito(e, half);
    CHECK((g.block(0, 0) - (h - 0.5 * iu * k.adjoint() * k)).norm() < 1e-14);
    CHECK((g.block(1, 0) - k).norm() == 0.0);
    CHECK((g.block(0, 1) - k.adjoint()).norm() == 0.0);
    CHECK(g.block(1, 1).norm() == 0.0);
}

TEST_CASE("conversion roundtrip on random tables") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(900 + seed);
        int d = 1 + static_cast<int>(rng.word(1) % 8);
        int n = 1 + static_cast<int>(rng.word(2) % 3);
        GaugeParameter kappa(cx(0.5, (seed % 5) * 0.25 - 0.5));
        CoefficientBlock e = random_block(rng, 10 * stride, d, n);
        clamp_channel_norm(e, kappa, 0.85);

        CoefficientBlock back = ito_to_strat(strat_to_ito(e, kappa), kappa);
        CHECK(block_distance(back, e) < 1e-10);
    }
}

TEST_CASE("fixed generator is recovered through any gauge") {
    CounterRng rng(31);
    CoefficientBlock g = random_block(rng, 0, 3, 2, 0.4);
    GaugeParameter other(cx(0.5, 0.7));
    CoefficientBlock g2 = strat_to_ito(ito_to_strat(g, other), other);
    CHECK(block_distance(g2, g) < 1e-11);
}

TEST_CASE("resolvent duality of conversion partners") {
    CounterRng rng(77);
    GaugeParameter kappa(cx(0.5, -0.25));
    CoefficientBlock e = random_selfadjoint_block(rng, 0, 3, 2);
    clamp_channel_norm(e, kappa, 0.8);
    CoefficientBlock g = strat_to_ito(e, kappa);

    const auto nd = e.channel_matrix().rows();
    Mat id = Mat::Identity(nd, nd);
    Mat left = id - iu * kappa.value() * g.channel_matrix();
    Mat right = id + iu * kappa.value() * e.channel_matrix();
    CHECK((left * right - id).norm() < 1e-12);
}

TEST_CASE("self-adjointness report judges the exponent table") {
    CounterRng rng(13);
    CoefficientBlock good = random_selfadjoint_block(rng, 0, 2, 1);
    ConversionReport rep = check_strat_selfadjoint(good);
    CHECK(rep.passed);
    CHECK(rep.max_residual < 1e-14);

    CoefficientBlock bad = good;
    bad.block(0, 1) = 2.0 * bad.block(1, 0).adjoint(); // breaks (E01)^dag = E10
    rep = check_strat_selfadjoint(bad);
    CHECK_FALSE(rep.passed);
    CHECK(rep.residual_norms.at("0,1") > 0.1);
}

TEST_CASE("unitarity check accepts coupling-form generators and flags a missing drift term") {
    CounterRng rng(17);
    Mat k = random_complex_matrix(rng, 0, 3, 3);
    Mat h = random_hermitian(rng, stride, 3);

    CoefficientBlock g(3, 1);
    g.block(1, 0) = k;
    g.block(0, 1) = k.adjoint();
    g.block(0, 0) = h - 0.5 * iu * k.adjoint() * k;
    CHECK(check_ito_unitarity(g).passed);

    g.block(0, 0) = h; // drop the -i/2 K^dag K part
    ConversionReport rep = check_ito_unitarity(g);
    CHECK_FALSE(rep.passed);
    CHECK(rep.residual_norms.at("0,0") == doctest::Approx((k.adjoint() * k).norm()).epsilon(1e-10));
}

TEST_CASE("unitarity chain holds for every imaginary gauge part") {
    for (double im : {-1.0, 0.0, 0.3, 1.0}) {
        GaugeParameter kappa(cx(0.5, im));
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            CounterRng rng(400 + seed);
            int d = 1 + static_cast<int>(rng.word(5) % 4);
            int n = 1 + static_cast<int>(rng.word(6) % 3);
            CoefficientBlock e = random_selfadjoint_block(rng, 0, d, n);
            clamp_channel_norm(e, kappa, 0.75);
            REQUIRE(check_strat_selfadjoint(e).passed);

            CoefficientBlock g = strat_to_ito(e, kappa);
            ConversionReport rep = check_ito_unitarity(g);
            INFO("im = " << im << " seed = " << seed << " residual = " << rep.max_residual);
            CHECK(rep.max_residual < 1e-10);

            HPTriple hp = hp_from_ito(g);
            const auto nd = hp.w.rows();
            CHECK((hp.w.adjoint() * hp.w - Mat::Identity(nd, nd)).norm() < 1e-10);
        }
    }
}

TEST_CASE("ito_from_hp matches the closed-form blocks") {
    SUBCASE("trivial parameters give the zero generator") {
        HPTriple hp{Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2)};
        CoefficientBlock g = ito_from_hp(hp);
        CHECK(g.max_block_norm() == 0.0);
    }
    SUBCASE("pure coupling K = sigma_minus") {
        HPTriple hp{Mat::Identity(2, 2), sigma_minus(), Mat::Zero(2, 2)};
        CoefficientBlock g = ito_from_hp(hp);
        CHECK((g.block(0, 0) + 0.5 * iu * sigma_plus() * sigma_minus()).norm() < 1e-15);
        CHECK((g.block(1, 0) - sigma_minus()).norm() == 0.0);
        CHECK((g.block(0, 1) - sigma_plus()).norm() == 0.0);
        CHECK(g.block(1, 1).norm() == 0.0);
        CHECK(check_ito_unitarity(g).max_residual < 1e-12);
    }
    SUBCASE("scalar W = -i") {
        Mat w = Mat::Identity(1, 1) * cx(0, -1);
        HPTriple hp{w, Mat::Zero(1, 1), Mat::Zero(1, 1)};
        CoefficientBlock g = ito_from_hp(hp);
        CHECK(std::abs(g.block(1, 1)(0, 0) - cx(1, -1)) < 1e-15);
    }
    SUBCASE("invalid parameters are refused") {
        HPTriple bad_w{2.0 * Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2)};
        CHECK_THROWS_AS(ito_from_hp(bad_w), NotUnitary);
        Mat h(1, 1);
        h << cx(0, 1);
        HPTriple bad_h{Mat::Identity(1, 1), Mat::Zero(1, 1), h};
        CHECK_THROWS_AS(ito_from_hp(bad_h), NotSelfAdjoint);
    }
}

TEST_CASE("hp_from_ito inverts ito_from_hp and matches the Cayley unitary") {
    SUBCASE("random parameters roundtrip") {
        CounterRng rng(55);
        Mat w = random_unitary(rng, 0, 4); // d = 2, N = 2
        Mat k = random_complex_matrix(rng, stride, 4, 2);
        Mat h = random_hermitian(rng, 2 * stride, 2);
        HPTriple hp{w, k, h};
        HPTriple back = hp_from_ito(ito_from_hp(hp));
        CHECK((back.w - w).norm() < 1e-12);
        CHECK((back.k - k).norm() < 1e-12);
        CHECK((back.h - h).norm() < 1e-12);
    }
    SUBCASE("W from conversion equals the Cayley transform of E11") {
        CounterRng rng(56);
        GaugeParameter kappa(cx(0.5, 0.3));
        CoefficientBlock e = random_selfadjoint_block(rng, 0, 2, 2);
        clamp_channel_norm(e, kappa, 0.7);
        HPTriple hp = hp_from_ito(strat_to_ito(e, kappa));
        Mat w_cayley = cayley_channel_unitary(e.channel_matrix(), kappa);
        CHECK((hp.w - w_cayley).norm() < 1e-10);
    }
    SUBCASE("scalar E11 = 2 gives W = -i on both routes") {
        HPTriple hp = hp_from_ito(strat_to_ito(scalar_e11(2.0), half));
        CHECK(std::abs(hp.w(0, 0) - cx(0, -1)) < 1e-14);
        Mat e11(1, 1);
        e11 << cx(2, 0);
        CHECK(std::abs(cayley_channel_unitary(e11, half)(0, 0) - cx(0, -1)) < 1e-14);
    }
    SUBCASE("non-unitary input is rejected") {
        CoefficientBlock g(2, 1);
        g.block(1, 0) = sigma_minus();
        CHECK_THROWS_AS(hp_from_ito(g), UnitarityViolated);
    }
}

TEST_CASE("channel_from_unitary inverts the Cayley map") {
    CounterRng rng(57);
    GaugeParameter kappa(cx(0.5, -0.4));
    Mat e11 = random_hermitian(rng, 0, 3);
    Mat w = cayley_channel_unitary(e11, kappa);
    CHECK((channel_from_unitary(w, kappa) - e11).norm() < 1e-11);

    Mat e11_scalar = channel_from_unitary(Mat::Identity(1, 1) * cx(0, -1), half);
    CHECK(std::abs(e11_scalar(0, 0) - cx(2, 0)) < 1e-14);
}

TEST_CASE("resolvent comparison: direct solve vs geometric series") {
    SUBCASE("zero channel block gives the identity") {
        ResolventComparison rc = neumann_resolvent(Mat::Zero(2, 2), half);
        CHECK((rc.direct - Mat::Identity(2, 2)).norm() == 0.0);
        CHECK(rc.series_valid);
        CHECK(rc.agreement < 1e-14);
    }
    SUBCASE("scalar value") {
        ResolventComparison rc = neumann_resolvent(Mat::Identity(1, 1), half);
        CHECK(std::abs(rc.direct(0, 0) - cx(0.8, -0.4)) < 1e-14);
        REQUIRE(rc.series.has_value());
        CHECK(std::abs((*rc.series)(0, 0) - cx(0.8, -0.4)) < 1e-12);
    }
    SUBCASE("routes agree at ||kappa E11|| = 0.5") {
        CounterRng rng(58);
        Mat e11 = random_hermitian(rng, 0, 4);
        e11 *= 0.5 / (0.5 * op_norm(e11)); // kappa = 1/2 puts the product at 0.5
        ResolventComparison rc = neumann_resolvent(e11, half);
        CHECK(rc.kappa_e11_norm == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(rc.agreement < 1e-12);
    }
    SUBCASE("series refused beyond the norm bound, direct still served") {
        Mat e11 = Mat::Identity(2, 2) * 4.0;
        CHECK_THROWS_AS(geometric_resolvent_series(e11, half), NormTooLarge);
        ResolventComparison rc = neumann_resolvent(e11, half);
        CHECK_FALSE(rc.series_valid);
        CHECK_FALSE(rc.series.has_value());
        CHECK((rc.direct * (Mat::Identity(2, 2) + iu * half.value() * e11) - Mat::Identity(2, 2)).norm() < 1e-13);
    }
}

TEST_CASE("generator addition") {
    SUBCASE("single summand reduces to the plain conversion") {
        CounterRng rng(60);
        CoefficientBlock e = random_selfadjoint_block(rng, 0, 2, 1);
        clamp_channel_norm(e, half, 0.5);
        AdditionResult sum = add_generators({e}, half);
        CHECK(block_distance(sum.e_total, e) == 0.0);
        CHECK(block_distance(sum.g_total, strat_to_ito(e, half)) == 0.0);
    }
    SUBCASE("channel-free summands add their couplings") {
        CounterRng rng(61);
        Mat k1 = random_complex_matrix(rng, 0, 2, 2);
        Mat k2 = random_complex_matrix(rng, stride, 2, 2);
        CoefficientBlock e1(2, 1), e2(2, 1);
        e1.block(1, 0) = k1;
        e1.block(0, 1) = k1.adjoint();
        e2.block(1, 0) = k2;
        e2.block(0, 1) = k2.adjoint();

        AdditionResult sum = add_generators({e1, e2}, half);
        HPTriple hp = hp_from_ito(sum.g_total);
        CHECK((hp.k - (k1 + k2)).norm() < 1e-13);
        CHECK((hp.w - Mat::Identity(2, 2)).norm() < 1e-13);
    }
    SUBCASE("sum of self-adjoint summands passes the unitarity identity") {
        CounterRng rng(62);
        CoefficientBlock e1 = random_selfadjoint_block(rng, 0, 3, 2, 0.5);
        CoefficientBlock e2 = random_selfadjoint_block(rng, 50 * stride, 3, 2, 0.5);
        clamp_channel_norm(e1, half, 0.4);
        clamp_channel_norm(e2, half, 0.4);
        AdditionResult sum = add_generators({e1, e2}, half);
        CHECK(check_strat_selfadjoint(sum.e_total).passed);
        CHECK(check_ito_unitarity(sum.g_total).passed);
    }
    SUBCASE("shape mismatch is refused") {
        CHECK_THROWS_AS(add_generators({CoefficientBlock(2, 1), CoefficientBlock(3, 1)}, half),
                        DimensionMismatch);
        CHECK_THROWS_AS(add_generators({}, half), DimensionMismatch);
    }
}

TEST_CASE("composite channel unitary") {
    SUBCASE("identities compose to the identity") {
        Mat w = composite_w(Mat::Identity(3, 3), Mat::Identity(3, 3));
        CHECK((w - Mat::Identity(3, 3)).norm() < 1e-14);
    }
    SUBCASE("scalar wa = wb = i gives (-3+4i)/5") {
        Mat wa = Mat::Identity(1, 1) * cx(0, 1);
        Mat w = composite_w(wa, wa);
        CHECK(std::abs(w(0, 0) - cx(-0.6, 0.8)) < 1e-14);
        CHECK(std::abs(std::abs(w(0, 0)) - 1.0) < 1e-14);
    }
    SUBCASE("agrees with the exponent-addition route on commuting unitaries") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            CounterRng rng(700 + seed);
            const int d = 4;
            Vec pa(d), pb(d);
            for (int k = 0; k < d; ++k) {
                // keep phases away from pi so (W + 1) stays invertible
                pa(k) = std::exp(iu * (2.4 * rng.uniform(k) - 1.2));
                pb(k) = std::exp(iu * (2.4 * rng.uniform(64 + k) - 1.2));
            }
            Mat wa = pa.asDiagonal();
            Mat wb = pb.asDiagonal();

            Mat w_direct = composite_w(wa, wb);

            CoefficientBlock ea(d, 1), eb(d, 1);
            ea.block(1, 1) = channel_from_unitary(wa, half);
            eb.block(1, 1) = channel_from_unitary(wb, half);
            AdditionResult sum = add_generators({ea, eb}, half);
            HPTriple hp = hp_from_ito(sum.g_total);

            CHECK((w_direct - hp.w).norm() < 1e-10);
            CHECK((w_direct * wa - wa * w_direct).norm() < 1e-10);
            CHECK((w_direct * wb - wb * w_direct).norm() < 1e-10);
        }
    }
    SUBCASE("non-commuting inputs are refused") {
        Mat wa = unitary_exp(sigma_x(), 0.3);
        Mat wb = unitary_exp(sigma_z(), 0.4);
        CHECK_THROWS_AS(composite_w(wa, wb), NonCommuting);
    }
    SUBCASE("factor at phase pi is singular") {
        Mat wa = -Mat::Identity(2, 2); // Wa + I = 0
        CHECK_THROWS_AS(composite_w(wa, Mat::Identity(2, 2)), SingularFactor);
    }
}

TEST_CASE("sign-variant 00 entry differs by twice the correction") {
    CounterRng rng(88);
    GaugeParameter kappa(cx(0.5, 0.2));
    CoefficientBlock e = random_selfadjoint_block(rng, 0, 2, 1);
    clamp_channel_norm(e, kappa, 0.6);
    CoefficientBlock g = strat_to_ito(e, kappa);

    Mat e11 = e.channel_matrix();
    Mat r = checked_inverse(Mat::Identity(2, 2) + iu * kappa.value() * e11, "resolvent");
    Mat expected_gap = 2.0 * iu * kappa.value() * e.channel_row(0) * r * e.channel_column(0);
    CHECK((alt_sign_g00(e, kappa) - g.block(0, 0) - expected_gap).norm() < 1e-12);
}

TEST_CASE("shortcut Hamiltonian fails self-adjointness once the channel block is present") {
    CounterRng rng(89);
    GaugeParameter tilted(cx(0.5, 0.7)); // the Im kappa term is what breaks self-adjointness
    CoefficientBlock e = random_selfadjoint_block(rng, 0, 2, 1);
    clamp_channel_norm(e, tilted, 0.6);

    Mat h_short = shortcut_hamiltonian(e, tilted);
    CHECK((h_short - h_short.adjoint()).norm() > 1e-3);
    HPTriple hp = hp_from_ito(strat_to_ito(e, tilted));
    CHECK((h_short - hp.h).norm() > 1e-3); // deviates from the derived H as well

    // at real kappa the shortcut collapses to E00, which is self-adjoint but
    // still misses the derived H
    Mat h_real = shortcut_hamiltonian(e, half);
    CHECK((h_real - e.block(0, 0)).norm() < 1e-14);
    HPTriple hp_real = hp_from_ito(strat_to_ito(e, half));
    CHECK((h_real - hp_real.h).norm() > 1e-3);

    // with E11 = 0 the shortcut equals the derived Hamiltonian
    CoefficientBlock flat = e;
    flat.block(1, 1).setZero();
    Mat h_flat = shortcut_hamiltonian(flat, tilted);
    HPTriple hp_flat = hp_from_ito(strat_to_ito(flat, tilted));
    CHECK((h_flat - hp_flat.h).norm() < 1e-12);
}

TEST_CASE("naive addition rule deviates from the general one by the recorded terms") {
    CounterRng rng(90);
    Mat k1 = random_complex_matrix(rng, 0, 2, 2);
    Mat k2 = random_complex_matrix(rng, stride, 2, 2);
    Mat h1 = random_hermitian(rng, 2 * stride, 2);
    Mat h2 = random_hermitian(rng, 3 * stride, 2);
    Mat id = Mat::Identity(2, 2);

    SUBCASE("real gauge: derived H is the plain sum, naive H subtracts Re kappa K^dag K") {
        AdditionRuleComparison cmp = naive_addition_rule({{id, k1, h1}, {id, k2, h2}}, half);
        CHECK(cmp.k_residual < 1e-13);
        CHECK((cmp.derived.h - (h1 + h2)).norm() < 1e-12);
        Mat gap = 0.5 * (k1.adjoint() * k1 + k2.adjoint() * k2);
        CHECK(cmp.h_residual == doctest::Approx(gap.norm()).epsilon(1e-9));
    }
    SUBCASE("imaginary gauge keeps the cross terms") {
        GaugeParameter kappa(cx(0.5, 0.3));
        AdditionRuleComparison cmp = naive_addition_rule({{id, k1, h1}, {id, k2, h2}}, kappa);
        Mat cross = h1 + h2 + 0.3 * (k1.adjoint() * k2 + k2.adjoint() * k1);
        CHECK((cmp.derived.h - cross).norm() < 1e-12);
    }
}
