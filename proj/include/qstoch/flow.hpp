#pragma once

#include <cstdint>
#include <vector>

#include "qstoch/coeffs.hpp"
#include "qstoch/itoalg.hpp"

namespace qstoch {

// The system of maps L_ab driving the adapted flow j_t(X): dj_t(X) =
// j_t(L_ab(X)) dA^ab. Built from unitarity-satisfying Ito coefficients;
// carries its source table for reporting.
struct FlowGenerator {
    SuperGenerator maps;
    CoefficientBlock source;

    int dim() const { return maps.dim(); }
    int channels() const { return maps.channels(); }
    Mat apply(int a, int b, const Mat& x) const { return maps.apply(a, b, x); }
};

// L_ab(X) = i G_ba^dag X - i X G_ab + sum_j G_ja^dag X G_jb.
// Requires check_ito_unitarity(G) to pass; the resulting maps kill the
// identity and satisfy the structure equations.
FlowGenerator eh_generator(const CoefficientBlock& g);

// Structure-equation defect, blockwise:
//   L_ab(XY) - L_ab(X) Y - X L_ab(Y) - sum_j L_aj(X) L_jb(Y).
// Zero (to rounding) for flows built by eh_generator.
OperatorGenerator structure_residual(const FlowGenerator& f, const Mat& x, const Mat& y);

// dt-block of the flow: the only part surviving the vacuum conditional
// expectation. u(X) = L_00(X).
Mat vacuum_forward_derivative(const FlowGenerator& f, const Mat& x);

// Brute-force expansion of d(U^dag X U) at U = I via the quadratic-variation
// algebra: (dU^dag) X + X dU + (dU^dag X)(dU) with dU = -i dG. Returns the
// coefficient of each increment; settles every sign convention by machine.
OperatorGenerator differential_oracle(const CoefficientBlock& g, const Mat& x);

// table of L_ab(X) for a fixed X (for comparing generators against oracles)
OperatorGenerator apply_blockwise(const SuperGenerator& l, const Mat& x);

// Heisenberg-picture Lindblad superoperator
//   X -> i[H, X] + sum_j K_j^dag X K_j - 1/2 {sum_j K_j^dag K_j, X}.
Mat heisenberg_lindblad(const Mat& h, const std::vector<Mat>& ks);

// Predual (Schroedinger-picture) action: tr(L(X) rho) = tr(X predual(rho)).
Mat predual_apply(const Mat& l_superop, const Mat& rho);

// Residual summary over a basis / random sample; drives the `flow` command
// and the acceptance checks.
struct FlowSummary {
    int dim = 0;
    int channels = 0;
    double unitality_residual = 0.0; // max_ab || L_ab(I) ||
    double reality_residual = 0.0;   // max || L_ab(X^dag) - L_ba(X)^dag ||
    double structure_residual = 0.0; // max over sampled (X, Y) pairs
    double oracle_residual = 0.0;    // eh_generator vs differential_oracle
    double lindblad_residual = 0.0;  // L_00 vs Lindblad form from (W, K, H)
    int sample_pairs = 0;
};

// Full matrix-unit basis when d <= basis_limit, random samples otherwise.
FlowSummary verify_flow(const CoefficientBlock& g, int basis_limit = 4, std::uint64_t seed = 1);

} // namespace qstoch
