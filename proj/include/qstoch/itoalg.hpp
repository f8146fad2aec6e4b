#pragma once

#include "qstoch/coeffs.hpp"
#include "qstoch/linalg.hpp"

namespace qstoch {

// Coefficients of an operator-valued differential dX = X_ab (x) dA^ab; the
// container is the same block table used for generator coefficients.
using OperatorGenerator = CoefficientBlock;

// Coefficients of a superoperator-valued differential dL(.) = L_ab(.) (x) dA^ab.
// Each block is a d^2 x d^2 matrix acting on column-vectorized d x d operators
// (left multiplication by A is I (x) A, right multiplication by B is B^T (x) I).
class SuperGenerator : public BlockTable {
public:
    SuperGenerator() = default;
    SuperGenerator(int dim_system, int channels)
        : BlockTable(dim_system * dim_system, channels), dim_(dim_system) {}

    int dim() const { return dim_; } // system dimension d; blocks act on vec(d x d)

    // block (a, b) applied to an operator
    Mat apply(int a, int b, const Mat& x) const;

    // claims that every block satisfies L(X^dag) = (L(X))^dag; propagated by
    // the algebra, measured by blockwise_reality_residual
    bool real_blocks = false;

private:
    int dim_ = 0;
};

// Quadratic variation of operator differentials: (XY)_ab = sum_j X_aj Y_jb.
// Only channel indices contract; every pairing through dt vanishes.
OperatorGenerator qv_product(const OperatorGenerator& x, const OperatorGenerator& y);

// Mutual quadratic variation of superoperator differentials:
// [[L,M]]_ab = sum_j L_aj o M_jb (composition of maps).
SuperGenerator qv_bracket(const SuperGenerator& l, const SuperGenerator& m);

// Ito-to-time-symmetric correction dG = dL + (1/2) [[L, L]].
SuperGenerator strat_correction(const SuperGenerator& l);

// Exponentiated generator dH = e^{dL} - id = sum_{n>=1} (1/n!) (dL)^{o n},
// evaluated in closed form: dH_ab = L_ab + Row_a(L) phi2(L11) Col_b(L) with
// phi2(x) = (e^x - 1 - x)/x^2 summed as an entire power series on the
// channel-channel block. The channel corner is cross-checked against
// e^{L11} - I computed by direct matrix exponential.
SuperGenerator exp_generator(const SuperGenerator& l);
OperatorGenerator exp_generator(const OperatorGenerator& l);

// phi2 series itself (exposed for tests); throws SeriesDivergence when the
// term norms stop decreasing after 200 terms.
Mat phi2_series(const Mat& c);

// Dissipation of a map: D_L(X, Y) = L(XY) - L(X) Y - X L(Y); zero exactly
// when L is a derivation. `l` is the d^2 x d^2 superoperator matrix.
Mat dissipation_eval(const Mat& l, const Mat& x, const Mat& y);

// e^{t v} on the superoperator level (scaled-and-squared matrix exponential).
Mat superop_exponential(const Mat& v, double t);

// Measured reality defects over the matrix-unit basis.
// blockwise: max_ab max_X || L_ab(X^dag) - (L_ab(X))^dag ||
double blockwise_reality_residual(const SuperGenerator& l);
// flow-indexed: max_ab max_X || L_ab(X^dag) - (L_ba(X))^dag ||
double flow_reality_residual(const SuperGenerator& l);

} // namespace qstoch
