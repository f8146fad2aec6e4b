#include "qstoch/itoalg.hpp"

#include <cmath>

#include "qstoch/errors.hpp"
#include "qstoch/tolerances.hpp"

namespace qstoch {

namespace {

template <typename Gen>
Gen zero_like(const Gen& g) {
    return Gen(g.dim(), g.channels());
}

template <typename Gen>
Gen contract_channels(const Gen& x, const Gen& y) {
    if (!x.same_shape(y))
        throw DimensionMismatch("quadratic variation needs matching (d, N)");
    Gen out = zero_like(x);
    const int n = x.channels();
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
            Mat acc = Mat::Zero(x.block_size(), x.block_size());
            for (int j = 1; j <= n; ++j)
                acc += x.block(a, j) * y.block(j, b); // dA^{aj} dA^{jb} = dA^{ab}
            out.block(a, b) = acc;
        }
    return out;
}

template <typename Gen>
Gen exp_impl(const Gen& l) {
    Mat c = l.channel_matrix();
    Mat p2 = phi2_series(c);

    Gen out = zero_like(l);
    const int n = l.channels();
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b)
            out.block(a, b) = l.block(a, b) + l.channel_row(a) * p2 * l.channel_column(b);

    // channel corner must assemble to e^{L11} - I
    Mat target = mat_exp(c) - Mat::Identity(c.rows(), c.cols());
    double gap = (out.channel_matrix() - target).norm();
    if (gap > 1e-10 * std::max(1.0, target.norm()))
        throw SeriesDivergence("exponentiated generator cross-check failed, gap " + std::to_string(gap));
    return out;
}

} // namespace

Mat SuperGenerator::apply(int a, int b, const Mat& x) const {
    if (x.rows() != dim_ || x.cols() != dim_)
        throw DimensionMismatch("operand must be " + std::to_string(dim_) + " square");
    return unvec_op(block(a, b) * vec_op(x), dim_, dim_);
}

OperatorGenerator qv_product(const OperatorGenerator& x, const OperatorGenerator& y) {
    return contract_channels(x, y);
}

SuperGenerator qv_bracket(const SuperGenerator& l, const SuperGenerator& m) {
    SuperGenerator out = contract_channels(l, m);
    out.real_blocks = l.real_blocks && m.real_blocks; // composition preserves reality
    return out;
}

SuperGenerator strat_correction(const SuperGenerator& l) {
    SuperGenerator bracket = qv_bracket(l, l);
    SuperGenerator out = l;
    for (int a = 0; a <= l.channels(); ++a)
        for (int b = 0; b <= l.channels(); ++b)
            out.block(a, b) += 0.5 * bracket.block(a, b);
    return out;
}

Mat phi2_series(const Mat& c) {
    if (c.rows() != c.cols())
        throw DimensionMismatch("phi2_series needs a square matrix");
    const auto m = c.rows();
    Mat term = 0.5 * Mat::Identity(m, m); // leading term 1/2!
    Mat acc = term;
    double prev = term.norm();
    for (int k = 1;; ++k) {
        term = term * c / static_cast<double>(k + 2); // c^k / (k+2)!
        double tn = term.norm();
        if (!std::isfinite(tn))
            throw SeriesDivergence("phi2 series produced non-finite terms");
        if (k > 200 && tn >= prev)
            throw SeriesDivergence("phi2 series terms stopped decreasing after 200 terms");
        acc += term;
        if (tn < 1e-14)
            return acc;
        prev = tn;
    }
}

SuperGenerator exp_generator(const SuperGenerator& l) {
    SuperGenerator out = exp_impl(l);
    out.real_blocks = l.real_blocks;
    return out;
}

OperatorGenerator exp_generator(const OperatorGenerator& l) {
    return exp_impl(l);
}

Mat dissipation_eval(const Mat& l, const Mat& x, const Mat& y) {
    if (x.rows() != x.cols() || y.rows() != y.cols() || x.rows() != y.rows())
        throw DimensionMismatch("dissipation_eval needs square operands of equal size");
    const int d = static_cast<int>(x.rows());
    if (l.rows() != d * d || l.cols() != d * d)
        throw DimensionMismatch("superoperator must be d^2 square");
    auto ap = [&](const Mat& z) { return unvec_op(l * vec_op(z), d, d); };
    return ap(x * y) - ap(x) * y - x * ap(y);
}

Mat superop_exponential(const Mat& v, double t) {
    if (v.rows() != v.cols())
        throw DimensionMismatch("superop_exponential needs a square matrix");
    return mat_exp(t * v);
}

double blockwise_reality_residual(const SuperGenerator& l) {
    const int d = l.dim();
    double worst = 0.0;
    for (int a = 0; a <= l.channels(); ++a)
        for (int b = 0; b <= l.channels(); ++b)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    Mat x = matrix_unit(d, i, j);
                    worst = std::max(worst, (l.apply(a, b, x.adjoint()) - l.apply(a, b, x).adjoint()).norm());
                }
    return worst;
}

double flow_reality_residual(const SuperGenerator& l) {
    const int d = l.dim();
    double worst = 0.0;
    for (int a = 0; a <= l.channels(); ++a)
        for (int b = 0; b <= l.channels(); ++b)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    Mat x = matrix_unit(d, i, j);
                    worst = std::max(worst, (l.apply(a, b, x.adjoint()) - l.apply(b, a, x).adjoint()).norm());
                }
    return worst;
}

} // namespace qstoch
