#include "qstoch/flow.hpp"

#include <sstream>

#include "qstoch/errors.hpp"
#include "qstoch/rng.hpp"
#include "qstoch/tolerances.hpp"

namespace qstoch {

namespace {

OperatorGenerator times_right(const OperatorGenerator& g, const Mat& x) {
    OperatorGenerator out = g;
    for (int a = 0; a <= g.channels(); ++a)
        for (int b = 0; b <= g.channels(); ++b)
            out.block(a, b) = g.block(a, b) * x;
    return out;
}

OperatorGenerator times_left(const Mat& x, const OperatorGenerator& g) {
    OperatorGenerator out = g;
    for (int a = 0; a <= g.channels(); ++a)
        for (int b = 0; b <= g.channels(); ++b)
            out.block(a, b) = x * g.block(a, b);
    return out;
}

} // namespace

FlowGenerator eh_generator(const CoefficientBlock& g) {
    ConversionReport rep = check_ito_unitarity(g);
    if (!rep.passed) {
        std::ostringstream os;
        os << "flow generator needs unitarity-satisfying coefficients, max residual "
           << rep.max_residual << " > " << rep.tolerance;
        throw UnitarityViolated(os.str());
    }
    const int d = g.dim();
    const int n = g.channels();
    FlowGenerator f{SuperGenerator(d, n), g};
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
            Mat m = iu * superop_left(g.block(b, a).adjoint()) - iu * superop_right(g.block(a, b));
            for (int j = 1; j <= n; ++j)
                m += superop_sandwich(g.block(j, a).adjoint(), g.block(j, b));
            f.maps.block(a, b) = m;
        }
    return f;
}

OperatorGenerator structure_residual(const FlowGenerator& f, const Mat& x, const Mat& y) {
    const int d = f.dim();
    if (x.rows() != d || x.cols() != d || y.rows() != d || y.cols() != d)
        throw DimensionMismatch("structure_residual operands must be d x d");
    const int n = f.channels();
    OperatorGenerator out(d, n);
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
            Mat r = f.apply(a, b, x * y) - f.apply(a, b, x) * y - x * f.apply(a, b, y);
            for (int j = 1; j <= n; ++j)
                r -= f.apply(a, j, x) * f.apply(j, b, y); // fluctuation term
            out.block(a, b) = r;
        }
    return out;
}

Mat vacuum_forward_derivative(const FlowGenerator& f, const Mat& x) {
    return f.apply(0, 0, x);
}

OperatorGenerator differential_oracle(const CoefficientBlock& g, const Mat& x) {
    if (x.rows() != g.dim() || x.cols() != g.dim())
        throw DimensionMismatch("differential_oracle operand must be d x d");
    OperatorGenerator du = g.scaled(-iu);         // dU = -i dG U, evaluated at U = I
    OperatorGenerator dudag = du.adjoint_table(); // dU^dag = +i (dG)^dag
    OperatorGenerator t1 = times_right(dudag, x); // (dU^dag) X
    OperatorGenerator t2 = times_left(x, du);     // X dU
    return t1 + t2 + qv_product(t1, du);          // + (dU^dag X)(dU)
}

OperatorGenerator apply_blockwise(const SuperGenerator& l, const Mat& x) {
    OperatorGenerator out(l.dim(), l.channels());
    for (int a = 0; a <= l.channels(); ++a)
        for (int b = 0; b <= l.channels(); ++b)
            out.block(a, b) = l.apply(a, b, x);
    return out;
}

Mat heisenberg_lindblad(const Mat& h, const std::vector<Mat>& ks) {
    const auto d = h.rows();
    if (h.cols() != d)
        throw DimensionMismatch("H must be square");
    Mat acc = iu * (superop_left(h) - superop_right(h)); // i[H, .]
    Mat gram = Mat::Zero(d, d);
    for (const Mat& k : ks) {
        if (k.rows() != d || k.cols() != d)
            throw DimensionMismatch("coupling operators must match H");
        acc += superop_sandwich(k.adjoint(), k);
        gram += k.adjoint() * k;
    }
    acc -= 0.5 * (superop_left(gram) + superop_right(gram)); // -1/2 {K^dag K, .}
    return acc;
}

Mat predual_apply(const Mat& l_superop, const Mat& rho) {
    const int d = static_cast<int>(rho.rows());
    if (rho.cols() != d || l_superop.rows() != d * d || l_superop.cols() != d * d)
        throw DimensionMismatch("predual_apply needs rho d x d and a d^2 superoperator");
    return unvec_op(l_superop.adjoint() * vec_op(rho.adjoint()), d, d).adjoint();
}

FlowSummary verify_flow(const CoefficientBlock& g, int basis_limit, std::uint64_t seed) {
    FlowGenerator f = eh_generator(g);
    const int d = g.dim();
    const int n = g.channels();

    FlowSummary s;
    s.dim = d;
    s.channels = n;

    Mat id = Mat::Identity(d, d);
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b)
            s.unitality_residual = std::max(s.unitality_residual, f.apply(a, b, id).norm());

    s.reality_residual = flow_reality_residual(f.maps);

    std::vector<std::pair<Mat, Mat>> pairs;
    if (d <= basis_limit) {
        for (int i = 0; i < d * d; ++i)
            for (int j = 0; j < d * d; ++j)
                pairs.emplace_back(matrix_unit(d, i / d, i % d), matrix_unit(d, j / d, j % d));
    } else {
        CounterRng rng(seed, 17);
        for (int k = 0; k < 20; ++k)
            pairs.emplace_back(random_complex_matrix(rng, 2 * k * 4096, d, d),
                               random_complex_matrix(rng, (2 * k + 1) * 4096, d, d));
    }
    s.sample_pairs = static_cast<int>(pairs.size());

    for (const auto& [x, y] : pairs) {
        OperatorGenerator r = structure_residual(f, x, y);
        s.structure_residual = std::max(s.structure_residual, r.max_block_norm());
    }

    // oracle comparison on the operand basis (first components of the pairs)
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Mat x = matrix_unit(d, i, j);
            OperatorGenerator lhs = apply_blockwise(f.maps, x);
            OperatorGenerator rhs = differential_oracle(g, x);
            for (int a = 0; a <= n; ++a)
                for (int b = 0; b <= n; ++b)
                    s.oracle_residual =
                        std::max(s.oracle_residual, (lhs.block(a, b) - rhs.block(a, b)).norm());
        }

    // Lindblad form of the dt block from the extracted (W, K, H)
    HPTriple hp = hp_from_ito(g);
    std::vector<Mat> ks;
    for (int j = 0; j < n; ++j)
        ks.push_back(hp.k.middleRows(static_cast<Eigen::Index>(j) * d, d));
    Mat lind = heisenberg_lindblad(hp.h, ks);
    s.lindblad_residual = (f.maps.block(0, 0) - lind).norm();

    return s;
}

} // namespace qstoch
