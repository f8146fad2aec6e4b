#include "qstoch/coeffs.hpp"

#include <sstream>

#include "qstoch/errors.hpp"

namespace qstoch {

namespace {

std::string pair_label(int a, int b) {
    return std::to_string(a) + "," + std::to_string(b);
}

void finish(ConversionReport& rep) {
    rep.max_residual = 0.0;
    for (const auto& [k, v] : rep.residual_norms)
        rep.max_residual = std::max(rep.max_residual, v);
    rep.passed = rep.max_residual <= rep.tolerance;
}

} // namespace

GaugeParameter::GaugeParameter(cx kappa) : kappa_(kappa) {
    if (kappa.real() != 0.5) {
        std::ostringstream os;
        os << "gauge parameter requires Re kappa = 1/2 exactly, got " << kappa.real();
        throw InvalidGauge(os.str());
    }
}

BlockTable::BlockTable(int block_size, int channels) : bs_(block_size), nch_(channels) {
    if (block_size < 1)
        throw DimensionMismatch("block size must be >= 1, got " + std::to_string(block_size));
    if (channels < 1)
        throw DimensionMismatch("channel count must be >= 1, got " + std::to_string(channels));
    blocks_.assign(static_cast<std::size_t>(nch_ + 1) * (nch_ + 1), Mat::Zero(bs_, bs_));
}

void BlockTable::require_index(int a, int b) const {
    if (a < 0 || a > nch_ || b < 0 || b > nch_)
        throw DimensionMismatch("block index (" + std::to_string(a) + "," + std::to_string(b) +
                                ") out of range for " + std::to_string(nch_) + " channel(s)");
}

const Mat& BlockTable::block(int a, int b) const {
    require_index(a, b);
    return blocks_[static_cast<std::size_t>(a) * (nch_ + 1) + b];
}

Mat& BlockTable::block(int a, int b) {
    require_index(a, b);
    return blocks_[static_cast<std::size_t>(a) * (nch_ + 1) + b];
}

Mat BlockTable::channel_matrix() const {
    Mat m(nch_ * bs_, nch_ * bs_);
    for (int i = 1; i <= nch_; ++i)
        for (int j = 1; j <= nch_; ++j) {
            const Mat& blk = block(i, j);
            if (blk.rows() != bs_ || blk.cols() != bs_)
                throw DimensionMismatch("block (" + std::to_string(i) + "," + std::to_string(j) + ") has stray shape");
            m.block((i - 1) * bs_, (j - 1) * bs_, bs_, bs_) = blk;
        }
    return m;
}

Mat BlockTable::channel_row(int a) const {
    require_index(a, 0);
    Mat m(bs_, nch_ * bs_);
    for (int j = 1; j <= nch_; ++j)
        m.block(0, (j - 1) * bs_, bs_, bs_) = block(a, j);
    return m;
}

Mat BlockTable::channel_column(int b) const {
    require_index(0, b);
    Mat m(nch_ * bs_, bs_);
    for (int i = 1; i <= nch_; ++i)
        m.block((i - 1) * bs_, 0, bs_, bs_) = block(i, b);
    return m;
}

void BlockTable::set_channel_matrix(const Mat& m) {
    if (m.rows() != nch_ * bs_ || m.cols() != nch_ * bs_)
        throw DimensionMismatch("channel matrix must be " + std::to_string(nch_ * bs_) + " square");
    for (int i = 1; i <= nch_; ++i)
        for (int j = 1; j <= nch_; ++j)
            block(i, j) = m.block((i - 1) * bs_, (j - 1) * bs_, bs_, bs_);
}

void BlockTable::set_channel_row(int a, const Mat& m) {
    if (m.rows() != bs_ || m.cols() != nch_ * bs_)
        throw DimensionMismatch("channel row must be " + std::to_string(bs_) + "x" + std::to_string(nch_ * bs_));
    for (int j = 1; j <= nch_; ++j)
        block(a, j) = m.block(0, (j - 1) * bs_, bs_, bs_);
}

void BlockTable::set_channel_column(int b, const Mat& m) {
    if (m.rows() != nch_ * bs_ || m.cols() != bs_)
        throw DimensionMismatch("channel column must be " + std::to_string(nch_ * bs_) + "x" + std::to_string(bs_));
    for (int i = 1; i <= nch_; ++i)
        block(i, b) = m.block((i - 1) * bs_, 0, bs_, bs_);
}

bool BlockTable::finite() const {
    for (const Mat& b : blocks_)
        if (!b.allFinite()) return false;
    return true;
}

double BlockTable::max_block_norm() const {
    double m = 0.0;
    for (const Mat& b : blocks_)
        m = std::max(m, b.norm());
    return m;
}

CoefficientBlock CoefficientBlock::adjoint_table() const {
    CoefficientBlock out(dim(), channels());
    for (int a = 0; a <= channels(); ++a)
        for (int b = 0; b <= channels(); ++b)
            out.block(a, b) = block(b, a).adjoint();
    return out;
}

CoefficientBlock CoefficientBlock::scaled(cx factor) const {
    CoefficientBlock out = *this;
    for (int a = 0; a <= channels(); ++a)
        for (int b = 0; b <= channels(); ++b)
            out.block(a, b) *= factor;
    return out;
}

CoefficientBlock& CoefficientBlock::operator+=(const CoefficientBlock& o) {
    if (!same_shape(o))
        throw DimensionMismatch("coefficient tables differ in shape: (" + std::to_string(dim()) + "," +
                                std::to_string(channels()) + ") vs (" + std::to_string(o.dim()) + "," +
                                std::to_string(o.channels()) + ")");
    for (int a = 0; a <= channels(); ++a)
        for (int b = 0; b <= channels(); ++b)
            block(a, b) += o.block(a, b);
    return *this;
}

void HPTriple::validate(double tol) const {
    const int d = dim();
    if (d < 1 || h.cols() != d)
        throw DimensionMismatch("H must be square and non-empty");
    if (k.cols() != d || k.rows() % d != 0 || k.rows() < d)
        throw DimensionMismatch("K must stack channel blocks over a d-column footprint");
    const auto nd = k.rows();
    if (w.rows() != nd || w.cols() != nd)
        throw DimensionMismatch("W must be square of the stacked channel dimension");
    double wu = (w.adjoint() * w - Mat::Identity(nd, nd)).norm();
    if (wu > tol)
        throw NotUnitary("W fails unitarity, ||W'W - I|| = " + std::to_string(wu));
    double hs = (h - h.adjoint()).norm();
    if (hs > tol)
        throw NotSelfAdjoint("H fails self-adjointness, ||H - H'|| = " + std::to_string(hs));
}

CoefficientBlock strat_to_ito(const CoefficientBlock& e, const GaugeParameter& kappa) {
    const int n = e.channels();
    const cx ik = iu * kappa.value();
    Mat e11 = e.channel_matrix();
    Mat denom = Mat::Identity(e11.rows(), e11.cols()) + ik * e11;
    CheckedLU lu(denom, "(I + i kappa E11)");

    std::vector<Mat> solved(n + 1);
    for (int b = 0; b <= n; ++b)
        solved[b] = lu.solve(e.channel_column(b));

    CoefficientBlock g(e.dim(), e.channels());
    for (int a = 0; a <= n; ++a) {
        Mat row = e.channel_row(a);
        for (int b = 0; b <= n; ++b)
            g.block(a, b) = e.block(a, b) - ik * (row * solved[b]);
    }
    return g;
}

CoefficientBlock ito_to_strat(const CoefficientBlock& g, const GaugeParameter& kappa) {
    const int n = g.channels();
    const cx ik = iu * kappa.value();
    Mat g11 = g.channel_matrix();
    Mat denom = Mat::Identity(g11.rows(), g11.cols()) - ik * g11;
    CheckedLU lu(denom, "(I - i kappa G11)");

    std::vector<Mat> solved(n + 1);
    for (int b = 0; b <= n; ++b)
        solved[b] = lu.solve(g.channel_column(b));

    CoefficientBlock e(g.dim(), g.channels());
    for (int a = 0; a <= n; ++a) {
        Mat row = g.channel_row(a);
        for (int b = 0; b <= n; ++b)
            e.block(a, b) = g.block(a, b) + ik * (row * solved[b]);
    }
    return e;
}

ConversionReport check_strat_selfadjoint(const CoefficientBlock& e, double tol) {
    ConversionReport rep;
    rep.check = "exponent self-adjointness E_ab = (E_ba)^dag";
    rep.tolerance = tol;
    for (int a = 0; a <= e.channels(); ++a)
        for (int b = a; b <= e.channels(); ++b)
            rep.residual_norms[pair_label(a, b)] = (e.block(a, b) - e.block(b, a).adjoint()).norm();
    finish(rep);
    return rep;
}

ConversionReport check_ito_unitarity(const CoefficientBlock& g, double tol) {
    ConversionReport rep;
    rep.check = "Ito unitarity i G_ba^dag - i G_ab + sum_j G_ja^dag G_jb";
    rep.tolerance = tol;
    for (int a = 0; a <= g.channels(); ++a)
        for (int b = 0; b <= g.channels(); ++b) {
            Mat r = iu * g.block(b, a).adjoint() - iu * g.block(a, b);
            for (int j = 1; j <= g.channels(); ++j)
                r += g.block(j, a).adjoint() * g.block(j, b);
            rep.residual_norms[pair_label(a, b)] = r.norm();
        }
    finish(rep);
    return rep;
}

CoefficientBlock ito_from_hp(const HPTriple& hp) {
    hp.validate();
    const int d = hp.dim();
    const int n = hp.channels();
    CoefficientBlock g(d, n);
    g.set_channel_column(0, hp.k);
    g.set_channel_row(0, hp.k.adjoint() * hp.w);
    g.set_channel_matrix(iu * (hp.w - Mat::Identity(hp.w.rows(), hp.w.cols())));
    g.block(0, 0) = hp.h - 0.5 * iu * (hp.k.adjoint() * hp.k);
    return g;
}

HPTriple hp_from_ito(const CoefficientBlock& g, double tol) {
    ConversionReport rep = check_ito_unitarity(g, tol);
    if (!rep.passed) {
        std::ostringstream os;
        os << "coefficients fail the unitarity identity, max residual " << rep.max_residual
           << " > " << rep.tolerance;
        throw UnitarityViolated(os.str());
    }
    Mat g11 = g.channel_matrix();
    HPTriple hp;
    hp.w = Mat::Identity(g11.rows(), g11.cols()) - iu * g11;
    hp.k = g.channel_column(0);
    hp.h = 0.5 * (g.block(0, 0) + g.block(0, 0).adjoint());
    hp.validate(tol);

    double row_res = (g.channel_row(0) - hp.k.adjoint() * hp.w).norm();
    CoefficientBlock back = ito_from_hp(hp);
    double round = 0.0;
    for (int a = 0; a <= g.channels(); ++a)
        for (int b = 0; b <= g.channels(); ++b)
            round = std::max(round, (back.block(a, b) - g.block(a, b)).norm());
    double scale = 1.0 + g.max_block_norm();
    if (row_res > tol * scale || round > tol * scale)
        throw UnitarityViolated("extracted (W,K,H) do not reproduce the coefficients: G01 residual " +
                                std::to_string(row_res) + ", roundtrip residual " + std::to_string(round));
    return hp;
}

Mat geometric_resolvent_series(const Mat& e11, const GaugeParameter& kappa) {
    double norm = std::abs(kappa.value()) * op_norm(e11);
    if (!(norm < 1.0)) {
        std::ostringstream os;
        os << "||kappa E11|| = " << norm << " >= 1; geometric series diverges";
        throw NormTooLarge(os.str());
    }
    const auto nd = e11.rows();
    Mat step = -iu * kappa.value() * e11;
    Mat term = Mat::Identity(nd, nd);
    Mat acc = term;
    // ratio <= ||kappa E11|| < 1, so the term norms decay geometrically
    for (long k = 1; term.norm() >= 1e-14; ++k) {
        term = term * step;
        acc += term;
        if (k > 200000)
            throw SeriesDivergence("resolvent series failed to reach the truncation threshold");
    }
    return acc;
}

ResolventComparison neumann_resolvent(const Mat& e11, const GaugeParameter& kappa) {
    if (e11.rows() != e11.cols())
        throw DimensionMismatch("E11 must be square");
    const auto nd = e11.rows();
    Mat denom = Mat::Identity(nd, nd) + iu * kappa.value() * e11;

    ResolventComparison out;
    out.direct = checked_inverse(denom, "(I + i kappa E11)");
    out.kappa_e11_norm = std::abs(kappa.value()) * op_norm(e11);
    out.series_valid = out.kappa_e11_norm < 1.0;
    if (out.series_valid) {
        out.series = geometric_resolvent_series(e11, kappa);
        out.agreement = (*out.series - out.direct).norm();
    }
    return out;
}

AdditionResult add_generators(const std::vector<CoefficientBlock>& es, const GaugeParameter& kappa) {
    if (es.empty())
        throw DimensionMismatch("add_generators needs at least one summand");
    CoefficientBlock total = es.front();
    for (std::size_t n = 1; n < es.size(); ++n)
        total += es[n];
    AdditionResult out;
    out.g_total = strat_to_ito(total, kappa);
    out.e_total = std::move(total);
    return out;
}

Mat composite_w(const Mat& wa, const Mat& wb, double tol) {
    if (wa.rows() != wa.cols() || wb.rows() != wb.cols() || wa.rows() != wb.rows())
        throw DimensionMismatch("composite_w needs square matrices of equal size");
    const auto d = wa.rows();
    Mat id = Mat::Identity(d, d);

    double comm = (wa * wb - wb * wa).norm();
    if (comm > tol)
        throw NonCommuting("||[Wa, Wb]|| = " + std::to_string(comm) + " exceeds " + std::to_string(tol));
    if ((wa.adjoint() * wa - id).norm() > tol)
        throw NotUnitary("Wa is not unitary");
    if ((wb.adjoint() * wb - id).norm() > tol)
        throw NotUnitary("Wb is not unitary");

    Mat m = 3.0 * id + wa + wb - wa * wb;
    Mat w;
    try {
        checked_inverse(wa + id, "(Wa + I)"); // existence of the channel blocks for each factor
        checked_inverse(wb + id, "(Wb + I)");
        w = wa * m.adjoint() * checked_solve(m, wb, "(3 + Wa + Wb - Wa Wb)");
    } catch (const SingularResolvent& err) {
        throw SingularFactor(err.what());
    }
    double wu = (w.adjoint() * w - id).norm();
    if (wu > tol)
        throw NotUnitary("composite W fails unitarity, residual " + std::to_string(wu));
    return w;
}

Mat cayley_channel_unitary(const Mat& e11, const GaugeParameter& kappa) {
    if (e11.rows() != e11.cols())
        throw DimensionMismatch("E11 must be square");
    const auto nd = e11.rows();
    Mat id = Mat::Identity(nd, nd);
    Mat denom = id + iu * kappa.value() * e11;
    Mat numer = id - iu * kappa.conjugate() * e11;
    // numer and denom are both functions of E11, hence commute; either order works
    return numer * checked_inverse(denom, "(I + i kappa E11)");
}

Mat channel_from_unitary(const Mat& w, const GaugeParameter& kappa) {
    if (w.rows() != w.cols())
        throw DimensionMismatch("W must be square");
    const auto nd = w.rows();
    Mat id = Mat::Identity(nd, nd);
    Mat denom = kappa.conjugate() * id + kappa.value() * w;
    try {
        return iu * checked_solve(denom, w - id, "(conj(kappa) + kappa W)");
    } catch (const SingularResolvent& err) {
        throw SingularFactor(err.what());
    }
}

Mat alt_sign_g00(const CoefficientBlock& e, const GaugeParameter& kappa) {
    const cx ik = iu * kappa.value();
    Mat e11 = e.channel_matrix();
    Mat denom = Mat::Identity(e11.rows(), e11.cols()) + ik * e11;
    Mat solved = checked_solve(denom, e.channel_column(0), "(I + i kappa E11)");
    return e.block(0, 0) + ik * (e.channel_row(0) * solved);
}

Mat shortcut_hamiltonian(const CoefficientBlock& e, const GaugeParameter& kappa) {
    Mat e11 = e.channel_matrix();
    Mat denom = Mat::Identity(e11.rows(), e11.cols()) + iu * kappa.value() * e11;
    Mat solved = checked_solve(denom, e.channel_column(0), "(I + i kappa E11)");
    return e.block(0, 0) + kappa.imag_part() * (e.channel_row(0) * solved);
}

AdditionRuleComparison naive_addition_rule(const std::vector<HPTriple>& parts,
                                           const GaugeParameter& kappa) {
    if (parts.empty())
        throw DimensionMismatch("naive_addition_rule needs at least one part");
    const int d = parts.front().dim();
    const int n = parts.front().channels();
    const auto nd = parts.front().w.rows();
    Mat id = Mat::Identity(nd, nd);

    std::vector<CoefficientBlock> es;
    AdditionRuleComparison out;
    out.naive_k = Mat::Zero(nd, d);
    out.naive_h = Mat::Zero(d, d);
    for (const HPTriple& p : parts) {
        p.validate();
        if (p.dim() != d || p.channels() != n)
            throw DimensionMismatch("summands differ in shape");
        if ((p.w - id).norm() > tol_algebra)
            throw Error("naive addition rule only covers trivial channel unitaries (W = I)");
        // under W = I the exponent has E11 = 0, E10 = K, E01 = K^dag,
        // E00 = H - Im(kappa) K^dag K
        CoefficientBlock e(d, n);
        e.set_channel_column(0, p.k);
        e.set_channel_row(0, p.k.adjoint());
        e.block(0, 0) = p.h - kappa.imag_part() * (p.k.adjoint() * p.k);
        es.push_back(std::move(e));

        out.naive_k += p.k;
        out.naive_h += p.h - kappa.value().real() * (p.k.adjoint() * p.k);
    }
    AdditionResult sum = add_generators(es, kappa);
    out.derived = hp_from_ito(sum.g_total);
    out.k_residual = (out.derived.k - out.naive_k).norm();
    out.h_residual = (out.derived.h - out.naive_h).norm();
    return out;
}

} // namespace qstoch
