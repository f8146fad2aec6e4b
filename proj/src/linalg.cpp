#include "qstoch/linalg.hpp"

#include <sstream>

#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qstoch/errors.hpp"
#include "qstoch/tolerances.hpp"

namespace qstoch {

Mat kron(const Mat& a, const Mat& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

double op_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(a).singularValues()(0);
}

bool all_finite(const Mat& a) {
    return a.allFinite();
}

Mat checked_solve(const Mat& a, const Mat& rhs, const std::string& what) {
    if (a.rows() != a.cols() || a.rows() != rhs.rows())
        throw DimensionMismatch(what + ": solve shape " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs rhs rows " + std::to_string(rhs.rows()));
    Eigen::PartialPivLU<Mat> lu(a);
    double rc = lu.rcond();
    if (!(rc > 1.0 / cond_max)) {
        std::ostringstream os;
        os << what << ": condition estimate " << (rc > 0 ? 1.0 / rc : 0.0)
           << " exceeds bound " << cond_max;
        throw SingularResolvent(os.str());
    }
    return lu.solve(rhs);
}

Mat checked_inverse(const Mat& a, const std::string& what) {
    return checked_solve(a, Mat::Identity(a.rows(), a.cols()), what);
}

namespace {
const Mat& require_square(const Mat& a, const std::string& what) {
    if (a.rows() != a.cols())
        throw DimensionMismatch(what + ": matrix is " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + ", expected square");
    return a;
}
} // namespace

CheckedLU::CheckedLU(const Mat& a, const std::string& what)
    : lu_(require_square(a, what)), what_(what) {
    double rc = lu_.rcond();
    if (!(rc > 1.0 / cond_max)) {
        std::ostringstream os;
        os << what_ << ": condition estimate " << (rc > 0 ? 1.0 / rc : 0.0)
           << " exceeds bound " << cond_max;
        throw SingularResolvent(os.str());
    }
}

Mat CheckedLU::solve(const Mat& rhs) const {
    if (rhs.rows() != lu_.rows())
        throw DimensionMismatch(what_ + ": rhs rows " + std::to_string(rhs.rows()));
    return lu_.solve(rhs);
}

Mat mat_exp(const Mat& a) {
    return a.exp();
}

Mat unitary_exp(const Mat& h, double t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success)
        throw Error("unitary_exp: eigendecomposition failed");
    const auto& lam = es.eigenvalues();
    Vec phases(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k)
        phases(k) = std::exp(cx(0.0, -t * lam(k)));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Vec vec_op(const Mat& x) {
    return Eigen::Map<const Vec>(x.data(), x.size());
}

Mat unvec_op(const Vec& v, int rows, int cols) {
    if (v.size() != Eigen::Index(rows) * cols)
        throw DimensionMismatch("unvec_op: size " + std::to_string(v.size()) + " != " +
                                std::to_string(rows) + "*" + std::to_string(cols));
    return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Mat superop_left(const Mat& a) {
    return kron(Mat::Identity(a.cols(), a.cols()), a);
}

Mat superop_right(const Mat& b) {
    return kron(b.transpose(), Mat::Identity(b.rows(), b.rows()));
}

Mat superop_sandwich(const Mat& a, const Mat& b) {
    return kron(b.transpose(), a);
}

Mat apply_superop(const Mat& l, const Mat& x) {
    return unvec_op(l * vec_op(x), static_cast<int>(x.rows()), static_cast<int>(x.cols()));
}

Mat matrix_unit(int d, int i, int j) {
    Mat e = Mat::Zero(d, d);
    e(i, j) = 1.0;
    return e;
}

Mat sigma_x() { return (Mat(2, 2) << 0, 1, 1, 0).finished(); }
Mat sigma_y() { return (Mat(2, 2) << 0, -iu, iu, 0).finished(); }
Mat sigma_z() { return (Mat(2, 2) << 1, 0, 0, -1).finished(); }
Mat sigma_plus() { return (Mat(2, 2) << 0, 0, 1, 0).finished(); }
Mat sigma_minus() { return (Mat(2, 2) << 0, 1, 0, 0).finished(); }

Mat random_complex_matrix(const CounterRng& rng, std::uint64_t counter_base, int rows, int cols, double scale) {
    Mat m(rows, cols);
    std::uint64_t c = counter_base;
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            m(i, j) = scale * rng.complex_gaussian(c++);
    return m;
}

Mat random_hermitian(const CounterRng& rng, std::uint64_t counter_base, int d, double scale) {
    Mat a = random_complex_matrix(rng, counter_base, d, d, scale);
    return 0.5 * (a + a.adjoint());
}

Mat random_unitary(const CounterRng& rng, std::uint64_t counter_base, int d) {
    Mat a = random_complex_matrix(rng, counter_base, d, d);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(d, d);
    Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int k = 0; k < d; ++k) {
        cx rkk = r(k, k);
        double mod = std::abs(rkk);
        q.col(k) *= (mod > 0) ? rkk / mod : cx(1.0, 0.0); // fix phase so the law is Haar
    }
    return q;
}

} // namespace qstoch
