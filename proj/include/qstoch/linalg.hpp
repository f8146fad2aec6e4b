#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

#include "qstoch/rng.hpp"

namespace qstoch {

using cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr cx iu{0.0, 1.0}; // imaginary unit

inline Mat dagger(const Mat& a) { return a.adjoint(); }

Mat kron(const Mat& a, const Mat& b);

// operator norm = largest singular value
double op_norm(const Mat& a);

bool all_finite(const Mat& a);

// Solve a * x = rhs by LU, refusing ill-conditioned systems (rcond < 1/cond_max).
// `what` names the system in the SingularResolvent message.
Mat checked_solve(const Mat& a, const Mat& rhs, const std::string& what);
Mat checked_inverse(const Mat& a, const std::string& what);

// Reusable factorization with the same condition-number refusal policy.
class CheckedLU {
public:
    CheckedLU(const Mat& a, const std::string& what);
    Mat solve(const Mat& rhs) const;

private:
    Eigen::PartialPivLU<Mat> lu_;
    std::string what_;
};

Mat mat_exp(const Mat& a);

// exp(-i t h) for self-adjoint h, via eigendecomposition; unitary to rounding.
Mat unitary_exp(const Mat& h, double t);

// column-major vectorization and its inverse
Vec vec_op(const Mat& x);
Mat unvec_op(const Vec& v, int rows, int cols);

// superoperator matrices acting on vec(X), column-major convention:
// vec(A X B) = (B^T (x) A) vec(X)
Mat superop_left(const Mat& a);                  // X -> A X
Mat superop_right(const Mat& b);                 // X -> X B
Mat superop_sandwich(const Mat& a, const Mat& b); // X -> A X B
Mat apply_superop(const Mat& l, const Mat& x);

// d x d matrix with unit (i, j) entry
Mat matrix_unit(int d, int i, int j);

// Pauli / ladder matrices (2 x 2)
Mat sigma_x();
Mat sigma_y();
Mat sigma_z();
Mat sigma_plus();  // |1><0|
Mat sigma_minus(); // |0><1|

// random matrices (deterministic in rng and counter_base; each entry consumes
// one counter slot, so disjoint bases give independent draws)
Mat random_complex_matrix(const CounterRng& rng, std::uint64_t counter_base, int rows, int cols, double scale = 1.0);
Mat random_hermitian(const CounterRng& rng, std::uint64_t counter_base, int d, double scale = 1.0);
Mat random_unitary(const CounterRng& rng, std::uint64_t counter_base, int d);

} // namespace qstoch
