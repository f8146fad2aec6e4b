#pragma once

namespace qstoch {

// Default numerical policy. Residuals measured in Frobenius norm unless a
// function documents otherwise; operator norms are largest singular values.
inline constexpr double tol_algebra = 1e-10;  // identity checks on coefficient algebra
inline constexpr double tol_series = 1e-12;   // truncation threshold for entire series
inline constexpr double cond_max = 1e12;      // refuse linear solves beyond this condition number

} // namespace qstoch
