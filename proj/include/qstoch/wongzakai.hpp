#pragma once

#include <cstdint>
#include <vector>

#include "qstoch/linalg.hpp"

namespace qstoch {

// Two-sided exponential smoothing kernel (1/(2 lambda)) e^{-|tau|/lambda}.
// Total mass 1, half-line mass 1/2: the latter is the kappa = 1/2
// normalization the time-symmetric calculus expects.
struct Kernel {
    double lambda = 0.0;
    explicit Kernel(double width);
    double value(double tau) const;
};

// Trapezoid masses on a uniform grid of spacing dt covering [-range, range]
// (full line) or [0, range] (half line).
double kernel_mass(const Kernel& k, double dt, double range);
double kernel_half_mass(const Kernel& k, double dt, double range);

// Sampled Brownian path on a uniform grid, plus its colored derivative once
// smoothed. Increment j covers [j dt, (j+1) dt) and is attributed to t_j = j dt.
struct NoisePath {
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::vector<double> increments;
    std::vector<double> smoothed; // empty until smooth_path fills it

    int steps() const { return static_cast<int>(increments.size()); }
    double horizon() const { return dt * steps(); }
    double total() const; // B(T)
};

// increment j = sqrt(dt) N(0,1) drawn at counter j; bitwise reproducible
NoisePath brownian_path(std::uint64_t seed, int steps, double dt);

// Colored derivative dw(t_i) = sum_j K(t_i - t_j) dB_j, evaluated with two
// exponential recursions in O(n). Throws GridTooCoarse when lambda < 5 dt.
NoisePath smooth_path(const NoisePath& path, const Kernel& kernel);

// U' = -i (V dw(t) + H) U integrated with exact unitary steps of the
// midpoint-frozen Hermitian generator; dw is linearly interpolated between
// grid samples. Throws StepTooLarge when dt_ode > lambda/10.
Mat integrate_colored(const Mat& v, const Mat& h, const NoisePath& smoothed, const Kernel& kernel,
                      double dt_ode);

// Strong Euler solution of the limit equation on the raw increment grid:
//   U_{k+1} = (I - i V dB_k - (V^2/2 + i H) dt) U_k.
// The drift is the kappa = 1/2 coefficient match for dipole coupling.
Mat stratonovich_reference(const Mat& v, const Mat& h, const NoisePath& path);

struct WzRow {
    double lambda = 0.0;
    double mean_err = 0.0;
    double max_err = 0.0;
    int n_seeds = 0;
};
struct WzResult {
    std::vector<WzRow> rows; // in lambda_list order
    // mean_err(lambda/2) < 0.85 mean_err(lambda) over the last three halvings
    bool converging = false;
};

// Pathwise comparison over shared seeds: one Brownian path per seed at
// dt_path, one colored run per (lambda, seed) against the Euler reference on
// the same path. Deterministic for fixed inputs regardless of thread count.
WzResult wz_convergence(const Mat& v, const Mat& h, double t_final,
                        const std::vector<double>& lambda_list, int n_seeds,
                        std::uint64_t seed_base, double dt_path, double dt_ode);

} // namespace qstoch
