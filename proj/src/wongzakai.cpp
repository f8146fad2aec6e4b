#include "qstoch/wongzakai.hpp"

#include <cmath>
#include <string>

#include "qstoch/errors.hpp"
#include "qstoch/parallel.hpp"
#include "qstoch/rng.hpp"
#include "qstoch/tolerances.hpp"

namespace qstoch {

namespace {

void require_selfadjoint(const Mat& m, const char* what) {
    double scale = std::max(1.0, m.norm());
    if ((m - m.adjoint()).norm() > tol_algebra * scale)
        throw NotSelfAdjoint(std::string(what) + " must be self-adjoint");
}

int tiled_steps(double t_final, double dt, const char* what) {
    long n = std::lround(t_final / dt);
    if (n < 1 || std::abs(static_cast<double>(n) * dt - t_final) > 1e-9 * t_final)
        throw Error(std::string(what) + " does not tile the horizon");
    return static_cast<int>(n);
}

bool ratios_converging(const std::vector<double>& errs, double factor) {
    if (errs.size() < 4) return false;
    for (std::size_t i = errs.size() - 3; i < errs.size(); ++i) {
        if (errs[i] <= 1e-12) continue;
        if (!(errs[i] < factor * errs[i - 1])) return false;
    }
    return true;
}

} // namespace

Kernel::Kernel(double width) : lambda(width) {
    if (!(width > 0.0)) throw Error("kernel width must be positive");
}

double Kernel::value(double tau) const { return std::exp(-std::abs(tau) / lambda) / (2.0 * lambda); }

double kernel_mass(const Kernel& k, double dt, double range) {
    const int m = static_cast<int>(std::lround(range / dt));
    double sum = 0.0;
    for (int i = -m; i <= m; ++i) {
        double w = (i == -m || i == m) ? 0.5 : 1.0;
        sum += w * k.value(i * dt);
    }
    return sum * dt;
}

double kernel_half_mass(const Kernel& k, double dt, double range) {
    const int m = static_cast<int>(std::lround(range / dt));
    double sum = 0.0;
    for (int i = 0; i <= m; ++i) {
        double w = (i == 0 || i == m) ? 0.5 : 1.0;
        sum += w * k.value(i * dt);
    }
    return sum * dt;
}

double NoisePath::total() const {
    double b = 0.0;
    for (double x : increments) b += x;
    return b;
}

NoisePath brownian_path(std::uint64_t seed, int steps, double dt) {
    if (steps < 1 || !(dt > 0.0)) throw Error("path grid needs positive width and count");
    NoisePath p;
    p.seed = seed;
    p.dt = dt;
    p.increments.resize(static_cast<std::size_t>(steps));
    CounterRng rng(seed);
    const double root = std::sqrt(dt);
    for (int j = 0; j < steps; ++j)
        p.increments[static_cast<std::size_t>(j)] = root * rng.gaussian(static_cast<std::uint64_t>(j));
    return p;
}

NoisePath smooth_path(const NoisePath& path, const Kernel& kernel) {
    if (path.steps() < 1) throw Error("cannot smooth an empty path");
    if (kernel.lambda < 5.0 * path.dt)
        throw GridTooCoarse("kernel width " + std::to_string(kernel.lambda) +
                            " is unresolved at spacing " + std::to_string(path.dt));
    const std::size_t n = path.increments.size();
    const double decay = std::exp(-path.dt / kernel.lambda);

    // forward pass: F_i = sum_{j <= i} decay^{i-j} dB_j
    std::vector<double> forward(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc = decay * acc + path.increments[i];
        forward[i] = acc;
    }
    // backward pass: B_i = sum_{j > i} decay^{j-i} dB_j
    NoisePath out = path;
    out.smoothed.resize(n);
    acc = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        out.smoothed[i] = (forward[i] + acc) / (2.0 * kernel.lambda);
        acc = decay * (acc + path.increments[i]);
    }
    return out;
}

Mat integrate_colored(const Mat& v, const Mat& h, const NoisePath& smoothed, const Kernel& kernel,
                      double dt_ode) {
    require_selfadjoint(v, "the coupling");
    require_selfadjoint(h, "the Hamiltonian");
    if (v.rows() != h.rows()) throw DimensionMismatch("coupling and Hamiltonian sizes differ");
    if (smoothed.smoothed.empty()) throw Error("the path must be smoothed first");
    if (dt_ode > kernel.lambda / 10.0)
        throw StepTooLarge("ode step " + std::to_string(dt_ode) + " exceeds lambda/10");

    const double t_final = smoothed.horizon();
    const int n_ode = tiled_steps(t_final, dt_ode, "the ode step");
    const std::size_t n_grid = smoothed.smoothed.size();
    const int d = static_cast<int>(v.rows());

    Mat u = Mat::Identity(d, d);
    for (int k = 0; k < n_ode; ++k) {
        const double t_mid = (k + 0.5) * dt_ode;
        const double pos = t_mid / smoothed.dt;
        std::size_t idx = static_cast<std::size_t>(pos);
        if (idx >= n_grid) idx = n_grid - 1;
        const double frac = pos - static_cast<double>(idx);
        const std::size_t nxt = idx + 1 < n_grid ? idx + 1 : n_grid - 1;
        const double dw = (1.0 - frac) * smoothed.smoothed[idx] + frac * smoothed.smoothed[nxt];
        u = unitary_exp(dw * v + h, dt_ode) * u;
    }
    return u;
}

Mat stratonovich_reference(const Mat& v, const Mat& h, const NoisePath& path) {
    require_selfadjoint(v, "the coupling");
    require_selfadjoint(h, "the Hamiltonian");
    if (v.rows() != h.rows()) throw DimensionMismatch("coupling and Hamiltonian sizes differ");
    const int d = static_cast<int>(v.rows());
    const Mat drift = Mat::Identity(d, d) - (0.5 * v * v + iu * h) * path.dt;
    Mat u = Mat::Identity(d, d);
    for (double db : path.increments) u = (drift - iu * db * v) * u;
    if (!all_finite(u)) throw NormTooLarge("reference solution is not finite");
    return u;
}

WzResult wz_convergence(const Mat& v, const Mat& h, double t_final,
                        const std::vector<double>& lambda_list, int n_seeds,
                        std::uint64_t seed_base, double dt_path, double dt_ode) {
    require_selfadjoint(v, "the coupling");
    require_selfadjoint(h, "the Hamiltonian");
    if (lambda_list.size() < 2) throw Error("sweep needs at least two kernel widths");
    for (std::size_t i = 1; i < lambda_list.size(); ++i)
        if (!(lambda_list[i] < lambda_list[i - 1])) throw Error("kernel widths must decrease");
    if (n_seeds < 1) throw Error("sweep needs at least one seed");
    const double min_lambda = lambda_list.back();
    if (!(min_lambda > 0.0)) throw Error("kernel widths must be positive");
    if (dt_path > min_lambda * min_lambda / 10.0)
        throw GridTooCoarse("path spacing must be at most min(lambda)^2/10");
    if (dt_ode > min_lambda / 10.0) throw StepTooLarge("ode step must be at most min(lambda)/10");

    const int steps = tiled_steps(t_final, dt_path, "the path spacing");
    const std::size_t n_l = lambda_list.size();
    const std::size_t n_s = static_cast<std::size_t>(n_seeds);

    // shared paths and references: common random numbers across widths
    std::vector<NoisePath> paths(n_s);
    std::vector<Mat> refs(n_s);
    parallel_for(n_s, [&](std::size_t s) {
        paths[s] = brownian_path(seed_base + s, steps, dt_path);
        refs[s] = stratonovich_reference(v, h, paths[s]);
    });

    std::vector<double> errs(n_l * n_s);
    parallel_for(n_l * n_s, [&](std::size_t idx) {
        const std::size_t li = idx / n_s;
        const std::size_t si = idx % n_s;
        Kernel kernel(lambda_list[li]);
        NoisePath sm = smooth_path(paths[si], kernel);
        Mat u = integrate_colored(v, h, sm, kernel, dt_ode);
        errs[idx] = op_norm(u - refs[si]);
    });

    WzResult out;
    out.rows.resize(n_l);
    std::vector<double> means(n_l);
    for (std::size_t li = 0; li < n_l; ++li) {
        double sum = 0.0, worst = 0.0;
        for (std::size_t si = 0; si < n_s; ++si) {
            const double e = errs[li * n_s + si];
            sum += e;
            worst = std::max(worst, e);
        }
        out.rows[li] = {lambda_list[li], sum / static_cast<double>(n_s), worst, n_seeds};
        means[li] = out.rows[li].mean_err;
    }
    out.converging = ratios_converging(means, 0.85);
    return out;
}

} // namespace qstoch
