#include "qstoch/toyfock.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "qstoch/errors.hpp"
#include "qstoch/itoalg.hpp"
#include "qstoch/parallel.hpp"
#include "qstoch/tolerances.hpp"

namespace qstoch {

namespace {

// classical 4th-order step for a frozen coefficient: I + hA + ... + (hA)^4/24
Mat rk4_step_matrix(const Mat& a, double h) {
    const int d = static_cast<int>(a.rows());
    Mat ha = h * a;
    Mat step = Mat::Identity(d, d) + ha;
    Mat term = 0.5 * (ha * ha);
    step += term;
    term = (term * ha) / 3.0;
    step += term;
    term = (term * ha) / 4.0;
    step += term;
    return step;
}

Mat matrix_power(Mat base, int exponent) {
    const int d = static_cast<int>(base.rows());
    Mat out = Mat::Identity(d, d);
    while (exponent > 0) {
        if (exponent & 1) out = out * base;
        base = base * base;
        exponent >>= 1;
    }
    return out;
}

Mat frozen_coefficient(const CoefficientBlock& g, cx f_sample, cx g_sample) {
    return -iu * (g.block(0, 0) + std::conj(f_sample) * g.block(1, 0) +
                  g_sample * g.block(0, 1) + std::conj(f_sample) * g_sample * g.block(1, 1));
}

Mat propagate(const CoefficientBlock& g, const TestFunctionPair& tf, double dt_slot,
              int steps_per_slot) {
    const int d = g.dim();
    const double h = dt_slot / steps_per_slot;
    Mat m = Mat::Identity(d, d);
    Mat slot_map;
    bool have_prev = false;
    cx prev_f, prev_g;
    for (int j = 0; j < tf.slots(); ++j) {
        if (!have_prev || tf.f[j] != prev_f || tf.g[j] != prev_g) {
            slot_map = matrix_power(rk4_step_matrix(frozen_coefficient(g, tf.f[j], tf.g[j]), h),
                                    steps_per_slot);
            prev_f = tf.f[j];
            prev_g = tf.g[j];
            have_prev = true;
        }
        m = slot_map * m;
    }
    return m;
}

Mat contract_slot(const Mat& v, int d, double dt, cx f_sample, cx g_sample) {
    const double root = std::sqrt(dt);
    const cx chi[2] = {cx(1.0, 0.0), root * f_sample}; // bra side, conjugated below
    const cx phi[2] = {cx(1.0, 0.0), root * g_sample};
    Mat t(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            cx acc = 0.0;
            for (int s = 0; s < 2; ++s)
                for (int sp = 0; sp < 2; ++sp)
                    acc += std::conj(chi[s]) * v(r * 2 + s, c * 2 + sp) * phi[sp];
            t(r, c) = acc;
        }
    return t;
}

bool errors_converging(const std::vector<double>& errs, double floor_abs) {
    if (errs.size() < 4) return false;
    for (std::size_t i = errs.size() - 3; i < errs.size(); ++i) {
        if (errs[i] <= floor_abs) continue;
        if (!(errs[i] < 0.75 * errs[i - 1])) return false;
    }
    return true;
}

} // namespace

SlotIncrements slot_increments(double dt) {
    if (!(dt > 0.0)) throw Error("slot width must be positive");
    const double root = std::sqrt(dt);
    SlotIncrements inc;
    inc.creation = root * sigma_plus();
    inc.annihilation = root * sigma_minus();
    inc.gauge = sigma_plus() * sigma_minus();
    inc.time = dt * Mat::Identity(2, 2);
    return inc;
}

TestFunctionPair TestFunctionPair::vacuum(int slots) { return constant(0.0, 0.0, slots); }

TestFunctionPair TestFunctionPair::constant(cx fval, cx gval, int slots) {
    if (slots < 1) throw Error("slot count must be positive");
    TestFunctionPair tf;
    tf.f.assign(static_cast<std::size_t>(slots), fval);
    tf.g.assign(static_cast<std::size_t>(slots), gval);
    return tf;
}

TestFunctionPair TestFunctionPair::refined(int factor) const {
    if (factor < 1) throw Error("refinement factor must be at least 1");
    TestFunctionPair out;
    out.f.reserve(f.size() * static_cast<std::size_t>(factor));
    out.g.reserve(g.size() * static_cast<std::size_t>(factor));
    for (std::size_t j = 0; j < f.size(); ++j)
        for (int r = 0; r < factor; ++r) {
            out.f.push_back(f[j]);
            out.g.push_back(g[j]);
        }
    return out;
}

SlotModel::SlotModel(CoefficientBlock c, SlotScheme s, double dt_slot, int slots)
    : coeffs(std::move(c)), scheme(s), dt(dt_slot), n_slots(slots) {
    if (coeffs.channels() != 1)
        throw DimensionMismatch("slot simulator supports exactly one channel");
    if (!(dt > 0.0) || n_slots < 1) throw Error("slot grid needs positive width and count");
    if (!coeffs.finite()) throw NormTooLarge("slot coefficients must be finite");
}

Mat slot_unitary(const SlotModel& model) {
    SlotIncrements inc = slot_increments(model.dt);
    const CoefficientBlock& c = model.coeffs;
    Mat x = kron(c.block(0, 0), inc.time) + kron(c.block(1, 0), inc.creation) +
            kron(c.block(0, 1), inc.annihilation) + kron(c.block(1, 1), inc.gauge);
    if (model.scheme == SlotScheme::ItoEuler)
        return Mat::Identity(x.rows(), x.cols()) - iu * x;
    return mat_exp(-iu * x);
}

Mat transfer_step(const SlotModel& model, cx f_sample, cx g_sample) {
    return contract_slot(slot_unitary(model), model.dim(), model.dt, f_sample, g_sample);
}

cx transfer_matrix_element(const SlotModel& model, const TestFunctionPair& tf, const Vec& u,
                           const Vec& v, std::vector<double>* running_norms) {
    const int d = model.dim();
    if (tf.slots() != model.n_slots)
        throw DimensionMismatch("test function grid does not match the slot count");
    if (static_cast<int>(tf.g.size()) != tf.slots())
        throw DimensionMismatch("test function pair has uneven sample counts");
    if (u.size() != d || v.size() != d)
        throw DimensionMismatch("boundary vectors do not match the system dimension");

    const Mat vstep = slot_unitary(model);
    if (running_norms) {
        running_norms->clear();
        running_norms->reserve(static_cast<std::size_t>(model.n_slots));
    }
    Mat m = Mat::Identity(d, d);
    Mat t;
    bool have_prev = false;
    cx prev_f, prev_g;
    for (int j = 0; j < model.n_slots; ++j) {
        if (!have_prev || tf.f[j] != prev_f || tf.g[j] != prev_g) {
            t = contract_slot(vstep, d, model.dt, tf.f[j], tf.g[j]);
            prev_f = tf.f[j];
            prev_g = tf.g[j];
            have_prev = true;
        }
        m = t * m;
        if (running_norms) running_norms->push_back(op_norm(m));
    }
    if (!all_finite(m)) throw NormTooLarge("transfer product is not finite");
    return u.dot(m * v);
}

OracleResult oracle_matrix_element(const CoefficientBlock& g, const TestFunctionPair& tf,
                                   const Vec& u, const Vec& v, double t_final, int ode_steps) {
    const int d = g.dim();
    if (g.channels() != 1) throw DimensionMismatch("the oracle supports exactly one channel");
    if (tf.slots() < 1 || static_cast<int>(tf.g.size()) != tf.slots())
        throw DimensionMismatch("test function pair has uneven sample counts");
    if (u.size() != d || v.size() != d)
        throw DimensionMismatch("boundary vectors do not match the system dimension");
    if (!(t_final > 0.0)) throw Error("horizon must be positive");

    const int slots = tf.slots();
    const double dt_slot = t_final / slots;
    int per_slot = ode_steps / slots + (ode_steps % slots != 0 ? 1 : 0);
    if (per_slot < 1) per_slot = 1;

    Mat coarse = propagate(g, tf, dt_slot, per_slot);
    Mat fine = propagate(g, tf, dt_slot, 2 * per_slot);
    double scale = std::max(1.0, fine.norm());
    double estimate = (coarse - fine).norm() / 15.0; // 4th-order Richardson factor
    for (int rounds = 0; estimate >= 1e-10 * scale && rounds < 8; ++rounds) {
        per_slot *= 2;
        coarse = fine;
        fine = propagate(g, tf, dt_slot, 2 * per_slot);
        scale = std::max(1.0, fine.norm());
        estimate = (coarse - fine).norm() / 15.0;
    }
    if (!(estimate < 1e-10 * scale) || !all_finite(fine))
        throw OdeNotConverged("step-doubled runs disagree, estimate " + std::to_string(estimate));

    cx phase = 0.0;
    for (int j = 0; j < slots; ++j) phase += std::conj(tf.f[j]) * tf.g[j];
    phase *= dt_slot;

    OracleResult out;
    out.propagator = fine;
    out.phase_exponent = phase;
    out.steps_per_slot = 2 * per_slot;
    out.error_estimate = estimate;
    out.value = u.dot(fine * v) * std::exp(phase);
    return out;
}

CoefficientBlock ed_limit_coefficients(const CoefficientBlock& e) {
    return exp_generator(e.scaled(-iu)).scaled(iu);
}

SweepResult convergence_sweep(const CoefficientBlock& e, const TestFunctionPair& tf_base,
                              const Vec& u, const Vec& v, double t_final,
                              const std::vector<double>& dt_list, int oracle_steps) {
    if (!check_strat_selfadjoint(e).passed)
        throw NotSelfAdjoint("the slot-exponential scheme needs a self-adjoint exponent table");
    if (dt_list.size() < 2) throw Error("sweep needs at least two slot widths");
    for (std::size_t i = 1; i < dt_list.size(); ++i)
        if (!(dt_list[i] < dt_list[i - 1])) throw Error("slot widths must decrease");

    const CoefficientBlock g_sd = strat_to_ito(e, GaugeParameter::symmetric());
    const CoefficientBlock g_ed = ed_limit_coefficients(e);

    SweepResult out;
    out.target_ito = oracle_matrix_element(g_sd, tf_base, u, v, t_final, oracle_steps).value;
    out.target_sd = out.target_ito;
    out.target_ed = oracle_matrix_element(g_ed, tf_base, u, v, t_final, oracle_steps).value;

    const int base = tf_base.slots();
    out.rows.assign(dt_list.size(), SweepRow{});
    parallel_for(dt_list.size(), [&](std::size_t i) {
        const double dt = dt_list[i];
        const int slots = static_cast<int>(std::lround(t_final / dt));
        if (slots < 1 || std::abs(slots * dt - t_final) > 1e-9 * t_final)
            throw DimensionMismatch("slot width does not tile the horizon");
        if (slots % base != 0)
            throw DimensionMismatch("slot grid does not refine the test function grid");
        const TestFunctionPair tf = tf_base.refined(slots / base);
        SweepRow row;
        row.dt = dt;
        row.slots = slots;
        row.value_ito =
            transfer_matrix_element(SlotModel(g_sd, SlotScheme::ItoEuler, dt, slots), tf, u, v);
        row.value_exp =
            transfer_matrix_element(SlotModel(e, SlotScheme::SlotExp, dt, slots), tf, u, v);
        row.err_ito = std::abs(row.value_ito - out.target_ito);
        row.err_ed = std::abs(row.value_exp - out.target_ed);
        row.err_sd = std::abs(row.value_exp - out.target_sd);
        out.rows[i] = row;
    });

    auto column = [&](double SweepRow::*field) {
        std::vector<double> errs;
        errs.reserve(out.rows.size());
        for (const SweepRow& r : out.rows) errs.push_back(r.*field);
        return errs;
    };
    out.ito_converging = errors_converging(column(&SweepRow::err_ito),
                                           1e-12 * std::max(1.0, std::abs(out.target_ito)));
    out.ed_converging = errors_converging(column(&SweepRow::err_ed),
                                          1e-12 * std::max(1.0, std::abs(out.target_ed)));
    out.sd_converging = errors_converging(column(&SweepRow::err_sd),
                                          1e-12 * std::max(1.0, std::abs(out.target_sd)));
    return out;
}

} // namespace qstoch
