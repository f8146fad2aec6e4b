#pragma once

#include <vector>

#include "qstoch/coeffs.hpp"
#include "qstoch/linalg.hpp"

namespace qstoch {

// Discretized fundamental increments on one slot space C^2 = span{vacuum, one}.
// They satisfy the slot-level product table exactly: dA dA+ = dt (I - dLam),
// dLam^2 = dLam, dA+ dA = dt dLam.
struct SlotIncrements {
    Mat creation;     // sqrt(dt) |1><0|
    Mat annihilation; // sqrt(dt) |0><1|
    Mat gauge;        // |1><1|
    Mat time;         // dt I
};
SlotIncrements slot_increments(double dt);

enum class SlotScheme {
    ItoEuler, // V = I - i X per slot, first order, coefficients are Ito
    SlotExp   // V = exp(-i X) per slot, exactly unitary for self-adjoint tables
};

// Step test functions on [0, T]: one complex sample per slot, constant across
// the slot. f rides the bra (creation) side and always enters conjugated; g
// rides the ket (annihilation) side.
struct TestFunctionPair {
    std::vector<cx> f, g;

    int slots() const { return static_cast<int>(f.size()); }
    static TestFunctionPair vacuum(int slots);
    static TestFunctionPair constant(cx fval, cx gval, int slots);
    // the same step function on a grid `factor` times finer
    TestFunctionPair refined(int factor) const;
};

// One-channel slot simulation. `coeffs` is the Ito table for ItoEuler and the
// exponent table for SlotExp.
struct SlotModel {
    CoefficientBlock coeffs;
    SlotScheme scheme = SlotScheme::ItoEuler;
    double dt = 0.0;
    int n_slots = 0;

    SlotModel(CoefficientBlock c, SlotScheme s, double dt_slot, int slots);
    int dim() const { return coeffs.dim(); }
    double horizon() const { return dt * n_slots; }
};

// System (x) slot step operator, (2d) x (2d), basis index = sys * 2 + slot,
// with X = C00 (x) dt I + C10 (x) dA+ + C01 (x) dA + C11 (x) dLam.
Mat slot_unitary(const SlotModel& model);

// d x d partial matrix element of the step operator between the unnormalized
// exponential-vector slots (1, sqrt(dt) f) on the bra side and (1, sqrt(dt) g)
// on the ket side.
Mat transfer_step(const SlotModel& model, cx f_sample, cx g_sample);

// <u (x) e(f) | V_n ... V_1 | v (x) e(g)> as an ordered product of transfer
// steps; O(n d^3), no global 2^n state. `running_norms`, when given, receives
// the operator norm of the accumulated product after every slot.
cx transfer_matrix_element(const SlotModel& model, const TestFunctionPair& tf, const Vec& u,
                           const Vec& v, std::vector<double>* running_norms = nullptr);

// Exponential-vector reduction of the continuum equation:
//   M' = -i (G00 + conj(f) G10 + g G01 + conj(f) g G11) M,  M(0) = I,
//   value = <u, M(T) v> e^{<f,g>},  <f,g> = sum_j conj(f_j) g_j dt.
// Fixed-step 4th-order integration; the step count is rounded up to a
// multiple of the slot count so samples are constant within every step, then
// doubled until two consecutive runs agree (Richardson estimate below
// 1e-10 relative), up to a refinement cap.
struct OracleResult {
    cx value;
    Mat propagator;            // M(T)
    cx phase_exponent;         // <f,g>
    int steps_per_slot = 0;    // finest refinement used
    double error_estimate = 0.0;
};
OracleResult oracle_matrix_element(const CoefficientBlock& g, const TestFunctionPair& tf,
                                   const Vec& u, const Vec& v, double t_final, int ode_steps);

// Ito coefficients of the slot-exponential limit dU = (e^{-i dE} - 1) U,
// i.e. G = i (e^{o(-i dE)} - id) with the contracted exponential.
CoefficientBlock ed_limit_coefficients(const CoefficientBlock& e);

// Joint convergence experiment for a self-adjoint exponent table E:
//  - ItoEuler run with G = strat_to_ito(E, 1/2) against its own limit;
//  - SlotExp run with E against both candidate limits, the slot-exponential
//    one (ed) and the time-symmetric one (sd). They coincide when E11 = 0.
struct SweepRow {
    double dt = 0.0;
    int slots = 0;
    cx value_ito;
    cx value_exp;
    double err_ito = 0.0; // |value_ito - target_ito|
    double err_ed = 0.0;  // |value_exp - target_ed|
    double err_sd = 0.0;  // |value_exp - target_sd|
};
struct SweepResult {
    std::vector<SweepRow> rows; // in dt_list order
    cx target_ito, target_ed, target_sd;
    // error(dt/2) < 0.75 error(dt) over the last three halvings, with an
    // absolute floor of 1e-12 relative to the target magnitude
    bool ito_converging = false;
    bool ed_converging = false;
    bool sd_converging = false;
};
SweepResult convergence_sweep(const CoefficientBlock& e, const TestFunctionPair& tf_base,
                              const Vec& u, const Vec& v, double t_final,
                              const std::vector<double>& dt_list, int oracle_steps = 4096);

} // namespace qstoch
