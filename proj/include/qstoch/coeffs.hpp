#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qstoch/linalg.hpp"
#include "qstoch/tolerances.hpp"

namespace qstoch {

// Gauge parameter kappa of the time-ordering convention. Re kappa = 1/2 is
// structural (it makes the symmetrized table self-adjointness meaningful), so
// the constructor enforces it exactly; Im kappa is free.
class GaugeParameter {
public:
    explicit GaugeParameter(cx kappa);
    static GaugeParameter symmetric() { return GaugeParameter(cx(0.5, 0.0)); }
    cx value() const { return kappa_; }
    cx conjugate() const { return std::conj(kappa_); }
    double imag_part() const { return kappa_.imag(); }

private:
    cx kappa_;
};

// Square table of (N+1) x (N+1) matrix blocks indexed 0..N. Index 0 is the
// time slot, 1..N are noise channels; block(a, b) multiplies the fundamental
// increment with a creation-side index a and annihilation-side index b.
class BlockTable {
public:
    BlockTable() = default;
    BlockTable(int block_size, int channels);

    int block_size() const { return bs_; }
    int channels() const { return nch_; }

    const Mat& block(int a, int b) const;
    Mat& block(int a, int b);

    // channel-channel corner assembled as one (N*bs) x (N*bs) matrix
    Mat channel_matrix() const;
    // blocks (a, 1..N) side by side: bs x (N*bs)
    Mat channel_row(int a) const;
    // blocks (1..N, b) stacked: (N*bs) x bs
    Mat channel_column(int b) const;
    void set_channel_matrix(const Mat& m);
    void set_channel_row(int a, const Mat& m);
    void set_channel_column(int b, const Mat& m);

    bool same_shape(const BlockTable& o) const { return bs_ == o.bs_ && nch_ == o.nch_; }
    bool finite() const;
    double max_block_norm() const; // largest Frobenius norm over blocks

protected:
    void require_index(int a, int b) const;

    int bs_ = 0;
    int nch_ = 0;
    std::vector<Mat> blocks_;
};

// Coefficient table of system operators (d x d blocks). Used both for
// generator coefficients and for quadratic-variation tables of differentials.
class CoefficientBlock : public BlockTable {
public:
    CoefficientBlock() = default;
    CoefficientBlock(int dim_system, int channels) : BlockTable(dim_system, channels) {}

    int dim() const { return block_size(); }

    // table of the adjoint differential: block (a, b) -> block(b, a)^dagger
    CoefficientBlock adjoint_table() const;
    CoefficientBlock scaled(cx factor) const;

    CoefficientBlock& operator+=(const CoefficientBlock& o);
    friend CoefficientBlock operator+(CoefficientBlock a, const CoefficientBlock& b) {
        a += b;
        return a;
    }
};

// Hudson-Parthasarathy style parameters: channel unitary w ((N d) x (N d)),
// stacked couplings k ((N d) x d), Hamiltonian h (d x d, self-adjoint).
struct HPTriple {
    Mat w;
    Mat k;
    Mat h;

    int dim() const { return static_cast<int>(h.rows()); }
    int channels() const { return dim() > 0 ? static_cast<int>(k.rows()) / dim() : 0; }
    void validate(double tol = tol_algebra) const;
};

// Outcome of a residual check; `residual_norms` maps block labels to
// Frobenius norms of the identity defect.
struct ConversionReport {
    std::string check;
    double tolerance = tol_algebra;
    double max_residual = 0.0;
    std::map<std::string, double> residual_norms;
    bool passed = false;
};

// time-ordered (Stratonovich-like) -> Ito coefficients:
//   G_ab = E_ab - i kappa E_a. (I + i kappa E11)^-1 E_.b   (channel contraction)
CoefficientBlock strat_to_ito(const CoefficientBlock& e, const GaugeParameter& kappa);

// inverse map: E_ab = G_ab + i kappa G_a. (I - i kappa G11)^-1 G_.b
CoefficientBlock ito_to_strat(const CoefficientBlock& g, const GaugeParameter& kappa);

// Self-adjointness of the exponent table: E_ab = (E_ba)^dagger blockwise.
ConversionReport check_strat_selfadjoint(const CoefficientBlock& e, double tol = tol_algebra);

// Unitarity of the Ito generator: i G_ba^dag - i G_ab + sum_j G_ja^dag G_jb = 0.
ConversionReport check_ito_unitarity(const CoefficientBlock& g, double tol = tol_algebra);

CoefficientBlock ito_from_hp(const HPTriple& hp);

// Extract (W, K, H) from a unitarity-satisfying Ito table:
//   W = I - i G11,  K = channel column of G at b = 0,  H = (G00 + G00^dag)/2.
// Verifies unitarity first and checks G01 = K^dag W as a residual.
HPTriple hp_from_ito(const CoefficientBlock& g, double tol = tol_algebra);

// (I + i kappa E11)^-1 two ways: direct solve, and the geometric series
// sum_n (-i kappa E11)^n valid for ||kappa E11|| < 1 (operator norm).
struct ResolventComparison {
    Mat direct;
    std::optional<Mat> series; // absent when the series bound fails
    double kappa_e11_norm = 0.0;
    bool series_valid = false;
    double agreement = 0.0; // Frobenius gap between routes, 0 if no series
};
ResolventComparison neumann_resolvent(const Mat& e11, const GaugeParameter& kappa);

// Series route alone; throws NormTooLarge when ||kappa E11|| >= 1.
Mat geometric_resolvent_series(const Mat& e11, const GaugeParameter& kappa);

// Sum exponent tables (the composition happens at the time-ordered level):
// E_total = sum E^(n); G_total = strat_to_ito(E_total).
struct AdditionResult {
    CoefficientBlock e_total;
    CoefficientBlock g_total;
};
AdditionResult add_generators(const std::vector<CoefficientBlock>& es, const GaugeParameter& kappa);

// Composite channel unitary for two commuting unitaries at kappa = 1/2:
//   W = Wa M^dag M^-1 Wb,  M = 3 + Wa + Wb - Wa Wb.
// Equals the route through channel_from_unitary / add_generators / hp_from_ito.
Mat composite_w(const Mat& wa, const Mat& wb, double tol = tol_algebra);

// Cayley pair linking the channel block of the exponent to the unitary:
//   W = (I - i conj(kappa) E11)(I + i kappa E11)^-1
//   E11 = i (conj(kappa) I + kappa W)^-1 (W - I)
Mat cayley_channel_unitary(const Mat& e11, const GaugeParameter& kappa);
Mat channel_from_unitary(const Mat& w, const GaugeParameter& kappa);

// --- deviation helpers -------------------------------------------------
// Variants that circulate with a different sign or a shortcut; computed only
// so reports can show how far they sit from the derived forms above.

// 00 entry of the forward map with the sign flipped to +i kappa.
Mat alt_sign_g00(const CoefficientBlock& e, const GaugeParameter& kappa);

// Shortcut Hamiltonian E00 + Im(kappa) E01 (I + i kappa E11)^-1 E10; fails to
// be self-adjoint whenever E11 != 0. The derived H comes from G00 instead.
Mat shortcut_hamiltonian(const CoefficientBlock& e, const GaugeParameter& kappa);

// Naive addition rule for channel-free couplings (all E11^(n) = 0):
// K = sum K^(n), H = sum H^(n) - Re(kappa) sum K^(n)dag K^(n), W = I.
// Compared against the general rule, which keeps cross terms K^(m)dag K^(n).
struct AdditionRuleComparison {
    HPTriple derived;
    Mat naive_k;
    Mat naive_h;
    double k_residual = 0.0;
    double h_residual = 0.0;
};
AdditionRuleComparison naive_addition_rule(const std::vector<HPTriple>& parts,
                                           const GaugeParameter& kappa);

} // namespace qstoch
