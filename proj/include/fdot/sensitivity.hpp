#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "fdot/forward.hpp"
#include "fdot/types.hpp"

// Analytic Jacobians of the cuboid model, identifiability diagnostics
// (determinant condition, F-completeness, rank, design comparison) and
// numerical verification of the small-time expansions.

namespace fdot {

using Grad7 = std::array<double, 7>;

// Measurement design: per-pair gated time points, strictly increasing.
struct MeasurementDesign {
    struct Row {
        SDPair pair;
        std::vector<double> times;
    };
    std::vector<Row> rows;

    std::size_t total_gates() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += r.times.size();
        return n;
    }
    void validate() const;
};

// The seven analytic partials d u~_m / d(a1,b1,a2,b2,a3,b3,P) at one (pair, t).
Grad7 cuboid_gradient(const OpticalMedium& m, const Fluorophore& fluor, const CuboidTarget& target,
                      const SDPair& pair, double t, CuboidQuad quad = {});

// Stacked gradient rows in design order; one row per (pair, time).
Eigen::MatrixXd sensitivity_matrix(const OpticalMedium& m, const Fluorophore& fluor,
                                   const CuboidTarget& target, const MeasurementDesign& design,
                                   CuboidQuad quad = {});

// Singular values above rel_tol * sigma_max count toward the rank.
int numerical_rank(const Eigen::MatrixXd& J, double rel_tol = 1e-10);

// Determinant in scaled form: value() may underflow to zero for deep targets
// at small t while sign/log_abs stay meaningful.
struct ScaledDet {
    int sign = 0;             // -1, 0, +1
    double log_abs = -std::numeric_limits<double>::infinity();
    double log_col_scale = 0.0;  // sum of the log column scales factored out
    double normalized = 0.0;     // det of the column-max-normalized matrix

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

// det of the d x d matrix of partials: row per pair, column per parameter in
// `subset` (indices into the 7-vector). Requires |pairs| == |subset|.
ScaledDet determinant_condition(const OpticalMedium& m, const Fluorophore& fluor,
                                const CuboidTarget& target, const std::vector<SDPair>& pairs,
                                double t, const std::vector<int>& subset, CuboidQuad quad = {});

// Axis-aligned box in (a1,b1,a2,b2,a3,b3,P) space; degenerate axes allowed.
struct ParamBox {
    std::array<double, 7> lo{}, hi{};
};

struct FCompleteness {
    bool complete = false;
    double tol = 0.0;
    struct Sample {
        std::array<double, 7> params{};
        double best_normalized_det = 0.0;
        double best_time = 0.0;
        bool ok = false;
    };
    std::vector<Sample> samples;
};

// Lattice scan of the determinant condition over `region`: a sample passes if
// some design time gives |normalized det| above tol; the design is declared
// F-complete on the lattice iff every sample passes. The design must carry
// exactly as many pairs as `subset` has entries (default: all 7 parameters).
FCompleteness f_complete_scan(const OpticalMedium& m, const Fluorophore& fluor,
                              const ParamBox& region, const MeasurementDesign& design,
                              int grid_density, std::vector<int> subset = {0, 1, 2, 3, 4, 5, 6},
                              double tol = 1e-10, CuboidQuad quad = {});

enum class DesignOrder { Better, Worse, Incomparable };

// Loewner comparison of F'^T F' Gram matrices; strict positive definiteness
// of the difference up to a 1e-12 trace-scale floor.
DesignOrder compare_designs(const OpticalMedium& m, const Fluorophore& fluor,
                            const CuboidTarget& target, const MeasurementDesign& design1,
                            const MeasurementDesign& design2, CuboidQuad quad = {});

// Truncated small-t expansion of I(t) = int_0^t (s(t-s))^{-alpha}
// exp(-k t/(s(t-s))) f(t,s) ds. Terms are grouped by their relative order in
// t: the (j,m) term (2j-th derivative of f at s=t/2, m-th Watson correction)
// is O(t^{3j+m}) relative to the leading one; all terms with 3j+m < order are
// kept. Requires k > 0 and alpha < 1.
double watson_expansion(double k, double alpha, const std::function<double(double, double)>& f,
                        double t, int order);

// Dominant small-t terms of the seven partials. Valid when, at s = t/2, the
// sweep midpoint lies strictly below both lateral slabs (a_i - mid_i > 0) and
// |b_i - mid_i| > |a_i - mid_i| (the ordering condition); configurations that
// straddle or invert the ordering are rejected. The b3 term shares the a3
// term's Laplace width so that the (a3, b3, P) columns are exactly parallel
// across pairs.
Grad7 asymptotic_gradient(const OpticalMedium& m, const Fluorophore& fluor,
                          const CuboidTarget& target, const SDPair& pair, double t);

// Determinant of the 5x5 theta matrix with rows
// [th1^6, th1 (1-th1)^5, th2^6, th2 (1-th2)^5, 1] and the product
// prod (th_l1 th_l2)^{-1} prefactor. Rejects theta = 0 (prefactor pole).
double theta_matrix_determinant(const std::array<std::array<double, 2>, 5>& thetas);

}  // namespace fdot
