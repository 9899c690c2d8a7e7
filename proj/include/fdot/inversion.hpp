#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

#include "fdot/measurement.hpp"
#include "fdot/sensitivity.hpp"
#include "fdot/types.hpp"

// Levenberg-Marquardt engine (multiplicative damping or the residual-matching
// alpha rule) with discrepancy stopping, plus the three-step strategy:
// intensity prior -> cube fit -> cuboid refinement.

namespace fdot {

struct LMSettings {
    int max_iter = 800;
    double min_step = 1e-20;
    double min_residual_reduction = 1e-6;  // relative SSR drop per accepted step
    double c1 = 0.8;                       // alpha-rule residual fraction
    double lambda = 1.5;                   // discrepancy safety factor, lambda*c1 > 1
    enum class Damping { AlphaRule, Multiplicative };
    Damping damping = Damping::Multiplicative;
    double nu = 10.0;                      // multiplicative damping factor

    void validate() const {
        if (!(c1 > 0.0 && c1 < 1.0)) throw std::invalid_argument("LMSettings: need 0 < c1 < 1");
        if (!(lambda * c1 > 1.0)) throw std::invalid_argument("LMSettings: need lambda*c1 > 1");
        if (max_iter < 1) throw std::invalid_argument("LMSettings: need max_iter >= 1");
        if (!(nu > 1.0)) throw std::invalid_argument("LMSettings: need nu > 1");
    }
};

struct BoxBounds {
    Eigen::VectorXd lower, upper;  // +-infinity for free parameters
    static BoxBounds free(Eigen::Index n);
};

struct LMResult {
    Eigen::VectorXd params;
    double err = 0.0;                       // ||H - F(a)|| / ||H||
    int accepted = 0;                       // accepted steps
    int iterations = 0;                     // total iterations (incl. rejected)
    int n_evals = 0;                        // model evaluations
    std::vector<double> residual_history;   // ||r|| after each accepted step
    std::string stop_reason;
    double seconds = 0.0;
};

// model(theta, F, J): fill F (model values) and J (Jacobian d F / d theta).
using ModelFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;
using ProjectFn = std::function<void(Eigen::VectorXd&)>;

// Iterates a_{k+1} = a_k + (J^T J + alpha_k I)^{-1} J^T (H - F(a_k)), steps
// projected onto `bounds` (plus `project_extra` for coupled constraints).
// Only residual-decreasing steps are accepted. Stops on: discrepancy (when
// `discrepancy_threshold` is set and ||r|| falls at or below it), max_iter,
// min_step, relative SSR reduction below min_residual_reduction, or a stall
// (damping exhausted). stop_reason names the criterion that fired.
LMResult lm_iterate(const ModelFn& model, const Eigen::VectorXd& data, Eigen::VectorXd init,
                    const BoxBounds& bounds, const LMSettings& settings,
                    std::optional<double> discrepancy_threshold = {},
                    const ProjectFn& project_extra = {});

// Boundary rectangle believed to contain the target's lateral projection.
struct GammaRegion {
    double x1_lo = 0.0, x1_hi = 0.0, x2_lo = 0.0, x2_hi = 0.0;
    bool contains(double x1, double x2) const {
        return x1 > x1_lo && x1 < x1_hi && x2 > x2_lo && x2 < x2_hi;
    }
};

// Step 1: for each holder the strongest pair points into the quadrant holding
// the target (toward that pair's source and detector); Gamma intersects those
// quadrants, closing any unbounded side at the measurement footprint extent
// padded by one holder pitch. Holders with tied maxima contribute no
// constraint; if every holder ties, Gamma falls back to the bounding box of
// all pair midpoints.
GammaRegion step1_prior(const IntensityTable& intensities, const HolderLayout& layout);

// Residual model over gated (pair, time) cells; optionally convolves the
// zero-lifetime model with q~ on `conv_grid` before sampling the gates (the
// detected-light pathway). Gate times must then lie on the grid.
class GatedCuboidModel {
public:
    GatedCuboidModel(const OpticalMedium& m, double c_f, MeasurementDesign design,
                     CuboidQuad quad = {});
    GatedCuboidModel(const OpticalMedium& m, double c_f, MeasurementDesign design, IRF qtilde,
                     TimeGrid conv_grid, CuboidQuad quad = {});

    Eigen::Index rows() const { return static_cast<Eigen::Index>(n_rows_); }
    Eigen::VectorXd stack(const MeasurementSet& data) const;  // data vector in design order

    // 7-parameter cuboid model (a1,b1,a2,b2,a3,b3,P)
    void eval_cuboid(const Eigen::VectorXd& theta, Eigen::VectorXd& F, Eigen::MatrixXd& J) const;
    // 5-parameter cube model (X1,X2,X3,L,Q), chained through the cuboid form
    void eval_cube(const Eigen::VectorXd& theta, Eigen::VectorXd& F, Eigen::MatrixXd& J) const;

    ModelFn cuboid_fn() const;
    ModelFn cube_fn() const;

private:
    OpticalMedium medium_;
    double c_f_;
    MeasurementDesign design_;
    CuboidQuad quad_;
    std::optional<IRF> qtilde_;
    TimeGrid conv_grid_;
    std::size_t n_rows_ = 0;
    std::vector<std::vector<std::size_t>> gate_indices_;  // per design row, on conv_grid
};

struct StepSettings {
    LMSettings lm;
    // iterate box for the cube fit (X1, X2 clamp to Gamma; L additionally
    // couples to min(L_cap, 2*X3) so the cube stays inside the half space)
    double x3_hi = 50.0;
    double side_cap = 40.0;
    double strength_hi = 1e9;
    double lateral_bound = 100.0;
    double depth_hi = 100.0;
};

struct CubeFitResult {
    CubeTarget cube;
    LMResult lm;
};

struct CuboidFitResult {
    CuboidTarget cuboid;
    LMResult lm;
};

// Step 2: LM over the 5 cube parameters. init = (X1,X2,X3,L,Q) with (X1,X2)
// inside gamma and (X3,L,Q) inside the printed initial-guess bounds
// 0<X3<30, 0<L<min(20, 2 X3), 0<Q<10 (those gate the init, not the iterates).
CubeFitResult step2_cube_fit(const MeasurementSet& data, const MeasurementDesign& design,
                             const OpticalMedium& m, const Fluorophore& fluor,
                             const GammaRegion& gamma, const std::array<double, 5>& init,
                             const StepSettings& settings, const std::optional<IRF>& qtilde = {},
                             const std::optional<TimeGrid>& conv_grid = {}, CuboidQuad quad = {});

// Step 3: expand the cube to the 7-vector (sun-style) and refine all 7.
CuboidFitResult step3_cuboid_fit(const MeasurementSet& data, const MeasurementDesign& design,
                                 const OpticalMedium& m, const Fluorophore& fluor,
                                 const CubeTarget& init_cube, const StepSettings& settings,
                                 const std::optional<IRF>& qtilde = {},
                                 const std::optional<TimeGrid>& conv_grid = {},
                                 CuboidQuad quad = {});

struct PipelineInput {
    MeasurementSet data;
    MeasurementDesign design;
    IntensityTable intensities;
    HolderLayout layout;
    std::optional<IRF> qtilde;       // lifetime-folded IRF for the detected-light path
    std::optional<TimeGrid> conv_grid;
};

struct PipelineConfig {
    OpticalMedium medium;
    Fluorophore fluor;
    StepSettings step;
    std::optional<std::array<double, 2>> init_xy;    // default: Gamma center
    std::array<double, 3> init_rest{4.0, 4.0, 0.1};  // (X3, L, Q)
    double no_target_fraction = 1e-6;                // vs the initial Q
    CuboidQuad quad;
    std::optional<std::array<double, 7>> reference;  // for the Err metric
};

struct PipelineReport {
    GammaRegion gamma;
    CubeFitResult step2;
    CuboidFitResult step3;
    bool no_target = false;
    double err = 0.0;                  // final relative data misfit
    std::optional<double> Err;         // relative parameter error vs reference
    double seconds = 0.0;
};

// Step 1 -> Step 2 -> Step 3 with stage-tagged failures.
PipelineReport run_pipeline(const PipelineConfig& config, const PipelineInput& input);

}  // namespace fdot
