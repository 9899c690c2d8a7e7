#include "fdot/inversion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "fdot/parallel.hpp"

namespace fdot {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void clamp_into(Eigen::VectorXd& x, const BoxBounds& b) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = std::min(b.upper(i), std::max(b.lower(i), x(i)));
}

Eigen::VectorXd solve_damped(const Eigen::MatrixXd& JtJ, const Eigen::VectorXd& Jtr,
                             double alpha) {
    Eigen::MatrixXd A = JtJ;
    A.diagonal().array() += alpha;
    return A.ldlt().solve(Jtr);
}

// alpha from || r - J d(alpha) || = c1 ||r|| by bisection in log-space;
// the left side increases monotonically with alpha.
double alpha_rule(const Eigen::MatrixXd& J, const Eigen::MatrixXd& JtJ,
                  const Eigen::VectorXd& Jtr, const Eigen::VectorXd& r, double c1,
                  double alpha_floor) {
    const double target = c1 * r.norm();
    const double scale = std::max(JtJ.diagonal().maxCoeff(), 1e-300);
    double lo = std::max(alpha_floor, 1e-14 * scale), hi = std::max(alpha_floor * 10.0, 1e14 * scale);
    auto lin_res = [&](double alpha) {
        const Eigen::VectorXd d = solve_damped(JtJ, Jtr, alpha);
        return (r - J * d).norm();
    };
    if (lin_res(lo) >= target) return lo;  // even the near-GN step cannot reach c1||r||
    if (lin_res(hi) <= target) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (lin_res(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi / lo < 1.0 + 1e-10) break;
    }
    return std::sqrt(lo * hi);
}

}  // namespace

BoxBounds BoxBounds::free(Eigen::Index n) {
    BoxBounds b;
    b.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    b.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    return b;
}

LMResult lm_iterate(const ModelFn& model, const Eigen::VectorXd& data, Eigen::VectorXd init,
                    const BoxBounds& bounds, const LMSettings& settings,
                    std::optional<double> discrepancy_threshold, const ProjectFn& project_extra) {
    settings.validate();
    if (bounds.lower.size() != init.size() || bounds.upper.size() != init.size())
        throw std::invalid_argument("lm_iterate: bounds dimension mismatch");
    const auto t_start = Clock::now();

    auto project = [&](Eigen::VectorXd& x) {
        if (project_extra) project_extra(x);
        clamp_into(x, bounds);
    };
    project(init);

    LMResult res;
    Eigen::VectorXd theta = init;
    Eigen::VectorXd F(data.size());
    Eigen::MatrixXd J(data.size(), theta.size());
    model(theta, F, J);
    res.n_evals = 1;
    Eigen::VectorXd r = data - F;
    if (!r.allFinite()) throw std::runtime_error("lm_iterate: non-finite residual at the initial guess");
    double ssr = r.squaredNorm();
    res.residual_history.push_back(std::sqrt(ssr));

    const double data_norm = data.norm();
    auto finish = [&](const char* reason) {
        res.params = theta;
        res.err = data_norm > 0.0 ? std::sqrt(ssr) / data_norm : std::sqrt(ssr);
        res.stop_reason = reason;
        res.seconds = seconds_since(t_start);
        return res;
    };

    if (discrepancy_threshold && std::sqrt(ssr) <= *discrepancy_threshold)
        return finish("discrepancy");

    Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd Jtr = J.transpose() * r;
    double alpha = 1e-3 * std::max(JtJ.diagonal().maxCoeff(), 1e-300);

    for (int it = 0; it < settings.max_iter; ++it) {
        res.iterations = it + 1;
        if (settings.damping == LMSettings::Damping::AlphaRule)
            alpha = alpha_rule(J, JtJ, Jtr, r, settings.c1, alpha / 1e6);
        const Eigen::VectorXd step = solve_damped(JtJ, Jtr, alpha);
        if (!step.allFinite()) return finish("singular");
        if (step.norm() < settings.min_step) return finish("min_step");

        Eigen::VectorXd cand = theta + step;
        project(cand);
        Eigen::VectorXd Fc(data.size());
        Eigen::MatrixXd Jc(data.size(), theta.size());
        model(cand, Fc, Jc);
        ++res.n_evals;
        const Eigen::VectorXd rc = data - Fc;
        if (!rc.allFinite()) throw std::runtime_error("lm_iterate: non-finite residual during iteration");
        const double ssrc = rc.squaredNorm();

        if (ssrc < ssr) {
            const double reduction = (ssr - ssrc) / ssr;
            theta = cand;
            F = Fc;
            J = Jc;
            r = rc;
            ssr = ssrc;
            JtJ = J.transpose() * J;
            Jtr = J.transpose() * r;
            alpha = std::max(alpha / settings.nu, 1e-300);
            ++res.accepted;
            res.residual_history.push_back(std::sqrt(ssr));
            if (discrepancy_threshold && std::sqrt(ssr) <= *discrepancy_threshold)
                return finish("discrepancy");
            if (reduction < settings.min_residual_reduction) return finish("residual_reduction");
        } else {
            alpha *= settings.nu;
            if (alpha > 1e250) return finish("stalled");
        }
    }
    return finish("max_iter");
}

GammaRegion step1_prior(const IntensityTable& intensities, const HolderLayout& layout) {
    layout.validate();
    if (intensities.per_holder.size() != layout.centers.size())
        throw std::invalid_argument("step1_prior: one intensity row per holder required");
    if (layout.centers.size() < 2)
        throw std::invalid_argument("step1_prior: need at least 2 holder positions");

    const int s_axis = layout.source_axis();
    const int d_axis = 1 - s_axis;
    auto coord = [](const BoundaryPoint& p, int axis) { return axis == 0 ? p.x1 : p.x2; };

    // quadrant bounds collected per axis
    std::array<std::optional<double>, 2> lower, upper;
    bool any_untied = false;
    std::vector<BoundaryPoint> all_midpoints;
    for (std::size_t h = 0; h < layout.centers.size(); ++h) {
        const auto pairs = holder_pairs(layout, h);
        for (const auto& p : pairs)
            all_midpoints.push_back({0.5 * (p.source.x1 + p.detector.x1),
                                     0.5 * (p.source.x2 + p.detector.x2)});
        const auto& I = intensities.per_holder[h];
        std::size_t best = 0;
        for (std::size_t k = 1; k < 4; ++k)
            if (I[k] > I[best]) best = k;
        bool tied = false;
        for (std::size_t k = 0; k < 4; ++k)
            if (k != best && I[k] == I[best]) tied = true;
        if (tied) continue;
        any_untied = true;
        const std::size_t si = best / 2, di = best % 2;
        const double c_s = coord(layout.centers[h], s_axis);
        const double c_d = coord(layout.centers[h], d_axis);
        // target lies toward the winning source and detector
        if (coord(layout.source_offsets[si], s_axis) > 0.0)
            lower[s_axis] = std::max(lower[s_axis].value_or(-1e300), c_s);
        else
            upper[s_axis] = std::min(upper[s_axis].value_or(1e300), c_s);
        if (coord(layout.detector_offsets[di], d_axis) > 0.0)
            lower[d_axis] = std::max(lower[d_axis].value_or(-1e300), c_d);
        else
            upper[d_axis] = std::min(upper[d_axis].value_or(1e300), c_d);
    }

    GammaRegion g;
    if (!any_untied) {  // fully degenerate table: widest box from all midpoints
        g.x1_lo = g.x1_hi = all_midpoints.front().x1;
        g.x2_lo = g.x2_hi = all_midpoints.front().x2;
        for (const auto& p : all_midpoints) {
            g.x1_lo = std::min(g.x1_lo, p.x1);
            g.x1_hi = std::max(g.x1_hi, p.x1);
            g.x2_lo = std::min(g.x2_lo, p.x2);
            g.x2_hi = std::max(g.x2_hi, p.x2);
        }
        return g;
    }

    // frame: footprint of all sources/detectors padded by one holder pitch
    std::array<double, 2> frame_lo{1e300, 1e300}, frame_hi{-1e300, -1e300};
    for (std::size_t h = 0; h < layout.centers.size(); ++h) {
        for (const auto& p : holder_pairs(layout, h)) {
            frame_lo[0] = std::min({frame_lo[0], p.source.x1, p.detector.x1});
            frame_hi[0] = std::max({frame_hi[0], p.source.x1, p.detector.x1});
            frame_lo[1] = std::min({frame_lo[1], p.source.x2, p.detector.x2});
            frame_hi[1] = std::max({frame_hi[1], p.source.x2, p.detector.x2});
        }
    }
    for (int axis = 0; axis < 2; ++axis) {
        std::set<double> cs;
        for (const auto& c : layout.centers) cs.insert(coord(c, axis));
        double pitch = 0.0;
        if (cs.size() >= 2) {
            double prev = *cs.begin();
            for (auto it = std::next(cs.begin()); it != cs.end(); ++it) {
                pitch = std::max(pitch, *it - prev);
                prev = *it;
            }
        } else {
            pitch = std::max(std::abs(coord(layout.detector_offsets[1], 1 - s_axis)),
                             std::abs(coord(layout.source_offsets[0], s_axis)));
        }
        frame_lo[static_cast<std::size_t>(axis)] -= pitch;
        frame_hi[static_cast<std::size_t>(axis)] += pitch;
    }

    const double x1_lo = lower[0].value_or(frame_lo[0]);
    const double x1_hi = upper[0].value_or(frame_hi[0]);
    const double x2_lo = lower[1].value_or(frame_lo[1]);
    const double x2_hi = upper[1].value_or(frame_hi[1]);
    if (!(x1_lo < x1_hi && x2_lo < x2_hi))
        throw std::runtime_error("step1_prior: inconsistent intensity table (empty quadrant intersection)");
    return GammaRegion{x1_lo, x1_hi, x2_lo, x2_hi};
}

GatedCuboidModel::GatedCuboidModel(const OpticalMedium& m, double c_f, MeasurementDesign design,
                                   CuboidQuad quad)
    : medium_(m), c_f_(c_f), design_(std::move(design)), quad_(quad) {
    design_.validate();
    n_rows_ = design_.total_gates();
}

GatedCuboidModel::GatedCuboidModel(const OpticalMedium& m, double c_f, MeasurementDesign design,
                                   IRF qtilde, TimeGrid conv_grid, CuboidQuad quad)
    : medium_(m), c_f_(c_f), design_(std::move(design)), quad_(quad), qtilde_(std::move(qtilde)),
      conv_grid_(conv_grid) {
    design_.validate();
    qtilde_->validate();
    if (!(conv_grid_.t0 >= conv_grid_.dt))
        throw std::invalid_argument("GatedCuboidModel: conv grid needs t0 >= dt");
    if (std::abs(qtilde_->grid.dt - conv_grid_.dt) > 1e-12 * conv_grid_.dt)
        throw std::invalid_argument("GatedCuboidModel: q~ and conv grid must share dt");
    n_rows_ = design_.total_gates();
    gate_indices_.resize(design_.rows.size());
    for (std::size_t ri = 0; ri < design_.rows.size(); ++ri) {
        for (double t : design_.rows[ri].times) {
            const double fidx = (t - conv_grid_.t0) / conv_grid_.dt;
            const auto idx = static_cast<long>(std::llround(fidx));
            if (idx < 0 || static_cast<std::size_t>(idx) >= conv_grid_.n ||
                std::abs(fidx - static_cast<double>(idx)) > 1e-6)
                throw std::invalid_argument("GatedCuboidModel: gate time off the convolution grid");
            gate_indices_[ri].push_back(static_cast<std::size_t>(idx));
        }
    }
}

Eigen::VectorXd GatedCuboidModel::stack(const MeasurementSet& data) const {
    if (data.entries.size() != n_rows_)
        throw std::invalid_argument("GatedCuboidModel: data dimension mismatch");
    Eigen::VectorXd H(static_cast<Eigen::Index>(n_rows_));
    for (std::size_t i = 0; i < n_rows_; ++i) H(static_cast<Eigen::Index>(i)) = data.entries[i].value;
    return H;
}

void GatedCuboidModel::eval_cuboid(const Eigen::VectorXd& theta, Eigen::VectorXd& F,
                                   Eigen::MatrixXd& J) const {
    const CuboidTarget tgt{theta(0), theta(1), theta(2), theta(3), theta(4), theta(5), theta(6)};
    tgt.validate();
    F.resize(static_cast<Eigen::Index>(n_rows_));
    J.resize(static_cast<Eigen::Index>(n_rows_), 7);

    if (!qtilde_) {
        std::vector<std::pair<const SDPair*, double>> cells;
        cells.reserve(n_rows_);
        for (const auto& row : design_.rows)
            for (double t : row.times) cells.emplace_back(&row.pair, t);
        parallel_for(cells.size(), [&](std::size_t i) {
            const ValueGrad vg =
                cuboid_value_grad(medium_, c_f_, tgt, *cells[i].first, cells[i].second, quad_);
            F(static_cast<Eigen::Index>(i)) = vg.value;
            for (int c = 0; c < 7; ++c) J(static_cast<Eigen::Index>(i), c) = vg.grad[c];
        });
        return;
    }

    // detected-light path: model and gradient series on the full grid per
    // pair, convolved with q~, sampled at the gates
    std::vector<std::size_t> row_offset(design_.rows.size());
    std::size_t off = 0;
    for (std::size_t ri = 0; ri < design_.rows.size(); ++ri) {
        row_offset[ri] = off;
        off += design_.rows[ri].times.size();
    }
    parallel_for(design_.rows.size(), [&](std::size_t ri) {
        const auto& row = design_.rows[ri];
        const std::size_t jmax = *std::max_element(gate_indices_[ri].begin(), gate_indices_[ri].end());
        std::vector<std::array<double, 8>> series(jmax + 1);
        for (std::size_t j = 0; j <= jmax; ++j) {
            const ValueGrad vg =
                cuboid_value_grad(medium_, c_f_, tgt, row.pair, conv_grid_.time(j), quad_);
            series[j][0] = vg.value;
            for (int c = 0; c < 7; ++c) series[j][static_cast<std::size_t>(c + 1)] = vg.grad[c];
        }
        const auto& q = qtilde_->values;
        for (std::size_t k = 0; k < gate_indices_[ri].size(); ++k) {
            const std::size_t gj = gate_indices_[ri][k];
            std::array<double, 8> acc{};
            const std::size_t imax = std::min(gj, q.size() - 1);
            for (std::size_t i = 0; i <= imax; ++i)
                for (std::size_t c = 0; c < 8; ++c) acc[c] += q[i] * series[gj - i][c];
            const auto r = static_cast<Eigen::Index>(row_offset[ri] + k);
            F(r) = acc[0] * conv_grid_.dt;
            for (int c = 0; c < 7; ++c) J(r, c) = acc[static_cast<std::size_t>(c + 1)] * conv_grid_.dt;
        }
    });
}

void GatedCuboidModel::eval_cube(const Eigen::VectorXd& theta, Eigen::VectorXd& F,
                                 Eigen::MatrixXd& J) const {
    const CubeTarget cube{theta(0), theta(1), theta(2), theta(3), theta(4)};
    cube.validate();
    Eigen::VectorXd theta7(7);
    const CuboidTarget t7 = cube.to_cuboid();
    theta7 << t7.a1, t7.b1, t7.a2, t7.b2, t7.a3, t7.b3, t7.P;
    Eigen::MatrixXd J7;
    eval_cuboid(theta7, F, J7);
    J.resize(F.size(), 5);
    J.col(0) = J7.col(0) + J7.col(1);
    J.col(1) = J7.col(2) + J7.col(3);
    J.col(2) = J7.col(4) + J7.col(5);
    J.col(3) = 0.5 * (-J7.col(0) + J7.col(1) - J7.col(2) + J7.col(3) - J7.col(4) + J7.col(5));
    J.col(4) = J7.col(6);
}

ModelFn GatedCuboidModel::cuboid_fn() const {
    return [this](const Eigen::VectorXd& th, Eigen::VectorXd& F, Eigen::MatrixXd& J) {
        eval_cuboid(th, F, J);
    };
}

ModelFn GatedCuboidModel::cube_fn() const {
    return [this](const Eigen::VectorXd& th, Eigen::VectorXd& F, Eigen::MatrixXd& J) {
        eval_cube(th, F, J);
    };
}

namespace {

std::optional<double> discrepancy_for(const MeasurementSet& data, const Eigen::VectorXd& H,
                                      const LMSettings& s) {
    if (data.delta && *data.delta > 0.0) return s.lambda * (*data.delta) * H.norm();
    return std::nullopt;
}

}  // namespace

CubeFitResult step2_cube_fit(const MeasurementSet& data, const MeasurementDesign& design,
                             const OpticalMedium& m, const Fluorophore& fluor,
                             const GammaRegion& gamma, const std::array<double, 5>& init,
                             const StepSettings& settings, const std::optional<IRF>& qtilde,
                             const std::optional<TimeGrid>& conv_grid, CuboidQuad quad) {
    if (!gamma.contains(init[0], init[1]))
        throw std::invalid_argument("step2_cube_fit: initial (X1, X2) must lie inside Gamma");
    if (!(init[2] > 0.0 && init[2] < 30.0) || !(init[3] > 0.0 && init[3] < std::min(20.0, 2 * init[2])) ||
        !(init[4] > 0.0 && init[4] < 10.0))
        throw std::invalid_argument(
            "step2_cube_fit: initial (X3, L, Q) outside the printed initial-guess bounds");

    GatedCuboidModel model = qtilde
        ? GatedCuboidModel(m, fluor.c_f, design, *qtilde, *conv_grid, quad)
        : GatedCuboidModel(m, fluor.c_f, design, quad);
    const Eigen::VectorXd H = model.stack(data);

    BoxBounds b = BoxBounds::free(5);
    b.lower << gamma.x1_lo, gamma.x2_lo, 1e-6, 1e-6, 0.0;
    b.upper << gamma.x1_hi, gamma.x2_hi, settings.x3_hi, settings.side_cap, settings.strength_hi;
    const double side_cap = settings.side_cap;
    auto project = [side_cap](Eigen::VectorXd& x) {
        // cube must stay inside the half space: L < 2*X3
        x(2) = std::max(x(2), 1e-6);
        x(3) = std::min(x(3), std::min(side_cap, 2.0 * x(2)) - 1e-9);
    };
    Eigen::VectorXd x0(5);
    x0 << init[0], init[1], init[2], init[3], init[4];
    LMResult lm = lm_iterate(model.cube_fn(), H, x0, b, settings.lm, discrepancy_for(data, H, settings.lm),
                             project);
    CubeTarget cube{lm.params(0), lm.params(1), lm.params(2), lm.params(3), lm.params(4)};
    return CubeFitResult{cube, std::move(lm)};
}

CuboidFitResult step3_cuboid_fit(const MeasurementSet& data, const MeasurementDesign& design,
                                 const OpticalMedium& m, const Fluorophore& fluor,
                                 const CubeTarget& init_cube, const StepSettings& settings,
                                 const std::optional<IRF>& qtilde,
                                 const std::optional<TimeGrid>& conv_grid, CuboidQuad quad) {
    init_cube.validate();
    GatedCuboidModel model = qtilde
        ? GatedCuboidModel(m, fluor.c_f, design, *qtilde, *conv_grid, quad)
        : GatedCuboidModel(m, fluor.c_f, design, quad);
    const Eigen::VectorXd H = model.stack(data);

    BoxBounds b = BoxBounds::free(7);
    const double lb = settings.lateral_bound;
    b.lower << -lb, -lb, -lb, -lb, 1e-6, 1e-6, 0.0;
    b.upper << lb, lb, lb, lb, settings.depth_hi, settings.depth_hi, settings.strength_hi;
    auto project = [](Eigen::VectorXd& x) {
        // keep the parameterization valid: swap inverted extents, keep depth order
        if (x(0) > x(1)) std::swap(x(0), x(1));
        if (x(2) > x(3)) std::swap(x(2), x(3));
        if (x(4) > x(5)) std::swap(x(4), x(5));
        x(4) = std::max(x(4), 1e-6);
        x(5) = std::max(x(5), x(4) + 1e-9);
        if (x(1) <= x(0)) x(1) = x(0) + 1e-9;
        if (x(3) <= x(2)) x(3) = x(2) + 1e-9;
    };
    const CuboidTarget c0 = init_cube.to_cuboid();
    Eigen::VectorXd x0(7);
    x0 << c0.a1, c0.b1, c0.a2, c0.b2, c0.a3, c0.b3, c0.P;
    LMResult lm = lm_iterate(model.cuboid_fn(), H, x0, b, settings.lm,
                             discrepancy_for(data, H, settings.lm), project);
    CuboidTarget rec{lm.params(0), lm.params(1), lm.params(2), lm.params(3),
                     lm.params(4), lm.params(5), lm.params(6)};
    return CuboidFitResult{rec, std::move(lm)};
}

PipelineReport run_pipeline(const PipelineConfig& config, const PipelineInput& input) {
    const auto t0 = Clock::now();
    PipelineReport rep;
    try {
        rep.gamma = step1_prior(input.intensities, input.layout);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("pipeline step1: ") + e.what());
    }

    std::array<double, 5> init{};
    if (config.init_xy) {
        init[0] = (*config.init_xy)[0];
        init[1] = (*config.init_xy)[1];
    } else {
        init[0] = 0.5 * (rep.gamma.x1_lo + rep.gamma.x1_hi);
        init[1] = 0.5 * (rep.gamma.x2_lo + rep.gamma.x2_hi);
    }
    init[2] = config.init_rest[0];
    init[3] = config.init_rest[1];
    init[4] = config.init_rest[2];

    try {
        rep.step2 = step2_cube_fit(input.data, input.design, config.medium, config.fluor, rep.gamma,
                                   init, config.step, input.qtilde, input.conv_grid, config.quad);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("pipeline step2: ") + e.what());
    }
    rep.no_target = rep.step2.cube.Q < config.no_target_fraction * init[4];
    if (rep.no_target) {
        rep.err = rep.step2.lm.err;
        rep.seconds = seconds_since(t0);
        return rep;
    }

    try {
        rep.step3 = step3_cuboid_fit(input.data, input.design, config.medium, config.fluor,
                                     rep.step2.cube, config.step, input.qtilde, input.conv_grid,
                                     config.quad);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("pipeline step3: ") + e.what());
    }
    rep.err = rep.step3.lm.err;
    if (config.reference) {
        const auto& ref = *config.reference;
        const auto& p = rep.step3.lm.params;
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 7; ++i) {
            num += (p(i) - ref[static_cast<std::size_t>(i)]) * (p(i) - ref[static_cast<std::size_t>(i)]);
            den += ref[static_cast<std::size_t>(i)] * ref[static_cast<std::size_t>(i)];
        }
        rep.Err = std::sqrt(num / den);
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

}  // namespace fdot
