#include "fdot/sensitivity.hpp"

#include <cmath>

#include "fdot/parallel.hpp"

namespace fdot {

void MeasurementDesign::validate() const {
    if (rows.empty()) throw std::invalid_argument("MeasurementDesign: need at least one pair");
    for (const auto& r : rows) {
        r.pair.validate();
        if (r.times.empty())
            throw std::invalid_argument("MeasurementDesign: each pair needs at least one time");
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            if (!(r.times[i] > 0.0))
                throw std::invalid_argument("MeasurementDesign: times must be > 0");
            if (i > 0 && !(r.times[i] > r.times[i - 1]))
                throw std::invalid_argument("MeasurementDesign: times must be strictly increasing");
        }
    }
}

Grad7 cuboid_gradient(const OpticalMedium& m, const Fluorophore& fluor, const CuboidTarget& target,
                      const SDPair& pair, double t, CuboidQuad quad) {
    return cuboid_value_grad(m, fluor.c_f, target, pair, t, quad).grad;
}

Eigen::MatrixXd sensitivity_matrix(const OpticalMedium& m, const Fluorophore& fluor,
                                   const CuboidTarget& target, const MeasurementDesign& design,
                                   CuboidQuad quad) {
    design.validate();
    std::vector<std::pair<const SDPair*, double>> cells;
    for (const auto& r : design.rows)
        for (double t : r.times) cells.emplace_back(&r.pair, t);
    Eigen::MatrixXd J(static_cast<Eigen::Index>(cells.size()), 7);
    parallel_for(cells.size(), [&](std::size_t i) {
        const Grad7 g = cuboid_gradient(m, fluor, target, *cells[i].first, cells[i].second, quad);
        for (int c = 0; c < 7; ++c) J(static_cast<Eigen::Index>(i), c) = g[c];
    });
    return J;
}

int numerical_rank(const Eigen::MatrixXd& J, double rel_tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++rank;
    return rank;
}

ScaledDet determinant_condition(const OpticalMedium& m, const Fluorophore& fluor,
                                const CuboidTarget& target, const std::vector<SDPair>& pairs,
                                double t, const std::vector<int>& subset, CuboidQuad quad) {
    const std::size_t d = subset.size();
    if (pairs.size() != d)
        throw std::invalid_argument("determinant_condition: need |pairs| == |subset|");
    for (int idx : subset)
        if (idx < 0 || idx > 6)
            throw std::invalid_argument("determinant_condition: subset indices must be in [0,6]");

    // Columns are scaled to unit max-abs so the determinant of a deep target
    // at small t stays representable; the true magnitude lives in log_abs.
    Eigen::MatrixXd M(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    double log_scale = 0.0;
    for (std::size_t col = 0; col < d; ++col) {
        const Grad7 g = cuboid_gradient(m, fluor, target, pairs[col], t, quad);
        double mx = 0.0;
        for (std::size_t row = 0; row < d; ++row)
            mx = std::max(mx, std::abs(g[static_cast<std::size_t>(subset[row])]));
        ScaledDet zero;
        if (mx == 0.0) return zero;  // a vanishing column: determinant is exactly 0
        log_scale += std::log(mx);
        for (std::size_t row = 0; row < d; ++row)
            M(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                g[static_cast<std::size_t>(subset[row])] / mx;
    }
    const double det = M.partialPivLu().determinant();
    ScaledDet out;
    out.normalized = det;
    out.log_col_scale = log_scale;
    if (det == 0.0) return out;
    out.sign = det > 0.0 ? 1 : -1;
    out.log_abs = std::log(std::abs(det)) + log_scale;
    return out;
}

FCompleteness f_complete_scan(const OpticalMedium& m, const Fluorophore& fluor,
                              const ParamBox& region, const MeasurementDesign& design,
                              int grid_density, std::vector<int> subset, double tol,
                              CuboidQuad quad) {
    if (grid_density < 1) throw std::invalid_argument("f_complete_scan: grid_density must be >= 1");
    design.validate();
    for (int k = 0; k < 7; ++k) {
        if (region.lo[static_cast<std::size_t>(k)] > region.hi[static_cast<std::size_t>(k)]) {
            FCompleteness rep;  // empty region: vacuously complete
            rep.tol = tol;
            rep.complete = true;
            return rep;
        }
    }
    std::vector<SDPair> pairs;
    std::vector<double> times;
    for (const auto& r : design.rows) {
        pairs.push_back(r.pair);
        for (double t : r.times)
            if (std::find(times.begin(), times.end(), t) == times.end()) times.push_back(t);
    }
    if (pairs.size() != subset.size())
        throw std::invalid_argument("f_complete_scan: design must carry |subset| pairs");

    // lattice: degenerate axes contribute a single coordinate
    std::array<std::vector<double>, 7> axes;
    std::size_t total = 1;
    for (int k = 0; k < 7; ++k) {
        if (region.lo[k] == region.hi[k]) {
            axes[k] = {region.lo[k]};
        } else {
            for (int i = 0; i < grid_density; ++i)
                axes[k].push_back(region.lo[k] +
                                  (region.hi[k] - region.lo[k]) * i / (grid_density - 1.0));
        }
        total *= axes[k].size();
    }

    FCompleteness rep;
    rep.tol = tol;
    rep.complete = true;
    rep.samples.resize(total);
    parallel_for(total, [&](std::size_t flat) {
        std::array<double, 7> p{};
        std::size_t rem = flat;
        for (int k = 0; k < 7; ++k) {
            p[static_cast<std::size_t>(k)] = axes[k][rem % axes[k].size()];
            rem /= axes[k].size();
        }
        CuboidTarget tgt{p[0], p[1], p[2], p[3], p[4], p[5], p[6]};
        tgt.validate();
        auto& sample = rep.samples[flat];
        sample.params = p;
        for (double t : times) {
            const ScaledDet det = determinant_condition(m, fluor, tgt, pairs, t, subset, quad);
            if (std::abs(det.normalized) > std::abs(sample.best_normalized_det)) {
                sample.best_normalized_det = det.normalized;
                sample.best_time = t;
            }
        }
        sample.ok = std::abs(sample.best_normalized_det) > tol;
    });
    for (const auto& s : rep.samples)
        if (!s.ok) rep.complete = false;
    return rep;
}

DesignOrder compare_designs(const OpticalMedium& m, const Fluorophore& fluor,
                            const CuboidTarget& target, const MeasurementDesign& design1,
                            const MeasurementDesign& design2, CuboidQuad quad) {
    const Eigen::MatrixXd J1 = sensitivity_matrix(m, fluor, target, design1, quad);
    const Eigen::MatrixXd J2 = sensitivity_matrix(m, fluor, target, design2, quad);
    const Eigen::MatrixXd G = J1.transpose() * J1 - J2.transpose() * J2;
    const Eigen::MatrixXd S = 0.5 * (G + G.transpose());
    const double scale = 0.5 * ((J1.transpose() * J1).trace() + (J2.transpose() * J2).trace());
    const double tol = 1e-12 * scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (lmin > tol) return DesignOrder::Better;
    if (lmax < -tol) return DesignOrder::Worse;
    return DesignOrder::Incomparable;
}

namespace {

double generalized_binom(double r, int m) {
    double out = 1.0;
    for (int i = 0; i < m; ++i) out *= (r - i) / (i + 1.0);
    return out;
}

// 2j-th derivative of s -> f(t,s) at s = t/2 by the central difference stencil.
double even_derivative(const std::function<double(double, double)>& f, double t, int j) {
    if (j == 0) return f(t, 0.5 * t);
    const int n = 2 * j;
    const double h = 1e-3 * t;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double coeff = ((k % 2) ? -1.0 : 1.0) * generalized_binom(n, k);
        acc += coeff * f(t, 0.5 * t + (0.5 * n - k) * h);
    }
    return acc / std::pow(h, n);
}

}  // namespace

double watson_expansion(double k, double alpha, const std::function<double(double, double)>& f,
                        double t, int order) {
    if (!(k > 0.0)) throw std::invalid_argument("watson_expansion: k must be > 0");
    if (!(alpha < 1.0)) throw std::invalid_argument("watson_expansion: alpha must be < 1");
    if (order < 1) throw std::invalid_argument("watson_expansion: order must be >= 1");
    const double eta = k / t;
    double total = 0.0;
    for (int j = 0; 3 * j < order; ++j) {
        const double f2j = even_derivative(f, t, j);
        double fact2j = 1.0;
        for (int i = 2; i <= 2 * j; ++i) fact2j *= i;
        for (int mth = 0; 3 * j + mth < order; ++mth) {
            const double term = (2.0 / fact2j) * std::pow(t, 2.0 * (j - alpha) + 1.0) * f2j
                * std::pow(2.0, -2.0 * j) * std::exp(-4.0 * eta)
                * std::pow(4.0, alpha - j - 1.5)
                * generalized_binom(alpha - j - 1.5, mth) * std::pow(4.0, -mth)
                * std::tgamma(j + mth + 0.5) * std::pow(eta, -(j + mth + 0.5));
            total += term;
        }
    }
    return total;
}

Grad7 asymptotic_gradient(const OpticalMedium& m, const Fluorophore& fluor,
                          const CuboidTarget& target, const SDPair& pair, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("asymptotic_gradient: t must be > 0");
    target.validate();
    const double mid1 = 0.5 * (pair.source.x1 + pair.detector.x1);
    const double mid2 = 0.5 * (pair.source.x2 + pair.detector.x2);
    const double A1 = target.a1 - mid1, B1 = target.b1 - mid1;
    const double A2 = target.a2 - mid2, B2 = target.b2 - mid2;
    if (!(std::abs(B1) > std::abs(A1)) || !(std::abs(B2) > std::abs(A2)))
        throw std::invalid_argument("asymptotic_gradient: ordering condition |b-mid| > |a-mid| violated");
    if (!(A1 > 0.0) || !(A2 > 0.0))
        throw std::invalid_argument(
            "asymptotic_gradient: sweep midpoint must lie strictly below both lateral slabs");

    const double D = m.D, l2 = lateral_dist2(pair.detector, pair.source);
    const double a3 = target.a3, b3 = target.b3;
    const auto E = [&](double q1, double q2, double q3) {
        return std::exp(-l2 / (4.0 * D * t) - m.mu_A * t - (q1 * q1 + q2 * q2 + q3 * q3) / (D * t));
    };
    const auto W = [&](double q1, double q2, double q3) {
        const double curv = 2.0 * l2 + 8.0 * (q1 * q1 + q2 * q2 + q3 * q3);
        return std::sqrt(2.0 * M_PI * D * t / curv);
    };
    const double K0 = fluor.c_f / (8.0 * M_PI * M_PI * M_PI);
    const double W0 = W(A1, A2, a3), E0 = E(A1, A2, a3);
    Grad7 g{};
    g[0] = -target.P * K0 / (A2 * a3) * W0 * E0;
    g[1] = +target.P * K0 / (A2 * a3) * W(B1, A2, a3) * E(B1, A2, a3);
    g[2] = -target.P * K0 / (A1 * a3) * W0 * E0;
    g[3] = +target.P * K0 / (A1 * a3) * W(A1, B2, a3) * E(A1, B2, a3);
    g[4] = -target.P * K0 / (A1 * A2) * W0 * E0;
    g[5] = +target.P * K0 / (A1 * A2) * W0 * E(A1, A2, b3);
    g[6] = fluor.c_f * D * t / (16.0 * M_PI * M_PI * M_PI) / (A1 * A2 * a3) * W0 * E0;
    return g;
}

double theta_matrix_determinant(const std::array<std::array<double, 2>, 5>& thetas) {
    double pref = 1.0;
    for (const auto& row : thetas) {
        if (row[0] == 0.0 || row[1] == 0.0)
            throw std::invalid_argument("theta_matrix_determinant: theta = 0 hits the prefactor pole");
        pref /= row[0] * row[1];
    }
    Eigen::Matrix<double, 5, 5> M;
    for (int l = 0; l < 5; ++l) {
        const double t1 = thetas[static_cast<std::size_t>(l)][0];
        const double t2 = thetas[static_cast<std::size_t>(l)][1];
        M(l, 0) = std::pow(t1, 6);
        M(l, 1) = t1 * std::pow(1.0 - t1, 5);
        M(l, 2) = std::pow(t2, 6);
        M(l, 3) = t2 * std::pow(1.0 - t2, 5);
        M(l, 4) = 1.0;
    }
    return pref * M.determinant();
}

}  // namespace fdot
