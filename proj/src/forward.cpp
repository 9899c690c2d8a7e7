#include "fdot/forward.hpp"

#include <cmath>
#include <random>

#include "fdot/kernels.hpp"
#include "fdot/parallel.hpp"
#include "fdot/quadrature.hpp"
#include "fdot/special.hpp"

namespace fdot {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955125739;

void require_zero_lifetime(const Fluorophore& fluor, const char* op) {
    if (fluor.tau != 0.0)
        throw std::invalid_argument(std::string(op) +
                                    ": zero-lifetime model; apply lifetime via irf_with_lifetime");
}

void require_model_grid(const TimeGrid& grid, const char* op) {
    if (!(grid.t0 >= grid.dt))
        throw std::invalid_argument(std::string(op) + ": model grid needs t0 >= dt");
}

// Prefactor C(x_d1,x_s1,x_d2,x_s2,t) of the cuboid factorization. Note the
// single power of D: the printed constant is dimensionally inconsistent and
// disagrees with the volume-integral form the factorization was derived from.
double cuboid_prefactor(const OpticalMedium& m, double c_f, const SDPair& pair, double t) {
    const double lat2 = lateral_dist2(pair.detector, pair.source);
    return c_f / (64.0 * M_PI * M_PI * m.D * t)
         * std::exp(-lat2 / (4.0 * m.D * t) - m.mu_A * t);
}

struct CuboidAccum {
    double value = 0.0;
    std::array<double, 7> grad{};
};

// One pass over the outer Chebyshev nodes; gradients optional.
CuboidAccum cuboid_accumulate(const OpticalMedium& m, const CuboidTarget& g, const SDPair& pair,
                              double t, const CuboidQuad& quad, bool with_grad) {
    const auto& su = chebyshev_nodes(quad.outer);
    const auto& gl = gauss_legendre(quad.depth);
    const double ymid = 0.5 * (g.a3 + g.b3), yhal = 0.5 * (g.b3 - g.a3);

    CuboidAccum acc;
    for (double u : su) {
        const double s = 0.5 * t * (1.0 + u);
        const double ts = t - s;
        const double lam = std::sqrt(t / (4.0 * m.D * ts * s));
        const double c1 = (s * pair.detector.x1 + ts * pair.source.x1) / t;
        const double c2 = (s * pair.detector.x2 + ts * pair.source.x2) / t;
        const double A1 = lam * (g.a1 - c1), B1 = lam * (g.b1 - c1);
        const double A2 = lam * (g.a2 - c2), B2 = lam * (g.b2 - c2);
        const double u1 = erf_diff(A1, B1);
        const double u2 = erf_diff(A2, B2);
        double u3 = 0.0;
        for (std::size_t j = 0; j < quad.depth; ++j) {
            const double y = ymid + yhal * gl.nodes[j];
            u3 += yhal * gl.weights[j] * boundary_k3(m, y, ts) * boundary_k3(m, y, s);
        }
        acc.value += u1 * u2 * u3;
        if (!with_grad) continue;
        acc.grad[0] -= kTwoOverSqrtPi * lam * std::exp(-A1 * A1) * u2 * u3;
        acc.grad[1] += kTwoOverSqrtPi * lam * std::exp(-B1 * B1) * u2 * u3;
        acc.grad[2] -= kTwoOverSqrtPi * lam * std::exp(-A2 * A2) * u1 * u3;
        acc.grad[3] += kTwoOverSqrtPi * lam * std::exp(-B2 * B2) * u1 * u3;
        acc.grad[4] -= u1 * u2 * boundary_k3(m, g.a3, ts) * boundary_k3(m, g.a3, s);
        acc.grad[5] += u1 * u2 * boundary_k3(m, g.b3, ts) * boundary_k3(m, g.b3, s);
    }
    return acc;
}

}  // namespace

double tilde_u3(const OpticalMedium& m, double t, double s, double a3, double b3,
                CuboidQuad quad) {
    if (!(s > 0.0 && s < t)) throw std::invalid_argument("tilde_u3: require 0 < s < t");
    if (!(a3 > 0.0 && a3 <= b3)) throw std::invalid_argument("tilde_u3: require 0 < a3 <= b3");
    const auto& gl = gauss_legendre(quad.depth);
    const double ymid = 0.5 * (a3 + b3), yhal = 0.5 * (b3 - a3);
    double u3 = 0.0;
    for (std::size_t j = 0; j < quad.depth; ++j) {
        const double y = ymid + yhal * gl.nodes[j];
        u3 += yhal * gl.weights[j] * boundary_k3(m, y, t - s) * boundary_k3(m, y, s);
    }
    return u3;
}

namespace {

// Forward evaluation is total on the closure: zero-width extents mean an
// empty support and a zero signal.
bool degenerate_or_validate(const CuboidTarget& g) {
    if (!(g.a1 <= g.b1 && g.a2 <= g.b2 && 0.0 < g.a3 && g.a3 <= g.b3))
        throw std::invalid_argument("cuboid: require a1<=b1, a2<=b2, 0<a3<=b3");
    if (!(g.P >= 0.0)) throw std::invalid_argument("cuboid: require P>=0");
    return g.a1 == g.b1 || g.a2 == g.b2 || g.a3 == g.b3 || g.P == 0.0;
}

}  // namespace

double cuboid_value(const OpticalMedium& m, double c_f, const CuboidTarget& target,
                    const SDPair& pair, double t, CuboidQuad quad) {
    if (!(t > 0.0)) throw std::invalid_argument("cuboid_value: t must be > 0");
    if (degenerate_or_validate(target)) return 0.0;
    const double C = cuboid_prefactor(m, c_f, pair, t);
    const auto acc = cuboid_accumulate(m, target, pair, t, quad, false);
    return target.P * C * (M_PI / static_cast<double>(quad.outer)) * acc.value;
}

ValueGrad cuboid_value_grad(const OpticalMedium& m, double c_f, const CuboidTarget& target,
                            const SDPair& pair, double t, CuboidQuad quad) {
    if (!(t > 0.0)) throw std::invalid_argument("cuboid_value_grad: t must be > 0");
    if (!(target.a1 <= target.b1 && target.a2 <= target.b2 && 0.0 < target.a3 &&
          target.a3 <= target.b3 && target.P >= 0.0))
        throw std::invalid_argument("cuboid: require a1<=b1, a2<=b2, 0<a3<=b3, P>=0");
    const double C = cuboid_prefactor(m, c_f, pair, t);
    const auto acc = cuboid_accumulate(m, target, pair, t, quad, true);
    const double w = C * (M_PI / static_cast<double>(quad.outer));
    ValueGrad out;
    out.value = target.P * w * acc.value;
    for (int i = 0; i < 6; ++i) out.grad[i] = target.P * w * acc.grad[i];
    out.grad[6] = w * acc.value;  // dP column equals value / P by linearity
    return out;
}

TPSF cuboid_tpsf(const OpticalMedium& m, const Fluorophore& fluor, const CuboidTarget& target,
                 const SDPair& pair, const TimeGrid& grid, CuboidQuad quad) {
    require_zero_lifetime(fluor, "cuboid_tpsf");
    require_model_grid(grid, "cuboid_tpsf");
    TPSF out{pair, grid, std::vector<double>(grid.n)};
    parallel_for(grid.n, [&](std::size_t i) {
        out.values[i] = cuboid_value(m, fluor.c_f, target, pair, grid.time(i), quad);
    });
    return out;
}

namespace {

// Shared sphere/ellipsoid integrator over stretched spherical coordinates
// y = center + r (A sin(phi) cos(th), B sin(phi) sin(th), C cos(phi)).
struct VolumeGrid {
    std::vector<double> y1, y2, y3, w;
};

VolumeGrid make_volume_grid(const Point3& center, double A, double B, double C, double rmax,
                            const VolumeQuad& quad) {
    const auto& glr = gauss_legendre(quad.r);
    const auto& glp = gauss_legendre(quad.phi);
    const auto& glt = gauss_legendre(quad.theta);
    VolumeGrid vg;
    vg.y1.reserve(quad.r * quad.phi * quad.theta);
    vg.y2.reserve(vg.y1.capacity());
    vg.y3.reserve(vg.y1.capacity());
    vg.w.reserve(vg.y1.capacity());
    for (std::size_t ir = 0; ir < quad.r; ++ir) {
        const double r = 0.5 * rmax * (glr.nodes[ir] + 1.0);
        const double wr = 0.5 * rmax * glr.weights[ir] * r * r;
        for (std::size_t ip = 0; ip < quad.phi; ++ip) {
            const double phi = 0.5 * M_PI * (glp.nodes[ip] + 1.0);
            const double wp = 0.5 * M_PI * glp.weights[ip] * std::sin(phi);
            for (std::size_t it = 0; it < quad.theta; ++it) {
                const double th = M_PI * (glt.nodes[it] + 1.0);
                const double wt = M_PI * glt.weights[it];
                vg.y1.push_back(center.x1 + r * A * std::sin(phi) * std::cos(th));
                vg.y2.push_back(center.x2 + r * B * std::sin(phi) * std::sin(th));
                vg.y3.push_back(center.x3 + r * C * std::cos(phi));
                vg.w.push_back(wr * wp * wt);
            }
        }
    }
    return vg;
}

double volume_value(const OpticalMedium& m, double c_f, double P, double jacobian,
                    const VolumeGrid& vg, const SDPair& pair, double t, std::size_t ns) {
    const auto& gls = gauss_legendre(ns);
    const std::size_t npts = vg.w.size();
    double total = 0.0;
    for (std::size_t is = 0; is < ns; ++is) {
        const double s = 0.5 * t * (gls.nodes[is] + 1.0);
        const double ws = 0.5 * t * gls.weights[is];
        const double tau = t - s;
        const double pref = std::exp(-m.mu_A * t)
            / (std::pow(4.0 * M_PI * m.D * tau, 1.5) * std::pow(4.0 * M_PI * m.D * s, 1.5));
        const double i4Dtau = 1.0 / (4.0 * m.D * tau), i4Ds = 1.0 / (4.0 * m.D * s);
        double inner = 0.0;
        for (std::size_t k = 0; k < npts; ++k) {
            const double dd1 = pair.detector.x1 - vg.y1[k], dd2 = pair.detector.x2 - vg.y2[k];
            const double ds1 = vg.y1[k] - pair.source.x1, ds2 = vg.y2[k] - pair.source.x2;
            const double e = std::exp(-(dd1 * dd1 + dd2 * dd2) * i4Dtau
                                      - (ds1 * ds1 + ds2 * ds2) * i4Ds);
            if (e == 0.0) continue;
            inner += vg.w[k] * e * boundary_k3(m, vg.y3[k], tau) * boundary_k3(m, vg.y3[k], s);
        }
        total += ws * pref * inner;
    }
    return c_f * m.D * P * jacobian * total;
}

}  // namespace

double sphere_value(const OpticalMedium& m, double c_f, const SphereTarget& target,
                    const SDPair& pair, double t, VolumeQuad quad) {
    if (!(t > 0.0)) throw std::invalid_argument("sphere_value: t must be > 0");
    target.validate();
    const auto vg = make_volume_grid(target.center, 1.0, 1.0, 1.0, target.radius, quad);
    return volume_value(m, c_f, target.P, 1.0, vg, pair, t, quad.s);
}

double ellipsoid_value(const OpticalMedium& m, double c_f, const EllipsoidTarget& target,
                       const SDPair& pair, double t, VolumeQuad quad) {
    if (!(t > 0.0)) throw std::invalid_argument("ellipsoid_value: t must be > 0");
    target.validate();
    const auto vg = make_volume_grid(target.center, target.A, target.B, target.C, 1.0, quad);
    return volume_value(m, c_f, target.P, target.A * target.B * target.C, vg, pair, t, quad.s);
}

TPSF sphere_tpsf(const OpticalMedium& m, const Fluorophore& fluor, const SphereTarget& target,
                 const SDPair& pair, const TimeGrid& grid, VolumeQuad quad) {
    require_zero_lifetime(fluor, "sphere_tpsf");
    require_model_grid(grid, "sphere_tpsf");
    target.validate();
    const auto vg = make_volume_grid(target.center, 1.0, 1.0, 1.0, target.radius, quad);
    TPSF out{pair, grid, std::vector<double>(grid.n)};
    parallel_for(grid.n, [&](std::size_t i) {
        out.values[i] = volume_value(m, fluor.c_f, target.P, 1.0, vg, pair, grid.time(i), quad.s);
    });
    return out;
}

TPSF ellipsoid_tpsf(const OpticalMedium& m, const Fluorophore& fluor, const EllipsoidTarget& target,
                    const SDPair& pair, const TimeGrid& grid, VolumeQuad quad) {
    require_zero_lifetime(fluor, "ellipsoid_tpsf");
    require_model_grid(grid, "ellipsoid_tpsf");
    target.validate();
    const auto vg = make_volume_grid(target.center, target.A, target.B, target.C, 1.0, quad);
    TPSF out{pair, grid, std::vector<double>(grid.n)};
    parallel_for(grid.n, [&](std::size_t i) {
        out.values[i] = volume_value(m, fluor.c_f, target.P, target.A * target.B * target.C,
                                     vg, pair, grid.time(i), quad.s);
    });
    return out;
}

IRF irf_with_lifetime(const IRF& q, double tau) {
    if (!(tau >= 0.0)) throw std::invalid_argument("irf_with_lifetime: tau must be >= 0");
    q.validate();
    if (tau == 0.0) return q;
    IRF out{q.grid, std::vector<double>(q.values.size(), 0.0)};
    const double dt = q.grid.dt;
    const std::size_t n = q.values.size();
    for (std::size_t i = 1; i < n; ++i) {
        // trapezoid over t' in [0, i*dt] of exp(-t'/tau)/tau * q((i*dt)-t')
        double acc = 0.5 * (q.values[i] + std::exp(-(i * dt) / tau) * q.values[0]);
        for (std::size_t j = 1; j < i; ++j)
            acc += std::exp(-(j * dt) / tau) * q.values[i - j];
        out.values[i] = acc * dt / tau;
    }
    return out;
}

TPSF convolve_irf(const TPSF& model, const IRF& qtilde) {
    if (std::abs(model.grid.dt - qtilde.grid.dt) > 1e-12 * model.grid.dt)
        throw std::invalid_argument("convolve_irf: grids must share dt");
    const double dt = model.grid.dt;
    const std::size_t n = model.values.size(), nq = qtilde.values.size();
    TPSF out{model.pair, model.grid, std::vector<double>(n, 0.0)};
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        const std::size_t imax = std::min(j, nq - 1);
        for (std::size_t i = 0; i <= imax; ++i) acc += qtilde.values[i] * model.values[j - i];
        out.values[j] = acc * dt;
    }
    return out;
}

double emission_intensity(const TPSF& tpsf) {
    const std::size_t n = tpsf.values.size();
    if (n == 0) return 0.0;
    if (n == 1) return 0.0;
    double acc = 0.5 * (tpsf.values.front() + tpsf.values.back());
    for (std::size_t i = 1; i + 1 < n; ++i) acc += tpsf.values[i];
    return acc * tpsf.grid.dt;
}

namespace {

// Box-Muller on mt19937_64; fixed transform keeps seeded runs bit-identical
// across standard libraries (std::normal_distribution is not pinned down).
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    double uniform_open() {
        // (0, 1]: never feeds log() a zero
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace

MeasurementSet add_noise(const MeasurementSet& data, double delta, std::uint64_t seed) {
    if (!(delta >= 0.0)) throw std::invalid_argument("add_noise: delta must be >= 0");
    MeasurementSet out = data;
    out.delta = delta;
    out.seed = seed;
    if (delta == 0.0) return out;
    NormalSampler normal(seed);
    for (auto& e : out.entries) e.value *= 1.0 + normal() * delta;
    return out;
}

}  // namespace fdot
