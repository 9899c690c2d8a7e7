#pragma once

#include <array>
#include <cstdint>

#include "fdot/types.hpp"

// Emission forward models for cuboid, sphere and ellipsoid targets (all for
// zero-lifetime emission); lifetime and instrument response enter through
// irf_with_lifetime / convolve_irf.
//
// dt convention used by every discrete convolution in this library:
// out[j] = dt * sum_{i=0..j} kernel[i] * signal[j-i] (causal left-Riemann sum,
// kernel sampled on the lag grid i*dt). irf_with_lifetime is the one
// trapezoidal exception, matching the smooth exponential kernel.

namespace fdot {

// Quadrature orders for the cuboid path: outer Gauss-Chebyshev nodes in s
// (the 1/sqrt(s(t-s)) weight is absorbed exactly by the substitution
// s = t(1+u)/2) and Gauss-Legendre nodes for the depth integral of u~3.
struct CuboidQuad {
    std::size_t outer = 64;
    std::size_t depth = 32;
};

// Product Gauss-Legendre orders for the sphere/ellipsoid 4-fold integral.
struct VolumeQuad {
    std::size_t s = 48;
    std::size_t r = 16;
    std::size_t phi = 16;
    std::size_t theta = 32;
};

struct ValueGrad {
    double value = 0.0;
    std::array<double, 7> grad{};  // d/d(a1,b1,a2,b2,a3,b3,P)
};

// Inner depth integral u~3(t,s;a3,b3) of the cuboid factorization.
// Requires 0 < s < t and 0 < a3 <= b3.
double tilde_u3(const OpticalMedium& m, double t, double s, double a3, double b3,
                CuboidQuad quad = {});

// Zero-lifetime cuboid emission at a single (pair, time).
double cuboid_value(const OpticalMedium& m, double c_f, const CuboidTarget& target,
                    const SDPair& pair, double t, CuboidQuad quad = {});

// Value plus the seven analytic partials in one pass over the quadrature nodes.
ValueGrad cuboid_value_grad(const OpticalMedium& m, double c_f, const CuboidTarget& target,
                            const SDPair& pair, double t, CuboidQuad quad = {});

TPSF cuboid_tpsf(const OpticalMedium& m, const Fluorophore& fluor, const CuboidTarget& target,
                 const SDPair& pair, const TimeGrid& grid, CuboidQuad quad = {});

TPSF sphere_tpsf(const OpticalMedium& m, const Fluorophore& fluor, const SphereTarget& target,
                 const SDPair& pair, const TimeGrid& grid, VolumeQuad quad = {});

TPSF ellipsoid_tpsf(const OpticalMedium& m, const Fluorophore& fluor, const EllipsoidTarget& target,
                    const SDPair& pair, const TimeGrid& grid, VolumeQuad quad = {});

// Single-time variants used by peak search and data assembly.
double sphere_value(const OpticalMedium& m, double c_f, const SphereTarget& target,
                    const SDPair& pair, double t, VolumeQuad quad = {});
double ellipsoid_value(const OpticalMedium& m, double c_f, const EllipsoidTarget& target,
                       const SDPair& pair, double t, VolumeQuad quad = {});

// q~(t) = int_0^t exp(-t'/tau)/tau q(t-t') dt' by trapezoidal convolution on
// the IRF lag grid; tau = 0 returns q unchanged (the delta-kernel limit).
IRF irf_with_lifetime(const IRF& q, double tau);

// U_m = q~ * u~_m under the documented dt convention. Grids must share dt.
TPSF convolve_irf(const TPSF& model, const IRF& qtilde);

// Trapezoidal approximation of int u_m dt over the sample points of the grid.
double emission_intensity(const TPSF& tpsf);

// H^delta = H .* (1 + zeta*delta), zeta i.i.d. standard normal drawn from a
// seeded generator owned by this call (deterministic, platform-independent).
MeasurementSet add_noise(const MeasurementSet& data, double delta, std::uint64_t seed);

}  // namespace fdot
