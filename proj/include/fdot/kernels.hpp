#pragma once

#include "fdot/types.hpp"

// Closed-form half-space diffusion kernels with Robin boundary condition.
// Every exp(..)*erfc(..) pair is routed through erfcx so that late times
// (beta^2 D t of order 1e3 and beyond) never overflow.

namespace fdot {

// Depth factor K3(y3, 0; tau) = K3(0, y3; tau) for a boundary-touching leg.
double boundary_k3(const OpticalMedium& m, double y3, double tau);

// K3(x3, y3; dt); symmetric in (x3, y3). Rejects dt <= 0.
double green_k3(const OpticalMedium& m, double x3, double y3, double dt);

// Full 3-D Green function K(x, y; dt). Rejects dt <= 0.
double green_kernel(const OpticalMedium& m, const Point3& x, const Point3& y, double dt);

// Excitation energy density u_e(x, t; x_s) = D * K(x, (x_s, 0); t). Rejects t <= 0.
double excitation_density(const OpticalMedium& m, const Point3& x, double t, const BoundaryPoint& xs);

}  // namespace fdot
