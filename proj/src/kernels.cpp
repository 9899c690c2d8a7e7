#include "fdot/kernels.hpp"

#include <cmath>

#include "fdot/special.hpp"

namespace fdot {

double boundary_k3(const OpticalMedium& m, double y3, double tau) {
    const double fourDt = 4.0 * m.D * tau;
    const double z = (y3 + 2.0 * m.beta * m.D * tau) / std::sqrt(fourDt);
    const double bracket = 1.0 - m.beta * std::sqrt(M_PI * m.D * tau) * erfcx(z);
    return 2.0 * std::exp(-y3 * y3 / fourDt) * bracket;
}

double green_k3(const OpticalMedium& m, double x3, double y3, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("green_k3: dt must be > 0");
    if (x3 < 0.0 || y3 < 0.0) throw std::invalid_argument("green_k3: depths must be >= 0");
    const double fourDt = 4.0 * m.D * dt;
    const double sum = x3 + y3, diff = x3 - y3;
    const double zp = (sum + 2.0 * m.beta * m.D * dt) / std::sqrt(fourDt);
    return std::exp(-diff * diff / fourDt)
         + std::exp(-sum * sum / fourDt)
               * (1.0 - 2.0 * m.beta * std::sqrt(M_PI * m.D * dt) * erfcx(zp));
}

double green_kernel(const OpticalMedium& m, const Point3& x, const Point3& y, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("green_kernel: dt must be > 0");
    const double fourDt = 4.0 * m.D * dt;
    const double d1 = x.x1 - y.x1, d2 = x.x2 - y.x2;
    const double pref = std::exp(-m.mu_A * dt) / std::pow(4.0 * M_PI * m.D * dt, 1.5);
    return pref * std::exp(-(d1 * d1 + d2 * d2) / fourDt) * green_k3(m, x.x3, y.x3, dt);
}

double excitation_density(const OpticalMedium& m, const Point3& x, double t, const BoundaryPoint& xs) {
    if (!(t > 0.0)) throw std::invalid_argument("excitation_density: t must be > 0");
    if (x.x3 < 0.0) throw std::invalid_argument("excitation_density: x3 must be >= 0");
    const double fourDt = 4.0 * m.D * t;
    const double d1 = x.x1 - xs.x1, d2 = x.x2 - xs.x2;
    const double pref = m.D * std::exp(-m.mu_A * t) / std::pow(4.0 * M_PI * m.D * t, 1.5);
    return pref * std::exp(-(d1 * d1 + d2 * d2) / fourDt) * boundary_k3(m, x.x3, t);
}

}  // namespace fdot
