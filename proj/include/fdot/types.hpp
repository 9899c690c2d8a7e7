#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types. Units are fixed globally: lengths in mm, times in ps,
// coefficients in 1/mm, rates in 1/ps. There is no unit-conversion layer.

namespace fdot {

struct Point3 {
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;
};

// A point on the boundary plane x3 = 0.
struct BoundaryPoint {
    double x1 = 0.0, x2 = 0.0;
};

inline double lateral_dist2(const BoundaryPoint& a, const BoundaryPoint& b) {
    const double d1 = a.x1 - b.x1, d2 = a.x2 - b.x2;
    return d1 * d1 + d2 * d2;
}

// Homogeneous background optics of the half space x3 > 0.
// D and mu_A are derived on construction and kept consistent by make().
struct OpticalMedium {
    double c;           // speed of light in the medium (mm/ps)
    double mu_s_prime;  // reduced scattering coefficient (1/mm)
    double mu_a;        // absorption coefficient (1/mm)
    double beta;        // Robin boundary parameter (1/mm)
    double D;           // diffusion coefficient c/(3 mu_s') (mm^2/ps)
    double mu_A;        // absorption rate c*mu_a (1/ps)

    static OpticalMedium make(double c, double mu_s_prime, double mu_a, double beta) {
        if (!(c > 0.0) || !(mu_s_prime > 0.0) || !(mu_a >= 0.0) || !(beta > 0.0))
            throw std::invalid_argument("OpticalMedium: require c>0, mu_s'>0, mu_a>=0, beta>0");
        OpticalMedium m{c, mu_s_prime, mu_a, beta, c / (3.0 * mu_s_prime), c * mu_a};
        return m;
    }
};

struct Fluorophore {
    double tau;    // fluorescence lifetime (ps), >= 0
    double gamma;  // quantum efficiency in (0, 1]
    double c_f;    // coupling constant c*gamma (mm/ps)

    static Fluorophore make(const OpticalMedium& medium, double tau, double gamma) {
        if (!(tau >= 0.0)) throw std::invalid_argument("Fluorophore: tau must be >= 0");
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw std::invalid_argument("Fluorophore: gamma must be in (0,1]");
        return Fluorophore{tau, gamma, medium.c * gamma};
    }
};

// Axis-aligned box support of the fluorophore, strength P.
// Parameter order everywhere: (a1, b1, a2, b2, a3, b3, P).
struct CuboidTarget {
    double a1, b1, a2, b2, a3, b3;
    double P;  // absorption strength (1/mm); arbitrary units for experimental data

    void validate() const {
        if (!(a1 < b1 && a2 < b2 && 0.0 < a3 && a3 < b3))
            throw std::invalid_argument("CuboidTarget: require a1<b1, a2<b2, 0<a3<b3");
        if (!(P >= 0.0)) throw std::invalid_argument("CuboidTarget: require P>=0");
    }
};

struct CubeTarget {
    double X1, X2, X3;  // center (mm)
    double L;           // side length (mm)
    double Q;           // absorption strength (1/mm)

    void validate() const {
        if (!(L > 0.0)) throw std::invalid_argument("CubeTarget: require L>0");
        if (!(X3 > L / 2.0)) throw std::invalid_argument("CubeTarget: cube must lie inside x3>0");
        if (!(Q >= 0.0)) throw std::invalid_argument("CubeTarget: require Q>=0");
    }

    CuboidTarget to_cuboid() const {
        return CuboidTarget{X1 - L / 2, X1 + L / 2, X2 - L / 2, X2 + L / 2,
                            X3 - L / 2, X3 + L / 2, Q};
    }
};

struct SphereTarget {
    Point3 center;
    double radius;
    double P;

    void validate() const {
        if (!(radius > 0.0)) throw std::invalid_argument("SphereTarget: require radius>0");
        if (!(center.x3 > radius))
            throw std::invalid_argument("SphereTarget: sphere must lie strictly inside x3>0");
        if (!(P >= 0.0)) throw std::invalid_argument("SphereTarget: require P>=0");
    }
};

struct EllipsoidTarget {
    Point3 center;
    double A, B, C;  // semi-axes along x1, x2, x3 (mm)
    double P;

    void validate() const {
        if (!(A > 0.0 && B > 0.0 && C > 0.0))
            throw std::invalid_argument("EllipsoidTarget: require positive semi-axes");
        if (!(center.x3 > C))
            throw std::invalid_argument("EllipsoidTarget: ellipsoid must lie strictly inside x3>0");
        if (!(P >= 0.0)) throw std::invalid_argument("EllipsoidTarget: require P>=0");
    }
};

// Uniform time grid; sample i lives at time(i) = t0 + i*dt.
// Model TPSFs use t0 >= dt (never evaluated at t=0); lag grids (IRF) use t0 = 0.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n = 1;

    static TimeGrid make(double t0, double dt, std::size_t n) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
        if (n < 1) throw std::invalid_argument("TimeGrid: n must be >= 1");
        if (!(t0 >= 0.0)) throw std::invalid_argument("TimeGrid: t0 must be >= 0");
        return TimeGrid{t0, dt, n};
    }

    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

struct SDPair {
    BoundaryPoint source;
    BoundaryPoint detector;
    std::string id;

    void validate() const {
        if (source.x1 == detector.x1 && source.x2 == detector.x2)
            throw std::invalid_argument("SDPair: source and detector must differ");
    }
};

// Time-resolved emission signal for one S-D pair.
struct TPSF {
    SDPair pair;
    TimeGrid grid;
    std::vector<double> values;
};

// Instrument response function sampled on a lag grid: values[i] at lag grid.time(i),
// with grid.t0 = 0 so bin 0 sits at zero lag.
struct IRF {
    TimeGrid grid;
    std::vector<double> values;

    void validate() const {
        if (values.size() != grid.n) throw std::invalid_argument("IRF: size mismatch");
        double total = 0.0;
        for (double v : values) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("IRF: values must be finite and >= 0");
            total += v;
        }
        if (!(total > 0.0)) throw std::invalid_argument("IRF: total must be > 0");
    }
};

// Stacked data vector H over gated (pair, time) entries.
struct MeasurementSet {
    struct Entry {
        SDPair pair;
        double t;      // gate time (ps)
        double value;
    };
    std::vector<Entry> entries;
    std::optional<double> delta;     // relative noise level, if known
    std::optional<std::uint64_t> seed;
};

}  // namespace fdot
