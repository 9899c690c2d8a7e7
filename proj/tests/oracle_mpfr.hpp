#pragma once

// Arbitrary-precision oracles for the special-function tests, built on MPFR
// at 256-bit precision (~77 decimal digits). Test-suite only.

namespace fdot_test {

// exp(z^2) * erfc(z) evaluated in multiprecision, rounded to double.
double erfcx_mp(double z);

// Half-space depth factor K3(y3, 0; tau) in multiprecision.
double boundary_k3_mp(double y3, double tau, double D, double beta);

}  // namespace fdot_test
