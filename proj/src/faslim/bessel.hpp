#pragma once

namespace faslim {

// Bessel functions of the first kind, orders 0 and 1, for x >= 0.
// Ascending power series below the crossover argument, Hankel asymptotic
// expansion with optimal truncation above it. Good to ~1e-11 relative to
// the oscillation envelope sqrt(2/(pi x)) over [0, 200].
double bessel_j0(double x);
double bessel_j1(double x);

// First positive roots, used for correlation-null placement in tests.
inline constexpr double kBesselJ0FirstRoot = 2.404825557695772768622;
inline constexpr double kBesselJ1FirstRoot = 3.831705970207512315614;

}  // namespace faslim
