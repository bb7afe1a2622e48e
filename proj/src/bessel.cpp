#include "faslim/bessel.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace faslim {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Below this the ascending series converges without harmful cancellation;
// above it the asymptotic expansion reaches ~1e-12 at optimal truncation.
constexpr double kSeriesCutoff = 13.0;

// J0(x) = sum_m (-1)^m (x^2/4)^m / (m!)^2
double j0_series(double x)
{
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < 400; ++m) {
        term *= -q / (static_cast<double>(m) * m);
        sum += term;
        if (std::abs(term) < 1e-18 * (1.0 + std::abs(sum)))
            break;
    }
    return sum;
}

// J1(x) = (x/2) sum_m (-1)^m (x^2/4)^m / (m! (m+1)!)
double j1_series(double x)
{
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < 400; ++m) {
        term *= -q / (static_cast<double>(m) * (m + 1.0));
        sum += term;
        if (std::abs(term) < 1e-18 * (1.0 + std::abs(sum)))
            break;
    }
    return 0.5 * x * sum;
}

// Hankel expansion: J_nu(x) ~ sqrt(2/(pi x)) [P cos w - Q sin w],
// w = x - nu pi/2 - pi/4, with a_k = prod_{i<=k} (4nu^2-(2i-1)^2) / (k! 8^k),
// P = sum_l (-1)^l a_{2l} x^{-2l}, Q = sum_l (-1)^l a_{2l+1} x^{-2l-1}.
// Terms are summed until they stop decreasing (optimal truncation).
double j_asymptotic(int nu, double x)
{
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;  // a_k / x^k, signs applied on accumulation
    double prev_mag = std::numeric_limits<double>::max();
    for (int k = 1; k < 80; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (8.0 * k * x);
        const double mag = std::abs(term);
        if (mag >= prev_mag)
            break;
        prev_mag = mag;
        const int l = k / 2;
        const double s = (l % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 0)
            p += s * term;
        else
            q += s * term;
    }
    const double w = x - 0.5 * nu * kPi - 0.25 * kPi;
    return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(w) - q * std::sin(w));
}

}  // namespace

double bessel_j0(double x)
{
    x = std::abs(x);
    if (x < kSeriesCutoff)
        return j0_series(x);
    return j_asymptotic(0, x);
}

double bessel_j1(double x)
{
    const double ax = std::abs(x);
    const double sign = (x < 0.0) ? -1.0 : 1.0;
    if (ax < kSeriesCutoff)
        return sign * j1_series(ax);
    return sign * j_asymptotic(1, ax);
}

}  // namespace faslim
