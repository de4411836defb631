#pragma once

#include <cmath>
#include <complex>

#include "doctest.h"

inline double rel_err(std::complex<double> a, std::complex<double> b)
{
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}
