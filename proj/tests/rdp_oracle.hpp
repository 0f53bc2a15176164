//
// Copyright 2026 The pate-asr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef PATE_ASR_TESTS_RDP_ORACLE_HPP_
#define PATE_ASR_TESTS_RDP_ORACLE_HPP_

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pate_asr::testing {

// Renyi divergence D_a(P || Q) by quadrature. The integrand
// exp(a log p + (1 - a) log q) is rescaled by its maximum so large orders stay
// finite.

// P = N(0, s^2), Q = N(d, s^2).
inline double GaussianRenyiByQuadrature(double s, double d, double a) {
  using boost::math::quadrature::gauss_kronrod;
  auto g = [&](double x) {
    return (-a * x * x - (1.0 - a) * (x - d) * (x - d)) / (2.0 * s * s);
  };
  const double peak = (1.0 - a) * d;
  const double gmax = g(peak);
  auto f = [&](double x) { return std::exp(g(x) - gmax); };
  double total = 0.0;
  for (int k = -40; k < 40; ++k) {
    total += gauss_kronrod<double, 61>::integrate(f, peak + k * s, peak + (k + 1) * s, 10,
                                                  1e-15);
  }
  const double log_integral = gmax + std::log(total) - std::log(std::sqrt(2.0 * M_PI) * s);
  return log_integral / (a - 1.0);
}

// P = Laplace(0, b), Q = Laplace(d, b), d >= 0.
inline double LaplaceRenyiByQuadrature(double b, double d, double a) {
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::gauss_kronrod;
  auto g = [&](double x) { return (-a * std::abs(x) - (1.0 - a) * std::abs(x - d)) / b; };
  const double gmax = g(0.0);
  auto f = [&](double x) { return std::exp(g(x) - gmax); };
  exp_sinh<double> half_line;
  const double left = half_line.integrate([&](double u) { return f(-u); }, 0.0,
                                          std::numeric_limits<double>::infinity());
  const double right = half_line.integrate([&](double u) { return f(d + u); }, 0.0,
                                           std::numeric_limits<double>::infinity());
  const double middle =
      d > 0.0 ? gauss_kronrod<double, 61>::integrate(f, 0.0, d, 15, 1e-15) : 0.0;
  const double log_integral = gmax + std::log(left + middle + right) - std::log(2.0 * b);
  return log_integral / (a - 1.0);
}

}  // namespace pate_asr::testing

#endif  // PATE_ASR_TESTS_RDP_ORACLE_HPP_
