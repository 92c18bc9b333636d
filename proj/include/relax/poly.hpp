// Small dense polynomial in one variable (Horner evaluation).
#pragma once

#include <cstddef>
#include <vector>

namespace relax {

struct Polynomial {
  // c[k] multiplies x^k; empty means the zero polynomial.
  std::vector<double> c;

  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c(std::move(coeffs)) {}

  double operator()(double x) const {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
  }

  Polynomial derivative() const {
    Polynomial d;
    if (c.size() < 2) return d;
    d.c.resize(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d.c[k - 1] = static_cast<double>(k) * c[k];
    return d;
  }

  int degree() const {
    for (std::size_t i = c.size(); i-- > 0;)
      if (c[i] != 0.0) return static_cast<int>(i);
    return -1;
  }
};

}  // namespace relax
