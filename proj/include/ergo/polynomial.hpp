#pragma once

// Integer polynomials used as exponent indices q(n); must be non-constant
// and strictly positive on the range they index.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergo {

struct IntPolynomial {
  std::vector<long long> coeffs;  // q(n) = coeffs[0] + coeffs[1] n + ...

  long long operator()(long long n) const {
    long long acc = 0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * n + coeffs[i];
    return acc;
  }

  int degree() const {
    for (std::size_t i = coeffs.size(); i-- > 0;)
      if (coeffs[i] != 0) return static_cast<int>(i);
    return 0;
  }

  // Non-constant with q(n) > 0 for n = 1..N, else throws naming the first
  // violating n.
  void require_positive_nonconstant(long long N) const {
    if (degree() < 1) throw std::invalid_argument("exponent polynomial must be non-constant");
    for (long long n = 1; n <= N; ++n)
      if ((*this)(n) <= 0)
        throw std::invalid_argument("exponent polynomial is not positive at n = " +
                                    std::to_string(n));
  }
};

}  // namespace ergo
