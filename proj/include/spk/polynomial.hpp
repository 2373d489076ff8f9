#pragma once

#include <utility>
#include <vector>

#include "spk/types.hpp"

namespace spk {

// Dense complex polynomial, coefficients lowest degree first.
using Poly = std::vector<Complex>;

int degree(const Poly& p);
Poly trim(Poly p, double rel_tol = 0.0);
Complex eval(const Poly& p, Complex z);
Poly add(const Poly& a, const Poly& b);
Poly sub(const Poly& a, const Poly& b);
Poly mul(const Poly& a, const Poly& b);
Poly scale(const Poly& a, Complex c);
Poly derivative(const Poly& p);
Poly antiderivative(const Poly& p);
Poly power_linear(Complex root, int m);  // (z - root)^m, m >= 0
Poly from_roots(const std::vector<Complex>& roots);
// Coefficients of q(t) = p(c + t).
Poly taylor_shift(const Poly& p, Complex c);
std::pair<Poly, Poly> divmod(const Poly& a, const Poly& b);

struct Root {
    Complex z;
    int mult;
};

// Roots from companion-matrix eigenvalues, Newton-polished. Eigenvalues closer
// than cluster_tol * (1 + |z|) are merged into a multiple root.
std::vector<Root> roots(const Poly& p, double cluster_tol = 1e-5);

}  // namespace spk
