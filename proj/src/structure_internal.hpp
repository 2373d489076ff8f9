#pragma once

#include <array>

#include "spk/structure.hpp"

namespace spk::detail {

extern const double kNaN;

// Natural components of Im(G dz) and Re(G dz) at z.
std::array<double, 2> im_dz(const Chart& c, Complex z, Complex G);
std::array<double, 2> re_dz(const Chart& c, Complex z, Complex G);
// Xi_0 recovered from eta = -4 Im(Xi_0 dz) given in natural components.
Complex xi_from_eta(const Chart& c, Complex z, double e1, double e2);
CubicDifferential in_frame(const CubicDifferential& xi, Frame f);

}  // namespace spk::detail
