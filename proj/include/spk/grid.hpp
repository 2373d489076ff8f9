#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spk/types.hpp"

namespace spk {

enum class Frame { Z, W };

// Map a frame coordinate between the affine charts z and w = 1/z.
Complex to_frame(Frame from, Frame to, Complex c);
const char* frame_name(Frame f);

// Uniform grid in rho = log|z - center| and theta, theta_j = (j + 1/2) * 2pi / n_theta.
struct LogPolarGrid {
    Complex center{0.0, 0.0};
    double rho_min = 0.0, rho_max = 0.0;
    int n_rho = 0, n_theta = 0;

    double h_rho() const { return (rho_max - rho_min) / (n_rho - 1); }
    double h_theta() const;
    double rho(int i) const { return rho_min + i * h_rho(); }
    double theta(int j) const { return (j + 0.5) * h_theta(); }
    size_t idx(int i, int j) const { return static_cast<size_t>(i) * n_theta + j; }
    Complex point(int i, int j) const;
};

// Square node grid x_i = x0 + i h, y_j = y0 + j h.
struct CartesianGrid {
    double x0 = 0.0, y0 = 0.0, h = 0.0;
    int n = 0;
    double x(int i) const { return x0 + i * h; }
    double y(int j) const { return y0 + j * h; }
    size_t idx(int i, int j) const { return static_cast<size_t>(j) * n + i; }
    Complex point(int i, int j) const { return Complex(x(i), y(j)); }
};

struct Chart {
    enum class Kind { LogPolar, Cartesian };
    Kind kind = Kind::LogPolar;
    Frame frame = Frame::Z;
    LogPolarGrid lp;
    CartesianGrid cart;
    std::vector<uint8_t> active;  // nodes inside the chart's domain

    static Chart log_polar(const LogPolarGrid& g, Frame f = Frame::Z);
    static Chart cartesian(const CartesianGrid& g, Frame f = Frame::Z);

    bool is_log_polar() const { return kind == Kind::LogPolar; }
    size_t size() const;
    int n1() const { return is_log_polar() ? lp.n_rho : cart.n; }
    int n2() const { return is_log_polar() ? lp.n_theta : cart.n; }
    // First index runs over rho (or x), second over theta (or y).
    size_t idx(int a, int b) const { return is_log_polar() ? lp.idx(a, b) : cart.idx(a, b); }
    Complex point(size_t k) const;
    // Natural coordinates of node k: (rho, theta) or (x, y).
    std::pair<double, double> coords(size_t k) const;
    std::string describe() const;
    bool same_layout(const Chart& o) const;
};

// Derivatives along the two natural coordinates with 4th-order central
// differences. Theta is periodic; ok[k] = 0 where a stencil leaves the
// active set or the grid.
struct Gradient {
    std::vector<double> d1, d2;
    std::vector<uint8_t> ok;
};
struct Hessian {
    std::vector<double> d11, d22, d12;
    std::vector<uint8_t> ok;
};

Gradient gradient(const Chart& c, const std::vector<double>& f);
Hessian hessian(const Chart& c, const std::vector<double>& f);
// Second-order Laplacian in natural coordinates (d11 + d22), used for curvature.
std::vector<double> laplacian_natural(const Chart& c, const std::vector<double>& f, std::vector<uint8_t>* ok, int order = 4);

// Convert natural 1-form components to (dx, dy) components at node k.
std::pair<double, double> to_xy(const Chart& c, size_t k, double a1, double a2);

// Cubic (4x4) Lagrange interpolation of a node field at a point in the chart's
// frame coordinate. Returns false if the stencil leaves the grid or touches a
// node with usable[k] == 0.
bool interpolate(const Chart& c, const std::vector<double>& f, const std::vector<uint8_t>& usable, Complex z,
                 double* out);

}  // namespace spk
