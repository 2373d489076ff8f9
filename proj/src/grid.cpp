#include "spk/grid.hpp"

#include <cmath>
#include <cstdio>

namespace spk {

namespace {
const double kTwoPi = 2.0 * std::acos(-1.0);

void lagrange4(double x, double w[4]) {
    for (int m = 0; m < 4; ++m) {
        double p = 1.0;
        for (int l = 0; l < 4; ++l)
            if (l != m) p *= (x - l) / (m - l);
        w[m] = p;
    }
}
}  // namespace

Complex to_frame(Frame from, Frame to, Complex c) { return from == to ? c : 1.0 / c; }

const char* frame_name(Frame f) { return f == Frame::Z ? "z" : "w"; }

double LogPolarGrid::h_theta() const { return kTwoPi / n_theta; }

Complex LogPolarGrid::point(int i, int j) const { return center + std::polar(std::exp(rho(i)), theta(j)); }

Chart Chart::log_polar(const LogPolarGrid& g, Frame f) {
    Chart c;
    c.kind = Kind::LogPolar;
    c.frame = f;
    c.lp = g;
    c.active.assign(c.size(), 1);
    return c;
}

Chart Chart::cartesian(const CartesianGrid& g, Frame f) {
    Chart c;
    c.kind = Kind::Cartesian;
    c.frame = f;
    c.cart = g;
    c.active.assign(c.size(), 1);
    return c;
}

size_t Chart::size() const {
    return is_log_polar() ? static_cast<size_t>(lp.n_rho) * lp.n_theta : static_cast<size_t>(cart.n) * cart.n;
}

Complex Chart::point(size_t k) const {
    if (is_log_polar()) return lp.point(static_cast<int>(k / lp.n_theta), static_cast<int>(k % lp.n_theta));
    return cart.point(static_cast<int>(k % cart.n), static_cast<int>(k / cart.n));
}

std::pair<double, double> Chart::coords(size_t k) const {
    if (is_log_polar()) return {lp.rho(static_cast<int>(k / lp.n_theta)), lp.theta(static_cast<int>(k % lp.n_theta))};
    return {cart.x(static_cast<int>(k % cart.n)), cart.y(static_cast<int>(k / cart.n))};
}

std::string Chart::describe() const {
    char buf[256];
    if (is_log_polar())
        std::snprintf(buf, sizeof buf, "logpolar frame=%s center=(%.17g,%.17g) r_min=%.17g r_max=%.17g",
                      frame_name(frame), lp.center.real(), lp.center.imag(), std::exp(lp.rho_min),
                      std::exp(lp.rho_max));
    else
        std::snprintf(buf, sizeof buf, "cartesian frame=%s x0=%.17g y0=%.17g h=%.17g", frame_name(frame), cart.x0,
                      cart.y0, cart.h);
    return buf;
}

bool Chart::same_layout(const Chart& o) const {
    if (kind != o.kind || frame != o.frame) return false;
    if (is_log_polar())
        return lp.n_rho == o.lp.n_rho && lp.n_theta == o.lp.n_theta && lp.center == o.lp.center &&
               lp.rho_min == o.lp.rho_min && lp.rho_max == o.lp.rho_max;
    return cart.n == o.cart.n && cart.x0 == o.cart.x0 && cart.y0 == o.cart.y0 && cart.h == o.cart.h;
}

namespace {

// Neighbour index along axis (0: first coordinate, 1: second) at offset d, or -1.
long neighbour(const Chart& c, int a, int b, int axis, int d) {
    int n1 = c.n1(), n2 = c.n2();
    if (axis == 0) {
        int aa = a + d;
        if (aa < 0 || aa >= n1) return -1;
        return static_cast<long>(c.idx(aa, b));
    }
    int bb = b + d;
    if (c.is_log_polar())
        bb = ((bb % n2) + n2) % n2;
    else if (bb < 0 || bb >= n2)
        return -1;
    return static_cast<long>(c.idx(a, bb));
}

void split(const Chart& c, size_t k, int* a, int* b) {
    if (c.is_log_polar()) {
        *a = static_cast<int>(k / c.lp.n_theta);
        *b = static_cast<int>(k % c.lp.n_theta);
    } else {
        *a = static_cast<int>(k % c.cart.n);
        *b = static_cast<int>(k / c.cart.n);
    }
}

double spacing(const Chart& c, int axis) {
    if (c.is_log_polar()) return axis == 0 ? c.lp.h_rho() : c.lp.h_theta();
    return c.cart.h;
}

// 4th-order first and second derivative along an axis; false if unavailable.
bool diff_axis(const Chart& c, const std::vector<double>& f, int a, int b, int axis, double* d1, double* d2,
               int order = 4) {
    int reach = order == 4 ? 2 : 1;
    double v[5];
    for (int d = -reach; d <= reach; ++d) {
        long k = neighbour(c, a, b, axis, d);
        if (k < 0 || !c.active[k]) return false;
        v[d + 2] = f[k];
    }
    double h = spacing(c, axis);
    if (order == 4) {
        if (d1) *d1 = (-v[4] + 8.0 * v[3] - 8.0 * v[1] + v[0]) / (12.0 * h);
        if (d2) *d2 = (-v[4] + 16.0 * v[3] - 30.0 * v[2] + 16.0 * v[1] - v[0]) / (12.0 * h * h);
    } else {
        if (d1) *d1 = (v[3] - v[1]) / (2.0 * h);
        if (d2) *d2 = (v[3] - 2.0 * v[2] + v[1]) / (h * h);
    }
    return true;
}

}  // namespace

Gradient gradient(const Chart& c, const std::vector<double>& f) {
    size_t n = c.size();
    Gradient g;
    g.d1.assign(n, 0.0);
    g.d2.assign(n, 0.0);
    g.ok.assign(n, 0);
    for (size_t k = 0; k < n; ++k) {
        if (!c.active[k]) continue;
        int a, b;
        split(c, k, &a, &b);
        bool ok = diff_axis(c, f, a, b, 0, &g.d1[k], nullptr) && diff_axis(c, f, a, b, 1, &g.d2[k], nullptr);
        g.ok[k] = ok;
    }
    return g;
}

Hessian hessian(const Chart& c, const std::vector<double>& f) {
    size_t n = c.size();
    Hessian H;
    H.d11.assign(n, 0.0);
    H.d22.assign(n, 0.0);
    H.d12.assign(n, 0.0);
    H.ok.assign(n, 0);
    Gradient g = gradient(c, f);
    for (size_t k = 0; k < n; ++k) {
        if (!c.active[k]) continue;
        int a, b;
        split(c, k, &a, &b);
        bool ok = diff_axis(c, f, a, b, 0, nullptr, &H.d11[k]) && diff_axis(c, f, a, b, 1, nullptr, &H.d22[k]);
        if (ok) {
            // mixed derivative: d/d(axis 0) of the axis-1 derivative
            double v[5];
            for (int d = -2; d <= 2 && ok; ++d) {
                long kk = neighbour(c, a, b, 0, d);
                if (kk < 0 || !g.ok[kk]) ok = false;
                else v[d + 2] = g.d2[kk];
            }
            if (ok) H.d12[k] = (-v[4] + 8.0 * v[3] - 8.0 * v[1] + v[0]) / (12.0 * spacing(c, 0));
        }
        H.ok[k] = ok;
    }
    return H;
}

std::vector<double> laplacian_natural(const Chart& c, const std::vector<double>& f, std::vector<uint8_t>* ok,
                                      int order) {
    size_t n = c.size();
    std::vector<double> out(n, 0.0);
    if (ok) ok->assign(n, 0);
    for (size_t k = 0; k < n; ++k) {
        if (!c.active[k]) continue;
        int a, b;
        split(c, k, &a, &b);
        double s, t;
        if (diff_axis(c, f, a, b, 0, nullptr, &s, order) && diff_axis(c, f, a, b, 1, nullptr, &t, order)) {
            out[k] = s + t;
            if (ok) (*ok)[k] = 1;
        }
    }
    return out;
}

std::pair<double, double> to_xy(const Chart& c, size_t k, double a1, double a2) {
    if (!c.is_log_polar()) return {a1, a2};
    // d rho = (x dx + y dy)/r^2, d theta = (-y dx + x dy)/r^2 relative to the center
    Complex d = c.point(k) - c.lp.center;
    double x = d.real(), y = d.imag(), r2 = std::norm(d);
    return {(a1 * x - a2 * y) / r2, (a1 * y + a2 * x) / r2};
}

bool interpolate(const Chart& c, const std::vector<double>& f, const std::vector<uint8_t>& usable, Complex z,
                 double* out) {
    double s, t;
    int n1 = c.n1(), n2 = c.n2();
    if (c.is_log_polar()) {
        Complex d = z - c.lp.center;
        if (std::abs(d) == 0.0) return false;
        double th = std::arg(d);
        if (th < 0) th += kTwoPi;
        s = (std::log(std::abs(d)) - c.lp.rho_min) / c.lp.h_rho();
        t = th / c.lp.h_theta() - 0.5;
    } else {
        s = (z.real() - c.cart.x0) / c.cart.h;
        t = (z.imag() - c.cart.y0) / c.cart.h;
    }
    const double slack = 1e-9;
    if (s < -slack || s > n1 - 1 + slack) return false;
    if (!c.is_log_polar() && (t < -slack || t > n2 - 1 + slack)) return false;
    int i0 = static_cast<int>(std::floor(s)) - 1;
    i0 = std::max(0, std::min(i0, n1 - 4));
    int j0 = static_cast<int>(std::floor(t)) - 1;
    if (!c.is_log_polar()) j0 = std::max(0, std::min(j0, n2 - 4));
    double wa[4], wb[4];
    lagrange4(s - i0, wa);
    lagrange4(t - j0, wb);
    double acc = 0.0;
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) {
            int jj = j0 + q;
            if (c.is_log_polar()) jj = ((jj % n2) + n2) % n2;
            size_t k = c.idx(i0 + p, jj);
            if (!usable[k]) return false;
            acc += wa[p] * wb[q] * f[k];
        }
    *out = acc;
    return true;
}

}  // namespace spk
