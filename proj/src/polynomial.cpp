#include "spk/polynomial.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace spk {

int degree(const Poly& p) {
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i)
        if (p[i] != Complex(0.0, 0.0)) return i;
    return -1;
}

Poly trim(Poly p, double rel_tol) {
    double mx = 0.0;
    for (auto& c : p) mx = std::max(mx, std::abs(c));
    while (!p.empty() && std::abs(p.back()) <= rel_tol * mx) p.pop_back();
    return p;
}

Complex eval(const Poly& p, Complex z) {
    Complex acc(0.0, 0.0);
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * z + *it;
    return acc;
}

Poly add(const Poly& a, const Poly& b) {
    Poly r(std::max(a.size(), b.size()), Complex(0.0, 0.0));
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    return r;
}

Poly sub(const Poly& a, const Poly& b) { return add(a, scale(b, -1.0)); }

Poly mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, Complex(0.0, 0.0));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Poly scale(const Poly& a, Complex c) {
    Poly r(a);
    for (auto& x : r) x *= c;
    return r;
}

Poly derivative(const Poly& p) {
    if (p.size() <= 1) return {};
    Poly r(p.size() - 1);
    for (size_t i = 1; i < p.size(); ++i) r[i - 1] = p[i] * static_cast<double>(i);
    return r;
}

Poly antiderivative(const Poly& p) {
    Poly r(p.size() + 1, Complex(0.0, 0.0));
    for (size_t i = 0; i < p.size(); ++i) r[i + 1] = p[i] / static_cast<double>(i + 1);
    return r;
}

Poly power_linear(Complex root, int m) {
    Poly r{Complex(1.0, 0.0)};
    Poly lin{-root, Complex(1.0, 0.0)};
    for (int i = 0; i < m; ++i) r = mul(r, lin);
    return r;
}

Poly from_roots(const std::vector<Complex>& rs) {
    Poly r{Complex(1.0, 0.0)};
    for (auto z : rs) r = mul(r, Poly{-z, Complex(1.0, 0.0)});
    return r;
}

Poly taylor_shift(const Poly& p, Complex c) {
    // Repeated synthetic division (Horner) gives the shifted coefficients.
    Poly q(p);
    int n = static_cast<int>(q.size());
    for (int i = 0; i < n; ++i)
        for (int j = n - 2; j >= i; --j) q[j] += c * q[j + 1];
    return q;
}

std::pair<Poly, Poly> divmod(const Poly& a, const Poly& b) {
    int db = degree(b);
    if (db < 0) throw Error(ErrorCode::InvalidArgument, "division by zero polynomial");
    Poly r(a);
    int da = degree(r);
    if (da < db) return {Poly{}, trim(r)};
    Poly q(da - db + 1, Complex(0.0, 0.0));
    for (int k = da; k >= db; --k) {
        Complex c = r[k] / b[db];
        q[k - db] = c;
        for (int j = 0; j <= db; ++j) r[k - db + j] -= c * b[j];
        r[k] = 0.0;
    }
    r.resize(db);
    return {q, r};
}

namespace {

Complex polish(const Poly& p, Complex z, int mult) {
    // Newton on the (mult-1)-th derivative, which has a simple root there.
    Poly d = p;
    for (int i = 1; i < mult; ++i) d = derivative(d);
    Poly dd = derivative(d);
    double best = std::abs(eval(d, z));
    for (int it = 0; it < 8; ++it) {
        Complex den = eval(dd, z);
        if (den == Complex(0.0, 0.0)) break;
        Complex zn = z - eval(d, z) / den;
        double rn = std::abs(eval(d, zn));
        if (!(rn < best)) break;
        best = rn;
        z = zn;
    }
    return z;
}

}  // namespace

std::vector<Root> roots(const Poly& p_in, double cluster_tol) {
    Poly p = trim(p_in);
    int n = degree(p);
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "roots of the zero polynomial");
    std::vector<Root> out;
    // Exact zero roots first; companion eigenvalues of z^m scatter needlessly.
    int zero_mult = 0;
    while (zero_mult < n && p[zero_mult] == Complex(0.0, 0.0)) ++zero_mult;
    if (zero_mult > 0) {
        out.push_back({Complex(0.0, 0.0), zero_mult});
        p.erase(p.begin(), p.begin() + zero_mult);
        n -= zero_mult;
    }
    if (n == 0) return out;
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) C(i, n - 1) = -p[i] / p[n];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<Complex> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = es.eigenvalues()[i];

    // Single-linkage clustering; the admissible spread grows with cluster size
    // since an m-fold root is only determined to about eps^(1/m).
    std::vector<int> label(n);
    std::iota(label.begin(), label.end(), 0);
    auto find = [&](int i) {
        while (label[i] != i) i = label[i] = label[label[i]];
        return i;
    };
    std::vector<int> size(n, 1);
    bool merged = true;
    while (merged) {
        merged = false;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                int a = find(i), b = find(j);
                if (a == b) continue;
                int m = size[a] + size[b];
                double tol = std::max(cluster_tol, 4.0 * std::pow(1e-16, 1.0 / m));
                double scale = 1.0 + std::abs(ev[i]);
                if (std::abs(ev[i] - ev[j]) <= tol * scale) {
                    label[b] = a;
                    size[a] += size[b];
                    merged = true;
                }
            }
    }
    std::vector<int> seen;
    for (int i = 0; i < n; ++i) {
        int a = find(i);
        if (std::find(seen.begin(), seen.end(), a) != seen.end()) continue;
        seen.push_back(a);
        Complex c(0.0, 0.0);
        int m = 0;
        for (int j = 0; j < n; ++j)
            if (find(j) == a) {
                c += ev[j];
                ++m;
            }
        c /= static_cast<double>(m);
        out.push_back({polish(p, c, m), m});
    }
    std::sort(out.begin(), out.end(), [](const Root& a, const Root& b) {
        if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
        return a.z.imag() < b.z.imag();
    });
    return out;
}

}  // namespace spk
