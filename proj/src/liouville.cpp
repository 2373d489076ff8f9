// Liouville solver: Delta v = e^{2v} on log-polar patches (in V = v + log r,
// where V_rr + V_tt = e^{2V}) and Cartesian charts, compact fourth-order
// stencil, damped Newton, alternating Schwarz between overset grids.
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "linear.hpp"
#include "spk/hyperbolic.hpp"

namespace spk {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Sub {
    int chart = 0;  // index into HyperbolicMetric::charts
    bool patch = false;
    // patch
    bool robin = false;
    double alpha = 0.0;
    int i_lo = 1, i_hi = 0;
    // cartesian
    std::vector<int8_t> role;  // 1 unknown, 2 fringe
    std::vector<size_t> unknowns;
    std::vector<long> uidx;
    // nodes filled from other grids
    std::vector<size_t> donor_nodes;
    double last_residual = 0.0;
    // cached Cholesky factor of the lumped Jacobian, reused across Newton steps and sweeps
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> chol;
};

struct NewtonOut {
    int iterations = 0;
    int linear_iterations = 0;
    double residual = 0.0;
    bool monotone = true;
    bool converged = false;
    std::vector<double> history;
};

double chordal(Complex a, bool a_inf, Complex b, bool b_inf) {
    if (a_inf && b_inf) return 0.0;
    if (a_inf) return 2.0 / std::sqrt(1.0 + std::norm(b));
    if (b_inf) return 2.0 / std::sqrt(1.0 + std::norm(a));
    return 2.0 * std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
}

// Superposition of singular profiles over the round metric, in frame f.
double initial_guess(const std::vector<SingularityPrescription>& ps, Frame f, Complex c) {
    Complex z;
    bool zinf = false;
    if (f == Frame::Z)
        z = c;
    else if (std::abs(c) == 0.0)
        zinf = true;
    else
        z = 1.0 / c;
    double v = std::log(2.0 / (1.0 + std::norm(c)));
    for (auto& p : ps) {
        double d = chordal(z, zinf, p.point.z, p.point.is_infinity());
        d = std::max(d, 1e-300);
        if (p.type == SingularityPrescription::Type::Cusp)
            v += -std::log(d / 2.0) - std::log(1.0 + std::log(2.0 / d));
        else
            v += (p.alpha - 1.0) * std::log(d / 2.0);
    }
    return v;
}

// Robin data at a patch inset: V_rho = g(V) = sqrt(alpha^2 + e^{2V}), the
// first integral of the radial equation. The ghost row carries the Taylor
// term with V_rrr = 2 e^{2V} V_r.
struct Ghost {
    double h, alpha;
    double g(double V) const { return std::sqrt(alpha * alpha + std::exp(2.0 * V)); }
    double G(double V) const {
        double gv = g(V);
        return -2.0 * h * gv - (2.0 * h * h * h / 3.0) * std::exp(2.0 * V) * gv;
    }
    double dG(double V) const {
        double e2 = std::exp(2.0 * V), gv = g(V), dg = e2 / gv;
        return -2.0 * h * dg - (2.0 * h * h * h / 3.0) * (2.0 * e2 * gv + e2 * dg);
    }
};

class Solver {
public:
    Solver(HyperbolicMetric& m, const LiouvilleOptions& o) : M(m), opt(o) {}

    HyperbolicMetric& M;
    const LiouvilleOptions& opt;
    std::vector<Sub> subs;

    // ---- patches -------------------------------------------------------
    const LogPolarGrid& lpg(const Sub& s) const { return M.charts[s.chart].chart.lp; }

    std::vector<double> patch_V(const Sub& s) const {
        const auto& g = lpg(s);
        const auto& v = M.charts[s.chart].v;
        std::vector<double> V(v.size());
        for (int i = 0; i < g.n_rho; ++i)
            for (int j = 0; j < g.n_theta; ++j) V[g.idx(i, j)] = v[g.idx(i, j)] + g.rho(i);
        return V;
    }
    void store_patch_V(const Sub& s, const std::vector<double>& V) {
        const auto& g = lpg(s);
        auto& v = M.charts[s.chart].v;
        for (int i = 0; i < g.n_rho; ++i)
            for (int j = 0; j < g.n_theta; ++j) v[g.idx(i, j)] = V[g.idx(i, j)] - g.rho(i);
    }

    // Compact operator out = Lc(E) - M(EF) on unknown rows; E and EF are
    // extended with a ghost row at index 0 (grid row -1).
    void patch_kernel(const Sub& s, const std::vector<double>& E, const std::vector<double>& EF, Vec& out) const {
        const auto& g = lpg(s);
        const int nt = g.n_theta;
        const double a = g.h_rho(), b = g.h_theta();
        const double ia2 = 1.0 / (a * a), ib2 = 1.0 / (b * b), sg = (a * a + b * b) / 12.0 * ia2 * ib2;
        out.resize(static_cast<long>(s.i_hi - s.i_lo + 1) * nt);
        for (int i = s.i_lo; i <= s.i_hi; ++i) {
            const double* Em = &E[static_cast<size_t>(i) * nt];
            const double* E0 = &E[static_cast<size_t>(i + 1) * nt];
            const double* Ep = &E[static_cast<size_t>(i + 2) * nt];
            const double* Fm = &EF[static_cast<size_t>(i) * nt];
            const double* F0 = &EF[static_cast<size_t>(i + 1) * nt];
            const double* Fp = &EF[static_cast<size_t>(i + 2) * nt];
            for (int j = 0; j < nt; ++j) {
                int l = j == 0 ? nt - 1 : j - 1, r = j == nt - 1 ? 0 : j + 1;
                double c = E0[j];
                double lap = (Ep[j] + Em[j] - 2.0 * c) * ia2 + (E0[r] + E0[l] - 2.0 * c) * ib2;
                double cross = (Ep[r] - 2.0 * Ep[j] + Ep[l]) - 2.0 * (E0[r] - 2.0 * c + E0[l]) +
                               (Em[r] - 2.0 * Em[j] + Em[l]);
                double mf = F0[j] + (Fp[j] + Fm[j] - 2.0 * F0[j]) / 12.0 + (F0[r] + F0[l] - 2.0 * F0[j]) / 12.0;
                out[static_cast<long>(i - s.i_lo) * nt + j] = lap + sg * cross - mf;
            }
        }
    }

    std::vector<double> extend(const Sub& s, const std::vector<double>& V) const {
        const auto& g = lpg(s);
        const int nt = g.n_theta;
        std::vector<double> E(static_cast<size_t>(g.n_rho + 1) * nt);
        std::copy(V.begin(), V.end(), E.begin() + nt);
        if (s.robin) {
            Ghost gh{g.h_rho(), s.alpha};
            for (int j = 0; j < nt; ++j) E[j] = V[g.idx(1, j)] + gh.G(V[g.idx(0, j)]);
        } else {
            for (int j = 0; j < nt; ++j) E[j] = kNaN;  // never read: row 0 is fixed
        }
        return E;
    }

    double patch_residual(const Sub& s, const std::vector<double>& V, Vec& R) const {
        auto E = extend(s, V);
        std::vector<double> EF(E.size());
        for (size_t k = 0; k < E.size(); ++k) EF[k] = std::exp(2.0 * E[k]);
        patch_kernel(s, E, EF, R);
        return rel_norm(s, R, EF);
    }

    double rel_norm(const Sub& s, const Vec& R, const std::vector<double>& EF) const {
        const int nt = lpg(s).n_theta;
        double mx = 0.0;
        for (long k = 0; k < R.size(); ++k) {
            double f = EF[static_cast<size_t>(k) + static_cast<size_t>(s.i_lo + 1) * nt];
            mx = std::max(mx, std::abs(R[k]) / (1.0 + f));
        }
        return mx;
    }

    NewtonOut newton_patch(Sub& s, double tol) {
        const auto& g = lpg(s);
        const int nt = g.n_theta, rows = s.i_hi - s.i_lo + 1;
        std::vector<double> V = patch_V(s);
        Vec R;
        NewtonOut out;
        out.residual = patch_residual(s, V, R);
        out.history.push_back(out.residual);
        PolarPreconditioner pre(rows, nt, g.h_theta());
        Ghost gh{g.h_rho(), s.alpha};
        const double a = g.h_rho(), b = g.h_theta();
        const double ia2 = 1.0 / (a * a), sg = (a * a + b * b) / 12.0;
        for (int it = 0; it < opt.max_iter && out.residual > tol; ++it) {
            auto E = extend(s, V);
            std::vector<double> F2(E.size());
            for (size_t k = 0; k < E.size(); ++k) F2[k] = 2.0 * std::exp(2.0 * E[k]);
            std::vector<double> dG(nt, 0.0);
            if (s.robin)
                for (int j = 0; j < nt; ++j) dG[j] = gh.dG(V[g.idx(0, j)]);
            auto mean_row = [&](int ext_row) {
                double m = 0.0;
                for (int j = 0; j < nt; ++j) m += F2[static_cast<size_t>(ext_row) * nt + j];
                return m / nt;
            };
            for (int r = 0; r < rows; ++r) {
                int i = s.i_lo + r;
                double cm = mean_row(i), c0 = mean_row(i + 1), cp = mean_row(i + 2);
                pre.lower[r] = ia2 - cm / 12.0;
                pre.lower_l[r] = sg * ia2;
                pre.upper[r] = ia2 - cp / 12.0;
                pre.upper_l[r] = sg * ia2;
                pre.diag[r] = -2.0 * ia2 - 10.0 * c0 / 12.0;
                pre.diag_l[r] = -2.0 * sg * ia2 + 1.0 - c0 * b * b / 12.0;
            }
            if (s.robin) {
                double mdg = 0.0;
                for (int j = 0; j < nt; ++j) mdg += dG[j];
                mdg /= nt;
                pre.upper[0] += pre.lower[0];
                pre.upper_l[0] += pre.lower_l[0];
                pre.diag[0] += mdg * pre.lower[0];
                pre.diag_l[0] += mdg * pre.lower_l[0];
            }
            auto apply_J = [&](const Vec& d, Vec& y) {
                std::vector<double> Ed(E.size(), 0.0);
                for (int r = 0; r < rows; ++r)
                    for (int j = 0; j < nt; ++j)
                        Ed[static_cast<size_t>(s.i_lo + r + 1) * nt + j] = d[static_cast<long>(r) * nt + j];
                if (s.robin)
                    for (int j = 0; j < nt; ++j)
                        Ed[j] = Ed[static_cast<size_t>(2) * nt + j] + dG[j] * Ed[static_cast<size_t>(nt) + j];
                std::vector<double> EFd(E.size());
                for (size_t k = 0; k < E.size(); ++k) EFd[k] = s.robin || k >= static_cast<size_t>(nt) ? F2[k] * Ed[k] : 0.0;
                patch_kernel(s, Ed, EFd, y);
            };
            auto apply_P = [&](const Vec& in, Vec& o) { pre.apply(in, o); };
            Vec dx = Vec::Zero(R.size());
            Vec rhs = -R;
            auto kr = bicgstab(apply_J, apply_P, rhs, dx, 1e-10, 400);
            out.linear_iterations += kr.iterations;
            double lam = 1.0;
            bool accepted = false;
            std::vector<double> Vn(V);
            Vec Rn;
            double rn = 0.0;
            for (int ls = 0; ls < 30; ++ls) {
                for (int r = 0; r < rows; ++r)
                    for (int j = 0; j < nt; ++j)
                        Vn[g.idx(s.i_lo + r, j)] = V[g.idx(s.i_lo + r, j)] + lam * dx[static_cast<long>(r) * nt + j];
                rn = patch_residual(s, Vn, Rn);
                if (std::isfinite(rn) && rn <= out.residual) {
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            ++out.iterations;
            if (!accepted) break;
            V.swap(Vn);
            R = Rn;
            out.residual = rn;
            out.history.push_back(rn);
        }
        for (size_t k = 1; k < out.history.size(); ++k)
            if (out.history[k] > out.history[k - 1]) out.monotone = false;
        out.converged = out.residual <= tol;
        store_patch_V(s, V);
        return out;
    }

    // ---- cartesian charts ------------------------------------------------
    double cart_residual(const Sub& s, const std::vector<double>& v, Vec& R) const {
        const auto& g = M.charts[s.chart].chart.cart;
        const long n = g.n;
        const double c6 = 1.0 / (6.0 * g.h * g.h);
        R.resize(static_cast<long>(s.unknowns.size()));
        double mx = 0.0;
        for (size_t u = 0; u < s.unknowns.size(); ++u) {
            long k = static_cast<long>(s.unknowns[u]);
            double e = v[k + 1] + v[k - 1] + v[k + n] + v[k - n];
            double c = v[k + n + 1] + v[k + n - 1] + v[k - n + 1] + v[k - n - 1];
            double F0 = std::exp(2.0 * v[k]);
            double Fe = std::exp(2.0 * v[k + 1]) + std::exp(2.0 * v[k - 1]) + std::exp(2.0 * v[k + n]) +
                        std::exp(2.0 * v[k - n]);
            double mf = (8.0 * F0 + Fe) / 12.0;
            R[static_cast<long>(u)] = c6 * (4.0 * e + c - 20.0 * v[k]) - mf;
            mx = std::max(mx, std::abs(R[static_cast<long>(u)]) / (1.0 + mf));
        }
        return mx;
    }

    NewtonOut newton_cart(Sub& s, double tol) {
        auto& cf = M.charts[s.chart];
        const auto& g = cf.chart.cart;
        const long n = g.n;
        const long nu = static_cast<long>(s.unknowns.size());
        std::vector<double> v = cf.v;
        Vec R;
        NewtonOut out;
        out.residual = cart_residual(s, v, R);
        out.history.push_back(out.residual);
        const double c6 = 1.0 / (6.0 * g.h * g.h);
        for (int it = 0; it < opt.max_iter && out.residual > tol; ++it) {
            std::vector<Eigen::Triplet<double>> tj;
            tj.reserve(static_cast<size_t>(nu) * 9);
            for (long u = 0; u < nu; ++u) {
                long k = static_cast<long>(s.unknowns[u]);
                double F2 = 2.0 * std::exp(2.0 * v[k]);
                tj.emplace_back(u, u, -20.0 * c6 - 8.0 * F2 / 12.0);
                const long edges[4] = {k + 1, k - 1, k + n, k - n};
                const long corners[4] = {k + n + 1, k + n - 1, k - n + 1, k - n - 1};
                for (long nb : edges) {
                    long w = s.uidx[nb];
                    if (w < 0) continue;
                    tj.emplace_back(u, w, 4.0 * c6 - 2.0 * std::exp(2.0 * v[nb]) / 12.0);
                }
                for (long nb : corners) {
                    long w = s.uidx[nb];
                    if (w < 0) continue;
                    tj.emplace_back(u, w, c6);
                }
            }
            Eigen::SparseMatrix<double> J(nu, nu);
            J.setFromTriplets(tj.begin(), tj.end());
            auto factor = [&]() {
                // SPD matrix -(Lc - diag(2F)): the Jacobian with the mass stencil lumped
                std::vector<Eigen::Triplet<double>> tp;
                tp.reserve(static_cast<size_t>(nu) * 9);
                for (long u = 0; u < nu; ++u) {
                    long k = static_cast<long>(s.unknowns[u]);
                    tp.emplace_back(u, u, 20.0 * c6 + 2.0 * std::exp(2.0 * v[k]));
                    const long nbs[8] = {k + 1, k - 1, k + n, k - n, k + n + 1, k + n - 1, k - n + 1, k - n - 1};
                    for (int q = 0; q < 8; ++q) {
                        long w = s.uidx[nbs[q]];
                        if (w >= 0) tp.emplace_back(u, w, q < 4 ? -4.0 * c6 : -c6);
                    }
                }
                Eigen::SparseMatrix<double> P(nu, nu);
                P.setFromTriplets(tp.begin(), tp.end());
                s.chol = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(P);
            };
            if (!s.chol) factor();
            auto apply_J = [&](const Vec& d, Vec& y) { y = J * d; };
            auto apply_P = [&](const Vec& in, Vec& o) { o = -s.chol->solve(in); };
            Vec dx = Vec::Zero(nu);
            Vec rhs = -R;
            auto kr = bicgstab(apply_J, apply_P, rhs, dx, 1e-10, 1000);
            if (kr.iterations > 12) {
                factor();
                Vec dx2 = Vec::Zero(nu);
                auto kr2 = bicgstab(apply_J, apply_P, rhs, dx2, 1e-10, 1000);
                kr.iterations += kr2.iterations;
                dx = dx2;
            }
            out.linear_iterations += kr.iterations;
            double lam = 1.0;
            bool accepted = false;
            std::vector<double> vn(v);
            Vec Rn;
            double rn = 0.0;
            for (int ls = 0; ls < 30; ++ls) {
                for (long u = 0; u < nu; ++u) vn[s.unknowns[u]] = v[s.unknowns[u]] + lam * dx[u];
                rn = cart_residual(s, vn, Rn);
                if (std::isfinite(rn) && rn <= out.residual) {
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            ++out.iterations;
            if (!accepted) break;
            v.swap(vn);
            R = Rn;
            out.residual = rn;
            out.history.push_back(rn);
        }
        for (size_t k = 1; k < out.history.size(); ++k)
            if (out.history[k] > out.history[k - 1]) out.monotone = false;
        out.converged = out.residual <= tol;
        cf.v = v;
        return out;
    }

    NewtonOut newton(Sub& s, double tol) { return s.patch ? newton_patch(s, tol) : newton_cart(s, tol); }

    // Values the owning grids currently give at the donor nodes of s.
    void donor_values(const Sub& s, std::vector<double>& out) const {
        const auto& cf = M.charts[s.chart];
        for (size_t k : s.donor_nodes) {
            Complex c = cf.chart.point(k);
            int own = M.owner(cf.chart.frame, c);
            if (own == s.chart || own < 0)
                throw Error(ErrorCode::GridTooCoarse, "no donor grid for node at " + CPoint::finite(c).str());
            double val = M.v_at(cf.chart.frame, c);
            if (!std::isfinite(val))
                throw Error(ErrorCode::GridTooCoarse, "donor stencil unavailable at " + CPoint::finite(c).str());
            out.push_back(val);
        }
    }
    std::vector<double> gather() const {
        std::vector<double> x;
        for (auto& s : subs) donor_values(s, x);
        return x;
    }
    void scatter(const std::vector<double>& x) {
        size_t q = 0;
        for (auto& s : subs)
            for (size_t k : s.donor_nodes) M.charts[s.chart].v[k] = x[q++];
    }
    void update_donors(const Sub& s) {
        std::vector<double> x;
        donor_values(s, x);
        size_t q = 0;
        for (size_t k : s.donor_nodes) M.charts[s.chart].v[k] = x[q++];
    }
};

// Anderson mixing for the fixed point x = G(x) of one Schwarz sweep.
class Anderson {
public:
    explicit Anderson(int depth) : depth_(depth) {}
    std::vector<double> step(const std::vector<double>& x, const std::vector<double>& gx) {
        const long n = static_cast<long>(x.size());
        Vec xv = Eigen::Map<const Vec>(x.data(), n), f = Eigen::Map<const Vec>(gx.data(), n) - xv;
        if (has_prev_) {
            dX_.push_back(xv - x_prev_);
            dF_.push_back(f - f_prev_);
            if (static_cast<int>(dX_.size()) > depth_) {
                dX_.erase(dX_.begin());
                dF_.erase(dF_.begin());
            }
        }
        x_prev_ = xv;
        f_prev_ = f;
        has_prev_ = true;
        Vec next = xv + f;
        if (!dF_.empty()) {
            const long m = static_cast<long>(dF_.size());
            Eigen::MatrixXd A(n, m), B(n, m);
            for (long c = 0; c < m; ++c) {
                A.col(c) = dF_[c];
                B.col(c) = dX_[c] + dF_[c];
            }
            Vec gamma = A.colPivHouseholderQr().solve(f);
            if (gamma.allFinite()) next -= B * gamma;
        }
        return std::vector<double>(next.data(), next.data() + n);
    }
    void reset() {
        dX_.clear();
        dF_.clear();
        has_prev_ = false;
    }

private:
    int depth_;
    bool has_prev_ = false;
    Vec x_prev_, f_prev_;
    std::vector<Vec> dX_, dF_;
};

struct PatchPlan {
    int index;
    Frame frame;
    Complex center;
    double radius;
};

std::vector<PatchPlan> plan_patches(const std::vector<SingularityPrescription>& ps, const LiouvilleOptions& opt) {
    std::vector<PatchPlan> plans;
    for (size_t i = 0; i < ps.size(); ++i) {
        PatchPlan p;
        p.index = static_cast<int>(i);
        if (ps[i].point.is_infinity()) {
            p.frame = Frame::W;
            p.center = 0.0;
        } else if (std::abs(ps[i].point.z) <= 1.0) {
            p.frame = Frame::Z;
            p.center = ps[i].point.z;
        } else {
            p.frame = Frame::W;
            p.center = 1.0 / ps[i].point.z;
        }
        double dmin = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < ps.size(); ++j) {
            if (j == i) continue;
            Complex q;
            if (ps[j].point.is_infinity()) {
                if (p.frame == Frame::W) q = 0.0;
                else continue;
            } else if (p.frame == Frame::Z) {
                q = ps[j].point.z;
            } else {
                if (std::abs(ps[j].point.z) == 0.0) continue;
                q = 1.0 / ps[j].point.z;
            }
            dmin = std::min(dmin, std::abs(q - p.center));
        }
        p.radius = std::min(opt.patch_max_radius, 0.4 * dmin);
        plans.push_back(p);
    }
    return plans;
}

void build_sphere(HyperbolicMetric& M, Solver& S, const std::vector<SingularityPrescription>& ps,
                  const LiouvilleOptions& opt) {
    auto plans = plan_patches(ps, opt);
    const double Rc = opt.chart_radius;
    const double hc = 2.0 * Rc / (opt.n_cart - 1);
    for (auto& p : plans) {
        if (!(p.radius > opt.inset * 10.0))
            throw Error(ErrorCode::GridTooCoarse, "singular points too close for the inset radius");
        double decades = std::log10(p.radius / opt.inset);
        if ((opt.n_rho - 1) / decades < 8.0) throw Error(ErrorCode::GridTooCoarse, "fewer than 8 nodes per decade");
        if (p.radius / 2.0 < 6.0 * hc)
            throw Error(ErrorCode::GridTooCoarse, "Cartesian spacing does not resolve a patch hole");
    }
    // Cartesian charts
    for (Frame f : {Frame::Z, Frame::W}) {
        CartesianGrid g;
        g.n = opt.n_cart;
        g.h = hc;
        g.x0 = g.y0 = -Rc;
        ChartField cf;
        cf.chart = Chart::cartesian(g, f);
        const size_t N = cf.chart.size();
        Sub s;
        s.chart = static_cast<int>(M.charts.size());
        s.patch = false;
        s.role.assign(N, 0);
        for (int j = 1; j < g.n - 1; ++j)
            for (int i = 1; i < g.n - 1; ++i) {
                Complex c = g.point(i, j);
                if (std::abs(c) > Rc) continue;
                bool hole = false;
                for (auto& p : plans) {
                    Complex loc;
                    if (p.frame == f)
                        loc = c;
                    else if (std::abs(c) == 0.0)
                        continue;
                    else
                        loc = 1.0 / c;
                    if (std::abs(loc - p.center) < 0.5 * p.radius) hole = true;
                }
                if (!hole) s.role[g.idx(i, j)] = 1;
            }
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) {
                size_t k = g.idx(i, j);
                if (s.role[k] == 1) continue;
                bool near = false;
                for (int dj = -1; dj <= 1 && !near; ++dj)
                    for (int di = -1; di <= 1 && !near; ++di) {
                        int ii = i + di, jj = j + dj;
                        if (ii < 0 || jj < 0 || ii >= g.n || jj >= g.n) continue;
                        near = s.role[g.idx(ii, jj)] == 1;
                    }
                if (near) {
                    s.role[k] = 2;
                    s.donor_nodes.push_back(k);
                }
            }
        s.uidx.assign(N, -1);
        for (size_t k = 0; k < N; ++k)
            if (s.role[k] == 1) {
                s.uidx[k] = static_cast<long>(s.unknowns.size());
                s.unknowns.push_back(k);
            }
        cf.v.assign(N, kNaN);
        cf.usable.assign(N, 0);
        for (size_t k = 0; k < N; ++k) {
            cf.chart.active[k] = s.role[k] == 1;
            if (s.role[k] != 0) {
                cf.usable[k] = 1;
                cf.v[k] = initial_guess(ps, f, cf.chart.point(k));
            }
        }
        M.charts.push_back(std::move(cf));
        S.subs.push_back(std::move(s));
    }
    // patches
    for (auto& p : plans) {
        LogPolarGrid g;
        g.center = p.center;
        g.rho_min = std::log(opt.inset);
        g.rho_max = std::log(p.radius);
        g.n_rho = opt.n_rho;
        g.n_theta = opt.n_theta;
        ChartField cf;
        cf.chart = Chart::log_polar(g, p.frame);
        cf.singular_index = p.index;
        cf.own_radius = 0.9 * p.radius;
        cf.has_inset = true;
        cf.inset_alpha = ps[p.index].cone_alpha();
        cf.v.resize(cf.chart.size());
        cf.usable.assign(cf.chart.size(), 1);
        for (size_t k = 0; k < cf.v.size(); ++k) cf.v[k] = initial_guess(ps, p.frame, cf.chart.point(k));
        Sub s;
        s.chart = static_cast<int>(M.charts.size());
        s.patch = true;
        s.robin = true;
        s.alpha = cf.inset_alpha;
        s.i_lo = 0;
        s.i_hi = g.n_rho - 2;
        for (int j = 0; j < g.n_theta; ++j) s.donor_nodes.push_back(g.idx(g.n_rho - 1, j));
        M.charts.push_back(std::move(cf));
        S.subs.push_back(std::move(s));
    }
}

// Initialise every grid from a coarser solution.
void prolong(HyperbolicMetric& fine, const HyperbolicMetric& coarse) {
    for (auto& cf : fine.charts) {
        for (size_t k = 0; k < cf.v.size(); ++k) {
            if (!cf.usable[k]) continue;
            double val = coarse.v_at(cf.chart.frame, cf.chart.point(k));
            if (std::isfinite(val)) cf.v[k] = val;
        }
        if (cf.chart.is_log_polar()) {
            // rows inside the coarse inset keep the radial leading behaviour
            const auto& g = cf.chart.lp;
            for (int i = 0; i < g.n_rho; ++i)
                for (int j = 0; j < g.n_theta; ++j)
                    if (!std::isfinite(cf.v[g.idx(i, j)])) cf.v[g.idx(i, j)] = cf.v[g.idx(i + 1, j)];
        }
    }
}

HyperbolicMetric solve_sphere(const std::vector<SingularityPrescription>& ps, const LiouvilleOptions& opt,
                              const HyperbolicMetric* coarse) {
    HyperbolicMetric M;
    M.sphere = true;
    M.prescriptions = ps;
    M.chart_radius = opt.chart_radius;
    Solver S(M, opt);
    build_sphere(M, S, ps, opt);
    if (coarse) prolong(M, *coarse);

    SolverStats& st = M.stats;
    double mismatch = std::numeric_limits<double>::infinity(), best = mismatch;
    bool done = false;
    // Additive Schwarz: every grid is solved against the same donor vector,
    // then the sweep map is accelerated by Anderson mixing.
    Anderson mix(8);
    std::vector<double> x = S.gather();
    for (int sweep = 1; sweep <= opt.max_sweeps && !done; ++sweep) {
        S.scatter(x);
        double worst = 0.0;
        double local_tol = std::max(opt.tol, std::min(1e-3, 1e-3 * mismatch));
        for (auto& s : S.subs) {
            auto r = S.newton(s, local_tol);
            st.newton_iterations += r.iterations;
            st.linear_iterations += r.linear_iterations;
            st.monotone = st.monotone && r.monotone;
            s.last_residual = r.residual;
            worst = std::max(worst, r.residual);
            if (!r.converged && r.residual > 1e3 * local_tol && sweep > 3) {
                st.final_residual = r.residual;
                throw NoConvergenceError("Newton stalled on " + M.charts[s.chart].chart.describe(), r.residual,
                                         st.newton_iterations);
            }
        }
        std::vector<double> gx = S.gather();
        mismatch = 0.0;
        for (size_t k = 0; k < x.size(); ++k) mismatch = std::max(mismatch, std::abs(gx[k] - x[k]));
        st.sweeps = sweep;
        st.mismatch = mismatch;
        st.final_residual = worst;
        if (opt.verbose)
            std::fprintf(stderr, "sweep %d: donor change %.3e, residual %.3e, newton %d, linear %d\n", sweep,
                         mismatch, worst, st.newton_iterations, st.linear_iterations);
        if (mismatch < opt.schwarz_tol && worst <= opt.tol) {
            done = true;
            x = gx;
            break;
        }
        if (!std::isfinite(mismatch))
            throw NoConvergenceError("Schwarz iteration diverged", mismatch, st.newton_iterations);
        if (mismatch > 10.0 * best) {
            // mixing went astray: restart from the plain sweep
            mix.reset();
            x = gx;
        } else {
            x = mix.step(x, gx);
        }
        best = std::min(best, mismatch);
    }
    S.scatter(x);
    // one last pass to make every grid's residual meet the tolerance
    double worst = 0.0;
    for (auto& s : S.subs) {
        auto r = S.newton(s, opt.tol);
        st.newton_iterations += r.iterations;
        st.monotone = st.monotone && r.monotone;
        worst = std::max(worst, r.residual);
        st.residual_history.insert(st.residual_history.end(), r.history.begin(), r.history.end());
    }
    st.final_residual = worst;
    if (!done || worst > opt.tol)
        throw NoConvergenceError("Schwarz iteration did not converge", std::max(worst, st.mismatch),
                                 st.newton_iterations);
    return M;
}

HyperbolicMetric solve_disc(const std::vector<SingularityPrescription>& ps, const DiscChart& dc,
                            const LiouvilleOptions& opt) {
    if (ps.size() != 1 || ps[0].point.is_infinity() || std::abs(ps[0].point.z) != 0.0)
        throw Error(ErrorCode::InvalidArgument, "disc solves take exactly one prescription at the origin");
    const auto& p = ps[0];
    if (p.type == SingularityPrescription::Type::Conical && (!(p.alpha > 0.0) || p.alpha == 1.0))
        throw Error(ErrorCode::InvalidAlpha, "conical alpha must be positive and != 1");
    if (!(dc.radius < 1.0) || !(dc.radius > opt.inset))
        throw Error(ErrorCode::InvalidArgument, "disc radius must lie in (inset, 1)");
    double decades = std::log10(dc.radius / opt.inset);
    if ((opt.n_rho - 1) / decades < 8.0) throw Error(ErrorCode::GridTooCoarse, "fewer than 8 nodes per decade");
    ModelKind kind = p.type == SingularityPrescription::Type::Cusp ? ModelKind::Cusp : ModelKind::Conical;

    HyperbolicMetric M;
    M.prescriptions = ps;
    LogPolarGrid g;
    g.rho_min = std::log(opt.inset);
    g.rho_max = std::log(dc.radius);
    g.n_rho = opt.n_rho;
    g.n_theta = opt.n_theta;
    ChartField cf;
    cf.chart = Chart::log_polar(g);
    cf.singular_index = 0;
    cf.own_radius = dc.radius;
    cf.has_inset = true;
    cf.inset_alpha = p.cone_alpha();
    cf.usable.assign(cf.chart.size(), 1);
    cf.v.resize(cf.chart.size());
    // initial guess: V linear in rho between the boundary values
    double V0 = model_v(kind, p.alpha, std::exp(g.rho_min)) + g.rho_min;
    double V1 = model_v(kind, p.alpha, std::exp(g.rho_max)) + g.rho_max;
    for (int i = 0; i < g.n_rho; ++i) {
        double t = double(i) / (g.n_rho - 1);
        for (int j = 0; j < g.n_theta; ++j) cf.v[g.idx(i, j)] = (1 - t) * V0 + t * V1 - g.rho(i);
    }
    M.charts.push_back(std::move(cf));
    Solver S(M, opt);
    Sub s;
    s.chart = 0;
    s.patch = true;
    s.robin = opt.inset_condition == InsetCondition::Asymptotic;
    s.alpha = p.cone_alpha();
    s.i_lo = s.robin ? 0 : 1;
    s.i_hi = g.n_rho - 2;
    S.subs.push_back(s);
    auto r = S.newton(S.subs[0], opt.tol);
    M.stats.newton_iterations = r.iterations;
    M.stats.linear_iterations = r.linear_iterations;
    M.stats.final_residual = r.residual;
    M.stats.monotone = r.monotone;
    M.stats.residual_history = r.history;
    M.stats.sweeps = 1;
    if (!r.converged) throw NoConvergenceError("Newton did not converge on the disc", r.residual, r.iterations);
    return M;
}

}  // namespace

HyperbolicMetric solve_liouville(const std::vector<SingularityPrescription>& prescriptions, const ChartSpec& chart,
                                 const LiouvilleOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    if (opts.tol <= 0.0 || opts.max_iter <= 0 || opts.n_rho < 8 || opts.n_theta < 8 || opts.n_cart < 16)
        throw Error(ErrorCode::InvalidArgument, "invalid solver options");
    HyperbolicMetric m;
    if (std::holds_alternative<DiscChart>(chart)) {
        m = solve_disc(prescriptions, std::get<DiscChart>(chart), opts);
    } else {
        check_admissible(prescriptions);
        std::unique_ptr<HyperbolicMetric> coarse;
        if (opts.coarse_start && opts.n_cart >= 128 && opts.n_rho >= 64 && opts.n_theta >= 64) {
            LiouvilleOptions c = opts;
            c.n_cart = (opts.n_cart + 1) / 2;
            c.n_rho = (opts.n_rho + 1) / 2;
            c.n_theta = opts.n_theta / 2;
            c.tol = std::max(opts.tol, 1e-8);
            c.schwarz_tol = std::max(opts.schwarz_tol, 1e-6);
            try {
                coarse = std::make_unique<HyperbolicMetric>(solve_liouville(prescriptions, SphereChart{}, c));
            } catch (const Error&) {
                // too coarse to resolve the patches, or did not settle: start from the superposed guess
                coarse.reset();
            }
        }
        m = solve_sphere(prescriptions, opts, coarse.get());
        if (coarse) {
            m.stats.newton_iterations += coarse->stats.newton_iterations;
            m.stats.linear_iterations += coarse->stats.linear_iterations;
        }
    }
    m.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

}  // namespace spk
