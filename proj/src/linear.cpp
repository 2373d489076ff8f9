#include "linear.hpp"

#include <fftw3.h>

#include <cmath>

namespace spk {

KrylovResult bicgstab(const LinOp& A, const LinOp& Minv, const Vec& b, Vec& x, double rtol, int max_iter) {
    KrylovResult res;
    const long n = b.size();
    double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        res.converged = true;
        return res;
    }
    Vec r(n), tmp(n);
    A(x, tmp);
    r = b - tmp;
    Vec rhat = r, p = Vec::Zero(n), v = Vec::Zero(n), s(n), t(n), y(n), z(n);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        double rho_new = rhat.dot(r);
        if (rho_new == 0.0) {
            // breakdown: restart with the current residual
            rhat = r;
            rho_new = rhat.dot(r);
            p.setZero();
            v.setZero();
            rho = alpha = omega = 1.0;
        }
        double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p = r + beta * (p - omega * v);
        Minv(p, y);
        A(y, v);
        double den = rhat.dot(v);
        if (den == 0.0) break;
        alpha = rho / den;
        s = r - alpha * v;
        if (s.norm() <= rtol * bnorm) {
            x += alpha * y;
            res.iterations = it;
            res.rel_residual = s.norm() / bnorm;
            res.converged = true;
            return res;
        }
        Minv(s, z);
        A(z, t);
        double tt = t.squaredNorm();
        omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
        x += alpha * y + omega * z;
        r = s - omega * t;
        res.iterations = it;
        res.rel_residual = r.norm() / bnorm;
        if (res.rel_residual <= rtol) {
            res.converged = true;
            return res;
        }
        if (omega == 0.0) break;
    }
    return res;
}

PolarPreconditioner::PolarPreconditioner(int n_rows, int n_theta, double h_theta)
    : rows_(n_rows), nt_(n_theta), nm_(n_theta / 2 + 1) {
    lower.assign(rows_, 0.0);
    lower_l = upper = upper_l = diag = diag_l = lower;
    lambda_.resize(nm_);
    const double pi = std::acos(-1.0);
    for (int k = 0; k < nm_; ++k) {
        double s = std::sin(pi * k / nt_);
        lambda_[k] = -4.0 / (h_theta * h_theta) * s * s;
    }
    real_ = fftw_alloc_real(static_cast<size_t>(rows_) * nt_);
    spec_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(static_cast<size_t>(rows_) * nm_));
    int n[] = {nt_};
    fwd_ = fftw_plan_many_dft_r2c(1, n, rows_, real_, nullptr, 1, nt_, reinterpret_cast<fftw_complex*>(spec_),
                                  nullptr, 1, nm_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_many_dft_c2r(1, n, rows_, reinterpret_cast<fftw_complex*>(spec_), nullptr, 1, nm_, real_,
                                  nullptr, 1, nt_, FFTW_ESTIMATE);
}

PolarPreconditioner::~PolarPreconditioner() {
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
    fftw_free(real_);
    fftw_free(spec_);
}

void PolarPreconditioner::apply(const Vec& in, Vec& out) {
    const size_t total = static_cast<size_t>(rows_) * nt_;
    for (size_t k = 0; k < total; ++k) real_[k] = in[k];
    fftw_execute(static_cast<fftw_plan>(fwd_));
    std::vector<double> cp(rows_);
    std::vector<std::complex<double>> dp(rows_);
    for (int m = 0; m < nm_; ++m) {
        double lam = lambda_[m];
        // Thomas algorithm down the rows for this mode
        for (int i = 0; i < rows_; ++i) {
            double a = lower[i] + lower_l[i] * lam;
            double b = diag[i] + diag_l[i] * lam;
            double c = upper[i] + upper_l[i] * lam;
            std::complex<double> d = spec_[static_cast<size_t>(i) * nm_ + m];
            if (i == 0) {
                cp[i] = c / b;
                dp[i] = d / b;
            } else {
                double den = b - a * cp[i - 1];
                cp[i] = c / den;
                dp[i] = (d - a * dp[i - 1]) / den;
            }
        }
        for (int i = rows_ - 2; i >= 0; --i) dp[i] -= cp[i] * dp[i + 1];
        for (int i = 0; i < rows_; ++i) spec_[static_cast<size_t>(i) * nm_ + m] = dp[i];
    }
    fftw_execute(static_cast<fftw_plan>(bwd_));
    out.resize(static_cast<long>(total));
    for (size_t k = 0; k < total; ++k) out[k] = real_[k] / nt_;
}

}  // namespace spk
