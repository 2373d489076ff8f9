#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

namespace spk {

using Vec = Eigen::VectorXd;
using LinOp = std::function<void(const Vec&, Vec&)>;

struct KrylovResult {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Right-preconditioned BiCGSTAB; x holds the initial guess on entry.
KrylovResult bicgstab(const LinOp& A, const LinOp& Minv, const Vec& b, Vec& x, double rtol, int max_iter);

// Exact inverse of a row-tridiagonal operator whose coefficients depend on the
// theta mode only through lambda_k = -(4/h^2) sin^2(pi k / n):
//   lower_i + lower_l_i * lambda, diag_i + diag_l_i * lambda, upper_i + upper_l_i * lambda.
class PolarPreconditioner {
public:
    PolarPreconditioner(int n_rows, int n_theta, double h_theta);
    ~PolarPreconditioner();
    PolarPreconditioner(const PolarPreconditioner&) = delete;
    PolarPreconditioner& operator=(const PolarPreconditioner&) = delete;

    std::vector<double> lower, lower_l, diag, diag_l, upper, upper_l;
    void apply(const Vec& in, Vec& out);

private:
    int rows_, nt_, nm_;
    std::vector<double> lambda_;
    double* real_ = nullptr;
    std::complex<double>* spec_ = nullptr;
    void* fwd_ = nullptr;
    void* bwd_ = nullptr;
};

}  // namespace spk
