#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

#include "spk/types.hpp"

namespace spk {

using Mat2 = Eigen::Matrix2d;

// Matrix-valued 1-form P d(first) + Q d(second); entry (i, j) is omega_ij in
// the frame (d/dx, d/dy). The coordinate pair is (rho, theta) or (x, y).
struct MatrixForm {
    Mat2 first = Mat2::Zero();
    Mat2 second = Mat2::Zero();
};

// Plus: *dx = dy, *dy = -dx (equivalently *drho = dtheta).
enum class StarOrientation { Plus, Minus };

const char* orientation_name(StarOrientation o);

// Hodge star of p d1 + q d2 in an oriented conformal coframe.
std::array<double, 2> hodge_star(const std::array<double, 2>& a, StarOrientation o);

// Connection matrix of shape
//   2 w11 = e^u eta - du,  2 w22 = -e^u eta - du,  w12 = -*w11,  w21 = *w22
// with eta = dh + sum a_j phi_j; all 1-forms given by their two coefficients.
MatrixForm connection_matrix(const std::array<double, 2>& du, const std::array<double, 2>& eta, double exp_u,
                             StarOrientation o);

// Convert rho/theta coefficients to x/y coefficients at the point r e^{i theta}.
MatrixForm polar_to_xy(const MatrixForm& f, double rho, double theta);
std::array<double, 2> polar_to_xy(const std::array<double, 2>& a, double rho, double theta);

class ModelStructure {
public:
    enum class Kind { Log, Cone };

    Kind kind() const { return kind_; }
    int k() const { return k_; }
    Complex b() const { return b_; }
    double beta() const { return beta_; }

    // g = density |dz|^2 = e^{-u} |dz|^2
    double density(double rho, double theta) const;
    double u(double rho, double theta) const;
    std::array<double, 2> du(double rho, double theta) const;  // (d/drho, d/dtheta)
    MatrixForm omega(double rho, double theta) const;          // coefficients of drho, dtheta
    MatrixForm omega_xy(double rho, double theta) const;       // coefficients of dx, dy
    // partial derivatives of the drho/dtheta coefficients
    MatrixForm omega_drho(double rho, double theta) const;
    MatrixForm omega_dtheta(double rho, double theta) const;
    // dw + w^w as the coefficient of drho ^ dtheta, from analytic partials
    Mat2 curvature(double rho, double theta) const;
    // associated cubic form coefficient Xi_0(z); zero for the flat cones
    Complex xi0(Complex z) const;
    std::string describe() const;

    friend ModelStructure log_model(int k, Complex b);
    friend ModelStructure cone_model(double beta);

private:
    Kind kind_ = Kind::Cone;
    int k_ = 0;
    Complex b_{1.0, 0.0};
    double beta_ = 0.0;
};

// g = -|b| r^k log r |dz|^2 on 0 < r < 1.
ModelStructure log_model(int k, Complex b);
// g = r^beta |dz|^2 with the Levi-Civita connection.
ModelStructure cone_model(double beta);

// sup over sample points of |assembled - model| for the cone with h = 0,
// a = 0, u = -beta log r under the given star.
double star_discrepancy(const ModelStructure& cone, StarOrientation o);
StarOrientation calibrate_star(const ModelStructure& cone);
// Orientation fixed once against cone_model(1).
StarOrientation calibrated_star();

}  // namespace spk
