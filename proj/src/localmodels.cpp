#include "spk/localmodels.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace spk {

namespace {

const Mat2 kI2 = (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();

// b/|b| e^{ik theta} = c + i s
void phase(Complex b, int k, double theta, double& c, double& s) {
    Complex w = b / std::abs(b) * std::polar(1.0, k * theta);
    c = w.real();
    s = w.imag();
}

}  // namespace

const char* orientation_name(StarOrientation o) { return o == StarOrientation::Plus ? "+" : "-"; }

std::array<double, 2> hodge_star(const std::array<double, 2>& a, StarOrientation o) {
    if (o == StarOrientation::Plus) return {-a[1], a[0]};
    return {a[1], -a[0]};
}

MatrixForm connection_matrix(const std::array<double, 2>& du, const std::array<double, 2>& eta, double exp_u,
                             StarOrientation o) {
    std::array<double, 2> w11{}, w22{};
    for (int c = 0; c < 2; ++c) {
        w11[c] = 0.5 * (exp_u * eta[c] - du[c]);
        w22[c] = 0.5 * (-exp_u * eta[c] - du[c]);
    }
    auto s11 = hodge_star(w11, o), s22 = hodge_star(w22, o);
    MatrixForm f;
    f.first << w11[0], -s11[0], s22[0], w22[0];
    f.second << w11[1], -s11[1], s22[1], w22[1];
    return f;
}

std::array<double, 2> polar_to_xy(const std::array<double, 2>& a, double rho, double theta) {
    double r = std::exp(rho), c = std::cos(theta), s = std::sin(theta);
    return {(a[0] * c - a[1] * s) / r, (a[0] * s + a[1] * c) / r};
}

MatrixForm polar_to_xy(const MatrixForm& f, double rho, double theta) {
    double r = std::exp(rho), c = std::cos(theta), s = std::sin(theta);
    MatrixForm out;
    out.first = (f.first * c - f.second * s) / r;
    out.second = (f.first * s + f.second * c) / r;
    return out;
}

ModelStructure log_model(int k, Complex b) {
    if (b == Complex(0.0, 0.0) || !std::isfinite(std::abs(b))) throw Error(ErrorCode::ZeroB, "log model needs b != 0");
    ModelStructure m;
    m.kind_ = ModelStructure::Kind::Log;
    m.k_ = k;
    m.b_ = b;
    return m;
}

ModelStructure cone_model(double beta) {
    if (!std::isfinite(beta)) throw Error(ErrorCode::InvalidArgument, "cone exponent must be finite");
    ModelStructure m;
    m.kind_ = ModelStructure::Kind::Cone;
    m.beta_ = beta;
    return m;
}

double ModelStructure::density(double rho, double) const {
    if (kind_ == Kind::Cone) return std::exp(beta_ * rho);
    if (!(rho < 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return -std::abs(b_) * std::exp(k_ * rho) * rho;
}

double ModelStructure::u(double rho, double) const {
    if (kind_ == Kind::Cone) return -beta_ * rho;
    if (!(rho < 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return -std::log(std::abs(b_)) - k_ * rho - std::log(-rho);
}

std::array<double, 2> ModelStructure::du(double rho, double) const {
    if (kind_ == Kind::Cone) return {-beta_, 0.0};
    return {-k_ - 1.0 / rho, 0.0};
}

MatrixForm ModelStructure::omega(double rho, double theta) const {
    MatrixForm f;
    if (kind_ == Kind::Cone) {
        f.first = 0.5 * beta_ * Mat2::Identity();
        f.second = 0.5 * beta_ * kI2;
        return f;
    }
    double c, s;
    phase(b_, k_, theta, c, s);
    Mat2 mt, mr;
    mt << s, -1.0 + c, 1.0 + c, -s;
    mr << 1.0 - c, s, s, 1.0 + c;
    f.second = 0.5 * (k_ * kI2 + mt / rho);
    f.first = 0.5 * (k_ * Mat2::Identity() + mr / rho);
    return f;
}

MatrixForm ModelStructure::omega_xy(double rho, double theta) const { return polar_to_xy(omega(rho, theta), rho, theta); }

MatrixForm ModelStructure::omega_drho(double rho, double theta) const {
    MatrixForm f;
    if (kind_ == Kind::Cone) return f;
    double c, s;
    phase(b_, k_, theta, c, s);
    Mat2 mt, mr;
    mt << s, -1.0 + c, 1.0 + c, -s;
    mr << 1.0 - c, s, s, 1.0 + c;
    double w = -0.5 / (rho * rho);
    f.first = w * mr;
    f.second = w * mt;
    return f;
}

MatrixForm ModelStructure::omega_dtheta(double rho, double theta) const {
    MatrixForm f;
    if (kind_ == Kind::Cone) return f;
    double c, s;
    phase(b_, k_, theta, c, s);
    // d/dtheta (c, s) = (-k s, k c)
    double dc = -k_ * s, ds = k_ * c;
    Mat2 mt, mr;
    mt << ds, dc, dc, -ds;
    mr << -dc, ds, ds, dc;
    f.first = 0.5 * mr / rho;
    f.second = 0.5 * mt / rho;
    return f;
}

Mat2 ModelStructure::curvature(double rho, double theta) const {
    MatrixForm w = omega(rho, theta);
    return omega_drho(rho, theta).second - omega_dtheta(rho, theta).first + w.first * w.second -
           w.second * w.first;
}

Complex ModelStructure::xi0(Complex z) const {
    if (kind_ == Kind::Cone) return 0.0;
    return Complex(0.0, -0.25) * b_ * std::pow(z, k_ - 1);
}

std::string ModelStructure::describe() const {
    char buf[96];
    if (kind_ == Kind::Cone)
        std::snprintf(buf, sizeof buf, "cone(beta=%.17g)", beta_);
    else
        std::snprintf(buf, sizeof buf, "log(k=%d, b=%.17g%+.17gi)", k_, b_.real(), b_.imag());
    return buf;
}

double star_discrepancy(const ModelStructure& cone, StarOrientation o) {
    double worst = 0.0;
    for (double r : {0.1, 0.3, 0.5, 0.9})
        for (int j = 0; j < 8; ++j) {
            double rho = std::log(r), theta = (j + 0.5) * std::acos(-1.0) / 4.0;
            MatrixForm a = connection_matrix(cone.du(rho, theta), {0.0, 0.0}, std::exp(cone.u(rho, theta)), o);
            MatrixForm m = cone.omega(rho, theta);
            worst = std::max(worst, (a.first - m.first).cwiseAbs().maxCoeff());
            worst = std::max(worst, (a.second - m.second).cwiseAbs().maxCoeff());
        }
    return worst;
}

StarOrientation calibrate_star(const ModelStructure& cone) {
    if (cone.kind() != ModelStructure::Kind::Cone)
        throw Error(ErrorCode::InvalidArgument, "calibration uses a flat cone model");
    const double tol = 1e-12 * (1.0 + std::abs(cone.beta()));
    for (StarOrientation o : {StarOrientation::Plus, StarOrientation::Minus})
        if (star_discrepancy(cone, o) <= tol) return o;
    throw Error(ErrorCode::CalibrationFailed, "no Hodge star orientation reproduces " + cone.describe());
}

StarOrientation calibrated_star() {
    static const StarOrientation o = calibrate_star(cone_model(1.0));
    return o;
}

}  // namespace spk
