#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spk {

using Complex = std::complex<double>;

// A point of the Riemann sphere: affine coordinate or the point at infinity.
struct CPoint {
    bool infinite = false;
    Complex z{0.0, 0.0};

    static CPoint finite(Complex w) { return CPoint{false, w}; }
    static CPoint finite(double x, double y) { return CPoint{false, Complex(x, y)}; }
    static CPoint infinity() { return CPoint{true, Complex(0.0, 0.0)}; }

    bool is_infinity() const { return infinite; }
    std::string str() const;
};

bool same_point(const CPoint& a, const CPoint& b, double tol = 1e-12);

enum class ErrorCode {
    EssentialSingularity,
    EssentialSingularityMetricOnly,
    InvalidPoint,
    InfinityUnsupported,
    NearPole,
    PoleOutsidePunctures,
    InvalidAlpha,
    NonAdmissible,
    NoConvergence,
    GridTooCoarse,
    RegionOutsideChart,
    ZeroB,
    CalibrationFailed,
    ChartMismatch,
    NotCalibrated,
    FitResidualTooLarge,
    InsufficientRange,
    NotUnitModulus,
    GenusUnsupported,
    EmptySpace,
    BadLattice,
    InvalidArgument,
    InvalidConfig,
    IoError,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg);
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Raised by the Liouville solver; carries the last residual.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& msg, double residual, int iterations)
        : Error(ErrorCode::NoConvergence, msg), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

}  // namespace spk
