#include "spk/types.hpp"

#include <cstdio>

namespace spk {

std::string CPoint::str() const {
    if (infinite) return "inf";
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.17g,%.17g)", z.real(), z.imag());
    return buf;
}

bool same_point(const CPoint& a, const CPoint& b, double tol) {
    if (a.infinite || b.infinite) return a.infinite == b.infinite;
    return std::abs(a.z - b.z) <= tol * (1.0 + std::abs(a.z));
}

const char* error_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::EssentialSingularity: return "EssentialSingularity";
        case ErrorCode::EssentialSingularityMetricOnly: return "EssentialSingularityMetricOnly";
        case ErrorCode::InvalidPoint: return "InvalidPoint";
        case ErrorCode::InfinityUnsupported: return "InfinityUnsupported";
        case ErrorCode::NearPole: return "NearPole";
        case ErrorCode::PoleOutsidePunctures: return "PoleOutsidePunctures";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::NonAdmissible: return "NonAdmissible";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::RegionOutsideChart: return "RegionOutsideChart";
        case ErrorCode::ZeroB: return "ZeroB";
        case ErrorCode::CalibrationFailed: return "CalibrationFailed";
        case ErrorCode::ChartMismatch: return "ChartMismatch";
        case ErrorCode::NotCalibrated: return "NotCalibrated";
        case ErrorCode::FitResidualTooLarge: return "FitResidualTooLarge";
        case ErrorCode::InsufficientRange: return "InsufficientRange";
        case ErrorCode::NotUnitModulus: return "NotUnitModulus";
        case ErrorCode::GenusUnsupported: return "GenusUnsupported";
        case ErrorCode::EmptySpace: return "EmptySpace";
        case ErrorCode::BadLattice: return "BadLattice";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& msg)
    : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}

}  // namespace spk
