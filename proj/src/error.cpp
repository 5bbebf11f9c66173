#include "gwmut/error.hpp"

namespace gwmut {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidLaw: return "InvalidLaw";
        case ErrorKind::InfeasibleLaw: return "InfeasibleLaw";
        case ErrorKind::CapTooSmall: return "CapTooSmall";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::InvalidRegime: return "InvalidRegime";
        case ErrorKind::PopulationCapExceeded: return "PopulationCapExceeded";
        case ErrorKind::IncompleteForest: return "IncompleteForest";
        case ErrorKind::WalkCapExceeded: return "WalkCapExceeded";
        case ErrorKind::DegenerateLevel: return "DegenerateLevel";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::EmptySample: return "EmptySample";
        case ErrorKind::InsufficientStrata: return "InsufficientStrata";
        case ErrorKind::RegimeMismatch: return "RegimeMismatch";
        case ErrorKind::Usage: return "Usage";
    }
    return "Unknown";
}

}  // namespace gwmut
