#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace robust {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    SingularAtFrequency,
    UnstableSystem,
    AlgebraicLoop,
    NotHermitian,
    SolverFailure,
    NotStabilizable,
    NotDetectable,
    ReconstructionIllConditioned,
    BracketExhausted,
    InfeasibleOverbound,
    NumericalRooting,
    GridMismatch,
    RankDeficient,
};

inline std::string_view to_string(ErrorKind kind);

// Every failure raised by the library. `index` carries a frequency index,
// model index or iteration index when one is meaningful for the kind.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what, std::optional<int> index = std::nullopt)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), index_(index), detail_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }
    std::optional<int> index() const noexcept { return index_; }

  private:
    ErrorKind kind_;
    std::optional<int> index_;
    std::string detail_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::SingularAtFrequency: return "SingularAtFrequency";
        case ErrorKind::UnstableSystem: return "UnstableSystem";
        case ErrorKind::AlgebraicLoop: return "AlgebraicLoop";
        case ErrorKind::NotHermitian: return "NotHermitian";
        case ErrorKind::SolverFailure: return "SolverFailure";
        case ErrorKind::NotStabilizable: return "NotStabilizable";
        case ErrorKind::NotDetectable: return "NotDetectable";
        case ErrorKind::ReconstructionIllConditioned: return "ReconstructionIllConditioned";
        case ErrorKind::BracketExhausted: return "BracketExhausted";
        case ErrorKind::InfeasibleOverbound: return "InfeasibleOverbound";
        case ErrorKind::NumericalRooting: return "NumericalRooting";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::RankDeficient: return "RankDeficient";
    }
    return "Unknown";
}

}  // namespace robust
