#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robust/lti.hpp"
#include "robust/ssv.hpp"

namespace robust {

struct MagnitudeData {
    FrequencyGrid grid;
    std::vector<double> mags;

    MagnitudeData() = default;
    MagnitudeData(FrequencyGrid g, std::vector<double> m);
};

struct FittedWeight {
    StateSpace tf;  // SISO, stable, minimum phase, biproper
    int order = 0;
    double fit_error = 0.0;  // max over the grid of |log(|tf| / data)|
};

enum class FitMode { Approximate, Overbound };

struct FitOptions {
    int refine = 3;           // positivity grid density relative to the data
    double level_tol = 1e-5;  // bisection tolerance on the log-magnitude level
};

FittedWeight fit_minphase_magnitude(const MagnitudeData& data, int order, FitMode mode = FitMode::Approximate,
                                    const FitOptions& opts = {});

/// |W(j omega)| on a grid.
std::vector<double> magnitude(const StateSpace& siso, const FrequencyGrid& grid);

/// max_i |log(|W(j omega_i)| / data_i)|
double log_fit_error(const StateSpace& siso, const MagnitudeData& data);

/// Zeros and poles of a SISO system.
CVector siso_zeros(const StateSpace& siso);
CVector siso_poles(const StateSpace& siso);

// One scalar per full block and one per diagonal entry of a repeated-scalar
// block, in structure order.
struct DScaleEntry {
    std::string name;
    int block = 0;
    int offset = 0;  // position inside a repeated-scalar block
};

std::vector<DScaleEntry> dscale_entries(const BlockStructure& s);

/// Entry held at 1 by the ssv normalization (the last full block), if any.
std::optional<std::size_t> normalized_entry(const BlockStructure& s);

/// Magnitudes of the entries of D_omega = D^{1/2}, where D is the LMI scaling
/// returned by ssv_upper. These are the values D(s) is fit to.
std::vector<MagnitudeData> dscale_magnitudes(const DScaleResponse& d, const BlockStructure& s);

struct DScaleSystem {
    BlockStructure structure;
    std::vector<FittedWeight> entries;
    StateSpace system;   // D(s) on the z side, structure.z_dim() square
    StateSpace inverse;  // D^{-1}(s) on the w side, structure.w_dim() square
    // max over frequency of ||offdiag(D_omega block)||_F / ||D_omega block||_F
    // over repeated-scalar blocks; zero when there are none.
    double discarded_offdiagonal = 0.0;

    static DScaleSystem identity(const BlockStructure& s);
};

DScaleSystem fit_dscale(const DScaleResponse& d, const BlockStructure& s, const std::vector<int>& orders,
                        const FitOptions& opts = {});

/// Assembles D(s) and D^{-1}(s) from per-entry fits.
DScaleSystem assemble_dscale(const BlockStructure& s, std::vector<FittedWeight> entries);

/// Inverse of a SISO system with nonzero feedthrough.
StateSpace invert_siso(const StateSpace& w);

}  // namespace robust
