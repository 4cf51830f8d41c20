#pragma once

#include <string_view>
#include <vector>

#include "robust/dfit.hpp"
#include "robust/lti.hpp"

namespace robust {

// Additive: G_k = G_0 + E_k
// MultiplicativeInput: G_k = G_0 (I + E_k)
// InverseMultiplicativeInput: G_k (I + E_k) = G_0
enum class ResidualForm { Additive, MultiplicativeInput, InverseMultiplicativeInput };

std::string_view to_string(ResidualForm f);

enum class WeightSide { ScalarIdentity, Diagonal, Identity };

// Exactly one side is free (not Identity); the other is held at I.
struct WeightStructure {
    WeightSide left = WeightSide::ScalarIdentity;
    WeightSide right = WeightSide::Identity;

    bool left_free() const { return left != WeightSide::Identity; }
    void validate() const;
};

struct WeightResponse {
    FrequencyGrid grid;
    WeightStructure structure;
    std::vector<std::vector<double>> mags;  // [frequency][diagonal entry]; one entry in the scalar case

    int entries() const { return mags.empty() ? 0 : static_cast<int>(mags.front().size()); }
    MagnitudeData entry(int i) const;
};

std::vector<FrequencyResponseData> residual_response(const FrequencyResponseData& nominal,
                                                     const std::vector<FrequencyResponseData>& offnominals,
                                                     ResidualForm form);

/// G_k rebuilt from G_0 and E_k under `form`.
FrequencyResponseData apply_residual(const FrequencyResponseData& nominal, const FrequencyResponseData& residual,
                                     ResidualForm form);

/// max_k sigma_max(E_k(j omega)) per frequency.
std::vector<double> residual_peak(const std::vector<FrequencyResponseData>& residuals);

WeightResponse weight_response(const std::vector<FrequencyResponseData>& residuals, const WeightStructure& structure);

FittedWeight fit_uncertainty_weight(const MagnitudeData& w, int order, const FitOptions& opts = {});

/// Fits entry `i` of a weight response. All-zero data gives the zero weight;
/// isolated zeros are lifted to 1e-12 of the peak before fitting.
FittedWeight fit_uncertainty_weight(const WeightResponse& w, int i, int order, const FitOptions& opts = {});

/// Full weight W(s) for the free side: w I in the scalar case, diag(w_i) otherwise.
StateSpace weight_system(const std::vector<FittedWeight>& fits, int dim);

/// max over k and grid of sigma_max(W_L^{-1} E_k W_R^{-1}) using the fitted weights.
double coverage(const std::vector<FrequencyResponseData>& residuals, const WeightStructure& structure,
                const std::vector<FittedWeight>& fits);

}  // namespace robust
