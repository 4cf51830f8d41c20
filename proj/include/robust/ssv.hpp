#pragma once

#include <vector>

#include "robust/lti.hpp"

namespace robust {

enum class BlockKind { RepeatedScalar, FullComplex };

// One block of the uncertainty structure. Full blocks may be non-square:
// Delta_j maps z_dim loop outputs into w_dim loop inputs. Such a block is
// squared to dim = max(z_dim, w_dim) by zero padding of M.
struct UncertaintyBlock {
    BlockKind kind = BlockKind::FullComplex;
    int dim = 1;
    int z_dim = 1;
    int w_dim = 1;

    static UncertaintyBlock repeated(int r);
    static UncertaintyBlock full(int m);
    static UncertaintyBlock full(int z_dim, int w_dim);

    bool operator==(const UncertaintyBlock&) const = default;
};

struct BlockStructure {
    std::vector<UncertaintyBlock> blocks;

    BlockStructure() = default;
    explicit BlockStructure(std::vector<UncertaintyBlock> b);

    int total_dim() const;
    int z_dim() const;  // rows of M consumed
    int w_dim() const;  // columns of M consumed
    bool has_full_block() const;

    bool operator==(const BlockStructure&) const = default;
};

// Per-frequency commuting scalings, block diagonal over the padded dimension.
struct DScaleResponse {
    FrequencyGrid grid;
    std::vector<CMatrix> scales;
};

struct SsvOptions {
    double bisect_tol = 1e-4;
    int max_iter = 40;
};

struct SsvResult {
    FrequencyGrid grid;
    std::vector<double> mu_upper;
    DScaleResponse d_scales;
    double peak = 0.0;
    double peak_omega = 0.0;
    std::size_t peak_index = 0;
};

struct SsvPoint {
    double mu = 0.0;
    CMatrix d;
};

/// Embeds a z_dim x w_dim matrix into the square padded layout of `s`.
CMatrix pad_to_structure(const CMatrix& m, const BlockStructure& s);

/// Upper bound for a single (already padded or square) matrix.
SsvPoint ssv_upper_point(const CMatrix& m, const BlockStructure& s, const SsvOptions& opts = {});

SsvResult ssv_upper(const FrequencyResponseData& m, const BlockStructure& s, const SsvOptions& opts = {});

/// sigma_max(D^{1/2} M D^{-1/2}) for a Hermitian positive-definite D.
double scaled_gain(const CMatrix& m, const CMatrix& d);

struct RobustStability {
    bool robust = false;
    double margin = 0.0;
    SsvResult detail;
};

RobustStability assess_robust_stability(const FrequencyResponseData& clp, const BlockStructure& s,
                                        const SsvOptions& opts = {});

}  // namespace robust
