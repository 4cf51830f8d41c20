#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "robust/lti.hpp"

namespace testutil {

// Random stable system: eigenvalues of A placed in [-3, -0.2] (real) or with
// damped complex pairs, then mixed by a random similarity.
inline robust::StateSpace random_stable(std::mt19937& rng, int n, int m, int p) {
    using robust::Matrix;
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.2, 3.0);
    Matrix A = Matrix::Zero(n, n);
    int i = 0;
    while (i < n) {
        if (i + 1 < n && nd(rng) > 0.0) {
            const double re = -ud(rng);
            const double im = ud(rng);
            A(i, i) = re;
            A(i + 1, i + 1) = re;
            A(i, i + 1) = im;
            A(i + 1, i) = -im;
            i += 2;
        } else {
            A(i, i) = -ud(rng);
            i += 1;
        }
    }
    Matrix T = Matrix::NullaryExpr(n, n, [&] { return nd(rng); }) + 2.0 * Matrix::Identity(n, n);
    if (n > 0) A = T * A * T.inverse();
    const Matrix B = Matrix::NullaryExpr(n, m, [&] { return nd(rng); });
    const Matrix C = Matrix::NullaryExpr(p, n, [&] { return nd(rng); });
    const Matrix D = Matrix::NullaryExpr(p, m, [&] { return nd(rng); });
    return robust::StateSpace(A, B, C, D);
}

inline robust::CMatrix random_complex(std::mt19937& rng, int r, int c) {
    std::normal_distribution<double> nd(0.0, 1.0);
    return robust::CMatrix::NullaryExpr(r, c, [&] { return robust::Complex(nd(rng), nd(rng)); });
}

// Plant with Gaussian dynamics (often unstable) and full-rank D12 / D21.
inline robust::GeneralizedPlant random_plant(std::mt19937& rng, int n, int nw, int nu, int nz, int ny) {
    using robust::Matrix;
    std::normal_distribution<double> nd(0.0, 1.0);
    auto gauss = [&](int r, int c) { return Matrix(Matrix::NullaryExpr(r, c, [&] { return nd(rng); })); };
    const Matrix A = gauss(n, n);
    Matrix B(n, nw + nu), C(nz + ny, n), D = Matrix::Zero(nz + ny, nw + nu);
    B << gauss(n, nw), gauss(n, nu);
    C << gauss(nz, n), gauss(ny, n);
    D.topLeftCorner(nz, nw) = 0.3 * gauss(nz, nw);
    D.block(nz - nu, nw, nu, nu) = Matrix::Identity(nu, nu);
    D.block(nz, nw - ny, ny, ny) = Matrix::Identity(ny, ny);
    return robust::GeneralizedPlant(robust::StateSpace(A, B, C, D), nw, nu, nz, ny);
}

// Sensitivity weight 0.5(s+2)/(s+0.2) on e = w - G u, input weight 0.1 on u,
// G = 1/(s+1), measurement y = e.
inline robust::GeneralizedPlant mixed_sensitivity_plant() {
    using robust::Matrix;
    Matrix A(2, 2), B(2, 2), C(3, 2), D(3, 2);
    A << -1, 0, -1, -0.2;
    B << 0, 1, 1, 0;
    C << -0.5, 0.9, 0, 0, -1, 0;
    D << 0.5, 0, 0, 0.1, 1, 0;
    return robust::GeneralizedPlant(robust::StateSpace(A, B, C, D), 1, 1, 2, 1);
}

// G = 1/(s+1) with multiplicative input uncertainty weighted by
// Wu = 0.25(s+1)/(0.1s+1) and sensitivity weight Wp = 0.5(s+2)/(s+0.2).
// w = [w1 (from Delta); w2 (reference)], z = [Wu u; Wp e], y = e = w2 - G(u + w1).
inline robust::GeneralizedPlant dk_fixture_plant() {
    using robust::Matrix;
    Matrix A(3, 3), B(3, 3), C(3, 3), D(3, 3);
    A << -1, 0, 0, 0, -10, 0, -1, 0, -0.2;
    B << 1, 0, 1, 0, 0, 1, 0, 1, 0;
    C << 0, -22.5, 0, -0.5, 0, 0.9, -1, 0, 0;
    D << 0, 0, 2.5, 0, 0.5, 0, 0, 1, 0;
    return robust::GeneralizedPlant(robust::StateSpace(A, B, C, D), 2, 1, 2, 1);
}

// Coupled 2x2 first-order actuator pair.
inline robust::StateSpace actuator_nominal() {
    using robust::Matrix;
    Matrix A(2, 2), B(2, 2), C(2, 2);
    A << -20, 0, 0, -15;
    B << 20, 0, 0, 15;
    C << 1, 0.1, 0.2, 1;
    return robust::StateSpace(A, B, C, Matrix::Zero(2, 2));
}

// 40 off-nominal actuators G0 (I + w(s) delta_k(s) I) with
// w(s) = 0.8 (s + 0.5) / (s + 5). The first 20 use constant gains
// delta = a, a in [-1, 1]; the rest all-pass delta = (s/b - 1)/(s/b + 1)
// with b log-uniform in [0.01, 10].
inline std::vector<robust::FrequencyResponseData> actuator_offnominals(const robust::FrequencyGrid& grid,
                                                                       unsigned seed = 7) {
    using robust::Complex;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ua(-1.0, 1.0), ub(std::log(0.01), std::log(10.0));
    const auto g0 = robust::freq_response(actuator_nominal(), grid);
    std::vector<robust::FrequencyResponseData> out;
    for (int k = 0; k < 40; ++k) {
        const double a = ua(rng);
        const double b = std::exp(ub(rng));
        std::vector<robust::CMatrix> v;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Complex s(0.0, grid[i]);
            const Complex w = 0.8 * (s + 0.5) / (s + 5.0);
            const Complex delta = k < 20 ? Complex(a) : (s / b - 1.0) / (s / b + 1.0);
            v.push_back(g0.values[i] * (1.0 + w * delta));
        }
        out.emplace_back(grid, std::move(v));
    }
    return out;
}

}  // namespace testutil
