#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "robust/error.hpp"

namespace robust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Real-part tolerance used by every stability test.
inline constexpr double kStabilityTolerance = 1e-9;

/// Continuous-time LTI system dx/dt = Ax + Bu, y = Cx + Du.
/// A system with zero states is a static gain D.
struct StateSpace {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    StateSpace() = default;
    StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

    static StateSpace gain(Matrix d);
    static StateSpace gain(double d) { return gain(Matrix::Constant(1, 1, d)); }

    int states() const { return static_cast<int>(A.rows()); }
    int inputs() const { return static_cast<int>(D.cols()); }
    int outputs() const { return static_cast<int>(D.rows()); }
};

/// Strictly increasing positive frequencies in rad/s.
class FrequencyGrid {
  public:
    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> omegas);

    static FrequencyGrid logspace(double lo, double hi, int n);

    const std::vector<double>& omegas() const { return omegas_; }
    std::size_t size() const { return omegas_.size(); }
    double operator[](std::size_t i) const { return omegas_[i]; }
    bool operator==(const FrequencyGrid&) const = default;

  private:
    std::vector<double> omegas_;
};

/// One complex matrix per grid frequency, all the same shape.
struct FrequencyResponseData {
    FrequencyGrid grid;
    std::vector<CMatrix> values;

    FrequencyResponseData() = default;
    FrequencyResponseData(FrequencyGrid g, std::vector<CMatrix> v);

    int rows() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
    int cols() const { return values.empty() ? 0 : static_cast<int>(values.front().cols()); }
};

/// State-space plant with inputs ordered [w; u] and outputs ordered [z; y].
struct GeneralizedPlant {
    StateSpace ss;
    int n_w = 0;
    int n_u = 0;
    int n_z = 0;
    int n_y = 0;

    GeneralizedPlant() = default;
    GeneralizedPlant(StateSpace sys, int nw, int nu, int nz, int ny);

    auto B1() const { return ss.B.leftCols(n_w); }
    auto B2() const { return ss.B.rightCols(n_u); }
    auto C1() const { return ss.C.topRows(n_z); }
    auto C2() const { return ss.C.bottomRows(n_y); }
    auto D11() const { return ss.D.topLeftCorner(n_z, n_w); }
    auto D12() const { return ss.D.topRightCorner(n_z, n_u); }
    auto D21() const { return ss.D.bottomLeftCorner(n_y, n_w); }
    auto D22() const { return ss.D.bottomRightCorner(n_y, n_u); }
};

/// Samples are rows: row k holds the vector at times[k].
struct TimeResponse {
    std::vector<double> times;
    Matrix inputs;
    Matrix outputs;
    Matrix states;
};

CMatrix evaluate(const StateSpace& sys, Complex s);

/// G(jw) = C (jwI - A)^{-1} B + D on every grid point.
/// Throws SingularAtFrequency (index = grid position) when jwI - A is singular.
FrequencyResponseData freq_response(const StateSpace& sys, const FrequencyGrid& grid);

double max_singular_value(const CMatrix& m);
double max_singular_value(const Matrix& m);

bool is_stable(const StateSpace& sys, double margin = 0.0);

/// H-infinity norm by bisection on the Hamiltonian imaginary-eigenvalue test,
/// with the bracket seeded by a coarse frequency sweep. Relative accuracy `tol`.
double hinf_norm(const StateSpace& sys, double tol = 1e-6);

/// Lower LFT F_l(P, K) realized on the stacked state [x_P; x_K].
StateSpace lft_lower(const GeneralizedPlant& plant, const StateSpace& controller);

/// Zero-order-hold simulation from a zero initial state. `input` holds one
/// sample per row, uniformly spaced by dt.
TimeResponse simulate(const StateSpace& sys, const Matrix& input, double dt);

// Interconnection helpers.
StateSpace series(const StateSpace& first, const StateSpace& second);  // second * first
StateSpace parallel(const StateSpace& a, const StateSpace& b);         // a + b
StateSpace append(const StateSpace& a, const StateSpace& b);           // diag(a, b)
StateSpace premultiply(const Matrix& left, const StateSpace& sys);
StateSpace postmultiply(const StateSpace& sys, const Matrix& right);

/// SISO transfer function from descending polynomial coefficients, realized
/// in controllable canonical form. Requires deg(num) <= deg(den).
StateSpace transfer_function(std::vector<double> num, std::vector<double> den);

Matrix dc_gain(const StateSpace& sys);

/// Diagonal state similarity that evens out the row and column norms of
/// [A B; C 0]. The transfer function is unchanged.
StateSpace balance(const StateSpace& sys);

}  // namespace robust
