#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robust/error.hpp"

// Small dense semidefinite programming layer: affine matrix expressions in
// real decision variables, LMI constraints, and a primal-dual interior-point
// solver behind a backend-neutral Problem/Solution interface.
namespace robust::sdp {

/// constant + sum_i y_i * coefficient_i, with real decision variables y.
template <class Scalar>
class Affine {
  public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Affine() = default;
    Affine(Eigen::Index rows, Eigen::Index cols) : constant_(Mat::Zero(rows, cols)) {}
    explicit Affine(Mat constant) : constant_(std::move(constant)) {}

    static Affine variable(int index, Mat coefficient) {
        Affine a(coefficient.rows(), coefficient.cols());
        a.terms_.emplace(index, std::move(coefficient));
        return a;
    }

    Eigen::Index rows() const { return constant_.rows(); }
    Eigen::Index cols() const { return constant_.cols(); }
    const Mat& constant() const { return constant_; }
    const std::map<int, Mat>& terms() const { return terms_; }

    Affine& operator+=(const Affine& o) {
        check_same(o);
        constant_ += o.constant_;
        for (const auto& [i, c] : o.terms_) {
            auto it = terms_.find(i);
            if (it == terms_.end()) terms_.emplace(i, c);
            else it->second += c;
        }
        return *this;
    }
    Affine& operator-=(const Affine& o) { return *this += -o; }
    Affine& operator*=(Scalar s) {
        constant_ *= s;
        for (auto& [i, c] : terms_) c *= s;
        return *this;
    }
    friend Affine operator+(Affine a, const Affine& b) { return a += b; }
    friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
    friend Affine operator*(Affine a, Scalar s) { return a *= s; }
    friend Affine operator*(Scalar s, Affine a) { return a *= s; }
    Affine operator-() const { return Affine(*this) *= Scalar(-1); }
    friend Affine operator+(Affine a, const Mat& m) {
        a.constant_ += m;
        return a;
    }
    friend Affine operator-(Affine a, const Mat& m) {
        a.constant_ -= m;
        return a;
    }

    /// left * this
    friend Affine operator*(const Mat& left, const Affine& a) {
        Affine r(Mat(left * a.constant_));
        for (const auto& [i, c] : a.terms_) r.terms_.emplace(i, left * c);
        return r;
    }
    /// this * right
    friend Affine operator*(const Affine& a, const Mat& right) {
        Affine r(Mat(a.constant_ * right));
        for (const auto& [i, c] : a.terms_) r.terms_.emplace(i, c * right);
        return r;
    }

    /// A 1x1 expression times a constant matrix.
    static Affine scaled(const Affine& scalar, const Mat& m) {
        if (scalar.rows() != 1 || scalar.cols() != 1) throw Error(ErrorKind::DimensionMismatch, "expected 1x1 expression");
        Affine r(Mat(scalar.constant_(0, 0) * m));
        for (const auto& [i, c] : scalar.terms_) r.terms_.emplace(i, c(0, 0) * m);
        return r;
    }

    Affine transpose() const {
        Affine r(Mat(constant_.transpose()));
        for (const auto& [i, c] : terms_) r.terms_.emplace(i, c.transpose());
        return r;
    }
    Affine adjoint() const {
        Affine r(Mat(constant_.adjoint()));
        for (const auto& [i, c] : terms_) r.terms_.emplace(i, c.adjoint());
        return r;
    }
    /// this + this^*
    Affine herm() const { return *this + adjoint(); }

    Affine block(Eigen::Index r, Eigen::Index c, Eigen::Index nr, Eigen::Index nc) const {
        Affine out(Mat(constant_.block(r, c, nr, nc)));
        for (const auto& [i, m] : terms_) out.terms_.emplace(i, m.block(r, c, nr, nc));
        return out;
    }

    Mat value(const Eigen::VectorXd& y) const {
        Mat v = constant_;
        for (const auto& [i, c] : terms_) v += Scalar(y(i)) * c;
        return v;
    }

    /// Assembles a block matrix. Every row of `grid` must have matching heights
    /// and every column matching widths.
    static Affine blocks(const std::vector<std::vector<Affine>>& grid) {
        if (grid.empty() || grid.front().empty()) return Affine(0, 0);
        Eigen::Index total_rows = 0;
        Eigen::Index total_cols = 0;
        for (const auto& row : grid) total_rows += row.front().rows();
        for (const auto& b : grid.front()) total_cols += b.cols();
        Affine out(total_rows, total_cols);
        Eigen::Index r0 = 0;
        for (const auto& row : grid) {
            if (row.size() != grid.front().size()) throw Error(ErrorKind::DimensionMismatch, "ragged block grid");
            Eigen::Index c0 = 0;
            for (std::size_t j = 0; j < row.size(); ++j) {
                const auto& b = row[j];
                if (b.rows() != row.front().rows() || b.cols() != grid.front()[j].cols()) {
                    throw Error(ErrorKind::DimensionMismatch, "block sizes do not line up");
                }
                out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
                for (const auto& [i, m] : b.terms_) {
                    auto it = out.terms_.find(i);
                    if (it == out.terms_.end()) it = out.terms_.emplace(i, Mat::Zero(total_rows, total_cols)).first;
                    it->second.block(r0, c0, b.rows(), b.cols()) = m;
                }
                c0 += b.cols();
            }
            r0 += row.front().rows();
        }
        return out;
    }

  private:
    void check_same(const Affine& o) const {
        if (o.rows() != rows() || o.cols() != cols()) {
            throw Error(ErrorKind::DimensionMismatch, "affine expressions differ in shape");
        }
    }

    Mat constant_;
    std::map<int, Mat> terms_;
};

using AffineMatrix = Affine<double>;
using AffineCMatrix = Affine<std::complex<double>>;

AffineCMatrix to_complex(const AffineMatrix& a);

/// [Re H, -Im H; Im H, Re H]. H >= 0 iff the embedding is >= 0, and every
/// eigenvalue of H appears twice. Throws NotHermitian on asymmetry above 1e-10
/// relative.
AffineMatrix realify_hermitian(const AffineCMatrix& h);
Eigen::MatrixXd realify_hermitian(const Eigen::MatrixXcd& h);

enum class VariableKind { Scalar, Symmetric, Matrix, Hermitian };

struct VariableInfo {
    std::string name;
    VariableKind kind;
    int rows;
    int cols;
    int first_index;  // first scalar decision variable backing it
    int count;
};

enum class Status { Optimal, Feasible, Infeasible, NumericalFailure };

std::string_view to_string(Status s);

struct SolverOptions {
    double feas_tol = 1e-8;
    double gap_tol = 1e-8;
    int max_iter = 100;
    // Strict LMIs F > 0 become F >= strict_eps * ||F||_est * I.
    double strict_eps = 1e-7;
    // Implicit box |y_i| <= variable_bound keeping every problem bounded.
    double variable_bound = 1e9;
};

class Problem;

struct Solution {
    Status status = Status::NumericalFailure;
    Eigen::VectorXd values;            // empty unless Optimal or Feasible
    std::optional<double> objective;   // present for Optimal
    double min_margin = 0.0;           // smallest eigenvalue over all constraints at `values`
    int iterations = 0;

    bool ok() const { return status == Status::Optimal || status == Status::Feasible; }
    Eigen::MatrixXd value(const AffineMatrix& expr) const { return expr.value(values); }
    Eigen::MatrixXcd value(const AffineCMatrix& expr) const { return expr.value(values); }
    double scalar(const AffineMatrix& expr) const { return expr.value(values)(0, 0); }
};

/// An SDP in LMI form: minimize c'y subject to F_k(y) >= 0 for every
/// registered constraint. Without an objective it is a feasibility problem.
class Problem {
  public:
    AffineMatrix add_scalar(const std::string& name);
    AffineMatrix add_symmetric(const std::string& name, int order);
    AffineMatrix add_matrix(const std::string& name, int rows, int cols);
    AffineCMatrix add_hermitian(const std::string& name, int order);

    void add_lmi(const AffineMatrix& expr, const std::string& label = {});
    void add_lmi(const AffineCMatrix& expr, const std::string& label = {});
    void add_strict_lmi(const AffineMatrix& expr, std::optional<double> eps = std::nullopt,
                        const std::string& label = {});
    void add_strict_lmi(const AffineCMatrix& expr, std::optional<double> eps = std::nullopt,
                        const std::string& label = {});

    void minimize(const AffineMatrix& scalar_expr);
    void maximize(const AffineMatrix& scalar_expr) { minimize(-scalar_expr); }

    int num_scalars() const { return num_scalars_; }
    const std::vector<VariableInfo>& variables() const { return variables_; }
    const std::vector<AffineMatrix>& constraints() const { return constraints_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<double>& strict_shifts() const { return strict_shift_; }
    const std::optional<AffineMatrix>& objective() const { return objective_; }

    /// Plain-text listing of variables, constraints and objective.
    std::string listing() const;

  private:
    int reserve(const std::string& name, VariableKind kind, int rows, int cols, int count);

    int num_scalars_ = 0;
    std::vector<VariableInfo> variables_;
    std::vector<AffineMatrix> constraints_;
    std::vector<std::string> labels_;
    std::vector<double> strict_shift_;  // recorded for diagnostics only
    std::optional<AffineMatrix> objective_;
};

Solution solve(const Problem& problem, const SolverOptions& opts = {});

/// Smallest eigenvalue of F_k(values) over all constraints of the problem.
double constraint_margin(const Problem& problem, const Eigen::VectorXd& values);

}  // namespace robust::sdp
