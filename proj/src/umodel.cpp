#include "robust/umodel.hpp"

#include <algorithm>
#include <cmath>

#include "robust/sdp.hpp"

namespace robust {

namespace {

constexpr double kRankTol = 1e-8;

void check_same_shape(const FrequencyResponseData& a, const FrequencyResponseData& b, const char* what) {
    if (!(a.grid == b.grid)) throw Error(ErrorKind::GridMismatch, std::string(what) + " is sampled on a different grid");
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + " differs in dimensions from the nominal");
    }
}

// Least-norm solution of A X = B, with a residual check.
CMatrix solve_checked(const CMatrix& a, const CMatrix& b, double omega, int k) {
    const double bn = b.norm();
    if (bn == 0.0) return CMatrix::Zero(a.cols(), b.cols());
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(a);
    const CMatrix x = cod.solve(b);
    const double res = (a * x - b).norm() / bn;
    if (!(res <= kRankTol)) {
        throw Error(ErrorKind::RankDeficient,
                    "model " + std::to_string(k) + " at omega = " + std::to_string(omega) +
                        ": the residual form cannot represent this perturbation (relative residual " +
                        std::to_string(res) + ")",
                    k);
    }
    return x;
}

double sigma_max(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
}

// Trace-optimal diagonal X with X >= E_k E_k^* for every k. Returns diag(X).
Vector optimal_diagonal(const std::vector<CMatrix>& es, bool scalar, double omega) {
    const Eigen::Index n = es.front().rows();
    double scale = 0.0;
    for (const auto& e : es) scale = std::max(scale, sigma_max(e));
    if (scale == 0.0) return Vector::Zero(n);
    if (scalar) return Vector::Constant(n, scale * scale);

    sdp::Problem p;
    std::vector<sdp::AffineMatrix> x;
    sdp::AffineMatrix trace(Matrix::Zero(1, 1));
    sdp::AffineMatrix diag(Matrix::Zero(n, n));
    for (Eigen::Index i = 0; i < n; ++i) {
        x.push_back(p.add_scalar("x" + std::to_string(i + 1)));
        Matrix unit = Matrix::Zero(n, n);
        unit(i, i) = 1.0;
        diag += sdp::AffineMatrix::scaled(x.back(), unit);
        trace += x.back();
    }
    const auto xc = sdp::to_complex(diag);
    for (const auto& e : es) {
        const CMatrix en = e / scale;
        p.add_lmi(xc - CMatrix(en * en.adjoint()), "X >= E E^*");
    }
    p.minimize(trace);
    const auto sol = sdp::solve(p);
    if (!sol.ok()) {
        throw Error(ErrorKind::SolverFailure, "weight LMI at omega = " + std::to_string(omega) + " returned " +
                                                  std::string(sdp::to_string(sol.status)));
    }
    Vector d = sol.value(diag).diagonal();
    // Rows of zeros leave their entry free; keep it positive so X^{-1/2} exists.
    d = d.cwiseMax(1e-12);
    // Scale up to exact feasibility.
    const Vector inv_root = d.cwiseSqrt().cwiseInverse();
    double t = 0.0;
    for (const auto& e : es) t = std::max(t, sigma_max(inv_root.asDiagonal() * (e / scale)));
    if (t > 1.0) d *= t * t;
    return d * (scale * scale);
}

}  // namespace

std::string_view to_string(ResidualForm f) {
    switch (f) {
        case ResidualForm::Additive: return "additive";
        case ResidualForm::MultiplicativeInput: return "multiplicative_input";
        case ResidualForm::InverseMultiplicativeInput: return "inverse_multiplicative_input";
    }
    return "unknown";
}

void WeightStructure::validate() const {
    const bool lf = left != WeightSide::Identity;
    const bool rf = right != WeightSide::Identity;
    if (lf && rf) throw Error(ErrorKind::InvalidArgument, "only one weight side may be free; the other must be identity");
    if (!lf && !rf) throw Error(ErrorKind::InvalidArgument, "both weight sides are identity; nothing to optimize");
}

MagnitudeData WeightResponse::entry(int i) const {
    if (i < 0 || i >= entries()) throw Error(ErrorKind::InvalidArgument, "weight entry out of range");
    std::vector<double> m;
    m.reserve(mags.size());
    for (const auto& row : mags) m.push_back(row[static_cast<std::size_t>(i)]);
    return MagnitudeData(grid, std::move(m));
}

std::vector<FrequencyResponseData> residual_response(const FrequencyResponseData& nominal,
                                                     const std::vector<FrequencyResponseData>& offnominals,
                                                     ResidualForm form) {
    std::vector<FrequencyResponseData> out;
    out.reserve(offnominals.size());
    for (std::size_t k = 0; k < offnominals.size(); ++k) {
        const auto& gk = offnominals[k];
        check_same_shape(nominal, gk, ("off-nominal model " + std::to_string(k)).c_str());
        std::vector<CMatrix> e;
        e.reserve(nominal.grid.size());
        for (std::size_t i = 0; i < nominal.grid.size(); ++i) {
            const CMatrix& g0 = nominal.values[i];
            const CMatrix& g = gk.values[i];
            switch (form) {
                case ResidualForm::Additive: e.push_back(g - g0); break;
                case ResidualForm::MultiplicativeInput:
                    e.push_back(solve_checked(g0, g - g0, nominal.grid[i], static_cast<int>(k)));
                    break;
                case ResidualForm::InverseMultiplicativeInput:
                    e.push_back(solve_checked(g, g0 - g, nominal.grid[i], static_cast<int>(k)));
                    break;
            }
        }
        out.emplace_back(nominal.grid, std::move(e));
    }
    return out;
}

FrequencyResponseData apply_residual(const FrequencyResponseData& nominal, const FrequencyResponseData& residual,
                                     ResidualForm form) {
    if (!(nominal.grid == residual.grid)) throw Error(ErrorKind::GridMismatch, "residual is sampled on a different grid");
    std::vector<CMatrix> g;
    g.reserve(nominal.grid.size());
    for (std::size_t i = 0; i < nominal.grid.size(); ++i) {
        const CMatrix& g0 = nominal.values[i];
        const CMatrix& e = residual.values[i];
        const CMatrix eye = CMatrix::Identity(e.rows(), e.cols());
        switch (form) {
            case ResidualForm::Additive: g.push_back(g0 + e); break;
            case ResidualForm::MultiplicativeInput: g.push_back(g0 * (eye + e)); break;
            case ResidualForm::InverseMultiplicativeInput: {
                Eigen::FullPivLU<CMatrix> lu(eye + e);
                if (!lu.isInvertible()) {
                    throw Error(ErrorKind::SingularAtFrequency, "I + E is singular", static_cast<int>(i));
                }
                g.push_back(g0 * lu.inverse());
                break;
            }
        }
    }
    return FrequencyResponseData(nominal.grid, std::move(g));
}

std::vector<double> residual_peak(const std::vector<FrequencyResponseData>& residuals) {
    if (residuals.empty()) return {};
    std::vector<double> out(residuals.front().grid.size(), 0.0);
    for (const auto& r : residuals) {
        check_same_shape(residuals.front(), r, "residual");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], sigma_max(r.values[i]));
    }
    return out;
}

WeightResponse weight_response(const std::vector<FrequencyResponseData>& residuals, const WeightStructure& structure) {
    structure.validate();
    if (residuals.empty()) throw Error(ErrorKind::InvalidArgument, "no residuals given");
    for (const auto& r : residuals) check_same_shape(residuals.front(), r, "residual");
    const bool left = structure.left_free();
    const bool scalar = (left ? structure.left : structure.right) == WeightSide::ScalarIdentity;

    WeightResponse out;
    out.grid = residuals.front().grid;
    out.structure = structure;
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
        std::vector<CMatrix> es;
        es.reserve(residuals.size());
        // The right-side case mirrors the left one through E^*.
        for (const auto& r : residuals) es.push_back(left ? r.values[i] : CMatrix(r.values[i].adjoint()));
        const Vector d = optimal_diagonal(es, scalar, out.grid[i]);
        std::vector<double> row;
        if (scalar) {
            row.push_back(std::sqrt(d.size() ? d(0) : 0.0));
        } else {
            for (Eigen::Index j = 0; j < d.size(); ++j) row.push_back(std::sqrt(d(j)));
        }
        out.mags.push_back(std::move(row));
    }
    return out;
}

FittedWeight fit_uncertainty_weight(const MagnitudeData& w, int order, const FitOptions& opts) {
    return fit_minphase_magnitude(w, order, FitMode::Overbound, opts);
}

FittedWeight fit_uncertainty_weight(const WeightResponse& w, int i, int order, const FitOptions& opts) {
    if (i < 0 || i >= w.entries()) throw Error(ErrorKind::InvalidArgument, "weight entry out of range");
    if (order < 0) throw Error(ErrorKind::InvalidArgument, "order must be nonnegative");
    std::vector<double> m;
    double peak = 0.0;
    for (const auto& row : w.mags) {
        m.push_back(row[static_cast<std::size_t>(i)]);
        peak = std::max(peak, m.back());
    }
    if (peak == 0.0) return FittedWeight{StateSpace::gain(0.0), 0, 0.0};
    for (double& v : m) v = std::max(v, 1e-12 * peak);
    return fit_uncertainty_weight(MagnitudeData(w.grid, std::move(m)), order, opts);
}

StateSpace weight_system(const std::vector<FittedWeight>& fits, int dim) {
    if (fits.empty() || dim < 1) throw Error(ErrorKind::InvalidArgument, "weight needs at least one entry");
    if (fits.size() != 1 && static_cast<int>(fits.size()) != dim) {
        throw Error(ErrorKind::DimensionMismatch, "diagonal weight needs one fit per channel");
    }
    StateSpace w = fits.front().tf;
    for (int i = 1; i < dim; ++i) w = append(w, fits.size() == 1 ? fits.front().tf : fits[static_cast<std::size_t>(i)].tf);
    return w;
}

double coverage(const std::vector<FrequencyResponseData>& residuals, const WeightStructure& structure,
                const std::vector<FittedWeight>& fits) {
    structure.validate();
    double worst = 0.0;
    const bool left = structure.left_free();
    for (const auto& r : residuals) {
        for (std::size_t i = 0; i < r.grid.size(); ++i) {
            const CMatrix& e = r.values[i];
            const Eigen::Index n = left ? e.rows() : e.cols();
            Vector mags(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto& f = fits.size() == 1 ? fits.front() : fits[static_cast<std::size_t>(j)];
                mags(j) = std::abs(evaluate(f.tf, Complex(0.0, r.grid[i]))(0, 0));
            }
            const CMatrix scaled = left ? CMatrix(mags.cwiseInverse().cast<Complex>().asDiagonal() * e)
                                        : CMatrix(e * mags.cwiseInverse().cast<Complex>().asDiagonal());
            const double s = e.norm() == 0.0 ? 0.0 : sigma_max(scaled);
            worst = std::max(worst, std::isnan(s) ? INFINITY : s);
        }
    }
    return worst;
}

}  // namespace robust
