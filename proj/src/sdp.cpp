#include "robust/sdp.hpp"

#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace robust::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kDefaultStrictEps = 1e-7;

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

std::string_view to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Feasible: return "feasible";
        case Status::Infeasible: return "infeasible";
        case Status::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

AffineCMatrix to_complex(const AffineMatrix& a) {
    AffineCMatrix out(Eigen::MatrixXcd(a.constant().cast<std::complex<double>>()));
    for (const auto& [i, c] : a.terms()) out += AffineCMatrix::variable(i, c.cast<std::complex<double>>());
    return out;
}

namespace {

void check_hermitian(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols()) throw Error(ErrorKind::NotHermitian, "matrix is not square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw Error(ErrorKind::NotHermitian, "asymmetry exceeds 1e-10 relative");
    }
}

MatrixXd embed(const Eigen::MatrixXcd& h) {
    const auto q = h.rows();
    MatrixXd r(2 * q, 2 * q);
    const MatrixXd re = h.real();
    const MatrixXd im = h.imag();
    r.topLeftCorner(q, q) = re;
    r.topRightCorner(q, q) = -im;
    r.bottomLeftCorner(q, q) = im;
    r.bottomRightCorner(q, q) = re;
    return r;
}

}  // namespace

MatrixXd realify_hermitian(const Eigen::MatrixXcd& h) {
    check_hermitian(h);
    return sym(embed(h));
}

AffineMatrix realify_hermitian(const AffineCMatrix& h) {
    check_hermitian(h.constant());
    AffineMatrix out(sym(embed(h.constant())));
    for (const auto& [i, c] : h.terms()) {
        check_hermitian(c);
        out += AffineMatrix::variable(i, sym(embed(c)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Problem

int Problem::reserve(const std::string& name, VariableKind kind, int rows, int cols, int count) {
    const int first = num_scalars_;
    variables_.push_back({name, kind, rows, cols, first, count});
    num_scalars_ += count;
    return first;
}

AffineMatrix Problem::add_scalar(const std::string& name) {
    const int idx = reserve(name, VariableKind::Scalar, 1, 1, 1);
    return AffineMatrix::variable(idx, MatrixXd::Ones(1, 1));
}

AffineMatrix Problem::add_symmetric(const std::string& name, int order) {
    if (order < 1) throw Error(ErrorKind::InvalidArgument, "symmetric variable order must be >= 1");
    const int first = reserve(name, VariableKind::Symmetric, order, order, order * (order + 1) / 2);
    AffineMatrix out(order, order);
    int k = first;
    for (int j = 0; j < order; ++j) {
        for (int i = j; i < order; ++i) {
            MatrixXd e = MatrixXd::Zero(order, order);
            e(i, j) = 1.0;
            e(j, i) = 1.0;
            out += AffineMatrix::variable(k++, std::move(e));
        }
    }
    return out;
}

AffineMatrix Problem::add_matrix(const std::string& name, int rows, int cols) {
    if (rows < 0 || cols < 0) throw Error(ErrorKind::InvalidArgument, "matrix variable shape must be >= 0");
    const int first = reserve(name, VariableKind::Matrix, rows, cols, rows * cols);
    AffineMatrix out(rows, cols);
    int k = first;
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            MatrixXd e = MatrixXd::Zero(rows, cols);
            e(i, j) = 1.0;
            out += AffineMatrix::variable(k++, std::move(e));
        }
    }
    return out;
}

AffineCMatrix Problem::add_hermitian(const std::string& name, int order) {
    if (order < 1) throw Error(ErrorKind::InvalidArgument, "hermitian variable order must be >= 1");
    const int first = reserve(name, VariableKind::Hermitian, order, order, order * order);
    using C = std::complex<double>;
    AffineCMatrix out(order, order);
    int k = first;
    for (int i = 0; i < order; ++i) {
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(order, order);
        e(i, i) = 1.0;
        out += AffineCMatrix::variable(k++, std::move(e));
    }
    for (int j = 0; j < order; ++j) {
        for (int i = j + 1; i < order; ++i) {
            Eigen::MatrixXcd re = Eigen::MatrixXcd::Zero(order, order);
            re(i, j) = 1.0;
            re(j, i) = 1.0;
            out += AffineCMatrix::variable(k++, std::move(re));
            Eigen::MatrixXcd im = Eigen::MatrixXcd::Zero(order, order);
            im(i, j) = C(0.0, 1.0);
            im(j, i) = C(0.0, -1.0);
            out += AffineCMatrix::variable(k++, std::move(im));
        }
    }
    return out;
}

void Problem::add_lmi(const AffineMatrix& expr, const std::string& label) {
    if (expr.rows() != expr.cols()) throw Error(ErrorKind::DimensionMismatch, "LMI expression must be square");
    for (const auto& [i, c] : expr.terms()) {
        if (i < 0 || i >= num_scalars_) throw Error(ErrorKind::InvalidArgument, "LMI references an undeclared variable");
    }
    AffineMatrix s(sym(expr.constant()));
    for (const auto& [i, c] : expr.terms()) s += AffineMatrix::variable(i, sym(c));
    constraints_.push_back(std::move(s));
    labels_.push_back(label.empty() ? "lmi" + std::to_string(constraints_.size()) : label);
    strict_shift_.push_back(0.0);
}

void Problem::add_lmi(const AffineCMatrix& expr, const std::string& label) { add_lmi(realify_hermitian(expr), label); }

void Problem::add_strict_lmi(const AffineMatrix& expr, std::optional<double> eps, const std::string& label) {
    double scale = expr.constant().norm();
    for (const auto& [i, c] : expr.terms()) scale = std::max(scale, c.norm());
    const double shift = eps.value_or(kDefaultStrictEps) * scale;
    add_lmi(expr - MatrixXd(shift * MatrixXd::Identity(expr.rows(), expr.cols())), label);
    strict_shift_.back() = shift;
}

void Problem::add_strict_lmi(const AffineCMatrix& expr, std::optional<double> eps, const std::string& label) {
    add_strict_lmi(realify_hermitian(expr), eps, label);
}

void Problem::minimize(const AffineMatrix& scalar_expr) {
    if (scalar_expr.rows() != 1 || scalar_expr.cols() != 1) {
        throw Error(ErrorKind::DimensionMismatch, "objective must be a 1x1 expression");
    }
    objective_ = scalar_expr;
}

std::string Problem::listing() const {
    std::ostringstream os;
    os << "variables (" << num_scalars_ << " scalars)\n";
    for (const auto& v : variables_) {
        os << "  " << v.name << " [" << v.rows << "x" << v.cols << "] y" << v.first_index << "..y"
           << v.first_index + v.count - 1 << "\n";
    }
    for (std::size_t k = 0; k < constraints_.size(); ++k) {
        const auto& c = constraints_[k];
        os << labels_[k] << ": " << c.rows() << "x" << c.cols() << " >= 0";
        if (strict_shift_[k] > 0.0) os << " (strict, shift " << strict_shift_[k] << ")";
        os << "\n  F0 =\n" << c.constant() << "\n";
        for (const auto& [i, m] : c.terms()) os << "  F[y" << i << "] =\n" << m << "\n";
    }
    if (objective_) {
        os << "minimize " << objective_->constant()(0, 0);
        for (const auto& [i, m] : objective_->terms()) os << " + " << m(0, 0) << "*y" << i;
        os << "\n";
    } else {
        os << "feasibility problem\n";
    }
    return os.str();
}

double constraint_margin(const Problem& problem, const VectorXd& values) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& c : problem.constraints()) {
        const MatrixXd v = sym(c.value(values));
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(v, Eigen::EigenvaluesOnly);
        margin = std::min(margin, es.eigenvalues()(0));
    }
    return margin;
}

// ---------------------------------------------------------------------------
// Interior-point solver.
//
// Standard (dual) form: maximize b'y s.t. Z = C - sum_i y_i A_i >= 0, with the
// cone split into dense symmetric blocks and one diagonal (linear) block. The
// primal is min <C,X> s.t. <A_i,X> = b_i, X >= 0. Infeasible-start
// path following with the HKM direction and Mehrotra predictor-corrector.

namespace {

struct DenseBlock {
    int n = 0;
    MatrixXd C;
    std::vector<std::pair<int, MatrixXd>> A;  // only variables with nonzero coefficient
};

struct StandardForm {
    int m = 0;
    VectorXd b;
    std::vector<DenseBlock> dense;
    VectorXd lin_c;   // L
    MatrixXd lin_A;   // L x m, row l gives a_l with z_l = c_l - a_l' y
};

enum class IpmOutcome { Converged, DualInfeasible, PrimalInfeasible, Stalled };

struct IpmResult {
    IpmOutcome outcome = IpmOutcome::Stalled;
    VectorXd y;
    double pobj = 0.0;
    double dobj = 0.0;
    double pinf = 0.0;
    double dinf = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

// Largest alpha in (0, inf] with X + alpha dX >= 0, given X = L L'.
double max_step(const Eigen::LLT<MatrixXd>& chol, const MatrixXd& dX) {
    const MatrixXd Li_dX = chol.matrixL().solve(dX);
    const MatrixXd S = chol.matrixL().solve(Li_dX.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(S), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step(const VectorXd& x, const VectorXd& dx) {
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
    }
    return a;
}

class Ipm {
  public:
    Ipm(const StandardForm& sf, const SolverOptions& opts)
        : sf_(sf), opts_(opts), trace_(std::getenv("ROBUST_SDP_TRACE") != nullptr) {}

    IpmResult run() {
        init();
        IpmResult res;
        const double bnorm = sf_.b.norm();
        double cnorm = sf_.lin_c.norm();
        for (const auto& blk : sf_.dense) cnorm = std::hypot(cnorm, blk.C.norm());
        int stall = 0;
        // Best iterate by max(pinf, dinf, gap); returned when progress stops.
        IpmResult best;
        double best_score = std::numeric_limits<double>::infinity();
        auto give_up = [&](IpmResult cur) {
            if (best_score < std::max({cur.pinf, cur.dinf, cur.gap})) {
                best.iterations = cur.iterations;
                cur = best;
            }
            cur.outcome = IpmOutcome::Stalled;
            return cur;
        };
        for (int it = 0; it < opts_.max_iter; ++it) {
            res.iterations = it;
            // Residuals.
            VectorXd AX = apply_A(X_, x_);
            VectorXd Rp = sf_.b - AX;
            std::vector<MatrixXd> Rd(sf_.dense.size());
            double rd2 = 0.0;
            for (std::size_t k = 0; k < sf_.dense.size(); ++k) {
                Rd[k] = sf_.dense[k].C - Z_[k] - apply_At(k, y_);
                rd2 += Rd[k].squaredNorm();
            }
            VectorXd rd = sf_.lin_c - z_ - sf_.lin_A * y_;
            rd2 += rd.squaredNorm();

            double pobj = sf_.lin_c.dot(x_);
            for (std::size_t k = 0; k < sf_.dense.size(); ++k) pobj += (sf_.dense[k].C.cwiseProduct(X_[k])).sum();
            const double dobj = sf_.b.dot(y_);
            double xz = x_.dot(z_);
            for (std::size_t k = 0; k < sf_.dense.size(); ++k) xz += X_[k].cwiseProduct(Z_[k]).sum();
            const double mu = xz / static_cast<double>(order_);

            res.pinf = Rp.norm() / (1.0 + bnorm);
            res.dinf = std::sqrt(rd2) / (1.0 + cnorm);
            res.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
            res.pobj = pobj;
            res.dobj = dobj;
            res.y = y_;
            if (trace_) {
                std::fprintf(stderr, "ipm %3d pobj %+.6e dobj %+.6e pinf %.1e dinf %.1e gap %.1e mu %.1e ymax %.1e\n", it, pobj,
                             dobj, res.pinf, res.dinf, res.gap, mu, y_.cwiseAbs().maxCoeff());
                if (std::getenv("ROBUST_SDP_TRACE_Y")) for (Eigen::Index q = 0; q < y_.size(); ++q) std::fprintf(stderr, " %.2e", y_(q));
                if (std::getenv("ROBUST_SDP_TRACE_Y")) std::fprintf(stderr, "\n");
            }
            if (!y_.allFinite() || !std::isfinite(pobj)) {
                res.pinf = res.dinf = res.gap = std::numeric_limits<double>::infinity();
                return give_up(res);
            }
            if (const double score = std::max({res.pinf, res.dinf, res.gap}); score < best_score) {
                best_score = score;
                best = res;
            }
            if (res.pinf <= opts_.feas_tol && res.dinf <= opts_.feas_tol && res.gap <= opts_.gap_tol) {
                res.outcome = IpmOutcome::Converged;
                return res;
            }
            // Dual infeasibility (the LMI itself is empty): X with A(X) ~ 0, <C,X> < 0.
            if (pobj < 0.0 && AX.norm() <= 1e-8 * (-pobj) && res.dinf <= 1e-6) {
                res.outcome = IpmOutcome::DualInfeasible;
                return res;
            }
            // Primal infeasibility (objective unbounded): b'y > 0 with sum y A_i + Z ~ C bounded.
            if (dobj > 0.0 && dobj > 1e10 * (1.0 + cnorm) && res.pinf <= 1e-6) {
                res.outcome = IpmOutcome::PrimalInfeasible;
                return res;
            }

            // Factorizations.
            std::vector<Eigen::LLT<MatrixXd>> cholX(sf_.dense.size()), cholZ(sf_.dense.size());
            std::vector<MatrixXd> Zi(sf_.dense.size());
            for (std::size_t k = 0; k < sf_.dense.size(); ++k) {
                cholX[k].compute(X_[k]);
                cholZ[k].compute(Z_[k]);
                if (cholX[k].info() != Eigen::Success || cholZ[k].info() != Eigen::Success) return give_up(res);
                Zi[k] = cholZ[k].solve(MatrixXd::Identity(sf_.dense[k].n, sf_.dense[k].n));
                Zi[k] = sym(Zi[k]);
            }

            // Schur complement.
            MatrixXd M = MatrixXd::Zero(sf_.m, sf_.m);
            for (std::size_t k = 0; k < sf_.dense.size(); ++k) {
                const auto& blk = sf_.dense[k];
                for (const auto& [i, Ai] : blk.A) {
                    const MatrixXd G = X_[k] * Ai * Zi[k];
                    for (const auto& [j, Aj] : blk.A) {
                        if (j < i) continue;
                        const double v = Aj.cwiseProduct(G).sum();
                        M(i, j) += v;
                        if (j != i) M(j, i) += v;
                    }
                }
            }
            if (sf_.lin_A.rows() > 0) {
                const VectorXd d = x_.cwiseQuotient(z_);
                M.noalias() += sf_.lin_A.transpose() * d.asDiagonal() * sf_.lin_A;
            }
            M = sym(M);
            schur_matrix_ = M;
            Eigen::LDLT<MatrixXd> schur(M);
            double reg = 0.0;
            if (schur.info() != Eigen::Success || !schur.isPositive()) {
                reg = 1e-13 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
                schur.compute(M + reg * MatrixXd::Identity(sf_.m, sf_.m));
            }

            // Predictor.
            Direction aff = direction(0.0, mu, Rp, Rd, rd, Zi, schur, nullptr);
            double ap = std::min(1.0, step_primal(cholX, aff));
            double ad = std::min(1.0, step_dual(cholZ, aff));
            double xz_aff = (x_ + ap * aff.dx).dot(z_ + ad * aff.dz);
            for (std::size_t k = 0; k < sf_.dense.size(); ++k) {
                xz_aff += (X_[k] + ap * aff.dX[k]).cwiseProduct(Z_[k] + ad * aff.dZ[k]).sum();
            }
            const double mu_aff = std::max(0.0, xz_aff / static_cast<double>(order_));
            double sigma = std::pow(mu_aff / mu, 3.0);
            sigma = std::clamp(sigma, 0.0, 1.0);
            const bool infeasible_iterate = res.pinf > opts_.feas_tol || res.dinf > opts_.feas_tol;
            if (infeasible_iterate) sigma = std::max(sigma, 1e-3);

            // Corrector.
            Direction dir = direction(sigma, mu, Rp, Rd, rd, Zi, schur, &aff);
            ap = std::min(1.0, 0.95 * step_primal(cholX, dir));
            ad = std::min(1.0, 0.95 * step_dual(cholZ, dir));
            if (!std::isfinite(ap) || !std::isfinite(ad) || !dir.dy.allFinite()) return give_up(res);
            if (ap < 1e-10 && ad < 1e-10) {
                if (++stall > 3) return give_up(res);
            } else {
                stall = 0;
            }

            for (std::size_t k = 0; k < sf_.dense.size(); ++k) {
                X_[k] = sym(X_[k] + ap * dir.dX[k]);
                Z_[k] = sym(Z_[k] + ad * dir.dZ[k]);
            }
            x_ += ap * dir.dx;
            z_ += ad * dir.dz;
            y_ += ad * dir.dy;
        }
        res.iterations = opts_.max_iter;
        return give_up(res);
    }

  private:
    struct Direction {
        VectorXd dy;
        std::vector<MatrixXd> dX, dZ;
        VectorXd dx, dz;
    };

    void init() {
        const int m = sf_.m;
        order_ = static_cast<int>(sf_.lin_c.size());
        for (const auto& blk : sf_.dense) order_ += blk.n;
        // Scaled identity start in the spirit of CSDP.
        double anorm_max = 0.0;
        std::vector<double> anorm(static_cast<std::size_t>(m), 0.0);
        for (const auto& blk : sf_.dense) {
            for (const auto& [i, A] : blk.A) anorm[static_cast<std::size_t>(i)] += A.squaredNorm();
        }
        for (int i = 0; i < m; ++i) {
            anorm[static_cast<std::size_t>(i)] += sf_.lin_A.col(i).squaredNorm();
            anorm[static_cast<std::size_t>(i)] = std::sqrt(anorm[static_cast<std::size_t>(i)]);
            anorm_max = std::max(anorm_max, anorm[static_cast<std::size_t>(i)]);
        }
        double cmax = sf_.lin_c.size() ? sf_.lin_c.cwiseAbs().maxCoeff() : 0.0;
        for (const auto& blk : sf_.dense) cmax = std::max(cmax, blk.C.norm());
        const double n = static_cast<double>(std::max(order_, 1));
        double alpha = 0.0;
        for (int i = 0; i < m; ++i) {
            alpha = std::max(alpha, n * (1.0 + std::abs(sf_.b(i))) / (1.0 + anorm[static_cast<std::size_t>(i)]));
        }
        const double beta = (1.0 + std::max(anorm_max, cmax)) / std::sqrt(n);
        const double xs = 10.0 * std::max(alpha, 1.0);
        const double zs = 10.0 * std::max(beta, 1.0);
        y_ = VectorXd::Zero(m);
        X_.clear();
        Z_.clear();
        for (const auto& blk : sf_.dense) {
            X_.push_back(xs * MatrixXd::Identity(blk.n, blk.n));
            Z_.push_back(zs * MatrixXd::Identity(blk.n, blk.n));
        }
        // LP slacks start at their constant so loose rows (the box) begin
        // without residual, at the same complementarity as the rest.
        z_ = sf_.lin_c.cwiseMax(zs);
        x_ = (xs * zs) * z_.cwiseInverse();
    }

    VectorXd apply_A(const std::vector<MatrixXd>& X, const VectorXd& x) const {
        VectorXd out = sf_.lin_A.transpose() * x;
        for (std::size_t k = 0; k < sf_.dense.size(); ++k) {
            for (const auto& [i, A] : sf_.dense[k].A) out(i) += A.cwiseProduct(X[k]).sum();
        }
        return out;
    }

    MatrixXd apply_At(std::size_t k, const VectorXd& y) const {
        MatrixXd out = MatrixXd::Zero(sf_.dense[k].n, sf_.dense[k].n);
        for (const auto& [i, A] : sf_.dense[k].A) out += y(i) * A;
        return out;
    }

    Direction direction(double sigma, double mu, const VectorXd& Rp, const std::vector<MatrixXd>& Rd,
                        const VectorXd& rd, const std::vector<MatrixXd>& Zi, const Eigen::LDLT<MatrixXd>& schur,
                        const Direction* aff) const {
        const std::size_t K = sf_.dense.size();
        Direction d;
        // G = sigma mu Z^{-1} - X - corr; T = X Rd Z^{-1} - G; rhs = Rp + A(T).
        std::vector<MatrixXd> G(K);
        std::vector<MatrixXd> T(K);
        for (std::size_t k = 0; k < K; ++k) {
            G[k] = sigma * mu * Zi[k] - X_[k];
            if (aff) G[k] -= sym(aff->dX[k] * aff->dZ[k] * Zi[k]);
            T[k] = X_[k] * Rd[k] * Zi[k] - G[k];
        }
        VectorXd g = (sigma * mu) * z_.cwiseInverse() - x_;
        if (aff) g -= aff->dx.cwiseProduct(aff->dz).cwiseQuotient(z_);
        const VectorXd t = x_.cwiseProduct(rd).cwiseQuotient(z_) - g;
        const VectorXd rhs = Rp + apply_A(T, t);
        d.dy = schur.solve(rhs);
        for (int refine = 0; refine < 2; ++refine) {
            const VectorXd r = rhs - schur_matrix_ * d.dy;
            d.dy += schur.solve(r);
        }
        d.dZ.resize(K);
        d.dX.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            d.dZ[k] = Rd[k] - apply_At(k, d.dy);
            d.dX[k] = G[k] - sym(X_[k] * d.dZ[k] * Zi[k]);
        }
        d.dz = rd - sf_.lin_A * d.dy;
        d.dx = g - x_.cwiseProduct(d.dz).cwiseQuotient(z_);
        return d;
    }

    double step_primal(const std::vector<Eigen::LLT<MatrixXd>>& cholX, const Direction& d) const {
        double a = max_step(x_, d.dx);
        for (std::size_t k = 0; k < sf_.dense.size(); ++k) a = std::min(a, max_step(cholX[k], d.dX[k]));
        return a;
    }
    double step_dual(const std::vector<Eigen::LLT<MatrixXd>>& cholZ, const Direction& d) const {
        double a = max_step(z_, d.dz);
        for (std::size_t k = 0; k < sf_.dense.size(); ++k) a = std::min(a, max_step(cholZ[k], d.dZ[k]));
        return a;
    }

    const StandardForm& sf_;
    const SolverOptions& opts_;
    bool trace_ = false;
    MatrixXd schur_matrix_;
    int order_ = 0;
    VectorXd y_;
    std::vector<MatrixXd> X_, Z_;
    VectorXd x_, z_;
};

// Builds the standard form. With `margin`, an extra variable t (last index) is
// appended: every constraint becomes F_k(y) - t I >= 0, t <= 1, objective max t.
StandardForm build(const Problem& p, bool margin, double box) {
    StandardForm sf;
    const int n = p.num_scalars();
    sf.m = n + (margin ? 1 : 0);
    const int t_index = n;
    sf.b = VectorXd::Zero(sf.m);
    if (margin) {
        sf.b(t_index) = 1.0;
    } else if (p.objective()) {
        for (const auto& [i, c] : p.objective()->terms()) sf.b(i) = -c(0, 0);
    }

    std::vector<double> lc;
    std::vector<VectorXd> la;
    auto add_row = [&](double c, VectorXd a) {
        lc.push_back(c);
        la.push_back(std::move(a));
    };
    for (const auto& con : p.constraints()) {
        if (con.rows() == 0) continue;
        if (con.rows() == 1) {
            VectorXd a = VectorXd::Zero(sf.m);
            for (const auto& [i, c] : con.terms()) a(i) = -c(0, 0);
            if (margin) a(t_index) = 1.0;
            add_row(con.constant()(0, 0), std::move(a));
            continue;
        }
        DenseBlock blk;
        blk.n = static_cast<int>(con.rows());
        blk.C = con.constant();
        for (const auto& [i, c] : con.terms()) {
            if (c.cwiseAbs().maxCoeff() == 0.0) continue;
            blk.A.emplace_back(i, -c);
        }
        if (margin) blk.A.emplace_back(t_index, MatrixXd::Identity(blk.n, blk.n));
        sf.dense.push_back(std::move(blk));
    }
    // Box on the decision variables.
    for (int i = 0; i < n; ++i) {
        VectorXd a = VectorXd::Zero(sf.m);
        a(i) = 1.0;
        add_row(box, a);
        a(i) = -1.0;
        add_row(box, std::move(a));
    }
    if (margin) {
        VectorXd a = VectorXd::Zero(sf.m);
        a(t_index) = 1.0;
        add_row(1.0, std::move(a));
    }
    sf.lin_c.resize(static_cast<Eigen::Index>(lc.size()));
    sf.lin_A.resize(static_cast<Eigen::Index>(lc.size()), sf.m);
    for (std::size_t l = 0; l < lc.size(); ++l) {
        sf.lin_c(static_cast<Eigen::Index>(l)) = lc[l];
        sf.lin_A.row(static_cast<Eigen::Index>(l)) = la[l].transpose();
    }
    return sf;
}

// Each constraint is judged against its own coefficient scale, so a large
// constant bound elsewhere does not loosen the test on a small LMI.
bool within_tolerance(const Problem& p, const VectorXd& values, double feas_tol) {
    for (const auto& c : p.constraints()) {
        double s = c.constant().cwiseAbs().maxCoeff();
        for (const auto& [i, m] : c.terms()) s = std::max(s, m.cwiseAbs().maxCoeff());
        const MatrixXd v = sym(c.value(values));
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(v, Eigen::EigenvaluesOnly);
        if (es.eigenvalues()(0) < -feas_tol * std::max(s, 1.0)) return false;
    }
    return true;
}

Solution feasibility(const Problem& p, const SolverOptions& opts) {
    Solution sol;
    if (p.constraints().empty()) {
        sol.status = Status::Feasible;
        sol.values = VectorXd::Zero(p.num_scalars());
        sol.min_margin = std::numeric_limits<double>::infinity();
        return sol;
    }
    const StandardForm sf = build(p, true, opts.variable_bound);
    Ipm ipm(sf, opts);
    const IpmResult r = ipm.run();
    sol.iterations = r.iterations;
    if (r.y.size() != sf.m) return sol;
    const VectorXd y = r.y.head(p.num_scalars());
    const double margin = constraint_margin(p, y);
    const double tol = opts.feas_tol * std::max(1.0, std::abs(margin));
    if (within_tolerance(p, y, opts.feas_tol)) {
        sol.status = Status::Feasible;
        sol.values = y;
        sol.min_margin = margin;
        return sol;
    }
    // The margin problem is always feasible, so a converged negative optimum
    // certifies infeasibility.
    const double t_opt = r.y(sf.m - 1);
    if ((r.outcome == IpmOutcome::Converged && t_opt < -tol) ||
        (r.outcome == IpmOutcome::Stalled && r.pinf < 1e-6 && r.dinf < 1e-6 && r.pobj < -1e-6 && r.dobj < -1e-6)) {
        sol.status = Status::Infeasible;
        sol.min_margin = margin;
        return sol;
    }
    sol.status = Status::NumericalFailure;
    sol.min_margin = margin;
    return sol;
}

}  // namespace

Solution solve(const Problem& problem, const SolverOptions& opts) {
    if (!problem.objective()) return feasibility(problem, opts);

    const StandardForm sf = build(problem, false, opts.variable_bound);
    Ipm ipm(sf, opts);
    const IpmResult r = ipm.run();
    Solution sol;
    sol.iterations = r.iterations;
    if (r.outcome == IpmOutcome::Converged ||
        (r.outcome == IpmOutcome::Stalled && r.pinf < 1e-4 && r.dinf < 1e-6 && r.gap < 1e-3)) {
        const double margin = constraint_margin(problem, r.y);
        if (within_tolerance(problem, r.y, opts.feas_tol)) {
            sol.status = Status::Optimal;
            sol.values = r.y;
            sol.min_margin = margin;
            sol.objective = problem.objective()->value(r.y)(0, 0);
            return sol;
        }
    }
    if (r.outcome == IpmOutcome::DualInfeasible) {
        sol.status = Status::Infeasible;
        return sol;
    }
    // Classify through the margin problem.
    Solution f = feasibility(problem, opts);
    sol.iterations += f.iterations;
    sol.status = f.status == Status::Infeasible ? Status::Infeasible : Status::NumericalFailure;
    return sol;
}

}  // namespace robust::sdp
