#include "robust/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace robust {

namespace {

void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
    const auto n = A.rows();
    require(A.cols() == n, ErrorKind::DimensionMismatch, "A must be square, got " + shape(A));
    // Allow empty B/C for static systems given with default-constructed blocks.
    if (n == 0) {
        B.resize(0, D.cols());
        C.resize(D.rows(), 0);
    }
    require(B.rows() == n && C.cols() == n, ErrorKind::DimensionMismatch,
            "B is " + shape(B) + " and C is " + shape(C) + " for " + std::to_string(n) + " states");
    require(D.rows() == C.rows() && D.cols() == B.cols(), ErrorKind::DimensionMismatch,
            "D is " + shape(D) + ", expected " + std::to_string(C.rows()) + "x" + std::to_string(B.cols()));
    require(A.allFinite() && B.allFinite() && C.allFinite() && D.allFinite(), ErrorKind::InvalidArgument,
            "state-space matrices must be finite");
}

StateSpace StateSpace::gain(Matrix d) {
    const auto p = d.rows();
    const auto m = d.cols();
    return StateSpace(Matrix(0, 0), Matrix(0, m), Matrix(p, 0), std::move(d));
}

FrequencyGrid::FrequencyGrid(std::vector<double> omegas) : omegas_(std::move(omegas)) {
    for (std::size_t i = 0; i < omegas_.size(); ++i) {
        require(std::isfinite(omegas_[i]) && omegas_[i] > 0.0, ErrorKind::InvalidArgument,
                "grid frequencies must be positive and finite");
        require(i == 0 || omegas_[i] > omegas_[i - 1], ErrorKind::InvalidArgument,
                "grid frequencies must be strictly increasing");
    }
}

FrequencyGrid FrequencyGrid::logspace(double lo, double hi, int n) {
    require(lo > 0.0 && hi > lo && n >= 2, ErrorKind::InvalidArgument, "logspace needs 0 < lo < hi and n >= 2");
    std::vector<double> w(static_cast<std::size_t>(n));
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
    w.back() = hi;
    w.front() = lo;
    return FrequencyGrid(std::move(w));
}

FrequencyResponseData::FrequencyResponseData(FrequencyGrid g, std::vector<CMatrix> v)
    : grid(std::move(g)), values(std::move(v)) {
    require(values.size() == grid.size(), ErrorKind::DimensionMismatch, "one response matrix per frequency is required");
    for (const auto& m : values) {
        require(m.rows() == values.front().rows() && m.cols() == values.front().cols(), ErrorKind::DimensionMismatch,
                "response matrices must share dimensions");
    }
}

GeneralizedPlant::GeneralizedPlant(StateSpace sys, int nw, int nu, int nz, int ny)
    : ss(std::move(sys)), n_w(nw), n_u(nu), n_z(nz), n_y(ny) {
    require(nw >= 0 && nu >= 0 && nz >= 0 && ny >= 0, ErrorKind::DimensionMismatch, "partition counts must be >= 0");
    require(nw + nu == ss.inputs(), ErrorKind::DimensionMismatch,
            "n_w + n_u = " + std::to_string(nw + nu) + " but plant has " + std::to_string(ss.inputs()) + " inputs");
    require(nz + ny == ss.outputs(), ErrorKind::DimensionMismatch,
            "n_z + n_y = " + std::to_string(nz + ny) + " but plant has " + std::to_string(ss.outputs()) + " outputs");
}

CMatrix evaluate(const StateSpace& sys, Complex s) {
    CMatrix result = sys.D.cast<Complex>();
    if (sys.states() == 0) return result;
    const auto n = sys.states();
    CMatrix pencil = s * CMatrix::Identity(n, n) - sys.A.cast<Complex>();
    Eigen::PartialPivLU<CMatrix> lu(pencil);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) throw Error(ErrorKind::SingularAtFrequency, "sI - A is singular at s = " + std::to_string(s.imag()) + "j");
    result.noalias() += sys.C.cast<Complex>() * lu.solve(sys.B.cast<Complex>());
    return result;
}

FrequencyResponseData freq_response(const StateSpace& sys, const FrequencyGrid& grid) {
    std::vector<CMatrix> values;
    values.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            values.push_back(evaluate(sys, Complex(0.0, grid[i])));
        } catch (const Error& e) {
            throw Error(ErrorKind::SingularAtFrequency, "pole on the grid at omega = " + std::to_string(grid[i]),
                        static_cast<int>(i));
        }
    }
    return FrequencyResponseData(grid, std::move(values));
}

double max_singular_value(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

double max_singular_value(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

bool is_stable(const StateSpace& sys, double margin) {
    if (sys.states() == 0) return true;
    Eigen::EigenSolver<Matrix> es(sys.A, false);
    const auto& ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (!(ev(i).real() < -margin - kStabilityTolerance)) return false;
    }
    return true;
}

namespace {

// Frequencies where the Hamiltonian for level gamma has (numerically) imaginary
// eigenvalues; these are the candidate crossings of sigma_max(G(jw)) = gamma.
std::vector<double> hamiltonian_crossings(const StateSpace& sys, double gamma) {
    const auto n = sys.states();
    const auto m = sys.inputs();
    const auto p = sys.outputs();
    const Matrix& A = sys.A;
    const Matrix& B = sys.B;
    const Matrix& C = sys.C;
    const Matrix& D = sys.D;
    const Matrix R = gamma * gamma * Matrix::Identity(m, m) - D.transpose() * D;
    const Eigen::LDLT<Matrix> Rf(R);
    const Matrix RiDt = Rf.solve(D.transpose());
    const Matrix RiBt = Rf.solve(B.transpose());
    const Matrix Ah = A + B * RiDt * C;
    Matrix H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = Ah;
    H.topRightCorner(n, n) = B * RiBt;
    H.bottomLeftCorner(n, n) = -C.transpose() * (Matrix::Identity(p, p) + D * RiDt) * C;
    H.bottomRightCorner(n, n) = -Ah.transpose();

    Eigen::EigenSolver<Matrix> es(H, false);
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    std::vector<double> omegas;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex lam = es.eigenvalues()(i);
        if (std::abs(lam.real()) <= 1e-7 * std::max(scale, std::abs(lam)) && lam.imag() >= 0.0) {
            omegas.push_back(lam.imag());
        }
    }
    std::sort(omegas.begin(), omegas.end());
    return omegas;
}

double gain_at(const StateSpace& sys, double w) { return max_singular_value(evaluate(sys, Complex(0.0, w))); }

}  // namespace

double hinf_norm(const StateSpace& sys, double tol) {
    require(tol > 0.0, ErrorKind::InvalidArgument, "tolerance must be positive");
    if (!is_stable(sys)) throw Error(ErrorKind::UnstableSystem, "unstable system");
    const double feedthrough = max_singular_value(sys.D);
    if (sys.states() == 0) return feedthrough;

    // Coarse sweep: DC, natural frequencies of the poles, and a log grid around them.
    Eigen::EigenSolver<Matrix> es(sys.A, false);
    double wmin = std::numeric_limits<double>::infinity();
    double wmax = 0.0;
    std::vector<double> sweep{0.0};
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double mag = std::abs(es.eigenvalues()(i));
        const double im = std::abs(es.eigenvalues()(i).imag());
        wmin = std::min(wmin, mag);
        wmax = std::max(wmax, mag);
        sweep.push_back(mag);
        if (im > 0.0) sweep.push_back(im);
    }
    wmin = std::max(wmin, 1e-12) / 100.0;
    wmax = std::max(wmax, wmin * 10.0) * 100.0;
    const int nsweep = 60;
    for (int i = 0; i < nsweep; ++i) {
        sweep.push_back(wmin * std::pow(wmax / wmin, static_cast<double>(i) / (nsweep - 1)));
    }
    double lo = feedthrough;
    for (double w : sweep) lo = std::max(lo, gain_at(sys, w));
    if (lo == 0.0) return 0.0;

    // Returns a verified gain >= gamma if one is found, else a negative value.
    auto probe = [&](double gamma) {
        const auto crossings = hamiltonian_crossings(sys, gamma);
        double best = -1.0;
        for (std::size_t i = 0; i < crossings.size(); ++i) {
            best = std::max(best, gain_at(sys, crossings[i]));
            if (i + 1 < crossings.size()) best = std::max(best, gain_at(sys, 0.5 * (crossings[i] + crossings[i + 1])));
        }
        return best >= gamma ? best : -1.0;
    };

    double hi = lo * 2.0;
    for (int k = 0; k < 200; ++k) {
        const double g = probe(hi);
        if (g < 0.0) break;
        lo = std::max(lo, g);
        hi = 2.0 * std::max(hi, g);
    }
    while (hi - lo > tol * lo) {
        const double mid = 0.5 * (lo + hi);
        const double g = probe(mid);
        if (g < 0.0) {
            hi = mid;
        } else {
            lo = std::max(mid, g);
            hi = std::max(hi, lo);
        }
    }
    return 0.5 * (lo + hi);
}

StateSpace lft_lower(const GeneralizedPlant& plant, const StateSpace& controller) {
    require(controller.inputs() == plant.n_y && controller.outputs() == plant.n_u, ErrorKind::DimensionMismatch,
            "controller must map " + std::to_string(plant.n_y) + " measurements to " + std::to_string(plant.n_u) +
                " controls, got " + std::to_string(controller.outputs()) + "x" + std::to_string(controller.inputs()));
    const auto np = plant.ss.states();
    const auto nk = controller.states();
    const auto nw = plant.n_w;
    const auto nu = plant.n_u;
    const auto ny = plant.n_y;
    const Matrix& Dk = controller.D;

    // u = S^{-1} (Dk C2 x + Ck xk + Dk D21 w), S = I - Dk D22.
    const Matrix S = Matrix::Identity(nu, nu) - Dk * plant.D22();
    Eigen::FullPivLU<Matrix> lu(S);
    if (nu > 0 && (!lu.isInvertible() || lu.rcond() < 1e-12)) {
        throw Error(ErrorKind::AlgebraicLoop, "I - D22 Dk is singular");
    }
    Matrix Fu(nu, np + nk);
    Fu.leftCols(np) = Dk * plant.C2();
    Fu.rightCols(nk) = controller.C;
    Matrix Gu = Dk * plant.D21();
    if (nu > 0) {
        Fu = lu.solve(Fu);
        Gu = lu.solve(Gu);
    }
    Matrix Fy(ny, np + nk);
    Fy.leftCols(np) = plant.C2();
    Fy.rightCols(nk).setZero();
    Fy += plant.D22() * Fu;
    const Matrix Gy = plant.D21() + plant.D22() * Gu;

    Matrix A = Matrix::Zero(np + nk, np + nk);
    A.topLeftCorner(np, np) = plant.ss.A;
    A.bottomRightCorner(nk, nk) = controller.A;
    A.topRows(np) += plant.B2() * Fu;
    A.bottomRows(nk) += controller.B * Fy;
    Matrix B(np + nk, nw);
    B.topRows(np) = plant.B1() + plant.B2() * Gu;
    B.bottomRows(nk) = controller.B * Gy;
    Matrix C(plant.n_z, np + nk);
    C.leftCols(np) = plant.C1();
    C.rightCols(nk).setZero();
    C += plant.D12() * Fu;
    Matrix D = plant.D11() + plant.D12() * Gu;
    return StateSpace(std::move(A), std::move(B), std::move(C), std::move(D));
}

TimeResponse simulate(const StateSpace& sys, const Matrix& input, double dt) {
    require(dt > 0.0, ErrorKind::InvalidArgument, "time step must be positive");
    require(input.cols() == sys.inputs(), ErrorKind::DimensionMismatch, "input columns must equal system inputs");
    const auto n = sys.states();
    const auto m = sys.inputs();
    const auto steps = input.rows();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A * dt;
    aug.topRightCorner(n, m) = sys.B * dt;
    const Matrix phi = aug.exp();
    const Matrix Ad = phi.topLeftCorner(n, n);
    const Matrix Bd = phi.topRightCorner(n, m);

    TimeResponse out;
    out.times.resize(static_cast<std::size_t>(steps));
    out.inputs = input;
    out.outputs.resize(steps, sys.outputs());
    out.states.resize(steps, n);
    Vector x = Vector::Zero(n);
    for (Eigen::Index k = 0; k < steps; ++k) {
        out.times[static_cast<std::size_t>(k)] = dt * static_cast<double>(k);
        const Vector u = input.row(k).transpose();
        out.states.row(k) = x.transpose();
        out.outputs.row(k) = (sys.C * x + sys.D * u).transpose();
        x = Ad * x + Bd * u;
    }
    return out;
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
    require(first.outputs() == second.inputs(), ErrorKind::DimensionMismatch, "series: output/input count mismatch");
    const auto n1 = first.states();
    const auto n2 = second.states();
    Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = first.A;
    A.bottomLeftCorner(n2, n1) = second.B * first.C;
    A.bottomRightCorner(n2, n2) = second.A;
    Matrix B(n1 + n2, first.inputs());
    B.topRows(n1) = first.B;
    B.bottomRows(n2) = second.B * first.D;
    Matrix C(second.outputs(), n1 + n2);
    C.leftCols(n1) = second.D * first.C;
    C.rightCols(n2) = second.C;
    return StateSpace(std::move(A), std::move(B), std::move(C), second.D * first.D);
}

StateSpace parallel(const StateSpace& a, const StateSpace& b) {
    require(a.inputs() == b.inputs() && a.outputs() == b.outputs(), ErrorKind::DimensionMismatch,
            "parallel: systems must share shape");
    const auto na = a.states();
    const auto nb = b.states();
    Matrix A = Matrix::Zero(na + nb, na + nb);
    A.topLeftCorner(na, na) = a.A;
    A.bottomRightCorner(nb, nb) = b.A;
    Matrix B(na + nb, a.inputs());
    B << a.B, b.B;
    Matrix C(a.outputs(), na + nb);
    C << a.C, b.C;
    return StateSpace(std::move(A), std::move(B), std::move(C), a.D + b.D);
}

StateSpace append(const StateSpace& a, const StateSpace& b) {
    const auto na = a.states();
    const auto nb = b.states();
    Matrix A = Matrix::Zero(na + nb, na + nb);
    A.topLeftCorner(na, na) = a.A;
    A.bottomRightCorner(nb, nb) = b.A;
    Matrix B = Matrix::Zero(na + nb, a.inputs() + b.inputs());
    B.topLeftCorner(na, a.inputs()) = a.B;
    B.bottomRightCorner(nb, b.inputs()) = b.B;
    Matrix C = Matrix::Zero(a.outputs() + b.outputs(), na + nb);
    C.topLeftCorner(a.outputs(), na) = a.C;
    C.bottomRightCorner(b.outputs(), nb) = b.C;
    Matrix D = Matrix::Zero(a.outputs() + b.outputs(), a.inputs() + b.inputs());
    D.topLeftCorner(a.outputs(), a.inputs()) = a.D;
    D.bottomRightCorner(b.outputs(), b.inputs()) = b.D;
    return StateSpace(std::move(A), std::move(B), std::move(C), std::move(D));
}

StateSpace premultiply(const Matrix& left, const StateSpace& sys) {
    require(left.cols() == sys.outputs(), ErrorKind::DimensionMismatch, "premultiply: shape mismatch");
    return StateSpace(sys.A, sys.B, left * sys.C, left * sys.D);
}

StateSpace postmultiply(const StateSpace& sys, const Matrix& right) {
    require(right.rows() == sys.inputs(), ErrorKind::DimensionMismatch, "postmultiply: shape mismatch");
    return StateSpace(sys.A, sys.B * right, sys.C, sys.D * right);
}

StateSpace transfer_function(std::vector<double> num, std::vector<double> den) {
    while (den.size() > 1 && den.front() == 0.0) den.erase(den.begin());
    while (num.size() > 1 && num.front() == 0.0) num.erase(num.begin());
    require(!den.empty() && den.front() != 0.0, ErrorKind::InvalidArgument, "denominator must be nonzero");
    require(num.size() <= den.size(), ErrorKind::InvalidArgument, "transfer function must be proper");
    const std::size_t n = den.size() - 1;
    const double lead = den.front();
    for (auto& c : den) c /= lead;
    for (auto& c : num) c /= lead;
    std::vector<double> b(n + 1, 0.0);
    std::copy(num.begin(), num.end(), b.begin() + static_cast<std::ptrdiff_t>(n + 1 - num.size()));
    const auto ni = static_cast<Eigen::Index>(n);
    Matrix A = Matrix::Zero(ni, ni);
    Matrix B = Matrix::Zero(ni, 1);
    Matrix C(1, ni);
    for (Eigen::Index i = 0; i + 1 < ni; ++i) A(i, i + 1) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        // Last row holds -a_n ... -a_1 for the controllable canonical form.
        A(ni - 1, static_cast<Eigen::Index>(i)) = -den[n - i];
        C(0, static_cast<Eigen::Index>(i)) = b[n - i] - den[n - i] * b[0];
    }
    if (n > 0) B(ni - 1, 0) = 1.0;
    return StateSpace(std::move(A), std::move(B), std::move(C), Matrix::Constant(1, 1, b[0]));
}

Matrix dc_gain(const StateSpace& sys) {
    if (sys.states() == 0) return sys.D;
    return sys.D - sys.C * sys.A.fullPivLu().solve(sys.B);
}

StateSpace balance(const StateSpace& sys) {
    const Eigen::Index n = sys.states();
    Matrix A = sys.A, B = sys.B, C = sys.C;
    for (int sweep = 0; sweep < 50; ++sweep) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = std::sqrt(A.row(i).squaredNorm() - A(i, i) * A(i, i) + B.row(i).squaredNorm());
            const double c = std::sqrt(A.col(i).squaredNorm() - A(i, i) * A(i, i) + C.col(i).squaredNorm());
            if (r == 0.0 || c == 0.0) continue;
            // Powers of two keep the similarity exact in floating point.
            const double f = std::exp2(std::round(0.5 * std::log2(r / c)));
            if (f == 1.0) continue;
            A.row(i) /= f;
            B.row(i) /= f;
            A.col(i) *= f;
            C.col(i) *= f;
            changed = true;
        }
        if (!changed) break;
    }
    return StateSpace(A, B, C, sys.D);
}

}  // namespace robust
