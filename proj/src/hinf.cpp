#include "robust/hinf.hpp"

#include <cmath>
#include <optional>

namespace robust {

namespace {

using sdp::AffineMatrix;

constexpr double kConditionLimit = 1e13;

struct Prepared {
    GeneralizedPlant plant;  // D22 removed, at least one state
    Matrix d22;
};

Prepared prepare(const GeneralizedPlant& p) {
    if (p.n_u < 1 || p.n_y < 1) throw Error(ErrorKind::DimensionMismatch, "synthesis needs n_u >= 1 and n_y >= 1");
    if (p.n_w < 1 || p.n_z < 1) throw Error(ErrorKind::DimensionMismatch, "synthesis needs n_w >= 1 and n_z >= 1");
    StateSpace ss = p.ss;
    if (ss.states() == 0) {
        // One stable state that neither inputs nor outputs can see.
        ss = StateSpace(-Matrix::Identity(1, 1), Matrix::Zero(1, ss.inputs()), Matrix::Zero(ss.outputs(), 1), ss.D);
    }
    ss = balance(ss);
    Prepared out{GeneralizedPlant(ss, p.n_w, p.n_u, p.n_z, p.n_y), Matrix(p.D22())};
    out.plant.ss.D.bottomRightCorner(p.n_y, p.n_u).setZero();
    if (!is_stabilizable(ss.A, Matrix(out.plant.B2()))) {
        throw Error(ErrorKind::NotStabilizable, "(A, B_u) is not stabilizable");
    }
    if (!is_detectable(ss.A, Matrix(out.plant.C2()))) {
        throw Error(ErrorKind::NotDetectable, "(C_y, A) is not detectable");
    }
    return out;
}

struct Variables {
    AffineMatrix X, Y, K, L, M, N;
};

// Registers the change-of-variables LMIs of the bounded real lemma. `gamma` is
// either a decision variable or a constant 1x1 expression.
Variables add_bounded_real(sdp::Problem& p, const GeneralizedPlant& g, const AffineMatrix& gamma,
                           const HinfOptions& opts) {
    const double eps = opts.strict_eps;
    const int n = static_cast<int>(g.ss.states());
    const Matrix A = g.ss.A;
    const Matrix B1 = g.B1(), B2 = g.B2(), C1 = g.C1(), C2 = g.C2();
    const Matrix D11 = g.D11(), D12 = g.D12(), D21 = g.D21();
    Variables v{p.add_symmetric("X", n),       p.add_symmetric("Y", n),         p.add_matrix("K", n, n),
                p.add_matrix("L", n, g.n_y),   p.add_matrix("M", g.n_u, n),     p.add_matrix("N", g.n_u, g.n_y)};
    const AffineMatrix bA = AffineMatrix::blocks({{A * v.X + B2 * v.M, B2 * v.N * C2 + A}, {v.K, v.Y * A + v.L * C2}});
    const AffineMatrix bB = AffineMatrix::blocks({{B2 * v.N * D21 + B1}, {v.Y * B1 + v.L * D21}});
    const AffineMatrix bC = AffineMatrix::blocks({{C1 * v.X + D12 * v.M, D12 * v.N * C2 + C1}});
    const AffineMatrix bD = D12 * v.N * D21 + D11;
    const AffineMatrix gw = AffineMatrix::scaled(gamma, Matrix::Identity(g.n_w, g.n_w));
    const AffineMatrix gz = AffineMatrix::scaled(gamma, Matrix::Identity(g.n_z, g.n_z));
    const AffineMatrix lmi = AffineMatrix::blocks({{bA + bA.transpose(), bB, bC.transpose()},
                                                   {bB.transpose(), -gw, bD.transpose()},
                                                   {bC, bD, -gz}});
    p.add_strict_lmi(-lmi, eps, "bounded real");
    const AffineMatrix eye(Matrix(Matrix::Identity(n, n)));
    p.add_strict_lmi(AffineMatrix::blocks({{v.X, eye}, {eye, v.Y}}), eps, "coupling");
    if (opts.lyapunov_bound > 0.0) {
        const Matrix cap = opts.lyapunov_bound * Matrix::Identity(n, n);
        p.add_lmi(-v.X + cap, "X <= rho I");
        p.add_lmi(-v.Y + cap, "Y <= rho I");
    }
    return v;
}

struct Recovered {
    StateSpace controller;
    double condition = 0.0;
};

Recovered reconstruct(const GeneralizedPlant& g, const sdp::Solution& sol, const Variables& v) {
    const int n = static_cast<int>(g.ss.states());
    const Matrix X = sol.value(v.X), Y = sol.value(v.Y), K = sol.value(v.K);
    const Matrix L = sol.value(v.L), M = sol.value(v.M), N = sol.value(v.N);
    const Matrix A = g.ss.A, B2 = g.B2(), C2 = g.C2();

    const Matrix residual = Matrix::Identity(n, n) - X * Y;
    Eigen::JacobiSVD<Matrix> svd(residual, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector s = svd.singularValues();
    const double smax = s(0);
    Recovered r;
    r.condition = smax > 0.0 ? smax / std::max(s(n - 1), 1e-300) : INFINITY;
    s = s.cwiseMax(1e-12 * smax);
    const Vector root = s.cwiseSqrt();
    const Matrix U = svd.matrixU() * root.asDiagonal();  // U V^T = I - XY
    const Matrix V = svd.matrixV() * root.asDiagonal();
    const Matrix UinvT = svd.matrixU() * root.cwiseInverse().asDiagonal();
    const Matrix Vinv = root.cwiseInverse().asDiagonal() * svd.matrixV().transpose();

    const Matrix Dk = N;
    const Matrix Ck = (M - Dk * C2 * X) * UinvT;
    const Matrix Bk = Vinv * (L - Y * B2 * Dk);
    const Matrix Ak = Vinv * (K - V * Bk * C2 * X - Y * B2 * Ck * U.transpose() - Y * (A + B2 * Dk * C2) * X) * UinvT;
    r.controller = StateSpace(Ak, Bk, Ck, Dk);
    return r;
}

// Absorbs the y <- u feedthrough removed before synthesis.
StateSpace unshift(const StateSpace& k0, const Matrix& d22) {
    if (d22.norm() == 0.0) return k0;
    const Eigen::Index nu = k0.outputs();
    const Matrix R = Matrix::Identity(nu, nu) + k0.D * d22;
    Eigen::FullPivLU<Matrix> lu(R);
    if (!lu.isInvertible() || lu.rcond() < 1e-12) {
        throw Error(ErrorKind::AlgebraicLoop, "I + D_k D_yu is singular after loop shifting");
    }
    const Matrix Rinv = lu.inverse();
    const Matrix ny_eye = Matrix::Identity(k0.inputs(), k0.inputs());
    return StateSpace(k0.A - k0.B * d22 * Rinv * k0.C, k0.B * (ny_eye - d22 * Rinv * k0.D), Rinv * k0.C, Rinv * k0.D);
}

struct Attempt {
    sdp::Solution sol;
    Variables vars;
};

Attempt feasibility_at(const GeneralizedPlant& g, double gamma, const HinfOptions& opts) {
    sdp::Problem p;
    const auto vars = add_bounded_real(p, g, AffineMatrix(Matrix::Constant(1, 1, gamma)), opts);
    return {sdp::solve(p, opts.solver), vars};
}

// Recovers K from a feasible solution at gamma and verifies the closed loop.
std::optional<SynthesisResult> finish(const GeneralizedPlant& original, const Prepared& prep, const Attempt& at,
                                      double gamma, SynthesisDiagnostics diag) {
    const auto rec = reconstruct(prep.plant, at.sol, at.vars);
    diag.reconstruction_condition = rec.condition;
    if (!(rec.condition <= kConditionLimit)) return std::nullopt;
    StateSpace k = unshift(rec.controller, prep.d22);
    const StateSpace cl = lft_lower(original, k);
    if (!is_stable(cl)) return std::nullopt;
    const double norm = hinf_norm(cl, 1e-7);
    if (norm > gamma * (1.0 + 1e-3) + 1e-9) return std::nullopt;
    diag.closed_loop_norm = norm;
    return SynthesisResult{std::move(k), gamma, std::move(diag)};
}

[[noreturn]] void fail_reconstruction(const SynthesisDiagnostics& d) {
    throw Error(ErrorKind::ReconstructionIllConditioned,
                "controller recovery failed; last condition number of I - XY = " +
                    std::to_string(d.reconstruction_condition));
}

}  // namespace

bool is_stabilizable(const Matrix& a, const Matrix& b, double tol) {
    const Eigen::Index n = a.rows();
    if (n == 0) return true;
    Eigen::EigenSolver<Matrix> es(a);
    const double scale = std::max({1.0, a.norm(), b.norm()});
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex lambda = es.eigenvalues()(i);
        if (lambda.real() < -tol * scale) continue;
        CMatrix pencil(n, n + b.cols());
        pencil << a.cast<Complex>() - lambda * CMatrix::Identity(n, n), b.cast<Complex>();
        Eigen::JacobiSVD<CMatrix> svd(pencil);
        if (svd.singularValues()(n - 1) <= tol * scale * 1e3) return false;
    }
    return true;
}

bool is_detectable(const Matrix& a, const Matrix& c, double tol) {
    return is_stabilizable(a.transpose(), c.transpose(), tol);
}

SynthesisResult hinf_syn_lmi(const GeneralizedPlant& plant, const HinfOptions& opts) {
    const Prepared prep = prepare(plant);
    SynthesisDiagnostics diag;

    sdp::Problem p;
    const auto gamma = p.add_scalar("gamma");
    add_bounded_real(p, prep.plant, gamma, opts);
    p.minimize(gamma);
    const auto best = sdp::solve(p, opts.solver);
    ++diag.sdp_solves;
    diag.solver_status.emplace_back(sdp::to_string(best.status));
    if (!best.ok()) throw Error(ErrorKind::SolverFailure, "gamma minimization returned " + diag.solver_status.back());
    const double gopt = std::max(best.scalar(gamma), 0.0);
    diag.gamma_lmi = gopt;

    for (double b : {opts.backoff, 1e-2, 5e-2, 2e-1}) {
        if (b < opts.backoff) continue;
        const double g = gopt * (1.0 + b) + b * 1e-3;
        const auto at = feasibility_at(prep.plant, g, opts);
        ++diag.sdp_solves;
        diag.solver_status.emplace_back(sdp::to_string(at.sol.status));
        if (!at.sol.ok()) continue;
        diag.backoff = b;
        if (auto r = finish(plant, prep, at, g, diag)) return *r;
        diag.reconstruction_condition = reconstruct(prep.plant, at.sol, at.vars).condition;
    }
    fail_reconstruction(diag);
}

SynthesisResult hinf_syn_lmi_bisect(const GeneralizedPlant& plant, const HinfBisectOptions& opts) {
    const Prepared prep = prepare(plant);
    SynthesisDiagnostics diag;
    auto probe = [&](double g) {
        auto at = feasibility_at(prep.plant, g, opts.base);
        ++diag.sdp_solves;
        diag.solver_status.emplace_back(sdp::to_string(at.sol.status));
        return at;
    };

    double lo = std::max(opts.gamma_lo, 0.0);
    double hi = opts.gamma_hi > 0.0 ? opts.gamma_hi : std::max(1.0, 2.0 * lo);
    std::optional<Attempt> feasible;
    for (int k = 0; k <= 30; ++k) {
        auto at = probe(hi);
        if (at.sol.ok()) {
            feasible = std::move(at);
            break;
        }
        lo = std::max(lo, hi);
        hi *= 2.0;
    }
    if (!feasible) throw Error(ErrorKind::BracketExhausted, "no feasible gamma after doubling the upper bracket 30 times");

    while (hi - lo > opts.bisect_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        auto at = probe(mid);
        if (at.sol.ok()) {
            hi = mid;
            feasible = std::move(at);
        } else {
            lo = mid;
        }
    }
    diag.gamma_lmi = hi;
    if (auto r = finish(plant, prep, *feasible, hi, diag)) return *r;
    diag.reconstruction_condition = reconstruct(prep.plant, feasible->sol, feasible->vars).condition;
    for (double b : {opts.base.backoff, 3e-3, 1e-2, 5e-2, 2e-1}) {
        if (b < opts.base.backoff) continue;
        const double g = hi * (1.0 + b) + b * 1e-3;
        auto at = probe(g);
        if (!at.sol.ok()) continue;
        diag.backoff = b;
        if (auto r = finish(plant, prep, at, g, diag)) return *r;
    }
    fail_reconstruction(diag);
}

}  // namespace robust
