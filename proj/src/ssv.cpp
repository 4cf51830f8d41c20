#include "robust/ssv.hpp"

#include <algorithm>
#include <cmath>

#include "robust/sdp.hpp"

namespace robust {

namespace {

constexpr double kDRange = 1e4;         // I <= D <= kDRange * I inside each LMI
constexpr double kBalanceLimit = 1e6;   // cap on the prebalancing scalars

struct Layout {
    std::vector<int> offset;  // padded offsets
};

Layout layout(const BlockStructure& s) {
    Layout l;
    int o = 0;
    for (const auto& b : s.blocks) {
        l.offset.push_back(o);
        o += b.dim;
    }
    return l;
}

CMatrix hermitian_sqrt(const CMatrix& d, bool inverse) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(d);
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    if (inverse) ev = ev.cwiseInverse();
    return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

// Osborne-style block scalar balancing: returns d with M_hat = diag(d) M diag(d)^-1
// having comparable off-diagonal row and column block norms.
Vector balance(const CMatrix& m, const BlockStructure& s, const Layout& l) {
    const int nb = static_cast<int>(s.blocks.size());
    Vector d = Vector::Ones(nb);
    for (int sweep = 0; sweep < 30; ++sweep) {
        bool changed = false;
        for (int i = 0; i < nb; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (int j = 0; j < nb; ++j) {
                if (j == i) continue;
                const double ratio_ij = d(i) / d(j);
                r += ratio_ij * ratio_ij *
                     m.block(l.offset[i], l.offset[j], s.blocks[i].dim, s.blocks[j].dim).squaredNorm();
                c += m.block(l.offset[j], l.offset[i], s.blocks[j].dim, s.blocks[i].dim).squaredNorm() /
                     (ratio_ij * ratio_ij);
            }
            if (r == 0.0 && c == 0.0) continue;
            double f = (r == 0.0) ? 1e2 : (c == 0.0 ? 1e-2 : std::pow(c / r, 0.25));
            f = std::clamp(f, 1e-2, 1e2);
            const double next = std::clamp(d(i) * f, 1.0 / kBalanceLimit, kBalanceLimit);
            if (std::abs(std::log(next / d(i))) > 1e-3) changed = true;
            d(i) = next;
        }
        if (!changed) break;
    }
    return d;
}

// Builds the structured D variable as an affine complex expression.
sdp::AffineCMatrix structured_d(sdp::Problem& p, const BlockStructure& s, const Layout& l) {
    const int n = s.total_dim();
    sdp::AffineCMatrix d(n, n);
    for (std::size_t k = 0; k < s.blocks.size(); ++k) {
        const auto& b = s.blocks[k];
        CMatrix embed = CMatrix::Zero(n, b.dim);
        embed.block(l.offset[k], 0, b.dim, b.dim).setIdentity();
        sdp::AffineCMatrix blk;
        if (b.kind == BlockKind::RepeatedScalar) {
            blk = p.add_hermitian("D" + std::to_string(k), b.dim);
        } else {
            blk = sdp::AffineCMatrix::scaled(sdp::to_complex(p.add_scalar("d" + std::to_string(k))),
                                             CMatrix::Identity(b.dim, b.dim));
        }
        d += embed * blk * CMatrix(embed.transpose());
    }
    return d;
}

enum class Probe { Feasible, Infeasible, Failed };

struct ProbeResult {
    Probe outcome = Probe::Failed;
    CMatrix d;
};

ProbeResult probe(const CMatrix& m, const BlockStructure& s, const Layout& l, double gamma) {
    const int n = static_cast<int>(m.rows());
    sdp::Problem p;
    const auto d = structured_d(p, s, l);
    const auto t = p.add_scalar("t");
    const CMatrix eye = CMatrix::Identity(n, n);
    p.add_lmi(d - eye, "D >= I");
    p.add_lmi(-d + CMatrix(kDRange * eye), "D <= kI");
    p.add_lmi(d * Complex(gamma * gamma) - CMatrix(m.adjoint()) * d * m -
                  sdp::AffineCMatrix::scaled(sdp::to_complex(t), eye),
              "gamma^2 D - M*DM >= tI");
    p.add_lmi(-t + Matrix::Ones(1, 1), "t <= 1");
    p.maximize(t);
    const auto sol = sdp::solve(p);
    ProbeResult r;
    if (!sol.ok()) {
        r.outcome = sol.status == sdp::Status::Infeasible ? Probe::Infeasible : Probe::Failed;
        return r;
    }
    r.d = sol.value(d);
    r.d = (0.5 * (r.d + r.d.adjoint())).eval();
    r.outcome = sol.scalar(t) > 0.0 ? Probe::Feasible : Probe::Infeasible;
    return r;
}

}  // namespace

UncertaintyBlock UncertaintyBlock::repeated(int r) {
    if (r < 1) throw Error(ErrorKind::InvalidArgument, "block dimension must be positive");
    return {BlockKind::RepeatedScalar, r, r, r};
}

UncertaintyBlock UncertaintyBlock::full(int m) { return full(m, m); }

UncertaintyBlock UncertaintyBlock::full(int z_dim, int w_dim) {
    if (z_dim < 1 || w_dim < 1) throw Error(ErrorKind::InvalidArgument, "block dimension must be positive");
    return {BlockKind::FullComplex, std::max(z_dim, w_dim), z_dim, w_dim};
}

BlockStructure::BlockStructure(std::vector<UncertaintyBlock> b) : blocks(std::move(b)) {
    if (blocks.empty()) throw Error(ErrorKind::InvalidArgument, "block structure needs at least one block");
    for (const auto& blk : blocks) {
        if (blk.dim < 1 || blk.z_dim < 1 || blk.w_dim < 1 || blk.dim != std::max(blk.z_dim, blk.w_dim) ||
            (blk.kind == BlockKind::RepeatedScalar && blk.z_dim != blk.w_dim)) {
            throw Error(ErrorKind::InvalidArgument, "malformed uncertainty block");
        }
    }
}

int BlockStructure::total_dim() const {
    int n = 0;
    for (const auto& b : blocks) n += b.dim;
    return n;
}

int BlockStructure::z_dim() const {
    int n = 0;
    for (const auto& b : blocks) n += b.z_dim;
    return n;
}

int BlockStructure::w_dim() const {
    int n = 0;
    for (const auto& b : blocks) n += b.w_dim;
    return n;
}

bool BlockStructure::has_full_block() const {
    return std::any_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.kind == BlockKind::FullComplex; });
}

CMatrix pad_to_structure(const CMatrix& m, const BlockStructure& s) {
    const int n = s.total_dim();
    if (m.rows() == n && m.cols() == n) return m;
    if (m.rows() != s.z_dim() || m.cols() != s.w_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "matrix does not conform to the block structure");
    }
    // Block k of M owns z_dim rows and w_dim columns.
    CMatrix out = CMatrix::Zero(n, n);
    int zr = 0;
    int pr = 0;
    for (const auto& bi : s.blocks) {
        int wc = 0;
        int pc = 0;
        for (const auto& bj : s.blocks) {
            out.block(pr, pc, bi.z_dim, bj.w_dim) = m.block(zr, wc, bi.z_dim, bj.w_dim);
            wc += bj.w_dim;
            pc += bj.dim;
        }
        zr += bi.z_dim;
        pr += bi.dim;
    }
    return out;
}

double scaled_gain(const CMatrix& m, const CMatrix& d) {
    return max_singular_value(CMatrix(hermitian_sqrt(d, false) * m * hermitian_sqrt(d, true)));
}

SsvPoint ssv_upper_point(const CMatrix& m_in, const BlockStructure& s, const SsvOptions& opts) {
    const CMatrix m = pad_to_structure(m_in, s);
    const int n = s.total_dim();
    const Layout l = layout(s);
    SsvPoint out{max_singular_value(m), CMatrix::Identity(n, n)};
    const bool trivial = s.blocks.size() == 1 && s.blocks.front().kind == BlockKind::FullComplex;
    if (out.mu == 0.0 || trivial) return out;

    const Vector bal = balance(m, s, l);
    Vector d0(n);
    for (std::size_t k = 0; k < s.blocks.size(); ++k) d0.segment(l.offset[k], s.blocks[k].dim).setConstant(bal(k));
    const CMatrix m_bal = d0.cast<Complex>().asDiagonal() * m * d0.cwiseInverse().cast<Complex>().asDiagonal();
    const double scale = max_singular_value(m_bal);
    if (scale == 0.0) {
        out.mu = 0.0;
        return out;
    }
    const CMatrix mn = m_bal / scale;

    double lo = 0.0;
    double hi = 1.0;
    CMatrix best = CMatrix::Identity(n, n);
    int attempts = 0;
    int failures = 0;
    for (int it = 0; it < opts.max_iter && hi - lo > opts.bisect_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto r = probe(mn, s, l, mid);
        ++attempts;
        if (r.outcome == Probe::Failed) {
            ++failures;
            lo = mid;
            continue;
        }
        if (r.d.size() > 0) {
            const double cert = scaled_gain(mn, r.d);
            if (cert < hi) {
                hi = cert;
                best = r.d;
            }
        }
        if (r.outcome == Probe::Infeasible) lo = std::min(mid, hi);
    }
    if (attempts > 0 && failures == attempts) throw Error(ErrorKind::SolverFailure, "every bisection probe failed");

    // Undo the balancing: D_total = D0 * D * D0 stays in the commuting set.
    CMatrix d = d0.cast<Complex>().asDiagonal() * best * d0.cast<Complex>().asDiagonal();
    const double certified = scaled_gain(m, d);
    if (certified < out.mu) {
        out.mu = certified;
        out.d = d;
    }
    double norm = 0.0;
    for (int k = static_cast<int>(s.blocks.size()) - 1; k >= 0; --k) {
        if (s.blocks[static_cast<std::size_t>(k)].kind == BlockKind::FullComplex) {
            norm = out.d(l.offset[static_cast<std::size_t>(k)], l.offset[static_cast<std::size_t>(k)]).real();
            break;
        }
    }
    if (norm == 0.0) norm = out.d.trace().real() / n;
    out.d /= norm;
    return out;
}

SsvResult ssv_upper(const FrequencyResponseData& m, const BlockStructure& s, const SsvOptions& opts) {
    if (m.values.size() != m.grid.size()) throw Error(ErrorKind::GridMismatch, "response length differs from grid");
    SsvResult r;
    r.grid = m.grid;
    r.d_scales.grid = m.grid;
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        SsvPoint pt;
        try {
            pt = ssv_upper_point(m.values[i], s, opts);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::SolverFailure) {
                throw Error(ErrorKind::SolverFailure, "SSV bound failed at omega = " + std::to_string(m.grid[i]),
                            static_cast<int>(i));
            }
            throw;
        }
        r.mu_upper.push_back(pt.mu);
        r.d_scales.scales.push_back(std::move(pt.d));
        if (i == 0 || pt.mu > r.peak) {
            r.peak = pt.mu;
            r.peak_index = i;
            r.peak_omega = m.grid[i];
        }
    }
    return r;
}

RobustStability assess_robust_stability(const FrequencyResponseData& clp, const BlockStructure& s,
                                        const SsvOptions& opts) {
    RobustStability r;
    r.detail = ssv_upper(clp, s, opts);
    r.margin = r.detail.peak;
    r.robust = r.margin <= 1.0;
    return r;
}

}  // namespace robust
