#include "robust/dfit.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Eigenvalues>

#include "robust/sdp.hpp"

namespace robust {

namespace {

using sdp::AffineMatrix;

// Squared magnitude N(x)/D(x) with x = (omega / omega_c)^2. Coefficients are
// in ascending powers of x.
struct Rational {
    Vector num;
    Vector den;
};

Vector powers(double x, int m) {
    Vector p(m + 1);
    p(0) = 1.0;
    for (int k = 1; k <= m; ++k) p(k) = p(k - 1) * x;
    return p;
}

struct FitProblem {
    std::vector<double> x;      // data abscissae, normalized
    std::vector<double> d2;     // squared data
    std::vector<double> xr;     // positivity grid, normalized
    double d2_min = 0.0, d2_max = 0.0;
    int m = 0;
    FitMode mode = FitMode::Approximate;
};

// Decision vector: a_0..a_m, b_1..b_m; b_0 = 1 - sum b_k pins D(1) = 1.
struct Layout {
    int m;
    int size() const { return 2 * m + 1; }
    // Row vector r with r . y + r0 = N(x) - c D(x).
    std::pair<Vector, double> combo(double x, double c) const {
        const Vector p = powers(x, m);
        Vector r = Vector::Zero(size());
        r.head(m + 1) = p;
        for (int k = 1; k <= m; ++k) r(m + k) = -c * (p(k) - 1.0);
        return {r, -c};
    }
    Rational unpack(const Vector& y) const {
        Rational q{y.head(m + 1), Vector(m + 1)};
        q.den(0) = 1.0;
        for (int k = 1; k <= m; ++k) {
            q.den(k) = y(m + k);
            q.den(0) -= y(m + k);
        }
        return q;
    }
};

std::optional<Rational> feasible_at(const FitProblem& fp, double level, const sdp::SolverOptions& so,
                                    bool& infeasible) {
    const Layout lay{fp.m};
    sdp::Problem p;
    std::vector<AffineMatrix> vars;
    for (int i = 0; i < lay.size(); ++i) vars.push_back(p.add_scalar("c" + std::to_string(i)));
    // r . y + r0 >= 0, normalized to a unit row.
    auto add_row = [&](const Vector& r, double r0, double sign) {
        const double scale = std::max(r.norm(), std::abs(r0));
        AffineMatrix e(Matrix::Constant(1, 1, sign * r0 / scale));
        for (int i = 0; i < lay.size(); ++i) {
            if (r(i) != 0.0) e += vars[static_cast<std::size_t>(i)] * (sign * r(i) / scale);
        }
        p.add_lmi(e);
    };
    const double alpha = std::exp(2.0 * level);
    for (std::size_t i = 0; i < fp.x.size(); ++i) {
        auto [ru, ru0] = lay.combo(fp.x[i], alpha * fp.d2[i]);
        add_row(ru, ru0, -1.0);  // N <= alpha d^2 D
        const double lower = fp.mode == FitMode::Overbound ? fp.d2[i] : fp.d2[i] / alpha;
        auto [rl, rl0] = lay.combo(fp.x[i], lower);
        add_row(rl, rl0, 1.0);  // N >= lower D
    }
    for (double x : fp.xr) {
        // D(x) = 1 + sum_k b_k (x^k - 1) >= 1e-9 (1 + x^m)
        Vector rb = Vector::Zero(lay.size());
        rb.tail(fp.m) = powers(x, fp.m).tail(fp.m).array() - 1.0;
        add_row(rb, 1.0 - 1e-9 * (1.0 + std::pow(x, fp.m)), 1.0);
        auto [rlo, rlo0] = lay.combo(x, 1e-6 * fp.d2_min);
        add_row(rlo, rlo0, 1.0);
        auto [rhi, rhi0] = lay.combo(x, 1e6 * fp.d2_max);
        add_row(rhi, rhi0, -1.0);
    }
    if (fp.m > 0) {
        Vector lead = Vector::Zero(lay.size());
        lead(fp.m) = 1.0;
        add_row(lead, 0.0, 1.0);
        lead.setZero();
        lead(2 * fp.m) = 1.0;
        add_row(lead, 0.0, 1.0);
    }
    const auto sol = sdp::solve(p, so);
    infeasible = sol.status == sdp::Status::Infeasible;
    if (!sol.ok()) return std::nullopt;
    return lay.unpack(sol.values);
}

// Strips leading coefficients that are negligible over [0, x_max]. A leading
// coefficient is constrained nonnegative, so a negative one is solver noise.
Vector trim(Vector c, double x_max) {
    if (c.size() > 1) c(c.size() - 1) = std::max(c(c.size() - 1), 0.0);
    double biggest = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) biggest = std::max(biggest, std::abs(c(k)) * std::pow(x_max, k));
    Eigen::Index deg = c.size() - 1;
    while (deg > 0 && std::abs(c(deg)) * std::pow(x_max, deg) <= 1e-10 * biggest) --deg;
    return Vector(c.head(deg + 1));
}

CVector poly_roots(const Vector& c) {
    const Eigen::Index n = c.size() - 1;
    if (n <= 0) return CVector(0);
    Matrix comp = Matrix::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -c(i) / c(n);
    Eigen::EigenSolver<Matrix> es(comp, false);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalRooting, "companion eigenvalue solver failed");
    return es.eigenvalues();
}

// Left half-plane s-roots for the squared-magnitude roots r in x = -s^2.
// Returned as real roots and upper complex roots, in rad/s of normalized s.
struct SRoots {
    std::vector<double> real;
    std::vector<Complex> upper;
    int degree() const { return static_cast<int>(real.size() + 2 * upper.size()); }
};

SRoots spectral_roots(const CVector& r) {
    SRoots out;
    std::vector<double> on_axis;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const Complex ri = r(i);
        const double mag = std::abs(ri);
        if (std::abs(ri.imag()) <= 1e-9 * std::max(mag, 1e-300)) {
            if (ri.real() < 0.0) out.real.push_back(-std::sqrt(-ri.real()));
            else on_axis.push_back(ri.real());
        } else if (ri.imag() > 0.0) {
            Complex z = -std::sqrt(-ri);
            if (z.imag() < 0.0) z = std::conj(z);
            out.upper.push_back(z);
        }
    }
    // Sign changes of the squared magnitude come in adjacent pairs when the
    // polynomial only grazes zero; each pair becomes a lightly damped zero.
    std::sort(on_axis.begin(), on_axis.end());
    if (on_axis.size() % 2 != 0) {
        throw Error(ErrorKind::NumericalRooting, "squared magnitude changes sign on the imaginary axis");
    }
    for (std::size_t i = 0; i < on_axis.size(); i += 2) {
        const double w = std::sqrt(std::sqrt(std::max(on_axis[i], 0.0) * on_axis[i + 1]));
        out.upper.emplace_back(-1e-6 * std::max(w, 1e-12), w);
    }
    for (double& v : out.real) {
        if (v == 0.0) throw Error(ErrorKind::NumericalRooting, "root at the origin");
    }
    return out;
}

// Removes root pairs shared by numerator and denominator. Surplus order lets
// the LP multiply both by the same nonnegative factor.
void cancel_common(std::vector<Complex>& num, std::vector<Complex>& den) {
    for (std::size_t i = 0; i < num.size();) {
        std::size_t best = den.size();
        double dist = INFINITY;
        for (std::size_t j = 0; j < den.size(); ++j) {
            const double dj = std::abs(num[i] - den[j]);
            if (dj < dist) {
                dist = dj;
                best = j;
            }
        }
        if (best < den.size() && dist <= 1e-3 * std::max(std::abs(num[i]), 1e-12)) {
            num.erase(num.begin() + static_cast<std::ptrdiff_t>(i));
            den.erase(den.begin() + static_cast<std::ptrdiff_t>(best));
        } else {
            ++i;
        }
    }
}

CVector to_cvector(const std::vector<Complex>& v) {
    CVector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

std::vector<Complex> to_list(const CVector& v) { return std::vector<Complex>(v.data(), v.data() + v.size()); }

struct Chunk {
    int degree;
    double c1, c0;  // s^2 + c1 s + c0, or s + c0
};

std::vector<Chunk> chunks(const SRoots& s) {
    std::vector<Chunk> out;
    for (const Complex& z : s.upper) out.push_back({2, -2.0 * z.real(), std::norm(z)});
    std::vector<double> re = s.real;
    std::sort(re.begin(), re.end());
    std::size_t i = 0;
    for (; i + 1 < re.size(); i += 2) out.push_back({2, -(re[i] + re[i + 1]), re[i] * re[i + 1]});
    if (i < re.size()) out.push_back({1, 0.0, -re[i]});
    std::stable_sort(out.begin(), out.end(), [](const Chunk& a, const Chunk& b) { return a.degree > b.degree; });
    return out;
}

// (zero chunk) / (pole chunk) with matching degree, realized with a
// diagonal similarity that keeps the entries near the natural frequency.
StateSpace section(const Chunk& z, const Chunk& p) {
    if (p.degree == 1) {
        const double pole = -p.c0;
        const double res = z.c0 - p.c0;  // (s + z0)/(s + p0) = 1 + (z0 - p0)/(s + p0)
        const double root = std::sqrt(std::abs(res));
        return StateSpace(Matrix::Constant(1, 1, pole), Matrix::Constant(1, 1, root),
                          Matrix::Constant(1, 1, res >= 0.0 ? root : -root), Matrix::Constant(1, 1, 1.0));
    }
    const double wn = std::sqrt(p.c0);
    Matrix A(2, 2), B(2, 1), C(1, 2);
    A << 0.0, wn, -wn, -p.c1;
    B << 0.0, 1.0;
    // Remainder (z1 - p1) s + (z0 - p0) over the companion form, x2 scaled by wn.
    C << (z.c0 - p.c0) / wn, z.c1 - p.c1;
    return StateSpace(A, B, C, Matrix::Constant(1, 1, 1.0));
}

StateSpace realize(double gain, const SRoots& zeros, const SRoots& poles) {
    const auto zc = chunks(zeros);
    const auto pc = chunks(poles);
    StateSpace w = StateSpace::gain(gain);
    for (std::size_t i = 0; i < pc.size(); ++i) w = series(w, section(zc[i], pc[i]));
    return w;
}

SRoots scaled(SRoots r, double wc) {
    for (double& v : r.real) v *= wc;
    for (Complex& v : r.upper) v *= wc;
    return r;
}

}  // namespace

MagnitudeData::MagnitudeData(FrequencyGrid g, std::vector<double> m) : grid(std::move(g)), mags(std::move(m)) {
    if (mags.size() != grid.size()) throw Error(ErrorKind::GridMismatch, "magnitude count differs from grid");
    if (mags.empty()) throw Error(ErrorKind::InvalidArgument, "magnitude data is empty");
    for (std::size_t i = 0; i < mags.size(); ++i) {
        if (!(mags[i] > 0.0) || !std::isfinite(mags[i])) {
            throw Error(ErrorKind::InvalidArgument, "magnitudes must be positive and finite", static_cast<int>(i));
        }
    }
}

std::vector<double> magnitude(const StateSpace& siso, const FrequencyGrid& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double w : grid.omegas()) out.push_back(std::abs(evaluate(siso, Complex(0.0, w))(0, 0)));
    return out;
}

double log_fit_error(const StateSpace& siso, const MagnitudeData& data) {
    const auto mag = magnitude(siso, data.grid);
    double e = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) e = std::max(e, std::abs(std::log(mag[i] / data.mags[i])));
    return e;
}

CVector siso_poles(const StateSpace& siso) {
    if (siso.states() == 0) return CVector(0);
    return Eigen::EigenSolver<Matrix>(siso.A, false).eigenvalues();
}

CVector siso_zeros(const StateSpace& siso) {
    if (siso.inputs() != 1 || siso.outputs() != 1) throw Error(ErrorKind::DimensionMismatch, "expected a SISO system");
    if (siso.D(0, 0) == 0.0) throw Error(ErrorKind::InvalidArgument, "zeros are computed for biproper systems only");
    if (siso.states() == 0) return CVector(0);
    const Matrix az = siso.A - siso.B * siso.C / siso.D(0, 0);
    return Eigen::EigenSolver<Matrix>(az, false).eigenvalues();
}

StateSpace invert_siso(const StateSpace& w) {
    const double d = w.D(0, 0);
    if (d == 0.0) throw Error(ErrorKind::InvalidArgument, "cannot invert a strictly proper system");
    return StateSpace(w.A - w.B * w.C / d, w.B / d, -w.C / d, Matrix::Constant(1, 1, 1.0 / d));
}

FittedWeight fit_minphase_magnitude(const MagnitudeData& data, int order, FitMode mode, const FitOptions& opts) {
    if (order < 0) throw Error(ErrorKind::InvalidArgument, "fit order must be nonnegative");
    if (data.mags.size() != data.grid.size() || data.mags.empty()) {
        throw Error(ErrorKind::GridMismatch, "magnitude data does not match its grid");
    }
    const auto& om = data.grid.omegas();
    const double lmin = std::log(*std::min_element(data.mags.begin(), data.mags.end()));
    const double lmax = std::log(*std::max_element(data.mags.begin(), data.mags.end()));

    FittedWeight out;
    out.order = order;
    if (order == 0 || lmax - lmin < 1e-12) {
        const double top = *std::max_element(data.mags.begin(), data.mags.end());
        const double c = mode == FitMode::Overbound ? top : std::exp(0.5 * (lmin + lmax));
        out.tf = StateSpace::gain(c);
        out.fit_error = log_fit_error(out.tf, data);
        return out;
    }

    const double wc = std::sqrt(om.front() * om.back());
    FitProblem fp;
    fp.m = order;
    fp.mode = mode;
    for (std::size_t i = 0; i < om.size(); ++i) {
        fp.x.push_back((om[i] / wc) * (om[i] / wc));
        fp.d2.push_back(data.mags[i] * data.mags[i]);
    }
    fp.d2_min = std::exp(2.0 * lmin);
    fp.d2_max = std::exp(2.0 * lmax);
    // Positivity grid: the origin plus a log grid one decade past each end.
    const double llo = std::log10(fp.x.front()) - 2.0;
    const double lhi = std::log10(fp.x.back()) + 2.0;
    const int nr = std::max(2, opts.refine * static_cast<int>(om.size()) + 12);
    fp.xr.push_back(0.0);
    for (int k = 0; k < nr; ++k) fp.xr.push_back(std::pow(10.0, llo + (lhi - llo) * k / (nr - 1)));

    sdp::SolverOptions so;
    double hi = mode == FitMode::Overbound ? (lmax - lmin) : 0.5 * (lmax - lmin);
    hi = hi * (1.0 + 1e-6) + 1e-9;
    double lo = 0.0;
    bool infeasible = false;
    std::optional<Rational> best = feasible_at(fp, hi, so, infeasible);
    if (!best) {
        if (mode == FitMode::Overbound && infeasible) {
            throw Error(ErrorKind::InfeasibleOverbound, "no overbound of order " + std::to_string(order) +
                                                            " exists on the positivity grid; raise the order");
        }
        throw Error(ErrorKind::SolverFailure, "magnitude fit LP failed at the order-0 level");
    }
    while (hi - lo > opts.level_tol) {
        const double mid = 0.5 * (lo + hi);
        if (auto r = feasible_at(fp, mid, so, infeasible)) {
            best = std::move(r);
            hi = mid;
        } else {
            lo = mid;
        }
    }

    const double x_max = fp.xr.back();
    auto xz = to_list(poly_roots(trim(best->num, x_max)));
    auto xp = to_list(poly_roots(trim(best->den, x_max)));
    cancel_common(xz, xp);
    SRoots zeros = scaled(spectral_roots(to_cvector(xz)), wc);
    SRoots poles = scaled(spectral_roots(to_cvector(xp)), wc);
    // A relative degree other than zero is closed with roots far above the
    // grid, which keeps both W and 1/W proper.
    const double far = 1e3 * om.back();
    while (zeros.degree() < poles.degree()) zeros.real.push_back(-far);
    while (poles.degree() < zeros.degree()) poles.real.push_back(-far);

    // The gain is chosen against the realized shape: the midpoint of the log
    // errors, or the smallest constant that overbounds.
    const StateSpace unit = realize(1.0, zeros, poles);
    const auto mag = magnitude(unit, data.grid);
    double emin = INFINITY, emax = -INFINITY;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        const double e = std::log(mag[i] / data.mags[i]);
        emin = std::min(emin, e);
        emax = std::max(emax, e);
    }
    if (!std::isfinite(emin) || !std::isfinite(emax)) {
        throw Error(ErrorKind::NumericalRooting, "fitted shape is not finite on the grid");
    }
    const double k = mode == FitMode::Overbound ? std::exp(-emin) : std::exp(-0.5 * (emin + emax));
    out.tf = realize(k, zeros, poles);
    out.fit_error = log_fit_error(out.tf, data);
    if (mode == FitMode::Overbound) {
        // Rounding in the realization must not cost the overbound.
        const auto fitted = magnitude(out.tf, data.grid);
        double worst = INFINITY;
        for (std::size_t i = 0; i < fitted.size(); ++i) worst = std::min(worst, fitted[i] / data.mags[i]);
        if (worst < 1.0) {
            out.tf.D /= worst;
            out.tf.C /= worst;
            out.fit_error = log_fit_error(out.tf, data);
        }
    }
    for (const Complex& z : siso_poles(out.tf)) {
        if (!(z.real() < 0.0)) throw Error(ErrorKind::NumericalRooting, "fitted pole outside the open left half-plane");
    }
    for (const Complex& z : siso_zeros(out.tf)) {
        if (!(z.real() < 0.0)) throw Error(ErrorKind::NumericalRooting, "fitted zero outside the open left half-plane");
    }
    return out;
}

std::vector<DScaleEntry> dscale_entries(const BlockStructure& s) {
    std::vector<DScaleEntry> out;
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
        const auto& blk = s.blocks[b];
        if (blk.kind == BlockKind::FullComplex) {
            out.push_back({"d" + std::to_string(b + 1), static_cast<int>(b), 0});
        } else {
            for (int k = 0; k < blk.dim; ++k) {
                out.push_back({"d" + std::to_string(b + 1) + "_" + std::to_string(k + 1), static_cast<int>(b), k});
            }
        }
    }
    return out;
}

namespace {

std::vector<int> block_offsets(const BlockStructure& s) {
    std::vector<int> off;
    int o = 0;
    for (const auto& b : s.blocks) {
        off.push_back(o);
        o += b.dim;
    }
    return off;
}

CMatrix hermitian_sqrt(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
    const Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

std::optional<std::size_t> normalized_entry(const BlockStructure& s) {
    const auto entries = dscale_entries(s);
    for (std::size_t e = entries.size(); e-- > 0;) {
        if (s.blocks[static_cast<std::size_t>(entries[e].block)].kind == BlockKind::FullComplex) return e;
    }
    return std::nullopt;
}

std::vector<MagnitudeData> dscale_magnitudes(const DScaleResponse& d, const BlockStructure& s) {
    if (d.scales.size() != d.grid.size()) throw Error(ErrorKind::GridMismatch, "scale count differs from grid");
    const auto entries = dscale_entries(s);
    const auto off = block_offsets(s);
    std::vector<std::vector<double>> mags(entries.size());
    for (std::size_t f = 0; f < d.scales.size(); ++f) {
        const CMatrix& df = d.scales[f];
        if (df.rows() != s.total_dim() || df.cols() != s.total_dim()) {
            throw Error(ErrorKind::DimensionMismatch, "D-scale size differs from the structure", static_cast<int>(f));
        }
        for (std::size_t b = 0; b < s.blocks.size(); ++b) {
            const auto& blk = s.blocks[b];
            const int o = off[b];
            if (blk.kind == BlockKind::FullComplex) continue;
            const CMatrix root = hermitian_sqrt(df.block(o, o, blk.dim, blk.dim));
            for (std::size_t e = 0; e < entries.size(); ++e) {
                if (entries[e].block == static_cast<int>(b)) {
                    mags[e].push_back(std::max(root(entries[e].offset, entries[e].offset).real(), 1e-300));
                }
            }
        }
        for (std::size_t e = 0; e < entries.size(); ++e) {
            const auto& blk = s.blocks[static_cast<std::size_t>(entries[e].block)];
            if (blk.kind != BlockKind::FullComplex) continue;
            const int o = off[static_cast<std::size_t>(entries[e].block)];
            mags[e].push_back(std::sqrt(std::max(df(o, o).real(), 1e-300)));
        }
    }
    std::vector<MagnitudeData> out;
    for (auto& m : mags) out.emplace_back(d.grid, std::move(m));
    return out;
}

DScaleSystem assemble_dscale(const BlockStructure& s, std::vector<FittedWeight> entries) {
    const auto names = dscale_entries(s);
    if (entries.size() != names.size()) {
        throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(names.size()) + " D-scale entries");
    }
    DScaleSystem out;
    out.structure = s;
    std::optional<StateSpace> left, right;
    auto push = [](std::optional<StateSpace>& acc, const StateSpace& w) { acc = acc ? append(*acc, w) : w; };
    for (std::size_t e = 0; e < names.size(); ++e) {
        const auto& blk = s.blocks[static_cast<std::size_t>(names[e].block)];
        const StateSpace& w = entries[e].tf;
        const StateSpace winv = invert_siso(w);
        if (blk.kind == BlockKind::FullComplex) {
            for (int k = 0; k < blk.z_dim; ++k) push(left, w);
            for (int k = 0; k < blk.w_dim; ++k) push(right, winv);
        } else {
            push(left, w);
            push(right, winv);
        }
    }
    out.system = *left;
    out.inverse = *right;
    out.entries = std::move(entries);
    return out;
}

DScaleSystem DScaleSystem::identity(const BlockStructure& s) {
    std::vector<FittedWeight> unit(dscale_entries(s).size(), FittedWeight{StateSpace::gain(1.0), 0, 0.0});
    return assemble_dscale(s, std::move(unit));
}

DScaleSystem fit_dscale(const DScaleResponse& d, const BlockStructure& s, const std::vector<int>& orders,
                        const FitOptions& opts) {
    const auto entries = dscale_entries(s);
    const auto fixed = normalized_entry(s);
    const std::size_t free_count = entries.size() - (fixed ? 1 : 0);
    if (orders.size() != free_count && orders.size() != entries.size()) {
        throw Error(ErrorKind::InvalidArgument, "expected " + std::to_string(free_count) + " fit orders, got " +
                                                    std::to_string(orders.size()));
    }
    const auto data = dscale_magnitudes(d, s);
    std::vector<FittedWeight> fits;
    std::size_t next = 0;
    for (std::size_t e = 0; e < entries.size(); ++e) {
        if (fixed && e == *fixed) {
            fits.push_back(FittedWeight{StateSpace::gain(1.0), 0, 0.0});
            if (orders.size() == entries.size()) ++next;
            continue;
        }
        fits.push_back(fit_minphase_magnitude(data[e], orders[next++], FitMode::Approximate, opts));
    }
    DScaleSystem out = assemble_dscale(s, std::move(fits));

    const auto off = block_offsets(s);
    for (const CMatrix& df : d.scales) {
        for (std::size_t b = 0; b < s.blocks.size(); ++b) {
            const auto& blk = s.blocks[b];
            if (blk.kind != BlockKind::RepeatedScalar || blk.dim < 2) continue;
            const CMatrix root = hermitian_sqrt(df.block(off[b], off[b], blk.dim, blk.dim));
            CMatrix offd = root;
            offd.diagonal().setZero();
            out.discarded_offdiagonal = std::max(out.discarded_offdiagonal, offd.norm() / root.norm());
        }
    }
    return out;
}

}  // namespace robust
