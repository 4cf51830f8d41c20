// Acceptance suite. Prints one PASS/FAIL line per criterion.
//   acceptance            run everything
//   acceptance <name>...  run the named criteria
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "robust/dfit.hpp"
#include "robust/dkiter.hpp"
#include "robust/hinf.hpp"
#include "robust/session.hpp"
#include "robust/ssv.hpp"
#include "robust/umodel.hpp"
#include "test_util.hpp"

#include <httplib.h>

using namespace robust;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failures; the first few are kept for the report line.
class Check {
  public:
    void require(bool ok, const std::string& what) {
        if (ok) return;
        ++failures_;
        if (failures_ <= 3) notes_ << (failures_ > 1 ? "; " : "") << what;
    }
    void note(const std::string& s) { info_ << (info_.tellp() > 0 ? ", " : "") << s; }
    Outcome outcome() const {
        Outcome o;
        o.pass = failures_ == 0;
        o.detail = info_.str();
        if (failures_ > 0) o.detail += (o.detail.empty() ? "" : " | ") + std::to_string(failures_) + " failed: " + notes_.str();
        return o;
    }

  private:
    int failures_ = 0;
    std::ostringstream notes_, info_;
};

std::string fmt(double v, int prec = 6) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Oracles below use Eigen directly and do not go through the library.

double sigma_max(const CMatrix& m) { return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0); }

double spectral_radius(const CMatrix& m) {
    return Eigen::ComplexEigenSolver<CMatrix>(m).eigenvalues().cwiseAbs().maxCoeff();
}

// Largest singular value of a 2x2 from |det| and the Frobenius norm.
double sigma_max_2x2(Complex a, Complex b, Complex c, Complex d) {
    const double f = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
    const double det = std::norm(a * d - b * c);
    return std::sqrt(0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * det))));
}

// inf over d > 0 of sigma_max(diag(d, 1) M diag(1/d, 1)), scanned on a log grid
// of 1e5 points spanning eight decades around sqrt(|m10| / |m01|).
double diagonal_scan(const CMatrix& m) {
    constexpr int kPoints = 100000;
    const double c = (std::abs(m(0, 1)) > 0 && std::abs(m(1, 0)) > 0)
                         ? std::sqrt(std::abs(m(1, 0)) / std::abs(m(0, 1)))
                         : 1.0;
    double best = sigma_max_2x2(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
    for (int i = 0; i < kPoints; ++i) {
        const double d = c * std::pow(10.0, -4.0 + 8.0 * i / (kPoints - 1));
        best = std::min(best, sigma_max_2x2(m(0, 0), d * m(0, 1), m(1, 0) / d, m(1, 1)));
    }
    return best;
}

bool open_lhp(const Eigen::VectorXcd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v(i).real() < 0.0)) return false;
    }
    return true;
}

// Poles and zeros of a biproper SISO system as eigenvalues of A and A - B C / D.
bool stable_minimum_phase(const StateSpace& w) {
    if (w.inputs() != 1 || w.outputs() != 1) return false;
    const double d = w.D(0, 0);
    if (!(std::abs(d) > 0.0)) return false;
    if (w.states() == 0) return true;
    const Eigen::VectorXcd poles = Eigen::EigenSolver<Matrix>(w.A, false).eigenvalues();
    const Eigen::VectorXcd zeros = Eigen::EigenSolver<Matrix>(w.A - w.B * w.C / d, false).eigenvalues();
    return open_lhp(poles) && open_lhp(zeros);
}

RobustPerformanceSpec dk_fixture() {
    return {testutil::dk_fixture_plant(), BlockStructure({UncertaintyBlock::full(1)}), 1, 1};
}

const FrequencyGrid& dk_grid() {
    static const FrequencyGrid g = FrequencyGrid::logspace(0.01, 100, 60);
    return g;
}

const DkResult& dk_fixture_run() {
    static const DkResult r = dk_iterate(dk_fixture(), dk_grid(), ListOrder{{2, 2, 2}});
    return r;
}

// ---------------------------------------------------------------------------

Outcome mu_collapse() {
    Check c;
    std::mt19937 rng(101);
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + k % 5;
        const CMatrix m = testutil::random_complex(rng, n, n);
        const double mu = ssv_upper_point(m, BlockStructure({UncertaintyBlock::full(n)})).mu;
        const double s = sigma_max(m);
        worst = std::max(worst, std::abs(mu - s) / s);
        c.require(std::abs(mu - s) <= 1e-3 * s, "matrix " + std::to_string(k) + " rel err " + fmt(std::abs(mu - s) / s));
    }
    const double t = seconds_since(t0);
    c.require(t < 30.0, "runtime " + fmt(t) + " s");
    c.note("worst rel err " + fmt(worst, 3));
    c.note(fmt(t, 3) + " s");
    return c.outcome();
}

Outcome mu_diagonal_scan() {
    Check c;
    const BlockStructure two({UncertaintyBlock::full(1), UncertaintyBlock::full(1)});
    std::mt19937 rng(202);
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < 19; ++k) {
        const CMatrix m = testutil::random_complex(rng, 2, 2);
        const double mu = ssv_upper_point(m, two).mu;
        const double oracle = diagonal_scan(m);
        worst = std::max(worst, std::abs(mu - oracle) / oracle);
        c.require(std::abs(mu - oracle) <= 1e-3 * oracle,
                  "matrix " + std::to_string(k) + " mu " + fmt(mu) + " scan " + fmt(oracle));
    }
    CMatrix fixed(2, 2);
    fixed << 1, 2, 3, 4;
    const double mu = ssv_upper_point(fixed, two).mu;
    const double oracle = diagonal_scan(fixed);
    c.require(std::abs(mu - oracle) <= 1e-3 * oracle, "[[1,2],[3,4]] mu " + fmt(mu) + " scan " + fmt(oracle));
    c.require(std::abs(mu - 5.0) <= 1e-3, "[[1,2],[3,4]] mu " + fmt(mu) + " vs stated 5.000 (scan " + fmt(oracle) + ")");
    const double t = seconds_since(t0);
    c.require(t < 60.0, "runtime " + fmt(t) + " s");
    c.note("worst rel err vs scan " + fmt(worst, 3));
    c.note("[[1,2],[3,4]] -> " + fmt(mu, 7));
    c.note(fmt(t, 3) + " s");
    return c.outcome();
}

Outcome mu_sandwich() {
    Check c;
    std::mt19937 rng(303);
    int cases = 0;
    for (int k = 0; k < 30; ++k) {
        const int n = 2 + k % 4;
        const CMatrix m = testutil::random_complex(rng, n, n);
        const double rho = spectral_radius(m);
        const double s = sigma_max(m);
        const double rep = ssv_upper_point(m, BlockStructure({UncertaintyBlock::repeated(n)})).mu;
        c.require(rep >= rho - 1e-3 && rep <= s + 1e-3,
                  "repeated n=" + std::to_string(n) + " mu " + fmt(rep) + " rho " + fmt(rho) + " smax " + fmt(s));
        ++cases;
        // Upper side on mixed structures.
        std::vector<BlockStructure> others = {
            BlockStructure(std::vector<UncertaintyBlock>(n, UncertaintyBlock::full(1))),
            BlockStructure({UncertaintyBlock::repeated(1), UncertaintyBlock::full(n - 1)}),
            BlockStructure({UncertaintyBlock::full(n - 1), UncertaintyBlock::repeated(1)}),
        };
        if (n >= 4) others.push_back(BlockStructure({UncertaintyBlock::repeated(2), UncertaintyBlock::full(n - 2)}));
        for (const auto& st : others) {
            const double mu = ssv_upper_point(m, st).mu;
            c.require(mu <= s + 1e-3, "mixed n=" + std::to_string(n) + " mu " + fmt(mu) + " > smax " + fmt(s));
            ++cases;
        }
    }
    c.note(std::to_string(cases) + " cases");
    return c.outcome();
}

Outcome hinf_analytics() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const double first = hinf_norm(transfer_function({1.0}, {1.0, 1.0}));
    const double zeta = 0.1;
    const double reso = hinf_norm(transfer_function({1.0}, {1.0, 2.0 * zeta, 1.0}));
    const double exact = 1.0 / (2.0 * zeta * std::sqrt(1.0 - zeta * zeta));
    const double t = seconds_since(t0);
    c.require(std::abs(first - 1.0) <= 1e-4, "1/(s+1) -> " + fmt(first, 10));
    c.require(std::abs(reso - 5.02519) <= 1e-4 * 5.02519, "resonance -> " + fmt(reso, 10));
    c.require(t < 1.0, "runtime " + fmt(t) + " s");
    c.note("1/(s+1) -> " + fmt(first, 8));
    c.note("zeta=0.1 -> " + fmt(reso, 8) + " (closed form " + fmt(exact, 8) + ")");
    c.note(fmt(t, 3) + " s");
    return c.outcome();
}

Outcome synthesis() {
    Check c;
    std::mt19937 rng(404);
    const auto t0 = std::chrono::steady_clock::now();
    int plants = 0;
    double worst_gap = 0.0;
    while (plants < 10) {
        const int n = 1 + plants % 4;
        const auto p = testutil::random_plant(rng, n, 2, 1, 2, 1);
        if (!is_stabilizable(p.ss.A, Matrix(p.B2())) || !is_detectable(p.ss.A, Matrix(p.C2()))) continue;
        ++plants;
        const std::string tag = "plant " + std::to_string(plants) + " (n=" + std::to_string(n) + ")";
        try {
            const auto direct = hinf_syn_lmi(p);
            const auto bisect = hinf_syn_lmi_bisect(p);
            for (const auto* r : {&direct, &bisect}) {
                const auto cl = lft_lower(p, r->controller);
                const bool stable = is_stable(cl);
                c.require(stable, tag + " closed loop unstable");
                if (stable) {
                    const double nrm = hinf_norm(cl);
                    c.require(nrm <= r->gamma * 1.001, tag + " norm " + fmt(nrm) + " > gamma " + fmt(r->gamma));
                }
            }
            const double gap = std::abs(direct.gamma - bisect.gamma) / bisect.gamma;
            worst_gap = std::max(worst_gap, gap);
            c.require(gap <= 0.02, tag + " direct " + fmt(direct.gamma) + " bisect " + fmt(bisect.gamma));
        } catch (const std::exception& e) {
            c.require(false, tag + ": " + e.what());
        }
    }
    const double t = seconds_since(t0);
    c.require(t < 120.0, "runtime " + fmt(t) + " s");
    c.note("worst direct/bisect gap " + fmt(100 * worst_gap, 3) + "%");
    c.note(fmt(t, 3) + " s");
    return c.outcome();
}

Outcome dk_end_to_end() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const auto& r = dk_fixture_run();
    const double t = seconds_since(t0);
    c.require(r.records.size() == 3, std::to_string(r.records.size()) + " records");
    if (r.records.size() != 3) return c.outcome();
    c.require(r.peak <= r.records[0].peak, "best " + fmt(r.peak) + " > first " + fmt(r.records[0].peak));
    const auto& best = r.records[r.best_index];
    c.require(best.peak == r.peak, "best record does not carry the reported peak");
    const auto clp = freq_response(lft_lower(dk_fixture().plant, best.controller), dk_grid());
    double worst = 0.0;
    for (std::size_t i = 0; i < dk_grid().size(); ++i) {
        const CMatrix& d = best.ssv.d_scales.scales[i];
        // D^{1/2} from the Hermitian eigendecomposition of the positive scale.
        Eigen::SelfAdjointEigenSolver<CMatrix> es(d);
        const Eigen::VectorXd ev = es.eigenvalues();
        const CMatrix half = es.eigenvectors() * ev.cwiseSqrt().cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
        const CMatrix inv_half =
            es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
        const double g = sigma_max(half * clp.values[i] * inv_half);
        worst = std::max(worst, g / r.peak);
        c.require(g <= r.peak * 1.001, "omega " + fmt(dk_grid()[i]) + " scaled gain " + fmt(g));
    }
    c.require(t < 300.0, "runtime " + fmt(t) + " s");
    std::ostringstream peaks;
    for (std::size_t k = 0; k < r.records.size(); ++k) peaks << (k ? "/" : "") << fmt(r.records[k].peak, 6);
    c.note("peaks " + peaks.str());
    c.note("best " + fmt(r.peak, 6) + " at iteration " + std::to_string(best.index));
    c.note("max scaled gain/peak " + fmt(worst, 7));
    c.note(fmt(t, 3) + " s");
    return c.outcome();
}

Outcome dk_reduction() {
    Check c;
    RobustPerformanceSpec spec;
    spec.plant = testutil::mixed_sensitivity_plant();
    spec.perf_w = spec.plant.n_w;
    spec.perf_z = spec.plant.n_z;
    const auto r = dk_iterate(spec, FrequencyGrid::logspace(0.001, 1000, 200), FixedOrder{2, 1});
    c.require(r.records.size() == 1, std::to_string(r.records.size()) + " records");
    if (r.records.empty()) return c.outcome();
    const double g = r.records[0].gamma;
    const double rel = std::abs(r.peak - g) / g;
    c.require(rel <= 5e-3, "peak " + fmt(r.peak) + " gamma " + fmt(g));
    c.note("peak " + fmt(r.peak, 7) + " gamma " + fmt(g, 7) + " rel " + fmt(rel, 3));
    return c.outcome();
}

Outcome uncertainty_pipeline() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();

    // Planted multiplicative residual.
    std::mt19937 rng(505);
    const FrequencyGrid pg = FrequencyGrid::logspace(0.1, 10, 9);
    std::vector<CMatrix> g0v, gkv, e0v;
    for (std::size_t i = 0; i < pg.size(); ++i) {
        g0v.push_back(testutil::random_complex(rng, 3, 3));
        e0v.push_back(0.3 * testutil::random_complex(rng, 3, 3));
        gkv.push_back(g0v.back() * (CMatrix::Identity(3, 3) + e0v.back()));
    }
    const auto planted = residual_response(FrequencyResponseData(pg, g0v), {FrequencyResponseData(pg, gkv)},
                                           ResidualForm::MultiplicativeInput);
    double planted_err = 0.0;
    for (std::size_t i = 0; i < pg.size(); ++i) planted_err = std::max(planted_err, (planted[0].values[i] - e0v[i]).norm());
    c.require(planted_err <= 1e-10, "planted E0 error " + fmt(planted_err));

    // Actuator workflow.
    const FrequencyGrid g = FrequencyGrid::logspace(0.01, 1000, 100);
    const auto g0 = freq_response(testutil::actuator_nominal(), g);
    const auto gk = testutil::actuator_offnominals(g);
    c.require(gk.size() == 40, "model count " + std::to_string(gk.size()));
    const auto e = residual_response(g0, gk, ResidualForm::MultiplicativeInput);

    std::vector<double> peak(g.size(), 0.0);
    for (const auto& ek : e) {
        for (std::size_t i = 0; i < g.size(); ++i) peak[i] = std::max(peak[i], sigma_max(ek.values[i]));
    }
    const WeightStructure scalar{WeightSide::ScalarIdentity, WeightSide::Identity};
    const auto w = weight_response(e, scalar);
    double scalar_err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) scalar_err = std::max(scalar_err, std::abs(w.mags[i][0] - peak[i]));
    c.require(scalar_err <= 1e-6, "scalar weight vs max sigma " + fmt(scalar_err));

    const auto fit = fit_uncertainty_weight(w, 0, 2);
    double worst_cov = 0.0;
    int covered = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double wm = std::abs(evaluate(fit.tf, Complex(0.0, g[i]))(0, 0));
        if (wm >= w.mags[i][0]) ++covered;
        for (const auto& ek : e) worst_cov = std::max(worst_cov, sigma_max(ek.values[i]) / wm);
    }
    c.require(covered == static_cast<int>(g.size()),
              "overbound at " + std::to_string(covered) + "/" + std::to_string(g.size()) + " points");
    c.require(worst_cov <= 1.0 + 1e-6, "max sigma(W^-1 E) " + fmt(worst_cov, 10));

    // Diagonal left weight: sigma(diag(w)^-1 E) on the same models.
    const WeightStructure diag{WeightSide::Diagonal, WeightSide::Identity};
    const auto wd = weight_response(e, diag);
    std::vector<FittedWeight> dfits;
    for (int j = 0; j < wd.entries(); ++j) dfits.push_back(fit_uncertainty_weight(wd, j, 2));
    double worst_diag = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        CMatrix winv = CMatrix::Zero(2, 2);
        for (int j = 0; j < 2; ++j) winv(j, j) = 1.0 / evaluate(dfits[j].tf, Complex(0.0, g[i]))(0, 0);
        for (const auto& ek : e) worst_diag = std::max(worst_diag, sigma_max(winv * ek.values[i]));
    }
    c.require(worst_diag <= 1.0 + 1e-6, "diagonal max sigma(W^-1 E) " + fmt(worst_diag, 10));

    const double t = seconds_since(t0);
    c.require(t < 120.0, "runtime " + fmt(t) + " s");
    c.note("planted err " + fmt(planted_err, 3));
    c.note("scalar err " + fmt(scalar_err, 3));
    c.note("coverage scalar " + fmt(worst_cov, 8) + " diag " + fmt(worst_diag, 8));
    c.note(fmt(t, 3) + " s");
    return c.outcome();
}

Outcome dfit_contract() {
    Check c;
    int checked = 0;
    auto verify = [&](const FittedWeight& w, const std::string& tag) {
        ++checked;
        c.require(stable_minimum_phase(w.tf), tag + " has a pole or zero off the open LHP");
    };

    // D-scale candidates at every order on each DK iteration of the fixture.
    const auto& r = dk_fixture_run();
    const auto structure = augment_for_performance(dk_fixture());
    for (const auto& rec : r.records) {
        for (int order = 0; order <= 4; ++order) {
            const std::vector<int> orders(free_dscale_entries(structure).size(), order);
            const auto d = fit_dscale(rec.ssv.d_scales, structure, orders);
            for (std::size_t e = 0; e < d.entries.size(); ++e) {
                verify(d.entries[e], "D iteration " + std::to_string(rec.index) + " order " + std::to_string(order) +
                                         " entry " + std::to_string(e));
            }
        }
    }

    // A three-block structure with a repeated scalar, from a random stable system.
    std::mt19937 rng(606);
    const FrequencyGrid g = FrequencyGrid::logspace(0.01, 100, 50);
    const BlockStructure mixed({UncertaintyBlock::full(1), UncertaintyBlock::repeated(2), UncertaintyBlock::full(2)});
    const auto ssv = ssv_upper(freq_response(testutil::random_stable(rng, 4, 5, 5), g), mixed);
    for (int order = 0; order <= 4; ++order) {
        const std::vector<int> orders(free_dscale_entries(mixed).size(), order);
        const auto d = fit_dscale(ssv.d_scales, mixed, orders);
        for (std::size_t e = 0; e < d.entries.size(); ++e) {
            verify(d.entries[e], "mixed order " + std::to_string(order) + " entry " + std::to_string(e));
        }
    }

    // Uncertainty weights, scalar and diagonal, both sides.
    const FrequencyGrid wg = FrequencyGrid::logspace(0.01, 1000, 60);
    const auto e = residual_response(freq_response(testutil::actuator_nominal(), wg),
                                     testutil::actuator_offnominals(wg), ResidualForm::MultiplicativeInput);
    for (const auto& st : {WeightStructure{WeightSide::ScalarIdentity, WeightSide::Identity},
                           WeightStructure{WeightSide::Diagonal, WeightSide::Identity},
                           WeightStructure{WeightSide::Identity, WeightSide::Diagonal}}) {
        const auto w = weight_response(e, st);
        for (int j = 0; j < w.entries(); ++j) {
            for (int order = 0; order <= 4; ++order) {
                verify(fit_uncertainty_weight(w, j, order),
                       "weight entry " + std::to_string(j) + " order " + std::to_string(order));
            }
        }
    }
    c.note(std::to_string(checked) + " fits rooted");
    return c.outcome();
}

Outcome service_replay() {
    Check c;
    const auto& listed = dk_fixture_run();
    SessionService service;
    const int port = service.start(0);
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(300, 0);

    auto state = [&](const std::string& id) -> io::Json {
        for (int i = 0; i < 30000; ++i) {
            const auto res = client.Get("/sessions/" + id);
            if (!res || res->status != 200) return {};
            const auto s = io::Json::parse(res->body);
            const std::string ph = s["phase"];
            if (ph == "awaiting_choice" || ph == "done" || ph == "failed") return s;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        return {};
    };

    const io::Json req{{"spec", io::to_json(dk_fixture())}, {"grid", "0.01:100:60:log"}, {"max_order", 4}};
    const auto created = client.Post("/sessions", req.dump(), "application/json");
    c.require(created && created->status == 201, "create failed");
    if (!created || created->status != 201) return service.stop(), c.outcome();
    const std::string id = io::Json::parse(created->body)["id"];

    for (const char* d : {R"({"type":"choose","order":2})", R"({"type":"choose","order":2})", R"({"type":"accept"})"}) {
        const auto s = state(id);
        c.require(!s.is_null() && s["phase"] == "awaiting_choice", "session not awaiting a choice");
        const auto res = client.Post("/sessions/" + id + "/choice", d, "application/json");
        c.require(res && res->status == 200, std::string("choice rejected: ") + d);
    }
    const auto fin = state(id);
    c.require(!fin.is_null() && fin["phase"] == "done", "session did not finish");
    const auto res = client.Get("/sessions/" + id + "/result");
    c.require(res && res->status == 200, "no result");
    if (res && res->status == 200) {
        const auto j = io::Json::parse(res->body);
        c.require(j["records"].size() == listed.records.size(), "record count mismatch");
        double worst = 0.0;
        for (std::size_t k = 0; k < std::min(j["records"].size(), listed.records.size()); ++k) {
            worst = std::max(worst, std::abs(j["records"][k]["peak"].get<double>() - listed.records[k].peak));
        }
        c.require(worst <= 1e-9, "peak difference " + fmt(worst));
        c.note("max peak difference " + fmt(worst, 3));
    }
    service.stop();
    return c.outcome();
}

struct Criterion {
    const char* name;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"mu_collapse", mu_collapse},
    {"mu_diagonal_scan", mu_diagonal_scan},
    {"mu_sandwich", mu_sandwich},
    {"hinf_norm_analytics", hinf_analytics},
    {"synthesis_achievability", synthesis},
    {"dk_end_to_end", dk_end_to_end},
    {"dk_reduction", dk_reduction},
    {"uncertainty_pipeline", uncertainty_pipeline},
    {"dfit_contract", dfit_contract},
    {"service_replay", service_replay},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> wanted(argv + 1, argv + argc);
    int failed = 0, ran = 0;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion matched\n");
        return 2;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
