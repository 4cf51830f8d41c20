// Command-line front end: norm, mu, dkiter, ucover, hinfsyn, serve.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "robust/io.hpp"
#include "robust/session.hpp"

using namespace robust;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kComputation = 1;
constexpr int kUsage = 2;

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::GridMismatch:
        case ErrorKind::UnstableSystem:
        case ErrorKind::NotStabilizable:
        case ErrorKind::NotDetectable:
        case ErrorKind::SingularAtFrequency:
        case ErrorKind::RankDeficient:
        case ErrorKind::NotHermitian:
            return kUsage;
        default:
            return kComputation;
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::InvalidArgument, dir + ": cannot create directory");
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw Error(ErrorKind::InvalidArgument, p.string() + ": cannot write file");
    return f;
}

// Frequency response from an FRD CSV, or a state-space JSON sampled on `grid`.
FrequencyResponseData load_model(const std::string& path, const std::optional<FrequencyGrid>& grid) {
    if (fs::path(path).extension() == ".json") {
        if (!grid) throw Error(ErrorKind::InvalidArgument, path + ": state-space models need --grid");
        return freq_response(io::state_space_from_json(io::read_json_file(path)), *grid);
    }
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::InvalidArgument, path + ": cannot open file");
    const auto d = io::read_frd_csv(f);
    if (grid && !(d.grid == *grid)) throw Error(ErrorKind::GridMismatch, path + ": grid differs from --grid");
    return d;
}

// Terminal prompts speaking the decision protocol: each iteration message is
// one JSON line on stdout; the answer is one line on stdin, either a JSON
// decision or the shorthand "<order>", "accept", "stop".
class TerminalChannel : public DecisionChannel {
  public:
    std::optional<Decision> decide(const IterationMessage& msg) override {
        std::cout << io::to_json(msg).dump() << std::endl;
        std::cerr << "iteration " << msg.index << ": peak mu " << msg.peak << ", gamma " << msg.gamma << "\n";
        for (const auto& c : msg.candidates) std::cerr << "  order " << c.order << ": fit error " << c.fit_error << "\n";
        for (;;) {
            std::cerr << "choose an order, 'accept' or 'stop': " << std::flush;
            std::string line;
            if (!std::getline(std::cin, line)) return std::nullopt;
            line.erase(0, line.find_first_not_of(" \t"));
            line.erase(line.find_last_not_of(" \t\r") + 1);
            if (line.empty()) continue;
            try {
                if (line == "accept") return Decision::accept();
                if (line == "stop") return Decision::stop();
                if (line.front() == '{') return io::decision_from_json(io::parse_json(line, "decision"));
                std::size_t used = 0;
                const int o = std::stoi(line, &used);
                if (used == line.size() && o >= 0) return Decision::choose(o);
            } catch (const std::exception& e) {
                std::cerr << e.what() << "\n";
                continue;
            }
            std::cerr << "unrecognized answer\n";
        }
    }
};

struct Common {
    std::string grid = "0.01:100:60:log";
    double solver_tol = 0.0;

    void add(CLI::App* app, bool with_grid = true) {
        if (with_grid) app->add_option("--grid", grid, "frequency grid lo:hi:n:log|lin")->capture_default_str();
        app->add_option("--solver-tol", solver_tol, "SDP feasibility and gap tolerance");
    }
    void apply(HinfOptions& h) const {
        if (solver_tol > 0.0) {
            h.solver.feas_tol = solver_tol;
            h.solver.gap_tol = solver_tol;
        }
    }
};

int cmd_norm(const std::string& file, double tol) {
    const auto sys = io::state_space_from_json(io::read_json_file(file));
    if (!is_stable(sys)) {
        std::cerr << "unstable system\n";
        return kUsage;
    }
    std::cout << std::setprecision(7) << hinf_norm(sys, tol) << "\n";
    return kOk;
}

int cmd_mu(const std::string& system, const std::string& structure, const Common& c, const std::string& out) {
    const auto sys = io::state_space_from_json(io::read_json_file(system));
    const auto s = io::structure_from_json(io::read_json_file(structure));
    const auto r = ssv_upper(freq_response(sys, io::parse_grid(c.grid)), s);
    auto f = open_out(out);
    io::write_ssv_csv(f, r);
    std::cout << std::setprecision(6) << "peak mu_upper: " << r.peak << " at omega = " << r.peak_omega << "\n"
              << "robust: " << (r.peak < 1.0 ? "yes" : "no") << "\n";
    return kOk;
}

int cmd_dkiter(const std::string& spec_file, const std::string& strategy, bool interactive, int max_order,
               const Common& c, const std::string& out_dir) {
    const auto spec = io::spec_from_json(io::read_json_file(spec_file));
    const auto grid = io::parse_grid(c.grid);
    const OrderStrategy strat = interactive ? OrderStrategy(InteractiveOrder{std::make_shared<TerminalChannel>(), max_order})
                                            : io::parse_strategy(strategy);
    DkOptions opts;
    c.apply(opts.hinf);
    opts.on_phase = [](DkPhase p, int k) { std::cerr << "[" << k << "] " << io::to_string(p) << "\n"; };
    const auto r = dk_iterate(spec, grid, strat, opts);

    ensure_dir(out_dir);
    io::write_json_file((fs::path(out_dir) / "controller.json").string(), io::to_json(r.controller));
    for (const auto& rec : r.records) {
        auto f = open_out(fs::path(out_dir) / ("mu_iter" + std::to_string(rec.index) + ".csv"));
        io::write_ssv_csv(f, rec.ssv);
    }
    io::Json report = io::to_json(r);
    report.erase("controller");
    io::write_json_file((fs::path(out_dir) / "report.json").string(), report);

    std::cout << "iter  d_orders  gamma       peak_mu     best_so_far\n";
    double best = INFINITY;
    for (const auto& rec : r.records) {
        best = std::min(best, rec.peak);
        std::string orders = "-";
        if (!rec.d_orders.empty()) {
            orders.clear();
            for (std::size_t i = 0; i < rec.d_orders.size(); ++i) orders += (i ? "," : "") + std::to_string(rec.d_orders[i]);
        }
        std::cout << std::setw(4) << rec.index << "  " << std::setw(8) << orders << "  " << std::setw(10)
                  << std::setprecision(6) << rec.gamma << "  " << std::setw(10) << rec.peak << "  " << std::setw(10)
                  << best << "\n";
    }
    std::cout << "stop reason: " << to_string(r.reason) << "\n"
              << "best iteration: " << r.records[r.best_index].index << ", peak mu " << r.peak << "\n"
              << "robust performance: " << (r.converged ? "yes" : "no") << "\n";
    return kOk;
}

int cmd_ucover(const std::string& nominal, const std::vector<std::string>& offnominal, const std::string& form_text,
               const std::string& structure_text, int order, const std::string& grid_text, const std::string& out_dir) {
    const ResidualForm form = io::parse_form(form_text);
    const WeightStructure ws = io::parse_weight_structure(structure_text);
    if (order < 0) throw Error(ErrorKind::InvalidArgument, "--order must be nonnegative");
    std::optional<FrequencyGrid> grid;
    if (!grid_text.empty()) grid = io::parse_grid(grid_text);
    const auto g0 = load_model(nominal, grid);
    std::vector<FrequencyResponseData> gk;
    for (const auto& p : offnominal) gk.push_back(load_model(p, g0.grid));

    ensure_dir(out_dir);
    // Residual peaks for every form, so the forms can be compared.
    std::vector<FrequencyResponseData> chosen;
    for (auto f : {ResidualForm::Additive, ResidualForm::MultiplicativeInput, ResidualForm::InverseMultiplicativeInput}) {
        std::vector<FrequencyResponseData> e;
        try {
            e = residual_response(g0, gk, f);
        } catch (const Error& err) {
            if (f == form) throw;
            std::cerr << to_string(f) << ": skipped (" << err.what() << ")\n";
            continue;
        }
        auto out = open_out(fs::path(out_dir) / ("residual_" + std::string(to_string(f)) + ".csv"));
        io::write_columns_csv(out, {"omega", "max_sv"}, {g0.grid.omegas(), residual_peak(e)});
        if (f == form) chosen = std::move(e);
    }

    const auto w = weight_response(chosen, ws);
    std::vector<std::string> header{"omega"};
    std::vector<std::vector<double>> cols{w.grid.omegas()};
    for (int i = 0; i < w.entries(); ++i) {
        header.push_back(w.entries() == 1 ? "w" : "w_" + std::to_string(i + 1));
        std::vector<double> col;
        for (const auto& row : w.mags) col.push_back(row[static_cast<std::size_t>(i)]);
        cols.push_back(std::move(col));
    }
    auto wf = open_out(fs::path(out_dir) / "weight_response.csv");
    io::write_columns_csv(wf, header, cols);

    std::vector<FittedWeight> fits;
    for (int i = 0; i < w.entries(); ++i) {
        fits.push_back(fit_uncertainty_weight(w, i, order));
        const std::string name = w.entries() == 1 ? "weight.json" : "weight_" + std::to_string(i + 1) + ".json";
        io::write_json_file((fs::path(out_dir) / name).string(), io::to_json(fits.back()));
    }
    const double cov = coverage(chosen, ws, fits);
    std::cout << std::setprecision(6) << "form: " << to_string(form) << "\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        std::cout << "weight " << i + 1 << ": order " << fits[i].order << ", fit error " << fits[i].fit_error << "\n";
    }
    std::cout << "coverage max sigma(W_L^-1 E W_R^-1): " << cov << "\n";
    return cov <= 1.0 + 1e-6 ? kOk : kComputation;
}

int cmd_hinfsyn(const std::string& plant_file, const std::string& method, const Common& c, const std::string& out) {
    const auto plant = io::plant_from_json(io::read_json_file(plant_file));
    SynthesisResult r;
    if (method == "direct") {
        HinfOptions h;
        c.apply(h);
        r = hinf_syn_lmi(plant, h);
    } else if (method == "bisect") {
        HinfBisectOptions b;
        c.apply(b.base);
        r = hinf_syn_lmi_bisect(plant, b);
    } else {
        throw Error(ErrorKind::InvalidArgument, "--method must be direct or bisect");
    }
    io::write_json_file(out, io::to_json(r.controller));
    std::cout << std::setprecision(8) << "gamma: " << r.gamma << "\n"
              << "closed-loop norm: " << r.diagnostics.closed_loop_norm << "\n"
              << "controller states: " << r.controller.states() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust control analysis and DK-iteration synthesis"};
    app.require_subcommand(1);

    std::string file, structure, out, spec, strategy = "fixed:order=4,iters=3", method = "direct", out_dir = "out";
    std::string nominal, form = "multiplicative_input", wstruct = "scalar_left", static_dir;
    std::vector<std::string> offnominal;
    double tol = 1e-9;
    int max_order = 4, order = 2, port = 0;
    bool interactive = false;
    Common common;
    std::string ucover_grid;

    auto* norm = app.add_subcommand("norm", "H-infinity norm of a stable state-space system");
    norm->add_option("file", file, "state-space JSON")->required();
    norm->add_option("--tol", tol, "relative accuracy")->capture_default_str();

    auto* mu = app.add_subcommand("mu", "structured singular value upper bound over a grid");
    mu->add_option("system", file, "closed-loop state-space JSON")->required();
    mu->add_option("structure", structure, "block-structure JSON")->required();
    mu->add_option("-o,--out", out, "output CSV (omega, mu_upper)")->default_str("mu_upper.csv");
    common.add(mu);

    auto* dk = app.add_subcommand("dkiter", "DK-iteration mu synthesis");
    dk->add_option("spec", spec, "robust performance spec JSON")->required();
    dk->add_option("--strategy", strategy, "fixed:order=N,iters=K | list:o1,o2,.. | auto:max_order=N,tol=e,iters=K")
        ->capture_default_str();
    dk->add_flag("--interactive", interactive, "prompt for the fit order after each iteration");
    dk->add_option("--max-order", max_order, "largest candidate order offered interactively")->capture_default_str();
    dk->add_option("--out-dir", out_dir, "directory for controller.json, mu_iter*.csv, report.json")
        ->capture_default_str();
    common.add(dk);

    auto* uc = app.add_subcommand("ucover", "multi-model uncertainty characterization");
    uc->add_option("--nominal", nominal, "nominal model (FRD CSV or state-space JSON)")->required();
    uc->add_option("--offnominal", offnominal, "off-nominal models")->required();
    uc->add_option("--form", form, "additive | multiplicative_input | inverse_multiplicative_input")
        ->capture_default_str();
    uc->add_option("--structure", wstruct, "scalar_left | diag_left | scalar_right | diag_right")->capture_default_str();
    uc->add_option("--order", order, "weight fit order")->capture_default_str();
    uc->add_option("--grid", ucover_grid, "grid for state-space models lo:hi:n:log|lin");
    uc->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    auto* hs = app.add_subcommand("hinfsyn", "H-infinity controller synthesis by LMIs");
    hs->add_option("plant", file, "generalized plant JSON")->required();
    hs->add_option("--method", method, "direct | bisect")->capture_default_str();
    hs->add_option("-o,--out", out, "controller JSON")->default_str("controller.json");
    common.add(hs, false);

    auto* sv = app.add_subcommand("serve", "local HTTP session service (port from ROBUST_PORT)");
    sv->add_option("--port", port, "override ROBUST_PORT");
    sv->add_option("--static", static_dir, "directory with the browser console assets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    if (out.empty()) out = mu->parsed() ? "mu_upper.csv" : "controller.json";

    try {
        if (norm->parsed()) return cmd_norm(file, tol);
        if (mu->parsed()) return cmd_mu(file, structure, common, out);
        if (dk->parsed()) return cmd_dkiter(spec, strategy, interactive, max_order, common, out_dir);
        if (uc->parsed()) return cmd_ucover(nominal, offnominal, form, wstruct, order, ucover_grid, out_dir);
        if (hs->parsed()) return cmd_hinfsyn(file, method, common, out);
        if (sv->parsed()) {
            SessionService service(static_dir);
            const int p = port > 0 ? port : service_port_from_env();
            std::cerr << "serving on http://127.0.0.1:" << p << "\n";
            service.listen(p);
            return kOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kComputation;
    }
    return kUsage;
}
