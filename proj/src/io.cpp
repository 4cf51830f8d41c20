#include "robust/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <istream>
#include <ostream>
#include <sstream>

namespace robust::io {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); }

const Json& field(const Json& j, const char* name, const std::string& where) {
    if (!j.is_object()) bad(where + ": expected a JSON object");
    const auto it = j.find(name);
    if (it == j.end()) bad(where + ": missing field \"" + name + "\"");
    return *it;
}

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) bad(where + ": expected a number");
    return j.get<double>();
}

int integer(const Json& j, const std::string& where) {
    if (!j.is_number_integer()) bad(where + ": expected an integer");
    return j.get<int>();
}

// Rows of numbers. A bare number is a 1x1 matrix; [] is empty with `cols`
// columns (or 0 when unknown).
Matrix matrix_from_json(const Json& j, const std::string& where, Eigen::Index empty_cols = 0) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array()) bad(where + ": expected an array of rows");
    if (j.empty()) return Matrix(0, empty_cols);
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j.front().is_array()) bad(where + ": expected an array of rows");
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            bad(where + ": row " + std::to_string(r) + " has the wrong length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = number(row[static_cast<std::size_t>(c)], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) bad(where + ": \"" + t + "\" is not a number");
    return v;
}

int parse_int(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) bad(where + ": \"" + t + "\" is not an integer");
    return v;
}

std::vector<std::vector<std::string>> read_csv_rows(std::istream& is, std::vector<std::string>& header) {
    std::string line;
    if (!std::getline(is, line)) bad("CSV: empty input");
    header = split(trim(line), ',');
    for (auto& h : header) h = trim(h);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split(trim(line), ','));
        if (rows.back().size() != header.size()) {
            bad("CSV line " + std::to_string(rows.size() + 1) + ": expected " + std::to_string(header.size()) +
                " fields, got " + std::to_string(rows.back().size()));
        }
    }
    return rows;
}

std::map<std::string, std::string> key_values(const std::string& text, const std::string& where) {
    std::map<std::string, std::string> out;
    if (trim(text).empty()) return out;
    for (const auto& part : split(text, ',')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) bad(where + ": expected key=value, got \"" + part + "\"");
        out[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
    }
    return out;
}

}  // namespace

Json to_json(const StateSpace& sys) {
    return Json{{"A", matrix_to_json(sys.A)},
                {"B", matrix_to_json(sys.B)},
                {"C", matrix_to_json(sys.C)},
                {"D", matrix_to_json(sys.D)}};
}

StateSpace state_space_from_json(const Json& j) {
    const Matrix D = matrix_from_json(field(j, "D", "state space"), "D");
    const Matrix A = matrix_from_json(field(j, "A", "state space"), "A");
    const Matrix B = matrix_from_json(field(j, "B", "state space"), "B", D.cols());
    Matrix C = matrix_from_json(field(j, "C", "state space"), "C", A.rows());
    if (C.rows() == 0 && A.rows() == 0) C = Matrix(D.rows(), 0);
    try {
        return StateSpace(A, B, C, D);
    } catch (const Error& e) {
        bad("state space: " + e.detail());
    }
}

Json to_json(const GeneralizedPlant& p) {
    Json j = to_json(p.ss);
    j["n_w"] = p.n_w;
    j["n_u"] = p.n_u;
    j["n_z"] = p.n_z;
    j["n_y"] = p.n_y;
    return j;
}

GeneralizedPlant plant_from_json(const Json& j) {
    const StateSpace ss = state_space_from_json(j);
    const int nw = integer(field(j, "n_w", "plant"), "n_w");
    const int nu = integer(field(j, "n_u", "plant"), "n_u");
    const int nz = integer(field(j, "n_z", "plant"), "n_z");
    const int ny = integer(field(j, "n_y", "plant"), "n_y");
    try {
        return GeneralizedPlant(ss, nw, nu, nz, ny);
    } catch (const Error& e) {
        bad("plant: " + e.detail());
    }
}

Json to_json(const BlockStructure& s) {
    Json out = Json::array();
    for (const auto& b : s.blocks) {
        Json e{{"kind", b.kind == BlockKind::RepeatedScalar ? "repeated_scalar" : "full"}, {"dim", b.dim}};
        if (b.kind == BlockKind::FullComplex && b.z_dim != b.w_dim) {
            e["z_dim"] = b.z_dim;
            e["w_dim"] = b.w_dim;
        }
        out.push_back(std::move(e));
    }
    return out;
}

BlockStructure structure_from_json(const Json& j) {
    if (!j.is_array()) bad("block structure: expected an array of blocks");
    std::vector<UncertaintyBlock> blocks;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = "block structure[" + std::to_string(i) + "]";
        const Json& kind = field(j[i], "kind", where);
        if (!kind.is_string()) bad(where + ".kind: expected a string");
        const int dim = integer(field(j[i], "dim", where), where + ".dim");
        if (dim < 1) bad(where + ".dim: must be positive");
        const std::string k = kind.get<std::string>();
        if (k == "repeated_scalar") {
            blocks.push_back(UncertaintyBlock::repeated(dim));
        } else if (k == "full") {
            if (j[i].contains("z_dim") || j[i].contains("w_dim")) {
                const int zd = integer(field(j[i], "z_dim", where), where + ".z_dim");
                const int wd = integer(field(j[i], "w_dim", where), where + ".w_dim");
                if (zd < 1 || wd < 1 || std::max(zd, wd) != dim) bad(where + ": z_dim/w_dim inconsistent with dim");
                blocks.push_back(UncertaintyBlock::full(zd, wd));
            } else {
                blocks.push_back(UncertaintyBlock::full(dim));
            }
        } else {
            bad(where + ".kind: \"" + k + "\" is not one of repeated_scalar, full");
        }
    }
    return BlockStructure(std::move(blocks));
}

Json to_json(const FittedWeight& w) {
    Json j = to_json(w.tf);
    j["order"] = w.order;
    j["fit_error"] = w.fit_error;
    return j;
}

FittedWeight fitted_weight_from_json(const Json& j) {
    FittedWeight w;
    w.tf = state_space_from_json(j);
    w.order = integer(field(j, "order", "fitted weight"), "order");
    w.fit_error = number(field(j, "fit_error", "fitted weight"), "fit_error");
    return w;
}

Json to_json(const RobustPerformanceSpec& spec) {
    return Json{{"plant", to_json(spec.plant)},
                {"uncertainty", to_json(spec.uncertainty)},
                {"perf_w", spec.perf_w},
                {"perf_z", spec.perf_z}};
}

RobustPerformanceSpec spec_from_json(const Json& j) {
    RobustPerformanceSpec s;
    s.plant = plant_from_json(field(j, "plant", "spec"));
    s.uncertainty = j.contains("uncertainty") ? structure_from_json(j["uncertainty"]) : BlockStructure();
    s.perf_w = integer(field(j, "perf_w", "spec"), "perf_w");
    s.perf_z = integer(field(j, "perf_z", "spec"), "perf_z");
    return s;
}

Json to_json(const IterationMessage& m) {
    Json entries = Json::array();
    for (const auto& e : m.d_entries) entries.push_back({{"name", e.name}, {"mag", e.mag}});
    Json cands = Json::array();
    for (const auto& c : m.candidates) cands.push_back({{"order", c.order}, {"fit_error", c.fit_error}});
    return Json{{"type", "iteration"},  {"index", m.index},       {"omega", m.omega},
                {"mu_upper", m.mu_upper}, {"peak", m.peak},         {"gamma", m.gamma},
                {"d_entries", entries},   {"candidates", cands}};
}

IterationMessage iteration_message_from_json(const Json& j) {
    const Json& type = field(j, "type", "message");
    if (type != "iteration") bad("message: type must be \"iteration\"");
    IterationMessage m;
    m.index = integer(field(j, "index", "message"), "index");
    m.omega = field(j, "omega", "message").get<std::vector<double>>();
    m.mu_upper = field(j, "mu_upper", "message").get<std::vector<double>>();
    m.peak = number(field(j, "peak", "message"), "peak");
    m.gamma = number(field(j, "gamma", "message"), "gamma");
    for (const auto& e : field(j, "d_entries", "message")) {
        m.d_entries.push_back({field(e, "name", "d_entries").get<std::string>(),
                               field(e, "mag", "d_entries").get<std::vector<double>>()});
    }
    for (const auto& c : field(j, "candidates", "message")) {
        m.candidates.push_back({integer(field(c, "order", "candidates"), "order"),
                                number(field(c, "fit_error", "candidates"), "fit_error")});
    }
    return m;
}

Json to_json(const Decision& d) {
    switch (d.kind) {
        case Decision::Kind::Choose: return Json{{"type", "choose"}, {"order", d.order}};
        case Decision::Kind::Accept: return Json{{"type", "accept"}};
        case Decision::Kind::Stop: return Json{{"type", "stop"}};
    }
    return Json{};
}

Decision decision_from_json(const Json& j) {
    const Json& type = field(j, "type", "decision");
    if (!type.is_string()) bad("decision.type: expected a string");
    const std::string t = type.get<std::string>();
    if (t == "choose") {
        const int o = integer(field(j, "order", "decision"), "decision.order");
        if (o < 0) bad("decision.order: must be nonnegative");
        return Decision::choose(o);
    }
    if (t == "accept") return Decision::accept();
    if (t == "stop") return Decision::stop();
    bad("decision.type: \"" + t + "\" is not one of choose, accept, stop");
}

Json to_json(const IterationRecord& r) {
    return Json{{"index", r.index},
                {"peak", r.peak},
                {"gamma", r.gamma},
                {"d_orders", r.d_orders},
                {"d_fit_errors", r.d_fit_errors},
                {"nominal_stable", r.nominal_stable},
                {"omega", r.ssv.grid.omegas()},
                {"mu_upper", r.ssv.mu_upper},
                {"controller_states", r.controller.states()}};
}

Json to_json(const DkResult& r) {
    Json recs = Json::array();
    for (const auto& rec : r.records) recs.push_back(to_json(rec));
    return Json{{"peak", r.peak},
                {"converged", r.converged},
                {"reason", std::string(to_string(r.reason))},
                {"best_index", r.records.empty() ? 0 : r.records[r.best_index].index},
                {"controller", to_json(r.controller)},
                {"records", recs}};
}

Json parse_json(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        bad(source + ": JSON syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

Json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) bad(path + ": cannot open file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_json(ss.str(), path);
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream f(path);
    if (!f) bad(path + ": cannot write file");
    f << j.dump(2) << '\n';
}

void write_ssv_csv(std::ostream& os, const SsvResult& r) {
    os << "omega,mu_upper\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.grid.size(); ++i) os << r.grid[i] << ',' << r.mu_upper[i] << '\n';
}

std::vector<std::pair<double, double>> read_ssv_csv(std::istream& is) {
    std::vector<std::string> header;
    const auto rows = read_csv_rows(is, header);
    if (header != std::vector<std::string>{"omega", "mu_upper"}) bad("CSV header must be omega,mu_upper");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string where = "CSV line " + std::to_string(i + 2);
        out.emplace_back(parse_double(rows[i][0], where), parse_double(rows[i][1], where));
    }
    return out;
}

void write_frd_csv(std::ostream& os, const FrequencyResponseData& d) {
    os << "omega";
    for (int r = 0; r < d.rows(); ++r) {
        for (int c = 0; c < d.cols(); ++c) {
            os << ",re_" << r + 1 << '_' << c + 1 << ",im_" << r + 1 << '_' << c + 1;
        }
    }
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
        os << d.grid[i];
        for (int r = 0; r < d.rows(); ++r) {
            for (int c = 0; c < d.cols(); ++c) os << ',' << d.values[i](r, c).real() << ',' << d.values[i](r, c).imag();
        }
        os << '\n';
    }
}

FrequencyResponseData read_frd_csv(std::istream& is) {
    std::vector<std::string> header;
    const auto rows = read_csv_rows(is, header);
    if (header.empty() || header.front() != "omega") bad("FRD CSV: first column must be omega");
    if ((header.size() - 1) % 2 != 0 || header.size() < 3) bad("FRD CSV: expected re/im column pairs");
    int nr = 0, nc = 0;
    std::vector<std::pair<int, int>> pos;
    for (std::size_t k = 1; k < header.size(); k += 2) {
        const auto re = split(header[k], '_');
        const auto im = split(header[k + 1], '_');
        if (re.size() != 3 || im.size() != 3 || re[0] != "re" || im[0] != "im" || re[1] != im[1] || re[2] != im[2]) {
            bad("FRD CSV: columns " + std::to_string(k + 1) + "-" + std::to_string(k + 2) + " must be re_i_j,im_i_j");
        }
        const int r = parse_int(re[1], "FRD CSV header") - 1;
        const int c = parse_int(re[2], "FRD CSV header") - 1;
        if (r < 0 || c < 0) bad("FRD CSV: indices are 1-based");
        pos.emplace_back(r, c);
        nr = std::max(nr, r + 1);
        nc = std::max(nc, c + 1);
    }
    if (static_cast<int>(pos.size()) != nr * nc) bad("FRD CSV: entry columns do not cover a full matrix");
    for (std::size_t k = 0; k < pos.size(); ++k) {
        if (pos[k] != std::make_pair(static_cast<int>(k) / nc, static_cast<int>(k) % nc)) {
            bad("FRD CSV: entries must be in row-major order");
        }
    }
    std::vector<double> omegas;
    std::vector<CMatrix> values;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string where = "FRD CSV line " + std::to_string(i + 2);
        omegas.push_back(parse_double(rows[i][0], where));
        CMatrix m(nr, nc);
        for (std::size_t k = 0; k < pos.size(); ++k) {
            m(pos[k].first, pos[k].second) =
                Complex(parse_double(rows[i][1 + 2 * k], where), parse_double(rows[i][2 + 2 * k], where));
        }
        values.push_back(std::move(m));
    }
    try {
        return FrequencyResponseData(FrequencyGrid(omegas), std::move(values));
    } catch (const Error& e) {
        bad("FRD CSV: " + e.detail());
    }
}

void write_columns_csv(std::ostream& os, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) bad("CSV: header and column counts differ");
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n' << std::setprecision(17);
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c][i];
        os << '\n';
    }
}

FrequencyGrid parse_grid(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 4) bad("--grid: expected lo:hi:n:log or lo:hi:n:lin, got \"" + text + "\"");
    const double lo = parse_double(parts[0], "--grid lo");
    const double hi = parse_double(parts[1], "--grid hi");
    const int n = parse_int(parts[2], "--grid n");
    if (!(lo > 0.0) || !(hi > lo)) bad("--grid: need 0 < lo < hi");
    if (n < 2) bad("--grid: need at least 2 points");
    if (parts[3] == "log") return FrequencyGrid::logspace(lo, hi, n);
    if (parts[3] == "lin") {
        std::vector<double> w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
        return FrequencyGrid(w);
    }
    bad("--grid: spacing must be log or lin, got \"" + parts[3] + "\"");
}

OrderStrategy parse_strategy(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = trim(text.substr(0, colon));
    const std::string rest = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    if (kind == "fixed") {
        FixedOrder f{4, 3};
        for (const auto& [k, v] : key_values(rest, "--strategy fixed")) {
            if (k == "order") f.order = parse_int(v, "--strategy order");
            else if (k == "iters") f.iterations = parse_int(v, "--strategy iters");
            else bad("--strategy fixed: unknown key \"" + k + "\" (expected order, iters)");
        }
        if (f.order < 0 || f.iterations < 1) bad("--strategy fixed: need order >= 0 and iters >= 1");
        return f;
    }
    if (kind == "list") {
        ListOrder l;
        for (const auto& p : split(rest, ',')) l.orders.push_back(parse_int(p, "--strategy list"));
        if (l.orders.empty()) bad("--strategy list: needs at least one order");
        for (int o : l.orders) {
            if (o < 0) bad("--strategy list: orders must be nonnegative");
        }
        return l;
    }
    if (kind == "auto") {
        AutoOrder a;
        for (const auto& [k, v] : key_values(rest, "--strategy auto")) {
            if (k == "max_order") a.max_order = parse_int(v, "--strategy max_order");
            else if (k == "tol") a.error_tol = parse_double(v, "--strategy tol");
            else if (k == "iters") a.max_iterations = parse_int(v, "--strategy iters");
            else bad("--strategy auto: unknown key \"" + k + "\" (expected max_order, tol, iters)");
        }
        if (a.max_order < 0 || a.max_iterations < 1 || !(a.error_tol > 0.0)) bad("--strategy auto: invalid values");
        return a;
    }
    bad("--strategy: unknown kind \"" + kind + "\" (expected fixed, list, auto)");
}

ResidualForm parse_form(const std::string& text) {
    for (auto f : {ResidualForm::Additive, ResidualForm::MultiplicativeInput, ResidualForm::InverseMultiplicativeInput}) {
        if (text == to_string(f)) return f;
    }
    bad("unknown form \"" + text + "\"; valid forms: additive, multiplicative_input, inverse_multiplicative_input");
}

WeightStructure parse_weight_structure(const std::string& text) {
    if (text == "scalar_left") return {WeightSide::ScalarIdentity, WeightSide::Identity};
    if (text == "diag_left") return {WeightSide::Diagonal, WeightSide::Identity};
    if (text == "scalar_right") return {WeightSide::Identity, WeightSide::ScalarIdentity};
    if (text == "diag_right") return {WeightSide::Identity, WeightSide::Diagonal};
    bad("unknown weight structure \"" + text + "\"; valid: scalar_left, diag_left, scalar_right, diag_right");
}

std::string_view to_string(DkPhase p) {
    switch (p) {
        case DkPhase::Synthesizing: return "synthesizing";
        case DkPhase::Analyzing: return "analyzing";
        case DkPhase::AwaitingChoice: return "awaiting_choice";
        case DkPhase::Fitting: return "fitting";
    }
    return "unknown";
}

}  // namespace robust::io
