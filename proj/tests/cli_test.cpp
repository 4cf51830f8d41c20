#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "robust/io.hpp"
#include "test_util.hpp"

#include <sys/wait.h>
#include <unistd.h>

using namespace robust;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;  // stdout and stderr
};

Run run(const std::string& args, const std::string& stdin_text = {}) {
    std::string cmd = std::string(ROBUST_CLI) + " " + args + " 2>&1";
    if (!stdin_text.empty()) cmd = "printf '" + stdin_text + "' | " + cmd;
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("robust_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const auto p = dir_ / name;
        std::ofstream(p) << text;
        return p.string();
    }
    std::string write_json(const std::string& name, const io::Json& j) { return write(name, j.dump()); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

const char* kFirstOrder = R"({"A":[[-1]],"B":[[1]],"C":[[1]],"D":[[0]]})";

}  // namespace

TEST_F(Cli, NormFirstOrder) {
    const auto r = run("norm " + write("g.json", kFirstOrder));
    EXPECT_EQ(r.code, 0);
    EXPECT_NEAR(std::stod(r.out), 1.0, 1e-6);
}

TEST_F(Cli, NormUnstable) {
    const auto r = run("norm " + write("u.json", R"({"A":[[1]],"B":[[1]],"C":[[1]],"D":[[0]]})"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("unstable system"), std::string::npos);
}

TEST_F(Cli, NormStaticGain) {
    const auto r = run("norm " + write("s.json", R"({"A":[],"B":[],"C":[],"D":[[3,0],[0,4]]})"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NEAR(std::stod(r.out), 4.0, 1e-9);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("norm").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("norm " + path("missing.json")).code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, MuVerdicts) {
    const auto st = write("st.json", R"([{"kind":"full","dim":2}])");
    const auto half = run("mu " + write("h.json", R"({"A":[],"B":[],"C":[],"D":[[0.5,0],[0,0.5]]})") + " " + st +
                          " --grid 0.1:10:5:log -o " + path("mu.csv"));
    EXPECT_EQ(half.code, 0);
    EXPECT_NE(half.out.find("peak mu_upper: 0.5"), std::string::npos);
    EXPECT_NE(half.out.find("robust: yes"), std::string::npos);
    std::ifstream f(path("mu.csv"));
    const auto rows = io::read_ssv_csv(f);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_NEAR(rows[0].second, 0.5, 1e-3);

    const auto two = run("mu " + write("h2.json", R"({"A":[],"B":[],"C":[],"D":[[2,0],[0,2]]})") + " " + st +
                         " --grid 0.1:10:5:log -o " + path("mu2.csv"));
    EXPECT_EQ(two.code, 0);
    EXPECT_NE(two.out.find("robust: no"), std::string::npos);
}

TEST_F(Cli, MuMalformedStructure) {
    const auto r = run("mu " + write("g.json", kFirstOrder) + " " + write("bad.json", R"([{"kind":"full","dim":1})") +
                       " -o " + path("mu.csv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("byte"), std::string::npos);
}

TEST_F(Cli, BadGridFlag) {
    const auto r = run("mu " + write("g.json", kFirstOrder) + " " + write("st.json", R"([{"kind":"full","dim":1}])") +
                       " --grid 1:2:log");
    EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, DkiterListAndInteractiveAgree) {
    const RobustPerformanceSpec spec{testutil::dk_fixture_plant(), BlockStructure({UncertaintyBlock::full(1)}), 1, 1};
    const auto file = write_json("spec.json", io::to_json(spec));
    const auto listed = run("dkiter " + file + " --strategy list:2,2,2 --out-dir " + path("list"));
    ASSERT_EQ(listed.code, 0) << listed.out;
    EXPECT_TRUE(fs::exists(path("list/controller.json")));
    EXPECT_TRUE(fs::exists(path("list/mu_iter3.csv")));
    const auto report = io::read_json_file(path("list/report.json"));
    ASSERT_EQ(report["records"].size(), 3u);
    EXPECT_LE(report["peak"].get<double>(), report["records"][0]["peak"].get<double>());
    EXPECT_NE(listed.out.find("robust performance:"), std::string::npos);

    const auto inter = run("dkiter " + file + " --interactive --max-order 2 --out-dir " + path("inter"), "2\\n{\"type\":\"choose\",\"order\":2}\\naccept\\n");
    ASSERT_EQ(inter.code, 0) << inter.out;
    EXPECT_NE(inter.out.find("\"type\":\"iteration\""), std::string::npos);
    const auto ireport = io::read_json_file(path("inter/report.json"));
    ASSERT_EQ(ireport["records"].size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(ireport["records"][i]["peak"].get<double>(), report["records"][i]["peak"].get<double>());
    }
    EXPECT_EQ(ireport["reason"], "accepted");
}

TEST_F(Cli, DkiterMissingPlant) {
    EXPECT_EQ(run("dkiter " + path("nothing.json")).code, 2);
    const auto bad = run("dkiter " + write("spec.json", R"({"uncertainty":[],"perf_w":1,"perf_z":1})"));
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.out.find("plant"), std::string::npos);
}

TEST_F(Cli, UcoverIdenticalModels) {
    const auto g = FrequencyGrid::logspace(0.1, 10, 20);
    std::ostringstream ss;
    io::write_frd_csv(ss, freq_response(testutil::actuator_nominal(), g));
    const auto nom = write("g0.csv", ss.str());
    const auto r = run("ucover --nominal " + nom + " --offnominal " + nom + " --out-dir " + path("uc"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto w = io::fitted_weight_from_json(io::read_json_file(path("uc/weight.json")));
    EXPECT_EQ(w.order, 0);
    EXPECT_EQ(w.tf.D(0, 0), 0.0);
}

TEST_F(Cli, UcoverMultiplicativeFixture) {
    const auto g = FrequencyGrid::logspace(0.01, 1000, 60);
    std::ostringstream ss;
    io::write_frd_csv(ss, freq_response(testutil::actuator_nominal(), g));
    std::string args = "ucover --nominal " + write("g0.csv", ss.str()) + " --order 2 --out-dir " + path("uc") + " --offnominal";
    const auto off = testutil::actuator_offnominals(g);
    for (std::size_t k = 0; k < off.size(); k += 4) {
        std::ostringstream os;
        io::write_frd_csv(os, off[k]);
        args += " " + write("g" + std::to_string(k + 1) + ".csv", os.str());
    }
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.out;
    for (const char* f : {"residual_additive.csv", "residual_multiplicative_input.csv",
                          "residual_inverse_multiplicative_input.csv", "weight_response.csv", "weight.json"}) {
        EXPECT_TRUE(fs::exists(path(std::string("uc/") + f))) << f;
    }
    const std::string label = "coverage max sigma(W_L^-1 E W_R^-1): ";
    const auto pos = r.out.find(label);
    ASSERT_NE(pos, std::string::npos);
    EXPECT_LE(std::stod(r.out.substr(pos + label.size())), 1.0 + 1e-6);
}

TEST_F(Cli, UcoverUnknownForm) {
    const auto r = run("ucover --nominal a.csv --offnominal b.csv --form output");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("additive, multiplicative_input, inverse_multiplicative_input"), std::string::npos);
}

TEST_F(Cli, Hinfsyn) {
    const auto plant = write_json("p.json", io::to_json(testutil::mixed_sensitivity_plant()));
    const auto r = run("hinfsyn " + plant + " -o " + path("k.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto k = io::state_space_from_json(io::read_json_file(path("k.json")));
    const auto cl = lft_lower(testutil::mixed_sensitivity_plant(), k);
    EXPECT_TRUE(is_stable(cl));
    const auto pos = r.out.find("gamma: ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_LE(hinf_norm(cl), std::stod(r.out.substr(pos + 7)) * 1.001);
}
