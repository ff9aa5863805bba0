#include "cascade/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const char* kSmallRateSuite = R"toml(
[geometry]
h1 = 1
h2 = 0.5
[data]
f = "cos(pi*x/2)*(1+eta)"
phi_plus_1 = "x+1"
[discretization]
nx = 64
neta = 16
R = 8
P = 32
[sweep]
eps = [0.2, 0.1, 0.05]
)toml";

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("cascade_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string writeConfig(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "cascade-asym");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cascade::cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, MissingConfigIsAnInputError) {
    EXPECT_EQ(run({"sweep", "--config", path("nope.toml")}), 2);
    EXPECT_NE(err_.str().find("config not found"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({"junction", "--bogus"}), 2);
    EXPECT_NE(err_.str().find("usage error"), std::string::npos);
    EXPECT_EQ(run({"solve"}), 2);  // --config is required
    EXPECT_EQ(run({"solve", "--config", path("c.toml"), "--eps", "-1"}), 2);
}

TEST_F(Cli, InvalidConfigIsAnInputError) {
    const auto cfg = writeConfig("bad.toml", "[geometry]\nh1 = 0.5\nh2 = 1\n[data]\nf = \"0\"\n");
    EXPECT_EQ(run({"homogenize", "--config", cfg}), 2);
    EXPECT_NE(err_.str().find("h2 must be < h1"), std::string::npos);
}

TEST_F(Cli, JunctionEqualThicknessIsZero) {
    EXPECT_EQ(run({"junction", "--h1", "1", "--h2", "1", "--R", "6", "--neta", "16"}), 0);
    EXPECT_NE(out_.str().find("layer identically zero"), std::string::npos);
}

TEST_F(Cli, JunctionWritesField) {
    const auto out = path("n1.csv");
    EXPECT_EQ(run({"junction", "--h1", "1", "--h2", "0.5", "--R", "8", "--neta", "16", "--out", out}), 0);
    EXPECT_NE(out_.str().find("d1+ (plateau) = "), std::string::npos);
    EXPECT_NE(out_.str().find("d1+ (green)   = "), std::string::npos);
    EXPECT_EQ(slurp(out).rfind("xi,eta,n1\n", 0), 0u);
}

TEST_F(Cli, HomogenizeProfile) {
    const auto cfg = writeConfig("c.toml", "[geometry]\nh1 = 1\nh2 = 0.5\n[data]\nf = \"1\"\n[discretization]\nnx = 8\n");
    const auto out = path("w.csv");
    EXPECT_EQ(run({"homogenize", "--config", cfg, "--out", out}), 0);
    EXPECT_NE(out_.str().find("omega2(0) = 0.5"), std::string::npos);
    const auto text = slurp(out);
    EXPECT_EQ(text.rfind("branch,x,omega2,domega2\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 9);
}

TEST_F(Cli, SolveAndAsymptotics) {
    const auto cfg = writeConfig("c.toml", kSmallRateSuite);
    EXPECT_EQ(run({"solve", "--config", cfg, "--eps", "0.1", "--out", path("u.csv")}), 0);
    EXPECT_EQ(slurp(path("u.csv")).rfind("x,eta,u\n", 0), 0u);
    EXPECT_EQ(run({"asymptotics", "--config", cfg, "--eps", "0.1", "--m", "2", "--out", path("U.csv"),
                   "--dump-corrector", path("uk.csv"), "--dump-layers", path("layers.csv")}),
              0);
    EXPECT_NE(out_.str().find("d1+ = "), std::string::npos);
    EXPECT_NE(out_.str().find("d4+ = "), std::string::npos);
    EXPECT_EQ(slurp(path("uk.csv")).rfind("k,branch,x,eta,u\n", 0), 0u);
    EXPECT_EQ(slurp(path("layers.csv")).rfind("kind,k,side,index,value\n", 0), 0u);
}

TEST_F(Cli, SweepIsIndependentOfThreadCount) {
    const auto cfg = writeConfig("c.toml", kSmallRateSuite);
    EXPECT_EQ(run({"sweep", "--config", cfg, "--jobs", "1", "--out", path("a.csv")}), 0);
    EXPECT_EQ(run({"sweep", "--config", cfg, "--jobs", "3", "--out", path("b.csv"), "--plots"}), 0);
    ::setenv("CASCADE_ASYM_JOBS", "2", 1);
    EXPECT_EQ(run({"sweep", "--config", cfg, "--jobs", "1", "--out", path("c.csv")}), 0);
    ::unsetenv("CASCADE_ASYM_JOBS");
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("c.csv")));
    EXPECT_TRUE(fs::exists(path("b_h1_partial.dat")));
}

TEST_F(Cli, ValidateExitCodes) {
    const auto good = writeConfig("good.toml", kSmallRateSuite);
    EXPECT_EQ(run({"validate", "--config", good, "--out", path("r.csv")}), 0);
    EXPECT_NE(out_.str().find("PASS h1_partial"), std::string::npos);
    EXPECT_EQ(out_.str().find("FAIL"), std::string::npos);
    // eps far outside the asymptotic regime: the expansion does not converge
    std::string bad = kSmallRateSuite;
    bad.replace(bad.find("eps = [0.2, 0.1, 0.05]"), 22, "eps = [4.0, 3.5, 3.0]");
    EXPECT_EQ(run({"validate", "--config", writeConfig("bad.toml", bad), "--out", path("r2.csv")}), 1);
    EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
}
