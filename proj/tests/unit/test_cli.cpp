#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "causalad.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

Run run(const std::string& args) {
    const auto log = fs::temp_directory_path() / "causalad_cli_test.log";
    const std::string cmd = std::string("\"") + CAUSALAD_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("causalad_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path small_spec(const fs::path& dir) {
    const auto p = dir / "spec.json";
    std::ofstream(p) << R"({"n": 6, "p": 0.3, "length": 1000, "seed": 4})";
    return p;
}

const std::string kQuick = " --estimator linear_gaussian --root-estimator isolation_forest";

}  // namespace

TEST(Cli, SimulateIsByteIdentical) {
    const auto dir = scratch("sim");
    const auto spec = small_spec(dir);
    ASSERT_EQ(run("simulate --spec " + spec.string() + " --out " + (dir / "a").string()).code, 0);
    ASSERT_EQ(run("simulate --spec " + spec.string() + " --out " + (dir / "b").string()).code, 0);
    for (const auto* f : {"data.csv", "labels.csv", "graph.txt"}) {
        EXPECT_FALSE(slurp(dir / "a" / f).empty()) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    EXPECT_EQ(line_count(dir / "a" / "labels.csv"), 1001u);
}

TEST(Cli, BadSpecKeyIsUsageError) {
    const auto dir = scratch("badspec");
    std::ofstream(dir / "spec.json") << R"({"n": 6, "lenght": 1000})";
    const auto r = run("simulate --spec " + (dir / "spec.json").string() + " --out " + (dir / "o").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("lenght"), std::string::npos) << r.output;
}

TEST(Cli, UnknownFlagIsUsageError) {
    EXPECT_EQ(run("simulate --frobnicate --out /tmp/x").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("--version").code, 0);
}

TEST(Cli, EndToEndPipeline) {
    const auto dir = scratch("e2e");
    const auto sim = dir / "sim";
    ASSERT_EQ(run("simulate --spec " + small_spec(dir).string() + " --out " + sim.string()).code, 0);
    const auto data = (sim / "data.csv").string();

    for (const auto* algo : {"pc", "ges"}) {
        const auto disc = dir / (std::string("disc_") + algo);
        ASSERT_EQ(run("discover --data " + data + " --split 0.5 --algorithm " + algo + " --out " + disc.string()).code, 0) << algo;
        const auto r = run("train --data " + data + " --split 0.5 --graph " + (disc / "graph.txt").string() + kQuick + " --out " +
                           (dir / (std::string("bundle_") + algo)).string());
        EXPECT_EQ(r.code, 0) << r.output;
    }

    const auto bundle = dir / "bundle";
    ASSERT_EQ(run("train --data " + data + " --split 0.5 --graph " + (sim / "graph.txt").string() + kQuick + " --out " +
                  bundle.string())
                  .code,
              0);
    const auto det = dir / "det";
    auto r = run("detect --data " + data + " --split 0.5 --bundle " + bundle.string() + " --graph " + (sim / "graph.txt").string() +
                 " --out " + det.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(line_count(det / "detection.csv"), 501u);
    {
        std::ifstream in(det / "detection.csv");
        std::string header;
        std::getline(in, header);
        EXPECT_EQ(header, "timestep,score,label,argmin_variable,warmup");
    }

    const auto rc = dir / "rca";
    r = run("rca --detection " + det.string() + " --bundle " + bundle.string() + " --out " + rc.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(rc / "rca.csv"));

    const auto ev = dir / "eval";
    r = run("evaluate --pred " + (det / "detection.csv").string() + " --truth " + (sim / "labels.csv").string() + " --rca " +
            (rc / "rca.csv").string() + " --sweep --out " + ev.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto j = nlohmann::json::parse(slurp(ev / "eval.json"));
    EXPECT_TRUE(j.contains("best"));
    EXPECT_TRUE(j["hit_ratio"].contains("HR@1"));
    EXPECT_TRUE(fs::exists(ev / "eval.csv"));

    // A bundle trained on a different graph is refused.
    const auto other = dir / "other.txt";
    {
        std::ofstream out(other);
        out << "# causalad graph v1\n";
        for (int i = 0; i < 6; ++i) out << "node x" << i << '\n';
    }
    r = run("detect --data " + data + " --bundle " + bundle.string() + " --graph " + other.string() + " --out " +
            (dir / "det2").string());
    EXPECT_EQ(r.code, 2) << r.output;
}

TEST(Cli, SweepAndReport) {
    const auto dir = scratch("sweep");
    const auto sim = dir / "sim";
    ASSERT_EQ(run("simulate --spec " + small_spec(dir).string() + " --out " + sim.string()).code, 0);
    const auto run_dir = dir / "run";
    auto r = run("sweep --data " + (sim / "data.csv").string() + " --truth " + (sim / "labels.csv").string() +
                 " --parameter max_degree --values 5,6,7,8,9,10" + kQuick + " --out " + (run_dir / "max_degree").string());
    ASSERT_EQ(r.code, 0) << r.output;
    r = run("report --run " + run_dir.string() + " --out " + (dir / "report").string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(line_count(dir / "report" / "metric_vs_parameter.csv"), 7u);
}

TEST(Cli, EmptyRunDirectoryFails) {
    const auto dir = scratch("empty");
    fs::create_directories(dir / "run");
    EXPECT_EQ(run("report --run " + (dir / "run").string() + " --out " + (dir / "out").string()).code, 1);
}
