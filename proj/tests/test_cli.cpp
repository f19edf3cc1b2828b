#include <gtest/gtest.h>

#include "mfa/io.hpp"
#include "mfa/json_io.hpp"
#include "mfa/model_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

namespace {

using namespace mfa;
namespace fs = std::filesystem;
using io::Json;

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("mfa_cli_" + std::to_string(::getpid()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    // Runs the tool; stdout goes to out.txt and stderr to err.txt in dir.
    int run(const std::string& args) {
        std::string cmd = std::string("'") + MFA_CLI_PATH + "' " + args + " > '" + (dir / "out.txt").string() +
                          "' 2> '" + (dir / "err.txt").string() + "'";
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string path(const std::string& name) const { return "'" + (dir / name).string() + "'"; }
    void write(const std::string& name, const std::string& text) const { io::write_text(dir / name, text); }
    std::string err() const { return io::read_text(dir / "err.txt"); }

    void make_data() {
        write("synth.json", R"({"measurements": 10, "extents": [4, 3], "ranks": [2, 2], "seed": 5})");
        ASSERT_EQ(run("synth --config " + path("synth.json") + " --out " + path("ds")), 0) << err();
    }

    fs::path dir;
};

TEST_F(Cli, TrainOnZeroNoiseSynthReachesTinyCost) {
    make_data();
    write("train.json", R"({"input": "ds/data.mten", "ranks": [2, 2], "schedule": ["sequential", "parallel"]})");
    ASSERT_EQ(run("train --config " + path("train.json") + " --out " + path("run")), 0) << err();
    Json report = Json::parse(io::read_text(dir / "run" / "report.json"));
    EXPECT_LE(report["final_cost"].get<double>(), 1e-9);
    ASSERT_EQ(report["runs"].size(), 2u);
    EXPECT_NEAR(report["runs"][0]["final_cost"].get<double>(), report["runs"][1]["final_cost"].get<double>(), 1e-6);
    EXPECT_TRUE(report["timing"]["per_schedule"].contains("parallel"));
    EXPECT_FALSE(report["cost_trace"].empty());
    CausalModel model = io::load_model(dir / "run" / "model");
    EXPECT_EQ(model.ranks, (Dims{2, 2}));
}

TEST_F(Cli, RankAboveExtentIsAValidationError) {
    make_data();
    write("train.json", R"({"input": "ds/data.mten", "ranks": [5, 2]})");
    EXPECT_EQ(run("train --config " + path("train.json") + " --out " + path("run")), 3);
    EXPECT_NE(err().find("ranks[0]"), std::string::npos) << err();
}

TEST_F(Cli, UnknownKeysAndMissingFilesMapToExitCodes) {
    make_data();
    write("unknown.json", R"({"input": "ds/data.mten", "ranks": [2, 2], "rnaks": [1]})");
    EXPECT_EQ(run("train --config " + path("unknown.json") + " --out " + path("run")), 3);
    EXPECT_NE(err().find("rnaks"), std::string::npos);
    write("missing.json", R"({"input": "nothing.mten", "ranks": [2, 2]})");
    EXPECT_EQ(run("train --config " + path("missing.json") + " --out " + path("run")), 2);
    write("broken.json", "{");
    EXPECT_EQ(run("train --config " + path("broken.json") + " --out " + path("run")), 2);
    EXPECT_EQ(run("train --config " + path("nowhere.json") + " --out " + path("run")), 2);
    EXPECT_EQ(run("train --schedule sometimes --config " + path("missing.json")), 3);
}

TEST_F(Cli, NonConvergenceStillWritesOutputs) {
    make_data();
    write("train.json", R"({"input": "ds/data.mten", "ranks": [1, 1], "max_iters": 1, "tol": 1e-300})");
    EXPECT_EQ(run("train --config " + path("train.json") + " --out " + path("run")), 4);
    EXPECT_TRUE(fs::exists(dir / "run" / "model" / "meta.json"));
    Json report = Json::parse(io::read_text(dir / "run" / "report.json"));
    EXPECT_FALSE(report["converged"].get<bool>());
}

TEST_F(Cli, ProjectRoundTripAndDegenerateMean) {
    make_data();
    write("train.json", R"({"input": "ds/data.mten", "ranks": [2, 2]})");
    ASSERT_EQ(run("train --config " + path("train.json") + " --out " + path("run")), 0) << err();
    Tensor data = io::read_tensor(dir / "ds" / "data.mten");
    CausalModel model = io::load_model(dir / "run" / "model");
    Matrix obs(10, 2);
    obs.col(0) = data.mode0().col(1 + 4 * 2);  // i_1 = 1, i_2 = 2
    obs.col(1) = model.mean;
    io::write_matrix_csv(dir / "obs.csv", obs);
    ASSERT_EQ(run("project --model " + path("run/model") + " --observations " + path("obs.csv")), 0) << err();
    Json out = Json::parse(io::read_text(dir / "out.txt"));
    const Json& first = out["observations"][0];
    EXPECT_FALSE(first["degenerate"].get<bool>());
    EXPECT_EQ(first["labels"][0]["index"].get<int>(), 1);
    EXPECT_EQ(first["labels"][1]["index"].get<int>(), 2);
    EXPECT_TRUE(out["observations"][1]["degenerate"].get<bool>());
}

TEST_F(Cli, EnsembleManifestGivesEveryCandidate) {
    write("synth.json", R"({"measurements": 10, "extents": [3, 3], "ranks": [2, 2], "seed": 8, "regimes": 2})");
    ASSERT_EQ(run("synth --config " + path("synth.json") + " --out " + path("ens")), 0) << err();
    Tensor data = io::read_tensor(dir / "ens" / "regime_1" / "data.mten");
    io::write_matrix_csv(dir / "obs.csv", Matrix(data.mode0().col(4)));
    ASSERT_EQ(run("project --ensemble " + path("ens/ensemble.json") + " --observations " + path("obs.csv")), 0) << err();
    Json out = Json::parse(io::read_text(dir / "out.txt"));
    const Json& o = out["observations"][0];
    EXPECT_EQ(o["candidates"].size(), 2u);
    EXPECT_EQ(o["scores"].size(), 2u);
    EXPECT_EQ(o["chosen"].get<int>(), 1);
}

TEST_F(Cli, BenchTreeSizesAndEmptyList) {
    write("empty.json", R"({"cases": []})");
    ASSERT_EQ(run("bench --config " + path("empty.json") + " --out " + path("b0")), 0) << err();
    EXPECT_EQ(io::read_text(dir / "b0" / "bench.csv"),
              "case,path,mode,leaves,nodes,depth,max_principal_angle,wall_seconds\n");

    write("bench.json", R"({"cases": [{"name": "t", "synth": {"measurements": 6, "extents": [5, 3], "ranks": [4, 3], "seed": 2},
                                       "hierarchy": {"truncate_nodes": false}}]})");
    ASSERT_EQ(run("bench --config " + path("bench.json") + " --out " + path("b1")), 0) << err();
    std::ifstream in(dir / "b1" / "bench.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        ASSERT_EQ(f.size(), 8u) << line;
        ++rows;
        if (f[1] != "hierarchy" || f[2] == "all") continue;
        // Clusters of X_m run over the other, already projected, mode: R_2 = 3
        // for mode 1 and R_1 = 4 for mode 2. A binary tree over L leaves has
        // L - 1 merges and depth ceil(log2 L).
        const int leaves = std::stoi(f[3]);
        EXPECT_EQ(leaves, f[2] == "1" ? 3 : 4);
        EXPECT_EQ(std::stoi(f[4]), leaves - 1);
        EXPECT_EQ(std::stoi(f[5]), 2);
        EXPECT_LE(std::stod(f[6]), 1e-6);
    }
    EXPECT_EQ(rows, 4);
}

TEST_F(Cli, KernelFlagSwitchesToKernelTraining) {
    make_data();
    write("train.json", R"({"input": "ds/data.mten", "ranks": [2, 2]})");
    ASSERT_EQ(run("train --config " + path("train.json") + " --kernel 2=rbf:sigma=1.5 --out " + path("run")), 0) << err();
    CausalModel model = io::load_model(dir / "run" / "model");
    EXPECT_EQ(model.provenance.algorithm, "k-mpca");
    EXPECT_EQ(model.kernels[1].kind, KernelKind::rbf);
    EXPECT_EQ(model.kernels[1].sigma, 1.5);
    EXPECT_EQ(run("train --config " + path("train.json") + " --kernel 3=rbf --out " + path("run2")), 3);
    ASSERT_EQ(run("inspect --model " + path("run/model")), 0);
    Json meta = Json::parse(io::read_text(dir / "out.txt"));
    EXPECT_EQ(meta["kernels"][1]["kind"], "rbf");
}

}  // namespace
