#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = GRACE_CLI_PATH;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("grace_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void put(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

struct Result {
    int code;
    std::string out;
    std::string err;
};

// Runs the driver with stdout and stderr captured under `dir`.
Result run(const fs::path& dir, const std::string& args) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = "'" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

const char* kSmallSbm =
    "blocks = 2\nnodes_per_block = 12\np_in = 0.5\np_out = 0.05\nsig_per_block = 3\nnoise_attrs = 6\nseed = 5\n";

// A generated dataset plus a short training config beside it.
fs::path small_training_setup(const std::string& name, const std::string& extra = "") {
    const fs::path dir = scratch(name);
    put(dir / "sbm.cfg", kSmallSbm);
    const Result g = run(dir, "generate --config '" + (dir / "sbm.cfg").string() + "' --out '" + (dir / "data").string() + "'");
    EXPECT_EQ(g.code, 0) << g.err;
    put(dir / "train.cfg",
        "features = data/features.tsv\nedges = data/edges.tsv\nlabels = data/labels.tsv\n"
        "clusters = 2\nembed_dim = 3\npretrain_epochs = 30\nmacro_steps = 2\nmicro_steps = 5\n"
        "optimizer = adam\nrho = 0.01\nseed = 1\n" +
            extra);
    return dir;
}

}  // namespace

TEST(Generate, SameSeedSameBytes) {
    const auto dir = scratch("generate");
    put(dir / "sbm.cfg", kSmallSbm);
    const std::string cfg = " --config '" + (dir / "sbm.cfg").string() + "'";
    ASSERT_EQ(run(dir, "generate" + cfg + " --out '" + (dir / "a").string() + "'").code, 0);
    ASSERT_EQ(run(dir, "generate" + cfg + " --out '" + (dir / "b").string() + "'").code, 0);
    for (const char* f : {"features.tsv", "edges.tsv", "labels.tsv", "params.txt"}) {
        ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    ASSERT_EQ(run(dir, "generate" + cfg + " --seed 6 --out '" + (dir / "c").string() + "'").code, 0);
    EXPECT_NE(slurp(dir / "a" / "edges.tsv"), slurp(dir / "c" / "edges.tsv"));
}

TEST(Generate, MissingConfigExitsTwo) {
    const auto dir = scratch("generate_missing");
    const Result r = run(dir, "generate --config '" + (dir / "nope.cfg").string() + "' --out '" + dir.string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
}

TEST(Generate, ProbabilityOutOfRangeExitsTwo) {
    const auto dir = scratch("generate_range");
    put(dir / "bad.cfg", "p_in = 1.5\n");
    const Result r = run(dir, "generate --config '" + (dir / "bad.cfg").string() + "' --out '" + dir.string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("p_in"), std::string::npos) << r.err;
}

TEST(Cli, UnknownSubcommandExitsTwo) {
    const auto dir = scratch("unknown");
    EXPECT_EQ(run(dir, "frobnicate").code, 2);
    EXPECT_EQ(run(dir, "").code, 2);
}

TEST(Train, WritesOutputsDeterministically) {
    const auto dir = small_training_setup("train");
    const std::string cfg = " --config '" + (dir / "train.cfg").string() + "'";
    const Result a = run(dir, "train" + cfg + " --out '" + (dir / "a").string() + "'");
    ASSERT_EQ(a.code, 0) << a.err;
    const Result b = run(dir, "train" + cfg + " --out '" + (dir / "b").string() + "'");
    ASSERT_EQ(b.code, 0) << b.err;
    for (const char* f : {"predictions.tsv", "train_log.csv", "checkpoint.grace"}) {
        ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("F1 = "), std::string::npos) << a.out;

    const auto preds = lines(slurp(dir / "a" / "predictions.tsv"));
    EXPECT_EQ(preds.size(), 24u);
    const auto log = lines(slurp(dir / "a" / "train_log.csv"));
    ASSERT_EQ(log.size(), 1u + 30u + 10u);
    EXPECT_EQ(log[0], "phase,step,J1,J2,J");
    EXPECT_EQ(log[1].rfind("pretrain,1,", 0), 0u) << log[1];
    EXPECT_NE(log[1].find(",,"), std::string::npos);  // no J2 while pre-training
    EXPECT_EQ(log[31].rfind("cotrain,1,", 0), 0u) << log[31];
    EXPECT_EQ(log[31].find(",,"), std::string::npos) << log[31];
}

TEST(Train, SeedFlagOverridesConfig) {
    const auto dir = small_training_setup("train_seed");
    const std::string cfg = " --config '" + (dir / "train.cfg").string() + "'";
    ASSERT_EQ(run(dir, "train" + cfg + " --out '" + (dir / "a").string() + "'").code, 0);
    ASSERT_EQ(run(dir, "train" + cfg + " --seed 9 --out '" + (dir / "b").string() + "'").code, 0);
    EXPECT_NE(slurp(dir / "a" / "train_log.csv"), slurp(dir / "b" / "train_log.csv"));
}

TEST(Train, LambdaZeroLeavesClusterLossColumnEmpty) {
    const auto dir = small_training_setup("train_lambda0", "lambda = 0\n");
    const Result r = run(dir, "train --config '" + (dir / "train.cfg").string() + "' --out '" + (dir / "o").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto log = lines(slurp(dir / "o" / "train_log.csv"));
    for (std::size_t i = 1; i < log.size(); ++i) {
        std::vector<std::string> f;
        std::istringstream in(log[i]);
        for (std::string x; std::getline(in, x, ',');) f.push_back(x);
        ASSERT_GE(f.size(), 4u) << log[i];
        EXPECT_TRUE(f[3].empty()) << log[i];
    }
}

TEST(Train, InvalidConfigExitsTwo) {
    const auto dir = small_training_setup("train_invalid", "alpha = 1\n");
    const Result r = run(dir, "train --config '" + (dir / "train.cfg").string() + "' --out '" + (dir / "o").string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("alpha"), std::string::npos) << r.err;
}

TEST(Train, DivergenceExitsThree) {
    const auto dir = small_training_setup("train_diverge", "rho = 1e305\n");
    const Result r = run(dir, "train --config '" + (dir / "train.cfg").string() + "' --out '" + (dir / "o").string() + "'");
    EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Evaluate, IdenticalFilesScoreOne) {
    const auto dir = scratch("eval_same");
    put(dir / "l.tsv", "0\t0\n1\t0\n2\t1\n3\t1\n");
    const Result r = run(dir, "evaluate --predictions '" + (dir / "l.tsv").string() + "' --labels '" +
                               (dir / "l.tsv").string() + "' --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "F1 = 1.000000\nJC = 1.000000\n");
    EXPECT_EQ(slurp(dir / "evaluation.csv"), "metric,value\nF1,1\nJC,1\n");
}

TEST(Evaluate, HandExample) {
    const auto dir = scratch("eval_hand");
    put(dir / "p.tsv", "0\t0\n1\t0\n");
    put(dir / "l.tsv", "0\t4\n1\t4\n2\t4\n");
    const Result r = run(dir, "evaluate --predictions '" + (dir / "p.tsv").string() + "' --labels '" +
                               (dir / "l.tsv").string() + "' --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "F1 = 0.800000\nJC = 0.666667\n");
}

TEST(Evaluate, MalformedLineReportsLineNumber) {
    const auto dir = scratch("eval_bad");
    put(dir / "p.tsv", "0\t0\n1\t0\n");
    put(dir / "l.tsv", "0\t0\n1 0\n");
    const Result r = run(dir, "evaluate --predictions '" + (dir / "p.tsv").string() + "' --labels '" +
                               (dir / "l.tsv").string() + "' --out '" + dir.string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("l.tsv:2"), std::string::npos) << r.err;
}

TEST(Evaluate, RequiresBothFiles) {
    const auto dir = scratch("eval_args");
    EXPECT_EQ(run(dir, "evaluate --labels x").code, 2);
}

namespace {

std::vector<std::vector<double>> read_diag(const fs::path& csv) {
    std::vector<std::vector<double>> rows;
    const auto ls = lines(slurp(csv));
    for (std::size_t i = 1; i < ls.size(); ++i) {
        std::vector<double> row;
        std::istringstream in(ls[i]);
        for (std::string x; std::getline(in, x, ',');) row.push_back(std::stod(x));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST(PropagateDiag, AlphaZeroHasNoGap) {
    const auto dir = scratch("diag_zero");
    put(dir / "e.tsv", "0\t1\n1\t2\n2\t3\n");
    put(dir / "d.cfg", "edges = e.tsv\nalpha = 0\nmax_order = 5\n");
    const Result r = run(dir, "propagate-diag --config '" + (dir / "d.cfg").string() + "' --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(slurp(dir / "propagate_diag.csv"))[0], "B,measured_inf_norm_gap,bound_alpha_pow");
    const auto rows = read_diag(dir / "propagate_diag.csv");
    ASSERT_EQ(rows.size(), 6u);
    for (const auto& row : rows) EXPECT_EQ(row[1], 0.0);
}

TEST(PropagateDiag, GapWithinBoundAndShrinking) {
    const auto dir = scratch("diag_bound");
    put(dir / "e.tsv", "0\t1\n1\t2\n2\t3\n3\t4\n4\t0\n1\t3\n");
    put(dir / "d.cfg", "edges = e.tsv\nalpha = 0.9\n");
    ASSERT_EQ(run(dir, "propagate-diag --config '" + (dir / "d.cfg").string() + "' --out '" + dir.string() + "'").code, 0);
    const auto rows = read_diag(dir / "propagate_diag.csv");
    ASSERT_EQ(rows.size(), 41u);
    for (std::size_t b = 0; b < rows.size(); ++b) {
        EXPECT_EQ(rows[b][0], static_cast<double>(b));
        EXPECT_LE(rows[b][1], rows[b][2] + 1e-12) << "B = " << b;
        if (b > 0) {
            EXPECT_LE(rows[b][1], rows[b - 1][1]) << "B = " << b;
        }
    }
    EXPECT_GT(rows[0][1], 0.1);
}

TEST(PropagateDiag, DisconnectedGraphRuns) {
    const auto dir = scratch("diag_disconnected");
    put(dir / "e.tsv", "0\t1\n2\t3\n");
    put(dir / "d.cfg", "edges = e.tsv\nalpha = 0.5\nnodes = 6\nmax_order = 3\n");
    const Result r = run(dir, "propagate-diag --config '" + (dir / "d.cfg").string() + "' --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_diag(dir / "propagate_diag.csv").size(), 4u);
}

TEST(Project, WritesBothProjections) {
    const auto dir = small_training_setup("project");
    const std::string cfg = " --config '" + (dir / "train.cfg").string() + "'";
    ASSERT_EQ(run(dir, "train" + cfg + " --out '" + (dir / "t").string() + "'").code, 0);
    const std::string cmd = "project" + cfg + " --checkpoint '" + (dir / "t" / "checkpoint.grace").string() + "'";
    const Result r = run(dir, cmd + " --out '" + (dir / "p").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"projection_contents.csv", "projection_propagated.csv"}) {
        const auto ls = lines(slurp(dir / "p" / f));
        ASSERT_EQ(ls.size(), 25u) << f;
        EXPECT_EQ(ls[0], "node_id,pc1,pc2,predicted_cluster,true_cluster");
        for (std::size_t i = 1; i < ls.size(); ++i) {
            EXPECT_EQ(std::count(ls[i].begin(), ls[i].end(), ','), 4) << ls[i];
            EXPECT_EQ(ls[i].rfind(std::to_string(i - 1) + ",", 0), 0u) << ls[i];
        }
    }
    // Predicted clusters in the projection agree with train's predictions.
    const auto preds = lines(slurp(dir / "t" / "predictions.tsv"));
    const auto proj = lines(slurp(dir / "p" / "projection_propagated.csv"));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const std::string label = preds[i].substr(preds[i].find('\t') + 1);
        std::vector<std::string> f;
        std::istringstream in(proj[i + 1]);
        for (std::string x; std::getline(in, x, ',');) f.push_back(x);
        EXPECT_EQ(f[3], label) << "node " << i;
    }
    ASSERT_EQ(run(dir, cmd + " --out '" + (dir / "q").string() + "'").code, 0);
    EXPECT_EQ(slurp(dir / "p" / "projection_propagated.csv"), slurp(dir / "q" / "projection_propagated.csv"));
}

TEST(Project, MissingCheckpointExitsTwo) {
    const auto dir = small_training_setup("project_missing");
    const Result r = run(dir, "project --config '" + (dir / "train.cfg").string() + "' --checkpoint '" +
                               (dir / "absent.grace").string() + "' --out '" + dir.string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("absent.grace"), std::string::npos) << r.err;
}

TEST(Evaluate, SeveralPairsReportUnweightedMean) {
    const auto dir = scratch("eval_mean");
    put(dir / "p1.tsv", "0\t0\n1\t0\n");
    put(dir / "l1.tsv", "0\t4\n1\t4\n2\t4\n");
    put(dir / "p2.tsv", "0\t0\n1\t1\n");
    put(dir / "l2.tsv", "0\t0\n1\t1\n");
    const std::string d = dir.string();
    const Result r = run(dir, "evaluate --predictions '" + d + "/p1.tsv' '" + d + "/p2.tsv' --labels '" + d +
                                  "/l1.tsv' '" + d + "/l2.tsv' --out '" + d + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("F1 = 0.900000\nJC = 0.833333\n"), std::string::npos) << r.out;
    const Result mismatch =
        run(dir, "evaluate --predictions '" + d + "/p1.tsv' '" + d + "/p2.tsv' --labels '" + d + "/l1.tsv'");
    EXPECT_EQ(mismatch.code, 2);
}

TEST(PropagateDiag, PlainPowerVariant) {
    const auto dir = scratch("diag_power");
    put(dir / "e.tsv", "0\t1\n1\t2\n2\t3\n");
    put(dir / "d.cfg", "edges = e.tsv\nalpha = 0.9\nmax_order = 4\nvariant = power\n");
    const Result r = run(dir, "propagate-diag --config '" + (dir / "d.cfg").string() + "' --out '" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(slurp(dir / "propagate_diag.csv"));
    ASSERT_EQ(ls.size(), 6u);
    for (std::size_t i = 1; i < ls.size(); ++i) EXPECT_EQ(ls[i].back(), ',') << ls[i];
    put(dir / "bad.cfg", "edges = e.tsv\nvariant = exact\n");
    EXPECT_EQ(run(dir, "propagate-diag --config '" + (dir / "bad.cfg").string() + "' --out '" + dir.string() + "'").code, 2);
}
