#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() / ("gendir_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    Outcome run(const std::string& args, const fs::path& run_dir = {}) const {
        const auto dir = run_dir.empty() ? root_ / "run" : run_dir;
        const auto out = root_ / "stdout.txt", err = root_ / "stderr.txt";
        const std::string cmd = std::string(GENDIR_CLI) + " --run-dir '" + dir.string() + "' " + args + " >'" +
                                out.string() + "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    void ok(const std::string& args, const fs::path& run_dir = {}) const {
        const auto r = run(args, run_dir);
        ASSERT_EQ(r.code, 0) << args << "\n" << r.err;
    }

    void chain(const fs::path& dir) const {
        const auto j = [&](const char* f) { return " '" + (dir / "jobs" / f).string() + "'"; };
        ok("synth --names 60 --bios-per-gender 3", dir);
        ok("mine-contexts", dir);
        ok("build-jobs --kind words", dir);
        ok("synth --answer" + j("words.jsonl"), dir);
        ok("aggregate --jobs" + j("words.jsonl"), dir);
        ok("build-jobs --kind names", dir);
        ok("synth --answer" + j("names.jsonl"), dir);
        ok("aggregate --jobs" + j("names.jsonl"), dir);
        ok("direction", dir);
        ok("validate --seeds 2", dir);
        ok("prior-probe --emit", dir);
        ok("synth --answer" + j("prior.jsonl"), dir);
        ok("prior-probe", dir);
        ok("context-shift --emit", dir);
        ok("synth --answer" + j("context_shift.jsonl"), dir);
        ok("context-shift", dir);
        ok("downstream --emit", dir);
        ok("synth --answer" + j("downstream.jsonl"), dir);
        ok("downstream", dir);
        ok("report --fig all", dir);
    }

    fs::path root_;
};

nlohmann::json error_of(const Outcome& r) { return nlohmann::json::parse(r.err); }

} // namespace

TEST_F(Cli, UsageErrorExitsTwo) {
    const auto r = run("direction --no-such-flag");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(error_of(r)["error"], "usage");
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, MissingInputIsValidationError) {
    const auto r = run("aggregate --jobs '" + (root_ / "absent.jsonl").string() + "'");
    EXPECT_EQ(r.code, 2);
    const auto e = error_of(r);
    EXPECT_EQ(e["error"], "validation");
    EXPECT_NE(e["message"].get<std::string>().find("absent.jsonl"), std::string::npos);
}

TEST_F(Cli, IncompleteResultsExitThree) {
    ok("synth --names 5");
    ok("build-jobs --kind names");
    const auto jobs = (root_ / "run" / "jobs" / "names.jsonl").string();
    ok("synth --answer '" + jobs + "'");

    // Drop the third result line.
    const auto results = root_ / "run" / "results" / "names" / "results.jsonl";
    std::istringstream in(slurp(results));
    std::string line, kept;
    for (int i = 0; std::getline(in, line); ++i) {
        if (i != 2) kept += line + "\n";
    }
    std::ofstream(results, std::ios::trunc) << kept;

    const auto r = run("aggregate --jobs '" + jobs + "'");
    EXPECT_EQ(r.code, 3);
    const auto e = error_of(r);
    EXPECT_EQ(e["error"], "incomplete");
    EXPECT_EQ(e["missing"], 1);
    EXPECT_EQ(e["first_missing"], "name:Syn0000#2");
}

TEST_F(Cli, MissingContextsNameTheWord) {
    ok("synth --names 5");
    const auto corpus = root_ / "corpus.txt";
    std::ofstream(corpus) << "she said hello.\nhe said hello.\n";
    const auto r = run("mine-contexts --corpus '" + corpus.string() + "'");
    EXPECT_EQ(r.code, 2);
    const auto e = error_of(r);
    EXPECT_EQ(e["error"], "no_contexts");
    EXPECT_EQ(e["word"], "her");
}

TEST_F(Cli, DownstreamCountOnly) {
    ok("synth --names 30 --bios-per-gender 5");
    const auto r = run("downstream --count-only");
    ASSERT_EQ(r.code, 0) << r.err;
    // 4 occupations x 2 genders x 5 bios, each paired with every name.
    EXPECT_EQ(nlohmann::json::parse(r.out)["jobs"], 30 * 40);
    EXPECT_FALSE(fs::exists(root_ / "run" / "jobs" / "downstream.jsonl"));

    const auto a = run("downstream --count-only --anonymized");
    EXPECT_EQ(nlohmann::json::parse(a.out)["jobs"], 40);
}

TEST_F(Cli, ExternalPairTableIsRecorded) {
    ok("synth --names 5");
    ok("mine-contexts --pairs '" + std::string(GENDIR_DATA_DIR) + "/gendered_pairs.csv'");
    const auto log = nlohmann::json::parse(slurp(root_ / "run" / "run.json"));
    const auto& inputs = log["steps"]["mine-contexts"]["inputs"];
    ASSERT_EQ(inputs.size(), 2u);
    EXPECT_EQ(inputs[0]["path"], "dumps/synthetic/corpus.txt");
    EXPECT_EQ(inputs[1]["path"], "external/gendered_pairs.csv");
    EXPECT_EQ(inputs[1]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, JsonAndTomlConfig) {
    const auto json = root_ / "c.json";
    std::ofstream(json) << R"({"seed": 11, "synth": {"names": 12, "dim": 16}})";
    ok("--config '" + json.string() + "' synth");
    auto log = nlohmann::json::parse(slurp(root_ / "run" / "run.json"));
    EXPECT_EQ(log["steps"]["synth"]["seed"], 11);
    EXPECT_EQ(log["steps"]["synth"]["params"]["dim"], 16);
    EXPECT_EQ(log["steps"]["synth"]["params"]["names"], 12);

    const auto toml = root_ / "c.toml";
    std::ofstream(toml) << "[synth]\ndim = 24\n";
    ok("--config '" + toml.string() + "' synth");
    log = nlohmann::json::parse(slurp(root_ / "run" / "run.json"));
    EXPECT_EQ(log["steps"]["synth"]["params"]["dim"], 24);

    const auto bad = root_ / "bad.json";
    std::ofstream(bad) << R"({"synth": {"bogus": 1}})";
    EXPECT_EQ(run("--config '" + bad.string() + "' synth").code, 2);
}

TEST_F(Cli, SyntheticChainProducesReports) {
    const auto dir = root_ / "run";
    chain(dir);
    for (const char* f : {"table1.csv", "table1_runs.csv", "pca.csv", "prior_p_female.csv", "name_correlation.csv",
                          "correlation.csv", "context_shift.csv", "context_shift_dot.csv", "downstream_scatter.csv",
                          "bias_report.csv", "bias_heatmap.csv", "bias_heatmap.svg", "scatter/nurse_tpr.svg"}) {
        EXPECT_TRUE(fs::exists(dir / "reports" / f)) << f;
    }
    const auto meta = nlohmann::json::parse(slurp(dir / "dumps" / "direction" / "direction.json"));
    EXPECT_GE(meta["cos_planted_axis"].get<double>(), 0.99);
    EXPECT_GE(meta["evr_first"].get<double>(), 0.9);

    const auto log = nlohmann::json::parse(slurp(dir / "run.json"));
    EXPECT_EQ(log["version"], 1);
    EXPECT_TRUE(log["steps"].contains("downstream"));
    EXPECT_TRUE(log["steps"].contains("report:all"));

    const auto heat = slurp(dir / "reports" / "bias_heatmap.csv");
    EXPECT_EQ(heat.substr(0, heat.find('\n')),
              "occupation,pct_female_bios,bias_coefficient,bias_marker,internal_coefficient,internal_marker");
}

TEST_F(Cli, ReportWithoutInputs) {
    const auto r = run("report --fig heatmap");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(error_of(r)["error"], "validation");
}
