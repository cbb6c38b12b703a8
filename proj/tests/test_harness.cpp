#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sct/core/rng.hpp"
#include "sct/harness/cli.hpp"
#include "sct/harness/harness.hpp"
#include "sct/nn/checkpoint.hpp"
#include "sct/volume/intensity.hpp"

using namespace sct;
using namespace sct::harness;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "sct_test_harness" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return rc;
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.steps = 0;
    c.patches_per_subject = 10;
    return c;
}

}  // namespace

TEST(Phantom, Deterministic) {
    PhantomSpec s;
    s.seed = 17;
    const Phantom a = make_phantom(s), b = make_phantom(s);
    EXPECT_TRUE(std::equal(a.mr1.data().begin(), a.mr1.data().end(), b.mr1.data().begin()));
    EXPECT_TRUE(std::equal(a.mr2.data().begin(), a.mr2.data().end(), b.mr2.data().begin()));
    EXPECT_TRUE(std::equal(a.ct.data().begin(), a.ct.data().end(), b.ct.data().begin()));
    EXPECT_EQ(a.skull, b.skull);
    EXPECT_EQ(a.brain, b.brain);
    s.seed = 18;
    EXPECT_NE(make_phantom(s).skull, a.skull);
}

TEST(Phantom, SkullMaskMatchesThreshold) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PhantomSpec s;
        s.seed = seed;
        const Phantom p = make_phantom(s);
        EXPECT_EQ(skull_mask_from_ct(p.ct, 300.0f).mask, p.skull);
        EXPECT_GT(p.skull.count(), 1000u);
        EXPECT_GT(p.brain.count(), 1000u);
        EXPECT_TRUE(mask_intersection(p.skull, p.brain).empty());
        for (std::size_t i = 0; i < p.ct.size(); ++i) {
            if (p.skull[i]) {
                EXPECT_GE(p.ct[i], 800.0f);
                EXPECT_LE(p.ct[i], 1900.0f);
            } else if (p.brain[i]) {
                EXPECT_GE(p.ct[i], 0.0f);
                EXPECT_LE(p.ct[i], 80.0f);
            } else {
                EXPECT_EQ(p.ct[i], -1000.0f);
            }
        }
    }
}

TEST(Phantom, NoiselessContrastIsPiecewiseConstant) {
    PhantomSpec s;
    s.noise_mr1 = 0.0;
    s.noise_mr2 = 0.0;
    const Phantom p = make_phantom(s);
    const std::set<float> values(p.mr1.data().begin(), p.mr1.data().end());
    EXPECT_LE(values.size(), 3u);
    // mr2 grows with bone density inside the skull.
    for (std::size_t i = 0; i < p.ct.size(); ++i)
        for (std::size_t j : {i + 1, i + 32}) {
            if (j >= p.ct.size() || !p.skull[i] || !p.skull[j]) continue;
            if (p.ct[i] < p.ct[j]) EXPECT_LE(p.mr2[i], p.mr2[j]);
        }
}

TEST(Phantom, InvalidSpecs) {
    PhantomSpec s;
    s.dims = {8, 8, 8};
    EXPECT_THROW(make_phantom(s), HarnessError);
    s = {};
    s.shell_thickness = 0;
    EXPECT_THROW(make_phantom(s), HarnessError);
    s = {};
    s.noise_mr1 = -1;
    EXPECT_THROW(make_phantom(s), HarnessError);
}

TEST(Split, KnownSizes) {
    const Split a = split_subjects(37, 1);
    EXPECT_EQ(a.train.size(), 30u);
    EXPECT_EQ(a.val.size(), 3u);
    EXPECT_EQ(a.test.size(), 4u);
    const Split b = split_subjects(10, 1);
    EXPECT_EQ(b.train.size(), 8u);
    EXPECT_EQ(b.val.size(), 1u);
    EXPECT_EQ(b.test.size(), 1u);
    EXPECT_THROW(split_subjects(3, 1), HarnessError);
}

TEST(Split, PartitionProperty) {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 10 + rng.index(91);
        const Split s = split_subjects(n, rng.next_u64());
        std::vector<int> seen(n, 0);
        for (const auto* part : {&s.train, &s.val, &s.test})
            for (auto i : *part) ++seen[i];
        for (int c : seen) EXPECT_EQ(c, 1);
        EXPECT_EQ(split_from_json(to_json(s)).test, s.test);
    }
    EXPECT_NE(split_subjects(20, 1).test, split_subjects(20, 2).test);
}

TEST(Config, JsonRoundTripAndOverrides) {
    ExperimentConfig c;
    c.steps = 123;
    c.loss.lambda = 0.25;
    c.modalities = {"mr1"};
    const auto j = to_json(c);
    EXPECT_EQ(to_json(config_from_json(j)).dump(), j.dump());
    const auto o = config_from_json(nlohmann::json::parse(R"({"adam": {"lr": 0.01}, "patch": 8})"), c);
    EXPECT_EQ(o.adam.lr, 0.01);
    EXPECT_EQ(o.patch, 8);
    EXPECT_EQ(o.steps, 123u);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"stepz": 1})")), HarnessError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"loss": {"lamda": 1}})")), HarnessError);
    ExperimentConfig bad;
    bad.split_ratios = {0.5, 0.1, 0.1};
    EXPECT_THROW(bad.validate(), HarnessError);
    bad = {};
    bad.modalities = {"mr2"};
    EXPECT_THROW(bad.validate(), HarnessError);
}

TEST(Training, ZeroStepsGivesInitialModelsAndHonorsStrata) {
    const ExperimentConfig c = small_config();
    std::vector<Subject> subjects;
    for (std::size_t i = 0; i < 3; ++i) subjects.push_back(subject_from_phantom(subject_id(i), make_phantom(c.phantom_spec(i)), c));
    std::ostringstream sampling;
    const Models m = run_training(c, subjects, nullptr, &sampling);
    const Models init = initial_models(c);
    EXPECT_EQ(m.seg, init.seg);
    EXPECT_EQ(m.reg, init.reg);
    EXPECT_EQ(m.seg.desc.in_channels, 2);
    EXPECT_EQ(m.reg.desc.in_channels, 3);

    std::istringstream lines(sampling.str());
    std::string line;
    int records = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        ++records;
        EXPECT_EQ(j["n"], 10);
        if (j["pipeline"] == "regression") {
            EXPECT_EQ(j["skull"], 10);
        } else {
            EXPECT_EQ(j["skull"], 8);
            EXPECT_EQ(j["other"], 2);
        }
    }
    EXPECT_EQ(records, 6);
}

TEST(TrainingSet, RegressionSamplesCount) {
    ExperimentConfig c = small_config();
    c.patches_per_subject = 100;
    std::vector<Subject> subjects;
    for (std::size_t i = 0; i < 30; ++i) subjects.push_back(subject_from_phantom(subject_id(i), make_phantom(c.phantom_spec(i)), c));
    const auto set = build_training_set(c, subjects);
    EXPECT_EQ(set.regression.size(), 3000u);
    EXPECT_EQ(set.segmentation.size(), 3000u);
}

TEST(Synthesis, UntrainedModelsGiveValidMaskedOutput) {
    ExperimentConfig c = small_config();
    c.step = 8;
    const Subject s = subject_from_phantom("sub-01", make_phantom(c.phantom_spec(0)), c);
    const Models m = initial_models(c);
    const Synthesis a = run_synthesis(m, s, c);
    EXPECT_EQ(a.sct.dims(), s.ct.dims());
    EXPECT_EQ(a.sct.domain(), Domain::NORM_CT);
    for (std::size_t i = 0; i < a.sct.size(); ++i) {
        EXPECT_TRUE(std::isfinite(a.sct[i]));
        if (!a.skull[i]) EXPECT_EQ(a.sct[i], 0.0f);
    }
    c.workers = 3;
    const Synthesis b = run_synthesis(m, s, c);
    EXPECT_TRUE(std::equal(a.sct.data().begin(), a.sct.data().end(), b.sct.data().begin()));
    EXPECT_EQ(a.skull, b.skull);

    ExperimentConfig single = c;
    single.modalities = {"mr1"};
    EXPECT_THROW(run_synthesis(m, subject_from_phantom("sub-01", make_phantom(c.phantom_spec(0)), single), single),
                 HarnessError);
}

TEST(Synthesis, StepSizeHasSmallBorderEffect) {
    ExperimentConfig c;
    c.steps = 300;
    c.subjects = 10;
    std::vector<Subject> train;
    for (std::size_t i = 0; i < 4; ++i) train.push_back(subject_from_phantom(subject_id(i), make_phantom(c.phantom_spec(i)), c));
    const Models m = run_training(c, train);
    const Subject test = subject_from_phantom("sub-10", make_phantom(c.phantom_spec(9)), c);
    c.step = c.patch;
    const Volume coarse = run_synthesis(m, test, c).regression;
    c.step = c.patch / 2;
    const Volume fine = run_synthesis(m, test, c).regression;
    double mae = 0;
    for (std::size_t i = 0; i < fine.size(); ++i) mae += std::abs(fine[i] - coarse[i]);
    EXPECT_LT(mae / static_cast<double>(fine.size()), 0.05);
}

TEST(Cli, PhantomIsByteIdentical) {
    const fs::path a = fresh_dir("cli_a"), b = fresh_dir("cli_b");
    ASSERT_EQ(cli({"phantom", "--out", a.string(), "--n", "8", "--seed", "7"}), 0);
    ASSERT_EQ(cli({"phantom", "--out", b.string(), "--n", "8", "--seed", "7"}), 0);
    const auto ta = tree(a), tb = tree(b);
    EXPECT_EQ(ta.size(), 8u * 5 + 1);
    EXPECT_EQ(ta, tb);
}

TEST(Cli, EvaluateIdentityAndSelfCompare) {
    const fs::path run = fresh_dir("cli_eval");
    ASSERT_EQ(cli({"phantom", "--out", run.string(), "--n", "10", "--seed", "3"}), 0);
    std::string text;
    ASSERT_EQ(cli({"evaluate", "--run", run.string(), "--pred", "ct", "--pred-mask", "skull", "--name", "ident"}, &text), 0)
        << text;
    const auto j = nlohmann::json::parse(slurp(run / "reports" / "ident.json"));
    EXPECT_EQ(j["mean"]["dice"], 1.0);
    EXPECT_EQ(j["mean"]["psnr_db"], "inf");
    EXPECT_LT(j["mean"]["mae_skull_hu"].get<double>(), 1e-3);
    EXPECT_TRUE(fs::exists(run / "reports" / "ident.txt"));

    const auto report = (run / "reports" / "ident.json").string();
    ASSERT_EQ(cli({"compare", "--a", report, "--b", report, "--out", (run / "reports" / "self").string()}), 0);
    const auto c = nlohmann::json::parse(slurp(run / "reports" / "self.json"));
    for (const auto& [name, t] : c["tests"].items()) EXPECT_EQ(t["p"], 1.0) << name;
}

TEST(Cli, TrainSynthesizeEvaluateWritesRunLayout) {
    const fs::path run = fresh_dir("cli_run");
    ASSERT_EQ(cli({"phantom", "--out", run.string(), "--n", "10", "--seed", "1"}), 0);
    ASSERT_EQ(cli({"split", "--run", run.string()}), 0);
    ASSERT_EQ(cli({"train", "--run", run.string(), "--steps", "3", "--set", "patches_per_subject=5"}), 0);
    ASSERT_EQ(cli({"synthesize", "--run", run.string(), "--step", "8"}), 0);
    ASSERT_EQ(cli({"evaluate", "--run", run.string()}), 0);
    for (const char* f : {"config.json", "split.json", "checkpoints/seg.json", "checkpoints/seg.bin", "checkpoints/reg.json",
                          "checkpoints/reg.bin", "logs/train.jsonl", "logs/sampling.jsonl", "reports/report.json",
                          "reports/report.txt"})
        EXPECT_TRUE(fs::exists(run / f)) << f;
    const auto cfg = nlohmann::json::parse(slurp(run / "config.json"));
    EXPECT_EQ(cfg["steps"], 3);
    EXPECT_EQ(cfg["patches_per_subject"], 5);
    EXPECT_EQ(cfg["step"], 8);
    std::ifstream log(run / "logs" / "train.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) ++lines;
    EXPECT_EQ(lines, 3);
    EXPECT_EQ(nn::load_checkpoint(run / "checkpoints" / "reg").desc.in_channels, 3);
}

TEST(Cli, ErrorsExitNonZero) {
    EXPECT_NE(cli({}), 0);
    EXPECT_NE(cli({"frobnicate"}), 0);
    EXPECT_NE(cli({"phantom", "--out", fresh_dir("cli_err").string(), "--bogus", "1"}), 0);
    EXPECT_NE(cli({"train", "--run", (fs::temp_directory_path() / "sct_missing_run").string()}), 0);
    EXPECT_NE(cli({"phantom", "--out", fresh_dir("cli_err2").string(), "--set", "nonsense=1"}), 0);
}

TEST(Cli, BinaryRuns) {
    const std::string cmd = std::string(SCT_CLI_PATH) + " phantom --out " + fresh_dir("cli_bin").string() + " --n 3 > /dev/null";
    EXPECT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_NE(std::system((std::string(SCT_CLI_PATH) + " nope > /dev/null 2>&1").c_str()), 0);
}
