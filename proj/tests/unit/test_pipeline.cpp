#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "semgap/app/manifest.hpp"
#include "semgap/app/pipeline.hpp"
#include "semgap/app/synthetic.hpp"
#include "semgap/error.hpp"
#include "semgap/tensorstore.hpp"
#include "test_support.hpp"

using namespace semgap;
using namespace semgap::app;
using semgap::testing::slurp;
using semgap::testing::TempDir;

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
    TempDir io("cli");
    const auto out = io.path() / "stdout", err = io.path() / "stderr";
    const std::string cmd = env + " " + SEMGAP_CLI + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

class Pipeline : public ::testing::Test {
protected:
    void SetUp() override {
        dir = std::make_unique<TempDir>("pipe");
        fx = write_synthetic_fixture(dir->path() / "run");
        manifest = load_manifest(fx.manifest);
    }
    std::unique_ptr<TempDir> dir;
    SyntheticFixture fx;
    RunManifest manifest;
};

}  // namespace

TEST(Manifest, ParsesSplitsAndOverrides) {
    const auto m = parse_manifest(R"({
        "models": [{"id": "org/bert", "family": "encoder"}, {"id": "gpt2", "family": "decoder"}],
        "datasets": {"wic": {"train": {"data": "a.txt", "gold": "a.gold"}}, "ner": {"test": "n.txt"}},
        "prompt_bank": "p.json", "archive_dir": "arch", "seed": 5,
        "probe": {"learning_rate": 0.05, "holdout_fraction": 0.2}
    })",
                                  "/base");
    EXPECT_EQ(m.models[0].family, ModelFamily::Encoder);
    EXPECT_EQ(m.split(Task::Wic, "train").data, fs::path("/base/a.txt"));
    EXPECT_EQ(m.split(Task::Ner, "test").data, fs::path("/base/n.txt"));
    EXPECT_EQ(m.train.learning_rate, 0.05);
    EXPECT_EQ(m.holdout_fraction, 0.2);
    EXPECT_EQ(m.seed, 5u);
    EXPECT_THROW(m.split(Task::Analogy, "test"), MissingInputError);
    EXPECT_EQ(hidden_archive_path(m, "org/bert", Task::Wic, "test"), fs::path("/base/arch/org_bert/wic/hidden_test.hsx"));
}

TEST(Manifest, Rejections) {
    EXPECT_THROW(parse_manifest("{", ""), ParseError);
    EXPECT_THROW(parse_manifest(R"({"models":[{"id":"m"}],"prompt_bank":"p","archive_dir":"a"})", ""), ParseError);
    EXPECT_THROW(parse_manifest(R"({"models":[{"id":"m","family":"rnn"}],"prompt_bank":"p","archive_dir":"a"})", ""),
                 ParseError);
    EXPECT_THROW(parse_manifest(R"({"models":[{"id":"m","family":"encoder"}],"prompt_bank":"p","archive_dir":"a",
                                    "datasets":{"wic":{"train":"only-data.txt"}}})",
                                ""),
                 ParseError);
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(MissingInputError("x", "p")), 2);
    EXPECT_EQ(exit_code_for(DataError("x")), 3);
    EXPECT_EQ(exit_code_for(ParseError("x")), 3);
    EXPECT_EQ(exit_code_for(CorruptionError("x")), 3);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), 4);
}

TEST_F(Pipeline, ProbeWicWritesThreeFiles) {
    const auto out = run_probe(manifest, Task::Wic, "synth-enc");
    EXPECT_EQ(out.written.size(), 3u);
    for (const auto& p : out.written) EXPECT_TRUE(fs::exists(p)) << p;
    EXPECT_GE(out.report.accuracy, 0.95);
    EXPECT_EQ(out.report.count, 100u);
    const auto probe = probe_from_archive(read_archive_file(manifest.output_dir / "probe_synth-enc_wic.hsx"));
    EXPECT_EQ(probe.num_classes, 2u);
    EXPECT_EQ(probe.feature_dim, 48u);
}

TEST_F(Pipeline, ProbeIsIdempotent) {
    run_probe(manifest, Task::Ner, "synth-dec");
    const auto first = slurp(manifest.output_dir / "probe_synth-dec_ner.hsx");
    const auto report = slurp(manifest.output_dir / "eval_synth-dec_ner_probe.json");
    run_probe(manifest, Task::Ner, "synth-dec");
    EXPECT_EQ(slurp(manifest.output_dir / "probe_synth-dec_ner.hsx"), first);
    EXPECT_EQ(slurp(manifest.output_dir / "eval_synth-dec_ner_probe.json"), report);
}

TEST_F(Pipeline, ProbeAllTasksHighAccuracy) {
    for (const auto& model : fx.models) {
        for (Task t : {Task::Wic, Task::Ner, Task::Analogy}) {
            EXPECT_GE(run_probe(manifest, t, model.id).report.accuracy, 0.95) << model.id << " " << to_string(t);
        }
    }
}

TEST_F(Pipeline, QueryRecoversPlantedWinnerAndAccuracy) {
    for (const auto& model : fx.models) {
        for (Task t : {Task::Wic, Task::Ner, Task::Analogy}) {
            const auto out = run_query(manifest, t, model.id);
            const auto& winner = fx.winner.at(model.id).at(t);
            ASSERT_TRUE(out.report.selected_template);
            EXPECT_EQ(*out.report.selected_template, winner);
            EXPECT_NEAR(out.report.accuracy, fx.planted.at(model.id).at(t).at(winner), 1e-12);
            EXPECT_EQ(out.report.per_template.size(), fx.planted.at(model.id).at(t).size());
        }
    }
}

TEST_F(Pipeline, QueryNerHasFullRecallShape) {
    const auto out = run_query(manifest, Task::Ner, "synth-enc");
    ASSERT_TRUE(out.report.ner);
    ASSERT_TRUE(out.report.confusion);
    // no O candidate: the O column of the confusion matrix is empty
    for (const auto& row : *out.report.confusion) EXPECT_EQ(row[4], 0u);
}

TEST_F(Pipeline, QueryMissingTemplateArchiveNamesTemplate) {
    fs::remove(logits_archive_path(manifest, "synth-enc", Task::Wic, "wic-b"));
    try {
        run_query(manifest, Task::Wic, "synth-enc");
        FAIL();
    } catch (const MissingInputError& e) {
        EXPECT_NE(std::string(e.what()).find("wic-b"), std::string::npos);
    }
}

TEST_F(Pipeline, QuerySingleTemplateBank) {
    std::ofstream(manifest.prompt_bank) << R"([{"id":"wic-c","task":"wic","body":"{sentence1} {sentence2} [MASK]"}])";
    const auto out = run_query(manifest, Task::Wic, "synth-enc");
    EXPECT_EQ(*out.report.selected_template, "wic-c");
}

TEST_F(Pipeline, ProbeMissingArchive) {
    fs::remove(hidden_archive_path(manifest, "synth-enc", Task::Analogy, "test"));
    EXPECT_THROW(run_probe(manifest, Task::Analogy, "synth-enc"), MissingInputError);
}

TEST_F(Pipeline, SkippedRecordsListedAreDropped) {
    TempDir other("skip");
    SyntheticOptions opt;
    opt.skip_one_wic_record = true;
    const auto f = write_synthetic_fixture(other.path(), opt);
    const auto m = load_manifest(f.manifest);
    EXPECT_EQ(run_probe(m, Task::Wic, "synth-enc").report.count, 99u);
    // the same gap without an errors.jsonl entry is a data error
    fs::remove(error_manifest_path(m, "synth-enc", Task::Wic));
    EXPECT_THROW(run_probe(m, Task::Wic, "synth-enc"), DataError);
}

TEST_F(Pipeline, ReportAggregates) {
    for (const auto& model : fx.models) {
        run_probe(manifest, Task::Wic, model.id);
        run_query(manifest, Task::Wic, model.id);
    }
    const auto written = run_report(manifest);
    for (const char* f : {"results.md", "results.csv", "results.tex", "gap_summary.md", "calibration_synth-enc_probe.csv",
                          "calibration_synth-dec_query.csv"}) {
        EXPECT_TRUE(fs::exists(manifest.output_dir / f)) << f;
    }
    const auto md = slurp(manifest.output_dir / "results.md");
    EXPECT_LT(md.find("synth-enc | Query"), md.find("synth-enc | Probe"));
    EXPECT_LT(md.find("synth-enc"), md.find("synth-dec"));
    const auto again = slurp(manifest.output_dir / "results.tex");
    run_report(manifest);
    EXPECT_EQ(slurp(manifest.output_dir / "results.tex"), again);
}

TEST_F(Pipeline, ReportEmptyDirectory) { EXPECT_THROW(run_report(manifest), MissingInputError); }

TEST_F(Pipeline, CorpusDumpIsCanonical) {
    std::ostringstream a, b;
    dump_corpus(Task::Analogy, manifest.split(Task::Analogy, "test"), a);
    dump_corpus(Task::Analogy, manifest.split(Task::Analogy, "test"), b);
    const auto text = a.str();
    EXPECT_EQ(text, b.str());
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 50);
}

TEST_F(Pipeline, CliExitCodes) {
    const std::string m = "--manifest " + fx.manifest.string();
    auto ok = run_cli("probe " + m + " --task wic --model synth-enc");
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_NE(ok.out.find("probe synth-enc wic"), std::string::npos);

    fs::remove(hidden_archive_path(manifest, "synth-dec", Task::Wic, "test"));
    auto missing = run_cli("probe " + m + " --task wic --model synth-dec");
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("hidden_test.hsx"), std::string::npos) << missing.err;

    // corrupt payload value -> data invariant violation
    const auto bad = hidden_archive_path(manifest, "synth-enc", Task::Ner, "test");
    auto bytes = slurp(bad);
    for (int i = 1; i <= 4; ++i) bytes[bytes.size() - static_cast<std::size_t>(i)] = i == 1 ? '\x7f' : '\xff';
    std::ofstream(bad, std::ios::binary | std::ios::trunc) << bytes;
    EXPECT_EQ(run_cli("probe " + m + " --task ner --model synth-enc").code, 3);

    EXPECT_EQ(run_cli("probe --manifest " + (dir->path() / "nope.json").string()).code, 2);
    EXPECT_EQ(run_cli("frobnicate").code, 2);
}

TEST_F(Pipeline, CliOutputDirectoryPrecedence) {
    const std::string m = "--manifest " + fx.manifest.string();
    const auto env_dir = dir->path() / "env-out", flag_dir = dir->path() / "flag-out";
    EXPECT_EQ(run_cli("query " + m + " --task wic --model synth-enc", "SEMGAP_OUT=" + env_dir.string()).code, 0);
    EXPECT_TRUE(fs::exists(env_dir / "eval_synth-enc_wic_query.json"));
    EXPECT_EQ(run_cli("query " + m + " --task wic --model synth-enc --out " + flag_dir.string(),
                      "SEMGAP_OUT=" + env_dir.string())
                  .code,
              0);
    EXPECT_TRUE(fs::exists(flag_dir / "eval_synth-enc_wic_query.json"));
    EXPECT_FALSE(fs::exists(manifest.output_dir / "eval_synth-enc_wic_query.json"));
    EXPECT_EQ(run_cli("report " + m + " --out " + flag_dir.string()).code, 0);
    EXPECT_TRUE(fs::exists(flag_dir / "results.md"));
    EXPECT_EQ(run_cli("report " + m + " --out " + (dir->path() / "empty").string()).code, 2);
}

TEST_F(Pipeline, CliCorpusDump) {
    const auto out = dir->path() / "dump.jsonl";
    const auto r = run_cli("corpus dump --task wic --data " + manifest.split(Task::Wic, "test").data.string() + " --gold " +
                           manifest.split(Task::Wic, "test").gold->string() + " --out " + out.string());
    EXPECT_EQ(r.code, 0) << r.err;
    const auto text = slurp(out);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 100);
    EXPECT_EQ(text.rfind("{\"id\":\"0\"", 0), 0u);
}

TEST_F(Pipeline, CliExtractWithoutSidecar) {
    const auto r = run_cli("extract --manifest x.json --job j", "PATH=/nonexistent");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("semgap-extract"), std::string::npos);
}

TEST_F(Pipeline, CliExtractDelegatesToSidecar) {
    const auto bin = dir->path() / "bin";
    fs::create_directories(bin);
    const auto script = bin / "semgap-extract";
    std::ofstream(script) << "#!/bin/sh\necho \"$@\" > \"" << (dir->path() / "args.txt").string() << "\"\nexit 0\n";
    fs::permissions(script, fs::perms::owner_all);
    const auto r = run_cli("extract --manifest m.json --job hidden-wic", "PATH=" + bin.string() + ":/usr/bin:/bin");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir->path() / "args.txt"), "--manifest m.json --job hidden-wic\n");
}
