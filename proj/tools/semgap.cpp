#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semgap/app/manifest.hpp"
#include "semgap/app/pipeline.hpp"
#include "semgap/error.hpp"

namespace fs = std::filesystem;
using namespace semgap;
using namespace semgap::app;

namespace {

constexpr const char* kExtractor = "semgap-extract";

std::optional<fs::path> find_on_path(const std::string& name) {
    const char* path = std::getenv("PATH");
    if (path == nullptr) return std::nullopt;
    std::stringstream dirs(path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        const fs::path candidate = fs::path(dir) / name;
        if (fs::is_regular_file(candidate) && ::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    return std::nullopt;
}

int run_extractor(const std::string& manifest, const std::string& job) {
    const auto exe = find_on_path(kExtractor);
    if (!exe) {
        std::cerr << "error: " << kExtractor << " is not installed (not found on PATH)\n";
        return kExitMissingInput;
    }
    std::vector<std::string> args = {exe->string(), "--manifest", manifest, "--job", job};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    std::cout.flush();
    const pid_t pid = ::fork();
    if (pid < 0) {
        std::cerr << "error: cannot start " << kExtractor << "\n";
        return kExitInternal;
    }
    if (pid == 0) {
        ::execv(argv[0], argv.data());
        std::_Exit(127);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return kExitInternal;
}

// Output directory precedence: --out flag, then SEMGAP_OUT, then the manifest.
RunManifest open_manifest(const std::string& path, const std::string& out_flag) {
    RunManifest m = load_manifest(path);
    if (!out_flag.empty()) {
        m.output_dir = out_flag;
    } else if (const char* env = std::getenv("SEMGAP_OUT"); env != nullptr && *env != '\0') {
        m.output_dir = env;
    }
    return m;
}

std::vector<Task> tasks_for(const RunManifest& m, const std::string& task) {
    if (!task.empty()) return {parse_task(task)};
    if (!m.tasks.empty()) return m.tasks;
    std::vector<Task> all;
    for (const auto& [t, splits] : m.datasets) all.push_back(t);
    return all;
}

std::vector<std::string> models_for(const RunManifest& m, const std::string& model) {
    if (!model.empty()) return {model};
    std::vector<std::string> ids;
    for (const auto& spec : m.models) ids.push_back(spec.id);
    return ids;
}

void print_summary(const CommandOutput& out) {
    const auto& r = out.report;
    std::cout << to_string(r.method) << ' ' << r.model_id << ' ' << to_string(r.task) << " n=" << r.count
              << " accuracy=" << r.accuracy;
    if (r.ner) std::cout << " f1=" << r.ner->f1;
    if (r.selected_template) std::cout << " template=" << *r.selected_template;
    std::cout << " ece=" << r.calibration.ece << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probe-versus-query evaluation of language-model representations"};
    app.require_subcommand(1);

    std::string manifest_path, task_name, model_id, out_dir;

    auto* corpus = app.add_subcommand("corpus", "Dataset utilities");
    corpus->require_subcommand(1);
    auto* dump = corpus->add_subcommand("dump", "Write a dataset split as canonical JSON lines");
    std::string data_path, gold_path, dump_out;
    dump->add_option("--task", task_name, "wic | ner | analogy")->required();
    dump->add_option("--data", data_path, "Dataset file")->required();
    dump->add_option("--gold", gold_path, "WiC gold labels file");
    dump->add_option("--out", dump_out, "Output file (stdout when omitted)");

    auto add_run_options = [&](CLI::App* cmd, bool per_task) {
        cmd->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
        cmd->add_option("--out", out_dir, "Output directory (overrides SEMGAP_OUT and the manifest)");
        if (per_task) {
            cmd->add_option("--task", task_name, "wic | ner | analogy (all manifest tasks when omitted)");
            cmd->add_option("--model", model_id, "Model id (all manifest models when omitted)");
        }
    };
    auto* probe = app.add_subcommand("probe", "Train and evaluate linear probes on hidden-state archives");
    add_run_options(probe, true);
    auto* query = app.add_subcommand("query", "Score prompt templates from answer-slot logit archives");
    add_run_options(query, true);
    auto* report = app.add_subcommand("report", "Aggregate eval reports into result tables");
    add_run_options(report, false);

    auto* extract = app.add_subcommand("extract", "Run the extraction sidecar (semgap-extract)");
    std::string job;
    extract->add_option("--manifest", manifest_path, "Extraction manifest")->required();
    extract->add_option("--job", job, "Job name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitMissingInput;
    }

    try {
        if (*dump) {
            const Task task = parse_task(task_name);
            SplitPaths paths{data_path, std::nullopt};
            if (!gold_path.empty()) paths.gold = fs::path(gold_path);
            if (dump_out.empty()) {
                dump_corpus(task, paths, std::cout);
            } else {
                std::ostringstream buffer;
                dump_corpus(task, paths, buffer);
                if (fs::path(dump_out).has_parent_path()) fs::create_directories(fs::path(dump_out).parent_path());
                std::ofstream file(dump_out, std::ios::binary | std::ios::trunc);
                if (!file) throw Error("cannot write " + dump_out);
                file << buffer.str();
            }
            return kExitOk;
        }
        if (*extract) return run_extractor(manifest_path, job);

        const RunManifest manifest = open_manifest(manifest_path, out_dir);
        if (*report) {
            for (const auto& p : run_report(manifest)) std::cout << "wrote " << p.string() << '\n';
            return kExitOk;
        }
        check_manifest_paths(manifest);
        const bool is_probe = probe->parsed();
        for (const Task task : tasks_for(manifest, task_name)) {
            for (const auto& id : models_for(manifest, model_id)) {
                print_summary(is_probe ? run_probe(manifest, task, id) : run_query(manifest, task, id));
            }
        }
        return kExitOk;
    } catch (const MissingInputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitMissingInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}
