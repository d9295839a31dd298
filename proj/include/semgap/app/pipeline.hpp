#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semgap/app/manifest.hpp"
#include "semgap/corpus.hpp"
#include "semgap/eval.hpp"
#include "semgap/task.hpp"

namespace semgap::app {

// Stable process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitMissingInput = 2,
    kExitDataInvariant = 3,
    kExitInternal = 4,
};

int exit_code_for(const std::exception& e);

struct CommandOutput {
    EvalReport report;
    std::vector<std::filesystem::path> written;
};

// Build features, train on train (dev or a seeded holdout for early
// stopping), evaluate on test. Writes the eval report JSON, the calibration
// CSV and the serialized probe into the manifest's output directory.
CommandOutput run_probe(const RunManifest& manifest, Task task, const std::string& model_id);

// Score every template of the task from its logits archive, keep the best
// one (accuracy; F1 for NER) and write the report, calibration CSV and the
// per-instance scores as JSON lines.
CommandOutput run_query(const RunManifest& manifest, Task task, const std::string& model_id);

// Aggregate every eval_*.json in the output directory into results.{md,csv,tex},
// gap_summary.md and calibration_<model>_<method>.csv (WiC).
std::vector<std::filesystem::path> run_report(const RunManifest& manifest);

// Canonical JSON-lines dump of a corpus split.
void dump_corpus(Task task, const SplitPaths& paths, std::ostream& out);

// Loaders shared by the commands.
std::vector<WicInstance> load_wic(const SplitPaths& paths);
std::vector<NerSentence> load_conll(const std::filesystem::path& path);
std::vector<AnalogyQuestion> load_bats(const std::filesystem::path& path);

std::filesystem::path eval_report_path(const RunManifest& m, const std::string& model_id, Task task, Method method);

}  // namespace semgap::app
