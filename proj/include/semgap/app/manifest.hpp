#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semgap/probe.hpp"
#include "semgap/task.hpp"

namespace semgap::app {

struct ModelSpec {
    std::string id;
    ModelFamily family = ModelFamily::Encoder;
};

// WiC splits use both paths; the other tasks only `data`.
struct SplitPaths {
    std::filesystem::path data;
    std::optional<std::filesystem::path> gold;
};

using TaskSplits = std::map<std::string, SplitPaths>;  // "train" / "dev" / "test"

struct RunManifest {
    std::filesystem::path source;  // manifest file, when loaded from disk
    std::vector<ModelSpec> models;
    std::vector<Task> tasks;
    std::map<Task, TaskSplits> datasets;
    std::optional<std::filesystem::path> contexts;
    std::filesystem::path prompt_bank;
    std::filesystem::path archive_dir;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    std::size_t calibration_bins = 10;
    double holdout_fraction = 0.1;
    TrainConfig train;

    const ModelSpec& model(const std::string& id) const;
    // Throws MissingInputError when the split is not configured.
    const SplitPaths& split(Task task, const std::string& name) const;
    bool has_split(Task task, const std::string& name) const;
};

// JSON manifest; relative paths resolve against the manifest's directory.
RunManifest load_manifest(const std::filesystem::path& path);
RunManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);

// Dataset files and prompt bank must exist (MissingInputError otherwise).
void check_manifest_paths(const RunManifest& manifest);

// Archive locations shared with the extraction sidecar.
std::filesystem::path hidden_archive_path(const RunManifest& m, const std::string& model_id, Task task,
                                          const std::string& split);
std::filesystem::path logits_archive_path(const RunManifest& m, const std::string& model_id, Task task,
                                          const std::string& template_id);
std::filesystem::path error_manifest_path(const RunManifest& m, const std::string& model_id, Task task);

// Model ids may contain '/', which is replaced for use in file names.
std::string file_safe(const std::string& model_id);

}  // namespace semgap::app
