#include "semgap/app/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "semgap/error.hpp"

namespace semgap::app {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

SplitPaths parse_split(const nlohmann::json& j, const fs::path& base, Task task, const std::string& name) {
    SplitPaths s;
    if (j.is_string()) {
        s.data = resolve(base, j.get<std::string>());
    } else if (j.is_object() && j.contains("data")) {
        s.data = resolve(base, j.at("data").get<std::string>());
        if (j.contains("gold")) s.gold = resolve(base, j.at("gold").get<std::string>());
    } else {
        throw ParseError("manifest: split '" + name + "' of " + std::string(to_string(task)) +
                         " must be a path or {data, gold}");
    }
    if (task == Task::Wic && !s.gold) {
        throw ParseError("manifest: WiC split '" + name + "' needs a gold file");
    }
    return s;
}

}  // namespace

const ModelSpec& RunManifest::model(const std::string& id) const {
    const auto it = std::find_if(models.begin(), models.end(), [&](const ModelSpec& m) { return m.id == id; });
    if (it == models.end()) throw InvalidArgument("model '" + id + "' is not declared in the manifest");
    return *it;
}

bool RunManifest::has_split(Task task, const std::string& name) const {
    const auto it = datasets.find(task);
    return it != datasets.end() && it->second.contains(name);
}

const SplitPaths& RunManifest::split(Task task, const std::string& name) const {
    if (!has_split(task, name)) {
        throw MissingInputError("manifest has no " + name + " split for task " + std::string(to_string(task)),
                                std::string(to_string(task)) + "/" + name);
    }
    return datasets.at(task).at(name);
}

RunManifest parse_manifest(const std::string& text, const fs::path& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("manifest: invalid JSON: ") + e.what());
    }

    RunManifest m;
    try {
        for (const auto& model : j.at("models")) {
            ModelSpec spec;
            spec.id = model.at("id").get<std::string>();
            if (!model.contains("family")) throw ParseError("manifest: model '" + spec.id + "' has no family");
            spec.family = parse_family(model.at("family").get<std::string>());
            m.models.push_back(std::move(spec));
        }
        if (j.contains("tasks")) {
            for (const auto& t : j.at("tasks")) m.tasks.push_back(parse_task(t.get<std::string>()));
        }
        if (j.contains("datasets")) {
            for (const auto& [task_name, splits] : j.at("datasets").items()) {
                const Task task = parse_task(task_name);
                for (const auto& [split_name, value] : splits.items()) {
                    m.datasets[task][split_name] = parse_split(value, base_dir, task, split_name);
                }
            }
        }
        if (j.contains("contexts")) m.contexts = resolve(base_dir, j.at("contexts").get<std::string>());
        m.prompt_bank = resolve(base_dir, j.at("prompt_bank").get<std::string>());
        m.archive_dir = resolve(base_dir, j.at("archive_dir").get<std::string>());
        if (j.contains("output_dir")) m.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
        m.seed = j.value("seed", std::uint64_t{0});
        m.calibration_bins = j.value("calibration_bins", std::size_t{10});
        if (j.contains("probe")) {
            const auto& p = j.at("probe");
            m.train.learning_rate = p.value("learning_rate", m.train.learning_rate);
            m.train.max_epochs = p.value("max_epochs", m.train.max_epochs);
            m.train.l2_lambda = p.value("l2_lambda", m.train.l2_lambda);
            m.train.early_stop_patience = p.value("early_stop_patience", m.train.early_stop_patience);
            m.train.tolerance = p.value("tolerance", m.train.tolerance);
            m.train.standardize = p.value("standardize", m.train.standardize);
            m.holdout_fraction = p.value("holdout_fraction", m.holdout_fraction);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    m.train.seed = m.seed;
    if (m.models.empty()) throw ParseError("manifest: no models declared");
    if (m.calibration_bins == 0) throw ParseError("manifest: calibration_bins must be positive");
    return m;
}

RunManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("manifest not found: " + path.string(), path.string());
    std::ostringstream text;
    text << in.rdbuf();
    RunManifest m = parse_manifest(text.str(), path.parent_path());
    m.source = path;
    return m;
}

void check_manifest_paths(const RunManifest& manifest) {
    auto need = [](const fs::path& p, const std::string& what) {
        if (!fs::exists(p)) throw MissingInputError(what + " not found: " + p.string(), p.string());
    };
    need(manifest.prompt_bank, "prompt bank");
    if (manifest.contexts) need(*manifest.contexts, "context bank");
    for (const auto& [task, splits] : manifest.datasets) {
        for (const auto& [name, paths] : splits) {
            need(paths.data, std::string(to_string(task)) + " " + name + " data");
            if (paths.gold) need(*paths.gold, std::string(to_string(task)) + " " + name + " gold");
        }
    }
}

std::string file_safe(const std::string& model_id) {
    std::string out = model_id;
    std::replace(out.begin(), out.end(), '/', '_');
    return out;
}

fs::path hidden_archive_path(const RunManifest& m, const std::string& model_id, Task task, const std::string& split) {
    return m.archive_dir / file_safe(model_id) / std::string(to_string(task)) / ("hidden_" + split + ".hsx");
}

fs::path logits_archive_path(const RunManifest& m, const std::string& model_id, Task task,
                             const std::string& template_id) {
    return m.archive_dir / file_safe(model_id) / std::string(to_string(task)) / ("logits_" + template_id + ".hsx");
}

fs::path error_manifest_path(const RunManifest& m, const std::string& model_id, Task task) {
    return m.archive_dir / file_safe(model_id) / std::string(to_string(task)) / "errors.jsonl";
}

}  // namespace semgap::app
