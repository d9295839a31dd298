#include "semgap/app/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "semgap/error.hpp"
#include "semgap/features.hpp"
#include "semgap/probe.hpp"
#include "semgap/query.hpp"
#include "semgap/report.hpp"
#include "semgap/tensorstore.hpp"

namespace semgap::app {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw MissingInputError(what + " not found: " + path.string(), path.string());
    return in;
}

void write_text(const fs::path& path, const std::string& text, std::vector<fs::path>& written) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
    written.push_back(path);
}

std::string stem_for(const std::string& model_id, Task task) {
    return file_safe(model_id) + "_" + std::string(to_string(task));
}

// Hidden-state archive plus the records the extractor reported as skipped.
class VectorSource {
public:
    VectorSource(const RunManifest& m, const std::string& model_id, Task task, const std::string& split)
        : archive_(read_archive_file(hidden_archive_path(m, model_id, task, split))) {
        const auto& md = archive_.metadata();
        hidden_size_ = std::stoul(md.at("hidden_size"));
        const fs::path errors = error_manifest_path(m, model_id, task);
        if (fs::exists(errors)) {
            std::ifstream in(errors);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_object() && j.contains("record") && j["record"].is_string()) {
                    skipped_.insert(j["record"].get<std::string>());
                }
            }
        }
    }

    // nullopt when the extractor skipped the record; DataError when it is
    // simply absent.
    std::optional<WordVector> word(const std::string& name) const {
        const TensorRecord* r = archive_.find(name);
        if (r == nullptr) {
            if (skipped_.contains(name)) return std::nullopt;
            throw DataError("hidden-state record '" + name + "' missing and not listed as skipped");
        }
        const std::size_t dim = r->shape.back();
        if (dim != hidden_size_ || r->shape.size() > 2) {
            throw DataError("record '" + name + "' has shape inconsistent with hidden_size " +
                            std::to_string(hidden_size_));
        }
        if (r->shape.size() == 1) {
            WordVector v;
            v.values.assign(r->data.begin(), r->data.end());
            return v;
        }
        std::vector<Vector> tokens(r->shape[0]);
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            tokens[t].assign(r->data.begin() + static_cast<std::ptrdiff_t>(t * dim),
                             r->data.begin() + static_cast<std::ptrdiff_t>((t + 1) * dim));
        }
        return average_token_vectors(tokens);
    }

    // Rows of a [n, D] record (one averaged vector per word of a sentence).
    std::optional<std::vector<WordVector>> sentence(const std::string& name, std::size_t words) const {
        const TensorRecord* r = archive_.find(name);
        if (r == nullptr) {
            if (skipped_.contains(name)) return std::nullopt;
            throw DataError("hidden-state record '" + name + "' missing and not listed as skipped");
        }
        if (r->shape.size() != 2 || r->shape[0] != words || r->shape[1] != hidden_size_) {
            throw DataError("record '" + name + "' should have shape [" + std::to_string(words) + ", " +
                            std::to_string(hidden_size_) + "]");
        }
        std::vector<WordVector> out(words);
        for (std::size_t t = 0; t < words; ++t) {
            out[t].values.assign(r->data.begin() + static_cast<std::ptrdiff_t>(t * hidden_size_),
                                 r->data.begin() + static_cast<std::ptrdiff_t>((t + 1) * hidden_size_));
        }
        return out;
    }

    std::size_t hidden_size() const { return hidden_size_; }

private:
    TensorArchive archive_;
    std::set<std::string> skipped_;
    std::size_t hidden_size_ = 0;
};

struct LabeledRows {
    std::vector<FeatureRow> rows;
    std::size_t skipped = 0;
};

LabeledRows wic_rows(const std::vector<WicInstance>& instances, const VectorSource& src) {
    LabeledRows out;
    for (const auto& inst : instances) {
        const auto h1 = src.word("wic/" + inst.id + "/word1");
        const auto h2 = src.word("wic/" + inst.id + "/word2");
        if (!h1 || !h2) {
            ++out.skipped;
            continue;
        }
        out.rows.push_back({wic_features(*h1, *h2), static_cast<std::size_t>(inst.gold), inst.id});
    }
    return out;
}

LabeledRows ner_rows(const std::vector<NerSentence>& sentences, const VectorSource& src,
                     const std::vector<bool>* keep_mask = nullptr, bool keep_value = true) {
    LabeledRows out;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        if (keep_mask && (*keep_mask)[s] != keep_value) continue;
        const auto vectors = src.sentence("ner/" + std::to_string(s), sentences[s].tokens.size());
        if (!vectors) {
            out.skipped += sentences[s].tokens.size();
            continue;
        }
        for (std::size_t t = 0; t < vectors->size(); ++t) {
            out.rows.push_back({ner_features((*vectors)[t]), static_cast<std::size_t>(sentences[s].gold_tags[t]),
                                std::to_string(s) + "/" + std::to_string(t)});
        }
    }
    return out;
}

// Word vectors for every word the questions mention; skipped words drop their questions.
std::map<std::string, WordVector> analogy_vectors(const std::vector<AnalogyQuestion>& questions,
                                                  const VectorSource& src, std::set<std::string>& missing) {
    std::map<std::string, WordVector> vectors;
    for (const auto& q : questions) {
        for (const auto& w : q.words()) {
            if (vectors.contains(w) || missing.contains(w)) continue;
            if (auto v = src.word("word/" + w)) {
                vectors.emplace(w, std::move(*v));
            } else {
                missing.insert(w);
            }
        }
    }
    return vectors;
}

bool question_usable(const AnalogyQuestion& q, const std::set<std::string>& missing) {
    const auto words = q.words();
    return std::none_of(words.begin(), words.end(), [&](const std::string& w) { return missing.contains(w); });
}

TrainConfig train_config(const RunManifest& m, Task task, const std::string& model_id,
                         std::vector<std::string> labels, std::size_t hidden_size) {
    TrainConfig cfg = m.train;
    cfg.seed = m.seed;
    cfg.class_labels = std::move(labels);
    cfg.metadata = {{"task", std::string(to_string(task))},
                    {"model_id", model_id},
                    {"hidden_size", std::to_string(hidden_size)}};
    return cfg;
}

std::vector<std::string> ner_labels() {
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < kNerClassCount; ++c) labels.emplace_back(to_string(static_cast<NerTag>(c)));
    return labels;
}

CommandOutput finish(const RunManifest& m, EvalReport report, std::span<const Prediction> predictions,
                     const std::string& file_stem) {
    report.count = predictions.size();
    report.calibration = calibration(predictions, m.calibration_bins);
    report.calibration.source = std::string(to_string(report.method));
    report.calibration.task = std::string(to_string(report.task));
    report.calibration.model_id = report.model_id;

    CommandOutput out;
    write_text(eval_report_path(m, report.model_id, report.task, report.method), to_json(report).dump(2) + "\n",
               out.written);
    write_text(m.output_dir / ("calibration_" + file_stem + "_" + std::string(to_string(report.method)) + ".csv"),
               calibration_csv(report.calibration), out.written);
    out.report = std::move(report);
    return out;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const MissingInputError*>(&e)) return kExitMissingInput;
    if (dynamic_cast<const Error*>(&e)) return kExitDataInvariant;
    return kExitInternal;
}

std::vector<WicInstance> load_wic(const SplitPaths& paths) {
    if (!paths.gold) throw MissingInputError("WiC split has no gold file", paths.data.string());
    auto data = open_input(paths.data, "WiC data");
    auto gold = open_input(*paths.gold, "WiC gold");
    return parse_wic(data, gold);
}

std::vector<NerSentence> load_conll(const fs::path& path) {
    auto in = open_input(path, "CoNLL file");
    return parse_conll(in);
}

std::vector<AnalogyQuestion> load_bats(const fs::path& path) {
    auto in = open_input(path, "BATS file");
    return parse_bats(in);
}

fs::path eval_report_path(const RunManifest& m, const std::string& model_id, Task task, Method method) {
    return m.output_dir / ("eval_" + stem_for(model_id, task) + "_" + std::string(to_string(method)) + ".json");
}

CommandOutput run_probe(const RunManifest& manifest, Task task, const std::string& model_id) {
    manifest.model(model_id);
    const bool has_dev = manifest.has_split(task, "dev");
    std::vector<FeatureRow> train, dev;
    std::vector<Prediction> predictions;
    EvalReport report;
    report.task = task;
    report.method = Method::Probe;
    report.model_id = model_id;
    ProbeModel model;

    switch (task) {
        case Task::Wic: {
            const auto train_set = load_wic(manifest.split(task, "train"));
            const auto test_set = load_wic(manifest.split(task, "test"));
            const VectorSource train_src(manifest, model_id, task, "train");
            const VectorSource test_src(manifest, model_id, task, "test");
            train = wic_rows(train_set, train_src).rows;
            if (has_dev) {
                dev = wic_rows(load_wic(manifest.split(task, "dev")), VectorSource(manifest, model_id, task, "dev")).rows;
            } else {
                std::tie(train, dev) = split_holdout(train, manifest.holdout_fraction, manifest.seed);
            }
            model = train_probe(train, dev,
                                train_config(manifest, task, model_id, {"Different", "Same"}, train_src.hidden_size()));
            for (const auto& row : wic_rows(test_set, test_src).rows) {
                const auto c = probe_confidence(model, row.features);
                predictions.push_back({row.group_id, c.predicted_class, row.label, c.confidence});
            }
            report.accuracy = accuracy(predictions);
            break;
        }
        case Task::Ner: {
            const auto train_set = load_conll(manifest.split(task, "train").data);
            const auto test_set = load_conll(manifest.split(task, "test").data);
            const VectorSource train_src(manifest, model_id, task, "train");
            const VectorSource test_src(manifest, model_id, task, "test");
            if (has_dev) {
                train = ner_rows(train_set, train_src).rows;
                dev = ner_rows(load_conll(manifest.split(task, "dev").data),
                               VectorSource(manifest, model_id, task, "dev"))
                          .rows;
            } else {
                const auto mask = holdout_mask(train_set.size(), manifest.holdout_fraction, manifest.seed);
                train = ner_rows(train_set, train_src, &mask, false).rows;
                dev = ner_rows(train_set, train_src, &mask, true).rows;
            }
            model = train_probe(train, dev, train_config(manifest, task, model_id, ner_labels(), train_src.hidden_size()));
            for (const auto& row : ner_rows(test_set, test_src).rows) {
                const auto c = probe_confidence(model, row.features);
                predictions.push_back({row.group_id, c.predicted_class, row.label, c.confidence});
            }
            report.accuracy = accuracy(predictions);
            report.ner = ner_prf(predictions);
            report.confusion = confusion_matrix(predictions, kNerClassCount);
            break;
        }
        case Task::Analogy: {
            auto train_set = load_bats(manifest.split(task, "train").data);
            const auto test_set = load_bats(manifest.split(task, "test").data);
            const VectorSource train_src(manifest, model_id, task, "train");
            const VectorSource test_src(manifest, model_id, task, "test");

            std::vector<AnalogyQuestion> dev_set;
            std::optional<VectorSource> dev_src;
            if (has_dev) {
                dev_set = load_bats(manifest.split(task, "dev").data);
                dev_src.emplace(manifest, model_id, task, "dev");
            } else {
                const auto mask = holdout_mask(train_set.size(), manifest.holdout_fraction, manifest.seed);
                std::vector<AnalogyQuestion> kept;
                for (std::size_t i = 0; i < train_set.size(); ++i) (mask[i] ? dev_set : kept).push_back(train_set[i]);
                train_set = std::move(kept);
            }

            auto collect = [](const std::vector<AnalogyQuestion>& qs, const VectorSource& src, bool augment,
                              std::vector<FeatureRow>& rows, std::vector<const AnalogyQuestion*>* used) {
                std::set<std::string> missing;
                const auto vectors = analogy_vectors(qs, src, missing);
                for (const auto& q : qs) {
                    if (!question_usable(q, missing)) continue;
                    auto r = build_analogy_rows(q, vectors, augment);
                    rows.insert(rows.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
                    if (used) used->push_back(&q);
                }
            };
            collect(train_set, train_src, true, train, nullptr);
            collect(dev_set, dev_src ? *dev_src : train_src, false, dev, nullptr);
            model = train_probe(train, dev,
                                train_config(manifest, task, model_id, {"negative", "positive"}, train_src.hidden_size()));

            std::vector<FeatureRow> test_rows;
            std::vector<const AnalogyQuestion*> used;
            collect(test_set, test_src, false, test_rows, &used);
            std::vector<std::vector<double>> groups;
            std::vector<std::size_t> golds;
            for (std::size_t q = 0; q < used.size(); ++q) {
                std::vector<double> positive(4);
                for (std::size_t k = 0; k < 4; ++k) positive[k] = predict_proba(model, test_rows[4 * q + k].features)[1];
                const auto choice = choose_in_group(positive);
                predictions.push_back({used[q]->id, choice.choice, used[q]->gold_index, choice.confidence});
                groups.push_back(std::move(positive));
                golds.push_back(used[q]->gold_index);
            }
            report.accuracy = analogy_group_accuracy(groups, golds);
            break;
        }
    }

    const std::string stem = stem_for(model_id, task);
    CommandOutput out = finish(manifest, std::move(report), predictions, stem);
    const fs::path probe_path = manifest.output_dir / ("probe_" + stem + ".hsx");
    write_archive_file(probe_records(model), probe_metadata(model), probe_path);
    out.written.push_back(probe_path);
    return out;
}

CommandOutput run_query(const RunManifest& manifest, Task task, const std::string& model_id) {
    manifest.model(model_id);
    std::vector<PromptTemplate> templates;
    {
        auto in = open_input(manifest.prompt_bank, "prompt bank");
        const auto bank = load_prompt_bank(in);
        templates = prompts_for_task(bank, task);
    }
    if (templates.empty()) throw DataError("prompt bank has no templates for task " + std::string(to_string(task)));

    // Test instances as (id, gold class).
    std::vector<std::pair<std::string, std::size_t>> instances;
    switch (task) {
        case Task::Wic:
            for (const auto& inst : load_wic(manifest.split(task, "test"))) {
                instances.emplace_back(inst.id, static_cast<std::size_t>(inst.gold));
            }
            break;
        case Task::Ner: {
            const auto sentences = load_conll(manifest.split(task, "test").data);
            for (std::size_t s = 0; s < sentences.size(); ++s) {
                for (std::size_t t = 0; t < sentences[s].tokens.size(); ++t) {
                    instances.emplace_back(std::to_string(s) + "/" + std::to_string(t),
                                           static_cast<std::size_t>(sentences[s].gold_tags[t]));
                }
            }
            break;
        }
        case Task::Analogy:
            for (const auto& q : load_bats(manifest.split(task, "test").data)) instances.emplace_back(q.id, q.gold_index);
            break;
    }

    // Every template's archive must be present before any scoring starts.
    for (const auto& tpl : templates) {
        const fs::path p = logits_archive_path(manifest, model_id, task, tpl.id);
        if (!fs::exists(p)) {
            throw MissingInputError("missing logits archive for template '" + tpl.id + "': " + p.string(), p.string());
        }
    }

    std::set<std::string> skipped;
    if (const fs::path errors = error_manifest_path(manifest, model_id, task); fs::exists(errors)) {
        std::ifstream in(errors);
        std::string line;
        while (std::getline(in, line)) {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_object() && j.contains("record") && j["record"].is_string()) skipped.insert(j["record"].get<std::string>());
        }
    }

    const CandidateSet candidates = candidates_for(task);
    const std::size_t C = candidates.size();

    // scores[template][instance] -> one row per surface variant (1 or 2 rows).
    std::vector<std::vector<std::optional<std::vector<std::vector<double>>>>> scores(templates.size());
    std::optional<std::size_t> variants;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        const auto archive = read_archive_file(logits_archive_path(manifest, model_id, task, templates[t].id));
        scores[t].resize(instances.size());
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const std::string name = "logits/" + templates[t].id + "/" + instances[i].first;
            const TensorRecord* r = archive.find(name);
            if (r == nullptr) {
                if (skipped.contains(name)) continue;
                throw DataError("logits record '" + name + "' missing and not listed as skipped");
            }
            std::size_t rows = 0;
            if (r->shape.size() == 1 && r->shape[0] == C) {
                rows = 1;
            } else if (r->shape.size() == 2 && r->shape[0] == 2 && r->shape[1] == C) {
                rows = 2;
            } else {
                throw DataError("logits record '" + name + "' must have shape [" + std::to_string(C) + "] or [2, " +
                                std::to_string(C) + "]");
            }
            if (variants && *variants != rows) throw DataError("logits archives mix single and two-variant records");
            variants = rows;
            std::vector<std::vector<double>> v(rows);
            for (std::size_t k = 0; k < rows; ++k) v[k].assign(r->data.begin() + k * C, r->data.begin() + (k + 1) * C);
            scores[t][i] = std::move(v);
        }
    }

    // Surface form (bare vs leading space) is fixed once per (model, task).
    std::size_t variant_row = 0;
    if (variants == 2) {
        std::vector<std::vector<double>> bare, spaced;
        for (const auto& per_template : scores) {
            for (const auto& s : per_template) {
                if (!s) continue;
                bare.push_back((*s)[0]);
                spaced.push_back((*s)[1]);
            }
        }
        variant_row = select_surface_variant(bare, spaced) == SurfaceVariant::LeadingSpace ? 1 : 0;
    }

    std::vector<std::vector<QueryResult>> results(templates.size());
    std::vector<std::vector<Prediction>> predictions(templates.size());
    std::vector<TemplateScore> per_template;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        for (std::size_t i = 0; i < instances.size(); ++i) {
            if (!scores[t][i]) continue;
            auto r = score_candidates((*scores[t][i])[variant_row], candidates, instances[i].first);
            predictions[t].push_back({r.id, r.predicted_class, instances[i].second, r.confidence});
            results[t].push_back(std::move(r));
        }
        if (predictions[t].empty()) throw DataError("template '" + templates[t].id + "' has no scored instances");
        const double metric = task == Task::Ner ? ner_prf(predictions[t]).f1 : accuracy(predictions[t]);
        per_template.push_back({templates[t].id, metric});
    }
    const TemplateScore best = select_best_prompt(per_template);
    const auto best_index = static_cast<std::size_t>(
        std::find_if(per_template.begin(), per_template.end(),
                     [&](const TemplateScore& s) { return s.template_id == best.template_id; }) -
        per_template.begin());

    EvalReport report;
    report.task = task;
    report.method = Method::Query;
    report.model_id = model_id;
    report.selected_template = best.template_id;
    report.per_template = per_template;
    const auto& chosen = predictions[best_index];
    report.accuracy = accuracy(chosen);
    if (task == Task::Ner) {
        report.ner = ner_prf(chosen);
        report.confusion = confusion_matrix(chosen, kNerClassCount);
    }

    const std::string stem = stem_for(model_id, task);
    CommandOutput out = finish(manifest, std::move(report), chosen, stem);

    std::ostringstream jsonl;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        for (const auto& r : results[t]) {
            nlohmann::ordered_json line;
            line["template"] = templates[t].id;
            line["selected"] = t == best_index;
            const auto fields = to_json(r, candidates);
            for (const auto& [k, v] : fields.items()) line[k] = v;
            jsonl << line.dump() << '\n';
        }
    }
    write_text(manifest.output_dir / ("query_results_" + stem + ".jsonl"), jsonl.str(), out.written);
    return out;
}

std::vector<fs::path> run_report(const RunManifest& manifest) {
    std::vector<fs::path> inputs;
    if (fs::is_directory(manifest.output_dir)) {
        for (const auto& entry : fs::directory_iterator(manifest.output_dir)) {
            const auto name = entry.path().filename().string();
            if (entry.is_regular_file() && name.starts_with("eval_") && name.ends_with(".json")) {
                inputs.push_back(entry.path());
            }
        }
    }
    if (inputs.empty()) {
        throw MissingInputError("no eval reports found in " + manifest.output_dir.string(),
                                manifest.output_dir.string());
    }
    std::sort(inputs.begin(), inputs.end());

    std::vector<std::string> order;
    for (const auto& m : manifest.models) order.push_back(m.id);
    ResultsMatrix matrix(order);
    std::vector<EvalReport> reports;
    for (const auto& p : inputs) {
        std::ifstream in(p);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(p.string() + ": " + e.what());
        }
        reports.push_back(eval_report_from_json(j));
        matrix.add(reports.back());
    }

    std::vector<fs::path> written;
    write_text(manifest.output_dir / "results.md", render_table(matrix, TableFormat::Markdown), written);
    write_text(manifest.output_dir / "results.csv", render_table(matrix, TableFormat::Csv), written);
    write_text(manifest.output_dir / "results.tex", render_table(matrix, TableFormat::Latex), written);
    const std::string gaps = compute_gaps(matrix).empty()
                                 ? "No model has both query and probe results for a shared task.\n"
                                 : render_gap_summary(matrix);
    write_text(manifest.output_dir / "gap_summary.md", gaps, written);
    for (const auto& r : reports) {
        if (r.task != Task::Wic) continue;
        write_text(manifest.output_dir /
                       ("calibration_" + file_safe(r.model_id) + "_" + std::string(to_string(r.method)) + ".csv"),
                   calibration_csv(r.calibration), written);
    }
    return written;
}

void dump_corpus(Task task, const SplitPaths& paths, std::ostream& out) {
    switch (task) {
        case Task::Wic:
            for (const auto& r : load_wic(paths)) out << to_json(r).dump() << '\n';
            break;
        case Task::Ner:
            for (const auto& r : load_conll(paths.data)) out << to_json(r).dump() << '\n';
            break;
        case Task::Analogy:
            for (const auto& r : load_bats(paths.data)) out << to_json(r).dump() << '\n';
            break;
    }
}

}  // namespace semgap::app
