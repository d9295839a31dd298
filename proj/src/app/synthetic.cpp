#include "semgap/app/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "semgap/app/manifest.hpp"
#include "semgap/corpus.hpp"
#include "semgap/error.hpp"
#include "semgap/query.hpp"
#include "semgap/tensorstore.hpp"

namespace semgap::app {

namespace fs = std::filesystem;

namespace {

using Rng = std::mt19937_64;

std::vector<double> gaussian(Rng& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> dist(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

TensorRecord vector_record(std::string name, const std::vector<double>& v) {
    return {std::move(name), {v.size()}, std::vector<float>(v.begin(), v.end())};
}

// Two token rows whose mean is `v`, exercising the averaging path.
TensorRecord token_record(std::string name, const std::vector<double>& v, Rng& rng) {
    const auto e = gaussian(rng, v.size(), 0.5);
    TensorRecord r{std::move(name), {2, v.size()}, {}};
    for (std::size_t i = 0; i < v.size(); ++i) r.data.push_back(static_cast<float>(v[i] + e[i]));
    for (std::size_t i = 0; i < v.size(); ++i) r.data.push_back(static_cast<float>(v[i] - e[i]));
    return r;
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

// Indices of the instances a template answers correctly: exactly `k` of
// the `eligible` ones, chosen by a seeded shuffle.
std::vector<bool> plant_correct(const std::vector<bool>& eligible, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        if (eligible[i]) pool.push_back(i);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<bool> correct(eligible.size(), false);
    for (std::size_t i = 0; i < std::min(k, pool.size()); ++i) correct[pool[i]] = true;
    return correct;
}

// Raw scores over the candidate set: the planted candidate gets a clear
// margin over the others.
std::vector<double> planted_scores(const CandidateSet& cands, std::size_t winning_position, Rng& rng) {
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    std::vector<double> s(cands.size());
    for (std::size_t p = 0; p < cands.size(); ++p) s[p] = jitter(rng) + (p == winning_position ? 3.0 : 0.0);
    return s;
}

std::size_t position_of(const CandidateSet& cands, std::size_t class_index) {
    for (std::size_t p = 0; p < cands.size(); ++p) {
        if (cands[p].class_index == class_index) return p;
    }
    return cands.size();
}

struct TaskInstances {
    std::vector<std::string> ids;
    std::vector<std::size_t> gold;
};

void write_logits(const RunManifest& manifest, const SyntheticModel& model, Task task,
                  const std::vector<PromptTemplate>& templates, const std::vector<double>& rates,
                  const TaskInstances& test, std::size_t hidden_size, Rng& rng, SyntheticFixture& fixture) {
    const CandidateSet cands = candidates_for(task);
    const bool two_variants = model.family == ModelFamily::Decoder;
    std::vector<bool> eligible(test.ids.size());
    std::size_t eligible_count = 0;
    for (std::size_t i = 0; i < test.ids.size(); ++i) {
        eligible[i] = position_of(cands, test.gold[i]) < cands.size();
        eligible_count += eligible[i] ? 1 : 0;
    }

    double best = -1.0;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        const auto k = static_cast<std::size_t>(std::lround(rates[t] * static_cast<double>(eligible_count)));
        const auto correct = plant_correct(eligible, k, rng);
        std::vector<TensorRecord> records;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < test.ids.size(); ++i) {
            const std::size_t gold_pos = position_of(cands, test.gold[i]);
            std::size_t pos = gold_pos;
            if (!correct[i]) {
                std::uniform_int_distribution<std::size_t> other(0, cands.size() - 1);
                do {
                    pos = other(rng);
                } while (pos == gold_pos);
            } else {
                ++hits;
            }
            auto scores = planted_scores(cands, pos, rng);
            const std::string name = "logits/" + templates[t].id + "/" + test.ids[i];
            if (two_variants) {
                // The leading-space row is uninformative and far less likely,
                // so the bare form is selected.
                auto spaced = gaussian(rng, cands.size(), 0.3);
                TensorRecord r{name, {2, cands.size()}, {}};
                for (double s : scores) r.data.push_back(static_cast<float>(s));
                for (double s : spaced) r.data.push_back(static_cast<float>(s - 4.0));
                records.push_back(std::move(r));
            } else {
                records.push_back(vector_record(name, scores));
            }
        }
        auto md = make_metadata(model.id, std::string(to_string(task)), hidden_size);
        md["template"] = templates[t].id;
        md["family"] = std::string(to_string(model.family));
        write_archive_file(records, md, logits_archive_path(manifest, model.id, task, templates[t].id));
        const double acc = static_cast<double>(hits) / static_cast<double>(test.ids.size());
        fixture.planted[model.id][task][templates[t].id] = acc;
        if (acc > best) {
            best = acc;
            fixture.winner[model.id][task] = templates[t].id;
        }
    }
}

std::string wic_sentence(std::size_t i, int which) {
    static const char* lead[] = {"The", "A", "Every", "Some"};
    return std::string(lead[(i + static_cast<std::size_t>(which)) % 4]) + " tok" + std::to_string(i) + " stood near item" +
           std::to_string(which) + " today .";
}

}  // namespace

SyntheticFixture write_synthetic_fixture(const fs::path& root, const SyntheticOptions& opt) {
    const std::size_t D = opt.hidden_size;
    if (D == 0) throw InvalidArgument("synthetic fixture: hidden_size must be positive");
    Rng rng(opt.seed);
    SyntheticFixture fx;
    fx.root = root;
    fx.models = {{"synth-enc", ModelFamily::Encoder}, {"synth-dec", ModelFamily::Decoder}};
    fs::create_directories(root);

    // ---- datasets -------------------------------------------------------
    auto make_wic = [&](std::size_t n, const std::string& split) {
        std::string data, gold;
        std::vector<WicLabel> labels;
        for (std::size_t i = 0; i < n; ++i) {
            const WicLabel label = (i % 2 == 0) ? WicLabel::Same : WicLabel::Different;
            data += "tok" + std::to_string(i) + "\tN\t1-1\t" + wic_sentence(i, 0) + "\t" + wic_sentence(i, 1) + "\n";
            gold += label == WicLabel::Same ? "T\n" : "F\n";
            labels.push_back(label);
        }
        write_file(root / "data" / ("wic_" + split + ".txt"), data);
        write_file(root / "data" / ("wic_" + split + ".gold.txt"), gold);
        return labels;
    };
    const auto wic_train = make_wic(opt.wic_train, "train");
    const auto wic_test = make_wic(opt.wic_test, "test");

    auto make_ner = [&](std::size_t n, const std::string& split) {
        std::vector<std::vector<NerTag>> sentences;
        std::string text = "-DOCSTART- -X- -X- O\n\n";
        std::uniform_int_distribution<int> len(4, 9), tag(0, 7);
        for (std::size_t s = 0; s < n; ++s) {
            std::vector<NerTag> tags;
            const int L = len(rng);
            for (int t = 0; t < L; ++t) {
                const int draw = tag(rng);
                const NerTag nt = draw < 4 ? static_cast<NerTag>(draw) : NerTag::O;
                tags.push_back(nt);
                const std::string iob = nt == NerTag::O ? "O" : "I-" + std::string(to_string(nt));
                text += "w" + std::to_string(s) + "_" + std::to_string(t) + " NN I-NP " + iob + "\n";
            }
            text += "\n";
            sentences.push_back(std::move(tags));
        }
        write_file(root / "data" / ("ner_" + split + ".txt"), text);
        return sentences;
    };
    const auto ner_train = make_ner(opt.ner_train_sentences, "train");
    const auto ner_test = make_ner(opt.ner_test_sentences, "test");

    struct Question {
        std::string id;
        std::array<std::string, 10> words;  // a b c0 d0 c1 d1 ...
        std::size_t gold;
    };
    auto make_bats = [&](std::size_t n, const std::string& split) {
        std::vector<Question> qs;
        std::string text;
        std::uniform_int_distribution<std::size_t> answer(0, 3);
        for (std::size_t i = 0; i < n; ++i) {
            Question q;
            q.id = split + "-" + std::to_string(i);
            for (std::size_t w = 0; w < 10; ++w) q.words[w] = split + "q" + std::to_string(i) + "w" + std::to_string(w);
            q.gold = answer(rng);
            nlohmann::ordered_json j;
            j["id"] = q.id;
            j["stem"] = {q.words[0], q.words[1]};
            j["choice"] = nlohmann::ordered_json::array();
            for (std::size_t c = 0; c < 4; ++c) j["choice"].push_back({q.words[2 + 2 * c], q.words[3 + 2 * c]});
            j["answer"] = q.gold;
            text += j.dump() + "\n";
            qs.push_back(std::move(q));
        }
        write_file(root / "data" / ("bats_" + split + ".jsonl"), text);
        return qs;
    };
    const auto bats_train = make_bats(opt.analogy_train, "train");
    const auto bats_test = make_bats(opt.analogy_test, "test");

    // ---- prompt bank ----------------------------------------------------
    const std::vector<PromptTemplate> wic_templates = {
        {"wic-a", Task::Wic,
         "{sentence1}\n{sentence2}\nDoes the word \"{word}\" mean the same thing in the above two sentences?\nAnswer:[MASK]"},
        {"wic-b", Task::Wic, "Sentence A: {sentence1}\nSentence B: {sentence2}\nIs \"{word}\" used the same way? [MASK]"},
        {"wic-c", Task::Wic, "{sentence1} / {sentence2} Same sense of {word}? [MASK]"},
    };
    const std::vector<PromptTemplate> ner_templates = {
        {"ner-a", Task::Ner, "{sentence}. The word {word} in the previous sentence is labelled as [MASK]"},
        {"ner-b", Task::Ner, "{sentence}. In this text, {word} is a [MASK]"},
    };
    const std::vector<PromptTemplate> analogy_templates = {
        {"analogy-a", Task::Analogy,
         "{stem1} is to {stem2} as:\nA) {choice1a} is to {choice1b}\nB) {choice2a} is to {choice2b}\n"
         "C) {choice3a} is to {choice3b}\nD) {choice4a} is to {choice4b}\nAnswer:[MASK]"},
        {"analogy-b", Task::Analogy,
         "Which pair relates like {stem1}, {stem2}?\nA) {choice1a}, {choice1b}\nB) {choice2a}, {choice2b}\n"
         "C) {choice3a}, {choice3b}\nD) {choice4a}, {choice4b}\nAnswer:[MASK]"},
    };
    {
        nlohmann::ordered_json bank = nlohmann::ordered_json::array();
        for (const auto* list : {&wic_templates, &ner_templates, &analogy_templates}) {
            for (const auto& t : *list) {
                validate_template(t);
                bank.push_back({{"id", t.id}, {"task", std::string(to_string(t.task))}, {"body", t.body}});
            }
        }
        write_file(root / "prompts.json", bank.dump(2) + "\n");
    }

    // ---- manifest -------------------------------------------------------
    nlohmann::ordered_json mj;
    mj["models"] = nlohmann::ordered_json::array();
    for (const auto& m : fx.models) mj["models"].push_back({{"id", m.id}, {"family", std::string(to_string(m.family))}});
    mj["tasks"] = {"wic", "ner", "analogy"};
    mj["datasets"]["wic"]["train"] = {{"data", "data/wic_train.txt"}, {"gold", "data/wic_train.gold.txt"}};
    mj["datasets"]["wic"]["test"] = {{"data", "data/wic_test.txt"}, {"gold", "data/wic_test.gold.txt"}};
    mj["datasets"]["ner"]["train"] = "data/ner_train.txt";
    mj["datasets"]["ner"]["test"] = "data/ner_test.txt";
    mj["datasets"]["analogy"]["train"] = "data/bats_train.jsonl";
    mj["datasets"]["analogy"]["test"] = "data/bats_test.jsonl";
    mj["prompt_bank"] = "prompts.json";
    mj["archive_dir"] = "archives";
    mj["output_dir"] = "out";
    mj["seed"] = opt.seed;
    fx.manifest = root / "manifest.json";
    write_file(fx.manifest, mj.dump(2) + "\n");
    const RunManifest manifest = load_manifest(fx.manifest);

    // ---- hidden states --------------------------------------------------
    // Per-model class means for NER and a fixed sign pattern for WiC shifts.
    for (std::size_t mi = 0; mi < fx.models.size(); ++mi) {
        const auto& model = fx.models[mi];
        const auto md = [&](Task task) { return make_metadata(model.id, std::string(to_string(task)), D); };

        std::set<std::string> skipped;
        auto wic_archive = [&](const std::vector<WicLabel>& labels, const std::string& split) {
            std::vector<TensorRecord> records;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                const auto h1 = gaussian(rng, D);
                auto h2 = h1;
                const auto noise = gaussian(rng, D, 0.1);
                std::bernoulli_distribution coin(0.5);
                for (std::size_t d = 0; d < D; ++d) {
                    h2[d] += noise[d];
                    if (labels[i] == WicLabel::Different) h2[d] += coin(rng) ? 1.5 : -1.5;
                }
                const std::string base = "wic/" + std::to_string(i) + "/";
                if (opt.skip_one_wic_record && mi == 0 && split == "test" && i == 0) {
                    skipped.insert(base + "word1");
                    records.push_back(vector_record(base + "word2", h2));
                    continue;
                }
                records.push_back(i % 5 == 0 ? token_record(base + "word1", h1, rng) : vector_record(base + "word1", h1));
                records.push_back(vector_record(base + "word2", h2));
            }
            write_archive_file(records, md(Task::Wic), hidden_archive_path(manifest, model.id, Task::Wic, split));
        };
        wic_archive(wic_train, "train");
        wic_archive(wic_test, "test");
        if (!skipped.empty()) {
            std::string lines;
            for (const auto& s : skipped) lines += nlohmann::json{{"record", s}, {"reason", "alignment"}}.dump() + "\n";
            write_file(error_manifest_path(manifest, model.id, Task::Wic), lines);
        }

        std::vector<std::vector<double>> means;
        for (std::size_t c = 0; c < kNerClassCount; ++c) {
            auto m = gaussian(rng, D);
            for (auto& x : m) x *= 2.0;
            means.push_back(std::move(m));
        }
        auto ner_archive = [&](const std::vector<std::vector<NerTag>>& sentences, const std::string& split) {
            std::vector<TensorRecord> records;
            for (std::size_t s = 0; s < sentences.size(); ++s) {
                TensorRecord r{"ner/" + std::to_string(s), {sentences[s].size(), D}, {}};
                for (const NerTag tag : sentences[s]) {
                    const auto noise = gaussian(rng, D, 0.5);
                    const auto& mu = means[static_cast<std::size_t>(tag)];
                    for (std::size_t d = 0; d < D; ++d) r.data.push_back(static_cast<float>(mu[d] + noise[d]));
                }
                records.push_back(std::move(r));
            }
            write_archive_file(records, md(Task::Ner), hidden_archive_path(manifest, model.id, Task::Ner, split));
        };
        ner_archive(ner_train, "train");
        ner_archive(ner_test, "test");

        // Gold pair shares the stem's offset; distractors get unrelated ones.
        auto bats_archive = [&](const std::vector<Question>& qs, const std::string& split) {
            std::vector<TensorRecord> records;
            for (const auto& q : qs) {
                const auto a = gaussian(rng, D);
                const auto r = gaussian(rng, D, 2.0);
                std::vector<double> b(D);
                for (std::size_t d = 0; d < D; ++d) b[d] = a[d] + r[d];
                records.push_back(token_record("word/" + q.words[0], a, rng));
                records.push_back(vector_record("word/" + q.words[1], b));
                for (std::size_t c = 0; c < 4; ++c) {
                    const auto cv = gaussian(rng, D);
                    const auto offset = c == q.gold ? r : gaussian(rng, D, 2.0);
                    const auto noise = gaussian(rng, D, 0.1);
                    std::vector<double> dv(D);
                    for (std::size_t d = 0; d < D; ++d) dv[d] = cv[d] + offset[d] + noise[d];
                    records.push_back(vector_record("word/" + q.words[2 + 2 * c], cv));
                    records.push_back(vector_record("word/" + q.words[3 + 2 * c], dv));
                }
            }
            write_archive_file(records, md(Task::Analogy),
                               hidden_archive_path(manifest, model.id, Task::Analogy, split));
        };
        bats_archive(bats_train, "train");
        bats_archive(bats_test, "test");

        // ---- logits -----------------------------------------------------
        TaskInstances wic_inst, ner_inst, bats_inst;
        for (std::size_t i = 0; i < wic_test.size(); ++i) {
            wic_inst.ids.push_back(std::to_string(i));
            wic_inst.gold.push_back(static_cast<std::size_t>(wic_test[i]));
        }
        for (std::size_t s = 0; s < ner_test.size(); ++s) {
            for (std::size_t t = 0; t < ner_test[s].size(); ++t) {
                ner_inst.ids.push_back(std::to_string(s) + "/" + std::to_string(t));
                ner_inst.gold.push_back(static_cast<std::size_t>(ner_test[s][t]));
            }
        }
        for (const auto& q : bats_test) {
            bats_inst.ids.push_back(q.id);
            bats_inst.gold.push_back(q.gold);
        }
        // Winning template differs between the two models.
        const std::vector<double> wic_rates = mi == 0 ? std::vector<double>{0.55, 0.74, 0.62}
                                                      : std::vector<double>{0.60, 0.52, 0.68};
        const std::vector<double> ner_rates = mi == 0 ? std::vector<double>{0.45, 0.30} : std::vector<double>{0.20, 0.35};
        const std::vector<double> bats_rates = mi == 0 ? std::vector<double>{0.36, 0.50} : std::vector<double>{0.42, 0.28};
        write_logits(manifest, model, Task::Wic, wic_templates, wic_rates, wic_inst, D, rng, fx);
        write_logits(manifest, model, Task::Ner, ner_templates, ner_rates, ner_inst, D, rng, fx);
        write_logits(manifest, model, Task::Analogy, analogy_templates, bats_rates, bats_inst, D, rng, fx);
    }
    return fx;
}

}  // namespace semgap::app
