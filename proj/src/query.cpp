#include "semgap/query.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <set>

#include "semgap/error.hpp"

namespace semgap {

namespace {

constexpr std::array<std::string_view, 3> kWicPlaceholders = {"sentence1", "sentence2", "word"};
constexpr std::array<std::string_view, 2> kNerPlaceholders = {"sentence", "word"};
constexpr std::array<std::string_view, 10> kAnalogyPlaceholders = {
    "stem1", "stem2", "choice1a", "choice1b", "choice2a", "choice2b",
    "choice3a", "choice3b", "choice4a", "choice4b"};

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// If body[pos] opens a `{name}` placeholder, returns name's length.
std::size_t placeholder_at(std::string_view body, std::size_t pos) {
    if (body[pos] != '{' || pos + 1 >= body.size() || !std::isalpha(static_cast<unsigned char>(body[pos + 1]))) {
        return 0;
    }
    std::size_t end = pos + 1;
    while (end < body.size() && ident_char(body[end])) ++end;
    if (end >= body.size() || body[end] != '}') return 0;
    return end - pos - 1;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

RenderedPrompt render(const PromptTemplate& tpl, Task instance_task,
                      const std::map<std::string_view, std::string>& values, ModelFamily family) {
    if (tpl.task != instance_task) {
        throw InvalidArgument("template '" + tpl.id + "' is for task " + std::string(to_string(tpl.task)) +
                              ", instance is " + std::string(to_string(instance_task)));
    }
    const std::string_view body = tpl.body;
    if (count_occurrences(body, kAnswerSlot) != 1) {
        throw InvalidArgument("template '" + tpl.id + "' must contain the answer slot exactly once");
    }
    const std::size_t slot_in_body = body.find(kAnswerSlot);

    RenderedPrompt out;
    out.slot.family = family;
    std::string& text = out.text;
    for (std::size_t i = 0; i < body.size();) {
        if (i == slot_in_body) out.slot.slot_offset = text.size();
        if (const std::size_t len = placeholder_at(body, i)) {
            const std::string_view name = body.substr(i + 1, len);
            const auto it = values.find(name);
            if (it == values.end()) {
                throw InvalidArgument("template '" + tpl.id + "': unfilled placeholder {" + std::string(name) + "}");
            }
            if (it->second.empty()) {
                throw InvalidArgument("template '" + tpl.id + "': empty value for {" + std::string(name) + "}");
            }
            text += it->second;
            i += len + 2;
            continue;
        }
        text += body[i++];
    }

    switch (family) {
        case ModelFamily::Encoder:
            out.slot.model_input = text;
            break;
        case ModelFamily::Decoder:
            out.slot.model_input = text.substr(0, out.slot.slot_offset);
            break;
        case ModelFamily::EncoderDecoder:
            out.slot.model_input = text;
            out.slot.model_input.replace(out.slot.slot_offset, kAnswerSlot.size(), kSentinelToken);
            out.slot.target_position = 0;
            break;
    }
    return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

}  // namespace

std::span<const std::string_view> allowed_placeholders(Task task) {
    switch (task) {
        case Task::Wic: return kWicPlaceholders;
        case Task::Ner: return kNerPlaceholders;
        case Task::Analogy: return kAnalogyPlaceholders;
    }
    return {};
}

void validate_template(const PromptTemplate& tpl) {
    if (tpl.id.empty()) throw ParseError("prompt template with empty id");
    if (count_occurrences(tpl.body, kAnswerSlot) != 1) {
        throw ParseError("prompt '" + tpl.id + "' must contain " + std::string(kAnswerSlot) + " exactly once");
    }
    const auto allowed = allowed_placeholders(tpl.task);
    for (std::size_t i = 0; i < tpl.body.size(); ++i) {
        if (const std::size_t len = placeholder_at(tpl.body, i)) {
            const std::string_view name = std::string_view(tpl.body).substr(i + 1, len);
            if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
                throw ParseError("prompt '" + tpl.id + "' uses placeholder {" + std::string(name) +
                                 "} not defined for task " + std::string(to_string(tpl.task)));
            }
        }
    }
}

std::vector<PromptTemplate> load_prompt_bank(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("prompt bank: invalid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("prompts")) j = j["prompts"];
    if (!j.is_array()) throw ParseError("prompt bank: expected an array of {id, task, body}");

    std::vector<PromptTemplate> bank;
    std::set<std::string> ids;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("id") || !e.contains("task") || !e.contains("body") ||
            !e["id"].is_string() || !e["task"].is_string() || !e["body"].is_string()) {
            throw ParseError("prompt bank: malformed entry " + e.dump());
        }
        PromptTemplate tpl;
        tpl.id = e["id"].get<std::string>();
        try {
            tpl.task = parse_task(e["task"].get<std::string>());
        } catch (const InvalidArgument& err) {
            throw ParseError(std::string("prompt bank: ") + err.what());
        }
        tpl.body = e["body"].get<std::string>();
        validate_template(tpl);
        if (!ids.insert(tpl.id).second) throw ParseError("prompt bank: duplicate id '" + tpl.id + "'");
        bank.push_back(std::move(tpl));
    }
    return bank;
}

std::vector<PromptTemplate> prompts_for_task(std::span<const PromptTemplate> bank, Task task) {
    std::vector<PromptTemplate> out;
    for (const auto& t : bank) {
        if (t.task == task) out.push_back(t);
    }
    return out;
}

std::vector<NerQueryItem> ner_query_items(const NerSentence& sentence, std::size_t sentence_index) {
    const std::string text = join_tokens(sentence.tokens);
    std::vector<NerQueryItem> items;
    items.reserve(sentence.tokens.size());
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
        items.push_back({std::to_string(sentence_index) + "/" + std::to_string(t), text, sentence.tokens[t]});
    }
    return items;
}

RenderedPrompt render_prompt(const PromptTemplate& tpl, const WicInstance& instance, ModelFamily family) {
    return render(tpl, Task::Wic,
                  {{"sentence1", instance.sentence1}, {"sentence2", instance.sentence2}, {"word", instance.target_word}},
                  family);
}

RenderedPrompt render_prompt(const PromptTemplate& tpl, const NerQueryItem& instance, ModelFamily family) {
    return render(tpl, Task::Ner, {{"sentence", instance.sentence}, {"word", instance.word}}, family);
}

RenderedPrompt render_prompt(const PromptTemplate& tpl, const AnalogyQuestion& instance, ModelFamily family) {
    std::map<std::string_view, std::string> values{{"stem1", instance.stem.first}, {"stem2", instance.stem.second}};
    for (std::size_t i = 0; i < 4; ++i) {
        values[kAnalogyPlaceholders[2 + 2 * i]] = instance.choices[i].first;
        values[kAnalogyPlaceholders[3 + 2 * i]] = instance.choices[i].second;
    }
    return render(tpl, Task::Analogy, values, family);
}

CandidateSet candidates_for(Task task) {
    switch (task) {
        case Task::Wic:
            return {{static_cast<std::size_t>(WicLabel::Same), "Same", "Yes"},
                    {static_cast<std::size_t>(WicLabel::Different), "Different", "No"}};
        case Task::Ner:
            return {{static_cast<std::size_t>(NerTag::LOC), "LOC", "location"},
                    {static_cast<std::size_t>(NerTag::PER), "PER", "person"},
                    {static_cast<std::size_t>(NerTag::ORG), "ORG", "organization"},
                    {static_cast<std::size_t>(NerTag::MISC), "MISC", "miscellaneous"}};
        case Task::Analogy:
            return {{0, "0", "A"}, {1, "1", "B"}, {2, "2", "C"}, {3, "3", "D"}};
    }
    return {};
}

void validate_candidates(const CandidateSet& candidates) {
    if (candidates.size() < 2) throw InvalidArgument("candidate set needs at least 2 answers");
    std::set<std::string> answers;
    for (const auto& c : candidates) {
        if (!answers.insert(c.answer).second) throw InvalidArgument("duplicate candidate answer '" + c.answer + "'");
    }
}

QueryResult score_candidates(std::span<const double> raw_scores, const CandidateSet& candidates, std::string id) {
    validate_candidates(candidates);
    if (raw_scores.size() != candidates.size()) {
        throw DataError("expected " + std::to_string(candidates.size()) + " candidate scores, got " +
                        std::to_string(raw_scores.size()) + (id.empty() ? "" : " for " + id));
    }
    for (std::size_t k = 0; k < raw_scores.size(); ++k) {
        if (!std::isfinite(raw_scores[k])) {
            throw DataError("non-finite score for candidate '" + candidates[k].answer + "'" +
                            (id.empty() ? "" : " in " + id));
        }
    }

    QueryResult r;
    r.id = std::move(id);
    r.raw_scores.assign(raw_scores.begin(), raw_scores.end());
    std::size_t best = 0;
    for (std::size_t k = 1; k < raw_scores.size(); ++k) {
        if (raw_scores[k] > raw_scores[best]) best = k;
    }
    const double top = raw_scores[best];
    double sum = 0.0;
    r.probabilities.resize(raw_scores.size());
    for (std::size_t k = 0; k < raw_scores.size(); ++k) {
        r.probabilities[k] = std::exp(raw_scores[k] - top);
        sum += r.probabilities[k];
    }
    for (auto& p : r.probabilities) p /= sum;
    r.predicted_candidate = best;
    r.predicted_class = candidates[best].class_index;
    r.confidence = r.probabilities[best];
    return r;
}

TemplateScore select_best_prompt(std::span<const TemplateScore> scores) {
    if (scores.empty()) throw InvalidArgument("select_best_prompt: no templates evaluated");
    const TemplateScore* best = &scores.front();
    for (const auto& s : scores) {
        if (s.accuracy > best->accuracy) best = &s;
    }
    return *best;
}

SurfaceVariant select_surface_variant(std::span<const std::vector<double>> bare_scores,
                                      std::span<const std::vector<double>> spaced_scores) {
    auto total = [](std::span<const std::vector<double>> rows) {
        double sum = 0.0;
        for (const auto& row : rows) {
            if (row.empty()) continue;
            const double m = *std::max_element(row.begin(), row.end());
            double s = 0.0;
            for (double v : row) s += std::exp(v - m);
            sum += m + std::log(s);
        }
        return sum;
    };
    return total(spaced_scores) > total(bare_scores) ? SurfaceVariant::LeadingSpace : SurfaceVariant::Bare;
}

nlohmann::ordered_json to_json(const QueryResult& result, const CandidateSet& candidates) {
    nlohmann::ordered_json j;
    j["id"] = result.id;
    auto answers = nlohmann::ordered_json::array();
    for (const auto& c : candidates) answers.push_back(c.answer);
    j["candidates"] = std::move(answers);
    j["raw_scores"] = result.raw_scores;
    j["probabilities"] = result.probabilities;
    j["predicted"] = candidates.at(result.predicted_candidate).label;
    j["confidence"] = result.confidence;
    return j;
}

}  // namespace semgap
