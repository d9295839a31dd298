#include "semgap/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <sstream>

#include "semgap/error.hpp"

namespace semgap {

namespace {

std::string line_prefix(std::size_t line_no) {
    return "line " + std::to_string(line_no) + ": ";
}

void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        chomp(line);
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && is_blank(lines.back())) lines.pop_back();
    return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::optional<std::size_t> parse_index(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// One sentence of a CoNLL file with its tag column untouched.
struct RawConllSentence {
    std::vector<std::string> tokens;
    std::vector<std::string> tags;
    bool docstart = false;
};

std::vector<RawConllSentence> read_conll_raw(std::istream& in) {
    std::vector<RawConllSentence> sentences;
    RawConllSentence current;
    auto flush = [&] {
        if (!current.tokens.empty() && !current.docstart) sentences.push_back(std::move(current));
        current = RawConllSentence{};
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        chomp(line);
        if (is_blank(line)) {
            flush();
            continue;
        }
        const auto fields = split_words(line);
        if (fields.size() != 4) {
            throw ParseError(line_prefix(line_no) + "expected 4 columns, found " +
                             std::to_string(fields.size()));
        }
        if (fields[0] == "-DOCSTART-") {
            // A DOCSTART line is its own sentence in the official files.
            flush();
            current.docstart = true;
            current.tokens.push_back(fields[0]);
            current.tags.push_back(fields[3]);
            continue;
        }
        if (!parse_ner_tag(fields[3])) {
            throw ParseError(line_prefix(line_no) + "unknown NER tag '" + fields[3] + "'");
        }
        if (current.docstart) flush();
        current.tokens.push_back(fields[0]);
        current.tags.push_back(fields[3]);
    }
    flush();
    return sentences;
}

const std::string& json_string(const nlohmann::json& j, std::size_t line_no, const char* what) {
    if (!j.is_string()) throw ParseError(line_prefix(line_no) + what + " must be a string");
    const auto& s = j.get_ref<const std::string&>();
    if (s.empty()) throw ParseError(line_prefix(line_no) + what + " is empty");
    return s;
}

WordPair json_pair(const nlohmann::json& j, std::size_t line_no, const char* what) {
    if (!j.is_array() || j.size() != 2) {
        throw ParseError(line_prefix(line_no) + what + " must be a 2-element array");
    }
    return {json_string(j[0], line_no, what), json_string(j[1], line_no, what)};
}

bool sentence_contains(std::string_view sentence, std::string_view word) {
    const auto tokens = split_words(sentence);
    const auto needle = split_words(word);
    if (needle.empty() || needle.size() > tokens.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= tokens.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < needle.size() && match; ++k) {
            match = lower(tokens[i + k]) == lower(needle[k]);
        }
        if (match) return true;
    }
    return false;
}

}  // namespace

std::string_view to_string(NerTag tag) {
    switch (tag) {
        case NerTag::PER: return "PER";
        case NerTag::LOC: return "LOC";
        case NerTag::ORG: return "ORG";
        case NerTag::MISC: return "MISC";
        case NerTag::O: return "O";
    }
    return "?";
}

std::optional<NerTag> parse_ner_tag(std::string_view text) {
    if (text == "O") return NerTag::O;
    if (text.size() > 2 && (text.starts_with("B-") || text.starts_with("I-"))) {
        text.remove_prefix(2);
    }
    if (text == "PER") return NerTag::PER;
    if (text == "LOC") return NerTag::LOC;
    if (text == "ORG") return NerTag::ORG;
    if (text == "MISC") return NerTag::MISC;
    return std::nullopt;
}

std::vector<std::string> AnalogyQuestion::words() const {
    std::vector<std::string> out{stem.first, stem.second};
    for (const auto& [c, d] : choices) {
        out.push_back(c);
        out.push_back(d);
    }
    return out;
}

std::vector<std::string> split_words(std::string_view sentence) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < sentence.size()) {
        while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        const std::size_t start = i;
        while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        if (i > start) words.emplace_back(sentence.substr(start, i - start));
    }
    return words;
}

std::vector<WicInstance> parse_wic(std::istream& data, std::istream& gold) {
    const auto data_lines = read_lines(data);
    const auto gold_lines = read_lines(gold);
    if (data_lines.size() != gold_lines.size()) {
        throw AlignmentError("WiC data has " + std::to_string(data_lines.size()) +
                             " lines but gold has " + std::to_string(gold_lines.size()));
    }

    std::vector<WicInstance> out;
    out.reserve(data_lines.size());
    for (std::size_t i = 0; i < data_lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto fields = split_tabs(data_lines[i]);
        if (fields.size() != 5) {
            throw ParseError(line_prefix(line_no) + "expected 5 tab-separated fields, found " +
                             std::to_string(fields.size()));
        }
        const auto dash = fields[2].find('-');
        const auto idx1 = dash == std::string_view::npos ? std::nullopt
                                                         : parse_index(fields[2].substr(0, dash));
        const auto idx2 = dash == std::string_view::npos ? std::nullopt
                                                         : parse_index(fields[2].substr(dash + 1));
        if (!idx1 || !idx2) {
            throw ParseError(line_prefix(line_no) + "malformed index field '" +
                             std::string(fields[2]) + "'");
        }

        WicInstance inst;
        inst.id = std::to_string(i);
        inst.target_word = std::string(fields[0]);
        inst.sentence1 = std::string(fields[3]);
        inst.sentence2 = std::string(fields[4]);
        inst.word_index1 = *idx1;
        inst.word_index2 = *idx2;
        if (inst.target_word.empty()) throw ParseError(line_prefix(line_no) + "empty target word");
        if (inst.word_index1 >= split_words(inst.sentence1).size() ||
            inst.word_index2 >= split_words(inst.sentence2).size()) {
            throw ParseError(line_prefix(line_no) + "malformed index field '" +
                             std::string(fields[2]) + "' (out of range)");
        }

        std::string label = gold_lines[i];
        label.erase(std::remove_if(label.begin(), label.end(),
                                   [](unsigned char c) { return std::isspace(c); }),
                    label.end());
        if (label == "T") {
            inst.gold = WicLabel::Same;
        } else if (label == "F") {
            inst.gold = WicLabel::Different;
        } else {
            throw ParseError("gold " + line_prefix(line_no) + "expected T or F, found '" + label + "'");
        }
        out.push_back(std::move(inst));
    }
    return out;
}

bool target_matches_lemma(const WicInstance& instance) {
    auto matches = [&](const std::string& sentence, std::size_t index) {
        const auto words = split_words(sentence);
        if (index >= words.size()) return false;
        const std::size_t n = std::min<std::size_t>(3, instance.target_word.size());
        return lower(words[index]).substr(0, n) == lower(instance.target_word).substr(0, n);
    };
    return matches(instance.sentence1, instance.word_index1) &&
           matches(instance.sentence2, instance.word_index2);
}

std::vector<NerSentence> parse_conll(std::istream& stream) {
    std::vector<NerSentence> out;
    for (auto& raw : read_conll_raw(stream)) {
        NerSentence s;
        s.tokens = std::move(raw.tokens);
        s.gold_tags.reserve(raw.tags.size());
        for (const auto& t : raw.tags) s.gold_tags.push_back(*parse_ner_tag(t));
        out.push_back(std::move(s));
    }
    return out;
}

ConllStats conll_stats(std::istream& stream) {
    ConllStats stats;
    for (const auto& raw : read_conll_raw(stream)) {
        ++stats.sentences;
        stats.tokens += raw.tokens.size();
        std::optional<NerTag> previous;
        for (const auto& tag_text : raw.tags) {
            const NerTag tag = *parse_ner_tag(tag_text);
            if (tag == NerTag::O) {
                previous.reset();
                continue;
            }
            ++stats.entity_tokens;
            // conlleval chunk start: explicit B-, or a type change (IOB1 files
            // use I- for span starts).
            if (tag_text.starts_with("B-") || previous != tag) ++stats.entity_spans;
            previous = tag;
        }
    }
    return stats;
}

std::vector<AnalogyQuestion> parse_bats(std::istream& stream) {
    std::vector<AnalogyQuestion> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        chomp(line);
        if (is_blank(line)) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_prefix(line_no) + "invalid JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("stem") || !j.contains("choice") || !j.contains("answer")) {
            throw ParseError(line_prefix(line_no) + "expected object with stem, choice, answer");
        }

        AnalogyQuestion q;
        if (j.contains("id")) {
            q.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        } else {
            q.id = std::to_string(out.size());
        }
        q.stem = json_pair(j["stem"], line_no, "stem");

        const auto& choice = j["choice"];
        if (!choice.is_array() || choice.size() != 4) {
            throw ParseError(line_prefix(line_no) + "choice must hold exactly 4 pairs, found " +
                             (choice.is_array() ? std::to_string(choice.size()) : "non-array"));
        }
        for (std::size_t i = 0; i < 4; ++i) q.choices[i] = json_pair(choice[i], line_no, "choice");

        const auto& answer = j["answer"];
        if (!answer.is_number_integer() || answer.get<long long>() < 0 || answer.get<long long>() > 3) {
            throw ParseError(line_prefix(line_no) + "answer must be an integer in [0,3], found " +
                             answer.dump());
        }
        q.gold_index = answer.get<std::size_t>();
        out.push_back(std::move(q));
    }
    return out;
}

ContextBank fallback_contexts(const std::vector<std::string>& words, std::size_t k) {
    static constexpr std::array<std::string_view, 8> kTemplates = {
        "The word {w} appears here .",
        "People often discuss {w} today .",
        "She wrote {w} on the board .",
        "We talked about {w} for a while .",
        "Here is a sentence about {w} .",
        "Nobody expected {w} to matter so much .",
        "They mentioned {w} twice in the meeting .",
        "I read something about {w} yesterday .",
    };
    if (k == 0) throw InvalidArgument("fallback_contexts: k must be at least 1");

    ContextBank bank;
    for (const auto& word : words) {
        if (split_words(word).empty()) throw InvalidArgument("fallback_contexts: empty word");
        auto& sentences = bank[word];
        sentences.clear();
        for (std::size_t i = 0; i < k; ++i) {
            std::string s(kTemplates[i % kTemplates.size()]);
            s.replace(s.find("{w}"), 3, word);
            if (i >= kTemplates.size()) s += " Variant " + std::to_string(i / kTemplates.size()) + " .";
            sentences.push_back(std::move(s));
        }
    }
    return bank;
}

void validate_context_bank(const ContextBank& bank) {
    for (const auto& [word, sentences] : bank) {
        if (split_words(word).empty()) throw DataError("context bank: empty word");
        for (const auto& s : sentences) {
            if (!sentence_contains(s, word)) {
                throw DataError("context bank: sentence for '" + word + "' does not contain it: " + s);
            }
        }
    }
}

ContextBank parse_context_bank(std::istream& stream) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(stream);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("context bank: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("context bank: expected a JSON object");
    ContextBank bank;
    for (const auto& [word, list] : j.items()) {
        if (!list.is_array()) throw ParseError("context bank: '" + word + "' must map to an array");
        auto& sentences = bank[word];
        for (const auto& s : list) {
            if (!s.is_string()) throw ParseError("context bank: non-string sentence for '" + word + "'");
            sentences.push_back(s.get<std::string>());
        }
    }
    validate_context_bank(bank);
    return bank;
}

nlohmann::ordered_json to_json(const WicInstance& instance) {
    nlohmann::ordered_json j;
    j["id"] = instance.id;
    j["target_word"] = instance.target_word;
    j["sentence1"] = instance.sentence1;
    j["sentence2"] = instance.sentence2;
    j["word_index1"] = instance.word_index1;
    j["word_index2"] = instance.word_index2;
    j["gold"] = instance.gold == WicLabel::Same ? "Same" : "Different";
    return j;
}

nlohmann::ordered_json to_json(const NerSentence& sentence) {
    nlohmann::ordered_json j;
    j["tokens"] = sentence.tokens;
    auto tags = nlohmann::ordered_json::array();
    for (auto t : sentence.gold_tags) tags.push_back(std::string(to_string(t)));
    j["gold_tags"] = std::move(tags);
    return j;
}

nlohmann::ordered_json to_json(const AnalogyQuestion& question) {
    nlohmann::ordered_json j;
    j["id"] = question.id;
    j["stem"] = {question.stem.first, question.stem.second};
    auto choices = nlohmann::ordered_json::array();
    for (const auto& [c, d] : question.choices) choices.push_back({c, d});
    j["choices"] = std::move(choices);
    j["gold_index"] = question.gold_index;
    return j;
}

WicInstance wic_from_json(const nlohmann::ordered_json& j) {
    try {
        WicInstance inst;
        inst.id = j.at("id").get<std::string>();
        inst.target_word = j.at("target_word").get<std::string>();
        inst.sentence1 = j.at("sentence1").get<std::string>();
        inst.sentence2 = j.at("sentence2").get<std::string>();
        inst.word_index1 = j.at("word_index1").get<std::size_t>();
        inst.word_index2 = j.at("word_index2").get<std::size_t>();
        const auto gold = j.at("gold").get<std::string>();
        if (gold != "Same" && gold != "Different") throw ParseError("bad WiC gold '" + gold + "'");
        inst.gold = gold == "Same" ? WicLabel::Same : WicLabel::Different;
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("WiC record: ") + e.what());
    }
}

NerSentence ner_from_json(const nlohmann::ordered_json& j) {
    try {
        NerSentence s;
        s.tokens = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& t : j.at("gold_tags")) {
            const auto tag = parse_ner_tag(t.get<std::string>());
            if (!tag) throw ParseError("unknown NER tag " + t.dump());
            s.gold_tags.push_back(*tag);
        }
        if (s.tokens.size() != s.gold_tags.size()) throw ParseError("NER record: token/tag count mismatch");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("NER record: ") + e.what());
    }
}

AnalogyQuestion analogy_from_json(const nlohmann::ordered_json& j) {
    try {
        AnalogyQuestion q;
        q.id = j.at("id").get<std::string>();
        const auto& stem = j.at("stem");
        q.stem = {stem.at(0).get<std::string>(), stem.at(1).get<std::string>()};
        const auto& choices = j.at("choices");
        if (choices.size() != 4) throw ParseError("analogy record: expected 4 choices");
        for (std::size_t i = 0; i < 4; ++i) {
            q.choices[i] = {choices[i].at(0).get<std::string>(), choices[i].at(1).get<std::string>()};
        }
        q.gold_index = j.at("gold_index").get<std::size_t>();
        if (q.gold_index > 3) throw ParseError("analogy record: gold_index out of range");
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("analogy record: ") + e.what());
    }
}

}  // namespace semgap
