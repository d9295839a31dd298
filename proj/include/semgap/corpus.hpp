#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace semgap {

// ---------------------------------------------------------------------------
// Word-in-Context
// ---------------------------------------------------------------------------

// Numeric values double as the probe class index.
enum class WicLabel : int { Different = 0, Same = 1 };

struct WicInstance {
    std::string id;
    std::string target_word;
    std::string sentence1;
    std::string sentence2;
    std::size_t word_index1 = 0;
    std::size_t word_index2 = 0;
    WicLabel gold = WicLabel::Different;

    bool operator==(const WicInstance&) const = default;
};

// ---------------------------------------------------------------------------
// CoNLL2003 NER
// ---------------------------------------------------------------------------

// Token-level entity classes with IOB prefixes removed. The numeric value is
// the probe class index.
enum class NerTag : int { PER = 0, LOC = 1, ORG = 2, MISC = 3, O = 4 };

inline constexpr std::size_t kNerClassCount = 5;

std::string_view to_string(NerTag tag);
// Accepts bare classes and IOB-prefixed tags ("B-ORG", "I-PER", "O").
std::optional<NerTag> parse_ner_tag(std::string_view text);

struct NerSentence {
    std::vector<std::string> tokens;
    std::vector<NerTag> gold_tags;

    bool operator==(const NerSentence&) const = default;
};

// Raw counts straight off a CoNLL stream, before prefix stripping loses
// span boundaries.
struct ConllStats {
    std::size_t sentences = 0;
    std::size_t tokens = 0;
    std::size_t entity_spans = 0;
    std::size_t entity_tokens = 0;
};

// ---------------------------------------------------------------------------
// BATS multiple-choice analogies
// ---------------------------------------------------------------------------

using WordPair = std::pair<std::string, std::string>;

struct AnalogyQuestion {
    std::string id;
    WordPair stem;
    std::array<WordPair, 4> choices;
    std::size_t gold_index = 0;

    // The ten words the question touches, stem first, in choice order.
    std::vector<std::string> words() const;

    bool operator==(const AnalogyQuestion&) const = default;
};

// word -> context sentences, each containing the word as a whitespace token.
using ContextBank = std::map<std::string, std::vector<std::string>>;

// ---------------------------------------------------------------------------
// Parsers. All are pure functions of the input bytes.
// ---------------------------------------------------------------------------

// Official WiC layout: `word\tpos\ti1-i2\tsentence1\tsentence2` plus a
// separate gold file of `T`/`F` lines. Instance ids are the 0-based line number.
std::vector<WicInstance> parse_wic(std::istream& data, std::istream& gold);

// Column format `token POS chunk NER`; blank lines separate sentences;
// `-DOCSTART-` sentences are dropped.
std::vector<NerSentence> parse_conll(std::istream& stream);
ConllStats conll_stats(std::istream& stream);

// JSON lines with `stem`, `choice`, `answer` (and optionally `id`).
std::vector<AnalogyQuestion> parse_bats(std::istream& stream);

// True when the words at the WiC indices loosely match the lemma (first three
// characters, case-insensitive). WiC targets are lemmas, so inflected forms
// are expected; the check is advisory and parse_wic does not enforce it.
bool target_matches_lemma(const WicInstance& instance);

std::vector<std::string> split_words(std::string_view sentence);

// ---------------------------------------------------------------------------
// Context banks
// ---------------------------------------------------------------------------

// Deterministic template contexts, k per word. Stands in for externally
// generated contexts when no bank file is supplied.
ContextBank fallback_contexts(const std::vector<std::string>& words, std::size_t k);

// JSON object {word: [sentences...]}. Sentences that do not contain their
// word as a token raise DataError.
ContextBank parse_context_bank(std::istream& stream);
void validate_context_bank(const ContextBank& bank);

// ---------------------------------------------------------------------------
// Canonical JSON (stable field order) for fixtures and `corpus dump`.
// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const WicInstance& instance);
nlohmann::ordered_json to_json(const NerSentence& sentence);
nlohmann::ordered_json to_json(const AnalogyQuestion& question);

WicInstance wic_from_json(const nlohmann::ordered_json& j);
NerSentence ner_from_json(const nlohmann::ordered_json& j);
AnalogyQuestion analogy_from_json(const nlohmann::ordered_json& j);

}  // namespace semgap
