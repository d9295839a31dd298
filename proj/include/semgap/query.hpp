#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semgap/corpus.hpp"
#include "semgap/task.hpp"

namespace semgap {

inline constexpr std::string_view kAnswerSlot = "[MASK]";
// Sentinel substituted for the slot when prompting encoder-decoder models.
inline constexpr std::string_view kSentinelToken = "<extra_id_0>";

struct PromptTemplate {
    std::string id;
    Task task = Task::Wic;
    std::string body;
};

// Placeholders a template body may use for its task.
std::span<const std::string_view> allowed_placeholders(Task task);

// Answer slot exactly once; every {placeholder} belongs to the task.
void validate_template(const PromptTemplate& tpl);

// JSON array of {id, task, body}. Ids must be unique; order is preserved
// and is the tie-break order for prompt selection.
std::vector<PromptTemplate> load_prompt_bank(std::istream& in);
std::vector<PromptTemplate> prompts_for_task(std::span<const PromptTemplate> bank, Task task);

// Where the extractor reads the answer distribution.
struct SlotDescriptor {
    ModelFamily family = ModelFamily::Encoder;
    std::size_t slot_offset = 0;   // byte offset of the slot marker in the rendered text
    std::string model_input;       // text to feed the model for this family
    std::size_t target_position = 0;  // encoder-decoder: decoder step to read
};

struct RenderedPrompt {
    std::string text;
    SlotDescriptor slot;
};

// One NER query: a word of a sentence, asked about in context.
struct NerQueryItem {
    std::string id;  // "<sentence>/<token>"
    std::string sentence;
    std::string word;
};

std::vector<NerQueryItem> ner_query_items(const NerSentence& sentence, std::size_t sentence_index);

RenderedPrompt render_prompt(const PromptTemplate& tpl, const WicInstance& instance,
                             ModelFamily family = ModelFamily::Encoder);
RenderedPrompt render_prompt(const PromptTemplate& tpl, const NerQueryItem& instance,
                             ModelFamily family = ModelFamily::Encoder);
RenderedPrompt render_prompt(const PromptTemplate& tpl, const AnalogyQuestion& instance,
                             ModelFamily family = ModelFamily::Encoder);

struct Candidate {
    std::size_t class_index = 0;
    std::string label;
    std::string answer;
};
using CandidateSet = std::vector<Candidate>;

// Yes/No -> Same(1)/Different(0); location/person/organization/miscellaneous
// -> LOC/PER/ORG/MISC (no "O" candidate); A-D -> choice 0-3.
CandidateSet candidates_for(Task task);
void validate_candidates(const CandidateSet& candidates);

struct QueryResult {
    std::string id;
    std::vector<double> raw_scores;
    std::vector<double> probabilities;
    std::size_t predicted_candidate = 0;
    std::size_t predicted_class = 0;
    double confidence = 0.0;
};

// Softmax restricted to the candidate set; argmax with lowest-index tie-break.
QueryResult score_candidates(std::span<const double> raw_scores, const CandidateSet& candidates,
                             std::string id = {});

struct TemplateScore {
    std::string template_id;
    double accuracy = 0.0;
};

// Highest accuracy wins; ties go to the earlier entry.
TemplateScore select_best_prompt(std::span<const TemplateScore> scores);

enum class SurfaceVariant { Bare, LeadingSpace };

// Picks the candidate surface variant with the larger total corpus
// likelihood (sum over instances of log-sum-exp of the candidate scores).
// Ties keep the bare form.
SurfaceVariant select_surface_variant(std::span<const std::vector<double>> bare_scores,
                                      std::span<const std::vector<double>> spaced_scores);

nlohmann::ordered_json to_json(const QueryResult& result, const CandidateSet& candidates);

}  // namespace semgap
