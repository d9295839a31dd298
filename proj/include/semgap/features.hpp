#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "semgap/corpus.hpp"
#include "semgap/tensorstore.hpp"

namespace semgap {

using Vector = std::vector<double>;

struct WordVector {
    Vector values;
    std::string instance_id;
    std::string role;  // e.g. "word1", "word2", "a"

    std::size_t dim() const noexcept { return values.size(); }
};

struct FeatureRow {
    Vector features;
    std::size_t label = 0;
    std::string group_id;
};

// Mean of the subword-token vectors that make up one word.
WordVector average_token_vectors(std::span<const Vector> token_vectors);

// [h1 ; h2 ; |h1 - h2|]
Vector wic_features(const WordVector& h1, const WordVector& h2);

// |[ha - hb ; hc - hd ; ha - hb + hd - hc]|, absolute value taken per element.
Vector analogy_features(const WordVector& ha, const WordVector& hb, const WordVector& hc,
                        const WordVector& hd);

// NER rows use the averaged word vector unchanged.
Vector ner_features(const WordVector& h);

using WordVectorLookup = std::function<const WordVector*(const std::string& word)>;

// One row per choice (label 1 for the gold choice). With `augment`, a fifth
// positive row built from (a,c)-(b,d) of the gold choice is appended; use it
// for training rows only.
std::vector<FeatureRow> build_analogy_rows(const AnalogyQuestion& question, const WordVectorLookup& vectors,
                                           bool augment);
std::vector<FeatureRow> build_analogy_rows(const AnalogyQuestion& question,
                                           const std::map<std::string, WordVector>& vectors, bool augment);

// Feature cache: `features/<task>/<split>` [N, F] and `.../labels` [N].
std::vector<TensorRecord> export_feature_rows(std::span<const FeatureRow> rows, const std::string& task,
                                              const std::string& split);
std::vector<FeatureRow> import_feature_rows(const TensorArchive& archive, const std::string& task,
                                            const std::string& split);

}  // namespace semgap
