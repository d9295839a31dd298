#include "semgap/features.hpp"

#include <cmath>

#include "semgap/error.hpp"

namespace semgap {

namespace {

void require_same_dim(std::initializer_list<const WordVector*> vs) {
    const std::size_t d = (*vs.begin())->dim();
    for (const auto* v : vs) {
        if (v->dim() != d) {
            throw InvalidArgument("word vector dimension mismatch: " + std::to_string(d) + " vs " +
                                  std::to_string(v->dim()));
        }
    }
}

}  // namespace

WordVector average_token_vectors(std::span<const Vector> token_vectors) {
    if (token_vectors.empty()) {
        throw InvalidArgument("average_token_vectors: word produced zero tokens");
    }
    const std::size_t d = token_vectors.front().size();
    WordVector out;
    out.values.assign(d, 0.0);
    for (const auto& v : token_vectors) {
        if (v.size() != d) throw InvalidArgument("average_token_vectors: unequal token vector dimensions");
        for (std::size_t i = 0; i < d; ++i) out.values[i] += v[i];
    }
    const double m = static_cast<double>(token_vectors.size());
    for (auto& x : out.values) x /= m;
    return out;
}

Vector wic_features(const WordVector& h1, const WordVector& h2) {
    require_same_dim({&h1, &h2});
    const std::size_t d = h1.dim();
    Vector out(3 * d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = h1.values[i];
        out[d + i] = h2.values[i];
        out[2 * d + i] = std::abs(h1.values[i] - h2.values[i]);
    }
    return out;
}

Vector analogy_features(const WordVector& ha, const WordVector& hb, const WordVector& hc,
                        const WordVector& hd) {
    require_same_dim({&ha, &hb, &hc, &hd});
    const std::size_t d = ha.dim();
    Vector out(3 * d);
    for (std::size_t i = 0; i < d; ++i) {
        const double ab = ha.values[i] - hb.values[i];
        const double cd = hc.values[i] - hd.values[i];
        out[i] = std::abs(ab);
        out[d + i] = std::abs(cd);
        out[2 * d + i] = std::abs(ab - cd);
    }
    return out;
}

Vector ner_features(const WordVector& h) { return h.values; }

std::vector<FeatureRow> build_analogy_rows(const AnalogyQuestion& question, const WordVectorLookup& vectors,
                                           bool augment) {
    auto get = [&](const std::string& word) -> const WordVector& {
        const WordVector* v = vectors(word);
        if (v == nullptr) {
            throw MissingInputError("question " + question.id + ": no vector for word '" + word + "'", word);
        }
        return *v;
    };
    const WordVector& ha = get(question.stem.first);
    const WordVector& hb = get(question.stem.second);

    std::vector<FeatureRow> rows;
    rows.reserve(augment ? 5 : 4);
    for (std::size_t i = 0; i < question.choices.size(); ++i) {
        const WordVector& hc = get(question.choices[i].first);
        const WordVector& hd = get(question.choices[i].second);
        rows.push_back({analogy_features(ha, hb, hc, hd), i == question.gold_index ? 1u : 0u, question.id});
    }
    if (augment) {
        const auto& [c, d] = question.choices[question.gold_index];
        // (a, c) - (b, d): swap the inner terms of the gold analogy.
        rows.push_back({analogy_features(ha, get(c), hb, get(d)), 1, question.id});
    }
    return rows;
}

std::vector<FeatureRow> build_analogy_rows(const AnalogyQuestion& question,
                                           const std::map<std::string, WordVector>& vectors, bool augment) {
    return build_analogy_rows(
        question,
        [&](const std::string& w) -> const WordVector* {
            const auto it = vectors.find(w);
            return it == vectors.end() ? nullptr : &it->second;
        },
        augment);
}

std::vector<TensorRecord> export_feature_rows(std::span<const FeatureRow> rows, const std::string& task,
                                              const std::string& split) {
    if (rows.empty()) throw InvalidArgument("export_feature_rows: no rows");
    const std::size_t f = rows.front().features.size();
    const std::string base = "features/" + task + "/" + split;
    TensorRecord features{base, {rows.size(), f}, {}};
    TensorRecord labels{base + "/labels", {rows.size()}, {}};
    features.data.reserve(rows.size() * f);
    for (const auto& r : rows) {
        if (r.features.size() != f) throw InvalidArgument("export_feature_rows: ragged feature rows");
        for (double x : r.features) features.data.push_back(static_cast<float>(x));
        labels.data.push_back(static_cast<float>(r.label));
    }
    return {std::move(features), std::move(labels)};
}

std::vector<FeatureRow> import_feature_rows(const TensorArchive& archive, const std::string& task,
                                            const std::string& split) {
    const std::string base = "features/" + task + "/" + split;
    const auto& features = archive.at(base);
    const auto& labels = archive.at(base + "/labels");
    if (features.shape.size() != 2 || labels.shape.size() != 1 || labels.shape[0] != features.shape[0]) {
        throw DataError("feature cache '" + base + "' has inconsistent shapes");
    }
    const std::size_t n = features.shape[0];
    const std::size_t f = features.shape[1];
    std::vector<FeatureRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].features.assign(features.data.begin() + static_cast<std::ptrdiff_t>(i * f),
                                features.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * f));
        const float label = labels.data[i];
        if (label < 0 || label != std::floor(label)) throw DataError("feature cache '" + base + "': bad label");
        rows[i].label = static_cast<std::size_t>(label);
    }
    return rows;
}

}  // namespace semgap
