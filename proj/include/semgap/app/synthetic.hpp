#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "semgap/task.hpp"

namespace semgap::app {

// A self-contained run directory (datasets, prompt bank, archives, manifest)
// whose hidden states carry linearly separable structure and whose logits
// give each template an exactly known accuracy.
struct SyntheticOptions {
    std::uint64_t seed = 7;
    std::size_t hidden_size = 16;
    std::size_t wic_train = 240;
    std::size_t wic_test = 100;
    std::size_t ner_train_sentences = 80;
    std::size_t ner_test_sentences = 40;
    std::size_t analogy_train = 80;
    std::size_t analogy_test = 50;
    // Mark the first WiC test instance of the first model as skipped by the
    // extractor (record absent, listed in errors.jsonl).
    bool skip_one_wic_record = false;
};

struct SyntheticModel {
    std::string id;
    ModelFamily family = ModelFamily::Encoder;
};

struct SyntheticFixture {
    std::filesystem::path root;
    std::filesystem::path manifest;
    std::vector<SyntheticModel> models;
    // planted[model][task][template] = accuracy the template's logits produce.
    std::map<std::string, std::map<Task, std::map<std::string, double>>> planted;
    // Template each (model, task) should select.
    std::map<std::string, std::map<Task, std::string>> winner;
};

SyntheticFixture write_synthetic_fixture(const std::filesystem::path& root, const SyntheticOptions& options = {});

}  // namespace semgap::app
