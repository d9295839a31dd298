#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "semgap/corpus.hpp"
#include "semgap/error.hpp"
#include "test_support.hpp"

using namespace semgap;
using semgap::testing::fixture;

namespace {

std::vector<WicInstance> wic_from(const std::string& data, const std::string& gold) {
    std::istringstream d(data), g(gold);
    return parse_wic(d, g);
}

std::vector<NerSentence> conll_from(const std::string& text) {
    std::istringstream s(text);
    return parse_conll(s);
}

std::vector<AnalogyQuestion> bats_from(const std::string& text) {
    std::istringstream s(text);
    return parse_bats(s);
}

}  // namespace

TEST(ParseWic, SenseLine) {
    const auto v = wic_from("sense\tN\t3-2\tA keen musical sense .\tA good sense of timing .\n", "T\n");
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].target_word, "sense");
    EXPECT_EQ(v[0].word_index1, 3u);
    EXPECT_EQ(v[0].word_index2, 2u);
    EXPECT_EQ(v[0].sentence1, "A keen musical sense .");
    EXPECT_EQ(v[0].sentence2, "A good sense of timing .");
    EXPECT_EQ(v[0].gold, WicLabel::Same);
    EXPECT_EQ(v[0].id, "0");
    EXPECT_TRUE(target_matches_lemma(v[0]));
}

TEST(ParseWic, EmptyStreams) { EXPECT_TRUE(wic_from("", "").empty()); }

TEST(ParseWic, ThreeLineFixture) {
    std::ifstream d(fixture("wic_small.txt")), g(fixture("wic_small.gold.txt"));
    const auto v = parse_wic(d, g);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0].gold, WicLabel::Same);
    EXPECT_EQ(v[1].gold, WicLabel::Different);
    EXPECT_EQ(v[2].gold, WicLabel::Same);
    for (const auto& inst : v) {
        EXPECT_LT(inst.word_index1, split_words(inst.sentence1).size());
        EXPECT_LT(inst.word_index2, split_words(inst.sentence2).size());
        EXPECT_TRUE(target_matches_lemma(inst)) << inst.id;
    }
}

TEST(ParseWic, LineCountMismatchIsAlignmentError) {
    EXPECT_THROW(wic_from("a\tN\t0-0\ta\ta\nb\tN\t0-0\tb\tb\n", "T\n"), AlignmentError);
}

TEST(ParseWic, MalformedIndexNamesLine) {
    try {
        wic_from("a\tN\t0-0\ta\ta\nb\tN\tx-0\tb\tb\n", "T\nF\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(ParseWic, IndexPastSentenceEndIsParseError) {
    EXPECT_THROW(wic_from("a\tN\t5-0\ta b\ta\n", "T\n"), ParseError);
}

TEST(ParseWic, BadGoldLabel) { EXPECT_THROW(wic_from("a\tN\t0-0\ta\ta\n", "X\n"), ParseError); }

TEST(ParseConll, TwoSentenceFixture) {
    std::ifstream in(fixture("conll_small.txt"));
    const auto v = parse_conll(in);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].tokens, (std::vector<std::string>{"EU", "rejects", "German"}));
    EXPECT_EQ(v[0].gold_tags, (std::vector<NerTag>{NerTag::ORG, NerTag::O, NerTag::MISC}));
    EXPECT_EQ(v[1].gold_tags, (std::vector<NerTag>{NerTag::PER, NerTag::PER}));
}

TEST(ParseConll, DocstartOnly) { EXPECT_TRUE(conll_from("-DOCSTART- -X- -X- O\n\n").empty()); }

TEST(ParseConll, WrongColumnCount) { EXPECT_THROW(conll_from("EU NNP B-ORG\n"), ParseError); }

TEST(ParseConll, UnknownTag) { EXPECT_THROW(conll_from("EU NNP B-NP B-FOO\n"), ParseError); }

TEST(ParseConll, NoTrailingBlankLine) {
    const auto v = conll_from("A DT B-NP O\nB NN I-NP B-LOC");
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].tokens.size(), 2u);
}

// Counts taken straight from the raw columns, independent of the parser.
TEST(ParseConll, StatsMatchIndependentCount) {
    const std::string text = semgap::testing::slurp(fixture("conll_small.txt"));
    std::istringstream lines(text);
    std::string line;
    std::size_t tokens = 0, entity_tokens = 0, sentences = 0;
    bool in_sentence = false, in_doc = false;
    while (std::getline(lines, line)) {
        if (line.empty()) {
            if (in_sentence && !in_doc) ++sentences;
            in_sentence = in_doc = false;
            continue;
        }
        if (line.rfind("-DOCSTART-", 0) == 0) {
            in_doc = true;
            continue;
        }
        in_sentence = true;
        ++tokens;
        if (line.substr(line.rfind(' ') + 1) != "O") ++entity_tokens;
    }
    std::istringstream in(text);
    const auto stats = conll_stats(in);
    EXPECT_EQ(stats.sentences, sentences);
    EXPECT_EQ(stats.tokens, tokens);
    EXPECT_EQ(stats.entity_tokens, entity_tokens);
    EXPECT_EQ(stats.entity_spans, 3u);

    std::istringstream again(text);
    const auto parsed = parse_conll(again);
    std::size_t sum = 0, non_o = 0;
    for (const auto& s : parsed) {
        sum += s.tokens.size();
        for (auto t : s.gold_tags) non_o += t != NerTag::O ? 1 : 0;
    }
    EXPECT_EQ(sum, stats.tokens);
    EXPECT_EQ(non_o, stats.entity_tokens);
}

TEST(ConllStats, TypeChangeStartsNewSpanInIob1) {
    const auto text = std::string("A NNP I-NP I-PER\nB NNP I-NP I-PER\nC NNP I-NP I-LOC\nD NNP I-NP B-LOC\n\n");
    std::istringstream in(text);
    const auto stats = conll_stats(in);
    EXPECT_EQ(stats.entity_tokens, 4u);
    EXPECT_EQ(stats.entity_spans, 3u);
}

TEST(ParseNerTag, PrefixesStripped) {
    EXPECT_EQ(parse_ner_tag("B-ORG"), NerTag::ORG);
    EXPECT_EQ(parse_ner_tag("I-PER"), NerTag::PER);
    EXPECT_EQ(parse_ner_tag("MISC"), NerTag::MISC);
    EXPECT_EQ(parse_ner_tag("O"), NerTag::O);
    EXPECT_FALSE(parse_ner_tag("B-").has_value());
    EXPECT_FALSE(parse_ner_tag("X-LOC").has_value());
}

TEST(ParseBats, EinsteinQuestion) {
    const auto v = bats_from(
        R"({"stem":["einstein","physicist"],"choice":[["bee","larva"],["schwarzenegger","napoleon"],["pascal","mathematician"],["locke","Confucius"]],"answer":2})"
        "\n");
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].stem, (WordPair{"einstein", "physicist"}));
    EXPECT_EQ(v[0].choices[v[0].gold_index], (WordPair{"pascal", "mathematician"}));
    EXPECT_EQ(v[0].words().size(), 10u);
    EXPECT_EQ(v[0].words()[0], "einstein");
}

TEST(ParseBats, EmptyStream) { EXPECT_TRUE(bats_from("").empty()); }

TEST(ParseBats, ChoiceCountMustBeFour) {
    EXPECT_THROW(bats_from(R"({"stem":["a","b"],"choice":[["c","d"],["e","f"],["g","h"]],"answer":0})"), ParseError);
}

TEST(ParseBats, AnswerOutOfRange) {
    EXPECT_THROW(bats_from(R"({"stem":["a","b"],"choice":[["c","d"],["e","f"],["g","h"],["i","j"]],"answer":4})"),
                 ParseError);
    EXPECT_THROW(bats_from(R"({"stem":["a","b"],"choice":[["c","d"],["e","f"],["g","h"],["i","j"]],"answer":-1})"),
                 ParseError);
}

TEST(ParseBats, IdsDefaultToLineOrder) {
    std::ifstream in(fixture("bats_small.jsonl"));
    const auto v = parse_bats(in);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0].id, "0");
    EXPECT_EQ(v[2].id, "2");
    EXPECT_EQ(v[1].gold_index, 0u);
}

TEST(FallbackContexts, FiveSentencesContainWord) {
    const auto bank = fallback_contexts({"bee"}, 5);
    ASSERT_EQ(bank.at("bee").size(), 5u);
    for (const auto& s : bank.at("bee")) {
        const auto words = split_words(s);
        EXPECT_NE(std::find(words.begin(), words.end(), "bee"), words.end()) << s;
    }
    EXPECT_NO_THROW(validate_context_bank(bank));
}

TEST(FallbackContexts, EmptyWordListGivesEmptyBank) { EXPECT_TRUE(fallback_contexts({}, 5).empty()); }

TEST(FallbackContexts, Deterministic) {
    const auto a = fallback_contexts({"a", "b"}, 1);
    const auto b = fallback_contexts({"a", "b"}, 1);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.at("a").size(), 1u);
    EXPECT_EQ(a.at("b").size(), 1u);
}

TEST(FallbackContexts, SentencesDistinctBeyondTemplateCount) {
    const auto bank = fallback_contexts({"x"}, 20);
    std::set<std::string> unique(bank.at("x").begin(), bank.at("x").end());
    EXPECT_EQ(unique.size(), 20u);
}

TEST(FallbackContexts, Errors) {
    EXPECT_THROW(fallback_contexts({"a"}, 0), InvalidArgument);
    EXPECT_THROW(fallback_contexts({""}, 1), InvalidArgument);
}

TEST(ContextBank, SentenceWithoutWordRejected) {
    std::istringstream ok(R"({"Bee": ["A bee flew .", "The BEE stung ."]})");
    EXPECT_EQ(parse_context_bank(ok).at("Bee").size(), 2u);
    std::istringstream bad(R"({"bee": ["Beeswax is here ."]})");
    EXPECT_THROW(parse_context_bank(bad), DataError);
}

TEST(CanonicalJson, RoundTripAllRecordTypes) {
    std::ifstream d(fixture("wic_small.txt")), g(fixture("wic_small.gold.txt"));
    for (const auto& w : parse_wic(d, g)) {
        const auto back = wic_from_json(nlohmann::ordered_json::parse(to_json(w).dump()));
        EXPECT_EQ(back, w);
    }
    std::ifstream c(fixture("conll_small.txt"));
    for (const auto& s : parse_conll(c)) {
        EXPECT_EQ(ner_from_json(nlohmann::ordered_json::parse(to_json(s).dump())), s);
    }
    std::ifstream b(fixture("bats_small.jsonl"));
    for (const auto& q : parse_bats(b)) {
        EXPECT_EQ(analogy_from_json(nlohmann::ordered_json::parse(to_json(q).dump())), q);
    }
}

TEST(CanonicalJson, StableFieldOrder) {
    const auto v = wic_from("sense\tN\t3-2\tA keen musical sense .\tA good sense of timing .\n", "T\n");
    const std::string dumped = to_json(v[0]).dump();
    EXPECT_EQ(dumped.find("\"id\""), 1u);
    EXPECT_LT(dumped.find("\"sentence1\""), dumped.find("\"sentence2\""));
}

TEST(Parsers, PureOnSameBytes) {
    const std::string text = semgap::testing::slurp(fixture("conll_small.txt"));
    EXPECT_EQ(conll_from(text), conll_from(text));
    const std::string bats = semgap::testing::slurp(fixture("bats_small.jsonl"));
    EXPECT_EQ(bats_from(bats), bats_from(bats));
}
