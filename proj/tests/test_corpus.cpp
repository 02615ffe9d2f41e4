#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "gendir/corpus.hpp"
#include "gendir/rng.hpp"

using namespace gendir;
using namespace gendir::corpus;

namespace {

std::string slice(const std::string& s, Span sp) { return s.substr(sp.start, sp.end - sp.start); }

} // namespace

TEST(Corpus, WholeWordCaseInsensitiveMatching) {
    const std::string s = "She said she-wolf; SHE left, shed no tears. Ashe.";
    const auto spans = find_occurrences(s, "she");
    ASSERT_EQ(spans.size(), 3u);
    EXPECT_EQ(slice(s, spans[0]), "She");
    EXPECT_EQ(slice(s, spans[1]), "she");
    EXPECT_EQ(slice(s, spans[2]), "SHE");
    EXPECT_EQ(find_occurrences(s, "she", {.case_insensitive = false, .whole_word = true}).size(), 1u);
    EXPECT_EQ(find_occurrences(s, "she", {.case_insensitive = true, .whole_word = false}).size(), 5u);
}

TEST(Corpus, UnicodeLettersAreWordCharacters) {
    const std::string s = "Zoë's son and éson and son";
    const auto spans = find_occurrences(s, "son");
    ASSERT_EQ(spans.size(), 2u);
    EXPECT_EQ(spans[0].start, s.find(" son") + 1);
    EXPECT_EQ(spans[1].start, s.rfind("son"));
}

TEST(Corpus, MineContextsFixture) {
    const std::vector<std::string> corpus{"My daughter plays chess.", "Her granddaughter sings.",
                                          "The daughter of the king.", "Daughter and daughter again.",
                                          "Nothing here."};
    const auto out = mine_contexts(corpus, "daughter", 2);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].text, corpus[0]);
    EXPECT_EQ(out[1].text, corpus[2]);
    EXPECT_EQ(out[0].target_spans, (std::vector<Span>{{3, 11}}));
    EXPECT_EQ(out[1].target_spans, (std::vector<Span>{{4, 12}}));
    EXPECT_EQ(out[0].source_id, "line:1");
    EXPECT_EQ(out[1].source_id, "line:3");

    const auto all = mine_contexts(corpus, "daughter", 10);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[2].target_spans.size(), 2u);
}

TEST(Corpus, MineContextsErrors) {
    const std::vector<std::string> empty;
    EXPECT_THROW(mine_contexts(empty, "she", 5), NoContextsError);
    try {
        mine_contexts(empty, "gal", 5);
    } catch (const NoContextsError& e) {
        EXPECT_NE(std::string(e.what()).find("gal"), std::string::npos);
    }
    const std::vector<std::string> one{"she"};
    EXPECT_THROW(mine_contexts(one, "she", 0), ValidationError);
}

TEST(Corpus, MinedSpansRescanUnderPolicy) {
    std::vector<std::string> corpus;
    Rng rng(5, "mine");
    const std::vector<std::string> words{"she", "She", "SHE", "shed", "ashes", "he", "she's"};
    for (int i = 0; i < 200; ++i) {
        std::string s;
        for (int k = 0; k < 6; ++k) s += words[rng.below(words.size())] + (k % 2 ? ", " : " ");
        corpus.push_back(s);
    }
    for (std::uint64_t limit : {1u, 17u, 500u}) {
        for (bool shuffle : {false, true}) {
            MineOptions opts;
            if (shuffle) opts.shuffle_seed = 3;
            const auto out = mine_contexts(corpus, "she", limit, opts);
            EXPECT_LE(out.size(), limit);
            std::size_t last_line = 0;
            for (const auto& c : out) {
                EXPECT_EQ(c.target_spans, find_occurrences(c.text, "she"));
                const auto line = std::stoul(c.source_id.substr(5));
                EXPECT_GT(line, last_line);  // corpus order
                last_line = line;
                for (std::size_t i = 1; i < c.target_spans.size(); ++i) {
                    EXPECT_LE(c.target_spans[i - 1].end, c.target_spans[i].start);
                }
            }
        }
    }
}

TEST(Corpus, SeededShuffleIsDeterministicAndDiffersFromPrefix) {
    std::vector<std::string> corpus;
    for (int i = 0; i < 100; ++i) corpus.push_back("line " + std::to_string(i) + " with her");
    MineOptions opts;
    opts.shuffle_seed = 11;
    const auto a = mine_contexts(corpus, "her", 10, opts), b = mine_contexts(corpus, "her", 10, opts);
    const auto prefix = mine_contexts(corpus, "her", 10);
    ASSERT_EQ(a.size(), 10u);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].text, b[i].text);
        differs |= a[i].text != prefix[i].text;
    }
    EXPECT_TRUE(differs);
}

TEST(Corpus, SwapExamples) {
    const auto table = gendered_pairs();
    EXPECT_EQ(swap_text("She met her father.", table), "He met his mother.");
    EXPECT_EQ(swap_text("The boy and the girl.", table), "The girl and the boy.");
    EXPECT_EQ(swap_text("SHE SAID HE WAS A MAN", table), "HE SAID SHE WAS A WOMAN");
    EXPECT_EQ(swap_text("No table words here.", table), "No table words here.");
    EXPECT_EQ(swap_text("the sHe token", table), "the sHe token");
}

TEST(Corpus, SwapCounterfactualRecomputesSpans) {
    const auto table = gendered_pairs();
    ContextSentence s{"Her mother and her son.", "her", find_occurrences("Her mother and her son.", "her"), "line:4"};
    const auto c = swap_counterfactual(s, table);
    EXPECT_EQ(c.text, "His father and his daughter.");
    EXPECT_EQ(c.target, "his");
    ASSERT_EQ(c.target_spans.size(), 2u);
    EXPECT_EQ(slice(c.text, c.target_spans[0]), "His");
    EXPECT_EQ(c.source_id, "line:4");
}

TEST(Corpus, SwapIsInvolution) {
    const auto table = gendered_pairs();
    const std::vector<std::string> fixture{
        "She told her daughter that the girl was herself.",
        "HE AND HIS SON", "Mother, Father, and the Gal.", "his/her", "A female—male split.",
        "guy's boy", "no gendered words", "sHe MiXeD Her", "Herself? Himself!", "ÉmileHe he"};
    for (const auto& s : fixture) EXPECT_EQ(swap_text(swap_text(s, table), table), s) << s;

    Rng rng(17, "swap");
    const std::string alphabet = "shermaniHEOSGLBYfd ,.'-";
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const auto len = rng.below(40);
        for (std::size_t k = 0; k < len; ++k) s.push_back(alphabet[rng.below(alphabet.size())]);
        if (i % 3 == 0) s += " she her Woman HIMSELF ";
        EXPECT_EQ(swap_text(swap_text(s, table), table), s) << s;
    }
}

TEST(Corpus, PairTableValidation) {
    using Pairs = std::vector<GenderedPair>;
    EXPECT_THROW(PairTable(Pairs{{"a", "a"}}), ValidationError);
    EXPECT_THROW(PairTable(Pairs{{"", "b"}}), ValidationError);
    EXPECT_THROW(PairTable(Pairs{{"two words", "b"}}), ValidationError);
    EXPECT_THROW(PairTable(Pairs{{"!!", "b"}}), ValidationError);
    EXPECT_THROW(PairTable(Pairs{{"she", "he"}, {"he", "it"}}), ValidationError);
    const auto t = gendered_pairs();
    EXPECT_EQ(t.size(), 9u);
    for (const auto& p : t.pairs()) {
        EXPECT_EQ(t.lookup(p.female_word), p.male_word);
        EXPECT_EQ(t.lookup(p.male_word), p.female_word);
    }
    EXPECT_EQ(t.lookup("SHE"), "he");
    EXPECT_FALSE(t.lookup("mary"));
    EXPECT_EQ(random_pairs().size(), 10u);
}

TEST(Corpus, ShippedPairTablesMatchBuiltins) {
    std::istringstream g("female_word,male_word\nshe,he\nher,his\nwoman,man\nherself,himself\ndaughter,son\n"
                         "mother,father\ngal,guy\ngirl,boy\nfemale,male\n");
    const auto t = read_pair_table(g);
    ASSERT_EQ(t.size(), gendered_pairs().size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t.pairs()[i].female_word, gendered_pairs().pairs()[i].female_word);
    }
    std::istringstream bad("a,b,c\nx,y,z\n");
    EXPECT_THROW(read_pair_table(bad), ValidationError);
}

TEST(Corpus, ReadSentencesStripsCarriageReturns) {
    std::istringstream in("one\r\ntwo\n\nthree");
    const auto s = read_sentences(in);
    ASSERT_GE(s.size(), 3u);
    EXPECT_EQ(s[0], "one");
    EXPECT_EQ(s[1], "two");
    EXPECT_EQ(s.back(), "three");
}

TEST(Corpus, PromptOneWithOccupation) {
    const auto p = instantiate_prompt(gender_prediction_prompt(), "Alex", std::string("engineer"));
    EXPECT_EQ(p.text, "Question: Alex is an engineer. Is Alex male or female? Answer: Alex is ");
    ASSERT_EQ(p.name_spans.size(), 3u);
    EXPECT_EQ(p.name_spans[0].label, "name_first");
    EXPECT_EQ(p.name_spans[1].label, "name_second");
    for (const auto& s : p.name_spans) EXPECT_EQ(slice(p.text, s.span), "Alex");

    const auto base = instantiate_prompt(gender_prediction_prompt(), "Alex", std::string("person"));
    EXPECT_EQ(base.text, "Question: Alex is a person. Is Alex male or female? Answer: Alex is ");
}

TEST(Corpus, PriorPrompt) {
    const auto p = instantiate_prompt(prior_prompt(), "Alex");
    EXPECT_EQ(p.text, "Question: Is Alex male or female? Answer: Alex is ");
    EXPECT_EQ(p.name_spans.size(), 2u);
}

TEST(Corpus, OccupationPromptAnonymized) {
    const std::string bio = "[NAME] is a registered practitioner. _ works at a clinic with [NAME]'s team.";
    const auto p = instantiate_prompt(occupation_prediction_prompt(), "X", std::nullopt, bio);
    EXPECT_EQ(p.text,
              "Read the description about X below and predict their occupation.\n"
              "X is a registered practitioner. _ works at a clinic with X's team.\n"
              "What's X's occupation? Output an occupation only. No preambles. No explanations.");
    ASSERT_EQ(p.name_spans.size(), 2u);
    EXPECT_EQ(p.name_spans.back().label, "name_last");
    EXPECT_EQ(slice(p.text, p.name_spans.back().span), "X");
    EXPECT_EQ(p.name_spans.back().span.start, p.text.find("What's X") + 7);
}

TEST(Corpus, MissingSubstitutionsNamed) {
    try {
        instantiate_prompt(gender_prediction_prompt(), "Alex");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("{OCC.}"), std::string::npos);
    }
    EXPECT_THROW(instantiate_prompt(occupation_prediction_prompt(), "Alex"), ValidationError);
}

TEST(Corpus, TemplateValidation) {
    EXPECT_THROW(PromptTemplate("Hi {NAME} and {NAME}", {"a"}), ValidationError);
    EXPECT_THROW(PromptTemplate("Hi {NAME} and {NAME}", {"a", "a"}), ValidationError);
    EXPECT_THROW(PromptTemplate("Hi {WHO}", {}), ValidationError);
    EXPECT_THROW(PromptTemplate("Hi {NAME", {"a"}), ValidationError);
    const PromptTemplate t("{NAME}, {NAME}, {NAME}, {NAME}", {"a", "b", "c", "d"});
    EXPECT_EQ(instantiate_prompt(t, "Zoë").name_spans.size(), 4u);
}

TEST(Corpus, IndefiniteArticle) {
    EXPECT_EQ(indefinite_article("engineer"), "an");
    EXPECT_EQ(indefinite_article("Accountant"), "an");
    EXPECT_EQ(indefinite_article("nurse"), "a");
    EXPECT_EQ(indefinite_article("yoga teacher"), "a");
}
