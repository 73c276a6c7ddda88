#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "multicred/errors.hpp"
#include "multicred/rng.hpp"
#include "multicred/text.hpp"

using namespace multicred;
using Tokens = std::vector<std::string>;

namespace {

std::string random_text(Rng& rng) {
    static const std::vector<std::string> pieces = {
        "Hello", "WORLD", "#tag", "@user", "http://t.co/x", "https://a.b/c?d=1", "www.site.org", "the", "is",
        "a",     "!!!",   "...",  "café",  "ÄÖÜ",          "日本語",            "😀",           "#",   "@",
        "x,",    "(y)",   "don't", "\xff\xfe", "\xc3",    "\t",                "\n",           "  ", "BREAKING!",
    };
    std::string out;
    const std::size_t n = rng.index(12);
    for (std::size_t i = 0; i < n; ++i) {
        out += pieces[rng.index(pieces.size())];
        out += rng.bernoulli(0.8) ? " " : "";
    }
    return out;
}

void expect_clean_invariants(const CleanText& c, const StopwordList& stop) {
    std::string joined;
    for (const auto& t : c.tokens) {
        ASSERT_FALSE(t.empty());
        ASSERT_NE(t.front(), '#') << t;
        ASSERT_NE(t.front(), '@') << t;
        ASSERT_FALSE(is_url_token(t)) << t;
        ASSERT_FALSE(stop.contains(t)) << t;
        for (char ch : t) {
            ASSERT_FALSE(ch >= 'A' && ch <= 'Z') << t;
            ASSERT_FALSE(ch == ' ' || ch == '\t' || ch == '\n') << t;
        }
        if (!joined.empty()) joined += ' ';
        joined += t;
    }
    ASSERT_EQ(c.joined, joined);
}

}  // namespace

TEST(Preprocess, Lowercases) { EXPECT_EQ(preprocess("Hello WORLD").tokens, (Tokens{"hello", "world"})); }

TEST(Preprocess, DropsLinksHashtagsAndUsernames) {
    EXPECT_EQ(preprocess("check #news http://t.co/x @user").tokens, Tokens{"check"});
    EXPECT_EQ(preprocess("see www.example.com and HTTPS://X.Y today").tokens, (Tokens{"see", "today"}));
}

TEST(Preprocess, DropsShippedStopwords) {
    const auto& stop = StopwordList::english();
    for (const char* w : {"this", "is", "a"}) EXPECT_TRUE(stop.contains(w)) << w;
    EXPECT_EQ(preprocess("this is a breaking story").tokens, (Tokens{"breaking", "story"}));
}

TEST(Preprocess, TrimsPunctuationAndDropsPunctuationOnlyTokens) {
    EXPECT_EQ(preprocess("Wow!!! ... (really) -- ok.").tokens, (Tokens{"wow", "really", "ok"}));
    EXPECT_EQ(preprocess("\"#quoted\" @ # !!").tokens, Tokens{});
}

TEST(Preprocess, EmptyInput) {
    const auto c = preprocess("");
    EXPECT_TRUE(c.tokens.empty());
    EXPECT_EQ(c.joined, "");
    EXPECT_TRUE(preprocess("   \t\n ").tokens.empty());
}

TEST(Preprocess, InvalidUtf8IsReplacedNotFatal) {
    const auto c = preprocess("bad\xff\xfe" "bytes \xc3");
    ASSERT_EQ(c.tokens.size(), 2u);
    EXPECT_EQ(c.tokens[0], "bad\xef\xbf\xbd\xef\xbf\xbd" "bytes");
    EXPECT_EQ(c.tokens[1], "\xef\xbf\xbd");
}

TEST(Preprocess, InvariantsHoldForRandomInput) {
    Rng rng(2024);
    const auto& stop = StopwordList::english();
    for (int i = 0; i < 3000; ++i) {
        const auto text = random_text(rng);
        const auto c = preprocess(text);
        expect_clean_invariants(c, stop);
        ASSERT_EQ(preprocess(c.joined), c) << "not idempotent for: " << text;
    }
}

TEST(Preprocess, RandomBytesNeverCrash) {
    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        std::string s(rng.index(40), '\0');
        for (auto& ch : s) ch = static_cast<char>(rng.index(256));
        const auto c = preprocess(s);
        expect_clean_invariants(c, StopwordList::english());
        ASSERT_EQ(preprocess(c.joined), c);
    }
}

TEST(Stopwords, ShippedListSizeAndFile) {
    EXPECT_GE(StopwordList::english().size(), 170u);
    const auto from_disk = StopwordList::from_file(std::filesystem::path(MULTICRED_DATA_DIR) / "stopwords_en.txt");
    EXPECT_EQ(from_disk.size(), StopwordList::english().size());
}

TEST(Stopwords, OverrideByPath) {
    const auto path = std::filesystem::temp_directory_path() / "multicred_stop_override.txt";
    {
        std::ofstream f(path);
        f << "Breaking\nstory\n\n";
    }
    const auto custom = StopwordList::from_file(path);
    EXPECT_EQ(custom.size(), 2u);
    EXPECT_EQ(preprocess("this is a Breaking story", custom).tokens, (Tokens{"this", "is", "a"}));
    std::filesystem::remove(path);
    EXPECT_THROW(StopwordList::from_file("/nonexistent/stopwords.txt"), IoError);
}
