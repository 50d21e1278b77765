#include <gtest/gtest.h>

#include <random>

#include "mmmem/error.hpp"
#include "mmmem/text.hpp"
#include "mmmem/vector_ops.hpp"
#include "synthetic.hpp"

using namespace mmmem;

TEST(Text, NormalizeSurfaceFoldsAndCollapses) {
    EXPECT_EQ(normalize_surface("  Alice \t  Cooper\n"), "alice cooper");
    EXPECT_EQ(normalize_surface("alice "), "alice");
    EXPECT_EQ(normalize_surface(""), "");
    EXPECT_EQ(normalize_surface(" \t "), "");
}

TEST(Text, NormalizeSurfaceIsIdempotent) {
    std::mt19937_64 rng(11);
    const std::string alphabet = "aB c\tD\n  eF";
    for (int i = 0; i < 200; ++i) {
        std::string s;
        const auto len = test_support::uniform_int(rng, 0, 20);
        for (std::size_t k = 0; k < len; ++k) s.push_back(alphabet[test_support::uniform_int(rng, 0, alphabet.size() - 1)]);
        const auto once = normalize_surface(s);
        EXPECT_EQ(normalize_surface(once), once) << "input: '" << s << "'";
    }
}

TEST(Text, SplitLinesDropsTrailingNewlineAndCarriageReturns) {
    EXPECT_EQ(split_lines("a\r\nb\n"), (std::vector<std::string>{"a", "b"}));
    EXPECT_TRUE(split_lines("").empty());
    EXPECT_EQ(split_lines("a\n\nb"), (std::vector<std::string>{"a", "", "b"}));
}

TEST(Text, WordTokensAreLowercaseAlnumRuns) {
    EXPECT_EQ(word_tokens("Hello, WORLD-42!"), (std::vector<std::string>{"hello", "world", "42"}));
    EXPECT_EQ(whitespace_token_count("  a bb\tccc \n"), 3u);
}

TEST(Text, Fnv1aKnownVectors) {
    EXPECT_EQ(hex64(fnv1a64(std::string_view(""))), "cbf29ce484222325");
    EXPECT_EQ(hex64(fnv1a64(std::string_view("a"))), "af63dc4c8601ec8c");
    EXPECT_EQ(hex64(fnv1a64(std::string_view("foobar"))), "85944171f73967e8");
}

TEST(Text, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}

TEST(VectorOps, CosineBasics) {
    EXPECT_DOUBLE_EQ(cosine(Embedding{1, 0}, Embedding{0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(cosine(Embedding{2, 0}, Embedding{5, 0}), 1.0);
    EXPECT_DOUBLE_EQ(cosine(Embedding{0, 0}, Embedding{1, 0}), 0.0);
    EXPECT_THROW(cosine(Embedding{1}, Embedding{1, 2}), ShapeError);
}
