#include "apt/util.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace apt {
namespace {

TEST(Sha256, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Text, NormalizeWhitespace) {
    EXPECT_EQ(normalize_whitespace("  a \n\t b  c "), "a b c");
    EXPECT_EQ(normalize_whitespace(""), "");
}

TEST(Text, SplitTopLevelIgnoresNestedSeparators) {
    auto parts = split_top_level("[int]a(Map<K, V>, int), b(x, y),c", ',');
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0], "[int]a(Map<K, V>, int)");
    EXPECT_EQ(trim(parts[1]), "b(x, y)");
    EXPECT_EQ(parts[2], "c");
}

TEST(Text, IdentifierTokensSkipCommentsAndLiterals) {
    auto toks = identifier_tokens(R"(foo(bar); // baz
/* qux */ String s = "quux"; char c = 'z'; int n = 42;)");
    std::vector<std::string> expected = {"foo", "bar", "String", "s", "char", "c", "int", "n"};
    EXPECT_EQ(toks, expected);
}

TEST(Text, SanitizeUtf8ReplacesInvalidBytes) {
    std::size_t replaced = 0;
    std::string bad = "ok\xff\xfe!";
    auto fixed = sanitize_utf8(bad, &replaced);
    EXPECT_EQ(replaced, 2u);
    EXPECT_EQ(fixed, "ok\xEF\xBF\xBD\xEF\xBF\xBD!");
    EXPECT_EQ(sanitize_utf8("h\xC3\xA9", &replaced), "h\xC3\xA9");
    EXPECT_EQ(replaced, 0u);
}

TEST(Glob, DoubleStarMatchesAnyDepth) {
    EXPECT_TRUE(glob_match("**/*.java", "A.java"));
    EXPECT_TRUE(glob_match("**/*.java", "a/b/c/A.java"));
    EXPECT_FALSE(glob_match("**/*.java", "a/b/A.kt"));
    EXPECT_TRUE(glob_match("**/src/test/**", "mod/src/test/java/X.java"));
    EXPECT_TRUE(glob_match("**/src/test/**", "src/test/X.java"));
    EXPECT_FALSE(glob_match("**/src/test/**", "src/main/X.java"));
    EXPECT_TRUE(glob_match(".apt-index/**", ".apt-index/classes.jsonl"));
    EXPECT_FALSE(glob_match("*.java", "a/A.java"));
}

TEST(Files, AtomicWriteReplacesContent) {
    testing::TempDir dir;
    auto p = dir.path() / "x" / "f.txt";
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    EXPECT_EQ(read_file(p), "two");
    EXPECT_EQ(std::distance(std::filesystem::directory_iterator(p.parent_path()), {}), 1);
}

TEST(Process, CapturesOutputAndExitCode) {
    testing::TempDir dir;
    auto r = run_shell("echo hi; echo err 1>&2; exit 3", dir.path());
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.output.find("hi"), std::string::npos);
    EXPECT_NE(r.output.find("err"), std::string::npos);
}

}  // namespace
}  // namespace apt
