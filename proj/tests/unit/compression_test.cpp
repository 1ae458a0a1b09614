#include "apt/compression.hpp"
#include "apt/metainfo.hpp"
#include "apt/util.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace apt {
namespace {

using testing::fixture_path;
using testing::TempDir;

const MetainfoDatabase& redisson() {
    static const MetainfoDatabase db = index_repository(fixture_path("redisson_mini"), IndexConfig{});
    return db;
}

const ClassEntity& class_named(const MetainfoDatabase& db, const std::string& name) {
    auto hits = db.classes_named(name);
    EXPECT_EQ(hits.size(), 1u) << name;
    return *hits.at(0);
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        } else if (word(text[i])) {
            auto j = i;
            while (j < text.size() && word(text[j])) ++j;
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else {
            out.emplace_back(1, text[i++]);
        }
    }
    return out;
}

struct Reparsed {
    std::multiset<std::string> signatures;       // every declared method
    std::set<std::string> bodies;                // methods carrying a body
    std::set<std::string> constructors;
    std::size_t fields = 0;
};

Reparsed reparse(const std::string& text) {
    auto e = extract_file("Reparsed.java", text, IndexConfig{});
    Reparsed r;
    for (auto& [uri, c] : e.classes) {
        if (c.enclosing) continue;
        r.fields = c.fields.size();
        for (auto& u : c.methods) {
            auto& m = e.methods.at(u);
            r.signatures.insert(m.signature);
            if (m.has_body) r.bodies.insert(m.signature);
        }
        for (auto& u : c.constructors) r.constructors.insert(e.methods.at(u).signature);
    }
    return r;
}

std::set<std::string> declared_signatures(const MetainfoDatabase& db, const ClassEntity& cls) {
    std::set<std::string> out;
    for (auto* m : db.methods_of(cls)) out.insert(m->signature);
    return out;
}

TEST(Tokenizer, CountsWordsAndPunctuation) {
    const auto& t = default_tokenizer();
    EXPECT_EQ(t.count(""), 0u);
    EXPECT_EQ(t.count("int x = 1;"), 5u);
    EXPECT_EQ(t.count("a.b(c)"), 6u);
}

TEST(ClassMontage, ClassWithoutMethodsKeepsHeaderAndFields) {
    TempDir dir;
    dir.write("P.java", "public class P {\n    private int a = 1;\n}\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    auto m = class_montage(db, class_named(db, "P"));
    EXPECT_EQ(m.text, "public class P {\n    private int a = 1;\n}\n");
    EXPECT_TRUE(m.signatures.empty());
}

TEST(ClassMontage, BatchExecutorIsTokenEqualToPublishedMontage) {
    auto m = class_montage(redisson(), class_named(redisson(), "RedisCommonBatchExecutor"));
    auto golden = read_file(fixture_path("goldens/redis_common_batch_executor.montage.java"));
    EXPECT_EQ(normalize_whitespace(m.text), normalize_whitespace(golden));
    EXPECT_EQ(word_tokens(m.text), word_tokens(golden));
    EXPECT_EQ(m.text.find("return"), std::string::npos);
}

TEST(ClassMontage, ReparsedMontageHasExactlyTheDeclaredSignatures) {
    for (auto& [uri, cls] : redisson().entities().classes) {
        auto m = class_montage(redisson(), cls);
        auto again = reparse(m.text);
        std::multiset<std::string> expected;
        for (auto* method : redisson().methods_of(cls)) expected.insert(method->signature);
        EXPECT_EQ(again.signatures, expected) << uri.value;
        EXPECT_TRUE(again.bodies.empty() || cls.kind == ClassKind::interface) << uri.value;
        // idempotent at signature level
        auto twice = reparse(m.text);
        EXPECT_EQ(twice.signatures, again.signatures);
    }
}

TEST(ClassShrink, EmptyKeepLeavesFieldsAndConstructors) {
    const auto& cls = class_named(redisson(), "RedisCommonBatchExecutor");
    auto s = class_shrink(redisson(), cls, {});
    auto r = reparse(s.text);
    EXPECT_TRUE(r.bodies.empty());
    EXPECT_EQ(r.constructors, std::set<std::string>{"[]RedisCommonBatchExecutor()"});
    EXPECT_EQ(r.fields, 2u);
}

TEST(ClassShrink, BatchExecutorKeepsFocalAndRelatedMethodOnly) {
    const auto& cls = class_named(redisson(), "RedisCommonBatchExecutor");
    auto s = class_shrink(redisson(), cls, {"retryAttempts", "retryInterval"});
    EXPECT_TRUE(s.unknown_keep.empty());
    auto r = reparse(s.text);
    std::set<std::string> expected = {"[int]retryAttempts(ConnectionManager, BatchOptions)",
                                      "[int]retryInterval(ConnectionManager, BatchOptions)"};
    EXPECT_EQ(r.bodies, expected);
    EXPECT_EQ(r.constructors, std::set<std::string>{"[]RedisCommonBatchExecutor()"});
    EXPECT_EQ(s.text.find("sendCommand"), std::string::npos);
    EXPECT_EQ(s.text.find("timeout("), std::string::npos);
    // declaration order: constructor, retryInterval, retryAttempts
    auto ctor = s.text.find("public RedisCommonBatchExecutor()");
    auto interval = s.text.find("retryInterval(");
    auto attempts = s.text.find("retryAttempts(");
    EXPECT_LT(ctor, interval);
    EXPECT_LT(interval, attempts);
}

TEST(ClassShrink, UnknownKeepEntriesAreReported) {
    const auto& cls = class_named(redisson(), "RedisCommonBatchExecutor");
    auto s = class_shrink(redisson(), cls, {"[int]retryAttempts(ConnectionManager, BatchOptions)", "nope"});
    EXPECT_EQ(s.unknown_keep, std::vector<std::string>{"nope"});
    EXPECT_EQ(s.kept_methods.size(), 1u);
}

TEST(ClassShrink, InitializerBlocksSurviveShrinkButNotMontage) {
    TempDir dir;
    dir.write("S.java",
              "public class S {\n"
              "    static final int[] T = new int[4];\n"
              "    static {\n"
              "        T[0] = 1;\n"
              "    }\n"
              "    /** Doubles.\n     * Second line. */\n"
              "    int twice(int x) { return 2 * x; }\n"
              "}\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    const auto& cls = class_named(db, "S");
    auto montage = class_montage(db, cls);
    EXPECT_EQ(montage.text.find("T[0] = 1"), std::string::npos);
    EXPECT_NE(montage.text.find("/** Doubles. */"), std::string::npos);
    EXPECT_EQ(montage.text.find("Second line"), std::string::npos);
    auto shrink = class_shrink(db, cls, {"twice"});
    EXPECT_NE(shrink.text.find("    static {\n        T[0] = 1;\n    }\n"), std::string::npos) << shrink.text;
    EXPECT_NE(shrink.text.find("Second line"), std::string::npos);
    EXPECT_NE(shrink.text.find("new int[4]"), std::string::npos);
}

TEST(ClassMontage, EnumConstantsAndInnerClassHeaders) {
    auto db = index_repository(fixture_path("counting"), IndexConfig{});
    auto cur = class_montage(db, class_named(db, "Currency"));
    EXPECT_NE(cur.text.find("    EUR, USD;\n"), std::string::npos) << cur.text;
    auto acc = class_montage(db, class_named(db, "Account"));
    EXPECT_NE(acc.text.find("    public static class Snapshot { }\n"), std::string::npos) << acc.text;
    EXPECT_EQ(reparse(acc.text).signatures.size(), 6u);
}

// Random classes: montage/shrink re-parse oracles plus size and monotonicity.
std::string random_class(std::mt19937& rng, std::vector<std::string>& method_names) {
    static const std::vector<std::string> types = {"int", "String", "long", "List<String>", "boolean"};
    std::string src = "package g;\n\nimport java.util.List;\n\npublic class G {\n";
    int fields = rng() % 4;
    for (int i = 0; i < fields; ++i) src += "    private " + types[rng() % types.size()] + " f" + std::to_string(i) + ";\n";
    if (rng() % 2) src += "\n    public G() {\n        f();\n    }\n";
    int methods = 1 + rng() % 7;
    for (int i = 0; i < methods; ++i) {
        auto name = "m" + std::to_string(i);
        method_names.push_back(name);
        src += "\n";
        if (rng() % 3 == 0) src += "    /** Does " + name + ". */\n";
        if (rng() % 4 == 0) src += "    @Deprecated\n";
        src += "    public " + types[rng() % types.size()] + " " + name + "(" +
               (rng() % 2 ? "int a, String b" : "") + ") {\n";
        for (int k = rng() % 4; k >= 0; --k) src += "        call" + std::to_string(k) + "(x, y);\n";
        src += "        throw new IllegalStateException();\n    }\n";
    }
    return src + "}\n";
}

TEST(Compression, RandomClassesSatisfyReparseAndOrderingProperties) {
    std::mt19937 rng(99);
    for (int round = 0; round < 60; ++round) {
        std::vector<std::string> names;
        auto src = random_class(rng, names);
        auto e = extract_file("g/G.java", src, IndexConfig{});
        MetainfoDatabase db(std::move(e));
        const auto& cls = class_named(db, "G");

        auto montage = class_montage(db, cls);
        auto m = reparse(montage.text);
        std::multiset<std::string> all(montage.signatures.begin(), montage.signatures.end());
        EXPECT_EQ(m.signatures, all);
        EXPECT_TRUE(m.bodies.empty());

        std::set<std::string> keep1, keep2;
        for (auto& n : names) {
            if (rng() % 2) keep2.insert(n);
        }
        for (auto& n : keep2) {
            if (rng() % 2) keep1.insert(n);
        }
        auto s1 = class_shrink(db, cls, keep1);
        auto s2 = class_shrink(db, cls, keep2);
        auto r2 = reparse(s2.text);
        EXPECT_EQ(r2.bodies, s2.kept_methods);
        auto ctors = db.constructors_of(cls);
        EXPECT_EQ(r2.constructors.size(), ctors.size());
        EXPECT_TRUE(std::includes(s2.kept_methods.begin(), s2.kept_methods.end(), s1.kept_methods.begin(),
                                  s1.kept_methods.end()));

        std::set<std::string> everything(names.begin(), names.end());
        auto full = class_shrink(db, cls, everything);
        const auto& t = default_tokenizer();
        EXPECT_LE(t.count(montage.text), t.count(full.text)) << src;
        EXPECT_LE(t.count(full.text), t.count(cls.original_string)) << src;
    }
}

TEST(Compression, SizeOrderingHoldsOnFixtureClasses) {
    const auto& t = default_tokenizer();
    for (auto& [uri, cls] : redisson().entities().classes) {
        std::set<std::string> all = declared_signatures(redisson(), cls);
        auto montage = class_montage(redisson(), cls);
        auto full = class_shrink(redisson(), cls, all);
        EXPECT_LE(t.count(montage.text), t.count(full.text)) << uri.value;
        EXPECT_LE(t.count(full.text), t.count(cls.original_string)) << uri.value;
    }
}

}  // namespace
}  // namespace apt
