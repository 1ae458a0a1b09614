#include "apt/error.hpp"
#include "apt/metainfo.hpp"
#include "apt/metainfo_json.hpp"
#include "apt/util.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <regex>

namespace apt {
namespace {

namespace fs = std::filesystem;
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

std::vector<std::string> names_of(const std::vector<const ClassEntity*>& classes) {
    std::vector<std::string> out;
    for (auto* c : classes) out.push_back(c->name);
    return out;
}

// --- independent declaration counter -------------------------------------
// A character-level walk that knows nothing about the grammar: it strips
// comments and literals, tracks braces, and classifies each statement that
// ends directly inside a class body.

struct DeclCounts {
    int classes = 0;
    int methods = 0;
    int constructors = 0;
};

std::string strip_comments_and_literals(const std::string& src) {
    std::string out;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src.compare(i, 2, "//") == 0) {
            while (i < src.size() && src[i] != '\n') ++i;
            out.push_back('\n');
        } else if (src.compare(i, 2, "/*") == 0) {
            i = src.find("*/", i + 2) + 1;
            out.push_back(' ');
        } else if (src[i] == '"' || src[i] == '\'') {
            char q = src[i++];
            while (i < src.size() && src[i] != q) i += src[i] == '\\' ? 2 : 1;
            out += "LIT";
        } else {
            out.push_back(src[i]);
        }
    }
    return out;
}

DeclCounts count_declarations(const std::string& source) {
    static const std::regex kClassHeader(R"(\b(class|interface|enum|record)\s+[A-Za-z_]\w*)");
    static const std::regex kAnnotation(R"(@\w+(\([^)]*\))?)");
    static const std::regex kModifiers(
        R"(\b(public|protected|private|static|final|abstract|default|synchronized|native|strictfp)\b)");
    DeclCounts counts;
    std::string text = strip_comments_and_literals(source);
    std::vector<bool> class_body;  // per open brace: does it open a class body?
    std::string segment;
    for (char c : text) {
        if (c != '{' && c != '}' && c != ';') {
            segment.push_back(c);
            continue;
        }
        bool at_class_level = !class_body.empty() && class_body.back();
        bool is_class = std::regex_search(segment, kClassHeader) && c == '{';
        if (is_class) ++counts.classes;
        if (at_class_level && !is_class && (c == '{' || c == ';')) {
            auto paren = segment.find('(');
            auto eq = segment.find('=');
            if (paren != std::string::npos && (eq == std::string::npos || eq > paren)) {
                std::string head = segment.substr(0, paren);
                head = std::regex_replace(head, kAnnotation, " ");
                head = std::regex_replace(head, kModifiers, " ");
                // drop a leading generic parameter list
                auto first = head.find_first_not_of(" \t\n");
                if (first != std::string::npos && head[first] == '<') {
                    int depth = 0;
                    std::size_t i = first;
                    for (; i < head.size(); ++i) {
                        if (head[i] == '<') ++depth;
                        if (head[i] == '>' && --depth == 0) break;
                    }
                    head = head.substr(i + 1);
                }
                std::istringstream words(head);
                std::vector<std::string> parts;
                for (std::string w; words >> w;) parts.push_back(w);
                if (parts.size() == 1) ++counts.constructors;
                else if (parts.size() >= 2) ++counts.methods;
            }
        }
        if (c == '{') class_body.push_back(is_class);
        if (c == '}' && !class_body.empty()) class_body.pop_back();
        segment.clear();
    }
    return counts;
}

// --- indexing --------------------------------------------------------------

TEST(IndexRepository, EmptyDirectoryYieldsEmptyDatabase) {
    TempDir dir;
    auto db = index_repository(dir.path(), IndexConfig{});
    EXPECT_EQ(db.class_count(), 0u);
    EXPECT_EQ(db.method_count(), 0u);
    EXPECT_TRUE(db.entities().files.empty());
    EXPECT_TRUE(db.entities().skipped.empty());
}

TEST(IndexRepository, MissingRootIsFatal) {
    EXPECT_THROW(index_repository("/nonexistent/apt/root", IndexConfig{}), IoError);
}

TEST(IndexRepository, MoveOperationMatchesPublishedRecord) {
    const auto& cls = class_named(redisson(), "MoveOperation");
    auto rendered = class_to_json(cls);
    Json expected = Json::parse(read_file(fixture_path("goldens/move_operation.json")));
    Json projected;
    for (auto& [key, value] : expected.items()) projected[key] = rendered.at(key);
    EXPECT_EQ(projected.dump(2), expected.dump(2));
    EXPECT_EQ(rendered.at("original_string").get<std::string>(), cls.original_string);
    EXPECT_NE(cls.original_string.find("public class MoveOperation extends SetOperation"), std::string::npos);
}

TEST(IndexRepository, CountsMatchIndependentWalker) {
    auto root = fixture_path("counting");
    auto db = index_repository(root, IndexConfig{});
    DeclCounts oracle;
    std::set<std::string> packages;
    for (auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.path().extension() != ".java") continue;
        auto c = count_declarations(read_file(entry.path()));
        oracle.classes += c.classes;
        oracle.methods += c.methods;
        oracle.constructors += c.constructors;
        packages.insert(entry.path().parent_path().filename().string());
    }
    // the fixture was written to these totals; the oracle must agree first
    ASSERT_EQ(oracle.classes, 7);
    ASSERT_EQ(oracle.methods, 25);
    ASSERT_EQ(packages.size(), 3u);

    std::size_t methods = 0, ctors = 0;
    for (auto& [uri, m] : db.entities().methods) (m.is_constructor ? ctors : methods)++;
    EXPECT_EQ(db.class_count(), std::size_t(oracle.classes));
    EXPECT_EQ(methods, std::size_t(oracle.methods));
    EXPECT_EQ(ctors, std::size_t(oracle.constructors));
    EXPECT_EQ(db.entities().packages.size(), packages.size());
}

TEST(IndexRepository, ClassKindsFollowDeclarationsAndTestRoots) {
    const auto& db = redisson();
    EXPECT_EQ(class_named(db, "SetOperation").kind, ClassKind::abstract_class);
    EXPECT_EQ(class_named(db, "CommandAsyncExecutor").kind, ClassKind::interface);
    EXPECT_EQ(class_named(db, "JCacheTest").kind, ClassKind::test_class);
    EXPECT_EQ(class_named(db, "TestUtil").kind, ClassKind::test_class);
    EXPECT_EQ(class_named(db, "JCache").kind, ClassKind::class_);
}

TEST(IndexRepository, TestMarkerOutsideTestRootMarksTestClass) {
    TempDir dir;
    dir.write("src/main/java/p/Probe.java",
              "package p;\nclass Probe {\n  @Test\n  void t() {}\n  void helper() {}\n}\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    EXPECT_EQ(class_named(db, "Probe").kind, ClassKind::test_class);
}

TEST(IndexRepository, UnparseableFileIsSkippedNotFatal) {
    TempDir dir;
    dir.write("A.java", "class A { void ok() {} }\n");
    dir.write("B.java", "class B { void broken( { }\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    EXPECT_EQ(db.class_count(), 1u);
    ASSERT_EQ(db.entities().skipped.size(), 1u);
    EXPECT_EQ(db.entities().skipped[0].path, "B.java");
}

TEST(IndexRepository, InvalidUtf8IsReplacedWithWarning) {
    TempDir dir;
    dir.write("A.java", "class A {\n  // caf\xe9\n  void m() {}\n}\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    EXPECT_EQ(db.class_count(), 1u);
    ASSERT_FALSE(db.entities().warnings.empty());
    EXPECT_EQ(db.entities().warnings[0].path, "A.java");
}

TEST(IndexRepository, DeterministicAcrossWorkerCounts) {
    IndexConfig one;
    IndexConfig many;
    many.jobs = 4;
    auto a = index_repository(fixture_path("redisson_mini"), one);
    auto b = index_repository(fixture_path("redisson_mini"), many);
    EXPECT_TRUE(a == b);
    EXPECT_EQ(a.entities().source_hash, b.entities().source_hash);
}

TEST(IndexRepository, SecondaryIndexesRebuildEqual) {
    const auto& db = redisson();
    EXPECT_EQ(build_indexes(db.entities()), db.indexes());
}

TEST(IndexRepository, MethodUrisAreClassUriPlusSignature) {
    const auto& db = redisson();
    for (auto& [uri, m] : db.entities().methods) {
        ASSERT_NE(db.find_class(m.owner), nullptr) << uri.value;
        EXPECT_EQ(uri.value, m.owner.value + "." + m.signature);
    }
    for (auto& [uri, c] : db.entities().classes) {
        for (auto& m : c.methods) EXPECT_NE(db.find_method(m), nullptr) << m.value;
    }
    for (auto& [path, f] : db.entities().files) {
        for (auto& c : f.classes) EXPECT_NE(db.find_class(c), nullptr) << c.value;
    }
}

TEST(Signatures, GenericsAndQualifiersAreErased) {
    EXPECT_EQ(erase_type("java.util.List<String>"), "List");
    EXPECT_EQ(erase_type("Map<K, List<V>>[]"), "Map[]");
    EXPECT_EQ(erase_type("String..."), "String...");
    EXPECT_EQ(canonical_signature("void", "commit", {"CommandAsyncExecutor"}), "[void]commit(CommandAsyncExecutor)");
    EXPECT_EQ(canonical_signature("int", "f", {"int", "String"}), "[int]f(int, String)");

    const auto& db = redisson();
    auto sends = db.methods_named("sendCommand");
    ASSERT_EQ(sends.size(), 1u);
    EXPECT_EQ(sends[0]->signature, "[void]sendCommand(CompletableFuture, RedisConnection)");
    EXPECT_EQ(sends[0]->annotations, std::vector<std::string>{"@Override"});
}

// --- queries ---------------------------------------------------------------

TEST(QueryEntity, UnknownNameIsEmpty) {
    EXPECT_TRUE(query_entity(redisson(), QueryKey::name("NoSuchClass"), EntityKind::class_).empty());
}

TEST(QueryEntity, SimpleNameFindsClass) {
    auto hits = query_entity(redisson(), QueryKey::name("MoveOperation"), EntityKind::class_);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(std::get<const ClassEntity*>(hits[0])->uri.value,
              "src/main/java/org/redisson/transaction/operation/set/MoveOperation.java.MoveOperation");
}

TEST(QueryEntity, SameNameInTwoPackagesSortedByUri) {
    TempDir dir;
    dir.write("z/Parser.java", "package z;\npublic class Parser {}\n");
    dir.write("a/Parser.java", "package a;\npublic class Parser {}\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    auto hits = query_entity(db, QueryKey::name("Parser"), EntityKind::class_);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(std::get<const ClassEntity*>(hits[0])->uri.value, "a/Parser.java.Parser");
    EXPECT_EQ(std::get<const ClassEntity*>(hits[1])->uri.value, "z/Parser.java.Parser");
    auto by_uri = query_entity(db, QueryKey::uri("z/Parser.java.Parser"), EntityKind::class_);
    EXPECT_EQ(by_uri.size(), 1u);
    EXPECT_TRUE(query_entity(db, QueryKey::uri("Parser"), EntityKind::class_).empty());
}

TEST(QueryEntity, FieldsAndMethodsByName) {
    auto fields = query_entity(redisson(), QueryKey::name("topic"), EntityKind::field);
    ASSERT_EQ(fields.size(), 1u);
    EXPECT_EQ(std::get<FieldHit>(fields[0]).owner->name, "RedissonLongAdder");
    auto methods = query_entity(redisson(), QueryKey::name("getAndSet"), EntityKind::method);
    EXPECT_EQ(methods.size(), 2u);
}

// --- relations -------------------------------------------------------------

TEST(RelatedClasses, UnresolvableParentHasNoAncestors) {
    const auto& cls = class_named(redisson(), "RedissonQueue");
    EXPECT_TRUE(related_classes(redisson(), cls.uri, ClassRelation::ancestors).empty());
}

TEST(RelatedClasses, AtomicSiblingsShareExpirableParent) {
    const auto& db = redisson();
    const auto& along = class_named(db, "RedissonAtomicLong");
    EXPECT_EQ(names_of(related_classes(db, along.uri, ClassRelation::siblings)),
              std::vector<std::string>{"RedissonAtomicDouble"});
    EXPECT_EQ(names_of(related_classes(db, along.uri, ClassRelation::ancestors)),
              (std::vector<std::string>{"RedissonExpirable", "RedissonObject"}));
}

TEST(RelatedClasses, ChainAncestorsMatchHandDrawnHierarchy) {
    // A -> B -> D and C -> D: ancestors(A) = {B, D}; siblings(B) = {C}
    TempDir dir;
    dir.write("h/D.java", "package h;\npublic class D {}\n");
    dir.write("h/B.java", "package h;\npublic class B extends D {}\n");
    dir.write("h/C.java", "package h;\npublic class C extends D {}\n");
    dir.write("h/A.java", "package h;\npublic class A extends B implements Runnable { public void run() {} }\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    EXPECT_EQ(names_of(related_classes(db, Uri("h/A.java.A"), ClassRelation::ancestors)),
              (std::vector<std::string>{"B", "D"}));
    EXPECT_EQ(names_of(related_classes(db, Uri("h/B.java.B"), ClassRelation::siblings)),
              std::vector<std::string>{"C"});
    EXPECT_EQ(names_of(related_classes(db, Uri("h/D.java.D"), ClassRelation::children)),
              (std::vector<std::string>{"B", "C"}));
    EXPECT_THROW(related_classes(db, Uri("h/X.java.X"), ClassRelation::ancestors), NotFoundError);
}

TEST(RelatedClasses, CycleIsDetectedAndTraversalTerminates) {
    TempDir dir;
    dir.write("c/X.java", "package c;\nclass X extends Y {}\n");
    dir.write("c/Y.java", "package c;\nclass Y extends X {}\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    EXPECT_FALSE(db.inheritance_cycles().empty());
    auto anc = related_classes(db, Uri("c/X.java.X"), ClassRelation::ancestors);
    EXPECT_EQ(names_of(anc), std::vector<std::string>{"Y"});
}

TEST(RelatedClasses, InterfaceCoImplementors) {
    TempDir dir;
    dir.write("i/Shape.java", "package i;\npublic interface Shape { double area(); }\n");
    dir.write("i/Sq.java", "package i;\npublic class Sq implements Shape { public double area() { return 1; } }\n");
    dir.write("i/Ci.java", "package i;\npublic class Ci implements Shape { public double area() { return 3; } }\n");
    dir.write("i/Lone.java", "package i;\npublic class Lone { public double area() { return 0; } }\n");
    auto db = index_repository(dir.path(), IndexConfig{});
    EXPECT_EQ(names_of(related_classes(db, Uri("i/Sq.java.Sq"), ClassRelation::interface_co_implementors)),
              std::vector<std::string>{"Ci"});
    auto shared = shared_methods(db, Uri("i/Sq.java.Sq"), Uri("i/Ci.java.Ci"), Uri("i/Shape.java.Shape"));
    EXPECT_EQ(shared, std::set<std::string>{"area/0()"});
}

TEST(SharedMethods, DisjointClassesShareNothing) {
    const auto& db = redisson();
    EXPECT_TRUE(shared_methods(db, class_named(db, "JCache").uri, class_named(db, "BatchOptions").uri).empty());
}

TEST(SharedMethods, AtomicSiblingsShareGetAndSetAndGetAndDelete) {
    const auto& db = redisson();
    auto shared = shared_methods(db, class_named(db, "RedissonAtomicDouble").uri,
                                 class_named(db, "RedissonAtomicLong").uri);
    EXPECT_TRUE(shared.count("getAndSet/1(#num)"));
    EXPECT_TRUE(shared.count("getAndDelete/0()"));
    EXPECT_TRUE(shared.count("set/1(#num)"));
    EXPECT_FALSE(shared.count("incrementAndGet/0()"));
}

TEST(SharedMethods, RandomClassesMatchBruteForceIntersection) {
    std::mt19937 rng(7);
    const std::vector<std::string> names = {"get", "put", "size", "clear", "apply"};
    const std::vector<std::string> types = {"int", "String", "List<String>", "Object", "long"};
    for (int round = 0; round < 30; ++round) {
        TempDir dir;
        std::map<std::string, std::set<std::string>> oracle;  // class -> keys
        for (std::string cls : {"P", "Q"}) {
            std::string src = "package r;\npublic class " + cls + " {\n";
            int n = 1 + rng() % 6;
            for (int k = 0; k < n; ++k) {
                auto name = names[rng() % names.size()];
                int arity = rng() % 3;
                std::vector<std::string> ps, keys;
                for (int a = 0; a < arity; ++a) {
                    auto t = types[rng() % types.size()];
                    ps.push_back(t + " a" + std::to_string(a));
                    std::string erased = t == "List<String>" ? "List" : t;
                    keys.push_back(erased == "int" || erased == "long" ? "#num" : erased);
                }
                auto key = name + "/" + std::to_string(arity) + "(" + join(keys, ",") + ")";
                // duplicates after erasure keep only the first declaration
                if (oracle[cls].count(key)) continue;
                std::string sig_types;
                oracle[cls].insert(key);
                src += "  public void " + name + "(" + join(ps, ", ") + ") {}\n";
            }
            src += "}\n";
            dir.write("r/" + cls + ".java", src);
        }
        auto db = index_repository(dir.path(), IndexConfig{});
        std::set<std::string> expected;
        std::set_intersection(oracle["P"].begin(), oracle["P"].end(), oracle["Q"].begin(), oracle["Q"].end(),
                              std::inserter(expected, expected.end()));
        EXPECT_EQ(shared_methods(db, Uri("r/P.java.P"), Uri("r/Q.java.Q")), expected) << "round " << round;
    }
}

// --- persistence -----------------------------------------------------------

MetainfoEntities random_entities(std::mt19937& rng, int class_count) {
    auto word = [&](int len) {
        static const std::string alphabet = "abcXYZ_09 \"\\/\n\t\xC3\xA9";
        std::string s;
        for (int i = 0; i < len; ++i) {
            char c = alphabet[rng() % alphabet.size()];
            if (static_cast<unsigned char>(c) == 0xC3) s += "\xC3\xA9";
            else if (static_cast<unsigned char>(c) != 0xA9) s.push_back(c);
        }
        return s;
    };
    MetainfoEntities e;
    e.source_hash = sha256_hex(word(8));
    for (int i = 0; i < class_count; ++i) {
        ClassEntity c;
        c.path = "p" + std::to_string(i % 7) + "/F" + std::to_string(i) + ".java";
        c.name = "C" + std::to_string(i);
        c.uri = Uri(c.path + "." + c.name);
        c.package_name = "p" + std::to_string(i % 7);
        c.kind = static_cast<ClassKind>(rng() % 5);
        if (rng() % 2) c.super_class = "C" + std::to_string(rng() % class_count);
        for (int k = rng() % 3; k > 0; --k) c.super_interfaces.push_back("I" + std::to_string(k));
        c.class_docstring = word(rng() % 10);
        c.original_string = word(rng() % 40);
        c.header = "class " + c.name;
        for (int k = rng() % 3; k > 0; --k) {
            FieldEntity f;
            f.name = "f" + std::to_string(k);
            f.type = "int";
            f.modifiers = rng() % 2 ? "private" : "";
            f.docstring = word(rng() % 5);
            if (rng() % 2) f.marker_annotations.push_back("@Nullable");
            if (rng() % 2) f.initializer = word(rng() % 6);
            c.fields.push_back(f);
        }
        if (rng() % 3 == 0) c.initializer_blocks.push_back("static { " + word(3) + " }");
        if (i > 0 && rng() % 5 == 0) c.enclosing = Uri("p0/F0.java.C0");
        c.span = Span{rng() % 100, 100 + rng() % 100, 1, 2, 3, 4};
        int methods = rng() % 5;
        for (int k = 0; k < methods; ++k) {
            MethodEntity m;
            m.owner = c.uri;
            m.name = "m" + std::to_string(k);
            m.is_constructor = k == 0 && rng() % 2;
            m.return_type = m.is_constructor ? "" : "int";
            m.params = {{"String", "s"}, {"List<Integer>", "xs"}};
            m.params.resize(rng() % 3);
            std::vector<std::string> pt;
            for (auto& p : m.params) pt.push_back(erase_type(p.type));
            m.signature = canonical_signature(m.return_type, m.name, pt);
            m.uri = Uri(c.uri.value + "." + m.signature);
            m.modifiers = {"public"};
            if (rng() % 2) m.annotations = {"@Override"};
            m.docstring = word(rng() % 6);
            m.original_string = word(rng() % 30);
            m.header = "public int " + m.name + "()";
            m.has_body = rng() % 4 != 0;
            m.effective_lines = rng() % 9;
            m.span = Span{1, 2, 3, 4, 5, 6};
            (m.is_constructor ? c.constructors : c.methods).push_back(m.uri);
            e.methods.emplace(m.uri, m);
        }
        auto& file = e.files[c.path];
        file.path = c.path;
        file.name = "F" + std::to_string(i) + ".java";
        file.package_name = c.package_name;
        file.classes.push_back(c.uri);
        file.imports = {"java.util.List", "static org.junit.Assert.*"};
        file.content_hash = sha256_hex(c.original_string);
        auto& pkg = e.packages[c.package_name];
        pkg.name = c.package_name;
        pkg.files.push_back(c.path);
        e.classes.emplace(c.uri, std::move(c));
    }
    e.skipped.push_back({"bad.java", "syntax error at 3:4"});
    e.warnings.push_back({"x.java", word(5)});
    return e;
}

TEST(Persistence, EmptyDatabaseRoundTrips) {
    TempDir dir;
    MetainfoDatabase db;
    persist(db, dir.path() / ".apt-index");
    EXPECT_TRUE(load(dir.path() / ".apt-index") == db);
}

TEST(Persistence, FixtureRepositoryRoundTrips) {
    TempDir dir;
    persist(redisson(), dir.path());
    auto loaded = load(dir.path());
    EXPECT_TRUE(loaded == redisson());
    EXPECT_EQ(loaded.indexes(), redisson().indexes());
}

TEST(Persistence, MoveOperationRecordIsOneLine) {
    TempDir dir;
    persist(redisson(), dir.path());
    int matches = 0;
    for (auto& line : split_lines(read_file(dir.path() / "classes.jsonl"))) {
        if (line.empty()) continue;
        auto j = Json::parse(line);
        if (j.at("name") == "MoveOperation") {
            ++matches;
            Json expected = {"[void]commit(CommandAsyncExecutor)", "[void]rollback(CommandAsyncExecutor)"};
            EXPECT_EQ(j.at("methods"), expected);
            EXPECT_EQ(j.at("superclasses"), "SetOperation");
        }
    }
    EXPECT_EQ(matches, 1);
}

TEST(Persistence, RandomThousandEntityDatabasesRoundTrip) {
    std::mt19937 rng(20240611);
    for (int round = 0; round < 3; ++round) {
        auto entities = random_entities(rng, 300);
        std::size_t total = entities.classes.size() + entities.methods.size() + entities.files.size();
        ASSERT_GE(total, 1000u);
        MetainfoDatabase db(std::move(entities));
        TempDir dir;
        persist(db, dir.path());
        EXPECT_TRUE(load(dir.path()) == db) << "round " << round;
    }
}

TEST(Persistence, SchemaMismatchIsRejected) {
    TempDir dir;
    persist(redisson(), dir.path());
    auto manifest = Json::parse(read_file(dir.path() / "manifest.json"));
    manifest["schema_version"] = kMetainfoSchemaVersion + 1;
    write_file_atomic(dir.path() / "manifest.json", manifest.dump());
    EXPECT_THROW(load(dir.path()), SchemaError);
    EXPECT_THROW(load(dir.path() / "missing"), IoError);
}

}  // namespace
}  // namespace apt
