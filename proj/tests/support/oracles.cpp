#include "oracles.hpp"

#include "apt/util.hpp"
#include "test_support.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <regex>
#include <tuple>

namespace apt::testing {

// ---------------------------------------------------------------------------
// scope graphs
// ---------------------------------------------------------------------------

std::vector<std::string> describe_references(const ScopeGraph& g) {
    auto refs = g.nodes_of_kind(ScopeNodeKind::reference);
    std::stable_sort(refs.begin(), refs.end(),
                     [&](NodeId a, NodeId b) { return g.node(a).span.start_byte < g.node(b).span.start_byte; });
    std::vector<std::string> out;
    for (NodeId ref : refs) {
        const auto& n = g.node(ref);
        auto r = resolve_reference(g, ref);
        std::string where = n.name + "@" + std::to_string(n.span.start_row + 1) + " ";
        switch (r.outcome) {
            case ResolutionResult::Outcome::local_def:
                where += "def@" + std::to_string(g.node(r.target).span.start_row + 1);
                break;
            case ResolutionResult::Outcome::import_hit:
                where += (r.low_confidence ? "wildcard@" : "import@") +
                         std::to_string(g.node(r.target).span.start_row + 1);
                break;
            case ResolutionResult::Outcome::unresolved: where += "unresolved"; break;
        }
        out.push_back(std::move(where));
    }
    return out;
}

Problems check_scope_corpus(std::size_t* references_checked) {
    Problems problems;
    auto manifest = nlohmann::json::parse(read_file(fixture_path("scope_corpus/manifest.json")));
    std::size_t checked = 0;
    for (auto& entry : manifest["files"]) {
        auto file = entry["file"].get<std::string>();
        auto g = build_scope_graph(file, read_file(fixture_path("scope_corpus/" + file)));
        auto want = entry["refs"].get<std::vector<std::string>>();
        auto got = describe_references(g);
        checked += want.size();
        if (got.size() != want.size()) {
            problems.push_back(fmt::format("{}: {} references, annotated {}", file, got.size(), want.size()));
            continue;
        }
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (got[i] != want[i]) problems.push_back(fmt::format("{}: got '{}', annotated '{}'", file, got[i], want[i]));
        }
        // unresolved_references over the whole file names exactly the references annotated unresolved
        std::vector<std::string> want_unresolved, got_unresolved;
        for (auto& w : want) {
            if (w.ends_with(" unresolved")) want_unresolved.push_back(w.substr(0, w.find(' ')));
        }
        Span file_span;
        for (NodeId scope : g.nodes_of_kind(ScopeNodeKind::scope)) {
            const auto& span = g.node(scope).span;
            if (span.end_byte - span.start_byte > file_span.end_byte - file_span.start_byte) file_span = span;
        }
        for (NodeId r : unresolved_references(g, file_span)) {
            got_unresolved.push_back(g.node(r).name + "@" + std::to_string(g.node(r).span.start_row + 1));
        }
        std::sort(want_unresolved.begin(), want_unresolved.end());
        std::sort(got_unresolved.begin(), got_unresolved.end());
        if (got_unresolved != want_unresolved) {
            problems.push_back(fmt::format("{}: unresolved_references gives {} names, annotated {}", file,
                                           got_unresolved.size(), want_unresolved.size()));
        }
    }
    if (references_checked) *references_checked = checked;
    return problems;
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

namespace {

TestBundle plain_bundle(const std::string& test_class, const std::string& name) {
    TestBundle b;
    b.test_class = Uri(test_class);
    b.case_name = name;
    b.test_case = "    @Test\n    public void " + name + "() {\n        assertTrue(true);\n    }\n";
    return b;
}

}  // namespace

RankInstance random_rank_instance(std::mt19937& rng) {
    RankInstance inst;
    const int methods = std::uniform_int_distribution<int>(0, 14)(rng);
    const Uri focal("F");
    for (int i = 0; i < methods; ++i) {
        Uri related("m" + std::to_string(i));
        const int rels = std::uniform_int_distribution<int>(1, 3)(rng);
        for (int k = 0; k < rels; ++k) {
            PropertyRelation r;
            r.focal = focal;
            r.related = related;
            r.phase = static_cast<Phase>(std::uniform_int_distribution<int>(0, 3)(rng));
            // coarse values so ties on confidence happen
            r.confidence = std::uniform_int_distribution<int>(1, 6)(rng) / 6.0;
            r.external = std::bernoulli_distribution(0.4)(rng);
            inst.set.add(r);
        }
        if (std::bernoulli_distribution(0.75)(rng)) {
            inst.with_bundles.insert(related);
            inst.index.add(related, plain_bundle("T", "t" + std::to_string(i)));
        }
    }
    inst.n = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    return inst;
}

std::vector<PropertyRelation> oracle_rank(const PropertySet& set, const std::set<Uri>& with_bundles, std::size_t n) {
    auto category = [](const PropertyRelation& r) { return (r.external ? 2 : 0) + (r.phase == Phase::complete ? 0 : 1); };
    std::vector<PropertyRelation> all;
    for (auto& r : set.relations()) {
        if (with_bundles.contains(r.related)) all.push_back(r);
    }
    std::sort(all.begin(), all.end(), [&](const PropertyRelation& a, const PropertyRelation& b) {
        return std::tuple(category(a), -a.confidence, a.related.value, static_cast<int>(a.phase)) <
               std::tuple(category(b), -b.confidence, b.related.value, static_cast<int>(b.phase));
    });
    std::vector<PropertyRelation> out;
    for (int cat = 0; cat < 4; ++cat) {
        std::vector<PropertyRelation> pool;
        for (auto& r : all) {
            if (category(r) == cat) pool.push_back(r);
        }
        std::set<Phase> uncovered;
        if (cat % 2 == 1) {
            for (auto& r : pool) uncovered.insert(r.phase);
        }
        std::size_t taken = 0;
        for (auto& r : pool) {
            if (taken == n) break;
            bool fresh = uncovered.erase(r.phase) > 0;
            if (!fresh && n - taken - 1 < uncovered.size()) continue;
            out.push_back(r);
            ++taken;
        }
    }
    return out;
}

Problems check_rank(const RankInstance& inst, const RankedSet& got) {
    Problems problems;
    auto want = oracle_rank(inst.set, inst.with_bundles, inst.n);
    if (got.items.size() > 4 * inst.n) problems.push_back(fmt::format("{} items for N={}", got.items.size(), inst.n));
    if (got.items.size() != want.size()) {
        problems.push_back(fmt::format("{} items, oracle {}", got.items.size(), want.size()));
        return problems;
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
        if (!(got.items[i].relation == want[i]) || got.items[i].category != category_of(want[i])) {
            problems.push_back(fmt::format("item {}: {} differs from oracle {}", i, got.items[i].relation.related.value,
                                           want[i].related.value));
        }
    }
    return problems;
}

// ---------------------------------------------------------------------------
// inter-class deduction
// ---------------------------------------------------------------------------

namespace {

struct PoolMethod {
    std::string name;
    std::string param;  // empty: no parameter
};

const std::vector<PoolMethod> kPool = {{"a", ""}, {"b", "int"}, {"b", "double"}, {"c", "String"},
                                       {"d", ""},  {"e", "long"}, {"f", "Object"}};

std::string oracle_key(const PoolMethod& m) {
    static const std::set<std::string> numeric = {"int", "double", "long"};
    std::string t = m.param.empty() ? "" : (numeric.contains(m.param) ? "#num" : m.param);
    return m.name + "/" + (m.param.empty() ? "0" : "1") + "(" + t + ")";
}

std::string pool_ref(int m) { return kPool[m].name + "(" + kPool[m].param + ")"; }

struct GenClass {
    std::string name;
    int parent = -1;
    std::vector<int> interfaces;
    std::vector<int> methods;  // pool indexes
};

struct Forest {
    std::vector<GenClass> classes;
    std::vector<std::vector<int>> interfaces;  // pool indexes per interface
};

Forest random_forest(std::mt19937& rng) {
    Forest f;
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    auto subset = [&](double p) {
        std::vector<int> out;
        for (int i = 0; i < static_cast<int>(kPool.size()); ++i) {
            if (std::bernoulli_distribution(p)(rng)) out.push_back(i);
        }
        return out;
    };
    f.interfaces = {subset(0.5), subset(0.5)};
    int n = 2 + pick(5);
    for (int i = 0; i < n; ++i) {
        GenClass c;
        c.name = "K" + std::to_string(i);
        if (i > 0 && pick(3) != 0) c.parent = pick(i);
        for (int k = 0; k < 2; ++k) {
            if (pick(3) == 0) c.interfaces.push_back(k);
        }
        c.methods = subset(0.6);
        f.classes.push_back(std::move(c));
    }
    return f;
}

std::string java_param(const PoolMethod& m) { return m.param.empty() ? "" : m.param + " x"; }

MetainfoDatabase build_db(const Forest& f) {
    MetainfoEntities all;
    auto add = [&](const std::string& path, const std::string& source) {
        auto e = extract_file(path, source, IndexConfig{});
        all.classes.merge(e.classes);
        all.methods.merge(e.methods);
        all.files.merge(e.files);
        for (auto& [name, pkg] : e.packages) {
            auto& into = all.packages[name];
            into.name = name;
            into.files.insert(into.files.end(), pkg.files.begin(), pkg.files.end());
        }
    };
    for (std::size_t i = 0; i < f.interfaces.size(); ++i) {
        std::string src = "package p;\n\npublic interface I" + std::to_string(i) + " {\n";
        for (int m : f.interfaces[i]) src += "    void " + kPool[m].name + "(" + java_param(kPool[m]) + ");\n";
        add("p/I" + std::to_string(i) + ".java", src + "}\n");
    }
    for (auto& c : f.classes) {
        std::string src = "package p;\n\npublic class " + c.name;
        if (c.parent >= 0) src += " extends " + f.classes[c.parent].name;
        if (!c.interfaces.empty()) {
            src += " implements ";
            for (std::size_t k = 0; k < c.interfaces.size(); ++k) src += (k ? ", I" : "I") + std::to_string(c.interfaces[k]);
        }
        src += " {\n    public void focal() {}\n";
        for (int m : c.methods) src += "    public void " + kPool[m].name + "(" + java_param(kPool[m]) + ") {}\n";
        add("p/" + c.name + ".java", src + "}\n");
    }
    return MetainfoDatabase(std::move(all));
}

struct Candidate {
    std::string cls;
    int method;
    Phase phase;
    double confidence;
    RelationProvenance provenance;
};

// Candidates straight from the implication, then max per (method, phase) with
// complete taking over a pair.
std::map<std::pair<std::string, int>, std::map<Phase, Candidate>> oracle_deduction(
    const Forest& f, int focal_cls, const std::vector<std::tuple<int, Phase, double>>& intra, const Damping& d) {
    const auto& c1 = f.classes[focal_cls];
    auto has = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
    auto declared_key = [&](const std::vector<int>& methods, const std::string& key) {
        return std::any_of(methods.begin(), methods.end(), [&](int m) { return oracle_key(kPool[m]) == key; });
    };
    std::vector<Candidate> cands;
    for (auto& [m_a, phase, conf] : intra) {
        auto key = oracle_key(kPool[m_a]);
        for (int j = 0; j < static_cast<int>(f.classes.size()); ++j) {
            if (j == focal_cls) continue;
            const auto& c2 = f.classes[j];
            if (!declared_key(c2.methods, key)) continue;
            std::vector<std::pair<double, RelationProvenance>> kinds;
            if (c1.parent == j || c2.parent == focal_cls) kinds.push_back({d.inheritance, RelationProvenance::deduced_inheritance});
            if (c1.parent >= 0 && c1.parent == c2.parent) kinds.push_back({d.sibling, RelationProvenance::deduced_sibling});
            for (int i : c1.interfaces) {
                if (has(c2.interfaces, i) && declared_key(f.interfaces[i], key)) {
                    kinds.push_back({d.interface, RelationProvenance::deduced_interface});
                    break;
                }
            }
            for (int m : c2.methods) {
                if (oracle_key(kPool[m]) != key) continue;
                for (auto& [damp, prov] : kinds) cands.push_back({c2.name, m, phase, conf * damp, prov});
            }
        }
    }
    std::map<std::pair<std::string, int>, std::map<Phase, Candidate>> best;
    for (auto& c : cands) {
        auto& slot = best[{c.cls, c.method}];
        auto it = slot.find(c.phase);
        if (it == slot.end() || c.confidence > it->second.confidence) slot.insert_or_assign(c.phase, c);
    }
    for (auto& [_, phases] : best) {
        if (phases.contains(Phase::complete)) {
            auto keep = phases.at(Phase::complete);
            phases = {{Phase::complete, keep}};
        }
    }
    return best;
}

}  // namespace

DeductionCase random_deduction_case(std::mt19937& rng, const Damping& damping) {
    auto f = random_forest(rng);
    DeductionCase c{build_db(f), nullptr, {}, {}};
    const auto& db = c.db;
    int focal_cls = std::uniform_int_distribution<int>(0, static_cast<int>(f.classes.size()) - 1)(rng);
    const auto& c1 = f.classes[focal_cls];
    const ClassEntity* owner = db.classes_named(c1.name).at(0);
    c.focal = db.methods_of(owner->uri, "focal").at(0);

    std::vector<std::tuple<int, Phase, double>> rows;
    for (int m : c1.methods) {
        if (!std::bernoulli_distribution(0.7)(rng)) continue;
        auto phase = static_cast<Phase>(std::uniform_int_distribution<int>(0, 3)(rng));
        double conf = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        auto* related = resolve_related_method(db, *owner, pool_ref(m));
        if (c.intra.add({c.focal->uri, related->uri, phase, "r", conf})) rows.emplace_back(m, phase, conf);
    }
    // an inherited relation never spreads
    if (c1.parent >= 0 && !f.classes[c1.parent].methods.empty()) {
        int m = f.classes[c1.parent].methods.front();
        auto* parent_m = resolve_related_method(db, *db.classes_named(f.classes[c1.parent].name).at(0), pool_ref(m));
        c.intra.add({c.focal->uri, parent_m->uri, Phase::when, "inherited", 0.99, true});
    }
    // keep only rows that survived subsumption
    std::vector<std::tuple<int, Phase, double>> surviving;
    for (auto& [m, phase, conf] : rows) {
        auto* related = resolve_related_method(db, *owner, pool_ref(m));
        auto* r = c.intra.find(related->uri, phase);
        if (r && r->confidence == conf) surviving.emplace_back(m, phase, conf);
    }
    for (auto& [key, phases] : oracle_deduction(f, focal_cls, surviving, damping)) {
        auto* cls = db.classes_named(key.first).at(0);
        auto* m = resolve_related_method(db, *cls, pool_ref(key.second));
        for (auto& [phase, e] : phases) c.expected[{m->uri, phase}] = {e.confidence, e.provenance};
    }
    return c;
}

Problems check_deduction(const DeductionCase& c, const PropertySet& got) {
    Problems problems;
    for (auto& [key, value] : c.expected) {
        auto* r = got.find(key.first, key.second);
        if (!r) {
            problems.push_back("missing " + key.first.value);
            continue;
        }
        if (std::abs(r->confidence - value.first) > 1e-12) {
            problems.push_back(fmt::format("{}: confidence {} expected {}", key.first.value, r->confidence, value.first));
        }
        if (r->provenance != value.second) problems.push_back(key.first.value + ": wrong provenance");
        if (!r->external) problems.push_back(key.first.value + ": not marked external");
    }
    if (got.size() != c.expected.size()) {
        problems.push_back(fmt::format("{} relations deduced, oracle {}", got.size(), c.expected.size()));
    }
    return problems;
}

// ---------------------------------------------------------------------------
// test bundle slicing
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kVocab = {"Alpha", "Beta", "Gamma", "Delta", "Omega", "Sigma", "Kappa", "Zeta"};

// Chunks of the synthetic source between declaration starts, keyed by the
// declared name, recovered with line patterns rather than a parser.
struct OracleMember {
    std::string name;
    std::string text;
};

std::vector<OracleMember> oracle_members(const std::string& source) {
    std::vector<OracleMember> out;
    auto lines = split_lines(source);
    static const std::regex field_re(R"(^    private \w+ (f\d+) = .*;$)");
    static const std::regex helper_re(R"(^    private \w+ (h\d+)\(\) \{$)");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::smatch m;
        if (std::regex_match(lines[i], m, field_re)) {
            out.push_back({m[1], lines[i]});
        } else if (std::regex_match(lines[i], m, helper_re)) {
            out.push_back({m[1], lines[i] + "\n" + lines[i + 1] + "\n" + lines[i + 2]});
        }
    }
    return out;
}

std::string import_simple_name(const std::string& line) {
    auto simple = line.substr(line.rfind('.') + 1);
    simple.pop_back();  // ';'
    return simple;
}

}  // namespace

SyntheticTestClass synthesize_test_class(std::mt19937& rng) {
    auto pick = [&] { return kVocab[rng() % kVocab.size()]; };
    SyntheticTestClass s;
    s.source = "package gen;\n\n";
    for (auto& v : kVocab) {
        if (rng() % 2) s.source += "import lib." + v + ";\n";
    }
    if (rng() % 2) s.source += "import static lib.Checks.*;\n";
    s.source += "\npublic class GenTest {\n";
    int fields = 1 + rng() % 4;
    for (int i = 0; i < fields; ++i) {
        s.source += "    private " + pick() + " f" + std::to_string(i) + " = make(\"" + pick() + "\");\n";
    }
    int helpers = rng() % 3;
    for (int i = 0; i < helpers; ++i) {
        s.source += "    private " + pick() + " h" + std::to_string(i) + "() {\n        return f" +
                    std::to_string(rng() % fields) + ";\n    }\n";
    }
    s.source += "    @BeforeEach\n    void setUp() {\n        f0 = new " + pick() + "();\n    }\n";
    int cases = 1 + rng() % 3;
    for (int i = 0; i < cases; ++i) {
        std::string body;
        for (int k = 0; k < 3; ++k) {
            switch (rng() % 3) {
                case 0: body += "        " + pick() + " v" + std::to_string(k) + " = null;\n"; break;
                case 1: body += "        use(f" + std::to_string(rng() % fields) + ");\n"; break;
                default:
                    body += helpers ? "        use(h" + std::to_string(rng() % helpers) + "());\n"
                                    : "        // " + pick() + " only in a comment\n";
            }
        }
        s.source += "    @Test\n    void case" + std::to_string(i) + "() {\n" + body + "    }\n";
        TestCaseAnalysis c;
        c.name = "case" + std::to_string(i);
        if (rng() % 2) c.fixtures_used = {"setUp"};
        s.analysis.test_cases.push_back(c);
    }
    s.source += "}\n";
    s.analysis.file_path = "src/test/java/gen/GenTest.java";
    s.analysis.name = "GenTest";
    s.analysis.fixtures = {"setUp"};
    return s;
}

std::set<std::string> scan_tokens(std::string text) {
    static const std::regex comment(R"(//[^\n]*)");
    static const std::regex literal(R"("([^"\\]|\\.)*")");
    static const std::regex word(R"([A-Za-z_$][A-Za-z0-9_$]*)");
    text = std::regex_replace(text, comment, " ");
    text = std::regex_replace(text, literal, " ");
    std::set<std::string> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), word); it != std::sregex_iterator(); ++it) {
        out.insert(it->str());
    }
    return out;
}

Problems check_slice(const SyntheticTestClass& s, const TestCaseAnalysis& c, const TestBundle& b) {
    Problems problems;
    std::set<std::string> tokens = scan_tokens(b.test_case);
    if (!c.fixtures_used.empty()) {
        auto setup = s.source.substr(s.source.find("    @BeforeEach"));
        setup = setup.substr(0, setup.find("    }\n") + 6);
        for (auto& t : scan_tokens(setup)) tokens.insert(t);
        if (b.fixtures.size() != 1) problems.push_back(c.name + ": setUp fixture missing");
    } else if (!b.fixtures.empty()) {
        problems.push_back(c.name + ": fixture included without use");
    }
    auto members = oracle_members(s.source);
    std::vector<bool> used(members.size(), false);
    for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (!used[i] && tokens.count(members[i].name)) {
                used[i] = grew = true;
                for (auto& t : scan_tokens(members[i].text)) tokens.insert(t);
            }
        }
    }
    std::vector<std::string> expected_members;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (used[i]) expected_members.push_back(members[i].text);
    }
    std::vector<std::string> expected_imports;
    for (auto& line : split_lines(s.source)) {
        if (line.rfind("import ", 0) != 0) continue;
        auto simple = import_simple_name(line);
        if (simple == "*" || tokens.count(simple)) expected_imports.push_back(line);
    }
    if (b.imports != expected_imports) problems.push_back(c.name + ": imports differ from the token-scan oracle");
    std::vector<std::string> got_members;
    for (auto& m : b.class_members) got_members.push_back(m.back() == '\n' ? m.substr(0, m.size() - 1) : m);
    if (got_members != expected_members) problems.push_back(c.name + ": members differ from the token-scan oracle");

    auto origin = split_lines(s.source);
    std::set<std::string> origin_lines(origin.begin(), origin.end());
    for (auto& line : split_lines(b.render())) {
        if (line.rfind("// " + c.name + " from ", 0) == 0 || line.empty()) continue;
        if (!origin_lines.count(line)) problems.push_back(c.name + ": line not in origin: " + line);
    }

    // dropping any non-wildcard import or member breaks the predicate
    auto remaining_tokens = [&](std::size_t skip_member) {
        std::set<std::string> t = scan_tokens(b.test_case);
        for (auto& f : b.fixtures) {
            for (auto& x : scan_tokens(f)) t.insert(x);
        }
        for (std::size_t i = 0; i < b.class_members.size(); ++i) {
            if (i == skip_member) continue;
            for (auto& x : scan_tokens(b.class_members[i])) t.insert(x);
        }
        return t;
    };
    auto all = remaining_tokens(SIZE_MAX);
    for (auto& imp : b.imports) {
        auto simple = import_simple_name(imp);
        if (simple != "*" && !all.count(simple)) problems.push_back(c.name + ": unused import " + imp);
    }
    static const std::regex member_name(R"(\b([fh]\d+)\b)");
    for (std::size_t i = 0; i < b.class_members.size(); ++i) {
        std::smatch m;
        std::regex_search(b.class_members[i], m, member_name);
        if (!remaining_tokens(i).count(m[1])) problems.push_back(c.name + ": unused member " + m[1].str());
    }
    return problems;
}

// ---------------------------------------------------------------------------
// iteration
// ---------------------------------------------------------------------------

PropertyRelation complete_relation(const std::string& focal, const std::string& related, double confidence) {
    PropertyRelation r;
    r.focal = Uri(focal);
    r.related = Uri(related);
    r.phase = Phase::complete;
    r.confidence = confidence;
    return r;
}

TestBundle seed_bundle(const std::string& name) {
    TestBundle b;
    b.test_class = Uri("T");
    b.case_name = name;
    b.test_case = "@Test void " + name + "() {}";
    return b;
}

IterationHooks FakePipeline::hooks() {
    IterationHooks h;
    h.relations = [this](const Uri& m) {
        auto it = graph.find(m);
        return it == graph.end() ? PropertySet{} : it->second;
    };
    h.generate = [this](const Uri& m, const PropertySet&, const TestBundleIndex&, bool fallback) {
        calls.emplace_back(m, fallback);
        GenerationRecord rec;
        rec.fallback = fallback;
        rec.verdict = Verdict::of(broken.contains(m) ? failure : VerdictKind::success);
        if (rec.admitted()) on_disk.insert(m);
        return rec;
    };
    h.refresh = [this](const std::vector<const GenerationRecord*>&) {
        TestBundleIndex next = seeds;
        for (auto& m : on_disk) next.add(m, seed_bundle("gen"));
        return next;
    };
    return h;
}

GraphCase random_graph_case(std::mt19937& rng) {
    GraphCase c;
    auto& p = c.pipeline;
    const int n = std::uniform_int_distribution<int>(1, 14)(rng);
    for (int i = 0; i < n; ++i) c.focal.emplace_back("m" + std::to_string(i));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j && std::bernoulli_distribution(0.15)(rng)) {
                p.graph[c.focal[i]].add(complete_relation(c.focal[i].value, c.focal[j].value));
            }
        }
        if (std::bernoulli_distribution(0.15)(rng)) p.seeds.add(c.focal[i], seed_bundle("t"));
        if (std::bernoulli_distribution(0.15)(rng)) p.broken.insert(c.focal[i]);
    }
    c.options.max_rounds = std::uniform_int_distribution<int>(1, 6)(rng);
    c.options.fallback_sweep = std::bernoulli_distribution(0.5)(rng);
    return c;
}

std::vector<std::set<Uri>> oracle_layers(const std::vector<Uri>& focal, const std::map<Uri, PropertySet>& graph,
                                         const std::set<Uri>& seeds, const std::set<Uri>& broken, int max_rounds) {
    std::set<Uri> covered = seeds;
    std::vector<std::set<Uri>> layers;
    for (int round = 0; round < max_rounds; ++round) {
        std::set<Uri> layer;
        for (auto& m : focal) {
            if (covered.contains(m) || broken.contains(m)) continue;
            auto it = graph.find(m);
            if (it == graph.end()) continue;
            for (auto& r : it->second.relations()) {
                if (covered.contains(r.related)) layer.insert(m);
            }
        }
        if (layer.empty()) break;
        covered.insert(layer.begin(), layer.end());
        layers.push_back(std::move(layer));
    }
    return layers;
}

Problems check_iteration(const GraphCase& c, const IterationReport& report) {
    Problems problems;
    const auto& p = c.pipeline;
    std::set<Uri> seeds;
    for (auto& [uri, _] : p.seeds.by_method()) seeds.insert(uri);
    auto layers = oracle_layers(c.focal, p.graph, seeds, p.broken, c.options.max_rounds);
    if (report.progressing_rounds != static_cast<int>(layers.size())) {
        problems.push_back(fmt::format("{} progressing rounds, oracle {}", report.progressing_rounds, layers.size()));
        return problems;
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        auto& got = report.rounds[k].newly_covered;
        if (std::set<Uri>(got.begin(), got.end()) != layers[k]) problems.push_back(fmt::format("round {} layer differs", k + 1));
    }
    const int bound = std::min(c.options.max_rounds, static_cast<int>(c.focal.size()));
    if (report.progressing_rounds > bound) problems.push_back("progressing rounds exceed min(max_rounds, |M|)");
    if (report.rounds.size() > static_cast<std::size_t>(c.options.max_rounds)) problems.push_back("more rounds than max_rounds");

    std::set<Uri> covered = seeds;
    auto absorb = [&](const std::vector<Uri>& newly) {
        for (auto& u : newly) {
            if (!covered.insert(u).second) problems.push_back(u.value + " covered twice");
        }
    };
    for (auto& r : report.rounds) absorb(r.newly_covered);
    if (report.fallback_sweep) absorb(report.fallback_sweep->newly_covered);
    if (covered != report.covered_methods) problems.push_back("covered set is not the union of the rounds");
    for (auto& u : report.covered_methods) {
        if (!seeds.contains(u) && !p.on_disk.contains(u)) problems.push_back(u.value + " covered without a test");
    }
    return problems;
}

}  // namespace apt::testing
