#include "apt/generator.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <map>
#include <regex>
#include <tuple>

namespace apt {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

std::string_view to_string(RankCategory category) {
    switch (category) {
        case RankCategory::intra_complete: return "intra_complete";
        case RankCategory::intra_gwt: return "intra_gwt";
        case RankCategory::inter_complete: return "inter_complete";
        case RankCategory::inter_gwt: return "inter_gwt";
    }
    return "intra_complete";
}

RankCategory category_of(const PropertyRelation& relation) {
    const bool complete = relation.phase == Phase::complete;
    if (!relation.external) return complete ? RankCategory::intra_complete : RankCategory::intra_gwt;
    return complete ? RankCategory::inter_complete : RankCategory::inter_gwt;
}

namespace {

bool rank_before(const PropertyRelation& a, const PropertyRelation& b) {
    return std::tuple(-a.confidence, a.related, a.phase) < std::tuple(-b.confidence, b.related, b.phase);
}

std::string related_name(const MetainfoDatabase& db, const Uri& uri) {
    const MethodEntity* m = db.find_method(uri);
    return m ? method_reference(db, *m) : uri.value;
}

}  // namespace

RankedSet rank(const PropertySet& relations, const TestBundleIndex& bundles, std::size_t n) {
    if (n == 0) throw ConfigError("n must be at least 1");
    std::array<std::vector<PropertyRelation>, 4> buckets;
    for (auto& r : relations.relations()) {
        if (bundles.has_bundles(r.related)) buckets[static_cast<int>(category_of(r))].push_back(r);
    }
    RankedSet out;
    for (int c = 0; c < 4; ++c) {
        auto& bucket = buckets[c];
        std::sort(bucket.begin(), bucket.end(), rank_before);
        const auto category = static_cast<RankCategory>(c);
        std::vector<bool> picked(bucket.size(), false);
        std::size_t taken = 0;
        if (category == RankCategory::intra_gwt || category == RankCategory::inter_gwt) {
            // the best of each phase goes first; reserved slots in rank order
            std::vector<std::size_t> reserved;
            for (Phase p : {Phase::given, Phase::when, Phase::then}) {
                for (std::size_t i = 0; i < bucket.size(); ++i) {
                    if (bucket[i].phase == p) {
                        reserved.push_back(i);
                        break;
                    }
                }
            }
            std::sort(reserved.begin(), reserved.end());
            for (std::size_t i : reserved) {
                if (taken == n) break;
                picked[i] = true;
                ++taken;
            }
        }
        for (std::size_t i = 0; i < bucket.size() && taken < n; ++i) {
            if (!picked[i]) {
                picked[i] = true;
                ++taken;
            }
        }
        for (std::size_t i = 0; i < bucket.size(); ++i) {
            if (picked[i]) out.items.push_back({bucket[i], category});
        }
    }
    return out;
}

std::string RankedSet::render(const MetainfoDatabase& db) const {
    std::string out;
    for (auto& item : items) {
        const auto& r = item.relation;
        out += fmt::format("- [{}] {} ({:.2f}){}{}\n", to_string(r.phase), related_name(db, r.related), r.confidence,
                           r.reason.empty() ? "" : ": ", r.reason);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

BundleMap collect_bundles(const RankedSet& ranked, const TestBundleIndex& index, const MetainfoDatabase& db,
                          std::size_t per_method) {
    BundleMap map;
    std::map<Uri, std::size_t> slot;
    for (auto& item : ranked.items) {
        const Uri& uri = item.relation.related;
        auto [it, fresh] = slot.try_emplace(uri, map.groups.size());
        if (fresh) {
            BundleGroup g;
            g.method = uri;
            g.category = item.category;
            g.label = related_name(db, uri) + " [" + std::string(to_string(item.relation.phase)) + "]";
            const auto& all = index.bundles_for(uri);
            g.bundles.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(per_method, all.size())));
            map.groups.push_back(std::move(g));
        } else {
            auto& label = map.groups[it->second].label;
            label.insert(label.size() - 1, ", " + std::string(to_string(item.relation.phase)));
        }
    }
    return map;
}

BundleMap minimize_bundles(BundleMap map) {
    std::set<std::pair<Uri, std::string>> seen;
    for (auto& g : map.groups) {
        std::vector<TestBundle> kept;
        for (auto& b : g.bundles) {
            if (seen.insert({b.test_class, b.case_name}).second) {
                kept.push_back(std::move(b));
            } else {
                g.repeats.push_back(b.case_name + " from " + b.test_class.value);
            }
        }
        g.bundles = std::move(kept);
    }

    // a block counts once per bundle
    std::map<std::string, int> uses;
    std::vector<std::pair<std::string, std::string>> order;  // normalized, verbatim, first-seen
    auto blocks_of = [](TestBundle& b) {
        return std::array<std::vector<std::string>*, 3>{&b.imports, &b.class_members, &b.fixtures};
    };
    for (auto& g : map.groups) {
        for (auto& b : g.bundles) {
            std::set<std::string> in_bundle;
            for (auto* blocks : blocks_of(b)) {
                for (auto& block : *blocks) {
                    auto key = normalize_whitespace(block);
                    if (!in_bundle.insert(key).second) continue;
                    if (uses[key]++ == 0) order.emplace_back(key, block);
                }
            }
        }
    }
    std::set<std::string> hoisted;
    for (auto& [key, verbatim] : order) {
        if (uses[key] > 1 && hoisted.insert(key).second) map.shared.push_back(verbatim);
    }
    // imports first, like a Java file
    std::stable_partition(map.shared.begin(), map.shared.end(),
                          [](const std::string& b) { return trim(b).rfind("import ", 0) == 0; });
    for (auto& g : map.groups) {
        for (auto& b : g.bundles) {
            for (auto* blocks : blocks_of(b)) {
                std::erase_if(*blocks, [&](const std::string& block) { return hoisted.contains(normalize_whitespace(block)); });
            }
        }
    }
    map.minimized = true;
    return map;
}

std::string BundleMap::render() const {
    std::string out;
    if (!shared.empty()) {
        out += "// shared by the tests below\n";
        for (auto& block : shared) {
            out += block;
            if (!block.empty() && block.back() != '\n') out += "\n";
        }
        out += "\n";
    }
    for (auto& g : groups) {
        if (g.bundles.empty() && g.repeats.empty()) continue;
        out += "// reference tests of " + g.label + "\n";
        for (auto& r : g.repeats) out += "// also: " + r + " (above)\n";
        for (auto& b : g.bundles) out += b.render() + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Context packing
// ---------------------------------------------------------------------------

std::string GenerationInput::static_context_text() const {
    std::vector<std::string> parts;
    if (!sc.empty()) parts.push_back(sc.render());
    if (!owner_rendering.empty()) parts.push_back(owner_rendering);
    for (auto& [uri, text] : montages) parts.push_back(text);
    if (parts.empty()) return "(none)";
    std::string out;
    for (auto& p : parts) {
        if (!out.empty()) out += "\n";
        out += p;
        if (!p.empty() && p.back() != '\n') out += "\n";
    }
    return out;
}

std::string generated_test_name(const MetainfoDatabase& db, const MethodEntity& focal) {
    const ClassEntity* owner = db.find_class(focal.owner);
    std::string name = owner ? owner->name : std::string("Focal");
    std::string method = focal.name;
    if (!method.empty()) method[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(method[0])));
    name += method;
    if (owner) {
        auto overloads = db.methods_of(owner->uri, focal.name);
        if (overloads.size() > 1) {
            for (std::size_t i = 0; i < overloads.size(); ++i) {
                if (overloads[i]->uri == focal.uri) name += std::to_string(i + 1);
            }
        }
    }
    return name + "GenTest";
}

namespace {

const ClassEntity& owner_of(const MetainfoDatabase& db, const MethodEntity& focal) {
    const ClassEntity* owner = db.find_class(focal.owner);
    if (!owner) throw NotFoundError("owner of " + focal.uri.value + " is not indexed");
    return *owner;
}

GenerationInput base_input(const MethodEntity& focal, const MetainfoDatabase& db, ScopeGraphCache& graphs) {
    const ClassEntity& owner = owner_of(db, focal);
    GenerationInput in;
    in.class_name = owner.name;
    in.package_name = owner.package_name;
    in.test_class = generated_test_name(db, focal);
    in.focal_name = method_display_name(focal);
    in.focal_source = reindent(focal.original_string, focal.span.start_col, "");
    in.sc = resolve_ref(focal, db, graphs);
    return in;
}

}  // namespace

GenerationInput fallback_input(const MethodEntity& focal, const MetainfoDatabase& db, ScopeGraphCache& graphs,
                               const PromptLibrary& prompts, const PackOptions& options, const Tokenizer& tokenizer) {
    auto in = base_input(focal, db, graphs);
    in.fallback = true;
    const auto& tmpl = prompts.get("fallback");
    in.template_id = tmpl.id;
    in.template_hash = tmpl.hash;
    in.prompt = tmpl.render({{"n", std::to_string(options.n)},
                             {"class_name", in.class_name},
                             {"focal_name", in.focal_name},
                             {"package", in.package_name},
                             {"test_class", in.test_class},
                             {"focal_source", in.focal_source},
                             {"static_context", in.static_context_text()}});
    in.token_estimate = tokenizer.count(in.prompt);
    if (in.token_estimate > options.token_budget) {
        throw BudgetExceeded(fmt::format("fallback context for {} needs {} tokens, budget {}", in.focal_name,
                                         in.token_estimate, options.token_budget));
    }
    return in;
}

GenerationInput pack_context(const MethodEntity& focal, const RankedSet& ranked, const MetainfoDatabase& db,
                             ScopeGraphCache& graphs, const TestBundleIndex& bundles, const PromptLibrary& prompts,
                             const PackOptions& options, const Tokenizer& tokenizer) {
    if (ranked.empty()) return fallback_input(focal, db, graphs, prompts, options, tokenizer);
    const ClassEntity& owner = owner_of(db, focal);
    auto in = base_input(focal, db, graphs);
    in.ranked = ranked;
    const auto& tmpl = prompts.get("generate");
    in.template_id = tmpl.id;
    in.template_hash = tmpl.hash;

    std::set<std::string> keep = {focal.signature};
    std::vector<Uri> montage_order;
    for (auto& item : ranked.items) {
        const MethodEntity* m = db.find_method(item.relation.related);
        if (!m) continue;
        if (m->owner == owner.uri) {
            keep.insert(m->signature);
        } else if (std::find(montage_order.begin(), montage_order.end(), m->owner) == montage_order.end()) {
            montage_order.push_back(m->owner);
        }
    }
    auto shrink = class_shrink(db, owner, keep);
    in.owner_rendering = shrink.text;
    in.kept_methods = shrink.kept_methods;
    for (auto& uri : montage_order) {
        if (const ClassEntity* c = db.find_class(uri)) in.montages.emplace_back(uri, class_montage(db, *c).text);
    }
    BundleMap raw = collect_bundles(ranked, bundles, db, options.bundles_per_method);
    const std::string related_text = ranked.render(db);

    auto assemble = [&] {
        in.bundles = minimize_bundles(raw);
        auto rendered = in.bundles.render();
        in.prompt = tmpl.render({{"n", std::to_string(options.n)},
                                 {"class_name", in.class_name},
                                 {"focal_name", in.focal_name},
                                 {"package", in.package_name},
                                 {"test_class", in.test_class},
                                 {"focal_source", in.focal_source},
                                 {"static_context", in.static_context_text()},
                                 {"related", related_text},
                                 {"bundles", rendered.empty() ? "(none)" : rendered}});
        in.token_estimate = tokenizer.count(in.prompt);
        return in.token_estimate <= options.token_budget;
    };
    if (assemble()) return in;

    auto drop_groups = [&](RankCategory category) {
        for (auto it = raw.groups.rbegin(); it != raw.groups.rend(); ++it) {
            if (it->category != category || it->bundles.empty()) continue;
            it->bundles.clear();
            in.trimmed.push_back("bundles of " + it->label);
            if (assemble()) return true;
        }
        return false;
    };
    if (drop_groups(RankCategory::inter_gwt)) return in;
    if (drop_groups(RankCategory::inter_complete)) return in;
    in.owner_rendering = class_montage(db, owner).text;
    in.kept_methods.clear();
    in.trimmed.push_back("shrink of " + owner.name + " replaced by its montage");
    if (assemble()) return in;
    if (drop_groups(RankCategory::intra_gwt)) return in;
    while (!in.montages.empty()) {
        in.trimmed.push_back("montage of " + in.montages.back().first.value);
        in.montages.pop_back();
        if (assemble()) return in;
    }
    throw BudgetExceeded(fmt::format("context for {} needs {} tokens after trimming, budget {}", in.focal_name,
                                     in.token_estimate, options.token_budget));
}

// ---------------------------------------------------------------------------
// Post-processing
// ---------------------------------------------------------------------------

namespace {

std::optional<std::string> extract_code(std::string_view reply) {
    static const std::regex fence(R"(```[A-Za-z0-9_+-]*[ \t]*\r?\n([\s\S]*?)```)");
    std::string text(reply);
    std::optional<std::string> first;
    for (std::sregex_iterator it(text.begin(), text.end(), fence), end; it != end; ++it) {
        std::string body = (*it)[1].str();
        if (body.find("class ") != std::string::npos) return body;
        if (!first) first = body;
    }
    if (first) return first;
    // bare code: from the first line that can start a compilation unit
    static const std::regex start(R"((^|\n)[ \t]*(package |import |@|public |final |class ))");
    std::smatch m;
    if (std::regex_search(text, m, start) && text.find('{') != std::string::npos) {
        auto at = static_cast<std::size_t>(m.position(0)) + m[1].length();
        return text.substr(at);
    }
    return std::nullopt;
}

Node top_level_class(const SyntaxTree& tree) {
    for (auto& c : tree.root().named_children()) {
        if (c.kind() == "class_declaration") return c;
    }
    return {};
}

std::size_t count_test_methods(const Node& cls, const std::vector<std::string>& markers) {
    std::size_t count = 0;
    Node body = cls.field("body");
    if (!body) return 0;
    for (auto& member : body.children_of_kind("method_declaration")) {
        Node mods = member.first_child_of_kind("modifiers");
        if (!mods) continue;
        for (auto& a : mods.named_children()) {
            if (a.kind() != "marker_annotation" && a.kind() != "annotation") continue;
            auto name = std::string(a.field("name").text());
            auto dot = name.rfind('.');
            if (dot != std::string::npos) name = name.substr(dot + 1);
            if (std::find(markers.begin(), markers.end(), name) != markers.end()) {
                ++count;
                break;
            }
        }
    }
    return count;
}

}  // namespace

PostProcessed postprocess_test(std::string_view reply, const std::string& package_name, const std::string& class_name,
                               const std::vector<std::string>& test_markers) {
    PostProcessed out;
    auto code = extract_code(reply);
    if (!code || trim(*code).empty()) {
        out.problems.push_back("the answer contains no Java code");
        return out;
    }
    std::string src = std::string(trim(*code)) + "\n";
    {
        auto tree = SyntaxTree::parse(src, java_profile());
        Node cls = top_level_class(tree);
        if (!cls) {
            out.problems.push_back("no top-level test class found");
            out.source = src;
            return out;
        }
        auto old_name = std::string(cls.field("name").text());
        if (old_name != class_name) {
            src = std::regex_replace(src, std::regex("\\b" + old_name + "\\b"), class_name);
        }
    }
    // package line
    {
        static const std::regex pkg(R"(^\s*package\s+[\w.]+\s*;[^\n]*\n?)");
        std::smatch m;
        std::string line = package_name.empty() ? "" : "package " + package_name + ";\n";
        if (std::regex_search(src, m, pkg)) {
            src = line + m.suffix().str();
        } else if (!line.empty()) {
            src = line + "\n" + src;
        }
    }
    // JUnit imports the body needs but does not declare
    std::vector<std::string> missing;
    static const std::regex uses_test(R"(@Test\b)");
    static const std::regex imports_test(R"(import\s+(org\.junit\.(jupiter\.api\.)?Test|org\.junit\.(jupiter\.api\.)?\*)\s*;)");
    static const std::regex uses_assert(R"(\bassert[A-Z]\w*\s*\()");
    static const std::regex imports_assert(R"(import\s+static\s+[\w.]*Assert\w*\.)");
    if (std::regex_search(src, uses_test) && !std::regex_search(src, imports_test)) {
        missing.push_back("import org.junit.jupiter.api.Test;");
    }
    if (std::regex_search(src, uses_assert) && !std::regex_search(src, imports_assert)) {
        missing.push_back("import static org.junit.jupiter.api.Assertions.*;");
    }
    if (!missing.empty()) {
        std::string block = join(missing, "\n") + "\n";
        auto after_pkg = package_name.empty() ? std::string::npos : src.find(";\n");
        if (after_pkg == std::string::npos) {
            src = block + "\n" + src;
        } else {
            src.insert(after_pkg + 2, "\n" + block);
        }
    }
    out.source = src;

    auto tree = SyntaxTree::parse(src, java_profile());
    if (tree.has_errors()) out.problems.push_back("syntax error at " + tree.first_error_location());
    Node cls = top_level_class(tree);
    if (cls && count_test_methods(cls, test_markers) == 0) out.problems.push_back("the class has no test methods");
    return out;
}

// ---------------------------------------------------------------------------
// Generation and repair
// ---------------------------------------------------------------------------

namespace {

fs::path test_path(const GenerateOptions& options, const std::string& package_name, const std::string& class_name) {
    fs::path p = options.output_root;
    for (auto& part : split(package_name, '.')) {
        if (!part.empty()) p /= part;
    }
    return p / (class_name + ".java");
}

void tally(GeneratedTest& t, const ChatResponse& res) {
    t.usage.prompt_tokens += res.usage.prompt_tokens;
    t.usage.completion_tokens += res.usage.completion_tokens;
    ++t.llm_calls;
}

}  // namespace

GeneratedTest generate(const MethodEntity& focal, const GenerationInput& input, LlmGateway& llm,
                       const GenerateOptions& options) {
    GeneratedTest t;
    t.focal = focal.uri;
    t.class_name = input.test_class;
    t.package_name = input.package_name;
    t.path = test_path(options, input.package_name, input.test_class);

    ChatRequest req;
    req.template_id = input.template_id;
    req.template_hash = input.template_hash;
    req.messages.push_back(input.prompt);
    std::vector<std::string> problems;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto res = llm.complete(req);
        tally(t, res);
        auto pp = postprocess_test(res.text, input.package_name, input.test_class, options.test_markers);
        if (pp.problems.empty()) {
            t.source = std::move(pp.source);
            write_file_atomic(t.path, t.source);
            return t;
        }
        problems = pp.problems;
        req.messages.push_back(res.text);
        req.messages.push_back("The answer could not be used: " + join(problems, "; ") +
                               ". Return the complete test class " + input.test_class +
                               " in a single ```java block.");
    }
    throw GenerationFailure("no usable test for " + input.focal_name + ": " + join(problems, "; "));
}

GeneratedTest repair(GeneratedTest test, const GenerationInput& input, LlmGateway& llm, const PromptLibrary& prompts,
                     const VerifyFn& verify, int max_rounds, const GenerateOptions& options) {
    const int rounds = std::clamp(max_rounds, 0, kMaxRepairRounds);
    if (!test.verdict) test.verdict = verify(test);
    const auto& tmpl = prompts.get("repair");
    for (int round = 1; round <= rounds && !test.verdict->passed(); ++round) {
        ChatRequest req;
        req.template_id = tmpl.id;
        req.template_hash = tmpl.hash;
        req.messages.push_back(tmpl.render({{"class_name", input.class_name},
                                            {"focal_name", input.focal_name},
                                            {"test_class", test.class_name},
                                            {"round", std::to_string(round)},
                                            {"test_source", test.source},
                                            {"diagnostics", test.verdict->diagnostics.empty()
                                                                ? std::string(to_string(test.verdict->kind))
                                                                : test.verdict->diagnostics},
                                            {"focal_source", input.focal_source},
                                            {"static_context", input.static_context_text()}}));
        auto res = llm.complete(std::move(req));
        tally(test, res);
        test.repair_round = round;
        auto pp = postprocess_test(res.text, test.package_name, test.class_name, options.test_markers);
        if (!pp.problems.empty()) {
            test.verdict = Verdict::of(VerdictKind::compile_run_error, join(pp.problems, "\n"));
            continue;
        }
        test.source = std::move(pp.source);
        write_file_atomic(test.path, test.source);
        test.verdict = verify(test);
    }
    return test;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

GenerationRecord generate_for_method(const MethodEntity& focal, const PropertySet& relations,
                                     const GenerationContext& ctx, bool force_fallback) {
    GenerationRecord rec;
    rec.focal = focal.uri;
    const auto started = std::chrono::steady_clock::now();
    try {
        RankedSet ranked;
        if (!force_fallback) ranked = rank(relations, ctx.bundles, ctx.options.pack.n);
        rec.ranked = ranked.size();
        auto input = pack_context(focal, ranked, ctx.db, ctx.graphs, ctx.bundles, ctx.prompts, ctx.options.pack);
        rec.fallback = input.fallback;
        auto test = generate(focal, input, ctx.llm, ctx.options.generate);
        VerifyFn verify = ctx.verify ? ctx.verify : [](const GeneratedTest&) {
            auto v = Verdict::of(VerdictKind::success);
            v.verified = false;
            return v;
        };
        test = repair(std::move(test), input, ctx.llm, ctx.prompts, verify, ctx.options.max_repair_rounds,
                      ctx.options.generate);
        rec.verdict = test.verdict;
        rec.test = std::move(test);
    } catch (const GenerationFailure& e) {
        rec.error = e.what();
    } catch (const MalformedOutput& e) {
        rec.error = e.what();
    } catch (const BudgetExceeded& e) {
        rec.error = e.what();
    } catch (const ProviderError& e) {
        rec.error = e.what();
    }
    if (!rec.error.empty()) spdlog::warn("generation for {} failed: {}", focal.uri.value, rec.error);
    if (ctx.llm.provider().measures_time()) {
        rec.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    }
    return rec;
}

std::string to_json_line(const GenerationRecord& record, const fs::path& relative_to) {
    nlohmann::ordered_json j;
    j["focal"] = record.focal.value;
    j["attempt"] = record.attempt;
    j["fallback"] = record.fallback;
    j["ranked"] = record.ranked;
    if (record.verdict) {
        j["verdict"] = to_string(record.verdict->kind);
        j["verified"] = record.verdict->verified;
        if (record.verdict->line_coverage) j["line_coverage"] = *record.verdict->line_coverage;
        if (record.verdict->branch_coverage) j["branch_coverage"] = *record.verdict->branch_coverage;
    } else {
        j["verdict"] = "GenerationFailure";
        j["error"] = record.error;
    }
    if (record.test) {
        j["test_class"] = record.test->class_name;
        std::error_code ec;
        auto rel = fs::relative(record.test->path, relative_to, ec);
        j["test_file"] = (ec || rel.empty() ? record.test->path : rel).generic_string();
        j["repair_round"] = record.test->repair_round;
        j["llm_calls"] = record.test->llm_calls;
        j["prompt_tokens"] = record.test->usage.prompt_tokens;
        j["completion_tokens"] = record.test->usage.completion_tokens;
    }
    if (record.elapsed) j["elapsed_ms"] = record.elapsed->count();
    return j.dump();
}

}  // namespace apt
