#include "cli.hpp"

#include "config.hpp"

#include "apt/compression.hpp"
#include "apt/error.hpp"
#include "apt/generator.hpp"
#include "apt/iteration.hpp"
#include "apt/llm.hpp"
#include "apt/metainfo.hpp"
#include "apt/prompts.hpp"
#include "apt/property.hpp"
#include "apt/scope_graph.hpp"
#include "apt/test_bundle.hpp"
#include "apt/util.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <ostream>

namespace apt::cli {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Overrides {
    std::optional<fs::path> config;
    std::optional<unsigned> jobs;
    std::optional<std::string> provider;
    bool transcripts = false;
    bool no_verify = false;
    bool dump_scope_graph = false;
    std::string method;
    std::string target;  // class or file of the debug commands
    std::vector<std::string> keep;
};

class Session {
public:
    Session(const Overrides& o, const fs::path& cwd, std::ostream& out) : overrides_(o), out_(out) {
        config_ = load_config(o.config, cwd);
        if (o.jobs) {
            if (*o.jobs == 0) throw ConfigError("--jobs must be at least 1");
            config_.jobs = *o.jobs;
        }
        if (o.provider) config_.provider = *o.provider;
        if (o.transcripts) config_.transcripts = true;
        if (o.no_verify) config_.runner.test_cmd.clear();
        prompts_ = config_.prompts_dir.empty() ? PromptLibrary::embedded()
                                               : PromptLibrary::with_overrides(config_.prompts_dir);
    }

    const ToolConfig& config() const { return config_; }

    IndexConfig index_config() const {
        auto ic = config_.index;
        ic.jobs = config_.jobs;
        return ic;
    }

    const MetainfoDatabase& db() {
        if (!db_) {
            if (fs::exists(config_.index_dir / "manifest.json")) {
                db_ = std::make_unique<MetainfoDatabase>(load(config_.index_dir));
            } else {
                spdlog::info("no index at {}; indexing now", config_.index_dir.string());
                db_ = std::make_unique<MetainfoDatabase>(index_repository(config_.root, index_config()));
                persist(*db_, config_.index_dir);
            }
        }
        return *db_;
    }

    LlmGateway& llm() {
        if (!llm_) {
            std::unique_ptr<Provider> provider;
            if (config_.provider == "mock") {
                if (config_.mock_script.empty()) {
                    throw ConfigError("provider.kind = \"mock\" needs provider.mock_script");
                }
                provider = std::make_unique<ScriptedProvider>(Json::parse(read_file(config_.mock_script)));
            } else if (config_.provider == "http") {
                provider = std::make_unique<HttpProvider>(config_.http);
            } else {
                throw ConfigError("unknown provider '" + config_.provider + "' (mock or http)");
            }
            llm_ = std::make_unique<LlmGateway>(std::move(provider), config_.gateway());
        }
        return *llm_;
    }

    const PromptLibrary& prompts() const { return prompts_; }

    ScopeGraphCache& graphs() {
        if (!graphs_) graphs_ = std::make_unique<ScopeGraphCache>(config_.root);
        return *graphs_;
    }

    AnalyzeOptions analyze_options() const {
        AnalyzeOptions a;
        a.index = config_.index;
        return a;
    }

    TestBundleIndex bundles() {
        auto run = analyze_repository_tests(db(), config_.root, llm(), prompts_, config_.out_dir / "analyses",
                                            config_.jobs, analyze_options());
        for (auto& f : run.failures) spdlog::warn("test analysis failed for {}: {}", f.path, f.message);
        return build_bundle_index(run.analyses, db(), config_.root, analyze_options().bundle);
    }

    const MethodEntity& focal() {
        if (overrides_.method.empty()) throw ConfigError("--method is required");
        if (auto* m = db().find_method(Uri(overrides_.method))) return *m;
        if (auto* m = resolve_method_reference(db(), overrides_.method)) return *m;
        throw ConfigError("no indexed method matches '" + overrides_.method +
                          "' (give a method Uri or Class.method(Types))");
    }

    const ClassEntity& target_class() {
        if (auto* c = db().find_class(Uri(overrides_.target))) return *c;
        auto hits = db().classes_named(overrides_.target);
        if (hits.size() == 1) return *hits[0];
        if (hits.empty()) throw ConfigError("no indexed class matches '" + overrides_.target + "'");
        std::vector<std::string> uris;
        for (auto* c : hits) uris.push_back(c->uri.value);
        throw ConfigError("'" + overrides_.target + "' is ambiguous: " + join(uris, ", "));
    }

    void maybe_dump_scope_graph(const MethodEntity& m) {
        if (!overrides_.dump_scope_graph) return;
        const ClassEntity* owner = db().find_class(m.owner);
        if (!owner) return;
        auto file = config_.out_dir / "scope-graphs" / (sha256_hex(owner->path).substr(0, 16) + ".dot");
        write_file_atomic(file, graphs().get(owner->path).to_dot());
        spdlog::info("scope graph of {} written to {}", owner->path, file.string());
    }

    std::ostream& out() { return out_; }
    const Overrides& overrides() const { return overrides_; }

private:
    Overrides overrides_;
    std::ostream& out_;
    ToolConfig config_;
    PromptLibrary prompts_;
    std::unique_ptr<MetainfoDatabase> db_;
    std::unique_ptr<LlmGateway> llm_;
    std::unique_ptr<ScopeGraphCache> graphs_;
};

int cmd_index(Session& s) {
    auto& cfg = s.config();
    auto db = index_repository(cfg.root, s.index_config());
    persist(db, cfg.index_dir);
    auto& e = db.entities();
    if (e.files.empty()) spdlog::warn("no source files found under {}", cfg.root.string());
    for (auto& d : e.skipped) spdlog::warn("skipped {}: {}", d.path, d.message);
    s.out() << fmt::format("indexed {} files, {} classes, {} methods ({} skipped) into {}\n", e.files.size(),
                           e.classes.size(), e.methods.size(), e.skipped.size(), cfg.index_dir.string());
    return kExitOk;
}

int cmd_analyze_tests(Session& s) {
    auto& cfg = s.config();
    auto run = analyze_repository_tests(s.db(), cfg.root, s.llm(), s.prompts(), cfg.out_dir / "analyses", cfg.jobs,
                                        s.analyze_options());
    for (auto& f : run.failures) spdlog::warn("test analysis failed for {}: {}", f.path, f.message);
    auto index = build_bundle_index(run.analyses, s.db(), cfg.root, s.analyze_options().bundle);
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (auto& [uri, list] : index.by_method()) {
        auto& arr = summary[uri.value] = nlohmann::ordered_json::array();
        for (auto& b : list) arr.push_back(b.case_name + " from " + b.test_class.value);
    }
    write_file_atomic(cfg.out_dir / "bundles.json", summary.dump(2) + "\n");
    s.out() << fmt::format("analyzed {} test classes ({} cached, {} failed); bundles for {} methods\n",
                           run.analyses.size() + run.failures.size(), run.cache_hits, run.failures.size(),
                           index.size());
    return run.failures.empty() ? kExitOk : kExitPipeline;
}

int cmd_retrieve(Session& s) {
    auto& focal = s.focal();
    s.maybe_dump_scope_graph(focal);
    auto set = cached_relations(focal, s.db(), s.graphs(), s.llm(), s.prompts(), s.config().retrieval(),
                                s.config().out_dir / "relations");
    s.out() << to_json(set, s.db()).dump(2) << "\n";
    return kExitOk;
}

int cmd_generate(Session& s) {
    auto& cfg = s.config();
    auto& focal = s.focal();
    s.maybe_dump_scope_graph(focal);
    auto relations = cached_relations(focal, s.db(), s.graphs(), s.llm(), s.prompts(), cfg.retrieval(),
                                      cfg.out_dir / "relations");
    auto bundles = s.bundles();
    auto options = cfg.generation();
    options.generate.output_root = cfg.out_dir / "generate";
    GenerationContext ctx{s.db(), s.graphs(), bundles, s.llm(), s.prompts(), options, {}};
    if (cfg.runner_configured()) {
        ctx.verify = [&](const GeneratedTest& t) { return verify(t, cfg.root, cfg.runner, s.db(), focal); };
    }
    auto rec = generate_for_method(focal, relations, ctx);
    s.out() << to_json_line(rec, cfg.root) << "\n";
    return rec.error.empty() ? kExitOk : kExitPipeline;
}

int cmd_iterate(Session& s) {
    auto& cfg = s.config();
    run_iterations(s.llm(), s.prompts(), cfg.iteration());
    s.out() << render_report(read_file(cfg.out_dir / "results.jsonl"), read_file(cfg.out_dir / "iteration-report.json"));
    return kExitOk;
}

int cmd_report(Session& s) {
    auto& out_dir = s.config().out_dir;
    for (auto* name : {"results.jsonl", "iteration-report.json"}) {
        if (!fs::exists(out_dir / name)) throw IoError(fmt::format("{} not found; run apt iterate first", (out_dir / name).string()));
    }
    s.out() << render_report(read_file(out_dir / "results.jsonl"), read_file(out_dir / "iteration-report.json"));
    return kExitOk;
}

int cmd_montage(Session& s) {
    s.out() << class_montage(s.db(), s.target_class()).text;
    return kExitOk;
}

int cmd_shrink(Session& s) {
    std::set<std::string> keep;
    for (auto& k : s.overrides().keep) keep.insert(k);
    auto r = class_shrink(s.db(), s.target_class(), keep);
    for (auto& u : r.unknown_keep) spdlog::warn("--keep {} matched no method", u);
    s.out() << r.text;
    return kExitOk;
}

int cmd_dump_scope_graph(Session& s) {
    auto path = fs::path(s.overrides().target);
    auto rel = path.is_absolute() ? path.lexically_relative(s.config().root) : path;
    s.out() << s.graphs().get(rel.generic_string()).to_dot();
    return kExitOk;
}

std::string percent(std::size_t part, std::size_t total) {
    return total == 0 ? "-" : fmt::format("{:.1f}%", 100.0 * static_cast<double>(part) / static_cast<double>(total));
}

}  // namespace

std::string render_report(const std::string& results_jsonl, const std::string& iteration_report) {
    // last record per focal method is its final outcome
    std::map<std::string, Json> final_by_focal;
    for (auto& line : split_lines(results_jsonl)) {
        if (trim(line).empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& e) {
            throw ParseError(std::string("results.jsonl: ") + e.what());
        }
        auto focal = j.value("focal", "");
        final_by_focal[focal] = std::move(j);
    }
    std::map<std::string, std::size_t> counts;
    std::size_t unverified = 0;
    for (auto& [_, j] : final_by_focal) {
        ++counts[j.value("verdict", "GenerationFailure")];
        if (j.contains("verified") && !j["verified"].get<bool>()) ++unverified;
    }
    const std::size_t total = final_by_focal.size();
    const std::size_t passed = counts["Success"] + counts["FullCoverage"];

    std::string out = "Verdict                 Methods  Share\n";
    auto row = [&](const std::string& label, std::size_t n) {
        out += fmt::format("{:<22} {:>8}  {:>6}\n", label, n, percent(n, total));
    };
    row("Compile/run error", counts["CompileRunError"]);
    row("Assertion error", counts["AssertError"]);
    row("Successful execution", passed);
    row("  full coverage", counts["FullCoverage"]);
    row("Generation failure", counts["GenerationFailure"]);
    out += fmt::format("{:<22} {:>8}\n", "Total", total);
    if (unverified > 0) out += fmt::format("({} results are unverified: no test runner configured)\n", unverified);

    Json report;
    try {
        report = Json::parse(iteration_report);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("iteration-report.json: ") + e.what());
    }
    out += "\nRound  Pending  Eligible  Generated  Admitted  Newly covered\n";
    auto round_row = [&](const std::string& label, const Json& r) {
        out += fmt::format("{:<5}  {:>7}  {:>8}  {:>9}  {:>8}  {:>13}\n", label, r.value("pending", 0),
                           r.value("eligible", 0), r.value("generated", 0), r.value("admitted", 0),
                           r.contains("newly_covered") ? r["newly_covered"].size() : 0);
    };
    for (auto& r : report.value("rounds", Json::array())) round_row(std::to_string(r.value("round", 0)), r);
    if (report.contains("fallback_sweep") && report["fallback_sweep"].is_object()) {
        round_row("sweep", report["fallback_sweep"]);
    }
    out += fmt::format("\nCovered {} of {} focal methods ({} before iterating); stopped: {}\n",
                       report.value("covered", 0), report.value("focal_methods", 0), report.value("initially_covered", 0),
                       report.value("stop_reason", std::string("?")));
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const fs::path& cwd) {
    CLI::App app{"Test generation from property relations between methods and their existing tests.", "apt"};
    app.require_subcommand(1);
    app.footer("\nConfiguration (apt.toml, or --config FILE); every key with its default:\n\n" + config_reference() +
               "\nExit codes: 0 success, 1 usage or configuration error, 2 pipeline failure.");
    Overrides o;
    std::string config_path;
    app.add_option("--config", config_path, "config file (default: ./apt.toml when present)");
    unsigned jobs = 0;
    auto* jobs_opt = app.add_option("--jobs", jobs, "parallel workers (overrides run.jobs)");
    std::string provider;
    auto* provider_opt =
        app.add_option("--provider", provider, "model provider")->check(CLI::IsMember({"mock", "http"}));
    app.add_flag("--transcripts", o.transcripts, "record model exchanges under <output.dir>/transcripts");

    auto* index = app.add_subcommand("index", "build and persist the metainfo database");
    auto* analyze = app.add_subcommand("analyze-tests", "analyze existing tests into test bundles");
    auto* retrieve = app.add_subcommand("retrieve", "print the property relations of a method as JSON");
    auto* generate = app.add_subcommand("generate", "generate a test for one method");
    auto* iterate = app.add_subcommand("iterate", "generate tests round by round until nothing changes");
    auto* report = app.add_subcommand("report", "summarize results.jsonl and iteration-report.json");
    auto* montage = app.add_subcommand("montage", "print the montage of a class");
    auto* shrink = app.add_subcommand("shrink", "print a class with only the kept method bodies");
    auto* dump = app.add_subcommand("dump-scope-graph", "print the scope graph of a source file as DOT");

    for (auto* sub : {retrieve, generate}) {
        sub->add_option("--method", o.method, "method Uri or Class.method(Types)")->required();
        sub->add_flag("--dump-scope-graph", o.dump_scope_graph,
                      "also write the focal file's scope graph to <output.dir>/scope-graphs");
    }
    for (auto* sub : {generate, iterate}) sub->add_flag("--no-verify", o.no_verify, "skip the test runner");
    for (auto* sub : {montage, shrink}) sub->add_option("class", o.target, "class Uri or simple name")->required();
    shrink->add_option("--keep", o.keep, "methods whose bodies stay")->delimiter(',');
    dump->add_option("file", o.target, "source file, relative to the repository root")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error[usage]: " << e.what() << "\n";
        return kExitUsage;
    }
    if (!config_path.empty()) o.config = fs::path(config_path);
    if (jobs_opt->count()) o.jobs = jobs;
    if (provider_opt->count()) o.provider = provider;

    try {
        Session s(o, cwd, out);
        if (index->parsed()) return cmd_index(s);
        if (analyze->parsed()) return cmd_analyze_tests(s);
        if (retrieve->parsed()) return cmd_retrieve(s);
        if (generate->parsed()) return cmd_generate(s);
        if (iterate->parsed()) return cmd_iterate(s);
        if (report->parsed()) return cmd_report(s);
        if (montage->parsed()) return cmd_montage(s);
        if (shrink->parsed()) return cmd_shrink(s);
        if (dump->parsed()) return cmd_dump_scope_graph(s);
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error[config]: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error[pipeline]: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const Json::exception& e) {
        err << "error[pipeline]: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const fs::filesystem_error& e) {
        err << "error[pipeline]: " << e.what() << "\n";
        return kExitPipeline;
    }
}

}  // namespace apt::cli
