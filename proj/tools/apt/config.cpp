#include "config.hpp"

#include "toml_subset.hpp"

#include "apt/error.hpp"
#include "apt/syntax.hpp"
#include "apt/util.hpp"

#include <fmt/format.h>

#include <functional>

namespace apt::cli {

namespace fs = std::filesystem;

namespace {

struct KeySpec {
    std::string name;
    std::string doc;
    std::function<std::string(const ToolConfig&)> show;
    std::function<void(ToolConfig&, const TomlValue&, const std::string& where)> apply;
};

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string list_text(const std::vector<std::string>& items) {
    std::vector<std::string> q;
    for (auto& i : items) q.push_back(quoted(i));
    return "[" + join(q, ", ") + "]";
}

std::string number_text(double d) { return fmt::format("{}", d); }

const std::string& want_string(const TomlValue& v, const std::string& where) {
    if (auto* s = std::get_if<std::string>(&v)) return *s;
    bad(where, fmt::format("expected a string, got {}", type_name(v)));
}

std::int64_t want_int(const TomlValue& v, const std::string& where, std::int64_t lo, std::int64_t hi) {
    auto* i = std::get_if<std::int64_t>(&v);
    if (!i) bad(where, fmt::format("expected an integer, got {}", type_name(v)));
    if (*i < lo || *i > hi) bad(where, fmt::format("{} is outside [{}, {}]", *i, lo, hi));
    return *i;
}

double want_fraction(const TomlValue& v, const std::string& where) {
    double d = 0;
    if (auto* f = std::get_if<double>(&v)) {
        d = *f;
    } else if (auto* i = std::get_if<std::int64_t>(&v)) {
        d = static_cast<double>(*i);
    } else {
        bad(where, fmt::format("expected a number, got {}", type_name(v)));
    }
    if (!(d > 0.0 && d <= 1.0)) bad(where, fmt::format("{} is outside (0, 1]", d));
    return d;
}

bool want_bool(const TomlValue& v, const std::string& where) {
    if (auto* b = std::get_if<bool>(&v)) return *b;
    bad(where, fmt::format("expected a boolean, got {}", type_name(v)));
}

const std::vector<std::string>& want_list(const TomlValue& v, const std::string& where) {
    if (auto* l = std::get_if<std::vector<std::string>>(&v)) return *l;
    bad(where, fmt::format("expected a string array, got {}", type_name(v)));
}

constexpr std::int64_t kBig = 1'000'000'000;

const std::vector<KeySpec>& key_specs() {
    static const std::vector<KeySpec> specs = [] {
        std::vector<KeySpec> k;
        auto path = [&](std::string name, std::string doc, fs::path ToolConfig::*field) {
            k.push_back({name, doc, [field](const ToolConfig& c) { return quoted((c.*field).generic_string()); },
                         [field](ToolConfig& c, const TomlValue& v, const std::string& w) { c.*field = want_string(v, w); }});
        };
        auto size = [&](std::string name, std::string doc, std::size_t ToolConfig::*field, std::int64_t lo) {
            k.push_back({name, doc, [field](const ToolConfig& c) { return std::to_string(c.*field); },
                         [field, lo](ToolConfig& c, const TomlValue& v, const std::string& w) {
                             c.*field = static_cast<std::size_t>(want_int(v, w, lo, kBig));
                         }});
        };
        auto list = [&](std::string name, std::string doc, std::function<std::vector<std::string>&(ToolConfig&)> get) {
            k.push_back({name, doc, [get](const ToolConfig& c) { return list_text(get(const_cast<ToolConfig&>(c))); },
                         [get](ToolConfig& c, const TomlValue& v, const std::string& w) { get(c) = want_list(v, w); }});
        };

        path("repo.root", "repository root, relative to this file", &ToolConfig::root);
        k.push_back({"repo.language", "language profile",
                     [](const ToolConfig& c) { return quoted(c.index.language); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) {
                         c.index.language = want_string(v, w);
                         if (!find_profile(c.index.language)) bad(w, "unknown language profile '" + c.index.language + "'");
                     }});
        list("repo.source_globs", "source files to index", [](ToolConfig& c) -> auto& { return c.index.source_globs; });
        list("repo.exclude_globs", "paths never indexed", [](ToolConfig& c) -> auto& { return c.index.exclude_globs; });
        list("repo.test_root_globs", "paths holding test classes",
             [](ToolConfig& c) -> auto& { return c.index.test_root_globs; });

        k.push_back({"provider.kind", "mock or http", [](const ToolConfig& c) { return quoted(c.provider); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) {
                         c.provider = want_string(v, w);
                         if (c.provider != "mock" && c.provider != "http") bad(w, "expected \"mock\" or \"http\"");
                     }});
        path("provider.mock_script", "scripted answers for the mock provider, relative to this file",
             &ToolConfig::mock_script);
        k.push_back({"provider.endpoint", "chat completions URL", [](const ToolConfig& c) { return quoted(c.http.endpoint); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) { c.http.endpoint = want_string(v, w); }});
        k.push_back({"provider.model", "model name", [](const ToolConfig& c) { return quoted(c.http.model); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) { c.http.model = want_string(v, w); }});
        k.push_back({"provider.api_key_env", "environment variable holding the API key",
                     [](const ToolConfig& c) { return quoted(c.http.api_key_env); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) { c.http.api_key_env = want_string(v, w); }});
        k.push_back({"provider.timeout_seconds", "per-request timeout",
                     [](const ToolConfig& c) { return std::to_string(c.http.timeout_seconds); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) {
                         c.http.timeout_seconds = static_cast<int>(want_int(v, w, 1, 3600));
                     }});
        k.push_back({"provider.retries", "retries after a transient failure",
                     [](const ToolConfig& c) { return std::to_string(c.retries); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) {
                         c.retries = static_cast<int>(want_int(v, w, 0, 10));
                     }});
        size("provider.max_concurrent_requests", "requests in flight at once", &ToolConfig::max_concurrent_requests, 1);

        size("generation.n", "related methods kept per category", &ToolConfig::n, 1);
        k.push_back({"generation.max_repair_rounds", "repair prompts per test, at most 2",
                     [](const ToolConfig& c) { return std::to_string(c.max_repair_rounds); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) {
                         c.max_repair_rounds = static_cast<int>(want_int(v, w, 0, kRepairRoundCap));
                     }});
        size("generation.token_budget", "prompt tokens per generation request", &ToolConfig::token_budget, 1);
        size("generation.bundles_per_method", "reference tests shown per related method",
             &ToolConfig::bundles_per_method, 1);
        size("retrieval.inherited_budget", "tokens of inherited method bodies in the class context",
             &ToolConfig::inherited_budget, 0);
        auto damping = [&](std::string name, std::string doc, double Damping::*field) {
            k.push_back({name, doc, [field](const ToolConfig& c) { return number_text(c.damping.*field); },
                         [field](ToolConfig& c, const TomlValue& v, const std::string& w) {
                             c.damping.*field = want_fraction(v, w);
                         }});
        };
        damping("retrieval.damping_inheritance", "confidence factor for parent/child deductions",
                &Damping::inheritance);
        damping("retrieval.damping_sibling", "confidence factor for sibling deductions", &Damping::sibling);
        damping("retrieval.damping_interface", "confidence factor for co-implementor deductions", &Damping::interface);

        k.push_back({"iteration.max_rounds", "round limit of iterate",
                     [](const ToolConfig& c) { return std::to_string(c.max_rounds); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) {
                         c.max_rounds = static_cast<int>(want_int(v, w, 1, 1000));
                     }});
        k.push_back({"iteration.fallback_sweep", "fallback generation for methods never eligible",
                     [](const ToolConfig& c) { return c.fallback_sweep ? "true" : "false"; },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) { c.fallback_sweep = want_bool(v, w); }});

        auto runner = [&](std::string name, std::string doc, std::string RunnerConfig::*field) {
            k.push_back({name, doc, [field](const ToolConfig& c) { return quoted(c.runner.*field); },
                         [field](ToolConfig& c, const TomlValue& v, const std::string& w) {
                             c.runner.*field = want_string(v, w);
                         }});
        };
        runner("runner.compile_cmd", "compiles the project with the new test; {project} {test_file} {test_class} {test_name}",
               &RunnerConfig::compile_cmd);
        runner("runner.test_cmd", "runs the new test; empty disables verification", &RunnerConfig::test_cmd);
        runner("runner.coverage_cmd", "produces the JaCoCo report; optional", &RunnerConfig::coverage_cmd);
        runner("runner.test_root", "where the test file is placed", &RunnerConfig::test_root);
        list("runner.test_report_globs", "JUnit XML reports",
             [](ToolConfig& c) -> auto& { return c.runner.test_report_globs; });
        list("runner.coverage_report_globs", "JaCoCo XML reports",
             [](ToolConfig& c) -> auto& { return c.runner.coverage_report_globs; });

        path("output.dir", "results, generated tests and caches, relative to the root", &ToolConfig::out_dir);
        path("output.index_dir", "persisted metainfo database, relative to the root", &ToolConfig::index_dir);
        path("output.prompts_dir", "template overrides (<id>.txt); empty uses the built-in ones",
             &ToolConfig::prompts_dir);
        k.push_back({"output.transcripts", "record every model exchange under <output.dir>/transcripts",
                     [](const ToolConfig& c) { return c.transcripts ? "true" : "false"; },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) { c.transcripts = want_bool(v, w); }});
        k.push_back({"run.jobs", "parallel workers", [](const ToolConfig& c) { return std::to_string(c.jobs); },
                     [](ToolConfig& c, const TomlValue& v, const std::string& w) {
                         c.jobs = static_cast<unsigned>(want_int(v, w, 1, 256));
                     }});
        return k;
    }();
    return specs;
}

ToolConfig defaults() {
    ToolConfig c;
    c.root = ".";
    c.out_dir = "apt-out";
    c.index_dir = ".apt-index";
    return c;
}

void resolve_paths(ToolConfig& c, const fs::path& base_dir) {
    auto against = [](const fs::path& base, const fs::path& p) {
        auto r = (p.is_absolute() ? p : base / p).lexically_normal();
        return r.has_filename() ? r : r.parent_path();  // "root/." normalizes to "root/"
    };
    c.root = against(base_dir, c.root);
    c.out_dir = against(c.root, c.out_dir);
    c.index_dir = against(c.root, c.index_dir);
    if (!c.prompts_dir.empty()) c.prompts_dir = against(c.root, c.prompts_dir);
    if (!c.mock_script.empty()) c.mock_script = against(base_dir, c.mock_script);
    // generated tests and caches never count as sources
    for (auto* dir : {&c.out_dir, &c.index_dir}) {
        auto rel = dir->lexically_relative(c.root).generic_string();
        if (rel.empty() || rel.rfind("..", 0) == 0 || rel == ".") continue;
        auto glob = rel + "/**";
        if (std::find(c.index.exclude_globs.begin(), c.index.exclude_globs.end(), glob) == c.index.exclude_globs.end()) {
            c.index.exclude_globs.push_back(glob);
        }
    }
}

}  // namespace

GatewayConfig ToolConfig::gateway() const {
    GatewayConfig g;
    g.retries = retries;
    g.max_concurrent_requests = max_concurrent_requests;
    g.context_budget = token_budget;
    if (transcripts) g.transcript_dir = out_dir / "transcripts";
    return g;
}

GenerationOptions ToolConfig::generation() const {
    GenerationOptions g;
    g.pack.n = n;
    g.pack.token_budget = token_budget;
    g.pack.bundles_per_method = bundles_per_method;
    g.generate.output_root = out_dir / "generated-tests";
    g.max_repair_rounds = max_repair_rounds;
    return g;
}

RetrievalOptions ToolConfig::retrieval() const {
    RetrievalOptions r;
    r.damping = damping;
    r.intra.inherited_budget = inherited_budget;
    return r;
}

IterationConfig ToolConfig::iteration() const {
    IterationConfig it;
    it.root = root;
    it.out_dir = out_dir;
    it.index = index;
    it.index.jobs = jobs;
    it.analyze.index = index;
    it.retrieval = retrieval();
    it.generation = generation();
    it.iteration.max_rounds = max_rounds;
    it.iteration.fallback_sweep = fallback_sweep;
    it.iteration.jobs = jobs;
    if (runner_configured()) it.runner = runner;
    return it;
}

ToolConfig config_from_toml(std::string_view text, const std::string& origin, const fs::path& base_dir) {
    auto table = parse_toml_subset(text, origin);
    ToolConfig c = defaults();
    const auto& specs = key_specs();
    for (auto& [key, entry] : table) {
        auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) { return s.name == key; });
        const auto where = fmt::format("{}:{}: {}", origin, entry.line, key);
        if (it == specs.end()) bad(where, "unknown key (see apt --help for the list)");
        it->apply(c, entry.value, where);
    }
    resolve_paths(c, base_dir);
    return c;
}

ToolConfig load_config(const std::optional<fs::path>& explicit_path, const fs::path& cwd) {
    fs::path file;
    if (explicit_path) {
        file = explicit_path->is_absolute() ? *explicit_path : cwd / *explicit_path;
        if (!fs::exists(file)) throw ConfigError("config file not found: " + file.string());
    } else if (fs::exists(cwd / "apt.toml")) {
        file = cwd / "apt.toml";
    }
    if (file.empty()) {
        ToolConfig c = defaults();
        resolve_paths(c, cwd);
        return c;
    }
    auto c = config_from_toml(read_file(file), file.string(), file.parent_path());
    c.config_file = file;
    return c;
}

std::string config_reference() {
    const ToolConfig d = defaults();
    std::string out;
    std::string section;
    std::size_t width = 0;
    for (auto& s : key_specs()) width = std::max(width, s.name.size() - s.name.find('.') - 1 + 3 + s.show(d).size());
    for (auto& s : key_specs()) {
        auto dot = s.name.find('.');
        auto sec = s.name.substr(0, dot);
        if (sec != section) {
            out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
            section = sec;
        }
        auto assignment = s.name.substr(dot + 1) + " = " + s.show(d);
        out += fmt::format("  {:<{}}  # {}\n", assignment, width, s.doc);
    }
    return out;
}

}  // namespace apt::cli
