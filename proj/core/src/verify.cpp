#include "apt/generator.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <random>
#include <sstream>

namespace apt {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string_view to_string(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::compile_run_error: return "CompileRunError";
        case VerdictKind::assert_error: return "AssertError";
        case VerdictKind::success: return "Success";
        case VerdictKind::full_coverage: return "FullCoverage";
    }
    return "CompileRunError";
}

namespace {

pt::ptree parse_xml(const std::string& document) {
    std::istringstream in(document);
    pt::ptree tree;
    try {
        pt::read_xml(in, tree, pt::xml_parser::no_comments);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(std::string("malformed XML report: ") + e.what());
    }
    return tree;
}

std::string attr(const pt::ptree& node, const char* name) {
    return node.get<std::string>(std::string("<xmlattr>.") + name, "");
}

template <typename Fn>
void walk(const pt::ptree& node, const std::string& name, Fn&& fn) {
    for (auto& [key, child] : node) {
        if (key == "<xmlattr>") continue;
        if (key == name) fn(child);
        walk(child, name, fn);
    }
}

std::string tail(const std::string& text, std::size_t n = 4000) {
    return text.size() <= n ? text : "..." + text.substr(text.size() - n);
}

}  // namespace

JUnitOutcome parse_junit_reports(const std::vector<std::string>& documents, std::string_view test_class) {
    JUnitOutcome out;
    for (auto& doc : documents) {
        auto tree = parse_xml(doc);
        walk(tree, "testcase", [&](const pt::ptree& tc) {
            if (attr(tc, "classname") != test_class) return;
            out.found = true;
            ++out.tests;
            for (auto& [key, child] : tc) {
                if (key != "failure" && key != "error" && key != "skipped") continue;
                if (key == "failure") ++out.failures;
                if (key == "error") ++out.errors;
                if (key == "skipped") {
                    ++out.skipped;
                    continue;
                }
                auto message = attr(child, "message");
                auto type = attr(child, "type");
                out.messages += attr(tc, "name") + ": " + type + (message.empty() ? "" : ": " + message) + "\n";
            }
        });
    }
    return out;
}

double MethodCoverage::line_percent() const {
    int total = line_missed + line_covered;
    return total == 0 ? 100.0 : 100.0 * line_covered / total;
}

double MethodCoverage::branch_percent() const {
    int total = branch_missed + branch_covered;
    return total == 0 ? 100.0 : 100.0 * branch_covered / total;
}

namespace {

std::string internal_class_name(const MetainfoDatabase& db, const ClassEntity& cls) {
    std::string name = cls.name;
    for (const ClassEntity* c = &cls; c->enclosing;) {
        c = db.find_class(*c->enclosing);
        if (!c) break;
        name = c->name + "$" + name;
    }
    std::string pkg = cls.package_name;
    std::replace(pkg.begin(), pkg.end(), '.', '/');
    return pkg.empty() ? name : pkg + "/" + name;
}

// Simple names of the parameter types in a JVM method descriptor.
std::vector<std::string> descriptor_params(std::string_view desc) {
    static const std::map<char, std::string> primitives = {{'B', "byte"},  {'C', "char"}, {'D', "double"},
                                                           {'F', "float"}, {'I', "int"},  {'J', "long"},
                                                           {'S', "short"}, {'Z', "boolean"}};
    std::vector<std::string> out;
    std::size_t i = desc.find('(');
    if (i == std::string_view::npos) return out;
    ++i;
    while (i < desc.size() && desc[i] != ')') {
        std::string dims;
        while (i < desc.size() && desc[i] == '[') {
            dims += "[]";
            ++i;
        }
        if (i >= desc.size()) break;
        if (desc[i] == 'L') {
            auto end = desc.find(';', i);
            if (end == std::string_view::npos) break;
            auto full = desc.substr(i + 1, end - i - 1);
            auto cut = full.find_last_of("/$");
            out.push_back(std::string(cut == std::string_view::npos ? full : full.substr(cut + 1)) + dims);
            i = end + 1;
        } else {
            auto it = primitives.find(desc[i]);
            out.push_back((it == primitives.end() ? std::string(1, desc[i]) : it->second) + dims);
            ++i;
        }
    }
    return out;
}

}  // namespace

MethodCoverage parse_jacoco_method(const std::string& document, const MetainfoDatabase& db,
                                   const MethodEntity& method) {
    MethodCoverage out;
    const ClassEntity* owner = db.find_class(method.owner);
    if (!owner) return out;
    const std::string wanted_class = internal_class_name(db, *owner);
    std::vector<std::string> wanted;
    for (auto& p : method.params) {
        auto t = erase_type(p.type);
        if (t.size() >= 3 && t.compare(t.size() - 3, 3, "...") == 0) t = t.substr(0, t.size() - 3) + "[]";
        wanted.push_back(t);
    }
    auto tree = parse_xml(document);
    int best = -1;  // 2: exact types, 1: erased type variables
    walk(tree, "class", [&](const pt::ptree& cls) {
        if (attr(cls, "name") != wanted_class) return;
        for (auto& [key, m] : cls) {
            if (key != "method" || attr(m, "name") != method.name) continue;
            auto params = descriptor_params(attr(m, "desc"));
            if (params.size() != wanted.size()) continue;
            int score = 2;
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (params[i] == wanted[i]) continue;
                // a type variable erases to its bound, usually Object
                if (params[i].rfind("Object", 0) == 0) {
                    score = std::min(score, 1);
                } else {
                    score = 0;
                    break;
                }
            }
            if (score == 0 || score <= best) continue;
            best = score;
            out = MethodCoverage{};
            out.found = true;
            for (auto& [ck, counter] : m) {
                if (ck != "counter") continue;
                auto type = attr(counter, "type");
                int missed = counter.get<int>("<xmlattr>.missed", 0);
                int covered = counter.get<int>("<xmlattr>.covered", 0);
                if (type == "LINE") {
                    out.line_missed = missed;
                    out.line_covered = covered;
                } else if (type == "BRANCH") {
                    out.branch_missed = missed;
                    out.branch_covered = covered;
                }
            }
        }
    });
    return out;
}

namespace {

// Scratch copy of the project, removed on scope exit.
class Sandbox {
public:
    explicit Sandbox(const fs::path& project) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / fmt::format("apt-verify-{:016x}", (std::uint64_t{rd()} << 32) | rd());
        fs::create_directories(path_);
        for (auto& entry : fs::directory_iterator(project)) {
            auto name = entry.path().filename().string();
            if (name == ".git" || name == ".apt-index" || name == "apt-out") continue;
            fs::copy(entry.path(), path_ / name, fs::copy_options::recursive | fs::copy_options::copy_symlinks);
        }
    }
    ~Sandbox() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    Sandbox(const Sandbox&) = delete;
    Sandbox& operator=(const Sandbox&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::vector<std::string> read_reports(const fs::path& root, const std::vector<std::string>& globs) {
    std::vector<std::pair<std::string, std::string>> found;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
         it != fs::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        auto rel = fs::relative(it->path(), root).generic_string();
        if (glob_match_any(globs, rel)) found.emplace_back(rel, read_file(it->path()));
    }
    std::sort(found.begin(), found.end());
    std::vector<std::string> out;
    for (auto& [_, text] : found) out.push_back(std::move(text));
    return out;
}

std::string substitute(std::string command, const std::map<std::string, std::string>& values) {
    for (auto& [key, value] : values) {
        const std::string needle = "{" + key + "}";
        for (auto at = command.find(needle); at != std::string::npos; at = command.find(needle, at + value.size())) {
            command.replace(at, needle.size(), value);
        }
    }
    return command;
}

}  // namespace

Verdict verify(const GeneratedTest& test, const fs::path& project, const RunnerConfig& runner,
               const MetainfoDatabase& db, const MethodEntity& focal) {
    if (runner.test_cmd.empty()) throw ConfigError("runner.test_cmd is not configured");
    Sandbox box(project);
    fs::path rel = runner.test_root;
    for (auto& part : split(test.package_name, '.')) {
        if (!part.empty()) rel /= part;
    }
    rel /= test.class_name + ".java";
    write_file_atomic(box.path() / rel, test.source);

    const std::string fqn = test.package_name.empty() ? test.class_name : test.package_name + "." + test.class_name;
    const std::map<std::string, std::string> values = {{"project", shell_quote(box.path().string())},
                                                       {"test_file", shell_quote(rel.generic_string())},
                                                       {"test_class", fqn},
                                                       {"test_name", test.class_name}};
    if (!runner.compile_cmd.empty()) {
        auto r = run_shell(substitute(runner.compile_cmd, values), box.path());
        if (r.exit_code != 0) return Verdict::of(VerdictKind::compile_run_error, tail(r.output));
    }
    auto run = run_shell(substitute(runner.test_cmd, values), box.path());
    auto outcome = parse_junit_reports(read_reports(box.path(), runner.test_report_globs), fqn);
    if (!outcome.found) {
        return Verdict::of(VerdictKind::compile_run_error,
                run.exit_code != 0 ? tail(run.output) : "no test report names " + fqn);
    }
    if (outcome.errors > 0) return Verdict::of(VerdictKind::compile_run_error, outcome.messages);
    if (outcome.failures > 0) return Verdict::of(VerdictKind::assert_error, outcome.messages);
    if (outcome.tests == outcome.skipped) return Verdict::of(VerdictKind::compile_run_error, "no test of " + fqn + " ran");

    auto v = Verdict::of(VerdictKind::success);
    if (!runner.coverage_cmd.empty()) {
        auto cov = run_shell(substitute(runner.coverage_cmd, values), box.path());
        if (cov.exit_code != 0) spdlog::warn("coverage command failed: {}", tail(cov.output, 400));
        for (auto& doc : read_reports(box.path(), runner.coverage_report_globs)) {
            auto mc = parse_jacoco_method(doc, db, focal);
            if (!mc.found) continue;
            v.line_coverage = mc.line_percent();
            v.branch_coverage = mc.branch_percent();
            if (mc.line_missed == 0 && mc.branch_missed == 0 && mc.line_covered > 0) v.kind = VerdictKind::full_coverage;
            break;
        }
    }
    return v;
}

}  // namespace apt
