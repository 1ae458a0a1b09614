#include "apt/metainfo_json.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <fstream>

namespace apt {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> uri_strings(const std::vector<Uri>& uris) {
    std::vector<std::string> out;
    for (auto& u : uris) out.push_back(u.value);
    return out;
}

std::vector<Uri> uris_from(const Json& j) {
    std::vector<Uri> out;
    for (auto& v : j) out.emplace_back(v.get<std::string>());
    return out;
}

// method lists use the bare signature; the full uri is class uri + "." + it
std::vector<std::string> signatures_of(const ClassEntity& cls, const std::vector<Uri>& uris) {
    std::vector<std::string> out;
    const auto prefix = cls.uri.value + ".";
    for (auto& u : uris) {
        out.push_back(u.value.rfind(prefix, 0) == 0 ? u.value.substr(prefix.size()) : u.value);
    }
    return out;
}

std::vector<Uri> uris_from_signatures(const Uri& cls, const Json& j) {
    std::vector<Uri> out;
    for (auto& v : j) out.emplace_back(cls.value + "." + v.get<std::string>());
    return out;
}

Json diagnostics_to_json(const std::vector<Diagnostic>& diags) {
    Json arr = Json::array();
    for (auto& d : diags) arr.push_back({{"path", d.path}, {"message", d.message}});
    return arr;
}

std::vector<Diagnostic> diagnostics_from_json(const Json& j) {
    std::vector<Diagnostic> out;
    for (auto& d : j) out.push_back({d.at("path").get<std::string>(), d.at("message").get<std::string>()});
    return out;
}

}  // namespace

Json span_to_json(const Span& s) {
    return Json::array({s.start_byte, s.end_byte, s.start_row, s.start_col, s.end_row, s.end_col});
}

Span span_from_json(const Json& j) {
    return Span{j.at(0).get<std::uint32_t>(), j.at(1).get<std::uint32_t>(), j.at(2).get<std::uint32_t>(),
                j.at(3).get<std::uint32_t>(), j.at(4).get<std::uint32_t>(), j.at(5).get<std::uint32_t>()};
}

Json field_to_json(const FieldEntity& f) {
    Json j = {{"docstring", f.docstring},
              {"modifiers", f.modifiers},
              {"marker_annotations", f.marker_annotations},
              {"type", f.type},
              {"name", f.name}};
    if (f.initializer) j["initializer"] = *f.initializer;
    return j;
}

FieldEntity field_from_json(const Json& j) {
    FieldEntity f;
    f.docstring = j.at("docstring").get<std::string>();
    f.modifiers = j.at("modifiers").get<std::string>();
    f.marker_annotations = j.at("marker_annotations").get<std::vector<std::string>>();
    f.type = j.at("type").get<std::string>();
    f.name = j.at("name").get<std::string>();
    if (j.contains("initializer")) f.initializer = j.at("initializer").get<std::string>();
    return f;
}

Json class_to_json(const ClassEntity& c, const MetainfoDatabase*) {
    Json fields = Json::array();
    for (auto& f : c.fields) fields.push_back(field_to_json(f));
    Json j = {
        {"uri", c.uri.value},
        {"name", c.name},
        {"file_path", c.path},
        {"superclasses", c.super_class ? Json(*c.super_class) : Json(nullptr)},
        {"methods", signatures_of(c, c.methods)},
        {"class_docstring", c.class_docstring},
        {"original_string", c.original_string},
        {"super_interfaces", c.super_interfaces},
        {"fields", fields},
        {"kind", std::string(to_string(c.kind))},
        {"package", c.package_name},
        {"header", c.header},
        {"constructors", signatures_of(c, c.constructors)},
        {"initializer_blocks", c.initializer_blocks},
        {"inner_classes", uri_strings(c.inner_classes)},
        {"enclosing", c.enclosing ? Json(c.enclosing->value) : Json(nullptr)},
        {"span", span_to_json(c.span)},
    };
    return j;
}

ClassEntity class_from_json(const Json& j) {
    ClassEntity c;
    c.uri = Uri(j.at("uri").get<std::string>());
    c.name = j.at("name").get<std::string>();
    c.path = j.at("file_path").get<std::string>();
    if (!j.at("superclasses").is_null()) c.super_class = j.at("superclasses").get<std::string>();
    c.methods = uris_from_signatures(c.uri, j.at("methods"));
    c.class_docstring = j.at("class_docstring").get<std::string>();
    c.original_string = j.at("original_string").get<std::string>();
    c.super_interfaces = j.at("super_interfaces").get<std::vector<std::string>>();
    for (auto& f : j.at("fields")) c.fields.push_back(field_from_json(f));
    c.kind = class_kind_from_string(j.at("kind").get<std::string>());
    c.package_name = j.at("package").get<std::string>();
    c.header = j.at("header").get<std::string>();
    c.constructors = uris_from_signatures(c.uri, j.at("constructors"));
    c.initializer_blocks = j.at("initializer_blocks").get<std::vector<std::string>>();
    c.inner_classes = uris_from(j.at("inner_classes"));
    if (!j.at("enclosing").is_null()) c.enclosing = Uri(j.at("enclosing").get<std::string>());
    c.span = span_from_json(j.at("span"));
    return c;
}

Json method_to_json(const MethodEntity& m) {
    Json params = Json::array();
    for (auto& p : m.params) params.push_back({{"type", p.type}, {"name", p.name}});
    return {
        {"uri", m.uri.value},
        {"owner", m.owner.value},
        {"name", m.name},
        {"signature", m.signature},
        {"modifiers", m.modifiers},
        {"annotations", m.annotations},
        {"type_parameters", m.type_parameters},
        {"params", params},
        {"return_type", m.return_type},
        {"throws", m.throws},
        {"header", m.header},
        {"docstring", m.docstring},
        {"original_string", m.original_string},
        {"is_constructor", m.is_constructor},
        {"has_body", m.has_body},
        {"span", span_to_json(m.span)},
        {"effective_lines", m.effective_lines},
    };
}

MethodEntity method_from_json(const Json& j) {
    MethodEntity m;
    m.uri = Uri(j.at("uri").get<std::string>());
    m.owner = Uri(j.at("owner").get<std::string>());
    m.name = j.at("name").get<std::string>();
    m.signature = j.at("signature").get<std::string>();
    m.modifiers = j.at("modifiers").get<std::vector<std::string>>();
    m.annotations = j.at("annotations").get<std::vector<std::string>>();
    m.type_parameters = j.at("type_parameters").get<std::string>();
    for (auto& p : j.at("params")) m.params.push_back({p.at("type").get<std::string>(), p.at("name").get<std::string>()});
    m.return_type = j.at("return_type").get<std::string>();
    m.throws = j.at("throws").get<std::string>();
    m.header = j.at("header").get<std::string>();
    m.docstring = j.at("docstring").get<std::string>();
    m.original_string = j.at("original_string").get<std::string>();
    m.is_constructor = j.at("is_constructor").get<bool>();
    m.has_body = j.at("has_body").get<bool>();
    m.span = span_from_json(j.at("span"));
    m.effective_lines = j.at("effective_lines").get<int>();
    return m;
}

Json file_to_json(const FileEntity& f) {
    return {{"name", f.name},       {"path", f.path},
            {"package", f.package_name}, {"classes", uri_strings(f.classes)},
            {"imports", f.imports}, {"content_hash", f.content_hash}};
}

FileEntity file_from_json(const Json& j) {
    FileEntity f;
    f.name = j.at("name").get<std::string>();
    f.path = j.at("path").get<std::string>();
    f.package_name = j.at("package").get<std::string>();
    f.classes = uris_from(j.at("classes"));
    f.imports = j.at("imports").get<std::vector<std::string>>();
    f.content_hash = j.at("content_hash").get<std::string>();
    return f;
}

Json package_to_json(const PackageEntity& p) { return {{"name", p.name}, {"files", p.files}}; }

PackageEntity package_from_json(const Json& j) {
    return {j.at("name").get<std::string>(), j.at("files").get<std::vector<std::string>>()};
}

void persist(const MetainfoDatabase& db, const fs::path& dir) {
    fs::create_directories(dir);
    auto& e = db.entities();
    auto write_lines = [&](const char* name, auto&& range, auto&& to_json) {
        std::string out;
        for (auto& [key, value] : range) {
            out += to_json(value).dump();
            out.push_back('\n');
        }
        write_file_atomic(dir / name, out);
    };
    write_lines("classes.jsonl", e.classes, [](const ClassEntity& c) { return class_to_json(c); });
    write_lines("methods.jsonl", e.methods, method_to_json);
    write_lines("files.jsonl", e.files, file_to_json);
    write_lines("packages.jsonl", e.packages, package_to_json);
    Json manifest = {{"schema_version", kMetainfoSchemaVersion},
                     {"source_hash", e.source_hash},
                     {"counts",
                      {{"classes", e.classes.size()},
                       {"methods", e.methods.size()},
                       {"files", e.files.size()},
                       {"packages", e.packages.size()}}},
                     {"skipped", diagnostics_to_json(e.skipped)},
                     {"warnings", diagnostics_to_json(e.warnings)}};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

MetainfoDatabase load(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw IoError("no index manifest in " + dir.string());
    MetainfoEntities e;
    try {
        Json manifest = Json::parse(read_file(dir / "manifest.json"));
        int version = manifest.at("schema_version").get<int>();
        if (version != kMetainfoSchemaVersion) {
            throw SchemaError("index schema version " + std::to_string(version) + " != expected " +
                              std::to_string(kMetainfoSchemaVersion) + "; re-run index");
        }
        e.source_hash = manifest.at("source_hash").get<std::string>();
        e.skipped = diagnostics_from_json(manifest.at("skipped"));
        e.warnings = diagnostics_from_json(manifest.at("warnings"));
        auto each_line = [&](const char* name, auto&& fn) {
            for (auto& line : split_lines(read_file(dir / name))) {
                if (!trim(line).empty()) fn(Json::parse(line));
            }
        };
        each_line("classes.jsonl", [&](const Json& j) {
            auto c = class_from_json(j);
            e.classes.emplace(c.uri, std::move(c));
        });
        each_line("methods.jsonl", [&](const Json& j) {
            auto m = method_from_json(j);
            e.methods.emplace(m.uri, std::move(m));
        });
        each_line("files.jsonl", [&](const Json& j) {
            auto f = file_from_json(j);
            e.files.emplace(f.path, std::move(f));
        });
        each_line("packages.jsonl", [&](const Json& j) {
            auto p = package_from_json(j);
            e.packages.emplace(p.name, std::move(p));
        });
    } catch (const Json::exception& ex) {
        throw SchemaError(std::string("malformed index: ") + ex.what());
    }
    return MetainfoDatabase(std::move(e));
}

}  // namespace apt
