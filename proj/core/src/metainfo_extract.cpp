#include "apt/metainfo.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace apt {

namespace fs = std::filesystem;

std::string erase_type(std::string_view type) {
    std::string out;
    int depth = 0;
    for (char c : type) {
        if (c == '<') {
            ++depth;
            continue;
        }
        if (c == '>') {
            --depth;
            continue;
        }
        if (depth == 0 && !std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    }
    // drop package / outer qualifiers but keep array and varargs suffixes
    std::size_t suffix = out.size();
    while (suffix > 0 && (out[suffix - 1] == ']' || out[suffix - 1] == '[' || out[suffix - 1] == '.')) {
        --suffix;
    }
    auto base = out.substr(0, suffix);
    auto tail = out.substr(suffix);
    auto dot = base.rfind('.');
    if (dot != std::string::npos) base = base.substr(dot + 1);
    // annotations on types, e.g. "@NonNull String"
    auto at = base.rfind('@');
    if (at != std::string::npos) base = base.substr(at + 1);
    return base + tail;
}

std::string canonical_signature(std::string_view return_type, std::string_view name,
                                const std::vector<std::string>& param_types) {
    std::string sig = "[";
    sig += return_type;
    sig += "]";
    sig += name;
    sig += "(";
    sig += join(param_types, ", ");
    sig += ")";
    return sig;
}

namespace {

struct ModifierInfo {
    std::vector<std::string> keywords;
    std::vector<std::string> annotations;
};

ModifierInfo read_modifiers(const Node& decl) {
    ModifierInfo info;
    Node mods = decl.first_child_of_kind("modifiers");
    if (!mods) return info;
    for (auto& child : mods.children()) {
        auto kind = child.kind();
        if (kind == "marker_annotation" || kind == "annotation") {
            info.annotations.push_back(normalize_whitespace(child.text()));
        } else if (kind != "line_comment" && kind != "block_comment") {
            info.keywords.emplace_back(child.text());
        }
    }
    return info;
}

std::string annotation_simple_name(std::string_view annotation) {
    std::string_view a = annotation;
    if (!a.empty() && a.front() == '@') a.remove_prefix(1);
    auto paren = a.find('(');
    if (paren != std::string_view::npos) a = a.substr(0, paren);
    auto dot = a.rfind('.');
    if (dot != std::string_view::npos) a = a.substr(dot + 1);
    return std::string(trim(a));
}

int count_effective_lines(std::string_view body) {
    int count = 0;
    bool in_block_comment = false;
    for (auto& raw : split_lines(body)) {
        std::string_view line = trim(raw);
        if (in_block_comment) {
            if (line.find("*/") != std::string_view::npos) in_block_comment = false;
            continue;
        }
        if (line.rfind("/*", 0) == 0) {
            if (line.find("*/") == std::string_view::npos) in_block_comment = true;
            continue;
        }
        if (line.empty() || line.rfind("//", 0) == 0) continue;
        bool only_braces = std::all_of(line.begin(), line.end(), [](char c) {
            return c == '{' || c == '}' || c == ';' || std::isspace(static_cast<unsigned char>(c));
        });
        if (!only_braces) ++count;
    }
    return count;
}

std::vector<std::string> type_list_names(const Node& holder) {
    std::vector<std::string> out;
    if (!holder) return out;
    Node list = holder.first_child_of_kind("type_list");
    if (!list) return out;
    for (auto& t : list.named_children()) out.push_back(erase_type(t.text()));
    return out;
}

struct FileExtractor {
    const std::string& rel_path;
    const IndexConfig& config;
    const LanguageProfile& profile;
    MetainfoEntities out;
    std::string package_name;

    void run(const SyntaxTree& tree) {
        FileEntity file;
        file.path = rel_path;
        file.name = fs::path(rel_path).filename().string();
        file.content_hash = sha256_hex(tree.source());

        for (auto& child : tree.root().named_children()) {
            auto kind = std::string(child.kind());
            if (profile.package_nodes.count(kind)) {
                for (auto& part : child.named_children()) {
                    if (part.kind() == "scoped_identifier" || part.kind() == "identifier") {
                        package_name = std::string(part.text());
                    }
                }
            } else if (profile.import_nodes.count(kind)) {
                std::string text = normalize_whitespace(child.text());
                if (text.rfind("import ", 0) == 0) text = text.substr(7);
                bool is_static = text.rfind("static ", 0) == 0;
                if (is_static) text = text.substr(7);
                std::string compact;
                for (char c : text) {
                    if (c != ' ' && c != ';') compact.push_back(c);
                }
                if (is_static) compact = "static " + compact;
                file.imports.push_back(compact);
            }
        }
        file.package_name = package_name;

        for (auto& child : tree.root().named_children()) {
            if (profile.class_nodes.count(std::string(child.kind()))) {
                file.classes.push_back(extract_class(child, std::nullopt, file.imports));
            }
        }

        auto& pkg = out.packages[package_name];
        pkg.name = package_name;
        pkg.files.push_back(rel_path);
        out.files.emplace(rel_path, std::move(file));
    }

    bool is_test_path() const { return glob_match_any(config.test_root_globs, rel_path); }

    Uri extract_class(const Node& node, const std::optional<ClassEntity>& enclosing,
                      const std::vector<std::string>& imports) {
        ClassEntity cls;
        cls.name = std::string(node.field("name").text());
        cls.path = rel_path;
        cls.package_name = package_name;
        cls.uri = Uri(enclosing ? enclosing->uri.value + "." + cls.name : rel_path + "." + cls.name);
        if (enclosing) cls.enclosing = enclosing->uri;
        cls.kind = profile.class_nodes.at(std::string(node.kind()));
        auto mods = read_modifiers(node);
        if (cls.kind == ClassKind::class_ && node.kind() == "class_declaration" &&
            std::find(mods.keywords.begin(), mods.keywords.end(), "abstract") != mods.keywords.end()) {
            cls.kind = ClassKind::abstract_class;
        }
        if (Node sup = node.field("superclass")) {
            for (auto& t : sup.named_children()) {
                cls.super_class = erase_type(t.text());
                break;
            }
        }
        if (node.kind() == "interface_declaration") {
            cls.super_interfaces = type_list_names(node.first_child_of_kind("extends_interfaces"));
        } else {
            cls.super_interfaces = type_list_names(node.field("interfaces"));
        }
        cls.class_docstring = leading_doc_comment(node);
        cls.original_string = std::string(node.text());
        cls.span = node.span();

        Node body = node.field("body");
        if (body) {
            cls.header = normalize_whitespace(
                std::string_view(node.source()).substr(node.start_byte(), body.start_byte() - node.start_byte()));
        } else {
            cls.header = normalize_whitespace(node.text());
        }

        if (node.kind() == "record_declaration") {
            if (Node params = node.field("parameters")) {
                for (auto& p : params.children_of_kind("formal_parameter")) {
                    FieldEntity f;
                    f.name = std::string(p.field("name").text());
                    f.type = normalize_whitespace(p.field("type").text());
                    f.modifiers = "private final";
                    cls.fields.push_back(std::move(f));
                }
            }
        }

        bool has_test_marker = false;
        std::vector<std::pair<Node, bool>> nested;  // collected for recursion after cls is final
        if (body) collect_members(body, cls, nested, has_test_marker);

        if (is_test_path() || has_test_marker) cls.kind = ClassKind::test_class;

        Uri uri = cls.uri;
        // reserve the entry so nested classes can refer to the enclosing one
        for (auto& [n, unused] : nested) {
            (void)unused;
            cls.inner_classes.push_back(Uri(cls.uri.value + "." + std::string(n.field("name").text())));
        }
        auto enclosing_copy = cls;  // nested extraction only reads uri/name
        out.classes.emplace(uri, std::move(cls));
        for (auto& [n, unused] : nested) {
            (void)unused;
            extract_class(n, enclosing_copy, imports);
        }
        return uri;
    }

    void collect_members(const Node& body, ClassEntity& cls, std::vector<std::pair<Node, bool>>& nested,
                         bool& has_test_marker) {
        for (auto& member : body.named_children()) {
            auto kind = std::string(member.kind());
            if (kind == "enum_body_declarations") {
                collect_members(member, cls, nested, has_test_marker);
            } else if (kind == "enum_constant") {
                FieldEntity f;
                f.name = std::string(member.field("name").text());
                f.type = cls.name;
                f.modifiers = "public static final";
                f.docstring = leading_doc_comment(member);
                add_field(cls, std::move(f));
            } else if (profile.field_nodes.count(kind)) {
                extract_fields(member, cls);
            } else if (profile.method_nodes.count(kind) || profile.constructor_nodes.count(kind)) {
                auto m = extract_method(member, cls, profile.constructor_nodes.count(kind) > 0);
                for (auto& a : m.annotations) {
                    auto simple = annotation_simple_name(a);
                    if (std::find(config.test_markers.begin(), config.test_markers.end(), simple) !=
                        config.test_markers.end()) {
                        has_test_marker = true;
                    }
                }
                auto uri = m.uri;
                if (out.methods.count(uri)) {
                    out.warnings.push_back({rel_path, "duplicate signature after erasure: " + uri.value});
                    continue;
                }
                (m.is_constructor ? cls.constructors : cls.methods).push_back(uri);
                out.methods.emplace(uri, std::move(m));
            } else if (profile.class_nodes.count(kind)) {
                nested.emplace_back(member, true);
            } else if (kind == "static_initializer" || kind == "block") {
                cls.initializer_blocks.emplace_back(member.line_slice());
            }
        }
    }

    void add_field(ClassEntity& cls, FieldEntity f) {
        for (auto& existing : cls.fields) {
            if (existing.name == f.name) {
                out.warnings.push_back({rel_path, "duplicate field " + f.name + " in " + cls.name});
                return;
            }
        }
        cls.fields.push_back(std::move(f));
    }

    void extract_fields(const Node& decl, ClassEntity& cls) {
        auto mods = read_modifiers(decl);
        std::string type = normalize_whitespace(decl.field("type").text());
        std::string doc = leading_doc_comment(decl);
        for (auto& d : decl.children_of_kind("variable_declarator")) {
            FieldEntity f;
            f.name = std::string(d.field("name").text());
            f.type = type;
            if (Node dims = d.field("dimensions")) f.type += std::string(dims.text());
            f.modifiers = join(mods.keywords, " ");
            f.marker_annotations = mods.annotations;
            f.docstring = doc;
            if (Node value = d.field("value")) f.initializer = std::string(value.text());
            add_field(cls, std::move(f));
        }
    }

    MethodEntity extract_method(const Node& node, const ClassEntity& cls, bool is_ctor) {
        MethodEntity m;
        m.owner = cls.uri;
        m.is_constructor = is_ctor;
        m.name = std::string(node.field("name").text());
        auto mods = read_modifiers(node);
        m.modifiers = mods.keywords;
        m.annotations = mods.annotations;
        if (Node tp = node.field("type_parameters")) m.type_parameters = normalize_whitespace(tp.text());
        if (!is_ctor) {
            if (Node type = node.field("type")) m.return_type = normalize_whitespace(type.text());
            if (Node dims = node.field("dimensions")) m.return_type += std::string(dims.text());
        }
        std::vector<std::string> erased;
        std::string params_text = "()";
        if (Node params = node.field("parameters")) {
            params_text = normalize_whitespace(params.text());
            for (auto& p : params.named_children()) {
                Param param;
                if (p.kind() == "formal_parameter") {
                    param.type = normalize_whitespace(p.field("type").text());
                    if (Node dims = p.field("dimensions")) param.type += std::string(dims.text());
                    param.name = std::string(p.field("name").text());
                } else if (p.kind() == "spread_parameter") {
                    for (auto& c : p.named_children()) {
                        if (c.kind() == "variable_declarator") {
                            param.name = std::string(c.field("name").text());
                        } else if (c.kind() != "modifiers") {
                            param.type = normalize_whitespace(c.text());
                        }
                    }
                    param.type += "...";
                } else {
                    continue;  // receiver parameters and comments
                }
                erased.push_back(erase_type(param.type));
                m.params.push_back(std::move(param));
            }
        } else if (node.kind() == "compact_constructor_declaration") {
            params_text = "";
        }
        if (Node th = node.first_child_of_kind("throws")) m.throws = normalize_whitespace(th.text());

        m.signature = canonical_signature(is_ctor ? "" : erase_type(m.return_type), m.name, erased);
        m.uri = Uri(cls.uri.value + "." + m.signature);

        std::string header = join(m.modifiers, " ");
        auto append = [&header](std::string_view part) {
            if (part.empty()) return;
            if (!header.empty()) header.push_back(' ');
            header.append(part);
        };
        append(m.type_parameters);
        append(m.return_type);
        append(m.name);
        header += params_text;
        append(m.throws);
        m.header = header;

        m.docstring = leading_doc_comment(node);
        m.original_string = std::string(node.text());
        m.span = node.span();
        Node body = node.field("body");
        m.has_body = static_cast<bool>(body);
        if (body) m.effective_lines = count_effective_lines(body.text());
        return m;
    }
};

}  // namespace

bool MethodEntity::is_private() const {
    return std::find(modifiers.begin(), modifiers.end(), "private") != modifiers.end();
}

bool MethodEntity::has_annotation(std::string_view simple_name) const {
    for (auto& a : annotations) {
        if (annotation_simple_name(a) == simple_name) return true;
    }
    return false;
}

MetainfoEntities extract_file(const std::string& rel_path, const std::string& source,
                              const IndexConfig& config) {
    const LanguageProfile* profile = find_profile(config.language);
    if (!profile) throw ConfigError("unknown language profile: " + config.language);
    auto tree = SyntaxTree::parse(source, *profile);
    if (tree.has_errors()) {
        throw ParseError(rel_path + ": syntax error at " + tree.first_error_location());
    }
    FileExtractor extractor{rel_path, config, *profile, {}, {}};
    extractor.run(tree);
    return std::move(extractor.out);
}

namespace {

struct SourceFile {
    std::string rel_path;
    fs::path abs_path;
};

struct FileOutcome {
    std::optional<MetainfoEntities> entities;
    std::vector<Diagnostic> warnings;
    std::optional<Diagnostic> skipped;
    std::string content;
};

void merge_into(MetainfoEntities& into, MetainfoEntities&& part) {
    for (auto& [uri, c] : part.classes) into.classes.insert_or_assign(uri, std::move(c));
    for (auto& [uri, m] : part.methods) into.methods.insert_or_assign(uri, std::move(m));
    for (auto& [path, f] : part.files) into.files.insert_or_assign(path, std::move(f));
    for (auto& [name, p] : part.packages) {
        auto& pkg = into.packages[name];
        pkg.name = name;
        for (auto& f : p.files) pkg.files.push_back(f);
    }
    for (auto& w : part.warnings) into.warnings.push_back(std::move(w));
}

std::string relative_name(const fs::path& root, const fs::path& file) {
    auto rel = fs::relative(file, root);
    auto s = rel.generic_string();
    if (s.rfind("..", 0) == 0) return file.generic_string();
    return s;
}

}  // namespace

MetainfoDatabase index_repository(const fs::path& root, const IndexConfig& config) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        throw IoError("repository root does not exist: " + root.string());
    }
    const LanguageProfile* profile = find_profile(config.language);
    if (!profile) throw ConfigError("unknown language profile: " + config.language);

    std::vector<SourceFile> files;
    auto has_extension = [&](const fs::path& p) {
        auto ext = p.extension().string();
        return std::find(profile->extensions.begin(), profile->extensions.end(), ext) !=
               profile->extensions.end();
    };
    auto walk = [&](const fs::path& dir, bool apply_globs) {
        if (!fs::exists(dir)) return;
        for (auto it = fs::recursive_directory_iterator(dir, fs::directory_options::skip_permission_denied);
             it != fs::recursive_directory_iterator(); ++it) {
            if (!it->is_regular_file() || !has_extension(it->path())) continue;
            auto rel = relative_name(root, it->path());
            if (apply_globs) {
                if (!glob_match_any(config.source_globs, rel)) continue;
                if (glob_match_any(config.exclude_globs, rel)) continue;
            }
            files.push_back({rel, it->path()});
        }
    };
    walk(root, true);
    for (auto& extra : config.extra_roots) walk(extra, false);
    std::sort(files.begin(), files.end(),
              [](const SourceFile& a, const SourceFile& b) { return a.rel_path < b.rel_path; });
    files.erase(std::unique(files.begin(), files.end(),
                            [](const SourceFile& a, const SourceFile& b) { return a.rel_path == b.rel_path; }),
                files.end());

    std::vector<FileOutcome> outcomes(files.size());
    auto process = [&](std::size_t i) {
        auto& out = outcomes[i];
        std::string raw;
        try {
            raw = read_file(files[i].abs_path);
        } catch (const IoError& e) {
            out.skipped = Diagnostic{files[i].rel_path, e.what()};
            return;
        }
        std::size_t replaced = 0;
        out.content = sanitize_utf8(raw, &replaced);
        if (replaced) {
            out.warnings.push_back({files[i].rel_path, "invalid UTF-8 replaced (" + std::to_string(replaced) + " bytes)"});
        }
        try {
            out.entities = extract_file(files[i].rel_path, out.content, config);
        } catch (const ParseError& e) {
            out.skipped = Diagnostic{files[i].rel_path, e.what()};
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(files.size())));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < files.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        for (unsigned w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < files.size(); i = next++) process(i);
            });
        }
    }

    // single-writer merge in path order keeps the result independent of
    // traversal order and worker count
    MetainfoEntities all;
    std::string hash_input;
    for (std::size_t i = 0; i < files.size(); ++i) {
        auto& o = outcomes[i];
        hash_input += files[i].rel_path;
        hash_input.push_back('\0');
        hash_input += sha256_hex(o.content);
        hash_input.push_back('\n');
        for (auto& w : o.warnings) all.warnings.push_back(std::move(w));
        if (o.skipped) {
            all.skipped.push_back(std::move(*o.skipped));
            continue;
        }
        merge_into(all, std::move(*o.entities));
    }
    all.source_hash = sha256_hex(hash_input);
    return MetainfoDatabase(std::move(all));
}

}  // namespace apt
