#pragma once

#include "apt/syntax.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace apt {

/// Identity of an entity. Classes: `<path>.<Outer>.<Name>`; methods:
/// `<class uri>.<signature>`.
struct Uri {
    std::string value;

    Uri() = default;
    explicit Uri(std::string v) : value(std::move(v)) {}

    bool empty() const { return value.empty(); }
    auto operator<=>(const Uri&) const = default;
};

struct Param {
    std::string type;  // as written, generics included
    std::string name;
    bool operator==(const Param&) const = default;
};

struct FieldEntity {
    std::string name;
    std::string type;
    std::string modifiers;  // space separated keywords, e.g. "private final"
    std::string docstring;
    std::vector<std::string> marker_annotations;
    std::optional<std::string> initializer;

    bool operator==(const FieldEntity&) const = default;
};

struct MethodEntity {
    Uri uri;
    Uri owner;
    std::string name;
    std::vector<std::string> modifiers;
    std::vector<std::string> annotations;  // "@Override", "@Test", ...
    std::string type_parameters;
    std::vector<Param> params;
    std::string return_type;  // empty for constructors
    std::string throws;
    /// `[ReturnType]name(ParamType, ...)` with generics erased and simple
    /// type names.
    std::string signature;
    /// Declaration without annotations or body, whitespace-normalized.
    std::string header;
    std::string docstring;
    std::string original_string;
    bool is_constructor = false;
    bool has_body = false;
    Span span;
    int effective_lines = 0;

    bool is_private() const;
    bool is_abstract() const { return !has_body; }
    bool has_annotation(std::string_view simple_name) const;

    bool operator==(const MethodEntity&) const = default;
};

struct ClassEntity {
    Uri uri;
    std::string name;
    std::string path;
    std::string package_name;
    ClassKind kind = ClassKind::class_;
    std::optional<std::string> super_class;  // simple, erased
    std::vector<std::string> super_interfaces;
    std::string class_docstring;
    std::string original_string;
    /// Declaration up to the opening brace, whitespace-normalized.
    std::string header;
    std::vector<Uri> methods;  // declared, constructors excluded
    std::vector<Uri> constructors;
    std::vector<FieldEntity> fields;
    std::vector<std::string> initializer_blocks;  // verbatim static/instance initializers
    std::vector<Uri> inner_classes;
    std::optional<Uri> enclosing;
    Span span;

    bool operator==(const ClassEntity&) const = default;
};

struct FileEntity {
    std::string name;
    std::string path;
    std::string package_name;
    std::vector<Uri> classes;
    std::vector<std::string> imports;  // "org.junit.Test", "static org.junit.Assert.*"
    std::string content_hash;

    bool operator==(const FileEntity&) const = default;
};

struct PackageEntity {
    std::string name;
    std::vector<std::string> files;

    bool operator==(const PackageEntity&) const = default;
};

struct Diagnostic {
    std::string path;
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

/// Plain aggregate of primary entities; the database derives its indexes
/// from it.
struct MetainfoEntities {
    std::map<Uri, ClassEntity> classes;
    std::map<Uri, MethodEntity> methods;
    std::map<std::string, FileEntity> files;  // by path
    std::map<std::string, PackageEntity> packages;
    std::vector<Diagnostic> skipped;   // files that could not be indexed
    std::vector<Diagnostic> warnings;  // everything else worth surfacing
    std::string source_hash;

    bool operator==(const MetainfoEntities&) const = default;
};

struct SecondaryIndexes {
    std::map<std::string, std::vector<Uri>> classes_by_name;
    std::map<std::string, std::vector<Uri>> classes_by_super;
    std::map<std::string, std::vector<Uri>> classes_by_interface;
    std::map<std::pair<Uri, std::string>, std::vector<Uri>> methods_by_class_and_name;
    std::map<std::string, std::vector<Uri>> methods_by_name;
    std::map<std::string, std::vector<Uri>> field_owners_by_name;

    bool operator==(const SecondaryIndexes&) const = default;
};

SecondaryIndexes build_indexes(const MetainfoEntities& entities);

struct FieldHit {
    const ClassEntity* owner = nullptr;
    const FieldEntity* field = nullptr;
};

/// Immutable relational index of one repository. Safe to share across
/// threads once constructed.
class MetainfoDatabase {
public:
    MetainfoDatabase() = default;
    explicit MetainfoDatabase(MetainfoEntities entities);

    const MetainfoEntities& entities() const { return entities_; }
    const SecondaryIndexes& indexes() const { return indexes_; }

    const ClassEntity* find_class(const Uri& uri) const;
    const MethodEntity* find_method(const Uri& uri) const;
    const FileEntity* find_file(const std::string& path) const;

    std::vector<const ClassEntity*> classes_named(std::string_view name) const;
    std::vector<const MethodEntity*> methods_named(std::string_view name) const;
    std::vector<FieldHit> fields_named(std::string_view name) const;
    std::vector<const MethodEntity*> methods_of(const ClassEntity& cls) const;
    std::vector<const MethodEntity*> constructors_of(const ClassEntity& cls) const;
    std::vector<const MethodEntity*> methods_of(const Uri& cls, std::string_view name) const;

    /// Resolves a type name as seen from inside `from`: nested types first,
    /// then same package, explicit imports, wildcard imports, and finally a
    /// unique repository-wide match. nullptr when unresolvable (external).
    const ClassEntity* resolve_type(const ClassEntity& from, std::string_view type_name) const;

    /// The declared parent resolved within the database, if any.
    const ClassEntity* parent_of(const ClassEntity& cls) const;

    /// Classes whose parent chain loops back on itself (derived, not persisted).
    const std::vector<Diagnostic>& inheritance_cycles() const { return cycles_; }

    std::size_t class_count() const { return entities_.classes.size(); }
    std::size_t method_count() const { return entities_.methods.size(); }

    bool operator==(const MetainfoDatabase& other) const { return entities_ == other.entities_; }

private:
    MetainfoEntities entities_;
    SecondaryIndexes indexes_;
    std::vector<Diagnostic> cycles_;
};

// ---------------------------------------------------------------------------
// Indexing
// ---------------------------------------------------------------------------

struct IndexConfig {
    std::string language = "java";
    std::vector<std::string> source_globs = {"**/*.java"};
    std::vector<std::string> exclude_globs = {".apt-index/**", "apt-out/**"};
    std::vector<std::string> test_root_globs = {"**/src/test/**"};
    std::vector<std::string> test_markers = {"Test", "ParameterizedTest"};
    /// Directories outside the normal source walk (admitted generated tests).
    std::vector<std::filesystem::path> extra_roots;
    unsigned jobs = 1;
};

/// Parses every matching source file under `root`. Files that fail to parse
/// are recorded in `skipped` and never abort the run. Throws IoError when
/// `root` does not exist.
MetainfoDatabase index_repository(const std::filesystem::path& root, const IndexConfig& config);

/// Extraction of a single already-read source file, exposed for the test
/// bundle analyzer and the generated-test checks.
MetainfoEntities extract_file(const std::string& rel_path, const std::string& source,
                              const IndexConfig& config);

/// `[Return]name(Type, ...)`
std::string canonical_signature(std::string_view return_type, std::string_view name,
                                const std::vector<std::string>& param_types);

/// Drops generic arguments and package qualifiers: `java.util.List<String>`
/// becomes `List`; arrays and varargs keep their suffix.
std::string erase_type(std::string_view type);

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

enum class EntityKind { class_, method, field, file, package };

struct QueryKey {
    std::string text;
    bool is_uri = false;

    static QueryKey uri(std::string value) { return {std::move(value), true}; }
    static QueryKey name(std::string value) { return {std::move(value), false}; }
};

using EntityRef = std::variant<const ClassEntity*, const MethodEntity*, FieldHit,
                               const FileEntity*, const PackageEntity*>;

/// Uri keys yield at most one entity; simple-name keys every entity of that
/// kind with the name, in Uri order.
std::vector<EntityRef> query_entity(const MetainfoDatabase& db, const QueryKey& key, EntityKind kind);

enum class ClassRelation { ancestors, parent, children, siblings, interface_co_implementors };

/// Throws NotFoundError for an unknown class.
std::vector<const ClassEntity*> related_classes(const MetainfoDatabase& db, const Uri& cls,
                                                ClassRelation relation);

/// Superclass chain and implemented/extended interfaces, transitively, as far
/// as they resolve within the database. Breadth-first, each class once.
std::vector<const ClassEntity*> supertypes(const MetainfoDatabase& db, const ClassEntity& cls);

/// Interfaces (resolved within the database) implemented by both classes.
std::vector<const ClassEntity*> common_interfaces(const MetainfoDatabase& db, const ClassEntity& a,
                                                  const ClassEntity& b);

/// Key under which two methods of different classes count as "the same
/// method": name, arity and erased parameter types. The owner's own type
/// and numeric primitive/boxed types are erased to placeholders.
std::string method_match_key(const MethodEntity& method, std::string_view owner_name);

/// Intersection of the declared method keys of two classes, optionally
/// further intersected with an interface's declared methods.
std::set<std::string> shared_methods(const MetainfoDatabase& db, const Uri& c1, const Uri& c2,
                                     const std::optional<Uri>& via_interface = std::nullopt);

/// Declared methods of `cls` whose match key equals `key`.
std::vector<const MethodEntity*> counterparts(const MetainfoDatabase& db, const ClassEntity& cls,
                                              std::string_view key);

/// `Class.name(Type, ...)`, the reference form used in test analyses.
std::string method_reference(const MetainfoDatabase& db, const MethodEntity& method);

/// `name(Type, ...)`, the short display form.
std::string method_display_name(const MethodEntity& method);

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline constexpr int kMetainfoSchemaVersion = 1;

/// Writes classes/methods/files/packages JSON-lines plus manifest.json into
/// `dir` (usually `<repo>/.apt-index`).
void persist(const MetainfoDatabase& db, const std::filesystem::path& dir);

/// Throws IoError on missing files and SchemaError on version mismatch.
MetainfoDatabase load(const std::filesystem::path& dir);

}  // namespace apt

template <>
struct std::hash<apt::Uri> {
    std::size_t operator()(const apt::Uri& u) const noexcept { return std::hash<std::string>{}(u.value); }
};
