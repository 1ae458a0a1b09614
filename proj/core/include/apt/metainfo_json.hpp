#pragma once

#include "apt/metainfo.hpp"

#include <nlohmann/json.hpp>

namespace apt {

using Json = nlohmann::json;

/// Class record as written to classes.jsonl. The keys `uri`, `name`,
/// `file_path`, `superclasses`, `methods`, `class_docstring`,
/// `original_string`, `super_interfaces` and `fields` follow the published
/// metadata layout; the remaining keys are ours.
Json class_to_json(const ClassEntity& cls, const MetainfoDatabase* db = nullptr);
ClassEntity class_from_json(const Json& j);

Json method_to_json(const MethodEntity& m);
MethodEntity method_from_json(const Json& j);

Json field_to_json(const FieldEntity& f);
FieldEntity field_from_json(const Json& j);

Json file_to_json(const FileEntity& f);
FileEntity file_from_json(const Json& j);

Json package_to_json(const PackageEntity& p);
PackageEntity package_from_json(const Json& j);

Json span_to_json(const Span& s);
Span span_from_json(const Json& j);

}  // namespace apt
