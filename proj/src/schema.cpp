#include "slicedrift/schema.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "slicedrift/error.hpp"

namespace slicedrift {

using nlohmann::ordered_json;

std::string to_string(FeatureKind kind) {
    return kind == FeatureKind::numeric ? "numeric" : "categorical";
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "numeric") return FeatureKind::numeric;
    if (s == "categorical") return FeatureKind::categorical;
    throw SchemaError("unknown feature kind: " + s);
}

bool operator==(const FeatureSpec& a, const FeatureSpec& b) {
    return a.name == b.name && a.kind == b.kind;
}

void FeatureSchema::validate() const {
    if (features.empty()) throw SchemaError("schema needs at least one feature");
    std::unordered_set<std::string> seen;
    for (const auto& f : features) {
        if (!seen.insert(f.name).second) throw SchemaError("duplicate feature name: " + f.name);
    }
    if (indicator_column.empty()) throw SchemaError("indicator column name is empty");
    if (seen.count(indicator_column))
        throw SchemaError("indicator column clashes with feature: " + indicator_column);
    for (const auto& [name, labels] : categories) {
        std::size_t i = feature_index(name);
        if (i == npos) throw SchemaError("categories for unknown feature: " + name);
        if (features[i].kind != FeatureKind::categorical)
            throw SchemaError("categories given for numeric feature: " + name);
        std::unordered_set<std::string> lab(labels.begin(), labels.end());
        if (lab.size() != labels.size())
            throw SchemaError("duplicate category label for feature: " + name);
    }
}

std::size_t FeatureSchema::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].name == name) return i;
    }
    return npos;
}

std::string FeatureSchema::to_json_string(int indent) const {
    ordered_json j;
    j["features"] = ordered_json::array();
    for (const auto& f : features) {
        j["features"].push_back({{"name", f.name}, {"kind", to_string(f.kind)}});
    }
    j["indicator"] = indicator_column;
    ordered_json cats = ordered_json::object();
    for (const auto& [name, labels] : categories) cats[name] = labels;
    j["categories"] = cats;
    return j.dump(indent);
}

FeatureSchema FeatureSchema::from_json_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("schema JSON parse failure: ") + e.what());
    }
    FeatureSchema s;
    try {
        for (const auto& f : j.at("features")) {
            s.features.push_back(
                {f.at("name").get<std::string>(), feature_kind_from_string(f.at("kind"))});
        }
        s.indicator_column = j.at("indicator").get<std::string>();
        if (j.contains("categories")) {
            for (const auto& [name, labels] : j.at("categories").items()) {
                s.categories[name] = labels.get<std::vector<std::string>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("schema JSON structure: ") + e.what());
    }
    s.validate();
    return s;
}

void FeatureSchema::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write schema file: " + path);
    out << to_json_string() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

FeatureSchema FeatureSchema::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read schema file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

}  // namespace slicedrift
