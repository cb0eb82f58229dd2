#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace slicedrift {

enum class FeatureKind { numeric, categorical };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
};

/// Typed feature list plus the name of the boolean misclassification
/// indicator column. Categorical code tables live here so that a baseline
/// and a deployment dataset loaded with the same schema share codes.
struct FeatureSchema {
    std::vector<FeatureSpec> features;
    std::string indicator_column;
    // Per categorical feature: label list; a label's code is its position.
    std::map<std::string, std::vector<std::string>> categories;

    /// Throws SchemaError on duplicate names, indicator clash, or no features.
    void validate() const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t feature_index(const std::string& name) const;

    std::string to_json_string(int indent = 2) const;
    static FeatureSchema from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static FeatureSchema load(const std::string& path);

    bool operator==(const FeatureSchema&) const = default;
};

bool operator==(const FeatureSpec&, const FeatureSpec&);

}  // namespace slicedrift
