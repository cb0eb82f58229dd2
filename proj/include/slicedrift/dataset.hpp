#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slicedrift/schema.hpp"

namespace slicedrift {

/// Missing marker for categorical cells. Numeric missing cells hold a quiet
/// NaN. Slice constraints never match a missing value.
inline constexpr std::int32_t kMissingCode = -1;

struct Column {
    FeatureKind kind = FeatureKind::numeric;
    std::vector<double> numeric;        // when kind == numeric
    std::vector<std::int32_t> codes;    // when kind == categorical

    std::size_t size() const {
        return kind == FeatureKind::numeric ? numeric.size() : codes.size();
    }
};

/// Columnar table. Immutable by convention after construction; operations
/// return new datasets and are pure functions of (inputs, seed), so a Dataset
/// can be shared read-only across threads.
struct Dataset {
    FeatureSchema schema;
    std::vector<Column> columns;        // aligned with schema.features
    std::vector<std::uint8_t> theta;    // 1 = misclassified

    std::size_t num_rows() const { return theta.size(); }
    std::uint64_t misclassified_count() const;
    double mcr() const;

    /// Throws if column lengths disagree or the schema is invalid.
    void validate() const;
};

/// A stratified 50-50 split: baseline (slices are found here) and deployment
/// (drift is tested here).
struct SplitPair {
    Dataset baseline;
    Dataset deployment;
    std::uint64_t seed = 0;
    std::uint64_t split_index = 0;
};

/// Load a CSV (RFC 4180 quoting) against a schema. Numeric parse failures
/// become missing values; categorical labels get first-seen codes appended
/// to the schema's code table. The header must contain every schema name.
/// Indicator cells accept 0/1/true/false case-insensitively.
Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema);

/// Write the CSV + JSON schema sidecar pair. Loading the pair back yields an
/// equal dataset.
void save_dataset(const Dataset& d, const std::string& csv_path, const std::string& schema_path);

/// Split rows 50-50, stratified on theta: each stratum splits
/// ceil/floor(count/2), the larger half landing on a seeded-random side.
/// When both strata are odd the two extras go to opposite sides, keeping
/// |N1 - N2| <= 1. Row order within each side is a seeded shuffle.
SplitPair stratified_split(const Dataset& d, std::uint64_t seed, std::uint64_t split_index = 0);

/// N rows drawn uniformly with replacement.
Dataset resample_rows(const Dataset& d, std::uint64_t seed);

/// Gather a new dataset from row indices (repeats allowed).
Dataset take_rows(const Dataset& d, std::span<const std::size_t> rows);

/// Drop features whose minority count (rows not holding the feature's most
/// frequent value, missing counted as a value) is below the threshold.
Dataset drop_low_variance(const Dataset& d, std::uint64_t min_minority_count);

bool datasets_equal(const Dataset& a, const Dataset& b);

}  // namespace slicedrift
