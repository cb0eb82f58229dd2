#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicedrift/dataset.hpp"

namespace slicedrift {

/// The three permutation experiment settings:
///   E1: one row subset, fresh permutation per selected column
///   E2: one row subset, one permutation shared by all selected columns
///   E3: fresh row subset (independently permuted) per selected column
enum class PermutationSetting { E1, E2, E3 };

std::string to_string(PermutationSetting s);
PermutationSetting permutation_setting_from_string(const std::string& s);

struct PermutationConfig {
    double r = 0.0;  // row proportion in (0,1]
    double c = 0.0;  // column proportion in (0,1]
    bool keep_rows_constant = true;
    bool repermute_each_column = true;  // ignored when keep_rows_constant=false
    bool force_different = true;
    std::uint64_t seed = 0;

    static PermutationConfig from_setting(PermutationSetting s, double r, double c,
                                          bool force_different, std::uint64_t seed);
    PermutationSetting setting() const;

    void validate() const;  // r, c in (0,1]

    std::size_t rows_selected(std::size_t num_rows) const;      // max(1, round(r*N))
    std::size_t cols_selected(std::size_t num_features) const;  // max(1, round(c*|F|))

    /// E2 covering every column permutes whole feature rows among themselves,
    /// which no slice mapping can see; callers usually flag such cells.
    bool pure_row_permutation(std::size_t num_features) const;
};

struct RebalanceConfig {
    double k = 1.0;  // odds multiplier, > 0
    std::uint64_t seed = 0;

    void validate() const;
};

/// Permute values of selected columns within selected row subsets per the
/// setting semantics. Per-column value multisets, the indicator column, and
/// all unselected columns are preserved exactly. With force_different each
/// permutation draw is retried (up to 100 attempts) until the column changes
/// in at least one row; a column constant on the subset makes that
/// impossible and raises DistortionImpossibleError naming the column.
Dataset permute_distort(const Dataset& d, const PermutationConfig& cfg);

/// The misclassified-row total that scales the incorrect:correct odds by k:
/// round(k*M2*N2 / (N2 - (1-k)*M2)), clamped to [0, N2], with
/// round-half-away-from-zero.
std::uint64_t target_misclassified(std::uint64_t M2, std::uint64_t N2, double k);

/// Resample to the same size N with exactly target_misclassified(M, N, k)
/// rows drawn (with replacement) from the misclassified stratum and the rest
/// from the correct stratum. Strata never mix.
Dataset rebalance_mcr(const Dataset& d, const RebalanceConfig& cfg);

/// Continuous counterpart of target_misclassified: the MCR reached by
/// multiplying the odds M/(N-M) by k, i.e. k*phi / (1 + k*phi).
double multiplier_to_mcr(std::uint64_t M, std::uint64_t N, double k);

namespace detail {
/// new[rows[j]] = old[perm[j]] for one column; perm is a permutation of rows.
void apply_row_permutation(Column& col, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& perm);
/// Whether the permutation would change at least one value (missing values
/// compare equal to each other).
bool permutation_changes_column(const Column& col, const std::vector<std::size_t>& rows,
                                const std::vector<std::size_t>& perm);
}  // namespace detail

}  // namespace slicedrift
