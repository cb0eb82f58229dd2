#include "slicedrift/distortion.hpp"

#include <algorithm>
#include <cmath>

#include "slicedrift/error.hpp"
#include "slicedrift/rng.hpp"

namespace slicedrift {

namespace {

constexpr int kForceDifferentAttempts = 100;
constexpr std::uint64_t kRebalanceTag = 0x5242414c;

std::size_t round_half_away(double x) {
    return static_cast<std::size_t>(std::llround(x));
}

bool values_equal(const Column& col, std::size_t a, std::size_t b) {
    if (col.kind == FeatureKind::numeric) {
        double x = col.numeric[a], y = col.numeric[b];
        return (std::isnan(x) && std::isnan(y)) || x == y;
    }
    return col.codes[a] == col.codes[b];
}

}  // namespace

std::string to_string(PermutationSetting s) {
    switch (s) {
        case PermutationSetting::E1: return "E1";
        case PermutationSetting::E2: return "E2";
        case PermutationSetting::E3: return "E3";
    }
    return "E1";
}

PermutationSetting permutation_setting_from_string(const std::string& s) {
    if (s == "E1") return PermutationSetting::E1;
    if (s == "E2") return PermutationSetting::E2;
    if (s == "E3") return PermutationSetting::E3;
    throw ConfigError("unknown permutation setting: " + s);
}

PermutationConfig PermutationConfig::from_setting(PermutationSetting s, double r, double c,
                                                  bool force_different, std::uint64_t seed) {
    PermutationConfig cfg;
    cfg.r = r;
    cfg.c = c;
    cfg.keep_rows_constant = s != PermutationSetting::E3;
    cfg.repermute_each_column = s != PermutationSetting::E2;
    cfg.force_different = force_different;
    cfg.seed = seed;
    return cfg;
}

PermutationSetting PermutationConfig::setting() const {
    if (!keep_rows_constant) return PermutationSetting::E3;
    return repermute_each_column ? PermutationSetting::E1 : PermutationSetting::E2;
}

void PermutationConfig::validate() const {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("row proportion r must be in (0,1]");
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("column proportion c must be in (0,1]");
}

std::size_t PermutationConfig::rows_selected(std::size_t num_rows) const {
    return std::max<std::size_t>(1, round_half_away(r * static_cast<double>(num_rows)));
}

std::size_t PermutationConfig::cols_selected(std::size_t num_features) const {
    return std::max<std::size_t>(1, round_half_away(c * static_cast<double>(num_features)));
}

bool PermutationConfig::pure_row_permutation(std::size_t num_features) const {
    return keep_rows_constant && !repermute_each_column &&
           cols_selected(num_features) == num_features;
}

void RebalanceConfig::validate() const {
    if (!(k > 0.0)) throw ConfigError("odds multiplier k must be > 0");
}

namespace detail {

void apply_row_permutation(Column& col, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& perm) {
    if (col.kind == FeatureKind::numeric) {
        std::vector<double> gathered(perm.size());
        for (std::size_t j = 0; j < perm.size(); ++j) gathered[j] = col.numeric[perm[j]];
        for (std::size_t j = 0; j < rows.size(); ++j) col.numeric[rows[j]] = gathered[j];
    } else {
        std::vector<std::int32_t> gathered(perm.size());
        for (std::size_t j = 0; j < perm.size(); ++j) gathered[j] = col.codes[perm[j]];
        for (std::size_t j = 0; j < rows.size(); ++j) col.codes[rows[j]] = gathered[j];
    }
}

bool permutation_changes_column(const Column& col, const std::vector<std::size_t>& rows,
                                const std::vector<std::size_t>& perm) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (!values_equal(col, rows[j], perm[j])) return true;
    }
    return false;
}

}  // namespace detail

Dataset permute_distort(const Dataset& d, const PermutationConfig& cfg) {
    cfg.validate();
    d.validate();
    const std::size_t n = d.num_rows();
    if (n < 2) throw DegenerateInputError("permute_distort needs at least 2 rows");
    if (d.schema.features.empty())
        throw DegenerateInputError("permute_distort needs at least one feature");

    const std::size_t R = cfg.rows_selected(n);
    const std::size_t C = cfg.cols_selected(d.schema.features.size());

    rng::Engine eng(cfg.seed);
    auto fsel = rng::sample_without_replacement(d.schema.features.size(), C, eng);
    std::sort(fsel.begin(), fsel.end());

    Dataset out = d;

    // Draw I' permutations of the row subset until the column changes (or
    // force_different is off). A column constant on the subset can never
    // change, so the attempt budget turns that into an error.
    auto permute_column = [&](std::size_t col_idx, const std::vector<std::size_t>& rows) {
        std::vector<std::size_t> perm = rows;
        for (int attempt = 0; attempt < kForceDifferentAttempts; ++attempt) {
            rng::shuffle(perm, eng);
            if (!cfg.force_different || detail::permutation_changes_column(d.columns[col_idx], rows, perm)) {
                detail::apply_row_permutation(out.columns[col_idx], rows, perm);
                return;
            }
        }
        throw DistortionImpossibleError(
            "force_different: column '" + d.schema.features[col_idx].name +
                "' has no changing permutation on the selected rows",
            d.schema.features[col_idx].name);
    };

    if (cfg.keep_rows_constant) {
        auto rows = rng::sample_without_replacement(n, R, eng);
        if (cfg.repermute_each_column) {
            for (std::size_t ci : fsel) permute_column(ci, rows);  // E1
        } else {
            // E2: one shared permutation; force_different asks that the
            // dataset changes somewhere among the selected columns.
            std::vector<std::size_t> perm = rows;
            for (int attempt = 0; attempt < kForceDifferentAttempts; ++attempt) {
                rng::shuffle(perm, eng);
                bool changes = !cfg.force_different;
                for (std::size_t ci : fsel) {
                    if (changes) break;
                    changes = detail::permutation_changes_column(d.columns[ci], rows, perm);
                }
                if (changes) {
                    for (std::size_t ci : fsel)
                        detail::apply_row_permutation(out.columns[ci], rows, perm);
                    return out;
                }
            }
            throw DistortionImpossibleError(
                "force_different: no shared permutation changes any selected column; first is '" +
                    d.schema.features[fsel.front()].name + "'",
                d.schema.features[fsel.front()].name);
        }
    } else {
        // E3: fresh row subset per column (repermute_each_column is ignored)
        for (std::size_t ci : fsel) {
            auto rows = rng::sample_without_replacement(n, R, eng);
            permute_column(ci, rows);
        }
    }
    return out;
}

std::uint64_t target_misclassified(std::uint64_t M2, std::uint64_t N2, double k) {
    if (!(k > 0.0)) throw DomainError("target_misclassified: k must be > 0");
    if (N2 == 0 || M2 > N2) throw DomainError("target_misclassified: need 0 <= M2 <= N2, N2 >= 1");
    if (M2 == N2)
        throw DegenerateInputError("target_misclassified: M2 = N2 gives infinite odds");
    const double m = static_cast<double>(M2);
    const double n = static_cast<double>(N2);
    const double raw = k * m * n / (n - (1.0 - k) * m);
    const double rounded = std::round(raw);  // half away from zero
    const double clamped = std::max(0.0, std::min(rounded, n));
    return static_cast<std::uint64_t>(clamped);
}

Dataset rebalance_mcr(const Dataset& d, const RebalanceConfig& cfg) {
    cfg.validate();
    d.validate();
    const std::uint64_t N = d.num_rows();
    const std::uint64_t M = d.misclassified_count();
    if (M == 0 || M == N)
        throw DegenerateInputError("rebalance_mcr needs both strata non-empty (0 < M < N)");

    const std::uint64_t target = target_misclassified(M, N, cfg.k);

    std::vector<std::size_t> mis, cor;
    for (std::size_t i = 0; i < N; ++i) (d.theta[i] ? mis : cor).push_back(i);

    rng::Engine eng(rng::derive_seed(cfg.seed, {kRebalanceTag}));
    std::vector<std::size_t> rows;
    rows.reserve(N);
    for (std::uint64_t i = 0; i < target; ++i)
        rows.push_back(mis[static_cast<std::size_t>(eng.bounded(mis.size()))]);
    for (std::uint64_t i = target; i < N; ++i)
        rows.push_back(cor[static_cast<std::size_t>(eng.bounded(cor.size()))]);
    rng::shuffle(rows, eng);
    return take_rows(d, rows);
}

double multiplier_to_mcr(std::uint64_t M, std::uint64_t N, double k) {
    if (!(k > 0.0)) throw DomainError("multiplier_to_mcr: k must be > 0");
    if (N == 0 || M >= N) throw DomainError("multiplier_to_mcr: need 0 <= M < N");
    const double phi = static_cast<double>(M) / static_cast<double>(N - M);
    return k * phi / (1.0 + k * phi);
}

}  // namespace slicedrift
