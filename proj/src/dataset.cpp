#include "slicedrift/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "slicedrift/error.hpp"
#include "slicedrift/rng.hpp"

namespace slicedrift {

namespace {

constexpr std::uint64_t kSplitTag = 0x53504c49;  // stratified_split stream
constexpr std::uint64_t kResampleTag = 0x52455350;

// --- RFC 4180 CSV ---

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    bool record_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
        record_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        switch (ch) {
            case '"':
                quoted = true;
                field_started = true;
                record_started = true;
                break;
            case ',':
                record_started = true;
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field += ch;
                field_started = true;
                record_started = true;
                break;
        }
    }
    if (record_started || field_started || !record.empty()) end_record();
    return records;
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_csv_field(std::string& out, const std::string& s) {
    if (!needs_quoting(s)) {
        out += s;
        return;
    }
    out += '"';
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    // Tolerate surrounding spaces; from_chars is strict otherwise.
    while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
    if (begin == end) return false;
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::string lower(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

bool parse_indicator(const std::string& cell, bool& out) {
    std::string t = lower(cell);
    // trim
    auto b = t.find_first_not_of(" \t");
    auto e = t.find_last_not_of(" \t");
    if (b == std::string::npos) return false;
    t = t.substr(b, e - b + 1);
    if (t == "0" || t == "false") {
        out = false;
        return true;
    }
    if (t == "1" || t == "true") {
        out = true;
        return true;
    }
    return false;
}

}  // namespace

std::uint64_t Dataset::misclassified_count() const {
    std::uint64_t m = 0;
    for (auto t : theta) m += t;
    return m;
}

double Dataset::mcr() const {
    return theta.empty() ? 0.0
                         : static_cast<double>(misclassified_count()) / static_cast<double>(theta.size());
}

void Dataset::validate() const {
    schema.validate();
    if (columns.size() != schema.features.size())
        throw SchemaError("column count does not match schema");
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].kind != schema.features[i].kind)
            throw SchemaError("column kind mismatch for feature: " + schema.features[i].name);
        if (columns[i].size() != theta.size())
            throw SchemaError("column length mismatch for feature: " + schema.features[i].name);
    }
}

Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema) {
    schema.validate();
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw IoError("cannot read dataset file: " + csv_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    auto records = parse_csv(text);
    if (records.empty()) throw SchemaError("CSV has no header row: " + csv_path);
    const auto& header = records.front();

    auto header_index = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw SchemaError("missing column in CSV header: " + name);
    };

    std::vector<std::size_t> feature_cols;
    feature_cols.reserve(schema.features.size());
    for (const auto& f : schema.features) feature_cols.push_back(header_index(f.name));
    const std::size_t indicator_col = header_index(schema.indicator_column);

    Dataset d;
    d.schema = schema;
    d.columns.resize(schema.features.size());

    // label -> code, seeded from the schema's persisted tables
    std::vector<std::unordered_map<std::string, std::int32_t>> code_maps(schema.features.size());
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
        d.columns[i].kind = schema.features[i].kind;
        if (schema.features[i].kind == FeatureKind::categorical) {
            auto it = schema.categories.find(schema.features[i].name);
            if (it != schema.categories.end()) {
                for (std::size_t c = 0; c < it->second.size(); ++c) {
                    code_maps[i][it->second[c]] = static_cast<std::int32_t>(c);
                }
            } else {
                d.schema.categories[schema.features[i].name] = {};
            }
        }
    }

    const std::size_t n_rows = records.size() - 1;
    d.theta.reserve(n_rows);
    for (auto& col : d.columns) {
        if (col.kind == FeatureKind::numeric) {
            col.numeric.reserve(n_rows);
        } else {
            col.codes.reserve(n_rows);
        }
    }

    for (std::size_t row = 1; row < records.size(); ++row) {
        const auto& rec = records[row];
        auto cell = [&](std::size_t col) -> const std::string& {
            static const std::string empty;
            return col < rec.size() ? rec[col] : empty;
        };
        for (std::size_t i = 0; i < schema.features.size(); ++i) {
            const std::string& value = cell(feature_cols[i]);
            if (d.columns[i].kind == FeatureKind::numeric) {
                double v;
                d.columns[i].numeric.push_back(parse_double(value, v)
                                                   ? v
                                                   : std::numeric_limits<double>::quiet_NaN());
            } else {
                if (value.empty()) {
                    d.columns[i].codes.push_back(kMissingCode);
                    continue;
                }
                auto& cm = code_maps[i];
                auto it = cm.find(value);
                if (it == cm.end()) {
                    auto code = static_cast<std::int32_t>(cm.size());
                    cm.emplace(value, code);
                    d.schema.categories[schema.features[i].name].push_back(value);
                    d.columns[i].codes.push_back(code);
                } else {
                    d.columns[i].codes.push_back(it->second);
                }
            }
        }
        bool mis;
        if (!parse_indicator(cell(indicator_col), mis)) {
            throw ParseError("indicator value not parseable as boolean: '" +
                                 cell(indicator_col) + "'",
                             row);
        }
        d.theta.push_back(mis ? 1 : 0);
    }
    d.validate();
    return d;
}

void save_dataset(const Dataset& d, const std::string& csv_path, const std::string& schema_path) {
    d.validate();
    std::string out;
    for (std::size_t i = 0; i < d.schema.features.size(); ++i) {
        if (i) out += ',';
        write_csv_field(out, d.schema.features[i].name);
    }
    out += ',';
    write_csv_field(out, d.schema.indicator_column);
    out += '\n';

    const std::size_t n = d.num_rows();
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t i = 0; i < d.columns.size(); ++i) {
            if (i) out += ',';
            const auto& col = d.columns[i];
            if (col.kind == FeatureKind::numeric) {
                double v = col.numeric[row];
                if (!std::isnan(v)) out += format_double(v);
            } else {
                std::int32_t code = col.codes[row];
                if (code != kMissingCode) {
                    const auto& labels = d.schema.categories.at(d.schema.features[i].name);
                    write_csv_field(out, labels.at(static_cast<std::size_t>(code)));
                }
            }
        }
        out += ',';
        out += d.theta[row] ? '1' : '0';
        out += '\n';
    }

    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw IoError("cannot write dataset file: " + csv_path);
    f << out;
    if (!f) throw IoError("write failed: " + csv_path);
    d.schema.save(schema_path);
}

Dataset take_rows(const Dataset& d, std::span<const std::size_t> rows) {
    Dataset out;
    out.schema = d.schema;
    out.columns.resize(d.columns.size());
    for (std::size_t i = 0; i < d.columns.size(); ++i) {
        out.columns[i].kind = d.columns[i].kind;
        if (d.columns[i].kind == FeatureKind::numeric) {
            out.columns[i].numeric.reserve(rows.size());
            for (std::size_t r : rows) out.columns[i].numeric.push_back(d.columns[i].numeric[r]);
        } else {
            out.columns[i].codes.reserve(rows.size());
            for (std::size_t r : rows) out.columns[i].codes.push_back(d.columns[i].codes[r]);
        }
    }
    out.theta.reserve(rows.size());
    for (std::size_t r : rows) out.theta.push_back(d.theta[r]);
    return out;
}

SplitPair stratified_split(const Dataset& d, std::uint64_t seed, std::uint64_t split_index) {
    const std::size_t n = d.num_rows();
    if (n < 2) throw DegenerateInputError("stratified_split needs at least 2 rows");

    rng::Engine eng(rng::derive_seed(seed, {kSplitTag}));

    std::vector<std::size_t> mis, cor;
    for (std::size_t i = 0; i < n; ++i) (d.theta[i] ? mis : cor).push_back(i);
    rng::shuffle(mis, eng);
    rng::shuffle(cor, eng);

    const bool mis_odd = mis.size() % 2 != 0;
    const bool cor_odd = cor.size() % 2 != 0;
    // Each stratum's extra row lands on a seeded-random side; when both
    // strata are odd the extras go to opposite sides so |N1-N2| stays <= 1.
    bool mis_extra_to_first = false, cor_extra_to_first = false;
    if (mis_odd && cor_odd) {
        mis_extra_to_first = eng.bounded(2) == 0;
        cor_extra_to_first = !mis_extra_to_first;
    } else if (mis_odd) {
        mis_extra_to_first = eng.bounded(2) == 0;
    } else if (cor_odd) {
        cor_extra_to_first = eng.bounded(2) == 0;
    }

    const std::size_t mis1 = mis.size() / 2 + ((mis_odd && mis_extra_to_first) ? 1 : 0);
    const std::size_t cor1 = cor.size() / 2 + ((cor_odd && cor_extra_to_first) ? 1 : 0);

    std::vector<std::size_t> first(mis.begin(), mis.begin() + static_cast<std::ptrdiff_t>(mis1));
    first.insert(first.end(), cor.begin(), cor.begin() + static_cast<std::ptrdiff_t>(cor1));
    std::vector<std::size_t> second(mis.begin() + static_cast<std::ptrdiff_t>(mis1), mis.end());
    second.insert(second.end(), cor.begin() + static_cast<std::ptrdiff_t>(cor1), cor.end());

    rng::shuffle(first, eng);
    rng::shuffle(second, eng);

    SplitPair pair;
    pair.baseline = take_rows(d, first);
    pair.deployment = take_rows(d, second);
    pair.seed = seed;
    pair.split_index = split_index;
    return pair;
}

Dataset resample_rows(const Dataset& d, std::uint64_t seed) {
    const std::size_t n = d.num_rows();
    if (n == 0) throw DegenerateInputError("resample_rows needs at least 1 row");
    rng::Engine eng(rng::derive_seed(seed, {kResampleTag}));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(eng.bounded(n));
    return take_rows(d, rows);
}

Dataset drop_low_variance(const Dataset& d, std::uint64_t min_minority_count) {
    d.validate();
    const std::size_t n = d.num_rows();
    Dataset out;
    out.schema.indicator_column = d.schema.indicator_column;
    out.theta = d.theta;
    for (std::size_t i = 0; i < d.columns.size(); ++i) {
        const auto& col = d.columns[i];
        std::uint64_t mode_count = 0;
        if (col.kind == FeatureKind::numeric) {
            std::unordered_map<double, std::uint64_t> counts;
            std::uint64_t nan_count = 0;
            for (double v : col.numeric) {
                if (std::isnan(v)) {
                    mode_count = std::max(mode_count, ++nan_count);
                } else {
                    mode_count = std::max(mode_count, ++counts[v]);
                }
            }
        } else {
            std::unordered_map<std::int32_t, std::uint64_t> counts;
            for (std::int32_t code : col.codes) mode_count = std::max(mode_count, ++counts[code]);
        }
        const std::uint64_t minority = static_cast<std::uint64_t>(n) - mode_count;
        if (minority < min_minority_count) continue;
        out.schema.features.push_back(d.schema.features[i]);
        auto cat = d.schema.categories.find(d.schema.features[i].name);
        if (cat != d.schema.categories.end()) out.schema.categories.insert(*cat);
        out.columns.push_back(col);
    }
    if (out.schema.features.empty())
        throw DegenerateInputError("drop_low_variance removed every feature");
    return out;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (!(a.schema == b.schema) || a.theta != b.theta) return false;
    if (a.columns.size() != b.columns.size()) return false;
    for (std::size_t i = 0; i < a.columns.size(); ++i) {
        if (a.columns[i].kind != b.columns[i].kind) return false;
        if (a.columns[i].kind == FeatureKind::numeric) {
            const auto& x = a.columns[i].numeric;
            const auto& y = b.columns[i].numeric;
            if (x.size() != y.size()) return false;
            for (std::size_t r = 0; r < x.size(); ++r) {
                bool both_nan = std::isnan(x[r]) && std::isnan(y[r]);
                if (!both_nan && x[r] != y[r]) return false;
            }
        } else if (a.columns[i].codes != b.columns[i].codes) {
            return false;
        }
    }
    return true;
}

}  // namespace slicedrift
