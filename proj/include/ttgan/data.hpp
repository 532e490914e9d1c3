#pragma once

#include "ttgan/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ttgan {

enum class FeatureKind { numeric, categorical };

struct FeatureMeta {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> categories;  // categorical only, cell values index into this list
    std::string missing_token = "?";
};

/// Binary labelled table. Categorical cells hold the index into their
/// feature's category list; missing cells are NaN.
struct Dataset {
    Matrix x;
    std::vector<int> y;  // 0 = majority, 1 = minority
    std::vector<FeatureMeta> meta;
    std::string name;
    std::array<std::string, 2> class_labels;  // original label text for y = 0 / y = 1

    std::size_t size() const { return y.size(); }
    std::size_t width() const { return meta.size(); }
    std::size_t minority_count() const {
        return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    }
    std::size_t majority_count() const { return size() - minority_count(); }
};

/// Preprocessed feature matrix with binary labels. This is the space the
/// resamplers, the GAN and the classifiers work in.
struct TrainingSet {
    Matrix x;
    std::vector<int> y;

    std::size_t size() const { return y.size(); }
    std::size_t minority_count() const {
        return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    }
    std::size_t majority_count() const { return size() - minority_count(); }
};

inline bool is_missing(double v) { return std::isnan(v); }

/// Throws data_error when the structural invariants do not hold.
inline void validate(const Dataset& d) {
    if (static_cast<std::size_t>(d.x.rows()) != d.y.size()) {
        throw data_error("dataset '" + d.name + "': row count does not match label count");
    }
    if (static_cast<std::size_t>(d.x.cols()) != d.meta.size()) {
        throw data_error("dataset '" + d.name + "': column count does not match feature metadata");
    }
    if (d.y.empty()) {
        throw data_error("empty dataset");
    }
    for (int label : d.y) {
        if (label != 0 && label != 1) {
            throw data_error("dataset '" + d.name + "': labels must be 0 or 1");
        }
    }
    if (d.minority_count() == 0 || d.majority_count() == 0) {
        throw data_error("dataset '" + d.name + "': empty class");
    }
    for (std::size_t j = 0; j < d.meta.size(); ++j) {
        const FeatureMeta& f = d.meta[j];
        if (f.kind == FeatureKind::categorical) {
            if (f.categories.empty()) {
                throw data_error("categorical feature '" + f.name + "' has no categories");
            }
            for (Index i = 0; i < d.x.rows(); ++i) {
                const double v = d.x(i, static_cast<Index>(j));
                if (is_missing(v)) {
                    continue;
                }
                if (v < 0 || v >= static_cast<double>(f.categories.size()) || v != std::floor(v)) {
                    throw data_error("feature '" + f.name + "': cell outside declared categories");
                }
            }
        } else if (!f.categories.empty()) {
            throw data_error("numeric feature '" + f.name + "' carries categories");
        }
    }
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::string unquote(std::string s) {
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

// Comma split with double-quote support; fields are trimmed.
inline std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') {
            if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else {
                quoted = !quoted;
            }
        } else if (c == sep && !quoted) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    std::size_t used = 0;
    try {
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) {
            return std::nullopt;
        }
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// Picks the minority label: strictly rarer wins, exact ties go to the
// lexicographically larger label. Returns {majority, minority}.
inline std::array<std::string, 2> assign_classes(const std::map<std::string, std::size_t>& counts) {
    auto first = counts.begin();
    auto second = std::next(first);
    // map order is lexicographic, so `second` is the larger label
    if (first->second < second->second) {
        return {second->first, first->first};
    }
    return {first->first, second->first};
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string stem(const std::string& path) {
    std::string base = path.substr(path.find_last_of("/\\") + 1);
    const auto dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

/// Parses a KEEL .dat file. The output attribute must carry exactly two
/// labels in the data; the rarer one becomes y = 1.
inline Dataset load_keel(const std::string& path, const std::string& missing_token = "?") {
    std::istringstream in(detail::read_file(path));
    struct Attribute {
        FeatureMeta meta;
    };
    std::vector<Attribute> attributes;
    std::vector<std::string> outputs;
    std::string relation;
    std::string line;
    bool in_data = false;
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '%') {
            continue;
        }
        if (in_data) {
            rows.push_back(detail::split_fields(t));
            continue;
        }
        if (t[0] != '@') {
            throw data_error(path + ":" + std::to_string(line_no) + ": malformed header line");
        }
        const auto space = t.find_first_of(" \t");
        const std::string directive = detail::lower(t.substr(0, space));
        const std::string rest = space == std::string::npos ? "" : detail::trim(t.substr(space));
        if (directive == "@relation") {
            relation = detail::unquote(rest);
        } else if (directive == "@attribute") {
            std::string name;
            std::string type;
            if (!rest.empty() && (rest[0] == '\'' || rest[0] == '"')) {
                const auto close = rest.find(rest[0], 1);
                if (close == std::string::npos) {
                    throw data_error(path + ":" + std::to_string(line_no) + ": unterminated attribute name");
                }
                name = rest.substr(1, close - 1);
                type = detail::trim(rest.substr(close + 1));
            } else {
                const auto brace = rest.find('{');
                const auto ws = rest.find_first_of(" \t");
                const auto cut = std::min(brace, ws);
                if (cut == std::string::npos) {
                    throw data_error(path + ":" + std::to_string(line_no) + ": attribute without type");
                }
                name = rest.substr(0, cut);
                type = detail::trim(rest.substr(cut));
            }
            Attribute a;
            a.meta.name = name;
            a.meta.missing_token = missing_token;
            if (!type.empty() && type[0] == '{') {
                const auto close = type.find('}');
                if (close == std::string::npos) {
                    throw data_error(path + ":" + std::to_string(line_no) + ": unterminated category list");
                }
                a.meta.kind = FeatureKind::categorical;
                for (auto& c : detail::split_fields(type.substr(1, close - 1))) {
                    a.meta.categories.push_back(detail::unquote(c));
                }
            } else {
                const std::string kind = detail::lower(type.substr(0, type.find_first_of(" \t[")));
                if (kind != "real" && kind != "integer" && kind != "numeric") {
                    throw data_error(path + ":" + std::to_string(line_no) + ": unsupported attribute type '" +
                                     type + "'");
                }
                a.meta.kind = FeatureKind::numeric;
            }
            attributes.push_back(std::move(a));
        } else if (directive == "@inputs") {
            // implied by @outputs
        } else if (directive == "@outputs" || directive == "@output") {
            for (auto& o : detail::split_fields(rest)) {
                outputs.push_back(o);
            }
        } else if (directive == "@data") {
            in_data = true;
        } else {
            throw data_error(path + ":" + std::to_string(line_no) + ": unknown directive '" + directive + "'");
        }
    }
    if (!in_data || attributes.empty()) {
        throw data_error(path + ": malformed header (missing @attribute or @data)");
    }
    if (outputs.size() > 1) {
        throw data_error(path + ": more than one output attribute");
    }
    std::size_t out_col = attributes.size() - 1;
    if (!outputs.empty()) {
        auto it = std::find_if(attributes.begin(), attributes.end(),
                               [&](const Attribute& a) { return a.meta.name == outputs.front(); });
        if (it == attributes.end()) {
            throw data_error(path + ": output attribute '" + outputs.front() + "' not declared");
        }
        out_col = static_cast<std::size_t>(it - attributes.begin());
    }
    if (rows.empty()) {
        throw data_error("empty dataset");
    }

    std::map<std::string, std::size_t> label_counts;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != attributes.size()) {
            throw data_error(path + ": data row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " fields, expected " +
                             std::to_string(attributes.size()));
        }
        const std::string& label = rows[r][out_col];
        if (label == missing_token) {
            throw data_error(path + ": data row " + std::to_string(r + 1) + " has a missing label");
        }
        ++label_counts[label];
    }
    if (label_counts.size() > 2) {
        throw data_error(path + ": more than two classes");
    }
    if (label_counts.size() < 2) {
        throw data_error(path + ": empty class");
    }

    Dataset d;
    d.name = relation.empty() ? detail::stem(path) : relation;
    d.class_labels = detail::assign_classes(label_counts);
    for (std::size_t j = 0; j < attributes.size(); ++j) {
        if (j != out_col) {
            d.meta.push_back(attributes[j].meta);
        }
    }
    d.x.resize(static_cast<Index>(rows.size()), static_cast<Index>(d.meta.size()));
    d.y.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Index col = 0;
        for (std::size_t j = 0; j < attributes.size(); ++j) {
            if (j == out_col) {
                continue;
            }
            const FeatureMeta& f = attributes[j].meta;
            const std::string cell = detail::unquote(rows[r][j]);
            double v = std::numeric_limits<double>::quiet_NaN();
            if (cell != missing_token && !cell.empty()) {
                if (f.kind == FeatureKind::numeric) {
                    auto parsed = detail::parse_real(cell);
                    if (!parsed) {
                        throw data_error(path + ": data row " + std::to_string(r + 1) + ": '" + cell +
                                         "' is not numeric for attribute '" + f.name + "'");
                    }
                    v = *parsed;
                } else {
                    auto it = std::find(f.categories.begin(), f.categories.end(), cell);
                    if (it == f.categories.end()) {
                        throw data_error(path + ": data row " + std::to_string(r + 1) + ": '" + cell +
                                         "' is not a declared category of '" + f.name + "'");
                    }
                    v = static_cast<double>(it - f.categories.begin());
                }
            }
            d.x(static_cast<Index>(r), col++) = v;
        }
        d.y[r] = rows[r][out_col] == d.class_labels[1] ? 1 : 0;
    }
    validate(d);
    return d;
}

/// Reads a headered CSV. Columns whose non-missing cells all parse as reals
/// are numeric; anything else is categorical with sorted categories. An empty
/// `minority_label` selects the rarer label automatically.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& minority_label = "", const std::string& missing_token = "") {
    std::istringstream in(detail::read_file(path));
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!detail::trim(line).empty()) {
            header = detail::split_fields(line);
            break;
        }
    }
    if (header.empty()) {
        throw data_error(path + ": missing header row");
    }
    auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        throw data_error(path + ": label column '" + label_column + "' not found");
    }
    const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (detail::trim(line).empty()) {
            continue;
        }
        auto fields = detail::split_fields(line);
        if (fields.size() != header.size()) {
            throw data_error(path + ": row " + std::to_string(rows.size() + 2) + " has " +
                             std::to_string(fields.size()) + " fields, expected " + std::to_string(header.size()));
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) {
        throw data_error("empty dataset");
    }

    std::map<std::string, std::size_t> label_counts;
    for (const auto& r : rows) {
        if (r[label_col] == missing_token) {
            throw data_error(path + ": missing label value");
        }
        ++label_counts[r[label_col]];
    }
    if (label_counts.size() > 2) {
        throw data_error(path + ": label column has more than two values");
    }
    if (label_counts.size() < 2) {
        throw data_error(path + ": empty class");
    }

    Dataset d;
    d.name = detail::stem(path);
    if (minority_label.empty()) {
        d.class_labels = detail::assign_classes(label_counts);
    } else {
        auto it = label_counts.find(minority_label);
        if (it == label_counts.end()) {
            throw data_error(path + ": minority label '" + minority_label + "' does not occur");
        }
        const auto other = it == label_counts.begin() ? std::next(it) : label_counts.begin();
        if (it->second > other->second) {
            throw data_error(path + ": minority label '" + minority_label + "' is the more frequent class");
        }
        d.class_labels = {other->first, it->first};
    }

    std::vector<std::size_t> feature_cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == label_col) {
            continue;
        }
        feature_cols.push_back(j);
        FeatureMeta f;
        f.name = header[j];
        f.missing_token = missing_token;
        bool numeric = true;
        std::vector<std::string> seen;
        for (const auto& r : rows) {
            const std::string& cell = r[j];
            if (cell == missing_token) {
                continue;
            }
            seen.push_back(cell);
            if (numeric && !detail::parse_real(cell)) {
                numeric = false;
            }
        }
        if (!numeric) {
            f.kind = FeatureKind::categorical;
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            f.categories = std::move(seen);
        }
        d.meta.push_back(std::move(f));
    }

    d.x.resize(static_cast<Index>(rows.size()), static_cast<Index>(d.meta.size()));
    d.y.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < feature_cols.size(); ++c) {
            const std::string& cell = rows[r][feature_cols[c]];
            const FeatureMeta& f = d.meta[c];
            double v = std::numeric_limits<double>::quiet_NaN();
            if (cell != missing_token) {
                if (f.kind == FeatureKind::numeric) {
                    v = *detail::parse_real(cell);
                } else {
                    auto it = std::lower_bound(f.categories.begin(), f.categories.end(), cell);
                    v = static_cast<double>(it - f.categories.begin());
                }
            }
            d.x(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
        d.y[r] = rows[r][label_col] == d.class_labels[1] ? 1 : 0;
    }
    validate(d);
    return d;
}

/// Writes the dataset back out as a CSV with a trailing `class` column.
inline void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot write '" + path + "'");
    }
    out.precision(17);
    for (const auto& f : d.meta) {
        out << f.name << ',';
    }
    out << "class\n";
    for (Index i = 0; i < d.x.rows(); ++i) {
        for (std::size_t j = 0; j < d.meta.size(); ++j) {
            const double v = d.x(i, static_cast<Index>(j));
            if (is_missing(v)) {
                out << d.meta[j].missing_token;
            } else if (d.meta[j].kind == FeatureKind::categorical) {
                out << d.meta[j].categories[static_cast<std::size_t>(v)];
            } else {
                out << v;
            }
            out << ',';
        }
        out << d.class_labels[static_cast<std::size_t>(d.y[static_cast<std::size_t>(i)])] << '\n';
    }
}

struct Partition {
    Matrix majority;
    Matrix minority;
    std::vector<std::size_t> majority_rows;  // source row of each majority row
    std::vector<std::size_t> minority_rows;
};

inline Partition partition(const Matrix& x, const std::vector<int>& y) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw shape_error("partition: row count does not match label count");
    }
    Partition p;
    for (std::size_t i = 0; i < y.size(); ++i) {
        (y[i] == 1 ? p.minority_rows : p.majority_rows).push_back(i);
    }
    p.majority = select_rows(x, p.majority_rows);
    p.minority = select_rows(x, p.minority_rows);
    return p;
}

inline Partition partition(const Dataset& d) { return partition(d.x, d.y); }
inline Partition partition(const TrainingSet& t) { return partition(t.x, t.y); }

inline double imbalance_ratio(const Dataset& d) {
    return static_cast<double>(d.majority_count()) / static_cast<double>(d.minority_count());
}

struct SplitSpec {
    double train_fraction = 0.6;
    double val_fraction = 0.2;
    double test_fraction = 0.2;
    bool stratified = true;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

struct DatasetSplit {
    Dataset train;
    Dataset val;
    Dataset test;
    SplitIndices indices;
};

inline Dataset subset(const Dataset& d, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.name = d.name;
    out.meta = d.meta;
    out.class_labels = d.class_labels;
    out.x = select_rows(d.x, rows);
    out.y.reserve(rows.size());
    for (std::size_t r : rows) {
        out.y.push_back(d.y[r]);
    }
    return out;
}

namespace detail {

// Largest-remainder apportionment of n items over the fractions. When
// `at_least_one` is set every part gets >= 1 item or the call throws.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions,
                                            bool at_least_one) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double exact = fractions[k] * static_cast<double>(n);
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        remainder[k] = exact - static_cast<double>(counts[k]);
        assigned += counts[k];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 3; ++k) {
            if (remainder[k] > remainder[best]) {
                best = k;
            }
        }
        ++counts[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    if (at_least_one) {
        if (n < 3) {
            throw data_error("infeasible stratification: a class has " + std::to_string(n) +
                             " rows but every split part needs at least one");
        }
        for (std::size_t k = 0; k < 3; ++k) {
            if (counts[k] == 0) {
                const auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                                            counts.begin());
                --counts[donor];
                ++counts[k];
            }
        }
    }
    return counts;
}

}  // namespace detail

/// Deterministic train/val/test split. Stratified splits apportion each class
/// separately and guarantee every part holds at least one row of each class.
inline DatasetSplit split(const Dataset& d, const SplitSpec& s) {
    const std::array<double, 3> fractions{s.train_fraction, s.val_fraction, s.test_fraction};
    for (double f : fractions) {
        if (!(f > 0.0 && f < 1.0)) {
            throw config_error("split fractions must lie in (0, 1)");
        }
    }
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
        throw config_error("split fractions must sum to 1");
    }
    Rng rng(s.seed);
    SplitIndices idx;
    auto deal = [&](std::vector<std::size_t> rows, bool at_least_one) {
        rng.shuffle(rows);
        const auto counts = detail::apportion(rows.size(), fractions, at_least_one);
        auto it = rows.begin();
        std::array<std::vector<std::size_t>*, 3> parts{&idx.train, &idx.val, &idx.test};
        for (std::size_t k = 0; k < 3; ++k) {
            parts[k]->insert(parts[k]->end(), it, it + static_cast<std::ptrdiff_t>(counts[k]));
            it += static_cast<std::ptrdiff_t>(counts[k]);
        }
    };
    if (s.stratified) {
        std::vector<std::size_t> maj;
        std::vector<std::size_t> min;
        for (std::size_t i = 0; i < d.y.size(); ++i) {
            (d.y[i] == 1 ? min : maj).push_back(i);
        }
        deal(std::move(maj), true);
        deal(std::move(min), true);
    } else {
        deal(iota_indices(d.size()), false);
    }
    for (auto* part : {&idx.train, &idx.val, &idx.test}) {
        std::sort(part->begin(), part->end());
    }
    DatasetSplit out;
    out.train = subset(d, idx.train);
    out.val = subset(d, idx.val);
    out.test = subset(d, idx.test);
    out.indices = std::move(idx);
    return out;
}

}  // namespace ttgan
