#pragma once

#include "ttgan/core.hpp"
#include "ttgan/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ttgan::preprocess {

// ---------------------------------------------------------------------------
// Yeo-Johnson power transform
// ---------------------------------------------------------------------------

inline constexpr double yj_lambda_epsilon = 1e-12;

inline double yeo_johnson(double x, double lambda) {
    if (x >= 0.0) {
        if (std::abs(lambda) < yj_lambda_epsilon) {
            return std::log1p(x);
        }
        return std::expm1(lambda * std::log1p(x)) / lambda;
    }
    const double p = 2.0 - lambda;
    if (std::abs(p) < yj_lambda_epsilon) {
        return -std::log1p(-x);
    }
    return -std::expm1(p * std::log1p(-x)) / p;
}

inline double yeo_johnson_inverse(double y, double lambda) {
    if (y >= 0.0) {
        if (std::abs(lambda) < yj_lambda_epsilon) {
            return std::expm1(y);
        }
        return std::expm1(std::log1p(lambda * y) / lambda);
    }
    const double p = 2.0 - lambda;
    if (std::abs(p) < yj_lambda_epsilon) {
        return -std::expm1(-y);
    }
    return -std::expm1(std::log1p(-p * y) / p);
}

/// Profile log-likelihood of a normal model on the transformed values.
inline double yeo_johnson_log_likelihood(std::span<const double> values, double lambda) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += yeo_johnson(v, lambda);
    }
    mean /= n;
    double var = 0.0;
    double jacobian = 0.0;
    for (double v : values) {
        const double t = yeo_johnson(v, lambda) - mean;
        var += t * t;
        jacobian += std::copysign(std::log1p(std::abs(v)), v);
    }
    var /= n;
    if (!(var > 0.0) || !std::isfinite(var)) {
        return -std::numeric_limits<double>::infinity();
    }
    return -0.5 * n * std::log(var) + (lambda - 1.0) * jacobian;
}

/// Golden-section maximisation of the profile likelihood over [lo, hi],
/// endpoints included.
inline double fit_yeo_johnson_lambda(std::span<const double> values, double lo = -2.0, double hi = 2.0,
                                     double tol = 1e-6) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = yeo_johnson_log_likelihood(values, c);
    double fd = yeo_johnson_log_likelihood(values, d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = yeo_johnson_log_likelihood(values, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = yeo_johnson_log_likelihood(values, d);
        }
    }
    // the maximum may sit on a boundary, which the bracket never reaches
    double best = 0.5 * (a + b);
    double best_ll = yeo_johnson_log_likelihood(values, best);
    for (double edge : {lo, hi}) {
        const double ll = yeo_johnson_log_likelihood(values, edge);
        if (ll > best_ll) {
            best = edge;
            best_ll = ll;
        }
    }
    return best;
}

/// True iff some interval of width <= 20% of the observed range holds >= 90%
/// of the values. Constant inputs are never flagged.
inline bool detect_power_law(std::span<const double> values) {
    if (values.size() < 2) {
        return false;
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double range = v.back() - v.front();
    if (!(range > 0.0)) {
        return false;
    }
    const double width = 0.2 * range;
    const std::size_t n = v.size();
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < n; ++lo) {
        if (hi < lo) {
            hi = lo;
        }
        while (hi + 1 < n && v[hi + 1] - v[lo] <= width) {
            ++hi;
        }
        if (10 * (hi - lo + 1) >= 9 * n) {
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct PreprocessOptions {
    bool impute_mode = false;  // otherwise numeric gaps take the mean, categorical gaps a zero block
    bool yeo_johnson = false;
};

struct NumericColumn {
    std::size_t source = 0;
    double impute = 0.0;
    std::optional<double> yj_lambda;
    double mean = 0.0;
    double scale = 1.0;
    bool constant = false;
};

struct CategoricalColumn {
    std::size_t source = 0;
    std::vector<std::string> categories;
    std::optional<std::size_t> impute;
    std::size_t offset = 0;  // first output column of the one-hot block
};

struct PreprocessPipeline {
    PreprocessOptions options;
    std::vector<FeatureMeta> schema;
    std::vector<NumericColumn> numeric;
    std::vector<CategoricalColumn> categorical;
    std::vector<Index> numeric_offset;  // output column of each numeric entry
    std::vector<std::string> columns;   // output column names in order
    std::vector<std::string> warnings;

    std::size_t output_width() const { return columns.size(); }
};

namespace detail {

inline double numeric_mode(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double best = values.front();
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < values.size();) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) {
            ++j;
        }
        if (j - i > best_count) {
            best_count = j - i;
            best = values[i];
        }
        i = j;
    }
    return best;
}

}  // namespace detail

/// Fits all statistics on `train`. Column order: source features in order,
/// a numeric feature yields one column and a categorical one a one-hot block.
inline PreprocessPipeline fit(const Dataset& train, const PreprocessOptions& options = {}) {
    if (train.size() == 0) {
        throw data_error("cannot fit preprocessing on an empty dataset");
    }
    PreprocessPipeline p;
    p.options = options;
    p.schema = train.meta;
    Index out_col = 0;
    for (std::size_t j = 0; j < train.meta.size(); ++j) {
        const FeatureMeta& f = train.meta[j];
        std::vector<double> present;
        std::size_t missing = 0;
        for (Index i = 0; i < train.x.rows(); ++i) {
            const double v = train.x(i, static_cast<Index>(j));
            if (is_missing(v)) {
                ++missing;
            } else {
                present.push_back(v);
            }
        }
        if (f.kind == FeatureKind::categorical) {
            CategoricalColumn c;
            c.source = j;
            c.categories = f.categories;
            c.offset = static_cast<std::size_t>(out_col);
            if (options.impute_mode && !present.empty()) {
                std::vector<std::size_t> counts(f.categories.size(), 0);
                for (double v : present) {
                    ++counts[static_cast<std::size_t>(v)];
                }
                // ties go to the lexicographically first label
                std::size_t best = 0;
                for (std::size_t k = 1; k < counts.size(); ++k) {
                    if (counts[k] > counts[best] ||
                        (counts[k] == counts[best] && f.categories[k] < f.categories[best])) {
                        best = k;
                    }
                }
                c.impute = best;
            }
            for (const auto& cat : f.categories) {
                p.columns.push_back(f.name + "=" + cat);
            }
            out_col += static_cast<Index>(f.categories.size());
            p.categorical.push_back(std::move(c));
            continue;
        }

        NumericColumn c;
        c.source = j;
        if (present.empty()) {
            p.warnings.push_back("feature '" + f.name + "' has no observed values");
            c.impute = 0.0;
        } else if (options.impute_mode) {
            c.impute = detail::numeric_mode(present);
        } else {
            double sum = 0.0;
            for (double v : present) {
                sum += v;
            }
            c.impute = sum / static_cast<double>(present.size());
        }
        std::vector<double> column = present;
        column.insert(column.end(), missing, c.impute);
        if (options.yeo_johnson && detect_power_law(column)) {
            c.yj_lambda = fit_yeo_johnson_lambda(column);
            for (double& v : column) {
                v = yeo_johnson(v, *c.yj_lambda);
            }
        }
        double mean = 0.0;
        for (double v : column) {
            mean += v;
        }
        mean /= static_cast<double>(column.size());
        double var = 0.0;
        for (double v : column) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(column.size());
        c.mean = mean;
        c.scale = std::sqrt(var);
        if (!(c.scale > 0.0)) {
            c.scale = 1.0;
            c.constant = true;
            p.warnings.push_back("feature '" + f.name + "' is constant; scale forced to 1");
        }
        p.numeric_offset.push_back(out_col);
        p.columns.push_back(f.name);
        ++out_col;
        p.numeric.push_back(c);
    }
    return p;
}

inline void check_schema(const PreprocessPipeline& p, const Dataset& d) {
    if (d.meta.size() != p.schema.size()) {
        throw shape_error("schema mismatch: expected " + std::to_string(p.schema.size()) + " features, got " +
                          std::to_string(d.meta.size()));
    }
    for (std::size_t j = 0; j < d.meta.size(); ++j) {
        if (d.meta[j].name != p.schema[j].name || d.meta[j].kind != p.schema[j].kind) {
            throw shape_error("schema mismatch at feature " + std::to_string(j) + " ('" + d.meta[j].name + "')");
        }
    }
}

/// Transforms `d` into the fitted output space. Categories are matched by
/// label, so a category the pipeline never saw becomes an all-zero block.
inline Matrix apply(const PreprocessPipeline& p, const Dataset& d) {
    check_schema(p, d);
    Matrix out = Matrix::Zero(d.x.rows(), static_cast<Index>(p.output_width()));
    for (std::size_t k = 0; k < p.numeric.size(); ++k) {
        const NumericColumn& c = p.numeric[k];
        const Index col = p.numeric_offset[k];
        for (Index i = 0; i < d.x.rows(); ++i) {
            double v = d.x(i, static_cast<Index>(c.source));
            if (is_missing(v)) {
                v = c.impute;
            }
            if (c.yj_lambda) {
                v = yeo_johnson(v, *c.yj_lambda);
            }
            out(i, col) = (v - c.mean) / c.scale;
        }
    }
    for (const CategoricalColumn& c : p.categorical) {
        const FeatureMeta& f = d.meta[c.source];
        std::vector<std::optional<std::size_t>> remap(f.categories.size());
        for (std::size_t k = 0; k < f.categories.size(); ++k) {
            auto it = std::find(c.categories.begin(), c.categories.end(), f.categories[k]);
            if (it != c.categories.end()) {
                remap[k] = static_cast<std::size_t>(it - c.categories.begin());
            }
        }
        for (Index i = 0; i < d.x.rows(); ++i) {
            const double v = d.x(i, static_cast<Index>(c.source));
            std::optional<std::size_t> slot;
            if (is_missing(v)) {
                slot = c.impute;
            } else {
                slot = remap[static_cast<std::size_t>(v)];
            }
            if (slot) {
                out(i, static_cast<Index>(c.offset + *slot)) = 1.0;
            }
        }
    }
    return out;
}

/// Maps numeric output columns back to the raw feature space. One-hot blocks
/// are returned unchanged.
inline Matrix invert_numeric(const PreprocessPipeline& p, const Matrix& transformed) {
    Matrix out = transformed;
    for (std::size_t k = 0; k < p.numeric.size(); ++k) {
        const NumericColumn& c = p.numeric[k];
        const Index col = p.numeric_offset[k];
        for (Index i = 0; i < out.rows(); ++i) {
            double v = transformed(i, col) * c.scale + c.mean;
            if (c.yj_lambda) {
                v = yeo_johnson_inverse(v, *c.yj_lambda);
            }
            out(i, col) = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PreprocessPipeline& p) {
    using nlohmann::json;
    json j;
    j["options"] = {{"impute_mode", p.options.impute_mode}, {"yeo_johnson", p.options.yeo_johnson}};
    json schema = json::array();
    for (const auto& f : p.schema) {
        schema.push_back({{"name", f.name},
                          {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"},
                          {"categories", f.categories},
                          {"missing_token", f.missing_token}});
    }
    j["schema"] = schema;
    json numeric = json::array();
    for (std::size_t k = 0; k < p.numeric.size(); ++k) {
        const auto& c = p.numeric[k];
        json e{{"source", c.source},   {"column", p.numeric_offset[k]}, {"impute", c.impute},
               {"mean", c.mean},       {"scale", c.scale},              {"constant", c.constant}};
        e["yeo_johnson_lambda"] = c.yj_lambda ? json(*c.yj_lambda) : json(nullptr);
        numeric.push_back(e);
    }
    j["numeric"] = numeric;
    json categorical = json::array();
    for (const auto& c : p.categorical) {
        json e{{"source", c.source}, {"offset", c.offset}, {"categories", c.categories}};
        e["impute"] = c.impute ? json(*c.impute) : json(nullptr);
        categorical.push_back(e);
    }
    j["categorical"] = categorical;
    j["columns"] = p.columns;
    j["warnings"] = p.warnings;
    return j;
}

inline PreprocessPipeline pipeline_from_json(const nlohmann::json& j) {
    PreprocessPipeline p;
    p.options.impute_mode = j.at("options").at("impute_mode").get<bool>();
    p.options.yeo_johnson = j.at("options").at("yeo_johnson").get<bool>();
    for (const auto& f : j.at("schema")) {
        FeatureMeta m;
        m.name = f.at("name").get<std::string>();
        m.kind = f.at("kind").get<std::string>() == "numeric" ? FeatureKind::numeric : FeatureKind::categorical;
        m.categories = f.at("categories").get<std::vector<std::string>>();
        m.missing_token = f.at("missing_token").get<std::string>();
        p.schema.push_back(std::move(m));
    }
    for (const auto& e : j.at("numeric")) {
        NumericColumn c;
        c.source = e.at("source").get<std::size_t>();
        c.impute = e.at("impute").get<double>();
        c.mean = e.at("mean").get<double>();
        c.scale = e.at("scale").get<double>();
        c.constant = e.at("constant").get<bool>();
        if (!e.at("yeo_johnson_lambda").is_null()) {
            c.yj_lambda = e.at("yeo_johnson_lambda").get<double>();
        }
        p.numeric_offset.push_back(e.at("column").get<Index>());
        p.numeric.push_back(c);
    }
    for (const auto& e : j.at("categorical")) {
        CategoricalColumn c;
        c.source = e.at("source").get<std::size_t>();
        c.offset = e.at("offset").get<std::size_t>();
        c.categories = e.at("categories").get<std::vector<std::string>>();
        if (!e.at("impute").is_null()) {
            c.impute = e.at("impute").get<std::size_t>();
        }
        p.categorical.push_back(std::move(c));
    }
    p.columns = j.at("columns").get<std::vector<std::string>>();
    p.warnings = j.at("warnings").get<std::vector<std::string>>();
    return p;
}

}  // namespace ttgan::preprocess
