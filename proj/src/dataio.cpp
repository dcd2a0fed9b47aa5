#include "ckd/dataio.hpp"

#include "ckd/error.hpp"
#include "ckd/random.hpp"
#include "ckd/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

namespace ckd {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(std::string_view cell) {
    cell = text::trim(cell);
    return cell.empty() || cell == "?";
}

int parse_label(std::string_view cell, std::size_t line) {
    const auto v = text::to_lower(text::trim(cell));
    if (v == "ckd" || v == "1") return 1;
    if (v == "notckd" || v == "0") return 0;
    throw ParseError("line " + std::to_string(line) + ": unrecognised class label '" +
                     std::string(cell) + "' (expected ckd/notckd/1/0)");
}

double parse_sex(std::string_view cell, std::size_t line) {
    const auto v = text::to_lower(text::trim(cell));
    if (v == "1" || v == "m" || v == "male") return 1.0;
    if (v == "0" || v == "f" || v == "female") return 0.0;
    throw ParseError("line " + std::to_string(line) + ", column Sex: unrecognised value '" +
                     std::string(cell) + "'");
}

} // namespace

DataSchema DataSchema::ckd_default() {
    return DataSchema{{"Age", "Sex", "Sodium", "Potassium", "Chloride", "Bicarbonate", "Urea",
                       "Creatinine", "UreaAcid", "Albumin"},
                      "Class"};
}

void DataSchema::validate() const {
    if (feature_names.size() != kFeatureCount) {
        throw SchemaError("schema needs exactly " + std::to_string(kFeatureCount) +
                          " features, got " + std::to_string(feature_names.size()));
    }
    std::set<std::string> seen;
    for (const auto& name : feature_names) {
        if (!seen.insert(name).second) {
            throw SchemaError("duplicate feature name '" + name + "'");
        }
    }
    if (seen.count(label_name)) {
        throw SchemaError("label name '" + label_name + "' collides with a feature");
    }
}

std::size_t DataSchema::index_of(const std::string& name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    return it == feature_names.end() ? npos : static_cast<std::size_t>(it - feature_names.begin());
}

std::size_t Dataset::missing_count() const {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true));
}

void Dataset::validate() const {
    if (features.rows() != labels.size() || missing.size() != features.size()) {
        throw ShapeError("dataset has " + features.shape_string() + " features, " +
                         std::to_string(labels.size()) + " labels and " +
                         std::to_string(missing.size()) + " mask cells");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw InputError("labels must be 0 or 1");
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    if (indices.empty()) {
        throw ShapeError("cannot take an empty subset of a dataset");
    }
    const std::size_t cols = features.cols();
    Matrix x(indices.size(), cols);
    std::vector<int> y;
    std::vector<bool> mask;
    y.reserve(indices.size());
    mask.reserve(indices.size() * cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t r = indices[i];
        std::copy(features.row(r).begin(), features.row(r).end(), x.row(i).begin());
        y.push_back(labels[r]);
        for (std::size_t c = 0; c < cols; ++c) {
            mask.push_back(is_missing(r, c));
        }
    }
    return Dataset{schema, std::move(x), std::move(y), std::move(mask)};
}

Dataset load_csv(const std::filesystem::path& path, const DataSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }

    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("'" + path.string() + "' is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = text::split(line, ',');
    // header position -> feature index, or kFeatureCount for the label
    std::vector<std::size_t> target(header.size());
    std::vector<bool> seen(kFeatureCount + 1, false);
    for (std::size_t h = 0; h < header.size(); ++h) {
        const std::string name(text::trim(header[h]));
        std::size_t idx = schema.index_of(name);
        if (idx == DataSchema::npos) {
            if (name != schema.label_name) {
                throw SchemaError("unknown column '" + name + "' in header");
            }
            idx = kFeatureCount;
        }
        if (seen[idx]) {
            throw SchemaError("column '" + name + "' appears twice in header");
        }
        seen[idx] = true;
        target[h] = idx;
    }
    for (std::size_t c = 0; c <= kFeatureCount; ++c) {
        if (!seen[c]) {
            const auto& name = c < kFeatureCount ? schema.feature_names[c] : schema.label_name;
            throw SchemaError("header is missing column '" + name + "'");
        }
    }

    const std::size_t sex_col = schema.index_of(kSexColumn);
    std::vector<double> values;
    std::vector<int> labels;
    std::vector<bool> mask;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;

        const auto cells = text::split(line, ',');
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(cells.size()));
        }
        std::vector<double> row(kFeatureCount, kMissing);
        std::vector<bool> row_mask(kFeatureCount, false);
        int label = -1;
        for (std::size_t h = 0; h < cells.size(); ++h) {
            const std::size_t c = target[h];
            const auto& cell = cells[h];
            if (c == kFeatureCount) {
                label = parse_label(cell, line_no);
            } else if (is_missing_token(cell)) {
                row_mask[c] = true;
            } else if (c == sex_col) {
                row[c] = parse_sex(cell, line_no);
            } else {
                const auto v = text::parse_double(cell);
                if (!v || !std::isfinite(*v)) {
                    throw ParseError("line " + std::to_string(line_no) + ", column " +
                                     schema.feature_names[c] + ": cannot parse '" + cell +
                                     "' as a number");
                }
                row[c] = *v;
            }
        }
        values.insert(values.end(), row.begin(), row.end());
        mask.insert(mask.end(), row_mask.begin(), row_mask.end());
        labels.push_back(label);
    }
    if (labels.empty()) {
        throw ParseError("'" + path.string() + "' has a header but no data rows");
    }

    const std::size_t n = labels.size();
    return Dataset{schema, Matrix(n, kFeatureCount, std::move(values)), std::move(labels),
                   std::move(mask)};
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    const std::size_t sex_col = d.schema.index_of(kSexColumn);
    for (const auto& name : d.schema.feature_names) {
        out << name << ',';
    }
    out << d.schema.label_name << '\n';
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t c = 0; c < d.features.cols(); ++c) {
            if (!d.is_missing(r, c)) {
                const double v = d.features(r, c);
                out << (c == sex_col ? (v >= 0.5 ? "1" : "0") : text::format_double(v));
            }
            out << ',';
        }
        out << (d.labels[r] == 1 ? "ckd" : "notckd") << '\n';
    }
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

Dataset impute_mean(const Dataset& d) {
    Dataset out = d;
    const std::size_t n = d.rows();
    for (std::size_t c = 0; c < d.features.cols(); ++c) {
        double sum = 0.0;
        std::size_t observed = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (!d.is_missing(r, c)) {
                sum += d.features(r, c);
                ++observed;
            }
        }
        if (observed == 0) {
            throw ImputationError("column '" + d.schema.feature_names[c] +
                                  "' has no observed values to impute from");
        }
        if (observed == n) continue;
        const double mean = sum / static_cast<double>(observed);
        for (std::size_t r = 0; r < n; ++r) {
            if (d.is_missing(r, c)) {
                out.features(r, c) = mean;
            }
        }
    }
    std::fill(out.missing.begin(), out.missing.end(), false);
    return out;
}

Standardizer Standardizer::fit(const Dataset& train) {
    const std::size_t n = train.rows();
    const std::size_t cols = train.features.cols();
    Standardizer s{std::vector<double>(cols, 0.0), std::vector<double>(cols, 1.0)};
    for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += train.features(r, c);
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dev = train.features(r, c) - mean;
            sq += dev * dev;
        }
        const double sd = std::sqrt(sq / static_cast<double>(n));
        s.mean[c] = mean;
        s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(std::size_t cols) {
    return Standardizer{std::vector<double>(cols, 0.0), std::vector<double>(cols, 1.0)};
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) {
        throw ShapeError("standardizer fitted on " + std::to_string(mean.size()) +
                         " columns applied to " + x.shape_string());
    }
    Matrix z = x;
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = (row[c] - mean[c]) / scale[c];
        }
    }
    return z;
}

Dataset Standardizer::apply(const Dataset& d) const {
    Dataset out = d;
    out.features = apply(d.features);
    return out;
}

Matrix Standardizer::inverse(const Matrix& z) const {
    if (z.cols() != mean.size()) {
        throw ShapeError("standardizer fitted on " + std::to_string(mean.size()) +
                         " columns applied to " + z.shape_string());
    }
    Matrix x = z;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = row[c] * scale[c] + mean[c];
        }
    }
    return x;
}

StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others) {
    auto stats = Standardizer::fit(train);
    StandardizeResult result{stats.apply(train), {}, stats};
    result.others.reserve(others.size());
    for (const auto& d : others) {
        result.others.push_back(stats.apply(d));
    }
    return result;
}

SplitResult split(const Dataset& d, const SplitSpec& spec) {
    const std::size_t n = d.rows();
    if (n < 2) {
        throw SplitError("need at least 2 rows to split, got " + std::to_string(n));
    }
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw SplitError("train fraction must lie in (0,1)");
    }
    const auto train_n =
        static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    if (train_n == 0 || train_n >= n) {
        throw SplitError("train fraction " + text::format_double(spec.train_fraction) + " of " +
                         std::to_string(n) + " rows leaves one side empty");
    }

    Rng rng = make_stream({spec.seed});
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;

    if (!spec.stratified) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        shuffle(std::span(order), rng);
        train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
        test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(train_n), order.end());
    } else {
        std::vector<std::size_t> by_class[2];
        for (std::size_t r = 0; r < n; ++r) {
            by_class[d.labels[r]].push_back(r);
        }
        if (by_class[0].empty() || by_class[1].empty()) {
            throw SplitError("stratified split needs rows of both classes");
        }
        // Largest-remainder apportionment of train_n between the classes.
        double ideal[2];
        std::size_t quota[2];
        for (int c = 0; c < 2; ++c) {
            ideal[c] = static_cast<double>(train_n) * static_cast<double>(by_class[c].size()) /
                       static_cast<double>(n);
            quota[c] = static_cast<std::size_t>(std::floor(ideal[c]));
        }
        if (quota[0] + quota[1] < train_n) {
            const int bump = (ideal[1] - static_cast<double>(quota[1]) >
                              ideal[0] - static_cast<double>(quota[0]))
                                 ? 1
                                 : 0;
            ++quota[bump];
        }
        for (int c = 0; c < 2; ++c) {
            auto& idx = by_class[c];
            shuffle(std::span(idx), rng);
            const auto k = static_cast<std::ptrdiff_t>(quota[c]);
            train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + k);
            test_idx.insert(test_idx.end(), idx.begin() + k, idx.end());
        }
    }

    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return SplitResult{d.subset(train_idx), d.subset(test_idx)};
}

} // namespace ckd
