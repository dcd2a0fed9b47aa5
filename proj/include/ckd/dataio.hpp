#pragma once

#include "ckd/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ckd {

inline constexpr std::size_t kFeatureCount = 10;

/// Column names of the clinical table. Feature order here is the column
/// order of every Dataset::features matrix.
struct DataSchema {
    std::vector<std::string> feature_names;
    std::string label_name;

    /// Age, Sex, Sodium, Potassium, Chloride, Bicarbonate, Urea, Creatinine,
    /// UreaAcid, Albumin; label "Class".
    static DataSchema ckd_default();

    /// Throws SchemaError unless there are exactly kFeatureCount distinct
    /// feature names and the label name is not among them.
    void validate() const;

    /// Index of a feature column, or npos.
    std::size_t index_of(const std::string& name) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Feature column holding the 1/0 sex encoding.
inline constexpr const char* kSexColumn = "Sex";

struct Dataset {
    DataSchema schema;
    Matrix features;           // n x kFeatureCount, NaN where missing
    std::vector<int> labels;   // 1 = CKD, 0 = non-CKD
    std::vector<bool> missing; // row-major n x kFeatureCount

    std::size_t rows() const noexcept { return labels.size(); }
    bool is_missing(std::size_t r, std::size_t c) const { return missing[r * features.cols() + c]; }
    std::size_t missing_count() const;

    /// Checks row counts agree and labels are binary.
    void validate() const;

    /// Rows at the given indices, in that order.
    Dataset subset(std::span<const std::size_t> indices) const;
};

Dataset load_csv(const std::filesystem::path& path, const DataSchema& schema);

/// Writes a Dataset in the format load_csv reads. Missing cells become empty
/// fields; numbers use the shortest round-trip representation. Sex is written
/// as 1/0 and labels as ckd/notckd.
void write_csv(const Dataset& d, const std::filesystem::path& path);

/// Replaces every missing cell with the mean of its column's observed values.
Dataset impute_mean(const Dataset& d);

/// Per-column affine transform fitted on a training set.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale; // std dev, or 1 where the column is constant

    static Standardizer fit(const Dataset& train);
    /// Identity transform (mean 0, scale 1).
    static Standardizer identity(std::size_t cols);

    Matrix apply(const Matrix& x) const;
    Dataset apply(const Dataset& d) const;
    Matrix inverse(const Matrix& z) const;
};

struct StandardizeResult {
    Dataset train;
    std::vector<Dataset> others;
    Standardizer stats;
};

/// Fits column statistics on `train` and applies them to `train` and every
/// dataset in `others`.
StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others = {});

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 7;
    bool stratified = true;
};

struct SplitResult {
    Dataset train;
    Dataset test;
};

SplitResult split(const Dataset& d, const SplitSpec& spec);

} // namespace ckd
