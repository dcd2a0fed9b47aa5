#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ckd {

// Binary evaluation with CKD (label 1) as the positive class. Metrics whose
// denominator vanishes come back as std::nullopt ("undefined") instead of 0.

struct ConfusionCounts {
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tp = 0;

    std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

using Metric = std::optional<double>;

ConfusionCounts confusion(std::span<const int> pred, std::span<const int> truth);

double accuracy(const ConfusionCounts& c);
Metric sensitivity(const ConfusionCounts& c);
inline Metric recall(const ConfusionCounts& c) { return sensitivity(c); }
Metric specificity(const ConfusionCounts& c);
Metric precision(const ConfusionCounts& c);
Metric f1(const ConfusionCounts& c);
/// Harmonic mean; undefined when either input is or both are zero.
Metric f1_from(Metric precision, Metric recall);
Metric cohen_kappa(const ConfusionCounts& c);

/// Mann-Whitney AUC: share of (positive, negative) pairs where the positive
/// scores higher, ties counting one half. Sort-based, O(n log n).
Metric roc_auc(std::span<const double> scores, std::span<const int> truth);

struct MetricReport {
    ConfusionCounts counts;
    Metric accuracy;
    Metric sensitivity;
    Metric specificity;
    Metric precision;
    Metric recall;
    Metric f1;
    Metric kappa;
    Metric roc_auc;

    /// (name, value) in serialization order.
    std::vector<std::pair<std::string, Metric>> entries() const;
};

/// Thresholds scores (score >= threshold is positive) and fills every metric.
MetricReport full_report(std::span<const double> scores, double threshold,
                         std::span<const int> truth);

/// One `name<TAB>value` line per metric, `undefined` where flagged.
void write_report(std::ostream& out, const MetricReport& r);

/// Reads the lines written by write_report, stopping at the first blank line.
/// Confusion counts are not part of the metric lines and stay zero.
MetricReport read_report(std::istream& in);

/// Compact single-line form, e.g. for console summaries.
std::string summary_line(const MetricReport& r);

} // namespace ckd
