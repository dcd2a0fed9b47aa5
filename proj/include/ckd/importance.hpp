#pragma once

#include "ckd/dataio.hpp"
#include "ckd/neuralnet.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ckd {

enum class ImportanceScoring {
    accuracy_drop, // baseline accuracy - permuted accuracy
    loss_increase, // permuted BCE - baseline BCE
};

struct ImportanceOptions {
    std::size_t repeats = 10;
    std::uint64_t seed = 7;
    ImportanceScoring scoring = ImportanceScoring::accuracy_drop;
};

struct FeatureImportance {
    std::string feature;
    double score;  // mean over repeats
    double stddev; // population std dev over repeats
};

/// Entries sorted by descending score; ties keep schema order.
struct ImportanceReport {
    std::vector<FeatureImportance> entries;
};

/// Permutation importance. Feature f, repeat r shuffles with the stream keyed
/// by (seed, f, r), so results do not depend on evaluation order.
ImportanceReport permutation_importance(const MlpModel& m, const Dataset& d,
                                        const ImportanceOptions& opts = {});

/// CSV with header `rank,feature,score,stddev`, rank starting at 1.
void write_importance_csv(const ImportanceReport& r, const std::filesystem::path& path);
ImportanceReport read_importance_csv(const std::filesystem::path& path);

} // namespace ckd
