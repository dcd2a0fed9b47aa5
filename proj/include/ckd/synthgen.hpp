#pragma once

#include "ckd/dataio.hpp"

#include <array>
#include <cstdint>

namespace ckd {

struct Gaussian {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Class-conditional Gaussian generator for data in the clinical schema.
/// The Sex column ignores its Gaussian entries and is drawn as a fair coin.
struct GeneratorConfig {
    std::size_t n_rows = 400;
    double ckd_fraction = 0.5;
    std::uint64_t seed = 7;
    std::array<Gaussian, kFeatureCount> non_ckd{};
    std::array<Gaussian, kFeatureCount> ckd{};
    double missing_rate = 0.0;

    void validate() const;
};

/// Standardized class-mean separation |mu_ckd - mu_non| / pooled sd for one feature.
double separation(const GeneratorConfig& cfg, std::size_t feature);

GeneratorConfig default_ckd_profile();

Dataset generate(const GeneratorConfig& cfg);

} // namespace ckd
