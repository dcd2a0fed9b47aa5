#include "ckd/synthgen.hpp"

#include "ckd/error.hpp"
#include "ckd/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ckd {

namespace {

// Default class-conditional profile, schema order. Units follow common lab
// reporting (mmol/L for electrolytes, mg/dL for creatinine, g/dL for albumin).
// Only the clinical direction is meaningful: CKD raises creatinine, urea and
// potassium and lowers bicarbonate. Creatinine and bicarbonate get class
// separations of 3.5 and 2.8 pooled sd; every other feature stays below 0.85.
struct ProfileRow {
    Gaussian non_ckd;
    Gaussian ckd;
};

constexpr std::array<ProfileRow, kFeatureCount> kDefaultProfile{{
    {{45.0, 15.0}, {52.0, 15.0}},   // Age (years)          sep 0.47
    {{0.5, 0.5}, {0.5, 0.5}},       // Sex (coin flip)      sep 0
    {{139.0, 4.0}, {137.0, 4.0}},   // Sodium               sep 0.50
    {{4.2, 0.6}, {4.6, 0.6}},       // Potassium            sep 0.67
    {{102.0, 4.0}, {101.0, 4.0}},   // Chloride             sep 0.25
    {{25.0, 2.5}, {18.0, 2.5}},     // Bicarbonate          sep 2.80
    {{30.0, 12.0}, {40.0, 12.0}},   // Urea                 sep 0.83
    {{1.0, 0.4}, {2.4, 0.4}},       // Creatinine           sep 3.50
    {{5.5, 1.5}, {6.0, 1.5}},       // UreaAcid             sep 0.33
    {{4.0, 0.5}, {3.9, 0.5}},       // Albumin              sep 0.20
}};

} // namespace

void GeneratorConfig::validate() const {
    if (n_rows < 2) {
        throw ConfigError("generator needs at least 2 rows");
    }
    if (!(ckd_fraction > 0.0 && ckd_fraction < 1.0)) {
        throw ConfigError("ckd fraction must lie in (0,1)");
    }
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
        throw ConfigError("missing rate must lie in [0,1)");
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        for (const auto& g : {non_ckd[f], ckd[f]}) {
            if (!(g.stddev > 0.0) || !std::isfinite(g.stddev) || !std::isfinite(g.mean)) {
                throw ConfigError("feature " + std::to_string(f) +
                                  " needs a finite mean and a positive standard deviation");
            }
        }
    }
}

double separation(const GeneratorConfig& cfg, std::size_t feature) {
    const auto& a = cfg.non_ckd[feature];
    const auto& b = cfg.ckd[feature];
    if (DataSchema::ckd_default().feature_names[feature] == kSexColumn) {
        return 0.0;
    }
    const double pooled = std::sqrt(0.5 * (a.stddev * a.stddev + b.stddev * b.stddev));
    return std::abs(b.mean - a.mean) / pooled;
}

GeneratorConfig default_ckd_profile() {
    GeneratorConfig cfg;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        cfg.non_ckd[f] = kDefaultProfile[f].non_ckd;
        cfg.ckd[f] = kDefaultProfile[f].ckd;
    }
    cfg.missing_rate = 0.05;
    return cfg;
}

Dataset generate(const GeneratorConfig& cfg) {
    cfg.validate();
    const auto schema = DataSchema::ckd_default();
    const std::size_t n = cfg.n_rows;
    const std::size_t sex_col = schema.index_of(kSexColumn);

    // Separate streams so changing the missing rate leaves values untouched.
    Rng label_rng = make_stream({cfg.seed, 0});
    Rng value_rng = make_stream({cfg.seed, 1});
    Rng mask_rng = make_stream({cfg.seed, 2});

    auto positives = static_cast<std::size_t>(std::llround(cfg.ckd_fraction * static_cast<double>(n)));
    positives = std::clamp<std::size_t>(positives, 1, n - 1);
    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), 1);
    shuffle(std::span(labels), label_rng);

    Matrix x(n, kFeatureCount);
    std::vector<bool> mask(n * kFeatureCount, false);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& dist = labels[r] == 1 ? cfg.ckd : cfg.non_ckd;
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            if (c == sex_col) {
                x(r, c) = uniform01(value_rng) < 0.5 ? 1.0 : 0.0;
            } else {
                x(r, c) = dist[c].mean + dist[c].stddev * standard_normal(value_rng);
            }
        }
    }
    if (cfg.missing_rate > 0.0) {
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (uniform01(mask_rng) < cfg.missing_rate) {
                mask[i] = true;
                x.data()[i] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    return Dataset{schema, std::move(x), std::move(labels), std::move(mask)};
}

} // namespace ckd
