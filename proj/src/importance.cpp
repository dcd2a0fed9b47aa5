#include "ckd/importance.hpp"

#include "ckd/error.hpp"
#include "ckd/random.hpp"
#include "ckd/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ckd {

namespace {

double evaluate(const MlpModel& m, const Matrix& x, std::span<const int> y, ImportanceScoring s) {
    if (s == ImportanceScoring::accuracy_drop) {
        return accuracy_of(predict(m, x), y);
    }
    return bce_loss(forward(m, x), y);
}

} // namespace

ImportanceReport permutation_importance(const MlpModel& m, const Dataset& d,
                                        const ImportanceOptions& opts) {
    d.validate();
    if (opts.repeats < 1) {
        throw ConfigError("importance needs at least one repeat");
    }
    if (m.input_dim() != d.features.cols()) {
        throw ShapeError("model takes " + std::to_string(m.input_dim()) + " inputs but data has " +
                         std::to_string(d.features.cols()) + " features");
    }
    const std::size_t n = d.rows();
    const std::size_t cols = d.features.cols();
    const double baseline = evaluate(m, d.features, d.labels, opts.scoring);

    Matrix work = d.features;
    std::vector<double> column(n);
    std::vector<double> drops(opts.repeats);
    std::vector<FeatureImportance> entries;
    entries.reserve(cols);
    for (std::size_t f = 0; f < cols; ++f) {
        for (std::size_t r = 0; r < opts.repeats; ++r) {
            for (std::size_t i = 0; i < n; ++i) column[i] = d.features(i, f);
            Rng rng = make_stream({opts.seed, f, r});
            shuffle(std::span(column), rng);
            for (std::size_t i = 0; i < n; ++i) work(i, f) = column[i];

            const double permuted = evaluate(m, work, d.labels, opts.scoring);
            drops[r] = opts.scoring == ImportanceScoring::accuracy_drop ? baseline - permuted
                                                                        : permuted - baseline;
        }
        for (std::size_t i = 0; i < n; ++i) work(i, f) = d.features(i, f);

        const double reps = static_cast<double>(opts.repeats);
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / reps;
        double sq = 0.0;
        for (double v : drops) sq += (v - mean) * (v - mean);
        entries.push_back({d.schema.feature_names[f], mean, std::sqrt(sq / reps)});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.score > b.score; });
    return ImportanceReport{std::move(entries)};
}

void write_importance_csv(const ImportanceReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << "rank,feature,score,stddev\n";
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        const auto& e = r.entries[i];
        out << i + 1 << ',' << e.feature << ',' << text::format_double(e.score) << ','
            << text::format_double(e.stddev) << '\n';
    }
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

ImportanceReport read_importance_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "rank,feature,score,stddev") {
        throw FormatError("importance CSV must start with 'rank,feature,score,stddev'");
    }
    ImportanceReport r;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        const auto cells = text::split(text::trim(line), ',');
        const auto rank = cells.size() == 4 ? text::parse_int(cells[0]) : std::nullopt;
        const auto score = cells.size() == 4 ? text::parse_double(cells[2]) : std::nullopt;
        const auto sd = cells.size() == 4 ? text::parse_double(cells[3]) : std::nullopt;
        if (!rank || !score || !sd ||
            *rank != static_cast<long long>(r.entries.size()) + 1) {
            throw FormatError("malformed importance row '" + line + "'");
        }
        r.entries.push_back({cells[1], *score, *sd});
    }
    return r;
}

} // namespace ckd
