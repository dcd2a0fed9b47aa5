#include "ckd/metrics.hpp"

#include "ckd/error.hpp"
#include "ckd/text.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ckd {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return static_cast<double>(num) / static_cast<double>(den);
}

void check_binary(std::span<const int> v, const char* what) {
    for (int x : v) {
        if (x != 0 && x != 1) {
            throw InputError(std::string(what) + " must contain only 0 and 1");
        }
    }
}

} // namespace

ConfusionCounts confusion(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw ShapeError("confusion needs equal non-zero lengths, got " +
                         std::to_string(pred.size()) + " predictions and " +
                         std::to_string(truth.size()) + " labels");
    }
    check_binary(pred, "predictions");
    check_binary(truth, "labels");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 1) {
            ++(pred[i] == 1 ? c.tp : c.fn);
        } else {
            ++(pred[i] == 1 ? c.fp : c.tn);
        }
    }
    return c;
}

double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw InputError("accuracy of an empty confusion matrix");
    }
    return ratio(c.tp + c.tn, c.total());
}

Metric sensitivity(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) return std::nullopt;
    return ratio(c.tp, c.tp + c.fn);
}

Metric specificity(const ConfusionCounts& c) {
    if (c.tn + c.fp == 0) return std::nullopt;
    return ratio(c.tn, c.tn + c.fp);
}

Metric precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) return std::nullopt;
    return ratio(c.tp, c.tp + c.fp);
}

Metric f1_from(Metric p, Metric r) {
    if (!p || !r || (*p == 0.0 && *r == 0.0)) return std::nullopt;
    return 2.0 * *p * *r / (*p + *r);
}

Metric f1(const ConfusionCounts& c) {
    return f1_from(precision(c), recall(c));
}

Metric cohen_kappa(const ConfusionCounts& c) {
    const double n = static_cast<double>(c.total());
    if (c.total() == 0) return std::nullopt;
    const double po = accuracy(c);
    const double pe = (static_cast<double>(c.tn + c.fp) * static_cast<double>(c.tn + c.fn) +
                       static_cast<double>(c.fn + c.tp) * static_cast<double>(c.fp + c.tp)) /
                      (n * n);
    if (pe >= 1.0) return std::nullopt;
    return (po - pe) / (1.0 - pe);
}

Metric roc_auc(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size()) {
        throw ShapeError("roc_auc got " + std::to_string(scores.size()) + " scores and " +
                         std::to_string(truth.size()) + " labels");
    }
    check_binary(truth, "labels");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Walk groups of equal score; each positive beats every negative below its
    // group and ties with the negatives inside it. Counted in half-units.
    std::uint64_t negatives_below = 0;
    std::uint64_t half_wins = 0;
    std::uint64_t pos_total = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::uint64_t pos = 0;
        std::uint64_t neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            ++(truth[order[j]] == 1 ? pos : neg);
            ++j;
        }
        half_wins += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        pos_total += pos;
        i = j;
    }
    if (pos_total == 0 || negatives_below == 0) return std::nullopt;
    return static_cast<double>(half_wins) /
           (2.0 * static_cast<double>(pos_total) * static_cast<double>(negatives_below));
}

std::vector<std::pair<std::string, Metric>> MetricReport::entries() const {
    return {{"accuracy", accuracy},   {"sensitivity", sensitivity}, {"specificity", specificity},
            {"precision", precision}, {"recall", recall},           {"f1", f1},
            {"kappa", kappa},         {"roc_auc", roc_auc}};
}

MetricReport full_report(std::span<const double> scores, double threshold,
                         std::span<const int> truth) {
    if (scores.size() != truth.size() || scores.empty()) {
        throw ShapeError("report needs equal non-zero numbers of scores and labels");
    }
    std::vector<int> pred(scores.size());
    std::transform(scores.begin(), scores.end(), pred.begin(),
                   [threshold](double s) { return s >= threshold ? 1 : 0; });
    MetricReport r;
    r.counts = confusion(pred, truth);
    r.accuracy = ckd::accuracy(r.counts);
    r.sensitivity = ckd::sensitivity(r.counts);
    r.specificity = ckd::specificity(r.counts);
    r.precision = ckd::precision(r.counts);
    r.recall = ckd::recall(r.counts);
    r.f1 = ckd::f1(r.counts);
    r.kappa = ckd::cohen_kappa(r.counts);
    r.roc_auc = ckd::roc_auc(scores, truth);
    return r;
}

void write_report(std::ostream& out, const MetricReport& r) {
    for (const auto& [name, value] : r.entries()) {
        out << name << '\t' << (value ? text::format_double(*value) : "undefined") << '\n';
    }
}

MetricReport read_report(std::istream& in) {
    MetricReport r;
    std::vector<std::pair<std::string, Metric*>> slots = {
        {"accuracy", &r.accuracy}, {"sensitivity", &r.sensitivity},
        {"specificity", &r.specificity}, {"precision", &r.precision},
        {"recall", &r.recall},     {"f1", &r.f1},
        {"kappa", &r.kappa},       {"roc_auc", &r.roc_auc}};
    std::size_t next = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError("report line '" + line + "' lacks a tab separator");
        }
        const std::string name = line.substr(0, tab);
        const std::string value = line.substr(tab + 1);
        if (next >= slots.size() || slots[next].first != name) {
            throw FormatError("unexpected report entry '" + name + "'");
        }
        if (value != "undefined") {
            const auto v = text::parse_double(value);
            if (!v) {
                throw FormatError("report entry '" + name + "' has bad value '" + value + "'");
            }
            *slots[next].second = *v;
        }
        ++next;
    }
    if (next != slots.size()) {
        throw FormatError("report ended after " + std::to_string(next) + " of " +
                          std::to_string(slots.size()) + " metrics");
    }
    return r;
}

std::string summary_line(const MetricReport& r) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [name, value] : r.entries()) {
        out << (first ? "" : " ") << name << '=' << (value ? text::format_double(*value) : "undefined");
        first = false;
    }
    return out.str();
}

} // namespace ckd
