#include "ckd/cli.hpp"

#include "ckd/error.hpp"
#include "ckd/importance.hpp"
#include "ckd/metrics.hpp"
#include "ckd/synthgen.hpp"
#include "ckd/text.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ckd::cli {

namespace {

constexpr std::string_view kStatsMagic = "ckdmlp-stats v1";
constexpr std::string_view kCurvesHeader = "epoch,train_loss,train_acc,val_loss,val_acc";

struct GenOptions {
    std::size_t n = 400;
    double ckd_fraction = 0.5;
    std::uint64_t seed = 7;
    double missing_rate = 0.05;
    std::string out;
};

struct TrainOptions {
    std::string data;
    std::string model;
    std::string curves;
    std::string test_out;
    std::size_t epochs = 100;
    double lr = 0.01;
    std::size_t batch_size = 32;
    std::string hidden = "32,16";
    std::uint64_t seed = 7;
    double train_fraction = 0.7;
    bool stratified = true;
    bool standardize = true;
    double threshold = 0.5;
};

struct EvalOptions {
    std::string model;
    std::string data;
    std::string stats;
    std::string scores;
    std::string out;
    double threshold = 0.5;
};

struct ImportanceCliOptions {
    std::string model;
    std::string data;
    std::string stats;
    std::string out;
    std::size_t repeats = 10;
    std::uint64_t seed = 7;
    std::string scoring = "accuracy";
};

std::vector<std::string> read_lines(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(std::string("cannot open ") + what + " '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::pair<std::size_t, std::size_t> parse_hidden(const std::string& s) {
    const auto parts = text::split(s, ',');
    if (parts.size() == 2) {
        const auto a = text::parse_int(parts[0]);
        const auto b = text::parse_int(parts[1]);
        if (a && b && *a >= 1 && *b >= 1) {
            return {static_cast<std::size_t>(*a), static_cast<std::size_t>(*b)};
        }
    }
    throw ConfigError("--hidden expects two positive sizes like '32,16', got '" + s + "'");
}

std::string format_optional(const std::optional<double>& v) {
    return v ? text::format_double(*v) : std::string();
}

Dataset load_prepared(const std::string& data, const Standardizer& stats) {
    const Dataset raw = load_csv(data, DataSchema::ckd_default());
    return stats.apply(raw.missing_count() ? impute_mean(raw) : raw);
}

Standardizer stats_for(const std::string& model, const std::string& explicit_stats) {
    const std::filesystem::path p = explicit_stats.empty() ? stats_path_for(model)
                                                           : std::filesystem::path(explicit_stats);
    if (!std::filesystem::exists(p)) {
        throw IoError("standardization stats '" + p.string() +
                      "' not found; evaluate a model written by `train` (which writes the "
                      "sidecar) or pass --stats <file>");
    }
    return read_stats(p);
}

void write_confusion_table(std::ostream& out, const ConfusionCounts& c) {
    out << "confusion\tpredicted_negative\tpredicted_positive\n"
        << "actual_negative\t" << c.tn << '\t' << c.fp << '\n'
        << "actual_positive\t" << c.fn << '\t' << c.tp << '\n';
}

struct ScoreFile {
    std::vector<double> scores;
    std::vector<int> labels;
};

// `score,label` CSV; labels accept 1/0/ckd/notckd.
ScoreFile read_scores(const std::filesystem::path& path) {
    const auto lines = read_lines(path, "score file");
    if (lines.empty() || text::trim(lines[0]) != "score,label") {
        throw ParseError("score file must start with header 'score,label'");
    }
    ScoreFile f;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto cells = text::split(lines[i], ',');
        const auto score = cells.size() == 2 ? text::parse_double(cells[0]) : std::nullopt;
        const auto label = cells.size() == 2 ? text::to_lower(text::trim(cells[1])) : "";
        if (!score || !(label == "1" || label == "0" || label == "ckd" || label == "notckd")) {
            throw ParseError("score file line " + std::to_string(i + 1) + ": malformed row '" +
                             lines[i] + "'");
        }
        f.scores.push_back(*score);
        f.labels.push_back(label == "1" || label == "ckd" ? 1 : 0);
    }
    if (f.scores.empty()) {
        throw ParseError("score file has no rows");
    }
    return f;
}

std::vector<double> column_scores(const Matrix& p) {
    std::vector<double> s(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) s[i] = p(i, 0);
    return s;
}

int cmd_gen(const GenOptions& o, std::ostream& out) {
    GeneratorConfig cfg = default_ckd_profile();
    cfg.n_rows = o.n;
    cfg.ckd_fraction = o.ckd_fraction;
    cfg.seed = o.seed;
    cfg.missing_rate = o.missing_rate;
    cfg.validate();
    const Dataset d = generate(cfg);
    write_csv(d, o.out);
    const auto ckd_rows = static_cast<std::size_t>(std::count(d.labels.begin(), d.labels.end(), 1));
    out << "wrote " << d.rows() << " rows (ckd=" << ckd_rows << ", notckd=" << d.rows() - ckd_rows
        << ", missing cells=" << d.missing_count() << ") to " << o.out << '\n';
    return kExitOk;
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch_size;
    cfg.seed = o.seed;
    cfg.hidden_dims = parse_hidden(o.hidden);
    cfg.validate();
    if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
        throw ConfigError("--threshold must lie in (0,1)");
    }

    const Dataset raw = load_csv(o.data, DataSchema::ckd_default());
    const Dataset imputed = impute_mean(raw);
    auto parts = split(imputed, SplitSpec{o.train_fraction, o.seed, o.stratified});
    if (!o.test_out.empty()) {
        write_csv(parts.test, o.test_out);
    }

    const Standardizer stats = o.standardize ? Standardizer::fit(parts.train)
                                             : Standardizer::identity(kFeatureCount);
    const Dataset train_set = stats.apply(parts.train);
    const Dataset test_set = stats.apply(parts.test);
    cfg.validation = test_set;

    const auto result = train(train_set, cfg);
    save_model(result.model, o.model);
    write_stats(stats, stats_path_for(o.model));
    const std::filesystem::path curves =
        o.curves.empty() ? std::filesystem::path(o.model).parent_path() / "curves.csv"
                         : std::filesystem::path(o.curves);
    write_curves(result.log, curves);

    const auto scores = column_scores(forward(result.model, test_set.features));
    const auto report = full_report(scores, o.threshold, test_set.labels);
    const auto& last = result.log.epochs.back();
    out << "trained " << cfg.epochs << " epochs on " << train_set.rows() << " rows; final train_loss="
        << text::format_double(last.train_loss) << " train_acc="
        << text::format_double(last.train_accuracy) << '\n';
    out << "metrics: " << summary_line(report) << '\n';
    return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
    if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
        throw ConfigError("--threshold must lie in (0,1)");
    }
    MetricReport report;
    if (!o.scores.empty()) {
        const auto f = read_scores(o.scores);
        report = full_report(f.scores, o.threshold, f.labels);
    } else {
        if (o.model.empty() || o.data.empty()) {
            throw ConfigError("eval needs either --scores or both --model and --data");
        }
        const MlpModel model = load_model(o.model);
        const Dataset d = load_prepared(o.data, stats_for(o.model, o.stats));
        report = full_report(column_scores(forward(model, d.features)), o.threshold, d.labels);
    }

    std::ofstream file(o.out, std::ios::binary);
    if (!file) {
        throw IoError("cannot write report '" + o.out + "'");
    }
    write_report(file, report);
    file << '\n';
    write_confusion_table(file, report.counts);
    if (!file) {
        throw IoError("failed writing report '" + o.out + "'");
    }
    out << "metrics: " << summary_line(report) << '\n';
    return kExitOk;
}

int cmd_importance(const ImportanceCliOptions& o, std::ostream& out) {
    ImportanceOptions opts;
    opts.repeats = o.repeats;
    opts.seed = o.seed;
    if (o.scoring == "accuracy") {
        opts.scoring = ImportanceScoring::accuracy_drop;
    } else if (o.scoring == "loss") {
        opts.scoring = ImportanceScoring::loss_increase;
    } else {
        throw ConfigError("--scoring must be 'accuracy' or 'loss'");
    }
    if (opts.repeats < 1) {
        throw ConfigError("--repeats must be at least 1");
    }
    const MlpModel model = load_model(o.model);
    const Dataset d = load_prepared(o.data, stats_for(o.model, o.stats));
    const auto report = permutation_importance(model, d, opts);
    write_importance_csv(report, o.out);
    for (std::size_t i = 0; i < report.entries.size() && i < 3; ++i) {
        out << i + 1 << ". " << report.entries[i].feature << " "
            << text::format_double(report.entries[i].score) << '\n';
    }
    return kExitOk;
}

// Splices `--key=value` pairs from a --config file in front of the explicit
// flags; with take-last semantics the explicit flags then win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    if (args.empty()) return args;
    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::vector<std::string> from_file;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        std::string path;
        if (rest[i] == "--config" && i + 1 < rest.size()) {
            path = rest[i + 1];
        } else if (rest[i].rfind("--config=", 0) == 0) {
            path = rest[i].substr(9);
        }
        if (!path.empty()) {
            auto extra = read_config_args(path);
            from_file.insert(from_file.end(), extra.begin(), extra.end());
        }
    }
    std::vector<std::string> out{args[0]};
    out.insert(out.end(), from_file.begin(), from_file.end());
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

} // namespace

std::filesystem::path stats_path_for(const std::filesystem::path& model) {
    return std::filesystem::path(model.string() + ".stats");
}

void write_stats(const Standardizer& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write stats '" + path.string() + "'");
    }
    const auto line = [&out](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            out << (i ? " " : "") << text::format_double(v[i]);
        }
        out << '\n';
    };
    out << kStatsMagic << '\n' << s.mean.size() << '\n';
    line(s.mean);
    line(s.scale);
}

Standardizer read_stats(const std::filesystem::path& path) {
    auto lines = read_lines(path, "stats file");
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.size() != 4 || lines[0] != kStatsMagic) {
        throw FormatError("stats file '" + path.string() + "' must be '" +
                          std::string(kStatsMagic) + "' followed by count, means, scales");
    }
    const auto count = text::parse_int(lines[1]);
    if (!count || *count < 1) {
        throw FormatError("stats column count must be a positive integer");
    }
    const auto values = [&](const std::string& l, const char* field) {
        std::vector<double> v;
        for (const auto& tok : text::split(l, ' ')) {
            const auto x = text::parse_double(tok);
            if (!x) throw FormatError(std::string("stats ") + field + ": cannot parse '" + tok + "'");
            v.push_back(*x);
        }
        if (v.size() != static_cast<std::size_t>(*count)) {
            throw FormatError(std::string("stats ") + field + ": declared " +
                              std::to_string(*count) + " values, found " + std::to_string(v.size()));
        }
        return v;
    };
    Standardizer s{values(lines[2], "means"), values(lines[3], "scales")};
    for (double sc : s.scale) {
        if (!(sc > 0.0)) throw FormatError("stats scales must be positive");
    }
    return s;
}

void write_curves(const TrainingLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write curves '" + path.string() + "'");
    }
    out << kCurvesHeader << '\n';
    for (const auto& e : log.epochs) {
        out << e.epoch << ',' << text::format_double(e.train_loss) << ','
            << text::format_double(e.train_accuracy) << ',' << format_optional(e.val_loss) << ','
            << format_optional(e.val_accuracy) << '\n';
    }
}

TrainingLog read_curves(const std::filesystem::path& path) {
    const auto lines = read_lines(path, "curves file");
    if (lines.empty() || lines[0] != kCurvesHeader) {
        throw FormatError("curves file must start with '" + std::string(kCurvesHeader) + "'");
    }
    TrainingLog log;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = text::split(lines[i], ',');
        const auto bad = [&] {
            return FormatError("curves line " + std::to_string(i + 1) + " is malformed");
        };
        if (cells.size() != 5) throw bad();
        const auto epoch = text::parse_int(cells[0]);
        const auto tl = text::parse_double(cells[1]);
        const auto ta = text::parse_double(cells[2]);
        if (!epoch || !tl || !ta) throw bad();
        EpochRecord rec{static_cast<std::size_t>(*epoch), *tl, *ta, std::nullopt, std::nullopt};
        if (!cells[3].empty()) {
            rec.val_loss = text::parse_double(cells[3]);
            if (!rec.val_loss) throw bad();
        }
        if (!cells[4].empty()) {
            rec.val_accuracy = text::parse_double(cells[4]);
            if (!rec.val_accuracy) throw bad();
        }
        log.epochs.push_back(rec);
    }
    return log;
}

std::vector<std::string> read_config_args(const std::filesystem::path& path) {
    std::vector<std::string> args;
    const auto lines = read_lines(path, "config file");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(i + 1) + " is not key=value");
        }
        args.push_back("--" + std::string(text::trim(line.substr(0, eq))) + "=" +
                       std::string(text::trim(line.substr(eq + 1))));
    }
    return args;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ckdnet: CKD prediction pipeline (generate, train, evaluate, rank features)",
                 "ckdnet"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    std::string config_path;
    const auto add_config = [&config_path](CLI::App* sub) {
        sub->add_option("--config", config_path, "Flat key=value file; explicit flags win");
    };

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic CKD-like dataset as CSV");
    gen_cmd->add_option("--n", gen.n, "Number of rows")->check(CLI::Range(2, 100000000));
    gen_cmd->add_option("--ckd-fraction", gen.ckd_fraction, "Share of CKD rows, in (0,1)")
        ->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--missing-rate", gen.missing_rate, "Share of feature cells left empty")
        ->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
    add_config(gen_cmd);

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Impute, split, standardize and train");
    train_cmd->add_option("--data", tr.data, "Input CSV")->required();
    train_cmd->add_option("--model", tr.model, "Output model file")->required();
    train_cmd->add_option("--curves", tr.curves, "Per-epoch curves CSV (default: curves.csv next to the model)");
    train_cmd->add_option("--test-out", tr.test_out, "Write the held-out split (imputed, raw units) here");
    train_cmd->add_option("--epochs", tr.epochs, "Training epochs");
    train_cmd->add_option("--lr", tr.lr, "SGD learning rate");
    train_cmd->add_option("--batch-size", tr.batch_size, "Minibatch size");
    train_cmd->add_option("--hidden", tr.hidden, "Hidden layer sizes as 'h1,h2'");
    train_cmd->add_option("--seed", tr.seed, "Seed for split, init and shuffling");
    train_cmd->add_option("--train-fraction", tr.train_fraction, "Training share of rows");
    train_cmd->add_option("--stratified", tr.stratified, "Preserve class ratios in the split");
    train_cmd->add_option("--standardize", tr.standardize, "Scale features with train statistics");
    train_cmd->add_option("--threshold", tr.threshold, "Decision threshold for the final metrics");
    add_config(train_cmd);

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "Write the metric report for a model or score file");
    eval_cmd->add_option("--model", ev.model, "Model file from train");
    eval_cmd->add_option("--data", ev.data, "CSV to evaluate on");
    eval_cmd->add_option("--stats", ev.stats, "Standardization stats (default: <model>.stats)");
    eval_cmd->add_option("--scores", ev.scores, "CSV of 'score,label' rows instead of model+data");
    eval_cmd->add_option("--threshold", ev.threshold, "Decision threshold");
    eval_cmd->add_option("--out", ev.out, "Report file")->required();
    add_config(eval_cmd);

    ImportanceCliOptions im;
    auto* imp_cmd = app.add_subcommand("importance", "Permutation feature importance");
    imp_cmd->add_option("--model", im.model, "Model file from train")->required();
    imp_cmd->add_option("--data", im.data, "CSV to permute")->required();
    imp_cmd->add_option("--stats", im.stats, "Standardization stats (default: <model>.stats)");
    imp_cmd->add_option("--repeats", im.repeats, "Shuffles per feature");
    imp_cmd->add_option("--seed", im.seed, "Random seed");
    imp_cmd->add_option("--scoring", im.scoring, "accuracy (drop) or loss (increase)");
    imp_cmd->add_option("--out", im.out, "Output CSV")->required();
    add_config(imp_cmd);

    try {
        auto args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\nRun with --help for more information.\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen(gen, out);
        if (train_cmd->parsed()) return cmd_train(tr, out);
        if (eval_cmd->parsed()) return cmd_eval(ev, out);
        if (imp_cmd->parsed()) return cmd_importance(im, out);
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace ckd::cli
