#include "ckd/neuralnet.hpp"

#include "ckd/error.hpp"
#include "ckd/random.hpp"
#include "ckd/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace ckd {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr std::string_view kModelMagic = "ckdmlp-model";
constexpr std::string_view kModelVersion = "v1";

double sigmoid(double z) {
    double p;
    if (z >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    // Keep outputs strictly inside (0,1) even when the exponent saturates.
    return std::clamp(p, std::numeric_limits<double>::denorm_min(), 1.0 - 0x1.0p-53);
}

double activate(Activation a, double z) {
    switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return sigmoid(z);
    case Activation::identity: return z;
    }
    return z;
}

// Derivative expressed through the pre-activation z and the output a.
double activation_slope(Activation act, double z, double a) {
    switch (act) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return a * (1.0 - a);
    case Activation::identity: return 1.0;
    }
    return 1.0;
}

struct ForwardTrace {
    std::vector<Matrix> inputs; // input to each layer
    std::vector<Matrix> pre;    // pre-activation of each layer
    Matrix output;
};

void check_input(const MlpModel& m, const Matrix& x) {
    if (x.cols() != m.input_dim()) {
        throw ShapeError("model expects " + std::to_string(m.input_dim()) +
                         " input columns, got " + x.shape_string());
    }
    for (double v : x.data()) {
        if (!std::isfinite(v)) {
            throw InputError("forward input contains a non-finite value");
        }
    }
}

void check_labels(const Matrix& x, std::span<const int> labels) {
    if (labels.size() != x.rows()) {
        throw ShapeError("got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(x.rows()) + " rows");
    }
}

// z = a * W^T + b, broadcasting the bias over rows.
Matrix affine(const DenseLayer& layer, const Matrix& a) {
    Matrix z = matmul(a, transpose(layer.weights));
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] += layer.bias(j, 0);
        }
    }
    return z;
}

ForwardTrace trace_forward(const MlpModel& m, const Matrix& x) {
    check_input(m, x);
    ForwardTrace t{{}, {}, x};
    for (const auto& layer : m.layers()) {
        t.inputs.push_back(t.output);
        t.pre.push_back(affine(layer, t.output));
        const auto act = layer.activation;
        t.output = map_scalar(t.pre.back(), [act](double z) { return activate(act, z); });
    }
    return t;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
    }
    return out;
}

} // namespace

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
    }
    return "identity";
}

std::optional<Activation> parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "identity") return Activation::identity;
    return std::nullopt;
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw ShapeError("model needs at least one layer");
    }
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& l = layers_[k];
        if (l.bias.rows() != l.out_dim() || l.bias.cols() != 1) {
            throw ShapeError("layer " + std::to_string(k) + " bias is " + l.bias.shape_string() +
                             ", expected " + std::to_string(l.out_dim()) + "x1");
        }
        if (k > 0 && l.in_dim() != layers_[k - 1].out_dim()) {
            throw ShapeError("layer " + std::to_string(k) + " takes " + std::to_string(l.in_dim()) +
                             " inputs but layer " + std::to_string(k - 1) + " emits " +
                             std::to_string(layers_[k - 1].out_dim()));
        }
        const auto finite = [](const Matrix& m) {
            return std::all_of(m.data().begin(), m.data().end(),
                               [](double v) { return std::isfinite(v); });
        };
        if (!finite(l.weights) || !finite(l.bias)) {
            throw InputError("layer " + std::to_string(k) + " has non-finite parameters");
        }
    }
    const auto& last = layers_.back();
    if (last.out_dim() != 1 || last.activation != Activation::sigmoid) {
        throw ShapeError("final layer must be a single sigmoid unit");
    }
}

MlpModel init_model(std::pair<std::size_t, std::size_t> hidden_dims, std::uint64_t seed) {
    const auto [h1, h2] = hidden_dims;
    if (h1 == 0 || h2 == 0) {
        throw ConfigError("hidden layer sizes must be at least 1");
    }
    const LayerSpec specs[] = {
        {kFeatureCount, h1, Activation::relu},
        {h1, h2, Activation::relu},
        {h2, 1, Activation::sigmoid},
    };
    Rng rng = make_stream({seed});
    std::vector<DenseLayer> layers;
    for (const auto& spec : specs) {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
        Matrix w(spec.out_dim, spec.in_dim);
        for (double& v : w.data()) {
            v = (2.0 * uniform01(rng) - 1.0) * limit;
        }
        layers.push_back(DenseLayer{std::move(w), Matrix(spec.out_dim, 1), spec.activation});
    }
    return MlpModel(std::move(layers));
}

Matrix forward(const MlpModel& m, const Matrix& x) {
    return trace_forward(m, x).output;
}

double bce_loss(const Matrix& pred, std::span<const int> labels) {
    check_labels(pred, labels);
    if (pred.cols() != 1) {
        throw ShapeError("predictions must be a column, got " + pred.shape_string());
    }
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(pred(i, 0), kProbClamp, 1.0 - kProbClamp);
        total += labels[i] == 1 ? std::log(p) : std::log1p(-p);
    }
    return -total / static_cast<double>(labels.size());
}

Gradients backward(const MlpModel& m, const Matrix& x, std::span<const int> labels) {
    check_labels(x, labels);
    const auto trace = trace_forward(m, x);
    const auto& layers = m.layers();
    const std::size_t n = x.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    // Output layer: d(loss)/dz = (p - y)/n for sigmoid + BCE, and 0 where the
    // clamp is active because the loss is flat there.
    Matrix delta(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = trace.output(i, 0);
        const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
        delta(i, 0) = clamped ? 0.0 : (p - static_cast<double>(labels[i])) * inv_n;
    }

    Gradients grads(layers.size(), LayerGradient{Matrix(1, 1), Matrix(1, 1)});
    for (std::size_t k = layers.size(); k-- > 0;) {
        const auto& layer = layers[k];
        const Matrix& a_prev = trace.inputs[k];
        Matrix db(layer.out_dim(), 1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < layer.out_dim(); ++j) {
                db(j, 0) += delta(i, j);
            }
        }
        grads[k] = LayerGradient{matmul(transpose(delta), a_prev), std::move(db)};
        if (k == 0) break;

        // Propagate through W_k, then through the previous layer's activation.
        Matrix upstream = matmul(delta, layer.weights);
        const auto& prev = layers[k - 1];
        const Matrix& z = trace.pre[k - 1];
        for (std::size_t i = 0; i < upstream.rows(); ++i) {
            for (std::size_t j = 0; j < upstream.cols(); ++j) {
                upstream(i, j) *= activation_slope(prev.activation, z(i, j), a_prev(i, j));
            }
        }
        delta = std::move(upstream);
    }
    return grads;
}

std::vector<int> predict(const MlpModel& m, const Matrix& x, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw InputError("threshold must lie in (0,1), got " + text::format_double(threshold));
    }
    const Matrix p = forward(m, x);
    std::vector<int> out(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) {
        out[i] = p(i, 0) >= threshold ? 1 : 0;
    }
    return out;
}

double accuracy_of(std::span<const int> pred, std::span<const int> labels) {
    if (pred.size() != labels.size() || pred.empty()) {
        throw ShapeError("accuracy needs equal, non-zero lengths");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        hits += pred[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    // lr = 0 is accepted so a run can be checked to leave parameters untouched.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be finite and non-negative");
    }
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (hidden_dims.first < 1 || hidden_dims.second < 1) {
        throw ConfigError("hidden layer sizes must be at least 1");
    }
}

TrainResult train(const Dataset& train_set, const TrainConfig& cfg) {
    cfg.validate();
    train_set.validate();
    MlpModel model = init_model(cfg.hidden_dims, cfg.seed);
    const Matrix& x = train_set.features;
    const std::vector<int>& y = train_set.labels;
    const std::size_t n = train_set.rows();

    TrainingLog log;
    log.epochs.reserve(cfg.epochs);
    std::vector<int> batch_labels;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto order = iota_indices(n);
        Rng rng = make_stream({cfg.seed, epoch});
        shuffle(std::span(order), rng);

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const Matrix xb = gather_rows(x, rows);
            batch_labels.clear();
            for (auto r : rows) batch_labels.push_back(y[r]);

            const Gradients g = backward(model, xb, batch_labels);
            auto& layers = model.mutable_layers();
            for (std::size_t k = 0; k < layers.size(); ++k) {
                auto w = layers[k].weights.data();
                auto gw = g[k].weights.data();
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gw[i];
                auto b = layers[k].bias.data();
                auto gb = g[k].bias.data();
                for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.learning_rate * gb[i];
            }
        }

        EpochRecord rec{epoch, 0.0, 0.0, std::nullopt, std::nullopt};
        const Matrix p = forward(model, x);
        rec.train_loss = bce_loss(p, y);
        rec.train_accuracy = accuracy_of(predict(model, x), y);
        if (cfg.validation) {
            const auto& v = *cfg.validation;
            rec.val_loss = bce_loss(forward(model, v.features), v.labels);
            rec.val_accuracy = accuracy_of(predict(model, v.features), v.labels);
        }
        log.epochs.push_back(rec);
    }
    return TrainResult{std::move(model), std::move(log)};
}

std::string serialize_model(const MlpModel& m) {
    std::ostringstream out;
    out << kModelMagic << ' ' << kModelVersion << '\n' << m.layers().size() << '\n';
    const auto write_values = [&out](std::span<const double> values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out << ' ';
            out << text::format_double(values[i]);
        }
        out << '\n';
    };
    for (const auto& layer : m.layers()) {
        out << layer.in_dim() << ' ' << layer.out_dim() << ' ' << to_string(layer.activation)
            << '\n';
        write_values(layer.weights.data());
        write_values(layer.bias.data());
    }
    return out.str();
}

MlpModel parse_model(std::string_view content) {
    auto lines = text::split(content, '\n');
    // A single trailing newline is allowed; nothing else may follow.
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
    }
    std::size_t cursor = 0;
    const auto next_line = [&](const std::string& what) -> const std::string& {
        if (cursor >= lines.size()) {
            throw FormatError("model file truncated: missing " + what);
        }
        return lines[cursor++];
    };

    const auto header = text::split(next_line("header"), ' ');
    if (header.size() != 2 || header[0] != kModelMagic) {
        throw FormatError("model header must be '" + std::string(kModelMagic) + " " +
                          std::string(kModelVersion) + "'");
    }
    if (header[1] != kModelVersion) {
        throw FormatError("unsupported model version '" + header[1] + "' (supported: " +
                          std::string(kModelVersion) + ")");
    }
    const auto count = text::parse_int(next_line("layer count"));
    if (!count || *count < 1) {
        throw FormatError("layer count must be a positive integer");
    }

    const auto parse_values = [](const std::string& line, std::size_t expected,
                                 const std::string& field) {
        std::vector<double> values;
        for (const auto& tok : text::split(line, ' ')) {
            const auto v = text::parse_double(tok);
            if (!v) {
                throw FormatError(field + ": cannot parse '" + tok + "'");
            }
            values.push_back(*v);
        }
        if (values.size() != expected) {
            throw FormatError(field + ": declared " + std::to_string(expected) + " values, found " +
                              std::to_string(values.size()));
        }
        return values;
    };

    std::vector<DenseLayer> layers;
    for (long long k = 0; k < *count; ++k) {
        const std::string tag = "layer " + std::to_string(k);
        const auto dims = text::split(next_line(tag + " dims"), ' ');
        if (dims.size() != 3) {
            throw FormatError(tag + " dims: expected 'in out activation'");
        }
        const auto in = text::parse_int(dims[0]);
        const auto out = text::parse_int(dims[1]);
        const auto act = parse_activation(dims[2]);
        if (!in || !out || *in < 1 || *out < 1) {
            throw FormatError(tag + " dims: sizes must be positive integers");
        }
        if (!act) {
            throw FormatError(tag + " activation: unknown '" + dims[2] + "'");
        }
        const auto rows = static_cast<std::size_t>(*out);
        const auto cols = static_cast<std::size_t>(*in);
        auto w = parse_values(next_line(tag + " weights"), rows * cols, tag + " weights");
        auto b = parse_values(next_line(tag + " biases"), rows, tag + " biases");
        layers.push_back(DenseLayer{Matrix(rows, cols, std::move(w)), Matrix(rows, 1, std::move(b)),
                                    *act});
    }
    if (cursor != lines.size()) {
        throw FormatError("unexpected trailing content after layer " + std::to_string(*count - 1));
    }
    try {
        return MlpModel(std::move(layers));
    } catch (const Error& e) {
        throw FormatError(std::string("invalid model structure: ") + e.what());
    }
}

void save_model(const MlpModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write model to '" + path.string() + "'");
    }
    out << serialize_model(m);
    if (!out) {
        throw IoError("failed writing model to '" + path.string() + "'");
    }
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open model '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

} // namespace ckd
