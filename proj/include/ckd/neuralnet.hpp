#pragma once

#include "ckd/dataio.hpp"
#include "ckd/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ckd {

enum class Activation { relu, sigmoid, identity };

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view s);

struct LayerSpec {
    std::size_t in_dim;
    std::size_t out_dim;
    Activation activation;
};

struct DenseLayer {
    Matrix weights; // out x in
    Matrix bias;    // out x 1
    Activation activation;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward network ending in a single sigmoid unit.
class MlpModel {
public:
    /// Validates the chain: consecutive dims agree, last layer is 1-wide sigmoid,
    /// every parameter finite. Throws ShapeError / InputError.
    explicit MlpModel(std::vector<DenseLayer> layers);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }
    std::size_t input_dim() const noexcept { return layers_.front().in_dim(); }

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

private:
    std::vector<DenseLayer> layers_;
};

/// Per-layer gradients, same shapes as the model parameters.
struct LayerGradient {
    Matrix weights;
    Matrix bias;
};
using Gradients = std::vector<LayerGradient>;

/// 10 -> h1 (relu) -> h2 (relu) -> 1 (sigmoid); weights ~ U(-sqrt(6/(in+out)), +),
/// biases zero.
MlpModel init_model(std::pair<std::size_t, std::size_t> hidden_dims, std::uint64_t seed);

/// n x 1 probabilities, strictly inside (0,1).
Matrix forward(const MlpModel& m, const Matrix& x);

/// Mean binary cross-entropy, predictions clamped to [1e-12, 1 - 1e-12].
double bce_loss(const Matrix& pred, std::span<const int> labels);

/// Analytic gradient of bce_loss(forward(m, x), labels) with respect to every
/// weight and bias. relu'(0) is taken as 0.
Gradients backward(const MlpModel& m, const Matrix& x, std::span<const int> labels);

/// Label 1 iff the forward output is >= threshold.
std::vector<int> predict(const MlpModel& m, const Matrix& x, double threshold = 0.5);

/// Fraction of predictions matching labels.
double accuracy_of(std::span<const int> pred, std::span<const int> labels);

struct TrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::uint64_t seed = 7;
    std::pair<std::size_t, std::size_t> hidden_dims{32, 16};
    std::optional<Dataset> validation;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch; // 1-based
    double train_loss;
    double train_accuracy;
    std::optional<double> val_loss;
    std::optional<double> val_accuracy;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    MlpModel model;
    TrainingLog log;
};

/// Minibatch SGD on mean BCE. Each epoch reshuffles the rows with a stream
/// keyed by (seed, epoch).
TrainResult train(const Dataset& train_set, const TrainConfig& cfg);

void save_model(const MlpModel& m, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

/// Model text format, exposed for in-memory round trips.
std::string serialize_model(const MlpModel& m);
MlpModel parse_model(std::string_view text);

} // namespace ckd
