#pragma once

#include "fieldseg/grid.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fieldseg {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Selu = 2 };

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

struct LayerShape {
    int in = 0;
    int out = 0;
    Activation activation = Activation::Identity;

    friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Layer plan of the belief network:
///   m -> m (ReLU); m -> 2 (linear adapter, only when m != 2);
///   then for J = 1..m: odim -> 2 odim, 2 odim -> 4 odim (SELU), from odim = 2;
///   finally odim -> K_c (linear scores, normalized by softmax).
struct DbnSpec {
    int m = 2;
    int k_c = 2;
    std::vector<LayerShape> layers;

    friend bool operator==(const DbnSpec&, const DbnSpec&) = default;
};

DbnSpec make_dbn_spec(int m, int k_c);

/// Dense layer, weights stored out x in, row-major.
struct DenseLayer {
    LayerShape shape;
    std::vector<double> weights;
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// First/second moment accumulators of the optimizer, laid out like the
/// layers' parameters.
struct AdamState {
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    long long step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

class DbnModel {
public:
    DbnModel() = default;
    /// Arbitrary stack, for hand-built models. Shapes must chain.
    explicit DbnModel(std::vector<DenseLayer> layers);
    DbnModel(DbnSpec spec, std::vector<DenseLayer> layers);

    const DbnSpec& spec() const noexcept { return spec_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    int input_width() const noexcept { return layers_.front().shape.in; }
    int output_width() const noexcept { return layers_.back().shape.out; }

    bool trained() const noexcept { return trained_; }
    /// Intensity representing each class, the training-set mean of its rows.
    const std::vector<double>& representatives() const noexcept { return representatives_; }
    void set_representatives(std::vector<double> values) {
        representatives_ = std::move(values);
        trained_ = true;
    }

    AdamState& optimizer() noexcept { return adam_; }
    const AdamState& optimizer() const noexcept { return adam_; }

    friend bool operator==(const DbnModel&, const DbnModel&) = default;

private:
    DbnSpec spec_;
    std::vector<DenseLayer> layers_;
    std::vector<double> representatives_;
    AdamState adam_;
    bool trained_ = false;
};

/// He-style Gaussian init (sd sqrt(2 / fan_in)), zero biases.
DbnModel build_dbn(int m, int k_c, std::uint64_t seed);

/// Row-major batch of equal-length rows.
struct Batch {
    int width = 0;
    std::vector<double> values;

    std::size_t rows() const noexcept { return width == 0 ? 0 : values.size() / static_cast<std::size_t>(width); }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(values).subspan(i * static_cast<std::size_t>(width),
                                                       static_cast<std::size_t>(width));
    }
};

/// Class probabilities, one row of output_width() per input row.
Batch forward(const DbnModel& model, const Batch& inputs);

struct RowDataset {
    Batch inputs;  ///< intensities / 255
    std::vector<int> labels;
    int k_c = 2;

    std::size_t size() const noexcept { return labels.size(); }
};

struct TrainOptions {
    int epochs = 200;
    double lr = 1e-3;
    int batch_size = 16;
    std::uint64_t seed = 0;
};

/// Parameter gradients, same layout as the layers.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
};

/// Mean categorical cross-entropy of softmax outputs against labels.
double mean_loss(const DbnModel& model, const Batch& inputs, std::span<const int> labels);

/// Backpropagated gradient of mean_loss.
Gradients loss_gradients(const DbnModel& model, const Batch& inputs, std::span<const int> labels);

/// Adam (0.9 / 0.999 / 1e-8) on shuffled minibatches. Returns the dataset
/// mean loss after each epoch. Marks the model trained and records the class
/// representatives from the dataset.
std::vector<double> train(DbnModel& model, const RowDataset& dataset, const TrainOptions& options);

/// One row per row of every (m_c+1)-window at stride m_c, scaled to [0,1];
/// label = K_c-quantile bin of the row mean.
RowDataset dataset_from_grid(const PixelGrid& grid, int m_c, int k_c);

/// Class representative intensities (mean row intensity per label, 0..255).
std::vector<double> class_representatives(const RowDataset& dataset);

/// Builds a network for (m_c+1)-wide rows and trains it on `grid`.
DbnModel fit_dbn_smoother(const PixelGrid& grid, int m_c, int k_c, std::uint64_t init_seed,
                          const TrainOptions& options);

/// Window value = representative of the majority row class; then the same
/// substitution pass as the empirical smoother.
PixelGrid smooth_dbn(const PixelGrid& grid, const DbnModel& model, int m_c, int epsilon);

/// "DBN1" | u32 m | u32 k_c | u32 trained | f64 weights, biases layer-major
/// | f64 representatives (k_c of them when trained). Little-endian.
std::vector<std::uint8_t> write_dbn(const DbnModel& model);
DbnModel read_dbn(std::span<const std::uint8_t> bytes);

} // namespace fieldseg
