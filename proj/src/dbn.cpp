#include "fieldseg/dbn.hpp"

#include "fieldseg/error.hpp"
#include "fieldseg/rng.hpp"
#include "fieldseg/segmentation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

namespace fieldseg {

namespace {

// Keeps the doubling plan within memory: m <= 5 gives at most 512 -> 2048.
constexpr int kMaxLayerWidth = 4096;

double activate(Activation a, double z) noexcept {
    switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Selu: return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
    case Activation::Identity: break;
    }
    return z;
}

double activate_slope(Activation a, double z) noexcept {
    switch (a) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Selu: return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
    case Activation::Identity: break;
    }
    return 1.0;
}

void softmax_in_place(std::span<double> scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) {
        s = std::exp(s - top);
        total += s;
    }
    for (double& s : scores) s /= total;
}

// Pre-activations and activations of every layer for one batch.
struct Trace {
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> a;  // a[0] = inputs, a[k+1] = output of layer k
};

Trace run(const DbnModel& model, const Batch& inputs) {
    const auto& layers = model.layers();
    if (inputs.width != model.input_width()) {
        throw Error(ErrorCode::ShapeMismatch, "row width " + std::to_string(inputs.width) + " but network expects " +
                                                  std::to_string(model.input_width()));
    }
    const std::size_t n = inputs.rows();
    Trace t;
    t.a.push_back(inputs.values);
    for (const DenseLayer& layer : layers) {
        const auto in = static_cast<std::size_t>(layer.shape.in);
        const auto out = static_cast<std::size_t>(layer.shape.out);
        const auto& prev = t.a.back();
        std::vector<double> z(n * out);
        for (std::size_t r = 0; r < n; ++r) {
            const double* x = prev.data() + r * in;
            for (std::size_t o = 0; o < out; ++o) {
                const double* w = layer.weights.data() + o * in;
                double s = layer.bias[o];
                for (std::size_t i = 0; i < in; ++i) s += w[i] * x[i];
                z[r * out + o] = s;
            }
        }
        std::vector<double> a(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) a[i] = activate(layer.shape.activation, z[i]);
        t.z.push_back(std::move(z));
        t.a.push_back(std::move(a));
    }
    return t;
}

void check_labels(const DbnModel& model, const Batch& inputs, std::span<const int> labels) {
    if (labels.size() != inputs.rows()) throw Error(ErrorCode::ShapeMismatch, "one label per row expected");
    for (int y : labels) {
        if (y < 0 || y >= model.output_width()) throw Error(ErrorCode::ShapeMismatch, "label out of range");
    }
}

Batch gather(const Batch& source, std::span<const std::size_t> rows) {
    Batch out;
    out.width = source.width;
    out.values.reserve(rows.size() * static_cast<std::size_t>(source.width));
    for (std::size_t r : rows) {
        const auto row = source.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

void init_optimizer(DbnModel& model) {
    AdamState& s = model.optimizer();
    if (s.m_w.size() == model.layers().size()) return;
    s = {};
    for (const DenseLayer& layer : model.layers()) {
        s.m_w.emplace_back(layer.weights.size(), 0.0);
        s.v_w.emplace_back(layer.weights.size(), 0.0);
        s.m_b.emplace_back(layer.bias.size(), 0.0);
        s.v_b.emplace_back(layer.bias.size(), 0.0);
    }
}

void adam_update(std::vector<double>& params, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& grad, double lr, double correction1, double correction2) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kStabilizer = 1e-8;
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + kStabilizer);
    }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t take(int width) {
        if (bytes_.size() - pos_ < static_cast<std::size_t>(width)) {
            throw Error(ErrorCode::TruncatedPayload, "model file ends early");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    double f64() { return std::bit_cast<double>(take(8)); }
    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

DbnSpec make_dbn_spec(int m, int k_c) {
    if (m < 2 || k_c < 2) {
        throw Error(ErrorCode::InvalidSpec, "need m >= 2 and K_c >= 2, got m=" + std::to_string(m) +
                                                " K_c=" + std::to_string(k_c));
    }
    DbnSpec spec{m, k_c, {}};
    spec.layers.push_back({m, m, Activation::Relu});
    if (m != 2) spec.layers.push_back({m, 2, Activation::Identity});
    long long odim = 2;
    for (int j = 1; j <= m; ++j) {
        const long long dim = 2 * odim;
        if (4 * odim > kMaxLayerWidth) {
            throw Error(ErrorCode::InvalidSpec, "m=" + std::to_string(m) + " exceeds the supported layer width");
        }
        spec.layers.push_back({static_cast<int>(odim), static_cast<int>(dim), Activation::Selu});
        odim = 2 * dim;
        spec.layers.push_back({static_cast<int>(dim), static_cast<int>(odim), Activation::Selu});
    }
    spec.layers.push_back({static_cast<int>(odim), k_c, Activation::Identity});
    return spec;
}

DbnModel::DbnModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error(ErrorCode::InvalidSpec, "model needs at least one layer");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& l = layers_[k];
        if (l.weights.size() != static_cast<std::size_t>(l.shape.in) * static_cast<std::size_t>(l.shape.out) ||
            l.bias.size() != static_cast<std::size_t>(l.shape.out)) {
            throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(k) + " parameter sizes");
        }
        if (k > 0 && layers_[k - 1].shape.out != l.shape.in) {
            throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(k) + " does not chain");
        }
    }
    spec_.m = input_width();
    spec_.k_c = output_width();
    for (const auto& l : layers_) spec_.layers.push_back(l.shape);
}

DbnModel::DbnModel(DbnSpec spec, std::vector<DenseLayer> layers) : DbnModel(std::move(layers)) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        if (k >= spec.layers.size() || !(spec.layers[k] == layers_[k].shape)) {
            throw Error(ErrorCode::ShapeMismatch, "layers do not follow the spec");
        }
    }
    if (spec.layers.size() != layers_.size()) throw Error(ErrorCode::ShapeMismatch, "layer count differs from spec");
    spec_ = std::move(spec);
}

DbnModel build_dbn(int m, int k_c, std::uint64_t seed) {
    DbnSpec spec = make_dbn_spec(m, k_c);
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (const LayerShape& shape : spec.layers) {
        DenseLayer layer{shape, {}, std::vector<double>(static_cast<std::size_t>(shape.out), 0.0)};
        const double sd = std::sqrt(2.0 / shape.in);
        layer.weights.resize(static_cast<std::size_t>(shape.in) * static_cast<std::size_t>(shape.out));
        for (double& w : layer.weights) w = sd * rng.normal();
        if (shape.activation == Activation::Relu) {
            // Mirrored pairs: inputs are nonnegative and biases start at zero,
            // so an unpaired row can be dead on every input.
            const auto in = static_cast<std::size_t>(shape.in);
            for (std::size_t o = 1; o < static_cast<std::size_t>(shape.out); o += 2) {
                for (std::size_t i = 0; i < in; ++i) layer.weights[o * in + i] = -layer.weights[(o - 1) * in + i];
            }
        }
        layers.push_back(std::move(layer));
    }
    return DbnModel(std::move(spec), std::move(layers));
}

Batch forward(const DbnModel& model, const Batch& inputs) {
    Trace t = run(model, inputs);
    Batch out{model.output_width(), std::move(t.a.back())};
    for (std::size_t r = 0; r < out.rows(); ++r) {
        softmax_in_place(std::span<double>(out.values).subspan(r * static_cast<std::size_t>(out.width),
                                                                static_cast<std::size_t>(out.width)));
    }
    return out;
}

double mean_loss(const DbnModel& model, const Batch& inputs, std::span<const int> labels) {
    check_labels(model, inputs, labels);
    if (labels.empty()) throw Error(ErrorCode::EmptyDataset, "no rows");
    const Batch probs = forward(model, inputs);
    double total = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        total -= std::log(std::max(probs.row(r)[static_cast<std::size_t>(labels[r])], 1e-300));
    }
    return total / static_cast<double>(labels.size());
}

Gradients loss_gradients(const DbnModel& model, const Batch& inputs, std::span<const int> labels) {
    check_labels(model, inputs, labels);
    if (labels.empty()) throw Error(ErrorCode::EmptyDataset, "no rows");
    const auto& layers = model.layers();
    const Trace t = run(model, inputs);
    const std::size_t n = labels.size();

    // d(loss)/d(scores) = (softmax - onehot) / n
    const auto k = static_cast<std::size_t>(model.output_width());
    std::vector<double> delta = t.a.back();
    for (std::size_t r = 0; r < n; ++r) {
        const std::span<double> row(delta.data() + r * k, k);
        softmax_in_place(row);
        row[static_cast<std::size_t>(labels[r])] -= 1.0;
        for (double& d : row) d /= static_cast<double>(n);
    }

    Gradients g;
    g.weights.resize(layers.size());
    g.bias.resize(layers.size());
    for (std::size_t li = layers.size(); li-- > 0;) {
        const DenseLayer& layer = layers[li];
        const auto in = static_cast<std::size_t>(layer.shape.in);
        const auto out = static_cast<std::size_t>(layer.shape.out);
        // delta holds dL/da for this layer's output; chain through f'(z).
        const auto& z = t.z[li];
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= activate_slope(layer.shape.activation, z[i]);
        const auto& x = t.a[li];
        std::vector<double> gw(in * out, 0.0);
        std::vector<double> gb(out, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta[r * out + o];
                gb[o] += d;
                double* row = gw.data() + o * in;
                const double* xr = x.data() + r * in;
                for (std::size_t i = 0; i < in; ++i) row[i] += d * xr[i];
            }
        }
        if (li > 0) {
            std::vector<double> back(n * in, 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t o = 0; o < out; ++o) {
                    const double d = delta[r * out + o];
                    const double* w = layer.weights.data() + o * in;
                    for (std::size_t i = 0; i < in; ++i) back[r * in + i] += d * w[i];
                }
            }
            delta = std::move(back);
        }
        g.weights[li] = std::move(gw);
        g.bias[li] = std::move(gb);
    }
    return g;
}

std::vector<double> train(DbnModel& model, const RowDataset& dataset, const TrainOptions& options) {
    if (dataset.size() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
    if (options.epochs < 0 || options.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "bad training options");
    check_labels(model, dataset.inputs, dataset.labels);
    init_optimizer(model);

    Rng rng(options.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(options.epochs));
    AdamState& adam = model.optimizer();
    const auto batch = static_cast<std::size_t>(options.batch_size);
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::span<const std::size_t> rows(order.data() + start, std::min(batch, order.size() - start));
            const Batch inputs = gather(dataset.inputs, rows);
            std::vector<int> labels;
            labels.reserve(rows.size());
            for (std::size_t r : rows) labels.push_back(dataset.labels[r]);
            const Gradients g = loss_gradients(model, inputs, labels);
            ++adam.step;
            const double c1 = 1.0 - std::pow(0.9, static_cast<double>(adam.step));
            const double c2 = 1.0 - std::pow(0.999, static_cast<double>(adam.step));
            for (std::size_t li = 0; li < model.layers().size(); ++li) {
                DenseLayer& layer = model.layers()[li];
                adam_update(layer.weights, adam.m_w[li], adam.v_w[li], g.weights[li], options.lr, c1, c2);
                adam_update(layer.bias, adam.m_b[li], adam.v_b[li], g.bias[li], options.lr, c1, c2);
            }
        }
        trace.push_back(mean_loss(model, dataset.inputs, dataset.labels));
    }
    model.set_representatives(class_representatives(dataset));
    return trace;
}

RowDataset dataset_from_grid(const PixelGrid& grid, int m_c, int k_c) {
    if (k_c < 2) throw Error(ErrorCode::InvalidSpec, "K_c must be >= 2");
    if (m_c < 1) throw Error(ErrorCode::InvalidArgument, "m_c must be >= 1");
    const int w = m_c + 1;
    if (!is_tileable(grid, m_c, w)) throw Error(ErrorCode::WindowMismatch, "grid is not tileable; pad first");

    RowDataset ds;
    ds.k_c = k_c;
    ds.inputs.width = w;
    std::vector<double> means;
    for (const Site a : window_anchors(grid.rows(), grid.cols(), m_c, w)) {
        for (int r = a.row; r < a.row + w; ++r) {
            double sum = 0.0;
            for (int c = a.col; c < a.col + w; ++c) {
                const double v = grid(r, c) / 255.0;
                ds.inputs.values.push_back(v);
                sum += v;
            }
            means.push_back(sum / w);
        }
    }

    // Mid-rank empirical CDF binning: ties share a bin, so a constant grid
    // collapses to a single label.
    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    ds.labels.reserve(means.size());
    for (double mean : means) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), mean);
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), mean);
        const double cdf = (static_cast<double>(lo - sorted.begin()) + 0.5 * static_cast<double>(hi - lo)) / n;
        ds.labels.push_back(std::min(k_c - 1, static_cast<int>(std::floor(cdf * k_c))));
    }
    return ds;
}

std::vector<double> class_representatives(const RowDataset& dataset) {
    std::vector<double> sums(static_cast<std::size_t>(dataset.k_c), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(dataset.k_c), 0);
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        const auto row = dataset.inputs.row(r);
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
        const auto y = static_cast<std::size_t>(dataset.labels[r]);
        sums[y] += 255.0 * mean;
        ++counts[y];
    }
    std::vector<double> out(sums.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = counts[k] > 0 ? sums[k] / static_cast<double>(counts[k])
                               : (static_cast<double>(k) + 0.5) * 255.0 / static_cast<double>(dataset.k_c);
    }
    return out;
}

DbnModel fit_dbn_smoother(const PixelGrid& grid, int m_c, int k_c, std::uint64_t init_seed,
                          const TrainOptions& options) {
    const RowDataset ds = dataset_from_grid(grid, m_c, k_c);
    DbnModel model = build_dbn(m_c + 1, k_c, init_seed);
    train(model, ds, options);
    return model;
}

PixelGrid smooth_dbn(const PixelGrid& grid, const DbnModel& model, int m_c, int epsilon) {
    if (!model.trained()) throw Error(ErrorCode::UntrainedModel, "smooth_dbn needs a trained model");
    const int w = m_c + 1;
    if (model.input_width() != w) {
        throw Error(ErrorCode::ShapeMismatch, "model input width " + std::to_string(model.input_width()) +
                                                  " does not match window width " + std::to_string(w));
    }
    if (!is_tileable(grid, m_c, w)) throw Error(ErrorCode::WindowMismatch, "grid is not tileable; pad first");

    const auto anchors = window_anchors(grid.rows(), grid.cols(), m_c, w);
    Batch rows;
    rows.width = w;
    for (const Site a : anchors) {
        for (int r = a.row; r < a.row + w; ++r) {
            for (int c = a.col; c < a.col + w; ++c) rows.values.push_back(grid(r, c) / 255.0);
        }
    }
    const Batch probs = forward(model, rows);
    const auto k = static_cast<std::size_t>(model.output_width());
    std::vector<std::uint8_t> values;
    values.reserve(anchors.size());
    std::vector<int> votes(k);
    for (std::size_t wi = 0; wi < anchors.size(); ++wi) {
        std::fill(votes.begin(), votes.end(), 0);
        for (int r = 0; r < w; ++r) {
            const auto p = probs.row(wi * static_cast<std::size_t>(w) + static_cast<std::size_t>(r));
            ++votes[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
        }
        const auto winner = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        const double rep = std::clamp(std::nearbyint(model.representatives()[winner]), 0.0, 255.0);
        values.push_back(static_cast<std::uint8_t>(rep));
    }
    return substitute_window_values(grid, m_c, epsilon, values);
}

std::vector<std::uint8_t> write_dbn(const DbnModel& model) {
    std::vector<std::uint8_t> out{'D', 'B', 'N', '1'};
    put_u32(out, static_cast<std::uint32_t>(model.spec().m));
    put_u32(out, static_cast<std::uint32_t>(model.spec().k_c));
    put_u32(out, model.trained() ? 1u : 0u);
    for (const DenseLayer& layer : model.layers()) {
        for (double w : layer.weights) put_f64(out, w);
        for (double b : layer.bias) put_f64(out, b);
    }
    if (model.trained()) {
        for (double r : model.representatives()) put_f64(out, r);
    }
    return out;
}

DbnModel read_dbn(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "DBN1", 4) != 0) {
        throw Error(ErrorCode::BadMagic, "not a DBN1 model");
    }
    ByteReader in(bytes.subspan(4));
    const auto m = static_cast<int>(in.u32());
    const auto k_c = static_cast<int>(in.u32());
    const std::uint32_t trained = in.u32();
    DbnSpec spec = make_dbn_spec(m, k_c);
    std::vector<DenseLayer> layers;
    for (const LayerShape& shape : spec.layers) {
        DenseLayer layer{shape, std::vector<double>(static_cast<std::size_t>(shape.in) * static_cast<std::size_t>(shape.out)),
                         std::vector<double>(static_cast<std::size_t>(shape.out))};
        for (double& w : layer.weights) w = in.f64();
        for (double& b : layer.bias) b = in.f64();
        layers.push_back(std::move(layer));
    }
    DbnModel model(std::move(spec), std::move(layers));
    if (trained != 0) {
        std::vector<double> reps(static_cast<std::size_t>(k_c));
        for (double& r : reps) r = in.f64();
        model.set_representatives(std::move(reps));
    }
    if (!in.done()) throw Error(ErrorCode::InconsistentDims, "trailing bytes after model payload");
    return model;
}

} // namespace fieldseg
