#include "coopsense/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace coopsense::accuracy {

using nlohmann::json;

double oracle_accuracy(const scene::PointCloud& points, const scene::BoundingBox& box,
                       const OracleParams& params) {
    if (points.empty()) return 0.0;
    const auto ind = quality::compute_indicator(points, box,
                                                quality::PartitionResolution(params.K_oracle));
    double covered = 0.0;
    for (auto c : ind.counts) covered += std::min(static_cast<double>(c), params.z_sat);
    const double size_factor = scene::surface_area(box) / params.S0;
    return 1.0 - std::exp(-params.lambda * covered / size_factor);
}

namespace {

inline double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

constexpr int kHidden1 = 32;
constexpr int kHidden2 = 16;

}  // namespace

struct GradientAccess {
    static std::vector<std::vector<double>>& weights(MlpModel& m) { return m.weights_; }
    static std::vector<std::vector<double>>& biases(MlpModel& m) { return m.biases_; }
    static const std::vector<std::vector<double>>& weights(const MlpModel& m) { return m.weights_; }
    static const std::vector<std::vector<double>>& biases(const MlpModel& m) { return m.biases_; }
    static std::vector<double>& mean(MlpModel& m) { return m.feature_mean_; }
    static std::vector<double>& stddev(MlpModel& m) { return m.feature_std_; }
    static const std::vector<double>& mean(const MlpModel& m) { return m.feature_mean_; }
    static const std::vector<double>& stddev(const MlpModel& m) { return m.feature_std_; }
    static std::vector<int>& sizes(MlpModel& m) { return m.layer_sizes_; }
    static int& input_dim(MlpModel& m) { return m.input_dim_; }
    static std::vector<double> standardize(const MlpModel& m, const std::vector<double>& f) {
        return m.standardize(f);
    }
};

MlpModel MlpModel::init(int input_dim, std::uint64_t seed) {
    if (input_dim <= 0) throw std::invalid_argument("MlpModel::init: input_dim must be positive");
    MlpModel m;
    m.input_dim_ = input_dim;
    m.layer_sizes_ = {input_dim, kHidden1, kHidden2, 1};
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < m.layer_sizes_.size(); ++l) {
        const int fan_in = m.layer_sizes_[l];
        const int fan_out = m.layer_sizes_[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (auto& v : w) v = (2.0 * u01(rng) - 1.0) * bound;
        m.weights_.push_back(std::move(w));
        m.biases_.emplace_back(fan_out, 0.0);
    }
    m.feature_mean_.assign(input_dim, 0.0);
    m.feature_std_.assign(input_dim, 1.0);
    return m;
}

void MlpModel::set_feature_scaling(std::vector<double> mean, std::vector<double> stddev) {
    if (static_cast<int>(mean.size()) != input_dim_ ||
        static_cast<int>(stddev.size()) != input_dim_)
        throw std::invalid_argument("set_feature_scaling: dimension mismatch");
    feature_mean_ = std::move(mean);
    feature_std_ = std::move(stddev);
}

std::vector<double> MlpModel::standardize(const std::vector<double>& features) const {
    std::vector<double> out(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        out[i] = (features[i] - feature_mean_[i]) / feature_std_[i];
    return out;
}

namespace {

/// Forward pass keeping pre-activations and activations per layer.
struct ForwardTrace {
    std::vector<std::vector<double>> activations;  // layer inputs, 0 = standardized features
    double output = 0.0;
};

ForwardTrace forward_trace(const std::vector<int>& sizes,
                           const std::vector<std::vector<double>>& weights,
                           const std::vector<std::vector<double>>& biases,
                           std::vector<double> input) {
    ForwardTrace tr;
    tr.activations.push_back(std::move(input));
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const auto& prev = tr.activations.back();
        std::vector<double> next(out);
        for (int o = 0; o < out; ++o) {
            double z = biases[l][o];
            const double* wrow = &weights[l][static_cast<std::size_t>(o) * in];
            for (int i = 0; i < in; ++i) z += wrow[i] * prev[i];
            const bool last = (l + 2 == sizes.size());
            next[o] = last ? 1.0 / (1.0 + std::exp(-z)) : std::max(0.0, z);
        }
        tr.activations.push_back(std::move(next));
    }
    tr.output = tr.activations.back()[0];
    return tr;
}

}  // namespace

double MlpModel::forward(const std::vector<double>& features) const {
    if (static_cast<int>(features.size()) != input_dim_)
        throw std::invalid_argument("MlpModel::forward: feature dimension mismatch");
    return forward_trace(layer_sizes_, weights_, biases_, standardize(features)).output;
}

double mse_loss(const MlpModel& model, const std::vector<TrainingSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("mse_loss: empty sample set");
    double acc = 0.0;
    for (const auto& s : samples) {
        const double e = model.forward(s.features) - s.label;
        acc += e * e;
    }
    return acc / static_cast<double>(samples.size());
}

std::vector<double> flatten_parameters(const MlpModel& model) {
    std::vector<double> flat;
    const auto& ws = GradientAccess::weights(model);
    const auto& bs = GradientAccess::biases(model);
    for (std::size_t l = 0; l < ws.size(); ++l) {
        flat.insert(flat.end(), ws[l].begin(), ws[l].end());
        flat.insert(flat.end(), bs[l].begin(), bs[l].end());
    }
    return flat;
}

void assign_parameters(MlpModel& model, const std::vector<double>& params) {
    auto& ws = GradientAccess::weights(model);
    auto& bs = GradientAccess::biases(model);
    std::size_t pos = 0;
    for (std::size_t l = 0; l < ws.size(); ++l) {
        for (auto& v : ws[l]) v = params.at(pos++);
        for (auto& v : bs[l]) v = params.at(pos++);
    }
    if (pos != params.size())
        throw std::invalid_argument("assign_parameters: parameter count mismatch");
}

LossGradient loss_and_gradient(const MlpModel& model, const std::vector<TrainingSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("loss_and_gradient: empty sample set");
    const auto& sizes = model.layer_sizes();
    const auto& ws = GradientAccess::weights(model);
    const auto& bs = GradientAccess::biases(model);
    const std::size_t layers = ws.size();

    std::vector<std::vector<double>> gw(layers), gb(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        gw[l].assign(ws[l].size(), 0.0);
        gb[l].assign(bs[l].size(), 0.0);
    }

    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        auto tr = forward_trace(sizes, ws, bs, GradientAccess::standardize(model, s.features));
        const double err = tr.output - s.label;
        loss += err * err * inv_n;

        // output layer: d loss / d z = 2 err / n * sigmoid'(z)
        std::vector<double> delta{2.0 * err * inv_n * tr.output * (1.0 - tr.output)};
        for (std::size_t l = layers; l-- > 0;) {
            const int in = sizes[l], out = sizes[l + 1];
            const auto& prev = tr.activations[l];
            for (int o = 0; o < out; ++o) {
                gb[l][o] += delta[o];
                double* grow = &gw[l][static_cast<std::size_t>(o) * in];
                for (int i = 0; i < in; ++i) grow[i] += delta[o] * prev[i];
            }
            if (l == 0) break;
            std::vector<double> prev_delta(in, 0.0);
            for (int o = 0; o < out; ++o) {
                const double* wrow = &ws[l][static_cast<std::size_t>(o) * in];
                for (int i = 0; i < in; ++i) prev_delta[i] += wrow[i] * delta[o];
            }
            for (int i = 0; i < in; ++i)
                if (tr.activations[l][i] <= 0.0) prev_delta[i] = 0.0;  // ReLU gate
            delta = std::move(prev_delta);
        }
    }

    LossGradient out;
    out.loss = loss;
    for (std::size_t l = 0; l < layers; ++l) {
        out.gradient.insert(out.gradient.end(), gw[l].begin(), gw[l].end());
        out.gradient.insert(out.gradient.end(), gb[l].begin(), gb[l].end());
    }
    return out;
}

MlpModel initial_model(const std::vector<TrainingSample>& data, const TrainConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("initial_model: empty dataset");
    const int dim = static_cast<int>(data.front().features.size());
    for (const auto& s : data)
        if (static_cast<int>(s.features.size()) != dim)
            throw std::invalid_argument("initial_model: inconsistent feature dimensions");

    MlpModel model = MlpModel::init(dim, cfg.seed);
    std::vector<double> mean(dim, 0.0), stddev(dim, 0.0);
    for (const auto& s : data)
        for (int i = 0; i < dim; ++i) mean[i] += s.features[i];
    for (auto& v : mean) v /= static_cast<double>(data.size());
    for (const auto& s : data)
        for (int i = 0; i < dim; ++i) {
            const double d = s.features[i] - mean[i];
            stddev[i] += d * d;
        }
    for (auto& v : stddev) v = std::max(std::sqrt(v / static_cast<double>(data.size())), 1e-8);
    model.set_feature_scaling(std::move(mean), std::move(stddev));
    return model;
}

MlpModel train_mlp(const std::vector<TrainingSample>& data, const TrainConfig& cfg) {
    if (cfg.batch_size <= 0) throw std::invalid_argument("train_mlp: batch_size must be positive");
    if (cfg.epochs < 0) throw std::invalid_argument("train_mlp: epochs must be non-negative");
    MlpModel model = initial_model(data, cfg);
    if (cfg.epochs == 0) return model;

    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<TrainingSample> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng() % i]);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) batch.push_back(data[order[k]]);
            auto lg = loss_and_gradient(model, batch);
            auto params = flatten_parameters(model);
            for (std::size_t k = 0; k < params.size(); ++k)
                params[k] -= cfg.learning_rate * lg.gradient[k];
            assign_parameters(model, params);
        }
    }
    return model;
}

double predict_accuracy(const MlpModel& model, const quality::QualityIndicator& indicator,
                        const scene::BoundingBox& box) {
    std::vector<double> features;
    features.reserve(indicator.counts.size() + 3);
    for (auto c : indicator.counts) features.push_back(static_cast<double>(c));
    features.push_back(box.lengths.x);
    features.push_back(box.lengths.y);
    features.push_back(box.lengths.z);
    if (static_cast<int>(features.size()) != model.input_dim())
        throw std::invalid_argument("predict_accuracy: indicator resolution does not match the model");
    return model.forward(features);
}

ErrorMetrics eval_metrics(const MlpModel& model, const std::vector<TrainingSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("eval_metrics: empty sample set");
    ErrorMetrics m;
    double abs_sum = 0.0, abs_sq_sum = 0.0;
    for (const auto& s : samples) {
        const double e = model.forward(s.features) - s.label;
        m.mse += e * e;
        abs_sum += std::abs(e);
        abs_sq_sum += e * e;
    }
    const double n = static_cast<double>(samples.size());
    m.mse /= n;
    m.mae = abs_sum / n;
    m.vae = abs_sq_sum / n - m.mae * m.mae;  // variance of |error|
    return m;
}

std::vector<TrainingSample> generate_training_set(std::uint64_t seed, int count,
                                                  quality::PartitionResolution resolution,
                                                  const OracleParams& oracle) {
    if (count <= 0) throw std::invalid_argument("generate_training_set: count must be positive");
    std::mt19937_64 rng(seed);
    std::vector<TrainingSample> samples;
    samples.reserve(count);

    while (static_cast<int>(samples.size()) < count) {
        const auto scenario = scene::random_scenario(rng);
        const int n_cavs = static_cast<int>(scenario.cavs.size());
        std::vector<std::vector<scene::PointCloud>> per_object(n_cavs);
        for (int n = 0; n < n_cavs; ++n) {
            const auto cloud = scene::simulate_lidar(scenario, scenario.cavs[n], scenario.lidar);
            per_object[n] = scene::partition_object_points(cloud, scenario.objects);
        }
        for (std::size_t m = 0; m < scenario.objects.size(); ++m) {
            for (int rep = 0; rep < 2; ++rep) {
                const std::uint32_t mask =
                    static_cast<std::uint32_t>(rng() % (1ULL << n_cavs));  // empty allowed
                scene::PointCloud fused;
                for (int n = 0; n < n_cavs; ++n)
                    if (mask & (1u << n))
                        fused.insert(fused.end(), per_object[n][m].begin(),
                                     per_object[n][m].end());
                const auto& box = scenario.objects[m].box;
                TrainingSample s;
                s.label = oracle_accuracy(fused, box, oracle);
                const auto ind = quality::compute_indicator(fused, box, resolution);
                s.features.reserve(ind.counts.size() + 3);
                for (auto c : ind.counts) s.features.push_back(static_cast<double>(c));
                s.features.push_back(box.lengths.x);
                s.features.push_back(box.lengths.y);
                s.features.push_back(box.lengths.z);
                samples.push_back(std::move(s));
                if (static_cast<int>(samples.size()) == count) return samples;
            }
        }
    }
    return samples;
}

std::string MlpModel::to_json() const {
    json j;
    j["layer_sizes"] = layer_sizes_;
    j["weights"] = weights_;
    j["biases"] = biases_;
    j["feature_mean"] = feature_mean_;
    j["feature_std"] = feature_std_;
    return j.dump();
}

MlpModel MlpModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("model: invalid JSON: ") + e.what());
    }
    MlpModel m;
    m.layer_sizes_ = j.at("layer_sizes").get<std::vector<int>>();
    if (m.layer_sizes_.size() < 2) throw std::runtime_error("model: bad layer_sizes");
    m.input_dim_ = m.layer_sizes_.front();
    m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases_ = j.at("biases").get<std::vector<std::vector<double>>>();
    m.feature_mean_ = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std_ = j.at("feature_std").get<std::vector<double>>();
    if (m.weights_.size() + 1 != m.layer_sizes_.size() || m.biases_.size() != m.weights_.size())
        throw std::runtime_error("model: layer count mismatch");
    for (std::size_t l = 0; l + 1 < m.layer_sizes_.size(); ++l) {
        const auto expect_w = static_cast<std::size_t>(m.layer_sizes_[l]) * m.layer_sizes_[l + 1];
        if (m.weights_[l].size() != expect_w ||
            m.biases_[l].size() != static_cast<std::size_t>(m.layer_sizes_[l + 1]))
            throw std::runtime_error("model: weight matrix shape mismatch");
    }
    if (static_cast<int>(m.feature_mean_.size()) != m.input_dim_ ||
        static_cast<int>(m.feature_std_.size()) != m.input_dim_)
        throw std::runtime_error("model: feature scaling shape mismatch");
    return m;
}

void save_model(const MlpModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model.to_json() << "\n";
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return MlpModel::from_json(buf.str());
}

}  // namespace coopsense::accuracy
