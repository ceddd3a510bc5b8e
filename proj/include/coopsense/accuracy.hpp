#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopsense/quality.hpp"
#include "coopsense/scene.hpp"

namespace coopsense::accuracy {

/// Ground-truth label generator used to supervise the estimator. Accuracy
/// saturates with per-voxel coverage (diminishing returns past z_sat points per
/// voxel) and larger objects need proportionally more coverage.
struct OracleParams {
    int K_oracle = 4;        ///< voxel resolution the label is computed at
    double lambda = 0.15;    ///< coverage-to-accuracy rate
    double z_sat = 40.0;     ///< per-voxel saturation count
    double S0 = 25.0;        ///< reference surface area, m^2
};

/// 1 - exp(-lambda * sum_k min(Z_k, z_sat) / (surface_area/S0)).
/// Empty point sets map to exactly 0.
double oracle_accuracy(const scene::PointCloud& points, const scene::BoundingBox& box,
                       const OracleParams& params = {});

struct TrainingSample {
    std::vector<double> features;  ///< voxel counts followed by box edge lengths
    double label = 0.0;            ///< oracle accuracy in [0, 1]
};

/// Feed-forward net: (K^3+3) -> 32 -> 16 -> 1, ReLU hidden layers, logistic
/// output. Inputs are standardized with statistics captured at training time.
class MlpModel {
  public:
    MlpModel() = default;

    /// Glorot-uniform weights, zero biases, identity feature scaling.
    static MlpModel init(int input_dim, std::uint64_t seed);

    int input_dim() const { return input_dim_; }
    const std::vector<int>& layer_sizes() const { return layer_sizes_; }

    /// Logistic output in [0, 1]; saturated inputs round to the endpoints in
    /// double precision. Throws std::invalid_argument on dimension mismatch.
    double forward(const std::vector<double>& features) const;

    void set_feature_scaling(std::vector<double> mean, std::vector<double> stddev);

    std::string to_json() const;
    static MlpModel from_json(const std::string& text);

  private:
    friend struct GradientAccess;

    std::vector<double> standardize(const std::vector<double>& features) const;

    int input_dim_ = 0;
    std::vector<int> layer_sizes_;               // {in, 32, 16, 1}
    std::vector<std::vector<double>> weights_;   // per layer, row-major [out][in]
    std::vector<std::vector<double>> biases_;    // per layer
    std::vector<double> feature_mean_;
    std::vector<double> feature_std_;
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 1e-2;
    std::uint64_t seed = 1;
};

/// Mean squared error of the model over the samples.
double mse_loss(const MlpModel& model, const std::vector<TrainingSample>& samples);

/// Flat parameter-order gradient of mse_loss, plus the loss itself.
/// Parameter order matches flatten_parameters().
struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
LossGradient loss_and_gradient(const MlpModel& model,
                               const std::vector<TrainingSample>& samples);

std::vector<double> flatten_parameters(const MlpModel& model);
void assign_parameters(MlpModel& model, const std::vector<double>& params);

/// The model train_mlp starts from: seeded init plus feature statistics of the
/// dataset. Training with zero epochs returns exactly this model.
MlpModel initial_model(const std::vector<TrainingSample>& data, const TrainConfig& cfg);

/// Plain minibatch SGD with a fixed learning rate and seeded shuffling.
MlpModel train_mlp(const std::vector<TrainingSample>& data, const TrainConfig& cfg);

/// Estimator output for a fused indicator and the object's box dimensions.
double predict_accuracy(const MlpModel& model, const quality::QualityIndicator& indicator,
                        const scene::BoundingBox& box);

struct ErrorMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double vae = 0.0;  ///< variance of the absolute error
};

ErrorMetrics eval_metrics(const MlpModel& model, const std::vector<TrainingSample>& samples);

/// Builds labeled samples from randomized road scenes: simulate every CAV's
/// lidar, cut out per-object point sets, fuse the data of a random CAV subset
/// (possibly empty) and label the fused set with the oracle. The random stream
/// does not depend on K, so different resolutions see the same scenes and
/// labels, only the count features change.
std::vector<TrainingSample> generate_training_set(std::uint64_t seed, int count,
                                                  quality::PartitionResolution resolution,
                                                  const OracleParams& oracle = {});

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace coopsense::accuracy
