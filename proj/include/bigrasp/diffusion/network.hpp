#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bigrasp::diffusion {

// Layer sizes of the denoiser. The encoder is two shared per-point layers,
// channel-wise max pooling and a projection to `feature_width`; the noise
// predictor is an input layer, `blocks` residual blocks of width
// `hidden_width` and an output layer back to the grasp dimension.
struct NetworkShape {
  int grasp_dim = 56;
  int feature_width = 128;
  int time_width = 32;  // even
  int hidden_width = 256;
  int blocks = 3;
  int point_width = 64;
  int pool_width = 128;

  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

struct Linear {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;

  Linear() = default;
  Linear(int in, int out) : w(Eigen::MatrixXd::Zero(out, in)), b(Eigen::VectorXd::Zero(out)) {}
  int in() const { return static_cast<int>(w.cols()); }
  int out() const { return static_cast<int>(w.rows()); }
};

struct DenoiserParams {
  NetworkShape shape;
  Linear point1, point2, project;  // encoder
  Linear input;
  std::vector<Linear> block_a, block_b;
  Linear output;

  // Zero tensors of the right shapes.
  explicit DenoiserParams(const NetworkShape& s = {});
  // Weights ~ N(0, 1 / fan_in), zero biases.
  static DenoiserParams random(const NetworkShape& s, std::uint64_t seed);

  std::vector<Linear*> layers();
  std::vector<const Linear*> layers() const;
  std::vector<std::string> layer_names() const;
  Eigen::Index size() const;
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::Ref<const Eigen::VectorXd>& v);
};

// Cloud as 3 x N columns.
using CloudMatrix = Eigen::Matrix<double, 3, Eigen::Dynamic>;

inline constexpr int kMinCloudPoints = 64;

// Permutation invariant: every point goes through the same matrix-vector
// code path and max pooling is order independent, so a shuffled cloud gives a
// bit-identical feature.
Eigen::VectorXd encode_object(const CloudMatrix& cloud, const DenoiserParams& p);

// Sinusoidal embedding of integer steps: [sin(t w_i), cos(t w_i)] with
// w_i = 10000^(-i / (width / 2)).
Eigen::MatrixXd time_embedding(const std::vector<int>& t, int width);

// Predicted noise (grasp_dim x B) for noisy grasps h (grasp_dim x B), steps t
// and object features (feature_width x B).
Eigen::MatrixXd predict_noise(const DenoiserParams& p, const Eigen::MatrixXd& h, const std::vector<int>& t,
                              const Eigen::MatrixXd& features);

// One training example with its diffusion step and noise already drawn.
struct NoisyExample {
  Eigen::VectorXd h0;  // normalized grasp
  int cloud = 0;       // index into the cloud list
  int t = 1;
  Eigen::VectorXd eps;
};

// Noise predictor used by the loss: (h_t, t, cloud index) columns -> eps_hat.
using NoisePredictor =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& h_t, const std::vector<int>& t, const std::vector<int>& cloud)>;

// Mean over the batch of ||eps - eps_hat||^2, with h_t built from the
// cumulative products `alpha_bar` (index t - 1).
double noise_loss(const NoisePredictor& f, const Eigen::VectorXd& alpha_bar, const std::vector<NoisyExample>& batch);

// Same loss for the network, plus its parameter gradient when `grad` is set.
double noise_loss(const DenoiserParams& p, const std::vector<CloudMatrix>& clouds, const Eigen::VectorXd& alpha_bar,
                  const std::vector<NoisyExample>& batch, DenoiserParams* grad = nullptr);

}  // namespace bigrasp::diffusion
