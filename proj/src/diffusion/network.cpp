#include "bigrasp/diffusion/network.hpp"

#include <cmath>
#include <random>

#include "bigrasp/common/error.hpp"
#include "bigrasp/common/rng.hpp"

namespace bigrasp::diffusion {

void NetworkShape::validate() const {
  if (grasp_dim < 1 || feature_width < 1 || hidden_width < 1 || point_width < 1 || pool_width < 1)
    throw Error("network: layer widths must be positive");
  if (time_width < 2 || time_width % 2 != 0) throw Error("network: time embedding width must be even and >= 2");
  if (blocks < 0) throw Error("network: block count must be nonnegative");
}

DenoiserParams::DenoiserParams(const NetworkShape& s)
    : shape(s),
      point1(3, s.point_width),
      point2(s.point_width, s.pool_width),
      project(s.pool_width, s.feature_width),
      input(s.grasp_dim + s.time_width + s.feature_width, s.hidden_width),
      output(s.hidden_width, s.grasp_dim) {
  s.validate();
  for (int k = 0; k < s.blocks; ++k) {
    block_a.emplace_back(s.hidden_width, s.hidden_width);
    block_b.emplace_back(s.hidden_width, s.hidden_width);
  }
}

DenoiserParams DenoiserParams::random(const NetworkShape& s, std::uint64_t seed) {
  DenoiserParams p(s);
  Rng rng = make_rng(seed, {0x5eed});
  for (Linear* l : p.layers()) {
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(l->in())));
    for (Eigen::Index j = 0; j < l->w.cols(); ++j)
      for (Eigen::Index i = 0; i < l->w.rows(); ++i) l->w(i, j) = n(rng);
  }
  return p;
}

std::vector<Linear*> DenoiserParams::layers() {
  std::vector<Linear*> out{&point1, &point2, &project, &input};
  for (std::size_t k = 0; k < block_a.size(); ++k) {
    out.push_back(&block_a[k]);
    out.push_back(&block_b[k]);
  }
  out.push_back(&output);
  return out;
}

std::vector<const Linear*> DenoiserParams::layers() const {
  std::vector<const Linear*> out;
  for (Linear* l : const_cast<DenoiserParams*>(this)->layers()) out.push_back(l);
  return out;
}

std::vector<std::string> DenoiserParams::layer_names() const {
  std::vector<std::string> out{"point1", "point2", "project", "input"};
  for (std::size_t k = 0; k < block_a.size(); ++k) {
    out.push_back("block" + std::to_string(k) + "a");
    out.push_back("block" + std::to_string(k) + "b");
  }
  out.push_back("output");
  return out;
}

Eigen::Index DenoiserParams::size() const {
  Eigen::Index n = 0;
  for (const Linear* l : layers()) n += l->w.size() + l->b.size();
  return n;
}

Eigen::VectorXd DenoiserParams::pack() const {
  Eigen::VectorXd v(size());
  Eigen::Index o = 0;
  for (const Linear* l : layers()) {
    v.segment(o, l->w.size()) = l->w.reshaped();
    o += l->w.size();
    v.segment(o, l->b.size()) = l->b;
    o += l->b.size();
  }
  return v;
}

void DenoiserParams::unpack(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != size()) throw Error("network: parameter vector has the wrong size");
  Eigen::Index o = 0;
  for (Linear* l : layers()) {
    l->w.reshaped() = v.segment(o, l->w.size());
    o += l->w.size();
    l->b = v.segment(o, l->b.size());
    o += l->b.size();
  }
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double silu(double z) { return z * sigmoid(z); }
double silu_grad(double z) {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

Eigen::MatrixXd silu(const Eigen::MatrixXd& z) { return z.unaryExpr([](double x) { return silu(x); }); }
Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& z) { return z.unaryExpr([](double x) { return silu_grad(x); }); }

Eigen::MatrixXd affine(const Linear& l, const Eigen::MatrixXd& x) { return (l.w * x).colwise() + l.b; }

void accumulate(Linear& g, const Eigen::MatrixXd& dy, const Eigen::MatrixXd& x) {
  g.w.noalias() += dy * x.transpose();
  g.b += dy.rowwise().sum();
}

// Per-point forward pass with everything the backward pass needs.
struct EncoderTape {
  Eigen::MatrixXd z1, z2;  // pre-activations, one column per point
  Eigen::VectorXd pooled;
  std::vector<Eigen::Index> argmax;  // per pooled channel
  Eigen::VectorXd feature;
};

EncoderTape encode_forward(const CloudMatrix& cloud, const DenoiserParams& p) {
  if (cloud.cols() < kMinCloudPoints)
    throw Error("encoder: need at least " + std::to_string(kMinCloudPoints) + " points, got " +
                std::to_string(cloud.cols()));
  const Eigen::Index n = cloud.cols();
  EncoderTape t;
  t.z1.resize(p.point1.out(), n);
  t.z2.resize(p.point2.out(), n);
  Eigen::VectorXd a1(p.point1.out());
  for (Eigen::Index j = 0; j < n; ++j) {
    t.z1.col(j).noalias() = p.point1.w * cloud.col(j);
    t.z1.col(j) += p.point1.b;
    a1 = t.z1.col(j).unaryExpr([](double x) { return silu(x); });
    t.z2.col(j).noalias() = p.point2.w * a1;
    t.z2.col(j) += p.point2.b;
  }
  const Eigen::Index c = t.z2.rows();
  t.pooled.resize(c);
  t.argmax.assign(static_cast<std::size_t>(c), 0);
  for (Eigen::Index k = 0; k < c; ++k) {
    double best = silu(t.z2(k, 0));
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
      const double v = silu(t.z2(k, j));
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    t.pooled[k] = best;
    t.argmax[static_cast<std::size_t>(k)] = arg;
  }
  t.feature = p.project.w * t.pooled + p.project.b;
  return t;
}

void encode_backward(const CloudMatrix& cloud, const DenoiserParams& p, const EncoderTape& t,
                     const Eigen::VectorXd& d_feature, DenoiserParams& g) {
  g.project.w.noalias() += d_feature * t.pooled.transpose();
  g.project.b += d_feature;
  const Eigen::VectorXd d_pooled = p.project.w.transpose() * d_feature;
  // Gradient reaches only the points that won a channel.
  Eigen::MatrixXd d_z2 = Eigen::MatrixXd::Zero(t.z2.rows(), t.z2.cols());
  for (Eigen::Index k = 0; k < t.z2.rows(); ++k) {
    const Eigen::Index j = t.argmax[static_cast<std::size_t>(k)];
    d_z2(k, j) += d_pooled[k] * silu_grad(t.z2(k, j));
  }
  for (Eigen::Index j = 0; j < cloud.cols(); ++j) {
    if (d_z2.col(j).isZero(0.0)) continue;
    const Eigen::VectorXd a1 = t.z1.col(j).unaryExpr([](double x) { return silu(x); });
    g.point2.w.noalias() += d_z2.col(j) * a1.transpose();
    g.point2.b += d_z2.col(j);
    const Eigen::VectorXd d_z1 =
        (p.point2.w.transpose() * d_z2.col(j)).cwiseProduct(t.z1.col(j).unaryExpr([](double x) { return silu_grad(x); }));
    g.point1.w.noalias() += d_z1 * cloud.col(j).transpose();
    g.point1.b += d_z1;
  }
}

struct PredictorTape {
  Eigen::MatrixXd u0;             // stacked input
  std::vector<Eigen::MatrixXd> x;  // residual stream, blocks + 1 entries
  std::vector<Eigen::MatrixXd> y;  // inner pre-activations
  Eigen::MatrixXd out;
};

PredictorTape predict_forward(const DenoiserParams& p, const Eigen::MatrixXd& h, const std::vector<int>& t,
                              const Eigen::MatrixXd& features) {
  const NetworkShape& s = p.shape;
  const Eigen::Index batch = h.cols();
  if (h.rows() != s.grasp_dim || features.rows() != s.feature_width || features.cols() != batch ||
      static_cast<Eigen::Index>(t.size()) != batch)
    throw Error("network: input shapes do not match the network");
  PredictorTape tape;
  tape.u0.resize(s.grasp_dim + s.time_width + s.feature_width, batch);
  tape.u0.topRows(s.grasp_dim) = h;
  tape.u0.middleRows(s.grasp_dim, s.time_width) = time_embedding(t, s.time_width);
  tape.u0.bottomRows(s.feature_width) = features;
  tape.x.push_back(affine(p.input, tape.u0));
  for (std::size_t k = 0; k < p.block_a.size(); ++k) {
    tape.y.push_back(affine(p.block_a[k], silu(tape.x.back())));
    tape.x.push_back(tape.x.back() + affine(p.block_b[k], silu(tape.y.back())));
  }
  tape.out = affine(p.output, silu(tape.x.back()));
  return tape;
}

// Returns the gradient with respect to the feature rows of the input.
Eigen::MatrixXd predict_backward(const DenoiserParams& p, const PredictorTape& tape, const Eigen::MatrixXd& d_out,
                                 DenoiserParams& g) {
  accumulate(g.output, d_out, silu(tape.x.back()));
  Eigen::MatrixXd dx = (p.output.w.transpose() * d_out).cwiseProduct(silu_grad(tape.x.back()));
  for (std::size_t k = p.block_a.size(); k-- > 0;) {
    const Eigen::MatrixXd s = silu(tape.y[k]);
    accumulate(g.block_b[k], dx, s);
    const Eigen::MatrixXd dy = (p.block_b[k].w.transpose() * dx).cwiseProduct(silu_grad(tape.y[k]));
    accumulate(g.block_a[k], dy, silu(tape.x[k]));
    dx += (p.block_a[k].w.transpose() * dy).cwiseProduct(silu_grad(tape.x[k]));
  }
  accumulate(g.input, dx, tape.u0);
  const Eigen::MatrixXd du0 = p.input.w.transpose() * dx;
  return du0.bottomRows(p.shape.feature_width);
}

Eigen::MatrixXd noisy_inputs(const Eigen::VectorXd& alpha_bar, const std::vector<NoisyExample>& batch, int dim) {
  Eigen::MatrixXd h(dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const NoisyExample& e = batch[b];
    if (e.t < 1 || e.t > alpha_bar.size()) throw Error("loss: diffusion step out of range");
    if (e.h0.size() != dim || e.eps.size() != dim) throw Error("loss: example has the wrong dimension");
    const double ab = alpha_bar[e.t - 1];
    h.col(static_cast<Eigen::Index>(b)) = std::sqrt(ab) * e.h0 + std::sqrt(1.0 - ab) * e.eps;
  }
  return h;
}

}  // namespace

Eigen::VectorXd encode_object(const CloudMatrix& cloud, const DenoiserParams& p) {
  return encode_forward(cloud, p).feature;
}

Eigen::MatrixXd time_embedding(const std::vector<int>& t, int width) {
  const int half = width / 2;
  Eigen::MatrixXd e(width, static_cast<Eigen::Index>(t.size()));
  for (std::size_t b = 0; b < t.size(); ++b) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
      e(i, static_cast<Eigen::Index>(b)) = std::sin(t[b] * freq);
      e(half + i, static_cast<Eigen::Index>(b)) = std::cos(t[b] * freq);
    }
  }
  return e;
}

Eigen::MatrixXd predict_noise(const DenoiserParams& p, const Eigen::MatrixXd& h, const std::vector<int>& t,
                              const Eigen::MatrixXd& features) {
  return predict_forward(p, h, t, features).out;
}

double noise_loss(const NoisePredictor& f, const Eigen::VectorXd& alpha_bar, const std::vector<NoisyExample>& batch) {
  if (batch.empty()) throw Error("loss: empty batch");
  const int dim = static_cast<int>(batch.front().h0.size());
  const Eigen::MatrixXd h = noisy_inputs(alpha_bar, batch, dim);
  std::vector<int> t, cloud;
  for (const NoisyExample& e : batch) {
    t.push_back(e.t);
    cloud.push_back(e.cloud);
  }
  const Eigen::MatrixXd eps_hat = f(h, t, cloud);
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b)
    sum += (batch[b].eps - eps_hat.col(static_cast<Eigen::Index>(b))).squaredNorm();
  return sum / static_cast<double>(batch.size());
}

double noise_loss(const DenoiserParams& p, const std::vector<CloudMatrix>& clouds, const Eigen::VectorXd& alpha_bar,
                  const std::vector<NoisyExample>& batch, DenoiserParams* grad) {
  if (batch.empty()) throw Error("loss: empty batch");
  const int dim = p.shape.grasp_dim;
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());

  // Each cloud is encoded once per batch.
  std::vector<EncoderTape> tapes(clouds.size());
  std::vector<char> used(clouds.size(), 0);
  for (const NoisyExample& e : batch) {
    if (e.cloud < 0 || e.cloud >= static_cast<int>(clouds.size())) throw Error("loss: cloud index out of range");
    if (!used[static_cast<std::size_t>(e.cloud)]) {
      tapes[static_cast<std::size_t>(e.cloud)] = encode_forward(clouds[static_cast<std::size_t>(e.cloud)], p);
      used[static_cast<std::size_t>(e.cloud)] = 1;
    }
  }
  Eigen::MatrixXd features(p.shape.feature_width, n);
  std::vector<int> t;
  for (Eigen::Index b = 0; b < n; ++b) {
    const NoisyExample& e = batch[static_cast<std::size_t>(b)];
    features.col(b) = tapes[static_cast<std::size_t>(e.cloud)].feature;
    t.push_back(e.t);
  }
  const Eigen::MatrixXd h = noisy_inputs(alpha_bar, batch, dim);
  const PredictorTape tape = predict_forward(p, h, t, features);

  Eigen::MatrixXd eps(dim, n);
  for (Eigen::Index b = 0; b < n; ++b) eps.col(b) = batch[static_cast<std::size_t>(b)].eps;
  const Eigen::MatrixXd diff = tape.out - eps;
  const double loss = diff.squaredNorm() / static_cast<double>(n);
  if (!grad) return loss;

  *grad = DenoiserParams(p.shape);
  const Eigen::MatrixXd d_out = diff * (2.0 / static_cast<double>(n));
  const Eigen::MatrixXd d_features = predict_backward(p, tape, d_out, *grad);
  std::vector<Eigen::VectorXd> d_cloud(clouds.size());
  for (Eigen::Index b = 0; b < n; ++b) {
    const std::size_t c = static_cast<std::size_t>(batch[static_cast<std::size_t>(b)].cloud);
    if (d_cloud[c].size() == 0) d_cloud[c] = Eigen::VectorXd::Zero(p.shape.feature_width);
    d_cloud[c] += d_features.col(b);
  }
  for (std::size_t c = 0; c < clouds.size(); ++c)
    if (used[c]) encode_backward(clouds[c], p, tapes[c], d_cloud[c], *grad);
  return loss;
}

}  // namespace bigrasp::diffusion
