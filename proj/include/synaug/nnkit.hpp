#pragma once

#include "synaug/rng.hpp"
#include "synaug/worldgen.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace synaug {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Non-finite value encountered while training or evaluating. The CLI maps it
/// to exit code 2.
class TrainingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct AffineLayer {
  Matrix weight; // out x in
  Vector bias;   // out

  std::size_t in() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out() const { return static_cast<std::size_t>(weight.rows()); }
  bool operator==(const AffineLayer& other) const {
    return weight.rows() == other.weight.rows() && weight.cols() == other.weight.cols() &&
           bias.size() == other.bias.size() && weight == other.weight && bias == other.bias;
  }
};

struct ArchSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{64, 64};
  int classes = 2;
};

/// Feature extractor f (affine + tanh layers) followed by a linear head g.
/// An empty extractor makes the model a plain linear classifier whose
/// embeddings are the raw inputs.
struct Model {
  std::vector<AffineLayer> extractor;
  AffineLayer head;

  std::size_t input_dim() const;
  std::size_t embedding_dim() const { return head.in(); }
  int classes() const { return static_cast<int>(head.out()); }
  void validate() const;
  bool operator==(const Model&) const = default;
};

/// Each weight and bias uniform in +-1/sqrt(fan_in).
Model init_model(const ArchSpec& arch, std::uint64_t seed);
AffineLayer init_affine(std::size_t in, std::size_t out, std::uint64_t seed);

Matrix feature_matrix(const Dataset& data);
Matrix one_hot_targets(const Dataset& data);
/// Rows must be nonnegative and sum to 1 within 1e-6.
void check_soft_targets(const Matrix& targets);

struct ForwardResult {
  Matrix embeddings; // batch x embedding_dim
  Matrix logits;     // batch x K
};

ForwardResult forward(const Model& model, const Matrix& features);
Matrix embed(const Model& model, const Matrix& features);

/// Mean over rows of -<t, log softmax(z)>, computed with log-sum-exp.
double cross_entropy(const Matrix& logits, const Matrix& targets);

struct Gradients {
  std::vector<AffineLayer> extractor;
  AffineLayer head;
};

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

LossAndGrads loss_and_grads(const Model& model, const Matrix& features,
                            const Matrix& targets);

// ---------------------------------------------------------------------------
// Mixup
// ---------------------------------------------------------------------------

struct MixupBatch {
  Matrix features;
  Matrix targets;
  double lambda = 1.0;
};

/// x~ = lambda x_i + (1 - lambda) x_j, same for targets, lambda ~ Beta(a, a).
MixupBatch mixup_batch(const Matrix& x_i, const Matrix& x_j, const Matrix& t_i,
                       const Matrix& t_j, double alpha, std::uint64_t seed);
MixupBatch mixup_with_lambda(const Matrix& x_i, const Matrix& x_j, const Matrix& t_i,
                             const Matrix& t_j, double lambda);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

enum class Sampler { Shuffle, ClassBalanced, GroupBalanced };

const char* to_string(Sampler sampler);
Sampler sampler_from_string(const std::string& name);

struct TrainConfig {
  int epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  /// 0 disables Mixup.
  double mixup_alpha = 1.0;
  Sampler sampler = Sampler::Shuffle;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Head-stage defaults derived from the main training config: 20 epochs, a
/// tenth of the learning rate, no momentum, no Mixup.
TrainConfig head_config(const TrainConfig& base);

struct TrainResult {
  Model model;
  std::vector<double> loss_trace; // one mean mini-batch loss per epoch
};

/// SGD with momentum over mini-batches of the whole network.
TrainResult train(Model model, const Dataset& data, const TrainConfig& config);

/// Updates only the head, starting from its current values. Mixup is never
/// applied. lr = 0 returns the model unchanged.
TrainResult finetune_head(Model model, const Dataset& data, const TrainConfig& config);

/// Reinitialises the head from config.seed, then proceeds as finetune_head.
TrainResult retrain_head(Model model, const Dataset& data, const TrainConfig& config);

/// Fits an affine layer to fixed inputs under softmax cross-entropy.
/// Shared by the head stages and the domain probe.
TrainResult fit_head(Model model, const Matrix& embeddings, const Dataset& labels,
                     const TrainConfig& config);

/// Draws indices so each class (or (class, group) cell) is equally likely,
/// uniformly within the cell, with replacement.
class BalancedSampler {
public:
  BalancedSampler(const Dataset& data, Sampler mode);
  std::size_t next(Rng& rng) const;
  std::size_t cells() const { return pools_.size(); }

private:
  std::vector<std::vector<std::size_t>> pools_;
};

std::vector<std::size_t> balanced_sampler(const Dataset& data, Sampler mode,
                                          std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Binary checkpoint, all integers and doubles little-endian:
///   magic "SYNAUGMD", u32 version (1), u32 layer count L (extractor layers + head),
///   then per layer: u32 out, u32 in, out*in f64 weights (row-major), out f64 biases.
/// The last layer is the head.
void save_model(const Model& model, std::ostream& out);
Model load_model(std::istream& in);

/// `epoch,loss` with epochs numbered from 1.
void write_loss_trace(std::span<const double> trace, std::ostream& out);

} // namespace synaug
