#include "synaug/nnkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace synaug {

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

std::size_t Model::input_dim() const {
  return extractor.empty() ? head.in() : extractor.front().in();
}

void Model::validate() const {
  std::size_t width = input_dim();
  auto check_layer = [&](const AffineLayer& layer, const char* what) {
    if (layer.in() != width || static_cast<std::size_t>(layer.bias.size()) != layer.out() ||
        layer.out() == 0) {
      throw ValidationError(std::string("Model: ") + what + " layer shapes do not chain");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw ValidationError(std::string("Model: non-finite ") + what + " parameter");
    }
    width = layer.out();
  };
  for (const auto& layer : extractor) {
    check_layer(layer, "extractor");
  }
  check_layer(head, "head");
}

AffineLayer init_affine(std::size_t in, std::size_t out, std::uint64_t seed) {
  if (in == 0 || out == 0) {
    throw ValidationError("init_affine: layer sizes must be positive");
  }
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  AffineLayer layer{Matrix(out, in), Vector(out)};
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      layer.weight(r, c) = rng.uniform(-bound, bound);
    }
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
    layer.bias(r) = rng.uniform(-bound, bound);
  }
  return layer;
}

Model init_model(const ArchSpec& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.classes < 1) {
    throw ValidationError("init_model: input_dim and classes must be positive");
  }
  Model model;
  std::size_t width = arch.input_dim;
  for (std::size_t i = 0; i < arch.hidden.size(); ++i) {
    if (arch.hidden[i] == 0) {
      throw ValidationError("init_model: hidden layer " + std::to_string(i) + " has size 0");
    }
    model.extractor.push_back(
        init_affine(width, arch.hidden[i], derive_seed(seed, "layer", i)));
    width = arch.hidden[i];
  }
  model.head = init_affine(width, static_cast<std::size_t>(arch.classes),
                           derive_seed(seed, "head"));
  return model;
}

// ---------------------------------------------------------------------------
// Forward / loss
// ---------------------------------------------------------------------------

Matrix feature_matrix(const Dataset& data) {
  Matrix x(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.dim()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i].features[j];
    }
  }
  return x;
}

Matrix one_hot_targets(const Dataset& data) {
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(data.size()), data.classes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    t(static_cast<Eigen::Index>(i), data[i].class_label) = 1.0;
  }
  return t;
}

void check_soft_targets(const Matrix& targets) {
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    if ((targets.row(r).array() < 0.0).any() ||
        std::abs(targets.row(r).sum() - 1.0) > 1e-6) {
      throw ValidationError("soft target row " + std::to_string(r) +
                            " is not a probability vector");
    }
  }
}

namespace {

void check_input(const Model& model, const Matrix& features) {
  if (static_cast<std::size_t>(features.cols()) != model.input_dim()) {
    throw ValidationError("feature dimension " + std::to_string(features.cols()) +
                          " does not match model input " +
                          std::to_string(model.input_dim()));
  }
}

Matrix affine(const AffineLayer& layer, const Matrix& x) {
  Matrix z = x * layer.weight.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

/// Row-wise log-sum-exp.
Vector log_sum_exp(const Matrix& logits) {
  Vector out(logits.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out(r) = m + std::log((logits.row(r).array() - m).exp().sum());
  }
  return out;
}

Matrix softmax(const Matrix& logits, const Vector& lse) {
  Matrix p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p.row(r) = (p.row(r).array() - lse(r)).exp();
  }
  return p;
}

double ce_from_lse(const Matrix& logits, const Matrix& targets, const Vector& lse) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    total += targets.row(r).sum() * lse(r) - targets.row(r).dot(logits.row(r));
  }
  return total / static_cast<double>(logits.rows());
}

struct HeadStep {
  double loss;
  AffineLayer grad;
  Matrix d_embeddings;
};

/// Loss and head gradient for fixed embeddings; d_embeddings only when asked.
HeadStep head_step(const AffineLayer& head, const Matrix& emb, const Matrix& targets,
                   bool want_input_grad) {
  const Matrix logits = affine(head, emb);
  if (!logits.allFinite()) {
    throw TrainingError("non-finite logits (max |input| = " +
                        std::to_string(emb.cwiseAbs().maxCoeff()) + ")");
  }
  const Vector lse = log_sum_exp(logits);
  const double loss = ce_from_lse(logits, targets, lse);
  if (!std::isfinite(loss)) {
    throw TrainingError("non-finite loss (max |logit| = " +
                        std::to_string(logits.cwiseAbs().maxCoeff()) + ")");
  }
  Matrix dz = softmax(logits, lse);
  dz.array().colwise() *= targets.rowwise().sum().array();
  dz -= targets;
  dz /= static_cast<double>(emb.rows());
  HeadStep step{loss, {dz.transpose() * emb, dz.colwise().sum().transpose()}, {}};
  if (want_input_grad) {
    step.d_embeddings = dz * head.weight;
  }
  return step;
}

} // namespace

Matrix embed(const Model& model, const Matrix& features) {
  check_input(model, features);
  Matrix h = features;
  for (const auto& layer : model.extractor) {
    h = affine(layer, h).array().tanh().matrix();
  }
  return h;
}

ForwardResult forward(const Model& model, const Matrix& features) {
  ForwardResult out;
  out.embeddings = embed(model, features);
  out.logits = affine(model.head, out.embeddings);
  return out;
}

double cross_entropy(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw ValidationError("cross_entropy: shape mismatch");
  }
  return ce_from_lse(logits, targets, log_sum_exp(logits));
}

LossAndGrads loss_and_grads(const Model& model, const Matrix& features,
                            const Matrix& targets) {
  check_input(model, features);
  if (features.rows() == 0) {
    throw ValidationError("loss_and_grads: empty batch");
  }
  if (targets.rows() != features.rows() || targets.cols() != model.classes()) {
    throw ValidationError("loss_and_grads: target shape mismatch");
  }
  std::vector<Matrix> activations{features};
  for (const auto& layer : model.extractor) {
    activations.push_back(affine(layer, activations.back()).array().tanh().matrix());
  }
  HeadStep step = head_step(model.head, activations.back(), targets, true);

  LossAndGrads out;
  out.loss = step.loss;
  out.grads.head = std::move(step.grad);
  out.grads.extractor.resize(model.extractor.size());
  Matrix upstream = std::move(step.d_embeddings);
  for (std::size_t l = model.extractor.size(); l-- > 0;) {
    const Matrix& h = activations[l + 1];
    const Matrix da = (upstream.array() * (1.0 - h.array().square())).matrix();
    out.grads.extractor[l].weight = da.transpose() * activations[l];
    out.grads.extractor[l].bias = da.colwise().sum().transpose();
    if (l > 0) {
      upstream = da * model.extractor[l].weight;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mixup
// ---------------------------------------------------------------------------

MixupBatch mixup_with_lambda(const Matrix& x_i, const Matrix& x_j, const Matrix& t_i,
                             const Matrix& t_j, double lambda) {
  if (x_i.rows() != x_j.rows() || x_i.cols() != x_j.cols() || t_i.rows() != t_j.rows() ||
      t_i.cols() != t_j.cols() || x_i.rows() != t_i.rows()) {
    throw ValidationError("mixup: shape mismatch");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError("mixup: lambda must lie in [0, 1]");
  }
  if (lambda == 1.0) {
    return {x_i, t_i, 1.0};
  }
  return {lambda * x_i + (1.0 - lambda) * x_j, lambda * t_i + (1.0 - lambda) * t_j, lambda};
}

MixupBatch mixup_batch(const Matrix& x_i, const Matrix& x_j, const Matrix& t_i,
                       const Matrix& t_j, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) {
    throw ValidationError("mixup: alpha must be positive");
  }
  Rng rng(seed);
  return mixup_with_lambda(x_i, x_j, t_i, t_j, rng.beta(alpha, alpha));
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

const char* to_string(Sampler sampler) {
  switch (sampler) {
  case Sampler::Shuffle:
    return "shuffle";
  case Sampler::ClassBalanced:
    return "class_balanced";
  case Sampler::GroupBalanced:
    return "group_balanced";
  }
  return "shuffle";
}

Sampler sampler_from_string(const std::string& name) {
  if (name == "shuffle") {
    return Sampler::Shuffle;
  }
  if (name == "class_balanced") {
    return Sampler::ClassBalanced;
  }
  if (name == "group_balanced") {
    return Sampler::GroupBalanced;
  }
  throw ValidationError("unknown sampler '" + name +
                        "' (expected shuffle, class_balanced, group_balanced)");
}

void TrainConfig::validate() const {
  if (epochs < 1) {
    throw ValidationError("TrainConfig: epochs must be >= 1");
  }
  if (batch_size < 1) {
    throw ValidationError("TrainConfig: batch_size must be >= 1");
  }
  // lr = 0 is allowed so a run can be checked for being a no-op.
  if (!(learning_rate >= 0.0)) {
    throw ValidationError("TrainConfig: learning_rate must be >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ValidationError("TrainConfig: momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) {
    throw ValidationError("TrainConfig: weight_decay must be >= 0");
  }
  if (!(mixup_alpha >= 0.0)) {
    throw ValidationError("TrainConfig: mixup_alpha must be >= 0");
  }
}

TrainConfig head_config(const TrainConfig& base) {
  TrainConfig cfg = base;
  cfg.epochs = 20;
  cfg.learning_rate = 0.1 * base.learning_rate;
  cfg.momentum = 0.0;
  cfg.mixup_alpha = 0.0;
  return cfg;
}

BalancedSampler::BalancedSampler(const Dataset& data, Sampler mode) {
  if (mode == Sampler::Shuffle) {
    throw ValidationError("BalancedSampler: mode must be class- or group-balanced");
  }
  std::map<CellKey, std::vector<std::size_t>> by_key;
  for (int c = 0; c < data.classes(); ++c) {
    if (mode == Sampler::ClassBalanced) {
      by_key[{c, 0}];
    } else {
      for (int g = 0; g < data.group_slots(); ++g) {
        by_key[{c, g}];
      }
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    CellKey key = cell_of(data[i]);
    if (mode == Sampler::ClassBalanced) {
      key.second = 0;
    }
    by_key[key].push_back(i);
  }
  for (auto& [key, pool] : by_key) {
    if (pool.empty()) {
      throw ValidationError("BalancedSampler: cell (" + std::to_string(key.first) + ", " +
                            std::to_string(key.second) + ") is empty");
    }
    pools_.push_back(std::move(pool));
  }
}

std::size_t BalancedSampler::next(Rng& rng) const {
  const auto& pool = pools_[rng.below(pools_.size())];
  return pool[rng.below(pool.size())];
}

std::vector<std::size_t> balanced_sampler(const Dataset& data, Sampler mode,
                                          std::size_t count, std::uint64_t seed) {
  BalancedSampler sampler(data, mode);
  Rng rng(seed);
  std::vector<std::size_t> out(count);
  for (auto& i : out) {
    i = sampler.next(rng);
  }
  return out;
}

namespace {

void sgd_update(Matrix& param, Matrix& grad, Matrix& velocity, const TrainConfig& cfg) {
  grad += cfg.weight_decay * param;
  velocity = cfg.momentum * velocity + grad;
  param -= cfg.learning_rate * velocity;
}

void sgd_update(Vector& param, Vector& grad, Vector& velocity, const TrainConfig& cfg) {
  grad += cfg.weight_decay * param;
  velocity = cfg.momentum * velocity + grad;
  param -= cfg.learning_rate * velocity;
}

AffineLayer zeros_like(const AffineLayer& layer) {
  return {Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
          Vector::Zero(layer.bias.size())};
}

/// Epoch visiting order: a permutation, or n balanced draws with replacement.
class EpochOrder {
public:
  EpochOrder(const Dataset& data, Sampler mode, std::uint64_t seed)
      : n_(data.size()), rng_(seed) {
    if (mode != Sampler::Shuffle) {
      sampler_.emplace(data, mode);
    }
  }

  std::vector<std::size_t> next_epoch() {
    std::vector<std::size_t> order(n_);
    if (sampler_) {
      for (auto& i : order) {
        i = sampler_->next(rng_);
      }
    } else {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng_.shuffle(std::span<std::size_t>(order));
    }
    return order;
  }

private:
  std::size_t n_;
  Rng rng_;
  std::optional<BalancedSampler> sampler_;
};

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

[[noreturn]] void rethrow_with_context(const TrainingError& e, const char* stage, int epoch,
                                       std::size_t batch) {
  throw TrainingError(std::string(stage) + " diverged at epoch " + std::to_string(epoch + 1) +
                      ", batch " + std::to_string(batch) + ": " + e.what());
}

} // namespace

TrainResult train(Model model, const Dataset& data, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (data.empty()) {
    throw ValidationError("train: empty dataset");
  }
  const Matrix x = feature_matrix(data);
  const Matrix t = one_hot_targets(data);
  check_input(model, x);

  Gradients velocity{{}, zeros_like(model.head)};
  for (const auto& layer : model.extractor) {
    velocity.extractor.push_back(zeros_like(layer));
  }
  EpochOrder order(data, config.sampler, derive_seed(config.seed, "train-order"));
  Rng mix_rng(derive_seed(config.seed, "train-mixup"));

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto idx = order.next_epoch();
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < idx.size(); start += config.batch_size, ++batch_no) {
      const std::size_t len = std::min(config.batch_size, idx.size() - start);
      const std::span<const std::size_t> rows(idx.data() + start, len);
      Matrix xb = gather_rows(x, rows);
      Matrix tb = gather_rows(t, rows);
      if (config.mixup_alpha > 0.0) {
        // Pairing ignores origin: partners are a random permutation of the batch.
        std::vector<std::size_t> perm(len);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        mix_rng.shuffle(std::span<std::size_t>(perm));
        const double lambda = mix_rng.beta(config.mixup_alpha, config.mixup_alpha);
        auto mixed =
            mixup_with_lambda(xb, gather_rows(xb, perm), tb, gather_rows(tb, perm), lambda);
        xb = std::move(mixed.features);
        tb = std::move(mixed.targets);
      }
      LossAndGrads lg;
      try {
        lg = loss_and_grads(model, xb, tb);
      } catch (const TrainingError& e) {
        rethrow_with_context(e, "train", epoch, batch_no);
      }
      loss_sum += lg.loss * static_cast<double>(len);
      for (std::size_t l = 0; l < model.extractor.size(); ++l) {
        sgd_update(model.extractor[l].weight, lg.grads.extractor[l].weight,
                   velocity.extractor[l].weight, config);
        sgd_update(model.extractor[l].bias, lg.grads.extractor[l].bias,
                   velocity.extractor[l].bias, config);
      }
      sgd_update(model.head.weight, lg.grads.head.weight, velocity.head.weight, config);
      sgd_update(model.head.bias, lg.grads.head.bias, velocity.head.bias, config);
    }
    result.loss_trace.push_back(loss_sum / static_cast<double>(idx.size()));
  }
  result.model = std::move(model);
  return result;
}

TrainResult fit_head(Model model, const Matrix& embeddings, const Dataset& labels,
                     const TrainConfig& config) {
  config.validate();
  if (labels.empty()) {
    throw ValidationError("fit_head: empty dataset");
  }
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size() ||
      static_cast<std::size_t>(embeddings.cols()) != model.embedding_dim()) {
    throw ValidationError("fit_head: embedding shape mismatch");
  }
  if (labels.classes() != model.classes()) {
    throw ValidationError("fit_head: class count mismatch");
  }
  const Matrix t = one_hot_targets(labels);
  AffineLayer velocity = zeros_like(model.head);
  EpochOrder order(labels, config.sampler, derive_seed(config.seed, "head-order"));

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto idx = order.next_epoch();
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < idx.size(); start += config.batch_size, ++batch_no) {
      const std::size_t len = std::min(config.batch_size, idx.size() - start);
      const std::span<const std::size_t> rows(idx.data() + start, len);
      HeadStep step{};
      try {
        step = head_step(model.head, gather_rows(embeddings, rows), gather_rows(t, rows), false);
      } catch (const TrainingError& e) {
        rethrow_with_context(e, "head fit", epoch, batch_no);
      }
      loss_sum += step.loss * static_cast<double>(len);
      sgd_update(model.head.weight, step.grad.weight, velocity.weight, config);
      sgd_update(model.head.bias, step.grad.bias, velocity.bias, config);
    }
    result.loss_trace.push_back(loss_sum / static_cast<double>(idx.size()));
  }
  result.model = std::move(model);
  return result;
}

TrainResult finetune_head(Model model, const Dataset& data, const TrainConfig& config) {
  model.validate();
  if (data.empty()) {
    throw ValidationError("finetune_head: empty dataset");
  }
  TrainConfig cfg = config;
  cfg.mixup_alpha = 0.0;
  const Matrix emb = embed(model, feature_matrix(data));
  return fit_head(std::move(model), emb, data, cfg);
}

TrainResult retrain_head(Model model, const Dataset& data, const TrainConfig& config) {
  model.validate();
  model.head = init_affine(model.embedding_dim(), static_cast<std::size_t>(model.classes()),
                           derive_seed(config.seed, "head-reinit"));
  return finetune_head(std::move(model), data, config);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<char, 8> kMagic{'S', 'Y', 'N', 'A', 'U', 'G', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) {
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ValidationError("load_model: truncated checkpoint");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  }
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw ValidationError("load_model: truncated checkpoint");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

void put_layer(std::ostream& out, const AffineLayer& layer) {
  put_u32(out, static_cast<std::uint32_t>(layer.out()));
  put_u32(out, static_cast<std::uint32_t>(layer.in()));
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      put_f64(out, layer.weight(r, c));
    }
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
    put_f64(out, layer.bias(r));
  }
}

AffineLayer get_layer(std::istream& in) {
  const std::uint32_t out = get_u32(in);
  const std::uint32_t inputs = get_u32(in);
  if (out == 0 || inputs == 0 || out > (1u << 20) || inputs > (1u << 20)) {
    throw ValidationError("load_model: implausible layer shape");
  }
  AffineLayer layer{Matrix(out, inputs), Vector(out)};
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      layer.weight(r, c) = get_f64(in);
    }
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
    layer.bias(r) = get_f64(in);
  }
  return layer;
}

} // namespace

void save_model(const Model& model, std::ostream& out) {
  model.validate();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(model.extractor.size() + 1));
  for (const auto& layer : model.extractor) {
    put_layer(out, layer);
  }
  put_layer(out, model.head);
}

Model load_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ValidationError("load_model: not a model checkpoint");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw ValidationError("load_model: unsupported version " + std::to_string(version));
  }
  const std::uint32_t layers = get_u32(in);
  if (layers == 0 || layers > 1024) {
    throw ValidationError("load_model: implausible layer count");
  }
  Model model;
  for (std::uint32_t i = 0; i + 1 < layers; ++i) {
    model.extractor.push_back(get_layer(in));
  }
  model.head = get_layer(in);
  model.validate();
  return model;
}

void write_loss_trace(std::span<const double> trace, std::ostream& out) {
  out << "epoch,loss\n";
  char buf[32];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", trace[i]);
    out << (i + 1) << ',' << buf << '\n';
  }
}

} // namespace synaug
