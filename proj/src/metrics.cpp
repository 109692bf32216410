#include "synaug/metrics.hpp"

#include "synaug/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace synaug {

std::vector<int> predict(const Model& model, const Matrix& features) {
  const Matrix logits = forward(model, features).logits;
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(r, k) > logits(r, best)) {
        best = k;
      }
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const Model& model, const Dataset& data) {
  return predict(model, feature_matrix(data));
}

double accuracy(const Model& model, const Dataset& data) {
  if (data.empty()) {
    throw ValidationError("accuracy: empty dataset");
  }
  const auto pred = predict(model, data);
  long hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    hits += pred[i] == data[i].class_label;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

std::vector<double> class_accuracy(const Dataset& data, std::span<const int> pred) {
  std::vector<long> hits(static_cast<std::size_t>(data.classes()), 0);
  std::vector<long> totals(hits.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto c = static_cast<std::size_t>(data[i].class_label);
    ++totals[c];
    hits[c] += pred[i] == data[i].class_label;
  }
  std::vector<double> out(hits.size(), 0.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    // Classes missing from the evaluation set score NaN, never a silent zero.
    out[c] = totals[c] ? static_cast<double>(hits[c]) / static_cast<double>(totals[c])
                       : std::nan("");
  }
  return out;
}

} // namespace

std::vector<double> per_class_accuracy(const Model& model, const Dataset& data) {
  return class_accuracy(data, predict(model, data));
}

Shot shot_bucket(long train_count) {
  if (train_count > 100) {
    return Shot::Many;
  }
  if (train_count >= 20) {
    return Shot::Medium;
  }
  return Shot::Few;
}

ShotSplit shot_split_from_class_accuracy(std::span<const double> class_accuracy,
                                         std::span<const long> train_counts) {
  if (class_accuracy.size() != train_counts.size()) {
    throw ValidationError("shot_split_accuracy: train_counts length must equal K");
  }
  double sum[3] = {0, 0, 0};
  int n[3] = {0, 0, 0};
  for (std::size_t c = 0; c < train_counts.size(); ++c) {
    if (std::isnan(class_accuracy[c])) {
      continue;
    }
    const auto b = static_cast<int>(shot_bucket(train_counts[c]));
    sum[b] += class_accuracy[c];
    ++n[b];
  }
  auto mean = [&](int b) -> std::optional<double> {
    return n[b] ? std::optional<double>(sum[b] / n[b]) : std::nullopt;
  };
  return {mean(0), mean(1), mean(2)};
}

ShotSplit shot_split_accuracy(const Model& model, const Dataset& test,
                              std::span<const long> train_counts) {
  if (train_counts.size() != static_cast<std::size_t>(test.classes())) {
    throw ValidationError("shot_split_accuracy: train_counts length must equal K");
  }
  const auto acc = per_class_accuracy(model, test);
  return shot_split_from_class_accuracy(acc, train_counts);
}

GroupAccuracy group_accuracy_from_predictions(const Dataset& data,
                                              std::span<const int> predictions,
                                              GroupBy by) {
  if (data.groups() == 0) {
    throw ValidationError("group_accuracy: dataset has no group labels");
  }
  const int slots = by == GroupBy::Group ? data.groups() : data.classes() * data.groups();
  std::vector<long> hits(static_cast<std::size_t>(slots), 0);
  std::vector<long> totals(hits.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int g = *data[i].group_label;
    const auto slot = static_cast<std::size_t>(
        by == GroupBy::Group ? g : data[i].class_label * data.groups() + g);
    ++totals[slot];
    hits[slot] += predictions[i] == data[i].class_label;
  }
  GroupAccuracy out;
  for (std::size_t s = 0; s < totals.size(); ++s) {
    if (totals[s] == 0) {
      throw ValidationError("group_accuracy: group " + std::to_string(s) + " is empty");
    }
    out.per_group.push_back(static_cast<double>(hits[s]) / static_cast<double>(totals[s]));
  }
  out.worst = *std::min_element(out.per_group.begin(), out.per_group.end());
  double sum = 0.0;
  for (double a : out.per_group) {
    sum += a;
  }
  out.mean = sum / static_cast<double>(out.per_group.size());
  return out;
}

GroupAccuracy group_accuracy(const Model& model, const Dataset& data, GroupBy by) {
  return group_accuracy_from_predictions(data, predict(model, data), by);
}

Fairness fairness_from_predictions(const Dataset& data, std::span<const int> predictions,
                                   int positive_class) {
  if (data.classes() != 2) {
    throw ValidationError("fairness_metrics: binary classes required");
  }
  if (data.groups() < 2) {
    throw ValidationError("fairness_metrics: at least 2 groups required");
  }
  if (positive_class != 0 && positive_class != 1) {
    throw ValidationError("fairness_metrics: positive_class must be 0 or 1");
  }
  const auto groups = static_cast<std::size_t>(data.groups());
  // [group][true class]: count and predicted-positive count.
  std::vector<std::array<long, 2>> count(groups, {0, 0}), positive(groups, {0, 0});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto g = static_cast<std::size_t>(*data[i].group_label);
    const int y = data[i].class_label == positive_class ? 1 : 0;
    ++count[g][y];
    positive[g][y] += predictions[i] == positive_class;
  }
  auto max_gap = [&](auto rate_of) -> std::optional<double> {
    double lo = 1.0, hi = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      const auto rate = rate_of(g);
      if (!rate) {
        return std::nullopt;
      }
      lo = std::min(lo, *rate);
      hi = std::max(hi, *rate);
    }
    return hi - lo;
  };
  auto ratio = [](long num, long den) -> std::optional<double> {
    return den ? std::optional<double>(static_cast<double>(num) / static_cast<double>(den))
               : std::nullopt;
  };
  Fairness out;
  out.dp = max_gap([&](std::size_t g) {
    return ratio(positive[g][0] + positive[g][1], count[g][0] + count[g][1]);
  });
  const auto tpr_gap = max_gap([&](std::size_t g) { return ratio(positive[g][1], count[g][1]); });
  const auto fpr_gap = max_gap([&](std::size_t g) { return ratio(positive[g][0], count[g][0]); });
  out.eo = tpr_gap;
  if (tpr_gap && fpr_gap) {
    out.ed = 0.5 * (*tpr_gap + *fpr_gap);
  }
  return out;
}

Fairness fairness_metrics(const Model& model, const Dataset& data, int positive_class) {
  return fairness_from_predictions(data, predict(model, data), positive_class);
}

double domain_probe(const Model& model, const Dataset& real, const Dataset& synthetic,
                    const ProbeConfig& config, std::uint64_t seed) {
  if (real.empty() || synthetic.empty()) {
    throw ValidationError("domain_probe: both domains must be nonempty");
  }
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw ValidationError("domain_probe: train_fraction must lie in (0, 1)");
  }
  // Domain label 0 = first argument, 1 = second argument.
  Dataset train_set(real.dim(), 2, 0), held_out(real.dim(), 2, 0);
  const Dataset* domains[2] = {&real, &synthetic};
  for (int label = 0; label < 2; ++label) {
    const Dataset& d = *domains[label];
    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i] = i;
    }
    Rng rng(derive_seed(seed, "probe-split", static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_train = static_cast<std::size_t>(
        std::floor(config.train_fraction * static_cast<double>(d.size())));
    if (n_train == 0 || n_train == d.size()) {
      throw ValidationError("domain_probe: degenerate split for domain " +
                            std::to_string(label) + " (" + std::to_string(d.size()) +
                            " samples)");
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
      Sample s{d[order[k]].features, label, std::nullopt, Origin::Real};
      (k < n_train ? train_set : held_out).add(std::move(s));
    }
  }

  Model probe = model;
  probe.head = init_affine(model.embedding_dim(), 2, derive_seed(seed, "probe-head"));
  TrainConfig cfg;
  cfg.epochs = config.epochs;
  cfg.learning_rate = config.learning_rate;
  cfg.batch_size = 64;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  cfg.mixup_alpha = 0.0;
  cfg.seed = derive_seed(seed, "probe-train");
  const Matrix emb = embed(model, feature_matrix(train_set));
  probe = fit_head(std::move(probe), emb, train_set, cfg).model;
  return accuracy(probe, held_out);
}

double boundary_angle(const Model& model) {
  if (!model.extractor.empty() || model.input_dim() != 2 || model.classes() != 2) {
    throw ValidationError("boundary_angle: need a linear 2-class model on 2D inputs");
  }
  const double wx = model.head.weight(1, 0) - model.head.weight(0, 0);
  const double wy = model.head.weight(1, 1) - model.head.weight(0, 1);
  if (wx == 0.0 && wy == 0.0) {
    throw ValidationError("boundary_angle: zero weight difference, boundary undefined");
  }
  double deg = std::abs(std::atan2(wy, wx)) * 180.0 / std::numbers::pi;
  if (deg > 90.0) {
    deg = 180.0 - deg;
  }
  return deg;
}

void export_embeddings(const Model& model, const Dataset& data, std::ostream& out) {
  const Matrix emb = embed(model, feature_matrix(data));
  for (Eigen::Index j = 0; j < emb.cols(); ++j) {
    out << 'e' << j << ',';
  }
  out << "class,group,origin\n";
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < emb.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", emb(static_cast<Eigen::Index>(i), j));
      out << buf << ',';
    }
    out << data[i].class_label << ',';
    if (data[i].group_label) {
      out << *data[i].group_label;
    }
    out << ',' << to_string(data[i].origin) << '\n';
  }
}

MetricsReport evaluate(const Model& model, const Dataset& test, const EvaluateOptions& options) {
  if (test.empty()) {
    throw ValidationError("evaluate: empty test set");
  }
  const auto pred = predict(model, test);
  MetricsReport r;
  long hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    hits += pred[i] == test[i].class_label;
  }
  r.overall_accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
  r.per_class_accuracy = class_accuracy(test, pred);
  if (options.train_counts) {
    r.shots = shot_split_from_class_accuracy(r.per_class_accuracy, *options.train_counts);
  }
  if (options.groups) {
    const auto ga = group_accuracy_from_predictions(test, pred, options.group_by);
    r.worst_group = ga.worst;
    r.mean_group = ga.mean;
    r.per_group_accuracy = ga.per_group;
  }
  if (options.fairness) {
    r.fairness = fairness_from_predictions(test, pred, options.positive_class);
  }
  return r;
}

std::string to_json(const MetricsReport& report) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) -> ordered_json {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  auto vec = [](const std::vector<double>& v) {
    ordered_json arr = ordered_json::array();
    for (double x : v) {
      arr.push_back(std::isnan(x) ? ordered_json(nullptr) : ordered_json(x));
    }
    return arr;
  };
  ordered_json j;
  j["overall_accuracy"] = report.overall_accuracy;
  j["per_class_accuracy"] = vec(report.per_class_accuracy);
  j["many_shot"] = opt(report.shots.many);
  j["medium_shot"] = opt(report.shots.medium);
  j["few_shot"] = opt(report.shots.few);
  j["worst_group"] = opt(report.worst_group);
  j["mean_group"] = opt(report.mean_group);
  j["per_group_accuracy"] = vec(report.per_group_accuracy);
  j["dp"] = opt(report.fairness.dp);
  j["ed"] = opt(report.fairness.ed);
  j["eo"] = opt(report.fairness.eo);
  j["domain_probe"] = opt(report.domain_probe);
  j["boundary_angle"] = opt(report.boundary_angle);
  return j.dump(2);
}

} // namespace synaug
