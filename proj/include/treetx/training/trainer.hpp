#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "treetx/model/tree_transformer.hpp"
#include "treetx/numerics/param_store.hpp"
#include "treetx/training/corpus.hpp"
#include "treetx/training/optimizer.hpp"

namespace treetx::training {

struct TrainConfig {
  double base_lr = 0.002;
  std::size_t warmup_steps = 2000;
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  std::string precision = "f64";
  model::Ablation ablation = model::Ablation::kNone;
  std::size_t checkpoint_every = 0;  // epochs between checkpoints; 0 keeps only the final one
  bool eval_each_epoch = true;

  std::size_t dim = 128;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 0;  // 0 means 4 * dim
  std::size_t max_children = 32;
  bool full_width_scaling = false;

  std::size_t threads = 1;  // evaluation workers
  AdamConfig adam;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Model configuration for `corpus` under `config`.
model::ModelConfig make_model_config(const TrainConfig& config, const Corpus& corpus);

struct Metrics {
  model::HeadKind task = model::HeadKind::kClassify;
  std::size_t samples = 0;
  double mean_loss = 0.0;
  double accuracy = 0.0;         // tree or node classification
  std::size_t labeled_nodes = 0;  // node task
  double loc_acc = 0.0;          // wrongop
  double joint_acc = 0.0;        // wrongop
  double random_baseline = 0.0;  // wrongop: mean 1 / |candidates|

  nlohmann::json to_json() const;
  bool operator==(const Metrics&) const = default;
};

/// One line of the prediction log. For the node task there is one entry per
/// labeled node; for the others one per sample.
struct Prediction {
  std::size_t sample = 0;
  std::optional<NodeId> node;    // node task
  std::int64_t predicted = -1;   // class, or located node for wrongop
  std::int64_t gold = -1;
  std::int64_t predicted_op = -1;  // wrongop
  std::int64_t gold_op = -1;       // wrongop
  std::size_t candidates = 0;      // wrongop

  nlohmann::ordered_json to_json() const;
  static Prediction from_json(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<Metrics> eval;
  double seconds = 0.0;
};

struct TrainResult {
  num::ParamStore params;
  model::ModelConfig model;
  std::vector<EpochRecord> curve;
  std::optional<Metrics> eval;  // final evaluation on the held-out corpus
  std::vector<Prediction> predictions;
};

using Logger = std::function<void(const std::string&)>;

/// Where train() writes its artifacts: manifest.json, metrics.csv,
/// summary.json, predictions.jsonl and model.{json,bin} (plus
/// epoch-<n>.{json,bin} at the checkpoint cadence).
struct RunOutputs {
  std::filesystem::path dir;
  nlohmann::json command = nlohmann::json::object();  // flags as given, recorded in the manifest
};

TrainResult train(const TrainConfig& config, const Corpus& train_set, const Corpus* eval_set = nullptr,
                  const RunOutputs* outputs = nullptr, const Logger& log = {});

/// Mean loss of the samples `indices` as a graph value, the same objective
/// train() minimizes. Used by gradient checks.
num::Var batch_loss(model::BoundParams& p, const Corpus& corpus, std::span<const std::size_t> indices,
                    const model::ForwardOptions& options = {});

/// Forward-only evaluation. Never modifies `params`. Results do not depend on `threads`.
Metrics evaluate(const num::ParamStore& params, const model::ModelConfig& model, const Corpus& corpus,
                 std::size_t threads = 1, std::vector<Prediction>* predictions = nullptr);

/// Loads model.json/.bin and evaluates; refuses corpora whose task, class
/// count or vocabulary digest differ from the checkpoint's.
Metrics evaluate_checkpoint(const std::filesystem::path& manifest, const Corpus& corpus,
                            std::size_t threads = 1, std::vector<Prediction>* predictions = nullptr);

/// Metrics recomputed from a prediction log alone.
Metrics recount(model::HeadKind task, std::span<const Prediction> predictions);

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

class DigestMismatch : public Error {
 public:
  using Error::Error;
};

/// Version string recorded in manifests.
std::string code_version();

}  // namespace treetx::training
