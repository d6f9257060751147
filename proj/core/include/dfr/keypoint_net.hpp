#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dfr/adam.hpp"
#include "dfr/dataset.hpp"
#include "dfr/image.hpp"
#include "dfr/keypoints.hpp"
#include "dfr/network.hpp"

namespace dfr {

// Architecture description: conv/pool schedule plus fully-connected head.
// A relu follows every conv and hidden dense layer; the output is linear.
struct ModelConfig {
  std::string preset = "custom";
  int input_size = 96;
  int input_channels = 1;
  std::vector<LayerSpec> conv_schedule;  // kConv / kMaxPool entries
  std::vector<int> fc_hidden;
  int output_count = kKeypointCount * 2;
  uint64_t seed = 1;

  // 96x96, 4 conv layers; the configuration CI trains end to end.
  static ModelConfig desk(uint64_t seed = 1);
  // 227x227, 14 conv + 4 dense layers.
  static ModelConfig paper(uint64_t seed = 1);

  int conv_layer_count() const;
  int dense_layer_count() const { return static_cast<int>(fc_hidden.size()) + 1; }
};

struct TrainingEpoch {
  int epoch = 0;        // 1-based
  double mean_loss = 0; // mean MAE over the epoch, normalized coordinates
};

class TrainedModel {
 public:
  explicit TrainedModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  Network<float>& network() { return net_; }
  const Network<float>& network() const { return net_; }
  std::vector<TrainingEpoch>& history() { return history_; }
  const std::vector<TrainingEpoch>& history() const { return history_; }

 private:
  ModelConfig config_;
  Network<float> net_;
  std::vector<TrainingEpoch> history_;
};

// Deterministic parameter initialization from config.seed; validates the
// whole shape chain with a forward pass.
TrainedModel build_model(const ModelConfig& config);

struct TrainOptions {
  int epochs = 150;
  int batch_size = 32;
  AdamHyper adam;
  uint64_t shuffle_seed = 1;
  std::function<void(const TrainingEpoch&)> on_epoch;  // optional progress hook
};

// Minibatch Adam on the MAE loss; target coordinates are normalized by the
// input size internally. Appends one history entry per epoch.
void train(TrainedModel& model, const Dataset& dataset, const TrainOptions& options);

// 20 points denormalized to pixel space and clamped to the image rectangle;
// the regressor always emits all 20, so every visibility flag is true.
KeypointSet predict_keypoints(const TrainedModel& model, const Image& image);

// Raw 40-vector in normalized coordinates (x0,y0,x1,y1,...).
std::vector<float> predict_raw(const TrainedModel& model, const Image& image);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

Tensor<float> image_to_tensor(const Image& image);

}  // namespace dfr
