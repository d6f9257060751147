#include "dfr/keypoint_net.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dfr/errors.hpp"
#include "dfr/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

namespace dfr {

namespace {

constexpr char kModelMagic[4] = {'D', 'F', 'R', 'M'};
constexpr uint16_t kModelVersion = 1;

// Full layer list: relu after every conv and hidden dense, linear output.
std::vector<LayerSpec> expand_layers(const ModelConfig& cfg) {
  std::vector<LayerSpec> layers;
  std::vector<int> shape = {cfg.input_channels, cfg.input_size, cfg.input_size};
  for (const LayerSpec& s : cfg.conv_schedule) {
    switch (s.kind) {
      case LayerKind::kConv:
        layers.push_back(s);
        layers.push_back(LayerSpec::Relu());
        shape = {s.out_channels, conv_output_extent(shape[1], s.kernel, s.stride, s.padding),
                 conv_output_extent(shape[2], s.kernel, s.stride, s.padding)};
        break;
      case LayerKind::kMaxPool:
        layers.push_back(s);
        shape = {shape[0], (shape[1] - s.pool_size) / s.pool_stride + 1,
                 (shape[2] - s.pool_size) / s.pool_stride + 1};
        break;
      default:
        throw ConfigError("conv_schedule may only contain conv and maxpool entries");
    }
    if (shape[1] < 1 || shape[2] < 1) throw ConfigError("conv schedule collapses spatial extent");
  }
  layers.push_back(LayerSpec::Flatten());
  int units = shape[0] * shape[1] * shape[2];
  for (int hidden : cfg.fc_hidden) {
    layers.push_back(LayerSpec::Dense(units, hidden));
    layers.push_back(LayerSpec::Relu());
    units = hidden;
  }
  layers.push_back(LayerSpec::Dense(units, cfg.output_count));
  return layers;
}

std::string serialize_conv_schedule(const std::vector<LayerSpec>& schedule) {
  std::ostringstream out;
  for (size_t i = 0; i < schedule.size(); ++i) {
    const LayerSpec& s = schedule[i];
    if (i) out << "|";
    if (s.kind == LayerKind::kConv)
      out << "conv:" << s.in_channels << ":" << s.out_channels << ":" << s.kernel << ":"
          << s.stride << ":" << s.padding;
    else
      out << "pool:" << s.pool_size << ":" << s.pool_stride;
  }
  return out.str();
}

std::vector<LayerSpec> parse_conv_schedule(const std::string& text) {
  std::vector<LayerSpec> schedule;
  if (text.empty()) return schedule;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, '|')) {
    std::vector<int> nums;
    std::string head;
    std::istringstream is(item);
    std::getline(is, head, ':');
    std::string tok;
    while (std::getline(is, tok, ':')) nums.push_back(std::stoi(tok));
    if (head == "conv" && nums.size() == 5)
      schedule.push_back(LayerSpec::Conv(nums[0], nums[1], nums[2], nums[3], nums[4]));
    else if (head == "pool" && nums.size() == 2)
      schedule.push_back(LayerSpec::MaxPool(nums[0], nums[1]));
    else
      throw FormatError("model metadata: bad conv schedule entry '" + item + "'");
  }
  return schedule;
}

Tensor<float> target_tensor(const KeypointSet& kps, int input_size) {
  Tensor<float> t({kKeypointCount * 2});
  const float inv = 1.0f / static_cast<float>(input_size);
  for (int i = 0; i < kKeypointCount; ++i) {
    t[static_cast<size_t>(2 * i)] = static_cast<float>(kps[i].x) * inv;
    t[static_cast<size_t>(2 * i) + 1] = static_cast<float>(kps[i].y) * inv;
  }
  return t;
}

void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const char* section) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw FormatError(std::string("model file: truncated ") + section);
}

}  // namespace

ModelConfig ModelConfig::desk(uint64_t seed) {
  ModelConfig cfg;
  cfg.preset = "desk";
  cfg.input_size = 96;
  cfg.seed = seed;
  cfg.conv_schedule = {
      LayerSpec::Conv(1, 8, 3, 1, 1),   LayerSpec::MaxPool(2, 2),
      LayerSpec::Conv(8, 16, 3, 1, 1),  LayerSpec::MaxPool(2, 2),
      LayerSpec::Conv(16, 32, 3, 1, 1), LayerSpec::MaxPool(2, 2),
      LayerSpec::Conv(32, 64, 3, 1, 1), LayerSpec::MaxPool(2, 2),
  };
  cfg.fc_hidden = {128, 64};
  return cfg;
}

ModelConfig ModelConfig::paper(uint64_t seed) {
  ModelConfig cfg;
  cfg.preset = "paper";
  cfg.input_size = 227;
  cfg.seed = seed;
  const int widths[4] = {32, 64, 128, 256};
  const int counts[4] = {3, 3, 4, 4};
  int in_ch = 1;
  for (int block = 0; block < 4; ++block) {
    for (int i = 0; i < counts[block]; ++i) {
      cfg.conv_schedule.push_back(LayerSpec::Conv(in_ch, widths[block], 3, 1, 1));
      in_ch = widths[block];
    }
    cfg.conv_schedule.push_back(LayerSpec::MaxPool(2, 2));
  }
  cfg.fc_hidden = {1024, 512, 256};
  return cfg;
}

int ModelConfig::conv_layer_count() const {
  return static_cast<int>(
      std::count_if(conv_schedule.begin(), conv_schedule.end(),
                    [](const LayerSpec& s) { return s.kind == LayerKind::kConv; }));
}

TrainedModel::TrainedModel(ModelConfig config)
    : config_(std::move(config)),
      net_(expand_layers(config_), {config_.input_channels, config_.input_size, config_.input_size},
           config_.seed) {
  if (config_.output_count != kKeypointCount * 2)
    throw ConfigError("model config: output_count must equal 2 x " +
                      std::to_string(kKeypointCount));
  if (net_.output_shape() != std::vector<int>{config_.output_count})
    throw ConfigError("model config: layer chain does not end in the output vector");
}

TrainedModel build_model(const ModelConfig& config) { return TrainedModel(config); }

Tensor<float> image_to_tensor(const Image& image) {
  Tensor<float> t({1, image.height, image.width});
  for (size_t i = 0; i < image.pixels.size(); ++i)
    t[i] = static_cast<float>(image.pixels[i]) / 255.0f;
  return t;
}

void train(TrainedModel& model, const Dataset& dataset, const TrainOptions& options) {
  if (dataset.empty()) throw ParameterError("train: empty dataset");
  if (options.epochs < 0) throw ParameterError("train: epochs must be >= 0");
  if (options.batch_size < 1) throw ParameterError("train: batch size must be >= 1");
  const int input_size = model.config().input_size;
  for (const Sample& s : dataset.samples) {
    if (s.image.width != input_size || s.image.height != input_size)
      throw DimensionError("train: sample image is not the model input size; preprocess first");
  }

  Network<float>& net = model.network();
  const size_t n = dataset.samples.size();

  std::vector<Tensor<float>> inputs(n), targets(n);
  for (size_t i = 0; i < n; ++i) {
    inputs[i] = image_to_tensor(dataset.samples[i].image);
    targets[i] = target_tensor(dataset.samples[i].annotation, input_size);
  }

  NetworkAdam<float> optimizer(net, options.adam);
  Rng order_rng(splitmix64(options.shuffle_seed) ^ 0x7a21f00dULL);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  const size_t batch = static_cast<size_t>(options.batch_size);
  // Per-sample gradient buffers allow a parallel batch loop with a fixed
  // reduction order, so results do not depend on thread count. Large nets
  // fall back to a serial loop to avoid the buffer memory.
  const bool parallel_batches = net.parameter_count() <= (4u << 20);
  std::vector<Gradients<float>> sample_grads;
  if (parallel_batches)
    for (size_t i = 0; i < std::min(batch, n); ++i) sample_grads.push_back(net.make_zero_gradients());

  const int start_epoch = model.history().empty() ? 0 : model.history().back().epoch;
  for (int e = 0; e < options.epochs; ++e) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (size_t b0 = 0; b0 < n; b0 += batch) {
      const size_t bn = std::min(batch, n - b0);
      Gradients<float> batch_grads = net.make_zero_gradients();
      if (parallel_batches) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (long k = 0; k < static_cast<long>(bn); ++k) {
          Gradients<float>& g = sample_grads[static_cast<size_t>(k)];
          g.scale(0.0f);
          const size_t idx = order[b0 + static_cast<size_t>(k)];
          net.accumulate_backward(inputs[idx], targets[idx], g);
        }
        for (size_t k = 0; k < bn; ++k) batch_grads.accumulate(sample_grads[k]);
      } else {
        for (size_t k = 0; k < bn; ++k) {
          const size_t idx = order[b0 + k];
          net.accumulate_backward(inputs[idx], targets[idx], batch_grads);
        }
      }
      epoch_loss += static_cast<double>(batch_grads.loss);
      batch_grads.scale(1.0f / static_cast<float>(bn));
      optimizer.step(net, batch_grads);
    }
    TrainingEpoch entry{start_epoch + e + 1, epoch_loss / static_cast<double>(n)};
    model.history().push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
  }
}

std::vector<float> predict_raw(const TrainedModel& model, const Image& image) {
  const int input_size = model.config().input_size;
  if (image.width != input_size || image.height != input_size)
    throw DimensionError("predict: image is " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + ", model expects " +
                         std::to_string(input_size) + "x" + std::to_string(input_size));
  const Tensor<float> out = model.network().forward(image_to_tensor(image));
  return out.values();
}

KeypointSet predict_keypoints(const TrainedModel& model, const Image& image) {
  const std::vector<float> raw = predict_raw(model, image);
  const double size = model.config().input_size;
  KeypointSet kps;
  for (int i = 0; i < kKeypointCount; ++i) {
    kps[i].x = std::clamp(static_cast<double>(raw[static_cast<size_t>(2 * i)]) * size, 0.0, size);
    kps[i].y =
        std::clamp(static_cast<double>(raw[static_cast<size_t>(2 * i) + 1]) * size, 0.0, size);
  }
  return kps;
}

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model: " + path);
  write_bytes(out, kModelMagic, 4);
  write_bytes(out, &kModelVersion, sizeof(kModelVersion));

  const ModelConfig& cfg = model.config();
  std::ostringstream meta;
  meta << "preset=" << cfg.preset << "\n"
       << "input_size=" << cfg.input_size << "\n"
       << "input_channels=" << cfg.input_channels << "\n"
       << "output_count=" << cfg.output_count << "\n"
       << "seed=" << cfg.seed << "\n"
       << "conv=" << serialize_conv_schedule(cfg.conv_schedule) << "\n";
  meta << "fc=";
  for (size_t i = 0; i < cfg.fc_hidden.size(); ++i) meta << (i ? "," : "") << cfg.fc_hidden[i];
  meta << "\n";
  const std::string meta_str = meta.str();
  const uint32_t meta_len = static_cast<uint32_t>(meta_str.size());
  write_bytes(out, &meta_len, sizeof(meta_len));
  write_bytes(out, meta_str.data(), meta_str.size());

  const Network<float>& net = model.network();
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const auto write_array = [&out](const float* data, size_t count) {
      const uint64_t n = count;
      write_bytes(out, &n, sizeof(n));
      write_bytes(out, data, count * sizeof(float));
    };
    if (const Tensor<float>* w = net.layer(l).weights()) write_array(w->data(), w->size());
    if (const std::vector<float>* b = net.layer(l).bias()) write_array(b->data(), b->size());
  }
  if (!out) throw IoError("write failed: " + path);
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model: " + path);
  char magic[4];
  read_bytes(in, magic, 4, "header");
  if (std::memcmp(magic, kModelMagic, 4) != 0)
    throw FormatError("model file: bad magic (header)");
  uint16_t version = 0;
  read_bytes(in, &version, sizeof(version), "header");
  if (version != kModelVersion)
    throw FormatError("model file: format version " + std::to_string(version) +
                      " not supported (expected " + std::to_string(kModelVersion) + ")");

  uint32_t meta_len = 0;
  read_bytes(in, &meta_len, sizeof(meta_len), "metadata");
  if (meta_len > (1u << 20)) throw FormatError("model file: implausible metadata length");
  std::string meta(meta_len, '\0');
  read_bytes(in, meta.data(), meta_len, "metadata");

  ModelConfig cfg;
  cfg.conv_schedule.clear();
  cfg.fc_hidden.clear();
  std::istringstream ms(meta);
  std::string line;
  while (std::getline(ms, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "preset") cfg.preset = value;
      else if (key == "input_size") cfg.input_size = std::stoi(value);
      else if (key == "input_channels") cfg.input_channels = std::stoi(value);
      else if (key == "output_count") cfg.output_count = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "conv") cfg.conv_schedule = parse_conv_schedule(value);
      else if (key == "fc") {
        std::istringstream fs(value);
        std::string tok;
        while (std::getline(fs, tok, ',')) if (!tok.empty()) cfg.fc_hidden.push_back(std::stoi(tok));
      }
    } catch (const std::invalid_argument&) {
      throw FormatError("model file: bad metadata value for '" + key + "'");
    }
  }

  TrainedModel model(cfg);
  Network<float>& net = model.network();
  int array_index = 0;
  const auto read_array = [&in, &array_index](float* data, size_t expected) {
    const std::string section = "parameter array " + std::to_string(array_index++);
    uint64_t n = 0;
    read_bytes(in, &n, sizeof(n), section.c_str());
    if (n != expected)
      throw FormatError("model file: " + section + " has " + std::to_string(n) +
                        " elements, expected " + std::to_string(expected));
    read_bytes(in, data, expected * sizeof(float), section.c_str());
  };
  for (size_t l = 0; l < net.layer_count(); ++l) {
    if (Tensor<float>* w = net.layer(l).weights()) read_array(w->data(), w->size());
    if (std::vector<float>* b = net.layer(l).bias()) read_array(b->data(), b->size());
  }
  char extra = 0;
  if (in.read(&extra, 1) && in.gcount() == 1)
    throw FormatError("model file: trailing bytes after parameter arrays");
  return model;
}

}  // namespace dfr
