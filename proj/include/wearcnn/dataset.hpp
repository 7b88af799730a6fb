#pragma once

#include "wearcnn/image.hpp"
#include "wearcnn/manifest.hpp"
#include "wearcnn/png_io.hpp"
#include "wearcnn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <span>

namespace wearcnn {

/// 8-bit RGB -> [0,1] tensor (h, w, 3): resized to the network input with
/// bilinear interpolation, each channel value divided by 255.
template <typename Scalar>
Tensor<Scalar> normalize_image(const Image& raw, int target_size) {
  const Image resized = bilinear_resize(raw, target_size, target_size);
  Tensor<Scalar> out({target_size, target_size, 3});
  for (std::size_t i = 0; i < resized.rgb.size(); ++i) {
    out.data[i] = static_cast<Scalar>(resized.rgb[i]) / Scalar(255);
  }
  return out;
}

/// Decoded and resized copies of a record list, kept as 8-bit pixels;
/// batches are normalized on demand. Read-only after load, so it can be
/// shared across training runs and threads.
class SampleSet {
 public:
  static SampleSet load(const DatasetManifest& manifest, std::span<const SampleRecord> records,
                        int target_size) {
    SampleSet set;
    set.target_size_ = target_size;
    set.images_.reserve(records.size());
    set.labels_.reserve(records.size());
    for (const auto& record : records) {
      Image raw = read_png(manifest.root / record.image_path);
      set.images_.push_back(bilinear_resize(raw, target_size, target_size));
      set.labels_.push_back(record.class_index);
    }
    return set;
  }

  long long size() const { return static_cast<long long>(images_.size()); }
  int target_size() const { return target_size_; }
  const std::vector<int>& labels() const { return labels_; }
  const Image& image(long long i) const { return images_[static_cast<std::size_t>(i)]; }

  template <typename Scalar>
  void fill_batch(std::span<const long long> indices, Tensor<Scalar>& x,
                  std::vector<int>& y) const {
    const int s = target_size_;
    x = Tensor<Scalar>({static_cast<int>(indices.size()), s, s, 3});
    y.resize(indices.size());
    Scalar* dst = x.data.data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const Image& img = images_[static_cast<std::size_t>(indices[i])];
      for (std::size_t j = 0; j < img.rgb.size(); ++j) {
        dst[j] = static_cast<Scalar>(img.rgb[j]) / Scalar(255);
      }
      dst += img.rgb.size();
      y[i] = labels_[static_cast<std::size_t>(indices[i])];
    }
  }

 private:
  std::vector<Image> images_;
  std::vector<int> labels_;
  int target_size_ = 0;
};

template <typename Scalar>
struct DataBatch {
  Tensor<Scalar> x;
  std::vector<int> labels;
};

/// Uniform handle the trainer consumes: a sample count, the full label list,
/// and a fetch function materializing any index subset as a batch.
template <typename Scalar>
struct Dataset {
  long long count = 0;
  std::vector<int> labels;
  std::function<DataBatch<Scalar>(std::span<const long long>)> fetch;
};

template <typename Scalar>
Dataset<Scalar> make_dataset(std::shared_ptr<const SampleSet> samples) {
  Dataset<Scalar> dataset;
  dataset.count = samples->size();
  dataset.labels = samples->labels();
  dataset.fetch = [samples](std::span<const long long> indices) {
    DataBatch<Scalar> batch;
    samples->fill_batch(indices, batch.x, batch.labels);
    return batch;
  };
  return dataset;
}

/// In-memory variant used by tests and synthetic objectives: `images` is a
/// rank-4 tensor of pre-normalized samples.
template <typename Scalar>
Dataset<Scalar> make_dataset(Tensor<Scalar> images, std::vector<int> labels) {
  check(images.rank() == 4, "make_dataset: images must be rank 4, got " + shape_str(images.shape));
  check(images.dim(0) == static_cast<int>(labels.size()),
        "make_dataset: " + std::to_string(labels.size()) + " labels for batch " +
            shape_str(images.shape));
  auto shared_images = std::make_shared<Tensor<Scalar>>(std::move(images));
  auto shared_labels = std::make_shared<std::vector<int>>(std::move(labels));
  Dataset<Scalar> dataset;
  dataset.count = shared_images->dim(0);
  dataset.labels = *shared_labels;
  dataset.fetch = [shared_images, shared_labels](std::span<const long long> indices) {
    const int h = shared_images->dim(1), w = shared_images->dim(2), c = shared_images->dim(3);
    DataBatch<Scalar> batch;
    batch.x = Tensor<Scalar>({static_cast<int>(indices.size()), h, w, c});
    batch.labels.resize(indices.size());
    const long long stride = static_cast<long long>(h) * w * c;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const Scalar* src = shared_images->data.data() + indices[i] * stride;
      std::copy(src, src + stride, batch.x.data.data() + static_cast<long long>(i) * stride);
      batch.labels[i] = (*shared_labels)[static_cast<std::size_t>(indices[i])];
    }
    return batch;
  };
  return dataset;
}

}  // namespace wearcnn
