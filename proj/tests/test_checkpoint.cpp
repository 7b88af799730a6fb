#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/test_util.hpp"
#include "wearcnn/checkpoint.hpp"
#include "wearcnn/network.hpp"

#include <cstdio>
#include <fstream>

using namespace wearcnn;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("checkpoint round-trips bitwise") {
  Topology topo;
  topo.input_shape = {8, 8, 2};
  topo.layers = {ConvSpec{3, 3}, ReluSpec{}, GlobalMaxPoolSpec{}, FlattenSpec{},
                 DenseSpec{5},  BatchNormSpec{}, ReluSpec{}, SoftmaxOutputSpec{4}};
  Rng rng(21);
  auto store = init_params<double>(topo, rng);

  const auto path = temp_file("wearcnn_ckpt_roundtrip.wcnn");
  save_checkpoint(path, store);

  auto restored = init_params<double>(topo, rng);  // different values
  load_checkpoint(path, restored);
  REQUIRE(restored.size() == store.size());
  for (const auto& entry : store.entries()) {
    const auto& loaded = restored.at(entry.name);
    REQUIRE(loaded.shape == entry.value.shape);
    for (std::size_t i = 0; i < entry.value.data.size(); ++i) {
      CHECK(loaded.data[i] == entry.value.data[i]);  // exact, not approximate
    }
  }
  CHECK(count_trainable_params(restored) == count_trainable_params(store));

  // Forward outputs reproduce bitwise after the round trip.
  Rng data_rng(22);
  const Tensor64 x = test::random_tensor({2, 8, 8, 2}, data_rng, 0.0, 1.0);
  const Tensor64 before = forward(topo, store, x);
  const Tensor64 after = forward(topo, restored, x);
  for (std::size_t i = 0; i < before.data.size(); ++i) CHECK(before.data[i] == after.data[i]);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint stores f32 and converts on load") {
  ParamStore<float> store;
  store.add("dense1/weights", Tensor32({2, 2}, {1.5f, -2.25f, 0.125f, 4.0f}), true);
  const auto path = temp_file("wearcnn_ckpt_f32.wcnn");
  save_checkpoint(path, store);

  const auto records = read_checkpoint<double>(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].name == "dense1/weights");
  CHECK(records[0].value.data[1] == -2.25);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint detects corruption via the CRC") {
  ParamStore<double> store;
  store.add("dense1/weights", Tensor64({2}, {1.0, 2.0}), true);
  const auto path = temp_file("wearcnn_ckpt_crc.wcnn");
  save_checkpoint(path, store);

  // Flip one payload byte.
  std::fstream file(path, std::ios::in | std::ios::out | std::ios::binary);
  file.seekp(12);
  char byte;
  file.read(&byte, 1);
  file.seekp(12);
  byte = static_cast<char>(byte ^ 0x40);
  file.write(&byte, 1);
  file.close();

  CHECK_THROWS_WITH_AS(read_checkpoint<double>(path), doctest::Contains("CRC"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("loading into a mismatched store fails cleanly") {
  ParamStore<double> store;
  store.add("conv1/kernels", Tensor64::zeros({3, 3, 1, 2}), true);
  const auto path = temp_file("wearcnn_ckpt_mismatch.wcnn");
  save_checkpoint(path, store);

  ParamStore<double> other;
  other.add("conv1/kernels", Tensor64::zeros({3, 3, 1, 2}), true);
  other.add("conv2/kernels", Tensor64::zeros({3, 3, 2, 2}), true);
  CHECK_THROWS_WITH_AS(load_checkpoint(path, other), doctest::Contains("conv2/kernels"),
                       std::invalid_argument);

  ParamStore<double> wrong_shape;
  wrong_shape.add("conv1/kernels", Tensor64::zeros({3, 3, 2, 2}), true);
  CHECK_THROWS_AS(load_checkpoint(path, wrong_shape), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("rejects files with the wrong magic") {
  const auto path = temp_file("wearcnn_ckpt_magic.bin");
  std::ofstream out(path, std::ios::binary);
  out << "NOPEnope-not-a-checkpoint";
  out.close();
  CHECK_THROWS_AS(read_checkpoint<double>(path), std::invalid_argument);
  std::filesystem::remove(path);
}
