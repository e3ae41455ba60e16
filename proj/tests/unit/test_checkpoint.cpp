#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "iadfp/checkpoint.hpp"

using namespace iadfp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "iadfp_checkpoint_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Checkpoint, RoundTripsConvAndDense) {
  Checkpoint ck;
  ck.spec = build_network("lenet:4{3}-6", {1, 9, 9}, 5, HeadKind::softmax);
  ck.spec.layers[0].trainable = false;
  ck.params = init_parameters(ck.spec, 12);
  ck.params.layers[0].bias.values[1] = -0.125;
  ck.num_classes = 5;
  ck.frozen_prefix = 3;
  save_checkpoint(scratch("a.ckpt"), ck);
  const auto back = load_checkpoint(scratch("a.ckpt"));
  EXPECT_EQ(back.spec, ck.spec);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.num_classes, 5);
  EXPECT_EQ(back.frozen_prefix, 3u);
  save_checkpoint(scratch("b.ckpt"), back);
  EXPECT_EQ(slurp(scratch("a.ckpt")), slurp(scratch("b.ckpt")));
}

TEST(Checkpoint, RejectsDamagedFiles) {
  Checkpoint ck;
  ck.spec = build_network("mlp:3", {2}, 2, HeadKind::dirichlet);
  ck.params = init_parameters(ck.spec, 1);
  ck.num_classes = 2;
  save_checkpoint(scratch("ok.ckpt"), ck);
  const std::string bytes = slurp(scratch("ok.ckpt"));

  std::ofstream(scratch("truncated.ckpt"), std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  EXPECT_THROW(load_checkpoint(scratch("truncated.ckpt")), CheckpointError);
  std::string bad = bytes;
  bad[0] ^= 0x55;
  std::ofstream(scratch("magic.ckpt"), std::ios::binary) << bad;
  EXPECT_THROW(load_checkpoint(scratch("magic.ckpt")), CheckpointError);
  EXPECT_THROW(load_checkpoint(scratch("missing.ckpt")), CheckpointError);
}
