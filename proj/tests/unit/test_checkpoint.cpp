// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "irsce/core/error.hpp"
#include "irsce/nn/checkpoint.hpp"
#include "temp_dir.hpp"

namespace irsce::nn {
namespace {

Model<float> trained_model(Rng& rng) {
  ModelArchitecture a;
  a.width = 8;
  Model<float> m(a);
  m.initialize(rng);
  Tensor4<float> x(4, 2, 3, 5);
  testing::fill_normal<float>(x.values(), rng);
  m.forward(x, Mode::training);
  m.backward(x);
  adam_step(m, AdamConfig{});
  return m;
}

std::vector<CMatrix> refs(int k, Rng& rng) {
  std::vector<CMatrix> out;
  for (int i = 0; i < k; ++i) {
    CMatrix m(3, 5);
    for (auto& z : m.entries()) z = rng.complex_normal();
    out.push_back(m);
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os << bytes;
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  testing::TempDir dir;
  Rng rng(1);
  Model<float> m = trained_model(rng);
  const auto x_ref = refs(2, rng), h_ref = refs(2, rng);
  save_checkpoint(dir / "a.irsm", m, 123.5, x_ref, h_ref);
  Checkpoint ck = load_checkpoint(dir / "a.irsm");
  EXPECT_EQ(ck.scaling_constant, 123.5);
  EXPECT_EQ(ck.model.architecture(), m.architecture());
  EXPECT_EQ(ck.model.step(), m.step());
  ASSERT_EQ(ck.x_ref.size(), 2u);
  EXPECT_EQ(ck.x_ref[1], x_ref[1]);
  EXPECT_EQ(ck.h_ref[0], h_ref[0]);

  auto pa = m.parameters(), pb = ck.model.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t j = 0; j < pa[i].value.size(); ++j) {
      ASSERT_EQ(std::bit_cast<std::uint32_t>(pa[i].value[j]), std::bit_cast<std::uint32_t>(pb[i].value[j]));
      ASSERT_EQ(pa[i].first_moment[j], pb[i].first_moment[j]);
      ASSERT_EQ(pa[i].second_moment[j], pb[i].second_moment[j]);
    }
  }
  Tensor4<float> x(3, 2, 3, 5);
  testing::fill_normal<float>(x.values(), rng);
  const auto ya = m.infer(x), yb = ck.model.infer(x);
  for (std::size_t i = 0; i < ya.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(ya.data()[i]), std::bit_cast<std::uint32_t>(yb.data()[i]));
  }
  // Saving the loaded copy reproduces the file.
  save_checkpoint(dir / "b.irsm", ck.model, ck.scaling_constant, ck.x_ref, ck.h_ref);
  EXPECT_EQ(slurp(dir / "a.irsm"), slurp(dir / "b.irsm"));
}

TEST(Checkpoint, WithoutOptimizerStateStillLoads) {
  testing::TempDir dir;
  Rng rng(2);
  Model<float> m = trained_model(rng);
  save_checkpoint(dir / "c.irsm", m, 1.0, {}, {}, false);
  const Checkpoint ck = load_checkpoint(dir / "c.irsm");
  EXPECT_TRUE(ck.x_ref.empty());
  EXPECT_EQ(ck.model.parameter_count(), m.parameter_count());
}

TEST(Checkpoint, TruncatedFile) {
  testing::TempDir dir;
  Rng rng(3);
  Model<float> m = trained_model(rng);
  save_checkpoint(dir / "t.irsm", m, 1.0, refs(1, rng), refs(1, rng));
  const std::string bytes = slurp(dir / "t.irsm");
  for (const std::size_t keep : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    spit(dir / "cut.irsm", bytes.substr(0, keep));
    try {
      load_checkpoint(dir / "cut.irsm");
      FAIL() << "loaded a checkpoint cut to " << keep << " bytes";
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("truncated checkpoint"), std::string::npos) << e.what();
    }
  }
}

TEST(Checkpoint, VersionMismatchNamesBothVersions) {
  testing::TempDir dir;
  Rng rng(4);
  Model<float> m = trained_model(rng);
  save_checkpoint(dir / "v.irsm", m, 1.0, {}, {});
  std::string bytes = slurp(dir / "v.irsm");
  bytes[4] = 7;  // version u32 follows the 4-byte magic
  spit(dir / "v.irsm", bytes);
  try {
    load_checkpoint(dir / "v.irsm");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('7'), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(kCheckpointVersion)), std::string::npos) << msg;
  }
}

TEST(Checkpoint, BadMagic) {
  testing::TempDir dir;
  spit(dir / "junk.irsm", "NOPE and some more bytes");
  EXPECT_THROW(load_checkpoint(dir / "junk.irsm"), FormatError);
}

TEST(Checkpoint, MissingFile) {
  testing::TempDir dir;
  EXPECT_ANY_THROW(load_checkpoint(dir / "absent.irsm"));
}

TEST(Checkpoint, RejectsNonPositiveRunningVariance) {
  testing::TempDir dir;
  Rng rng(5);
  Model<float> m = trained_model(rng);
  m.units()[0].norm->running_var[3] = 0.0f;
  save_checkpoint(dir / "rv.irsm", m, 1.0, {}, {});
  EXPECT_THROW(load_checkpoint(dir / "rv.irsm"), FormatError);
}

}  // namespace
}  // namespace irsce::nn
