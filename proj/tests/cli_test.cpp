// Copyright 2026 The VIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "vic/cli.hpp"
#include "vic/io.hpp"

namespace vic {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "vic");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vic_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }

  void generate(const std::string& sub, std::size_t count, std::size_t seed) {
    const Result r = run({"generate", "--out", at(sub), "--count", std::to_string(count), "--seed",
                          std::to_string(seed), "--frames", "6", "--descriptor-dim", "16", "--max-visible", "8"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }

  const std::vector<std::string> small_ = {"--d", "16", "--patch-h", "2", "--patch-w", "2", "--epochs", "2",
                                           "--lr", "0.1"};
  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--data", "x"}).code, kExitUsage);
  EXPECT_EQ(run({"infer", "--data", "x", "--oracle", "--model", "m"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, GenerateValidateAndOracle) {
  generate("data", 3, 4);
  EXPECT_TRUE(fs::exists(at("data/seq_000.jsonl")));
  EXPECT_TRUE(fs::exists(at("data/seq_002.jsonl")));
  const Result v = run({"validate", "--data", at("data")});
  EXPECT_EQ(v.code, kExitOk) << v.err;
  EXPECT_NE(v.out.find("seq_001"), std::string::npos);

  const Result inf = run({"infer", "--data", at("data"), "--oracle", "--flows", at("flows.csv")});
  EXPECT_EQ(inf.code, kExitOk) << inf.err;
  EXPECT_EQ(inf.out.substr(0, inf.out.find('\n')), "video,frames,first_count,total");
  EXPECT_EQ(slurp(at("flows.csv")).substr(0, 47), "video,pair,prev_frame,curr_frame,inflow,outflow");

  std::ofstream(at("tags.csv")) << "seq_000,a\nseq_001,b\nseq_002,b\n";
  const Result ev = run({"evaluate", "--data", at("data"), "--oracle", "--tags", at("tags.csv"), "--out", at("m.csv")});
  EXPECT_EQ(ev.code, kExitOk) << ev.err;
  const std::string metrics = slurp(at("m.csv"));
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "group,videos,mae,mse,wrae");
  EXPECT_NE(metrics.find("all,3,0,0,0"), std::string::npos) << metrics;
  EXPECT_NE(metrics.find("b,2,0,0,0"), std::string::npos) << metrics;
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(run({"validate", "--data", at("missing")}).code, kExitData);
  std::ofstream(at("bad.jsonl")) << "{\"frame_id\":0,\"points\":[{\"x\":2,\"y\":0,\"label\":\"inflow\"}]}\n";
  const Result bad = run({"validate", "--data", at("bad.jsonl")});
  EXPECT_EQ(bad.code, kExitData);
  EXPECT_NE(bad.err.find("line 1"), std::string::npos) << bad.err;
  generate("data", 1, 1);
  EXPECT_EQ(run({"infer", "--data", at("data"), "--model", at("none.bin")}).code, kExitData);
  EXPECT_EQ(run({"infer", "--data", at("data")}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--data", at("data"), "--model", at("m.bin"), "--lambda", "3"}).code, kExitUsage);
}

TEST_F(CliTest, TrainInferDumpRoundTrip) {
  generate("data", 2, 10);
  std::vector<std::string> train = {"train", "--data", at("data"), "--model", at("m.bin"), "--loss-csv", at("loss.csv")};
  train.insert(train.end(), small_.begin(), small_.end());
  const Result t = run(train);
  ASSERT_EQ(t.code, kExitOk) << t.err;
  nlohmann::json meta;
  load_model(at("m.bin"), &meta);
  EXPECT_EQ(meta.at("epoch_losses").size(), 2u);
  EXPECT_EQ(meta.at("config").at("epochs"), 2);
  EXPECT_EQ(slurp(at("loss.csv")).substr(0, 10), "epoch,loss");

  // Same seed, same curve.
  train[4] = at("m2.bin");
  ASSERT_EQ(run(train).code, kExitOk);
  nlohmann::json meta2;
  load_model(at("m2.bin"), &meta2);
  EXPECT_EQ(meta.at("epoch_losses"), meta2.at("epoch_losses"));

  const Result a = run({"infer", "--data", at("data"), "--model", at("m.bin")});
  const Result b = run({"infer", "--data", at("data"), "--model", at("m.bin")});
  EXPECT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  // Flags that would change the head input conflict with the stored model.
  EXPECT_EQ(run({"infer", "--data", at("data"), "--model", at("m.bin"), "--modulator", "off"}).code, kExitUsage);

  const Result d = run({"dump", "--data", at("data"), "--model", at("m.bin"), "--prior-csv", at("prior.csv"),
                        "--attention-csv", at("attn.csv"), "--pairs", "1"});
  EXPECT_EQ(d.code, kExitOk) << d.err;
  EXPECT_EQ(slurp(at("prior.csv")).substr(0, 33), "video,pair,curr,prev,dx,dy,gamma\n");
  EXPECT_EQ(slurp(at("attn.csv")).substr(0, 53), "video,pair,row_idx,col_idx,attn,modulated_attn,gamma\n");
}

TEST_F(CliTest, CheckgradAndAblate) {
  const Result g = run({"checkgrad", "--instances", "3", "--only", "kernel.matmul", "dot_loss"});
  EXPECT_EQ(g.code, kExitOk) << g.err;
  EXPECT_NE(g.out.find("kernel.matmul"), std::string::npos);
  EXPECT_NE(g.out.find("dot_loss"), std::string::npos);

  generate("train", 2, 20);
  generate("eval", 1, 30);
  std::vector<std::string> ab = {"ablate", "--data", at("train"), "--eval", at("eval"), "--variants", "full", "o2o",
                                 "--out", at("ab.csv")};
  ab.insert(ab.end(), small_.begin(), small_.end());
  const Result r = run(ab);
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(at("ab.csv"));
  EXPECT_NE(csv.find("\nfull,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\no2o,"), std::string::npos) << csv;
  EXPECT_EQ(run({"ablate", "--data", at("train"), "--eval", at("eval"), "--variants", "bogus"}).code, kExitUsage);
}

TEST(PipelineConfigJson, RoundTrip) {
  PipelineConfig c;
  c.lambda = 0.3;
  c.dasa = false;
  c.fusion = Fusion::concat;
  c.counting = FlowCounting::pair_sum;
  c.shape.d = 32;
  c.sinkhorn.epsilon = 0.05;
  const PipelineConfig back = pipeline_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.shape, c.shape);
  EXPECT_EQ(pipeline_config_from_json(nlohmann::json::object(), c).lambda, 0.3);
}

}  // namespace
}  // namespace vic
