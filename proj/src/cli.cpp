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

#include "vic/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "vic/gradsuite.hpp"
#include "vic/io.hpp"
#include "vic/simulator.hpp"

namespace vic {

using nlohmann::json;

json to_json(const PipelineConfig& c) {
  return {{"interval", c.interval},
          {"lambda", c.lambda},
          {"eta", c.eta},
          {"radius", c.radius},
          {"sinkhorn", {{"epsilon", c.sinkhorn.epsilon}, {"max_iter", c.sinkhorn.max_iter}, {"tol", c.sinkhorn.tol}}},
          {"icg", c.icg},
          {"ompm", c.ompm},
          {"dasa", c.dasa},
          {"modulator", c.modulator},
          {"dot_loss", c.dot_loss},
          {"fusion", to_string(c.fusion)},
          {"prior", to_string(c.prior)},
          {"loss_sign", to_string(c.loss_sign)},
          {"counting", to_string(c.counting)},
          {"propose_matches", c.propose_matches},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"shape", to_json(c.shape)}};
}

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig c) {
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("interval", c.interval);
    get("lambda", c.lambda);
    get("eta", c.eta);
    get("radius", c.radius);
    if (j.contains("sinkhorn")) {
      const json& s = j.at("sinkhorn");
      if (s.contains("epsilon")) c.sinkhorn.epsilon = s.at("epsilon").get<double>();
      if (s.contains("max_iter")) c.sinkhorn.max_iter = s.at("max_iter").get<std::size_t>();
      if (s.contains("tol")) c.sinkhorn.tol = s.at("tol").get<double>();
    }
    get("icg", c.icg);
    get("ompm", c.ompm);
    get("dasa", c.dasa);
    get("modulator", c.modulator);
    get("dot_loss", c.dot_loss);
    if (j.contains("fusion")) c.fusion = parse_fusion(j.at("fusion").get<std::string>());
    if (j.contains("prior")) c.prior = parse_prior_source(j.at("prior").get<std::string>());
    if (j.contains("loss_sign")) c.loss_sign = parse_loss_sign(j.at("loss_sign").get<std::string>());
    if (j.contains("counting")) c.counting = parse_flow_counting(j.at("counting").get<std::string>());
    get("propose_matches", c.propose_matches);
    get("learning_rate", c.learning_rate);
    get("weight_decay", c.weight_decay);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("seed", c.seed);
    if (j.contains("shape")) c.shape = model_shape_from_json(j.at("shape"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("run config: ") + e.what());
  }
  return c;
}

namespace {

// Command-line mirror of PipelineConfig. Only options given on the command
// line are applied, so a model's stored settings survive unless overridden.
class RunFlags {
 public:
  RunFlags(CLI::App* app, bool training) {
    add<std::size_t>(app, "--interval", [](PipelineConfig& c) -> auto& { return c.interval; }, "frame interval");
    add<double>(app, "--lambda", [](PipelineConfig& c) -> auto& { return c.lambda; }, "D-OT appearance weight");
    add<std::size_t>(app, "--eta", [](PipelineConfig& c) -> auto& { return c.eta; }, "max matches per pedestrian");
    add<double>(app, "--radius", [](PipelineConfig& c) -> auto& { return c.radius; }, "positive-pair radius");
    add<double>(app, "--epsilon", [](PipelineConfig& c) -> auto& { return c.sinkhorn.epsilon; },
                "Sinkhorn regularization");
    add<std::size_t>(app, "--max-iter", [](PipelineConfig& c) -> auto& { return c.sinkhorn.max_iter; },
                     "Sinkhorn iteration cap");
    add<double>(app, "--tol", [](PipelineConfig& c) -> auto& { return c.sinkhorn.tol; }, "Sinkhorn tolerance");
    add<bool>(app, "--icg", [](PipelineConfig& c) -> auto& { return c.icg; }, "social grouping prior (on|off)");
    add<bool>(app, "--ompm", [](PipelineConfig& c) -> auto& { return c.ompm; },
              "one-to-many matching; off = one-to-one baseline (on|off)");
    add<bool>(app, "--dasa", [](PipelineConfig& c) -> auto& { return c.dasa; }, "displacement-aware attention (on|off)");
    add<bool>(app, "--modulator", [](PipelineConfig& c) -> auto& { return c.modulator; },
              "prior modulator in the match head (on|off)");
    add<bool>(app, "--dot-loss", [](PipelineConfig& c) -> auto& { return c.dot_loss; }, "D-OT loss term (on|off)");
    add<bool>(app, "--propose-matches", [](PipelineConfig& c) -> auto& { return c.propose_matches; },
              "supervise every predicted match (on|off)");
    add_enum(app, "--fusion", "modulate|concat", [](PipelineConfig& c, const std::string& v) {
      c.fusion = parse_fusion(v);
    });
    add_enum(app, "--prior", "cost|raw_displacement", [](PipelineConfig& c, const std::string& v) {
      c.prior = parse_prior_source(v);
    });
    add_enum(app, "--loss-sign", "cost_minimizing|literal", [](PipelineConfig& c, const std::string& v) {
      c.loss_sign = parse_loss_sign(v);
    });
    add_enum(app, "--flow-counting", "coverage|pair_sum", [](PipelineConfig& c, const std::string& v) {
      c.counting = parse_flow_counting(v);
    });
    add<std::uint64_t>(app, "--seed", [](PipelineConfig& c) -> auto& { return c.seed; }, "training seed");
    if (!training) return;
    add<double>(app, "--lr", [](PipelineConfig& c) -> auto& { return c.learning_rate; }, "learning rate");
    add<double>(app, "--weight-decay", [](PipelineConfig& c) -> auto& { return c.weight_decay; }, "weight decay");
    add<std::size_t>(app, "--epochs", [](PipelineConfig& c) -> auto& { return c.epochs; }, "training epochs");
    add<std::size_t>(app, "--batch-size", [](PipelineConfig& c) -> auto& { return c.batch_size; },
                     "frame pairs per step");
    add<std::size_t>(app, "--d", [](PipelineConfig& c) -> auto& { return c.shape.d; }, "feature width");
    add<std::size_t>(app, "--raw-dim", [](PipelineConfig& c) -> auto& { return c.shape.raw_dim; },
                     "descriptor width (default: from the data)");
    add<std::size_t>(app, "--patch-h", [](PipelineConfig& c) -> auto& { return c.shape.patch.h; },
                     "similarity patch height");
    add<std::size_t>(app, "--patch-w", [](PipelineConfig& c) -> auto& { return c.shape.patch.w; },
                     "similarity patch width");
    add<std::size_t>(app, "--heads", [](PipelineConfig& c) -> auto& { return c.shape.heads; }, "attention heads");
    add<std::size_t>(app, "--mlp-layers", [](PipelineConfig& c) -> auto& { return c.shape.head_layers; },
                     "match head layers");
    add<std::size_t>(app, "--mlp-hidden", [](PipelineConfig& c) -> auto& { return c.shape.head_hidden; },
                     "match head hidden width");
  }

  RunFlags(const RunFlags&) = delete;
  RunFlags& operator=(const RunFlags&) = delete;

  void apply(PipelineConfig& config) const {
    for (const auto& [option, set] : setters_)
      if (option->count() > 0) set(config);
  }

  bool given(const std::string& name) const {
    return std::any_of(setters_.begin(), setters_.end(), [&](const auto& s) {
      return s.first->check_lname(name.substr(2)) && s.first->count() > 0;
    });
  }

 private:
  template <class T, class Get>
  void add(CLI::App* app, const std::string& name, Get get, const std::string& desc) {
    CLI::Option* opt = app->add_option(name, get(values_), desc);
    setters_.emplace_back(opt, [this, get](PipelineConfig& dst) { get(dst) = get(values_); });
  }

  void add_enum(CLI::App* app, const std::string& name, const std::string& values,
                std::function<void(PipelineConfig&, const std::string&)> set) {
    auto holder = std::make_shared<std::string>();
    holders_.push_back(holder);
    CLI::Option* opt = app->add_option(name, *holder, values);
    setters_.emplace_back(opt, [holder, set = std::move(set)](PipelineConfig& dst) { set(dst, *holder); });
  }

  PipelineConfig values_;
  std::vector<std::shared_ptr<std::string>> holders_;
  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> setters_;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::missing_data, "cannot write " + path);
  out << std::setprecision(17);
  return out;
}

std::vector<Video> load_data(const std::string& path) { return read_dataset(resolve_data_path(path)); }

void require_descriptors(const std::vector<Video>& videos) {
  for (const Video& v : videos)
    if (!v.has_descriptors()) {
      throw Error(ErrorCode::missing_data, "video '" + v.name + "' has no per-point descriptors; the model needs them");
    }
}

struct LoadedModel {
  ModelParams params;
  PipelineConfig config;
};

// Stored settings, then command-line overrides. Overrides may change
// inference switches but not the architecture the weights were trained for.
LoadedModel load_with_flags(const std::string& path, const RunFlags& flags) {
  json meta;
  LoadedModel m{load_model(resolve_data_path(path), &meta), {}};
  if (meta.contains("config")) m.config = pipeline_config_from_json(meta.at("config"));
  flags.apply(m.config);
  m.config.shape = m.params.shape;
  m.config.validate();
  if (m.config.model_shape() != m.params.shape) {
    throw Error(ErrorCode::invalid_config,
                std::string("flags select head input '") + to_string(m.config.model_shape().head_input) +
                    "' but the model was trained with '" + to_string(m.params.shape.head_input) + "'");
  }
  return m;
}

void print_eval(std::ostream& out, const std::string& group, const VideoEval& e) {
  out << group << ": videos=" << e.per_video.size() << " mae=" << e.mae << " mse=" << e.mse << " wrae=" << e.wrae
      << "%\n";
}

void write_eval_row(std::ostream& out, const std::string& group, const VideoEval& e) {
  out << group << ',' << e.per_video.size() << ',' << e.mae << ',' << e.mse << ',' << e.wrae << '\n';
}

TrainResult train_logged(const std::vector<Video>& videos, const PipelineConfig& config, std::ostream& out,
                         std::optional<ModelParams> initial = std::nullopt) {
  const EpochCallback log = [&](std::size_t epoch, double loss) {
    out << "epoch " << epoch << " loss " << loss << '\n' << std::flush;
  };
  if (initial) return train(videos, config, std::move(*initial), log);
  return train(videos, config, log);
}

std::vector<Rect> parse_masks(const std::vector<std::string>& texts) {
  std::vector<Rect> rects;
  for (const std::string& s : texts) {
    std::istringstream in(s);
    Rect r;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(in >> r.x0 >> c1 >> r.y0 >> c2 >> r.x1 >> c3 >> r.y1) || c1 != ',' || c2 != ',' || c3 != ',' ||
        !(in >> std::ws).eof()) {
      throw Error(ErrorCode::invalid_config, "mask rectangle must be x0,y0,x1,y1, got '" + s + "'");
    }
    rects.push_back(r);
  }
  return rects;
}

struct Variant {
  std::string name;
  std::function<void(PipelineConfig&)> change;
  bool retrain;  // false: reuse the full model, change inference only
};

const std::vector<Variant>& ablation_variants() {
  static const std::vector<Variant> variants = {
      {"full", [](PipelineConfig&) {}, true},
      {"appearance",
       [](PipelineConfig& c) {
         c.dasa = false;
         c.modulator = false;
         c.dot_loss = false;
       },
       true},
      {"no_icg", [](PipelineConfig& c) { c.icg = false; }, true},
      {"no_dasa", [](PipelineConfig& c) { c.dasa = false; }, true},
      {"no_modulator", [](PipelineConfig& c) { c.modulator = false; }, true},
      {"no_dot", [](PipelineConfig& c) { c.dot_loss = false; }, true},
      {"concat", [](PipelineConfig& c) { c.fusion = Fusion::concat; }, true},
      {"raw_prior", [](PipelineConfig& c) { c.prior = PriorSource::raw_displacement; }, true},
      {"o2o", [](PipelineConfig& c) { c.ompm = false; }, false},
      {"pair_sum", [](PipelineConfig& c) { c.counting = FlowCounting::pair_sum; }, false},
  };
  return variants;
}

int exit_code_for(ErrorCode code) { return code == ErrorCode::invalid_config ? kExitUsage : kExitData; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video individual counting by one-to-many cross-frame matching", "vic"};
  app.require_subcommand(1);
  out << std::setprecision(10);

  // generate
  CLI::App* gen = app.add_subcommand("generate", "write simulator sequences as JSONL annotations");
  std::string gen_out;
  std::size_t gen_count = 5;
  std::vector<std::string> gen_masks;
  SimConfig sim;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--count", gen_count, "number of sequences");
  gen->add_option("--seed", sim.seed, "seed of the first sequence; later ones use seed + i");
  gen->add_option("--frames", sim.frames, "frames per sequence");
  gen->add_option("--initial-groups", sim.initial_groups, "groups in the first frame");
  gen->add_option("--rate", sim.groups_per_frame_rate, "mean arriving groups per frame");
  gen->add_option("--group-min", sim.group_size_min, "smallest group");
  gen->add_option("--group-max", sim.group_size_max, "largest group");
  gen->add_option("--max-visible", sim.max_visible, "cap on visible pedestrians per frame");
  gen->add_option("--occlusion", sim.occlusion_rate, "per-point descriptor occlusion probability");
  gen->add_option("--clearance", sim.spawn_clearance, "arrival distance from previous-frame pedestrians");
  gen->add_option("--descriptor-dim", sim.descriptor_dim, "descriptor width");
  gen->add_option("--noise", sim.descriptor_noise, "descriptor noise");
  gen->add_option("--mask", gen_masks, "masked rectangle x0,y0,x1,y1 (repeatable)");

  // validate
  CLI::App* val = app.add_subcommand("validate", "ingest annotations and report per-video counts");
  std::string val_data;
  val->add_option("--data", val_data, "JSONL file or directory")->required();

  // train
  CLI::App* tr = app.add_subcommand("train", "train a model on annotated sequences");
  std::string tr_data, tr_model, tr_loss, tr_init;
  tr->add_option("--data", tr_data, "training JSONL file or directory")->required();
  tr->add_option("--model", tr_model, "output model file")->required();
  tr->add_option("--loss-csv", tr_loss, "per-epoch loss CSV");
  tr->add_option("--init", tr_init, "continue from this model");
  RunFlags tr_flags(tr, true);

  // infer
  CLI::App* inf = app.add_subcommand("infer", "per-pair flows and sequence totals");
  std::string inf_data, inf_model, inf_flows, inf_totals;
  bool inf_oracle = false;
  inf->add_option("--data", inf_data, "JSONL file or directory")->required();
  CLI::Option* inf_model_opt = inf->add_option("--model", inf_model, "model file");
  inf->add_flag("--oracle", inf_oracle, "score pairs from annotated identities")->excludes(inf_model_opt);
  inf->add_option("--flows", inf_flows, "per-pair flow CSV");
  inf->add_option("--totals", inf_totals, "sequence total CSV (default: stdout)");
  RunFlags inf_flags(inf, false);

  // evaluate
  CLI::App* ev = app.add_subcommand("evaluate", "MAE, MSE and WRAE against annotated totals");
  std::string ev_data, ev_model, ev_tags, ev_out;
  bool ev_oracle = false;
  ev->add_option("--data", ev_data, "JSONL file or directory")->required();
  CLI::Option* ev_model_opt = ev->add_option("--model", ev_model, "model file");
  ev->add_flag("--oracle", ev_oracle, "score pairs from annotated identities")->excludes(ev_model_opt);
  ev->add_option("--tags", ev_tags, "CSV of video,tag for grouped metrics");
  ev->add_option("--out", ev_out, "metrics CSV");
  RunFlags ev_flags(ev, false);

  // checkgrad
  CLI::App* cg = app.add_subcommand("checkgrad", "run the gradient verification suite");
  GradSuiteOptions cg_opts;
  cg->add_option("--seed", cg_opts.seed, "suite seed");
  cg->add_option("--instances", cg_opts.instances, "random instances per case");
  cg->add_option("--only", cg_opts.only, "case-name prefixes to run");

  // dump
  CLI::App* dm = app.add_subcommand("dump", "export the displacement prior and attention maps");
  std::string dm_data, dm_model, dm_prior, dm_attn, dm_video;
  std::size_t dm_pairs = 0;
  dm->add_option("--data", dm_data, "JSONL file or directory")->required();
  dm->add_option("--model", dm_model, "model file")->required();
  dm->add_option("--prior-csv", dm_prior, "(dx, dy, gamma) CSV");
  dm->add_option("--attention-csv", dm_attn, "attention CSV");
  dm->add_option("--video", dm_video, "only this video");
  dm->add_option("--pairs", dm_pairs, "at most this many pairs per video (0 = all)");
  RunFlags dm_flags(dm, false);

  // ablate
  CLI::App* ab = app.add_subcommand("ablate", "train and evaluate ablation variants");
  std::string ab_data, ab_eval, ab_out;
  std::vector<std::string> ab_variants;
  ab->add_option("--data", ab_data, "training JSONL file or directory")->required();
  ab->add_option("--eval", ab_eval, "held-out JSONL file or directory")->required();
  ab->add_option("--variants", ab_variants, "variants to run (default: all)");
  ab->add_option("--out", ab_out, "metrics CSV");
  RunFlags ab_flags(ab, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      sim.mask_regions = parse_masks(gen_masks);
      sim.validate();
      const std::filesystem::path dir = gen_out;
      std::filesystem::create_directories(dir);
      const std::uint64_t first = sim.seed;
      for (std::size_t i = 0; i < gen_count; ++i) {
        SimConfig c = sim;
        c.seed = first + i;
        std::ostringstream name;
        name << "seq_" << std::setw(3) << std::setfill('0') << i;
        SimSequence seq = generate(c);
        seq.video.name = name.str();
        write_annotations(dir / (name.str() + ".jsonl"), seq.video);
        out << name.str() << " frames=" << seq.video.frames.size() << " identities=" << seq.distinct_identities()
            << '\n';
      }
      return kExitOk;
    }

    if (val->parsed()) {
      for (const Video& v : load_data(val_data)) {
        std::size_t points = 0, masked = 0, inflow = 0, outflow = 0;
        for (const FramePoints& f : v.frames) {
          points += f.size();
          for (std::size_t k = 0; k < f.size(); ++k) {
            if (f.masked[k]) {
              ++masked;
              continue;
            }
            inflow += is_inflow(f.labels[k]);
            outflow += is_outflow(f.labels[k]);
          }
        }
        out << v.name << " frames=" << v.frames.size() << " points=" << points << " masked=" << masked
            << " inflow=" << inflow << " outflow=" << outflow << " descriptors=" << (v.has_descriptors() ? "yes" : "no")
            << '\n';
      }
      return kExitOk;
    }

    if (tr->parsed()) {
      const std::vector<Video> videos = load_data(tr_data);
      require_descriptors(videos);
      PipelineConfig config;
      tr_flags.apply(config);
      if (!tr_flags.given("--raw-dim")) config.shape.raw_dim = videos.front().descriptors.front().cols();
      config.validate();
      std::optional<ModelParams> initial;
      if (!tr_init.empty()) {
        initial = load_model(resolve_data_path(tr_init));
        if (initial->shape != config.model_shape()) {
          throw Error(ErrorCode::shape_mismatch, "initial model shape differs from the configured architecture");
        }
      }
      const TrainResult result = train_logged(videos, config, out, std::move(initial));
      PipelineConfig stored = config;
      stored.shape = config.model_shape();
      save_model(tr_model, result.params, {{"config", to_json(stored)}, {"epoch_losses", result.epoch_losses}});
      if (!tr_loss.empty()) {
        std::ofstream csv = open_output(tr_loss);
        write_loss_csv(csv, result.epoch_losses);
      }
      out << "saved " << tr_model << " (" << result.params.parameter_count() << " parameters)\n";
      return kExitOk;
    }

    // Shared by infer and evaluate.
    auto scored_runs = [&](const std::vector<Video>& videos, const std::string& model, bool oracle,
                           const RunFlags& flags, PipelineConfig& config) {
      if (oracle) {
        flags.apply(config);
        config.validate();
        return infer(videos, oracle_scorer(), config);
      }
      if (model.empty()) throw Error(ErrorCode::invalid_config, "either --model or --oracle is required");
      require_descriptors(videos);
      LoadedModel m = load_with_flags(model, flags);
      config = m.config;
      return infer(videos, model_scorer(m.params, config), config);
    };

    if (inf->parsed()) {
      const std::vector<Video> videos = load_data(inf_data);
      PipelineConfig config;
      const std::vector<SequenceRun> runs = scored_runs(videos, inf_model, inf_oracle, inf_flags, config);
      if (!inf_flows.empty()) {
        std::ofstream csv = open_output(inf_flows);
        for (std::size_t v = 0; v < videos.size(); ++v) write_flows_csv(csv, videos[v].name, runs[v], v == 0);
      }
      std::ofstream file;
      if (!inf_totals.empty()) file = open_output(inf_totals);
      std::ostream& totals = inf_totals.empty() ? out : file;
      for (std::size_t v = 0; v < videos.size(); ++v) {
        write_totals_csv(totals, videos[v].name, runs[v], videos[v].frames.size(), v == 0);
      }
      return kExitOk;
    }

    if (ev->parsed()) {
      const std::vector<Video> videos = load_data(ev_data);
      PipelineConfig config;
      const std::vector<SequenceRun> runs = scored_runs(videos, ev_model, ev_oracle, ev_flags, config);
      std::vector<VideoRecord> records = evaluation_records(videos, runs, config.interval);
      if (!ev_tags.empty()) {
        const std::map<std::string, std::string> tags = read_tags(resolve_data_path(ev_tags));
        for (VideoRecord& r : records) {
          const auto it = tags.find(r.name);
          r.tag = it == tags.end() ? "untagged" : it->second;
        }
      }
      const VideoEval overall = metrics(records);
      for (const VideoRecord& r : records) {
        out << r.name << ": predicted=" << r.predicted << " truth=" << r.truth << '\n';
      }
      print_eval(out, "overall", overall);
      std::map<std::string, VideoEval> grouped;
      if (!ev_tags.empty()) grouped = metrics_by_tag(records);
      for (const auto& [tag, e] : grouped) print_eval(out, "tag " + tag, e);
      if (!ev_out.empty()) {
        std::ofstream csv = open_output(ev_out);
        csv << "group,videos,mae,mse,wrae\n";
        write_eval_row(csv, "overall", overall);
        for (const auto& [tag, e] : grouped) write_eval_row(csv, tag, e);
      }
      return kExitOk;
    }

    if (cg->parsed()) {
      const GradSuiteReport report = run_gradient_suite(cg_opts);
      for (const GradSuiteCase& c : report.cases) {
        out << (c.passed() ? "PASS " : "FAIL ") << std::left << std::setw(24) << c.name << std::right
            << " instances=" << c.instances << " failures=" << c.failures << " worst=" << c.worst_error
            << " tol=" << c.tolerance << '\n';
      }
      out << "suite " << (report.passed() ? "PASS" : "FAIL") << " in " << report.seconds << " s\n";
      return report.passed() ? kExitOk : kExitCheck;
    }

    if (dm->parsed()) {
      if (dm_prior.empty() && dm_attn.empty()) {
        throw Error(ErrorCode::invalid_config, "dump needs --prior-csv and/or --attention-csv");
      }
      std::vector<Video> videos = load_data(dm_data);
      if (!dm_video.empty()) {
        std::erase_if(videos, [&](const Video& v) { return v.name != dm_video; });
        if (videos.empty()) throw Error(ErrorCode::missing_data, "no video named '" + dm_video + "'");
      }
      require_descriptors(videos);
      const LoadedModel m = load_with_flags(dm_model, dm_flags);
      std::ofstream prior_csv, attn_csv;
      if (!dm_prior.empty()) prior_csv = open_output(dm_prior);
      if (!dm_attn.empty()) attn_csv = open_output(dm_attn);
      bool prior_header = true, attn_header = true;
      for (const Video& v : videos) {
        std::size_t pair = 0;
        for (std::size_t t = m.config.interval; t < v.frames.size(); t += m.config.interval, ++pair) {
          if (dm_pairs != 0 && pair >= dm_pairs) break;
          const FrameView prev = counted_view(v, t - m.config.interval), curr = counted_view(v, t);
          if (prev.size() == 0 || curr.size() == 0) continue;
          const PriorField prior = build_prior_field(prev.positions, curr.positions, m.params, m.config.prior);
          if (prior_csv.is_open()) {
            write_prior_csv(prior_csv, v.name, pair, prior, prior_header);
            prior_header = false;
          }
          if (attn_csv.is_open() && m.config.icg) {
            Tape tape;
            const BoundParams bound = bind(tape, m.params);
            const PairForward fwd = forward_pair(tape, bound, m.config, prev, curr);
            write_attention_csv(attn_csv, v.name, pair, fwd.icg->attention.map.value(),
                                fwd.icg->attention.modulated.value(), prior.full_cost, attn_header);
            attn_header = false;
          }
        }
      }
      if (attn_csv.is_open() && !m.config.icg) err << "attention maps need --icg on; none written\n";
      return kExitOk;
    }

    if (ab->parsed()) {
      const std::vector<Video> train_videos = load_data(ab_data), eval_videos = load_data(ab_eval);
      require_descriptors(train_videos);
      require_descriptors(eval_videos);
      PipelineConfig base;
      ab_flags.apply(base);
      if (!ab_flags.given("--raw-dim")) base.shape.raw_dim = train_videos.front().descriptors.front().cols();
      base.validate();
      std::vector<const Variant*> chosen;
      for (const Variant& v : ablation_variants())
        if (ab_variants.empty() || std::find(ab_variants.begin(), ab_variants.end(), v.name) != ab_variants.end())
          chosen.push_back(&v);
      for (const std::string& name : ab_variants)
        if (std::none_of(chosen.begin(), chosen.end(), [&](const Variant* v) { return v->name == name; }))
          throw Error(ErrorCode::invalid_config, "unknown variant '" + name + "'");
      std::ofstream file;
      if (!ab_out.empty()) file = open_output(ab_out);
      if (file.is_open()) file << "variant,mae,mse,wrae\n";
      std::optional<ModelParams> full_model;
      for (const Variant* v : chosen) {
        PipelineConfig config = base;
        v->change(config);
        config.validate();
        ModelParams params;
        if (v->retrain || !full_model) {
          PipelineConfig train_config = v->retrain ? config : base;
          out << "training " << (v->retrain ? v->name : std::string("full")) << '\n';
          TrainResult r = train_logged(train_videos, train_config, out);
          params = std::move(r.params);
          if (!v->retrain || v->name == "full") full_model = params;
        } else {
          params = *full_model;
        }
        const std::vector<SequenceRun> runs = infer(eval_videos, model_scorer(params, config), config);
        const VideoEval e = metrics(evaluation_records(eval_videos, runs, config.interval));
        print_eval(out, v->name, e);
        if (file.is_open()) file << v->name << ',' << e.mae << ',' << e.mse << ',' << e.wrae << '\n';
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace vic
