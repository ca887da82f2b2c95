#include "mdta2g/cli.hpp"

#include "mdta2g/errors.hpp"
#include "mdta2g/io.hpp"
#include "mdta2g/report.hpp"
#include "mdta2g/synth.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>
#include <sstream>

namespace mdta2g {

void MdtOverrides::apply(MdtConfig& cfg) const {
  if (encoder_depth) cfg.encoder_depth = *encoder_depth;
  if (decoder_depth) cfg.decoder_depth = *decoder_depth;
  if (si_blocks) cfg.si_blocks = *si_blocks;
  if (rho_base) cfg.rho_base = *rho_base;
  if (wider) cfg.wider = *wider;
  if (shortcut) cfg.shortcut = *shortcut;
  if (input_mode) cfg.input_mode = input_mode_from_string(*input_mode);
}

namespace {

namespace fs = std::filesystem;

struct LoadedData {
  DatasetInfo info;
  SkeletonLayout layout;
  std::vector<DatasetEntry> entries;
};

LoadedData load_data(const fs::path& dir) {
  LoadedData d;
  d.entries = read_dataset(dir, &d.info);
  d.layout = SkeletonLayout::from_name(d.info.layout_name);
  if (d.entries.empty()) throw std::runtime_error("dataset " + dir.string() + " is empty");
  return d;
}

ConditionDims dims_of(const DatasetInfo& info) {
  ConditionDims d;
  d.gesture_dim = SkeletonLayout::from_name(info.layout_name).feature_width();
  d.audio_dim = info.options.audio_dim;
  d.text_dim = info.options.text_dim;
  d.n_speakers = info.options.n_speakers;
  d.n_emotions = info.options.n_emotions;
  return d;
}

std::vector<TrainExample> examples_of(const std::vector<DatasetEntry>& entries) {
  std::vector<TrainExample> out;
  for (const auto& e : entries) out.push_back({flatten(e.sample.motion), e.sample.conditions});
  return out;
}

std::vector<Mat> values_of(const std::vector<DatasetEntry>& entries) {
  std::vector<Mat> out;
  for (const auto& e : entries) out.push_back(flatten(e.sample.motion));
  return out;
}

MdtConfig model_config(const RunConfig& rc, const ConditionDims& dims) {
  MdtConfig cfg = make_variant(rc.variant, dims, rc.max_timestep);
  rc.model.apply(cfg);
  cfg.validate();
  return cfg;
}

/// Variant used by every ablation cell: XS widths with room for a depth-4 decoder.
MdtConfig ablation_base(const ConditionDims& dims, int max_timestep) {
  MdtConfig cfg = make_variant("XS", dims, max_timestep);
  cfg.name = "ablate-base";
  cfg.encoder_depth = 5;
  cfg.decoder_depth = 2;
  return cfg;
}

FeatureExtractor obtain_extractor(const RunConfig& rc, const std::vector<Mat>& real, std::ostream& out) {
  if (!rc.extractor.empty()) return FeatureExtractor::from_checkpoint(load_checkpoint(rc.extractor));
  FeatureExtractorConfig cfg = rc.fx;
  cfg.seed = derive_seed(rc.seed, 0xF0F0ULL);
  FeatureExtractor fx = train_feature_extractor(real, cfg);
  if (!fx.warning().empty()) out << "warning: feature extractor " << fx.warning() << "\n";
  if (!rc.save_extractor.empty()) save_checkpoint(rc.save_extractor, fx.to_checkpoint());
  return fx;
}

std::string checksum_hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> metric_cells(const MetricReport& m) {
  return {format_double(m.fgd), format_double(m.diversity), format_double(m.beat_align), format_double(m.srgr)};
}

int cmd_gen_data(const RunConfig& rc, std::ostream& out) {
  const SkeletonLayout layout = SkeletonLayout::from_name(rc.layout);
  if (rc.n_sequences < 1) throw ConfigError("n must be >= 1");
  if (rc.frames < 3) throw ConfigError("frames must be >= 3");
  const auto samples = synth_dataset(rc.n_sequences, rc.frames, layout, rc.seed, rc.synth);
  DatasetInfo info;
  info.layout_name = rc.layout;
  info.count = rc.n_sequences;
  info.frames = rc.frames;
  info.options = rc.synth;
  write_dataset(rc.out, info, samples);
  out << "wrote " << rc.n_sequences << " sequences (" << rc.frames << " frames, " << layout.joint_count
      << " joints) to " << rc.out.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  const LoadedData data = load_data(rc.data_dir);
  TrainConfig tc = rc.train;
  tc.seed = rc.seed;
  if (tc.checkpoint_every > 0 && tc.checkpoint_dir.empty()) tc.checkpoint_dir = rc.out / "checkpoints";
  tc.validate();

  TrainState state = rc.resume.empty() ? make_train_state(model_config(rc, dims_of(data.info)), tc)
                                       : train_state_from_checkpoint(load_checkpoint(rc.resume), tc);
  if (state.model.config().fusion.dims != dims_of(data.info)) {
    throw ConfigError("checkpoint dims do not match the dataset");
  }
  const Schedule schedule = make_schedule(state.model.config().fusion.max_timestep);
  const auto examples = examples_of(data.entries);
  out << "model " << state.model.config().name << ": " << state.model.parameter_count() << " parameters, step "
      << state.step << " -> " << tc.steps << "\n";
  train_until(state, examples, schedule, tc);

  fs::create_directories(rc.out);
  save_checkpoint(rc.out / "model.ckpt", train_state_checkpoint(state));
  write_text_file(rc.out / "loss.csv", loss_curve_csv(state.curve));
  if (rc.svg) {
    Series full{"loss_full", {}, {}}, masked{"loss_masked", {}, {}};
    for (const auto& r : state.curve) {
      if (r.loss_full) full.x.push_back(r.step), full.y.push_back(*r.loss_full);
      if (r.loss_masked) masked.x.push_back(r.step), masked.y.push_back(*r.loss_masked);
    }
    write_text_file(rc.out / "loss.svg", svg_line_chart("training loss", "step", "Huber loss", {full, masked}));
  }
  if (!state.curve.empty()) out << "final combined loss " << format_double(state.curve.back().combined) << "\n";
  return 0;
}

int cmd_sample(const RunConfig& rc, std::ostream& out) {
  const MdtModel model = model_from_checkpoint(load_checkpoint(rc.checkpoint));
  const LoadedData data = load_data(rc.data_dir);
  if (model.config().fusion.dims != dims_of(data.info)) throw ConfigError("checkpoint dims do not match the dataset");
  const Schedule schedule = make_schedule(model.config().fusion.max_timestep);
  rc.sampler.validate();
  const int count = rc.count > 0 ? std::min<int>(rc.count, static_cast<int>(data.entries.size()))
                                 : static_cast<int>(data.entries.size());
  Table trace{{"name", "mode", "N", "scale", "eval_count"}, {}, {}};
  Table timing{{"name", "wall_time_s"}, {}, {}};
  fs::create_directories(rc.out);
  for (int i = 0; i < count; ++i) {
    const auto& e = data.entries[static_cast<std::size_t>(i)];
    SamplerConfig cfg = rc.sampler;
    cfg.seed = derive_seed(rc.seed, static_cast<std::uint64_t>(i));
    const SampleResult res = sample(model, e.sample.motion.frames(), e.sample.conditions, schedule, cfg);
    write_gesture_file(rc.out / (e.name + ".gesture"), FlatGesture{res.x0, data.layout, data.info.options.fps});
    trace.add_row({e.name, to_string(cfg.mode), std::to_string(cfg.mode == SamplerMode::Full ? 0 : cfg.skip),
                   format_double(cfg.scale), std::to_string(res.trace.network_eval_count)});
    timing.add_row({e.name, format_double(res.trace.wall_time_s)});
  }
  write_text_file(rc.out / "trace.csv", trace.to_csv());
  write_text_file(rc.out / "timing.csv", timing.to_csv());
  out << "wrote " << count << " samples (" << rc.sampler.label() << ") to " << rc.out.string() << "\n";
  return 0;
}

std::vector<FlatGesture> read_gesture_dir(const fs::path& dir) {
  std::vector<FlatGesture> out;
  for (const auto& p : list_gesture_files(dir)) out.push_back(read_gesture_file(p));
  if (out.empty()) throw std::runtime_error("no .gesture files in " + dir.string());
  return out;
}

int cmd_eval(const RunConfig& rc, std::ostream& out) {
  std::vector<FlatGesture> real;
  std::vector<BeatSequence> real_beats;
  if (fs::exists(rc.real_dir / "dataset.txt")) {
    const LoadedData data = load_data(rc.real_dir);
    for (const auto& e : data.entries) {
      real.push_back(FlatGesture{flatten(e.sample.motion), data.layout, data.info.options.fps});
      real_beats.push_back(e.sample.audio_beats);
    }
  } else {
    real = read_gesture_dir(rc.real_dir);
    for (const auto& g : real) {
      real_beats.push_back(extract_gesture_beats(to_rotations(g.values, g.layout, g.fps), rc.metrics.smoothing_window));
    }
  }
  const std::vector<FlatGesture> gen = read_gesture_dir(rc.gen_dir);
  std::vector<BeatSequence> audio_beats;
  for (std::size_t i = 0; i < gen.size(); ++i) audio_beats.push_back(real_beats[i % real_beats.size()]);

  std::vector<Mat> real_values;
  for (const auto& g : real) real_values.push_back(g.values);
  const FeatureExtractor fx = obtain_extractor(rc, real_values, out);
  MetricOptions opt = rc.metrics;
  opt.seed = derive_seed(rc.seed, 0xD1ULL);
  const MetricReport rep = evaluate_metrics(real, gen, audio_beats, fx, opt);

  Table t{{"fgd", "diversity", "beat_align", "srgr", "extractor_checksum"}, {}, {}};
  auto cells = metric_cells(rep);
  cells.push_back(checksum_hex(rep.extractor_checksum));
  t.add_row(cells);
  if (!rc.out.empty()) write_text_file(rc.out, t.to_csv());
  out << t.to_text();
  return 0;
}

int cmd_bench(const RunConfig& rc, std::ostream& out) {
  std::optional<LoadedData> data;
  if (!rc.data_dir.empty()) data = load_data(rc.data_dir);
  ConditionBundle bundle;
  int frames = rc.frames;
  MdtModel model = [&] {
    if (!rc.checkpoint.empty()) return model_from_checkpoint(load_checkpoint(rc.checkpoint));
    ConditionDims dims;
    if (data) dims = dims_of(data->info);
    else dims.gesture_dim = SkeletonLayout::from_name(rc.layout).feature_width();
    dims.audio_dim = data ? dims.audio_dim : rc.synth.audio_dim;
    return MdtModel(model_config(rc, dims), derive_seed(rc.seed, 0xBE7CULL));
  }();
  const ConditionDims& dims = model.config().fusion.dims;
  if (data) {
    if (dims != dims_of(data->info)) throw ConfigError("checkpoint dims do not match the dataset");
    bundle = data->entries.front().sample.conditions;
    frames = data->entries.front().sample.motion.frames();
  } else {
    SynthOptions so = rc.synth;
    so.audio_dim = dims.audio_dim;
    so.text_dim = dims.text_dim;
    so.n_speakers = dims.n_speakers;
    so.n_emotions = dims.n_emotions;
    SkeletonLayout layout = SkeletonLayout::from_name(rc.layout);
    if (layout.feature_width() != dims.gesture_dim) layout = SkeletonLayout::custom(dims.gesture_dim / 9);
    bundle = synth_dataset(1, frames, layout, rc.seed, so).front().conditions;
  }

  std::vector<SamplerConfig> configs;
  for (const auto& m : rc.bench_modes) {
    const SamplerMode mode = sampler_mode_from_string(m);
    if (mode == SamplerMode::Full) {
      configs.push_back(SamplerConfig{SamplerMode::Full, 0, 1.0, rc.seed});
    } else {
      for (int n : rc.bench_skips) configs.push_back(SamplerConfig{SamplerMode::Accelerated, n, rc.sampler.scale, rc.seed});
    }
  }

  SampleScorer scorer;
  std::optional<FeatureExtractor> fx;
  if (data) {
    fx.emplace(obtain_extractor(rc, values_of(data->entries), out));
    scorer = [&](const std::vector<Mat>& outputs) {
      std::vector<FlatGesture> real, gen;
      for (const auto& e : data->entries) real.push_back({flatten(e.sample.motion), data->layout, data->info.options.fps});
      for (const auto& o : outputs) gen.push_back({o, data->layout, data->info.options.fps});
      std::vector<BeatSequence> beats(gen.size(), data->entries.front().sample.audio_beats);
      MetricOptions opt = rc.metrics;
      opt.seed = derive_seed(rc.seed, 0xD1ULL);
      const MetricReport r = evaluate_metrics(real, gen, beats, *fx, opt);
      return std::map<std::string, double>{
          {"fgd", r.fgd}, {"diversity", r.diversity}, {"beat_align", r.beat_align}, {"srgr", r.srgr}};
    };
  }
  const Schedule schedule = make_schedule(dims.gesture_dim > 0 ? model.config().fusion.max_timestep : 0);
  const auto rows = bench_sampler(make_denoiser(model), frames, dims.gesture_dim, bundle, schedule, configs,
                                  rc.bench_runs, scorer);

  Table det{{"label", "mode", "N", "scale", "eval_count", "eval_ratio", "fgd", "diversity", "beat_align", "srgr"},
            {},
            {"model " + model.config().name + ", T=" + std::to_string(schedule.steps) + ", frames=" +
                 std::to_string(frames) + ", runs=" + std::to_string(rc.bench_runs),
             "reference average time (s) at full scale: full 8.711, 1:20 1.984, 1:25 1.567"}};
  Table timing{{"label", "mean_time_s", "std_time_s", "median_time_s", "speedup_vs_full"}, {}, {}};
  double full_eval = 0.0, full_median = 0.0;
  for (const auto& r : rows) {
    if (r.config.mode == SamplerMode::Full) full_eval = r.eval_count, full_median = r.median_time_s;
  }
  for (const auto& r : rows) {
    auto metric = [&](const char* k) {
      auto it = r.metrics.find(k);
      return it == r.metrics.end() ? std::string() : format_double(it->second);
    };
    char ratio[32];
    std::snprintf(ratio, sizeof ratio, "%.4f", full_eval / r.eval_count);
    det.add_row({r.label, to_string(r.config.mode), std::to_string(r.config.mode == SamplerMode::Full ? 0 : r.config.skip),
                 format_double(r.config.scale), std::to_string(r.eval_count), ratio, metric("fgd"), metric("diversity"),
                 metric("beat_align"), metric("srgr")});
    char speed[32];
    std::snprintf(speed, sizeof speed, "%.3f", full_median / r.median_time_s);
    timing.add_row({r.label, format_double(r.mean_time_s), format_double(r.std_time_s), format_double(r.median_time_s),
                    speed});
  }
  if (!rc.out.empty()) {
    fs::create_directories(rc.out);
    write_text_file(rc.out / "bench.csv", det.to_csv());
    write_text_file(rc.out / "bench_timing.csv", timing.to_csv());
  }
  out << det.to_text() << timing.to_text();
  return 0;
}

struct AblationCell {
  std::string axis;
  std::string value;
};

const std::map<std::string, std::vector<std::string>>& ablation_defaults() {
  static const std::map<std::string, std::vector<std::string>> d{
      {"mask_ratio", {"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8"}},
      {"wider", {"true", "false"}},
      {"decoder_depth", {"2", "4"}},
      {"si_blocks", {"0", "1", "2", "3"}},
      {"shortcut", {"true", "false"}},
      {"input_mode", {"full+unmasked", "full", "unmasked"}},
  };
  return d;
}

/// Full-scale FGD for the same setting, where one exists.
std::string reference_fgd(const AblationCell& c) {
  static const std::map<std::string, std::map<std::string, std::string>> ref{
      {"mask_ratio",
       {{"0.1", "49.54"}, {"0.2", "48.38"}, {"0.3", "47.74"}, {"0.4", "46.42"},
        {"0.5", "48.47"}, {"0.6", "50.46"}, {"0.7", "49.38"}, {"0.8", "52.28"}}},
      {"wider", {{"true", "46.42"}, {"false", "47.75"}}},
      {"decoder_depth", {{"2", "46.42"}, {"4", "46.69"}}},
      {"si_blocks", {{"0", "54.08"}, {"1", "46.42"}, {"2", "46.85"}, {"3", "55.28"}}},
      {"shortcut", {{"true", "46.42"}, {"false", "49.77"}}},
      {"input_mode", {{"full+unmasked", "46.42"}, {"full", "55.08"}, {"unmasked", "96.63"}}},
  };
  auto a = ref.find(c.axis);
  if (a == ref.end()) return "";
  std::string key = c.value;
  if (c.axis == "mask_ratio") key = format_double(std::stod(c.value));
  auto v = a->second.find(key);
  return v == a->second.end() ? "" : v->second;
}

bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(field + " expects true or false, got '" + v + "'");
}

int parse_int(const std::string& field, const std::string& v) {
  std::size_t pos = 0;
  int out = 0;
  try {
    out = std::stoi(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ConfigError(field + " expects an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& field, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ConfigError(field + " expects a number, got '" + v + "'");
  return out;
}

void apply_cell(MdtConfig& cfg, const AblationCell& c) {
  if (c.axis == "mask_ratio") cfg.rho_base = parse_real("mask_ratio", c.value);
  else if (c.axis == "wider") cfg.wider = parse_bool("wider", c.value);
  else if (c.axis == "shortcut") cfg.shortcut = parse_bool("shortcut", c.value);
  else if (c.axis == "input_mode") cfg.input_mode = input_mode_from_string(c.value);
  else if (c.axis == "decoder_depth") cfg.decoder_depth = parse_int("decoder_depth", c.value);
  else if (c.axis == "si_blocks") cfg.si_blocks = parse_int("si_blocks", c.value);
  else throw ConfigError("axis must be one of mask_ratio, wider, shortcut, input_mode, decoder_depth, si_blocks, all");
}

int cmd_ablate(const RunConfig& rc, std::ostream& out) {
  std::vector<AblationCell> cells;
  if (rc.axis == "all") {
    for (const char* axis : {"mask_ratio", "wider", "decoder_depth", "si_blocks", "shortcut", "input_mode"}) {
      for (const auto& v : ablation_defaults().at(axis)) cells.push_back({axis, v});
    }
  } else {
    auto it = ablation_defaults().find(rc.axis);
    if (it == ablation_defaults().end()) {
      throw ConfigError("axis must be one of mask_ratio, wider, shortcut, input_mode, decoder_depth, si_blocks, all");
    }
    for (const auto& v : rc.values.empty() ? it->second : rc.values) cells.push_back({rc.axis, v});
  }

  const LoadedData data = load_data(rc.data_dir);
  const ConditionDims dims = dims_of(data.info);
  TrainConfig tc = rc.train;
  tc.seed = rc.seed;
  tc.checkpoint_every = 0;
  tc.validate();
  rc.sampler.validate();

  // Validate every cell before spending time on training.
  std::vector<MdtConfig> configs;
  for (const auto& c : cells) {
    MdtConfig cfg = ablation_base(dims, rc.max_timestep);
    apply_cell(cfg, c);
    cfg.name = "ablate:" + c.axis + "=" + c.value;
    cfg.validate();
    configs.push_back(cfg);
  }

  const auto examples = examples_of(data.entries);
  const FeatureExtractor fx = obtain_extractor(rc, values_of(data.entries), out);
  const Schedule schedule = make_schedule(rc.max_timestep);
  const int count = rc.count > 0 ? std::min<int>(rc.count, static_cast<int>(data.entries.size()))
                                 : static_cast<int>(data.entries.size());
  std::vector<FlatGesture> real;
  for (const auto& e : data.entries) real.push_back({flatten(e.sample.motion), data.layout, data.info.options.fps});

  Table t{{"axis", "value", "fgd", "diversity", "beat_align", "srgr", "final_loss", "reference_fgd"},
          {},
          {"extractor " + checksum_hex(fx.checksum()) + ", steps=" + std::to_string(tc.steps) + ", sampler " +
               rc.sampler.label() + ", samples=" + std::to_string(count),
           "reference_fgd: full-scale value for the same setting; not expected at this scale"}};
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const FitResult fit_res = fit(examples, tc, configs[k], schedule);
    std::vector<FlatGesture> gen;
    std::vector<BeatSequence> beats;
    for (int i = 0; i < count; ++i) {
      const auto& e = data.entries[static_cast<std::size_t>(i)];
      SamplerConfig sc = rc.sampler;
      sc.seed = derive_seed(rc.seed, static_cast<std::uint64_t>(i));
      gen.push_back({sample(fit_res.model, e.sample.motion.frames(), e.sample.conditions, schedule, sc).x0,
                     data.layout, data.info.options.fps});
      beats.push_back(e.sample.audio_beats);
    }
    MetricOptions opt = rc.metrics;
    opt.seed = derive_seed(rc.seed, 0xD1ULL);
    const MetricReport rep = evaluate_metrics(real, gen, beats, fx, opt);
    auto row = std::vector<std::string>{cells[k].axis, cells[k].value};
    for (auto& m : metric_cells(rep)) row.push_back(std::move(m));
    row.push_back(fit_res.curve.empty() ? "" : format_double(fit_res.curve.back().combined));
    row.push_back(reference_fgd(cells[k]));
    t.add_row(std::move(row));
    out << "cell " << (k + 1) << "/" << cells.size() << " " << cells[k].axis << "=" << cells[k].value
        << " fgd=" << format_double(rep.fgd) << "\n";
  }
  if (!rc.out.empty()) write_text_file(rc.out, t.to_csv());
  out << t.to_text();
  return 0;
}

int dispatch(const RunConfig& rc, std::ostream& out) {
  if (rc.command == "gen-data") return cmd_gen_data(rc, out);
  if (rc.command == "train") return cmd_train(rc, out);
  if (rc.command == "sample") return cmd_sample(rc, out);
  if (rc.command == "eval") return cmd_eval(rc, out);
  if (rc.command == "bench") return cmd_bench(rc, out);
  if (rc.command == "ablate") return cmd_ablate(rc, out);
  throw ConfigError("unknown command " + rc.command);
}

void add_model_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--variant", rc.variant, "Model variant: XS, S, B or L")->capture_default_str();
  cmd->add_option("--T", rc.max_timestep, "Diffusion steps")->capture_default_str();
  cmd->add_option("--encoder-depth", rc.model.encoder_depth, "Encoder blocks");
  cmd->add_option("--decoder-depth", rc.model.decoder_depth, "Decoder blocks (< encoder depth)");
  cmd->add_option("--si-blocks", rc.model.si_blocks, "Side-interpolator blocks");
  cmd->add_option("--rho", rc.model.rho_base, "Base mask ratio");
  cmd->add_option("--wider", rc.model.wider, "Draw the mask ratio from [rho, rho + 0.2)");
  cmd->add_option("--shortcut", rc.model.shortcut, "Masked shortcut");
  cmd->add_option("--input-mode", rc.model.input_mode, "full+unmasked, full or unmasked");
}

void add_train_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--steps", rc.train.steps, "Optimizer steps")->capture_default_str();
  cmd->add_option("--batch", rc.train.batch_size, "Batch size")->capture_default_str();
  cmd->add_option("--lr", rc.train.optimizer.learning_rate, "AdamW learning rate")->capture_default_str();
  cmd->add_option("--weight-decay", rc.train.optimizer.weight_decay, "AdamW weight decay")->capture_default_str();
  cmd->add_option("--huber-delta", rc.train.huber_delta, "Huber threshold")->capture_default_str();
  cmd->add_option("--cond-dropout", rc.train.cond_dropout_p, "Condition dropout probability")->capture_default_str();
  cmd->add_option("--w-full", rc.train.w_full, "Weight of the full-path loss")->capture_default_str();
  cmd->add_option("--w-masked", rc.train.w_masked, "Weight of the masked-path loss")->capture_default_str();
  cmd->add_option("--curve-every", rc.train.curve_every, "Loss curve sampling interval")->capture_default_str();
}

void add_fx_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--extractor", rc.extractor, "Frozen feature extractor checkpoint")->check(CLI::ExistingFile);
  cmd->add_option("--save-extractor", rc.save_extractor, "Write the trained extractor here");
  cmd->add_option("--fx-window", rc.fx.window, "Extractor window (frames)")->capture_default_str();
  cmd->add_option("--fx-stride", rc.fx.stride, "Extractor window stride")->capture_default_str();
  cmd->add_option("--fx-dim", rc.fx.feature_dim, "Feature width")->capture_default_str();
  cmd->add_option("--fx-steps", rc.fx.steps, "Extractor training steps")->capture_default_str();
  cmd->add_option("--sigma", rc.metrics.beat_sigma, "BeatAlign kernel width (s)")->capture_default_str();
  cmd->add_option("--delta", rc.metrics.srgr_delta, "SRGR threshold (rad)")->capture_default_str();
  cmd->add_option("--pairs", rc.metrics.diversity_pairs, "Diversity pairs (0 = all)")->capture_default_str();
}

void add_sampler_options(CLI::App* cmd, RunConfig& rc, std::string& mode) {
  cmd->add_option("--mode", mode, "full or accel")->capture_default_str();
  cmd->add_option("--N", rc.sampler.skip, "Network-free steps per evaluation")->capture_default_str();
  cmd->add_option("--scale", rc.sampler.scale, "Noise scale (>= 1)")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  rc.train.optimizer.learning_rate = 1e-3;
  rc.train.batch_size = 16;
  std::string mode = "full";

  CLI::App app{"Masked diffusion transformer for conditioned gesture generation", "mdta2g"};
  app.set_config("--config", "", "Flat key=value file; flags override its values");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", rc.seed, "Random seed")->envname("MDTA2G_SEED")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset");
  gen->add_option("--out", rc.out, "Output directory")->required();
  gen->add_option("--n", rc.n_sequences, "Sequences")->capture_default_str();
  gen->add_option("--frames", rc.frames, "Frames per sequence")->capture_default_str();
  gen->add_option("--layout", rc.layout, "whole, upper or custom:J")->capture_default_str();
  gen->add_option("--fps", rc.synth.fps, "Frame rate")->capture_default_str();
  gen->add_option("--audio-dim", rc.synth.audio_dim, "Audio feature width")->capture_default_str();
  gen->add_option("--text-dim", rc.synth.text_dim, "Text feature width")->capture_default_str();
  gen->add_option("--speakers", rc.synth.n_speakers, "Speaker count")->capture_default_str();
  gen->add_option("--emotions", rc.synth.n_emotions, "Emotion count")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a model; writes model.ckpt and loss.csv");
  train->add_option("--data", rc.data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", rc.out, "Output directory")->required();
  train->add_option("--resume", rc.resume, "Continue from a training checkpoint")->check(CLI::ExistingFile);
  train->add_option("--checkpoint-every", rc.train.checkpoint_every, "Periodic checkpoint interval (0 = off)");
  train->add_flag("--svg", rc.svg, "Also write loss.svg");
  add_model_options(train, rc);
  add_train_options(train, rc);

  auto* smp = app.add_subcommand("sample", "Generate one gesture per dataset entry");
  smp->add_option("--checkpoint", rc.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  smp->add_option("--data", rc.data_dir, "Dataset supplying conditions")->required()->check(CLI::ExistingDirectory);
  smp->add_option("--out", rc.out, "Output directory")->required();
  smp->add_option("--count", rc.count, "Samples (0 = every entry)");
  add_sampler_options(smp, rc, mode);

  auto* ev = app.add_subcommand("eval", "FGD, Diversity, BeatAlign and SRGR between two gesture sets");
  ev->add_option("--real", rc.real_dir, "Reference dataset or gesture directory")->required()->check(
      CLI::ExistingDirectory);
  ev->add_option("--gen", rc.gen_dir, "Generated gesture directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--out", rc.out, "CSV report path");
  add_fx_options(ev, rc);

  auto* bench = app.add_subcommand("bench", "Time full and accelerated sampling");
  bench->add_option("--checkpoint", rc.checkpoint, "Model checkpoint (default: untrained variant)")->check(
      CLI::ExistingFile);
  bench->add_option("--data", rc.data_dir, "Dataset for conditions and metrics")->check(CLI::ExistingDirectory);
  bench->add_option("--out", rc.out, "Output directory for bench.csv and bench_timing.csv");
  bench->add_option("--modes", rc.bench_modes, "Comma-separated modes")->delimiter(',')->capture_default_str();
  bench->add_option("--N", rc.bench_skips, "Comma-separated skip counts")->delimiter(',')->capture_default_str();
  bench->add_option("--scale", rc.sampler.scale, "Noise scale (>= 1)")->capture_default_str();
  bench->add_option("--runs", rc.bench_runs, "Timed runs per config")->capture_default_str();
  bench->add_option("--frames", rc.frames, "Frames when no dataset is given")->capture_default_str();
  bench->add_option("--layout", rc.layout, "Layout when no dataset is given")->capture_default_str();
  add_model_options(bench, rc);
  add_fx_options(bench, rc);

  auto* abl = app.add_subcommand("ablate", "Train, sample and score one model per ablation cell");
  abl->add_option("--data", rc.data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  abl->add_option("--out", rc.out, "CSV report path");
  abl->add_option("--axis", rc.axis, "mask_ratio, wider, shortcut, input_mode, decoder_depth, si_blocks or all")
      ->capture_default_str();
  abl->add_option("--values", rc.values, "Comma-separated values for the axis")->delimiter(',');
  abl->add_option("--count", rc.count, "Samples per cell (0 = every entry)");
  abl->add_option("--T", rc.max_timestep, "Diffusion steps")->capture_default_str();
  add_train_options(abl, rc);
  add_sampler_options(abl, rc, mode);
  add_fx_options(abl, rc);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  rc.command = app.get_subcommands().front()->get_name();

  try {
    rc.sampler.mode = sampler_mode_from_string(mode);
    rc.sampler.seed = rc.seed;
    return dispatch(rc, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mdta2g
