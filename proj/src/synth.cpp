#include "mdta2g/synth.hpp"

#include "mdta2g/errors.hpp"
#include "mdta2g/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace mdta2g {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 random_unit(Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-6) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

struct Sinusoid {
  Vec3 axis;
  double amplitude;
  double freq;
  double phase;
};

// Shared across all sequences of a dataset (depends on seed only).
struct DatasetTables {
  std::vector<Vec3> rest_pose;                        // per joint
  std::vector<std::vector<Vec3>> speaker_offsets;     // [speaker][joint]
  std::vector<double> speaker_tempo;                  // Hz
  std::vector<Vec> vocabulary;                        // text word vectors
};

DatasetTables make_tables(const SkeletonLayout& layout, std::uint64_t seed, const SynthOptions& opt) {
  Rng rng(derive_seed(seed, 0xDA7A5E7ULL));
  DatasetTables t;
  for (int j = 0; j < layout.joint_count; ++j) t.rest_pose.push_back(random_unit(rng) * rng.uniform(0.0, 0.4));
  t.speaker_offsets.resize(static_cast<std::size_t>(opt.n_speakers));
  for (auto& offsets : t.speaker_offsets) {
    for (int j = 0; j < layout.joint_count; ++j) offsets.push_back(random_unit(rng) * rng.uniform(0.0, 0.15));
  }
  for (int s = 0; s < opt.n_speakers; ++s) t.speaker_tempo.push_back(rng.uniform(1.0, 2.0));
  for (int w = 0; w < 16; ++w) {
    Vec word(opt.text_dim);
    for (int k = 0; k < opt.text_dim; ++k) word[k] = rng.normal() * 0.5;
    t.vocabulary.push_back(word);
  }
  return t;
}

}  // namespace

std::vector<double> smooth3(const std::vector<double>& x) {
  std::vector<double> y(x.size());
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double a = x[static_cast<std::size_t>(std::max<std::ptrdiff_t>(i - 1, 0))];
    const double b = x[static_cast<std::size_t>(i)];
    const double c = x[static_cast<std::size_t>(std::min<std::ptrdiff_t>(i + 1, n - 1))];
    y[static_cast<std::size_t>(i)] = (a + b + c) / 3.0;
  }
  return y;
}

std::vector<double> local_minima_times(const std::vector<double>& x, double fps) {
  std::vector<double> times;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] < x[i - 1] && x[i] < x[i + 1]) times.push_back(static_cast<double>(i) / fps);
  }
  return times;
}

std::vector<SyntheticSample> synth_dataset(int n_sequences, int frames, const SkeletonLayout& layout,
                                           std::uint64_t seed, const SynthOptions& opt) {
  if (n_sequences < 1) throw ConfigError("synth_dataset: n_sequences must be >= 1");
  if (frames < 8) throw ConfigError("synth_dataset: frames must be >= 8");
  if (opt.audio_dim < 5) throw ConfigError("synth_dataset: audio_dim must be >= 5");
  if (opt.text_dim < 1 || opt.n_speakers < 1 || opt.n_emotions < 1) {
    throw ConfigError("synth_dataset: text_dim, n_speakers and n_emotions must be positive");
  }
  if (!(opt.fps > 0.0) || opt.fps < 30.0) throw ConfigError("synth_dataset: fps must be >= 30");
  layout.validate();

  const DatasetTables tables = make_tables(layout, seed, opt);
  const int designated = layout.designated_joint;
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(n_sequences));

  for (int i = 0; i < n_sequences; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i) + 1));
    SyntheticSample sample;
    sample.speaker = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.n_speakers)));
    sample.emotion = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.n_emotions)));
    const double intensity = 0.7 + 0.5 * sample.emotion / std::max(1, opt.n_emotions - 1);  // <= 1.2
    const double tempo = tables.speaker_tempo[static_cast<std::size_t>(sample.speaker)] * rng.uniform(0.9, 1.1);

    // Per-joint sinusoids. Peak axis-angle speed is bounded by
    // 3 * 0.1 * 1.2 * 2pi * 1.5 rad/s ~= 3.4 rad/s, i.e. < 0.12 rad per frame at 30 fps.
    std::vector<std::array<Sinusoid, 3>> waves(static_cast<std::size_t>(layout.joint_count));
    for (auto& joint_waves : waves) {
      for (auto& w : joint_waves) {
        w.axis = random_unit(rng);
        w.amplitude = rng.uniform(0.02, 0.1) * intensity;
        w.freq = rng.uniform(0.25, 1.5);
        w.phase = rng.uniform(0.0, kTwoPi);
      }
    }
    // Designated joint: single fixed axis, so its geodesic speed is |theta'(t)|.
    // Peak speed <= 0.12 * 1.2 * 2pi * 2.2 * 1.6 ~= 3.2 rad/s.
    const Vec3 swing_axis = random_unit(rng);
    const double swing_amp = 0.12 * intensity;
    const double swing_phase = rng.uniform(0.0, kTwoPi);
    const double swing_phase2 = rng.uniform(0.0, kTwoPi);
    const double swing_base = rng.uniform(-0.3, 0.3);

    GestureSequence motion(layout, frames, opt.fps);
    for (int f = 0; f < frames; ++f) {
      const double time = f / opt.fps;
      for (int j = 0; j < layout.joint_count; ++j) {
        if (j == designated) {
          const double theta = swing_base + swing_amp * (std::sin(kTwoPi * tempo * time + swing_phase) +
                                                         0.3 * std::sin(2.0 * kTwoPi * tempo * time + swing_phase2));
          motion.at(f, j) = axis_angle_to_rotmat(swing_axis * theta);
          continue;
        }
        Vec3 aa = tables.rest_pose[static_cast<std::size_t>(j)] +
                  tables.speaker_offsets[static_cast<std::size_t>(sample.speaker)][static_cast<std::size_t>(j)];
        for (const auto& w : waves[static_cast<std::size_t>(j)]) {
          aa += w.axis * (w.amplitude * std::sin(kTwoPi * w.freq * time + w.phase));
        }
        motion.at(f, j) = axis_angle_to_rotmat(aa);
      }
    }

    const std::vector<double> speed = joint_angular_speed(motion, designated);
    const std::vector<double> envelope = smooth3(speed);

    Mat audio(frames, opt.audio_dim);
    std::vector<double> distractor_freq;
    for (int c = 5; c < opt.audio_dim; ++c) distractor_freq.push_back(rng.uniform(0.2, 3.0));
    for (int f = 0; f < frames; ++f) {
      const double time = f / opt.fps;
      audio(f, 0) = envelope[static_cast<std::size_t>(f)];
      audio(f, 1) = std::cos(kTwoPi * tempo * time + swing_phase);
      audio(f, 2) = std::sin(kTwoPi * tempo * time + swing_phase);
      audio(f, 3) = intensity;
      audio(f, 4) = tempo;
      for (int c = 5; c < opt.audio_dim; ++c) {
        audio(f, c) = 0.5 * std::sin(kTwoPi * distractor_freq[static_cast<std::size_t>(c - 5)] * time + c);
      }
    }

    Mat text(frames, opt.text_dim);
    int f = 0;
    while (f < frames) {
      const int duration = 8 + static_cast<int>(rng.uniform_int(8));
      const Vec& word = tables.vocabulary[rng.uniform_int(tables.vocabulary.size())];
      for (int k = 0; k < duration && f < frames; ++k, ++f) text.row(f) = word.transpose();
    }

    sample.conditions.audio = std::move(audio);
    sample.conditions.text = std::move(text);
    sample.conditions.id_onehot = Vec::Zero(opt.n_speakers);
    sample.conditions.id_onehot[sample.speaker] = 1.0;
    sample.conditions.emotion_onehot = Vec::Zero(opt.n_emotions);
    sample.conditions.emotion_onehot[sample.emotion] = 1.0;
    sample.audio_beats = local_minima_times(envelope, opt.fps);
    sample.motion = std::move(motion);
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace mdta2g
