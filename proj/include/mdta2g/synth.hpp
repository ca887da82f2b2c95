#pragma once

#include "mdta2g/conditions.hpp"
#include "mdta2g/gesture_data.hpp"

#include <cstdint>
#include <vector>

namespace mdta2g {

struct SynthOptions {
  double fps = 30.0;
  int audio_dim = 8;  // >= 5
  int text_dim = 8;
  int n_speakers = 8;
  int n_emotions = 8;
};

struct SyntheticSample {
  GestureSequence motion;
  ConditionBundle conditions;
  std::vector<double> audio_beats;  // seconds; ground-truth rhythm events
  int speaker = 0;
  int emotion = 0;
};

/// Desk-scale stand-in for a speech/motion corpus. Every joint follows a sum of
/// three sinusoids in axis-angle space around a speaker-dependent rest pose.
/// The layout's designated joint additionally swings about a fixed axis at a
/// speaker-dependent tempo; audio channel 0 is the 3-tap moving average of
/// that joint's angular speed, channels 1-2 encode the swing phase, 3-4 the
/// emotion intensity and tempo, and the rest are smooth distractors. Text is a
/// piecewise-constant sequence of word vectors from a shared vocabulary.
/// Sequence i depends only on (seed, i).
std::vector<SyntheticSample> synth_dataset(int n_sequences, int frames, const SkeletonLayout& layout,
                                           std::uint64_t seed, const SynthOptions& options = {});

/// 3-tap centered moving average with clamped edges.
std::vector<double> smooth3(const std::vector<double>& x);

/// Times (seconds) of strict interior local minima of x sampled at fps.
std::vector<double> local_minima_times(const std::vector<double>& x, double fps);

}  // namespace mdta2g
