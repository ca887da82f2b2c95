#pragma once

#include "mdta2g/gesture_data.hpp"
#include "mdta2g/synth.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mdta2g {

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

// Native gesture file: header "MDTA2G v1 <F> <J> <fps>" then F lines of J*9 floats.
void write_gesture_file(const std::filesystem::path& path, const FlatGesture& gesture);
FlatGesture read_gesture_file(const std::filesystem::path& path);
std::string gesture_to_text(const FlatGesture& gesture);
FlatGesture gesture_from_text(const std::string& text);

// Generic matrix variant for condition streams: "MDTA2G-MAT v1 <rows> <cols>".
void write_matrix_file(const std::filesystem::path& path, const Mat& m);
Mat read_matrix_file(const std::filesystem::path& path);

using KeyValues = std::map<std::string, std::string>;
/// Flat "key=value" lines; '#' starts a comment line.
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

struct DatasetInfo {
  std::string layout_name = "whole";
  int count = 0;
  int frames = 0;
  SynthOptions options;
};

struct DatasetEntry {
  std::string name;
  SyntheticSample sample;
};

/// Writes dataset.txt plus <name>.gesture/.audio/.text/.labels per sequence.
void write_dataset(const std::filesystem::path& dir, const DatasetInfo& info,
                   const std::vector<SyntheticSample>& samples);
std::vector<DatasetEntry> read_dataset(const std::filesystem::path& dir, DatasetInfo* info = nullptr);

/// Sorted *.gesture files of a directory.
std::vector<std::filesystem::path> list_gesture_files(const std::filesystem::path& dir);

std::string sequence_name(int index);

}  // namespace mdta2g
