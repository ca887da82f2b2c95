#include "mdta2g/io.hpp"

#include "mdta2g/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mdta2g {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double parse_double(const std::string& tok, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw ParseError(line, "bad number '" + tok + "'");
  return v;
}

// Reads `rows` lines of `cols` numbers following the header line.
Mat parse_rows(std::istringstream& in, Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  std::string line;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int line_no = static_cast<int>(r) + 2;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing data row");
    std::istringstream ls(line);
    std::string tok;
    Eigen::Index c = 0;
    while (ls >> tok) {
      if (c >= cols) throw ParseError(line_no, "too many values in row");
      m(r, c++) = parse_double(tok, line_no);
    }
    if (c != cols) throw ParseError(line_no, "expected " + std::to_string(cols) + " values, found " + std::to_string(c));
  }
  return m;
}

std::string rows_to_text(const Mat& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ' ';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_double(tok, 0));
  }
  return out;
}

int to_int(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing key '" + key + "'");
  return std::stoi(it->second);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::string gesture_to_text(const FlatGesture& g) {
  if (g.values.cols() != g.layout.feature_width()) {
    throw std::invalid_argument("gesture file: width does not match layout");
  }
  std::string out = "MDTA2G v1 " + std::to_string(g.values.rows()) + " " + std::to_string(g.layout.joint_count) +
                    " " + format_double(g.fps) + "\n";
  return out + rows_to_text(g.values);
}

FlatGesture gesture_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic, version;
  long frames = 0, joints = 0;
  std::string fps_text;
  std::string header;
  if (!std::getline(in, header)) throw ParseError(1, "empty gesture file");
  std::istringstream hs(header);
  if (!(hs >> magic >> version >> frames >> joints >> fps_text) || magic != "MDTA2G" || version != "v1") {
    throw ParseError(1, "expected header 'MDTA2G v1 <F> <J> <fps>'");
  }
  if (frames <= 0 || joints <= 0) throw ParseError(1, "frame and joint counts must be positive");
  FlatGesture g;
  g.fps = parse_double(fps_text, 1);
  g.layout = SkeletonLayout::custom(static_cast<int>(joints));
  g.values = parse_rows(in, frames, joints * 9);
  return g;
}

void write_gesture_file(const fs::path& path, const FlatGesture& gesture) {
  write_file(path, gesture_to_text(gesture));
}

FlatGesture read_gesture_file(const fs::path& path) {
  try {
    return gesture_from_text(read_file(path));
  } catch (const ParseError& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_matrix_file(const fs::path& path, const Mat& m) {
  write_file(path, "MDTA2G-MAT v1 " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n" +
                       rows_to_text(m));
}

Mat read_matrix_file(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  long rows = 0, cols = 0;
  if (!(hs >> magic >> version >> rows >> cols) || magic != "MDTA2G-MAT" || version != "v1" || rows < 0 || cols < 0) {
    throw std::runtime_error(path.string() + ": expected header 'MDTA2G-MAT v1 <rows> <cols>'");
  }
  try {
    return parse_rows(in, rows, cols);
  } catch (const ParseError& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

KeyValues read_key_values(const fs::path& path) {
  std::istringstream in(read_file(path));
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  write_file(path, out);
}

std::string sequence_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%04d", index);
  return buf;
}

void write_dataset(const fs::path& dir, const DatasetInfo& info, const std::vector<SyntheticSample>& samples) {
  fs::create_directories(dir);
  write_key_values(dir / "dataset.txt", {{"layout", info.layout_name},
                                          {"count", std::to_string(samples.size())},
                                          {"frames", std::to_string(info.frames)},
                                          {"fps", format_double(info.options.fps)},
                                          {"audio_dim", std::to_string(info.options.audio_dim)},
                                          {"text_dim", std::to_string(info.options.text_dim)},
                                          {"n_speakers", std::to_string(info.options.n_speakers)},
                                          {"n_emotions", std::to_string(info.options.n_emotions)}});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string name = sequence_name(static_cast<int>(i));
    write_gesture_file(dir / (name + ".gesture"), FlatGesture{flatten(s.motion), s.motion.layout(), s.motion.fps()});
    write_matrix_file(dir / (name + ".audio"), s.conditions.audio);
    write_matrix_file(dir / (name + ".text"), s.conditions.text);
    write_key_values(dir / (name + ".labels"), {{"speaker", std::to_string(s.speaker)},
                                                 {"emotion", std::to_string(s.emotion)},
                                                 {"beats", join_doubles(s.audio_beats)}});
  }
}

std::vector<DatasetEntry> read_dataset(const fs::path& dir, DatasetInfo* info_out) {
  const KeyValues kv = read_key_values(dir / "dataset.txt");
  DatasetInfo info;
  info.layout_name = kv.at("layout");
  info.count = to_int(kv, "count");
  info.frames = to_int(kv, "frames");
  info.options.fps = std::stod(kv.at("fps"));
  info.options.audio_dim = to_int(kv, "audio_dim");
  info.options.text_dim = to_int(kv, "text_dim");
  info.options.n_speakers = to_int(kv, "n_speakers");
  info.options.n_emotions = to_int(kv, "n_emotions");
  const SkeletonLayout layout = SkeletonLayout::from_name(info.layout_name);

  std::vector<DatasetEntry> entries;
  for (int i = 0; i < info.count; ++i) {
    DatasetEntry e;
    e.name = sequence_name(i);
    const FlatGesture g = read_gesture_file(dir / (e.name + ".gesture"));
    if (g.layout.joint_count != layout.joint_count) throw std::runtime_error(e.name + ": joint count differs from dataset layout");
    e.sample.motion = unflatten(g.values, layout, g.fps);
    e.sample.conditions.audio = read_matrix_file(dir / (e.name + ".audio"));
    e.sample.conditions.text = read_matrix_file(dir / (e.name + ".text"));
    const KeyValues labels = read_key_values(dir / (e.name + ".labels"));
    e.sample.speaker = to_int(labels, "speaker");
    e.sample.emotion = to_int(labels, "emotion");
    if (e.sample.speaker < 0 || e.sample.speaker >= info.options.n_speakers || e.sample.emotion < 0 ||
        e.sample.emotion >= info.options.n_emotions) {
      throw std::runtime_error(e.name + ": label out of range");
    }
    e.sample.conditions.id_onehot = Vec::Zero(info.options.n_speakers);
    e.sample.conditions.id_onehot[e.sample.speaker] = 1.0;
    e.sample.conditions.emotion_onehot = Vec::Zero(info.options.n_emotions);
    e.sample.conditions.emotion_onehot[e.sample.emotion] = 1.0;
    auto beats = labels.find("beats");
    if (beats != labels.end()) e.sample.audio_beats = split_doubles(beats->second);
    e.sample.conditions.validate(e.sample.motion.frames());
    entries.push_back(std::move(e));
  }
  if (info_out) *info_out = info;
  return entries;
}

std::vector<fs::path> list_gesture_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".gesture") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace mdta2g
