#include "mdta2g/bvh.hpp"

#include "mdta2g/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mdta2g {

namespace {

struct Token {
  std::string text;
  int line;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) {
    int line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else {
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        tokens_.push_back({std::string(text.substr(i, j - i)), line});
        i = j;
      }
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }
  int line() const {
    if (tokens_.empty()) return 1;
    return pos_ < tokens_.size() ? tokens_[pos_].line : tokens_.back().line;
  }
  const Token& peek() const {
    if (done()) throw ParseError(line(), "unexpected end of input");
    return tokens_[pos_];
  }
  Token next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  void expect(std::string_view word) {
    Token t = next();
    if (t.text != word) throw ParseError(t.line, "expected '" + std::string(word) + "', got '" + t.text + "'");
  }
  double number() {
    Token t = next();
    double v = 0.0;
    const char* begin = t.text.data();
    const char* end = begin + t.text.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(t.line, "expected a number, got '" + t.text + "'");
    return v;
  }
  int integer() {
    Token t = next();
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      throw ParseError(t.line, "expected an integer, got '" + t.text + "'");
    }
    return v;
  }
  std::size_t position() const { return pos_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  void seek(std::size_t p) { pos_ = p; }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

void parse_joint(Lexer& lex, std::vector<BvhJoint>& joints, int parent) {
  BvhJoint joint;
  joint.parent = parent;
  Token name = lex.next();
  joint.name = name.text;
  lex.expect("{");
  lex.expect("OFFSET");
  for (double& v : joint.offset) v = lex.number();
  Token channels_kw = lex.next();
  if (channels_kw.text != "CHANNELS") {
    throw ParseError(channels_kw.line, "expected CHANNELS for joint '" + joint.name + "'");
  }
  const int count = lex.integer();
  if (count <= 0) throw ParseError(channels_kw.line, "channel count must be positive");
  for (int i = 0; i < count; ++i) {
    Token ch = lex.next();
    if (ch.text.size() != 9 || (ch.text.substr(1) != "rotation" && ch.text.substr(1) != "position") ||
        (ch.text[0] != 'X' && ch.text[0] != 'Y' && ch.text[0] != 'Z')) {
      throw ParseError(ch.line, "unknown channel '" + ch.text + "'");
    }
    joint.channels.push_back(ch.text);
    if (ch.text.substr(1) == "rotation") joint.rotation_order.push_back(ch.text[0]);
  }
  if (!is_supported_euler_order(joint.rotation_order)) {
    throw ParseError(channels_kw.line, "joint '" + joint.name + "' has unsupported rotation order '" +
                                           joint.rotation_order + "'");
  }
  const int self = static_cast<int>(joints.size());
  joints.push_back(joint);
  while (true) {
    Token t = lex.next();
    if (t.text == "}") return;
    if (t.text == "JOINT") {
      parse_joint(lex, joints, self);
    } else if (t.text == "End") {
      lex.expect("Site");
      lex.expect("{");
      lex.expect("OFFSET");
      joints[self].has_end_site = true;
      for (double& v : joints[self].end_offset) v = lex.number();
      lex.expect("}");
    } else {
      throw ParseError(t.line, "unexpected token '" + t.text + "' in joint '" + joints[self].name + "'");
    }
  }
}

}  // namespace

BvhClip parse_bvh(std::string_view text) {
  Lexer lex(text);
  BvhClip clip;
  lex.expect("HIERARCHY");
  lex.expect("ROOT");
  parse_joint(lex, clip.joints, -1);
  while (!lex.done() && lex.peek().text == "ROOT") {
    Token t = lex.next();
    throw ParseError(t.line, "multiple ROOT joints are not supported");
  }
  lex.expect("MOTION");
  lex.expect("Frames:");
  const int frames = lex.integer();
  if (frames <= 0) throw ParseError(lex.line(), "frame count must be positive");
  lex.expect("Frame");
  lex.expect("Time:");
  clip.frame_time = lex.number();
  if (!(clip.frame_time > 0.0)) throw ParseError(lex.line(), "frame time must be positive");

  SkeletonLayout layout;
  layout.joint_count = static_cast<int>(clip.joints.size());
  for (std::size_t i = 0; i < clip.joints.size(); ++i) {
    layout.joint_names.push_back(clip.joints[i].name);
    layout.body_subset.push_back(static_cast<int>(i));
  }
  layout.designated_joint = layout.joint_count - 1;
  clip.layout = layout;

  // Rounds e.g. 0.008333 s to 120 fps; leaves genuinely fractional rates alone.
  double fps = 1.0 / clip.frame_time;
  if (std::abs(fps - std::round(fps)) < 1e-2) fps = std::round(fps);

  std::size_t channels_per_frame = 0;
  for (const auto& j : clip.joints) channels_per_frame += j.channels.size();

  // Frame rows are line-delimited: group the remaining tokens by line.
  const auto& tokens = lex.tokens();
  std::vector<std::vector<const Token*>> rows;
  for (std::size_t p = lex.position(); p < tokens.size(); ++p) {
    if (rows.empty() || rows.back().front()->line != tokens[p].line) rows.emplace_back();
    rows.back().push_back(&tokens[p]);
  }
  if (static_cast<int>(rows.size()) != frames) {
    throw ParseError(rows.empty() ? lex.line() : rows.back().back()->line,
                     "frame count mismatch: header says " + std::to_string(frames) + ", found " +
                         std::to_string(rows.size()));
  }

  clip.motion = GestureSequence(layout, frames, fps);
  for (int f = 0; f < frames; ++f) {
    const auto& row = rows[static_cast<std::size_t>(f)];
    if (row.size() != channels_per_frame) {
      throw ParseError(row.front()->line, "channel-count mismatch: expected " +
                                              std::to_string(channels_per_frame) + " values, found " +
                                              std::to_string(row.size()));
    }
    std::size_t k = 0;
    for (std::size_t j = 0; j < clip.joints.size(); ++j) {
      const auto& joint = clip.joints[j];
      Vec3 angles = Vec3::Zero();
      int r = 0;
      for (const auto& ch : joint.channels) {
        const Token* tok = row[k++];
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok->text.data(), tok->text.data() + tok->text.size(), v);
        if (ec != std::errc() || ptr != tok->text.data() + tok->text.size() || !std::isfinite(v)) {
          throw ParseError(tok->line, "bad motion value '" + tok->text + "'");
        }
        if (ch.substr(1) == "rotation") angles[r++] = v;
      }
      clip.motion.at(f, static_cast<int>(j)) = euler_to_rotmat(angles, joint.rotation_order);
    }
  }
  return clip;
}

std::string write_bvh(const BvhClip& clip, const GestureSequence& motion) {
  if (motion.joints() != static_cast<int>(clip.joints.size())) {
    throw std::invalid_argument("write_bvh: motion joint count differs from hierarchy");
  }
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "HIERARCHY\n";
  // Children are emitted depth-first in index order, matching how they were parsed.
  std::vector<std::vector<int>> children(clip.joints.size());
  for (std::size_t i = 0; i < clip.joints.size(); ++i) {
    if (clip.joints[i].parent >= 0) children[static_cast<std::size_t>(clip.joints[i].parent)].push_back(static_cast<int>(i));
  }
  auto emit = [&](auto&& self, int idx, int depth) -> void {
    const auto& j = clip.joints[static_cast<std::size_t>(idx)];
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    os << pad << (j.parent < 0 ? "ROOT " : "JOINT ") << j.name << "\n" << pad << "{\n";
    os << pad << "  OFFSET " << num(j.offset[0]) << ' ' << num(j.offset[1]) << ' ' << num(j.offset[2]) << "\n";
    os << pad << "  CHANNELS " << j.channels.size();
    for (const auto& c : j.channels) os << ' ' << c;
    os << "\n";
    for (int c : children[static_cast<std::size_t>(idx)]) self(self, c, depth + 1);
    if (j.has_end_site) {
      os << pad << "  End Site\n" << pad << "  {\n" << pad << "    OFFSET " << num(j.end_offset[0]) << ' '
         << num(j.end_offset[1]) << ' ' << num(j.end_offset[2]) << "\n" << pad << "  }\n";
    }
    os << pad << "}\n";
  };
  emit(emit, 0, 0);
  os << "MOTION\nFrames: " << motion.frames() << "\nFrame Time: " << num(1.0 / motion.fps()) << "\n";
  for (int f = 0; f < motion.frames(); ++f) {
    bool first = true;
    for (std::size_t j = 0; j < clip.joints.size(); ++j) {
      const auto& joint = clip.joints[j];
      const Vec3 angles = rotmat_to_euler(motion.at(f, static_cast<int>(j)), joint.rotation_order);
      int r = 0;
      for (const auto& ch : joint.channels) {
        if (!first) os << ' ';
        first = false;
        os << (ch.substr(1) == "rotation" ? num(angles[r++]) : std::string("0"));
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace mdta2g
