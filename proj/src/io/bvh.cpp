#include "style_erd/io/bvh.hpp"

#include "style_erd/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace style_erd::io {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Quaternion axis_rotation(int axis, double radians) {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  a[axis] = 1.0;
  return Quaternion::from_axis_angle(a, radians);
}

struct Token {
  std::string text;
  int line;
};

struct JointChannels {
  int first_column = 0;
  // Root only: column of X/Y/Z position within the joint's channels.
  std::array<int, 3> position_slot = {-1, -1, -1};
  // Column of each rotation channel in declaration order, and its axis.
  std::array<int, 3> rotation_slot = {-1, -1, -1};
  EulerOrder order = {0, 0, 0};
  int count = 0;
};

class HierarchyParser {
 public:
  explicit HierarchyParser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  void parse(Skeleton& skeleton, std::vector<JointChannels>& channels) {
    expect("HIERARCHY");
    expect("ROOT");
    parse_joint(skeleton, channels, kNoParent);
    if (pos_ != tokens_.size()) {
      throw ParseError(tokens_[pos_].line, "unexpected token '" + tokens_[pos_].text +
                                               "' after root joint (only one ROOT is supported)");
    }
  }

 private:
  const Token& next() {
    if (pos_ >= tokens_.size()) {
      throw ParseError(tokens_.empty() ? 1 : tokens_.back().line,
                       "unexpected end of HIERARCHY section");
    }
    return tokens_[pos_++];
  }

  const Token& peek() {
    if (pos_ >= tokens_.size()) {
      throw ParseError(tokens_.empty() ? 1 : tokens_.back().line,
                       "unexpected end of HIERARCHY section");
    }
    return tokens_[pos_];
  }

  void expect(const std::string& word) {
    const Token& t = next();
    if (t.text != word) {
      throw ParseError(t.line, "expected '" + word + "', found '" + t.text + "'");
    }
  }

  double number() {
    const Token& t = next();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(v)) {
      throw ParseError(t.line, "expected a number, found '" + t.text + "'");
    }
    return v;
  }

  Eigen::Vector3d offset() {
    expect("OFFSET");
    Eigen::Vector3d o;
    o.x() = number();
    o.y() = number();
    o.z() = number();
    return o;
  }

  void parse_joint(Skeleton& skeleton, std::vector<JointChannels>& channels, int parent) {
    const Token& name = next();
    const int index = skeleton.joint_count();
    const bool is_root = parent == kNoParent;
    expect("{");
    skeleton.parents.push_back(parent);
    skeleton.names.push_back(name.text);
    skeleton.offsets.push_back(offset());

    const Token& ch = next();
    if (ch.text != "CHANNELS") {
      throw ParseError(ch.line, "expected 'CHANNELS' for joint '" + name.text + "'");
    }
    const int count_line = peek().line;
    const double declared = number();
    JointChannels jc;
    jc.count = static_cast<int>(declared);
    if (jc.count != declared || jc.count != (is_root ? 6 : 3)) {
      throw ParseError(count_line, "joint '" + name.text + "' declares " +
                                       std::to_string(static_cast<long>(declared)) +
                                       " channels; expected " + (is_root ? "6" : "3"));
    }
    jc.first_column = channels.empty() ? 0 : channels.back().first_column + channels.back().count;
    int rotations = 0;
    for (int c = 0; c < jc.count; ++c) {
      const Token& t = next();
      if (t.text.size() != 9 || (t.text.substr(1) != "rotation" && t.text.substr(1) != "position")) {
        throw ParseError(t.line, "unknown channel '" + t.text + "'");
      }
      const int axis = t.text[0] - 'X';
      if (axis < 0 || axis > 2) throw ParseError(t.line, "unknown channel '" + t.text + "'");
      if (t.text.substr(1) == "position") {
        if (!is_root) throw ParseError(t.line, "position channel on non-root joint");
        if (jc.position_slot[axis] != -1) throw ParseError(t.line, "duplicate channel");
        jc.position_slot[axis] = c;
      } else {
        if (rotations == 3) throw ParseError(t.line, "too many rotation channels");
        for (int r = 0; r < rotations; ++r) {
          if (jc.order[r] == axis) throw ParseError(t.line, "duplicate rotation axis");
        }
        jc.rotation_slot[rotations] = c;
        jc.order[rotations] = axis;
        ++rotations;
      }
    }
    if (rotations != 3) {
      throw ParseError(ch.line, "joint '" + name.text + "' must declare 3 rotation channels");
    }
    channels.push_back(jc);
    (void)index;

    while (true) {
      const Token& t = next();
      if (t.text == "}") return;
      if (t.text == "JOINT") {
        parse_joint(skeleton, channels, index);
      } else if (t.text == "End") {
        expect("Site");
        expect("{");
        offset();
        expect("}");
      } else {
        throw ParseError(t.line, "unexpected token '" + t.text + "' in joint '" + name.text + "'");
      }
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
    if (start == text.size()) break;
  }
  return lines;
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

double parse_value(const std::string& s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(line, "MOTION section: expected a number, found '" + s + "'");
  }
  return v;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

Quaternion euler_to_quaternion(const std::array<double, 3>& degrees, EulerOrder order) {
  return (axis_rotation(order[0], degrees[0] * kDegToRad) *
          axis_rotation(order[1], degrees[1] * kDegToRad) *
          axis_rotation(order[2], degrees[2] * kDegToRad))
      .normalized();
}

std::array<double, 3> quaternion_to_euler(const Quaternion& q, EulerOrder order) {
  const Eigen::Matrix3d r = q.normalized().to_matrix();
  const int i = order[0], j = order[1], k = order[2];
  const double s = (j == (i + 1) % 3) ? 1.0 : -1.0;
  const double sb = std::clamp(s * r(i, k), -1.0, 1.0);
  std::array<double, 3> out{};
  out[1] = std::asin(sb);
  if (std::fabs(sb) < 1.0 - 1e-12) {
    out[0] = std::atan2(-s * r(j, k), r(k, k));
    out[2] = std::atan2(-s * r(i, j), r(i, i));
  } else {
    // Gimbal lock: fold the free angle into the first axis.
    out[0] = std::atan2(s * r(k, j), r(j, j));
    out[2] = 0.0;
  }
  for (double& a : out) a /= kDegToRad;
  return out;
}

MotionClip parse_bvh(std::string_view text, const std::string& id) {
  const std::vector<std::string> lines = split_lines(text);
  std::vector<Token> tokens;
  int motion_line = -1;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    auto ws = words(lines[l]);
    if (!ws.empty() && ws[0] == "MOTION") {
      motion_line = static_cast<int>(l);
      break;
    }
    for (auto& w : ws) tokens.push_back({std::move(w), static_cast<int>(l) + 1});
  }
  if (tokens.empty() || tokens[0].text != "HIERARCHY") {
    throw ParseError(tokens.empty() ? 1 : tokens[0].line, "missing HIERARCHY header");
  }
  if (motion_line < 0) {
    throw ParseError(static_cast<int>(lines.size()), "missing MOTION section");
  }

  MotionClip clip;
  clip.id = id;
  std::vector<JointChannels> channels;
  HierarchyParser(std::move(tokens)).parse(clip.skeleton, channels);
  clip.skeleton.validate();
  const int columns = channels.back().first_column + channels.back().count;

  // Header lines of the MOTION section.
  std::size_t l = static_cast<std::size_t>(motion_line) + 1;
  auto skip_blank = [&] {
    while (l < lines.size() && words(lines[l]).empty()) ++l;
  };
  skip_blank();
  if (l >= lines.size()) throw ParseError(motion_line + 1, "MOTION section: missing 'Frames:'");
  auto frames_words = words(lines[l]);
  if (frames_words.size() != 2 || frames_words[0] != "Frames:") {
    throw ParseError(static_cast<int>(l) + 1, "MOTION section: expected 'Frames: <count>'");
  }
  const double declared_d = parse_value(frames_words[1], static_cast<int>(l) + 1);
  const long declared = static_cast<long>(declared_d);
  if (declared < 1 || declared != declared_d) {
    throw ParseError(static_cast<int>(l) + 1, "MOTION section: frame count must be a positive integer");
  }
  ++l;
  skip_blank();
  if (l >= lines.size()) throw ParseError(static_cast<int>(l), "MOTION section: missing 'Frame Time:'");
  auto time_words = words(lines[l]);
  if (time_words.size() != 3 || time_words[0] != "Frame" || time_words[1] != "Time:") {
    throw ParseError(static_cast<int>(l) + 1, "MOTION section: expected 'Frame Time: <seconds>'");
  }
  const double frame_time = parse_value(time_words[2], static_cast<int>(l) + 1);
  if (!(frame_time > 0.0)) {
    throw ParseError(static_cast<int>(l) + 1, "MOTION section: Frame Time must be positive");
  }
  clip.fps = 1.0 / frame_time;
  ++l;

  const int j = clip.skeleton.joint_count();
  std::vector<std::vector<Quaternion>> rotations;
  std::vector<Eigen::Vector3d> roots;
  int last_line = static_cast<int>(l);
  for (; l < lines.size(); ++l) {
    auto ws = words(lines[l]);
    if (ws.empty()) continue;
    const int line_no = static_cast<int>(l) + 1;
    last_line = line_no;
    if (static_cast<long>(rotations.size()) == declared) {
      throw ParseError(line_no, "MOTION section declares " + std::to_string(declared) +
                                    " frames but supplies more rows");
    }
    if (static_cast<int>(ws.size()) != columns) {
      throw ParseError(line_no, "MOTION section: frame " + std::to_string(rotations.size()) +
                                    " has " + std::to_string(ws.size()) + " values, expected " +
                                    std::to_string(columns) + " (channel count mismatch)");
    }
    std::vector<double> row(ws.size());
    for (std::size_t c = 0; c < ws.size(); ++c) row[c] = parse_value(ws[c], line_no);
    std::vector<Quaternion> q(static_cast<std::size_t>(j));
    for (int joint = 0; joint < j; ++joint) {
      const JointChannels& jc = channels[joint];
      std::array<double, 3> angles{};
      for (int r = 0; r < 3; ++r) angles[r] = row[jc.first_column + jc.rotation_slot[r]];
      q[joint] = euler_to_quaternion(angles, jc.order).canonical();
    }
    const JointChannels& root = channels[0];
    roots.emplace_back(row[root.first_column + root.position_slot[0]],
                       row[root.first_column + root.position_slot[1]],
                       row[root.first_column + root.position_slot[2]]);
    rotations.push_back(std::move(q));
  }
  if (static_cast<long>(rotations.size()) != declared) {
    throw ParseError(last_line, "MOTION section declares " + std::to_string(declared) +
                                    " frames but supplies " + std::to_string(rotations.size()));
  }
  clip.frames = assemble_frames(clip.skeleton, rotations, roots, clip.fps);
  return clip;
}

MotionClip load_bvh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bvh(ss.str(), path.stem().string());
}

std::string serialize_bvh(const MotionClip& clip, EulerOrder order) {
  const Skeleton& sk = clip.skeleton;
  const int j = sk.joint_count();
  const char axes[3] = {'X', 'Y', 'Z'};
  std::string rot_channels;
  for (int a : order) {
    rot_channels += ' ';
    rot_channels += axes[a];
    rot_channels += "rotation";
  }
  auto joint_name = [&](int i) {
    return i < static_cast<int>(sk.names.size()) ? sk.names[i] : "joint" + std::to_string(i);
  };
  std::vector<std::vector<int>> children(static_cast<std::size_t>(j));
  for (int i = 1; i < j; ++i) children[sk.parents[i]].push_back(i);

  std::ostringstream os;
  os << "HIERARCHY\n";
  // Joints are written depth-first; channel columns follow the same order.
  std::vector<int> column_order;
  auto emit = [&](auto&& self, int i, int depth) -> void {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    os << pad << (i == 0 ? "ROOT " : "JOINT ") << joint_name(i) << "\n" << pad << "{\n";
    const auto& o = sk.offsets[i];
    os << pad << "  OFFSET " << fmt9(o.x()) << ' ' << fmt9(o.y()) << ' ' << fmt9(o.z()) << "\n";
    os << pad << "  CHANNELS " << (i == 0 ? "6 Xposition Yposition Zposition" : "3")
       << rot_channels << "\n";
    column_order.push_back(i);
    for (int c : children[i]) self(self, c, depth + 1);
    os << pad << "}\n";
  };
  emit(emit, 0, 0);
  os << "MOTION\n";
  os << "Frames: " << clip.length() << "\n";
  os << "Frame Time: " << fmt9(1.0 / clip.fps) << "\n";
  for (const MotionFrame& f : clip.frames) {
    std::string row;
    for (int k = 0; k < 3; ++k) {
      row += fmt9(f.root_translation[k]);
      row += ' ';
    }
    for (std::size_t n = 0; n < column_order.size(); ++n) {
      auto e = quaternion_to_euler(f.rotations[column_order[n]], order);
      for (int k = 0; k < 3; ++k) {
        row += fmt9(e[k]);
        if (n + 1 < column_order.size() || k < 2) row += ' ';
      }
    }
    os << row << "\n";
  }
  return os.str();
}

void save_bvh(const std::filesystem::path& path, const MotionClip& clip, EulerOrder order) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_bvh(clip, order);
}

}  // namespace style_erd::io
