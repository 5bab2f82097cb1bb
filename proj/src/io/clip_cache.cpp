#include "style_erd/io/clip_cache.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/io/bvh.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace style_erd::io {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'R', 'D', 'C', 'L', 'I', 'P'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("clip cache: truncated file");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in) {
  const auto n = take<std::uint32_t>(in);
  if (n > 65536) throw std::runtime_error("clip cache: implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("clip cache: truncated file");
  return s;
}

void put_vec(std::ostream& out, const Eigen::Vector3d& v) {
  for (int k = 0; k < 3; ++k) put<double>(out, v[k]);
}

Eigen::Vector3d take_vec(std::istream& in) {
  Eigen::Vector3d v;
  for (int k = 0; k < 3; ++k) v[k] = take<double>(in);
  return v;
}

}  // namespace

void write_clip_cache(std::ostream& out, const std::vector<MotionClip>& clips) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kClipCacheVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(clips.size()));
  for (const MotionClip& c : clips) {
    put_string(out, c.id);
    put<double>(out, c.fps);
    put<std::int32_t>(out, c.style.index);
    put<std::int32_t>(out, c.style.count);
    put<std::int32_t>(out, c.content.index);
    put<std::int32_t>(out, c.content.count);
    const int j = c.skeleton.joint_count();
    put<std::int32_t>(out, j);
    for (int i = 0; i < j; ++i) {
      put<std::int32_t>(out, c.skeleton.parents[i]);
      put_vec(out, c.skeleton.offsets[i]);
      put_string(out, i < static_cast<int>(c.skeleton.names.size()) ? c.skeleton.names[i] : "");
    }
    put<std::int32_t>(out, c.length());
    for (const MotionFrame& f : c.frames) {
      put_vec(out, f.root_translation);
      for (const Quaternion& q : f.rotations) {
        put<double>(out, q.w);
        put<double>(out, q.x);
        put<double>(out, q.y);
        put<double>(out, q.z);
      }
    }
  }
}

std::vector<MotionClip> read_clip_cache(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("clip cache: bad magic");
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kClipCacheVersion) {
    throw std::runtime_error("clip cache: unsupported version " + std::to_string(version));
  }
  const auto count = take<std::uint32_t>(in);
  std::vector<MotionClip> clips;
  for (std::uint32_t n = 0; n < count; ++n) {
    MotionClip c;
    c.id = take_string(in);
    c.fps = take<double>(in);
    const int si = take<std::int32_t>(in);
    const int sc = take<std::int32_t>(in);
    const int ci = take<std::int32_t>(in);
    const int cc = take<std::int32_t>(in);
    c.style = StyleLabel(si, sc);
    c.content = ContentLabel(ci, cc);
    const int j = take<std::int32_t>(in);
    if (j < 1 || j > 4096) throw std::runtime_error("clip cache: implausible joint count");
    for (int i = 0; i < j; ++i) {
      c.skeleton.parents.push_back(take<std::int32_t>(in));
      c.skeleton.offsets.push_back(take_vec(in));
      c.skeleton.names.push_back(take_string(in));
    }
    c.skeleton.validate();
    const int frames = take<std::int32_t>(in);
    if (frames < 1) throw std::runtime_error("clip cache: clip without frames");
    std::vector<std::vector<Quaternion>> rotations(static_cast<std::size_t>(frames));
    std::vector<Eigen::Vector3d> roots(static_cast<std::size_t>(frames));
    for (int f = 0; f < frames; ++f) {
      roots[f] = take_vec(in);
      rotations[f].resize(static_cast<std::size_t>(j));
      for (Quaternion& q : rotations[f]) {
        q.w = take<double>(in);
        q.x = take<double>(in);
        q.y = take<double>(in);
        q.z = take<double>(in);
      }
    }
    c.frames = assemble_frames(c.skeleton, rotations, roots, c.fps);
    clips.push_back(std::move(c));
  }
  return clips;
}

void save_clip_cache(const std::filesystem::path& path, const std::vector<MotionClip>& clips) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_clip_cache(out, clips);
}

std::vector<MotionClip> load_clip_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_clip_cache(in);
}

std::vector<MotionClip> load_clips(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".bvh") files.push_back(e.path());
    }
    if (files.empty()) throw std::runtime_error("no .bvh files in " + path.string());
    std::sort(files.begin(), files.end());
    std::vector<MotionClip> clips;
    for (const auto& f : files) {
      clips.push_back(load_bvh(f));
      clips.back().id = f.stem().string();
    }
    const auto sidecar = path / "labels.json";
    if (std::filesystem::exists(sidecar)) {
      std::ifstream in(sidecar);
      const auto j = nlohmann::json::parse(in);
      apply_label_sidecar(clips, j.value("clips", nlohmann::json::object()), j.at("styles").get<int>(),
                          j.at("contents").get<int>());
    }
    return clips;
  }
  if (path.extension() == ".bvh") return {load_bvh(path)};
  return load_clip_cache(path);
}

}  // namespace style_erd::io
