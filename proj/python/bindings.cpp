#include "style_erd/errors.hpp"
#include "style_erd/eval/fmd.hpp"
#include "style_erd/io/bvh.hpp"
#include "style_erd/io/synth.hpp"
#include "style_erd/model/checkpoint_io.hpp"
#include "style_erd/model/session.hpp"
#include "style_erd/service/latency.hpp"
#include "style_erd/service/online.hpp"
#include "style_erd/service/protocol.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace style_erd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// [T, J, 4] rotations and [T, 3] roots from frames.
py::dict frames_to_arrays(const std::vector<MotionFrame>& frames) {
  const py::ssize_t t = static_cast<py::ssize_t>(frames.size());
  const py::ssize_t j = t ? frames[0].joint_count() : 0;
  Array rot({t, j, py::ssize_t{4}}), root({t, py::ssize_t{3}});
  Array pos({t, j, py::ssize_t{3}}), vel({t, j, py::ssize_t{3}});
  auto r = rot.mutable_unchecked<3>();
  auto o = root.mutable_unchecked<2>();
  auto p = pos.mutable_unchecked<3>();
  auto v = vel.mutable_unchecked<3>();
  for (py::ssize_t f = 0; f < t; ++f) {
    const MotionFrame& fr = frames[f];
    for (py::ssize_t k = 0; k < j; ++k) {
      const Quaternion& q = fr.rotations[k];
      r(f, k, 0) = q.w; r(f, k, 1) = q.x; r(f, k, 2) = q.y; r(f, k, 3) = q.z;
      for (int c = 0; c < 3; ++c) {
        p(f, k, c) = fr.positions(k, c);
        v(f, k, c) = fr.velocities(k, c);
      }
    }
    for (int c = 0; c < 3; ++c) o(f, c) = fr.root_translation[c];
  }
  py::dict d;
  d["rotations"] = rot;
  d["root"] = root;
  d["positions"] = pos;
  d["velocities"] = vel;
  return d;
}

std::vector<MotionFrame> arrays_to_frames(const Skeleton& skeleton, const Array& rotations,
                                          const Array& root, double fps) {
  if (rotations.ndim() != 3 || rotations.shape(2) != 4 ||
      rotations.shape(1) != skeleton.joint_count()) {
    throw ShapeError("rotations must have shape [T, " + std::to_string(skeleton.joint_count()) +
                     ", 4]");
  }
  if (root.ndim() != 2 || root.shape(1) != 3 || root.shape(0) != rotations.shape(0)) {
    throw ShapeError("root must have shape [T, 3] matching rotations");
  }
  auto r = rotations.unchecked<3>();
  auto o = root.unchecked<2>();
  const py::ssize_t t = rotations.shape(0);
  std::vector<std::vector<Quaternion>> rots(static_cast<std::size_t>(t));
  std::vector<Eigen::Vector3d> roots(static_cast<std::size_t>(t));
  for (py::ssize_t f = 0; f < t; ++f) {
    for (py::ssize_t k = 0; k < rotations.shape(1); ++k) {
      Quaternion q{r(f, k, 0), r(f, k, 1), r(f, k, 2), r(f, k, 3)};
      if (std::abs(q.norm() - 1.0) > 1e-3) throw DomainError("non-unit quaternion in rotations");
      rots[f].push_back(q.normalized());
    }
    roots[f] = Eigen::Vector3d(o(f, 0), o(f, 1), o(f, 2));
  }
  return assemble_frames(skeleton, rots, roots, fps);
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict skeleton_dict(const Skeleton& s) {
  py::dict d;
  d["parents"] = s.parents;
  d["names"] = s.names;
  Array off({static_cast<py::ssize_t>(s.joint_count()), py::ssize_t{3}});
  auto m = off.mutable_unchecked<2>();
  for (int k = 0; k < s.joint_count(); ++k) {
    for (int c = 0; c < 3; ++c) m(k, c) = s.offsets[k][c];
  }
  d["offsets"] = off;
  return d;
}

Skeleton skeleton_from(const py::dict& d) {
  Skeleton s;
  s.parents = d["parents"].cast<std::vector<int>>();
  Array off = d["offsets"].cast<Array>();
  auto m = off.unchecked<2>();
  for (py::ssize_t k = 0; k < off.shape(0); ++k) s.offsets.emplace_back(m(k, 0), m(k, 1), m(k, 2));
  if (d.contains("names")) s.names = d["names"].cast<std::vector<std::string>>();
  s.validate();
  return s;
}

py::dict clip_dict(const io::MotionClip& c) {
  py::dict d = frames_to_arrays(c.frames);
  d["skeleton"] = skeleton_dict(c.skeleton);
  d["fps"] = c.fps;
  d["style"] = c.style.index;
  d["content"] = c.content.index;
  d["id"] = c.id;
  return d;
}

io::MotionClip clip_from(const py::dict& d) {
  io::MotionClip c;
  c.skeleton = skeleton_from(d["skeleton"].cast<py::dict>());
  c.fps = d["fps"].cast<double>();
  c.frames = arrays_to_frames(c.skeleton, d["rotations"].cast<Array>(), d["root"].cast<Array>(),
                              c.fps);
  if (d.contains("id")) c.id = d["id"].cast<std::string>();
  return c;
}

model::TargetSpec target_spec(int style, std::optional<int> second, double alpha, int styles) {
  model::TargetSpec t;
  t.style = style;
  t.second_style = second;
  t.alpha = alpha;
  t.validate(styles);
  return t;
}

// Owns its generator so Python lifetimes cannot dangle.
struct PyModel {
  std::shared_ptr<model::Generator> gen;
};

struct PyStream {
  std::shared_ptr<model::Generator> gen;
  model::StreamSession session;
  std::optional<service::OnlineKinematics> kin;
};

struct PyProtocol {
  std::shared_ptr<model::Generator> gen;
  service::ProtocolSession session;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online motion style transfer";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_IndexError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("load_bvh", [](const std::filesystem::path& p) { return clip_dict(io::load_bvh(p)); },
        py::arg("path"));
  m.def("parse_bvh", [](const std::string& text) { return clip_dict(io::parse_bvh(text)); },
        py::arg("text"));
  m.def("serialize_bvh", [](const py::dict& clip) { return io::serialize_bvh(clip_from(clip)); },
        py::arg("clip"));
  m.def("save_bvh",
        [](const std::filesystem::path& p, const py::dict& clip) { io::save_bvh(p, clip_from(clip)); },
        py::arg("path"), py::arg("clip"));

  m.def("synthetic_dataset",
        [](int styles, int contents, int clips_per_pair, int length, double fps, std::uint64_t seed) {
          io::SynthDatasetConfig c;
          c.styles = styles;
          c.contents = contents;
          c.clips_per_pair = clips_per_pair;
          c.length = length;
          c.fps = fps;
          c.seed = seed;
          py::list out;
          for (const auto& clip : io::make_synthetic_dataset(c)) out.append(clip_dict(clip));
          return out;
        },
        py::arg("styles") = 3, py::arg("contents") = 2, py::arg("clips_per_pair") = 4,
        py::arg("length") = 120, py::arg("fps") = 60.0, py::arg("seed") = 11);

  m.def("frechet_distance",
        [](const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a, const Eigen::VectorXd& mu_b,
           const Eigen::MatrixXd& cov_b) {
          return eval::frechet_distance({mu_a, cov_a}, {mu_b, cov_b});
        },
        py::arg("mu_a"), py::arg("cov_a"), py::arg("mu_b"), py::arg("cov_b"));

  py::class_<PyModel>(m, "Model")
      .def_static("load",
                  [](const std::filesystem::path& p) {
                    return PyModel{std::make_shared<model::Generator>(model::load_generator(p))};
                  },
                  py::arg("path"))
      .def_static("untrained",
                  [](std::uint64_t seed) {
                    model::ModelConfig c;
                    c.skeleton = io::synth_skeleton();
                    return PyModel{std::make_shared<model::Generator>(c, seed)};
                  },
                  py::arg("seed") = 0)
      .def_property_readonly("config", [](const PyModel& self) { return json_to_py(self.gen->config().to_json()); })
      .def_property_readonly("skeleton", [](const PyModel& self) { return skeleton_dict(self.gen->config().skeleton); })
      .def("transfer",
           [](const PyModel& self, const Array& rotations, const Array& root, int source_style,
              int content, int target_style, std::optional<int> second_style, double alpha,
              bool online_velocities) {
             const auto& cfg = self.gen->config();
             auto frames = arrays_to_frames(cfg.skeleton, rotations, root, cfg.fps);
             if (online_velocities) frames = service::online_frames(cfg.skeleton, frames, cfg.fps);
             const auto out = model::transfer_offline(
                 *self.gen, frames, StyleLabel(source_style, cfg.styles),
                 ContentLabel(content, cfg.contents),
                 target_spec(target_style, second_style, alpha, cfg.styles));
             return frames_to_arrays(out);
           },
           py::arg("rotations"), py::arg("root"), py::arg("source_style"), py::arg("content"),
           py::arg("target_style"), py::arg("second_style") = py::none(), py::arg("alpha") = 1.0,
           py::arg("online_velocities") = false)
      .def("bench",
           [](const PyModel& self, int frames, int warmup, std::uint64_t seed) {
             service::BenchOptions o;
             o.warmup = warmup;
             o.seed = seed;
             return json_to_py(service::bench_latency(*self.gen, frames, o).to_json(false));
           },
           py::arg("frames") = 1000, py::arg("warmup") = 10, py::arg("seed") = 1)
      .def("stream",
           [](const PyModel& self, int source_style, int content, int target_style,
              std::optional<int> second_style, double alpha) {
             const auto& cfg = self.gen->config();
             auto s = std::make_unique<PyStream>();
             s->gen = self.gen;
             s->session = model::StreamSession(*s->gen, StyleLabel(source_style, cfg.styles),
                                               ContentLabel(content, cfg.contents),
                                               target_spec(target_style, second_style, alpha, cfg.styles));
             s->kin.emplace(cfg.skeleton, cfg.fps);
             return s;
           },
           py::arg("source_style"), py::arg("content"), py::arg("target_style"),
           py::arg("second_style") = py::none(), py::arg("alpha") = 1.0)
      .def("protocol", [](const PyModel& self, int stats_every) {
             service::SessionOptions o;
             o.stats_every = stats_every;
             return std::unique_ptr<PyProtocol>(new PyProtocol{self.gen, service::ProtocolSession(*self.gen, o)});
           },
           py::arg("stats_every") = 1);

  py::class_<PyStream>(m, "Stream")
      .def("push",
           [](PyStream& self, const Array& rotations, const Array& root) {
             const int j = self.gen->config().joints();
             if (rotations.ndim() != 2 || rotations.shape(0) != j || rotations.shape(1) != 4) {
               throw ShapeError("rotations must have shape [" + std::to_string(j) + ", 4]");
             }
             if (root.ndim() != 1 || root.shape(0) != 3) throw ShapeError("root must have shape [3]");
             auto r = rotations.unchecked<2>();
             std::vector<Quaternion> q;
             for (int k = 0; k < j; ++k) {
               Quaternion x{r(k, 0), r(k, 1), r(k, 2), r(k, 3)};
               if (std::abs(x.norm() - 1.0) > 1e-3) throw DomainError("non-unit quaternion");
               q.push_back(x.normalized());
             }
             const Eigen::Vector3d rt(root.at(0), root.at(1), root.at(2));
             const MotionFrame out = self.session.transfer_frame(self.kin->next(q, rt));
             py::dict d = frames_to_arrays({out});
             for (const char* k : {"rotations", "root", "positions", "velocities"}) {
               d[k] = d[k].attr("__getitem__")(0);
             }
             return d;
           },
           py::arg("rotations"), py::arg("root"))
      .def("set_target",
           [](PyStream& self, int style, std::optional<int> second, double alpha) {
             self.session.set_target(target_spec(style, second, alpha, self.gen->config().styles));
           },
           py::arg("target_style"), py::arg("second_style") = py::none(), py::arg("alpha") = 1.0)
      .def_property_readonly("frame_index", [](const PyStream& s) { return s.session.frame_index(); });

  py::class_<PyProtocol>(m, "Protocol")
      .def("handle", [](PyProtocol& self, std::string_view line) { return self.session.handle(line); },
           py::arg("line"))
      .def_property_readonly("closed", [](const PyProtocol& s) { return s.session.closed(); });
}
