#include "style_erd/service/protocol.hpp"

#include "style_erd/errors.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace style_erd::service {

using nlohmann::json;

double wire_number(double v) {
  if (!std::isfinite(v)) throw NumericError("refusing to send a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

json wire_vector(const Eigen::Vector3d& v) {
  return json::array({wire_number(v.x()), wire_number(v.y()), wire_number(v.z())});
}

json wire_quaternion(const Quaternion& q) {
  return json::array({wire_number(q.w), wire_number(q.x), wire_number(q.y), wire_number(q.z)});
}

json wire_rows(const JointMatrix& m) {
  json rows = json::array();
  for (Eigen::Index j = 0; j < m.rows(); ++j) rows.push_back(wire_vector(m.row(j).transpose()));
  return rows;
}

namespace {

double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) throw ProtocolError(where + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ProtocolError(where + " must be finite");
  return d;
}

int label_field(const json& msg, const char* name) {
  const json& v = msg.at(name);
  if (!v.is_number_integer()) throw ProtocolError(std::string(name) + " must be an integer");
  return v.get<int>();
}

json rotations_json(const MotionFrame& f) {
  json rot = json::array();
  for (const Quaternion& q : f.rotations) rot.push_back(wire_quaternion(q));
  return rot;
}

std::string line(const json& j) { return j.dump(); }

}  // namespace

FrameMessage parse_frame(const json& msg, int joints) {
  FrameMessage f;
  if (!msg.contains("frame_index") || !msg["frame_index"].is_number_integer()) {
    throw ProtocolError("frame needs an integer frame_index");
  }
  f.frame_index = msg["frame_index"].get<long long>();
  if (f.frame_index < 0) throw ProtocolError("frame_index must be non-negative");
  if (!msg.contains("rotations") || !msg["rotations"].is_array()) {
    throw ProtocolError("frame needs a rotations array");
  }
  const json& rot = msg["rotations"];
  if (static_cast<int>(rot.size()) != joints) {
    throw ProtocolError("frame has " + std::to_string(rot.size()) + " rotations, model expects " +
                        std::to_string(joints));
  }
  for (std::size_t j = 0; j < rot.size(); ++j) {
    const std::string where = "rotations[" + std::to_string(j) + "]";
    if (!rot[j].is_array() || rot[j].size() != 4) throw ProtocolError(where + " must be [w, x, y, z]");
    Quaternion q{number_at(rot[j][0], where), number_at(rot[j][1], where), number_at(rot[j][2], where),
                 number_at(rot[j][3], where)};
    // Tolerates rounding on the wire, not arbitrary scale.
    if (std::fabs(q.norm() - 1.0) > 1e-3) throw ProtocolError(where + " is not a unit quaternion");
    f.rotations.push_back(q.normalized());
  }
  if (!msg.contains("root") || !msg["root"].is_array() || msg["root"].size() != 3) {
    throw ProtocolError("frame needs root [x, y, z]");
  }
  for (int k = 0; k < 3; ++k) f.root[k] = number_at(msg["root"][k], "root");
  return f;
}

json frame_message(long long frame_index, const MotionFrame& frame) {
  return {{"kind", "frame"},
          {"frame_index", frame_index},
          {"rotations", rotations_json(frame)},
          {"root", wire_vector(frame.root_translation)}};
}

model::TargetSpec ControlMessage::apply(const model::TargetSpec& current) const {
  model::TargetSpec next = current;
  if (target_style) next.style = *target_style;
  if (second_style) next.second_style = *second_style;
  if (alpha) next.alpha = *alpha;
  return next;
}

ControlMessage parse_control(const json& msg) {
  ControlMessage c;
  if (msg.contains("target_style")) c.target_style = label_field(msg, "target_style");
  if (msg.contains("second_style")) {
    c.second_style = msg["second_style"].is_null() ? std::optional<int>()
                                                   : std::optional<int>(label_field(msg, "second_style"));
  }
  if (msg.contains("alpha")) c.alpha = number_at(msg["alpha"], "alpha");
  if (!c.target_style && !c.second_style && !c.alpha) {
    throw ProtocolError("control needs target_style, second_style or alpha");
  }
  return c;
}

json frame_out_message(long long frame_index, const MotionFrame& frame) {
  return {{"kind", "frame_out"},
          {"frame_index", frame_index},
          {"rotations", rotations_json(frame)},
          {"root", wire_vector(frame.root_translation)},
          {"positions", wire_rows(frame.positions)},
          {"velocities", wire_rows(frame.velocities)}};
}

json error_message(const std::string& message, bool fatal, std::optional<long long> frame_index) {
  json e = {{"kind", "error"}, {"message", message}, {"fatal", fatal}};
  if (frame_index) e["frame_index"] = *frame_index;
  return e;
}

json target_json(const model::TargetSpec& target) {
  return {{"target_style", target.style},
          {"second_style", target.second_style ? json(*target.second_style) : json(nullptr)},
          {"alpha", target.alpha}};
}

json hello_reply(const model::ModelConfig& config, const json& label_names, StyleLabel source,
                 ContentLabel content, const model::TargetSpec& target, double fps) {
  json labels = {{"styles", config.styles}, {"contents", config.contents}};
  for (const auto& [k, v] : label_names.items()) labels[k + "_names"] = v;
  json session = target_json(target);
  session["source_style"] = source.index;
  session["content"] = content.index;
  session["fps"] = fps;
  return {{"kind", "hello"}, {"model", config.to_json()}, {"labels", labels}, {"session", session}};
}

ProtocolSession::ProtocolSession(const model::Generator& gen, SessionOptions options)
    : gen_(&gen), options_(std::move(options)) {
  if (options_.stats_every < 0) throw DomainError("stats_every must be non-negative");
}

void ProtocolSession::fail(const std::string& message, std::vector<std::string>& out,
                           std::optional<long long> frame_index) {
  out.push_back(line(error_message(message, true, frame_index)));
  closed_ = true;
}

std::vector<std::string> ProtocolSession::handle(std::string_view text) {
  std::vector<std::string> out;
  if (closed_) return out;
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what(), out);
    return out;
  }
  if (!msg.is_object() || !msg.contains("kind") || !msg["kind"].is_string()) {
    fail("message must be an object with a string kind", out);
    return out;
  }
  const std::string kind = msg["kind"].get<std::string>();
  try {
    if (kind == "hello") {
      on_hello(msg, out);
    } else if (kind == "frame") {
      on_frame(msg, out);
    } else if (kind == "control") {
      on_control(msg, out);
    } else {
      fail("unexpected message kind '" + kind + "'", out);
    }
  } catch (const ProtocolError& e) {
    fail(e.what(), out);
  } catch (const json::exception& e) {
    fail(std::string("bad field: ") + e.what(), out);
  }
  return out;
}

void ProtocolSession::on_hello(const json& msg, std::vector<std::string>& out) {
  if (stream_.is_open()) throw ProtocolError("hello after the session was opened");
  const model::ModelConfig& cfg = gen_->config();
  const int source = msg.contains("source_style") ? label_field(msg, "source_style") : kNeutralStyle;
  const int content = msg.contains("content") ? label_field(msg, "content") : 0;
  ControlMessage initial;
  initial.target_style = msg.contains("target_style") ? label_field(msg, "target_style") : kNeutralStyle;
  if (msg.contains("second_style") || msg.contains("alpha")) {
    const ControlMessage extra = [&] {
      json c = json::object();
      for (const char* k : {"second_style", "alpha"}) {
        if (msg.contains(k)) c[k] = msg[k];
      }
      return parse_control(c);
    }();
    initial.second_style = extra.second_style;
    initial.alpha = extra.alpha;
  }
  const double fps = msg.contains("fps") ? number_at(msg["fps"], "fps") : cfg.fps;
  const model::TargetSpec target = initial.apply({});
  try {
    if (std::fabs(fps - cfg.fps) > 1e-4 * cfg.fps) {
      throw UnsupportedRateError("stream at " + std::to_string(fps) + " fps, model trained at " +
                                 std::to_string(cfg.fps));
    }
    const StyleLabel s(source, cfg.styles);
    const ContentLabel c(content, cfg.contents);
    target.validate(cfg.styles);
    stream_ = model::StreamSession(*gen_, s, c, target);
  } catch (const std::logic_error& e) {
    // Bad labels or rate: the client may retry with another hello.
    out.push_back(line(error_message(e.what(), false)));
    return;
  }
  kinematics_.emplace(cfg.skeleton, cfg.fps);
  out.push_back(line(hello_reply(cfg, options_.label_names, stream_.source(), stream_.content(),
                                 stream_.target(), cfg.fps)));
}

void ProtocolSession::on_frame(const json& msg, std::vector<std::string>& out) {
  if (!stream_.is_open()) throw ProtocolError("frame before hello");
  FrameMessage f = parse_frame(msg, gen_->config().joints());
  if (last_index_ && f.frame_index <= *last_index_) {
    fail("frame_index " + std::to_string(f.frame_index) + " does not follow " +
             std::to_string(*last_index_),
         out, f.frame_index);
    return;
  }
  const int step = last_index_ ? static_cast<int>(f.frame_index - *last_index_) : 1;
  last_index_ = f.frame_index;
  const MotionFrame input = kinematics_->next(std::move(f.rotations), f.root, step);
  MotionFrame output;
  double micros = 0.0;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    output = stream_.transfer_frame(input);
    micros = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  } catch (const NumericError& e) {
    fail(e.what(), out, f.frame_index);
    return;
  }
  out.push_back(line(frame_out_message(f.frame_index, output)));
  ++answered_;
  if (options_.stats_every > 0 && answered_ % options_.stats_every == 0) {
    out.push_back(line({{"kind", "stats"}, {"frame_index", f.frame_index}, {"latency_us", wire_number(micros)}}));
  }
}

void ProtocolSession::on_control(const json& msg, std::vector<std::string>& out) {
  if (!stream_.is_open()) throw ProtocolError("control before hello");
  const ControlMessage c = parse_control(msg);
  const model::TargetSpec next = c.apply(stream_.target());
  try {
    next.validate(gen_->config().styles);
  } catch (const std::exception& e) {
    out.push_back(line(error_message(e.what(), false)));
    return;
  }
  stream_.set_target(next);
  json ack = target_json(next);
  ack["kind"] = "control";
  ack["ack"] = true;
  ack["after_frame"] = last_index_ ? json(*last_index_) : json(nullptr);
  out.push_back(line(ack));
}

}  // namespace style_erd::service
