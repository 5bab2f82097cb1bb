#pragma once

#include "style_erd/model/generator.hpp"
#include "style_erd/model/session.hpp"
#include "style_erd/service/online.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace style_erd::service {

// Wire floats carry 9 significant digits.
double wire_number(double v);
nlohmann::json wire_vector(const Eigen::Vector3d& v);
nlohmann::json wire_quaternion(const Quaternion& q);
nlohmann::json wire_rows(const JointMatrix& m);

// Incoming frame payload.
struct FrameMessage {
  long long frame_index = 0;
  std::vector<Quaternion> rotations;
  Eigen::Vector3d root = Eigen::Vector3d::Zero();
};
// Throws ProtocolError naming the offending field.
FrameMessage parse_frame(const nlohmann::json& msg, int joints);
nlohmann::json frame_message(long long frame_index, const MotionFrame& frame);

// Partial target update; absent fields keep their value. second_style may be
// explicitly cleared with null.
struct ControlMessage {
  std::optional<int> target_style;
  std::optional<std::optional<int>> second_style;
  std::optional<double> alpha;

  model::TargetSpec apply(const model::TargetSpec& current) const;
};
ControlMessage parse_control(const nlohmann::json& msg);

nlohmann::json frame_out_message(long long frame_index, const MotionFrame& frame);
nlohmann::json error_message(const std::string& message, bool fatal,
                             std::optional<long long> frame_index = std::nullopt);

struct SessionOptions {
  int stats_every = 1;  // one stats message per this many frames; 0 disables
  // Optional label names echoed in the hello reply ({"styles": [...], ...}).
  nlohmann::json label_names = nlohmann::json::object();
};

// One connection's protocol state machine. Messages must arrive in order;
// each produces zero or more reply lines. Frames before hello, a second
// hello, malformed messages and non-increasing frame indices are fatal: an
// error is sent and the session closes. Invalid label or alpha values are
// reported without closing and leave the state unchanged.
class ProtocolSession {
 public:
  ProtocolSession(const model::Generator& gen, SessionOptions options = {});

  std::vector<std::string> handle(std::string_view line);
  bool closed() const noexcept { return closed_; }
  bool opened() const noexcept { return stream_.is_open(); }
  const model::StreamSession& stream() const noexcept { return stream_; }
  long long frames_answered() const noexcept { return answered_; }

 private:
  void on_hello(const nlohmann::json& msg, std::vector<std::string>& out);
  void on_frame(const nlohmann::json& msg, std::vector<std::string>& out);
  void on_control(const nlohmann::json& msg, std::vector<std::string>& out);
  void fail(const std::string& message, std::vector<std::string>& out,
            std::optional<long long> frame_index = std::nullopt);

  const model::Generator* gen_;
  SessionOptions options_;
  model::StreamSession stream_;
  std::optional<OnlineKinematics> kinematics_;
  std::optional<long long> last_index_;
  long long answered_ = 0;
  bool closed_ = false;
};

// Reply to a hello: model configuration, label counts and the opened session.
nlohmann::json hello_reply(const model::ModelConfig& config, const nlohmann::json& label_names,
                           StyleLabel source, ContentLabel content, const model::TargetSpec& target,
                           double fps);
nlohmann::json target_json(const model::TargetSpec& target);

}  // namespace style_erd::service
