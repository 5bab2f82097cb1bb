#include "style_erd/io/synth.hpp"

#include "style_erd/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace style_erd::io {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBaseCadenceHz = 1.4;
constexpr double kJumpCadenceHz = 1.1;

enum Joint {
  kRoot,
  kSpine,
  kHead,
  kLeftShoulder,
  kLeftElbow,
  kRightShoulder,
  kRightElbow,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kRightHip,
  kRightKnee,
  kRightAnkle,
};

Quaternion about_x(double a) { return Quaternion::from_axis_angle(Eigen::Vector3d::UnitX(), a); }
Quaternion about_y(double a) { return Quaternion::from_axis_angle(Eigen::Vector3d::UnitY(), a); }
Quaternion about_z(double a) { return Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), a); }

struct Jitter {
  double phase;
  double amplitude;
  double cadence;
  std::array<double, kSynthJointCount> bias;
};

Jitter draw_jitter(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> amp(0.93, 1.07);
  std::uniform_real_distribution<double> cad(0.95, 1.05);
  std::uniform_real_distribution<double> bias(-0.02, 0.02);
  Jitter j{};
  j.phase = phase(rng);
  j.amplitude = amp(rng);
  j.cadence = cad(rng);
  for (double& b : j.bias) b = bias(rng);
  return j;
}

// Local joint rotations and root translation for one frame of a walk.
void walk_pose(const SynthStyleParams& s, double amp, double phi, double t,
               std::vector<Quaternion>& q, Eigen::Vector3d& root, const Jitter& jit) {
  const double arm = s.arm_swing_scale;
  const double bounce = s.bounce_scale;
  q[kRoot] = about_y(0.06 * amp * std::sin(phi));
  q[kSpine] = about_x(s.lean_angle + 0.04 * bounce * std::sin(2.0 * phi));
  q[kHead] = about_x(-0.5 * s.lean_angle + 0.03 * std::sin(2.0 * phi + 0.4));
  q[kLeftHip] = about_x(0.45 * amp * std::sin(phi) + jit.bias[kLeftHip]);
  q[kRightHip] = about_x(-0.45 * amp * std::sin(phi) + jit.bias[kRightHip]);
  q[kLeftKnee] = about_x(-0.3 * amp * (1.0 - std::cos(phi)) + jit.bias[kLeftKnee]);
  q[kRightKnee] = about_x(-0.3 * amp * (1.0 + std::cos(phi)) + jit.bias[kRightKnee]);
  q[kLeftAnkle] = about_x(0.15 * amp * std::sin(phi + 0.8));
  q[kRightAnkle] = about_x(-0.15 * amp * std::sin(phi + 0.8));
  const double splay = 0.06 + 0.06 * bounce;
  const double elbow = 0.1 + 0.15 * arm;
  q[kLeftShoulder] =
      about_z(-splay) * about_x(-0.4 * arm * std::sin(phi) + jit.bias[kLeftShoulder]);
  q[kRightShoulder] =
      about_z(splay) * about_x(0.4 * arm * std::sin(phi) + jit.bias[kRightShoulder]);
  q[kLeftElbow] = about_x(elbow + 0.2 * arm * (1.0 - std::cos(phi)));
  q[kRightElbow] = about_x(elbow + 0.2 * arm * (1.0 + std::cos(phi)));
  root = Eigen::Vector3d(0.0, 0.95 + 0.03 * bounce * std::sin(2.0 * phi), 1.1 * s.frequency_scale * t);
}

// Symmetric crouch-and-extend cycle.
void jump_pose(const SynthStyleParams& s, double amp, double phi, double t,
               std::vector<Quaternion>& q, Eigen::Vector3d& root, const Jitter& jit) {
  const double crouch = 0.5 * (1.0 - std::cos(phi));
  const double arm = s.arm_swing_scale;
  q[kRoot] = about_x(0.1 * amp * crouch);
  q[kSpine] = about_x(s.lean_angle + 0.15 * amp * crouch);
  q[kHead] = about_x(-0.5 * s.lean_angle - 0.1 * crouch);
  for (int side = 0; side < 2; ++side) {
    const int hip = side == 0 ? kLeftHip : kRightHip;
    const int knee = side == 0 ? kLeftKnee : kRightKnee;
    const int ankle = side == 0 ? kLeftAnkle : kRightAnkle;
    const int shoulder = side == 0 ? kLeftShoulder : kRightShoulder;
    const int elbow = side == 0 ? kLeftElbow : kRightElbow;
    const double splay = (side == 0 ? -1.0 : 1.0) * (0.06 + 0.06 * s.bounce_scale);
    q[hip] = about_x(0.7 * amp * crouch + jit.bias[hip]);
    q[knee] = about_x(-1.1 * amp * crouch + jit.bias[knee]);
    q[ankle] = about_x(0.45 * amp * crouch);
    q[shoulder] = about_z(splay) * about_x(0.9 * arm * (crouch - 0.4) + jit.bias[shoulder]);
    q[elbow] = about_x(0.1 + 0.15 * arm + 0.3 * arm * crouch);
  }
  root = Eigen::Vector3d(0.0, 0.95 - 0.25 * amp * crouch + 0.12 * s.bounce_scale * std::max(0.0, -std::sin(phi)),
                         0.2 * t);
}

}  // namespace

void SynthStyleParams::validate() const {
  if (!(amplitude_scale > 0.0 && frequency_scale > 0.0 && arm_swing_scale > 0.0 &&
        bounce_scale > 0.0)) {
    throw DomainError("synthetic style scales must be positive");
  }
  if (!(std::fabs(lean_angle) < kPi / 4.0)) {
    throw DomainError("synthetic lean angle must lie in (-pi/4, pi/4)");
  }
}

Skeleton synth_skeleton() {
  Skeleton s;
  // Depth-first order, so BVH files round-trip joint indices unchanged.
  s.parents = {kNoParent, 0, 1, 1, 3, 1, 5, 0, 7, 8, 0, 10, 11};
  s.offsets = {
      {0.0, 0.0, 0.0},   {0.0, 0.25, 0.0},  {0.0, 0.35, 0.0},  {0.18, 0.25, 0.0},
      {0.0, -0.3, 0.0},  {-0.18, 0.25, 0.0}, {0.0, -0.3, 0.0},  {0.1, 0.0, 0.0},
      {0.0, -0.45, 0.0}, {0.0, -0.45, 0.0}, {-0.1, 0.0, 0.0},  {0.0, -0.45, 0.0},
      {0.0, -0.45, 0.0},
  };
  s.names = {"Hips",     "Spine",       "Head",      "LeftArm",  "LeftForeArm",
             "RightArm", "RightForeArm", "LeftUpLeg", "LeftLeg",  "LeftFoot",
             "RightUpLeg", "RightLeg",   "RightFoot"};
  return s;
}

SynthStyleParams synth_style_preset(int index) {
  switch (index) {
    case 0: return {1.0, 1.0, 0.0, 1.0, 1.0};
    case 1: return {1.3, 1.1, -0.25, 1.6, 1.5};
    case 2: return {0.7, 0.85, 0.3, 0.35, 0.6};
    case 3: return {0.5, 0.65, 0.55, 0.8, 0.35};
    case 4: return {1.4, 1.3, 0.15, 1.8, 1.3};
    case 5: return {1.2, 1.4, -0.05, 1.3, 2.0};
    case 6: return {1.5, 0.9, -0.35, 1.2, 1.2};
    default:
      throw RangeError("synthetic style preset " + std::to_string(index) + " outside [0, " +
                       std::to_string(kSynthStylePresets) + ")");
  }
}

const char* synth_style_name(int index) {
  static const char* names[kSynthStylePresets] = {"neutral", "proud",     "depressed", "old",
                                                  "angry",   "childlike", "strutting"};
  if (index < 0 || index >= kSynthStylePresets) throw RangeError("synthetic style index");
  return names[index];
}

MotionClip synth_gait(ContentLabel content, const SynthStyleParams& style, int length, double fps,
                      std::uint64_t seed) {
  style.validate();
  if (length < 1) throw RangeError("synthetic clip length must be positive");
  if (!(fps > 0.0)) throw DomainError("synthetic clip fps must be positive");
  if (content.index >= kSynthContents) {
    throw RangeError("synthetic content " + std::to_string(content.index) +
                     " unsupported (0 = walk, 1 = jump)");
  }
  const Jitter jit = draw_jitter(seed);
  MotionClip clip;
  clip.skeleton = synth_skeleton();
  clip.fps = fps;
  clip.content = content;
  const double amp = style.amplitude_scale * jit.amplitude;
  const double cadence = (content.index == 0 ? kBaseCadenceHz : kJumpCadenceHz) *
                         style.frequency_scale * jit.cadence;
  std::vector<std::vector<Quaternion>> rotations(static_cast<std::size_t>(length));
  std::vector<Eigen::Vector3d> roots(static_cast<std::size_t>(length));
  for (int f = 0; f < length; ++f) {
    const double t = f / fps;
    const double phi = 2.0 * kPi * cadence * t + jit.phase;
    std::vector<Quaternion> q(kSynthJointCount);
    if (content.index == 0) {
      walk_pose(style, amp, phi, t, q, roots[f], jit);
    } else {
      jump_pose(style, amp, phi, t, q, roots[f], jit);
    }
    for (Quaternion& r : q) r = r.normalized().canonical();
    rotations[f] = std::move(q);
  }
  clip.frames = assemble_frames(clip.skeleton, rotations, roots, fps);
  return clip;
}

std::vector<MotionClip> make_synthetic_dataset(const SynthDatasetConfig& config) {
  if (config.styles < 1 || config.styles > kSynthStylePresets) {
    throw RangeError("synthetic dataset supports 1.." + std::to_string(kSynthStylePresets) +
                     " styles");
  }
  if (config.contents < 1 || config.contents > kSynthContents) {
    throw RangeError("synthetic dataset supports 1.." + std::to_string(kSynthContents) +
                     " contents");
  }
  std::vector<MotionClip> clips;
  std::mt19937_64 seeds(config.seed);
  for (int s = 0; s < config.styles; ++s) {
    for (int c = 0; c < config.contents; ++c) {
      for (int k = 0; k < config.clips_per_pair; ++k) {
        MotionClip clip = synth_gait(ContentLabel(c, config.contents), synth_style_preset(s),
                                     config.length, config.fps, seeds());
        clip.style = StyleLabel(s, config.styles);
        clip.id = "s" + std::to_string(s) + "_c" + std::to_string(c) + "_" + std::to_string(k);
        clips.push_back(std::move(clip));
      }
    }
  }
  return clips;
}

}  // namespace style_erd::io
