#include "bvh_fixtures.hpp"
#include "clip_compare.hpp"
#include "criteria.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/io/bvh.hpp"
#include "style_erd/io/synth.hpp"
#include "style_erd/model/checkpoint_io.hpp"
#include "style_erd/model/discriminator.hpp"
#include "style_erd/service/latency.hpp"
#include "style_erd/service/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace acceptance {

using namespace style_erd;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Outcome latency_budget(Context& ctx) {
  model::ModelConfig mc;
  mc.skeleton = io::synth_skeleton();
  const model::Generator gen(mc, ctx.seed + 200);
  service::BenchOptions opts;
  opts.seed = ctx.seed;
  const auto short_run = service::bench_latency(gen, 1000, opts);
  const auto long_run = service::bench_latency(gen, 10000, opts);
  const double drift = long_run.p50 / short_run.p50 - 1.0;
  Outcome o;
  o.pass = short_run.p95 < 8333.0 && long_run.p95 < 8333.0 && std::fabs(drift) <= 0.3;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "p95 %.0f / %.0f us (< 8333), p50 %.0f -> %.0f us over 1k -> 10k frames (%+.1f%%, limit 30%%)",
                short_run.p95, long_run.p95, short_run.p50, long_run.p50, 100.0 * drift);
  o.detail = buf;
  o.metrics = {{"1k", short_run.to_json()}, {"10k", long_run.to_json()}, {"p50_drift", drift}};
  return o;
}

Outcome protocol_conformance(Context& ctx) {
  model::ModelConfig mc;
  mc.skeleton = io::synth_skeleton();
  const auto ckpt = ctx.work_dir / "protocol.ckpt";
  model::save_model(ckpt, model::Generator(mc, ctx.seed + 300), model::Discriminator(mc, ctx.seed + 301));

  std::vector<std::string> lines;
  {
    std::istringstream in(read_file(ctx.data_dir / "stream" / "golden_conversation.ndjson"));
    for (std::string l; std::getline(in, l);) {
      if (!l.empty()) lines.push_back(l);
    }
  }
  struct Transcript {
    std::vector<std::string> frames;
    int acks = 0;
    int soft_errors = 0;
    int fatal_errors = 0;
    bool closed = false;
  };
  auto run = [&] {
    const model::Generator gen = model::load_generator(ckpt);
    service::ProtocolSession session(gen);
    Transcript t;
    for (const auto& l : lines) {
      for (const auto& reply : session.handle(l)) {
        const auto j = nlohmann::json::parse(reply);
        const std::string kind = j.at("kind");
        if (kind == "frame_out") t.frames.push_back(reply);
        if (kind == "control" && j.value("ack", false)) ++t.acks;
        if (kind == "error") ++(j.at("fatal").get<bool>() ? t.fatal_errors : t.soft_errors);
      }
    }
    t.closed = session.closed();
    return t;
  };
  const Transcript a = run();
  const Transcript b = run();
  const bool identical = a.frames == b.frames;
  const bool shape = a.frames.size() == 24 && a.acks == 2 && a.soft_errors == 1 && a.fatal_errors == 0 && !a.closed;
  Outcome o;
  o.pass = identical && shape;
  o.detail = std::to_string(a.frames.size()) + " frame_out payloads " +
             (identical ? "byte-identical" : "DIFFER") + " across runs; " + std::to_string(a.acks) +
             " control acks, " + std::to_string(a.soft_errors) + " rejected control, " +
             std::to_string(a.fatal_errors) + " fatal errors";
  o.metrics = {{"frames", a.frames.size()}, {"acks", a.acks}, {"soft_errors", a.soft_errors},
               {"identical", identical}};
  return o;
}

Outcome parser_round_trip(Context& ctx) {
  const auto dir = ctx.work_dir / "bvh";
  std::filesystem::create_directories(dir);
  double worst = 0.0;
  int round_trips = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto path = dir / ("generated_" + std::to_string(seed) + ".bvh");
    std::ofstream(path) << testing::random_bvh(seed);
    const io::MotionClip first = io::load_bvh(path);
    const io::MotionClip second = io::parse_bvh(io::serialize_bvh(first));
    worst = std::max(worst, testing::clip_difference(first, second));
    ++round_trips;
  }
  const auto malformed = ctx.data_dir / "bvh" / "malformed";
  const auto expected = nlohmann::json::parse(read_file(malformed / "expected.json"));
  int matched = 0;
  std::string mismatch;
  for (const auto& [file, want] : expected.items()) {
    try {
      io::parse_bvh(read_file(malformed / file));
      mismatch = file + " parsed without error";
    } catch (const ParseError& e) {
      const bool ok = e.line() == want.at("line").get<int>() &&
                      std::string(e.what()).find(want.at("message").get<std::string>()) != std::string::npos;
      if (ok) {
        ++matched;
      } else {
        mismatch = file + ": " + e.what();
      }
    }
  }
  Outcome o;
  o.pass = round_trips == 20 && worst <= 1e-5 && expected.size() == 5 && matched == 5;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d files round-trip, worst difference %.2e (tol 1e-5); %d/%zu malformed files give the expected error",
                round_trips, worst, matched, expected.size());
  o.detail = buf;
  if (!mismatch.empty()) o.detail += "; " + mismatch;
  o.metrics = {{"worst", worst}, {"malformed_matched", matched}};
  return o;
}

}  // namespace acceptance
