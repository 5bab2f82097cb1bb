#include "criteria.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

using namespace acceptance;

namespace {

struct Criterion {
  const char* name;
  Outcome (*run)(Context&);
};

// Order matters: the online/offline check reuses checkpoints from training,
// the ablation compares against the full run.
const Criterion kCriteria[] = {
    {"gradient-integrity", gradient_integrity},
    {"loss-oracles", loss_oracles},
    {"frechet-oracle", frechet_oracle},
    {"training-efficacy", training_efficacy},
    {"ablation-direction", ablation_direction},
    {"online-offline", online_offline},
    {"latency-budget", latency_budget},
    {"protocol-conformance", protocol_conformance},
    {"parser-round-trip", parser_round_trip},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks; one PASS/FAIL line per criterion"};
  std::vector<std::string> only;
  std::string report;
  Context ctx;
  ctx.work_dir = std::filesystem::temp_directory_path() / "style_erd_acceptance";
  ctx.data_dir = STYLE_ERD_TEST_DATA_DIR;
  app.add_option("--only", only, "Run just these criteria");
  app.add_option("--report", report, "Write a JSON report here");
  app.add_option("--epochs", ctx.epochs, "Training epochs for the efficacy runs")->capture_default_str();
  app.add_option("--seed", ctx.seed, "Seed shared by the efficacy runs")->capture_default_str();
  app.add_option("--work-dir", ctx.work_dir, "Scratch directory")->capture_default_str();
  app.add_flag_callback("--list", [] {
    for (const auto& c : kCriteria) std::cout << c.name << "\n";
    std::exit(0);
  }, "List criteria and exit");
  CLI11_PARSE(app, argc, argv);

  std::set<std::string> known;
  for (const auto& c : kCriteria) known.insert(c.name);
  for (const auto& o : only) {
    if (!known.count(o)) {
      std::cerr << "unknown criterion '" << o << "' (see --list)\n";
      return 2;
    }
  }
  std::filesystem::create_directories(ctx.work_dir);

  nlohmann::json out = nlohmann::json::array();
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %-22s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), s);
    std::fflush(stdout);
    out.push_back({{"criterion", c.name}, {"pass", o.pass}, {"detail", o.detail},
                   {"seconds", s}, {"metrics", o.metrics}});
  }
  if (!report.empty()) std::ofstream(report) << out.dump(2) << "\n";
  return failed == 0 ? 0 : 1;
}
