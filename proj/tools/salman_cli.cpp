#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pipeline.hpp"

namespace {

using salman::pipeline::PipelineConfig;

void add_options(CLI::App* sub, PipelineConfig& cfg, std::string& mode, std::string& schedule, int& threads) {
  sub->add_option("--x", cfg.x_path, "input-manifold embeddings z_X");
  sub->add_option("--y", cfg.y_path, "output-manifold embeddings z_Y");
  sub->add_option("--edges", cfg.edges_path, "benchmark edge list (sparsify/validate a single graph)");
  sub->add_option("--k", cfg.k, "kNN neighbors")->capture_default_str();
  sub->add_option("--spf", cfg.spf_levels, "LRD contraction levels")->capture_default_str();
  sub->add_option("--quantile", cfg.contraction_quantile, "fraction of edges offered for contraction per level")
      ->capture_default_str();
  sub->add_option("--diameter-factor", cfg.diameter_factor, "supernode diameter cap factor")->capture_default_str();
  sub->add_option("--m", cfg.m, "Krylov dimension (0 = 2 ceil(log2 N))")->capture_default_str();
  sub->add_option("--r", cfg.r, "eigensubspace rank (0 = skip)")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "seed for every randomized stage")->capture_default_str();
  sub->add_option("--mode", mode, "resistance mode")
      ->check(CLI::IsMember({"dense", "krylov", "auto"}))
      ->capture_default_str();
  sub->add_option("--top-percent", cfg.top_percent, "subset size in percent")->capture_default_str();
  sub->add_option("--schedule", schedule, "weight schedule")
      ->check(CLI::IsMember({"linear", "piecewise"}))
      ->capture_default_str();
  sub->add_option("--pairs", cfg.n_pairs, "node pairs sampled for fidelity when N > 1500")->capture_default_str();
  sub->add_flag("!--no-sparse", cfg.use_sparse, "score the kNN graphs even if sparse graphs exist");
  sub->add_flag("--scaling", cfg.scaling, "run the N in {1k, 2k, 4k} runtime benchmark (report)");
  sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
  sub->add_option("--threads", threads, "worker threads (0 = all cores)")->envname("SALMAN_THREADS");
}

int fail(bool json_errors, const char* kind, const std::string& message, int code) {
  if (json_errors) {
    nlohmann::ordered_json doc{{"error", message}, {"kind", kind}, {"exit_code", code}};
    std::cerr << doc.dump() << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  bool json_errors = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--json-errors") == 0) json_errors = true;

  CLI::App app{"SALMAN: sample robustness ranking from input/output embedding manifolds"};
  app.require_subcommand(1);
  app.add_flag("--json-errors", json_errors, "print errors as one JSON object on stderr");
  PipelineConfig cfg;
  int threads = 0;
  std::string mode = "auto", schedule = "linear";

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const PipelineConfig&);
  };
  const Command commands[] = {
      {"build-graph", "kNN graphs for z_X and z_Y", salman::pipeline::cmd_build_graph},
      {"sparsify", "LRD sparsification plus fidelity report", salman::pipeline::cmd_sparsify},
      {"score", "distortion, SALMAN scores, bounds and ranking", salman::pipeline::cmd_score},
      {"rank", "re-rank existing scores with another schedule or subset size", salman::pipeline::cmd_rank},
      {"validate", "resistance fidelity of sparse graphs", salman::pipeline::cmd_validate},
      {"report", "Markdown summary of all stage outputs", salman::pipeline::cmd_report},
  };
  std::map<CLI::App*, const Command*> by_app;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_options(sub, cfg, mode, schedule, threads);
    sub->add_flag("--json-errors", json_errors, "print errors as one JSON object on stderr");
    if (std::strcmp(c.name, "build-graph") == 0) {
      sub->get_option("--x")->required();
      sub->get_option("--y")->required();
    }
    by_app[sub] = &c;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(json_errors, "usage", e.what(), 2);
  }

  try {
    cfg.mode = mode == "dense"    ? salman::ModeChoice::dense
               : mode == "krylov" ? salman::ModeChoice::krylov
                                  : salman::ModeChoice::automatic;
    cfg.schedule = salman::parse_schedule(schedule);
    cfg.validate();
    salman::set_num_threads(threads);
    for (const auto& [sub, command] : by_app)
      if (sub->parsed()) command->run(cfg);
  } catch (const salman::pipeline::UsageError& e) {
    return fail(json_errors, "usage", e.what(), 2);
  } catch (const std::exception& e) {
    return fail(json_errors, "runtime", e.what(), 1);
  }
  return 0;
}
