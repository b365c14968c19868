#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "salman/embedding_io.hpp"
#include "salman/ranking.hpp"
#include "salman/resistance.hpp"

namespace salman::pipeline {

struct PipelineConfig {
  std::filesystem::path x_path;
  std::filesystem::path y_path;
  std::filesystem::path edges_path;  // benchmark edge list for sparsify/validate
  Index k = 10;
  int spf_levels = 2;
  double contraction_quantile = 0.5;
  double diameter_factor = 2.0;
  Index m = 0;
  Index r = 5;
  std::uint64_t seed = 0;
  ModeChoice mode = ModeChoice::automatic;
  double top_percent = 1.0;
  Schedule schedule = Schedule::linear;
  Index n_pairs = 20000;
  bool use_sparse = true;
  bool scaling = false;
  std::filesystem::path out = "salman_out";

  void validate() const;
};

/// Thrown for bad or missing arguments; mapped to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

void cmd_build_graph(const PipelineConfig& cfg);
void cmd_sparsify(const PipelineConfig& cfg);
void cmd_score(const PipelineConfig& cfg);
void cmd_rank(const PipelineConfig& cfg);
void cmd_validate(const PipelineConfig& cfg);
void cmd_report(const PipelineConfig& cfg);

/// Gaussian-mixture input embeddings and a smooth nonlinear image of them.
std::pair<EmbeddingMatrix, EmbeddingMatrix> synthetic_pair(Index n, Index dim, std::uint64_t seed);

struct ScalingPoint {
  Index n = 0;
  Index edges = 0;
  double seconds = 0.0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  double exponent = 0.0;
};

/// Times graph build, sparsification and scoring (Krylov mode, no spectral
/// bounds or eigensubspace) on synthetic pairs and fits the log-log slope.
ScalingResult scaling_benchmark(const std::vector<Index>& sizes, Index k, std::uint64_t seed, int repeats = 1);

/// Percent formatted for file names: 1 -> "1", 2.5 -> "2.5".
std::string percent_tag(double percent);

}  // namespace salman::pipeline
