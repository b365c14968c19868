#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "salman/dmd.hpp"
#include "salman/knn_graph.hpp"
#include "salman/sparsifier.hpp"
#include "salman/stats.hpp"

namespace salman::pipeline {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void require_files(const fs::path& dir, const std::vector<std::string>& names) {
  std::vector<std::string> missing;
  for (const auto& name : names)
    if (!fs::exists(dir / name)) missing.push_back(name);
  if (missing.empty()) return;
  std::string msg = "missing artifacts in " + dir.string() + ":";
  for (const auto& m : missing) msg += " " + m;
  throw Error(msg);
}

std::string_view mode_name(ModeChoice m) {
  switch (m) {
    case ModeChoice::dense: return "dense";
    case ModeChoice::krylov: return "krylov";
    case ModeChoice::automatic: break;
  }
  return "auto";
}

std::string fmt(double x, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

void ensure_out(const PipelineConfig& cfg) { fs::create_directories(cfg.out); }

SparsifyConfig sparsify_config(const PipelineConfig& cfg) {
  SparsifyConfig sc;
  sc.spf_levels = cfg.spf_levels;
  sc.contraction_quantile = cfg.contraction_quantile;
  sc.diameter_factor = cfg.diameter_factor;
  return sc;
}

json manifold_summary(const SparsifiedManifold& sm, const FidelityReport& fid, double seconds) {
  return {{"nodes", sm.original.n_nodes()},
          {"edges_before", sm.original.n_edges()},
          {"edges_after", sm.sparse.n_edges()},
          {"levels_completed", sm.levels_completed},
          {"stopped_early", sm.stopped_early},
          {"merges", sm.merges.size()},
          {"guard_edges", sm.connectivity_edges.size()},
          {"pearson", fid.pearson},
          {"edge_pct", fid.edge_pct},
          {"seconds", seconds}};
}

void write_ranking(const PipelineConfig& cfg, const RankingTable& table) {
  write_text(cfg.out / "scores.csv", table.to_csv());
  write_text(cfg.out / "scores.json", table.to_json());
  const std::string tag = percent_tag(cfg.top_percent);
  std::string top, bottom;
  for (const auto& id : non_robust_top(table, cfg.top_percent)) top += id + '\n';
  for (const auto& id : robust_bottom(table, cfg.top_percent)) bottom += id + '\n';
  write_text(cfg.out / ("non_robust_top_" + tag + ".txt"), top);
  write_text(cfg.out / ("robust_bottom_" + tag + ".txt"), bottom);
  const bool all_equal = std::all_of(table.rows.begin(), table.rows.end(), [&](const RankingRow& r) {
    return r.salman_score == table.rows.front().salman_score;
  });
  if (all_equal) warn("all SALMAN scores are equal; subsets are chosen by sample id order only");
}

}  // namespace

void PipelineConfig::validate() const {
  if (k < 1) throw UsageError("--k must be >= 1");
  if (spf_levels < 1 || spf_levels > 8) throw UsageError("--spf must be in [1, 8]");
  if (!(contraction_quantile > 0.0 && contraction_quantile < 1.0)) throw UsageError("--quantile must be in (0, 1)");
  if (!(diameter_factor > 0.0)) throw UsageError("--diameter-factor must be positive");
  if (m < 0) throw UsageError("--m must be >= 0");
  if (r < 0) throw UsageError("--r must be >= 0");
  if (!(top_percent > 0.0 && top_percent <= 100.0)) throw UsageError("--top-percent must be in (0, 100]");
  if (n_pairs < 2) throw UsageError("--pairs must be >= 2");
}

std::string percent_tag(double percent) { return fmt(percent, "%.6g"); }

void cmd_build_graph(const PipelineConfig& cfg) {
  if (cfg.x_path.empty() || cfg.y_path.empty()) throw UsageError("build-graph needs --x and --y");
  ensure_out(cfg);
  Stopwatch total;
  const auto x = read_embeddings(cfg.x_path, EmbeddingFormat::detect);
  const auto y = read_embeddings(cfg.y_path, EmbeddingFormat::detect);
  pair_check(x, y);
  if (cfg.k >= x.n_samples()) throw UsageError("--k must be smaller than the number of samples");

  KnnOptions knn;
  knn.seed = cfg.seed;
  json manifest;
  manifest["stage"] = "build-graph";
  manifest["parameters"] = {{"x", cfg.x_path.string()}, {"y", cfg.y_path.string()}, {"k", cfg.k}, {"seed", cfg.seed}};
  manifest["n_samples"] = x.n_samples();
  manifest["dim_x"] = x.dim();
  manifest["dim_y"] = y.dim();
  for (const auto& [tag, emb] : {std::pair{"x", &x}, std::pair{"y", &y}}) {
    Stopwatch sw;
    ConnectivityRepair repair;
    const auto g = ensure_connected(build_knn_graph(*emb, cfg.k, knn), *emb, &repair);
    write_graph(g, cfg.out / (std::string("graph_") + tag + ".json"));
    manifest["graphs"][tag] = {{"edges", g.n_edges()},
                               {"components_before_repair", repair.components_before},
                               {"bridges_added", repair.added.size()},
                               {"seconds", sw.seconds()}};
  }
  manifest["seconds"] = total.seconds();
  write_text(cfg.out / "build_manifest.json", manifest.dump(2) + "\n");
}

void cmd_sparsify(const PipelineConfig& cfg) {
  ensure_out(cfg);
  std::vector<std::pair<std::string, WeightedGraph>> inputs;
  if (!cfg.edges_path.empty()) {
    auto g = read_edge_list(cfg.edges_path);
    if (!is_connected(g)) {
      Index count = 0;
      connected_components(g, &count);
      g = largest_component(g);
      warn("edge list has " + std::to_string(count) + " components; using the largest (" +
           std::to_string(g.n_nodes()) + " nodes)");
    }
    write_graph(g, cfg.out / "graph_edges.json");
    inputs.emplace_back("edges", std::move(g));
  } else {
    require_files(cfg.out, {"graph_x.json", "graph_y.json"});
    inputs.emplace_back("x", read_graph(cfg.out / "graph_x.json"));
    inputs.emplace_back("y", read_graph(cfg.out / "graph_y.json"));
  }

  const auto sc = sparsify_config(cfg);
  const auto factory = estimator_factory(cfg.mode, cfg.m, cfg.seed);
  json manifest;
  manifest["stage"] = "sparsify";
  manifest["parameters"] = {{"spf", cfg.spf_levels},
                            {"quantile", cfg.contraction_quantile},
                            {"diameter_factor", cfg.diameter_factor},
                            {"mode", mode_name(cfg.mode)},
                            {"m", cfg.m},
                            {"seed", cfg.seed},
                            {"pairs", cfg.n_pairs}};
  Stopwatch total;
  for (const auto& [tag, g] : inputs) {
    Stopwatch sw;
    const auto sm = lrd_decompose(g, sc, factory);
    const double sparsify_seconds = sw.seconds();
    const auto fid = validate_sparsification(sm, cfg.n_pairs, cfg.seed, cfg.mode, cfg.m);
    write_graph(sm.sparse, cfg.out / ("sparse_" + tag + ".json"));
    write_text(cfg.out / ("fidelity_" + tag + ".json"), fid.to_json());
    manifest["manifolds"][tag] = manifold_summary(sm, fid, sparsify_seconds);
  }
  manifest["seconds"] = total.seconds();
  write_text(cfg.out / "sparsify_manifest.json", manifest.dump(2) + "\n");
}

void cmd_score(const PipelineConfig& cfg) {
  require_files(cfg.out, {"graph_x.json", "graph_y.json"});
  const bool sparse = cfg.use_sparse && fs::exists(cfg.out / "sparse_x.json") && fs::exists(cfg.out / "sparse_y.json");
  const std::string prefix = sparse ? "sparse_" : "graph_";
  Stopwatch sw;
  ManifoldPair mp(read_graph(cfg.out / (prefix + "x.json")), read_graph(cfg.out / (prefix + "y.json")));

  DmdOptions opts;
  opts.mode = cfg.mode;
  opts.m = cfg.m;
  opts.seed = cfg.seed;
  opts.r = std::min(cfg.r, mp.n_nodes() - 1);
  const auto report = compute_dmd(mp, opts);
  auto doc = json::parse(report.to_json(mp.node_ids(), true));
  doc["graphs"] = sparse ? "sparse" : "knn";
  write_text(cfg.out / "dmd_report.json", doc.dump(2) + "\n");

  const auto table = rank_samples(report.node_scores, mp.node_ids(), cfg.schedule);
  write_ranking(cfg, table);

  json manifest;
  manifest["stage"] = "score";
  manifest["parameters"] = {{"mode", mode_name(cfg.mode)},
                            {"m", cfg.m},
                            {"r", opts.r},
                            {"seed", cfg.seed},
                            {"top_percent", cfg.top_percent},
                            {"schedule", schedule_name(cfg.schedule)},
                            {"graphs", sparse ? "sparse" : "knn"}};
  manifest["seconds"] = sw.seconds();
  write_text(cfg.out / "score_manifest.json", manifest.dump(2) + "\n");
}

void cmd_rank(const PipelineConfig& cfg) {
  require_files(cfg.out, {"scores.csv"});
  const auto previous = RankingTable::from_csv(read_text(cfg.out / "scores.csv"));
  std::vector<double> scores;
  std::vector<std::string> ids;
  for (const auto& row : previous.rows) {
    scores.push_back(row.salman_score);
    ids.push_back(row.sample_id);
  }
  write_ranking(cfg, rank_samples(scores, ids, cfg.schedule));
}

void cmd_validate(const PipelineConfig& cfg) {
  int validated = 0;
  for (const std::string tag : {"x", "y", "edges"}) {
    const auto original = cfg.out / ("graph_" + tag + ".json");
    const auto sparse = cfg.out / ("sparse_" + tag + ".json");
    if (!fs::exists(original) || !fs::exists(sparse)) continue;
    const auto fid = validate_sparsification(read_graph(original), read_graph(sparse), cfg.n_pairs, cfg.seed, cfg.mode,
                                             cfg.m);
    write_text(cfg.out / ("fidelity_" + tag + ".json"), fid.to_json());
    ++validated;
  }
  if (validated == 0) throw Error("validate: no graph_*/sparse_* pairs in " + cfg.out.string());
}

namespace {

std::string histogram(const std::vector<double>& values, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * bins) : 0;
    counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
  }
  const Index peak = *std::max_element(counts.begin(), counts.end());
  std::string out = "```\n";
  for (int b = 0; b < bins; ++b) {
    const double a = lo + (hi - lo) * b / bins, z = lo + (hi - lo) * (b + 1) / bins;
    char label[96];
    std::snprintf(label, sizeof label, "[%10.4g, %10.4g) %6td ", a, z, counts[static_cast<std::size_t>(b)]);
    out += label;
    out += std::string(static_cast<std::size_t>(peak ? 40 * counts[static_cast<std::size_t>(b)] / peak : 0), '#');
    out += '\n';
  }
  return out + "```\n";
}

}  // namespace

void cmd_report(const PipelineConfig& cfg) {
  require_files(cfg.out, {"build_manifest.json", "graph_x.json", "graph_y.json", "dmd_report.json", "scores.csv",
                          "score_manifest.json"});
  if (cfg.scaling) {
    const auto res = scaling_benchmark({1000, 2000, 4000}, cfg.k, cfg.seed);
    json doc;
    doc["sizes"] = json::array();
    for (const auto& p : res.points) doc["sizes"].push_back({{"n", p.n}, {"edges", p.edges}, {"seconds", p.seconds}});
    doc["exponent"] = res.exponent;
    write_text(cfg.out / "scaling.json", doc.dump(2) + "\n");
  }

  const auto build = read_json(cfg.out / "build_manifest.json");
  const auto score = read_json(cfg.out / "score_manifest.json");
  const auto dmd = read_json(cfg.out / "dmd_report.json");
  const auto table = RankingTable::from_csv(read_text(cfg.out / "scores.csv"));

  std::string md = "# SALMAN report\n\n## Parameters\n\n| parameter | value |\n|---|---|\n";
  auto row = [&](const std::string& k, const std::string& v) { md += "| " + k + " | " + v + " |\n"; };
  row("samples", build["n_samples"].dump());
  row("k", build["parameters"]["k"].dump());
  row("seed", build["parameters"]["seed"].dump());
  for (const auto& [key, value] : score["parameters"].items()) row("score." + key, value.dump());
  const bool have_sparse = fs::exists(cfg.out / "sparsify_manifest.json");
  json sparsify;
  if (have_sparse) {
    sparsify = read_json(cfg.out / "sparsify_manifest.json");
    for (const auto& [key, value] : sparsify["parameters"].items()) row("sparsify." + key, value.dump());
  }

  md += "\n## Graphs\n\n| manifold | edges | components before repair | bridges | sparse edges |\n|---|---|---|---|---|\n";
  for (const std::string tag : {"x", "y"}) {
    const auto& g = build["graphs"][tag];
    std::string sparse_edges = "-";
    if (have_sparse && sparsify["manifolds"].contains(tag)) sparse_edges = sparsify["manifolds"][tag]["edges_after"].dump();
    md += "| G_" + std::string(tag == "x" ? "X" : "Y") + " | " + g["edges"].dump() + " | " +
          g["components_before_repair"].dump() + " | " + g["bridges_added"].dump() + " | " + sparse_edges + " |\n";
  }

  md += "\n## Distortion\n\n";
  if (dmd.contains("gamma_max_bound")) {
    md += "| gamma_min_bound | observed min | observed max | gamma_max_bound |\n|---|---|---|---|\n";
    md += "| " + fmt(dmd["gamma_min_bound"].get<double>()) + " | " + fmt(dmd["gamma_summary"]["min"].get<double>()) +
          " | " + fmt(dmd["gamma_summary"]["max"].get<double>()) + " | " + fmt(dmd["gamma_max_bound"].get<double>()) +
          " |\n\n";
  }
  md += "Union vs intersection neighborhood Spearman: " + fmt(dmd["union_vs_intersection_spearman"].get<double>()) +
        "\n\n## SALMAN score histogram\n\n";
  std::vector<double> scores;
  for (const auto& r : table.rows) scores.push_back(r.salman_score);
  md += histogram(scores, 10);
  md += "\nMost fragile: ";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, table.rows.size()); ++i)
    md += (i ? ", " : "") + table.rows[i].sample_id + " (" + fmt(table.rows[i].salman_score) + ")";
  md += "\n";

  md += "\n## Sparsification fidelity\n\n";
  bool any_fidelity = false;
  for (const std::string tag : {"x", "y", "edges"}) {
    const auto path = cfg.out / ("fidelity_" + tag + ".json");
    if (!fs::exists(path)) continue;
    if (!any_fidelity) md += "| graph | pearson | spearman | mse | rel_err | edge_pct | pairs |\n|---|---|---|---|---|---|---|\n";
    any_fidelity = true;
    const auto f = FidelityReport::from_json(read_text(path));
    md += "| " + tag + " | " + fmt(f.pearson) + " | " + fmt(f.spearman) + " | " + fmt(f.mse) + " | " + fmt(f.rel_err) +
          " | " + fmt(100.0 * f.edge_pct, "%.2f%%") + " | " + std::to_string(f.n_pairs_sampled) + " |\n";
  }
  if (!any_fidelity) md += "No fidelity reports found.\n";

  md += "\n## Timing\n\n| stage | seconds |\n|---|---|\n";
  md += "| build-graph | " + fmt(build["seconds"].get<double>(), "%.3f") + " |\n";
  if (have_sparse) md += "| sparsify | " + fmt(sparsify["seconds"].get<double>(), "%.3f") + " |\n";
  md += "| score | " + fmt(score["seconds"].get<double>(), "%.3f") + " |\n";

  if (fs::exists(cfg.out / "scaling.json")) {
    const auto sc = read_json(cfg.out / "scaling.json");
    md += "\n## Scaling\n\n| N | edges | seconds |\n|---|---|---|\n";
    for (const auto& p : sc["sizes"])
      md += "| " + p["n"].dump() + " | " + p["edges"].dump() + " | " + fmt(p["seconds"].get<double>(), "%.3f") + " |\n";
    md += "\nFitted runtime exponent: " + fmt(sc["exponent"].get<double>(), "%.3f") + "\n";
  }
  write_text(cfg.out / "report.md", md);
}

std::pair<EmbeddingMatrix, EmbeddingMatrix> synthetic_pair(Index n, Index dim, std::uint64_t seed) {
  auto rng = stage_rng(seed, "synthetic");
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr Index kClusters = 8;
  RowMatrix centers(kClusters, dim);
  for (Index i = 0; i < centers.size(); ++i) centers.data()[i] = 3.0 * gauss(rng);
  Eigen::MatrixXd mix(dim, dim);
  for (Index i = 0; i < mix.size(); ++i) mix.data()[i] = gauss(rng) / std::sqrt(static_cast<double>(dim));

  EmbeddingMatrix x, y;
  x.values.resize(n, dim);
  y.values.resize(n, dim);
  const int width = static_cast<int>(std::to_string(n - 1).size());
  for (Index i = 0; i < n; ++i) {
    const Index c = i % kClusters;
    for (Index j = 0; j < dim; ++j) x.values(i, j) = centers(c, j) + gauss(rng);
    y.values.row(i) = (x.values.row(i) * mix).array().tanh();
    for (Index j = 0; j < dim; ++j) y.values(i, j) += 0.05 * gauss(rng);
    char id[32];
    std::snprintf(id, sizeof id, "s%0*td", width, i);
    x.sample_ids.emplace_back(id);
  }
  y.sample_ids = x.sample_ids;
  return {std::move(x), std::move(y)};
}

ScalingResult scaling_benchmark(const std::vector<Index>& sizes, Index k, std::uint64_t seed, int repeats) {
  ScalingResult result;
  std::vector<double> ns, secs;
  for (Index n : sizes) {
    const auto [x, y] = synthetic_pair(n, 16, seed);
    ScalingPoint point;
    point.n = n;
    point.seconds = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < std::max(1, repeats); ++rep) {
      Stopwatch sw;
      // The near-linear path: approximate neighbours at every size.
      KnnOptions knn;
      knn.seed = seed;
      knn.exact_limit = 0;
      const auto gx = ensure_connected(build_knn_graph(x, k, knn), x);
      const auto gy = ensure_connected(build_knn_graph(y, k, knn), y);
      const auto factory = krylov_estimator_factory(0, seed);
      const auto sx = lrd_decompose(gx, SparsifyConfig{}, factory);
      const auto sy = lrd_decompose(gy, SparsifyConfig{}, factory);
      DmdOptions opts;
      opts.mode = ModeChoice::krylov;
      opts.seed = seed;
      opts.r = 0;
      opts.bounds = false;
      const auto report = compute_dmd(ManifoldPair(sx.sparse, sy.sparse), opts);
      point.seconds = std::min(point.seconds, sw.seconds());
      point.edges = gx.n_edges() + gy.n_edges();
    }
    result.points.push_back(point);
    ns.push_back(static_cast<double>(n));
    secs.push_back(point.seconds);
  }
  result.exponent = loglog_slope(ns, secs);
  return result;
}

}  // namespace salman::pipeline
