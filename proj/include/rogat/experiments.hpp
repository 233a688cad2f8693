#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <thread>

#include "rogat/attacks.hpp"
#include "rogat/report.hpp"
#include "rogat/rogat.hpp"

// =============================================================================
/// @file experiments.hpp
/// @brief Experiment runner: flat key=value configuration, dataset assembly,
/// paired poisoning, and the sweep commands behind the rogat-lab CLI.
///
/// Conventions:
///  - every run is pinned by one integer seed driving split, initialization
///    and dropout; re-running a row reproduces its accuracy bit for bit;
///  - one perturbation per (rate, seed) pair, shared by all model kinds at
///    that grid point, so model comparisons are paired;
///  - sweep cells run in parallel up to `workers` (env ROGAT_WORKERS wins);
///    a cell whose wall time exceeds cell_timeout_s aborts, its unfinished
///    rows flagged partial, and the report is marked incomplete.
// =============================================================================

namespace rogat {

// -----------------------------------------------------------------------------
// Flat key=value configuration
// -----------------------------------------------------------------------------

/// Key=value store ("key = value" lines, '#' comments). Every lookup records
/// the effective value, so reports carry the full resolved configuration.
class KvConfig {
 public:
  static KvConfig from_file(const std::string& path) {
    std::ifstream in(path);
    ROGAT_REQUIRE(in.good(), "config: cannot read " + path);
    KvConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      ROGAT_REQUIRE(eq != std::string::npos,
                    "config: missing '=' at " + path + ":" + std::to_string(line_no));
      cfg.set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Applies a "key=value" override (the CLI --set form).
  void apply_set(const std::string& kv) {
    const auto eq = kv.find('=');
    ROGAT_REQUIRE(eq != std::string::npos, "config: --set needs key=value, got " + kv);
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
  }

  double num(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
      resolved_[key] = detail::format_double(fallback);
      return fallback;
    }
    resolved_[key] = it->second;
    return detail::parse_double(it->second, "config key " + key);
  }

  long integer(const std::string& key, long fallback) const {
    return static_cast<long>(num(key, static_cast<double>(fallback)));
  }

  bool flag(const std::string& key, bool fallback) const {
    const std::string v = str(key, fallback ? "1" : "0");
    return v == "1" || v == "true" || v == "yes" || v == "on";
  }

  std::vector<double> list(const std::string& key, const std::string& fallback) const {
    std::vector<double> out;
    for (const auto& part : detail::split(str(key, fallback), ','))
      if (!trim(part).empty()) out.push_back(detail::parse_double(trim(part), key));
    return out;
  }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

// -----------------------------------------------------------------------------
// Dataset assembly
// -----------------------------------------------------------------------------

struct Dataset {
  Graph clean;  ///< LCC-extracted, feature-preprocessed, masks unset
  std::string name;
};

/// Loads and preprocesses the configured dataset. Citation-style datasets
/// (linqs / csv / citation) default to largest-component extraction and
/// feature rows rescaled to l2 norm features.row_norm (0 disables); SBM
/// features are left at their native scale.
inline Dataset load_dataset(const KvConfig& cfg) {
  const std::string kind = cfg.str("dataset", "citation");
  Dataset ds;
  bool binary_like = true;
  if (kind == "linqs") {
    ds.clean = load_linqs(cfg.str("linqs.content", "cora.content"),
                          cfg.str("linqs.cites", "cora.cites"));
    ds.name = "linqs";
  } else if (kind == "csv") {
    const std::string features = cfg.str("csv.features", "");
    if (features.empty()) {
      // featureless import (polblogs style): identity one-hot features
      Graph g;
      g.labels = load_labels_csv(cfg.str("csv.labels", "labels.csv"));
      g.n_nodes = static_cast<int>(g.labels.size());
      for (int y : g.labels) g.n_classes = std::max(g.n_classes, y + 1);
      g.adjacency = load_edges_csv(cfg.str("csv.edges", "edges.csv"), g.n_nodes);
      g.features = Mat::Identity(g.n_nodes, g.n_nodes);
      g.reset_masks();
      ds.clean = std::move(g);
      ds.name = "csv-identity";
    } else {
      ds.clean = load_graph_csv(cfg.str("csv.edges", "edges.csv"),
                                cfg.str("csv.labels", "labels.csv"), features);
      ds.name = "csv";
    }
  } else if (kind == "sbm") {
    SbmSpec spec;
    spec.n_nodes = static_cast<int>(cfg.integer("sbm.n", 1000));
    spec.n_classes = static_cast<int>(cfg.integer("sbm.classes", 2));
    spec.p_same = cfg.num("sbm.p_same", 0.02);
    spec.p_diff = cfg.num("sbm.p_diff", 0.02);
    spec.feature_dim = static_cast<int>(cfg.integer("sbm.dim", 16));
    spec.feature_signal = cfg.num("sbm.signal", 1.0);
    spec.seed = static_cast<std::uint64_t>(cfg.integer("sbm.seed", 0));
    ds.clean = sbm_generate(spec);
    ds.name = "sbm";
    binary_like = false;
  } else if (kind == "citation") {
    CitationSpec spec;
    spec.n_nodes = static_cast<int>(cfg.integer("citation.n", 2485));
    spec.n_classes = static_cast<int>(cfg.integer("citation.classes", 7));
    spec.target_edges = cfg.num("citation.edges", 5069.0);
    spec.target_link_ratio = cfg.num("citation.ratio", 4.1);
    spec.feature_dim = static_cast<int>(cfg.integer("citation.dim", 1433));
    spec.words_per_doc = static_cast<int>(cfg.integer("citation.words", 18));
    spec.topic_width = static_cast<int>(cfg.integer("citation.topic_width", 24));
    spec.topic_signal = cfg.num("citation.signal", 0.4);
    spec.topic_overlap = cfg.num("citation.overlap", 0.0);
    spec.seed = static_cast<std::uint64_t>(cfg.integer("citation.seed", 1));
    if (spec.n_classes != 7)
      spec.class_weights.assign(spec.n_classes, 1.0 / spec.n_classes);
    ds.clean = citation_generate(spec);
    ds.name = "citation";
  } else {
    throw std::invalid_argument("config: unknown dataset kind '" + kind + "'");
  }

  if (cfg.flag("dataset.lcc", binary_like)) ds.clean = extract_lcc(ds.clean);
  const double row_norm = cfg.num("features.row_norm", binary_like ? 2.0 : 0.0);
  if (row_norm > 0.0) ds.clean.features = normalize_rows(ds.clean.features, row_norm);
  return ds;
}

// -----------------------------------------------------------------------------
// Model configuration
// -----------------------------------------------------------------------------

inline GatConfig gat_config(const KvConfig& cfg) {
  GatConfig g;
  g.hidden_dim = static_cast<int>(cfg.integer("gat.hidden", 8));
  g.heads_per_layer.clear();
  for (double h : cfg.list("gat.heads", "8,1"))
    g.heads_per_layer.push_back(static_cast<int>(h));
  g.n_layers = static_cast<int>(g.heads_per_layer.size());
  g.dropout = cfg.num("gat.dropout", 0.6);
  g.leaky_slope = cfg.num("gat.slope", 0.2);
  g.lr = cfg.num("gat.lr", 0.005);
  g.weight_decay = cfg.num("gat.weight_decay", 5e-4);
  g.epochs = static_cast<int>(cfg.integer("gat.epochs", 200));
  g.patience = static_cast<int>(cfg.integer("gat.patience", 100));
  g.self_loops = cfg.flag("gat.self_loops", true);
  return g;
}

inline RogatConfig rogat_config(const KvConfig& cfg) {
  RogatConfig r;
  r.alpha = cfg.num("rogat.alpha", 1.0);
  r.beta = cfg.num("rogat.beta", 1.0);
  r.gamma = cfg.num("rogat.gamma", 1.0);
  r.lambda = cfg.num("rogat.lambda", 1.0);
  r.eta1 = cfg.num("rogat.eta1", 0.01);
  r.eta2 = cfg.num("rogat.eta2", 0.01);
  r.t1 = static_cast<int>(cfg.integer("rogat.t1", 10));
  r.t2 = static_cast<int>(cfg.integer("rogat.t2", 10));
  r.gat = gat_config(cfg);
  return r;
}

// -----------------------------------------------------------------------------
// Single runs
// -----------------------------------------------------------------------------

inline constexpr const char* kModelKinds[] = {"gat", "rogat", "rogat-no-structure",
                                              "rogat-no-feature"};

inline bool is_model_kind(const std::string& m) {
  for (const char* k : kModelKinds)
    if (m == k) return true;
  return false;
}

/// Splits the clean graph with the run seed and applies the perturbation.
inline Graph prepare_run_graph(const Graph& clean, const KvConfig& cfg, std::uint64_t seed,
                               const Perturbation* pert) {
  Graph g = random_split(clean, cfg.num("split.train", 0.1), cfg.num("split.val", 0.1),
                         mix_seed(seed, 501));
  if (pert && (!pert->added.empty() || !pert->removed.empty()))
    g = apply_perturbation(g, *pert);
  return g;
}

/// Trains one model kind on an already prepared graph and fills a report row.
inline RunRow run_one(const Graph& g, const std::string& model, const KvConfig& cfg,
                      std::uint64_t seed, const Perturbation* pert,
                      const std::chrono::steady_clock::time_point* deadline,
                      GatParams* params_out = nullptr, RevisedState* state_out = nullptr) {
  ROGAT_REQUIRE(is_model_kind(model), "run: unknown model kind '" + model + "'");
  RunRow row;
  row.seed = seed;
  const auto stats = link_ratio(g);
  row.n_same = stats.n_same;
  row.n_diff = stats.n_diff;

  const auto t0 = std::chrono::steady_clock::now();
  if (deadline && t0 > *deadline) {
    row.partial = true;
    row.accuracy = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  if (model == "gat") {
    GatConfig gc = gat_config(cfg);
    gc.seed = seed;
    auto result = train_gat(g, gc, deadline);
    row.partial = result.history.timed_out;
    row.accuracy = masked_accuracy(predict(g, result.params, gc), g.labels, g.test_mask);
    if (params_out) *params_out = std::move(result.params);
  } else {
    RogatConfig rc = rogat_config(cfg);
    rc.gat.seed = seed;
    if (model == "rogat-no-structure") rc.enable_structure = false;
    if (model == "rogat-no-feature") rc.enable_feature = false;
    const std::vector<std::pair<int, int>>* added =
        pert && !pert->added.empty() ? &pert->added : nullptr;
    auto result = train_rogat(g, rc, added, deadline);
    row.partial = result.timed_out;
    row.accuracy =
        masked_accuracy(predict_rogat(g, result.params, rc.gat, result.state), g.labels,
                        g.test_mask);
    if (added) {
      row.ratio_trace = result.ratio_trace;
      row.fake_real_final = result.ratio_trace.back();
    }
    if (params_out) *params_out = std::move(result.params);
    if (state_out) *state_out = std::move(result.state);
  }
  row.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

// -----------------------------------------------------------------------------
// Worker pool
// -----------------------------------------------------------------------------

inline int worker_count(const KvConfig& cfg) {
  if (const char* env = std::getenv("ROGAT_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1, static_cast<int>(cfg.integer("workers", 2)));
}

inline void run_parallel(std::vector<std::function<void()>>& tasks, int workers) {
  std::atomic<std::size_t> next{0};
  auto drain = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      tasks[k]();
    }
  };
  if (workers <= 1 || tasks.size() <= 1) {
    drain();
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers - 1; ++w) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();
}

// -----------------------------------------------------------------------------
// Commands
// -----------------------------------------------------------------------------

/// Seed of the perturbation shared by every model kind at (rate index, seed).
inline std::uint64_t pert_seed(std::size_t rate_index, std::uint64_t seed) {
  return mix_seed(seed, 7700 + rate_index);
}

inline Perturbation make_attack(const Graph& clean, const std::string& kind, double rate,
                                std::uint64_t seed) {
  if (rate == 0.0 || kind == "none") return Perturbation{};
  if (kind == "dice") return dice_attack(clean, rate, seed);
  if (kind == "dice-add") return dice_attack(clean, rate, seed, true);
  if (kind == "random") return random_attack(clean, rate, seed);
  if (kind == "random-flip") return random_attack(clean, rate, seed, true);
  throw std::invalid_argument("config: unknown attack kind '" + kind + "'");
}

/// Grid sweep over (rate, model): n_seeds paired runs per cell.
inline Report sweep_core(const Dataset& ds, const KvConfig& cfg,
                         const std::vector<std::string>& models,
                         const std::vector<double>& rates, const std::string& command) {
  Report report;
  report.command = command;
  const int n_seeds = static_cast<int>(cfg.integer("n_seeds", 10));
  const auto seed0 = static_cast<std::uint64_t>(cfg.integer("seed0", 0));
  const std::string attack = cfg.str("attack", "dice");
  const double timeout = cfg.num("cell_timeout_s", 600.0);

  // one perturbation per (rate, seed), shared across model kinds
  std::vector<std::vector<Perturbation>> perts(rates.size());
  for (std::size_t r = 0; r < rates.size(); ++r)
    for (int s = 0; s < n_seeds; ++s)
      perts[r].push_back(make_attack(ds.clean, attack, rates[r], pert_seed(r, seed0 + s)));

  std::vector<std::vector<RunRow>> results(rates.size() * models.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t r = 0; r < rates.size(); ++r)
    for (std::size_t m = 0; m < models.size(); ++m) {
      const std::size_t slot = r * models.size() + m;
      tasks.push_back([&, r, m, slot]() {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(timeout));
        for (int s = 0; s < n_seeds; ++s) {
          const std::uint64_t seed = seed0 + s;
          const Graph g = prepare_run_graph(ds.clean, cfg, seed, &perts[r][s]);
          RunRow row = run_one(g, models[m], cfg, seed, &perts[r][s], &deadline);
          row.cell = {{"rate", detail::format_double(rates[r])}, {"model", models[m]}};
          results[slot].push_back(std::move(row));
        }
      });
    }
  run_parallel(tasks, worker_count(cfg));
  for (auto& rows : results)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  report.config = cfg.resolved();
  return report;
}

/// Table-1 style experiment: calibrate SBM probabilities per target ratio,
/// train GAT, report accuracy against the realized link ratio.
inline Report cmd_ratio_experiment(const KvConfig& cfg) {
  Report report;
  report.command = "ratio-experiment";
  const auto targets = cfg.list("ratio.targets", "1,2,3,4");
  const double links = cfg.num("ratio.links", 5000.0);
  const int n_seeds = static_cast<int>(cfg.integer("n_seeds", 10));
  const auto seed0 = static_cast<std::uint64_t>(cfg.integer("seed0", 0));
  const double timeout = cfg.num("cell_timeout_s", 600.0);

  SbmSpec base;
  base.n_nodes = static_cast<int>(cfg.integer("sbm.n", 1000));
  base.n_classes = static_cast<int>(cfg.integer("sbm.classes", 2));
  base.feature_dim = static_cast<int>(cfg.integer("sbm.dim", 16));
  base.feature_signal = cfg.num("sbm.signal", 1.0);

  // pair counts for the calibration
  std::vector<std::int64_t> class_size(base.n_classes, 0);
  for (int i = 0; i < base.n_nodes; ++i) ++class_size[i % base.n_classes];
  double intra_pairs = 0.0, cross_pairs = 0.0;
  for (int a = 0; a < base.n_classes; ++a) {
    intra_pairs += 0.5 * static_cast<double>(class_size[a]) * (class_size[a] - 1);
    for (int b = a + 1; b < base.n_classes; ++b)
      cross_pairs += static_cast<double>(class_size[a]) * class_size[b];
  }

  std::vector<std::vector<RunRow>> results(targets.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    SbmSpec spec = base;
    spec.p_diff = links / cross_pairs;
    spec.p_same = targets[r] * links / intra_pairs;
    ROGAT_REQUIRE(spec.p_same <= 1.0 && spec.p_diff <= 1.0,
                  "ratio-experiment: unattainable ratio for this node count");
    tasks.push_back([&, r, spec]() {
      const auto deadline = std::chrono::steady_clock::now() +
                            std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(timeout));
      for (int s = 0; s < n_seeds; ++s) {
        const std::uint64_t seed = seed0 + s;
        SbmSpec local = spec;
        local.seed = mix_seed(seed, 404);
        const Graph g = prepare_run_graph(sbm_generate(local), cfg, seed, nullptr);
        RunRow row = run_one(g, "gat", cfg, seed, nullptr, &deadline);
        row.cell = {{"ratio", detail::format_double(targets[r])}};
        results[r].push_back(std::move(row));
      }
    });
  }
  run_parallel(tasks, worker_count(cfg));
  for (auto& rows : results)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  report.config = cfg.resolved();
  return report;
}

inline Report cmd_defense_sweep(const KvConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  std::vector<std::string> models;
  for (const auto& part : detail::split(cfg.str("models", "gat,rogat"), ','))
    models.push_back(part);
  return sweep_core(ds, cfg, models, cfg.list("sweep.rates", "0,0.05,0.1,0.15,0.2,0.25"),
                    "defense-sweep");
}

inline Report cmd_ablation(const KvConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  std::vector<std::string> models;
  for (const auto& part :
       detail::split(cfg.str("models", "rogat,rogat-no-structure,rogat-no-feature"), ','))
    models.push_back(part);
  return sweep_core(ds, cfg, models, cfg.list("sweep.rates", "0,0.05,0.1,0.15,0.2,0.25"),
                    "ablation");
}

/// Heat-map sweep over (lambda, alpha = gamma) on one fixed poisoned graph.
inline Report cmd_hyper_sweep(const KvConfig& cfg) {
  Report report;
  report.command = "hyper-sweep";
  const Dataset ds = load_dataset(cfg);
  const auto grid = cfg.list("hyper.grid", "0.1,0.2,0.4,0.8,1.6,3.2,6.4");
  const double rate = cfg.num("hyper.rate", 0.25);
  const int n_seeds = static_cast<int>(cfg.integer("hyper.seeds", 1));
  const auto seed0 = static_cast<std::uint64_t>(cfg.integer("seed0", 0));
  const std::string attack = cfg.str("attack", "dice");
  const double timeout = cfg.num("cell_timeout_s", 600.0);

  const Perturbation pert = make_attack(ds.clean, attack, rate, pert_seed(0, seed0));

  std::vector<std::vector<RunRow>> results(grid.size() * grid.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t li = 0; li < grid.size(); ++li)
    for (std::size_t ai = 0; ai < grid.size(); ++ai) {
      const std::size_t slot = li * grid.size() + ai;
      tasks.push_back([&, li, ai, slot]() {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(timeout));
        KvConfig local = cfg;
        local.set("rogat.lambda", detail::format_double(grid[li]));
        local.set("rogat.alpha", detail::format_double(grid[ai]));
        local.set("rogat.gamma", detail::format_double(grid[ai]));
        for (int s = 0; s < n_seeds; ++s) {
          const std::uint64_t seed = seed0 + s;
          const Graph g = prepare_run_graph(ds.clean, cfg, seed, &pert);
          RunRow row = run_one(g, "rogat", local, seed, &pert, &deadline);
          row.cell = {{"lambda", detail::format_double(grid[li])},
                      {"alpha", detail::format_double(grid[ai])}};
          results[slot].push_back(std::move(row));
        }
      });
    }
  run_parallel(tasks, worker_count(cfg));
  for (auto& rows : results)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  report.config = cfg.resolved();
  return report;
}

/// Fake/real weight-ratio traces per perturbation rate.
inline Report cmd_ratio_track(const KvConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  KvConfig local = cfg;
  if (!cfg.has("n_seeds")) local.set("n_seeds", "5");
  return sweep_core(ds, local, {"rogat"}, cfg.list("track.rates", "0.05,0.15,0.25"),
                    "ratio-track");
}

/// One-shot training; writes checkpoint, revised state and predictions into
/// out_dir when given.
inline Report cmd_train(const KvConfig& cfg, const std::string& out_dir = "") {
  Report report;
  report.command = "train";
  const Dataset ds = load_dataset(cfg);
  const std::string model = cfg.str("model", "rogat");
  const auto seed0 = static_cast<std::uint64_t>(cfg.integer("seed0", 0));
  const double rate = cfg.num("attack.rate", 0.0);
  const std::string attack = cfg.str("attack", rate > 0.0 ? "dice" : "none");

  Perturbation pert;
  Graph clean = ds.clean;
  if (attack == "file") {
    Graph split = random_split(clean, cfg.num("split.train", 0.1),
                               cfg.num("split.val", 0.1), mix_seed(seed0, 501));
    auto [poisoned, p] = load_perturbed(split, cfg.str("attack.file", "poisoned_edges.csv"));
    pert = std::move(p);
    GatParams params;
    RevisedState state;
    RunRow row = run_one(poisoned, model, cfg, seed0, &pert, nullptr, &params, &state);
    row.cell = {{"model", model}, {"attack", "file"}};
    report.rows.push_back(std::move(row));
    if (!out_dir.empty()) {
      save_params(params, out_dir + "/params.ckpt");
      if (model != "gat")
        save_state(state, out_dir + "/state_edges.csv", out_dir + "/state_features.csv");
    }
  } else {
    pert = make_attack(clean, attack, rate, pert_seed(0, seed0));
    const Graph g = prepare_run_graph(clean, cfg, seed0, &pert);
    GatParams params;
    RevisedState state;
    RunRow row = run_one(g, model, cfg, seed0, &pert, nullptr, &params, &state);
    row.cell = {{"model", model}, {"attack", attack}};
    report.rows.push_back(std::move(row));
    if (!out_dir.empty()) {
      save_params(params, out_dir + "/params.ckpt");
      if (model != "gat")
        save_state(state, out_dir + "/state_edges.csv", out_dir + "/state_features.csv");
      const GatConfig gc = gat_config(cfg);
      std::ofstream pred_out(out_dir + "/predictions.csv");
      std::vector<int> pred;
      if (model == "gat")
        pred = predict(g, params, gc);
      else
        pred = predict_rogat(g, params, gc, state);
      for (int i = 0; i < g.n_nodes; ++i) pred_out << i << ',' << pred[i] << '\n';
    }
  }
  report.config = cfg.resolved();
  return report;
}

/// Generates and saves one perturbation (JSON + poisoned edge list).
inline Report cmd_attack(const KvConfig& cfg, const std::string& out_dir = "") {
  Report report;
  report.command = "attack";
  const Dataset ds = load_dataset(cfg);
  const auto seed0 = static_cast<std::uint64_t>(cfg.integer("seed0", 0));
  const double rate = cfg.num("attack.rate", 0.1);
  const std::string kind = cfg.str("attack", "dice");
  const Perturbation pert = make_attack(ds.clean, kind, rate, pert_seed(0, seed0));
  if (!out_dir.empty()) {
    save_perturbation(pert, out_dir + "/perturbation.json");
    const Graph poisoned = pert.added.empty() && pert.removed.empty()
                               ? ds.clean
                               : apply_perturbation(ds.clean, pert);
    save_edges_csv(poisoned.adjacency, out_dir + "/poisoned_edges.csv");
  }
  RunRow row;
  row.seed = seed0;
  row.cell = {{"attack", kind}, {"rate", detail::format_double(rate)}};
  const auto stats = link_ratio(pert.added.empty() && pert.removed.empty()
                                    ? ds.clean
                                    : apply_perturbation(ds.clean, pert));
  row.n_same = stats.n_same;
  row.n_diff = stats.n_diff;
  row.accuracy = std::numeric_limits<double>::quiet_NaN();
  report.rows.push_back(std::move(row));
  report.config = cfg.resolved();
  return report;
}

}  // namespace rogat
