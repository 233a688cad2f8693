#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rogat/experiments.hpp"
#include "test_support.hpp"

using namespace rogat;

namespace {

// small, fast configuration shared by the harness tests
KvConfig fast_cfg() {
  KvConfig cfg;
  cfg.set("dataset", "citation");
  cfg.set("citation.n", "140");
  cfg.set("citation.classes", "4");
  cfg.set("citation.edges", "300");
  cfg.set("citation.dim", "64");
  cfg.set("citation.topic_width", "12");
  cfg.set("citation.words", "8");
  cfg.set("gat.hidden", "4");
  cfg.set("gat.heads", "2,1");
  cfg.set("gat.epochs", "15");
  cfg.set("rogat.t1", "2");
  cfg.set("rogat.t2", "4");
  cfg.set("n_seeds", "2");
  cfg.set("workers", "2");
  return cfg;
}

}  // namespace

TEST_CASE("config files parse with comments and overrides") {
  const auto path =
      (std::filesystem::temp_directory_path() / "rogat_cfg_test.conf").string();
  {
    std::ofstream out(path);
    out << "# comment line\n"
        << "gat.lr = 0.01  # trailing comment\n"
        << "models = gat,rogat\n"
        << "rogat.alpha = 2.5\n";
  }
  KvConfig cfg = KvConfig::from_file(path);
  std::filesystem::remove(path);
  CHECK(cfg.num("gat.lr", 0.005) == doctest::Approx(0.01));
  CHECK(cfg.str("models", "") == "gat,rogat");
  cfg.apply_set("rogat.alpha=1.25");
  CHECK(cfg.num("rogat.alpha", 1.0) == doctest::Approx(1.25));
  CHECK(cfg.resolved().at("gat.lr") == "0.01");
  CHECK_THROWS(cfg.apply_set("no-equals-sign"));
}

TEST_CASE("config lists and flags") {
  KvConfig cfg;
  cfg.set("sweep.rates", "0, 0.05 ,0.25");
  const auto rates = cfg.list("sweep.rates", "");
  REQUIRE(rates.size() == 3);
  CHECK(rates[1] == doctest::Approx(0.05));
  CHECK(cfg.flag("gat.self_loops", true));
  cfg.set("gat.self_loops", "false");
  CHECK(!cfg.flag("gat.self_loops", true));
}

TEST_CASE("aggregates recompute from rows exactly") {
  Report report;
  Rng rng(3);
  for (int cell = 0; cell < 3; ++cell)
    for (int s = 0; s < 5; ++s) {
      RunRow row;
      row.cell = {{"rate", std::to_string(cell)}};
      row.seed = s;
      row.accuracy = uniform01(rng);
      report.rows.push_back(row);
    }
  const auto aggs = report.aggregates();
  REQUIRE(aggs.size() == 3);
  for (const auto& agg : aggs) {
    std::vector<double> xs;
    for (const auto& row : report.rows)
      if (row.cell == agg.cell) xs.push_back(row.accuracy);
    CHECK(agg.n == 5);
    CHECK(std::abs(agg.mean - mean_of(xs)) < 1e-12);
    CHECK(std::abs(agg.stddev - sample_std_of(xs)) < 1e-12);
  }
}

TEST_CASE("report files are written and re-aggregate") {
  const auto dir = std::filesystem::temp_directory_path() / "rogat_report_test";
  std::filesystem::create_directories(dir);
  Report report;
  report.command = "unit";
  report.config = {{"k", "v"}};
  for (int s = 0; s < 3; ++s) {
    RunRow row;
    row.cell = {{"model", "gat"}};
    row.seed = s;
    row.accuracy = 0.5 + 0.1 * s;
    row.ratio_trace = {1.0, 0.9};
    row.fake_real_final = 0.9;
    report.rows.push_back(row);
  }
  report.write_csv((dir / "report.csv").string());
  report.write_json((dir / "report.json").string());

  std::ifstream jin(dir / "report.json");
  const auto j = nlohmann::json::parse(jin);
  CHECK(j.at("command") == "unit");
  CHECK(j.at("rows").size() == 3);
  const double mean = j.at("aggregates").at(0).at("mean");
  CHECK(mean == doctest::Approx(0.6));
  // aggregate recomputable from the rows
  double acc = 0.0;
  for (const auto& row : j.at("rows")) acc += row.at("accuracy").get<double>();
  CHECK(acc / 3.0 == doctest::Approx(mean).epsilon(1e-12));
  CHECK(j.at("all_complete") == true);

  std::ifstream cin_(dir / "report.csv");
  std::string header;
  std::getline(cin_, header);
  CHECK(header.find("model") != std::string::npos);
  CHECK(header.find("accuracy") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset assembly applies lcc and row normalization") {
  KvConfig cfg = fast_cfg();
  const Dataset ds = load_dataset(cfg);
  CHECK(ds.clean.n_nodes > 50);
  for (int i = 0; i < ds.clean.n_nodes; ++i) {
    const double norm = ds.clean.features.row(i).norm();
    CHECK(norm == doctest::Approx(2.0).epsilon(1e-9));
  }
  ds.clean.validate();

  SUBCASE("row_norm can be disabled") {
    KvConfig raw = fast_cfg();
    raw.set("features.row_norm", "0");
    const Dataset ds2 = load_dataset(raw);
    CHECK((ds2.clean.features.array() == 0.0 || ds2.clean.features.array() == 1.0).all());
  }
}

TEST_CASE("paired runs reproduce bit for bit") {
  KvConfig cfg = fast_cfg();
  const Dataset ds = load_dataset(cfg);
  const Perturbation pert = dice_attack(ds.clean, 0.1, pert_seed(0, 7));
  const Graph g = prepare_run_graph(ds.clean, cfg, 7, &pert);
  const RunRow a = run_one(g, "rogat", cfg, 7, &pert, nullptr);
  const RunRow b = run_one(g, "rogat", cfg, 7, &pert, nullptr);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.fake_real_final == b.fake_real_final);
  REQUIRE(a.ratio_trace.size() == b.ratio_trace.size());
  for (std::size_t k = 0; k < a.ratio_trace.size(); ++k)
    CHECK(a.ratio_trace[k] == b.ratio_trace[k]);
  CHECK(a.ratio_trace.front() == 1.0);
}

TEST_CASE("defense sweep emits paired rows per cell") {
  KvConfig cfg = fast_cfg();
  cfg.set("sweep.rates", "0,0.2");
  Report report = cmd_defense_sweep(cfg);
  // 2 rates x 2 models x 2 seeds
  CHECK(report.rows.size() == 8);
  CHECK(report.all_complete());
  CHECK(report.config.count("gat.lr") == 1);
  for (const auto& row : report.rows) {
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 1.0);
    CHECK(row.runtime_s > 0.0);
  }
  // paired poisoning: link stats at a given (rate, seed) match across models
  auto find_row = [&](const std::string& model, const std::string& rate, std::uint64_t seed)
      -> const RunRow& {
    for (const auto& row : report.rows)
      if (row.cell.at("model") == model && row.cell.at("rate") == rate && row.seed == seed)
        return row;
    throw std::runtime_error("row not found");
  };
  for (std::uint64_t s : {0ULL, 1ULL}) {
    const auto& gat_row = find_row("gat", "0.2", s);
    const auto& rogat_row = find_row("rogat", "0.2", s);
    CHECK(gat_row.n_same == rogat_row.n_same);
    CHECK(gat_row.n_diff == rogat_row.n_diff);
  }
}

TEST_CASE("ratio experiment calibrates the SBM toward its targets") {
  KvConfig cfg;
  cfg.set("sbm.n", "300");
  cfg.set("ratio.targets", "1,4");
  cfg.set("ratio.links", "1500");
  cfg.set("n_seeds", "2");
  cfg.set("gat.epochs", "40");
  cfg.set("workers", "2");
  Report report = cmd_ratio_experiment(cfg);
  CHECK(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    const double target = detail::parse_double(row.cell.at("ratio"), "cell");
    const double realized =
        static_cast<double>(row.n_same) / static_cast<double>(row.n_diff);
    CHECK(realized == doctest::Approx(target).epsilon(0.25));
  }
}

TEST_CASE("ratio track traces start at one") {
  KvConfig cfg = fast_cfg();
  cfg.set("track.rates", "0.1,0.25");
  cfg.set("n_seeds", "2");
  Report report = cmd_ratio_track(cfg);
  CHECK(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    REQUIRE(!row.ratio_trace.empty());
    CHECK(row.ratio_trace.front() == 1.0);
    CHECK(std::isfinite(row.fake_real_final));
  }
}

TEST_CASE("train command round trips artifacts") {
  const auto dir = (std::filesystem::temp_directory_path() / "rogat_train_test").string();
  std::filesystem::create_directories(dir);
  KvConfig cfg = fast_cfg();
  cfg.set("model", "rogat");
  cfg.set("attack", "dice");
  cfg.set("attack.rate", "0.1");
  Report report = cmd_train(cfg, dir);
  REQUIRE(report.rows.size() == 1);
  CHECK(std::filesystem::exists(dir + "/params.ckpt"));
  CHECK(std::filesystem::exists(dir + "/state_edges.csv"));
  CHECK(std::filesystem::exists(dir + "/state_features.csv"));
  CHECK(std::filesystem::exists(dir + "/predictions.csv"));
  const GatParams params = load_params(dir + "/params.ckpt");
  CHECK(!params.layers.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("attack command writes a loadable perturbation") {
  const auto dir = (std::filesystem::temp_directory_path() / "rogat_attack_test").string();
  std::filesystem::create_directories(dir);
  KvConfig cfg = fast_cfg();
  cfg.set("attack", "dice");
  cfg.set("attack.rate", "0.15");
  Report report = cmd_attack(cfg, dir);
  CHECK(report.rows.size() == 1);
  const Perturbation pert = load_perturbation(dir + "/perturbation.json");
  CHECK(!pert.added.empty());
  const Dataset ds = load_dataset(cfg);
  const auto [poisoned, diff] = load_perturbed(ds.clean, dir + "/poisoned_edges.csv");
  CHECK(diff.added.size() == pert.added.size());
  CHECK(diff.removed.size() == pert.removed.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("cell timeout flags partial results") {
  KvConfig cfg = fast_cfg();
  cfg.set("cell_timeout_s", "0");   // expires immediately
  cfg.set("sweep.rates", "0.1");
  cfg.set("models", "gat");
  Report report = cmd_defense_sweep(cfg);
  CHECK(!report.all_complete());
}
