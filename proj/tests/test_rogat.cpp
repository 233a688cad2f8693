#include <doctest.h>

#include "rogat/rogat.hpp"
#include "test_support.hpp"

using namespace rogat;

namespace {

GatConfig inner_cfg() {
  GatConfig cfg;
  cfg.heads_per_layer = {2, 1};
  cfg.hidden_dim = 3;
  cfg.dropout = 0.0;
  return cfg;
}

Graph ring_graph() {
  Graph g = testing::tiny_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}},
                                {0, 0, 0, 1, 1, 1}, 4, 23);
  return g;
}

}  // namespace

TEST_CASE("revised attention is the per-edge product") {
  Graph g = ring_graph();
  RevisedState state = init_state(g);
  const auto edges = state_edge_index(state, g.n_nodes);
  Rng rng(1);
  Vec alpha(edges.n_edges());
  for (int e = 0; e < edges.n_edges(); ++e) alpha(e) = uniform01(rng);

  SUBCASE("binary initialization leaves attention unchanged") {
    const Vec out = revised_attention(alpha, edges, state);
    CHECK((out - alpha).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("a zero weight silences the edge, 0.5 * 0.4 = 0.2") {
    state.a_bar[0] = 0.0;
    state.a_bar[1] = 0.5;
    const Vec out = revised_attention(alpha, edges, state);
    for (int e = 0; e < edges.n_edges(); ++e) {
      const int uid = edges.undirected_id[e];
      if (uid == 0) CHECK(out(e) == 0.0);
      if (uid == 1) CHECK(out(e) == doctest::Approx(0.5 * alpha(e)));
      if (uid < 0) CHECK(out(e) == alpha(e));
    }
    Vec fixed = alpha;
    for (int e = 0; e < edges.n_edges(); ++e)
      if (edges.undirected_id[e] == 1) fixed(e) = 0.4;
    const Vec out2 = revised_attention(fixed, edges, state);
    for (int e = 0; e < edges.n_edges(); ++e)
      if (edges.undirected_id[e] == 1) CHECK(out2(e) == doctest::Approx(0.2));
  }
}

TEST_CASE("rogat forward reduces to plain GAT at initialization") {
  Graph g = ring_graph();
  GatConfig cfg = inner_cfg();
  Rng rng(2);
  GatParams params = glorot_init(cfg, g.feature_dim(), g.n_classes, rng);
  RevisedState state = init_state(g);
  const auto edges = state_edge_index(state, g.n_nodes);
  const Mat plain = eval_logits(g.features, params, cfg, edges);
  const Mat revised = rogat_logits(params, cfg, state, edges);
  CHECK((plain - revised).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all-zero weights leave a graphless per-node network") {
  Graph g = ring_graph();
  GatConfig cfg = inner_cfg();
  Rng rng(3);
  GatParams params = glorot_init(cfg, g.feature_dim(), g.n_classes, rng);
  RevisedState state = init_state(g);
  for (double& w : state.a_bar) w = 0.0;
  const auto edges = state_edge_index(state, g.n_nodes);
  const Mat revised = rogat_logits(params, cfg, state, edges);

  Graph empty = g;
  empty.adjacency.setZero();
  const auto empty_edges = build_edge_index(empty.adjacency);
  const Mat graphless = eval_logits(g.features, params, cfg, empty_edges);
  CHECK((revised - graphless).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("revised forward matches the brute-force expansion with edge weights") {
  Graph g = testing::tiny_graph(3, {{0, 1}, {1, 2}}, {0, 1, 0}, 4, 29);
  GatConfig cfg = inner_cfg();
  Rng rng(4);
  GatParams params = glorot_init(cfg, 4, 2, rng);
  RevisedState state = init_state(g);
  state.a_bar = {0.7, 0.3};
  const auto edges = state_edge_index(state, g.n_nodes);
  const Mat got = rogat_logits(params, cfg, state, edges);

  Mat weights = Mat::Zero(3, 3);
  weights(0, 1) = weights(1, 0) = 0.7;
  weights(1, 2) = weights(2, 1) = 0.3;
  const Mat expected =
      testing::brute_force_gat(g.adjacency, g.features, params, 0.2, &weights);
  CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("structure step") {
  Graph g = ring_graph();
  RogatConfig cfg;
  cfg.gat = inner_cfg();

  SUBCASE("alpha = 0 with binary initialization is stationary") {
    RevisedState state = init_state(g);
    cfg.alpha = 0.0;
    structure_step(state, cfg);
    for (std::size_t e = 0; e < state.a_bar.size(); ++e)
      CHECK(state.a_bar[e] == doctest::Approx(1.0));
  }
  SUBCASE("unit edge with squared distance 4 drops to 0.98") {
    Graph two = testing::tiny_graph(2, {{0, 1}}, {0, 1}, 1);
    two.features(0, 0) = 0.0;
    two.features(1, 0) = 2.0;
    RevisedState state = init_state(two);
    cfg.alpha = 1.0;
    cfg.eta1 = 0.01;
    structure_step(state, cfg);
    CHECK(state.a_bar[0] == doctest::Approx(0.98));
  }
  SUBCASE("updates pushing below zero clamp to zero") {
    Graph two = testing::tiny_graph(2, {{0, 1}}, {0, 1}, 1);
    two.features(0, 0) = 0.0;
    two.features(1, 0) = 100.0;  // gradient 5000, step 50
    RevisedState state = init_state(two);
    structure_step(state, cfg);
    CHECK(state.a_bar[0] == 0.0);
  }
  SUBCASE("gradient matches finite differences of the structure objective") {
    RevisedState state = init_state(g);
    Rng rng(5);
    for (double& w : state.a_bar) w = 0.2 + 0.6 * uniform01(rng);
    cfg.alpha = 1.3;
    for (std::size_t e = 0; e < state.a_bar.size(); ++e) {
      const auto& [i, j] = state.support[e];
      const double analytic = 2.0 * (state.a_bar[e] - state.a_input[e]) +
                              0.5 * cfg.alpha *
                                  (state.x_bar.row(i) - state.x_bar.row(j)).squaredNorm();
      const double h = 1e-5;
      RevisedState plus = state, minus = state;
      plus.a_bar[e] += h;
      minus.a_bar[e] -= h;
      const double fd =
          (structure_objective(plus, cfg) - structure_objective(minus, cfg)) / (2 * h);
      CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  SUBCASE("a materialized A-bar matrix stays symmetric after steps") {
    RevisedState state = init_state(g);
    for (int k = 0; k < 5; ++k) structure_step(state, cfg);
    Mat abar = Mat::Zero(g.n_nodes, g.n_nodes);
    for (std::size_t e = 0; e < state.support.size(); ++e) {
      abar(state.support[e].first, state.support[e].second) = state.a_bar[e];
      abar(state.support[e].second, state.support[e].first) = state.a_bar[e];
    }
    CHECK((abar - abar.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("feature step") {
  RogatConfig cfg;
  cfg.gat = inner_cfg();

  SUBCASE("pure reconstruction has X as fixed point") {
    Graph g = ring_graph();
    RevisedState state = init_state(g);
    cfg.gamma = 0.0;
    cfg.lambda = 0.0;
    cfg.beta = 1.0;
    const auto edges = state_edge_index(state, g.n_nodes);
    Rng rng(6);
    GatParams params = glorot_init(cfg.gat, g.feature_dim(), g.n_classes, rng);
    feature_step(state, g.features, params, g, cfg, edges);
    CHECK((state.x_bar - g.features).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identical rows make the smoothness term vanish") {
    Graph g = ring_graph();
    g.features = Mat::Ones(g.n_nodes, 4) * 0.4;
    RevisedState state = init_state(g);
    CHECK(weighted_laplacian_product(state).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("total gradient matches finite differences of the Eq. (11) objective") {
    Graph g = testing::tiny_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 2}}, {0, 1, 1, 0}, 3, 31);
    g.train_mask = {1, 0, 1, 0};
    RevisedState state = init_state(g);
    Rng rng(7);
    for (double& w : state.a_bar) w = 0.3 + 0.5 * uniform01(rng);
    for (int i = 0; i < state.x_bar.rows(); ++i)
      for (int j = 0; j < state.x_bar.cols(); ++j) state.x_bar(i, j) += 0.3 * normal01(rng);
    cfg.beta = 0.8;
    cfg.gamma = 1.2;
    cfg.lambda = 1.5;
    GatParams params = glorot_init(cfg.gat, g.feature_dim(), g.n_classes, rng);
    const auto edges = state_edge_index(state, g.n_nodes);

    Mat grad = 2.0 * cfg.beta * (state.x_bar - g.features) +
               2.0 * cfg.gamma * weighted_laplacian_product(state) +
               cfg.lambda * task_feature_gradient(state, params, g, cfg.gat, edges);
    const Mat fd = testing::fd_gradient(
        [&](const Mat& x) {
          RevisedState probe = state;
          probe.x_bar = x;
          return feature_objective(probe, g.features, params, g, cfg, edges);
        },
        state.x_bar);
    CHECK(testing::max_rel_error(grad, fd) < 1e-4);
  }
  SUBCASE("one small step never increases the Eq. (10) objective") {
    Rng rng(8);
    for (int inst = 0; inst < 20; ++inst) {
      std::vector<std::pair<int, int>> all_edges;
      for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
          if (uniform01(rng) < 0.5) all_edges.emplace_back(i, j);
      if (all_edges.empty()) all_edges.emplace_back(0, 1);
      Graph g = testing::tiny_graph(6, all_edges, {0, 1, 0, 1, 0, 1}, 3, 100 + inst);
      RevisedState state = init_state(g);
      for (double& w : state.a_bar) w = uniform01(rng);
      for (int i = 0; i < state.x_bar.rows(); ++i)
        for (int j = 0; j < state.x_bar.cols(); ++j)
          state.x_bar(i, j) += 0.5 * normal01(rng);
      // keep the probe inside the projection box so P_X is inactive
      state.project_features();
      RogatConfig local;
      local.gat = inner_cfg();
      local.lambda = 0.0;
      local.eta2 = 1e-3;
      GatParams params = glorot_init(local.gat, 3, 2, rng);
      const auto edges = state_edge_index(state, g.n_nodes);
      const double before = feature_objective(state, g.features, params, g, local, edges);
      feature_step(state, g.features, params, g, local, edges);
      const double after = feature_objective(state, g.features, params, g, local, edges);
      CHECK(after <= before + 1e-12);
    }
  }
}

TEST_CASE("projections are idempotent") {
  Graph g = ring_graph();
  RevisedState state = init_state(g);
  Rng rng(9);
  for (double& w : state.a_bar) w = -0.5 + 2.0 * uniform01(rng);
  state.x_bar += Mat::Constant(state.x_bar.rows(), state.x_bar.cols(), 3.0);
  state.project_weights();
  state.project_features();
  const auto w1 = state.a_bar;
  const Mat x1 = state.x_bar;
  state.project_weights();
  state.project_features();
  CHECK(state.a_bar == w1);
  CHECK((state.x_bar - x1).cwiseAbs().maxCoeff() == 0.0);
  for (double w : state.a_bar) CHECK((w >= 0.0 && w <= 1.0));
}

TEST_CASE("silencing an edge equals deleting it") {
  Graph g = ring_graph();
  GatConfig cfg = inner_cfg();
  Rng rng(10);
  GatParams params = glorot_init(cfg, g.feature_dim(), g.n_classes, rng);

  RevisedState state = init_state(g);
  state.a_bar[2] = 0.0;  // silence support edge 2
  const auto silenced_edges = state_edge_index(state, g.n_nodes);
  const Mat silenced = rogat_logits(params, cfg, state, silenced_edges);

  Graph cut = g;
  const auto [i, j] = state.support[2];
  cut.adjacency(i, j) = cut.adjacency(j, i) = 0.0;
  RevisedState cut_state = init_state(cut);
  const auto cut_edges = state_edge_index(cut_state, g.n_nodes);
  const Mat deleted = rogat_logits(params, cfg, cut_state, cut_edges);

  CHECK((silenced - deleted).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fake/real weight ratio") {
  Graph g = ring_graph();
  RevisedState state = init_state(g);
  const std::vector<std::pair<int, int>> added = {{0, 1}, {2, 3}};

  SUBCASE("exactly one at binary initialization") {
    CHECK(fake_real_ratio(state, added) == 1.0);
  }
  SUBCASE("zero once every fake edge is silenced") {
    for (std::size_t e = 0; e < state.support.size(); ++e)
      for (const auto& f : added)
        if (state.support[e] == f) state.a_bar[e] = 0.0;
    CHECK(fake_real_ratio(state, added) == 0.0);
  }
  SUBCASE("empty added set is rejected") {
    CHECK_THROWS(fake_real_ratio(state, {}));
  }
  SUBCASE("disjoint added set is rejected") {
    CHECK_THROWS(fake_real_ratio(state, {{0, 3}}));
  }
}

TEST_CASE("disabling both steps reproduces the plain GAT trajectory") {
  Graph g = ring_graph();
  for (int i = 0; i < g.n_nodes; ++i) {
    g.train_mask[i] = i % 2 == 0;
    g.val_mask[i] = i % 2 == 1;
  }
  RogatConfig cfg;
  cfg.gat = inner_cfg();
  cfg.gat.dropout = 0.6;  // exercise the dropout RNG path
  cfg.gat.seed = 77;
  cfg.gat.epochs = 8;
  cfg.t1 = 1;
  cfg.t2 = 8;
  cfg.lambda = 1.0;
  cfg.enable_structure = false;
  cfg.enable_feature = false;

  auto rogat_result = train_rogat(g, cfg);
  auto gat_result = train_gat(g, cfg.gat);
  REQUIRE(rogat_result.inner_train_loss.size() == 8);
  REQUIRE(gat_result.history.train_loss.size() >= 8);
  for (int e = 0; e < 8; ++e)
    CHECK(rogat_result.inner_train_loss[e] == gat_result.history.train_loss[e]);
}

TEST_CASE("alternating training records outer metrics and the ratio trace") {
  Graph g = ring_graph();
  for (int i = 0; i < g.n_nodes; ++i) {
    g.train_mask[i] = i % 2 == 0;
    g.val_mask[i] = i % 2 == 1;
  }
  RogatConfig cfg;
  cfg.gat = inner_cfg();
  cfg.gat.seed = 3;
  cfg.t1 = 4;
  cfg.t2 = 3;
  const std::vector<std::pair<int, int>> added = {{1, 2}};
  auto result = train_rogat(g, cfg, &added);
  CHECK(result.history.size() == 4);
  CHECK(result.ratio_trace.size() == 5);
  CHECK(result.ratio_trace.front() == 1.0);
  CHECK(result.best_outer >= 1);
  CHECK(result.inner_train_loss.size() == 12);
  for (double w : result.state.a_bar) CHECK((w >= 0.0 && w <= 1.0));
}
