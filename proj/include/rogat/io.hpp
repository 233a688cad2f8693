#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "rogat/graph.hpp"

// =============================================================================
/// @file io.hpp
/// @brief Dataset ingestion and export.
///
/// Two on-disk families:
///  - LINQS citation format: tab-separated <id> <flag>*d <label> rows in a
///    .content file plus <cited> <citing> pairs in a .cites file.
///  - Generic CSV triple: edge list "src,dst[,weight]" with sibling labels CSV
///    ("node,label") and features CSV ("node,v0,v1,..."). Doubles are written
///    as shortest round-trip decimals, so save/load is exact.
// =============================================================================

namespace rogat {

struct LinqsStats {
  int skipped_unknown = 0;  ///< cite lines naming an id absent from .content
  int skipped_self = 0;
  int duplicate_edges = 0;
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ROGAT_REQUIRE(res.ec == std::errc() && res.ptr == s.data() + s.size(),
                "bad numeric field '" + s + "' in " + context);
  return v;
}

inline int parse_int(const std::string& s, const std::string& context) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ROGAT_REQUIRE(res.ec == std::errc() && res.ptr == s.data() + s.size(),
                "bad integer field '" + s + "' in " + context);
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Loads a LINQS citation dataset. String labels map to contiguous class
/// indices in alphabetical order; cite lines with unknown ids or self
/// references are skipped and counted in `stats`.
inline Graph load_linqs(const std::string& content_path, const std::string& cites_path,
                        LinqsStats* stats = nullptr) {
  std::ifstream content(content_path);
  ROGAT_REQUIRE(content.good(), "load_linqs: cannot read " + content_path);

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> label_names;
  std::map<std::string, int> id_index;
  std::string line;
  int line_no = 0;
  int n_features = -1;
  while (std::getline(content, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split(line, '\t');
    ROGAT_REQUIRE(fields.size() >= 3,
                  "load_linqs: line " + std::to_string(line_no) + " has too few columns");
    const int d = static_cast<int>(fields.size()) - 2;
    if (n_features < 0) n_features = d;
    ROGAT_REQUIRE(d == n_features, "load_linqs: line " + std::to_string(line_no) +
                                       " has " + std::to_string(d) + " feature columns, expected " +
                                       std::to_string(n_features));
    ROGAT_REQUIRE(!id_index.count(fields[0]),
                  "load_linqs: duplicate node id at line " + std::to_string(line_no));
    id_index[fields[0]] = static_cast<int>(ids.size());
    ids.push_back(fields[0]);
    std::vector<double> feat(n_features);
    for (int k = 0; k < n_features; ++k)
      feat[k] = detail::parse_double(fields[k + 1], content_path + ":" + std::to_string(line_no));
    rows.push_back(std::move(feat));
    label_names.push_back(fields.back());
  }
  ROGAT_REQUIRE(!ids.empty(), "load_linqs: empty content file " + content_path);

  std::map<std::string, int> class_index;
  for (const auto& name : label_names) class_index.emplace(name, 0);
  int next = 0;
  for (auto& [name, idx] : class_index) idx = next++;

  Graph g;
  g.n_nodes = static_cast<int>(ids.size());
  g.n_classes = next;
  g.features = Mat(g.n_nodes, n_features);
  g.labels.resize(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) {
    for (int k = 0; k < n_features; ++k) g.features(i, k) = rows[i][k];
    g.labels[i] = class_index[label_names[i]];
  }

  std::ifstream cites(cites_path);
  ROGAT_REQUIRE(cites.good(), "load_linqs: cannot read " + cites_path);
  g.adjacency = Mat::Zero(g.n_nodes, g.n_nodes);
  LinqsStats local;
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split(line, '\t');
    ROGAT_REQUIRE(fields.size() == 2,
                  "load_linqs: cite line " + std::to_string(line_no) + " needs 2 columns");
    const auto a = id_index.find(fields[0]);
    const auto b = id_index.find(fields[1]);
    if (a == id_index.end() || b == id_index.end()) {
      ++local.skipped_unknown;
      continue;
    }
    if (a->second == b->second) {
      ++local.skipped_self;
      continue;
    }
    if (g.adjacency(a->second, b->second) > 0.0) ++local.duplicate_edges;
    g.adjacency(a->second, b->second) = g.adjacency(b->second, a->second) = 1.0;
  }
  g.reset_masks();
  if (stats) *stats = local;
  return g;
}

// -----------------------------------------------------------------------------
// Generic CSV triple
// -----------------------------------------------------------------------------

inline void save_edges_csv(const Mat& adjacency, const std::string& path) {
  std::ofstream out(path);
  ROGAT_REQUIRE(out.good(), "save_edges_csv: cannot write " + path);
  for (const auto& [i, j] : undirected_edges(adjacency)) {
    out << i << ',' << j;
    if (adjacency(i, j) != 1.0) out << ',' << detail::format_double(adjacency(i, j));
    out << '\n';
  }
}

inline void save_graph_csv(const Graph& g, const std::string& edges_path,
                           const std::string& labels_path, const std::string& features_path) {
  save_edges_csv(g.adjacency, edges_path);
  {
    std::ofstream out(labels_path);
    ROGAT_REQUIRE(out.good(), "save_graph_csv: cannot write " + labels_path);
    for (int i = 0; i < g.n_nodes; ++i) out << i << ',' << g.labels[i] << '\n';
  }
  {
    std::ofstream out(features_path);
    ROGAT_REQUIRE(out.good(), "save_graph_csv: cannot write " + features_path);
    for (int i = 0; i < g.n_nodes; ++i) {
      out << i;
      for (int k = 0; k < g.features.cols(); ++k)
        out << ',' << detail::format_double(g.features(i, k));
      out << '\n';
    }
  }
}

/// Reads an edge-list CSV into a symmetric adjacency over n nodes.
inline Mat load_edges_csv(const std::string& path, int n_nodes) {
  std::ifstream in(path);
  ROGAT_REQUIRE(in.good(), "load_edges_csv: cannot read " + path);
  Mat adjacency = Mat::Zero(n_nodes, n_nodes);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split(line, ',');
    const std::string ctx = path + ":" + std::to_string(line_no);
    ROGAT_REQUIRE(fields.size() == 2 || fields.size() == 3, "edge line needs 2-3 columns in " + ctx);
    const int i = detail::parse_int(fields[0], ctx);
    const int j = detail::parse_int(fields[1], ctx);
    ROGAT_REQUIRE(i >= 0 && i < n_nodes && j >= 0 && j < n_nodes, "node id out of range in " + ctx);
    ROGAT_REQUIRE(i != j, "self loop in " + ctx);
    const double w = fields.size() == 3 ? detail::parse_double(fields[2], ctx) : 1.0;
    ROGAT_REQUIRE(w >= 0.0 && w <= 1.0, "edge weight outside [0,1] in " + ctx);
    adjacency(i, j) = adjacency(j, i) = w;
  }
  return adjacency;
}

inline std::vector<int> load_labels_csv(const std::string& labels_path) {
  std::ifstream labels_in(labels_path);
  ROGAT_REQUIRE(labels_in.good(), "load_labels_csv: cannot read " + labels_path);
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(labels_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split(line, ',');
    const std::string ctx = labels_path + ":" + std::to_string(line_no);
    ROGAT_REQUIRE(fields.size() == 2, "label line needs 2 columns in " + ctx);
    const int node = detail::parse_int(fields[0], ctx);
    ROGAT_REQUIRE(node == static_cast<int>(labels.size()), "labels out of order in " + ctx);
    labels.push_back(detail::parse_int(fields[1], ctx));
  }
  ROGAT_REQUIRE(!labels.empty(), "load_labels_csv: empty labels file");
  return labels;
}

inline Graph load_graph_csv(const std::string& edges_path, const std::string& labels_path,
                            const std::string& features_path) {
  std::vector<int> labels = load_labels_csv(labels_path);
  std::string line;
  int line_no = 0;

  Graph g;
  g.n_nodes = static_cast<int>(labels.size());
  g.labels = std::move(labels);
  g.n_classes = 0;
  for (int y : g.labels) g.n_classes = std::max(g.n_classes, y + 1);

  std::ifstream feat_in(features_path);
  ROGAT_REQUIRE(feat_in.good(), "load_graph_csv: cannot read " + features_path);
  std::vector<std::vector<double>> rows;
  int n_features = -1;
  line_no = 0;
  while (std::getline(feat_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split(line, ',');
    const std::string ctx = features_path + ":" + std::to_string(line_no);
    ROGAT_REQUIRE(fields.size() >= 2, "feature line needs node id plus values in " + ctx);
    const int node = detail::parse_int(fields[0], ctx);
    ROGAT_REQUIRE(node == static_cast<int>(rows.size()), "features out of order in " + ctx);
    const int d = static_cast<int>(fields.size()) - 1;
    if (n_features < 0) n_features = d;
    ROGAT_REQUIRE(d == n_features, "inconsistent feature width in " + ctx);
    std::vector<double> feat(d);
    for (int k = 0; k < d; ++k) feat[k] = detail::parse_double(fields[k + 1], ctx);
    rows.push_back(std::move(feat));
  }
  ROGAT_REQUIRE(static_cast<int>(rows.size()) == g.n_nodes,
                "load_graph_csv: features/labels row count mismatch");
  g.features = Mat(g.n_nodes, n_features);
  for (int i = 0; i < g.n_nodes; ++i)
    for (int k = 0; k < n_features; ++k) g.features(i, k) = rows[i][k];

  g.adjacency = load_edges_csv(edges_path, g.n_nodes);
  g.reset_masks();
  return g;
}

}  // namespace rogat
