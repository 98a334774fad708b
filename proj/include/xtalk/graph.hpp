// Copyright 2026 The xtalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Whole-chip crosstalk graph. A fit for pair (a, b) measures how drive b
// disturbs qubit a, so it becomes the edge b -> a.

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xtalk/fitting.hpp"
#include "xtalk/model.hpp"

namespace xtalk {

// hidden: [0, 0.05), green: [0.05, 0.1], strong: (0.1, inf).
enum class EdgeTier { hidden, green, strong };
enum class DirectionColor { red, blue };

inline constexpr double kHiddenBelow = 0.05;
inline constexpr double kStrongAbove = 0.1;

inline EdgeTier edge_tier(double beta) {
  if (beta < kHiddenBelow) return EdgeTier::hidden;
  if (beta <= kStrongAbove) return EdgeTier::green;
  return EdgeTier::strong;
}

inline const char* to_string(EdgeTier tier) {
  switch (tier) {
    case EdgeTier::hidden: return "hidden";
    case EdgeTier::green: return "green";
    case EdgeTier::strong: return "strong";
  }
  return "hidden";
}

inline const char* to_string(DirectionColor c) {
  return c == DirectionColor::red ? "red" : "blue";
}

inline EdgeTier edge_tier_from_string(const std::string& s) {
  if (s == "hidden") return EdgeTier::hidden;
  if (s == "green") return EdgeTier::green;
  if (s == "strong") return EdgeTier::strong;
  throw std::invalid_argument("unknown edge tier '" + s + "'");
}

inline DirectionColor direction_color_from_string(const std::string& s) {
  if (s == "red") return DirectionColor::red;
  if (s == "blue") return DirectionColor::blue;
  throw std::invalid_argument("unknown direction color '" + s + "'");
}

struct GraphEdge {
  int from = 0;
  int to = 0;
  double beta = 0.0;
  double theta = 0.0;
  EdgeTier tier = EdgeTier::hidden;
  // red when from < to.
  DirectionColor direction_color = DirectionColor::red;
  bool coupler = false;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct CrosstalkGraph {
  std::vector<int> nodes;
  // Sorted by (from, to).
  std::vector<GraphEdge> edges;

  friend bool operator==(const CrosstalkGraph&, const CrosstalkGraph&) = default;
};

inline CrosstalkGraph build_graph(const ChipFitReport& report,
                                  const ChipTopology& topology) {
  CrosstalkGraph g;
  for (int q = 0; q < topology.qubit_count; ++q) g.nodes.push_back(q);
  for (const auto& r : report.results) {
    GraphEdge e;
    e.from = r.secondary;
    e.to = r.primary;
    e.beta = r.beta_hat;
    e.theta = r.theta_hat;
    e.tier = edge_tier(r.beta_hat);
    e.direction_color = e.from < e.to ? DirectionColor::red : DirectionColor::blue;
    e.coupler = topology.has_coupler(r.primary, r.secondary);
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const auto& l, const auto& r) {
    return std::pair(l.from, l.to) < std::pair(r.from, r.to);
  });
  return g;
}

// Edge width bucket: 1 up to 0.1, 2 up to 0.2, 3 above.
inline int edge_width(double beta) {
  if (beta <= kStrongAbove) return 1;
  if (beta <= 0.2) return 2;
  return 3;
}

enum class GraphFormat { dot, structured };

inline GraphFormat graph_format_from_string(const std::string& s) {
  if (s == "dot") return GraphFormat::dot;
  if (s == "structured" || s == "json") return GraphFormat::structured;
  throw std::invalid_argument("unknown graph format '" + s + "'");
}

namespace detail {

inline std::string format_fixed(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, value);
  return buf;
}

inline std::string graph_to_dot(const CrosstalkGraph& g) {
  std::string out = "digraph crosstalk {\n  node [shape=circle];\n";
  for (int n : g.nodes) out += "  " + std::to_string(n) + ";\n";
  for (const auto& e : g.edges) {
    if (e.tier == EdgeTier::hidden) continue;
    const char* color =
        e.tier == EdgeTier::green ? "green" : to_string(e.direction_color);
    out += "  " + std::to_string(e.from) + " -> " + std::to_string(e.to) +
           " [color=" + color + ", penwidth=" + std::to_string(edge_width(e.beta));
    if (e.tier == EdgeTier::strong) {
      out += ", label=\"(" + format_fixed("%.3f", e.beta) + ", " +
             format_fixed("%.2f", e.theta) + ")\"";
    }
    out += "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json graph_to_json(const CrosstalkGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = g.nodes;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : g.edges) {
    if (e.tier == EdgeTier::hidden) continue;
    nlohmann::ordered_json je;
    je["from"] = e.from;
    je["to"] = e.to;
    je["beta"] = e.beta;
    je["theta"] = e.theta;
    je["tier"] = to_string(e.tier);
    je["direction_color"] = to_string(e.direction_color);
    je["coupler"] = e.coupler;
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  return j;
}

inline CrosstalkGraph graph_from_json(const nlohmann::json& j) {
  CrosstalkGraph g;
  g.nodes = j.at("nodes").get<std::vector<int>>();
  for (const auto& je : j.at("edges")) {
    GraphEdge e;
    e.from = je.at("from").get<int>();
    e.to = je.at("to").get<int>();
    e.beta = je.at("beta").get<double>();
    e.theta = je.at("theta").get<double>();
    e.tier = edge_tier_from_string(je.at("tier").get<std::string>());
    e.direction_color =
        direction_color_from_string(je.at("direction_color").get<std::string>());
    e.coupler = je.at("coupler").get<bool>();
    g.edges.push_back(e);
  }
  return g;
}

// Hidden edges are left out of both formats.
inline std::string export_graph(const CrosstalkGraph& graph, GraphFormat format) {
  switch (format) {
    case GraphFormat::dot:
      return detail::graph_to_dot(graph);
    case GraphFormat::structured:
      return graph_to_json(graph).dump(2) + "\n";
  }
  throw std::invalid_argument("unknown graph format");
}

inline std::string export_graph(const CrosstalkGraph& graph, const std::string& format) {
  return export_graph(graph, graph_format_from_string(format));
}

// Same graph without the hidden edges, i.e. what the exports contain.
inline CrosstalkGraph visible_subgraph(CrosstalkGraph graph) {
  std::erase_if(graph.edges, [](const GraphEdge& e) { return e.tier == EdgeTier::hidden; });
  return graph;
}

}  // namespace xtalk
