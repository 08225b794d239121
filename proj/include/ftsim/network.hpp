#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace ftsim {

using NodeId = int;

struct NodeInfo {
  NodeId id = 0;
  double x = 0;  // coordinates are for output only, never routing
  double y = 0;
};

struct Link {
  NodeId from = 0;
  NodeId to = 0;
  double length_m = 0;
  double travel_time_s = 0;
};

/// Immutable road graph with all-pairs shortest travel times precomputed at
/// construction. Travel times are static (uncongested, constant-speed fleet);
/// next-hop ties are broken toward the lowest node id so routing is
/// reproducible. Safe to share read-only across concurrent runs.
class RoadNetwork {
 public:
  RoadNetwork(std::vector<NodeInfo> nodes, std::vector<Link> links, NodeId depot, NodeId station)
      : node_infos_(std::move(nodes)), depot_(depot), station_(station) {
    build(links);
  }

  static RoadNetwork load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("network: cannot open file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("network: parse error in " + path + ": " + e.what());
    }
    return from_json(j);
  }

  static RoadNetwork from_json(const nlohmann::json& j) {
    try {
      std::vector<NodeInfo> nodes;
      for (const auto& n : j.at("nodes")) {
        nodes.push_back({n.at("id").get<NodeId>(), n.value("x", 0.0), n.value("y", 0.0)});
      }
      std::vector<Link> links;
      for (const auto& l : j.at("links")) {
        links.push_back({l.at("from").get<NodeId>(), l.at("to").get<NodeId>(),
                         l.at("length_m").get<double>(), l.at("travel_time_s").get<double>()});
      }
      return RoadNetwork(std::move(nodes), std::move(links), j.at("depot").get<NodeId>(),
                         j.at("station").get<NodeId>());
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("network: malformed network json: ") + e.what());
    }
  }

  // Synthetic stand-in for a suburban feeder area: rows x cols lattice with
  // bidirectional links, depot at the (0,0) corner, station at the center.
  // Deterministic for fixed arguments; `seed` is accepted for config-schema
  // stability but the lattice itself is not randomized.
  static RoadNetwork generate_grid(int rows, int cols, double link_length_m, double speed_mps,
                                   std::uint64_t seed) {
    (void)seed;
    if (rows < 2 || cols < 2) throw std::invalid_argument("generate_grid: rows and cols must be >= 2");
    if (link_length_m <= 0 || speed_mps <= 0)
      throw std::invalid_argument("generate_grid: link length and speed must be positive");
    std::vector<NodeInfo> nodes;
    std::vector<Link> links;
    const double tt = link_length_m / speed_mps;
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        nodes.push_back({id(r, c), c * link_length_m, r * link_length_m});
    auto add_edge = [&](NodeId a, NodeId b) {
      links.push_back({a, b, link_length_m, tt});
      links.push_back({b, a, link_length_m, tt});
    };
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (c + 1 < cols) add_edge(id(r, c), id(r, c + 1));
        if (r + 1 < rows) add_edge(id(r, c), id(r + 1, c));
      }
    return RoadNetwork(std::move(nodes), std::move(links), id(0, 0), id(rows / 2, cols / 2));
  }

  NodeId depot() const { return depot_; }
  NodeId station() const { return station_; }
  std::size_t node_count() const { return node_infos_.size(); }
  const std::vector<NodeInfo>& nodes() const { return node_infos_; }
  bool has_node(NodeId id) const { return index_.count(id) > 0; }

  double shortest_time(NodeId a, NodeId b) const {
    return dist_[idx(a) * n_ + idx(b)];
  }

  // First node on a time-minimal path a -> b; lowest-id neighbor on ties.
  NodeId next_hop(NodeId a, NodeId b) const {
    const int ia = idx(a), ib = idx(b);
    if (ia == ib) throw std::invalid_argument("next_hop: current == target");
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int nb : out_[ia]) {  // ascending node order
      const double c = link_tt_[ia * n_ + nb] + dist_[nb * n_ + ib];
      if (c < best_cost) {
        best_cost = c;
        best = nb;
      }
    }
    return node_infos_[best].id;
  }

  // Length along the time-minimal path chosen by next_hop iteration.
  double trip_distance(NodeId a, NodeId b) const {
    NodeId cur = a;
    (void)idx(b);
    double total = 0;
    std::size_t hops = 0;
    while (cur != b) {
      const NodeId nh = next_hop(cur, b);
      total += link_length_m(cur, nh);
      cur = nh;
      if (++hops > node_count()) throw std::runtime_error("trip_distance: next_hop chain did not terminate");
    }
    return total;
  }

  // Direct-link attributes (next_hop always returns an out-neighbor).
  double link_travel_time(NodeId a, NodeId b) const {
    const double t = link_tt_[idx(a) * n_ + idx(b)];
    if (!std::isfinite(t)) throw std::invalid_argument("no link between given nodes");
    return t;
  }
  double link_length_m(NodeId a, NodeId b) const {
    const double t = link_tt_[idx(a) * n_ + idx(b)];
    if (!std::isfinite(t)) throw std::invalid_argument("no link between given nodes");
    return link_len_[idx(a) * n_ + idx(b)];
  }

 private:
  int idx(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::invalid_argument("unknown node id " + std::to_string(id));
    return it->second;
  }

  void build(const std::vector<Link>& links) {
    if (node_infos_.empty()) throw std::runtime_error("network: empty node list");
    if (links.empty()) throw std::runtime_error("network: empty link list");
    // Dense internal indices in ascending external-id order, so internal
    // comparisons and the lowest-id tie break agree.
    std::sort(node_infos_.begin(), node_infos_.end(),
              [](const NodeInfo& a, const NodeInfo& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < node_infos_.size(); ++i) {
      if (!index_.emplace(node_infos_[i].id, static_cast<int>(i)).second)
        throw std::runtime_error("network: duplicate node id " + std::to_string(node_infos_[i].id));
    }
    n_ = static_cast<int>(node_infos_.size());
    if (!has_node(depot_)) throw std::runtime_error("network: depot is not a listed node");
    if (!has_node(station_)) throw std::runtime_error("network: station is not a listed node");

    const double inf = std::numeric_limits<double>::infinity();
    link_tt_.assign(static_cast<std::size_t>(n_) * n_, inf);
    link_len_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    out_.assign(n_, {});
    for (const auto& l : links) {
      if (l.from == l.to) throw std::runtime_error("network: self-loop at node " + std::to_string(l.from));
      if (l.length_m <= 0 || l.travel_time_s <= 0)
        throw std::runtime_error("network: nonpositive link length or travel time");
      const int a = idx(l.from), b = idx(l.to);
      const std::size_t k = static_cast<std::size_t>(a) * n_ + b;
      // Parallel links: keep the faster one (shorter on ties).
      if (l.travel_time_s < link_tt_[k] ||
          (l.travel_time_s == link_tt_[k] && l.length_m < link_len_[k])) {
        if (!std::isfinite(link_tt_[k])) out_[a].push_back(b);
        link_tt_[k] = l.travel_time_s;
        link_len_[k] = l.length_m;
      }
    }
    for (auto& v : out_) std::sort(v.begin(), v.end());

    dist_ = link_tt_;
    for (int i = 0; i < n_; ++i) dist_[static_cast<std::size_t>(i) * n_ + i] = 0.0;
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < n_; ++i) {
        const double dik = dist_[static_cast<std::size_t>(i) * n_ + k];
        if (!std::isfinite(dik)) continue;
        for (int j = 0; j < n_; ++j) {
          const double via = dik + dist_[static_cast<std::size_t>(k) * n_ + j];
          if (via < dist_[static_cast<std::size_t>(i) * n_ + j])
            dist_[static_cast<std::size_t>(i) * n_ + j] = via;
        }
      }
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (!std::isfinite(dist_[static_cast<std::size_t>(i) * n_ + j]))
          throw std::runtime_error("network: node " + std::to_string(node_infos_[j].id) +
                                   " unreachable from " + std::to_string(node_infos_[i].id));
  }

  std::vector<NodeInfo> node_infos_;
  NodeId depot_;
  NodeId station_;
  int n_ = 0;
  std::unordered_map<NodeId, int> index_;
  std::vector<double> link_tt_;   // n*n, inf where no link
  std::vector<double> link_len_;  // n*n
  std::vector<std::vector<int>> out_;
  std::vector<double> dist_;  // all-pairs shortest travel time
};

}  // namespace ftsim
