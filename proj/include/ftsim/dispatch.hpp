#pragma once

#include <cstdlib>
#include <optional>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ftsim/network.hpp"

namespace ftsim::dispatch {

struct Request {
  int id = 0;  // positive; the customer index used in tours
  NodeId origin = 0;
  NodeId destination = 0;
  double request_time_s = 0;
};

using RequestTable = std::unordered_map<int, Request>;

// A stop is a signed customer id: positive = pickup, negative = dropoff,
// 0 = depot. A tour is the vehicle's remaining stop plan, always terminated
// by a single trailing depot stop; the empty tour is {0}. Served stops are
// popped from the front, so a dropoff without a matching pickup means the
// customer is already onboard.
using Stop = int;
using Tour = std::vector<Stop>;

inline Tour empty_tour() { return Tour{0}; }

struct DispatchConfig {
  double gamma = 0.5;  // system effort vs. traveler cost weight, in [0,1]
  double kappa = 0.0;  // >0 penalizes backlog quadratically (non-myopic)
  int capacity = 4;    // seats per vehicle
};

struct VehicleState {
  int id = 0;
  NodeId at_node = 0;  // valid when !moving
  bool moving = false;
  NodeId move_from = 0;
  NodeId move_to = 0;
  double move_depart_s = 0;
  double move_arrive_s = 0;
  std::set<int> onboard;  // request ids currently riding
  Tour tour = empty_tour();
  NodeId committed_next = -1;  // next intersection the vehicle is bound to
  double odometer_m = 0;
  double revenue = 0;
};

// Precedence, uniqueness and running-load check. Total function: any stop
// list is accepted as input. Dropoffs without a pickup stop are treated as
// already-onboard customers and contribute to the initial load.
inline bool tour_feasible(const Tour& tour, int capacity) {
  if (tour.empty()) return false;
  if (tour.back() != 0) return false;
  std::set<int> picked, dropped;
  int initial = 0;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) {
    const Stop s = tour[i];
    if (s == 0) return false;  // depot only terminates
    const int id = std::abs(s);
    if (s > 0) {
      if (!picked.insert(id).second) return false;
      if (dropped.count(id)) return false;  // dropoff preceded pickup
    } else {
      if (!dropped.insert(id).second) return false;
      if (!picked.count(id)) ++initial;  // onboard since before this plan
    }
  }
  int load = initial;
  if (load > capacity) return false;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) {
    load += tour[i] > 0 ? 1 : -1;
    if (load > capacity) return false;
  }
  return true;
}

struct TourSchedule {
  std::vector<std::pair<int, double>> pickups;   // (request id, projected time)
  std::vector<std::pair<int, double>> dropoffs;  // (request id, projected time)
  double completion_s = 0;  // arrival at the trailing depot stop
  double backlog_s = 0;     // time to clear customer-serving work, from `now`
};

namespace detail {
inline NodeId stop_node(const RoadNetwork& net, Stop s, const RequestTable& reqs) {
  if (s == 0) return net.depot();
  auto it = reqs.find(std::abs(s));
  if (it == reqs.end())
    throw std::invalid_argument("tour references unknown request id " + std::to_string(std::abs(s)));
  return s > 0 ? it->second.origin : it->second.destination;
}

// Start of the projection chain: a moving vehicle commits to its next node.
inline std::pair<NodeId, double> projection_start(const VehicleState& v, double now) {
  if (v.moving) return {v.move_to, v.move_arrive_s};
  return {v.at_node, now};
}
}  // namespace detail

// Chain shortest travel times from the vehicle's position through the tour
// stops in order. The backlog excludes the final return-to-depot leg: only
// customer-serving work counts.
inline TourSchedule simulate_tour(const RoadNetwork& net, const VehicleState& v, const Tour& tour,
                                  double now, const RequestTable& reqs) {
  if (tour.empty() || tour.back() != 0) throw std::invalid_argument("simulate_tour: infeasible tour");
  TourSchedule out;
  auto [cur, t] = detail::projection_start(v, now);
  double last_customer_t = now;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) {
    const Stop s = tour[i];
    if (s == 0) throw std::invalid_argument("simulate_tour: depot stop before end of tour");
    const NodeId node = detail::stop_node(net, s, reqs);
    t += net.shortest_time(cur, node);
    cur = node;
    last_customer_t = t;
    if (s > 0)
      out.pickups.emplace_back(s, t);
    else
      out.dropoffs.emplace_back(-s, t);
  }
  out.completion_s = t + net.shortest_time(cur, net.depot());
  out.backlog_s = last_customer_t - now;
  return out;
}

struct CostBreakdown {
  double backlog_s = 0;                           // T(v, xi)
  std::vector<std::pair<int, double>> sojourn_s;  // residual per customer
  double sojourn_total_s = 0;
  double total = 0;  // gamma*T + (1-gamma)*(kappa*T^2 + sum S)
};

// Relative cost of the (vehicle, tour) pair. Sojourns cover every customer
// assigned to this vehicle under the tour (waiting or onboard), from request
// time to projected dropoff.
inline CostBreakdown tour_cost(const RoadNetwork& net, const VehicleState& v, const Tour& tour,
                               double now, const DispatchConfig& cfg, const RequestTable& reqs) {
  const TourSchedule sched = simulate_tour(net, v, tour, now, reqs);
  CostBreakdown cb;
  cb.backlog_s = sched.backlog_s;
  for (const auto& [id, t] : sched.dropoffs) {
    auto it = reqs.find(id);
    if (it == reqs.end()) throw std::invalid_argument("tour_cost: request id missing from table");
    const double s = t - it->second.request_time_s;
    cb.sojourn_s.emplace_back(id, s);
    cb.sojourn_total_s += s;
  }
  const double T = cb.backlog_s;
  cb.total = cfg.gamma * T + (1.0 - cfg.gamma) * (cfg.kappa * T * T + cb.sojourn_total_s);
  return cb;
}

struct InsertionCandidate {
  Tour tour;
  int pickup_pos = 0;  // index in the stop body (trailing depot excluded)
  int dropoff_pos = 0;
};

// Cheapest-insertion neighborhood: place the pickup at every body position i
// and the dropoff at every later position, preserving the relative order of
// existing stops and the trailing depot. Filtered by feasibility. Appending
// the pair before the depot is always precedence-valid, so the result is
// nonempty for any feasible tour and capacity >= 1.
inline std::vector<InsertionCandidate> candidate_insertions(const Tour& tour, const Request& req,
                                                            int capacity) {
  if (tour.empty() || tour.back() != 0)
    throw std::invalid_argument("candidate_insertions: malformed tour");
  for (Stop s : tour)
    if (std::abs(s) == req.id)
      throw std::invalid_argument("candidate_insertions: request already in tour");
  const int n = static_cast<int>(tour.size()) - 1;
  std::vector<InsertionCandidate> out;
  for (int i = 0; i <= n; ++i) {
    for (int j = i + 1; j <= n + 1; ++j) {
      Tour cand;
      cand.reserve(tour.size() + 2);
      for (int k = 0; k < i; ++k) cand.push_back(tour[k]);
      cand.push_back(req.id);
      for (int k = i; k < n; ++k) {
        if (static_cast<int>(cand.size()) == j) cand.push_back(-req.id);
        cand.push_back(tour[k]);
      }
      if (static_cast<int>(cand.size()) == j) cand.push_back(-req.id);
      cand.push_back(0);
      if (tour_feasible(cand, capacity)) out.push_back({std::move(cand), i, j});
    }
  }
  return out;
}

struct Assignment {
  int vehicle_index = -1;  // position in the fleet vector
  Tour tour;
  double delta_cost = 0;  // C(v, xi) - C(v, xi')
  int pickup_pos = 0;
  int dropoff_pos = 0;
};

// mm1 assignment: over all vehicles and all candidate insertions, pick the
// pair minimizing the marginal cost against the vehicle's current tour.
// Requests are never rejected; the fleet is scanned in index order and
// candidates in (pickup, dropoff) position order, so the first strict
// minimum wins and ties resolve deterministically.
inline Assignment assign(const std::vector<VehicleState>& fleet, const Request& req, double now,
                         const DispatchConfig& cfg, const RoadNetwork& net,
                         const RequestTable& reqs) {
  if (fleet.empty()) throw std::invalid_argument("assign: empty fleet");
  Assignment best;
  double best_delta = std::numeric_limits<double>::infinity();
  for (std::size_t vi = 0; vi < fleet.size(); ++vi) {
    const VehicleState& v = fleet[vi];
    const double base = tour_cost(net, v, v.tour, now, cfg, reqs).total;
    for (auto& cand : candidate_insertions(v.tour, req, cfg.capacity)) {
      const double delta = tour_cost(net, v, cand.tour, now, cfg, reqs).total - base;
      if (delta < best_delta) {
        best_delta = delta;
        best = {static_cast<int>(vi), std::move(cand.tour), delta, cand.pickup_pos,
                cand.dropoff_pos};
      }
    }
  }
  return best;
}

struct ServedStop {
  int request_id = 0;
  bool pickup = false;
  NodeId node = 0;
};

struct ArrivalOutcome {
  std::vector<ServedStop> served;
  bool went_idle = false;
  NodeId next = -1;
  double leg_travel_time_s = 0;
  double leg_length_m = 0;
};

// Node-arrival handler: serve every due stop at this node (pickups board,
// dropoffs alight), then recommit to the next intersection toward the first
// unserved stop, or head home to the depot and idle there. Only this next
// node is fixed; the rest of the path stays open to revision, which is what
// lets mid-link tour mutations take effect at the following intersection.
inline ArrivalOutcome on_node_arrival(const RoadNetwork& net, VehicleState& v, double now,
                                      const RequestTable& reqs) {
  (void)now;
  if (v.moving) throw std::logic_error("on_node_arrival: vehicle is mid-link");
  ArrivalOutcome out;
  while (v.tour.front() != 0 && detail::stop_node(net, v.tour.front(), reqs) == v.at_node) {
    const Stop s = v.tour.front();
    v.tour.erase(v.tour.begin());
    if (s > 0)
      v.onboard.insert(s);
    else
      v.onboard.erase(-s);
    out.served.push_back({std::abs(s), s > 0, v.at_node});
  }
  NodeId target;
  if (v.tour.front() != 0) {
    target = detail::stop_node(net, v.tour.front(), reqs);
  } else if (v.at_node == net.depot()) {
    v.committed_next = -1;
    out.went_idle = true;
    return out;
  } else {
    target = net.depot();
  }
  out.next = net.next_hop(v.at_node, target);
  out.leg_travel_time_s = net.link_travel_time(v.at_node, out.next);
  out.leg_length_m = net.link_length_m(v.at_node, out.next);
  v.committed_next = out.next;
  return out;
}

}  // namespace ftsim::dispatch
