#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/demand.hpp"
#include "ftsim/dispatch.hpp"
#include "ftsim/network.hpp"
#include "ftsim/rng.hpp"
#include "ftsim/supply.hpp"

namespace ftsim::engine {

// One Table-style scenario row: fleet management kind plus fare, cost and
// dispatch parameters.
struct Scenario {
  std::string label = "scenario";
  supply::FleetKind fleet_kind = supply::FleetKind::HdvCrowdsourced;
  int max_fleet = 10;
  int capacity = 4;
  double profit_threshold = 25;
  double base_fare = 4.25;
  double increment_fare = 0.25;
  double increment_distance_m = 130;
  double discount_pct = 0;
  double operating_cost_per_km = 0.51;
  double commission_rate = 0.15;
  double gamma = 0.5;
  double kappa = 0.0;
  int days = 10;
  bool strict_eq103 = false;  // literal [0, M] clamp in the AV sizing rule
};

struct LearningParams {
  double traveler_lambda = 0.3;
  double driver_lambda = 0.3;
  double initial_wait_guess_s = 600;  // cold-start perceived fts wait
  double fallback_wait_s = 1800;      // experienced fts wait when no fleet runs
};

// Deterministic level of service of the non-fts access modes, derived from
// the network.
struct ModeLosParams {
  double auto_fixed_cost = 3.0;  // access + parking, $
  double auto_time_factor = 1.0;
  double bus_time_factor = 1.8;
  double bus_wait_s = 300;
  double bus_fare = 2.0;
  double walk_speed_mps = 1.4;
  double bike_speed_mps = 4.0;
};

struct ConvergenceParams {
  double share_epsilon = 0.01;
  int window = 5;
  double demand_tolerance = 10;  // |Theta_d - Theta_{d-1}| allowance, riders
};

// Deterministic access-mode level of service for one home location. The fts
// entry is the cold start: posted fare, free-flow in-vehicle time and the
// configured wait guess.
inline std::array<demand::ModeLos, demand::kModeCount> baseline_mode_los(
    const RoadNetwork& net, const ModeLosParams& mp, NodeId home, double initial_wait_s,
    double posted_fts_fare) {
  const double st = net.shortest_time(home, net.station());
  const double dist = net.trip_distance(home, net.station());
  std::array<demand::ModeLos, demand::kModeCount> los;
  los[static_cast<int>(demand::Mode::Auto)] = {0, st * mp.auto_time_factor, mp.auto_fixed_cost};
  los[static_cast<int>(demand::Mode::Bus)] = {mp.bus_wait_s, st * mp.bus_time_factor, mp.bus_fare};
  los[static_cast<int>(demand::Mode::Walk)] = {0, dist / mp.walk_speed_mps, 0};
  los[static_cast<int>(demand::Mode::Bike)] = {0, dist / mp.bike_speed_mps, 0};
  los[static_cast<int>(demand::Mode::Fts)] = {initial_wait_s, st, posted_fts_fare};
  return los;
}

struct SimParams {
  LearningParams learn;
  ModeLosParams modes;
  ConvergenceParams conv;
  int initial_fleet = 5;  // day-0 fleet; the paper's imported equilibrium stands in
  double initial_active_profit = 30;
  double initial_inactive_profit = 20;
};

struct DayMetrics {
  int day = 0;
  int ridership = 0;  // Theta_d: completed fts dropoffs
  double mean_wait_s = 0;
  int fleet_size = 0;  // Lambda_d
  double total_profit = 0;
  double consumer_surplus = 0;
  std::array<double, demand::kModeCount> shares{};
  // accounting detail for the finance log (not part of the metrics CSV schema)
  double revenue = 0;
  double distance_m = 0;
  double fts_spend = 0;
  double owned_profit = 0;
  double commission = 0;
  double driver_profit_total = 0;
  int fts_choosers = 0;
};

struct RunResult {
  std::string label;
  int replication = 0;
  std::vector<DayMetrics> days;
  bool converged = false;
  int convergence_day = -1;
};

struct EventRow {
  int day = 0;
  double time_s = 0;
  int vehicle_id = -1;
  const char* kind = "";
  int request_id = -1;
  NodeId node = -1;
};

using EventSink = std::function<void(const EventRow&)>;

// True iff every mode share is stable over the trailing window and demand
// matched yesterday's within tolerance.
inline bool converged(const std::vector<DayMetrics>& history, double epsilon, int window,
                      double demand_tolerance) {
  if (window < 2) throw std::invalid_argument("converged: window must be >= 2");
  const int n = static_cast<int>(history.size());
  if (n < window) return false;
  for (int d = n - window + 1; d < n; ++d)
    for (int m = 0; m < demand::kModeCount; ++m)
      if (std::abs(history[d].shares[m] - history[d - 1].shares[m]) >= epsilon) return false;
  return std::abs(history[n - 1].ridership - history[n - 2].ridership) <= demand_tolerance;
}

// Within-day event simulation plus the day-to-day two-sided adjustment:
// travelers learn the service they experienced, drivers (HDV) or the central
// operator (AV) re-size the fleet, and next-day choices are drawn against
// the updated perceptions. One engine instance is strictly single threaded.
class SimulationEngine {
 public:
  SimulationEngine(const RoadNetwork& net, Scenario sc, SimParams params,
                   std::vector<demand::Traveler> population, demand::UtilityCoefficients coef,
                   std::uint64_t seed, EventSink sink = nullptr)
      : net_(net),
        sc_(std::move(sc)),
        params_(params),
        travelers_(std::move(population)),
        coef_(coef),
        rng_(seed),
        sink_(std::move(sink)) {
    if (travelers_.empty()) throw std::invalid_argument("engine: empty population");
    dcfg_ = {sc_.gamma, sc_.kappa, sc_.capacity};
    sched_ = {sc_.base_fare, sc_.increment_fare, sc_.increment_distance_m, sc_.discount_pct};
    cost_model_ = {sc_.operating_cost_per_km};
    policy_ = {sc_.fleet_kind,      sc_.max_fleet,       sc_.capacity,
               sc_.profit_threshold, sc_.commission_rate, sc_.strict_eq103 ? 0 : 1};
    initialize();
  }

  RunResult run() {
    for (int d = 0; d < sc_.days; ++d) {
      history_.push_back(run_day());
      if (d + 1 < sc_.days) step_day_transition(history_.back());
    }
    RunResult rr;
    rr.label = sc_.label;
    rr.days = history_;
    for (int d = params_.conv.window - 1; d < static_cast<int>(history_.size()); ++d) {
      std::vector<DayMetrics> prefix(history_.begin(), history_.begin() + d + 1);
      if (converged(prefix, params_.conv.share_epsilon, params_.conv.window,
                    params_.conv.demand_tolerance)) {
        rr.converged = true;
        rr.convergence_day = d;
        break;
      }
    }
    return rr;
  }

  const std::vector<DayMetrics>& history() const { return history_; }
  int fleet_size_today() const { return fleet_size_today_; }
  const std::vector<supply::DriverAgent>& drivers() const { return drivers_; }
  const std::vector<demand::Traveler>& travelers() const { return travelers_; }

  // Runs the committed day: fts choosers file requests at their departure
  // times, the dispatcher grows vehicle tours, vehicles hop node to node.
  // Every fts chooser is served, even past the study window.
  DayMetrics run_day() {
    DayMetrics m;
    m.day = day_;
    m.fleet_size = fleet_size_today_;

    fleet_.clear();
    for (int k = 0; k < fleet_size_today_; ++k) {
      dispatch::VehicleState v;
      v.id = k;
      v.at_node = net_.depot();
      fleet_.push_back(std::move(v));
    }
    requests_.clear();
    req_meta_.clear();
    served_mode_ = chosen_;
    experienced_fts_.assign(travelers_.size(), demand::ModeLos{});
    fts_fallback_.assign(travelers_.size(), false);

    std::priority_queue<QEvent, std::vector<QEvent>, QEventLater> queue;
    std::uint64_t seq = 0;
    std::vector<int> by_departure;
    for (std::size_t i = 0; i < travelers_.size(); ++i)
      if (chosen_[i] == demand::Mode::Fts) by_departure.push_back(static_cast<int>(i));
    std::sort(by_departure.begin(), by_departure.end(), [&](int a, int b) {
      if (travelers_[a].departure_s != travelers_[b].departure_s)
        return travelers_[a].departure_s < travelers_[b].departure_s;
      return a < b;
    });
    for (int i : by_departure) queue.push({travelers_[i].departure_s, seq++, QEvent::kRequest, i});
    m.fts_choosers = static_cast<int>(by_departure.size());

    int next_request_id = 1;
    while (!queue.empty()) {
      const QEvent ev = queue.top();
      queue.pop();
      if (ev.kind == QEvent::kRequest) {
        const int ti = ev.index;
        const demand::Traveler& t = travelers_[ti];
        if (fleet_.empty()) {
          // No service runs today: the traveler falls back to auto and
          // remembers a long fts wait.
          served_mode_[ti] = demand::Mode::Auto;
          fts_fallback_[ti] = true;
          continue;
        }
        const int rid = next_request_id++;
        dispatch::Request r{rid, t.home, t.station, t.departure_s};
        requests_[rid] = r;
        req_meta_.push_back({ti, posted_fare_[ti], t.departure_s, -1, -1});
        const auto a = dispatch::assign(fleet_, r, ev.time_s, dcfg_, net_, requests_);
        auto& v = fleet_[a.vehicle_index];
        v.tour = a.tour;
        log({day_, ev.time_s, v.id, "assign", rid, r.origin});
        if (!v.moving) {
          v.moving = true;
          v.move_from = v.move_to = v.at_node;
          v.move_depart_s = v.move_arrive_s = ev.time_s;
          queue.push({ev.time_s, seq++, QEvent::kVehicleArrive, a.vehicle_index});
        }
      } else {
        auto& v = fleet_[ev.index];
        const bool real_hop = v.move_from != v.move_to;
        v.at_node = v.move_to;
        v.moving = false;
        if (real_hop) {
          v.odometer_m += net_.link_length_m(v.move_from, v.move_to);
          log({day_, ev.time_s, v.id, "arrive_node", -1, v.at_node});
        }
        const auto out = dispatch::on_node_arrival(net_, v, ev.time_s, requests_);
        for (const auto& s : out.served) {
          auto& meta = req_meta_[s.request_id - 1];
          if (s.pickup) {
            meta.pickup_s = ev.time_s;
            log({day_, ev.time_s, v.id, "pickup", s.request_id, s.node});
          } else {
            meta.dropoff_s = ev.time_s;
            v.revenue += meta.fare;
            log({day_, ev.time_s, v.id, "dropoff", s.request_id, s.node});
          }
        }
        if (out.went_idle) {
          log({day_, ev.time_s, v.id, "idle", -1, v.at_node});
        } else {
          v.moving = true;
          v.move_from = v.at_node;
          v.move_to = out.next;
          v.move_depart_s = ev.time_s;
          v.move_arrive_s = ev.time_s + out.leg_travel_time_s;
          queue.push({v.move_arrive_s, seq++, QEvent::kVehicleArrive, ev.index});
        }
      }
    }

    double wait_sum = 0;
    for (const auto& meta : req_meta_) {
      if (meta.pickup_s < meta.request_s || meta.dropoff_s < meta.pickup_s)
        throw std::logic_error("engine: request left unserved or served out of order");
      ++m.ridership;
      wait_sum += meta.pickup_s - meta.request_s;
      m.fts_spend += meta.fare;
      experienced_fts_[meta.traveler] = {meta.pickup_s - meta.request_s,
                                         meta.dropoff_s - meta.pickup_s, meta.fare};
    }
    m.mean_wait_s = m.ridership > 0 ? wait_sum / m.ridership : 0.0;

    for (const auto& v : fleet_) {
      m.revenue += v.revenue;
      m.distance_m += v.odometer_m;
    }
    m.owned_profit = supply::operator_profit(m.revenue, m.distance_m, cost_model_, policy_, true);
    m.commission = supply::operator_profit(m.revenue, m.distance_m, cost_model_, policy_, false);
    realized_driver_profit_.assign(drivers_.size(), 0.0);
    if (sc_.fleet_kind == supply::FleetKind::HdvCrowdsourced) {
      for (std::size_t k = 0; k < fleet_.size(); ++k) {
        const double p =
            supply::driver_day_profit(fleet_[k].revenue, fleet_[k].odometer_m, cost_model_);
        realized_driver_profit_[active_driver_ids_[k]] = p;
        m.driver_profit_total += p;
      }
      m.total_profit = m.driver_profit_total;
    } else {
      m.total_profit = m.owned_profit;
    }

    std::array<int, demand::kModeCount> counts{};
    for (auto mode : served_mode_) ++counts[static_cast<int>(mode)];
    for (int i = 0; i < demand::kModeCount; ++i)
      m.shares[i] = static_cast<double>(counts[i]) / static_cast<double>(travelers_.size());
    m.consumer_surplus = cs_today_;
    return m;
  }

  // Between-days adjustment: perception learning, fleet update, next-day
  // choice draws.
  void step_day_transition(const DayMetrics& metrics) {
    for (std::size_t i = 0; i < travelers_.size(); ++i) {
      auto& t = travelers_[i];
      const demand::Mode chosen = chosen_[i];
      demand::ModeLos experienced;
      if (chosen == demand::Mode::Fts) {
        if (fts_fallback_[i])
          experienced = {params_.learn.fallback_wait_s, t.perceived[demand::Mode::Fts].ivt_s,
                         posted_fare_[i]};
        else
          experienced = experienced_fts_[i];
      } else {
        experienced = static_los_[i][static_cast<int>(chosen)];
      }
      demand::update_perception(t, chosen, experienced, params_.learn.traveler_lambda,
                                posted_fare_[i]);
    }

    int next_fleet;
    if (sc_.fleet_kind == supply::FleetKind::HdvCrowdsourced) {
      next_fleet = supply::hdv_update(drivers_, realized_driver_profit_, sc_.profit_threshold,
                                      params_.learn.driver_lambda, sc_.max_fleet);
      active_driver_ids_.clear();
      for (const auto& d : drivers_)
        if (d.active_today) active_driver_ids_.push_back(d.id);
    } else {
      next_fleet = supply::av_fleet_size(metrics.ridership, policy_);
    }
    fleet_size_today_ = next_fleet;
    fleet_plan_.push_back({day_ + 1, next_fleet, metrics.ridership});

    ++day_;
    draw_choices();
  }

  const std::vector<supply::FleetPlan>& fleet_plan() const { return fleet_plan_; }

 private:
  struct QEvent {
    double time_s;
    std::uint64_t seq;
    enum Kind { kRequest = 0, kVehicleArrive = 1 } kind;
    int index;
  };
  struct QEventLater {
    bool operator()(const QEvent& a, const QEvent& b) const {
      if (a.time_s != b.time_s) return a.time_s > b.time_s;
      return a.seq > b.seq;
    }
  };
  struct RequestMeta {
    int traveler;
    double fare;
    double request_s;
    double pickup_s;
    double dropoff_s;
  };

  void initialize() {
    static_los_.resize(travelers_.size());
    posted_fare_.resize(travelers_.size());
    const bool shared = sc_.capacity > 1;
    for (std::size_t i = 0; i < travelers_.size(); ++i) {
      auto& t = travelers_[i];
      t.station = net_.station();
      posted_fare_[i] = supply::fare(net_.trip_distance(t.home, t.station), shared, sched_);
      static_los_[i] = baseline_mode_los(net_, params_.modes, t.home,
                                         params_.learn.initial_wait_guess_s, posted_fare_[i]);
      t.perceived.by_mode = static_los_[i];
    }
    drivers_.clear();
    active_driver_ids_.clear();
    const int initial = std::min(params_.initial_fleet, sc_.max_fleet);
    for (int id = 0; id < sc_.max_fleet; ++id) {
      const bool active = id < initial;
      drivers_.push_back({id, active ? params_.initial_active_profit
                                     : params_.initial_inactive_profit,
                          active});
      if (active) active_driver_ids_.push_back(id);
    }
    realized_driver_profit_.assign(drivers_.size(), 0.0);
    fleet_size_today_ = initial;
    fleet_plan_.push_back({0, initial, 0});
    day_ = 0;
    draw_choices();
  }

  void draw_choices() {
    chosen_.assign(travelers_.size(), demand::Mode::Auto);
    cs_today_ = 0;
    const bool fts_available = fleet_size_today_ > 0;
    for (std::size_t i = 0; i < travelers_.size(); ++i) {
      demand::UtilityVector u;
      for (int mo = 0; mo < demand::kModeCount; ++mo)
        u[mo] = demand::utility(travelers_[i], static_cast<demand::Mode>(mo), coef_);
      if (!fts_available)
        u[static_cast<int>(demand::Mode::Fts)] = -std::numeric_limits<double>::infinity();
      chosen_[i] = demand::choose_mode(u, coef_.scale, rng_);
      cs_today_ += demand::logsum(u, coef_.scale) / std::abs(coef_.beta_cost * coef_.scale);
    }
  }

  void log(const EventRow& row) {
    if (sink_) sink_(row);
  }

  const RoadNetwork& net_;
  Scenario sc_;
  SimParams params_;
  std::vector<demand::Traveler> travelers_;
  demand::UtilityCoefficients coef_;
  RngStream rng_;
  EventSink sink_;

  dispatch::DispatchConfig dcfg_;
  supply::FareSchedule sched_;
  supply::CostModel cost_model_;
  supply::OperatorPolicy policy_;

  std::vector<std::array<demand::ModeLos, demand::kModeCount>> static_los_;
  std::vector<double> posted_fare_;
  std::vector<supply::DriverAgent> drivers_;
  std::vector<int> active_driver_ids_;  // maps fleet index -> driver id (HDV)
  std::vector<double> realized_driver_profit_;
  int fleet_size_today_ = 0;
  std::vector<supply::FleetPlan> fleet_plan_;

  int day_ = 0;
  std::vector<demand::Mode> chosen_;
  std::vector<demand::Mode> served_mode_;
  std::vector<bool> fts_fallback_;
  std::vector<demand::ModeLos> experienced_fts_;
  double cs_today_ = 0;

  std::vector<dispatch::VehicleState> fleet_;
  dispatch::RequestTable requests_;
  std::vector<RequestMeta> req_meta_;
  std::vector<DayMetrics> history_;
};

}  // namespace ftsim::engine
