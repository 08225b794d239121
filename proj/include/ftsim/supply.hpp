#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ftsim::supply {

// Taximeter fare: the base fare covers the first increment_distance_m; each
// further started increment adds increment_fare. The posted sharing discount
// applies on shared-capable days only.
struct FareSchedule {
  double base_fare = 4.25;
  double increment_fare = 0.25;
  double increment_distance_m = 130;
  double discount_pct = 0;  // one of {0, 15, 25, 50} in the study scenarios
};

inline double fare(double distance_m, bool shared_day, const FareSchedule& s) {
  if (distance_m < 0) throw std::invalid_argument("fare: negative distance");
  double increments = 0;
  if (distance_m > s.increment_distance_m)
    increments = std::ceil((distance_m - s.increment_distance_m) / s.increment_distance_m);
  double f = s.base_fare + s.increment_fare * increments;
  if (shared_day) f *= 1.0 - s.discount_pct / 100.0;
  return f;
}

struct CostModel {
  double operating_cost_per_km = 0.51;
};

inline double driver_day_profit(double revenue, double distance_driven_m, const CostModel& cm) {
  return revenue - cm.operating_cost_per_km * distance_driven_m / 1000.0;
}

// Crowdsourced driver with smoothed profit perception; enters the market
// whenever perceived profit clears the threshold.
struct DriverAgent {
  int id = 0;
  double perceived_profit = 0;
  bool active_today = false;
};

enum class FleetKind { HdvCrowdsourced, AvCentral };

struct OperatorPolicy {
  FleetKind kind = FleetKind::HdvCrowdsourced;
  int max_fleet = 10;        // M
  int capacity = 4;          // seats per vehicle
  double profit_threshold = 25;  // HDV entry threshold, $/day
  double commission_rate = 0.15;  // outsourcing accounting only
  int av_floor_min = 1;      // 0 reproduces the literal clamp of the sizing rule
};

// Day-to-day driver market update. Active drivers smooth toward their own
// realized profit; inactive drivers smooth toward the fleet-average realized
// profit, the observable market signal (0 when nobody drove). Returns the
// size of the next-day active set, capped at max_fleet with the highest
// perceived profits entering first.
inline int hdv_update(std::vector<DriverAgent>& drivers, const std::vector<double>& realized,
                      double threshold, double lambda, int max_fleet) {
  if (lambda <= 0 || lambda > 1) throw std::invalid_argument("hdv_update: lambda in (0,1]");
  double market_avg = 0;
  int active = 0;
  for (std::size_t i = 0; i < drivers.size(); ++i) {
    if (!drivers[i].active_today) continue;
    market_avg += realized.at(i);
    ++active;
  }
  market_avg = active > 0 ? market_avg / active : 0.0;
  for (std::size_t i = 0; i < drivers.size(); ++i) {
    const double signal = drivers[i].active_today ? realized.at(i) : market_avg;
    drivers[i].perceived_profit = (1 - lambda) * drivers[i].perceived_profit + lambda * signal;
  }
  std::vector<int> willing;
  for (const auto& d : drivers)
    if (d.perceived_profit >= threshold) willing.push_back(d.id);
  std::sort(willing.begin(), willing.end(), [&](int a, int b) {
    if (drivers[a].perceived_profit != drivers[b].perceived_profit)
      return drivers[a].perceived_profit > drivers[b].perceived_profit;
    return a < b;
  });
  if (static_cast<int>(willing.size()) > max_fleet) willing.resize(max_fleet);
  for (auto& d : drivers) d.active_today = false;
  for (int id : willing) drivers[id].active_today = true;
  return static_cast<int>(willing.size());
}

// Central AV sizing: match posted capacity to the myopic demand forecast
// (yesterday's realized demand), clamped to [floor, M]. The default floor of
// 1 keeps zero demand from becoming an absorbing no-service state; floor 0 is
// the literal rule.
inline int av_fleet_size(int theta_prev, const OperatorPolicy& policy) {
  if (theta_prev < 0) throw std::invalid_argument("av_fleet_size: negative demand");
  const int needed = static_cast<int>(
      std::ceil(static_cast<double>(theta_prev) / static_cast<double>(policy.capacity)));
  return std::min(policy.max_fleet, std::max(policy.av_floor_min, needed));
}

struct FleetPlan {
  int day = 0;
  int fleet_size = 0;      // Lambda_d
  int demand_forecast = 0; // Y_d = Theta_{d-1}
};

// Operator accounting view: owning the fleet earns the full margin,
// outsourcing earns a commission on fares only.
inline double operator_profit(double total_revenue, double total_distance_m, const CostModel& cm,
                              const OperatorPolicy& policy, bool owned) {
  if (owned) return total_revenue - cm.operating_cost_per_km * total_distance_m / 1000.0;
  return policy.commission_rate * total_revenue;
}

}  // namespace ftsim::supply
