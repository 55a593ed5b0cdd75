#include "irsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "irsim/units.hpp"

namespace irsim {

namespace {

double dist2d(const Point3& a, const Point3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

double reward_phase1(const std::vector<double>& distances_m, double d_max_m,
                     int new_arrivals, bool all_arrived) {
  if (d_max_m <= 0.0)
    throw std::invalid_argument("reward_phase1: d_max must be positive");
  double reward = 0.0;
  for (double d : distances_m) {
    if (d < 0.0)
      throw std::invalid_argument("reward_phase1: negative distance");
    reward += kRewardStepCost + (1.0 - d / d_max_m);
  }
  reward += kRewardArrival * new_arrivals;
  if (all_arrived) reward += kRewardSuccess;
  return reward;
}

double reward_phase2(const std::vector<bool>& outage_flags, int new_arrivals,
                     bool all_arrived, double lambda) {
  double reward = 0.0;
  for (bool in_outage : outage_flags)
    reward += kRewardStepCost + (in_outage ? -lambda : 0.0);
  reward += kRewardArrival * new_arrivals;
  if (all_arrived) reward += kRewardSuccess;
  return reward;
}

Env::Env(const Scenario& scenario) : scenario_(scenario) {
  validate_scenario(scenario_);
  serving_map_ = build_power_map(scenario_.layout, scenario_.serving_ap(),
                                 scenario_.ir_antenna_height);
  for (const ApConfig& ap : scenario_.interferer_aps())
    interferer_maps_.push_back(
        build_power_map(scenario_.layout, ap, scenario_.ir_antenna_height));
  noise_mw_ = scenario_.noise_power_mw();
  reset(0);
}

EnvState Env::reset(std::uint64_t seed) {
  const int n = num_irs();
  state_ = EnvState{};
  state_.positions.reserve(n);
  for (const IrEndpoints& ep : scenario_.irs) state_.positions.push_back(ep.start);
  state_.arrived.assign(n, false);
  state_.outage_slots.assign(n, 0);
  state_.mission_slots.assign(n, scenario_.t_total);
  state_.elapsed = 0;
  fading_rng_ = RngStream::substream(seed, 0x1cf);

  LinkInputs link = compute_link_inputs();
  state_.gain_dbm = link.serving_dbm;
  return state_;
}

Env::LinkInputs Env::compute_link_inputs() {
  const int n = num_irs();
  LinkInputs link;
  link.states.resize(n);
  link.serving_dbm.resize(n);

  const ApConfig& serving = scenario_.serving_ap();
  const std::vector<ApConfig> interferers = scenario_.interferer_aps();
  const GridSpec& grid = scenario_.layout.grid;

  for (int u = 0; u < n; ++u) {
    const Point3& pos = state_.positions[u];
    double serving_dbm;
    double interference_mw = 0.0;

    if (channel_source_ == ChannelSource::kRadioMap) {
      const int ix = grid.cell_index_x(pos.x);
      const int iy = grid.cell_index_y(pos.y);
      serving_dbm = serving_map_.values.at(ix, iy);
      for (const PowerMap& pm : interferer_maps_)
        interference_mw += dbm_to_mw(pm.values.at(ix, iy));
    } else {
      const Point3 rx{pos.x, pos.y, scenario_.ir_antenna_height};
      const FadingModel sampled{FadingMode::kSampled};
      auto live_rx_dbm = [&](const ApConfig& ap) {
        const double dx = ap.position.x - rx.x;
        const double dy = ap.position.y - rx.y;
        const double dz = ap.position.z - rx.z;
        const double d = std::max(std::sqrt(dx * dx + dy * dy + dz * dz),
                                  kMinLossDistanceM);
        const OcclusionReport occ =
            count_occlusions(scenario_.layout, ap.position, rx);
        const double loss = path_loss_db(d, occ.n_obstacles, ap.params);
        const double h = sample_fading(sampled, fading_rng_);
        return received_power_dbm(ap.tx_power_dbm, loss, h);
      };
      serving_dbm = live_rx_dbm(serving);
      for (const ApConfig& ap : interferers)
        interference_mw += dbm_to_mw(live_rx_dbm(ap));
    }

    link.serving_dbm[u] = serving_dbm;
    link.states[u] = {u, db_to_linear(serving_dbm - serving.tx_power_dbm),
                      interference_mw, noise_mw_};
  }
  return link;
}

StepOutcome Env::step(const EnvAction& action) {
  const int n = num_irs();
  if (static_cast<int>(action.irs.size()) != n)
    throw std::invalid_argument("Env::step: action has " +
                                std::to_string(action.irs.size()) +
                                " IR entries, expected " + std::to_string(n));
  for (const EnvAction::IrAction& a : action.irs)
    if (!std::isfinite(a.dx_m) || !std::isfinite(a.dy_m) ||
        !std::isfinite(a.power_fraction))
      throw std::invalid_argument("Env::step: non-finite action component");

  const GridSpec& grid = scenario_.layout.grid;
  const double step_limit = scenario_.v_max * scenario_.slot_seconds;
  const std::vector<bool> active_before = [&] {
    std::vector<bool> v(n);
    for (int u = 0; u < n; ++u) v[u] = !state_.arrived[u];
    return v;
  }();

  // Motion with axis sliding: the displacement component into a blocked
  // cell or out of the room is cancelled, the other survives.
  for (int u = 0; u < n; ++u) {
    if (state_.arrived[u]) continue;
    double dx = action.irs[u].dx_m;
    double dy = action.irs[u].dy_m;
    const double mag = std::hypot(dx, dy);
    if (mag > step_limit && mag > 0.0) {
      dx *= step_limit / mag;
      dy *= step_limit / mag;
    }
    Point3& pos = state_.positions[u];
    const double nx = pos.x + dx;
    if (grid.contains(nx, pos.y) &&
        !cell_blocked(scenario_.layout, grid.cell_index_x(nx),
                      grid.cell_index_y(pos.y), scenario_.ir_antenna_height))
      pos.x = nx;
    const double ny = pos.y + dy;
    if (grid.contains(pos.x, ny) &&
        !cell_blocked(scenario_.layout, grid.cell_index_x(pos.x),
                      grid.cell_index_y(ny), scenario_.ir_antenna_height))
      pos.y = ny;
  }

  // Arrivals freeze motion and end the IR's mission clock.
  std::vector<bool> new_arrival(n, false);
  for (int u = 0; u < n; ++u) {
    if (state_.arrived[u]) continue;
    if (dist2d(state_.positions[u], scenario_.irs[u].destination) <=
        scenario_.arrival_radius) {
      state_.arrived[u] = true;
      new_arrival[u] = true;
      state_.mission_slots[u] = state_.elapsed + 1;
    }
  }

  // Raw shares -> feasible allocation: scale down only when the shares
  // sum past 1, so the budget constraint holds exactly.
  std::vector<double> power_mw(n, 0.0);
  {
    double share_sum = 0.0;
    std::vector<double> shares(n);
    for (int u = 0; u < n; ++u) {
      shares[u] = std::clamp(action.irs[u].power_fraction, 0.0, 1.0);
      share_sum += shares[u];
    }
    const double scale = scenario_.budget_mw() / std::max(1.0, share_sum);
    for (int u = 0; u < n; ++u) power_mw[u] = shares[u] * scale;
  }

  // Link evaluation for the whole cluster at the new positions.
  LinkInputs link = compute_link_inputs();
  state_.gain_dbm = link.serving_dbm;
  PowerAllocation alloc{power_mw};
  LinkReport report;
  if (scenario_.ma_mode == MaMode::kNoma) {
    const DecodingOrder order = decoding_order(equivalent_gains(link.states));
    report = rates_and_outage(
        cluster_sinr(order, link.states, alloc, scenario_.budget_mw()),
        scenario_.bandwidth_hz, scenario_.demand_bps);
  } else {
    report = oma_rates(link.states, alloc, scenario_.bandwidth_hz,
                       scenario_.demand_bps, scenario_.budget_mw());
  }

  // Outage accrues only for IRs still on mission after the arrival check.
  std::vector<bool> outage_counted(n, false);
  for (int u = 0; u < n; ++u) {
    if (state_.arrived[u]) continue;
    if (report.irs[u].outage) {
      ++state_.outage_slots[u];
      outage_counted[u] = true;
    }
  }

  ++state_.elapsed;

  double reward = 0.0;
  int arrivals_now = 0;
  for (int u = 0; u < n; ++u)
    if (new_arrival[u]) ++arrivals_now;
  const bool success = all_arrived();
  const double d_max = scenario_.room_diagonal();
  for (int u = 0; u < n; ++u) {
    if (!active_before[u]) continue;
    reward += kRewardStepCost;
    if (reward_mode_ != RewardMode::kPhase2) {
      const double d = dist2d(state_.positions[u], scenario_.irs[u].destination);
      reward += 1.0 - d / d_max;
    }
    if (reward_mode_ != RewardMode::kPhase1 && outage_counted[u])
      reward += -scenario_.lambda;
  }
  reward += kRewardArrival * arrivals_now;
  if (success) reward += kRewardSuccess;

  StepOutcome outcome;
  outcome.reward = reward;
  outcome.done = success || state_.elapsed >= scenario_.t_total;
  outcome.new_arrival = std::move(new_arrival);
  outcome.power_mw = std::move(power_mw);
  outcome.rate_bps.resize(n);
  outcome.outage.resize(n);
  for (int u = 0; u < n; ++u) {
    outcome.rate_bps[u] = report.irs[u].rate_bps;
    outcome.outage[u] = report.irs[u].outage;
  }
  outcome.state = state_;
  return outcome;
}

std::vector<double> Env::observe() const {
  const GridSpec& grid = scenario_.layout.grid;
  std::vector<double> obs;
  obs.reserve(observation_dim());
  for (int u = 0; u < num_irs(); ++u) {
    obs.push_back((state_.positions[u].x - grid.origin_x) / grid.extent_x());
    obs.push_back((state_.positions[u].y - grid.origin_y) / grid.extent_y());
    obs.push_back((state_.gain_dbm[u] + 100.0) / 70.0);
  }
  return obs;
}

bool Env::all_arrived() const {
  return std::all_of(state_.arrived.begin(), state_.arrived.end(),
                     [](bool b) { return b; });
}

double Env::episode_mqi() const {
  std::vector<double> mission(state_.mission_slots.begin(),
                              state_.mission_slots.end());
  std::vector<double> outage(state_.outage_slots.begin(),
                             state_.outage_slots.end());
  return mqi(scenario_.t_total, mission, outage, scenario_.lambda);
}

void write_trace_csv(const std::vector<SlotRecord>& trace, int num_irs,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "slot";
  for (int u = 0; u < num_irs; ++u) {
    const std::string p = "ir" + std::to_string(u) + "_";
    out << ',' << p << "x," << p << "y," << p << "power_mw," << p
        << "rate_bps," << p << "outage," << p << "arrived";
  }
  out << ",reward\n";
  char buf[64];
  for (const SlotRecord& rec : trace) {
    out << rec.slot;
    for (int u = 0; u < num_irs; ++u) {
      std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f,%.3f,%d,%d", rec.x[u],
                    rec.y[u], rec.power_mw[u], rec.rate_bps[u],
                    rec.outage[u] ? 1 : 0, rec.arrived[u] ? 1 : 0);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.6f", rec.reward);
    out << buf << '\n';
  }
}

}  // namespace irsim
