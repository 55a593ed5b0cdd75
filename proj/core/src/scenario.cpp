#include "irsim/scenario.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "irsim/units.hpp"

namespace irsim {

namespace {

using nlohmann::json;

PropagationParams parse_propagation(const json& ap) {
  PropagationParams params;
  params.freq_mhz = ap.value("freq_mhz", params.freq_mhz);
  params.dist_power_coeff = ap.value("dist_power_coeff", params.dist_power_coeff);
  params.floor_loss_base = ap.value("floor_loss_base", params.floor_loss_base);
  params.floor_loss_step = ap.value("floor_loss_step", params.floor_loss_step);
  return params;
}

// Breadth-first search over unblocked cells, 4-connectivity.
bool path_exists(const InteriorLayout& layout, double robot_height, int sx,
                 int sy, int dx, int dy) {
  const GridSpec& g = layout.grid;
  Grid2d<char> seen(g.n_x, g.n_y, 0);
  std::deque<std::pair<int, int>> frontier;
  frontier.emplace_back(sx, sy);
  seen.at(sx, sy) = 1;
  while (!frontier.empty()) {
    auto [cx, cy] = frontier.front();
    frontier.pop_front();
    if (cx == dx && cy == dy) return true;
    const int nx[4] = {cx + 1, cx - 1, cx, cx};
    const int ny[4] = {cy, cy, cy + 1, cy - 1};
    for (int k = 0; k < 4; ++k) {
      if (!g.in_range(nx[k], ny[k]) || seen.at(nx[k], ny[k])) continue;
      if (cell_blocked(layout, nx[k], ny[k], robot_height)) continue;
      seen.at(nx[k], ny[k]) = 1;
      frontier.emplace_back(nx[k], ny[k]);
    }
  }
  return false;
}

}  // namespace

const ApConfig& Scenario::serving_ap() const {
  for (const ApConfig& ap : aps)
    if (ap.role == ApRole::kServing) return ap;
  throw std::logic_error("Scenario: no serving AP");
}

std::vector<ApConfig> Scenario::interferer_aps() const {
  std::vector<ApConfig> out;
  for (const ApConfig& ap : aps)
    if (ap.role == ApRole::kInterferer) out.push_back(ap);
  return out;
}

double Scenario::noise_power_mw() const {
  return dbm_to_mw(noise_power_dbm(noise_density_dbm_hz, bandwidth_hz));
}

double Scenario::budget_mw() const {
  return dbm_to_mw(cluster_power_budget_dbm);
}

double Scenario::room_diagonal() const {
  const GridSpec& g = layout.grid;
  return std::hypot(g.extent_x(), g.extent_y());
}

std::string to_string(MaMode mode) {
  return mode == MaMode::kNoma ? "noma" : "oma";
}

MaMode ma_mode_from_string(const std::string& text) {
  if (text == "noma") return MaMode::kNoma;
  if (text == "oma") return MaMode::kOma;
  throw std::invalid_argument("unknown multiple-access mode '" + text +
                              "' (expected noma or oma)");
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_scenario: " + path + ": " + e.what());
  }

  Scenario sc;
  sc.name = doc.value("name", std::string("unnamed"));

  const json& grid_j = doc.at("grid");
  GridSpec grid;
  grid.origin_x = grid_j.value("origin_x", 0.0);
  grid.origin_y = grid_j.value("origin_y", 0.0);
  grid.cell_size = grid_j.at("cell_size").get<double>();
  grid.n_x = grid_j.at("n_x").get<int>();
  grid.n_y = grid_j.at("n_y").get<int>();

  // Obstacles are single cells {cx, cy} or inclusive cell rectangles
  // {cx0, cy0, cx1, cy1}; later entries overwrite earlier ones.
  std::vector<ObstacleCell> obstacles;
  for (const json& ob : doc.value("obstacles", json::array())) {
    const double z_bot = ob.value("z_bot", 0.0);
    const double z_top = ob.at("z_top").get<double>();
    if (ob.contains("cx0")) {
      const int cx0 = ob.at("cx0").get<int>();
      const int cy0 = ob.at("cy0").get<int>();
      const int cx1 = ob.at("cx1").get<int>();
      const int cy1 = ob.at("cy1").get<int>();
      for (int cy = cy0; cy <= cy1; ++cy)
        for (int cx = cx0; cx <= cx1; ++cx)
          obstacles.push_back({cx, cy, z_bot, z_top});
    } else {
      obstacles.push_back(
          {ob.at("cx").get<int>(), ob.at("cy").get<int>(), z_bot, z_top});
    }
  }
  sc.layout = build_layout(grid, obstacles);

  for (const json& ap_j : doc.at("aps")) {
    ApConfig ap;
    ap.id = ap_j.at("id").get<std::string>();
    ap.position = {ap_j.at("x").get<double>(), ap_j.at("y").get<double>(),
                   ap_j.at("z").get<double>()};
    ap.tx_power_dbm = ap_j.value("tx_power_dbm", 20.0);
    ap.params = parse_propagation(ap_j);
    const std::string role = ap_j.value("role", std::string("interferer"));
    if (role == "serving")
      ap.role = ApRole::kServing;
    else if (role == "interferer")
      ap.role = ApRole::kInterferer;
    else
      throw std::runtime_error("load_scenario: AP '" + ap.id +
                               "' has unknown role '" + role + "'");
    sc.aps.push_back(std::move(ap));
  }

  for (const json& ir : doc.at("irs")) {
    IrEndpoints ep;
    ep.start = {ir.at("start").at(0).get<double>(),
                ir.at("start").at(1).get<double>(), 0.0};
    ep.destination = {ir.at("dest").at(0).get<double>(),
                      ir.at("dest").at(1).get<double>(), 0.0};
    sc.irs.push_back(ep);
  }

  if (doc.contains("link")) {
    const json& link = doc["link"];
    sc.bandwidth_hz = link.value("bandwidth_hz", sc.bandwidth_hz);
    sc.demand_bps = link.value("demand_bps", sc.demand_bps);
    sc.noise_density_dbm_hz =
        link.value("noise_dbm_per_hz", sc.noise_density_dbm_hz);
    sc.cluster_power_budget_dbm =
        link.value("cluster_power_budget_dbm", sc.cluster_power_budget_dbm);
    sc.v_max = link.value("v_max", sc.v_max);
    sc.lambda = link.value("lambda", sc.lambda);
    sc.t_total = link.value("t_total", sc.t_total);
    sc.arrival_radius = link.value("arrival_radius", sc.arrival_radius);
    sc.ir_antenna_height = link.value("ir_antenna_height", sc.ir_antenna_height);
    sc.slot_seconds = link.value("slot_seconds", sc.slot_seconds);
    if (link.contains("ma_mode"))
      sc.ma_mode = ma_mode_from_string(link["ma_mode"].get<std::string>());
  }

  if (doc.contains("learner")) {
    const json& ln = doc["learner"];
    LearnerConfig& cfg = sc.learner;
    cfg.actor_lr = ln.value("actor_lr", cfg.actor_lr);
    cfg.critic_lr = ln.value("critic_lr", cfg.critic_lr);
    cfg.discount = ln.value("discount", cfg.discount);
    cfg.reward_scale = ln.value("reward_scale", cfg.reward_scale);
    cfg.tau = ln.value("tau", cfg.tau);
    cfg.batch_size = ln.value("batch_size", cfg.batch_size);
    cfg.buffer_capacity = ln.value("buffer_capacity", cfg.buffer_capacity);
    cfg.phase1_episodes = ln.value("phase1_episodes", cfg.phase1_episodes);
    cfg.phase2_episodes = ln.value("phase2_episodes", cfg.phase2_episodes);
    cfg.hidden1 = ln.value("hidden1", cfg.hidden1);
    cfg.hidden2 = ln.value("hidden2", cfg.hidden2);
    cfg.ou_scale_phase1 = ln.value("ou_scale_phase1", cfg.ou_scale_phase1);
    cfg.ou_scale_phase2 = ln.value("ou_scale_phase2", cfg.ou_scale_phase2);
    cfg.ou_floor = ln.value("ou_floor", cfg.ou_floor);
    cfg.ou_theta = ln.value("ou_theta", cfg.ou_theta);
  }

  validate_scenario(sc);
  return sc;
}

void validate_scenario(const Scenario& sc) {
  int serving = 0;
  for (const ApConfig& ap : sc.aps)
    if (ap.role == ApRole::kServing) ++serving;
  if (serving != 1)
    throw std::runtime_error("scenario '" + sc.name + "': needs exactly one " +
                             "serving AP, found " + std::to_string(serving));

  if (sc.irs.empty())
    throw std::runtime_error("scenario '" + sc.name + "': needs at least one IR");
  if (sc.t_total < 1 || sc.v_max <= 0.0 || sc.slot_seconds <= 0.0 ||
      sc.arrival_radius <= 0.0 || sc.bandwidth_hz <= 0.0)
    throw std::runtime_error("scenario '" + sc.name +
                             "': nonpositive link/motion parameter");

  const GridSpec& g = sc.layout.grid;
  for (std::size_t u = 0; u < sc.irs.size(); ++u) {
    const IrEndpoints& ep = sc.irs[u];
    const std::string who = "scenario '" + sc.name + "': IR " + std::to_string(u);
    for (const Point3* p : {&ep.start, &ep.destination}) {
      if (!g.contains(p->x, p->y))
        throw std::runtime_error(who + " endpoint outside the room");
    }
    const int sx = g.cell_index_x(ep.start.x);
    const int sy = g.cell_index_y(ep.start.y);
    const int dx = g.cell_index_x(ep.destination.x);
    const int dy = g.cell_index_y(ep.destination.y);
    if (cell_blocked(sc.layout, sx, sy, sc.ir_antenna_height))
      throw std::runtime_error(who + " start cell is blocked");
    if (cell_blocked(sc.layout, dx, dy, sc.ir_antenna_height))
      throw std::runtime_error(who + " destination cell is blocked");
    if (!path_exists(sc.layout, sc.ir_antenna_height, sx, sy, dx, dy))
      throw std::runtime_error(who + " has no unblocked path to destination");
  }

  const LearnerConfig& cfg = sc.learner;
  if (cfg.tau <= 0.0 || cfg.tau > 1.0)
    throw std::runtime_error("scenario '" + sc.name + "': tau out of (0, 1]");
  if (cfg.batch_size < 1 || cfg.buffer_capacity < cfg.batch_size)
    throw std::runtime_error("scenario '" + sc.name +
                             "': buffer must hold at least one batch");
}

}  // namespace irsim
