#include "sparse_lqg/export.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sparse_lqg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string run_dir_name(std::size_t run) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%04zu", run);
  return buf;
}

void append_row(std::string& out, std::initializer_list<std::string> head,
                const Vector* values) {
  bool first = true;
  for (const auto& h : head) {
    if (!first) out += ',';
    out += h;
    first = false;
  }
  if (values) {
    for (Eigen::Index k = 0; k < values->size(); ++k) {
      out += ',';
      out += format_double((*values)(k));
    }
  }
  out += '\n';
}

std::string header(std::initializer_list<std::string> head,
                   const std::string& prefix, Eigen::Index count) {
  std::string out;
  bool first = true;
  for (const auto& h : head) {
    if (!first) out += ',';
    out += h;
    first = false;
  }
  for (Eigen::Index k = 0; k < count; ++k) {
    out += ',' + prefix + std::to_string(k);
  }
  out += '\n';
  return out;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::runtime_error("missing column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty");
  table.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != table.columns.size()) {
      throw std::runtime_error(path.string() + ": ragged row");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double to_double(const std::string& s) { return std::stod(s); }
std::size_t to_size(const std::string& s) { return std::stoul(s); }

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void export_strategy(const fs::path& dir, const GameSpec& spec,
                     const NashStrategy& strategy) {
  json doc;
  doc["horizon"] = strategy.horizon();
  doc["foc_residual"] = foc_residual(spec, strategy);
  json gains = json::array();
  json ff = json::array();
  for (std::size_t t = 0; t < strategy.horizon(); ++t) {
    gains.push_back(matrix_to_json(strategy.gain[t]));
    ff.push_back(vector_to_json(strategy.feedforward[t]));
  }
  doc["gain"] = std::move(gains);
  doc["feedforward"] = std::move(ff);
  json values = json::array();
  for (std::size_t i = 0; i < spec.num_agents(); ++i) {
    values.push_back(strategy.value_constant[i].front());
  }
  doc["value_constant"] = std::move(values);
  write_text(dir / "nash.json", doc.dump(1) + "\n");
}

void export_schedule(const fs::path& dir, const GainSchedule& schedule,
                     const ObservationModel& obs) {
  std::string sensors = "t,agent,group,active,gain_frobenius\n";
  std::string cov = "t,agent,sigma_frobenius,sigma_trace\n";
  std::string lambdas = "t,agent,group,lambda\n";
  for (std::size_t t = 0; t < schedule.num_steps(); ++t) {
    for (std::size_t i = 0; i < schedule.steps[t].size(); ++i) {
      const auto& step = schedule.steps[t][i];
      const auto offsets = offsets_of(obs.agents[i].groups);
      const std::string ti = std::to_string(t) + ',' + std::to_string(i) + ',';
      for (std::size_t g = 0; g < step.active.size(); ++g) {
        const double block =
            step.gain.middleCols(offsets[g], offsets[g + 1] - offsets[g]).norm();
        sensors += ti + std::to_string(g) + ',' + (step.active[g] ? "1," : "0,") +
                   format_double(block) + '\n';
        lambdas += ti + std::to_string(g) + ',' + format_double(step.lambdas(g)) + '\n';
      }
      cov += ti + format_double(step.posterior.norm()) + ',' +
             format_double(step.posterior.trace()) + '\n';
    }
  }
  write_text(dir / "sensors.csv", sensors);
  write_text(dir / "covariance.csv", cov);
  write_text(dir / "lambdas.csv", lambdas);
}

void export_traces(const fs::path& dir, const GameSpec& spec,
                   const std::vector<SimulationTrace>& traces) {
  std::string costs = "run,agent,cost\n";
  const Eigen::Index n = spec.state_dim();
  const Eigen::Index m = spec.control_dim();
  for (const auto& tr : traces) {
    const auto cost = realized_cost(tr, spec);
    for (std::size_t i = 0; i < cost.size(); ++i) {
      costs += std::to_string(tr.run) + ',' + std::to_string(i) + ',' +
               format_double(cost[i]) + '\n';
    }
    std::string states = header({"t"}, "x_", n);
    for (std::size_t t = 0; t < tr.state.size(); ++t) {
      append_row(states, {std::to_string(t)}, &tr.state[t]);
    }
    std::string estimates = header({"t", "agent"}, "xhat_", n);
    for (std::size_t t = 0; t < tr.state.size(); ++t) {
      for (std::size_t i = 0; i < tr.estimate.size(); ++i) {
        append_row(estimates, {std::to_string(t), std::to_string(i)},
                   &tr.estimate[i][t]);
      }
    }
    std::string controls = header({"t"}, "u_", m);
    for (std::size_t t = 0; t < tr.control.size(); ++t) {
      append_row(controls, {std::to_string(t)}, &tr.control[t]);
    }
    const fs::path rd = dir / run_dir_name(tr.run);
    write_text(rd / "states.csv", states);
    write_text(rd / "estimates.csv", estimates);
    write_text(rd / "controls.csv", controls);
  }
  write_text(dir / "costs.csv", costs);
}

void export_conic(const fs::path& dir, const ConicProgramData& data) {
  json doc;
  doc["rows"] = data.rows;
  doc["cols"] = data.cols;
  doc["quadratic"] = matrix_to_json(data.quadratic);
  doc["target"] = vector_to_json(data.target);
  doc["slack_weights"] = vector_to_json(data.slack_weights);
  json cones = json::array();
  for (const auto& c : data.cones) {
    cones.push_back({{"begin", c.begin}, {"size", c.size}, {"slack", c.slack}});
  }
  doc["cones"] = std::move(cones);
  write_text(dir / "conic.json", doc.dump() + "\n");
}

MetricsSummary summarize(const GainSchedule& schedule,
                         const std::vector<SimulationTrace>& traces,
                         const GameSpec& spec, const SimulationConfig& config,
                         const FormationParams* formation) {
  MetricsSummary s;
  s.policy = describe(config.policy);
  s.r_th = config.r_th;
  s.seed = config.seed;
  s.runs = traces.size();
  s.steps = schedule.num_steps();
  const std::size_t N = spec.num_agents();
  s.usage_fraction.assign(N, 0.0);
  s.group_usage_fraction.assign(N, {});
  s.peak_covariance_norm.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t groups = schedule.steps.front()[i].active.size();
    std::vector<std::size_t> used(groups, 0);
    std::size_t total = 0;
    for (std::size_t t = 0; t < s.steps; ++t) {
      const auto& step = schedule.steps[t][i];
      for (std::size_t g = 0; g < groups; ++g) {
        if (step.active[g]) {
          ++used[g];
          ++total;
        }
      }
      s.peak_covariance_norm[i] =
          std::max(s.peak_covariance_norm[i], step.posterior.norm());
    }
    s.usage_fraction[i] =
        static_cast<double>(total) / static_cast<double>(s.steps * groups);
    for (std::size_t g = 0; g < groups; ++g) {
      s.group_usage_fraction[i].push_back(static_cast<double>(used[g]) /
                                          static_cast<double>(s.steps));
    }
  }
  if (traces.empty()) return s;

  const double runs = static_cast<double>(traces.size());
  s.mean_cost.assign(N, 0.0);
  for (const auto& tr : traces) {
    const auto cost = realized_cost(tr, spec);
    for (std::size_t i = 0; i < N; ++i) s.mean_cost[i] += cost[i] / runs;
  }
  if (formation) {
    double tracking = 0.0;
    for (const auto& tr : traces) {
      for (std::size_t t = 0; t < tr.state.size(); ++t) {
        const double err = (tr.state[t].head<2>() -
                            reference_position(*formation, t + 1))
                               .norm();
        tracking += err * err / runs;
      }
    }
    s.leader_tracking_cost = tracking;
  }
  return s;
}

json summary_to_json(const MetricsSummary& s) {
  json doc;
  doc["policy"] = s.policy;
  doc["r_th"] = s.r_th;
  doc["seed"] = s.seed;
  doc["runs"] = s.runs;
  doc["steps"] = s.steps;
  doc["usage_fraction"] = s.usage_fraction;
  doc["group_usage_fraction"] = s.group_usage_fraction;
  doc["peak_covariance_norm"] = s.peak_covariance_norm;
  doc["mean_cost"] = s.mean_cost;
  if (s.leader_tracking_cost) {
    doc["leader_tracking_cost"] = *s.leader_tracking_cost;
  }
  return doc;
}

MetricsSummary summary_from_json(const json& doc) {
  MetricsSummary s;
  s.policy = doc.at("policy").get<std::string>();
  s.r_th = doc.at("r_th").get<double>();
  s.seed = doc.at("seed").get<std::uint64_t>();
  s.runs = doc.at("runs").get<std::size_t>();
  s.steps = doc.at("steps").get<std::size_t>();
  s.usage_fraction = doc.at("usage_fraction").get<std::vector<double>>();
  s.group_usage_fraction =
      doc.at("group_usage_fraction").get<std::vector<std::vector<double>>>();
  s.peak_covariance_norm =
      doc.at("peak_covariance_norm").get<std::vector<double>>();
  s.mean_cost = doc.at("mean_cost").get<std::vector<double>>();
  if (doc.contains("leader_tracking_cost")) {
    s.leader_tracking_cost = doc.at("leader_tracking_cost").get<double>();
  }
  return s;
}

MetricsSummary reimport_summary(const fs::path& dir,
                                const FormationParams* formation) {
  std::ifstream in(dir / "metrics.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "metrics.json").string());
  const MetricsSummary stored = summary_from_json(json::parse(in));

  MetricsSummary s;
  s.policy = stored.policy;
  s.r_th = stored.r_th;
  s.seed = stored.seed;

  const CsvTable sensors = read_csv(dir / "sensors.csv");
  const std::size_t ct = sensors.column("t");
  const std::size_t ca = sensors.column("agent");
  const std::size_t cg = sensors.column("group");
  const std::size_t cact = sensors.column("active");
  // [agent][group] -> active count
  std::vector<std::vector<std::size_t>> used;
  std::size_t steps = 0;
  for (const auto& row : sensors.rows) {
    const std::size_t t = to_size(row[ct]);
    const std::size_t i = to_size(row[ca]);
    const std::size_t g = to_size(row[cg]);
    steps = std::max(steps, t + 1);
    if (used.size() <= i) used.resize(i + 1);
    if (used[i].size() <= g) used[i].resize(g + 1, 0);
    if (row[cact] == "1") ++used[i][g];
  }
  s.steps = steps;
  const std::size_t N = used.size();
  for (std::size_t i = 0; i < N; ++i) {
    std::size_t total = 0;
    std::vector<double> per_group;
    for (const std::size_t u : used[i]) {
      total += u;
      per_group.push_back(static_cast<double>(u) / static_cast<double>(steps));
    }
    s.usage_fraction.push_back(static_cast<double>(total) /
                               static_cast<double>(steps * used[i].size()));
    s.group_usage_fraction.push_back(std::move(per_group));
  }

  const CsvTable cov = read_csv(dir / "covariance.csv");
  const std::size_t cca = cov.column("agent");
  const std::size_t cf = cov.column("sigma_frobenius");
  s.peak_covariance_norm.assign(N, 0.0);
  for (const auto& row : cov.rows) {
    const std::size_t i = to_size(row[cca]);
    s.peak_covariance_norm[i] = std::max(s.peak_covariance_norm[i], to_double(row[cf]));
  }

  if (!fs::exists(dir / "costs.csv")) return s;
  const CsvTable costs = read_csv(dir / "costs.csv");
  const std::size_t cr = costs.column("run");
  const std::size_t cia = costs.column("agent");
  const std::size_t cc = costs.column("cost");
  std::vector<std::size_t> run_ids;
  for (const auto& row : costs.rows) {
    const std::size_t r = to_size(row[cr]);
    if (run_ids.empty() || run_ids.back() != r) run_ids.push_back(r);
  }
  s.runs = run_ids.size();
  if (s.runs == 0) return s;
  const double runs = static_cast<double>(s.runs);
  s.mean_cost.assign(N, 0.0);
  for (const auto& row : costs.rows) {
    s.mean_cost[to_size(row[cia])] += to_double(row[cc]) / runs;
  }
  if (formation) {
    double tracking = 0.0;
    for (const std::size_t r : run_ids) {
      const CsvTable states = read_csv(dir / run_dir_name(r) / "states.csv");
      const std::size_t cx = states.column("x_0");
      const std::size_t cy = states.column("x_1");
      for (const auto& row : states.rows) {
        const Eigen::Vector2d p(to_double(row[cx]), to_double(row[cy]));
        const double err =
            (p - reference_position(*formation, to_size(row[0]) + 1)).norm();
        tracking += err * err / runs;
      }
    }
    s.leader_tracking_cost = tracking;
  }
  return s;
}

}  // namespace sparse_lqg
