// Copyright 2026 The snnc Authors
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

#include "snnc/search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "snnc/error.hpp"
#include "text_format.hpp"

namespace snnc {

std::string_view to_string(ParamKind kind) { return kind == ParamKind::phi ? "phi" : "rho"; }

ParamKind parse_param_kind(std::string_view name) {
  if (name == "phi") return ParamKind::phi;
  if (name == "rho") return ParamKind::rho;
  throw ConfigError("unknown parameter kind '" + std::string(name) + "' (expected phi or rho)");
}

std::vector<int> default_candidates(ParamKind kind) {
  return kind == ParamKind::phi ? std::vector<int>{1, 2, 3, 4} : std::vector<int>{1, 2, 4};
}

std::string_view to_string(EnergyMode mode) { return mode == EnergyMode::spike_count ? "spike_count" : "synop"; }

EnergyMode parse_energy_mode(std::string_view name) {
  if (name == "spike_count") return EnergyMode::spike_count;
  if (name == "synop") return EnergyMode::synop;
  throw ConfigError("unknown energy mode '" + std::string(name) + "' (expected spike_count or synop)");
}

void EnergyModel::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("energy per spike mu must be > 0");
}

std::vector<double> layer_fanout(const ModelGraph& model) {
  std::vector<double> out;
  for (auto k : model.spiking_layers()) {
    double fan = 1.0;
    for (std::size_t i = k + 1; i < model.layers.size(); ++i) {
      const auto& l = model.layers[i];
      const double s = static_cast<double>(l.stride);
      const double kk = static_cast<double>(l.kernel);
      if (l.kind == LayerKind::avgpool2d) {
        fan *= kk * kk / (s * s);
      } else if (l.kind == LayerKind::dense) {
        fan *= static_cast<double>(l.out_features);
        break;
      } else if (l.kind == LayerKind::conv2d) {
        fan *= static_cast<double>(l.out_channels) * kk * kk / (s * s);
        break;
      }
    }
    out.push_back(fan);
  }
  return out;
}

double energy_of_counts(std::span<const double> layer_spikes, const EnergyModel& em, std::span<const double> fanout) {
  em.validate();
  double weighted = 0.0;
  if (em.mode == EnergyMode::synop) {
    if (fanout.size() != layer_spikes.size()) throw ConfigError("synop energy needs one fan-out per spiking layer");
    for (std::size_t k = 0; k < layer_spikes.size(); ++k) weighted += layer_spikes[k] * fanout[k];
  } else {
    for (double c : layer_spikes) weighted += c;
  }
  return weighted / 1e-3 * em.mu;
}

double energy_of(const RunStats& stats, const EnergyModel& em, std::span<const double> fanout) {
  std::vector<double> counts(stats.layer_spikes.begin(), stats.layer_spikes.end());
  return energy_of_counts(counts, em, fanout);
}

std::vector<double> softmax(std::span<const float> scores) {
  if (scores.empty()) throw ConfigError("softmax of an empty vector");
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(static_cast<double>(scores[i]) - m));
  for (auto& v : p) v /= z;
  return p;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw ConfigError("KL divergence needs two distributions of equal size");
  constexpr double eps = 1e-12;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = std::max(p[i], eps), b = std::max(q[i], eps);
    kl += a * std::log(a / b);
  }
  return std::max(kl, 0.0);
}

double mean_kl(const Tensor& reference_logits, const Tensor& scores) {
  if (reference_logits.shape() != scores.shape()) throw ShapeError("logit and score shapes differ");
  double sum = 0.0;
  for (std::size_t b = 0; b < scores.dim(0); ++b) {
    sum += kl_divergence(softmax(reference_logits.row(b)), softmax(scores.row(b)));
  }
  return sum / static_cast<double>(scores.dim(0));
}

Measurement layer_sensitivity(const ModelGraph& model, std::span<const LayerSnnConfig> base, std::size_t layer,
                              ParamKind kind, int candidate, const CalibrationCache& cache, std::size_t timesteps,
                              const EnergyModel& em, const RunOptions& options) {
  cache.check_model(model);
  if (cache.sample_count() == 0) throw ConfigError("calibration cache is empty");
  if (cache.logits.dim(1) != model.class_count) {
    throw ConfigError("cache has " + std::to_string(cache.logits.dim(1)) + " classes, model has " +
                      std::to_string(model.class_count));
  }
  if (layer >= base.size()) throw ConfigError("layer " + std::to_string(layer) + " out of range");
  if (candidate < 1) throw ConfigError("candidates must be >= 1");
  std::vector<LayerSnnConfig> cfg(base.begin(), base.end());
  (kind == ParamKind::phi ? cfg[layer].phi : cfg[layer].rho) = candidate;

  const auto run = run_snn(model, cfg, cache.inputs, timesteps, options);
  Measurement m;
  m.sensitivity = mean_kl(cache.logits, run.scores);
  double spikes = static_cast<double>(run.stats.layer_spikes[layer]);
  if (em.mode == EnergyMode::synop) spikes *= layer_fanout(model)[layer];
  em.validate();
  m.energy = spikes / static_cast<double>(cache.sample_count()) / 1e-3 * em.mu;
  return m;
}

const SensitivityRow& SensitivityTable::at(std::size_t layer, std::size_t candidate_index) const {
  return rows.at(layer * candidates.size() + candidate_index);
}

void SensitivityTable::validate() const {
  if (candidates.empty() || layer_count == 0) throw ConfigError("sensitivity table is empty");
  if (rows.size() != layer_count * candidates.size()) {
    throw ConfigError("sensitivity table has " + std::to_string(rows.size()) + " rows, expected " +
                      std::to_string(layer_count * candidates.size()));
  }
  for (std::size_t l = 0; l < layer_count; ++l) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto& r = at(l, c);
      if (r.layer != l || r.candidate != candidates[c]) {
        throw ConfigError("sensitivity table row for layer " + std::to_string(l) + " candidate " +
                          std::to_string(candidates[c]) + " is missing");
      }
      if (!(r.sensitivity >= 0.0) || !(r.energy >= 0.0) || !std::isfinite(r.sensitivity) ||
          !std::isfinite(r.energy)) {
        throw ConfigError("sensitivity table values must be finite and >= 0");
      }
    }
  }
}

SensitivityTable build_table(const ModelGraph& model, std::span<const LayerSnnConfig> base,
                             const CalibrationCache& cache, std::size_t timesteps, ParamKind kind,
                             std::span<const int> candidates, const EnergyModel& em, const RunOptions& options) {
  if (candidates.empty()) throw ConfigError("candidate set is empty");
  SensitivityTable t;
  t.kind = kind;
  t.sample_count = cache.sample_count();
  t.layer_count = base.size();
  t.candidates.assign(candidates.begin(), candidates.end());
  for (std::size_t l = 0; l < base.size(); ++l) {
    for (int c : candidates) {
      const auto m = layer_sensitivity(model, base, l, kind, c, cache, timesteps, em, options);
      t.rows.push_back({l, c, m.sensitivity, m.energy});
    }
  }
  return t;
}

std::pair<double, double> plan_sums(const SensitivityTable& table, std::span<const std::size_t> choice) {
  double s = 0.0, e = 0.0;
  for (std::size_t l = 0; l < choice.size(); ++l) {
    const auto& r = table.at(l, choice[l]);
    s += r.sensitivity;
    e += r.energy;
  }
  return {s, e};
}

namespace {

struct Candidate {
  std::vector<std::size_t> choice;
  double s = 0.0, e = 0.0;
};

// Objective and constrained resource of a plan under the table's kind.
double objective(ParamKind kind, const Candidate& c) { return kind == ParamKind::phi ? c.s : c.e; }
double resource(ParamKind kind, const Candidate& c) { return kind == ParamKind::phi ? c.e : c.s; }

bool better(ParamKind kind, const Candidate& a, const Candidate& b) {
  if (objective(kind, a) != objective(kind, b)) return objective(kind, a) < objective(kind, b);
  if (a.e != b.e) return a.e < b.e;
  if (a.s != b.s) return a.s < b.s;
  return a.choice < b.choice;
}

// Lexicographically smallest plan using the least of the capped resource.
bool cheaper(ParamKind kind, const Candidate& a, const Candidate& b) {
  if (resource(kind, a) != resource(kind, b)) return resource(kind, a) < resource(kind, b);
  return better(kind, a, b);
}

std::vector<FrontierPoint> frontier_of(const SensitivityTable& table, const std::vector<Candidate>& plans) {
  std::vector<const Candidate*> sorted;
  for (const auto& p : plans) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(), [](const Candidate* a, const Candidate* b) {
    if (a->e != b->e) return a->e < b->e;
    if (a->s != b->s) return a->s < b->s;
    return a->choice < b->choice;
  });
  std::vector<FrontierPoint> out;
  double best_s = std::numeric_limits<double>::infinity();
  for (const auto* p : sorted) {
    if (p->s < best_s) {
      best_s = p->s;
      FrontierPoint fp{p->s, p->e, {}};
      for (std::size_t l = 0; l < p->choice.size(); ++l) fp.values.push_back(table.candidates[p->choice[l]]);
      out.push_back(std::move(fp));
    }
  }
  return out;
}

std::vector<Candidate> lagrangian_plans(const SensitivityTable& t) {
  const std::size_t n = t.candidates.size();
  const std::size_t layers = t.layer_count;
  const bool phi = t.kind == ParamKind::phi;

  // Range-normalised primary (f) and constrained (g) costs.
  auto f_raw = [&](std::size_t l, std::size_t c) { return phi ? t.at(l, c).sensitivity : t.at(l, c).energy; };
  auto g_raw = [&](std::size_t l, std::size_t c) { return phi ? t.at(l, c).energy : t.at(l, c).sensitivity; };
  double f_scale = 0.0, g_scale = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    double fmin = f_raw(l, 0), fmax = fmin, gmin = g_raw(l, 0), gmax = gmin;
    for (std::size_t c = 1; c < n; ++c) {
      fmin = std::min(fmin, f_raw(l, c));
      fmax = std::max(fmax, f_raw(l, c));
      gmin = std::min(gmin, g_raw(l, c));
      gmax = std::max(gmax, g_raw(l, c));
    }
    f_scale += fmax - fmin;
    g_scale += gmax - gmin;
  }
  if (!(f_scale > 0.0)) f_scale = 1.0;
  if (!(g_scale > 0.0)) g_scale = 1.0;
  auto f = [&](std::size_t l, std::size_t c) { return f_raw(l, c) / f_scale; };
  auto g = [&](std::size_t l, std::size_t c) { return g_raw(l, c) / g_scale; };

  std::set<double> lambdas{0.0};
  for (int i = 0; i <= 60; ++i) lambdas.insert(std::pow(10.0, -6.0 + 0.2 * i));
  std::vector<double> breaks;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        const double df = f(l, b) - f(l, a), dg = g(l, a) - g(l, b);
        if (df > 0.0 && dg > 0.0) breaks.push_back(df / dg);
      }
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    lambdas.insert(breaks[i]);
    if (i == 0) lambdas.insert(breaks[i] / 2.0);
    if (i + 1 < breaks.size()) lambdas.insert(std::sqrt(breaks[i] * breaks[i + 1]));
    else lambdas.insert(breaks[i] * 2.0);
  }
  lambdas.insert(std::numeric_limits<double>::infinity());

  std::vector<Candidate> plans;
  std::set<std::vector<std::size_t>> seen;
  for (double lambda : lambdas) {
    Candidate p;
    for (std::size_t l = 0; l < layers; ++l) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < n; ++c) {
        const bool inf = std::isinf(lambda);
        const double vc = inf ? g(l, c) : f(l, c) + lambda * g(l, c);
        const double vb = inf ? g(l, best) : f(l, best) + lambda * g(l, best);
        const double ec = t.at(l, c).energy, eb = t.at(l, best).energy;
        const double sc = t.at(l, c).sensitivity, sb = t.at(l, best).sensitivity;
        if (vc < vb || (vc == vb && (ec < eb || (ec == eb && sc < sb)))) best = c;
      }
      p.choice.push_back(best);
    }
    if (!seen.insert(p.choice).second) continue;
    std::tie(p.s, p.e) = plan_sums(t, p.choice);
    plans.push_back(std::move(p));
  }
  return plans;
}

std::vector<Candidate> exhaustive_plans(const SensitivityTable& t) {
  const std::size_t n = t.candidates.size();
  double total = 1.0;
  for (std::size_t l = 0; l < t.layer_count; ++l) total *= static_cast<double>(n);
  if (total > static_cast<double>(1u << 20)) {
    throw ConfigError("exhaustive search over " + std::to_string(static_cast<long long>(total)) +
                      " plans is too large; use the lagrangian method");
  }
  std::vector<Candidate> plans;
  std::vector<std::size_t> choice(t.layer_count, 0);
  while (true) {
    Candidate p;
    p.choice = choice;
    std::tie(p.s, p.e) = plan_sums(t, p.choice);
    plans.push_back(std::move(p));
    std::size_t l = 0;
    while (l < choice.size() && ++choice[l] == n) choice[l++] = 0;
    if (l == choice.size()) break;
  }
  return plans;
}

// Best-improvement moves that change one or two layers and stay within the
// cap. Plans between hull vertices are unreachable by the multiplier sweep
// alone.
std::vector<Candidate> improve_locally(const SensitivityTable& t, double cap, Candidate& current) {
  const std::size_t layers = t.layer_count;
  const std::size_t n = t.candidates.size();
  std::vector<Candidate> visited;
  while (true) {
    std::optional<Candidate> step;
    const auto consider = [&](std::vector<std::size_t> choice) {
      Candidate next;
      next.choice = std::move(choice);
      std::tie(next.s, next.e) = plan_sums(t, next.choice);
      if (resource(t.kind, next) > cap) return;
      if (better(t.kind, next, current) && (!step || better(t.kind, next, *step))) step = std::move(next);
    };
    for (std::size_t a = 0; a < layers; ++a) {
      for (std::size_t ca = 0; ca < n; ++ca) {
        if (ca == current.choice[a]) continue;
        auto one = current.choice;
        one[a] = ca;
        consider(one);
        for (std::size_t b = a + 1; b < layers; ++b) {
          for (std::size_t cb = 0; cb < n; ++cb) {
            if (cb == current.choice[b]) continue;
            auto two = one;
            two[b] = cb;
            consider(std::move(two));
          }
        }
      }
    }
    if (!step) return visited;
    current = *step;
    visited.push_back(std::move(*step));
  }
}

}  // namespace

LayerPlan pareto_search(const SensitivityTable& table, const SearchBudget& budget, SearchMethod method) {
  table.validate();
  const auto expected = table.kind == ParamKind::phi ? SearchBudget::Kind::energy_cap
                                                     : SearchBudget::Kind::sensitivity_cap;
  if (budget.kind != expected) {
    throw ConfigError(table.kind == ParamKind::phi ? "a phi search needs an energy budget"
                                                   : "a rho search needs a sensitivity budget");
  }
  if (std::isnan(budget.cap) || !(budget.cap > 0.0)) throw ConfigError("budget cap must be > 0 or infinite");

  auto plans = method == SearchMethod::lagrangian ? lagrangian_plans(table) : exhaustive_plans(table);
  std::optional<Candidate> best;
  const Candidate* cheapest = nullptr;
  for (const auto& p : plans) {
    if (!cheapest || cheaper(table.kind, p, *cheapest)) cheapest = &p;
    if (resource(table.kind, p) <= budget.cap && (!best || better(table.kind, p, *best))) best = p;
  }
  if (best && method == SearchMethod::lagrangian) {
    auto visited = improve_locally(table, budget.cap, *best);
    plans.insert(plans.end(), std::make_move_iterator(visited.begin()), std::make_move_iterator(visited.end()));
    cheapest = nullptr;
    for (const auto& p : plans) {
      if (!cheapest || cheaper(table.kind, p, *cheapest)) cheapest = &p;
    }
  }
  LayerPlan plan;
  plan.kind = table.kind;
  plan.budget = budget;
  plan.feasible = best.has_value();
  const Candidate& chosen = best ? *best : *cheapest;
  plan.choice = chosen.choice;
  for (auto c : chosen.choice) plan.values.push_back(table.candidates[c]);
  plan.s_sum = chosen.s;
  plan.e_sum = chosen.e;
  plan.frontier = frontier_of(table, plans);
  return plan;
}

std::vector<LayerSnnConfig> apply_plan(std::span<const LayerSnnConfig> configs, const LayerPlan& plan) {
  if (plan.values.size() != configs.size()) {
    throw ConfigError("plan covers " + std::to_string(plan.values.size()) + " layers but there are " +
                      std::to_string(configs.size()) + " spiking layers");
  }
  std::vector<LayerSnnConfig> out(configs.begin(), configs.end());
  for (std::size_t l = 0; l < out.size(); ++l) {
    if (plan.values[l] < 1) throw ConfigError("plan values must be >= 1");
    (plan.kind == ParamKind::phi ? out[l].phi : out[l].rho) = plan.values[l];
  }
  return out;
}

std::string table_to_csv(const SensitivityTable& table) {
  std::ostringstream os;
  os << "layer,candidate,kind,S,E,N\n";
  for (const auto& r : table.rows) {
    os << r.layer << ',' << r.candidate << ',' << to_string(table.kind) << ',' << format_double(r.sensitivity) << ','
       << format_double(r.energy) << ',' << table.sample_count << '\n';
  }
  return os.str();
}

SensitivityTable table_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("layer,candidate,kind,S,E,N", 0) != 0) {
    throw FormatError(FormatError::Kind::malformed, "sensitivity table: missing CSV header");
  }
  SensitivityTable t;
  std::map<std::size_t, std::vector<SensitivityRow>> by_layer;
  std::vector<int> candidates;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[6];
    for (auto& cell : f) std::getline(row, cell, ',');
    try {
      SensitivityRow r{std::stoul(f[0]), std::stoi(f[1]), std::stod(f[3]), std::stod(f[4])};
      const auto kind = parse_param_kind(f[2]);
      const auto n = std::stoul(f[5]);
      if (first) {
        t.kind = kind;
        t.sample_count = n;
        first = false;
      } else if (kind != t.kind || n != t.sample_count) {
        throw FormatError(FormatError::Kind::malformed, "sensitivity table mixes kinds or sample counts");
      }
      by_layer[r.layer].push_back(r);
    } catch (const std::logic_error&) {
      throw FormatError(FormatError::Kind::malformed, "sensitivity table: bad row '" + line + "'");
    }
  }
  for (const auto& [layer, rows] : by_layer) {
    if (layer != t.layer_count) throw FormatError(FormatError::Kind::malformed, "sensitivity table skips a layer");
    ++t.layer_count;
    if (t.candidates.empty()) {
      for (const auto& r : rows) t.candidates.push_back(r.candidate);
    }
    t.rows.insert(t.rows.end(), rows.begin(), rows.end());
  }
  try {
    t.validate();
  } catch (const ConfigError& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("sensitivity table: ") + e.what());
  }
  return t;
}

std::string plan_to_json(const LayerPlan& plan) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(plan.kind));
  j["values"] = plan.values;
  j["choice"] = plan.choice;
  j["s_sum"] = plan.s_sum;
  j["e_sum"] = plan.e_sum;
  j["feasible"] = plan.feasible;
  j["budget"] = {{"kind", plan.budget.kind == SearchBudget::Kind::energy_cap ? "energy_cap" : "sensitivity_cap"},
                 {"cap", std::isinf(plan.budget.cap) ? nlohmann::json("inf") : nlohmann::json(plan.budget.cap)}};
  auto frontier = nlohmann::json::array();
  for (const auto& p : plan.frontier) frontier.push_back({{"s_sum", p.s_sum}, {"e_sum", p.e_sum}, {"values", p.values}});
  j["frontier"] = std::move(frontier);
  return j.dump(2) + "\n";
}

LayerPlan plan_from_json(std::string_view text) {
  LayerPlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    plan.kind = parse_param_kind(j.at("kind").get<std::string>());
    plan.values = j.at("values").get<std::vector<int>>();
    plan.choice = j.at("choice").get<std::vector<std::size_t>>();
    plan.s_sum = j.at("s_sum").get<double>();
    plan.e_sum = j.at("e_sum").get<double>();
    plan.feasible = j.at("feasible").get<bool>();
    const auto& b = j.at("budget");
    plan.budget.kind = b.at("kind").get<std::string>() == "energy_cap" ? SearchBudget::Kind::energy_cap
                                                                         : SearchBudget::Kind::sensitivity_cap;
    plan.budget.cap = b.at("cap").is_string() ? std::numeric_limits<double>::infinity() : b.at("cap").get<double>();
    for (const auto& p : j.at("frontier")) {
      plan.frontier.push_back({p.at("s_sum").get<double>(), p.at("e_sum").get<double>(),
                               p.at("values").get<std::vector<int>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("layer plan: ") + e.what());
  }
  return plan;
}

}  // namespace snnc
