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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "snnc/calibration.hpp"
#include "snnc/engine.hpp"
#include "snnc/iat.hpp"
#include "snnc/model_store.hpp"
#include "snnc/pipeline.hpp"
#include "snnc/search.hpp"
#include "snnc/trainer.hpp"

using namespace snnc;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  int failures = 0;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail.clear();
    pass = false;
    if (++failures <= 5) detail += (detail.empty() ? "" : "; ") + what;
    if (failures == 6) detail += "; ...";
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string pct(double x) { return fmt("%.2f%%", 100.0 * x); }

// --- 1 ----------------------------------------------------------------------

Outcome worked_example() {
  Outcome o;
  for (int phi : {1, 2}) {
    NeuronState st{Tensor({1}), Tensor({1})};
    double emitted = 0.0;
    for (float in : {1.5f, 1.5f, 1.0f}) {
      auto r = step_layer(st, Tensor({1}, {in}), {1.0f, 1, phi});
      emitted += r.emitted[0];
      st = r.state;
    }
    const double want_e = phi == 1 ? 3.0 : 4.0, want_v = phi == 1 ? 1.0 : 0.0;
    o.require(emitted == want_e && st.v[0] == want_v,
              "phi=" + std::to_string(phi) + " emitted " + fmt("%g", emitted) + " residual " + fmt("%g", st.v[0]));
    o.note("phi=" + std::to_string(phi) + ": emitted " + fmt("%g", emitted) + ", residual " + fmt("%g", st.v[0]));
  }
  return o;
}

// --- 2 ----------------------------------------------------------------------

Outcome formulas() {
  Outcome o;
  int checked = 0;
  const auto near = [&](double got, double want, const std::string& what) {
    ++checked;
    o.require(std::abs(got - want) <= 1e-6, what + " = " + fmt("%.9g", got) + ", expected " + fmt("%.9g", want));
  };
  near(clip_floor(0.0f, 4, 1.0f, 1), 0.0, "clip_floor(0)");
  near(clip_floor(1.3f, 4, 2.0f, 1), 1.0, "clip_floor(1.3, T=4, v_th=2, phi=1)");
  near(clip_floor(3.0f, 2, 1.0f, 2), 2.0, "clip_floor(3, T=2, v_th=1, phi=2)");
  near(clip_floor(10.0f, 8, 1.0f, 1), 1.0, "clip_floor(10, T=8, v_th=1, phi=1)");
  const EnergyModel em{1e-12, EnergyMode::spike_count};
  near(energy_of_counts(std::vector<double>{0.0}, em), 0.0, "energy(0 spikes)");
  near(energy_of_counts(std::vector<double>{1e6}, em), 1e-3, "energy(1e6 spikes, mu=1e-12)");
  near(entropy(std::vector<double>{1.0, 0.0}), 0.0, "H(one-hot)");
  near(entropy(std::vector<double>(10, 0.1)), std::log(10.0), "H(uniform 10)");
  near(entropy(std::vector<double>{0.5, 0.5}), std::log(2.0), "H(0.5, 0.5)");
  near(entropy(std::vector<double>{0.9, 0.1}), 0.325082973, "H(0.9, 0.1)");
  near(confidence(std::vector<float>{std::log(9.0f), 0.0f}), 1.0 - 0.325082973 / std::log(2.0), "c(0.9, 0.1)");
  near(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}), std::log(2.0), "KL((1,0)||(.5,.5))");
  const auto p = make_exit_policy({1.5, 1.0, 2.0}, 0.7, 0.2, 0.5);
  near(p.alpha[1], 0.9, "alpha at min entropy");
  near(p.alpha[0], 0.7 + 0.2 * std::exp(-1.0), "alpha one delta above min");
  near(p.alpha[2], 0.7 + 0.2 * std::exp(-2.0), "alpha two deltas above min");
  const auto flat = make_exit_policy({1.5, 1.0, 2.0}, 0.7, 0.0, 0.5);
  for (double a : flat.alpha) near(a, 0.7, "alpha with beta=0");
  o.note(std::to_string(checked) + " hand values within 1e-6");
  return o;
}

// --- 3 ----------------------------------------------------------------------

ModelGraph one_layer(std::mt19937_64& rng, std::size_t in, std::size_t out) {
  ModelGraph m;
  m.input_shape = {in};
  m.class_count = 2;
  auto d = LayerSpec::dense(in, out);
  auto r = LayerSpec::dense(out, 2);
  std::normal_distribution<float> g(0.0f, 1.0f / std::sqrt(float(in)));
  d.weight = Tensor({out, in});
  d.bias = Tensor({out});
  for (auto& w : d.weight.data()) w = g(rng);
  for (auto& b : d.bias.data()) b = 0.2f * g(rng);
  r.weight = Tensor({2, out});
  r.bias = Tensor({2});
  m.layers = {d, LayerSpec::relu(), r};
  return m;
}

Outcome rate_convergence() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.5f), vth(0.25f, 2.0f);
  std::uniform_int_distribution<int> small(1, 3);
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t T : {8u, 64u, 512u}) {
    for (int c = 0; c < 200; ++c, ++cases) {
      const auto m = one_layer(rng, 6, 10);
      Tensor x({4, 6});
      for (auto& v : x.data()) v = u(rng);
      const LayerSnnConfig cfg{vth(rng), small(rng), small(rng)};
      const float V = cfg.threshold();
      const auto r = run_snn(m, std::vector<LayerSnnConfig>{cfg}, x, T);
      const auto drive = apply_linear(m.layers[0], x, 0);
      // clip_floor with the effective threshold V = rho * v_th.
      const auto ideal = clip_floor(drive, T, V, cfg.phi);
      for (std::size_t i = 0; i < ideal.size(); ++i) {
        const double gap = std::abs(double(r.rates[0][i]) - ideal[i]);
        worst = std::max(worst, gap / (V / double(T)));
        // Both sides are single-precision roundings; allow a few ulps.
        const double ulps = 4.0 * std::numeric_limits<float>::epsilon() *
                            std::max(std::abs(double(r.rates[0][i])), std::abs(double(ideal[i])));
        if (gap > V / double(T) + ulps) {
          o.require(false, "T=" + std::to_string(T) + " case " + std::to_string(c) + " gap " + fmt("%g", gap) + " at V/T " + fmt("%g", V / double(T)));
        }
      }
    }
  }
  o.note(std::to_string(cases) + " cases; worst gap " + fmt("%.3f", worst) + " * V/T");
  return o;
}

// --- 4 ----------------------------------------------------------------------

Outcome conservation() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> small(1, 3);
  std::uniform_real_distribution<float> vth(0.2f, 1.5f), init(0.0f, 0.9f);
  std::uniform_int_distribution<std::size_t> steps(1, 40);
  double worst = 0.0;
  for (int run = 0; run < 200; ++run) {
    ModelGraph m;
    if (run % 2 == 0) {
      const std::vector<std::size_t> hidden{std::size_t(8 + run % 7), 6, std::size_t(4 + run % 3)};
      m = make_mlp({5}, hidden, 3, std::uint64_t(run));
    } else {
      const std::vector<std::size_t> ch{3, 4};
      m = make_cnn({1, 8, 8}, ch, 12, 3, std::uint64_t(run));
    }
    std::normal_distribution<float> g(0.0f, 0.3f);
    for (auto& l : m.layers)
      if (l.has_parameters())
        for (auto& b : l.bias.data()) b = g(rng);
    Shape s{3};
    s.insert(s.end(), m.input_shape.begin(), m.input_shape.end());
    Tensor x(s);
    std::normal_distribution<float> xin(0.5f, 1.0f);
    for (auto& v : x.data()) v = xin(rng);
    std::vector<LayerSnnConfig> cfg;
    for (std::size_t k = 0; k < m.spiking_layers().size(); ++k) cfg.push_back({vth(rng), small(rng), small(rng)});
    RunOptions opt;
    opt.initial_membrane = init(rng);
    const auto r = run_snn(m, cfg, x, steps(rng), opt);
    for (const auto& l : r.stats.ledger) {
      const double gap =
          std::abs(l.input_charge - (l.emitted_charge + (l.final_membrane - l.initial_membrane)));
      worst = std::max(worst, gap);
      if (gap > 1e-4) o.require(false, "run " + std::to_string(run) + " off by " + fmt("%g", gap));
    }
  }
  o.note("200 runs; worst per-layer imbalance " + fmt("%.3g", worst));
  return o;
}

// --- 5 ----------------------------------------------------------------------

Outcome pareto() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> layers(1, 3), cands(1, 4);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  const double inf = std::numeric_limits<double>::infinity();
  int on_hull = 0, exact = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto kind = trial % 2 == 0 ? ParamKind::phi : ParamKind::rho;
    const auto t = oracle::random_table(rng, kind, layers(rng), cands(rng));
    const bool phi = kind == ParamKind::phi;
    const auto all = oracle::enumerate(t);
    double lo = inf, hi = 0.0;
    for (const auto& p : all) {
      lo = std::min(lo, phi ? p.e : p.s);
      hi = std::max(hi, phi ? p.e : p.s);
    }
    const double cap = lo + frac(rng) * (hi - lo) + 1e-9;
    const auto plan = pareto_search(t, phi ? SearchBudget::energy(cap) : SearchBudget::sensitivity(cap));
    const double obj = phi ? plan.s_sum : plan.e_sum, res = phi ? plan.e_sum : plan.s_sum;
    const std::string id = "table " + std::to_string(trial);
    o.require(plan.feasible && res <= cap, id + " infeasible");
    const oracle::Plan* best = nullptr;
    for (const auto& p : all) {
      const double r = phi ? p.e : p.s, v = phi ? p.s : p.e;
      if (r > cap) continue;
      if (!best || v < (phi ? best->s : best->e)) best = &p;
      if (oracle::dominates(p, plan.s_sum, plan.e_sum))
        o.require(false, id + " returned a dominated plan");
      if (oracle::on_lower_hull(all, phi, p) && v < obj - 1e-12) o.require(false, id + " misses a hull plan");
    }
    if (best && oracle::on_lower_hull(all, phi, *best)) {
      ++on_hull;
      o.require(std::abs((phi ? best->s : best->e) - obj) <= 1e-12, id + " misses the hull optimum");
    }
    if (best && std::abs((phi ? best->s : best->e) - obj) <= 1e-12) ++exact;
    for (std::size_t i = 0; i < plan.frontier.size(); ++i)
      for (std::size_t j = 0; j < plan.frontier.size(); ++j)
        if (i != j && plan.frontier[i].s_sum <= plan.frontier[j].s_sum &&
            plan.frontier[i].e_sum <= plan.frontier[j].e_sum &&
            (plan.frontier[i].s_sum < plan.frontier[j].s_sum || plan.frontier[i].e_sum < plan.frontier[j].e_sum))
          o.require(false, id + " frontier holds a dominated point");
  }
  o.note("50 tables; optimum on hull in " + std::to_string(on_hull) + ", exact optimum found in " +
         std::to_string(exact));
  return o;
}

// --- 6-10: the fixture ------------------------------------------------------

struct Fixture {
  RunConfig cfg;
  Dataset train, test;
  TrainResult trained;
  Conversion conv;
  SearchOutcome phi, rho;
  std::vector<LayerSnnConfig> phi_cfg, both_cfg;
  ExitSweep sweep, sweep_all;
  AblationReport ablation;
  std::vector<std::string> reports;
};

std::unique_ptr<Fixture> build_fixture() {
  auto f = std::make_unique<Fixture>();
  auto& cfg = f->cfg;
  std::tie(f->train, f->test) = load_splits(cfg);
  f->trained = train_model(cfg, f->train, f->test);
  f->conv = convert_model(f->trained.model, f->train, cfg);
  const auto& m = f->conv.model;
  f->phi = search_phi(m, f->conv.configs, f->conv.cache, cfg);
  f->phi_cfg = apply_plan(f->conv.configs, f->phi.plan);
  f->rho = search_rho(m, f->phi_cfg, f->conv.cache, cfg);
  f->both_cfg = apply_plan(f->phi_cfg, f->rho.plan);
  f->sweep = sweep_exit(m, f->phi_cfg, f->conv.cache, f->test, cfg.t_max, cfg.energy);
  f->sweep_all = sweep_exit(m, f->both_cfg, f->conv.cache, f->test, cfg.t_max, cfg.energy);
  f->ablation = run_ablation(m, f->conv.configs, f->conv.cache, f->phi.plan, f->rho.plan, f->test, cfg);

  const auto bytes = serialize_model(m);
  f->reports = {std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                configs_to_json(f->both_cfg, cfg.timesteps),
                calibration_report(f->conv.fits, f->conv.configs, f->conv.metrics, cfg.timesteps),
                table_to_csv(f->phi.table),
                plan_to_json(f->phi.plan),
                table_to_csv(f->rho.table),
                plan_to_json(f->rho.plan),
                sweep_to_csv(f->sweep),
                sweep_to_csv(f->sweep_all),
                ablation_to_csv(f->ablation),
                accuracy_vs_t_csv(m, f->both_cfg, f->test, cfg.report_timesteps, cfg.energy),
                frontier_csv(f->phi.plan) + frontier_csv(f->rho.plan)};
  return f;
}

Fixture& fixture() {
  static auto f = build_fixture();
  return *f;
}

Outcome adafire() {
  Outcome o;
  auto& f = fixture();
  const auto& m = f.conv.model;
  const auto T = f.cfg.timesteps;
  o.require(f.trained.test_accuracy >= 0.99, "ANN test accuracy " + pct(f.trained.test_accuracy));
  const auto base = evaluate_fixed(m, f.conv.configs, f.test, T, f.cfg.energy);
  const auto tuned = evaluate_fixed(m, f.phi_cfg, f.test, T, f.cfg.energy);
  o.require(tuned.accuracy >= base.accuracy,
            "phi plan accuracy " + pct(tuned.accuracy) + " below phi=1 " + pct(base.accuracy));
  const double u1 = measure_unevenness(m, f.conv.configs, f.conv.cache, 8).mean_abs_error();
  const double u2 = measure_unevenness(m, f.phi_cfg, f.conv.cache, 8).mean_abs_error();
  const double cut = 1.0 - u2 / u1;
  o.require(cut >= 0.30, "unevenness reduced only " + pct(cut));
  std::string plan;
  for (int v : f.phi.plan.values) plan += (plan.empty() ? "" : ",") + std::to_string(v);
  o.note("ANN " + pct(f.trained.test_accuracy) + "; T=4 phi=1 " + pct(base.accuracy) + ", phi plan [" + plan +
         "] " + pct(tuned.accuracy) + "; T=8 mean |error| " + fmt("%.4f", u1) + " -> " + fmt("%.4f", u2) + " (-" +
         pct(cut) + ")");
  const auto& t = f.phi.table;
  const double first = t.at(0, 0).sensitivity - t.at(0, 1).sensitivity;
  const double last = t.at(t.layer_count - 1, 0).sensitivity - t.at(t.layer_count - 1, 1).sensitivity;
  o.note("S drop phi 1->2: first layer " + fmt("%.4f", first) + ", last " + fmt("%.4f", last));
  return o;
}

Outcome ssc() {
  Outcome o;
  auto& f = fixture();
  const auto T = f.cfg.timesteps;
  const auto a = evaluate_fixed(f.conv.model, f.phi_cfg, f.test, T, f.cfg.energy);
  const auto b = evaluate_fixed(f.conv.model, f.both_cfg, f.test, T, f.cfg.energy);
  const double cut = 1.0 - double(b.spikes) / double(a.spikes);
  const double drop = a.accuracy - b.accuracy;
  o.require(cut >= 0.20, "spikes reduced only " + pct(cut));
  o.require(drop <= 0.01 + 1e-12, "accuracy drop " + pct(drop));
  std::string plan;
  for (int v : f.rho.plan.values) plan += (plan.empty() ? "" : ",") + std::to_string(v);
  o.note("rho plan [" + plan + "]; spikes " + std::to_string(a.spikes) + " -> " + std::to_string(b.spikes) + " (-" +
         pct(cut) + "); accuracy " + pct(a.accuracy) + " -> " + pct(b.accuracy));
  return o;
}

// Evaluated on the burst-cap configuration, as in the +AdaFire+IAT ablation
// row; the configuration with the threshold-ratio plan is reported alongside.
Outcome iat() {
  Outcome o;
  auto& f = fixture();
  const auto& m = f.conv.model;
  const auto& cfg = f.phi_cfg;
  const double t_max = double(f.cfg.t_max);
  const auto best_of = [&](const ExitSweep& sweep) {
    const SweepRow* best = nullptr;
    for (const auto& r : sweep.rows) {
      if (r.mean_t <= 0.75 * t_max && r.accuracy >= sweep.fixed.accuracy - 0.01 - 1e-12) {
        if (!best || r.mean_t < best->mean_t) best = &r;
      }
    }
    return best;
  };
  const SweepRow* best = best_of(f.sweep);
  o.require(best != nullptr, "no grid point exits early enough without losing accuracy");

  // beta = 0 against a plain fixed-boundary loop.
  const std::vector<std::size_t> rows = [] {
    std::vector<std::size_t> r(200);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
    return r;
  }();
  const auto x = f.test.images.gather_rows(rows);
  std::size_t mismatches = 0;
  for (double base : {0.5, 0.7, 0.9}) {
    const auto policy = fit_exit_policy(m, cfg, f.conv.cache, f.cfg.t_max, base, 0.0, 1.0);
    const auto trace = infer_adaptive(m, cfg, policy, x);
    SnnSimulator sim(m, cfg, x);
    std::vector<std::size_t> exit(rows.size(), 0);
    std::vector<std::uint64_t> spikes(rows.size(), 0);
    for (std::size_t t = 1; t <= f.cfg.t_max; ++t) {
      sim.step();
      const auto s = sim.scores();
      const std::size_t width = s.size() / rows.size();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (exit[i]) continue;
        const std::span<const float> row(s.data().data() + i * width, width);
        if (confidence(row) >= base || t == f.cfg.t_max) {
          exit[i] = t;
          for (std::size_t k = 0; k < sim.spiking_layer_count(); ++k) spikes[i] += sim.sample_spikes(k, i);
        }
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (trace.records[i].exit_t != exit[i] || trace.records[i].spikes != spikes[i]) ++mismatches;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " beta=0 exits differ from the fixed-boundary loop");
  if (best) {
    o.note("phi plan, fixed T_max=" + std::to_string(f.cfg.t_max) + " " + pct(f.sweep.fixed.accuracy) +
           "; alpha_base " + fmt("%g", best->alpha_base) + " beta " + fmt("%g", best->beta) + " delta " +
           fmt("%g", best->delta) + ": mean T " + fmt("%.3f", best->mean_t) + ", " + pct(best->accuracy));
  }
  for (const auto& r : f.sweep.rows) {
    if (r.alpha_base == 0.7 && r.beta == 0.2 && r.delta == 1.0) {
      o.note("defaults (0.7, 0.2, 1): mean T " + fmt("%.3f", r.mean_t) + ", " + pct(r.accuracy));
    }
  }
  const SweepRow* all = best_of(f.sweep_all);
  o.note(std::string("with the rho plan too: ") +
         (all ? "mean T " + fmt("%.3f", all->mean_t) + ", " + pct(all->accuracy)
              : "no grid point within 1pp of " + pct(f.sweep_all.fixed.accuracy)));
  o.note("beta=0 matches on 600 exits");
  return o;
}

Outcome ablation() {
  Outcome o;
  const auto& r = fixture().ablation.rows;
  if (r.size() != 5) {
    o.require(false, "expected 5 ablation rows");
    return o;
  }
  const auto e = [&](std::size_t i) { return r[i].eval.energy; };
  o.require(e(1) > e(0), "+AdaFire does not raise energy");
  o.require(r[1].eval.accuracy > r[0].eval.accuracy, "+AdaFire does not raise accuracy");
  o.require(e(2) < e(1), "+SSC does not lower energy");
  o.require(e(3) < e(1), "+IAT does not lower energy");
  o.require(e(4) < e(0), "all three do not lower energy below baseline");
  std::string s;
  for (const auto& row : r) s += (s.empty() ? "" : ", ") + row.name + " " + fmt("%+.1f%%", row.energy_delta_pct);
  o.note(s + "; accuracy " + pct(r[0].eval.accuracy) + " -> " + pct(r[1].eval.accuracy));
  return o;
}

Outcome determinism() {
  Outcome o;
  const auto again = build_fixture();
  const auto& a = fixture().reports;
  const auto& b = again->reports;
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bytes += a[i].size();
    o.require(a[i] == b[i], "report " + std::to_string(i) + " differs between runs");
  }
  o.note(std::to_string(a.size()) + " reports, " + std::to_string(bytes) + " bytes identical");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"worked example", worked_example},
      {"formula values", formulas},
      {"rate convergence", rate_convergence},
      {"charge conservation", conservation},
      {"pareto search vs exhaustive", pareto},
      {"burst cap benefit", adafire},
      {"threshold ratio benefit", ssc},
      {"adaptive timesteps", iat},
      {"ablation directions", ablation},
      {"determinism", determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s, %.2fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed;
}
