#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "advtext/baselines.hpp"
#include "advtext/greedy.hpp"
#include "advtext/gumbel_attack.hpp"
#include "advtext/outcome.hpp"
#include "advtext/synthetic.hpp"
#include "advtext/victim.hpp"

namespace advtext {

enum class AttackMethod {
  Greedy,
  Gumbel,
  Delete1,
  Saliency,
  ProjectedFgsm,
  SaliencyFgsm,
  DeepWordBug,
  Random
};

inline const char* method_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::Greedy: return "greedy";
    case AttackMethod::Gumbel: return "gumbel";
    case AttackMethod::Delete1: return "delete1";
    case AttackMethod::Saliency: return "saliency";
    case AttackMethod::ProjectedFgsm: return "projected_fgsm";
    case AttackMethod::SaliencyFgsm: return "saliency_fgsm";
    case AttackMethod::DeepWordBug: return "deepwordbug";
    case AttackMethod::Random: return "random";
  }
  throw std::logic_error("unknown method");
}

inline AttackMethod parse_method(const std::string& name) {
  for (AttackMethod m : {AttackMethod::Greedy, AttackMethod::Gumbel, AttackMethod::Delete1,
                         AttackMethod::Saliency, AttackMethod::ProjectedFgsm,
                         AttackMethod::SaliencyFgsm, AttackMethod::DeepWordBug,
                         AttackMethod::Random})
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown attack method: " + name);
}

// Everything needed to run any method on a sample.
struct AttackContext {
  const VictimModel* model = nullptr;
  const SubDictionary* pool = nullptr;
  const IdentifierParams* alpha = nullptr;  // gumbel only
  const PerturberParams* theta = nullptr;   // gumbel only
  double dwb_weight = 0.5;
  uint64_t seed = 0;
  bool stop_on_flip = false;
};

// Per-sample RNG streams keep randomized methods reproducible and order
// independent across samples.
inline AttackOutcome run_attack(AttackMethod method, const AttackContext& ctx,
                                const TokenSequence& x, int k, uint64_t sample_index) {
  const VictimModel& model = *ctx.model;
  SplitRng rng = SplitRng(ctx.seed).split(900).split(sample_index);
  if (method == AttackMethod::Gumbel) {
    if (!ctx.alpha || !ctx.theta)
      throw std::invalid_argument("gumbel attack requires trained identifier and perturber");
    return gumbel_attack_apply(model, *ctx.alpha, *ctx.theta, x, k);
  }
  PreparedSample prep = prepare_sample(model, x);
  switch (method) {
    case AttackMethod::Greedy:
      return greedy_attack(model, prep, k, *ctx.pool, ctx.stop_on_flip);
    case AttackMethod::Delete1:
      return delete1_attack(model, prep, k);
    case AttackMethod::Saliency:
      return saliency_attack(model, prep, k);
    case AttackMethod::ProjectedFgsm:
      return projected_fgsm_attack(model, prep, k, *ctx.pool, rng);
    case AttackMethod::SaliencyFgsm:
      return saliency_fgsm_attack(model, prep, k, *ctx.pool);
    case AttackMethod::DeepWordBug:
      return deepwordbug_attack(model, prep, k, ctx.dwb_weight, *ctx.pool, rng);
    case AttackMethod::Random:
      return random_attack(model, prep, k, *ctx.pool, rng);
    default:
      throw std::logic_error("unhandled method");
  }
}

// One measured point of an accuracy-vs-k curve.
struct CurvePoint {
  std::string method;
  int k = 0;
  int n_samples = 0;
  double alignment_accuracy = 1.0;
  double success_rate = 0.0;  // always exactly 1 - alignment_accuracy
  double mean_evals = 0.0;
  double mean_wall_clock = 0.0;
  double train_time = 0.0;
  double ground_truth_accuracy = 0.0;
};

struct TransferResult {
  std::string source_model;
  std::string target_model;
  int k = 0;
  double target_alignment = 0.0;
};

struct ExperimentConfig {
  std::vector<int> ks;
  uint64_t seed = 0;
  double train_time = 0.0;    // attacker training wall time, reported per row
  bool record_timing = true;  // false zeroes the timing columns for bytewise runs
};

inline void validate_ks(const std::vector<int>& ks, int d) {
  if (ks.empty()) throw std::invalid_argument("empty k list");
  for (size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 0 || ks[i] > d) throw std::invalid_argument("k out of range");
    if (i > 0 && ks[i] <= ks[i - 1])
      throw std::invalid_argument("k list must be strictly increasing");
  }
}

// Attacks every sample at every k. Outcomes, when requested, are appended in
// (k, sample) order, matching the outcome CSV layout.
inline std::vector<CurvePoint> run_attack_curve(AttackMethod method, const AttackContext& ctx,
                                                const LabeledDataset& data,
                                                const ExperimentConfig& cfg,
                                                std::vector<AttackOutcome>* outcomes = nullptr,
                                                std::vector<int>* outcome_ks = nullptr) {
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  validate_ks(cfg.ks, data.xs[0].length());

  std::vector<CurvePoint> points;
  for (int k : cfg.ks) {
    CurvePoint pt;
    pt.method = method_name(method);
    pt.k = k;
    pt.n_samples = static_cast<int>(data.size());
    pt.train_time = cfg.record_timing ? cfg.train_time : 0.0;
    int aligned = 0;
    int true_correct = 0;
    double evals = 0.0, wall = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
      AttackOutcome out = run_attack(method, ctx, data.xs[i], k, i);
      aligned += 1 - out.success;
      true_correct += out.final_class == data.labels[i] ? 1 : 0;
      evals += static_cast<double>(out.evals_used);
      wall += out.wall_clock;
      if (!cfg.record_timing) out.wall_clock = 0.0;
      if (outcomes) outcomes->push_back(std::move(out));
      if (outcome_ks) outcome_ks->push_back(k);
    }
    pt.alignment_accuracy = static_cast<double>(aligned) / data.size();
    pt.success_rate = 1.0 - pt.alignment_accuracy;
    pt.mean_evals = evals / data.size();
    pt.mean_wall_clock = cfg.record_timing ? wall / data.size() : 0.0;
    pt.ground_truth_accuracy = static_cast<double>(true_correct) / data.size();
    points.push_back(pt);
  }
  return points;
}

// Fraction of outcomes where the target model predicts the same class for
// the perturbed input as for the original.
inline TransferResult transfer_eval(const std::vector<AttackOutcome>& outcomes,
                                    const VictimModel& target, const std::string& source_name,
                                    const std::string& target_name, int k) {
  if (outcomes.empty()) throw std::invalid_argument("no outcomes to transfer");
  int aligned = 0;
  for (const AttackOutcome& out : outcomes) {
    int orig = target.predict(out.x_orig).argmax();
    int perturbed = target.predict(out.x_tilde).argmax();
    aligned += orig == perturbed ? 1 : 0;
  }
  TransferResult result;
  result.source_model = source_name;
  result.target_model = target_name;
  result.k = k;
  result.target_alignment = static_cast<double>(aligned) / outcomes.size();
  return result;
}

// --- exports -----------------------------------------------------------------

// 6 significant digits, C locale, no grouping.
inline std::string fmt_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* kCurveHeader =
    "method,k,n_samples,alignment_accuracy,success_rate,mean_evals,mean_wall_clock_s,"
    "train_time_s,ground_truth_accuracy";

inline void write_curve_csv(const std::vector<CurvePoint>& points, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kCurveHeader << '\n';
  for (const auto& p : points) {
    out << p.method << ',' << p.k << ',' << p.n_samples << ',' << fmt_g6(p.alignment_accuracy)
        << ',' << fmt_g6(p.success_rate) << ',' << fmt_g6(p.mean_evals) << ','
        << fmt_g6(p.mean_wall_clock) << ',' << fmt_g6(p.train_time) << ','
        << fmt_g6(p.ground_truth_accuracy) << '\n';
  }
}

inline std::vector<CurvePoint> parse_curve_csv(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines[0] != kCurveHeader)
    throw std::runtime_error("bad curve csv header");
  std::vector<CurvePoint> points;
  for (size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    std::istringstream in(lines[r]);
    std::string field;
    CurvePoint p;
    std::getline(in, p.method, ',');
    auto next = [&]() {
      std::getline(in, field, ',');
      return field;
    };
    p.k = std::stoi(next());
    p.n_samples = std::stoi(next());
    p.alignment_accuracy = std::stod(next());
    p.success_rate = std::stod(next());
    p.mean_evals = std::stod(next());
    p.mean_wall_clock = std::stod(next());
    p.train_time = std::stod(next());
    p.ground_truth_accuracy = std::stod(next());
    points.push_back(p);
  }
  return points;
}

inline const char* kOutcomeHeader =
    "sample_id,k,positions,original_tokens,replacement_tokens,success,surrogate,evals_used,"
    "wall_clock_s";

template <typename T, typename F>
std::string join_semicolon(const std::vector<T>& items, F&& f) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ';';
    out += f(items[i]);
  }
  return out;
}

// Outcome rows in (k, sample) order; token lists are surface strings.
inline void write_outcome_csv(const std::vector<AttackOutcome>& outcomes,
                              const std::vector<int>& ks, const Vocabulary& vocab,
                              const std::string& path) {
  if (outcomes.size() != ks.size())
    throw std::invalid_argument("one k per outcome required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kOutcomeHeader << '\n';
  int sample_id = 0;
  int prev_k = ks.empty() ? 0 : ks[0];
  for (size_t r = 0; r < outcomes.size(); ++r) {
    const AttackOutcome& o = outcomes[r];
    if (ks[r] != prev_k) {
      prev_k = ks[r];
      sample_id = 0;
    }
    out << sample_id++ << ',' << ks[r] << ','
        << join_semicolon(o.positions, [](int p) { return std::to_string(p); }) << ','
        << join_semicolon(o.positions,
                          [&](int p) { return vocab.token_of(o.x_orig.ids[p]); })
        << ','
        << join_semicolon(o.replacements, [&](int w) { return vocab.token_of(w); }) << ','
        << o.success << ',' << fmt_g6(o.surrogate) << ',' << o.evals_used << ','
        << fmt_g6(o.wall_clock) << '\n';
  }
}

inline void export_curve_json(const std::vector<CurvePoint>& points, const std::string& path) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : points) {
    rows.push_back({{"method", p.method},
                    {"k", p.k},
                    {"n_samples", p.n_samples},
                    {"alignment_accuracy", p.alignment_accuracy},
                    {"success_rate", p.success_rate},
                    {"mean_evals", p.mean_evals},
                    {"mean_wall_clock_s", p.mean_wall_clock},
                    {"train_time_s", p.train_time},
                    {"ground_truth_accuracy", p.ground_truth_accuracy}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << rows.dump(2) << '\n';
}

inline std::vector<CurvePoint> import_curve_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json rows = nlohmann::json::parse(in);
  std::vector<CurvePoint> points;
  for (const auto& r : rows) {
    CurvePoint p;
    p.method = r.at("method").get<std::string>();
    p.k = r.at("k").get<int>();
    p.n_samples = r.at("n_samples").get<int>();
    p.alignment_accuracy = r.at("alignment_accuracy").get<double>();
    p.success_rate = r.at("success_rate").get<double>();
    p.mean_evals = r.at("mean_evals").get<double>();
    p.mean_wall_clock = r.at("mean_wall_clock_s").get<double>();
    p.train_time = r.at("train_time_s").get<double>();
    p.ground_truth_accuracy = r.at("ground_truth_accuracy").get<double>();
    points.push_back(p);
  }
  return points;
}

// gnuplot-friendly blocks: one indexed block per method, "k alignment success"
inline void write_curve_dat(const std::vector<CurvePoint>& points, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  std::string current;
  bool first = true;
  for (const auto& p : points) {
    if (p.method != current) {
      if (!first) out << "\n\n";
      out << "# method: " << p.method << '\n';
      current = p.method;
      first = false;
    }
    out << p.k << ' ' << fmt_g6(p.alignment_accuracy) << ' ' << fmt_g6(p.success_rate) << '\n';
  }
}

// Static SVG of alignment accuracy vs k, one polyline per method.
inline void write_curve_svg(const std::vector<CurvePoint>& points, const std::string& path) {
  const int width = 640, height = 440;
  const double ml = 60, mr = 20, mt = 20, mb = 50;
  int kmax = 1;
  for (const auto& p : points) kmax = std::max(kmax, p.k);
  auto sx = [&](double k) { return ml + (width - ml - mr) * (k / kmax); };
  auto sy = [&](double a) { return mt + (height - mt - mb) * (1.0 - a); };

  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::vector<std::string> methods;
  for (const auto& p : points)
    if (methods.empty() || methods.back() != p.method) methods.push_back(p.method);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << sy(0) << "\" x2=\"" << width - mr << "\" y2=\""
      << sy(0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << sy(0) << "\" x2=\"" << ml << "\" y2=\"" << sy(1)
      << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 10; tick += 2) {
    double a = tick / 10.0;
    out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(a) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_g6(a) << "</text>\n";
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"13\" text-anchor=\"middle\">perturbed features k</text>\n";
  out << "<text x=\"14\" y=\"" << (mt + height - mb) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (mt + height - mb) / 2 << ")\">alignment accuracy</text>\n";

  for (size_t m = 0; m < methods.size(); ++m) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[m % 8] << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : points)
      if (p.method == methods[m]) out << sx(p.k) << ',' << sy(p.alignment_accuracy) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << width - mr - 150 << "\" y=\"" << mt + 16 + 16 * m
        << "\" font-size=\"12\" fill=\"" << colors[m % 8] << "\">" << methods[m] << "</text>\n";
  }
  out << "</svg>\n";
}

// Flat "key = value" config echo; sorted keys so runs are byte-comparable.
inline void write_resolved_config(const std::map<std::string, std::string>& kv,
                                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& [key, value] : kv) out << key << " = " << value << '\n';
}

}  // namespace advtext
