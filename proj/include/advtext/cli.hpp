#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advtext/corpus.hpp"
#include "advtext/harness.hpp"
#include "advtext/synthetic.hpp"
#include "advtext/toy_victims.hpp"

namespace advtext {

namespace cli {

// Flat "key = value" option files: keys are the long option names without
// the leading dashes. Values given on the command line win; file values fill
// the rest. Lines starting with '#' are comments.
inline std::vector<std::string> expand_config_args(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) != 0) continue;
    size_t eq = a.find('=');
    given.insert(eq == std::string::npos ? a.substr(2) : a.substr(2, eq - 2));
  }

  auto trim = [](std::string s) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  for (const std::string& raw : read_lines(config_path)) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config file line is not key = value: " + raw);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config file line has no key: " + raw);
    if (!given.count(key)) args.push_back("--" + key + "=" + value);
  }
  return args;
}

inline std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream in(csv);
  std::string field;
  while (std::getline(in, field, ',')) {
    if (!field.empty()) out.push_back(std::stoi(field));
  }
  if (out.empty()) throw std::invalid_argument("empty integer list: " + csv);
  return out;
}

inline TokenUnit parse_unit(const std::string& name) {
  if (name == "word") return TokenUnit::Word;
  if (name == "char") return TokenUnit::Character;
  throw std::invalid_argument("unit must be word or char");
}

inline LabeledDataset load_dataset(const std::string& texts_path, const std::string& labels_path,
                                   const Vocabulary& vocab, int d) {
  LabeledDataset data;
  std::vector<std::string> texts = read_lines(texts_path);
  for (const auto& t : texts) data.xs.push_back(encode(t, vocab, d));
  if (!labels_path.empty()) {
    data.labels = read_labels(labels_path);
    if (data.labels.size() != data.xs.size())
      throw std::runtime_error("label count does not match document count");
  } else {
    data.labels.assign(data.xs.size(), 0);
  }
  return data;
}

inline SubDictionary make_pool(const Vocabulary& vocab, int subdict_size, bool alphabet) {
  return alphabet ? alphabet_subdict(vocab) : top_frequency_subdict(vocab, subdict_size);
}

struct CommonOpts {
  std::string victim_path, vocab_path, input_path, labels_path;
  std::string identifier_path, perturber_path;
  std::string unit = "word";
  int seq_len = 30;
  int subdict_size = 500;
  bool subdict_alphabet = false;
  bool black_box = false;
  bool stop_on_flip = false;
  double dwb_weight = 0.5;
  uint64_t seed = 0;
};

inline void add_config_sink(CLI::App* cmd) {
  static std::string sink;
  cmd->add_option("--config", sink, "flat key = value option file (flags override it)");
}

inline void add_common(CLI::App* cmd, CommonOpts& o, bool with_method_extras = true) {
  add_config_sink(cmd);
  cmd->add_option("--victim", o.victim_path, "victim checkpoint")->required();
  cmd->add_option("--vocab", o.vocab_path, "vocabulary tsv")->required();
  cmd->add_option("--input", o.input_path, "documents, one per line")->required();
  cmd->add_option("--labels", o.labels_path, "labels, one per line");
  cmd->add_option("--unit", o.unit, "token unit: word|char");
  cmd->add_option("--seq-len", o.seq_len, "sequence length d");
  cmd->add_option("--subdict-size", o.subdict_size, "replacement pool size (top frequency)");
  cmd->add_flag("--subdict-alphabet", o.subdict_alphabet, "use all non-reference tokens");
  cmd->add_flag("--black-box", o.black_box, "hide the victim's gradient surface");
  cmd->add_option("--seed", o.seed, "master seed");
  if (with_method_extras) {
    cmd->add_option("--identifier", o.identifier_path, "identifier checkpoint (gumbel)");
    cmd->add_option("--perturber", o.perturber_path, "perturber checkpoint (gumbel)");
    cmd->add_option("--dwb-weight", o.dwb_weight, "deepwordbug score mix in [0,1]");
    cmd->add_flag("--stop-on-flip", o.stop_on_flip, "greedy: stop once the label flips");
  }
}

struct LoadedAttack {
  std::unique_ptr<VictimModel> owned_victim;
  std::unique_ptr<BlackBoxModel> black_box;
  const VictimModel* model = nullptr;
  Vocabulary vocab;
  LabeledDataset data;
  SubDictionary pool;
  IdentifierParams alpha;
  PerturberParams theta;
  bool has_attacker = false;
  AttackContext ctx;
};

inline LoadedAttack load_attack_inputs(const CommonOpts& o) {
  LoadedAttack la;
  la.owned_victim = load_victim(o.victim_path);
  la.model = la.owned_victim.get();
  if (o.black_box) {
    la.black_box = std::make_unique<BlackBoxModel>(*la.owned_victim);
    la.model = la.black_box.get();
  }
  la.vocab = read_vocabulary(o.vocab_path, parse_unit(o.unit));
  la.data = load_dataset(o.input_path, o.labels_path, la.vocab, o.seq_len);
  la.pool = make_pool(la.vocab, o.subdict_size, o.subdict_alphabet);
  if (!o.identifier_path.empty() && !o.perturber_path.empty()) {
    la.alpha = load_identifier(o.identifier_path);
    la.theta = load_perturber(o.perturber_path);
    la.has_attacker = true;
  }
  la.ctx.model = la.model;
  la.ctx.pool = &la.pool;
  la.ctx.alpha = la.has_attacker ? &la.alpha : nullptr;
  la.ctx.theta = la.has_attacker ? &la.theta : nullptr;
  la.ctx.dwb_weight = o.dwb_weight;
  la.ctx.seed = o.seed;
  la.ctx.stop_on_flip = o.stop_on_flip;
  return la;
}

inline void echo_config(const std::map<std::string, std::string>& kv, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_resolved_config(kv, (std::filesystem::path(dir) / "run_config.txt").string());
}

inline std::string fmt_u64(uint64_t v) { return std::to_string(v); }

// --- subcommands ------------------------------------------------------------

inline int cmd_synth_data(const std::string& out_dir, int classes, int seq_len, int vocab_size,
                          int planted_per_class, double planting_rate, double heavy_rate,
                          int heavy_copies, int n_train, int n_test, uint64_t seed) {
  SyntheticTaskSpec spec;
  spec.num_classes = classes;
  spec.d = seq_len;
  spec.vocab_size = vocab_size;
  spec.planting_rate = planting_rate;
  spec.heavy_rate = heavy_rate;
  spec.heavy_copies = heavy_copies;
  spec.noise_seed = seed;
  int next_id = 1;
  for (int c = 0; c < classes; ++c) {
    std::vector<int> set;
    for (int j = 0; j < planted_per_class; ++j) set.push_back(next_id++);
    spec.planted_tokens_per_class.push_back(set);
  }

  PlantedCorpus corpus = make_planted_corpus(spec, n_train, n_test);
  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);

  auto dump_split = [&](const LabeledDataset& split, const std::string& stem) {
    std::vector<std::string> texts;
    texts.reserve(split.size());
    for (const auto& x : split.xs) texts.push_back(decode(x, corpus.vocab));
    write_lines(texts, (dir / (stem + ".txt")).string());
    write_labels(split.labels, (dir / (stem + ".labels")).string());
  };
  dump_split(corpus.train, "train");
  dump_split(corpus.test, "test");
  write_vocabulary(corpus.vocab, (dir / "vocab.tsv").string());

  std::vector<std::string> planted_lines;
  for (const auto& class_ids : corpus.planted_ids) {
    std::string line;
    for (int id : class_ids) {
      if (!line.empty()) line += ' ';
      line += corpus.vocab.token_of(id);
    }
    planted_lines.push_back(line);
  }
  write_lines(planted_lines, (dir / "planted.txt").string());

  echo_config({{"command", "synth-data"},
               {"classes", std::to_string(classes)},
               {"seq_len", std::to_string(seq_len)},
               {"vocab_size", std::to_string(vocab_size)},
               {"planted_per_class", std::to_string(planted_per_class)},
               {"planting_rate", fmt_g6(planting_rate)},
               {"heavy_rate", fmt_g6(heavy_rate)},
               {"heavy_copies", std::to_string(heavy_copies)},
               {"n_train", std::to_string(n_train)},
               {"n_test", std::to_string(n_test)},
               {"seed", fmt_u64(seed)}},
              out_dir);
  std::cout << "wrote " << n_train << " train / " << n_test << " test samples, vocabulary of "
            << corpus.vocab.size() << " tokens to " << out_dir << "\n";
  return 0;
}

inline int cmd_train_victim(const std::string& train_path, const std::string& labels_path,
                            const std::string& test_path, const std::string& test_labels_path,
                            const std::string& vocab_path, const std::string& unit, int seq_len,
                            const std::string& arch, const ToyVictimConfig& base_cfg,
                            int num_classes, const std::string& out_path) {
  Vocabulary vocab = read_vocabulary(vocab_path, parse_unit(unit));
  LabeledDataset train = load_dataset(train_path, labels_path, vocab, seq_len);
  ToyVictimConfig cfg = base_cfg;
  if (arch == "bag")
    cfg.architecture = VictimArch::BagLinear;
  else if (arch == "conv")
    cfg.architecture = VictimArch::ConvPoolLinear;
  else
    throw std::invalid_argument("arch must be bag or conv");

  ToyTrainResult result = train_toy_victim(train, vocab.size(), num_classes, cfg);
  save_victim(*result.model, out_path, cfg.seed);
  std::cout << "train accuracy = " << fmt_g6(result.train_accuracy) << "\n";
  if (!test_path.empty()) {
    LabeledDataset test = load_dataset(test_path, test_labels_path, vocab, seq_len);
    std::cout << "test accuracy = " << fmt_g6(dataset_accuracy(*result.model, test)) << "\n";
  }

  std::filesystem::path out(out_path);
  echo_config({{"command", "train-victim"},
               {"arch", arch},
               {"embed_dim", std::to_string(cfg.e)},
               {"hidden", std::to_string(cfg.hidden)},
               {"lr", fmt_g6(cfg.lr)},
               {"epochs", std::to_string(cfg.epochs)},
               {"batch", std::to_string(cfg.batch)},
               {"seq_len", std::to_string(seq_len)},
               {"classes", std::to_string(num_classes)},
               {"seed", fmt_u64(cfg.seed)},
               {"out", out_path}},
              out.has_parent_path() ? out.parent_path().string() : ".");
  return 0;
}

inline int cmd_train_attacker(const std::string& train_path, const std::string& vocab_path,
                              const std::string& victim_path, const std::string& unit,
                              int seq_len, bool black_box, int subdict_size,
                              bool subdict_alphabet, const TrainConfig& cfg,
                              const std::string& out_identifier,
                              const std::string& out_perturber,
                              const std::string& telemetry_identifier,
                              const std::string& telemetry_perturber) {
  std::unique_ptr<VictimModel> victim = load_victim(victim_path);
  std::unique_ptr<BlackBoxModel> wrapped;
  const VictimModel* model = victim.get();
  if (black_box) {
    wrapped = std::make_unique<BlackBoxModel>(*victim);
    model = wrapped.get();
  }
  Vocabulary vocab = read_vocabulary(vocab_path, parse_unit(unit));
  std::vector<TokenSequence> train_set;
  for (const auto& text : read_lines(train_path)) train_set.push_back(encode(text, vocab, seq_len));
  SubDictionary pool = make_pool(vocab, subdict_size, subdict_alphabet);

  IdentifierTrainResult id_result = train_identifier(*model, train_set, vocab.size(), cfg);
  save_identifier(id_result.alpha, out_identifier, cfg.seed);
  if (!telemetry_identifier.empty())
    write_telemetry_csv(id_result.telemetry, telemetry_identifier);

  PerturberTrainResult pt_result =
      train_perturber(*model, train_set, vocab.size(), cfg, id_result.alpha, pool);
  save_perturber(pt_result.theta, out_perturber, cfg.seed);
  if (!telemetry_perturber.empty())
    write_telemetry_csv(pt_result.telemetry, telemetry_perturber);

  std::cout << "identifier training seconds = " << fmt_g6(id_result.train_seconds) << "\n";
  std::cout << "perturber training seconds = " << fmt_g6(pt_result.train_seconds) << "\n";
  std::cout << "total training seconds = "
            << fmt_g6(id_result.train_seconds + pt_result.train_seconds) << "\n";

  std::filesystem::path out(out_identifier);
  echo_config({{"command", "train-attacker"},
               {"lambda1", fmt_g6(cfg.lambda1)},
               {"lambda2", fmt_g6(cfg.lambda2)},
               {"lr", fmt_g6(cfg.lr)},
               {"epochs", std::to_string(cfg.epochs)},
               {"batch", std::to_string(cfg.batch)},
               {"d0_size", std::to_string(cfg.d0_size)},
               {"tau", fmt_g6(cfg.tau)},
               {"k", std::to_string(cfg.k)},
               {"seed", fmt_u64(cfg.seed)},
               {"black_box", black_box ? "1" : "0"},
               {"paper_literal_sign", cfg.paper_literal_sign ? "1" : "0"},
               {"subdict_size", std::to_string(subdict_size)},
               {"subdict_alphabet", subdict_alphabet ? "1" : "0"}},
              out.has_parent_path() ? out.parent_path().string() : ".");
  return 0;
}

inline int cmd_attack(const CommonOpts& o, const std::string& method_name_str, int k,
                      const std::string& out_dir, bool json) {
  LoadedAttack la = load_attack_inputs(o);
  AttackMethod method = parse_method(method_name_str);
  ExperimentConfig ecfg;
  ecfg.ks = {k};
  ecfg.seed = o.seed;
  std::vector<AttackOutcome> outcomes;
  std::vector<int> outcome_ks;
  std::vector<CurvePoint> points =
      run_attack_curve(method, la.ctx, la.data, ecfg, &outcomes, &outcome_ks);

  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  write_outcome_csv(outcomes, outcome_ks, la.vocab, (dir / "outcomes.csv").string());
  if (json) export_curve_json(points, (dir / "summary.json").string());
  write_curve_csv(points, (dir / "summary.csv").string());

  echo_config({{"command", "attack"},
               {"method", method_name_str},
               {"k", std::to_string(k)},
               {"victim", o.victim_path},
               {"input", o.input_path},
               {"subdict_size", std::to_string(o.subdict_size)},
               {"subdict_alphabet", o.subdict_alphabet ? "1" : "0"},
               {"black_box", o.black_box ? "1" : "0"},
               {"seed", fmt_u64(o.seed)}},
              out_dir);
  std::cout << "success rate = " << fmt_g6(points[0].success_rate) << " over "
            << points[0].n_samples << " samples\n";
  return 0;
}

inline int cmd_curve(const CommonOpts& o, const std::string& method_name_str,
                     const std::string& k_list, const std::string& out_dir, bool json,
                     bool no_timing, double train_time) {
  LoadedAttack la = load_attack_inputs(o);
  AttackMethod method = parse_method(method_name_str);
  ExperimentConfig ecfg;
  ecfg.ks = parse_int_list(k_list);
  ecfg.seed = o.seed;
  ecfg.record_timing = !no_timing;
  ecfg.train_time = train_time;
  std::vector<AttackOutcome> outcomes;
  std::vector<int> outcome_ks;
  std::vector<CurvePoint> points =
      run_attack_curve(method, la.ctx, la.data, ecfg, &outcomes, &outcome_ks);

  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  write_curve_csv(points, (dir / "curve.csv").string());
  write_curve_dat(points, (dir / "curve.dat").string());
  write_curve_svg(points, (dir / "curve.svg").string());
  write_outcome_csv(outcomes, outcome_ks, la.vocab, (dir / "outcomes.csv").string());
  if (json) export_curve_json(points, (dir / "curve.json").string());

  echo_config({{"command", "curve"},
               {"method", method_name_str},
               {"k_list", k_list},
               {"victim", o.victim_path},
               {"input", o.input_path},
               {"subdict_size", std::to_string(o.subdict_size)},
               {"subdict_alphabet", o.subdict_alphabet ? "1" : "0"},
               {"black_box", o.black_box ? "1" : "0"},
               {"no_timing", no_timing ? "1" : "0"},
               {"seed", fmt_u64(o.seed)}},
              out_dir);
  for (const auto& p : points)
    std::cout << "k=" << p.k << " alignment=" << fmt_g6(p.alignment_accuracy)
              << " success=" << fmt_g6(p.success_rate) << "\n";
  return 0;
}

inline int cmd_transfer(const CommonOpts& o, const std::string& target_victim_path,
                        const std::string& method_name_str, int k, const std::string& out_path) {
  LoadedAttack la = load_attack_inputs(o);
  std::unique_ptr<VictimModel> target = load_victim(target_victim_path);
  AttackMethod method = parse_method(method_name_str);
  ExperimentConfig ecfg;
  ecfg.ks = {k};
  ecfg.seed = o.seed;
  std::vector<AttackOutcome> outcomes;
  std::vector<CurvePoint> points = run_attack_curve(method, la.ctx, la.data, ecfg, &outcomes);

  TransferResult tr =
      transfer_eval(outcomes, *target, o.victim_path, target_victim_path, k);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << "source_model,target_model,k,source_alignment,target_alignment\n";
  out << tr.source_model << ',' << tr.target_model << ',' << tr.k << ','
      << fmt_g6(points[0].alignment_accuracy) << ',' << fmt_g6(tr.target_alignment) << '\n';
  std::cout << "source alignment = " << fmt_g6(points[0].alignment_accuracy)
            << ", target alignment = " << fmt_g6(tr.target_alignment) << "\n";

  std::filesystem::path outp(out_path);
  echo_config({{"command", "transfer"},
               {"method", method_name_str},
               {"k", std::to_string(k)},
               {"source_victim", o.victim_path},
               {"target_victim", target_victim_path},
               {"input", o.input_path},
               {"subdict_size", std::to_string(o.subdict_size)},
               {"seed", fmt_u64(o.seed)}},
              outp.has_parent_path() ? outp.parent_path().string() : ".");
  return 0;
}

}  // namespace cli

// Entry point shared by the binary and the tests. Returns 0 on success,
// 2 on usage errors, 1 on runtime errors.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"adversarial perturbation toolkit for discrete-sequence classifiers"};
  app.require_subcommand(1);

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "generate a planted-keyword dataset");
  cli::add_config_sink(synth);
  std::string synth_out;
  int classes = 2, seq_len = 30, vocab_size = 200, planted_per_class = 2;
  double planting_rate = 1.0, heavy_rate = 0.06;
  int heavy_copies = 3, n_train = 2000, n_test = 500;
  uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--classes", classes);
  synth->add_option("--seq-len", seq_len);
  synth->add_option("--vocab-size", vocab_size);
  synth->add_option("--planted-per-class", planted_per_class);
  synth->add_option("--planting-rate", planting_rate);
  synth->add_option("--heavy-rate", heavy_rate);
  synth->add_option("--heavy-copies", heavy_copies);
  synth->add_option("--train", n_train);
  synth->add_option("--test", n_test);
  synth->add_option("--seed", synth_seed);

  // train-victim
  auto* tv = app.add_subcommand("train-victim", "train a toy victim classifier");
  cli::add_config_sink(tv);
  std::string tv_train, tv_labels, tv_test, tv_test_labels, tv_vocab, tv_unit = "word";
  std::string tv_arch = "bag", tv_out;
  int tv_seq_len = 30, tv_classes = 2;
  ToyVictimConfig tv_cfg;
  tv->add_option("--train", tv_train)->required();
  tv->add_option("--labels", tv_labels)->required();
  tv->add_option("--test", tv_test);
  tv->add_option("--test-labels", tv_test_labels);
  tv->add_option("--vocab", tv_vocab)->required();
  tv->add_option("--unit", tv_unit);
  tv->add_option("--seq-len", tv_seq_len);
  tv->add_option("--classes", tv_classes);
  tv->add_option("--arch", tv_arch, "bag|conv");
  tv->add_option("--embed-dim", tv_cfg.e);
  tv->add_option("--hidden", tv_cfg.hidden);
  tv->add_option("--lr", tv_cfg.lr);
  tv->add_option("--epochs", tv_cfg.epochs);
  tv->add_option("--batch", tv_cfg.batch);
  tv->add_option("--seed", tv_cfg.seed);
  tv->add_option("--out", tv_out)->required();

  // train-attacker
  auto* ta = app.add_subcommand("train-attacker", "train the identifier and perturber");
  cli::add_config_sink(ta);
  std::string ta_train, ta_vocab, ta_victim, ta_unit = "word";
  std::string ta_out_id, ta_out_pt, ta_tel_id, ta_tel_pt;
  int ta_seq_len = 30, ta_subdict = 500;
  bool ta_alphabet = false, ta_black_box = false;
  TrainConfig ta_cfg;
  ta->add_option("--train", ta_train)->required();
  ta->add_option("--vocab", ta_vocab)->required();
  ta->add_option("--victim", ta_victim)->required();
  ta->add_option("--unit", ta_unit);
  ta->add_option("--seq-len", ta_seq_len);
  ta->add_option("--subdict-size", ta_subdict);
  ta->add_flag("--subdict-alphabet", ta_alphabet);
  ta->add_flag("--black-box", ta_black_box);
  ta->add_option("--lambda1", ta_cfg.lambda1);
  ta->add_option("--lambda2", ta_cfg.lambda2);
  ta->add_option("--lr", ta_cfg.lr);
  ta->add_option("--epochs", ta_cfg.epochs);
  ta->add_option("--batch", ta_cfg.batch);
  ta->add_option("--d0-size", ta_cfg.d0_size);
  ta->add_option("--tau", ta_cfg.tau);
  ta->add_option("--k", ta_cfg.k);
  ta->add_option("--seed", ta_cfg.seed);
  ta->add_flag("--paper-literal-sign", ta_cfg.paper_literal_sign,
               "rank masked positions by 1-f instead of f in the greedy term");
  ta->add_option("--scorer-embed", ta_cfg.scorer_e);
  ta->add_option("--scorer-filters", ta_cfg.scorer_filters);
  ta->add_option("--out-identifier", ta_out_id)->required();
  ta->add_option("--out-perturber", ta_out_pt)->required();
  ta->add_option("--telemetry-identifier", ta_tel_id);
  ta->add_option("--telemetry-perturber", ta_tel_pt);

  // attack
  auto* atk = app.add_subcommand("attack", "attack a dataset at one k");
  cli::CommonOpts atk_opts;
  std::string atk_method = "greedy", atk_out_dir = "attack-out";
  int atk_k = 1;
  bool atk_json = false;
  cli::add_common(atk, atk_opts);
  atk->add_option("--method", atk_method)->required();
  atk->add_option("--k", atk_k);
  atk->add_option("--out-dir", atk_out_dir);
  atk->add_flag("--json", atk_json);

  // curve
  auto* crv = app.add_subcommand("curve", "accuracy-vs-k curve");
  cli::CommonOpts crv_opts;
  std::string crv_method = "greedy", crv_klist = "1,2,4", crv_out_dir = "curve-out";
  bool crv_json = false, crv_no_timing = false;
  double crv_train_time = 0.0;
  cli::add_common(crv, crv_opts);
  crv->add_option("--method", crv_method)->required();
  crv->add_option("--k", crv_klist, "comma-separated k list");
  crv->add_option("--out-dir", crv_out_dir);
  crv->add_flag("--json", crv_json);
  crv->add_flag("--no-timing", crv_no_timing, "zero the wall-clock columns");
  crv->add_option("--train-time", crv_train_time, "attacker training seconds for the report");

  // transfer
  auto* trf = app.add_subcommand("transfer", "evaluate outcomes against another victim");
  cli::CommonOpts trf_opts;
  std::string trf_target, trf_method = "greedy", trf_out = "transfer.csv";
  int trf_k = 2;
  cli::add_common(trf, trf_opts);
  trf->add_option("--target-victim", trf_target)->required();
  trf->add_option("--method", trf_method);
  trf->add_option("--k", trf_k);
  trf->add_option("--out", trf_out);

  std::vector<std::string> args;
  std::vector<const char*> argv2{argc > 0 ? argv[0] : "advtext"};
  try {
    args = cli::expand_config_args(argc, argv);
    for (const auto& a : args) argv2.push_back(a.c_str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    app.parse(static_cast<int>(argv2.size()), argv2.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed())
      return cli::cmd_synth_data(synth_out, classes, seq_len, vocab_size, planted_per_class,
                                 planting_rate, heavy_rate, heavy_copies, n_train, n_test,
                                 synth_seed);
    if (tv->parsed())
      return cli::cmd_train_victim(tv_train, tv_labels, tv_test, tv_test_labels, tv_vocab,
                                   tv_unit, tv_seq_len, tv_arch, tv_cfg, tv_classes, tv_out);
    if (ta->parsed())
      return cli::cmd_train_attacker(ta_train, ta_vocab, ta_victim, ta_unit, ta_seq_len,
                                     ta_black_box, ta_subdict, ta_alphabet, ta_cfg, ta_out_id,
                                     ta_out_pt, ta_tel_id, ta_tel_pt);
    if (atk->parsed()) return cli::cmd_attack(atk_opts, atk_method, atk_k, atk_out_dir, atk_json);
    if (crv->parsed())
      return cli::cmd_curve(crv_opts, crv_method, crv_klist, crv_out_dir, crv_json,
                            crv_no_timing, crv_train_time);
    if (trf->parsed()) return cli::cmd_transfer(trf_opts, trf_target, trf_method, trf_k, trf_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace advtext
