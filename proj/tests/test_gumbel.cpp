#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "advtext/gumbel_attack.hpp"
#include "advtext/harness.hpp"
#include "test_util.hpp"

using namespace advtext;
using namespace advtest;

namespace {

// test nets use a wider weight range than the training init so random
// instances keep their relu pre-activations clear of the finite-difference
// step size
void scale_params(ScorerParams& net, double factor) {
  net.for_arrays([&](std::vector<double>& a) {
    for (double& v : a) v *= factor;
  });
}

IdentifierParams random_identifier(int vocab, int e, int filters, uint64_t seed) {
  IdentifierParams alpha;
  alpha.net = ScorerParams::make(vocab, e, filters, 1);
  alpha.net.randomize(seed);
  scale_params(alpha.net, 10.0);
  return alpha;
}

PerturberParams random_perturber(int vocab, int e, int filters, std::vector<int> pool,
                                 uint64_t seed) {
  PerturberParams theta;
  theta.net = ScorerParams::make(vocab, e, filters, static_cast<int>(pool.size()));
  theta.net.randomize(seed);
  scale_params(theta.net, 10.0);
  theta.pool_ids = std::move(pool);
  return theta;
}

std::vector<std::vector<double>*> array_views(ScorerParams& p) {
  std::vector<std::vector<double>*> views;
  p.for_arrays([&](std::vector<double>& a) { views.push_back(&a); });
  return views;
}

std::vector<double> flatten(const ScorerParams& p) {
  std::vector<double> out;
  p.for_arrays([&](const std::vector<double>& a) { out.insert(out.end(), a.begin(), a.end()); });
  return out;
}

// central finite differences of an arbitrary scalar loss over every scorer
// parameter; the loss closure must be deterministic (frozen noise)
template <typename LossFn>
std::vector<double> fd_scorer_gradient(ScorerParams& params, LossFn&& loss, double h = 1e-4) {
  std::vector<double> fd;
  for (std::vector<double>* arr : array_views(params)) {
    for (double& v : *arr) {
      double keep = v;
      v = keep + h;
      double up = loss();
      v = keep - h;
      double down = loss();
      v = keep;
      fd.push_back((up - down) / (2.0 * h));
    }
  }
  return fd;
}

// gradient check at h=1e-4; a coordinate whose h=1e-4 probe stepped across a
// relu or max kink is re-probed at h=1e-6, where the kink artifact vanishes
// while a genuine gradient bug would persist
template <typename LossFn>
double checked_rel_err(ScorerParams& params, LossFn&& loss, const std::vector<double>& analytic,
                       double tol = 1e-4) {
  std::vector<double> fd = fd_scorer_gradient(params, loss, 1e-4);
  double err = vector_rel_err(analytic, fd);
  if (err <= tol) return err;
  fd = fd_scorer_gradient(params, loss, 1e-6);
  return vector_rel_err(analytic, fd);
}

SyntheticTaskSpec tiny_planted_spec() {
  SyntheticTaskSpec spec;
  spec.num_classes = 2;
  spec.d = 12;
  spec.vocab_size = 40;
  spec.planted_tokens_per_class = {{1}, {3}};
  spec.noise_seed = 5;
  return spec;
}

struct TrainedVictim {
  PlantedCorpus corpus;
  ToyTrainResult victim;
};

TrainedVictim trained_planted_victim(uint64_t seed = 5) {
  TrainedVictim tv;
  SyntheticTaskSpec spec = tiny_planted_spec();
  spec.noise_seed = seed;
  tv.corpus = make_planted_corpus(spec, 600, 200);
  ToyVictimConfig cfg;
  cfg.e = 12;
  cfg.lr = 0.5;
  cfg.epochs = 40;
  cfg.seed = 3;
  tv.victim = train_toy_victim(tv.corpus.train, tv.corpus.vocab.size(), 2, cfg);
  return tv;
}

}  // namespace

TEST_CASE("zero-initialized identifier scores every position uniformly") {
  IdentifierParams alpha;
  alpha.net = ScorerParams::make(20, 4, 3, 1);
  TokenSequence x(std::vector<int>{1, 5, 9, 13, 2});
  std::vector<double> p = identifier_forward(alpha, x);
  for (double v : p) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("zero-initialized perturber gives uniform rows") {
  PerturberParams theta;
  theta.net = ScorerParams::make(20, 4, 3, 4);
  theta.pool_ids = {2, 4, 6, 8};
  TokenSequence x(std::vector<int>{1, 5, 9});
  Matrix q = perturber_forward(theta, x);
  for (double v : q.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("forward outputs are simplex points for random parameters") {
  SplitRng rng(70);
  for (int trial = 0; trial < 50; ++trial) {
    IdentifierParams alpha = random_identifier(25, 5, 4, 700 + trial);
    PerturberParams theta = random_perturber(25, 5, 4, {1, 3, 5, 7, 9}, 800 + trial);
    TokenSequence x = random_sequence(25, 9, rng);
    std::vector<double> p = identifier_forward(alpha, x);
    double total = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(std::fabs(total - 1.0) <= 1e-9);
    Matrix q = perturber_forward(theta, x);
    for (int i = 0; i < q.rows; ++i) {
      double row = 0.0;
      for (int j = 0; j < q.cols; ++j) {
        CHECK(q.at(i, j) >= 0.0);
        row += q.at(i, j);
      }
      CHECK(std::fabs(row - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("swapping identical tokens leaves the scores unchanged") {
  IdentifierParams alpha = random_identifier(20, 4, 3, 71);
  TokenSequence x(std::vector<int>{4, 7, 4, 2, 9});
  TokenSequence swapped(std::vector<int>{4, 7, 4, 2, 9});
  std::swap(swapped.ids[0], swapped.ids[2]);  // equal tokens: same sequence
  CHECK(identifier_forward(alpha, x) == identifier_forward(alpha, swapped));
}

TEST_CASE("identifier gradients match finite differences") {
  SplitRng rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    IdentifierParams alpha = random_identifier(12, 3, 4, 900 + trial);
    TokenSequence x = random_sequence(12, 6, rng);
    std::vector<double> probe = random_array(6, rng, 1.0);

    // analytic gradient of sum_i probe_i log p_i
    ScorerTrace trace;
    std::vector<double> p = identifier_forward(alpha, x, &trace);
    std::vector<double> dl = log_softmax_backward(p, probe);
    Matrix dlogits(6, 1);
    for (int i = 0; i < 6; ++i) dlogits.at(i, 0) = dl[i];
    ScorerParams grads = alpha.net.zeros_like();
    scorer_backward(alpha.net, x, trace, dlogits, grads);

    std::vector<double> fd = fd_scorer_gradient(alpha.net, [&]() {
      std::vector<double> pp = identifier_forward(alpha, x);
      double loss = 0.0;
      for (int i = 0; i < 6; ++i) loss += probe[i] * std::log(pp[i]);
      return loss;
    });
    CHECK(vector_rel_err(flatten(grads), fd) <= 1e-4);
  }
}

TEST_CASE("perturber gradients match finite differences") {
  SplitRng rng(73);
  for (int trial = 0; trial < 15; ++trial) {
    PerturberParams theta = random_perturber(12, 3, 4, {1, 4, 7}, 1000 + trial);
    TokenSequence x = random_sequence(12, 5, rng);
    Matrix probe(5, 3);
    for (double& v : probe.data) v = rng.next_range(-1, 1);

    ScorerTrace trace;
    Matrix q = perturber_forward(theta, x, &trace);
    Matrix dlogits(5, 3);
    for (int i = 0; i < 5; ++i) {
      std::vector<double> qrow(q.row(i), q.row(i) + 3);
      std::vector<double> dlogq(probe.row(i), probe.row(i) + 3);
      std::vector<double> dl = log_softmax_backward(qrow, dlogq);
      for (int j = 0; j < 3; ++j) dlogits.at(i, j) = dl[j];
    }
    ScorerParams grads = theta.net.zeros_like();
    scorer_backward(theta.net, x, trace, dlogits, grads);

    std::vector<double> fd = fd_scorer_gradient(theta.net, [&]() {
      Matrix qq = perturber_forward(theta, x);
      double loss = 0.0;
      for (size_t i = 0; i < qq.data.size(); ++i) loss += probe.data[i] * std::log(qq.data[i]);
      return loss;
    });
    CHECK(vector_rel_err(flatten(grads), fd) <= 1e-4);
  }
}

namespace {

struct Stage1Fixture {
  std::unique_ptr<VictimModel> model;
  std::vector<TokenSequence> xs;
  std::vector<Stage1Item> batch_d;
  std::vector<std::vector<double>> score_store;
  std::vector<ScoredItem> batch_d0;
  std::vector<std::vector<std::vector<double>>> noise;

  Stage1Fixture(int d, int k, uint64_t seed) {
    SplitRng rng(seed);
    model = make_random_bag(12, 3, d, 2, seed);
    for (int i = 0; i < 4; ++i) xs.push_back(random_sequence(12, d, rng));
    for (int i = 0; i < 2; ++i) batch_d.push_back({&xs[i], model->predict(xs[i]).argmax()});
    for (int i = 2; i < 4; ++i) {
      PreparedSample prep = prepare_sample(*model, xs[i]);
      score_store.push_back(masked_scores(*model, prep).scores);
    }
    for (int i = 2; i < 4; ++i) batch_d0.push_back({&xs[i], &score_store[i - 2]});
    for (int i = 0; i < 2; ++i) {
      std::vector<std::vector<double>> eps(k);
      for (auto& v : eps) v = sample_gumbel_vec(rng, d);
      noise.push_back(std::move(eps));
    }
  }
};

}  // namespace

TEST_CASE("stage-1 loss gradient matches finite differences with frozen noise") {
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 5 + trial % 4;  // d <= 8
    TrainConfig cfg;
    cfg.lambda1 = 1.0;
    cfg.lambda2 = 1.0;
    cfg.tau = 0.5;
    cfg.k = 2;
    Stage1Fixture fix(d, cfg.k, 1100 + trial);
    IdentifierParams alpha = random_identifier(12, 3, 4, 1200 + trial);

    ScorerParams grads = alpha.net.zeros_like();
    stage1_loss(alpha, fix.batch_d, fix.batch_d0, *fix.model, cfg, fix.noise, &grads);
    double err = checked_rel_err(alpha.net, [&]() {
      return stage1_loss(alpha, fix.batch_d, fix.batch_d0, *fix.model, cfg, fix.noise, nullptr)
          .loss;
    }, flatten(grads));
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("stage-1 greedy term is log of the mean score under a uniform identifier") {
  const int d = 6;
  Stage1Fixture fix(d, 1, 1300);
  IdentifierParams alpha;
  alpha.net = ScorerParams::make(12, 3, 4, 1);  // zero-init: uniform p
  TrainConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 1.0;
  std::vector<ScoredItem> one{fix.batch_d0[0]};
  LossValue v = stage1_loss(alpha, {}, one, *fix.model, cfg, {}, nullptr);
  double mean = 0.0;
  for (double s : *one[0].masked_scores) mean += s / d;
  CHECK(v.greedy_term == doctest::Approx(std::log(mean)).epsilon(1e-12));
  CHECK(v.loss == doctest::Approx(-std::log(mean)).epsilon(1e-12));
}

TEST_CASE("the literal sign switch scores masked positions by one minus f") {
  const int d = 6;
  Stage1Fixture fix(d, 1, 1400);
  IdentifierParams alpha;
  alpha.net = ScorerParams::make(12, 3, 4, 1);
  TrainConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 1.0;
  cfg.paper_literal_sign = true;
  std::vector<ScoredItem> one{fix.batch_d0[0]};
  LossValue v = stage1_loss(alpha, {}, one, *fix.model, cfg, {}, nullptr);
  double mean = 0.0;
  for (double s : *one[0].masked_scores) mean += (1.0 - s) / d;
  CHECK(v.greedy_term == doctest::Approx(std::log(mean)).epsilon(1e-12));
}

namespace {

struct Stage2Fixture {
  std::unique_ptr<VictimModel> model;
  std::vector<TokenSequence> xs;
  std::vector<int> pool_ids{1, 4, 7, 9};
  std::vector<std::vector<int>> selected_store;
  std::vector<Stage2Item> batch_d;
  std::vector<std::vector<std::vector<double>>> subs_store;
  std::vector<SubstitutionScoredItem> batch_d0;
  std::vector<std::vector<std::vector<double>>> noise;

  Stage2Fixture(int d, int k, uint64_t seed) {
    SplitRng rng(seed);
    model = make_random_bag(12, 3, d, 2, seed + 1);
    for (int i = 0; i < 4; ++i) xs.push_back(random_sequence(12, d, rng));
    for (int i = 0; i < 4; ++i)
      selected_store.push_back(rng.sample_without_replacement(d, k));
    for (int i = 0; i < 2; ++i)
      batch_d.push_back({&xs[i], model->predict(xs[i]).argmax(), &selected_store[i]});
    for (int i = 2; i < 4; ++i) {
      int c = model->predict(xs[i]).argmax();
      std::vector<std::vector<double>> rows;
      for (int pos : selected_store[i]) {
        std::vector<double> row;
        for (int w : pool_ids)
          row.push_back(flip_score(model->predict(substitute(xs[i], pos, w)), c));
        rows.push_back(row);
      }
      subs_store.push_back(rows);
    }
    for (int i = 2; i < 4; ++i)
      batch_d0.push_back({&xs[i], &selected_store[i], &subs_store[i - 2]});
    for (int i = 0; i < 2; ++i) {
      std::vector<std::vector<double>> eps(selected_store[i].size());
      for (auto& v : eps) v = sample_gumbel_vec(rng, static_cast<int>(pool_ids.size()));
      noise.push_back(std::move(eps));
    }
  }
};

}  // namespace

TEST_CASE("stage-2 loss gradient matches finite differences with frozen noise") {
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 5 + trial % 4;
    TrainConfig cfg;
    cfg.lambda1 = 1.0;
    cfg.lambda2 = 1.0;
    cfg.tau = 0.5;
    cfg.k = 2;
    Stage2Fixture fix(d, cfg.k, 1500 + trial);
    PerturberParams theta = random_perturber(12, 3, 4, fix.pool_ids, 1600 + trial);

    ScorerParams grads = theta.net.zeros_like();
    stage2_loss(theta, fix.batch_d, fix.batch_d0, *fix.model, cfg, fix.noise, &grads);
    double err = checked_rel_err(theta.net, [&]() {
      return stage2_loss(theta, fix.batch_d, fix.batch_d0, *fix.model, cfg, fix.noise, nullptr)
          .loss;
    }, flatten(grads));
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("stage-2 greedy term under uniform rows is the log mean substitution score") {
  const int d = 6;
  Stage2Fixture fix(d, 2, 1700);
  PerturberParams theta;
  theta.net = ScorerParams::make(12, 3, 4, 4);  // zero-init: uniform rows
  theta.pool_ids = fix.pool_ids;
  TrainConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 1.0;
  std::vector<SubstitutionScoredItem> one{fix.batch_d0[0]};
  LossValue v = stage2_loss(theta, {}, one, *fix.model, cfg, {}, nullptr);
  double expect = 0.0;
  for (const auto& row : *one[0].substitution_scores) {
    double mean = 0.0;
    for (double f : row) mean += f / row.size();
    expect += std::log(mean);
  }
  CHECK(v.greedy_term == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("the relaxed objective refuses black-box victims") {
  Stage1Fixture fix(6, 2, 1800);
  BlackBoxModel box(*fix.model);
  IdentifierParams alpha = random_identifier(12, 3, 4, 1801);
  TrainConfig cfg;
  cfg.lambda1 = 1.0;
  cfg.lambda2 = 0.0;
  CHECK_THROWS_AS(stage1_loss(alpha, fix.batch_d, {}, box, cfg, fix.noise, nullptr),
                  std::runtime_error);
  std::vector<TokenSequence> tiny{fix.xs[0]};
  CHECK_THROWS_AS(train_identifier(box, tiny, 12, cfg), std::runtime_error);
}

TEST_CASE("training configuration is validated") {
  TrainConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  CHECK_THROWS_AS(validate_train_config(cfg), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.tau = 0.0;
  CHECK_THROWS_AS(validate_train_config(cfg), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(validate_train_config(cfg), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.lambda1 = -0.5;
  CHECK_THROWS_AS(validate_train_config(cfg), std::invalid_argument);
}

TEST_CASE("black-box identifier training finds the planted positions") {
  TrainedVictim tv = trained_planted_victim();
  BlackBoxModel box(*tv.victim.model);
  TrainConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 1.0;
  cfg.lr = 0.001;
  cfg.epochs = 60;
  cfg.d0_size = 400;
  cfg.k = 1;
  cfg.seed = 9;
  IdentifierTrainResult result =
      train_identifier(box, tv.corpus.train.xs, tv.corpus.vocab.size(), cfg);

  int hit = 0;
  for (const auto& x : tv.corpus.test.xs) {
    std::vector<double> p = identifier_forward(result.alpha, x);
    int arg = argmax_lowest(p);
    int label = keyword_label(x, tv.corpus.planted_ids);
    REQUIRE(label >= 0);
    bool planted = false;
    for (int id : tv.corpus.planted_ids[label])
      if (x.ids[arg] == id) planted = true;
    hit += planted ? 1 : 0;
  }
  CHECK(static_cast<double>(hit) / tv.corpus.test.size() >= 0.9);
}

TEST_CASE("perturber rows agree with the exhaustive substitution oracle") {
  TrainedVictim tv = trained_planted_victim(6);
  BlackBoxModel box(*tv.victim.model);
  TrainConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 1.0;
  cfg.lr = 0.001;
  cfg.epochs = 60;
  cfg.d0_size = 400;
  cfg.k = 1;
  cfg.seed = 9;
  SubDictionary pool = top_frequency_subdict(tv.corpus.vocab, tv.corpus.vocab.size() - 1);
  IdentifierTrainResult idr =
      train_identifier(box, tv.corpus.train.xs, tv.corpus.vocab.size(), cfg);
  PerturberTrainResult ptr =
      train_perturber(box, tv.corpus.train.xs, tv.corpus.vocab.size(), cfg, idr.alpha, pool);

  // telemetry trend, smoothed over thirds
  const auto& tel = ptr.telemetry;
  REQUIRE(tel.size() == 60);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 20; ++i) {
    first += tel[i].total_loss / 20;
    last += tel[40 + i].total_loss / 20;
  }
  CHECK(last < first);

  int agree = 0;
  for (const auto& x : tv.corpus.test.xs) {
    int sel = top_k_indices(identifier_forward(idr.alpha, x), 1)[0];
    Matrix q = perturber_forward(ptr.theta, x);
    int best_j = 0;
    for (int j = 1; j < q.cols; ++j)
      if (q.at(sel, j) > q.at(sel, best_j)) best_j = j;
    int c = tv.victim.model->predict(x).argmax();
    int oracle_j = 0;
    double best_f = -1.0;
    for (int j = 0; j < pool.size(); ++j) {
      double f = flip_score(tv.victim.model->predict(substitute(x, sel, pool.ids[j])), c);
      if (f > best_f) {
        best_f = f;
        oracle_j = j;
      }
    }
    agree += best_j == oracle_j ? 1 : 0;
  }
  CHECK(static_cast<double>(agree) / tv.corpus.test.size() >= 0.8);
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  TrainedVictim tv = trained_planted_victim(7);
  TrainConfig cfg;
  cfg.lambda1 = 1.0;  // exercise the relaxed path too
  cfg.lambda2 = 1.0;
  cfg.epochs = 2;
  cfg.d0_size = 50;
  cfg.k = 2;
  cfg.seed = 31;
  std::vector<TokenSequence> subset(tv.corpus.train.xs.begin(),
                                    tv.corpus.train.xs.begin() + 100);
  IdentifierTrainResult a = train_identifier(*tv.victim.model, subset, tv.corpus.vocab.size(), cfg);
  IdentifierTrainResult b = train_identifier(*tv.victim.model, subset, tv.corpus.vocab.size(), cfg);
  CHECK(a.alpha.net == b.alpha.net);
  REQUIRE(a.telemetry.size() == b.telemetry.size());
  for (size_t i = 0; i < a.telemetry.size(); ++i)
    CHECK(a.telemetry[i].total_loss == b.telemetry[i].total_loss);

  SubDictionary pool = top_frequency_subdict(tv.corpus.vocab, 10);
  PerturberTrainResult pa =
      train_perturber(*tv.victim.model, subset, tv.corpus.vocab.size(), cfg, a.alpha, pool);
  PerturberTrainResult pb =
      train_perturber(*tv.victim.model, subset, tv.corpus.vocab.size(), cfg, b.alpha, pool);
  CHECK(pa.theta.net == pb.theta.net);
  CHECK(pa.theta.pool_ids == pb.theta.pool_ids);
}

TEST_CASE("apply with k=0 is the identity outcome at two evaluations") {
  auto model = make_random_bag(15, 4, 8, 2, 75);
  IdentifierParams alpha = random_identifier(15, 3, 4, 76);
  PerturberParams theta = random_perturber(15, 3, 4, {2, 5, 8}, 77);
  SplitRng rng(78);
  TokenSequence x = random_sequence(15, 8, rng);
  uint64_t before = model->evals();
  AttackOutcome out = gumbel_attack_apply(*model, alpha, theta, x, 0);
  CHECK(out.x_tilde == x);
  CHECK(out.success == 0);
  CHECK(out.evals_used == 2);
  CHECK(model->evals() - before == 2);
}

TEST_CASE("uniform attacker falls back to the deterministic tie-breaks") {
  auto model = make_random_bag(15, 4, 6, 2, 79);
  IdentifierParams alpha;
  alpha.net = ScorerParams::make(15, 3, 4, 1);  // uniform positions
  PerturberParams theta;
  theta.net = ScorerParams::make(15, 3, 4, 3);  // uniform rows
  theta.pool_ids = {7, 3, 5};                   // lowest token id is 3
  SplitRng rng(80);
  TokenSequence x = random_sequence(15, 6, rng);
  AttackOutcome out = gumbel_attack_apply(*model, alpha, theta, x, 3);
  CHECK(out.positions == std::vector<int>{0, 1, 2});
  CHECK(out.replacements == std::vector<int>{3, 3, 3});
}

TEST_CASE("apply always uses exactly two victim evaluations") {
  auto model = make_random_conv(20, 4, 10, 3, 4, 81);
  IdentifierParams alpha = random_identifier(20, 3, 4, 82);
  PerturberParams theta = random_perturber(20, 3, 4, {1, 2, 3, 4, 5, 6}, 83);
  SplitRng rng(84);
  for (int k : {0, 1, 3, 7, 10}) {
    TokenSequence x = random_sequence(20, 10, rng);
    uint64_t before = model->evals();
    AttackOutcome out = gumbel_attack_apply(*model, alpha, theta, x, k);
    CHECK(out.evals_used == 2);
    CHECK(model->evals() - before == 2);
    CHECK(out.positions.size() == static_cast<size_t>(k));
    CHECK(out.success == flip_indicator(*model, x, out.x_tilde));
  }
}

TEST_CASE("attacker checkpoints round-trip") {
  namespace fs = std::filesystem;
  std::string id_path = (fs::temp_directory_path() / "advtext_id_ck.bin").string();
  std::string pt_path = (fs::temp_directory_path() / "advtext_pt_ck.bin").string();
  IdentifierParams alpha = random_identifier(18, 4, 5, 85);
  PerturberParams theta = random_perturber(18, 4, 5, {3, 6, 9, 12}, 86);
  save_identifier(alpha, id_path, 85);
  save_perturber(theta, pt_path, 86);
  IdentifierParams alpha2 = load_identifier(id_path);
  PerturberParams theta2 = load_perturber(pt_path);
  CHECK(alpha2.net == alpha.net);
  CHECK(theta2.net == theta.net);
  CHECK(theta2.pool_ids == theta.pool_ids);
  CHECK_THROWS_AS(load_identifier(pt_path), std::runtime_error);
  CHECK_THROWS_AS(load_perturber(id_path), std::runtime_error);
  std::remove(id_path.c_str());
  std::remove(pt_path.c_str());
}

TEST_CASE("telemetry csv has the pinned schema") {
  namespace fs = std::filesystem;
  std::string path = (fs::temp_directory_path() / "advtext_telemetry.csv").string();
  std::vector<TelemetryRow> rows{{0, -0.5, -1.25, 1.75}, {1, -0.25, -1.0, 1.25}};
  write_telemetry_csv(rows, path);
  std::vector<std::string> lines = read_lines(path);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "epoch,term_gumbel,term_greedy,total_loss");
  CHECK(lines[1] == "0,-0.5,-1.25,1.75");
  CHECK(lines[2] == "1,-0.25,-1,1.25");
  std::remove(path.c_str());
}
