#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sememelm/error.hpp"
#include "sememelm/evalkit.hpp"
#include "sememelm/gradcheck_fixture.hpp"
#include "sememelm/training.hpp"

using namespace sememelm;

namespace {

std::string relation_line(const std::string& name, int pairs,
                          const std::string& prefix = "w") {
  std::string out = R"({"relation":")" + name + R"(","pairs":[)";
  for (int i = 0; i < pairs; ++i) {
    if (i) out += ",";
    out += R"({"head":")" + prefix + std::to_string(i) + R"(","tail":")" +
           prefix + std::to_string(i) + R"(t","score":)" +
           std::to_string(1.0 - 0.01 * i) + "}";
  }
  return out + "]}\n";
}

ad::Tensor vec(std::vector<double> v) {
  ad::Shape shape{v.size()};
    return ad::Tensor::parameter(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("a 25-pair relation yields 10 positives and 10 negatives") {
  auto in = std::istringstream(relation_line("r", 25));
  RelationDataset data = load_relation_data(in, 1);
  REQUIRE(data.relations.size() == 1);
  const RelationGroup& g = data.relations[0];
  CHECK(g.train_positives.size() + g.val_positives.size() == 10);
  CHECK(g.train_negatives.size() + g.val_negatives.size() == 10);
  // Positives carry the highest typicality scores: w0..w9.
  for (const WordPair& p : g.train_positives) {
    int idx = std::stoi(p.head.substr(1));
    CHECK(idx < 10);
  }
  for (const WordPair& p : g.train_negatives) {
    int idx = std::stoi(p.head.substr(1));
    CHECK(idx >= 15);  // bottom 10 of 25
  }
}

TEST_CASE("10 positives split 8 train / 2 validation") {
  auto in = std::istringstream(relation_line("r", 25));
  RelationDataset data = load_relation_data(in, 7);
  CHECK(data.relations[0].train_positives.size() == 8);
  CHECK(data.relations[0].val_positives.size() == 2);
  CHECK(data.relations[0].train_negatives.size() == 8);
  CHECK(data.relations[0].val_negatives.size() == 2);
}

TEST_CASE("the split is deterministic for a seed and differs across seeds") {
  auto mk = [](uint64_t seed) {
    auto in = std::istringstream(relation_line("r", 25));
    return load_relation_data(in, seed);
  };
  RelationDataset a = mk(3), b = mk(3), c = mk(4);
  CHECK(a.relations[0].train_positives == b.relations[0].train_positives);
  CHECK(a.relations[0].train_positives != c.relations[0].train_positives);
}

TEST_CASE("relation data loader rejects bad input") {
  auto one_pair = std::istringstream(relation_line("tiny", 1));
  CHECK_THROWS_WITH_AS(load_relation_data(one_pair, 1),
                       doctest::Contains("tiny"), Error);
  auto dup = std::istringstream(
      R"({"relation":"d","pairs":[{"head":"a","tail":"b","score":1},{"head":"a","tail":"b","score":0.5}]})"
      "\n");
  CHECK_THROWS_WITH_AS(load_relation_data(dup, 1),
                       doctest::Contains("duplicate pair"), Error);
  auto dup_rel = std::istringstream(relation_line("r", 25) +
                                    relation_line("r", 25));
  CHECK_THROWS_WITH_AS(load_relation_data(dup_rel, 1),
                       doctest::Contains("duplicate relation"), Error);
}

TEST_CASE("word alignment loss anchors") {
  // Identity projection in 2 dims.
  ad::Tensor eye = ad::Tensor::parameter({2, 2}, {1, 0, 0, 1});

  // h_w equal to the projected mean -> 0.
  {
    WordAlignTerm term{vec({3, 4}),
                       ad::Tensor::parameter({2, 2}, {2, 4, 4, 4})};
    std::vector<WordAlignTerm> terms{term};
    CHECK(word_alignment_loss(terms, eye).item() == doctest::Approx(0.0));
  }
  // Zero h_w against projected mean (3,4) -> norm 5.
  {
    WordAlignTerm term{vec({0, 0}), ad::Tensor::parameter({1, 2}, {3, 4})};
    std::vector<WordAlignTerm> terms{term};
    CHECK(std::fabs(word_alignment_loss(terms, eye).item() - 5.0) <= 1e-12);
  }
  // Two words sum their norms; oracle computed per word.
  {
    WordAlignTerm t1{vec({0, 0}), ad::Tensor::parameter({1, 2}, {3, 4})};
    WordAlignTerm t2{vec({1, 1}), ad::Tensor::parameter({1, 2}, {1, 2})};
    std::vector<WordAlignTerm> terms{t1, t2};
    double expected = 5.0 + std::sqrt(0.0 + 1.0);
    CHECK(word_alignment_loss(terms, eye).item() ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("relation alignment loss anchors") {
  ad::Tensor a = ad::Tensor::parameter({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(relation_alignment_loss(a, a).item() == 0.0);

  ad::Tensor x = ad::Tensor::parameter({1, 2}, {1.0, 1.0});
  ad::Tensor y = ad::Tensor::parameter({1, 2}, {1.0, 3.0});
  CHECK(relation_alignment_loss(x, y).item() == doctest::Approx(2.0));

  // Random batch against a scalar double-loop oracle.
  Rng rng(13);
  std::vector<double> av(12), bv(12);
  for (double& v : av) v = rng.uniform(-2, 2);
  for (double& v : bv) v = rng.uniform(-2, 2);
  double oracle = 0.0;
  for (size_t i = 0; i < 12; ++i) {
    double d = av[i] - bv[i];
    oracle += d * d;
  }
  oracle /= 12.0;
  CHECK(relation_alignment_loss(ad::Tensor::parameter({4, 3}, av),
                                ad::Tensor::parameter({4, 3}, bv))
            .item() == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("contrastive loss: equal similarities cancel to zero") {
  ContrastiveGroup g;
  g.positives = {vec({1, 0}), vec({1, 0})};
  g.negatives = {vec({1, 0})};
  std::vector<ContrastiveGroup> groups{g};
  ContrastiveResult r = contrastive_loss(groups, 0.5);
  CHECK(std::fabs(r.loss.item()) <= 1e-12);
  CHECK(r.pair_count == 2);
}

TEST_CASE("contrastive loss: the -2.0 anchor fixture") {
  // dots: x0.x1 = 1, x0.xn = 0, x1.xn = 1. Term(a=0,p=1) = -(1-0)/tau = -2
  // at tau = 0.5; term(a=1,p=0) = -(1-1)/tau = 0.
  ContrastiveGroup g;
  g.positives = {vec({1, 0, 0}), vec({1, 0, 1})};
  g.negatives = {vec({0, 0, 1})};
  std::vector<ContrastiveGroup> groups{g};
  ContrastiveResult r = contrastive_loss(groups, 0.5);
  CHECK(std::fabs(r.loss.item() - (-2.0)) <= 1e-12);
}

TEST_CASE("contrastive loss matches a scalar-loop oracle and scales with tau") {
  Rng rng(21);
  auto make_groups = [&]() {
    std::vector<ContrastiveGroup> groups;
    for (int gi = 0; gi < 2; ++gi) {
      ContrastiveGroup g;
      for (int p = 0; p < 3; ++p) {
        std::vector<double> v(4);
        for (double& x : v) x = rng.uniform(-1, 1);
        g.positives.push_back(vec(v));
      }
      for (int n = 0; n < 2; ++n) {
        std::vector<double> v(4);
        for (double& x : v) x = rng.uniform(-1, 1);
        g.negatives.push_back(vec(v));
      }
      groups.push_back(std::move(g));
    }
    return groups;
  };
  auto oracle_loss = [](const std::vector<ContrastiveGroup>& groups,
                        double tau) {
    double total = 0.0;
    for (const auto& g : groups) {
      for (size_t a = 0; a < g.positives.size(); ++a) {
        for (size_t p = 0; p < g.positives.size(); ++p) {
          if (a == p) continue;
          double sp = 0.0;
          for (size_t c = 0; c < 4; ++c)
            sp += g.positives[a].values()[c] * g.positives[p].values()[c];
          double denom = 0.0;
          for (const auto& n : g.negatives) {
            double sn = 0.0;
            for (size_t c = 0; c < 4; ++c)
              sn += g.positives[a].values()[c] * n.values()[c];
            denom += std::exp(sn / tau);
          }
          total += -std::log(std::exp(sp / tau) / denom);
        }
      }
    }
    return total;
  };
  std::vector<ContrastiveGroup> groups = make_groups();
  for (double tau : {0.5, 1.0}) {
    ContrastiveResult r = contrastive_loss(groups, tau);
    CHECK(r.loss.item() ==
          doctest::Approx(oracle_loss(groups, tau)).epsilon(1e-10));
    CHECK(r.pair_count == 2 * 3 * 2);  // |P|(|P|-1) per relation
  }
}

TEST_CASE("contrastive loss validates its contract") {
  ContrastiveGroup lone;
  lone.positives = {vec({1, 0})};
  lone.negatives = {vec({0, 1})};
  std::vector<ContrastiveGroup> groups{lone};
  CHECK_THROWS_AS(contrastive_loss(groups, 0.5), Error);
  ContrastiveGroup no_neg;
  no_neg.positives = {vec({1, 0}), vec({0, 1})};
  std::vector<ContrastiveGroup> groups2{no_neg};
  CHECK_THROWS_AS(contrastive_loss(groups2, 0.5), Error);
  CHECK_THROWS_AS(contrastive_loss(groups2, -1.0), Error);
}

TEST_CASE("total loss sums the enabled components") {
  ad::Tensor l1 = ad::Tensor::scalar(1.0);
  ad::Tensor l2 = ad::Tensor::scalar(2.0);
  ad::Tensor l3 = ad::Tensor::scalar(3.0);
  CHECK(total_loss(l1, l2, l3, {true, true, true}).item() == 6.0);
  CHECK(total_loss(l1, l2, l3, {false, false, true}).item() == 3.0);
  CHECK(total_loss(l1, l2, l3, {false, false, false}).item() == 0.0);
}

TEST_CASE("adamw step scales linearly with the learning rate") {
  auto build = [](double lr) {
    ad::Tensor p = ad::Tensor::parameter({3}, {1.0, -2.0, 0.5});
    ad::Tensor c = ad::Tensor::constant({3}, {0.3, -0.5, 1.1});
    ad::backward(ad::dot(p, c));
    AdamW opt({p}, lr, 0.9, 0.999, 1e-8, 0.01);
    std::vector<double> before = p.values();
    opt.step();
    std::vector<double> delta(3);
    for (size_t i = 0; i < 3; ++i) delta[i] = p.values()[i] - before[i];
    return delta;
  };
  std::vector<double> d1 = build(1e-8);
  std::vector<double> d2 = build(2e-8);
  for (size_t i = 0; i < 3; ++i)
    CHECK(d2[i] / d1[i] == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("the full objective passes the gradient oracle on a small fixture") {
  GradCheckReport report = run_gradcheck_fixture(3, 6, 6);
  CHECK(report.max_rel_err < 1e-4);
  CHECK(report.parameter_count > 0);
}

// End-to-end training behavior on an in-memory fixture.
namespace {

struct TrainFixture {
  GraphContext context;
  RelationDataset data;
  TrainConfig config;

  TrainFixture() {
    // Two relations over four sememes; words map 1:1 onto sememes.
    for (int i = 0; i < 4; ++i)
      context.inventory.intern_sememe("s" + std::to_string(i));
    context.inventory.intern_relation("ra");
    context.inventory.intern_relation("rb");
    context.triples = {{0, 0, 1}, {2, 1, 3}};
    for (int i = 0; i < 4; ++i) {
      std::string word = "w" + std::to_string(i);
      context.lexicon.add({word, {{static_cast<SememeId>(i)}}});
      std::vector<double> row(6);
      Rng r(100 + i);
      for (double& v : row) v = r.uniform(-0.5, 0.5);
      context.embeddings.insert("s" + std::to_string(i), std::move(row));
    }
    context.finalize(1);

    RelationGroup ga{"ra", {{"w0", "w1"}, {"w1", "w0"}}, {}, {{"w2", "w3"}}, {}};
    RelationGroup gb{"rb", {{"w2", "w3"}, {"w3", "w2"}}, {}, {{"w0", "w1"}}, {}};
    data.relations = {ga, gb};

    config.seed = 5;
    config.epochs = 0;
    config.encoder_dim = 6;
    config.graph_dim = 6;
    config.max_len = 16;
    config.batch_relations = 2;
  }
};

}  // namespace

TEST_CASE("zero epochs leaves the model untouched with empty metrics") {
  TrainFixture fx;
  RelationModel model = RelationModel::init(fx.config, fx.context.lexicon);
  std::vector<double> before = model.encoder.token_embeddings.values();
  TrainResult r = train(model, &fx.context, fx.data, fx.config);
  CHECK(r.epochs.empty());
  CHECK(r.steps == 0);
  CHECK(model.encoder.token_embeddings.values() == before);
}

TEST_CASE("a few hundred steps reduce the total loss on the fixture") {
  TrainFixture fx;
  fx.config.epochs = 100;  // 1 batch per epoch -> 100 steps
  fx.config.learning_rate = 3e-3;
  RelationModel model = RelationModel::init(fx.config, fx.context.lexicon);
  TrainResult r = train(model, &fx.context, fx.data, fx.config);
  REQUIRE(r.epochs.size() == 100);
  CHECK(r.epochs.back().total < r.epochs.front().total);
}

TEST_CASE("disabled losses report exactly zero in every epoch") {
  TrainFixture fx;
  fx.config.epochs = 3;
  fx.config.use_l1 = false;
  fx.config.use_l2 = false;
  RelationModel model = RelationModel::init(fx.config, fx.context.lexicon);
  TrainResult r = train(model, &fx.context, fx.data, fx.config);
  for (const EpochMetrics& m : r.epochs) {
    CHECK(m.l1 == 0.0);
    CHECK(m.l2 == 0.0);
    CHECK(m.total == m.l3);
  }
}

TEST_CASE("training twice from the same seed is bitwise reproducible") {
  TrainFixture fx;
  fx.config.epochs = 5;
  RelationModel m1 = RelationModel::init(fx.config, fx.context.lexicon);
  RelationModel m2 = RelationModel::init(fx.config, fx.context.lexicon);
  TrainResult r1 = train(m1, &fx.context, fx.data, fx.config);
  TrainResult r2 = train(m2, &fx.context, fx.data, fx.config);
  CHECK(m1.encoder.token_embeddings.values() ==
        m2.encoder.token_embeddings.values());
  CHECK(m1.graph_encoder.virtual_seed.values() ==
        m2.graph_encoder.virtual_seed.values());
  REQUIRE(r1.epochs.size() == r2.epochs.size());
  for (size_t i = 0; i < r1.epochs.size(); ++i) {
    CHECK(r1.epochs[i].total == r2.epochs[i].total);
    CHECK(r1.epochs[i].val_acc == r2.epochs[i].val_acc);
  }
}

TEST_CASE("a diverging run aborts naming where it blew up") {
  TrainFixture fx;
  fx.config.epochs = 50;
  fx.config.learning_rate = 1e18;  // guaranteed to blow past f64 range
  RelationModel model = RelationModel::init(fx.config, fx.context.lexicon);
  CHECK_THROWS_WITH_AS(train(model, &fx.context, fx.data, fx.config),
                       doctest::Contains("diverged at"), Error);
}

TEST_CASE("the alternative denominator matches its own scalar oracle") {
  Rng rng(29);
  ContrastiveGroup g;
  for (int p = 0; p < 3; ++p) {
    std::vector<double> v(3);
    for (double& x : v) x = rng.uniform(-1, 1);
    g.positives.push_back(vec(v));
  }
  std::vector<double> n(3);
  for (double& x : n) x = rng.uniform(-1, 1);
  g.negatives.push_back(vec(n));
  std::vector<ContrastiveGroup> groups{g};

  const double tau = 0.5;
  double expected = 0.0;
  for (size_t a = 0; a < 3; ++a)
    for (size_t p = 0; p < 3; ++p) {
      if (a == p) continue;
      auto dot = [&](const ad::Tensor& x, const ad::Tensor& y) {
        double s = 0;
        for (size_t c = 0; c < 3; ++c) s += x.values()[c] * y.values()[c];
        return s;
      };
      double sp = dot(g.positives[a], g.positives[p]);
      double denom = std::exp(dot(g.positives[a], g.negatives[0]) / tau) +
                     std::exp(sp / tau);
      expected += -std::log(std::exp(sp / tau) / denom);
    }
  ContrastiveResult r = contrastive_loss(groups, tau, true);
  CHECK(r.loss.item() == doctest::Approx(expected).epsilon(1e-10));
  CHECK(r.loss.item() > 0.0);  // this form is non-negative by construction
}

TEST_CASE("stop_gradient_side confines the alignment gradient") {
  // One training batch with only L2 enabled; the blocked side's parameters
  // must end the run with no accumulated gradient.
  auto grads_after_train = [](const std::string& side) {
    TrainFixture fx;
    fx.config.epochs = 1;
    fx.config.use_l1 = false;
    fx.config.use_l3 = false;
    fx.config.stop_gradient_side = side;
    RelationModel model = RelationModel::init(fx.config, fx.context.lexicon);
    train(model, &fx.context, fx.data, fx.config);
    bool graph_touched = model.graph_encoder.layers[0].value.has_grad();
    bool encoder_touched = model.encoder.token_embeddings.has_grad();
    return std::pair<bool, bool>{graph_touched, encoder_touched};
  };
  auto [g_none, e_none] = grads_after_train("none");
  CHECK(g_none);
  CHECK(e_none);
  auto [g_blocked, e_ok] = grads_after_train("graph");
  CHECK_FALSE(g_blocked);
  CHECK(e_ok);
  auto [g_ok, e_blocked] = grads_after_train("encoder");
  CHECK(g_ok);
  CHECK_FALSE(e_blocked);
}

TEST_CASE("inference representation modes: hm, hg, concat") {
  TrainFixture fx;
  RelationModel model = RelationModel::init(fx.config, fx.context.lexicon);
  const size_t d = static_cast<size_t>(fx.config.encoder_dim);
  WordPair solid{"w0", "w1"};
  WordPair degenerate{"nope", "w1"};

  model.config.inference_rep = "hm";
  std::vector<double> hm = relation_representation(model, &fx.context, solid);
  CHECK(hm.size() == d);

  model.config.inference_rep = "hg";
  std::vector<double> hg = relation_representation(model, &fx.context, solid);
  CHECK(hg.size() == d);
  CHECK(hg != hm);
  // Degenerate pairs fall back to the encoder representation.
  CHECK(relation_representation(model, &fx.context, degenerate) ==
        [&] {
          model.config.inference_rep = "hm";
          auto v = relation_representation(model, &fx.context, degenerate);
          model.config.inference_rep = "hg";
          return v;
        }());

  model.config.inference_rep = "concat";
  std::vector<double> cat = relation_representation(model, &fx.context, solid);
  REQUIRE(cat.size() == 2 * d);
  CHECK(std::vector<double>(cat.begin(), cat.begin() + d) == hm);
  CHECK(std::vector<double>(cat.begin() + d, cat.end()) == hg);
  std::vector<double> cat_deg =
      relation_representation(model, &fx.context, degenerate);
  REQUIRE(cat_deg.size() == 2 * d);
  for (size_t i = d; i < 2 * d; ++i) CHECK(cat_deg[i] == 0.0);
}

TEST_CASE("degenerate pairs skip the graph path but keep the encoder path") {
  TrainFixture fx;
  // A word whose senses share nothing: empty intersection.
  fx.context.lexicon.add({"mixed", {{0}, {1}}});
  RelationModel model = RelationModel::init(fx.config, fx.context.lexicon);
  PairForward fwd = forward_pair(model, &fx.context, "mixed", "w1");
  CHECK(fwd.degenerate);
  CHECK_FALSE(fwd.graph_state.has_value());
  CHECK(fwd.align_terms.empty());
  CHECK(fwd.mask_state.defined());
  PairForward solid = forward_pair(model, &fx.context, "w0", "w1");
  CHECK_FALSE(solid.degenerate);
  CHECK(solid.graph_state.has_value());
  CHECK(solid.align_terms.size() == 2);
}
