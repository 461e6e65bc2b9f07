#include "doctest_fts.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fts/clothmodel.hpp"
#include "fts/error.hpp"

using namespace fts;

namespace {

double integrate_kde(const Kde1D& kde) {
  const auto [lo, hi] = std::minmax_element(kde.samples.begin(), kde.samples.end());
  const double a = *lo - 6.0 * kde.bandwidth, b = *hi + 6.0 * kde.bandwidth;
  auto f = [&](double x) { return kde_eval(kde, x); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

UserRecord user(std::string id, Group g, std::optional<double> b2, std::vector<Post> posts) {
  return {std::move(id), g, b2, std::move(posts)};
}

const CategoryVocabulary& vocab3() {
  static const CategoryVocabulary v({"Dress", "Skirt", "Short"});
  return v;
}

}  // namespace

TEST_CASE("vocabulary") {
  const auto v = CategoryVocabulary::default_vocabulary();
  CHECK(v.size() == 14);
  CHECK(v.index("Dress") == 0);
  CHECK(v.index("Tee-and-Tank") == 6);
  CHECK(v.index("Nope") == -1);
  CHECK_THROWS_AS(CategoryVocabulary({}), Error);
  CHECK_THROWS_AS(CategoryVocabulary({"a", "a"}), Error);
}

TEST_CASE("KDE examples") {
  const Kde1D one = make_kde({0.0}, 1.0);
  CHECK(kde_eval(one, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
  const Kde1D sym = make_kde({-0.7, 0.7}, 0.4);
  for (double x : {0.1, 0.5, 1.3, 3.0}) CHECK(std::abs(kde_eval(sym, x) - kde_eval(sym, -x)) < 1e-12);
  CHECK_THROWS_AS(make_kde({}), Error);
  CHECK_THROWS_AS(make_kde({1.0}, 0.0), Error);
}

TEST_CASE("KDE integrates to one") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.3, 1.4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s(5 + 20 * trial);
    for (double& x : s) x = n(rng);
    const Kde1D k = make_kde(s);
    CHECK(std::abs(integrate_kde(k) - 1.0) < 1e-3);
  }
}

TEST_CASE("Silverman bandwidth") {
  const std::vector<double> s = {-1.0, 0.0, 1.0, 2.0};
  const double sd = std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
  CHECK(silverman_bandwidth(s) == doctest::Approx(1.06 * sd * std::pow(4.0, -0.2)).epsilon(1e-12));
  CHECK(silverman_bandwidth({2.0, 2.0, 2.0}) == doctest::Approx(1.06 * std::pow(3.0, -0.2)).epsilon(1e-12));
}

TEST_CASE("marginal model smoothing") {
  std::vector<UserRecord> users = {user("a", Group::Average, 0.0, {{0}, {0, 1}}), user("b", Group::Plus, -1.0, {{0}})};
  const MarginalModel m = fit_marginal(users, vocab3());
  CHECK(m.p[0] == doctest::Approx(4.0 / 5.0));
  CHECK(m.p[1] == doctest::Approx(2.0 / 5.0));
  CHECK(m.p[2] == doctest::Approx(1.0 / 5.0));
  for (double p : m.p) CHECK((p > 0.0 && p < 1.0));
  CHECK_THROWS_AS(fit_marginal({user("x", Group::Average, 0.0, {})}, vocab3()), Error);
}

TEST_CASE("group model needs both groups") {
  std::vector<UserRecord> users = {user("a", Group::Average, 0.0, {{0}}), user("b", Group::Plus, -1.0, {{1}})};
  const GroupModel g = fit_group_conditional(users, vocab3());
  CHECK(g.p_average[0] == doctest::Approx(2.0 / 3.0));
  CHECK(g.p_plus[0] == doctest::Approx(1.0 / 3.0));
  users.pop_back();
  try {
    fit_group_conditional(users, vocab3());
    FAIL("expected MissingGroup");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingGroup);
  }
}

TEST_CASE("posterior rules") {
  CHECK(posterior_from(0.3, 0.3, 0.27) == doctest::Approx(0.27).epsilon(1e-15));
  CHECK(posterior_from(0.4, 0.2, 1.0) == 1.0 - kProbClamp);
  CHECK(posterior_from(0.4, 0.2, 0.0) == kProbClamp);
  for (double like_w : {0.01, 0.2, 0.9})
    for (double like_n : {0.05, 0.3, 1.2})
      for (double prior : {0.1, 0.5, 0.8}) {
        const double post = posterior_from(like_w, like_n, prior);
        const double evidence = like_w * prior + like_n * (1.0 - prior);
        CHECK(std::abs(post * evidence - like_w * prior) < 1e-10);
      }
  double prev = 0.0;
  for (double ratio : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    const double p = posterior_from(ratio, 1.0, 0.3);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("shape-conditional model on a correlated population") {
  PopulationConfig pc;
  const auto vocab = CategoryVocabulary::default_vocabulary();
  const auto users = make_population(pc, vocab);
  CHECK(users.size() == 180);
  const ShapeConditionalModel m = fit_shape_conditional(users, vocab);
  CHECK(std::abs(integrate_kde(m.marginal) - 1.0) < 1e-3);
  for (const auto& c : m.categories) {
    CHECK(std::abs(integrate_kde(c.wearers) - 1.0) < 1e-3);
    CHECK(std::abs(integrate_kde(c.non_wearers) - 1.0) < 1e-3);
    CHECK((c.prior > 0.0 && c.prior < 1.0));
  }
  // Category 0 is worn more at negative beta2, category 1 at positive.
  CHECK(posterior(m, 0, -2.0) > posterior(m, 0, 2.0));
  CHECK(posterior(m, 1, -2.0) < posterior(m, 1, 2.0));
}

TEST_CASE("independent categories give a flat posterior inside the data") {
  PopulationConfig pc;
  pc.n_correlated = 0;
  pc.n_users = 5000;
  const auto vocab = CategoryVocabulary::default_vocabulary();
  const auto users = make_population(pc, vocab);
  const ShapeConditionalModel m = fit_shape_conditional(users, vocab);
  std::vector<double> b2;
  for (const auto& u : users) b2.push_back(*u.beta2);
  std::sort(b2.begin(), b2.end());
  const double lo = b2[b2.size() / 20], hi = b2[b2.size() - 1 - b2.size() / 20];
  double worst = 0.0;
  for (int c = 0; c < vocab.size(); ++c)
    for (double b : posterior_grid())
      if (b >= lo && b <= hi) worst = std::max(worst, std::abs(posterior(m, c, b) - m.categories[c].prior));
  CHECK(worst < 0.05);
}

TEST_CASE("too few wearers falls back to the prior") {
  std::vector<UserRecord> users = {user("a", Group::Average, 0.5, {{0}, {}}), user("b", Group::Plus, -1.0, {{}, {}})};
  const ShapeConditionalModel m = fit_shape_conditional(users, vocab3());
  CHECK(m.categories[0].fallback);
  CHECK(posterior(m, 0, 3.0) == doctest::Approx(m.categories[0].prior));
  users[1].beta2.reset();
  CHECK_THROWS_AS(fit_shape_conditional(users, vocab3()), Error);
}

TEST_CASE("NLL examples") {
  const std::vector<UserRecord> users = {user("a", Group::Average, 0.0, {{0}}), user("b", Group::Plus, 0.0, {{}})};
  MarginalModel half{{0.5, 0.5, 0.5}};
  Predictor p;
  p.marginal = &half;
  CHECK(nll(p, users, 3) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

  GroupModel sure{{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  Predictor g;
  g.kind = Predictor::Kind::Group;
  g.group = &sure;
  CHECK(nll(g, users, 3) < 3.0 * 1.1e-6);

  CHECK_THROWS_AS(nll(p, {}, 3), Error);
  std::vector<UserRecord> unlabeled = {user("c", Group::Unlabeled, 0.0, {{0}})};
  CHECK_THROWS_AS(nll(g, unlabeled, 3), Error);
}

TEST_CASE("NLL is invariant to user and category order") {
  const auto vocab = CategoryVocabulary::default_vocabulary();
  auto users = make_population(PopulationConfig{}, vocab);
  const MarginalModel m = fit_marginal(users, vocab);
  Predictor p;
  p.marginal = &m;
  const double a = nll(p, users, vocab.size());
  std::reverse(users.begin(), users.end());
  CHECK(nll(p, users, vocab.size()) == doctest::Approx(a).epsilon(1e-14));

  std::vector<std::string> names = vocab.names();
  std::reverse(names.begin(), names.end());
  const CategoryVocabulary rev(names);
  auto flipped = users;
  for (auto& u : flipped)
    for (auto& post : u.posts) {
      Post q;
      for (int c : post) q.insert(vocab.size() - 1 - c);
      post = q;
    }
  const MarginalModel mr = fit_marginal(flipped, rev);
  Predictor pr;
  pr.marginal = &mr;
  CHECK(nll(pr, flipped, rev.size()) == doctest::Approx(a).epsilon(1e-14));
}

TEST_CASE("body-type threshold") {
  CHECK(classify_bodytype(-1.0) == BodyType::Plus);
  CHECK(classify_bodytype(1.0) == BodyType::Average);
  CHECK(classify_bodytype(0.3, 0.3) == BodyType::Average);

  std::vector<UserRecord> pair = {user("p", Group::Plus, -0.1, {}), user("a", Group::Average, 0.1, {})};
  const ThresholdFit t = select_threshold(pair);
  CHECK(t.threshold == doctest::Approx(0.0).scale(1e-15));
  CHECK(t.accuracy == 1.0);

  std::vector<UserRecord> separated;
  for (int i = 0; i < 20; ++i) separated.push_back(user("u", i < 8 ? Group::Plus : Group::Average, i - 7.5, {}));
  CHECK(select_threshold(separated).accuracy == 1.0);

  std::vector<UserRecord> one_label = {user("p", Group::Plus, -0.1, {})};
  CHECK_THROWS_AS(select_threshold(one_label), Error);
}

TEST_CASE("threshold accuracy on shuffled labels stays near the majority rate") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution plus(0.3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<UserRecord> users;
    int n_plus = 0;
    for (int i = 0; i < 400; ++i) {
      const bool p = plus(rng);
      n_plus += p;
      users.push_back(user("u", p ? Group::Plus : Group::Average, n(rng), {}));
    }
    const double majority = std::max(n_plus, 400 - n_plus) / 400.0;
    worst = std::max(worst, select_threshold(users).accuracy - majority);
  }
  CHECK(worst < 0.06);
}

TEST_CASE("threshold labelling and split") {
  std::vector<UserRecord> users;
  for (int i = 0; i < 10; ++i) users.push_back(user("u" + std::to_string(i), Group::Unlabeled, i - 4.5, {{}}));
  const auto labelled = label_by_threshold(users);
  for (const auto& u : labelled) CHECK((u.group == Group::Plus) == (*u.beta2 < 0.0));

  const Split a = holdout_split(users, 0.3, 5), b = holdout_split(users, 0.3, 5);
  CHECK(a.holdout.size() == 3);
  CHECK(a.train.size() == 7);
  for (size_t i = 0; i < a.holdout.size(); ++i) CHECK(a.holdout[i].user_id == b.holdout[i].user_id);
  CHECK_THROWS_AS(holdout_split(users, 0.0, 5), Error);
  CHECK_THROWS_AS(holdout_split(users, 1.0, 5), Error);
  CHECK_THROWS_AS(holdout_split(users, 0.01, 5), Error);
}

TEST_CASE("population generator is seeded") {
  const auto vocab = CategoryVocabulary::default_vocabulary();
  const auto a = make_population(PopulationConfig{}, vocab);
  const auto b = make_population(PopulationConfig{}, vocab);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].beta2 == b[i].beta2);
    CHECK(a[i].posts == b[i].posts);
  }
  CHECK(posterior_grid().size() == 161);
  CHECK(posterior_grid().front() == -4.0);
  CHECK(posterior_grid().back() == doctest::Approx(4.0).epsilon(1e-12));
}
