#include "fts/clothmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_set>

#include "fts/error.hpp"

namespace fts {

CategoryVocabulary::CategoryVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw Error(Errc::InvalidArgument, "vocabulary is empty");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(Errc::InvalidArgument, "empty category name");
    if (!seen.insert(n).second) throw Error(Errc::InvalidArgument, "duplicate category '" + n + "'");
  }
}

CategoryVocabulary CategoryVocabulary::default_vocabulary() {
  return CategoryVocabulary({"Dress", "Skirt", "Short", "Cardigan", "Jacket", "Leggings", "Tee-and-Tank",
                             "Category-8", "Category-9", "Category-10", "Category-11", "Category-12",
                             "Category-13", "Category-14"});
}

int CategoryVocabulary::index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

// ---------------------------------------------------------------------------

double silverman_bandwidth(const std::vector<double>& samples) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "no samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  const double sd = samples.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  const double scale = sd > 1e-12 ? sd : 1.0;
  return 1.06 * scale * std::pow(n, -0.2);
}

Kde1D make_kde(std::vector<double> samples, std::optional<double> bandwidth) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "no samples");
  for (double s : samples)
    if (!std::isfinite(s)) throw Error(Errc::InvalidArgument, "non-finite KDE sample");
  Kde1D kde;
  kde.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (!(kde.bandwidth > 0.0) || !std::isfinite(kde.bandwidth))
    throw Error(Errc::InvalidArgument, "bandwidth must be positive");
  kde.samples = std::move(samples);
  return kde;
}

double kde_eval(const Kde1D& kde, double x) {
  if (kde.samples.empty()) throw Error(Errc::EmptySamples, "no samples");
  if (!(kde.bandwidth > 0.0)) throw Error(Errc::InvalidArgument, "bandwidth must be positive");
  const double h = kde.bandwidth;
  double sum = 0.0;
  for (double s : kde.samples) {
    const double u = (x - s) / h;
    sum += std::exp(-0.5 * u * u);
  }
  return sum * std::numbers::inv_sqrtpi / std::numbers::sqrt2 / (static_cast<double>(kde.samples.size()) * h);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> smoothed_frequencies(const std::vector<const UserRecord*>& users, int z) {
  std::vector<double> count(static_cast<size_t>(z), 0.0);
  double n = 0.0;
  for (const UserRecord* u : users) {
    for (const Post& post : u->posts) {
      n += 1.0;
      for (int c : post)
        if (c >= 0 && c < z) count[static_cast<size_t>(c)] += 1.0;
    }
  }
  if (n == 0.0) throw Error(Errc::NoData, "no posts");
  std::vector<double> p(static_cast<size_t>(z));
  for (int c = 0; c < z; ++c) p[static_cast<size_t>(c)] = (count[static_cast<size_t>(c)] + 1.0) / (n + 2.0);
  return p;
}

std::vector<const UserRecord*> all_of(const std::vector<UserRecord>& users) {
  std::vector<const UserRecord*> out;
  for (const auto& u : users) out.push_back(&u);
  return out;
}

std::vector<const UserRecord*> in_group(const std::vector<UserRecord>& users, Group g) {
  std::vector<const UserRecord*> out;
  for (const auto& u : users)
    if (u.group == g) out.push_back(&u);
  return out;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

MarginalModel fit_marginal(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab) {
  return {smoothed_frequencies(all_of(users), vocab.size())};
}

GroupModel fit_group_conditional(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab) {
  const auto avg = in_group(users, Group::Average);
  const auto plus = in_group(users, Group::Plus);
  if (avg.empty()) throw Error(Errc::MissingGroup, "no users in the average group");
  if (plus.empty()) throw Error(Errc::MissingGroup, "no users in the plus group");
  return {smoothed_frequencies(avg, vocab.size()), smoothed_frequencies(plus, vocab.size())};
}

ShapeConditionalModel fit_shape_conditional(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab,
                                            std::optional<double> bandwidth) {
  if (users.empty()) throw Error(Errc::NoData, "no users");
  std::vector<double> all;
  for (const auto& u : users) {
    if (!u.beta2 || !std::isfinite(*u.beta2))
      throw Error(Errc::MissingShape, "user '" + u.user_id + "' has no beta2");
    all.push_back(*u.beta2);
  }
  const MarginalModel marg = fit_marginal(users, vocab);
  // One bandwidth for every density, from the pooled per-post sample.
  if (!bandwidth) {
    std::vector<double> posts;
    for (const auto& u : users) posts.insert(posts.end(), u.posts.size(), *u.beta2);
    bandwidth = silverman_bandwidth(posts.empty() ? all : posts);
  }
  ShapeConditionalModel model;
  model.marginal = make_kde(all, bandwidth);
  for (int c = 0; c < vocab.size(); ++c) {
    std::vector<double> wear, other;
    for (const auto& u : users)
      for (const Post& post : u.posts) (post.count(c) ? wear : other).push_back(*u.beta2);
    CategoryShapeModel cm;
    cm.prior = marg.p[static_cast<size_t>(c)];
    if (wear.size() < 2 || other.size() < 2) {
      cm.fallback = true;
      cm.wearers = model.marginal;
      cm.non_wearers = model.marginal;
    } else {
      cm.wearers = make_kde(std::move(wear), bandwidth);
      cm.non_wearers = make_kde(std::move(other), bandwidth);
    }
    model.categories.push_back(std::move(cm));
  }
  return model;
}

double posterior_from(double like_wear, double like_not, double prior) {
  const double a = like_wear * prior;
  const double b = like_not * (1.0 - prior);
  if (!(a + b > 0.0)) return clamp_prob(prior);
  return clamp_prob(a / (a + b));
}

double posterior(const ShapeConditionalModel& model, int category, double beta2) {
  const auto& cm = model.categories.at(static_cast<size_t>(category));
  if (cm.fallback) return clamp_prob(cm.prior);
  return posterior_from(kde_eval(cm.wearers, beta2), kde_eval(cm.non_wearers, beta2), cm.prior);
}

double Predictor::probability(const UserRecord& user, int category) const {
  const auto c = static_cast<size_t>(category);
  switch (kind) {
    case Kind::Marginal: return clamp_prob(marginal->p.at(c));
    case Kind::Group:
      if (user.group == Group::Average) return clamp_prob(group->p_average.at(c));
      if (user.group == Group::Plus) return clamp_prob(group->p_plus.at(c));
      throw Error(Errc::MissingGroup, "user '" + user.user_id + "' is unlabeled");
    case Kind::Shape:
      if (!user.beta2) throw Error(Errc::MissingShape, "user '" + user.user_id + "' has no beta2");
      return posterior(*shape, category, *user.beta2);
  }
  return 0.5;
}

double nll(const Predictor& model, const std::vector<UserRecord>& users, int n_categories) {
  if (users.empty()) throw Error(Errc::NoData, "no held-out users");
  double total = 0.0;
  for (const auto& u : users) {
    for (int c = 0; c < n_categories; ++c) {
      const double p = model.probability(u, c);
      const double lp = std::log(p), lq = std::log1p(-p);
      for (const Post& post : u.posts) total += post.count(c) ? lp : lq;
    }
  }
  return -total / static_cast<double>(users.size());
}

// ---------------------------------------------------------------------------

BodyType classify_bodytype(double beta2, double threshold) {
  return beta2 < threshold ? BodyType::Plus : BodyType::Average;
}

double threshold_accuracy(const std::vector<UserRecord>& users, double threshold) {
  int total = 0, right = 0;
  for (const auto& u : users) {
    if (u.group == Group::Unlabeled || !u.beta2) continue;
    ++total;
    const bool plus = classify_bodytype(*u.beta2, threshold) == BodyType::Plus;
    if (plus == (u.group == Group::Plus)) ++right;
  }
  return total ? static_cast<double>(right) / total : 0.0;
}

ThresholdFit select_threshold(const std::vector<UserRecord>& users) {
  std::vector<double> values;
  bool has_a = false, has_p = false;
  for (const auto& u : users) {
    if (u.group == Group::Unlabeled || !u.beta2) continue;
    values.push_back(*u.beta2);
    has_a |= u.group == Group::Average;
    has_p |= u.group == Group::Plus;
  }
  if (!has_a || !has_p) throw Error(Errc::MissingGroup, "threshold selection needs both labels");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> candidates;
  for (size_t i = 0; i + 1 < values.size(); ++i) candidates.push_back(0.5 * (values[i] + values[i + 1]));
  if (candidates.empty()) candidates.push_back(values.front());
  ThresholdFit best{0.0, -1.0};
  for (double t : candidates) {
    const double acc = threshold_accuracy(users, t);
    if (acc > best.accuracy || (acc == best.accuracy && std::abs(t) < std::abs(best.threshold)))
      best = {t, acc};
  }
  return best;
}

std::vector<UserRecord> label_by_threshold(std::vector<UserRecord> users, double threshold) {
  for (auto& u : users) {
    if (!u.beta2) throw Error(Errc::MissingShape, "user '" + u.user_id + "' has no beta2");
    u.group = classify_bodytype(*u.beta2, threshold) == BodyType::Plus ? Group::Plus : Group::Average;
  }
  return users;
}

Split holdout_split(const std::vector<UserRecord>& users, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(Errc::InvalidArgument, "holdout fraction must be in (0, 1)");
  std::vector<size_t> order(users.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  const auto n_hold = static_cast<size_t>(std::lround(fraction * static_cast<double>(users.size())));
  if (n_hold == 0 || n_hold >= users.size()) throw Error(Errc::InvalidArgument, "holdout split leaves an empty side");
  std::vector<bool> hold(users.size(), false);
  for (size_t i = 0; i < n_hold; ++i) hold[order[i]] = true;
  Split s;
  for (size_t i = 0; i < users.size(); ++i) (hold[i] ? s.holdout : s.train).push_back(users[i]);
  return s;
}

// ---------------------------------------------------------------------------

std::vector<UserRecord> make_population(const PopulationConfig& config, const CategoryVocabulary& vocab) {
  if (config.n_users < 1 || config.posts_per_user < 1) throw Error(Errc::InvalidArgument, "empty population");
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> plus_shape(-1.5, 0.8);
  std::normal_distribution<double> avg_shape(0.5, 0.8);
  const int z = vocab.size();
  std::vector<UserRecord> users;
  for (int i = 0; i < config.n_users; ++i) {
    UserRecord u;
    u.user_id = "u" + std::to_string(i);
    const bool plus = unit(rng) < config.plus_fraction;
    u.group = plus ? Group::Plus : Group::Average;
    const double b2 = plus ? plus_shape(rng) : avg_shape(rng);
    u.beta2 = b2;
    for (int p = 0; p < config.posts_per_user; ++p) {
      Post post;
      for (int c = 0; c < z; ++c) {
        double prob = config.independent_rate;
        if (c < config.n_correlated) {
          const double sign = c % 2 == 0 ? -1.0 : 1.0;
          prob = 1.0 / (1.0 + std::exp(-sign * config.slope * b2));
        }
        if (unit(rng) < prob) post.insert(c);
      }
      u.posts.push_back(std::move(post));
    }
    users.push_back(std::move(u));
  }
  return users;
}

std::vector<double> posterior_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 160; ++i) g.push_back(-4.0 + 0.05 * i);
  return g;
}

}  // namespace fts
