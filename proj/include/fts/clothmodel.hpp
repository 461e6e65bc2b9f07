#pragma once

// Clothing-category statistics conditioned on body shape: a 1D Gaussian KDE
// over beta2, three predictive models, held-out NLL and the beta2 threshold
// body-type classifier.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fts {

class CategoryVocabulary {
 public:
  // Throws InvalidArgument on an empty list or duplicate names.
  explicit CategoryVocabulary(std::vector<std::string> names);
  static CategoryVocabulary default_vocabulary();

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(static_cast<size_t>(i)); }
  const std::vector<std::string>& names() const { return names_; }
  // -1 when absent.
  int index(const std::string& name) const;

 private:
  std::vector<std::string> names_;
};

enum class Group { Average, Plus, Unlabeled };

// A post is the set of category indices it shows.
using Post = std::set<int>;

struct UserRecord {
  std::string user_id;
  Group group = Group::Unlabeled;
  std::optional<double> beta2;
  std::vector<Post> posts;
};

struct Kde1D {
  std::vector<double> samples;
  double bandwidth = 1.0;
};

// 1.06 sigma N^(-1/5); when the spread is zero the rule falls back to 1.06 N^(-1/5).
double silverman_bandwidth(const std::vector<double>& samples);
// Throws EmptySamples / InvalidArgument.
Kde1D make_kde(std::vector<double> samples, std::optional<double> bandwidth = std::nullopt);
double kde_eval(const Kde1D& kde, double x);

// Laplace-smoothed per-category frequencies over posts.
struct MarginalModel {
  std::vector<double> p;
};

struct GroupModel {
  std::vector<double> p_average;
  std::vector<double> p_plus;
};

struct CategoryShapeModel {
  Kde1D wearers;
  Kde1D non_wearers;
  double prior = 0.5;
  bool fallback = false;  // too few wearers or non-wearers: posterior is the prior
};

struct ShapeConditionalModel {
  std::vector<CategoryShapeModel> categories;
  Kde1D marginal;
};

MarginalModel fit_marginal(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab);
GroupModel fit_group_conditional(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab);
// Without a bandwidth, every KDE shares Silverman's rule over the per-post beta2 sample.
ShapeConditionalModel fit_shape_conditional(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab,
                                            std::optional<double> bandwidth = std::nullopt);

inline constexpr double kProbClamp = 1e-6;

// Two-hypothesis Bayes posterior p(c | beta2), clamped to [1e-6, 1 - 1e-6].
double posterior(const ShapeConditionalModel& model, int category, double beta2);
// Same rule from raw likelihoods and prior.
double posterior_from(double like_wear, double like_not, double prior);

// Per-user, per-category wear probability under a model.
struct Predictor {
  enum class Kind { Marginal, Group, Shape } kind = Kind::Marginal;
  const MarginalModel* marginal = nullptr;
  const GroupModel* group = nullptr;
  const ShapeConditionalModel* shape = nullptr;

  double probability(const UserRecord& user, int category) const;
};

// -(1/N) sum_users sum_categories sum_posts log Bernoulli(indicator; p).
// Throws NoData on empty input, MissingGroup / MissingShape when the model
// needs a field the user lacks.
double nll(const Predictor& model, const std::vector<UserRecord>& users, int n_categories);

enum class BodyType { Plus, Average };
BodyType classify_bodytype(double beta2, double threshold = 0.0);

struct ThresholdFit {
  double threshold = 0.0;
  double accuracy = 0.0;
};
// Exhaustive scan over midpoints of the sorted labelled beta2 values.
ThresholdFit select_threshold(const std::vector<UserRecord>& users);
double threshold_accuracy(const std::vector<UserRecord>& users, double threshold);

// Assigns group labels from the thresholded beta2 (every user needs beta2).
std::vector<UserRecord> label_by_threshold(std::vector<UserRecord> users, double threshold = 0.0);

// Seeded user-level split; holdout fraction in (0, 1).
struct Split {
  std::vector<UserRecord> train;
  std::vector<UserRecord> holdout;
};
Split holdout_split(const std::vector<UserRecord>& users, double fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic population.

struct PopulationConfig {
  std::uint64_t seed = 1;
  int n_users = 180;
  int posts_per_user = 5;
  int n_correlated = 4;    // leading categories whose wear probability is logistic in beta2
  double slope = 1.5;
  double plus_fraction = 0.22;
  double independent_rate = 0.25;
};

std::vector<UserRecord> make_population(const PopulationConfig& config, const CategoryVocabulary& vocab);

// Posterior curves on beta2 in [-4, 4] step 0.05.
std::vector<double> posterior_grid();

}  // namespace fts
