#include "oilgame/dss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oilgame {

std::string_view to_string(Accuracy a) {
  switch (a) {
    case Accuracy::high: return "high";
    case Accuracy::medium: return "medium";
    case Accuracy::low: return "low";
  }
  return "high";
}

std::string_view to_string(Bias b) { return b == Bias::biased ? "biased" : "unbiased"; }

Accuracy accuracy_from_string(std::string_view s) {
  if (s == "high") return Accuracy::high;
  if (s == "medium") return Accuracy::medium;
  if (s == "low") return Accuracy::low;
  throw std::invalid_argument("unknown accuracy '" + std::string(s) + "'");
}

Bias bias_from_string(std::string_view s) {
  if (s == "biased") return Bias::biased;
  if (s == "unbiased") return Bias::unbiased;
  throw std::invalid_argument("unknown bias '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Feature basis

FeatureBasis::FeatureBasis(int degree, std::optional<TerrainGrid> terrain)
    : degree_(degree), terrain_(std::move(terrain)) {
  if (degree < 1) throw std::invalid_argument("polynomial degree must be >= 1");
  mean_ = Eigen::VectorXd::Zero(feature_count());
  scale_ = Eigen::VectorXd::Ones(feature_count());
}

Eigen::RowVectorXd FeatureBasis::monomials(const CellCoord& c) const {
  const double u = c.x / static_cast<double>(kBoardSize - 1);
  const double v = c.y / static_cast<double>(kBoardSize - 1);
  Eigen::RowVectorXd row(feature_count());
  int k = 0;
  row(k++) = terrain_ ? static_cast<double>(at(*terrain_, c) == kForest) : 1.0;
  for (int total = 1; total <= degree_; ++total)
    for (int i = total; i >= 0; --i) row(k++) = std::pow(u, i) * std::pow(v, total - i);
  return row;
}

void FeatureBasis::fit(std::span<const CellCoord> cells) {
  if (cells.empty()) throw std::invalid_argument("cannot fit a basis on zero cells");
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(cells.size()), feature_count());
  for (std::size_t i = 0; i < cells.size(); ++i) raw.row(static_cast<Eigen::Index>(i)) = monomials(cells[i]);
  mean_ = raw.colwise().mean().transpose();
  scale_.resize(feature_count());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double sd = std::sqrt((raw.col(j).array() - mean_(j)).square().mean());
    scale_(j) = sd > 1e-12 ? sd : 1.0;
  }
}

void FeatureBasis::set_statistics(Eigen::VectorXd mean, Eigen::VectorXd scale) {
  if (mean.size() != feature_count() || scale.size() != feature_count())
    throw std::invalid_argument("basis statistics have the wrong length");
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

Eigen::RowVectorXd FeatureBasis::standardized(const CellCoord& c) const {
  return ((monomials(c).transpose() - mean_).array() / scale_.array()).matrix().transpose();
}

Eigen::MatrixXd FeatureBasis::design(std::span<const CellCoord> cells) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(cells.size()), feature_count());
  for (std::size_t i = 0; i < cells.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = standardized(cells[i]);
  return x;
}

// ---------------------------------------------------------------------------
// Training

double DssModel::predict(const CellCoord& c) const { return intercept + basis.standardized(c).dot(coefficients); }

double drill_target(const GameMap& map, const CellCoord& c, Bias bias, const CostSchedule& cost) {
  return bias == Bias::biased ? map.yield(c) : map.yield(c) - cost.cost_of(map, c);
}

namespace {

std::size_t select_knot(const LassoPath<double>& path, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        KnotSelection selection) {
  const double n = static_cast<double>(y.size());
  const double tss = y.squaredNorm();
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < path.knots.size(); ++k) {
    const auto& knot = path.knots[k];
    const double dof = static_cast<double>((knot.coefficients.array() != 0.0).count());
    const double rss = (y - x * knot.coefficients).squaredNorm();
    if (rss <= 1e-12 * std::max(tss, 1e-300)) continue;
    double score = n * std::log(rss / n) + 2.0 * dof;
    if (selection == KnotSelection::aicc) {
      if (dof >= n - 1.0) continue;
      score += 2.0 * dof * (dof + 1.0) / (n - dof - 1.0);
    }
    if (score < best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

}  // namespace

DssModel fit_samples(std::vector<DrillSample> samples, const TrainOptions& options,
                     std::optional<TerrainGrid> terrain) {
  if (samples.empty()) throw std::invalid_argument("no drill samples");
  DssModel model;
  model.basis = FeatureBasis(options.degree, std::move(terrain));
  std::vector<CellCoord> cells;
  cells.reserve(samples.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    cells.push_back(samples[i].cell);
    y(static_cast<Eigen::Index>(i)) = samples[i].target;
  }
  model.basis.fit(cells);
  const Eigen::MatrixXd x = model.basis.design(cells);
  model.intercept = y.mean();
  const Eigen::VectorXd yc = y.array() - model.intercept;

  const auto path = lars_lasso_path(x, yc);
  if (options.lambda) {
    model.lambda = *options.lambda;
    model.coefficients = path.coefficients_at(*options.lambda);
  } else {
    const auto& knot = path.knots[select_knot(path, x, yc, options.selection)];
    model.lambda = knot.lambda;
    model.coefficients = knot.coefficients;
  }
  model.training_samples = std::move(samples);
  model.predictions = predict_all(model);
  return model;
}

DssModel train(const GameMap& map, Bias bias, const CostSchedule& cost, std::uint64_t seed,
               const TrainOptions& options) {
  if (options.n_drills < 1 || options.n_drills > kCellCount) throw std::invalid_argument("n_drills must lie in [1, 1024]");
  Rng rng(seed);
  std::vector<int> order(kCellCount);
  std::iota(order.begin(), order.end(), 0);
  std::vector<DrillSample> samples;
  samples.reserve(static_cast<std::size_t>(options.n_drills));
  for (int i = 0; i < options.n_drills; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(kCellCount - i)));
    std::swap(order[i], order[j]);
    const CellCoord c = CellCoord::from_index(order[i]);
    samples.push_back({c, drill_target(map, c, bias, cost)});
  }
  DssModel model =
      fit_samples(std::move(samples), options, options.terrain_feature ? std::optional(map.terrain) : std::nullopt);
  model.map_id = map.id;
  model.bias = bias;
  model.cost = cost;
  model.train_seed = seed;
  return model;
}

RealGrid predict_all(const DssModel& model) {
  RealGrid grid;
  for (int y = 0; y < kBoardSize; ++y)
    for (int x = 0; x < kBoardSize; ++x) grid(y, x) = model.predict({x, y});
  return grid;
}

// ---------------------------------------------------------------------------
// Recommendation

double top_quantile_threshold(const RealGrid& predictions, double top_fraction) {
  std::vector<double> v(predictions.data(), predictions.data() + kCellCount);
  const auto keep = static_cast<std::size_t>(std::ceil(top_fraction * kCellCount));
  const auto nth = v.begin() + static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(keep, 1, v.size()) - 1);
  std::nth_element(v.begin(), nth, v.end(), std::greater<>());
  return *nth;
}

CellCoord base_recommendation(const RealGrid& predictions, const std::function<bool(const CellCoord&)>& excluded,
                              Rng& rng) {
  const double threshold = top_quantile_threshold(predictions);
  std::vector<CellCoord> eligible;
  std::optional<CellCoord> best;
  for (int i = 0; i < kCellCount; ++i) {
    const CellCoord c = CellCoord::from_index(i);
    if (excluded && excluded(c)) continue;
    const double p = at(predictions, c);
    if (p >= threshold) eligible.push_back(c);
    if (!best || p > at(predictions, *best)) best = c;
  }
  if (!best) throw std::invalid_argument("every cell is excluded");
  if (eligible.empty()) return *best;
  return eligible[rng.below(eligible.size())];
}

std::optional<NoiseMixture> mixture_for(Accuracy accuracy) {
  switch (accuracy) {
    case Accuracy::high: return std::nullopt;
    case Accuracy::medium: return NoiseMixture{.p_small = 0.8};
    case Accuracy::low: return NoiseMixture{.p_small = 0.2};
  }
  return std::nullopt;
}

NoiseDraw sample_noise(const NoiseMixture& mixture, Rng& rng) {
  NoiseDraw d;
  d.small_branch = rng.bernoulli(mixture.p_small);
  const double sigma = d.small_branch ? mixture.small_sigma : mixture.large_sigma;
  d.dx = sigma * rng.normal();
  d.dy = sigma * rng.normal();
  return d;
}

CellCoord apply_noise(const CellCoord& cell, const NoiseDraw& draw) {
  const auto snap = [](double v) { return std::clamp(static_cast<int>(std::lround(v)), 0, kBoardSize - 1); };
  return {snap(cell.x + draw.dx), snap(cell.y + draw.dy)};
}

CellCoord degrade(const CellCoord& cell, const NoiseMixture& mixture, Rng& rng) {
  return apply_noise(cell, sample_noise(mixture, rng));
}

CellCoord degrade(const CellCoord& cell, Accuracy accuracy, Rng& rng) {
  const auto mixture = mixture_for(accuracy);
  return mixture ? degrade(cell, *mixture, rng) : cell;
}

std::vector<CellCoord> precompute_sequence(const DssModel& model, Accuracy accuracy, int length, Rng& rng) {
  if (length < kRoundsPerGame) throw std::invalid_argument("recommendation sequence must cover 25 rounds");
  std::vector<bool> picked(kCellCount, false);
  std::vector<CellCoord> base;
  base.reserve(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    const CellCoord c = base_recommendation(model.predictions, [&](const CellCoord& q) { return picked[q.index()]; }, rng);
    picked[c.index()] = true;
    base.push_back(c);
  }
  for (auto& c : base) c = degrade(c, accuracy, rng);
  return base;
}

std::optional<CellCoord> next_from_sequence(std::span<const CellCoord> sequence, std::size_t& cursor,
                                            const std::function<bool(const CellCoord&)>& clicked) {
  while (cursor < sequence.size()) {
    const CellCoord c = sequence[cursor++];
    if (!clicked(c)) return c;
  }
  return std::nullopt;
}

RecommendationStream::RecommendationStream(std::shared_ptr<const DssModel> model)
    : model_(std::move(model)), fallback_rng_(model_ ? model_->fallback_seed : 0) {
  if (!model_) throw std::invalid_argument("RecommendationStream requires a model");
}

CellCoord RecommendationStream::next(const GameState& state) {
  const auto clicked = [&](const CellCoord& c) { return state.is_clicked(c); };
  if (auto c = next_from_sequence(model_->rec_sequence, cursor_, clicked)) return *c;
  ++fallback_draws_;
  const CellCoord base = base_recommendation(model_->predictions, clicked, fallback_rng_);
  const CellCoord noisy = degrade(base, model_->accuracy, fallback_rng_);
  return clicked(noisy) ? base : noisy;
}

GameState dss_alone_play(std::shared_ptr<const DssModel> model, std::shared_ptr<const GameMap> map,
                         const CostSchedule& cost) {
  GameState state(std::move(map), cost);
  RecommendationStream stream(std::move(model));
  for (int r = 0; r < kRoundsPerGame; ++r) {
    const CellCoord rec = stream.next(state);
    state.click(rec, rec, (r + 1) * 1000);
  }
  return state;
}

std::shared_ptr<const DssModel> build_model(const GameMap& map, Bias bias, const CostSchedule& cost, Accuracy accuracy,
                                            std::uint64_t master_seed, const TrainOptions& options,
                                            int sequence_length) {
  const auto cost_tag = static_cast<std::uint64_t>(std::llround(cost.forest_cost * 1000.0));
  const auto design_tag = derive_seed(master_seed, {hash_tag(map.id), static_cast<std::uint64_t>(bias), cost_tag});
  auto model = train(map, bias, cost, derive_seed(design_tag, {1}), options);
  model.accuracy = accuracy;
  // Shared across accuracy levels, so every level starts from the same base picks.
  model.sequence_seed = derive_seed(design_tag, {2});
  model.fallback_seed = derive_seed(design_tag, {3, static_cast<std::uint64_t>(accuracy)});
  Rng rng(model.sequence_seed);
  model.rec_sequence = precompute_sequence(model, accuracy, sequence_length, rng);
  return std::make_shared<const DssModel>(std::move(model));
}

std::shared_ptr<const DssModel> ModelBank::get(const GameMap& map, Bias bias, const CostSchedule& cost,
                                               Accuracy accuracy) {
  const auto key = std::make_tuple(map.id, static_cast<int>(bias), cost.forest_cost, static_cast<int>(accuracy));
  std::lock_guard lock(mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  auto model = build_model(map, bias, cost, accuracy, master_seed_, options_, sequence_length_);
  cache_.emplace(key, model);
  return model;
}

// ---------------------------------------------------------------------------
// Model dump

nlohmann::ordered_json to_json(const DssModel& model) {
  nlohmann::ordered_json j;
  j["map_id"] = model.map_id;
  j["basis"] = {{"kind", "polynomial"},
                {"degree", model.basis.degree()},
                {"terrain_feature", model.basis.terrain().has_value()},
                {"mean", std::vector<double>(model.basis.mean().begin(), model.basis.mean().end())},
                {"scale", std::vector<double>(model.basis.scale().begin(), model.basis.scale().end())}};
  j["coefficients"] = std::vector<double>(model.coefficients.begin(), model.coefficients.end());
  j["intercept"] = model.intercept;
  j["lambda"] = model.lambda;
  j["accuracy"] = std::string(to_string(model.accuracy));
  j["bias"] = std::string(to_string(model.bias));
  j["forest_cost"] = model.cost.forest_cost;
  auto samples = nlohmann::ordered_json::array();
  for (const auto& s : model.training_samples) samples.push_back({s.cell.x, s.cell.y, s.target});
  j["training_samples"] = std::move(samples);
  auto seq = nlohmann::ordered_json::array();
  for (const auto& c : model.rec_sequence) seq.push_back({c.x, c.y});
  j["rec_sequence"] = std::move(seq);
  j["seeds"] = {{"train", model.train_seed}, {"sequence", model.sequence_seed}, {"fallback", model.fallback_seed}};
  return j;
}

DssModel model_from_json(const nlohmann::json& j, const GameMap& map) {
  if (j.at("map_id").get<std::string>() != map.id) throw std::invalid_argument("model dump belongs to another map");
  DssModel m;
  const auto& basis = j.at("basis");
  m.basis = FeatureBasis(basis.at("degree").get<int>(),
                         basis.at("terrain_feature").get<bool>() ? std::optional(map.terrain) : std::nullopt);
  const auto mean = j.at("basis").at("mean").get<std::vector<double>>();
  const auto scale = j.at("basis").at("scale").get<std::vector<double>>();
  m.basis.set_statistics(Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                         Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size())));
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  if (static_cast<int>(coef.size()) != m.basis.feature_count()) throw std::invalid_argument("coefficient count mismatch");
  m.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  m.map_id = j.at("map_id").get<std::string>();
  m.intercept = j.at("intercept").get<double>();
  m.lambda = j.at("lambda").get<double>();
  m.accuracy = accuracy_from_string(j.at("accuracy").get<std::string>());
  m.bias = bias_from_string(j.at("bias").get<std::string>());
  m.cost.forest_cost = j.at("forest_cost").get<double>();
  for (const auto& s : j.at("training_samples")) m.training_samples.push_back({{s[0].get<int>(), s[1].get<int>()}, s[2].get<double>()});
  for (const auto& c : j.at("rec_sequence")) m.rec_sequence.push_back({c[0].get<int>(), c[1].get<int>()});
  m.train_seed = j.at("seeds").at("train").get<std::uint64_t>();
  m.sequence_seed = j.at("seeds").at("sequence").get<std::uint64_t>();
  m.fallback_seed = j.at("seeds").at("fallback").get<std::uint64_t>();
  m.predictions = predict_all(m);
  return m;
}

}  // namespace oilgame
