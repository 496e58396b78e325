#include "oilgame/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace oilgame {

namespace {

constexpr std::array<ReportKind, 8> kKinds{ReportKind::scores,   ReportKind::time,    ReportKind::reliance,
                                           ReportKind::badplays, ReportKind::explore, ReportKind::clusters,
                                           ReportKind::survey,   ReportKind::ordering};
constexpr std::array<Difficulty, 3> kSlots{Difficulty::easy, Difficulty::medium, Difficulty::hard};
constexpr std::array<Accuracy, 3> kAccuracies{Accuracy::high, Accuracy::medium, Accuracy::low};

const std::string kNA = "NA";

std::string str(std::string_view s) { return std::string(s); }
std::string num(std::size_t n) { return std::to_string(n); }

}  // namespace

std::string_view to_string(ReportKind k) {
  switch (k) {
    case ReportKind::scores: return "scores";
    case ReportKind::time: return "time";
    case ReportKind::reliance: return "reliance";
    case ReportKind::badplays: return "badplays";
    case ReportKind::explore: return "explore";
    case ReportKind::clusters: return "clusters";
    case ReportKind::survey: return "survey";
    case ReportKind::ordering: return "ordering";
  }
  return "scores";
}

ReportKind report_from_string(std::string_view s) {
  for (auto k : kKinds)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown report '" + std::string(s) + "'");
}

const std::vector<ReportKind>& all_reports() {
  static const std::vector<ReportKind> kinds(kKinds.begin(), kKinds.end());
  return kinds;
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw std::logic_error("row width differs from header in " + name);
  rows.push_back(std::move(row));
}

const Table* Report::table(std::string_view name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

std::string fmt_num(double v) {
  if (std::isnan(v)) return kNA;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  auto s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct Ctx {
  const Dataset& data;
  const ReportOptions& opt;
  std::vector<const SessionData*> sessions;
  std::vector<ConditionLabel> labels;

  Ctx(const Dataset& d, const ReportOptions& o) : data(d), opt(o) {
    for (auto l : d.definition.labels)
      if (!o.condition || *o.condition == l) labels.push_back(l);
    for (const auto& s : d.sessions)
      if (std::find(labels.begin(), labels.end(), s.condition.label) != labels.end()) sessions.push_back(&s);
  }

  /// Complete games passing a filter, with their sessions.
  std::vector<std::pair<const SessionData*, const GameData*>> games(
      const std::function<bool(const SessionData&, const GameData&)>& keep = {}) const {
    std::vector<std::pair<const SessionData*, const GameData*>> out;
    for (const auto* s : sessions)
      for (const auto& g : s->games)
        if (g.complete() && (!keep || keep(*s, g))) out.emplace_back(s, &g);
    return out;
  }
};

using GameList = std::vector<std::pair<const SessionData*, const GameData*>>;

std::vector<double> play_scores(const GameList& games) {
  std::vector<double> v;
  for (const auto& [s, g] : games)
    for (const auto& e : g->plays) v.push_back(e.play_score);
  return v;
}

std::vector<double> game_scores(const GameList& games) {
  std::vector<double> v;
  for (const auto& [s, g] : games) v.push_back(g->score());
  return v;
}

/// Pooled median of plays, or median of per-session medians.
double play_median(const GameList& games, MedianMode mode) {
  if (games.empty()) return std::nan("");
  if (mode == MedianMode::pooled) return median(play_scores(games));
  std::map<std::string, std::vector<double>> by_session;
  std::vector<std::string> order;
  for (const auto& [s, g] : games) {
    auto [it, inserted] = by_session.try_emplace(s->session_id);
    if (inserted) order.push_back(s->session_id);
    for (const auto& e : g->plays) it->second.push_back(e.play_score);
  }
  std::vector<double> medians;
  for (const auto& id : order) medians.push_back(median(by_session[id]));
  return median(medians);
}

std::string opt_mean(const std::vector<double>& v) { return v.empty() ? kNA : fmt_num(mean(v)); }
std::string opt_median(const std::vector<double>& v) { return v.empty() ? kNA : fmt_num(median(v)); }
std::string opt_sd(const std::vector<double>& v) { return v.size() < 2 ? kNA : fmt_num(stddev(v)); }

/// Test columns: statistic and p, or NA when either side is empty.
std::vector<std::string> ks_cells(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {kNA, kNA};
  const auto r = ks_2sample(a, b);
  return {fmt_num(r.statistic), fmt_num(r.p_value)};
}

std::vector<std::string> t_cells(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {kNA, kNA};
  const auto r = welch_t(a, b);
  return {fmt_num(r.statistic), fmt_num(r.p_value)};
}

template <typename... Parts>
std::vector<std::string> cat(Parts&&... parts) {
  std::vector<std::string> out;
  auto push = [&](auto&& p) {
    if constexpr (std::is_convertible_v<decltype(p), std::string>) {
      out.emplace_back(p);
    } else {
      out.insert(out.end(), p.begin(), p.end());
    }
  };
  (push(std::forward<Parts>(parts)), ...);
  return out;
}

bool has_treatment(const std::vector<ConditionLabel>& labels) {
  return std::any_of(labels.begin(), labels.end(), [](auto l) { return l != ConditionLabel::control; });
}

// ---------------------------------------------------------------------------

Report scores_report(const Ctx& ctx) {
  Report rep{ReportKind::scores};
  const auto& def = ctx.data.definition;

  Table scores{"scores",
               {"map_id", "difficulty", "condition", "forest_cost", "games", "plays", "median_play_score",
                "mean_play_score", "median_game_score", "mean_game_score"}};
  for (auto d : kSlots) {
    for (auto l : ctx.labels) {
      const auto games = ctx.games([&](const SessionData& s, const GameData& g) {
        return g.difficulty == d && s.condition.label == l;
      });
      const auto plays = play_scores(games), totals = game_scores(games);
      const auto cond = condition_for(l, def.control_cost);
      scores.add({def.map_for(d).id, str(to_string(d)), str(to_string(l)), fmt_num(cond.forest_cost),
                  num(games.size()), num(plays.size()), games.empty() ? kNA : fmt_num(play_median(games, ctx.opt.medians)),
                  opt_mean(plays), opt_median(totals), opt_mean(totals)});
    }
  }
  rep.tables.push_back(std::move(scores));

  if (has_treatment(ctx.labels)) {
    ModelBank bank(def.master_seed, def.dss, def.sequence_length);
    Table alone{"dss_alone",
                {"map_id", "difficulty", "condition", "accuracy", "dss_alone_score", "dss_alone_median_play", "games",
                 "human_mean_game_score", "human_median_play", "share_at_or_above_dss", "ks_d", "ks_p"}};
    for (auto d : kSlots) {
      for (auto l : ctx.labels) {
        if (l == ConditionLabel::control) continue;
        const auto cond = condition_for(l, def.control_cost);
        for (auto a : kAccuracies) {
          const auto map = def.map_ptr(d);
          const auto solo = dss_alone_play(bank.get(*map, *cond.bias, cond.cost(), a), map, cond.cost());
          std::vector<double> solo_plays;
          for (const auto& e : solo.events()) solo_plays.push_back(e.play_score);
          const auto games = ctx.games([&](const SessionData& s, const GameData& g) {
            return g.difficulty == d && s.condition.label == l && g.accuracy == a;
          });
          const auto plays = play_scores(games), totals = game_scores(games);
          const auto above = std::count_if(totals.begin(), totals.end(), [&](double v) { return v >= solo.score(); });
          alone.add(cat(def.map_for(d).id, str(to_string(d)), str(to_string(l)), str(to_string(a)),
                        fmt_num(solo.score()), fmt_num(median(solo_plays)), num(games.size()), opt_mean(totals),
                        games.empty() ? kNA : fmt_num(play_median(games, ctx.opt.medians)),
                        totals.empty() ? kNA : fmt_num(static_cast<double>(above) / totals.size()),
                        ks_cells(plays, solo_plays)));
        }
      }
    }
    rep.tables.push_back(std::move(alone));

    Table acc{"accuracy_tests",
              {"scope", "accuracy_a", "accuracy_b", "plays_a", "plays_b", "median_a", "median_b", "ks_d", "ks_p",
               "t", "t_p"}};
    auto accuracy_rows = [&](const std::string& scope, std::optional<Difficulty> d) {
      for (auto [a, b] : {std::pair{Accuracy::high, Accuracy::medium}, std::pair{Accuracy::medium, Accuracy::low}}) {
        auto pick = [&](Accuracy x) {
          return ctx.games([&](const SessionData& s, const GameData& g) {
            return s.condition.treatment() && g.accuracy == x && (!d || g.difficulty == *d);
          });
        };
        const auto ga = pick(a), gb = pick(b);
        const auto pa = play_scores(ga), pb = play_scores(gb);
        acc.add(cat(scope, str(to_string(a)), str(to_string(b)), num(pa.size()), num(pb.size()),
                    ga.empty() ? kNA : fmt_num(play_median(ga, ctx.opt.medians)),
                    gb.empty() ? kNA : fmt_num(play_median(gb, ctx.opt.medians)), ks_cells(pa, pb), t_cells(pa, pb)));
      }
    };
    accuracy_rows("all", std::nullopt);
    for (auto d : kSlots) accuracy_rows(def.map_for(d).id, d);
    rep.tables.push_back(std::move(acc));

    Table bias{"bias_tests",
               {"map_id", "forest_cost", "plays_biased", "plays_unbiased", "median_biased", "median_unbiased",
                "mean_biased", "mean_unbiased", "t", "t_p", "ks_d", "ks_p"}};
    for (auto d : kSlots) {
      for (double cost : {kLowCost, kHighCost}) {
        auto pick = [&](Bias b) {
          return ctx.games([&](const SessionData& s, const GameData& g) {
            return s.condition.treatment() && s.condition.bias == b && g.cost.forest_cost == cost && g.difficulty == d;
          });
        };
        const auto gb = pick(Bias::biased), gu = pick(Bias::unbiased);
        if (gb.empty() && gu.empty()) continue;
        const auto pb = play_scores(gb), pu = play_scores(gu);
        bias.add(cat(def.map_for(d).id, fmt_num(cost), num(pb.size()), num(pu.size()),
                     gb.empty() ? kNA : fmt_num(play_median(gb, ctx.opt.medians)),
                     gu.empty() ? kNA : fmt_num(play_median(gu, ctx.opt.medians)), opt_mean(pb), opt_mean(pu),
                     t_cells(pb, pu), ks_cells(pb, pu)));
      }
    }
    rep.tables.push_back(std::move(bias));
  }

  if (std::find(ctx.labels.begin(), ctx.labels.end(), ConditionLabel::control) != ctx.labels.end() &&
      has_treatment(ctx.labels)) {
    Table vs{"dss_vs_control",
             {"map_id", "plays_control", "plays_dss", "median_control", "median_dss", "t", "t_p", "ks_d", "ks_p"}};
    for (auto d : kSlots) {
      const auto gc = ctx.games([&](const SessionData& s, const GameData& g) {
        return !s.condition.treatment() && g.difficulty == d;
      });
      const auto gt = ctx.games([&](const SessionData& s, const GameData& g) {
        return s.condition.treatment() && g.difficulty == d;
      });
      const auto pc = play_scores(gc), pt = play_scores(gt);
      vs.add(cat(def.map_for(d).id, num(pc.size()), num(pt.size()),
                 gc.empty() ? kNA : fmt_num(play_median(gc, ctx.opt.medians)),
                 gt.empty() ? kNA : fmt_num(play_median(gt, ctx.opt.medians)), t_cells(pt, pc), ks_cells(pt, pc)));
    }
    rep.tables.push_back(std::move(vs));
  }
  return rep;
}

Report time_report(const Ctx& ctx) {
  Report rep{ReportKind::time};
  const auto all = ctx.games();
  if (all.empty()) {
    rep.status = ReportStatus::empty;
    rep.note = "no complete games";
    return rep;
  }
  const double limit_ms = ctx.opt.outlier_seconds * 1000.0;
  auto seconds = [](const GameList& games) {
    std::vector<double> v;
    for (const auto& [s, g] : games) v.push_back(static_cast<double>(*g->duration_ms()) / 1000.0);
    return v;
  };

  Table by{"time_by_condition",
           {"condition", "games", "median_s", "mean_s", "sd_s", "outliers", "median_tutorial_s"}};
  for (auto l : ctx.labels) {
    const auto games = ctx.games([&](const SessionData& s, const GameData&) { return s.condition.label == l; });
    const auto secs = seconds(games);
    const auto outliers = std::count_if(secs.begin(), secs.end(), [&](double v) { return v * 1000.0 > limit_ms; });
    std::vector<double> tutorial;
    for (const auto* s : ctx.sessions)
      if (s->condition.label == l && s->tutorial_ms) tutorial.push_back(static_cast<double>(*s->tutorial_ms) / 1000.0);
    by.add({str(to_string(l)), num(games.size()), opt_median(secs), opt_mean(secs), opt_sd(secs),
            num(static_cast<std::size_t>(outliers)), opt_median(tutorial)});
  }
  rep.tables.push_back(std::move(by));

  Table test{"time_tests", {"group_a", "group_b", "games_a", "games_b", "mean_a_s", "mean_b_s", "t", "t_p"}};
  const auto ctrl = seconds(ctx.games([](const SessionData& s, const GameData&) { return !s.condition.treatment(); }));
  const auto dss = seconds(ctx.games([](const SessionData& s, const GameData&) { return s.condition.treatment(); }));
  test.add(cat(std::string("dss"), std::string("control"), num(dss.size()), num(ctrl.size()), opt_mean(dss),
               opt_mean(ctrl), t_cells(dss, ctrl)));
  rep.tables.push_back(std::move(test));

  Table per{"game_times", {"session_id", "condition", "position", "map_id", "duration_s", "outlier"}};
  for (const auto& [s, g] : all) {
    const auto ms = *g->duration_ms();
    per.add({s->session_id, str(to_string(s->condition.label)), std::to_string(g->game_index + 1), g->map_id,
             fmt_num(static_cast<double>(ms) / 1000.0), static_cast<double>(ms) > limit_ms ? "1" : "0"});
  }
  rep.tables.push_back(std::move(per));
  return rep;
}

Report reliance_report(const Ctx& ctx) {
  Report rep{ReportKind::reliance};
  const auto games = ctx.games([](const SessionData& s, const GameData&) { return s.condition.treatment(); });
  if (!has_treatment(ctx.labels) || games.empty()) {
    rep.status = ReportStatus::not_applicable;
    rep.note = "no sessions with a decision support system";
    return rep;
  }
  const double random_mean = random_pair_distance_constant() * kBoardSize;
  auto distances = [](const GameList& gl, std::optional<int> round = std::nullopt) {
    std::vector<double> v;
    for (const auto& [s, g] : gl)
      for (const auto& e : g->plays)
        if (e.recommended && (!round || e.round == *round)) v.push_back(reliance_distance(*e.recommended, e.clicked));
    return v;
  };

  Table summary{"reliance",
                {"condition", "accuracy", "plays", "mean_distance", "median_distance", "share_followed",
                 "ratio_to_random"}};
  for (auto l : ctx.labels) {
    if (l == ConditionLabel::control) continue;
    for (auto a : kAccuracies) {
      const auto gl = ctx.games([&](const SessionData& s, const GameData& g) {
        return s.condition.label == l && g.accuracy == a;
      });
      const auto d = distances(gl);
      const auto followed = std::count(d.begin(), d.end(), 0.0);
      summary.add({str(to_string(l)), str(to_string(a)), num(d.size()), opt_mean(d), opt_median(d),
                   d.empty() ? kNA : fmt_num(static_cast<double>(followed) / d.size()),
                   d.empty() ? kNA : fmt_num(mean(d) / random_mean)});
    }
  }
  rep.tables.push_back(std::move(summary));

  Table by_round{"reliance_by_round", {"round", "high", "medium", "low"}};
  for (int r = 0; r < kRoundsPerGame; ++r) {
    std::vector<std::string> row{std::to_string(r)};
    for (auto a : kAccuracies)
      row.push_back(opt_mean(distances(
          ctx.games([&](const SessionData& s, const GameData& g) { return s.condition.treatment() && g.accuracy == a; }),
          r)));
    by_round.add(std::move(row));
  }
  rep.tables.push_back(std::move(by_round));

  Table per{"reliance_by_session", {"session_id", "condition", "mean_distance", "acceptance_score"}};
  for (const auto* s : ctx.sessions) {
    if (!s->condition.treatment()) continue;
    GameList gl;
    for (const auto& g : s->games)
      if (g.complete()) gl.emplace_back(s, &g);
    const auto d = distances(gl);
    if (d.empty()) continue;
    per.add({s->session_id, str(to_string(s->condition.label)), fmt_num(mean(d)),
             s->acceptance_score ? std::to_string(*s->acceptance_score) : kNA});
  }
  rep.tables.push_back(std::move(per));
  return rep;
}

Report badplays_report(const Ctx& ctx) {
  Report rep{ReportKind::badplays};
  const auto& def = ctx.data.definition;
  if (ctx.games().empty()) {
    rep.status = ReportStatus::empty;
    rep.note = "no complete games";
    return rep;
  }
  Table t{"badplays",
          {"map_id", "difficulty", "condition", "accuracy", "forest_cost", "plays", "bad_plays", "rate",
           "control_rate", "reduction_pp", "binomial_p"}};
  for (auto d : kSlots) {
    const auto& map = def.map_for(d);
    const auto control = ctx.games([&](const SessionData& s, const GameData& g) {
      return !s.condition.treatment() && g.difficulty == d;
    });
    std::optional<double> control_rate;
    if (!control.empty()) control_rate = bad_play_rate(play_scores(control), map, control.front().second->cost);

    auto row = [&](ConditionLabel l, std::optional<Accuracy> a) {
      const auto gl = ctx.games([&](const SessionData& s, const GameData& g) {
        return s.condition.label == l && g.difficulty == d && g.accuracy == a;
      });
      const auto cond = condition_for(l, def.control_cost);
      const auto plays = play_scores(gl);
      std::vector<std::string> cells{map.id, str(to_string(d)), str(to_string(l)), a ? str(to_string(*a)) : "-",
                                     fmt_num(cond.forest_cost), num(plays.size())};
      if (plays.empty()) {
        cells.insert(cells.end(), {"0", kNA, control_rate ? fmt_num(*control_rate) : kNA, kNA, kNA});
        t.add(std::move(cells));
        return;
      }
      const double rate = bad_play_rate(plays, map, cond.cost());
      const auto bad = static_cast<std::size_t>(std::llround(rate * plays.size()));
      cells.push_back(num(bad));
      cells.push_back(fmt_num(rate));
      if (control_rate && l != ConditionLabel::control) {
        cells.push_back(fmt_num(*control_rate));
        cells.push_back(fmt_num(100.0 * (*control_rate - rate)));
        cells.push_back(fmt_num(binomial_test(bad, plays.size(), *control_rate).p_value));
      } else {
        cells.insert(cells.end(), {control_rate ? fmt_num(*control_rate) : kNA, kNA, kNA});
      }
      t.add(std::move(cells));
    };
    for (auto l : ctx.labels) {
      if (l == ConditionLabel::control) {
        row(l, std::nullopt);
      } else {
        for (auto a : kAccuracies) row(l, a);
      }
    }
  }
  rep.tables.push_back(std::move(t));
  return rep;
}

Report explore_report(const Ctx& ctx) {
  Report rep{ReportKind::explore};
  auto inputs = [&](const GameList& gl) {
    std::vector<ExploreInput> in;
    for (const auto& [s, g] : gl) {
      ExploreInput e{{}, {}, g->map, g->cost};
      for (const auto& p : g->plays) {
        e.clicks.push_back(p.clicked);
        e.play_scores.push_back(p.play_score);
      }
      in.push_back(std::move(e));
    }
    return in;
  };
  std::vector<std::pair<std::string, ExploreMatrix>> groups;
  for (auto l : ctx.labels) {
    const auto gl = ctx.games([&](const SessionData& s, const GameData&) { return s.condition.label == l; });
    if (!gl.empty()) groups.emplace_back(str(to_string(l)), explore_matrix(inputs(gl), ctx.opt.explore));
  }
  if (groups.empty()) {
    rep.status = ReportStatus::empty;
    rep.note = "no complete games";
    return rep;
  }
  groups.emplace_back("all", explore_matrix(inputs(ctx.games()), ctx.opt.explore));

  Table t{"explore", {"group", "distance", "low_pct", "mid_pct", "high_pct"}};
  const std::array<std::string, 3> rows{"near", "medium", "far"};
  for (const auto& [name, m] : groups)
    for (int r = 0; r < 3; ++r)
      t.add({name, rows[static_cast<std::size_t>(r)], fmt_num(m(r, 0)), fmt_num(m(r, 1)), fmt_num(m(r, 2))});
  rep.tables.push_back(std::move(t));

  Table rmse{"explore_rmse", {"group_a", "group_b", "rmse"}};
  for (std::size_t i = 0; i + 1 < groups.size(); ++i)
    for (std::size_t j = i + 1; j + 1 < groups.size(); ++j)
      rmse.add({groups[i].first, groups[j].first, fmt_num(explore_rmse(groups[i].second, groups[j].second))});
  rep.tables.push_back(std::move(rmse));
  return rep;
}

Report clusters_report(const Ctx& ctx) {
  Report rep{ReportKind::clusters};
  std::vector<const SessionData*> members;
  std::vector<std::vector<double>> curves;
  for (const auto* s : ctx.sessions) {
    if (s->games.size() != static_cast<std::size_t>(kGamesPerSession)) continue;
    if (!std::all_of(s->games.begin(), s->games.end(), [](const GameData& g) { return g.complete(); })) continue;
    members.push_back(s);
    curves.push_back(learning_curve(*s));
  }
  if (curves.size() < 2) {
    rep.status = ReportStatus::empty;
    rep.note = "fewer than two complete sessions";
    return rep;
  }
  const auto c = cluster_curves(curves, ctx.opt.clusters);

  Table summary{"cluster_summary", {"clusters", "curves", "bandwidth", "modularity", "gamma"}};
  summary.add({std::to_string(c.count()), num(curves.size()), fmt_num(c.bandwidth), fmt_num(c.modularity),
               fmt_num(ctx.opt.clusters.gamma)});
  rep.tables.push_back(std::move(summary));

  Table clusters{"clusters", {"cluster", "size", "start_mean", "end_mean", "change"}};
  for (int k = 0; k < c.count(); ++k) {
    const auto& cen = c.centroids[static_cast<std::size_t>(k)];
    const auto w = std::min<std::size_t>(5, cen.size());
    const double start = mean(std::span(cen).first(w)), end = mean(std::span(cen).last(w));
    clusters.add({std::to_string(k), std::to_string(c.sizes[static_cast<std::size_t>(k)]), fmt_num(start),
                  fmt_num(end), fmt_num(end - start)});
  }
  rep.tables.push_back(std::move(clusters));

  Table assign{"cluster_members", {"session_id", "condition", "cluster"}};
  for (std::size_t i = 0; i < members.size(); ++i)
    assign.add({members[i]->session_id, str(to_string(members[i]->condition.label)), std::to_string(c.labels[i])});
  rep.tables.push_back(std::move(assign));

  Table cen{"centroids", {"cluster", "t", "score"}};
  for (int k = 0; k < c.count(); ++k) {
    const auto& v = c.centroids[static_cast<std::size_t>(k)];
    for (std::size_t t = 0; t < v.size(); ++t) cen.add({std::to_string(k), num(t), fmt_num(v[t])});
  }
  rep.tables.push_back(std::move(cen));
  return rep;
}

Report survey_report(const Ctx& ctx) {
  Report rep{ReportKind::survey};
  const auto& def = ctx.data.definition;
  std::vector<const SessionData*> answered;
  for (const auto* s : ctx.sessions)
    if (s->easiest_map) answered.push_back(s);
  if (answered.empty()) {
    rep.status = ReportStatus::empty;
    rep.note = "no survey responses";
    return rep;
  }
  Table acc{"acceptance", {"condition", "responses", "mean", "median", "sd", "min", "max"}};
  Table items{"acceptance_items", {"condition", "q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8"}};
  Table easiest{"easiest_map", {"condition", "responses", "easy", "medium", "hard"}};
  for (auto l : ctx.labels) {
    std::vector<double> scores;
    std::array<std::vector<double>, 8> per_item;
    std::array<std::size_t, 3> picks{};
    std::size_t n = 0;
    for (const auto* s : answered) {
      if (s->condition.label != l) continue;
      ++n;
      if (s->acceptance_score) scores.push_back(*s->acceptance_score);
      if (s->acceptance_items)
        for (std::size_t i = 0; i < per_item.size() && i < s->acceptance_items->size(); ++i)
          per_item[i].push_back((*s->acceptance_items)[i]);
      for (std::size_t d = 0; d < kSlots.size(); ++d)
        if (def.map_for(kSlots[d]).id == *s->easiest_map) ++picks[d];
    }
    acc.add({str(to_string(l)), num(scores.size()), opt_mean(scores), opt_median(scores), opt_sd(scores),
             scores.empty() ? kNA : fmt_num(*std::min_element(scores.begin(), scores.end())),
             scores.empty() ? kNA : fmt_num(*std::max_element(scores.begin(), scores.end()))});
    std::vector<std::string> row{str(to_string(l))};
    for (const auto& v : per_item) row.push_back(opt_mean(v));
    items.add(std::move(row));
    easiest.add({str(to_string(l)), num(n), num(picks[0]), num(picks[1]), num(picks[2])});
  }
  rep.tables.push_back(std::move(acc));
  rep.tables.push_back(std::move(items));
  rep.tables.push_back(std::move(easiest));
  return rep;
}

Report ordering_report(const Ctx& ctx) {
  Report rep{ReportKind::ordering};
  const auto& def = ctx.data.definition;
  if (ctx.games().empty()) {
    rep.status = ReportStatus::empty;
    rep.note = "no complete games";
    return rep;
  }
  Table t{"ordering", {"map_id", "difficulty", "position", "games", "median_play_score", "mean_game_score"}};
  Table tests{"ordering_tests",
              {"scope", "plays_first", "plays_third", "median_first", "median_third", "ks_d", "ks_p", "t", "t_p"}};
  auto at = [&](std::optional<Difficulty> d, int pos) {
    return ctx.games([&](const SessionData&, const GameData& g) {
      return g.game_index + 1 == pos && (!d || g.difficulty == *d);
    });
  };
  auto test_row = [&](const std::string& scope, std::optional<Difficulty> d) {
    const auto first = at(d, 1), third = at(d, 3);
    const auto p1 = play_scores(first), p3 = play_scores(third);
    tests.add(cat(scope, num(p1.size()), num(p3.size()),
                  first.empty() ? kNA : fmt_num(play_median(first, ctx.opt.medians)),
                  third.empty() ? kNA : fmt_num(play_median(third, ctx.opt.medians)), ks_cells(p3, p1),
                  t_cells(p3, p1)));
  };
  for (auto d : kSlots) {
    for (int pos = 1; pos <= kGamesPerSession; ++pos) {
      const auto gl = at(d, pos);
      t.add({def.map_for(d).id, str(to_string(d)), std::to_string(pos), num(gl.size()),
             gl.empty() ? kNA : fmt_num(play_median(gl, ctx.opt.medians)), opt_mean(game_scores(gl))});
    }
  }
  test_row("all", std::nullopt);
  for (auto d : kSlots) test_row(def.map_for(d).id, d);
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(std::move(tests));
  return rep;
}

}  // namespace

Report make_report(const Dataset& data, ReportKind kind, const ReportOptions& options) {
  const Ctx ctx(data, options);
  if (ctx.sessions.empty()) {
    Report rep{kind, ReportStatus::empty, "no sessions match the filter", {}};
    return rep;
  }
  switch (kind) {
    case ReportKind::scores: return scores_report(ctx);
    case ReportKind::time: return time_report(ctx);
    case ReportKind::reliance: return reliance_report(ctx);
    case ReportKind::badplays: return badplays_report(ctx);
    case ReportKind::explore: return explore_report(ctx);
    case ReportKind::clusters: return clusters_report(ctx);
    case ReportKind::survey: return survey_report(ctx);
    case ReportKind::ordering: return ordering_report(ctx);
  }
  throw std::logic_error("unhandled report kind");
}

std::string render_text(const Report& report) {
  const auto name = std::string(to_string(report.kind));
  if (report.status == ReportStatus::empty) return "EMPTY REPORT (" + name + "): " + report.note + "\n";
  if (report.status == ReportStatus::not_applicable) return "NOT APPLICABLE (" + name + "): " + report.note + "\n";
  std::string out = "# " + name + "\n";
  for (const auto& t : report.tables) {
    out += "\n## " + t.name + "\n";
    std::vector<std::size_t> width(t.columns.size());
    for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
    for (const auto& r : t.rows)
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    auto line = [&](const std::vector<std::string>& cells) {
      std::string s;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c) s += "  ";
        s += cells[c];
        if (c + 1 < cells.size()) s.append(width[c] - cells[c].size(), ' ');
      }
      return s + "\n";
    };
    out += line(t.columns);
    for (const auto& r : t.rows) out += line(r);
  }
  return out;
}

std::string render_csv(const Table& table) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) s += ',';
      const bool quote = cells[c].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        s += cells[c];
        continue;
      }
      s += '"';
      for (char ch : cells[c]) {
        if (ch == '"') s += '"';
        s += ch;
      }
      s += '"';
    }
    return s + "\n";
  };
  std::string out = line(table.columns);
  for (const auto& r : table.rows) out += line(r);
  return out;
}

}  // namespace oilgame
