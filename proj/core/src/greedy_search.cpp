#include "iqlut/greedy_search.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "iqlut/error.hpp"

namespace iqlut {
namespace {

double distance_to_centre(const AbPoint& p) {
  return std::hypot(p.first - 0.5, p.second - 0.5);
}

// True if `candidate` should replace `best` among points on one axis.
bool preferred(double candidate_loss, const AbPoint& candidate, double best_loss, const AbPoint& best) {
  if (candidate_loss != best_loss) return candidate_loss < best_loss;
  return distance_to_centre(candidate) < distance_to_centre(best);
}

}  // namespace

SearchGrid SearchGrid::standard() {
  SearchGrid g;
  for (int k = 1; k <= 19; ++k) {
    g.a_values.push_back(k * 0.05);
    g.b_values.push_back(k * 0.05);
  }
  return g;
}

std::vector<AbPoint> SearchGrid::points() const {
  std::vector<AbPoint> out;
  for (double a : a_values) {
    for (double b : b_values) out.emplace_back(a, b);
  }
  return out;
}

SearchResult greedy_search_ab(std::span<const AbPoint> candidates,
                              const std::function<double(double, double)>& objective) {
  if (candidates.empty()) throw ConfigError("greedy search needs at least one candidate");

  std::map<AbPoint, double> cache;
  SearchResult result;
  auto loss_at = [&](const AbPoint& p) {
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    const double v = objective(p.first, p.second);
    if (!std::isfinite(v)) {
      throw NumericalError(fmt::format("search objective is not finite at a={}, b={}", p.first, p.second));
    }
    ++result.evaluations;
    cache.emplace(p, v);
    return v;
  };

  AbPoint current = candidates[0];
  for (const AbPoint& p : candidates) {
    if (distance_to_centre(p) < distance_to_centre(current)) current = p;
  }
  double current_loss = loss_at(current);
  result.start_loss = current_loss;

  bool improved = true;
  while (improved) {
    improved = false;
    ++result.rounds;
    for (int axis = 0; axis < 2; ++axis) {
      AbPoint best = current;
      double best_loss = current_loss;
      for (const AbPoint& p : candidates) {
        const bool on_axis = axis == 0 ? p.second == current.second : p.first == current.first;
        if (!on_axis || p == current) continue;
        const double l = loss_at(p);
        if (preferred(l, p, best_loss, best)) {
          best = p;
          best_loss = l;
        }
      }
      if (best_loss < current_loss) {
        current = best;
        current_loss = best_loss;
        improved = true;
      }
    }
  }
  result.a = current.first;
  result.b = current.second;
  result.loss = current_loss;
  return result;
}

SearchResult greedy_search_ab(const SearchGrid& grid,
                              const std::function<double(double, double)>& objective) {
  const auto pts = grid.points();
  return greedy_search_ab(pts, objective);
}

}  // namespace iqlut
