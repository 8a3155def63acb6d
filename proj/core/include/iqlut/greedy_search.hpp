#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace iqlut {

using AbPoint = std::pair<double, double>;

/// Cartesian grid of candidate breakpoints.
struct SearchGrid {
  std::vector<double> a_values;
  std::vector<double> b_values;

  /// a, b in {0.05, 0.10, ..., 0.95}.
  static SearchGrid standard();
  std::vector<AbPoint> points() const;
};

struct SearchResult {
  double a = 0.5;
  double b = 0.5;
  double loss = 0.0;
  double start_loss = 0.0;
  int evaluations = 0;
  int rounds = 0;
};

/// Coordinate-wise greedy descent over the candidate points. Starts from
/// (0.5, 0.5) (or the candidate nearest to it), then alternately moves along
/// a (b fixed) and b (a fixed) to the best candidate on that axis, accepting
/// only strict improvements, until neither axis improves. Equal losses are
/// resolved toward the point closest to (0.5, 0.5). Throws ConfigError on an
/// empty grid and NumericalError if the objective is not finite.
SearchResult greedy_search_ab(std::span<const AbPoint> candidates,
                              const std::function<double(double, double)>& objective);

SearchResult greedy_search_ab(const SearchGrid& grid,
                              const std::function<double(double, double)>& objective);

}  // namespace iqlut
