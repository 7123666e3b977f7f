#include "bpi/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bpi/errors.hpp"
#include "bpi/order_tree.hpp"

namespace bpi {

std::string key_to_string(const PlanarKey& key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(key[i]);
  }
  return out;
}

std::vector<std::vector<std::int64_t>> PlanarForest::children() const {
  std::vector<std::vector<std::int64_t>> out(individuals.size());
  for (const Individual& ind : individuals) {
    if (ind.parent >= 0) {
      if (ind.parent >= static_cast<std::int64_t>(individuals.size()))
        throw MalformedForest("parent id out of range");
      out[static_cast<std::size_t>(ind.parent)].push_back(ind.id);
    }
  }
  for (auto& kids : out) {
    std::sort(kids.begin(), kids.end(), [&](std::int64_t a, std::int64_t b) {
      return individuals[static_cast<std::size_t>(a)].key < individuals[static_cast<std::size_t>(b)].key;
    });
  }
  return out;
}

std::vector<std::int64_t> PlanarForest::planar_order() const {
  std::vector<std::int64_t> order(individuals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return individuals[static_cast<std::size_t>(a)].key < individuals[static_cast<std::size_t>(b)].key;
  });
  return order;
}

std::int64_t PlanarForest::alive_at(double t) const {
  std::int64_t n = 0;
  for (const Individual& ind : individuals)
    if (ind.birth <= t && t < ind.death) ++n;
  return n;
}

double PlanarForest::total_branch_length() const {
  double total = 0.0;
  for (const Individual& ind : individuals) total += ind.death - ind.birth;
  return total;
}

namespace {

double uniform(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Smallest rank r in [1, k] with rate * r + prefix(r) > u.
template <class Prefix>
std::int64_t select_rank(double u, double rate, std::int64_t k, Prefix&& prefix) {
  std::int64_t lo = 1;
  std::int64_t hi = k;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (rate * static_cast<double>(mid) + prefix(mid) > u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace

PlanarForest grow_forest(const DiscreteParams& params, Engine& rng) {
  params.validate();
  InteractionSums sums(params.f, params.scale);
  PlanarForest forest;
  forest.ancestor_count = params.m;
  forest.scale = params.scale;
  forest.t_end = params.t_max;

  OrderTree alive;
  std::vector<std::int32_t> daughters;
  for (std::int64_t j = 0; j < params.m; ++j) {
    forest.individuals.push_back({j, -1, 0.0, 0.0, {static_cast<std::int32_t>(j)}, false});
    daughters.push_back(0);
    alive.insert(static_cast<std::size_t>(j), j);
  }

  double t = 0.0;
  std::uint64_t events = 0;
  while (!alive.empty()) {
    const auto k = static_cast<std::int64_t>(alive.size());
    const Rates r = total_rates(sums, params.lambda, params.mu, k);
    const double total = r.birth + r.death;
    if (!(total > 0.0)) break;
    const double t_next = t + std::exponential_distribution<double>(total)(rng);
    if (!(t_next < params.t_max)) break;
    if (events >= params.max_events) {
      forest.truncated = true;
      forest.t_end = t_next;
      break;
    }
    t = t_next;
    ++events;
    double u = uniform(rng) * total;
    if (u < r.birth) {
      const std::int64_t rank =
          select_rank(u, params.lambda, k, [&](std::int64_t l) { return sums.positive(l); });
      const std::int64_t mother = alive.at(static_cast<std::size_t>(rank - 1));
      const auto id = static_cast<std::int64_t>(forest.individuals.size());
      Individual child;
      child.id = id;
      child.parent = mother;
      child.birth = t;
      child.key = forest.individuals[static_cast<std::size_t>(mother)].key;
      child.key.push_back(-(++daughters[static_cast<std::size_t>(mother)]));
      forest.individuals.push_back(std::move(child));
      daughters.push_back(0);
      alive.insert(static_cast<std::size_t>(rank), id);
    } else {
      u -= r.birth;
      const std::int64_t rank = select_rank(u, params.mu, k, [&](std::int64_t l) { return sums.negative(l); });
      const std::int64_t id = alive.erase(static_cast<std::size_t>(rank - 1));
      forest.individuals[static_cast<std::size_t>(id)].death = t;
    }
  }
  for (std::int64_t id : alive.to_vector()) {
    Individual& ind = forest.individuals[static_cast<std::size_t>(id)];
    ind.death = forest.t_end;
    ind.censored = true;
  }
  return forest;
}

PlanarForest grow_forest(const DiscreteParams& params, std::uint64_t seed) {
  Engine rng(seed);
  return grow_forest(params, rng);
}

StepPath population_path(const PlanarForest& forest) {
  std::vector<std::pair<double, int>> events;
  for (const Individual& ind : forest.individuals) {
    if (ind.parent >= 0) events.emplace_back(ind.birth, +1);
    if (!ind.censored) events.emplace_back(ind.death, -1);
  }
  std::sort(events.begin(), events.end());
  StepPath path;
  path.initial = forest.ancestor_count;
  path.scale = forest.scale;
  path.t_end = forest.t_end;
  path.truncated = forest.truncated;
  std::int64_t k = forest.ancestor_count;
  for (const auto& [time, jump] : events) {
    k += jump;
    path.jump_times.push_back(time);
    path.counts.push_back(k);
  }
  return path;
}

double PolyPath::max_height() const {
  double h = 0.0;
  for (const Vertex& v : vertices) h = std::max(h, v.h);
  return h;
}

std::size_t PolyPath::local_maxima() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < vertices.size(); ++i)
    if (vertices[i].h > vertices[i - 1].h && vertices[i].h > vertices[i + 1].h) ++n;
  return n;
}

std::size_t PolyPath::local_minima() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < vertices.size(); ++i)
    if (vertices[i].h < vertices[i - 1].h && vertices[i].h < vertices[i + 1].h) ++n;
  return n;
}

double PolyPath::height_at(double s) const {
  if (vertices.empty() || s <= 0.0) return 0.0;
  if (s >= duration()) return vertices.back().h;
  const auto it = std::upper_bound(vertices.begin(), vertices.end(), s,
                                   [](double v, const Vertex& x) { return v < x.s; });
  const Vertex& b = *it;
  const Vertex& a = *(it - 1);
  return a.h + (b.h - a.h) * (s - a.s) / (b.s - a.s);
}

namespace {

void validate_forest(const PlanarForest& forest, const std::vector<std::vector<std::int64_t>>& kids) {
  const auto& ind = forest.individuals;
  for (std::size_t i = 0; i < ind.size(); ++i) {
    const Individual& x = ind[i];
    if (x.id != static_cast<std::int64_t>(i)) throw MalformedForest("ids must equal indices");
    if (!std::isfinite(x.death)) throw MalformedForest("infinite death time");
    if (!(x.birth < x.death)) throw MalformedForest("birth must precede death");
    if (x.parent < 0) {
      if (x.birth != 0.0) throw MalformedForest("roots are born at time 0");
      if (x.key.size() != 1) throw MalformedForest("root key must have length 1");
      continue;
    }
    const Individual& mother = ind[static_cast<std::size_t>(x.parent)];
    if (!(mother.birth < x.birth && x.birth < mother.death)) throw MalformedForest("daughter born outside mother's life");
    if (x.key.size() != mother.key.size() + 1 || !std::equal(mother.key.begin(), mother.key.end(), x.key.begin()))
      throw MalformedForest("daughter key does not extend mother's key");
  }
  for (const auto& k : kids) {
    for (std::size_t c = 1; c < k.size(); ++c) {
      const Individual& left = ind[static_cast<std::size_t>(k[c - 1])];
      const Individual& right = ind[static_cast<std::size_t>(k[c])];
      if (left.key == right.key) throw MalformedForest("duplicate planar key");
      // Younger sisters sit closer to the mother, hence further left.
      if (!(left.birth > right.birth)) throw MalformedForest("sister order inconsistent with birth times");
    }
  }
}

class PathBuilder {
 public:
  explicit PathBuilder(double p) { path_.slope = p; path_.vertices.push_back({0.0, 0.0}); }

  void go(double h) {
    auto& v = path_.vertices;
    const double cur = v.back().h;
    if (h == cur) return;
    const int dir = h > cur ? 1 : -1;
    const double ds = std::abs(h - cur) / path_.slope;
    if (v.size() >= 2 && dir == last_dir_) {
      v.back().s += ds;
      v.back().h = h;
    } else {
      v.push_back({v.back().s + ds, h});
    }
    last_dir_ = dir;
  }

  PolyPath take() { return std::move(path_); }

 private:
  PolyPath path_;
  int last_dir_ = 0;
};

}  // namespace

PolyPath explore(const PlanarForest& forest, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("slope must be > 0");
  const auto kids = forest.children();
  validate_forest(forest, kids);

  std::vector<std::int64_t> roots;
  for (const Individual& x : forest.individuals)
    if (x.parent < 0) roots.push_back(x.id);
  std::sort(roots.begin(), roots.end(), [&](std::int64_t a, std::int64_t b) {
    return forest.individuals[static_cast<std::size_t>(a)].key < forest.individuals[static_cast<std::size_t>(b)].key;
  });
  if (static_cast<std::int64_t>(roots.size()) != forest.ancestor_count)
    throw MalformedForest("root count differs from ancestor count");

  PathBuilder builder(p);
  struct Frame {
    std::int64_t id;
    std::size_t next;
  };
  std::vector<Frame> stack;
  const auto& ind = forest.individuals;
  for (std::int64_t root : roots) {
    builder.go(ind[static_cast<std::size_t>(root)].death);
    stack.push_back({root, 0});
    while (!stack.empty()) {
      Frame& top = stack.back();
      const auto& k = kids[static_cast<std::size_t>(top.id)];
      if (top.next < k.size()) {
        const std::int64_t c = k[top.next++];
        builder.go(ind[static_cast<std::size_t>(c)].birth);
        builder.go(ind[static_cast<std::size_t>(c)].death);
        stack.push_back({c, 0});
      } else {
        builder.go(ind[static_cast<std::size_t>(top.id)].birth);
        stack.pop_back();
      }
    }
  }
  return builder.take();
}

std::vector<std::int64_t> crossing_counts(const PolyPath& path, double s, const std::vector<double>& levels) {
  if (!std::is_sorted(levels.begin(), levels.end())) throw std::invalid_argument("levels must be sorted");
  std::vector<std::int64_t> diff(levels.size() + 1, 0);
  const auto& v = path.vertices;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i - 1].s >= s) break;
    double a = v[i - 1].h;
    double b = v[i].h;
    if (v[i].s > s) b = a + (b - a) * (s - v[i - 1].s) / (v[i].s - v[i - 1].s);
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    if (!(lo < hi)) continue;
    const auto start = lo <= 0.0 ? std::lower_bound(levels.begin(), levels.end(), 0.0)
                                 : std::upper_bound(levels.begin(), levels.end(), lo);
    const auto stop = std::upper_bound(levels.begin(), levels.end(), hi);
    if (start >= stop) continue;
    ++diff[static_cast<std::size_t>(start - levels.begin())];
    --diff[static_cast<std::size_t>(stop - levels.begin())];
  }
  std::vector<std::int64_t> out(levels.size());
  std::int64_t run = 0;
  for (std::size_t j = 0; j < levels.size(); ++j) out[j] = run += diff[j];
  return out;
}

LocalTimeProfile local_time(const PolyPath& path, double s, const std::vector<double>& levels,
                            LocalTimeNormalization normalization) {
  const auto counts = crossing_counts(path, s, levels);
  LocalTimeProfile profile;
  profile.levels = levels;
  profile.normalization = normalization;
  const double divisor = normalization == LocalTimeNormalization::Raw ? path.slope : 2.0;
  profile.values.reserve(counts.size());
  for (std::int64_t c : counts) profile.values.push_back(static_cast<double>(c) / divisor);
  return profile;
}

RayKnightReport discrete_ray_knight_check(const PlanarForest& forest, double p) {
  RayKnightReport report;
  if (forest.individuals.empty()) return report;
  const PolyPath path = explore(forest, p);

  std::vector<double> heights{0.0};
  for (const Individual& x : forest.individuals) {
    heights.push_back(x.birth);
    heights.push_back(x.death);
  }
  std::sort(heights.begin(), heights.end());
  heights.erase(std::unique(heights.begin(), heights.end()), heights.end());
  std::vector<double> levels;
  for (std::size_t i = 1; i < heights.size(); ++i) levels.push_back(0.5 * (heights[i - 1] + heights[i]));

  std::vector<std::int64_t> diff(levels.size() + 1, 0);
  for (const Individual& x : forest.individuals) {
    const auto start = std::lower_bound(levels.begin(), levels.end(), x.birth);
    const auto stop = std::lower_bound(levels.begin(), levels.end(), x.death);
    ++diff[static_cast<std::size_t>(start - levels.begin())];
    --diff[static_cast<std::size_t>(stop - levels.begin())];
  }
  const auto crossings = crossing_counts(path, path.duration(), levels);
  std::int64_t alive = 0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    alive += diff[j];
    // (p/2) * crossings / p
    const double half_p_local = static_cast<double>(crossings[j]) / 2.0;
    report.max_discrepancy = std::max(report.max_discrepancy, std::abs(static_cast<double>(alive) - half_p_local));
  }
  report.levels_checked = levels.size();
  return report;
}

}  // namespace bpi
