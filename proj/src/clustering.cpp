#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "nameprobe/analytics.hpp"

namespace nameprobe {

using nlohmann::json;

std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

std::optional<Linkage> parse_linkage(std::string_view s) {
  for (auto l : {Linkage::average, Linkage::complete, Linkage::single}) {
    if (iequals(s, to_string(l))) return l;
  }
  return std::nullopt;
}

Dendrogram hierarchical_cluster(const std::vector<std::vector<double>>& distance, Linkage linkage) {
  const std::size_t n = distance.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (distance[i].size() != n) throw InvalidMatrix("distance matrix is not square");
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(distance[i][j])) throw InvalidMatrix("distance matrix contains NaN");
      if (std::abs(distance[i][j] - distance[j][i]) > 1e-12) {
        throw InvalidMatrix("distance matrix is not symmetric");
      }
    }
  }

  Dendrogram d;
  d.leaf_count = n;
  if (n == 0) return d;

  const std::size_t total = 2 * n - 1;
  std::vector<std::vector<double>> dist(total, std::vector<double>(total, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = distance[i][j];
  }
  std::vector<std::size_t> size(total, 1);
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 1;
    double best = dist[active[0]][active[1]];
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        if (dist[active[a]][active[b]] < best) {
          best = dist[active[a]][active[b]];
          bi = a;
          bj = b;
        }
      }
    }
    const std::size_t ci = active[bi];
    const std::size_t cj = active[bj];
    const std::size_t id = n + step;
    size[id] = size[ci] + size[cj];
    for (std::size_t k : active) {
      if (k == ci || k == cj) continue;
      double v = 0.0;
      switch (linkage) {
        case Linkage::average:
          v = (static_cast<double>(size[ci]) * dist[k][ci] + static_cast<double>(size[cj]) * dist[k][cj]) /
              static_cast<double>(size[id]);
          break;
        case Linkage::complete: v = std::max(dist[k][ci], dist[k][cj]); break;
        case Linkage::single: v = std::min(dist[k][ci], dist[k][cj]); break;
      }
      dist[k][id] = v;
      dist[id][k] = v;
    }
    d.merges.push_back({ci, cj, best, size[id]});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    active.push_back(id);
  }

  std::vector<std::size_t> order;
  std::function<void(std::size_t)> walk = [&](std::size_t c) {
    if (c < n) {
      order.push_back(c);
      return;
    }
    walk(d.merges[c - n].left);
    walk(d.merges[c - n].right);
  };
  walk(total - 1);
  d.leaf_order = std::move(order);
  return d;
}

Dendrogram hierarchical_cluster(const AgreementMatrix& m, Linkage linkage) {
  std::vector<std::vector<double>> distance = m.values;
  for (auto& row : distance) {
    for (double& v : row) v = 1.0 - v;
  }
  for (std::size_t i = 0; i < distance.size(); ++i) {
    if (i < distance[i].size()) distance[i][i] = 0.0;
  }
  return hierarchical_cluster(distance, linkage);
}

std::vector<std::size_t> cluster_members(const Dendrogram& d, std::size_t cluster_id) {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack = {cluster_id};
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    if (c < d.leaf_count) {
      out.push_back(c);
    } else {
      if (c - d.leaf_count >= d.merges.size()) throw Error("unknown cluster id");
      stack.push_back(d.merges[c - d.leaf_count].left);
      stack.push_back(d.merges[c - d.leaf_count].right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string dendrogram_json(const Dendrogram& d, std::span<const std::string> labels) {
  if (labels.size() != d.leaf_count) throw Error("one label per leaf is required");
  std::function<json(std::size_t)> node = [&](std::size_t c) -> json {
    if (c < d.leaf_count) return {{"id", c}, {"label", labels[c]}};
    const Merge& m = d.merges[c - d.leaf_count];
    return {{"id", c},
            {"distance", m.distance},
            {"size", m.size},
            {"children", json::array({node(m.left), node(m.right)})}};
  };
  json out = {{"leaf_order", d.leaf_order}};
  out["tree"] = d.leaf_count == 0 ? json(nullptr) : node(2 * d.leaf_count - 2);
  json leaves = json::array();
  for (std::size_t i : d.leaf_order) leaves.push_back(labels[i]);
  out["leaf_labels"] = std::move(leaves);
  return out.dump(2) + "\n";
}

}  // namespace nameprobe
