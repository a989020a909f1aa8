#pragma once

#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include "concsynth/bigint.hpp"

namespace concsynth::solver {

// A registered difference atom x_v - x_u <= c, identified by the caller.
struct DlAtom {
  int id;
  std::size_t u, v;
  Int c;
};

// One propagation: atom `id` holds (or its negation does), because the
// graph edges carrying `tags` form a path that forces it.
struct DlImplication {
  int id;
  bool negated;
  std::vector<int> tags;
};

// Incremental difference-constraint graph. Edges state x_v - x_u <= k; a
// feasible potential pi (pi[v] - pi[u] <= k for every edge) is maintained
// across assertions, so consistency of each new edge is checked by a
// Dijkstra-like relaxation and retractions are free. Single-variable
// bounds go through a virtual zero node.
class DiffGraph {
 public:
  explicit DiffGraph(std::size_t nvars)
      : nvars_(nvars), pi_(nvars + 1, Int(0)), out_(nvars + 1), in_(nvars + 1) {
    gamma_.resize(nvars + 1);
    gamma_stamp_.assign(nvars + 1, 0);
    pred_.assign(nvars + 1, -1);
    dist_f_.resize(nvars + 1);
    dist_b_.resize(nvars + 1);
    stamp_f_.assign(nvars + 1, 0);
    stamp_b_.assign(nvars + 1, 0);
    par_f_.assign(nvars + 1, -1);
    par_b_.assign(nvars + 1, -1);
  }

  std::size_t zero_node() const { return nvars_; }

  // Asserts x_v - x_u <= k tagged with an opaque id. The edge is recorded
  // even on conflict (the caller retracts it during backtracking); pi is
  // left untouched in that case, so it stays feasible for the edges that
  // remain after the retraction. On conflict, `cycle_tags` receives the
  // tags of a violated cycle including this edge.
  bool assert_edge(std::size_t u, std::size_t v, Int k, int tag,
                   std::vector<int>& cycle_tags) {
    int idx = (int)edges_.size();
    edges_.push_back(Edge{u, v, std::move(k), tag});
    out_[u].push_back(idx);
    in_[v].push_back(idx);
    const Edge& e = edges_[idx];
    last_relaxed_ = !(pi_[v] - pi_[u] <= e.k);
    if (!last_relaxed_) return true;
    // Relax: lower pi over nodes reachable from v; needing to lower u
    // closes a negative cycle through the new edge.
    ++epoch_;
    std::vector<std::pair<std::size_t, Int>> saved;
    auto gamma_of = [&](std::size_t n) -> Int {
      return gamma_stamp_[n] == epoch_ ? gamma_[n] : Int(0);
    };
    auto set_gamma = [&](std::size_t n, Int g, int pred_edge) {
      gamma_[n] = std::move(g);
      gamma_stamp_[n] = epoch_;
      pred_[n] = pred_edge;
    };
    using QEntry = std::pair<Int, std::size_t>;  // (gamma, node), min first
    std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> pq;
    set_gamma(v, pi_[u] + e.k - pi_[v], idx);
    pq.push({gamma_of(v), v});
    bool conflict = false;
    while (!pq.empty()) {
      auto [g, s] = pq.top();
      pq.pop();
      if (gamma_of(s) != g || g >= 0) continue;
      if (s == u) {
        conflict = true;
        break;
      }
      saved.push_back({s, pi_[s]});
      pi_[s] += g;
      set_gamma(s, Int(0), pred_[s]);
      for (int ei : out_[s]) {
        const Edge& oe = edges_[ei];
        Int viol = pi_[s] + oe.k - pi_[oe.v];
        if (viol < 0 && viol < gamma_of(oe.v)) {
          set_gamma(oe.v, viol, ei);
          pq.push({viol, oe.v});
        }
      }
    }
    if (!conflict) return true;
    for (auto it = saved.rbegin(); it != saved.rend(); ++it)
      pi_[it->first] = std::move(it->second);
    collect_cycle(u, idx, cycle_tags);
    return false;
  }

  // Retracts the most recently asserted edge.
  void pop_edge() {
    const Edge& e = edges_.back();
    out_[e.u].pop_back();
    in_[e.v].pop_back();
    edges_.pop_back();
  }

  // Implications of the most recently asserted edge: every atom in `atoms`
  // for which `unassigned(id)` holds and some path through the new edge
  // settles it. Because assigned atoms contribute their own edges, paths
  // avoiding the new edge were handled when their last edge arrived, so
  // scanning only new-edge paths keeps propagation exhaustive. Requires
  // the last assert_edge to have succeeded (pi feasible).
  void propagate_new_edge(const std::vector<DlAtom>& atoms,
                          const std::function<bool(int)>& unassigned,
                          std::vector<DlImplication>& out) {
    if (edges_.empty() || atoms.empty()) return;
    int nidx = (int)edges_.size() - 1;
    const Edge& ne = edges_[nidx];
    sssp(ne.v, out_, /*forward=*/true);
    sssp(ne.u, in_, /*forward=*/false);
    // Reduced cost of the new edge; real path length p -> q through it is
    // (dist_b[p] - pi[p]) + (pi[u] + k - pi[v]) + (dist_f[q] + pi[q]).
    Int base = pi_[ne.u] + ne.k - pi_[ne.v];
    auto through = [&](std::size_t p, std::size_t q, const Int& c) {
      if (stamp_b_[p] != sweep_ || stamp_f_[q] != sweep_) return false;
      return dist_b_[p] - pi_[p] + base + dist_f_[q] + pi_[q] <= c;
    };
    for (const DlAtom& a : atoms) {
      if (!unassigned(a.id)) continue;
      if (through(a.u, a.v, a.c)) {
        out.push_back({a.id, false, {}});
        collect_path(a.u, a.v, nidx, out.back().tags);
      } else if (through(a.v, a.u, -a.c - 1)) {
        out.push_back({a.id, true, {}});
        collect_path(a.v, a.u, nidx, out.back().tags);
      }
    }
  }

  std::size_t num_edges() const { return edges_.size(); }

  // Whether the last successful assert_edge changed the potential.
  bool last_relaxed() const { return last_relaxed_; }

  // Valid whenever the last assertion succeeded: a model with zero-node
  // pinned at 0.
  Int model_value(std::size_t var) const { return pi_[var] - pi_[nvars_]; }

 private:
  struct Edge {
    std::size_t u, v;
    Int k;
    int tag;
  };

  void collect_cycle(std::size_t u, int new_edge, std::vector<int>& tags) {
    // Walk predecessors from u back to the new edge's head; together with
    // the new edge this is a cycle of negative total weight. Verified
    // defensively; on mismatch fall back to blaming every live edge.
    std::vector<int> path;
    Int total(0);
    std::size_t node = u;
    bool ok = true;
    for (std::size_t steps = 0; steps <= edges_.size() + 1; ++steps) {
      if (gamma_stamp_[node] != epoch_) {
        ok = false;
        break;
      }
      int ei = pred_[node];
      if (ei < 0) {
        ok = false;
        break;
      }
      path.push_back(ei);
      total += edges_[ei].k;
      node = edges_[ei].u;
      if (ei == new_edge) break;
      if (steps == edges_.size()) ok = false;
    }
    if (ok && (path.empty() || path.back() != new_edge)) ok = false;
    if (ok && total >= 0) ok = false;
    if (!ok) {
      tags.clear();
      for (const auto& e : edges_) tags.push_back(e.tag);
      return;
    }
    tags.clear();
    for (int ei : path) tags.push_back(edges_[ei].tag);
  }

  // Dijkstra over reduced costs pi[a] + k - pi[b] (nonnegative while pi is
  // feasible). Forward from the new edge's head, or backward over reversed
  // arcs from its tail; distances and parent edges land in the matching
  // dist/stamp/par arrays.
  void sssp(std::size_t src, const std::vector<std::vector<int>>& adj,
            bool forward) {
    if (forward) ++sweep_;
    auto& dist = forward ? dist_f_ : dist_b_;
    auto& stamp = forward ? stamp_f_ : stamp_b_;
    auto& par = forward ? par_f_ : par_b_;
    using QEntry = std::pair<Int, std::size_t>;
    std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> pq;
    dist[src] = Int(0);
    stamp[src] = sweep_;
    par[src] = -1;
    pq.push({Int(0), src});
    while (!pq.empty()) {
      auto [d, s] = pq.top();
      pq.pop();
      if (dist[s] != d) continue;
      for (int ei : adj[s]) {
        const Edge& e = edges_[ei];
        std::size_t t = forward ? e.v : e.u;
        Int nd = d + pi_[e.u] + e.k - pi_[e.v];
        if (stamp[t] != sweep_ || nd < dist[t]) {
          dist[t] = std::move(nd);
          stamp[t] = sweep_;
          par[t] = ei;
          pq.push({dist[t], t});
        }
      }
    }
  }

  // Edge tags of the witness path p -> new edge -> q.
  void collect_path(std::size_t p, std::size_t q, int nidx,
                    std::vector<int>& tags) {
    const Edge& ne = edges_[nidx];
    for (std::size_t s = p; s != ne.u;) {
      int ei = par_b_[s];
      tags.push_back(edges_[ei].tag);
      s = edges_[ei].v;
    }
    tags.push_back(ne.tag);
    for (std::size_t s = q; s != ne.v;) {
      int ei = par_f_[s];
      tags.push_back(edges_[ei].tag);
      s = edges_[ei].u;
    }
  }

  std::size_t nvars_;
  std::vector<Int> pi_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<Int> gamma_;
  std::vector<unsigned> gamma_stamp_;
  std::vector<int> pred_;
  unsigned epoch_ = 0;
  bool last_relaxed_ = false;
  std::vector<Int> dist_f_, dist_b_;
  std::vector<unsigned> stamp_f_, stamp_b_;
  std::vector<int> par_f_, par_b_;
  unsigned sweep_ = 0;
};

}  // namespace concsynth::solver
