// Maximum-weight general matching, primal-dual blossom algorithm
// (Edmonds; Galil's O(n^3) formulation).

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ridematch/network.hpp"

namespace ridematch {

namespace {

class BlossomMatcher {
 public:
  BlossomMatcher(std::size_t n, std::span<const WeightedEdge> input) : nvertex_(static_cast<long>(n)) {
    for (const auto& e : input) {
      if (e.u >= n || e.v >= n) throw std::invalid_argument("matching edge references unknown vertex");
      if (e.u == e.v || !(e.weight > 0.0)) continue;
      edges_.push_back(e);
    }
    const long nedge = static_cast<long>(edges_.size());
    double maxweight = 0.0;
    for (const auto& e : edges_) maxweight = std::max(maxweight, e.weight);

    endpoint_.resize(static_cast<std::size_t>(2 * nedge));
    for (long p = 0; p < 2 * nedge; ++p) {
      const auto& e = edges_[static_cast<std::size_t>(p / 2)];
      endpoint_[static_cast<std::size_t>(p)] = static_cast<long>(p % 2 == 0 ? e.u : e.v);
    }
    neighbend_.resize(n);
    for (long k = 0; k < nedge; ++k) {
      const auto& e = edges_[static_cast<std::size_t>(k)];
      neighbend_[e.u].push_back(2 * k + 1);
      neighbend_[e.v].push_back(2 * k);
    }
    const std::size_t n2 = 2 * n;
    mate_.assign(n, -1);
    label_.assign(n2, 0);
    labelend_.assign(n2, -1);
    inblossom_.resize(n);
    for (std::size_t i = 0; i < n; ++i) inblossom_[i] = static_cast<long>(i);
    blossomparent_.assign(n2, -1);
    blossomchilds_.assign(n2, {});
    blossombase_.assign(n2, -1);
    for (std::size_t i = 0; i < n; ++i) blossombase_[i] = static_cast<long>(i);
    blossomendps_.assign(n2, {});
    bestedge_.assign(n2, -1);
    blossombestedges_.assign(n2, {});
    hasbestedges_.assign(n2, false);
    for (long b = 2 * nvertex_ - 1; b >= nvertex_; --b) unusedblossoms_.push_back(b);
    dualvar_.assign(n2, 0.0);
    for (std::size_t i = 0; i < n; ++i) dualvar_[i] = maxweight;
    allowedge_.assign(static_cast<std::size_t>(nedge), false);
  }

  std::vector<long> solve() {
    const long n = nvertex_;
    for (long stage = 0; stage < n; ++stage) {
      std::fill(label_.begin(), label_.end(), 0);
      std::fill(bestedge_.begin(), bestedge_.end(), -1);
      for (long b = n; b < 2 * n; ++b) {
        blossombestedges_[ix(b)].clear();
        hasbestedges_[ix(b)] = false;
      }
      std::fill(allowedge_.begin(), allowedge_.end(), false);
      queue_.clear();

      for (long v = 0; v < n; ++v)
        if (mate_[ix(v)] == -1 && label_[ix(inblossom_[ix(v)])] == 0) assign_label(v, 1, -1);

      bool augmented = false;
      while (true) {
        while (!queue_.empty() && !augmented) {
          const long v = queue_.back();
          queue_.pop_back();
          for (long p : neighbend_[ix(v)]) {
            const long k = p / 2;
            const long w = endpoint_[ix(p)];
            if (inblossom_[ix(v)] == inblossom_[ix(w)]) continue;
            double kslack = 0.0;
            if (!allowedge_[ix(k)]) {
              kslack = slack(k);
              if (kslack <= 0) allowedge_[ix(k)] = true;
            }
            if (allowedge_[ix(k)]) {
              if (label_[ix(inblossom_[ix(w)])] == 0) {
                assign_label(w, 2, p ^ 1);
              } else if (label_[ix(inblossom_[ix(w)])] == 1) {
                const long base = scan_blossom(v, w);
                if (base >= 0) {
                  add_blossom(base, k);
                } else {
                  augment_matching(k);
                  augmented = true;
                  break;
                }
              } else if (label_[ix(w)] == 0) {
                label_[ix(w)] = 2;
                labelend_[ix(w)] = p ^ 1;
              }
            } else if (label_[ix(inblossom_[ix(w)])] == 1) {
              const long b = inblossom_[ix(v)];
              if (bestedge_[ix(b)] == -1 || kslack < slack(bestedge_[ix(b)])) bestedge_[ix(b)] = k;
            } else if (label_[ix(w)] == 0) {
              if (bestedge_[ix(w)] == -1 || kslack < slack(bestedge_[ix(w)])) bestedge_[ix(w)] = k;
            }
          }
        }
        if (augmented) break;

        // No augmenting path yet: compute the dual adjustment.
        int deltatype = 1;
        double delta = *std::min_element(dualvar_.begin(), dualvar_.begin() + n);
        long deltaedge = -1;
        long deltablossom = -1;
        for (long v = 0; v < n; ++v) {
          if (label_[ix(inblossom_[ix(v)])] == 0 && bestedge_[ix(v)] != -1) {
            const double d = slack(bestedge_[ix(v)]);
            if (d < delta) {
              delta = d;
              deltatype = 2;
              deltaedge = bestedge_[ix(v)];
            }
          }
        }
        for (long b = 0; b < 2 * n; ++b) {
          if (blossomparent_[ix(b)] == -1 && label_[ix(b)] == 1 && bestedge_[ix(b)] != -1) {
            const double d = slack(bestedge_[ix(b)]) / 2.0;
            if (d < delta) {
              delta = d;
              deltatype = 3;
              deltaedge = bestedge_[ix(b)];
            }
          }
        }
        for (long b = n; b < 2 * n; ++b) {
          if (blossombase_[ix(b)] >= 0 && blossomparent_[ix(b)] == -1 && label_[ix(b)] == 2 &&
              dualvar_[ix(b)] < delta) {
            delta = dualvar_[ix(b)];
            deltatype = 4;
            deltablossom = b;
          }
        }

        for (long v = 0; v < n; ++v) {
          const int l = label_[ix(inblossom_[ix(v)])];
          if (l == 1)
            dualvar_[ix(v)] -= delta;
          else if (l == 2)
            dualvar_[ix(v)] += delta;
        }
        for (long b = n; b < 2 * n; ++b) {
          if (blossombase_[ix(b)] >= 0 && blossomparent_[ix(b)] == -1) {
            if (label_[ix(b)] == 1)
              dualvar_[ix(b)] += delta;
            else if (label_[ix(b)] == 2)
              dualvar_[ix(b)] -= delta;
          }
        }

        if (deltatype == 1) {
          break;
        } else if (deltatype == 2) {
          allowedge_[ix(deltaedge)] = true;
          long i = static_cast<long>(edges_[ix(deltaedge)].u);
          long j = static_cast<long>(edges_[ix(deltaedge)].v);
          if (label_[ix(inblossom_[ix(i)])] == 0) std::swap(i, j);
          queue_.push_back(i);
        } else if (deltatype == 3) {
          allowedge_[ix(deltaedge)] = true;
          queue_.push_back(static_cast<long>(edges_[ix(deltaedge)].u));
        } else {
          expand_blossom(deltablossom, false);
        }
      }

      if (!augmented) break;

      for (long b = n; b < 2 * n; ++b) {
        if (blossomparent_[ix(b)] == -1 && blossombase_[ix(b)] >= 0 && label_[ix(b)] == 1 && dualvar_[ix(b)] == 0)
          expand_blossom(b, true);
      }
    }

    std::vector<long> result(static_cast<std::size_t>(n), -1);
    for (long v = 0; v < n; ++v)
      if (mate_[ix(v)] >= 0) result[ix(v)] = endpoint_[ix(mate_[ix(v)])];
    return result;
  }

 private:
  static std::size_t ix(long i) { return static_cast<std::size_t>(i); }

  // Python-style index into a cyclic child list.
  static long wrap(long j, std::size_t size) {
    const long s = static_cast<long>(size);
    return ((j % s) + s) % s;
  }

  double slack(long k) const {
    const auto& e = edges_[ix(k)];
    return dualvar_[e.u] + dualvar_[e.v] - 2.0 * e.weight;
  }

  void leaves(long b, std::vector<long>& out) const {
    if (b < nvertex_) {
      out.push_back(b);
      return;
    }
    for (long t : blossomchilds_[ix(b)]) leaves(t, out);
  }

  std::vector<long> leaves(long b) const {
    std::vector<long> out;
    leaves(b, out);
    return out;
  }

  void assign_label(long w, int t, long p) {
    const long b = inblossom_[ix(w)];
    label_[ix(w)] = label_[ix(b)] = t;
    labelend_[ix(w)] = labelend_[ix(b)] = p;
    bestedge_[ix(w)] = bestedge_[ix(b)] = -1;
    if (t == 1) {
      leaves(b, queue_);
    } else if (t == 2) {
      const long base = blossombase_[ix(b)];
      assign_label(endpoint_[ix(mate_[ix(base)])], 1, mate_[ix(base)] ^ 1);
    }
  }

  long scan_blossom(long v, long w) {
    std::vector<long> path;
    long base = -1;
    while (v != -1 || w != -1) {
      long b = inblossom_[ix(v)];
      if (label_[ix(b)] & 4) {
        base = blossombase_[ix(b)];
        break;
      }
      path.push_back(b);
      label_[ix(b)] = 5;
      if (labelend_[ix(b)] == -1) {
        v = -1;
      } else {
        v = endpoint_[ix(labelend_[ix(b)])];
        b = inblossom_[ix(v)];
        v = endpoint_[ix(labelend_[ix(b)])];
      }
      if (w != -1) std::swap(v, w);
    }
    for (long b : path) label_[ix(b)] = 1;
    return base;
  }

  void add_blossom(long base, long k) {
    long v = static_cast<long>(edges_[ix(k)].u);
    long w = static_cast<long>(edges_[ix(k)].v);
    const long bb = inblossom_[ix(base)];
    long bv = inblossom_[ix(v)];
    long bw = inblossom_[ix(w)];
    const long b = unusedblossoms_.back();
    unusedblossoms_.pop_back();
    blossombase_[ix(b)] = base;
    blossomparent_[ix(b)] = -1;
    blossomparent_[ix(bb)] = b;
    auto& path = blossomchilds_[ix(b)];
    auto& endps = blossomendps_[ix(b)];
    path.clear();
    endps.clear();
    while (bv != bb) {
      blossomparent_[ix(bv)] = b;
      path.push_back(bv);
      endps.push_back(labelend_[ix(bv)]);
      v = endpoint_[ix(labelend_[ix(bv)])];
      bv = inblossom_[ix(v)];
    }
    path.push_back(bb);
    std::reverse(path.begin(), path.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
      blossomparent_[ix(bw)] = b;
      path.push_back(bw);
      endps.push_back(labelend_[ix(bw)] ^ 1);
      w = endpoint_[ix(labelend_[ix(bw)])];
      bw = inblossom_[ix(w)];
    }
    label_[ix(b)] = 1;
    labelend_[ix(b)] = labelend_[ix(bb)];
    dualvar_[ix(b)] = 0.0;
    for (long leaf : leaves(b)) {
      if (label_[ix(inblossom_[ix(leaf)])] == 2) queue_.push_back(leaf);
      inblossom_[ix(leaf)] = b;
    }

    std::vector<long> bestedgeto(ix(2 * nvertex_), -1);
    for (long sub : path) {
      std::vector<std::vector<long>> nblists;
      if (!hasbestedges_[ix(sub)]) {
        for (long leaf : leaves(sub)) {
          std::vector<long> list;
          for (long p : neighbend_[ix(leaf)]) list.push_back(p / 2);
          nblists.push_back(std::move(list));
        }
      } else {
        nblists.push_back(blossombestedges_[ix(sub)]);
      }
      for (const auto& list : nblists) {
        for (long ke : list) {
          long i = static_cast<long>(edges_[ix(ke)].u);
          long j = static_cast<long>(edges_[ix(ke)].v);
          if (inblossom_[ix(j)] == b) std::swap(i, j);
          const long bj = inblossom_[ix(j)];
          if (bj != b && label_[ix(bj)] == 1 &&
              (bestedgeto[ix(bj)] == -1 || slack(ke) < slack(bestedgeto[ix(bj)])))
            bestedgeto[ix(bj)] = ke;
        }
      }
      blossombestedges_[ix(sub)].clear();
      hasbestedges_[ix(sub)] = false;
      bestedge_[ix(sub)] = -1;
    }
    auto& best = blossombestedges_[ix(b)];
    best.clear();
    for (long ke : bestedgeto)
      if (ke != -1) best.push_back(ke);
    hasbestedges_[ix(b)] = true;
    bestedge_[ix(b)] = -1;
    for (long ke : best)
      if (bestedge_[ix(b)] == -1 || slack(ke) < slack(bestedge_[ix(b)])) bestedge_[ix(b)] = ke;
  }

  void expand_blossom(long b, bool endstage) {
    const std::vector<long> childs = blossomchilds_[ix(b)];
    for (long s : childs) {
      blossomparent_[ix(s)] = -1;
      if (s < nvertex_) {
        inblossom_[ix(s)] = s;
      } else if (endstage && dualvar_[ix(s)] == 0) {
        expand_blossom(s, endstage);
      } else {
        for (long leaf : leaves(s)) inblossom_[ix(leaf)] = s;
      }
    }
    if (!endstage && label_[ix(b)] == 2) {
      const auto& endps = blossomendps_[ix(b)];
      const std::size_t len = childs.size();
      const long entrychild = inblossom_[ix(endpoint_[ix(labelend_[ix(b)] ^ 1)])];
      long j = static_cast<long>(std::find(childs.begin(), childs.end(), entrychild) - childs.begin());
      long jstep;
      long endptrick;
      if (j & 1) {
        j -= static_cast<long>(len);
        jstep = 1;
        endptrick = 0;
      } else {
        jstep = -1;
        endptrick = 1;
      }
      long p = labelend_[ix(b)];
      while (j != 0) {
        label_[ix(endpoint_[ix(p ^ 1)])] = 0;
        label_[ix(endpoint_[ix(endps[ix(wrap(j - endptrick, len))] ^ endptrick ^ 1)])] = 0;
        assign_label(endpoint_[ix(p ^ 1)], 2, p);
        allowedge_[ix(endps[ix(wrap(j - endptrick, len))] / 2)] = true;
        j += jstep;
        p = endps[ix(wrap(j - endptrick, len))] ^ endptrick;
        allowedge_[ix(p / 2)] = true;
        j += jstep;
      }
      long bv = childs[ix(wrap(j, len))];
      label_[ix(endpoint_[ix(p ^ 1)])] = label_[ix(bv)] = 2;
      labelend_[ix(endpoint_[ix(p ^ 1)])] = labelend_[ix(bv)] = p;
      bestedge_[ix(bv)] = -1;
      j += jstep;
      while (childs[ix(wrap(j, len))] != entrychild) {
        bv = childs[ix(wrap(j, len))];
        if (label_[ix(bv)] == 1) {
          j += jstep;
          continue;
        }
        long found = -1;
        for (long leaf : leaves(bv)) {
          if (label_[ix(leaf)] != 0) {
            found = leaf;
            break;
          }
        }
        if (found != -1) {
          label_[ix(found)] = 0;
          label_[ix(endpoint_[ix(mate_[ix(blossombase_[ix(bv)])])])] = 0;
          assign_label(found, 2, labelend_[ix(found)]);
        }
        j += jstep;
      }
    }
    label_[ix(b)] = -1;
    labelend_[ix(b)] = -1;
    blossomchilds_[ix(b)].clear();
    blossomendps_[ix(b)].clear();
    blossombase_[ix(b)] = -1;
    blossombestedges_[ix(b)].clear();
    hasbestedges_[ix(b)] = false;
    bestedge_[ix(b)] = -1;
    unusedblossoms_.push_back(b);
  }

  void augment_blossom(long b, long v) {
    long t = v;
    while (blossomparent_[ix(t)] != b) t = blossomparent_[ix(t)];
    if (t >= nvertex_) augment_blossom(t, v);
    auto& childs = blossomchilds_[ix(b)];
    auto& endps = blossomendps_[ix(b)];
    const std::size_t len = childs.size();
    const long i = static_cast<long>(std::find(childs.begin(), childs.end(), t) - childs.begin());
    long j = i;
    long jstep;
    long endptrick;
    if (i & 1) {
      j -= static_cast<long>(len);
      jstep = 1;
      endptrick = 0;
    } else {
      jstep = -1;
      endptrick = 1;
    }
    while (j != 0) {
      j += jstep;
      t = childs[ix(wrap(j, len))];
      const long p = endps[ix(wrap(j - endptrick, len))] ^ endptrick;
      if (t >= nvertex_) augment_blossom(t, endpoint_[ix(p)]);
      j += jstep;
      t = childs[ix(wrap(j, len))];
      if (t >= nvertex_) augment_blossom(t, endpoint_[ix(p ^ 1)]);
      mate_[ix(endpoint_[ix(p)])] = p ^ 1;
      mate_[ix(endpoint_[ix(p ^ 1)])] = p;
    }
    std::rotate(childs.begin(), childs.begin() + i, childs.end());
    std::rotate(endps.begin(), endps.begin() + i, endps.end());
    blossombase_[ix(b)] = blossombase_[ix(childs[0])];
  }

  void augment_matching(long k) {
    const long v = static_cast<long>(edges_[ix(k)].u);
    const long w = static_cast<long>(edges_[ix(k)].v);
    const std::pair<long, long> starts[2] = {{v, 2 * k + 1}, {w, 2 * k}};
    for (auto [s, p] : starts) {
      while (true) {
        const long bs = inblossom_[ix(s)];
        if (bs >= nvertex_) augment_blossom(bs, s);
        mate_[ix(s)] = p;
        if (labelend_[ix(bs)] == -1) break;
        const long t = endpoint_[ix(labelend_[ix(bs)])];
        const long bt = inblossom_[ix(t)];
        s = endpoint_[ix(labelend_[ix(bt)])];
        const long j = endpoint_[ix(labelend_[ix(bt)] ^ 1)];
        if (bt >= nvertex_) augment_blossom(bt, j);
        mate_[ix(j)] = labelend_[ix(bt)];
        p = labelend_[ix(bt)] ^ 1;
      }
    }
  }

  long nvertex_;
  std::vector<WeightedEdge> edges_;
  std::vector<long> endpoint_;
  std::vector<std::vector<long>> neighbend_;
  std::vector<long> mate_;
  std::vector<int> label_;
  std::vector<long> labelend_;
  std::vector<long> inblossom_;
  std::vector<long> blossomparent_;
  std::vector<std::vector<long>> blossomchilds_;
  std::vector<long> blossombase_;
  std::vector<std::vector<long>> blossomendps_;
  std::vector<long> bestedge_;
  std::vector<std::vector<long>> blossombestedges_;
  std::vector<bool> hasbestedges_;
  std::vector<long> unusedblossoms_;
  std::vector<double> dualvar_;
  std::vector<bool> allowedge_;
  std::vector<long> queue_;
};

}  // namespace

std::vector<long> max_weight_matching(std::size_t vertex_count, std::span<const WeightedEdge> edges) {
  if (vertex_count == 0) return {};
  return BlossomMatcher(vertex_count, edges).solve();
}

}  // namespace ridematch
