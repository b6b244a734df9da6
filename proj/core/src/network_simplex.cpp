#include "sphere_euler/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sphere_euler {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NetworkSimplex::NetworkSimplex(int num_nodes) : node_num_(num_nodes), supply_(num_nodes, 0.0) {}

void NetworkSimplex::reserve_arcs(std::size_t n) {
  source_.reserve(n + node_num_);
  target_.reserve(n + node_num_);
  cost_.reserve(n + node_num_);
  cap_.reserve(n + node_num_);
}

int NetworkSimplex::add_arc(int s, int t, double c, double capacity) {
  if (!(capacity >= 0.0)) throw std::invalid_argument("NetworkSimplex: negative capacity");
  source_.push_back(s);
  target_.push_back(t);
  cost_.push_back(c);
  cap_.push_back(capacity);
  return arc_num_++;
}

void NetworkSimplex::set_supply(int node, double s) { supply_[node] = s; }

double NetworkSimplex::total_cost() const {
  double c = 0.0;
  for (int e = 0; e < arc_num_; ++e) c += flow_[e] * cost_[e];
  return c;
}

void NetworkSimplex::init() {
  const int all = arc_num_ + node_num_;
  source_.resize(all);
  target_.resize(all);
  cost_.resize(all);
  cap_.resize(all);
  flow_.assign(all, 0.0);
  state_.assign(all, kLower);
  const int nn = node_num_ + 1;
  pi_.assign(nn, 0.0);
  parent_.assign(nn, -1);
  pred_.assign(nn, -1);
  thread_.assign(nn, 0);
  rev_thread_.assign(nn, 0);
  succ_num_.assign(nn, 0);
  last_succ_.assign(nn, 0);
  pred_dir_.assign(nn, kUp);

  double max_cost = 0.0;
  for (int e = 0; e < arc_num_; ++e) max_cost = std::max(max_cost, std::abs(cost_[e]));
  const double art_cost = (max_cost + 1.0) * double(node_num_);
  eps_ = 1e-12 * (max_cost + 1.0);

  root_ = node_num_;
  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = node_num_ + 1;
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0.0;

  for (int u = 0, e = arc_num_; u < node_num_; ++u, ++e) {
    parent_[u] = root_;
    pred_[u] = e;
    thread_[u] = u + 1;
    rev_thread_[u + 1] = u;
    succ_num_[u] = 1;
    last_succ_[u] = u;
    state_[e] = kTree;
    cap_[e] = kUnbounded;
    if (supply_[u] >= 0.0) {
      pred_dir_[u] = kUp;
      pi_[u] = 0.0;
      source_[e] = u;
      target_[e] = root_;
      flow_[e] = supply_[u];
      cost_[e] = 0.0;
    } else {
      pred_dir_[u] = kDown;
      pi_[u] = art_cost;
      source_[e] = root_;
      target_[e] = u;
      flow_[e] = -supply_[u];
      cost_[e] = art_cost;
    }
  }
  block_size_ = std::max(int(std::ceil(std::sqrt(double(arc_num_)))), 10);
  next_arc_ = 0;
}

bool NetworkSimplex::find_entering_arc() {
  double min = -eps_;
  int cnt = block_size_;
  int e;
  bool found = false;
  for (e = next_arc_; e < arc_num_; ++e) {
    const double c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min) {
      min = c;
      in_arc_ = e;
      found = true;
    }
    if (--cnt == 0) {
      if (found) goto search_end;
      cnt = block_size_;
    }
  }
  for (e = 0; e < next_arc_; ++e) {
    const double c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min) {
      min = c;
      in_arc_ = e;
      found = true;
    }
    if (--cnt == 0) {
      if (found) goto search_end;
      cnt = block_size_;
    }
  }
  if (!found) return false;
search_end:
  next_arc_ = e;
  return true;
}

void NetworkSimplex::find_join_node() {
  int u = source_[in_arc_], v = target_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

bool NetworkSimplex::find_leaving_arc() {
  if (state_[in_arc_] == kLower) {
    first_ = source_[in_arc_];
    second_ = target_[in_arc_];
  } else {
    first_ = target_[in_arc_];
    second_ = source_[in_arc_];
  }
  auto residual = [](double cap, double flow) { return cap >= kUnbounded ? kInf : cap - flow; };
  delta_ = residual(cap_[in_arc_], 0.0);
  int result = 0;
  for (int u = first_; u != join_; u = parent_[u]) {
    const int e = pred_[u];
    const bool down = pred_dir_[u] == kDown;
    const double d = down ? residual(cap_[e], flow_[e]) : flow_[e];
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      out_to_upper_ = down;
      result = 1;
    }
  }
  for (int u = second_; u != join_; u = parent_[u]) {
    const int e = pred_[u];
    const bool up = pred_dir_[u] == kUp;
    const double d = up ? residual(cap_[e], flow_[e]) : flow_[e];
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      out_to_upper_ = up;
      result = 2;
    }
  }
  if (result == 1) {
    u_in_ = first_;
    v_in_ = second_;
  } else {
    u_in_ = second_;
    v_in_ = first_;
  }
  return result != 0;
}

void NetworkSimplex::change_flow(bool change) {
  if (delta_ > 0.0) {
    const double val = state_[in_arc_] * delta_;
    flow_[in_arc_] += val;
    for (int u = source_[in_arc_]; u != join_; u = parent_[u]) flow_[pred_[u]] -= pred_dir_[u] * val;
    for (int u = target_[in_arc_]; u != join_; u = parent_[u]) flow_[pred_[u]] += pred_dir_[u] * val;
  }
  if (change) {
    state_[in_arc_] = kTree;
    const int out = pred_[u_out_];
    state_[out] = out_to_upper_ ? kUpper : kLower;
    flow_[out] = out_to_upper_ ? cap_[out] : 0.0;
  } else {
    state_[in_arc_] = -state_[in_arc_];
    flow_[in_arc_] = state_[in_arc_] == kUpper ? cap_[in_arc_] : 0.0;
  }
}
void NetworkSimplex::update_tree_structure() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kUp : kDown;
    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

    // re-hang the stem u_in .. u_out under v_in
    int stem = u_in_;
    int par_stem = v_in_;
    int next_stem;
    int last = last_succ_[u_in_];
    int before, after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }
    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    int tmp_sc = 0, tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = -pred_dir_[p];
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kUp : kDown;
    succ_num_[u_in_] = old_succ_num;
  }

  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
      last_succ_[u] = old_rev_thread;
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
      last_succ_[u] = last_succ_out;
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void NetworkSimplex::update_potential() {
  const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[in_arc_];
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

NetworkSimplex::Status NetworkSimplex::run() {
  init();
  pivots_ = 0;
  while (find_entering_arc()) {
    find_join_node();
    const bool change = find_leaving_arc();
    if (delta_ == kInf) return Status::Unbounded;
    change_flow(change);
    if (change) {
      update_tree_structure();
      update_potential();
    }
    ++pivots_;
  }
  double total = 0.0, art = 0.0;
  for (int u = 0; u < node_num_; ++u) total += std::abs(supply_[u]);
  for (int e = arc_num_; e < arc_num_ + node_num_; ++e) art += flow_[e];
  if (art > 1e-9 * std::max(1.0, total)) return Status::Infeasible;
  return Status::Optimal;
}

}  // namespace sphere_euler
