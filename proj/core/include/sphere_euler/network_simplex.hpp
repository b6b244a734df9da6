#pragma once

#include <vector>

namespace sphere_euler {

// Primal network simplex for min-cost flow with equality supplies and
// optional arc capacities, block pivot search, spanning tree stored as
// parent/thread lists.
class NetworkSimplex {
 public:
  enum class Status { Optimal, Infeasible, Unbounded };
  static constexpr double kUnbounded = 1e300;

  explicit NetworkSimplex(int num_nodes);

  void reserve_arcs(std::size_t n);
  int add_arc(int source, int target, double cost, double capacity = kUnbounded);
  void set_supply(int node, double supply);

  Status run();

  double flow(int arc) const { return flow_[arc]; }
  // Reduced costs c + pi(s) - pi(t) are >= 0 at optimality.
  double potential(int node) const { return pi_[node]; }
  double total_cost() const;
  long pivots() const { return pivots_; }
  int num_arcs() const { return arc_num_; }

 private:
  static constexpr int kUp = 1, kDown = -1;
  static constexpr int kUpper = -1, kTree = 0, kLower = 1;

  void init();
  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow(bool change);
  void update_tree_structure();
  void update_potential();

  int node_num_;
  int arc_num_ = 0;
  std::vector<int> source_, target_;
  std::vector<double> cost_, cap_, flow_, supply_, pi_;
  std::vector<int> state_;
  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_;
  std::vector<int> dirty_revs_;

  int root_ = 0;
  int in_arc_ = 0, join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  int first_ = 0, second_ = 0;
  double delta_ = 0.0;
  bool out_to_upper_ = false;
  int block_size_ = 0, next_arc_ = 0;
  double eps_ = 0.0;
  long pivots_ = 0;
};

}  // namespace sphere_euler
