#include "m3c/assignment.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace m3c {

std::pair<long, long> assignment_bounds(Eigen::Index n, double rho_l,
                                        double rho_u) {
    const long lo = static_cast<long>(std::ceil(rho_l * n - 1e-9));
    const long hi = static_cast<long>(std::floor(rho_u * n + 1e-9));
    return {std::max(lo, 0L), hi};
}

namespace {

struct Edge {
    int to;
    long cap;
    double cost;
    int rev;  // index of the reverse edge in graph[to]
};

class MinCostFlow {
  public:
    explicit MinCostFlow(int n) : graph_(n) {}

    void add_edge(int from, int to, long cap, double cost) {
        graph_[from].push_back(
            {to, cap, cost, static_cast<int>(graph_[to].size())});
        graph_[to].push_back(
            {from, 0, -cost, static_cast<int>(graph_[from].size() - 1)});
    }

    // Sends as much flow as possible from s to t along successive shortest
    // paths (SPFA handles the negative mandatory-capacity arcs). Returns the
    // total flow sent.
    long run(int s, int t) {
        long total = 0;
        const int n = static_cast<int>(graph_.size());
        std::vector<double> dist(n);
        std::vector<int> prev_node(n), prev_edge(n);
        std::vector<bool> in_queue(n);
        for (;;) {
            std::fill(dist.begin(), dist.end(),
                      std::numeric_limits<double>::infinity());
            std::fill(in_queue.begin(), in_queue.end(), false);
            dist[s] = 0.0;
            std::deque<int> queue{s};
            in_queue[s] = true;
            while (!queue.empty()) {
                const int u = queue.front();
                queue.pop_front();
                in_queue[u] = false;
                for (std::size_t e = 0; e < graph_[u].size(); ++e) {
                    const Edge& edge = graph_[u][e];
                    if (edge.cap <= 0) continue;
                    const double nd = dist[u] + edge.cost;
                    if (nd < dist[edge.to] - 1e-12) {
                        dist[edge.to] = nd;
                        prev_node[edge.to] = u;
                        prev_edge[edge.to] = static_cast<int>(e);
                        if (!in_queue[edge.to]) {
                            queue.push_back(edge.to);
                            in_queue[edge.to] = true;
                        }
                    }
                }
            }
            if (!std::isfinite(dist[t])) return total;
            long push = std::numeric_limits<long>::max();
            for (int v = t; v != s; v = prev_node[v])
                push = std::min(push, graph_[prev_node[v]][prev_edge[v]].cap);
            for (int v = t; v != s; v = prev_node[v]) {
                Edge& edge = graph_[prev_node[v]][prev_edge[v]];
                edge.cap -= push;
                graph_[edge.to][edge.rev].cap += push;
            }
            total += push;
        }
    }

    const std::vector<std::vector<Edge>>& graph() const { return graph_; }

  private:
    std::vector<std::vector<Edge>> graph_;
};

}  // namespace

AssignmentResult solve_assignment(const AssignmentLP& lp) {
    const Eigen::Index n = lp.cost.rows();
    const int kappa = static_cast<int>(lp.cost.cols());
    if (n < 1 || kappa < 1)
        throw std::invalid_argument("solve_assignment: empty cost matrix");
    if (!lp.cost.allFinite())
        throw std::invalid_argument("solve_assignment: non-finite costs");
    const auto [lo, hi] = assignment_bounds(n, lp.rho_l, lp.rho_u);
    if (lo * kappa > n || hi * kappa < n || hi < lo)
        throw std::invalid_argument(
            "solve_assignment: capacity window admits no assignment");

    AssignmentResult res;
    res.labels.resize(n);

    // Unconstrained per-row argmin; if it meets the occupancy window it is
    // optimal outright.
    std::vector<long> counts(kappa, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        for (int k = 1; k < kappa; ++k)
            if (lp.cost(i, k) < lp.cost(i, best)) best = k;
        res.labels[i] = best;
        ++counts[best];
    }
    bool feasible = true;
    for (int k = 0; k < kappa; ++k)
        if (counts[k] < lo || counts[k] > hi) feasible = false;

    if (!feasible) {
        // Exact min-cost flow. Costs are shifted per row to be nonnegative;
        // mandatory class occupancy is encoded as a large-bonus arc.
        Eigen::VectorXd row_min = lp.cost.rowwise().minCoeff();
        double cmax = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            cmax = std::max(cmax, (lp.cost.row(i).maxCoeff() - row_min(i)));
        const double big = cmax * (n + 1) + 1.0;

        const int src = 0;
        const int item0 = 1;
        const int class0 = item0 + static_cast<int>(n);
        const int sink = class0 + kappa;
        MinCostFlow flow(sink + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            flow.add_edge(src, item0 + static_cast<int>(i), 1, 0.0);
            for (int k = 0; k < kappa; ++k)
                flow.add_edge(item0 + static_cast<int>(i), class0 + k, 1,
                              lp.cost(i, k) - row_min(i));
        }
        for (int k = 0; k < kappa; ++k) {
            if (lo > 0) flow.add_edge(class0 + k, sink, lo, -big);
            if (hi > lo) flow.add_edge(class0 + k, sink, hi - lo, 0.0);
        }
        const long sent = flow.run(src, sink);
        if (sent != n)
            throw std::invalid_argument(
                "solve_assignment: capacity window admits no assignment");
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& edges = flow.graph()[item0 + static_cast<int>(i)];
            int label = -1;
            for (const auto& e : edges)
                if (e.to >= class0 && e.to < class0 + kappa && e.cap == 0)
                    label = e.to - class0;
            res.labels[i] = label;
        }
    }

    res.objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        res.objective += lp.cost(i, res.labels[i]);
    return res;
}

}  // namespace m3c
