#ifndef BBALIGN_BB_DRIVER_HPP
#define BBALIGN_BB_DRIVER_HPP

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace bbalign {

/// One row per popped-and-branched node.
struct TraceRecord {
    std::uint64_t iter = 0;
    std::string stage;
    int depth = 0;
    std::uint64_t nodes_active = 0;
    double best_lower = 0.0;
    double best_upper = 0.0;
    double gap = 0.0;
};

struct BbSettings {
    int max_depth = 0;
    /// Stop once (U - L) / |U| falls to this value.
    double gap_tol = 0.0;
    bool prune = true;
    /// Nodes whose upper bound is below this are dropped as well, e.g. when a
    /// competing search already holds a better value. Only used with prune.
    double prune_floor = -std::numeric_limits<double>::infinity();
    int threads = 1;
    std::string stage = "bb";
};

template <class Node, class Point>
struct BoundedNode {
    Node node;
    double lower = 0.0;
    double upper = 0.0;
    Point argmax{};
    std::uint64_t seq = 0;
};

template <class Node, class Point>
struct BbOutcome {
    Point best{};
    double best_lower = -std::numeric_limits<double>::infinity();
    double best_upper = std::numeric_limits<double>::infinity();
    /// Unexplored nodes left when the search stopped, including the stopping node.
    std::vector<BoundedNode<Node, Point>> frontier;
    std::vector<TraceRecord> trace;
    std::uint64_t nodes_evaluated = 0;
    /// True when nodes were dropped by prune_floor; best_upper still covers them.
    bool floor_pruned = false;
};

inline double relative_gap(double upper, double lower) {
    const double denom = std::max(std::abs(upper), std::numeric_limits<double>::min());
    return std::max(0.0, upper - lower) / denom;
}

/// Best-first branch and bound maximizing an objective. `evaluate(node)`
/// returns a BoundedNode with lower/upper/argmax filled; `split(node)` returns
/// a fixed-size array of children covering the node. The node with the largest
/// upper bound is expanded (ties: deeper first, then insertion order); the
/// search stops when that node reaches max_depth or the gap closes.
/// Child upper bounds are clipped to the parent's, which is valid because the
/// children partition the parent.
template <class Node, class Point, class Evaluate, class Split>
BbOutcome<Node, Point> branch_and_bound(const std::vector<Node>& roots, Evaluate evaluate, Split split,
                                        const BbSettings& settings) {
    using Entry = BoundedNode<Node, Point>;
    auto worse = [](const Entry& a, const Entry& b) {
        if (a.upper != b.upper) return a.upper < b.upper;
        if (a.node.depth() != b.node.depth()) return a.node.depth() < b.node.depth();
        return a.seq > b.seq;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> queue(worse);
    tbb::task_arena arena(std::max(1, settings.threads));

    BbOutcome<Node, Point> out;
    std::uint64_t seq = 0;
    double floor_upper = -std::numeric_limits<double>::infinity();
    // Drops a node; remembers its bound if only the floor rejected it.
    auto dropped = [&](const Entry& e) {
        if (!settings.prune) return false;
        if (e.upper < out.best_lower) return true;
        if (e.upper < settings.prune_floor) {
            floor_upper = std::max(floor_upper, e.upper);
            out.floor_pruned = true;
            return true;
        }
        return false;
    };

    auto evaluate_all = [&](auto& nodes, std::vector<Entry>& results) {
        results.resize(nodes.size());
        arena.execute([&] {
            tbb::parallel_for(std::size_t{0}, nodes.size(), [&](std::size_t n) { results[n] = evaluate(nodes[n]); });
        });
        out.nodes_evaluated += nodes.size();
    };
    auto accept = [&](std::vector<Entry>& results, double parent_upper) {
        for (Entry& e : results) {
            e.upper = std::min(e.upper, parent_upper);
            e.seq = seq++;
            if (e.lower > out.best_lower) {
                out.best_lower = e.lower;
                out.best = e.argmax;
            }
        }
        for (Entry& e : results) {
            if (!dropped(e)) queue.push(std::move(e));
        }
    };

    std::vector<Entry> results;
    evaluate_all(roots, results);
    accept(results, std::numeric_limits<double>::infinity());

    std::uint64_t iter = 0;
    while (!queue.empty()) {
        Entry top = queue.top();
        if (dropped(top)) {
            queue.pop();
            continue;
        }
        if (top.node.depth() >= settings.max_depth ||
            relative_gap(std::max(top.upper, out.best_lower), out.best_lower) <= settings.gap_tol) {
            break;
        }
        queue.pop();
        const auto children = split(top.node);
        evaluate_all(children, results);
        accept(results, top.upper);

        TraceRecord rec;
        rec.iter = iter++;
        rec.stage = settings.stage;
        rec.depth = top.node.depth();
        rec.nodes_active = queue.size();
        rec.best_lower = out.best_lower;
        rec.best_upper = std::max(out.best_lower, floor_upper);
        if (!queue.empty()) rec.best_upper = std::max(rec.best_upper, queue.top().upper);
        rec.gap = relative_gap(rec.best_upper, rec.best_lower);
        out.trace.push_back(rec);
    }

    out.best_upper = std::max(out.best_lower, floor_upper);
    if (!queue.empty()) out.best_upper = std::max(out.best_upper, queue.top().upper);
    while (!queue.empty()) {
        if (!settings.prune || queue.top().upper >= out.best_lower) out.frontier.push_back(queue.top());
        queue.pop();
    }
    return out;
}

}  // namespace bbalign

#endif  // BBALIGN_BB_DRIVER_HPP
