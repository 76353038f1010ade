#include "camoseg/loss/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace camoseg::loss {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Jonker-Volgenant row-by-row shortest augmenting path. rows/cols index into
// the original matrix so subproblems reuse the same routine.
double solve_cost(const Tensor& cost, const std::vector<int>& rows, const std::vector<int>& cols,
                  std::vector<int>* match_out = nullptr) {
    const int G = static_cast<int>(rows.size());
    const int N = static_cast<int>(cols.size());
    std::vector<double> u(static_cast<size_t>(G) + 1, 0.0), v(static_cast<size_t>(N) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(N) + 1, 0), way(static_cast<size_t>(N) + 1, 0);
    for (int i = 1; i <= G; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(N) + 1, kInf);
        std::vector<char> used(static_cast<size_t>(N) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            double delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= N; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost.at(rows[static_cast<size_t>(i0 - 1)], cols[static_cast<size_t>(j - 1)]) -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= N; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> match(static_cast<size_t>(G), -1);
    double total = 0.0;
    for (int j = 1; j <= N; ++j) {
        if (p[static_cast<size_t>(j)] == 0) continue;
        match[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    }
    for (int i = 0; i < G; ++i)
        total += cost.at(rows[static_cast<size_t>(i)], cols[static_cast<size_t>(match[static_cast<size_t>(i)])]);
    if (match_out) *match_out = match;
    return total;
}
}  // namespace

MatchAssignment hungarian_match(const Tensor& cost) {
    check_contract(cost.rank() == 2, "hungarian_match expects a [G,N] matrix");
    const int G = cost.dim(0), N = cost.dim(1);
    MatchAssignment out;
    if (G == 0) return out;
    if (G > N)
        throw InvalidInputError("infeasible assignment: " + std::to_string(G) + " ground truths > " +
                                std::to_string(N) + " predictions");
    for (double c : cost.v)
        check_input(std::isfinite(c), "hungarian_match: non-finite cost");

    std::vector<int> rows(static_cast<size_t>(G)), cols(static_cast<size_t>(N));
    for (int i = 0; i < G; ++i) rows[static_cast<size_t>(i)] = i;
    for (int j = 0; j < N; ++j) cols[static_cast<size_t>(j)] = j;
    const double best = solve_cost(cost, rows, cols);
    const double tol = 1e-9 * std::max(1.0, std::abs(best));

    // Fix pairs greedily in (gt, prediction) order; a candidate survives when
    // the remaining subproblem still reaches the optimal total.
    std::vector<char> used(static_cast<size_t>(N), 0);
    double fixed_cost = 0.0;
    for (int g = 0; g < G; ++g) {
        std::vector<int> sub_rows;
        for (int r = g + 1; r < G; ++r) sub_rows.push_back(r);
        int chosen = -1;
        for (int n = 0; n < N && chosen < 0; ++n) {
            if (used[static_cast<size_t>(n)]) continue;
            std::vector<int> sub_cols;
            for (int c = 0; c < N; ++c)
                if (!used[static_cast<size_t>(c)] && c != n) sub_cols.push_back(c);
            const double rest = sub_rows.empty() ? 0.0 : solve_cost(cost, sub_rows, sub_cols);
            if (fixed_cost + cost.at(g, n) + rest <= best + tol) chosen = n;
        }
        check_contract(chosen >= 0, "hungarian_match: tie-break refinement failed");
        used[static_cast<size_t>(chosen)] = 1;
        fixed_cost += cost.at(g, chosen);
        out.pairs.emplace_back(g, chosen);
    }
    out.total_cost = fixed_cost;
    return out;
}

}  // namespace camoseg::loss
