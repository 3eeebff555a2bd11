#include "msr/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace msr {

namespace {

// Summed joint distance along the best monotone alignment path. Ties between
// predecessors prefer diagonal, then the (i-1, j) step, so the reported path
// length is deterministic.
double dtw_directional(const Matrix& a, const Matrix& b, bool normalize) {
    const Eigen::Index n = a.rows(), m = b.rows();
    Matrix cost(n, m);
    Eigen::MatrixXi length(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double d = (a.row(i) - b.row(j)).norm();
            if (i == 0 && j == 0) {
                cost(i, j) = d;
                length(i, j) = 1;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            int best_len = 0;
            auto consider = [&](Eigen::Index pi, Eigen::Index pj) {
                if (pi < 0 || pj < 0) return;
                if (cost(pi, pj) < best) {
                    best = cost(pi, pj);
                    best_len = length(pi, pj);
                }
            };
            consider(i - 1, j - 1);
            consider(i - 1, j);
            consider(i, j - 1);
            cost(i, j) = d + best;
            length(i, j) = best_len + 1;
        }
    }
    const double total = cost(n - 1, m - 1);
    return normalize ? total / length(n - 1, m - 1) : total;
}

void validate_skeleton(const Skeleton& s, const char* what) {
    if (s.size() < 1) {
        throw DegenerateInputError(std::string(what) + ": empty skeleton");
    }
    if (!s.points.allFinite()) {
        throw DegenerateInputError(std::string(what) +
                                   ": non-finite joint coordinates");
    }
}

// Shortest-augmenting-path assignment (Jonker-Volgenant flavor) with row and
// column potentials; O(n^3), deterministic.
std::vector<int> solve_assignment(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(n) + 1, 0);  // col -> row, 1-based
    std::vector<int> way(static_cast<size_t>(n) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = match[static_cast<size_t>(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = a(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                                   v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (match[static_cast<size_t>(j)] > 0) {
            row_to_col[static_cast<size_t>(match[static_cast<size_t>(j)]) - 1] =
                j - 1;
        }
    }
    return row_to_col;
}

double assignment_cost(const Matrix& a, const std::vector<int>& perm) {
    double total = 0.0;
    for (size_t i = 0; i < perm.size(); ++i) {
        total += a(static_cast<Eigen::Index>(i), perm[i]);
    }
    return total;
}

}  // namespace

double dtw_cost(const Skeleton& a, const Skeleton& b, const DtwOptions& options) {
    validate_skeleton(a, "dtw_cost");
    validate_skeleton(b, "dtw_cost");
    if (a.dimension() != b.dimension()) {
        throw DimensionMismatchError("dtw_cost: joint dimensions disagree");
    }
    double best = dtw_directional(a.points, b.points,
                                  options.normalize_by_path_length);
    if (options.try_reversed) {
        const Matrix reversed = b.points.colwise().reverse();
        best = std::min(best, dtw_directional(a.points, reversed,
                                              options.normalize_by_path_length));
    }
    return best;
}

Matrix symmetry_cost_matrix(const std::vector<Skeleton>& skeletons,
                            const Hyperplane& plane,
                            const DtwOptions& options) {
    const Eigen::Index k = static_cast<Eigen::Index>(skeletons.size());
    if (k == 0) {
        throw DegenerateInputError("symmetry_cost_matrix: no skeletons");
    }
    std::vector<Skeleton> mirrored;
    mirrored.reserve(skeletons.size());
    for (const Skeleton& s : skeletons) {
        validate_skeleton(s, "symmetry_cost_matrix");
        if (s.dimension() != plane.dimension()) {
            throw DimensionMismatchError(
                "symmetry_cost_matrix: skeleton and plane dimensions disagree");
        }
        mirrored.push_back(
            Skeleton{reflect_points(PointCloud(s.points), plane).points(), s.id});
    }

    Matrix direct(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            direct(i, j) = dtw_cost(skeletons[static_cast<size_t>(i)],
                                    mirrored[static_cast<size_t>(j)], options);
        }
    }
    // Mirror-matching should not care which of the two was reflected.
    Matrix sym(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            sym(i, j) = std::min(direct(i, j), direct(j, i));
        }
    }
    return sym;
}

Assignment munkres(const Matrix& costs) {
    if (costs.rows() != costs.cols() || costs.rows() == 0) {
        throw DimensionMismatchError("munkres: cost matrix must be square");
    }
    if (!costs.allFinite()) {
        throw DegenerateInputError("munkres: costs must be finite");
    }
    const int n = static_cast<int>(costs.rows());

    const std::vector<int> base = solve_assignment(costs);
    const double best_total = assignment_cost(costs, base);
    const double tol = 1e-9 * std::max(1.0, std::abs(best_total));

    // Lexicographic refinement: for each row in turn, commit to the smallest
    // column that still admits an optimal completion (checked by re-solving
    // the remaining subproblem).
    std::vector<int> remaining_cols(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) remaining_cols[static_cast<size_t>(j)] = j;
    std::vector<int> perm(static_cast<size_t>(n), -1);
    double prefix = 0.0;

    for (int i = 0; i < n; ++i) {
        const int rest = n - i - 1;
        for (size_t cand = 0; cand < remaining_cols.size(); ++cand) {
            const int j = remaining_cols[cand];
            double completion = 0.0;
            if (rest > 0) {
                Matrix sub(rest, rest);
                int cc = 0;
                for (size_t other = 0; other < remaining_cols.size(); ++other) {
                    if (other == cand) continue;
                    for (int r = 0; r < rest; ++r) {
                        sub(r, cc) = costs(i + 1 + r, remaining_cols[other]);
                    }
                    ++cc;
                }
                completion = assignment_cost(sub, solve_assignment(sub));
            }
            if (prefix + costs(i, j) + completion <= best_total + tol) {
                perm[static_cast<size_t>(i)] = j;
                prefix += costs(i, j);
                remaining_cols.erase(remaining_cols.begin() +
                                     static_cast<std::ptrdiff_t>(cand));
                break;
            }
        }
        if (perm[static_cast<size_t>(i)] < 0) {
            // Numerically impossible; fall back to the unrefined solution.
            return {base, best_total};
        }
    }
    return {perm, assignment_cost(costs, perm)};
}

PairingResult pair_skeletons(const std::vector<Skeleton>& skeletons,
                             const Hyperplane& plane,
                             const DtwOptions& options) {
    const int k = static_cast<int>(skeletons.size());
    if (k < 2) {
        throw DegenerateInputError("pair_skeletons: need at least two skeletons");
    }
    const Matrix sym = symmetry_cost_matrix(skeletons, plane, options);

    const int n = k + (k % 2);  // one virtual partner for odd counts
    double max_off = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if (i != j) max_off = std::max(max_off, sym(i, j));
    const double virtual_cost = max_off + 1.0;
    // Dominates every self-pair-free assignment, so the diagonal is never
    // chosen: n * (largest usable entry) < forbidden.
    const double forbidden = (n + 2) * (max_off + virtual_cost + 1.0);

    Matrix padded(n, n);
    padded.setConstant(virtual_cost);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) padded(i, j) = sym(i, j);
    for (int i = 0; i < n; ++i) padded(i, i) = forbidden;

    const Assignment asg = munkres(padded);

    PairingResult out;
    for (int i = 0; i < k; ++i) {
        const int j = asg.permutation[static_cast<size_t>(i)];
        if (j >= k) {
            out.unmatched.push_back(i);
            continue;
        }
        const bool mutual = asg.permutation[static_cast<size_t>(j)] == i;
        if (mutual && j < i) continue;  // already reported as (j, i)
        out.pairs.push_back({i, j, sym(i, j), mutual});
        out.total_cost += sym(i, j);
    }
    return out;
}

}  // namespace msr
