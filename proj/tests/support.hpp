#pragma once

// Shared helpers for the solver tests and the acceptance suite: random
// instance generators and slow-but-sure reference oracles.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "lvtariff/rng.hpp"
#include "lvtariff/solver.hpp"

namespace lvtest {

using lvtariff::LpProblem;
using lvtariff::LpStatus;
using lvtariff::MilpProblem;
using lvtariff::MilpStatus;
using lvtariff::Relation;

inline double row_activity(const LpProblem::Row& row, const std::vector<double>& x) {
    double a = 0.0;
    for (std::size_t k = 0; k < row.idx.size(); ++k) a += row.coef[k] * x[row.idx[k]];
    return a;
}

inline bool lp_feasible(const LpProblem& p, const std::vector<double>& x, double tol) {
    for (int j = 0; j < p.num_vars(); ++j) {
        if (x[j] < p.lower[j] - tol || x[j] > p.upper[j] + tol) return false;
    }
    for (const auto& row : p.rows) {
        const double a = row_activity(row, x);
        switch (row.rel) {
            case Relation::Le:
                if (a > row.rhs + tol) return false;
                break;
            case Relation::Ge:
                if (a < row.rhs - tol) return false;
                break;
            case Relation::Eq:
                if (std::abs(a - row.rhs) > tol) return false;
                break;
        }
    }
    return true;
}

inline double lp_objective(const LpProblem& p, const std::vector<double>& x) {
    double o = 0.0;
    for (int j = 0; j < p.num_vars(); ++j) o += p.cost[j] * x[j];
    return o;
}

// Exhaustive vertex enumeration for LPs whose variables all carry finite
// bounds (so the feasible set is a polytope and any optimum sits on a
// vertex). Returns the best objective, or nullopt when infeasible.
inline std::optional<double> vertex_enumeration_best(const LpProblem& p, double tol = 1e-9) {
    const int n = p.num_vars();
    struct Plane {
        std::vector<double> a;
        double b;
    };
    std::vector<Plane> planes;
    for (const auto& row : p.rows) {
        Plane pl;
        pl.a.assign(n, 0.0);
        for (std::size_t k = 0; k < row.idx.size(); ++k) pl.a[row.idx[k]] = row.coef[k];
        pl.b = row.rhs;
        planes.push_back(std::move(pl));
    }
    for (int j = 0; j < n; ++j) {
        Plane lo;
        lo.a.assign(n, 0.0);
        lo.a[j] = 1.0;
        lo.b = p.lower[j];
        planes.push_back(lo);
        Plane hi = lo;
        hi.b = p.upper[j];
        planes.push_back(std::move(hi));
    }

    const int np = static_cast<int>(planes.size());
    std::vector<int> pick(n);
    std::optional<double> best;

    auto consider = [&](const std::vector<int>& sel) {
        Eigen::MatrixXd A(n, n);
        Eigen::VectorXd b(n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) A(r, c) = planes[sel[r]].a[c];
            b[r] = planes[sel[r]].b;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) return;
        Eigen::VectorXd xv = lu.solve(b);
        std::vector<double> x(xv.data(), xv.data() + n);
        if (!lp_feasible(p, x, tol * 10)) return;
        const double obj = lp_objective(p, x);
        if (!best || obj < *best) best = obj;
    };

    // All size-n subsets of the planes.
    std::vector<int> sel;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(sel.size()) == n) {
            consider(sel);
            return;
        }
        for (int i = start; i < np; ++i) {
            sel.push_back(i);
            self(self, i + 1);
            sel.pop_back();
        }
    };
    rec(rec, 0);
    return best;
}

// Reference MILP solution by enumerating every binary assignment and
// solving the remaining LP. Only workable for small binary counts.
struct BruteForceResult {
    bool feasible = false;
    double objective = 0.0;
};

inline BruteForceResult brute_force_milp(const MilpProblem& p) {
    BruteForceResult out;
    const int nb = static_cast<int>(p.binaries.size());
    for (long mask = 0; mask < (1L << nb); ++mask) {
        LpProblem fixed = p.lp;
        for (int k = 0; k < nb; ++k) {
            const int v = p.binaries[k];
            const double val = (mask >> k) & 1 ? 1.0 : 0.0;
            if (val < fixed.lower[v] || val > fixed.upper[v]) goto next_mask;
            fixed.lower[v] = val;
            fixed.upper[v] = val;
        }
        {
            lvtariff::LpSolution s = lvtariff::solve_lp(fixed);
            if (s.status == LpStatus::Optimal) {
                if (!out.feasible || s.objective < out.objective) {
                    out.feasible = true;
                    out.objective = s.objective;
                }
            }
        }
    next_mask:;
    }
    return out;
}

// Random box-bounded LP. Rows are mostly anchored around an interior point
// so a healthy share of instances is feasible; the rest stress phase 1.
inline LpProblem random_lp(lvtariff::Rng& rng, int nv, int nr, bool allow_eq = true) {
    LpProblem p;
    std::vector<double> mid(nv);
    for (int j = 0; j < nv; ++j) {
        const double lo = rng.uniform(-4.0, 1.0);
        const double hi = lo + rng.uniform(0.5, 6.0);
        p.add_variable(lo, hi, rng.uniform(-3.0, 3.0));
        mid[j] = 0.5 * (lo + hi);
    }
    for (int r = 0; r < nr; ++r) {
        std::vector<int> idx;
        std::vector<double> coef;
        double act_mid = 0.0;
        for (int j = 0; j < nv; ++j) {
            if (rng.uniform() < 0.7 || nv <= 2) {
                const double c = rng.uniform(-2.0, 2.0);
                idx.push_back(j);
                coef.push_back(c);
                act_mid += c * mid[j];
            }
        }
        if (idx.empty()) {
            idx.push_back(0);
            coef.push_back(1.0);
            act_mid = mid[0];
        }
        const double u = rng.uniform();
        if (allow_eq && u < 0.15) {
            p.add_constraint(idx, coef, Relation::Eq, act_mid);
        } else if (u < 0.55) {
            const double slack = rng.uniform() < 0.8 ? rng.uniform(0.0, 3.0) : rng.uniform(-1.5, 0.0);
            p.add_constraint(idx, coef, Relation::Le, act_mid + slack);
        } else {
            const double slack = rng.uniform() < 0.8 ? rng.uniform(0.0, 3.0) : rng.uniform(-1.5, 0.0);
            p.add_constraint(idx, coef, Relation::Ge, act_mid - slack);
        }
    }
    return p;
}

// Random MILP with nb binaries leading the variable list.
inline MilpProblem random_milp(lvtariff::Rng& rng, int nv, int nb, int nr) {
    MilpProblem m;
    for (int j = 0; j < nv; ++j) {
        if (j < nb) {
            m.lp.add_variable(0.0, 1.0, rng.uniform(-3.0, 3.0));
            m.binaries.push_back(j);
        } else {
            const double lo = rng.uniform(-2.0, 0.5);
            m.lp.add_variable(lo, lo + rng.uniform(0.5, 5.0), rng.uniform(-3.0, 3.0));
        }
    }
    for (int r = 0; r < nr; ++r) {
        std::vector<int> idx;
        std::vector<double> coef;
        double worst = 0.0;  // max activity over the box
        for (int j = 0; j < nv; ++j) {
            if (rng.uniform() < 0.6) {
                const double c = rng.uniform(-2.0, 2.0);
                idx.push_back(j);
                coef.push_back(c);
                worst += std::max(c * m.lp.lower[j], c * m.lp.upper[j]);
            }
        }
        if (idx.empty()) continue;
        // Cut somewhere below the box maximum so rows bite but usually
        // leave room; occasionally make the instance infeasible.
        const double rhs = worst - rng.uniform(0.0, 4.0) - (rng.uniform() < 0.08 ? 50.0 : 0.0);
        if (rng.uniform() < 0.5) {
            for (double& c : coef) c = -c;
            m.lp.add_constraint(idx, coef, Relation::Ge, -rhs);
        } else {
            m.lp.add_constraint(idx, coef, Relation::Le, rhs);
        }
    }
    return m;
}

}  // namespace lvtest
