#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace lvtariff {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { Le, Eq, Ge };

// Sparse linear program, minimization. Variables carry box bounds (either
// side may be infinite); rows are built through add_constraint.
struct LpProblem {
    struct Row {
        std::vector<int> idx;
        std::vector<double> coef;
        Relation rel = Relation::Le;
        double rhs = 0.0;
    };

    std::vector<double> cost;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<Row> rows;

    int add_variable(double lo, double hi, double obj_coef = 0.0);
    void add_constraint(std::span<const int> idx, std::span<const double> coef, Relation rel, double rhs);
    void set_cost(int var, double obj_coef) { cost.at(var) = obj_coef; }

    int num_vars() const { return static_cast<int>(cost.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }

    // rejects out-of-range indices, duplicate entries, non-finite data
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpSolution {
    LpStatus status = LpStatus::IterLimit;
    std::vector<double> values;  // structural variables only
    double objective = 0.0;
    long iterations = 0;
};

struct LpOptions {
    double feas_tol = 1e-7;
    double dual_tol = 1e-7;
    double pivot_tol = 1e-9;
    long iteration_cap = 0;  // 0: derived from problem size
};

LpSolution solve_lp(const LpProblem& p, const LpOptions& opt = {});

// LP plus a set of variables restricted to {0,1}.
struct MilpProblem {
    LpProblem lp;
    std::vector<int> binaries;

    void validate() const;
};

enum class MilpStatus { Optimal, Infeasible, Unbounded, LimitReached };

const char* to_string(MilpStatus s);

struct MilpLimits {
    long node_cap = 200000;
    double time_cap_s = kInfinity;
    double rel_gap = 1e-6;
};

struct MilpSolution {
    MilpStatus status = MilpStatus::LimitReached;
    std::vector<double> values;
    double objective = 0.0;
    double gap = kInfinity;  // (incumbent - bound) / max(1, |incumbent|)
    long nodes_explored = 0;
    long simplex_iterations = 0;
};

// Best-first branch-and-bound over LP relaxations. Branches on the most
// fractional binary (ties to the lowest index); a rounding heuristic probes
// each fractional relaxation so near-integral problems close at the root.
MilpSolution solve_milp(const MilpProblem& p, const MilpLimits& limits = {});

// CPLEX LP-format dump for cross-checking against third-party solvers.
void write_lp_format(const MilpProblem& p, const std::string& path);

}  // namespace lvtariff
