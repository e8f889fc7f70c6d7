#include "lvtariff/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "lvtariff/csv.hpp"
#include "lvtariff/errors.hpp"

namespace lvtariff {

int LpProblem::add_variable(double lo, double hi, double obj_coef) {
    lower.push_back(lo);
    upper.push_back(hi);
    cost.push_back(obj_coef);
    return static_cast<int>(cost.size()) - 1;
}

void LpProblem::add_constraint(std::span<const int> idx, std::span<const double> coef, Relation rel,
                               double rhs) {
    if (idx.size() != coef.size()) throw std::invalid_argument("constraint index/coefficient size mismatch");
    Row row;
    row.idx.assign(idx.begin(), idx.end());
    row.coef.assign(coef.begin(), coef.end());
    row.rel = rel;
    row.rhs = rhs;
    rows.push_back(std::move(row));
}

void LpProblem::validate() const {
    const int n = num_vars();
    if (lower.size() != cost.size() || upper.size() != cost.size())
        throw std::invalid_argument("variable arrays out of sync");
    for (int j = 0; j < n; ++j) {
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || !std::isfinite(cost[j]))
            throw std::invalid_argument("non-finite variable data at index " + std::to_string(j));
    }
    std::vector<char> seen(n, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        if (row.idx.size() != row.coef.size())
            throw std::invalid_argument("row " + std::to_string(r) + " index/coefficient size mismatch");
        if (!std::isfinite(row.rhs))
            throw std::invalid_argument("row " + std::to_string(r) + " has non-finite rhs");
        for (std::size_t k = 0; k < row.idx.size(); ++k) {
            const int j = row.idx[k];
            if (j < 0 || j >= n)
                throw std::invalid_argument("row " + std::to_string(r) + " references undeclared variable " +
                                            std::to_string(j));
            if (!std::isfinite(row.coef[k]))
                throw std::invalid_argument("row " + std::to_string(r) + " has non-finite coefficient");
            if (seen[j]) throw std::invalid_argument("row " + std::to_string(r) + " repeats variable " + std::to_string(j));
            seen[j] = 1;
        }
        for (int j : row.idx) seen[j] = 0;
    }
}

void MilpProblem::validate() const {
    lp.validate();
    int prev = -1;
    for (int b : binaries) {
        if (b < 0 || b >= lp.num_vars())
            throw std::invalid_argument("binary index out of range: " + std::to_string(b));
        if (b <= prev) throw std::invalid_argument("binary indices must be strictly increasing");
        if (lp.lower[b] < -1e-12 || lp.upper[b] > 1.0 + 1e-12)
            throw std::invalid_argument("binary variable " + std::to_string(b) + " has bounds outside [0,1]");
        prev = b;
    }
}

const char* to_string(MilpStatus s) {
    switch (s) {
        case MilpStatus::Optimal: return "Optimal";
        case MilpStatus::Infeasible: return "Infeasible";
        case MilpStatus::Unbounded: return "Unbounded";
        case MilpStatus::LimitReached: return "LimitReached";
    }
    return "?";
}

namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

// Product-form eta factor: B_new = B_old * E where E is identity with
// column r replaced by w. Off-diagonal entries stored sparsely.
struct Eta {
    int r = 0;
    double wr = 1.0;
    std::vector<std::pair<int, double>> off;
};

constexpr int kRefactorInterval = 64;
constexpr int kBlandTrigger = 200;
constexpr double kDegenStep = 1e-11;

// Bounded-variable revised simplex over the computational form A x + s = b,
// slack bounds encoding the row relation. Phase 1 introduces artificial
// columns only on rows whose clamped slack cannot absorb the residual.
class Simplex {
  public:
    Simplex(const LpProblem& p, const LpOptions& opt) : opt_(opt) {
        m_ = p.num_rows();
        n_struct_ = p.num_vars();

        // CSC assembly: structural columns first, then one slack per row.
        std::vector<std::vector<std::pair<int, double>>> cols(n_struct_);
        b_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            const LpProblem::Row& row = p.rows[i];
            b_[i] = row.rhs;
            for (std::size_t k = 0; k < row.idx.size(); ++k)
                if (row.coef[k] != 0.0) cols[row.idx[k]].push_back({i, row.coef[k]});
        }
        col_start_.reserve(n_struct_ + m_ + 1);
        col_start_.push_back(0);
        for (int j = 0; j < n_struct_; ++j) {
            std::sort(cols[j].begin(), cols[j].end());
            for (auto& [i, v] : cols[j]) {
                row_idx_.push_back(i);
                vals_.push_back(v);
            }
            col_start_.push_back(static_cast<int>(row_idx_.size()));
            lower_.push_back(p.lower[j]);
            upper_.push_back(p.upper[j]);
            cost_.push_back(p.cost[j]);
        }
        for (int i = 0; i < m_; ++i) {
            row_idx_.push_back(i);
            vals_.push_back(1.0);
            col_start_.push_back(static_cast<int>(row_idx_.size()));
            switch (p.rows[i].rel) {
                case Relation::Le: lower_.push_back(0.0), upper_.push_back(kInfinity); break;
                case Relation::Ge: lower_.push_back(-kInfinity), upper_.push_back(0.0); break;
                case Relation::Eq: lower_.push_back(0.0), upper_.push_back(0.0); break;
            }
            cost_.push_back(0.0);
        }
        n_ = n_struct_ + m_;

        iter_cap_ = opt_.iteration_cap > 0 ? opt_.iteration_cap : 50L * (m_ + n_) + 10000;
    }

    LpSolution run() {
        LpSolution sol;
        for (int j = 0; j < n_; ++j) {
            if (lower_[j] > upper_[j] + opt_.feas_tol) {
                sol.status = LpStatus::Infeasible;
                return sol;
            }
        }
        if (m_ == 0) return solve_unconstrained();

        init_starting_basis();

        if (have_artificials_) {
            LpStatus st = iterate(phase1_cost_);
            if (st != LpStatus::Optimal) {
                sol.status = st == LpStatus::Unbounded ? LpStatus::Infeasible : st;
                sol.iterations = iterations_;
                return sol;
            }
            double infeas = 0.0;
            for (int j = n_; j < n_total_; ++j) infeas += std::abs(x_[j]);
            double scale = 1.0;
            for (int i = 0; i < m_; ++i) scale = std::max(scale, std::abs(b_[i]));
            if (infeas > opt_.feas_tol * scale) {
                sol.status = LpStatus::Infeasible;
                sol.iterations = iterations_;
                return sol;
            }
            // Pin artificials at zero for phase 2.
            for (int j = n_; j < n_total_; ++j) {
                lower_[j] = 0.0;
                upper_[j] = 0.0;
                if (in_basis_pos_[j] < 0) {
                    state_[j] = VarState::AtLower;
                    x_[j] = 0.0;
                }
            }
            refactorize();
        }

        LpStatus st = iterate(cost_);
        sol.status = st;
        sol.iterations = iterations_;
        if (st == LpStatus::Optimal || st == LpStatus::IterLimit) {
            sol.values.assign(x_.begin(), x_.begin() + n_struct_);
            double obj = 0.0;
            for (int j = 0; j < n_struct_; ++j) obj += cost_[j] * x_[j];
            sol.objective = obj;
        }
        return sol;
    }

  private:
    LpSolution solve_unconstrained() {
        LpSolution sol;
        sol.values.resize(n_struct_, 0.0);
        double obj = 0.0;
        for (int j = 0; j < n_struct_; ++j) {
            double x;
            if (cost_[j] > 0.0) {
                x = lower_[j];
            } else if (cost_[j] < 0.0) {
                x = upper_[j];
            } else {
                x = std::isfinite(lower_[j]) ? lower_[j] : (std::isfinite(upper_[j]) ? upper_[j] : 0.0);
            }
            if (!std::isfinite(x)) {
                sol.status = LpStatus::Unbounded;
                return sol;
            }
            sol.values[j] = x;
            obj += cost_[j] * x;
        }
        sol.status = LpStatus::Optimal;
        sol.objective = obj;
        return sol;
    }

    void push_column(int row, double v) {
        row_idx_.push_back(row);
        vals_.push_back(v);
        col_start_.push_back(static_cast<int>(row_idx_.size()));
    }

    void init_starting_basis() {
        x_.assign(n_, 0.0);
        state_.assign(n_, VarState::AtLower);
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lower_[j])) {
                x_[j] = lower_[j];
                state_[j] = VarState::AtLower;
            } else if (std::isfinite(upper_[j])) {
                x_[j] = upper_[j];
                state_[j] = VarState::AtUpper;
            } else {
                x_[j] = 0.0;
                state_[j] = VarState::FreeZero;
            }
        }
        // Row residuals with every column at its resting point.
        std::vector<double> act(m_, 0.0);
        for (int j = 0; j < n_; ++j) {
            if (x_[j] == 0.0) continue;
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) act[row_idx_[k]] += vals_[k] * x_[j];
        }

        basis_.resize(m_);
        n_total_ = n_;
        phase1_cost_.assign(n_, 0.0);
        have_artificials_ = false;
        for (int i = 0; i < m_; ++i) {
            const int sj = n_struct_ + i;
            double resid = b_[i] - (act[i] - x_[sj]);  // required slack value
            if (resid >= lower_[sj] - opt_.feas_tol && resid <= upper_[sj] + opt_.feas_tol) {
                x_[sj] = std::clamp(resid, lower_[sj], upper_[sj]);
                state_[sj] = VarState::Basic;
                basis_[i] = sj;
                continue;
            }
            // Clamp the slack and cover the leftover with an artificial.
            double clamped = std::clamp(resid, lower_[sj], upper_[sj]);
            x_[sj] = clamped;
            state_[sj] = clamped == lower_[sj] ? VarState::AtLower : VarState::AtUpper;
            double rho = resid - clamped;
            push_column(i, 1.0);
            if (rho > 0.0) {
                lower_.push_back(0.0);
                upper_.push_back(kInfinity);
                phase1_cost_.push_back(1.0);
            } else {
                lower_.push_back(-kInfinity);
                upper_.push_back(0.0);
                phase1_cost_.push_back(-1.0);
            }
            cost_.push_back(0.0);
            x_.push_back(rho);
            state_.push_back(VarState::Basic);
            basis_[i] = n_total_;
            ++n_total_;
            have_artificials_ = true;
        }

        in_basis_pos_.assign(n_total_, -1);
        for (int i = 0; i < m_; ++i) in_basis_pos_[basis_[i]] = i;
        refactorize();
    }

    void refactorize() {
        std::vector<Eigen::Triplet<double>> trips;
        for (int i = 0; i < m_; ++i) {
            const int j = basis_[i];
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
                trips.push_back({row_idx_[k], i, vals_[k]});
        }
        Eigen::SparseMatrix<double> B(m_, m_);
        B.setFromTriplets(trips.begin(), trips.end());
        B.makeCompressed();
        lu_.compute(B);
        if (lu_.info() != Eigen::Success) throw SolverError("basis factorization failed");
        etas_.clear();
        recompute_basics();
    }

    void recompute_basics() {
        Eigen::VectorXd rhs(m_);
        for (int i = 0; i < m_; ++i) rhs[i] = b_[i];
        for (int j = 0; j < n_total_; ++j) {
            if (in_basis_pos_[j] >= 0 || x_[j] == 0.0) continue;
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) rhs[row_idx_[k]] -= vals_[k] * x_[j];
        }
        Eigen::VectorXd xb = lu_.solve(rhs);
        for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
    }

    // FTRAN: z = B^{-1} v for sparse column j.
    void ftran_column(int j, Eigen::VectorXd& z) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(m_);
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) v[row_idx_[k]] = vals_[k];
        z = lu_.solve(v);
        for (const Eta& e : etas_) {
            double t = z[e.r] / e.wr;
            if (t != 0.0) {
                for (auto& [i, w] : e.off) z[i] -= w * t;
            }
            z[e.r] = t;
        }
    }

    // BTRAN: y = B^{-T} v.
    void btran(Eigen::VectorXd v, Eigen::VectorXd& y) {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double dot = 0.0;
            for (auto& [i, w] : it->off) dot += w * v[i];
            v[it->r] = (v[it->r] - dot) / it->wr;
        }
        y = lu_.transpose().solve(v);
    }

    double column_dot(int j, const Eigen::VectorXd& y) const {
        double d = 0.0;
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) d += vals_[k] * y[row_idx_[k]];
        return d;
    }

    LpStatus iterate(const std::vector<double>& c) {
        Eigen::VectorXd y(m_), w(m_), cb(m_);
        int degen_run = 0;
        while (true) {
            if (iterations_ >= iter_cap_) return LpStatus::IterLimit;

            for (int i = 0; i < m_; ++i) cb[i] = c[basis_[i]];
            btran(cb, y);

            const bool bland = degen_run > kBlandTrigger;
            int enter = -1;
            int dir = 0;
            double best_score = opt_.dual_tol;
            for (int j = 0; j < n_total_; ++j) {
                if (in_basis_pos_[j] >= 0 || lower_[j] == upper_[j]) continue;
                const double d = c[j] - column_dot(j, y);
                double score = 0.0;
                int jdir = 0;
                switch (state_[j]) {
                    case VarState::AtLower:
                        if (d < -opt_.dual_tol) score = -d, jdir = 1;
                        break;
                    case VarState::AtUpper:
                        if (d > opt_.dual_tol) score = d, jdir = -1;
                        break;
                    case VarState::FreeZero:
                        if (std::abs(d) > opt_.dual_tol) score = std::abs(d), jdir = d < 0 ? 1 : -1;
                        break;
                    case VarState::Basic: break;
                }
                if (jdir == 0) continue;
                if (bland) {
                    enter = j;
                    dir = jdir;
                    break;
                }
                if (score > best_score) {
                    best_score = score;
                    enter = j;
                    dir = jdir;
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            ftran_column(enter, w);

            // Ratio test: step t >= 0 moves x[enter] by dir*t and each basic
            // by -dir*t*w. Bound flip of the entering column competes too.
            double t_limit = kInfinity;
            int leave_pos = -1;
            int leave_side = 0;  // -1: leaving hits lower, +1: hits upper
            bool flip = false;
            if (std::isfinite(lower_[enter]) && std::isfinite(upper_[enter])) {
                t_limit = upper_[enter] - lower_[enter];
                flip = true;
            }
            for (int i = 0; i < m_; ++i) {
                const double g = dir * w[i];
                if (std::abs(g) <= opt_.pivot_tol) continue;
                const int bj = basis_[i];
                double ratio;
                int side;
                if (g > 0.0) {
                    if (!std::isfinite(lower_[bj])) continue;
                    ratio = (x_[bj] - lower_[bj]) / g;
                    side = -1;
                } else {
                    if (!std::isfinite(upper_[bj])) continue;
                    ratio = (x_[bj] - upper_[bj]) / g;
                    side = 1;
                }
                if (ratio < 0.0) ratio = 0.0;
                if (ratio < t_limit - 1e-10) {
                    t_limit = ratio;
                    leave_pos = i;
                    leave_side = side;
                    flip = false;
                } else if (!flip && leave_pos >= 0 && ratio <= t_limit + 1e-10) {
                    // Tie: prefer the sturdier pivot, or the lowest column under Bland.
                    if (bland ? bj < basis_[leave_pos] : std::abs(w[i]) > std::abs(w[leave_pos])) {
                        leave_pos = i;
                        leave_side = side;
                    }
                }
            }
            if (!std::isfinite(t_limit)) return LpStatus::Unbounded;

            degen_run = t_limit <= kDegenStep ? degen_run + 1 : 0;

            x_[enter] += dir * t_limit;
            for (int i = 0; i < m_; ++i) {
                if (w[i] != 0.0) x_[basis_[i]] -= dir * t_limit * w[i];
            }

            if (flip) {
                state_[enter] = state_[enter] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
                x_[enter] = state_[enter] == VarState::AtLower ? lower_[enter] : upper_[enter];
            } else {
                const int out = basis_[leave_pos];
                x_[out] = leave_side < 0 ? lower_[out] : upper_[out];
                state_[out] = leave_side < 0 ? VarState::AtLower : VarState::AtUpper;
                in_basis_pos_[out] = -1;
                basis_[leave_pos] = enter;
                in_basis_pos_[enter] = leave_pos;
                state_[enter] = VarState::Basic;

                Eta e;
                e.r = leave_pos;
                e.wr = w[leave_pos];
                for (int i = 0; i < m_; ++i) {
                    if (i != leave_pos && std::abs(w[i]) > 1e-13) e.off.push_back({i, w[i]});
                }
                etas_.push_back(std::move(e));
                if (static_cast<int>(etas_.size()) >= kRefactorInterval) refactorize();
            }
            ++iterations_;
        }
    }

    LpOptions opt_;
    int m_ = 0;
    int n_struct_ = 0;
    int n_ = 0;        // structural + slack
    int n_total_ = 0;  // + artificials
    std::vector<int> col_start_;
    std::vector<int> row_idx_;
    std::vector<double> vals_;
    std::vector<double> lower_, upper_, cost_, phase1_cost_;
    std::vector<double> b_;
    std::vector<double> x_;
    std::vector<VarState> state_;
    std::vector<int> basis_;
    std::vector<int> in_basis_pos_;
    bool have_artificials_ = false;
    long iterations_ = 0;
    long iter_cap_ = 0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    std::vector<Eta> etas_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& p, const LpOptions& opt) {
    p.validate();
    Simplex s(p, opt);
    return s.run();
}

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kProbeTol = 1e-7;

struct BnbNode {
    double bound = 0.0;
    long id = 0;
    std::vector<std::pair<int, int>> fixings;  // (binary var, 0/1)
};

struct NodeOrder {
    bool operator()(const BnbNode& a, const BnbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

LpSolution solve_with_fixings(const MilpProblem& p, const std::vector<std::pair<int, int>>& fixings,
                              long& iter_accum) {
    LpProblem relax = p.lp;
    for (auto [v, val] : fixings) {
        relax.lower[v] = val;
        relax.upper[v] = val;
    }
    LpSolution s = solve_lp(relax);
    iter_accum += s.iterations;
    return s;
}

int most_fractional_binary(const MilpProblem& p, const std::vector<double>& x,
                           const std::vector<char>& fixed) {
    int pick = -1;
    double best = kIntTol;
    for (int b : p.binaries) {
        if (fixed[b]) continue;
        const double f = std::min(x[b], 1.0 - x[b]);
        if (f > best) {
            best = f;
            pick = b;
        }
    }
    return pick;
}

}  // namespace

MilpSolution solve_milp(const MilpProblem& p, const MilpLimits& limits) {
    p.validate();
    MilpSolution out;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    LpSolution root = solve_with_fixings(p, {}, out.simplex_iterations);
    if (root.status == LpStatus::Infeasible) {
        out.status = MilpStatus::Infeasible;
        return out;
    }
    if (root.status == LpStatus::Unbounded) {
        out.status = MilpStatus::Unbounded;
        return out;
    }
    if (root.status == LpStatus::IterLimit) {
        out.status = MilpStatus::LimitReached;
        return out;
    }

    bool have_incumbent = false;
    double inc_obj = kInfinity;
    std::vector<double> inc_x;

    std::priority_queue<BnbNode, std::vector<BnbNode>, NodeOrder> open;
    long next_id = 0;

    auto try_incumbent = [&](double obj, const std::vector<double>& x) {
        if (!have_incumbent || obj < inc_obj) {
            have_incumbent = true;
            inc_obj = obj;
            inc_x = x;
        }
    };

    // Column view of the rows each binary touches, for the rounding probe.
    std::vector<std::vector<std::pair<int, double>>> binary_rows(p.lp.num_vars());
    {
        std::vector<char> is_binary(p.lp.num_vars(), 0);
        for (int b : p.binaries) is_binary[b] = 1;
        for (int i = 0; i < p.lp.num_rows(); ++i) {
            const LpProblem::Row& row = p.lp.rows[i];
            for (std::size_t k = 0; k < row.idx.size(); ++k) {
                if (is_binary[row.idx[k]]) binary_rows[row.idx[k]].push_back({i, row.coef[k]});
            }
        }
    }

    // Rounding probe: fix every binary and re-solve. Indicator-style binaries
    // (zero cost, only gating rows) often sit fractional at degenerate
    // vertices, so pick per binary the integer that keeps the current vertex
    // row-feasible; plain rounding is the fallback.
    auto probe = [&](const LpSolution& rel, const std::vector<std::pair<int, int>>& fixings) {
        std::vector<double> act(p.lp.num_rows(), 0.0);
        for (int i = 0; i < p.lp.num_rows(); ++i) {
            const LpProblem::Row& row = p.lp.rows[i];
            for (std::size_t k = 0; k < row.idx.size(); ++k) act[i] += row.coef[k] * rel.values[row.idx[k]];
        }
        auto shift_ok = [&](int b, double delta) {
            for (auto [i, a] : binary_rows[b]) {
                const double v = act[i] + a * delta;
                const LpProblem::Row& row = p.lp.rows[i];
                if (row.rel != Relation::Ge && v > row.rhs + kProbeTol) return false;
                if (row.rel != Relation::Le && v < row.rhs - kProbeTol) return false;
            }
            return true;
        };

        std::vector<std::pair<int, int>> full = fixings;
        std::vector<char> fixed(p.lp.num_vars(), 0);
        for (auto [v, val] : fixings) fixed[v] = 1;
        for (int b : p.binaries) {
            if (fixed[b]) continue;
            const double x = rel.values[b];
            int take = x >= 0.5 ? 1 : 0;
            if (std::min(x, 1.0 - x) > kIntTol) {
                // Prefer the cheaper direction, then the nearer one.
                int first = p.lp.cost[b] > 0.0 ? 0 : p.lp.cost[b] < 0.0 ? 1 : take;
                if (shift_ok(b, first - x)) {
                    take = first;
                } else if (shift_ok(b, (1 - first) - x)) {
                    take = 1 - first;
                }
            }
            for (auto [i, a] : binary_rows[b]) act[i] += a * (take - x);
            full.push_back({b, take});
        }
        LpSolution s = solve_with_fixings(p, full, out.simplex_iterations);
        if (s.status == LpStatus::Optimal) try_incumbent(s.objective, s.values);
    };

    // Examines one solved relaxation: record it if integral, otherwise probe
    // and enqueue both children of the most fractional binary.
    auto process = [&](const LpSolution& rel, const std::vector<std::pair<int, int>>& fixings) {
        std::vector<char> fixed(p.lp.num_vars(), 0);
        for (auto [v, val] : fixings) fixed[v] = 1;
        const int frac = most_fractional_binary(p, rel.values, fixed);
        if (frac < 0) {
            try_incumbent(rel.objective, rel.values);
            return;
        }
        probe(rel, fixings);
        for (int val : {0, 1}) {
            BnbNode child;
            child.bound = rel.objective;
            child.id = next_id++;
            child.fixings = fixings;
            child.fixings.push_back({frac, val});
            open.push(child);
        }
    };

    process(root, {});
    const double root_bound = root.objective;

    bool limit_hit = false;
    while (!open.empty()) {
        const double abs_slack = limits.rel_gap * std::max(1.0, std::abs(inc_obj));
        if (have_incumbent && open.top().bound >= inc_obj - abs_slack) {
            // Best-first: every open bound is at least this one.
            while (!open.empty()) open.pop();
            break;
        }
        if (out.nodes_explored >= limits.node_cap || elapsed() > limits.time_cap_s) {
            limit_hit = true;
            break;
        }
        BnbNode node = open.top();
        open.pop();
        LpSolution rel = solve_with_fixings(p, node.fixings, out.simplex_iterations);
        ++out.nodes_explored;
        if (rel.status == LpStatus::IterLimit) {
            limit_hit = true;
            break;
        }
        if (rel.status != LpStatus::Optimal) continue;  // infeasible child
        const double abs_slack2 = limits.rel_gap * std::max(1.0, std::abs(inc_obj));
        if (have_incumbent && rel.objective >= inc_obj - abs_slack2) continue;
        process(rel, node.fixings);
    }

    double lower_bound = have_incumbent ? inc_obj : root_bound;
    if (!open.empty()) lower_bound = std::min(lower_bound, open.top().bound);

    if (have_incumbent) {
        out.values = std::move(inc_x);
        out.objective = inc_obj;
        out.gap = std::max(0.0, (inc_obj - lower_bound) / std::max(1.0, std::abs(inc_obj)));
        out.status = !limit_hit || out.gap <= limits.rel_gap ? MilpStatus::Optimal : MilpStatus::LimitReached;
    } else {
        out.status = limit_hit ? MilpStatus::LimitReached : MilpStatus::Infeasible;
        out.gap = kInfinity;
    }
    return out;
}

void write_lp_format(const MilpProblem& p, const std::string& path) {
    p.validate();
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for writing: " + path);

    auto var = [](int j) { return "x" + std::to_string(j); };
    auto num = [](double v) { return format_double(v); };

    os << "Minimize\n obj:";
    bool first = true;
    for (int j = 0; j < p.lp.num_vars(); ++j) {
        const double c = p.lp.cost[j];
        if (c == 0.0) continue;
        os << (c < 0 ? " - " : first ? " " : " + ") << num(std::abs(c)) << " " << var(j);
        first = false;
    }
    if (first) os << " 0 " << var(0);
    os << "\nSubject To\n";
    for (int r = 0; r < p.lp.num_rows(); ++r) {
        const auto& row = p.lp.rows[r];
        os << " c" << r << ":";
        bool f2 = true;
        for (std::size_t k = 0; k < row.idx.size(); ++k) {
            const double c = row.coef[k];
            if (c == 0.0) continue;
            os << (c < 0 ? " - " : f2 ? " " : " + ") << num(std::abs(c)) << " " << var(row.idx[k]);
            f2 = false;
        }
        if (f2) os << " 0 " << var(0);
        const char* rel = row.rel == Relation::Le ? "<=" : row.rel == Relation::Ge ? ">=" : "=";
        os << " " << rel << " " << num(row.rhs) << "\n";
    }
    os << "Bounds\n";
    for (int j = 0; j < p.lp.num_vars(); ++j) {
        const double lo = p.lp.lower[j];
        const double hi = p.lp.upper[j];
        if (!std::isfinite(lo) && !std::isfinite(hi)) {
            os << " " << var(j) << " free\n";
        } else if (!std::isfinite(lo)) {
            os << " -inf <= " << var(j) << " <= " << num(hi) << "\n";
        } else if (!std::isfinite(hi)) {
            os << " " << num(lo) << " <= " << var(j) << "\n";
        } else {
            os << " " << num(lo) << " <= " << var(j) << " <= " << num(hi) << "\n";
        }
    }
    if (!p.binaries.empty()) {
        os << "Binaries\n";
        for (int b : p.binaries) os << " " << var(b) << "\n";
    }
    os << "End\n";
    if (!os) throw DataError("write failed: " + path);
}

}  // namespace lvtariff
