#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace fhm::qp {

// Convex quadratic program in standard minimization form:
//   min 1/2 x'Hx + g'x  s.t.  Aeq x = beq, Ain x <= bin, lb <= x <= ub.
// H must be symmetric positive semidefinite; H = 0 gives a plain LP.
struct Problem {
    Eigen::MatrixXd H;
    Eigen::VectorXd g;
    Eigen::MatrixXd Aeq;
    Eigen::VectorXd beq;
    Eigen::MatrixXd Ain;
    Eigen::VectorXd bin;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;

    int n() const { return static_cast<int>(g.size()); }
    void resize(int n, int me, int mi);
};

struct KktReport {
    double stationarity = 0.0;    // max abs stationarity residual, scaled problem
    double feasibility = 0.0;     // max constraint violation, scaled problem
    double complementarity = 0.0; // max |mu_i * slack_i|, scaled problem
    double max() const;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
    Status status = Status::iteration_limit;
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd lambda_eq;  // equality multipliers (sign: H x + g + Aeq'l + ... = 0)
    Eigen::VectorXd mu_in;      // inequality multipliers, >= 0
    Eigen::VectorXd mu_lb;      // lower bound multipliers, >= 0
    Eigen::VectorXd mu_ub;      // upper bound multipliers, >= 0
    KktReport kkt;
    int iterations = 0;

    bool ok() const { return status == Status::optimal; }
};

struct Options {
    int max_iterations = 0;  // 0 -> automatic from problem size
    double feas_tol = 1e-9;
    double stat_tol = 1e-9;
};

// Primal active-set solver for small dense problems. The start point, when
// given, is clipped to the bounds; remaining infeasibility is repaired by an
// internal phase-1 LP run through the same iteration core.
Result solve(const Problem& p, const std::optional<Eigen::VectorXd>& start = std::nullopt,
             const Options& opts = {});

}  // namespace fhm::qp
