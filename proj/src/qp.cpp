#include "fhm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fhm::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Working-set member: type 0 = equality row, 1 = inequality row, 2 = lower
// bound, 3 = upper bound. Ordering by (type, idx) keeps the row assembly, and
// with it the whole iteration, deterministic.
struct Ref {
    int type;
    int idx;
    bool operator<(const Ref& o) const { return type != o.type ? type < o.type : idx < o.idx; }
    bool operator==(const Ref& o) const { return type == o.type && idx == o.idx; }
};

struct Scaled {
    Eigen::MatrixXd H;
    Eigen::VectorXd g;
    Eigen::MatrixXd Aeq, Ain;
    Eigen::VectorXd beq, bin;
    Eigen::VectorXd lb, ub;
    Eigen::VectorXd eq_rownorm, in_rownorm;
    double obj_scale = 1.0;
    int n = 0, me = 0, mi = 0;
};

Scaled scale_problem(const Problem& p) {
    Scaled s;
    s.n = p.n();
    s.me = static_cast<int>(p.beq.size());
    s.mi = static_cast<int>(p.bin.size());
    double m = 1.0;
    for (int i = 0; i < s.n; ++i) m = std::max(m, std::abs(p.g[i]));
    if (p.H.size() > 0) m = std::max(m, p.H.cwiseAbs().maxCoeff());
    s.obj_scale = m;
    s.H = p.H.size() > 0 ? (p.H / m).eval() : Eigen::MatrixXd::Zero(s.n, s.n);
    s.g = p.g / m;
    s.Aeq = p.Aeq;
    s.beq = p.beq;
    s.Ain = p.Ain;
    s.bin = p.bin;
    s.lb = p.lb;
    s.ub = p.ub;
    s.eq_rownorm = Eigen::VectorXd::Ones(s.me);
    s.in_rownorm = Eigen::VectorXd::Ones(s.mi);
    for (int r = 0; r < s.me; ++r) {
        double nr = s.Aeq.row(r).cwiseAbs().maxCoeff();
        if (nr > 0) {
            s.eq_rownorm[r] = nr;
            s.Aeq.row(r) /= nr;
            s.beq[r] /= nr;
        }
    }
    for (int r = 0; r < s.mi; ++r) {
        double nr = s.Ain.row(r).cwiseAbs().maxCoeff();
        if (nr > 0) {
            s.in_rownorm[r] = nr;
            s.Ain.row(r) /= nr;
            s.bin[r] /= nr;
        }
    }
    return s;
}

struct CoreResult {
    Status status = Status::iteration_limit;
    Eigen::VectorXd x;
    std::vector<Ref> working;
    Eigen::VectorXd y;  // multipliers aligned with working
    int iterations = 0;
};

Eigen::MatrixXd assemble_rows(const Scaled& s, const std::vector<Ref>& w) {
    Eigen::MatrixXd A(static_cast<int>(w.size()), s.n);
    for (std::size_t k = 0; k < w.size(); ++k) {
        switch (w[k].type) {
            case 0: A.row(static_cast<int>(k)) = s.Aeq.row(w[k].idx); break;
            case 1: A.row(static_cast<int>(k)) = s.Ain.row(w[k].idx); break;
            case 2:
                A.row(static_cast<int>(k)).setZero();
                A(static_cast<int>(k), w[k].idx) = -1.0;
                break;
            default:
                A.row(static_cast<int>(k)).setZero();
                A(static_cast<int>(k), w[k].idx) = 1.0;
                break;
        }
    }
    return A;
}

Eigen::VectorXd assemble_rhs(const Scaled& s, const std::vector<Ref>& w) {
    Eigen::VectorXd b(static_cast<int>(w.size()));
    for (std::size_t k = 0; k < w.size(); ++k) {
        switch (w[k].type) {
            case 0: b[static_cast<int>(k)] = s.beq[w[k].idx]; break;
            case 1: b[static_cast<int>(k)] = s.bin[w[k].idx]; break;
            case 2: b[static_cast<int>(k)] = -s.lb[w[k].idx]; break;
            default: b[static_cast<int>(k)] = s.ub[w[k].idx]; break;
        }
    }
    return b;
}

bool in_working(const std::vector<Ref>& w, const Ref& r) {
    return std::binary_search(w.begin(), w.end(), r);
}

void insert_sorted(std::vector<Ref>& w, const Ref& r) {
    w.insert(std::upper_bound(w.begin(), w.end(), r), r);
}

// Primal active-set iteration on an already feasible point.
CoreResult run_core(const Scaled& s, Eigen::VectorXd x, int max_iter, double stat_tol) {
    CoreResult res;
    std::vector<Ref> w;
    for (int r = 0; r < s.me; ++r) w.push_back({0, r});
    // seed with constraints active at the start point
    for (int r = 0; r < s.mi; ++r)
        if (std::abs(s.Ain.row(r).dot(x) - s.bin[r]) <= 1e-11 * (1.0 + std::abs(s.bin[r])))
            w.push_back({1, r});
    for (int i = 0; i < s.n; ++i) {
        if (std::isfinite(s.lb[i]) && std::abs(x[i] - s.lb[i]) <= 1e-11 * (1.0 + std::abs(s.lb[i])))
            w.push_back({2, i});
        else if (std::isfinite(s.ub[i]) && std::abs(x[i] - s.ub[i]) <= 1e-11 * (1.0 + std::abs(s.ub[i])))
            w.push_back({3, i});
    }
    std::sort(w.begin(), w.end());

    int stall = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        Eigen::MatrixXd Aw = assemble_rows(s, w);
        Eigen::VectorXd bw = assemble_rhs(s, w);

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
        int rank = 0;
        if (!w.empty()) {
            qr.compute(Aw.transpose());
            rank = static_cast<int>(qr.rank());
            // re-anchor on the active constraints to stop feasibility drift
            Eigen::VectorXd resid = bw - Aw * x;
            if (resid.lpNorm<Eigen::Infinity>() > 1e-13 * (1.0 + bw.lpNorm<Eigen::Infinity>())) {
                Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Aw);
                x += cod.solve(resid);
            }
        }

        Eigen::VectorXd grad = s.H * x + s.g;
        int nz = s.n - rank;
        Eigen::MatrixXd Z;
        if (w.empty()) {
            Z = Eigen::MatrixXd::Identity(s.n, s.n);
            nz = s.n;
        } else if (nz > 0) {
            Eigen::MatrixXd Q = qr.householderQ();
            Z = Q.rightCols(nz);
        }

        Eigen::VectorXd p = Eigen::VectorXd::Zero(s.n);
        bool ray = false;
        if (nz > 0) {
            Eigen::MatrixXd Hz = Z.transpose() * s.H * Z;
            Eigen::VectorXd gz = Z.transpose() * grad;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hz);
            const auto& vals = eig.eigenvalues();
            const auto& vecs = eig.eigenvectors();
            double lmax = vals.size() > 0 ? std::max(0.0, vals.maxCoeff()) : 0.0;
            double curv_tol = std::max(1e-12 * lmax, 1e-14);
            Eigen::VectorXd pz = Eigen::VectorXd::Zero(nz);
            Eigen::VectorXd ray_z = Eigen::VectorXd::Zero(nz);
            for (int k = 0; k < nz; ++k) {
                double c = vecs.col(k).dot(gz);
                if (vals[k] > curv_tol)
                    pz -= (c / vals[k]) * vecs.col(k);
                else
                    ray_z -= c * vecs.col(k);
            }
            if (ray_z.lpNorm<Eigen::Infinity>() > stat_tol) {
                p = Z * ray_z;
                ray = true;
            } else {
                p = Z * pz;
            }
        }

        if (!ray && p.lpNorm<Eigen::Infinity>() <= stat_tol * (1.0 + x.lpNorm<Eigen::Infinity>())) {
            // stationary on the working set: check multipliers
            Eigen::VectorXd y;
            if (!w.empty())
                y = qr.solve(-grad);
            else
                y = Eigen::VectorXd::Zero(0);
            int drop = -1;
            double most_neg = -1e-9;
            for (std::size_t k = 0; k < w.size(); ++k) {
                if (w[k].type == 0) continue;
                if (y[static_cast<int>(k)] < most_neg) {
                    if (stall > s.n + s.me + s.mi) {  // Bland-style rule once stalled
                        if (drop < 0) drop = static_cast<int>(k);
                    } else {
                        most_neg = y[static_cast<int>(k)];
                        drop = static_cast<int>(k);
                    }
                }
            }
            if (drop < 0) {
                res.status = Status::optimal;
                res.x = x;
                res.working = w;
                res.y = y;
                return res;
            }
            w.erase(w.begin() + drop);
            ++stall;
            continue;
        }

        // step length to the nearest blocking constraint
        double alpha = ray ? kInf : 1.0;
        Ref blocker{-1, -1};
        double pmax = p.lpNorm<Eigen::Infinity>();
        auto consider = [&](const Ref& r, double slack, double dir) {
            if (dir <= 1e-12 * std::max(1.0, pmax)) return;
            double a = std::max(0.0, slack) / dir;
            double tol_a = std::isfinite(alpha) ? 1e-12 * std::max(1.0, alpha) : 0.0;
            if (a < alpha - tol_a || (a < alpha + tol_a && blocker.type >= 0 && r < blocker)) {
                alpha = a;
                blocker = r;
            }
        };
        for (int r = 0; r < s.mi; ++r) {
            Ref ref{1, r};
            if (in_working(w, ref)) continue;
            consider(ref, s.bin[r] - s.Ain.row(r).dot(x), s.Ain.row(r).dot(p));
        }
        for (int i = 0; i < s.n; ++i) {
            if (std::isfinite(s.lb[i])) {
                Ref ref{2, i};
                if (!in_working(w, ref)) consider(ref, x[i] - s.lb[i], -p[i]);
            }
            if (std::isfinite(s.ub[i])) {
                Ref ref{3, i};
                if (!in_working(w, ref)) consider(ref, s.ub[i] - x[i], p[i]);
            }
        }

        if (!std::isfinite(alpha)) {
            res.status = Status::unbounded;
            res.x = x;
            res.working = w;
            return res;
        }
        if (alpha <= 1e-14)
            ++stall;
        else
            stall = 0;
        x += alpha * p;
        if (blocker.type >= 0 && alpha < (ray ? kInf : 1.0) - 1e-12) insert_sorted(w, blocker);
    }
    res.status = Status::iteration_limit;
    res.x = x;
    res.working = w;
    return res;
}

double max_violation(const Scaled& s, const Eigen::VectorXd& x) {
    double v = 0.0;
    for (int r = 0; r < s.me; ++r) v = std::max(v, std::abs(s.Aeq.row(r).dot(x) - s.beq[r]));
    for (int r = 0; r < s.mi; ++r) v = std::max(v, s.Ain.row(r).dot(x) - s.bin[r]);
    for (int i = 0; i < s.n; ++i) {
        if (std::isfinite(s.lb[i])) v = std::max(v, s.lb[i] - x[i]);
        if (std::isfinite(s.ub[i])) v = std::max(v, x[i] - s.ub[i]);
    }
    return v;
}

// Phase-1: minimize total slack on the violated rows, reusing the same core.
std::optional<Eigen::VectorXd> find_feasible(const Scaled& s, Eigen::VectorXd x0, int max_iter,
                                             double feas_tol) {
    for (int i = 0; i < s.n; ++i) x0[i] = std::min(std::max(x0[i], s.lb[i]), s.ub[i]);
    if (max_violation(s, x0) <= feas_tol) return x0;

    std::vector<int> eq_slack, in_slack;
    Eigen::VectorXd eq_sign = Eigen::VectorXd::Zero(s.me);
    for (int r = 0; r < s.me; ++r) {
        double resid = s.beq[r] - s.Aeq.row(r).dot(x0);
        if (std::abs(resid) > feas_tol) {
            eq_slack.push_back(r);
            eq_sign[r] = resid > 0 ? 1.0 : -1.0;
        }
    }
    for (int r = 0; r < s.mi; ++r)
        if (s.Ain.row(r).dot(x0) - s.bin[r] > feas_tol) in_slack.push_back(r);

    int nt = static_cast<int>(eq_slack.size() + in_slack.size());
    Scaled aux;
    aux.n = s.n + nt;
    aux.me = s.me;
    aux.mi = s.mi;
    aux.H = Eigen::MatrixXd::Zero(aux.n, aux.n);
    aux.g = Eigen::VectorXd::Zero(aux.n);
    aux.g.tail(nt).setOnes();
    aux.obj_scale = 1.0;
    aux.Aeq = Eigen::MatrixXd::Zero(s.me, aux.n);
    aux.Aeq.leftCols(s.n) = s.Aeq;
    aux.beq = s.beq;
    aux.Ain = Eigen::MatrixXd::Zero(s.mi, aux.n);
    aux.Ain.leftCols(s.n) = s.Ain;
    aux.bin = s.bin;
    aux.lb = Eigen::VectorXd::Constant(aux.n, -kInf);
    aux.ub = Eigen::VectorXd::Constant(aux.n, kInf);
    aux.lb.head(s.n) = s.lb;
    aux.ub.head(s.n) = s.ub;
    aux.lb.tail(nt).setZero();

    Eigen::VectorXd start(aux.n);
    start.head(s.n) = x0;
    int t = 0;
    for (int r : eq_slack) {
        aux.Aeq(r, s.n + t) = eq_sign[r];
        start[s.n + t] = std::abs(s.beq[r] - s.Aeq.row(r).dot(x0));
        ++t;
    }
    for (int r : in_slack) {
        aux.Ain(r, s.n + t) = -1.0;
        start[s.n + t] = s.Ain.row(r).dot(x0) - s.bin[r];
        ++t;
    }
    aux.eq_rownorm = Eigen::VectorXd::Ones(s.me);
    aux.in_rownorm = Eigen::VectorXd::Ones(s.mi);

    CoreResult r1 = run_core(aux, start, max_iter, 1e-11);
    if (r1.status != Status::optimal && r1.status != Status::iteration_limit) return std::nullopt;
    if (r1.x.tail(nt).sum() > 1e-7) return std::nullopt;
    Eigen::VectorXd x = r1.x.head(s.n);
    if (max_violation(s, x) > 1e-7) return std::nullopt;
    return x;
}

KktReport compute_kkt(const Scaled& s, const Eigen::VectorXd& x, const Eigen::VectorXd& lam_eq,
                      const Eigen::VectorXd& mu_in, const Eigen::VectorXd& mu_lb,
                      const Eigen::VectorXd& mu_ub) {
    KktReport k;
    Eigen::VectorXd st = s.H * x + s.g;
    if (s.me > 0) st += s.Aeq.transpose() * lam_eq;
    if (s.mi > 0) st += s.Ain.transpose() * mu_in;
    st -= mu_lb;
    st += mu_ub;
    k.stationarity = st.lpNorm<Eigen::Infinity>();
    k.feasibility = max_violation(s, x);
    double comp = 0.0;
    for (int r = 0; r < s.mi; ++r) comp = std::max(comp, std::abs(mu_in[r] * (s.Ain.row(r).dot(x) - s.bin[r])));
    for (int i = 0; i < s.n; ++i) {
        if (std::isfinite(s.lb[i])) comp = std::max(comp, std::abs(mu_lb[i] * (x[i] - s.lb[i])));
        if (std::isfinite(s.ub[i])) comp = std::max(comp, std::abs(mu_ub[i] * (x[i] - s.ub[i])));
    }
    k.complementarity = comp;
    return k;
}

}  // namespace

void Problem::resize(int n, int me, int mi) {
    H = Eigen::MatrixXd::Zero(n, n);
    g = Eigen::VectorXd::Zero(n);
    Aeq = Eigen::MatrixXd::Zero(me, n);
    beq = Eigen::VectorXd::Zero(me);
    Ain = Eigen::MatrixXd::Zero(mi, n);
    bin = Eigen::VectorXd::Zero(mi);
    lb = Eigen::VectorXd::Constant(n, -kInf);
    ub = Eigen::VectorXd::Constant(n, kInf);
}

double KktReport::max() const { return std::max(stationarity, std::max(feasibility, complementarity)); }

Result solve(const Problem& p, const std::optional<Eigen::VectorXd>& start, const Options& opts) {
    if (p.g.size() == 0) throw std::invalid_argument("qp: empty problem");
    if (p.H.rows() != p.H.cols() || p.H.rows() != p.g.size())
        throw std::invalid_argument("qp: H/g dimension mismatch");

    Scaled s = scale_problem(p);
    int max_iter = opts.max_iterations > 0 ? opts.max_iterations
                                           : 200 + 40 * (s.n + s.me + s.mi);

    Result res;
    res.x = Eigen::VectorXd::Zero(s.n);
    res.lambda_eq = Eigen::VectorXd::Zero(s.me);
    res.mu_in = Eigen::VectorXd::Zero(s.mi);
    res.mu_lb = Eigen::VectorXd::Zero(s.n);
    res.mu_ub = Eigen::VectorXd::Zero(s.n);

    Eigen::VectorXd x0 = start ? *start : Eigen::VectorXd::Zero(s.n);
    auto feas = find_feasible(s, x0, max_iter, opts.feas_tol);
    if (!feas) {
        res.status = Status::infeasible;
        return res;
    }

    CoreResult core = run_core(s, *feas, max_iter, opts.stat_tol);
    res.status = core.status;
    res.iterations = core.iterations;
    res.x = core.x;
    res.objective = 0.5 * core.x.dot(p.H * core.x) + p.g.dot(core.x);
    if (core.status == Status::optimal) {
        Eigen::VectorXd lam_eq_s = Eigen::VectorXd::Zero(s.me);
        Eigen::VectorXd mu_in_s = Eigen::VectorXd::Zero(s.mi);
        Eigen::VectorXd mu_lb_s = Eigen::VectorXd::Zero(s.n);
        Eigen::VectorXd mu_ub_s = Eigen::VectorXd::Zero(s.n);
        for (std::size_t k = 0; k < core.working.size(); ++k) {
            double y = core.y[static_cast<int>(k)];
            const Ref& r = core.working[k];
            if (r.type != 0 && y < 0) y = 0;  // clip tolerated round-off
            switch (r.type) {
                case 0: lam_eq_s[r.idx] = y; break;
                case 1: mu_in_s[r.idx] = y; break;
                case 2: mu_lb_s[r.idx] = y; break;
                default: mu_ub_s[r.idx] = y; break;
            }
        }
        res.kkt = compute_kkt(s, core.x, lam_eq_s, mu_in_s, mu_lb_s, mu_ub_s);
        // map multipliers back to the unscaled problem
        for (int r = 0; r < s.me; ++r) res.lambda_eq[r] = lam_eq_s[r] * s.obj_scale / s.eq_rownorm[r];
        for (int r = 0; r < s.mi; ++r) res.mu_in[r] = mu_in_s[r] * s.obj_scale / s.in_rownorm[r];
        res.mu_lb = mu_lb_s * s.obj_scale;
        res.mu_ub = mu_ub_s * s.obj_scale;
    }
    return res;
}

}  // namespace fhm::qp
