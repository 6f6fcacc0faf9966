#include "qkd/eve_search.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace qkd {

ConstraintOperators build_constraint_operators(const OperatorSet& ops) {
    ConstraintOperators out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const int k = OperatorSet::idx(i, j);
            const MatrixXd side_z = MatrixXd(ops.f_side[i].asDiagonal());
            const MatrixXd side_x = MatrixXd(ops.f_side[2 + i].asDiagonal());
            const MatrixXd bz = kron(side_z, ops.z_rows[k]);  // 4x16
            const MatrixXd bx = kron(side_x, ops.x_rows[k]);
            const MatrixXd mz = bz.transpose() * ops.f * bz;  // 16x16
            const MatrixXd mx = bx.transpose() * ops.f * bx;
            const Matrix2d& ftf = j == 0 ? ops.f0tf0 : ops.f1tf1;
            out.zz[k] = kron(mz, ftf);
            out.xx[k] = kron(mx, ftf);
            out.vir[k] = 0.25 * kron(MatrixXd(ops.z_virtual[k]), ops.ctc);
            if (out.zz[k].rows() != 32 || out.xx[k].rows() != 32 || out.vir[k].rows() != 32)
                throw OperatorError("constraint operator dimension mismatch");
            // Trace evaluation only sees the symmetric part; symmetrize against roundoff.
            out.zz[k] = 0.5 * (out.zz[k] + out.zz[k].transpose()).eval();
            out.xx[k] = 0.5 * (out.xx[k] + out.xx[k].transpose()).eval();
            out.vir[k] = 0.5 * (out.vir[k] + out.vir[k].transpose()).eval();
        }
    }
    return out;
}

void EveState::normalize() {
    const double n = v.norm();
    if (n <= 0.0) throw OperatorError("cannot normalize the zero state");
    v /= n;
}

namespace {

constexpr int kDim = 32;
constexpr int kRealDim = 64;
constexpr int kForms = 12;

// p_k = re^T M_k re + im^T M_k im for the complex state re + i*im.
struct FormEvaluator {
    std::array<const Matrix32*, kForms> m;

    explicit FormEvaluator(const ConstraintOperators& ops) {
        for (int k = 0; k < 4; ++k) {
            m[k] = &ops.zz[k];
            m[4 + k] = &ops.xx[k];
            m[8 + k] = &ops.vir[k];
        }
    }

    void eval(const VectorXd& v, std::array<double, kForms>& p,
              std::array<VectorXd, kForms>* grads) const {
        const auto re = v.head(kDim);
        const auto im = v.tail(kDim);
        for (int k = 0; k < kForms; ++k) {
            Eigen::Matrix<double, kDim, 1> yr = (*m[k]) * re;
            Eigen::Matrix<double, kDim, 1> yi = (*m[k]) * im;
            p[k] = re.dot(yr) + im.dot(yi);
            if (grads) {
                (*grads)[k].resize(kRealDim);
                (*grads)[k].head(kDim) = 2.0 * yr;
                (*grads)[k].tail(kDim) = 2.0 * yi;
            }
        }
    }
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic standard normals independent of the standard library.
struct Gaussian {
    std::uint64_t state;
    bool have_spare = false;
    double spare = 0.0;

    explicit Gaussian(std::uint64_t seed) : state(seed) {}

    double uniform() {
        state = splitmix64(state);
        return (static_cast<double>(state >> 11) + 0.5) * 0x1.0p-53;
    }

    double operator()() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare = r * std::sin(a);
        have_spare = true;
        return r * std::cos(a);
    }
};

VectorXd random_state(std::uint64_t seed) {
    Gaussian g(seed);
    VectorXd v(kRealDim);
    for (int i = 0; i < kRealDim; ++i) v(i) = g();
    return v.normalized();
}

// Structured start: uniform side channel, key-capable coding superposition,
// balanced detection slot. Real part only.
VectorXd honest_start() {
    VectorXd v = VectorXd::Zero(kRealDim);
    const double s = 0.5;              // side amplitudes
    const double c = 1.0 / std::sqrt(2.0);
    for (int side = 0; side < 4; ++side)
        for (int det = 0; det < 2; ++det) {
            v(side * 8 + 0 * 2 + det) = s * c * (1.0 / std::sqrt(2.0));
            v(side * 8 + 3 * 2 + det) = s * c * (1.0 / std::sqrt(2.0));
        }
    return v.normalized();
}

VectorXd anchor_start() {
    // Mostly off the detection-supported directions, with a small honest component.
    VectorXd h = VectorXd::Zero(kRealDim);
    VectorXd park = VectorXd::Zero(kRealDim);
    const double side_u[4] = {0.5, 0.5, 0.5, 0.5};
    const double side_a[4] = {0.5, -0.5, 0.5, -0.5};
    const double det_u[2] = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    const double det_a[2] = {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
    const double code[4] = {1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)};
    for (int s = 0; s < 4; ++s)
        for (int c = 0; c < 4; ++c)
            for (int d = 0; d < 2; ++d) {
                h(s * 8 + c * 2 + d) = side_u[s] * code[c] * det_u[d];
                park(s * 8 + c * 2 + d) = side_a[s] * code[c] * det_a[d];
            }
    VectorXd v = 0.2 * h + std::sqrt(1.0 - 0.04) * park;
    return v.normalized();
}

struct RatioVal {
    double value;
    VectorXd grad;
};

// value and gradient of (sum over num of p) / (sum over den of p)
RatioVal ratio(const std::array<double, kForms>& p, const std::array<VectorXd, kForms>& gp,
               std::initializer_list<int> num, std::initializer_list<int> den) {
    double n = 0.0, d = 0.0;
    VectorXd gn = VectorXd::Zero(kRealDim), gd = VectorXd::Zero(kRealDim);
    for (int k : num) {
        n += p[k];
        gn += gp[k];
    }
    for (int k : den) {
        d += p[k];
        gd += gp[k];
    }
    RatioVal out;
    out.value = n / d;
    out.grad = (gn * d - n * gd) / (d * d);
    return out;
}

struct SumIdx {
    int a, b;
};
constexpr SumIdx kSums[4] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};  // z0, z1, x0, x1

// Generic smooth function minimized by L-BFGS; fg returns f and fills grad.
struct MinimizeResult {
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

MinimizeResult lbfgs_minimize(const std::function<double(const VectorXd&, VectorXd&)>& fg,
                              VectorXd& x, int max_iters) {
    constexpr int kHist = 8;
    std::vector<VectorXd> s_hist, y_hist;
    std::vector<double> rho_hist;
    VectorXd g(x.size()), g_new(x.size());
    double f = fg(x, g);
    MinimizeResult res;
    double step0 = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        res.iterations = it + 1;
        if (g.lpNorm<Eigen::Infinity>() < 1e-12) {
            res.converged = true;
            break;
        }
        // two-loop recursion
        VectorXd q = g;
        const int h = static_cast<int>(s_hist.size());
        std::vector<double> alpha(h);
        for (int i = h - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (h > 0) {
            const double gamma = s_hist.back().dot(y_hist.back()) /
                                 y_hist.back().squaredNorm();
            q *= gamma;
        } else {
            q *= step0 / std::max(q.norm(), 1e-300);
        }
        for (int i = 0; i < h; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        VectorXd dir = -q;
        double slope = g.dot(dir);
        if (slope >= 0.0) {  // not a descent direction; fall back to steepest descent
            dir = -g;
            slope = -g.squaredNorm();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }
        double t = 1.0;
        double f_new = f;
        VectorXd x_new;
        bool ok = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = x + t * dir;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * t * slope) {
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if (!ok) {
            res.converged = true;  // no further progress possible along this direction
            break;
        }
        const VectorXd s_vec = x_new - x;
        const VectorXd y_vec = g_new - g;
        const double sy = s_vec.dot(y_vec);
        if (sy > 1e-14 * s_vec.norm() * y_vec.norm()) {
            s_hist.push_back(s_vec);
            y_hist.push_back(y_vec);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > kHist) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        const double df = f - f_new;
        x = x_new;
        g = g_new;
        f = f_new;
        if (df < 1e-16 * (1.0 + std::abs(f))) {
            res.converged = true;
            break;
        }
    }
    res.f = f;
    return res;
}

// Unit-sphere pullback: evaluate the underlying function at v/|v| and chain-rule
// the gradient; the minimizer then runs unconstrained in R^64.
std::function<double(const VectorXd&, VectorXd&)> pullback(
    const std::function<double(const VectorXd&, VectorXd&)>& fg) {
    return [fg](const VectorXd& x, VectorXd& grad) {
        const double n = x.norm();
        const VectorXd unit = x / n;
        VectorXd g(x.size());
        const double f = fg(unit, g);
        grad = (g - unit.dot(g) * unit) / n;
        return f;
    };
}

enum class Objective { kMaxDeltaP, kMinPSucc };

struct ConstraintEval {
    double db_z = 0.0, db_x = 0.0;
    std::array<double, 4> sums{};       // pinned-mode residuals: sums/pins - 1
    std::array<double, 8> eq{};         // oracle-mode residuals
    double max_violation(const ConstraintSet& cs, bool pinned, bool oracle) const {
        double v = std::max(db_z - cs.delta_b_z_upper, db_x - cs.delta_b_x_upper);
        v = std::max(v, 0.0);
        if (pinned)
            for (double c : sums) v = std::max(v, std::abs(c));
        if (oracle)
            for (double c : eq) v = std::max(v, std::abs(c));
        return v;
    }
};

struct Problem {
    const FormEvaluator& forms;
    const ConstraintSet& cs;
    bool pinned = false;
    std::array<double, 4> pins{};
    bool oracle = false;

    ConstraintEval constraints_at(const VectorXd& unit) const {
        std::array<double, kForms> p;
        forms.eval(unit, p, nullptr);
        ConstraintEval ce;
        ce.db_z = (p[1] + p[2]) / (p[0] + p[1] + p[2] + p[3]);
        ce.db_x = (p[5] + p[6]) / (p[4] + p[5] + p[6] + p[7]);
        if (pinned)
            for (int e = 0; e < 4; ++e)
                ce.sums[e] = (p[kSums[e].a] + p[kSums[e].b]) / pins[e] - 1.0;
        if (oracle)
            for (int e = 0; e < 8; ++e) {
                const double t = (*cs.p_equality_targets)[e];
                ce.eq[e] = t > 1e-300 ? p[e] / t - 1.0 : p[e];
            }
        return ce;
    }
};

struct Multipliers {
    double lam_z = 0.0, lam_x = 0.0;     // inequality multipliers
    std::array<double, 8> lam_eq{};      // equality multipliers (pins use 0..3)
    double w = 100.0;
};

// Augmented Lagrangian at a normalized point; objective sense folded in.
// with_objective=false evaluates the constraint penalties alone (feasibility seek).
double augmented_value(const Problem& pr, Objective obj, const Multipliers& mult,
                       const VectorXd& unit, VectorXd& grad, bool with_objective = true) {
    std::array<double, kForms> p;
    std::array<VectorXd, kForms> gp;
    pr.forms.eval(unit, p, &gp);

    double f = 0.0;
    VectorXd g = VectorXd::Zero(kRealDim);
    if (with_objective) {
        if (obj == Objective::kMaxDeltaP) {
            const RatioVal dp = ratio(p, gp, {9, 10}, {8, 9, 10, 11});
            f = -dp.value;
            g = -dp.grad;
        } else {
            const RatioVal ps = ratio(p, gp, {8, 9, 10, 11}, {0, 1, 2, 3});
            f = ps.value;
            g = ps.grad;
        }
    }

    auto add_ineq = [&](const RatioVal& r, double bound, double lam) {
        const double c = r.value - bound;
        const double t = lam + mult.w * c;
        if (t > 0.0) {
            f += (t * t - lam * lam) / (2.0 * mult.w);
            g += t * r.grad;
        } else {
            f -= lam * lam / (2.0 * mult.w);
        }
    };
    const RatioVal dbz = ratio(p, gp, {1, 2}, {0, 1, 2, 3});
    const RatioVal dbx = ratio(p, gp, {5, 6}, {4, 5, 6, 7});
    add_ineq(dbz, pr.cs.delta_b_z_upper, mult.lam_z);
    add_ineq(dbx, pr.cs.delta_b_x_upper, mult.lam_x);

    auto add_eq = [&](double c, const VectorXd& gc, double lam) {
        f += lam * c + 0.5 * mult.w * c * c;
        g += (lam + mult.w * c) * gc;
    };
    if (pr.pinned) {
        for (int e = 0; e < 4; ++e) {
            const double s = p[kSums[e].a] + p[kSums[e].b];
            const VectorXd gs = (gp[kSums[e].a] + gp[kSums[e].b]) / pr.pins[e];
            add_eq(s / pr.pins[e] - 1.0, gs, mult.lam_eq[e]);
        }
    }
    if (pr.oracle) {
        for (int e = 0; e < 8; ++e) {
            const double t = (*pr.cs.p_equality_targets)[e];
            if (t > 1e-300)
                add_eq(p[e] / t - 1.0, gp[e] / t, mult.lam_eq[e]);
            else
                add_eq(p[e], gp[e], mult.lam_eq[e]);
        }
    }
    grad = g;
    return f;
}

struct RestartOutcome {
    RestartRecord record;
    VectorXd point;       // normalized
    double violation = 0.0;
    double objective_value = 0.0;  // delta_p or p_succ at the point
};

RestartOutcome run_restart(const Problem& pr, Objective obj, VectorXd start, int iterations,
                           int index) {
    Multipliers mult;
    VectorXd x = start;
    const int rounds = 10;
    const int inner = std::max(iterations / rounds, 20);
    MinimizeResult mr;
    double prev_viol = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int round = 0; round < rounds; ++round) {
        auto fg = pullback([&](const VectorXd& unit, VectorXd& grad) {
            return augmented_value(pr, obj, mult, unit, grad);
        });
        mr = lbfgs_minimize(fg, x, inner);
        used += mr.iterations;
        const VectorXd unit = x.normalized();
        const ConstraintEval ce = pr.constraints_at(unit);
        // multiplier updates
        mult.lam_z = std::max(0.0, mult.lam_z + mult.w * (ce.db_z - pr.cs.delta_b_z_upper));
        mult.lam_x = std::max(0.0, mult.lam_x + mult.w * (ce.db_x - pr.cs.delta_b_x_upper));
        if (pr.pinned)
            for (int e = 0; e < 4; ++e) mult.lam_eq[e] += mult.w * ce.sums[e];
        if (pr.oracle)
            for (int e = 0; e < 8; ++e) mult.lam_eq[e] += mult.w * ce.eq[e];
        const double viol = ce.max_violation(pr.cs, pr.pinned, pr.oracle);
        if (viol > 0.25 * prev_viol) mult.w = std::min(mult.w * 2.0, 1e12);
        prev_viol = std::min(prev_viol, viol);
        if (viol < 1e-12 && mr.converged && round >= 2) break;
    }
    RestartOutcome out;
    out.point = x.normalized();
    const ConstraintEval ce = pr.constraints_at(out.point);
    // feasibility: delta_b within tolerance, pins within pin tolerance
    double viol_db = std::max(std::max(ce.db_z - pr.cs.delta_b_z_upper,
                                       ce.db_x - pr.cs.delta_b_x_upper), 0.0);
    double viol_eq = 0.0;
    if (pr.pinned)
        for (double c : ce.sums) viol_eq = std::max(viol_eq, std::abs(c));
    if (pr.oracle)
        for (double c : ce.eq) viol_eq = std::max(viol_eq, std::abs(c));
    out.violation = std::max(viol_db, viol_eq);
    std::array<double, kForms> p;
    pr.forms.eval(out.point, p, nullptr);
    const double sv = p[8] + p[9] + p[10] + p[11];
    const double sz = p[0] + p[1] + p[2] + p[3];
    out.objective_value = obj == Objective::kMaxDeltaP ? (p[9] + p[10]) / sv : sv / sz;
    out.record.index = index;
    out.record.objective = out.objective_value;
    out.record.feasible = viol_db <= pr.cs.tolerance && viol_eq <= pr.cs.pin_tolerance;
    out.record.iterations = used;
    out.record.converged = mr.converged;
    return out;
}

// Deterministic projection of the pin targets onto the reachable set:
// log-space least squares with the ratio bounds enforced by continuation.
std::array<double, 4> anchor_pins(const FormEvaluator& forms, const ConstraintSet& cs,
                                  const std::array<double, 4>& targets, VectorXd* anchor_point) {
    VectorXd x = anchor_start();
    for (double w : {1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8}) {
        auto fg = pullback([&](const VectorXd& unit, VectorXd& grad) {
            std::array<double, kForms> p;
            std::array<VectorXd, kForms> gp;
            forms.eval(unit, p, &gp);
            double f = 0.0;
            VectorXd g = VectorXd::Zero(kRealDim);
            for (int e = 0; e < 4; ++e) {
                const double s = p[kSums[e].a] + p[kSums[e].b];
                const VectorXd gs = gp[kSums[e].a] + gp[kSums[e].b];
                const double c = std::log(std::max(s, 1e-300) / targets[e]);
                f += c * c;
                g += 2.0 * c / std::max(s, 1e-300) * gs;
            }
            const RatioVal dbz = ratio(p, gp, {1, 2}, {0, 1, 2, 3});
            const RatioVal dbx = ratio(p, gp, {5, 6}, {4, 5, 6, 7});
            for (const auto& [r, bound] :
                 {std::pair<const RatioVal&, double>{dbz, cs.delta_b_z_upper},
                  std::pair<const RatioVal&, double>{dbx, cs.delta_b_x_upper}}) {
                const double c = r.value - bound;
                if (c > 0.0) {
                    f += w * c * c;
                    g += 2.0 * w * c * r.grad;
                }
            }
            grad = g;
            return f;
        });
        lbfgs_minimize(fg, x, 400);
    }
    const VectorXd unit = x.normalized();
    std::array<double, kForms> p;
    forms.eval(unit, p, nullptr);
    std::array<double, 4> pins;
    for (int e = 0; e < 4; ++e) pins[e] = p[kSums[e].a] + p[kSums[e].b];
    if (anchor_point) *anchor_point = unit;
    return pins;
}

}  // namespace

Probabilities evaluate_probabilities(const EveState& state, const ConstraintOperators& ops) {
    if (std::abs(state.v.norm() - 1.0) > 1e-9)
        throw OperatorError("Eve state is not normalized");
    FormEvaluator forms(ops);
    std::array<double, kForms> p;
    forms.eval(state.v, p, nullptr);
    Probabilities out;
    for (int k = 0; k < 4; ++k) {
        out.zz[k] = p[k];
        out.xx[k] = p[4 + k];
        out.vir[k] = p[8 + k];
    }
    return out;
}

DerivedRates derived_rates(const Probabilities& p, WarningLog* log) {
    auto total = [](const std::array<double, 4>& a) { return a[0] + a[1] + a[2] + a[3]; };
    const double sz = total(p.zz), sx = total(p.xx), sv = total(p.vir);
    if (sz <= 0.0 || sx <= 0.0 || sv <= 0.0)
        throw OperatorError("degenerate state: zero total probability in a family");
    DerivedRates out;
    out.delta_b_z = (p.zz[1] + p.zz[2]) / sz;
    out.delta_b_x = (p.xx[1] + p.xx[2]) / sx;
    out.delta_p = (p.vir[1] + p.vir[2]) / sv;
    out.p_succ = sv / sz;
    if (out.p_succ > 1.0) {
        warn(log, "p_succ_clamped", "P_succ ratio exceeded 1 and was clamped");
        out.p_succ = 1.0;
    }
    return out;
}

SearchResult worst_case_search(const ConstraintOperators& ops, const ConstraintSet& constraints,
                               const SearchBudget& budget, std::uint64_t seed, WarningLog* log) {
    if (budget.restarts < 1 || budget.iterations < 20)
        throw OperatorError("search budget too small");
    FormEvaluator forms(ops);
    Problem pr{forms, constraints};
    pr.oracle = constraints.p_equality_targets.has_value();

    SearchResult result;
    result.seed = seed;
    result.budget = budget;

    VectorXd anchor_point;
    if (constraints.sum_pin_targets && !pr.oracle) {
        const auto& t = *constraints.sum_pin_targets;
        if (t[0] > 0.0 && t[1] > 0.0 && t[2] > 0.0 && t[3] > 0.0) {
            pr.pinned = true;
            pr.pins = anchor_pins(forms, constraints, t, &anchor_point);
            result.pins = pr.pins;
            result.pinned = true;
            for (int e = 0; e < 4; ++e)
                if (std::abs(pr.pins[e] / t[e] - 1.0) > 1e-3) {
                    warn(log, "pins_projected",
                         "pinned sums were projected onto the reachable set");
                    break;
                }
        } else {
            warn(log, "pins_disabled", "nonpositive pin target; equality pinning disabled");
        }
    }

    int threads = budget.threads > 0 ? budget.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, 8);

    double min_violation = std::numeric_limits<double>::infinity();

    auto search_one = [&](Objective obj, std::vector<RestartRecord>& records, EveState& witness,
                          double& best_obj, double& best_viol) {
        const bool maximize = obj == Objective::kMaxDeltaP;
        std::vector<RestartOutcome> outcomes(budget.restarts);
        auto work = [&](int tid) {
            for (int r = tid; r < budget.restarts; r += threads) {
                VectorXd start;
                if (r == 0)
                    start = pr.pinned ? anchor_point : honest_start();
                else
                    start = random_state(splitmix64(seed ^ (maximize ? 0x5eedULL : 0xfeedULL)) +
                                         static_cast<std::uint64_t>(r) * 0x9e37ULL);
                outcomes[r] = run_restart(pr, obj, start, budget.iterations, r);
            }
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(threads);
            for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
            for (auto& th : pool) th.join();
        }
        bool found = false;
        for (const auto& oc : outcomes) {
            records.push_back(oc.record);
            min_violation = std::min(min_violation, oc.violation);
            if (!oc.record.feasible) continue;
            const bool better = !found || (maximize ? oc.objective_value > best_obj
                                                    : oc.objective_value < best_obj);
            if (better) {
                best_obj = oc.objective_value;
                best_viol = oc.violation;
                witness.v = oc.point;
                found = true;
            }
        }
        return found;
    };

    double best_dp = 0.0, best_ps = 1.0;
    const bool ok_dp = search_one(Objective::kMaxDeltaP, result.restarts_delta_p,
                                  result.witness_delta_p, best_dp, result.violation_delta_p);
    const bool ok_ps = search_one(Objective::kMinPSucc, result.restarts_p_succ,
                                  result.witness_p_succ, best_ps, result.violation_p_succ);
    if (!ok_dp || !ok_ps) {
        throw InfeasibleConstraints(
            "infeasible constraints: no feasible state found within budget "
            "(minimal violation observed " + std::to_string(min_violation) + ")",
            min_violation);
    }
    result.delta_p_max = std::min(best_dp, 0.5);  // bit-error-like rate; 0.5 is maximal
    if (best_dp > 0.5) warn(log, "delta_p_clamped", "delta_p_max clamped to 0.5");
    result.p_succ_min = std::clamp(best_ps, 0.0, 1.0);
    result.same_witness =
        (result.witness_delta_p.v - result.witness_p_succ.v).norm() < 1e-9;
    return result;
}

std::vector<EveState> sample_feasible_states(const ConstraintOperators& ops,
                                             const ConstraintSet& constraints,
                                             const std::array<double, 4>& pins, bool pinned,
                                             const std::vector<EveState>& witnesses, int count,
                                             std::uint64_t seed) {
    FormEvaluator forms(ops);
    Problem pr{forms, constraints};
    pr.pinned = pinned;
    pr.pins = pins;
    pr.oracle = constraints.p_equality_targets.has_value();

    std::vector<EveState> out;
    out.reserve(count);
    int attempts = 0;
    const int max_attempts = 6 * count;
    Gaussian g(splitmix64(seed ^ 0xabcdULL));
    while (static_cast<int>(out.size()) < count && attempts < max_attempts) {
        ++attempts;
        VectorXd x;
        if (!witnesses.empty() && attempts % 4 != 0) {
            const VectorXd& base = witnesses[attempts % witnesses.size()].v;
            const double scale = std::pow(10.0, -3.0 + 3.0 * g.uniform());
            VectorXd noise(kRealDim);
            for (int i = 0; i < kRealDim; ++i) noise(i) = g();
            x = (base + scale * noise).normalized();
        } else {
            x = random_state(splitmix64(seed + attempts * 0x1234ULL));
        }
        // pull the candidate onto the constraint set (penalties only, no objective)
        Multipliers mult;
        for (double w : {1e2, 1e4, 1e6, 1e8}) {
            mult.w = w;
            auto fg = pullback([&](const VectorXd& unit, VectorXd& grad) {
                return augmented_value(pr, Objective::kMinPSucc, mult, unit, grad, false);
            });
            lbfgs_minimize(fg, x, 150);
        }
        const VectorXd unit = x.normalized();
        const ConstraintEval ce = pr.constraints_at(unit);
        const double viol_db = std::max(std::max(ce.db_z - constraints.delta_b_z_upper,
                                                 ce.db_x - constraints.delta_b_x_upper), 0.0);
        double viol_eq = 0.0;
        if (pr.pinned)
            for (double c : ce.sums) viol_eq = std::max(viol_eq, std::abs(c));
        if (viol_db <= constraints.tolerance && viol_eq <= constraints.pin_tolerance) {
            EveState s;
            s.v = unit;
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace qkd
