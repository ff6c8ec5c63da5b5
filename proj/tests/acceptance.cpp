// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any binding check fails.

#include "core/assembly.hpp"
#include "core/verification.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace wgs;
using mesh::Family;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail)
{
    if (!pass) ++g_failures;
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

void criterion_patch()
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& [name, k] : std::vector<std::pair<std::string, int>>{{"patch-k1", 1}, {"patch-k2", 2}}) {
        const auto sol = verify::solution_by_name(name);
        for (const auto family : {Family::Triangle, Family::NonconvexL}) {
            for (int n : {2, 4}) {
                const auto m = mesh::build_mesh(family, n);
                const auto set = weak::build_element_set(m, k, verify::default_quad_degree(sol));
                const auto res = assembly::solve(m, assembly::assemble(m, set, sol.f, sol.u));
                const auto err = verify::compute_errors(m, set, res, sol);
                // u is in P_k, so ||u - u_0|| = ||Q_0 u - u_0||.
                worst = std::max({worst, err.e_l2, err.e_pressure});
            }
        }
    }
    const double t = seconds_since(t0);
    const bool pass = worst <= 1e-8 && t < 10.0;
    report(1, pass, "patch-test exactness",
           "max(||u_0 - Q_0 u||, ||p_h - Q p||) = " + fmt("%.2e", worst) + " (tol 1e-8), " + fmt("%.1f", t) +
               " s (limit 10 s)");
}

/// Random vector polynomial of degree m in cell-scaled coordinates.
struct Field {
    std::vector<double> cx_coef, cy_coef;
    std::vector<std::array<int, 2>> exps;
    double x0, y0, h;

    Field(int m, const weak::LocalElement& el, std::mt19937_64& rng)
        : x0(el.centroid().x), y0(el.centroid().y), h(el.diameter())
    {
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (int deg = 0; deg <= m; ++deg)
            for (int a = deg; a >= 0; --a) {
                exps.push_back({a, deg - a});
                cx_coef.push_back(d(rng));
                cy_coef.push_back(d(rng));
            }
    }
    std::array<double, 2> operator()(double x, double y) const
    {
        const double s = (x - x0) / h, t = (y - y0) / h;
        std::array<double, 2> v{0.0, 0.0};
        for (std::size_t i = 0; i < exps.size(); ++i) {
            const double mono = std::pow(s, exps[i][0]) * std::pow(t, exps[i][1]);
            v[0] += cx_coef[i] * mono;
            v[1] += cy_coef[i] * mono;
        }
        return v;
    }
    std::array<double, 4> grad(double x, double y) const
    {
        const double s = (x - x0) / h, t = (y - y0) / h;
        std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < exps.size(); ++i) {
            const auto [a, b] = exps[i];
            const double ds = a > 0 ? a * std::pow(s, a - 1) * std::pow(t, b) / h : 0.0;
            const double dt = b > 0 ? b * std::pow(s, a) * std::pow(t, b - 1) / h : 0.0;
            g[0] += cx_coef[i] * ds;
            g[1] += cx_coef[i] * dt;
            g[2] += cy_coef[i] * ds;
            g[3] += cy_coef[i] * dt;
        }
        return g;
    }
};

void criterion_identities()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(51);
    double worst[3] = {0.0, 0.0, 0.0};
    int cells = 0;
    for (int k = 1; k <= 3; ++k) {
        for (const auto family : {Family::Triangle, Family::NonconvexL}) {
            const auto m = mesh::build_mesh(family, 4);
            const auto set = weak::build_element_set(m, k);
            for (const auto& el : set.elements) {
                ++cells;
                const Field u(k, el, rng);
                auto div = [&](double x, double y) {
                    const auto g = u.grad(x, y);
                    return g[0] + g[3];
                };
                const Eigen::VectorXd gq = el.project_Qh_tensor([&](double x, double y) { return u.grad(x, y); });
                const Eigen::VectorXd dq = el.project_Qh_scalar(div);
                const Eigen::VectorXd qh = el.project_Qh(u);
                // Weak function {u, u|_e} inserted directly, and via its projection.
                worst[0] = std::max(worst[0], (el.weak_gradient_of(u) - gq).cwiseAbs().maxCoeff());
                worst[0] = std::max(worst[0], (el.gradient().matrix * qh - gq).cwiseAbs().maxCoeff());
                worst[1] = std::max(worst[1], (el.weak_divergence_of(u) - dq).cwiseAbs().maxCoeff());
                worst[2] = std::max(worst[2], (el.divergence().matrix * qh - dq).cwiseAbs().maxCoeff());
            }
        }
    }
    const double t = seconds_since(t0);
    const double w = std::max({worst[0], worst[1], worst[2]});
    const bool pass = w <= 1e-10 && t < 30.0;
    report(2, pass, "commutativity identities",
           std::to_string(cells) + " cells, k = 1..3, residuals grad " + fmt("%.1e", worst[0]) + ", div " +
               fmt("%.1e", worst[1]) + ", projected div " + fmt("%.1e", worst[2]) + " (tol 1e-10), " +
               fmt("%.1f", t) + " s (limit 30 s)");
}

struct StudyResult {
    verify::RateTable table;
    double finest_seconds = 0.0;
};

StudyResult study(Family family, int k, const std::vector<int>& ns)
{
    StudyResult r;
    r.table = verify::run_convergence(verify::solution_s1(), family, k, ns);
    r.finest_seconds = r.table.rows.back().seconds;
    return r;
}

std::string orders_text(const verify::RateRow& row)
{
    return "(" + fmt("%.2f", row.rates[0]) + ", " + fmt("%.2f", row.rates[1]) + ", " + fmt("%.2f", row.rates[2]) +
           ")";
}

const verify::RateRow& row_for(const verify::RateTable& t, int n)
{
    for (const auto& r : t.rows)
        if (r.n == n) return r;
    return t.rows.back();
}

void criterion_triangles()
{
    const auto k1 = study(Family::Triangle, 1, {8, 16, 32, 64});
    const auto k2 = study(Family::Triangle, 2, {4, 8, 16, 32});
    const auto& f1 = k1.table.rows.back();
    const auto& f2 = k2.table.rows.back();
    const double target1[3] = {2.0, 1.0, 1.0};
    const double target2[3] = {3.0, 2.0, 2.0};
    bool orders_ok = true;
    for (int j = 0; j < 3; ++j) {
        orders_ok = orders_ok && std::abs(f1.rates[j] - target1[j]) <= 0.15;
        orders_ok = orders_ok && std::abs(f2.rates[j] - target2[j]) <= 0.15;
    }
    const bool time_ok = k1.finest_seconds < 60.0 && k2.finest_seconds < 180.0;

    // Reference errors for this problem on uniform triangulations, at
    // n = 64 (k = 1) and n = 16, 32 (k = 2): L2, energy, pressure.
    struct Ref {
        int k, n;
        double e[3];
    };
    const Ref refs[] = {{1, 64, {0.819e-4, 0.926e-2, 0.431e-2}},
                        {2, 16, {0.419e-4, 0.422e-2, 0.206e-2}},
                        {2, 32, {0.477e-5, 0.106e-2, 0.521e-3}}};
    const char* names[3] = {"L2", "energy", "pressure"};
    std::string abs_text;
    bool abs_ok = true;
    for (const auto& ref : refs) {
        const auto& row = row_for(ref.k == 1 ? k1.table : k2.table, ref.n);
        for (int j = 0; j < 3; ++j) {
            const double err = j == 0 ? row.errors.e_l2 : j == 1 ? row.errors.e_energy : row.errors.e_pressure;
            const double ratio = std::max(err / ref.e[j], ref.e[j] / err);
            if (ratio > 3.0) {
                abs_ok = false;
                abs_text += std::string(abs_text.empty() ? "" : ", ") + "k=" + std::to_string(ref.k) +
                            " n=" + std::to_string(ref.n) + " " + names[j] + " " + fmt("%.1fx", ratio);
            }
        }
    }
    report(3, orders_ok && time_ok, "triangle convergence orders",
           "k=1 finest orders " + orders_text(f1) + " target (2.0, 1.0, 1.0) +-0.15; k=2 " + orders_text(f2) +
               " target (3.0, 2.0, 2.0) +-0.15; finest solves " + fmt("%.1f", k1.finest_seconds) + " s / " +
               fmt("%.1f", k2.finest_seconds) + " s (limits 60 / 180 s); absolute factor-3 match to reference " +
               (abs_ok ? std::string("holds") : "does not hold (" + abs_text + "), non-binding"));
}

void criterion_nonconvex()
{
    const auto k1 = study(Family::NonconvexL, 1, {8, 16, 32, 64});
    const auto k2 = study(Family::NonconvexL, 2, {4, 8, 16});
    const auto& f1 = k1.table.rows.back();
    const auto& f2 = k2.table.rows.back();
    const bool ok1 = std::abs(f1.rates[0] - 2.0) <= 0.25 && std::abs(f1.rates[1] - 1.0) <= 0.25 && f1.rates[2] >= 1.0;
    const bool ok2 = f2.rates[0] >= 2.75 && f2.rates[1] >= 1.8 && f2.rates[2] >= 1.8;
    report(4, ok1 && ok2, "non-convex convergence orders",
           "k=1 finest orders " + orders_text(f1) + " need L2 2+-0.25, energy 1+-0.25, pressure >= 1; k=2 " +
               orders_text(f2) + " need >= (2.75, 1.8, 1.8)");
}

void criterion_structure()
{
    const auto s1 = verify::solution_s1();
    double asym = 0.0, pmean = 0.0, divres = 0.0, min_ritz = 1e300;
    bool chol = true;
    for (const auto family : {Family::Triangle, Family::NonconvexL}) {
        for (int k : {1, 2}) {
            for (int n : {2, 4, 8}) {
                const auto m = mesh::build_mesh(family, n);
                const auto set = weak::build_element_set(m, k, verify::default_quad_degree(s1));
                const auto sys = assembly::assemble(m, set, s1.f);
                const Eigen::SparseMatrix<double> A = assembly::velocity_block(sys);
                const Eigen::SparseMatrix<double> D = A - Eigen::SparseMatrix<double>(A.transpose());
                double amax = 0.0, dmax = 0.0;
                for (int j = 0; j < A.outerSize(); ++j)
                    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
                        amax = std::max(amax, std::abs(it.value()));
                for (int j = 0; j < D.outerSize(); ++j)
                    for (Eigen::SparseMatrix<double>::InnerIterator it(D, j); it; ++it)
                        dmax = std::max(dmax, std::abs(it.value()));
                asym = std::max(asym, dmax / amax);
                const auto spd = verify::check_velocity_spd(sys);
                chol = chol && spd.cholesky_ok;
                min_ritz = std::min(min_ritz, spd.min_eigenvalue);
                const auto res = assembly::solve(m, sys);
                pmean = std::max(pmean, std::abs(assembly::pressure_integral(set, res.pressure)));
                divres = std::max(divres, assembly::divergence_residual(m, set, res.u));
            }
        }
    }
    const bool pass = asym <= 1e-12 && chol && min_ritz > 0.0 && pmean <= 1e-10 && divres <= 1e-10;
    report(5, pass, "structural properties",
           "asymmetry " + fmt("%.1e", asym) + " (tol 1e-12), min Ritz value " + fmt("%.3e", min_ritz) +
               " (> 0), |int p_h| " + fmt("%.1e", pmean) + ", divergence residual " + fmt("%.1e", divres) +
               " (tol 1e-10)");
}

void criterion_norm_equivalence()
{
    std::vector<verify::RatioStats> st;
    for (int n : {4, 8, 16}) st.push_back(verify::probe_norm_equivalence(mesh::build_uniform_triangle_mesh(n), 1, 20, 7));
    double lo = 1e300, hi = 0.0, max_of_min = 0.0, min_of_max = 1e300;
    bool samples_ok = true;
    for (const auto& s : st) {
        lo = std::min(lo, s.min);
        hi = std::max(hi, s.max);
        max_of_min = std::max(max_of_min, s.min);
        min_of_max = std::min(min_of_max, s.max);
        samples_ok = samples_ok && s.samples >= 20 && s.min > 0.0;
    }
    const bool overlap = max_of_min <= min_of_max;
    const double spread = hi / lo, coarse = st[0].max / st[0].min;
    const bool pass = samples_ok && overlap && spread <= 2.0 * coarse;
    std::string ranges;
    for (std::size_t i = 0; i < st.size(); ++i)
        ranges += std::string(i ? ", " : "") + "[" + fmt("%.3f", st[i].min) + ", " + fmt("%.3f", st[i].max) + "]";
    report(6, pass, "norm equivalence",
           "n = 4, 8, 16 ranges " + ranges + "; overall max/min " + fmt("%.3f", spread) + " <= 2 x " +
               fmt("%.3f", coarse));
}

void criterion_infsup()
{
    std::vector<double> beta;
    for (int n : {2, 4, 8}) beta.push_back(verify::probe_infsup(mesh::build_uniform_triangle_mesh(n), 1).beta);
    const bool pass = beta[0] > 0 && beta[1] > 0 && beta[2] > 0 && beta[2] >= 0.5 * beta[0];
    report(7, pass, "inf-sup constant",
           "beta(2) = " + fmt("%.4f", beta[0]) + ", beta(4) = " + fmt("%.4f", beta[1]) + ", beta(8) = " +
               fmt("%.4f", beta[2]) + "; need all > 0 and beta(8) >= 0.5 beta(2)");
}

template <class F>
void guarded(int id, const char* what, F&& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        report(id, false, what, std::string("error: ") + e.what());
    }
}

} // namespace

int main()
{
    const auto t0 = Clock::now();
    guarded(1, "patch-test exactness", criterion_patch);
    guarded(2, "commutativity identities", criterion_identities);
    guarded(3, "triangle convergence orders", criterion_triangles);
    guarded(4, "non-convex convergence orders", criterion_nonconvex);
    guarded(5, "structural properties", criterion_structure);
    guarded(6, "norm equivalence", criterion_norm_equivalence);
    guarded(7, "inf-sup constant", criterion_infsup);
    std::printf("%d of 7 criteria passed in %.1f s\n", 7 - g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
