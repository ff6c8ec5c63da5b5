#include "core/error.hpp"
#include "core/mesh.hpp"
#include "core/polybasis.hpp"
#include "core/weakops.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <random>

using namespace wgs;
using mesh::Vertex2;
using weak::LocalElement;

namespace {

const std::vector<Vertex2> kRefTriangle{{0, 0}, {1, 0}, {0, 1}};
const std::vector<Vertex2> kSquare{{0, 0}, {1, 0}, {1, 1}, {0, 1}};

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Random vector polynomial of degree m in the cell-scaled variables
/// ((x - x_T) / h_T, (y - y_T) / h_T), so values and derivatives are O(1)
/// relative to the cell size.
struct ScaledField {
    oracle::RandomPolynomial px, py;
    double cx, cy, h;

    ScaledField(int m, const LocalElement& el, std::mt19937_64& rng)
        : px(m, 0.0, 0.0, rng), py(m, 0.0, 0.0, rng), cx(el.centroid().x), cy(el.centroid().y), h(el.diameter())
    {
    }

    std::array<double, 2> operator()(double x, double y) const
    {
        const double s = (x - cx) / h, t = (y - cy) / h;
        return {px(s, t), py(s, t)};
    }
    std::array<double, 4> grad(double x, double y) const
    {
        const double s = (x - cx) / h, t = (y - cy) / h;
        const auto gx = px.grad(s, t), gy = py.grad(s, t);
        return {gx[0] / h, gx[1] / h, gy[0] / h, gy[1] / h};
    }
    double div(double x, double y) const
    {
        const auto g = grad(x, y);
        return g[0] + g[3];
    }
};

/// Both families at n = 2, which already contain every distinct cell shape
/// the generators produce (the L family has five). Cached per k.
const std::vector<weak::ElementSet>& element_sets(int k)
{
    static std::map<int, std::vector<weak::ElementSet>> cache;
    auto it = cache.find(k);
    if (it == cache.end()) {
        std::vector<weak::ElementSet> sets{weak::build_element_set(mesh::build_uniform_triangle_mesh(2), k),
                                           weak::build_element_set(mesh::build_nonconvex_L_mesh(2), k)};
        it = cache.emplace(k, std::move(sets)).first;
    }
    return it->second;
}

} // namespace

TEST_CASE("select_r examples")
{
    CHECK(weak::select_r(3, true, 1) == 3);
    CHECK(weak::select_r(6, false, 2) == 13);
    CHECK(weak::select_r(4, true, 1) == 4);
}

TEST_CASE("local layout counts")
{
    for (int k = 1; k <= 3; ++k) {
        const auto el = LocalElement::build(kSquare, k);
        const auto& lay = el.layout();
        CHECK(lay.n_velocity() == 2 * poly::dim_Pm(k) + 4 * 2 * (k + 1));
        CHECK(lay.n_pressure() == poly::dim_Pm(k - 1));
        CHECK(el.gradient().matrix.rows() == 4 * poly::dim_Pm(el.r()));
        CHECK(el.gradient().matrix.cols() == lay.n_velocity());
        CHECK(el.divergence().matrix.rows() == poly::dim_Pm(el.r()));
    }
}

TEST_CASE("constants are annihilated and linear fields give constant operators")
{
    for (const auto& set : element_sets(2)) {
        for (const auto& el : set.elements) {
            const auto& G = el.gradient().matrix;
            const auto& D = el.divergence().matrix;
            const Eigen::VectorXd c = el.project_Qh([](double, double) { return std::array{0.7, -1.3}; });
            CHECK(max_abs(G * c) <= 1e-10);
            CHECK(max_abs(D * c) <= 1e-10);
            CHECK(max_abs(el.blocks().A * c) <= 1e-10);

            const Eigen::VectorXd vx = el.project_Qh([](double x, double) { return std::array{x, 0.0}; });
            const Eigen::VectorXd expect_g =
                el.project_Qh_tensor([](double, double) { return std::array{1.0, 0.0, 0.0, 0.0}; });
            CHECK(max_abs(G * vx - expect_g) <= 1e-10);

            const Eigen::VectorXd vxy = el.project_Qh([](double x, double y) { return std::array{x, y}; });
            const Eigen::VectorXd expect_d = el.project_Qh_scalar([](double, double) { return 2.0; });
            CHECK(max_abs(D * vxy - expect_d) <= 1e-10);

            // Row of B for the constant pressure function phi_0 = const.
            const std::vector<Vertex2> at{el.centroid()};
            const double phi0 = el.eval_basis(at)(0, 0);
            CHECK(std::abs(el.blocks().B.row(0).dot(vxy) - 2.0 * el.area() * phi0) <= 1e-10);
        }
    }
}

TEST_CASE("weak gradient on the reference triangle matches a brute-force solve")
{
    // v0 = 0 and vb = (1, 0) on every edge, k = 1, r = 3. Only the first row
    // of the gradient is non-zero: (G_xb, w) = <w, n_b> over the boundary.
    const int r = 3;
    const auto el = LocalElement::build(kRefTriangle, 1);
    REQUIRE(el.r() == r);
    const auto& lay = el.layout();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(lay.n_velocity());
    for (int e = 0; e < 3; ++e) v[lay.vb_index(e, 0, 0)] = 1.0;
    const Eigen::VectorXd g = el.gradient().matrix * v;
    const int nr = poly::dim_Pm(r);

    // Oracle in scaled monomials with closed-form moments.
    const double cx = 1.0 / 3.0, cy = 1.0 / 3.0, h = std::sqrt(2.0);
    std::vector<std::array<int, 2>> exps;
    for (int d = 0; d <= r; ++d)
        for (int a = d; a >= 0; --a) exps.push_back({a, d - a});
    std::vector<oracle::Pt> scaled;
    for (const auto& p : kRefTriangle) scaled.push_back({(p.x - cx) / h, (p.y - cy) / h});
    Eigen::MatrixXd M(nr, nr);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nr; ++j)
            M(i, j) = h * h * oracle::monomial_integral(scaled, exps[i][0] + exps[j][0], exps[i][1] + exps[j][1]);
    auto phi = [&](int i, double x, double y) {
        return std::pow((x - cx) / h, exps[i][0]) * std::pow((y - cy) / h, exps[i][1]);
    };
    const auto [gx, gw] = oracle::gauss(6);
    Eigen::VectorXd bx = Eigen::VectorXd::Zero(nr), by = Eigen::VectorXd::Zero(nr);
    for (int e = 0; e < 3; ++e) {
        const Vertex2 a = kRefTriangle[e], b = kRefTriangle[(e + 1) % 3];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const double nx = (b.y - a.y) / len, ny = -(b.x - a.x) / len;
        for (std::size_t q = 0; q < gx.size(); ++q) {
            const double s = 0.5 * (gx[q] + 1.0);
            const double x = a.x + s * (b.x - a.x), y = a.y + s * (b.y - a.y);
            for (int i = 0; i < nr; ++i) {
                bx[i] += 0.5 * len * gw[q] * phi(i, x, y) * nx;
                by[i] += 0.5 * len * gw[q] * phi(i, x, y) * ny;
            }
        }
    }
    const Eigen::VectorXd cxx = M.ldlt().solve(bx), cxy = M.ldlt().solve(by);

    const std::vector<Vertex2> pts{{0.2, 0.2}, {0.6, 0.1}, {0.1, 0.7}, {1.0 / 3.0, 1.0 / 3.0}, {0.0, 0.0}};
    const Eigen::MatrixXd B = el.eval_basis(pts);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        double oxx = 0.0, oxy = 0.0;
        for (int i = 0; i < nr; ++i) {
            oxx += cxx[i] * phi(i, pts[p].x, pts[p].y);
            oxy += cxy[i] * phi(i, pts[p].x, pts[p].y);
        }
        // Values reach 40 at the corners; the monomial oracle carries about
        // 1e-12 relative error.
        CHECK(std::abs(B.row(p).dot(g.segment(0, nr)) - oxx) <= 1e-10 * std::max(1.0, std::abs(oxx)));
        CHECK(std::abs(B.row(p).dot(g.segment(nr, nr)) - oxy) <= 1e-10 * std::max(1.0, std::abs(oxy)));
        CHECK(std::abs(B.row(p).dot(g.segment(2 * nr, nr))) <= 1e-12);
        CHECK(std::abs(B.row(p).dot(g.segment(3 * nr, nr))) <= 1e-12);
    }
}

TEST_CASE("weak divergence of the normal field on the unit square")
{
    const auto el = LocalElement::build(kSquare, 1);
    const auto& lay = el.layout();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(lay.n_velocity());
    for (int e = 0; e < 4; ++e) {
        v[lay.vb_index(e, 0, 0)] = el.normal(e).x;
        v[lay.vb_index(e, 1, 0)] = el.normal(e).y;
    }
    const Eigen::VectorXd d = el.divergence().matrix * v;
    const Eigen::VectorXd at_q = el.basis_at_quadrature() * d;
    const auto w = el.quadrature_weights();
    double integral = 0.0;
    for (std::size_t q = 0; q < w.size(); ++q) integral += w[q] * at_q[q];
    CHECK(std::abs(integral - 4.0) <= 1e-12);
}

TEST_CASE("L2 projection examples")
{
    const auto el = LocalElement::build(kSquare, 1);
    const Eigen::VectorXd v = el.project_Qh([](double x, double) { return std::array{x * x, 0.0}; });
    const std::vector<Vertex2> pts{{0.1, 0.3}, {0.5, 0.5}, {0.9, 0.8}, {1.0, 0.0}};
    const auto vals = el.eval_velocity(v, pts);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        CHECK(std::abs(vals(p, 0) - (pts[p].x - 1.0 / 6.0)) <= 1e-12);
        CHECK(std::abs(vals(p, 1)) <= 1e-14);
    }

    // Idempotence on P_k.
    std::mt19937_64 rng(3);
    for (int k = 1; k <= 3; ++k) {
        const auto ek = LocalElement::build(kSquare, k);
        const ScaledField u(k, ek, rng);
        const Eigen::VectorXd once = ek.project_Q0(u);
        const auto vals_k = ek.eval_velocity(ek.project_Qh(u), pts);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            const auto exact = u(pts[p].x, pts[p].y);
            CHECK(std::abs(vals_k(p, 0) - exact[0]) <= 1e-12);
            CHECK(std::abs(vals_k(p, 1) - exact[1]) <= 1e-12);
        }
        Eigen::VectorXd full = Eigen::VectorXd::Zero(ek.layout().n_velocity());
        full.head(once.size()) = once;
        CHECK(max_abs(ek.project_Q0([&](double x, double y) {
                  const auto r = ek.eval_velocity(full, std::vector<Vertex2>{{x, y}});
                  return std::array{r(0, 0), r(0, 1)};
              }) - once) <= 1e-12);
    }

    // Qb of x on the edge (0,0)-(1,0): x = (1 + t) / 2 in the edge parameter.
    for (int k = 1; k <= 3; ++k) {
        const auto ek = LocalElement::build(kSquare, k);
        const Eigen::VectorXd qb = ek.project_Qb(0, [](double x, double) { return std::array{x, 0.0}; });
        REQUIRE(qb.size() == 2 * (k + 1));
        CHECK(std::abs(qb[0] - 0.5) <= 1e-14);
        CHECK(std::abs(qb[1] - 0.5) <= 1e-14);
        for (int j = 2; j <= k; ++j) CHECK(std::abs(qb[j]) <= 1e-14);
        CHECK(max_abs(qb.tail(k + 1)) <= 1e-14);
    }
}

TEST_CASE("element stiffness: symmetric, semi-definite, kernel of constants")
{
    {
        const auto el = LocalElement::build(kRefTriangle, 1);
        REQUIRE(el.layout().n_velocity() == 18);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(el.blocks().A);
        lu.setThreshold(1e-10);
        CHECK(lu.rank() == 16);
    }
    for (int k = 1; k <= 3; ++k) {
        for (const auto& set : element_sets(k)) {
            for (const auto& el : set.elements) {
                const Eigen::MatrixXd& A = el.blocks().A;
                const double scale = A.cwiseAbs().maxCoeff();
                CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
                const auto& ev = eig.eigenvalues();
                const double top = ev.maxCoeff();
                CHECK(ev.minCoeff() >= -1e-12 * top);
                int zeros = 0;
                for (int i = 0; i < ev.size(); ++i) zeros += ev[i] <= 1e-10 * top ? 1 : 0;
                CAPTURE(k);
                CAPTURE(el.n_edges());
                CHECK(zeros == 2);

                // The two null vectors lie in the span of the constant fields.
                Eigen::MatrixXd C(A.rows(), 2);
                C.col(0) = el.project_Qh([](double, double) { return std::array{1.0, 0.0}; });
                C.col(1) = el.project_Qh([](double, double) { return std::array{0.0, 1.0}; });
                const Eigen::MatrixXd Q = C.householderQr().householderQ() * Eigen::MatrixXd::Identity(A.rows(), 2);
                const Eigen::MatrixXd null = eig.eigenvectors().leftCols(2);
                CHECK((null - Q * (Q.transpose() * null)).cwiseAbs().maxCoeff() <= 1e-8);
            }
        }
    }
}

TEST_CASE("cell mass matrices of the operator basis are well conditioned")
{
    for (int k = 1; k <= 3; ++k) {
        for (const auto& set : element_sets(k)) {
            for (const auto& el : set.elements) {
                const Eigen::MatrixXd& M = el.mass_r();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
                CHECK(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff() < 1e12);
                CHECK((M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff() <= 1e-10);
            }
        }
    }
}

TEST_CASE("commutativity identities on every cell")
{
    std::mt19937_64 rng(2024);
    for (int k = 1; k <= 3; ++k) {
        for (const auto& set : element_sets(k)) {
            for (const auto& el : set.elements) {
                CAPTURE(k);
                CAPTURE(el.n_edges());
                const int r = el.r();
                // Weak gradient and divergence of polynomial traces, up to degree r.
                for (int s : {k, r}) {
                    const ScaledField u(s, el, rng);
                    const Eigen::VectorXd gw = el.weak_gradient_of(u);
                    const Eigen::VectorXd gq = el.project_Qh_tensor([&](double x, double y) { return u.grad(x, y); });
                    CHECK(max_abs(gw - gq) <= 1e-10 * std::max(1.0, max_abs(gq)));
                    const Eigen::VectorXd dw = el.weak_divergence_of(u);
                    const Eigen::VectorXd dq = el.project_Qh_scalar([&](double x, double y) { return u.div(x, y); });
                    CHECK(max_abs(dw - dq) <= 1e-10 * std::max(1.0, max_abs(dq)));
                }
                // Projection first, then weak divergence.
                {
                    const ScaledField u(k, el, rng);
                    const Eigen::VectorXd d = el.divergence().matrix * el.project_Qh(u);
                    const Eigen::VectorXd dq = el.project_Qh_scalar([&](double x, double y) { return u.div(x, y); });
                    CHECK(max_abs(d - dq) <= 1e-10 * std::max(1.0, max_abs(dq)));
                }
                // For degree k + 2 the identity holds against test functions in P_k,
                // where Q_0 and Q_b are exact by orthogonality.
                {
                    const ScaledField u(k + 2, el, rng);
                    const Eigen::VectorXd d = el.divergence().matrix * el.project_Qh(u);
                    const Eigen::VectorXd dq = el.project_Qh_scalar([&](double x, double y) { return u.div(x, y); });
                    const int m = poly::dim_Pm(k);
                    CHECK(max_abs(d.head(m) - dq.head(m)) <= 1e-10 * std::max(1.0, max_abs(dq)));
                }
            }
        }
    }
}

TEST_CASE("shape sharing across translated cells")
{
    const auto m = mesh::build_uniform_triangle_mesh(8);
    const auto set = weak::build_element_set(m, 2);
    CHECK(set.n_unique_shapes == 2);
    CHECK(set.elements.size() == static_cast<std::size_t>(m.n_cells()));
    const auto fresh = LocalElement::build(m, 37, 2);
    const double scale = fresh.blocks().A.cwiseAbs().maxCoeff();
    CHECK((fresh.blocks().A - set.elements[37].blocks().A).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("weak operator degree offset")
{
    const auto el = LocalElement::build(kRefTriangle, 2, 0, -1);
    CHECK(el.r() == 3);
    try {
        LocalElement::build(kRefTriangle, 2, 0, -3);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
}
