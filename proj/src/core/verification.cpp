#include "core/verification.hpp"

#include "core/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace wgs::verify {

ManufacturedSolution solution_s1()
{
    ManufacturedSolution s;
    s.name = "s1";
    s.regularity = "polynomial, degree 7 velocity, degree 3 pressure";
    s.degree = 7;
    s.homogeneous = true;
    // X = x - x^2, Y = y - y^2, X' = 1 - 2x, Y' = 1 - 2y.
    s.u = [](double x, double y) -> std::array<double, 2> {
        const double X = x - x * x, Y = y - y * y, Xp = 1 - 2 * x, Yp = 1 - 2 * y;
        return {-32 * X * X * Y * Yp, 32 * X * Xp * Y * Y};
    };
    s.grad_u = [](double x, double y) -> std::array<double, 4> {
        const double X = x - x * x, Y = y - y * y, Xp = 1 - 2 * x, Yp = 1 - 2 * y;
        return {-64 * X * Xp * Y * Yp, -32 * X * X * (Yp * Yp - 2 * Y), 32 * (Xp * Xp - 2 * X) * Y * Y,
                64 * X * Xp * Y * Yp};
    };
    s.p = [](double, double y) { return (y - 0.5) * (y - 0.5) * (y - 0.5); };
    s.f = [](double x, double y) -> std::array<double, 2> {
        const double X = x - x * x, Y = y - y * y, Xp = 1 - 2 * x, Yp = 1 - 2 * y;
        const double f1 = 32 * ((2 * Xp * Xp - 4 * X) * Y * Yp - 6 * X * X * Yp);
        const double f2 = -32 * (-6 * Xp * Y * Y + X * Xp * (2 * Yp * Yp - 4 * Y)) + 3 * (y - 0.5) * (y - 0.5);
        return {f1, f2};
    };
    return s;
}

ManufacturedSolution solution_patch_k1()
{
    ManufacturedSolution s;
    s.name = "patch-k1";
    s.regularity = "linear velocity, zero pressure";
    s.degree = 1;
    s.u = [](double x, double y) -> std::array<double, 2> { return {y, -x}; };
    s.grad_u = [](double, double) -> std::array<double, 4> { return {0.0, 1.0, -1.0, 0.0}; };
    s.p = [](double, double) { return 0.0; };
    s.f = [](double, double) -> std::array<double, 2> { return {0.0, 0.0}; };
    return s;
}

ManufacturedSolution solution_patch_k2()
{
    ManufacturedSolution s;
    s.name = "patch-k2";
    s.regularity = "quadratic velocity, linear pressure";
    s.degree = 2;
    s.u = [](double x, double y) -> std::array<double, 2> { return {x * x, -2 * x * y}; };
    s.grad_u = [](double x, double y) -> std::array<double, 4> { return {2 * x, 0.0, -2 * y, -2 * x}; };
    s.p = [](double x, double) { return x - 0.5; };
    s.f = [](double, double) -> std::array<double, 2> { return {-1.0, 0.0}; };
    return s;
}

ManufacturedSolution solution_by_name(const std::string& name)
{
    if (name == "s1") return solution_s1();
    if (name == "patch-k1") return solution_patch_k1();
    if (name == "patch-k2") return solution_patch_k2();
    throw Error(ErrorCode::InvalidArgument, "unknown problem '" + name + "' (expected s1, patch-k1 or patch-k2)");
}

int default_quad_degree(const ManufacturedSolution& sol) { return 2 * sol.degree + 2; }

ErrorReport compute_errors(const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
                           const assembly::SolveResult& result, const ManufacturedSolution& exact)
{
    const int k = elements.k;
    const int dk = poly::dim_Pm(k);
    const int np = poly::dim_Pm(k - 1);
    const int nc = mesh.n_cells();

    std::vector<Eigen::VectorXd> qp(nc), one(nc);
    double p_integral = 0.0, area = 0.0;
    for (int c = 0; c < nc; ++c) {
        const auto& el = elements.elements[c];
        qp[c] = el.project_pressure(exact.p);
        one[c] = el.project_pressure([](double, double) { return 1.0; });
        const auto& M = el.mass_r().topLeftCorner(np, np);
        p_integral += one[c].dot(M * qp[c]);
        area += el.area();
    }
    const double mean = p_integral / area;

    double l2 = 0.0, energy = 0.0, pressure = 0.0;
    for (int c = 0; c < nc; ++c) {
        const auto& el = elements.elements[c];
        const Eigen::VectorXd local = result.u.local(mesh, c);

        const auto rule = el.quadrature();
        const Eigen::MatrixXd phi = el.basis_at_quadrature().leftCols(dk);
        const Eigen::VectorXd ux = phi * local.segment(0, dk);
        const Eigen::VectorXd uy = phi * local.segment(dk, dk);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto v = exact.u(rule.points[q].x, rule.points[q].y);
            const double dx = v[0] - ux[static_cast<Eigen::Index>(q)];
            const double dy = v[1] - uy[static_cast<Eigen::Index>(q)];
            l2 += rule.weights[q] * (dx * dx + dy * dy);
        }

        const auto& M = el.mass_r();
        const Eigen::Index m = M.rows();
        const Eigen::VectorXd d = el.project_Qh_tensor(exact.grad_u) - el.gradient().matrix * local;
        for (int blk = 0; blk < 4; ++blk) {
            const auto db = d.segment(blk * m, m);
            energy += db.dot(M * db);
        }

        const Eigen::VectorXd dp = qp[c] - mean * one[c] - result.pressure.segment(c * np, np);
        pressure += dp.dot(M.topLeftCorner(np, np) * dp);
    }
    ErrorReport r;
    r.e_l2 = std::sqrt(std::max(l2, 0.0));
    r.e_energy = std::sqrt(std::max(energy, 0.0));
    r.e_pressure = std::sqrt(std::max(pressure, 0.0));
    r.h = mesh.h;
    r.n_dofs = static_cast<long>(result.stats.n_u) + result.stats.n_p;
    return r;
}

double observed_order(double e1, double e2, double h1, double h2) { return std::log(e1 / e2) / std::log(h1 / h2); }

void compute_rates(RateTable& table)
{
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        auto& row = table.rows[i];
        row.has_rates = i > 0;
        if (!row.has_rates) continue;
        const auto& a = table.rows[i - 1].errors;
        const auto& b = row.errors;
        row.rates = {observed_order(a.e_l2, b.e_l2, a.h, b.h), observed_order(a.e_energy, b.e_energy, a.h, b.h),
                     observed_order(a.e_pressure, b.e_pressure, a.h, b.h)};
    }
}

RateTable run_convergence(const ManufacturedSolution& problem, mesh::Family family, int k,
                          const std::vector<int>& subdivisions, const RunOptions& options)
{
    if (subdivisions.empty()) throw Error(ErrorCode::InvalidArgument, "no levels requested");
    for (std::size_t i = 1; i < subdivisions.size(); ++i) {
        if (subdivisions[i] <= subdivisions[i - 1]) {
            throw Error(ErrorCode::InvalidArgument, "levels must be strictly refining");
        }
    }
    const int quad = options.quad_degree > 0 ? options.quad_degree : default_quad_degree(problem);
    RateTable table;
    table.problem = problem.name;
    table.family = family;
    table.k = k;
    for (const int n : subdivisions) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto mesh = mesh::build_mesh(family, n);
        const auto elements = weak::build_element_set(mesh, k, quad, options.r_shift);
        const auto system = assembly::assemble(mesh, elements, problem.f, problem.homogeneous ? VectorFn{} : problem.u);
        const auto result = assembly::solve(mesh, system, options.solver);
        RateRow row;
        row.level = mesh.level;
        row.n = n;
        row.errors = compute_errors(mesh, elements, result, problem);
        row.stats = result.stats;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        table.rows.push_back(row);
        compute_rates(table);
        if (options.on_level) options.on_level(table.rows.back());
    }
    return table;
}

namespace {

Eigen::SparseMatrix<double> scatter(const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
                                    const assembly::DofMap& dofs,
                                    const Eigen::MatrixXd& (weak::LocalElement::*local)() const)
{
    std::vector<Eigen::Triplet<double>> trips;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto& L = (elements.elements[c].*local)();
        const auto map = assembly::local_velocity_map(mesh, dofs, c);
        const auto nv = static_cast<int>(map.global.size());
        for (int i = 0; i < nv; ++i) {
            if (map.global[i] < 0) continue;
            for (int j = 0; j < nv; ++j) {
                if (map.global[j] < 0) continue;
                trips.emplace_back(map.global[i], map.global[j], map.sign[i] * map.sign[j] * L(i, j));
            }
        }
    }
    Eigen::SparseMatrix<double> out(dofs.n_u, dofs.n_u);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

} // namespace

FullSpaceOperators full_space_operators(const mesh::PolyMesh& mesh, const weak::ElementSet& elements)
{
    FullSpaceOperators ops;
    ops.dofs = assembly::build_dof_map(mesh, elements.k, true);
    ops.A = assembly::assemble_velocity_operator(mesh, elements, ops.dofs);
    ops.H1 = scatter(mesh, elements, ops.dofs, &weak::LocalElement::h1_matrix);

    const auto& d = ops.dofs;
    const int k = elements.k;
    const int dk = poly::dim_Pm(k);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d.n_u, 2);
    for (int a = 0; a < 2; ++a) {
        const VectorFn e = [a](double, double) -> std::array<double, 2> {
            return {a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0};
        };
        for (int c = 0; c < mesh.n_cells(); ++c) {
            K.col(a).segment(d.cell_offset(c), 2 * dk) = elements.elements[c].project_Q0(e);
        }
        for (int edge = 0; edge < mesh.n_edges(); ++edge) K(d.edge_offset[edge] + a * (k + 1), a) = 1.0;
    }
    ops.kernel = Eigen::HouseholderQR<Eigen::MatrixXd>(K).householderQ() * Eigen::MatrixXd::Identity(d.n_u, 2);
    return ops;
}

RatioStats probe_norm_equivalence(const mesh::PolyMesh& mesh, int k, int n_samples, std::uint64_t seed)
{
    if (n_samples < 10) throw Error(ErrorCode::InvalidArgument, "norm-equivalence probe needs at least 10 samples");
    const auto elements = weak::build_element_set(mesh, k);
    const auto ops = full_space_operators(mesh, elements);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    RatioStats st;
    st.min = std::numeric_limits<double>::infinity();
    st.max = 0.0;
    double sum = 0.0;
    Eigen::VectorXd v(ops.dofs.n_u);
    const int max_draws = 10 * n_samples;
    for (int draw = 0; draw < max_draws && st.samples < n_samples; ++draw) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
        v -= ops.kernel * (ops.kernel.transpose() * v);
        v.normalize();
        const double a = v.dot(ops.A * v);
        const double h = v.dot(ops.H1 * v);
        if (!(h > 1e-12)) {
            ++st.rejected;
            continue;
        }
        const double ratio = std::sqrt(std::max(a, 0.0) / h);
        st.min = std::min(st.min, ratio);
        st.max = std::max(st.max, ratio);
        sum += ratio;
        ++st.samples;
    }
    if (st.samples == 0) throw Error(ErrorCode::Internal, "every random field fell in the kernel");
    st.mean = sum / st.samples;
    return st;
}

InfSupResult probe_infsup(const mesh::PolyMesh& mesh, int k, int max_velocity_dofs)
{
    const auto dofs = assembly::build_dof_map(mesh, k);
    if (dofs.n_u > max_velocity_dofs) {
        throw Error(ErrorCode::ProbeTooLarge, "inf-sup probe limited to " + std::to_string(max_velocity_dofs) +
                                                  " velocity unknowns, mesh has " + std::to_string(dofs.n_u));
    }
    const auto elements = weak::build_element_set(mesh, k);
    const Eigen::MatrixXd A(assembly::assemble_velocity_operator(mesh, elements, dofs));
    const Eigen::MatrixXd B(assembly::assemble_divergence_operator(mesh, elements, dofs));
    const int np = dofs.per_cell_p;

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dofs.n_p, dofs.n_p);
    Eigen::VectorXd c(dofs.n_p);
    for (int cell = 0; cell < mesh.n_cells(); ++cell) {
        const auto& el = elements.elements[cell];
        M.block(cell * np, cell * np, np, np) = el.mass_r().topLeftCorner(np, np);
        const auto w = el.quadrature_weights();
        Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
        c.segment(cell * np, np) = el.basis_at_quadrature().leftCols(np).transpose() * wv;
    }

    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "velocity block is not positive definite");
    Eigen::MatrixXd S = B * llt.solve(B.transpose());
    S = 0.5 * (S + S.transpose());

    InfSupResult out;
    out.n_u = dofs.n_u;
    out.n_p = dofs.n_p;
    {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, M, Eigen::EigenvaluesOnly);
        out.min_eig_with_constants = es.eigenvalues().minCoeff();
    }
    // Zero-mean pressures: the orthogonal complement of c.
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
    const Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd Z = Q.rightCols(dofs.n_p - 1);
    const Eigen::MatrixXd Sz = Z.transpose() * S * Z;
    const Eigen::MatrixXd Mz = Z.transpose() * M * Z;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sz + Sz.transpose()),
                                                                 0.5 * (Mz + Mz.transpose()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::Internal, "generalized eigensolver failed");
    out.beta = std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
    return out;
}

SpdReport check_velocity_spd(const assembly::GlobalSystem& system, int max_dofs)
{
    const auto A = assembly::velocity_block(system);
    if (A.rows() > max_dofs) {
        throw Error(ErrorCode::ProbeTooLarge, "spectral check limited to " + std::to_string(max_dofs) + " unknowns");
    }
    SpdReport r;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
    r.cholesky_ok = llt.info() == Eigen::Success;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A), Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.max_eigenvalue = es.eigenvalues().maxCoeff();
    return r;
}

} // namespace wgs::verify
