#include "core/assembly.hpp"

#include "core/error.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace wgs::assembly {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

Eigen::VectorXd cell_integrals(const weak::LocalElement& el, int n)
{
    const auto w = el.quadrature_weights();
    Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    return el.basis_at_quadrature().leftCols(n).transpose() * wv;
}

int local_slot(const mesh::Cell& cell, int edge)
{
    for (int i = 0; i < cell.n_edges(); ++i)
        if (cell.edge_ids[i] == edge) return i;
    throw Error(ErrorCode::Internal, "edge " + std::to_string(edge) + " not found in its cell");
}

// Sign of Legendre coefficient j when a cell walks local edge i against the
// global orientation.
bool reversed(const mesh::Cell& cell, int i)
{
    const int a = cell.vertex_ids[i];
    const int b = cell.vertex_ids[(i + 1) % cell.n_edges()];
    return a > b;
}

double legendre_sign(bool rev, int j) { return rev && (j % 2 == 1) ? -1.0 : 1.0; }

} // namespace

DofMap build_dof_map(const mesh::PolyMesh& mesh, int k, bool include_boundary)
{
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "velocity degree k must be >= 1");
    DofMap d;
    d.k = k;
    d.include_boundary = include_boundary;
    d.n_cells = mesh.n_cells();
    d.per_cell_v0 = 2 * poly::dim_Pm(k);
    d.per_edge = 2 * (k + 1);
    d.per_cell_p = poly::dim_Pm(k - 1);
    int next = d.n_cells * d.per_cell_v0;
    d.edge_offset.assign(mesh.n_edges(), -1);
    for (int e = 0; e < mesh.n_edges(); ++e) {
        if (mesh.edges[e].boundary && !include_boundary) continue;
        d.edge_offset[e] = next;
        next += d.per_edge;
    }
    d.n_u = next;
    d.n_p = d.n_cells * d.per_cell_p;
    return d;
}

LocalMap local_velocity_map(const mesh::PolyMesh& mesh, const DofMap& dofs, int c)
{
    const auto& cell = mesh.cells.at(c);
    const int k = dofs.k;
    const int dk = poly::dim_Pm(k);
    const int n = cell.n_edges();
    LocalMap m;
    const int nv = 2 * dk + n * 2 * (k + 1);
    m.global.reserve(nv);
    m.sign.reserve(nv);
    m.edge_entry.reserve(nv);
    for (int l = 0; l < 2 * dk; ++l) {
        m.global.push_back(dofs.cell_offset(c) + l);
        m.sign.push_back(1.0);
        m.edge_entry.push_back(-1);
    }
    for (int i = 0; i < n; ++i) {
        const int e = cell.edge_ids[i];
        const bool rev = reversed(cell, i);
        const int off = dofs.edge_offset[e];
        for (int comp = 0; comp < 2; ++comp) {
            for (int j = 0; j <= k; ++j) {
                const int within = comp * (k + 1) + j;
                m.global.push_back(off < 0 ? -1 : off + within);
                m.sign.push_back(legendre_sign(rev, j));
                m.edge_entry.push_back(e * dofs.per_edge + within);
            }
        }
    }
    return m;
}

Eigen::VectorXd WeakField::local(const mesh::PolyMesh& mesh, int c) const
{
    const auto& cell = mesh.cells.at(c);
    const int dk = poly::dim_Pm(k);
    const int per_edge = 2 * (k + 1);
    const int n = cell.n_edges();
    Eigen::VectorXd out(2 * dk + n * per_edge);
    out.head(2 * dk) = interior.segment(c * 2 * dk, 2 * dk);
    for (int i = 0; i < n; ++i) {
        const int e = cell.edge_ids[i];
        const bool rev = reversed(cell, i);
        for (int comp = 0; comp < 2; ++comp)
            for (int j = 0; j <= k; ++j) {
                const int within = comp * (k + 1) + j;
                out[2 * dk + i * per_edge + within] = legendre_sign(rev, j) * edges[e * per_edge + within];
            }
    }
    return out;
}

WeakField interpolate(const mesh::PolyMesh& mesh, const ElementSet& elements, const VectorFn& u)
{
    const int k = elements.k;
    const int dk = poly::dim_Pm(k);
    const int per_edge = 2 * (k + 1);
    WeakField w;
    w.k = k;
    w.interior.resize(static_cast<Eigen::Index>(mesh.n_cells()) * 2 * dk);
    w.edges.resize(static_cast<Eigen::Index>(mesh.n_edges()) * per_edge);
    for (int c = 0; c < mesh.n_cells(); ++c) w.interior.segment(c * 2 * dk, 2 * dk) = elements.elements[c].project_Q0(u);
    for (int e = 0; e < mesh.n_edges(); ++e) {
        const int c = mesh.edges[e].cell_ids[0];
        const auto& cell = mesh.cells[c];
        const int i = local_slot(cell, e);
        const bool rev = reversed(cell, i);
        const Eigen::VectorXd qb = elements.elements[c].project_Qb(i, u);
        for (int comp = 0; comp < 2; ++comp)
            for (int j = 0; j <= k; ++j) {
                const int within = comp * (k + 1) + j;
                w.edges[e * per_edge + within] = legendre_sign(rev, j) * qb[within];
            }
    }
    return w;
}

GlobalSystem assemble(const mesh::PolyMesh& mesh, const ElementSet& elements, const VectorFn& f, const VectorFn& g)
{
    if (static_cast<int>(elements.elements.size()) != mesh.n_cells()) {
        throw Error(ErrorCode::InvalidArgument, "element set does not match the mesh");
    }
    const int k = elements.k;
    GlobalSystem sys;
    sys.dofs = build_dof_map(mesh, k);
    const auto& d = sys.dofs;
    const int per_edge = d.per_edge;

    sys.boundary.k = k;
    sys.boundary.interior = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.n_cells) * d.per_cell_v0);
    sys.boundary.edges = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_edges()) * per_edge);
    if (g) {
        for (int e = 0; e < mesh.n_edges(); ++e) {
            if (!mesh.edges[e].boundary) continue;
            const int c = mesh.edges[e].cell_ids[0];
            const auto& cell = mesh.cells[c];
            const int i = local_slot(cell, e);
            const bool rev = reversed(cell, i);
            const Eigen::VectorXd qb = elements.elements[c].project_Qb(i, g);
            for (int comp = 0; comp < 2; ++comp)
                for (int j = 0; j <= k; ++j) {
                    const int within = comp * (k + 1) + j;
                    sys.boundary.edges[e * per_edge + within] = legendre_sign(rev, j) * qb[within];
                }
        }
    }

    std::vector<Triplet> trips;
    sys.rhs = Eigen::VectorXd::Zero(d.n_total());
    const int mult = d.multiplier();
    for (int c = 0; c < d.n_cells; ++c) {
        const auto& el = elements.elements[c];
        const auto& blocks = el.blocks();
        const auto map = local_velocity_map(mesh, d, c);
        const Eigen::VectorXd F = el.load(f);
        const Eigen::VectorXd gl = sys.boundary.local(mesh, c);
        const int nv = static_cast<int>(map.global.size());
        const int np = d.per_cell_p;
        const int p0 = d.pressure_offset(c);

        for (int i = 0; i < nv; ++i) {
            const int I = map.global[i];
            if (I < 0) continue;
            const double si = map.sign[i];
            double r = F[i];
            for (int j = 0; j < nv; ++j) {
                const int J = map.global[j];
                if (J < 0) {
                    r -= blocks.A(i, j) * gl[j];
                } else {
                    trips.emplace_back(I, J, si * map.sign[j] * blocks.A(i, j));
                }
            }
            sys.rhs[I] += si * r;
        }
        for (int l = 0; l < np; ++l) {
            for (int j = 0; j < nv; ++j) {
                const double b = blocks.B(l, j);
                const int J = map.global[j];
                if (J < 0) {
                    sys.rhs[p0 + l] += b * gl[j];
                } else {
                    trips.emplace_back(p0 + l, J, -map.sign[j] * b);
                    trips.emplace_back(J, p0 + l, -map.sign[j] * b);
                }
            }
        }
        const Eigen::VectorXd ci = cell_integrals(el, np);
        for (int l = 0; l < np; ++l) {
            trips.emplace_back(mult, p0 + l, ci[l]);
            trips.emplace_back(p0 + l, mult, ci[l]);
        }
    }
    sys.matrix.resize(d.n_total(), d.n_total());
    sys.matrix.setFromTriplets(trips.begin(), trips.end());
    sys.matrix.prune(0.0);
    sys.matrix.makeCompressed();
    return sys;
}

SolverKind solver_from_string(const std::string& name)
{
    if (name == "direct") return SolverKind::Direct;
    if (name == "minres") return SolverKind::Minres;
    throw Error(ErrorCode::InvalidArgument, "unknown solver '" + name + "' (expected direct or minres)");
}

const char* to_string(SolverKind kind) { return kind == SolverKind::Direct ? "direct" : "minres"; }

namespace {

// Block-diagonal preconditioner for MINRES: incomplete Cholesky on the
// velocity block, pressure mass inverse (identity for the orthonormal basis)
// and the multiplier's Schur complement.
class BlockPreconditioner {
public:
    using StorageIndex = int;

    BlockPreconditioner() = default;

    void setup(const SpMat& A, int n_u, int n_p, double multiplier_scale)
    {
        n_u_ = n_u;
        n_p_ = n_p;
        multiplier_scale_ = multiplier_scale;
        ichol_.compute(A);
        ok_ = ichol_.info() == Eigen::Success;
    }

    template <typename M>
    BlockPreconditioner& analyzePattern(const M&) { return *this; }
    template <typename M>
    BlockPreconditioner& factorize(const M&) { return *this; }
    template <typename M>
    BlockPreconditioner& compute(const M&) { return *this; }

    template <typename Rhs>
    Eigen::VectorXd solve(const Eigen::MatrixBase<Rhs>& b) const
    {
        Eigen::VectorXd x(b.size());
        x.head(n_u_) = ichol_.solve(b.head(n_u_));
        x.segment(n_u_, n_p_) = b.segment(n_u_, n_p_);
        x[n_u_ + n_p_] = b[n_u_ + n_p_] / multiplier_scale_;
        return x;
    }

    Eigen::ComputationInfo info() const { return ok_ ? Eigen::Success : Eigen::NumericalIssue; }

private:
    Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>> ichol_;
    int n_u_ = 0;
    int n_p_ = 0;
    double multiplier_scale_ = 1.0;
    bool ok_ = false;
};

double relative_residual(const SpMat& K, const Eigen::VectorXd& x, const Eigen::VectorXd& b)
{
    const double nb = b.norm();
    const double nr = (b - K * x).norm();
    return nb > 0.0 ? nr / nb : nr;
}

// Direct solver. The interior velocity and the non-constant pressure modes of
// each cell couple only to that cell's edges, its constant pressure and the
// multiplier, and their local block is nonsingular, so they are eliminated
// cell by cell. The remaining symmetric indefinite system is factored as
// LDL^T after shifting its pressure and multiplier diagonal by -eps, which
// makes it quasi-definite and lets a fill-reducing symmetric ordering be used
// without pivoting; iterative refinement against the exact matrix removes the
// shift.
class CondensedSolver {
public:
    CondensedSolver(const SpMat& K, const DofMap& d) : n_(static_cast<int>(K.rows()))
    {
        std::vector<char> interior(n_, 0);
        cells_.resize(d.n_cells);
        for (int c = 0; c < d.n_cells; ++c) {
            auto& I = cells_[c].interior;
            for (int i = 0; i < d.per_cell_v0; ++i) I.push_back(d.cell_offset(c) + i);
            for (int l = 1; l < d.per_cell_p; ++l) I.push_back(d.pressure_offset(c) + l);
            for (int i : I) interior[i] = 1;
        }
        reduced_.assign(n_, -1);
        for (int i = 0; i < n_; ++i)
            if (!interior[i]) {
                reduced_[i] = static_cast<int>(kept_.size());
                kept_.push_back(i);
            }
        const int m = static_cast<int>(kept_.size());

        std::vector<Triplet> trips;
        for (int j : kept_)
            for (SpMat::InnerIterator it(K, j); it; ++it)
                if (!interior[it.row()]) trips.emplace_back(reduced_[it.row()], reduced_[j], it.value());

        ok_ = true;
#pragma omp parallel
        {
            std::vector<Triplet> local;
            std::vector<int> slot(n_, -1);
#pragma omp for schedule(static) nowait
            for (int c = 0; c < d.n_cells; ++c) {
                auto& cd = cells_[c];
                const int ni = static_cast<int>(cd.interior.size());
                for (int a = 0; a < ni; ++a) slot[cd.interior[a]] = a;
                for (int i : cd.interior)
                    for (SpMat::InnerIterator it(K, i); it; ++it)
                        if (!interior[it.row()]) cd.exterior.push_back(static_cast<int>(it.row()));
                std::sort(cd.exterior.begin(), cd.exterior.end());
                cd.exterior.erase(std::unique(cd.exterior.begin(), cd.exterior.end()), cd.exterior.end());
                const int ne = static_cast<int>(cd.exterior.size());

                Eigen::MatrixXd kii = Eigen::MatrixXd::Zero(ni, ni);
                cd.kie = Eigen::MatrixXd::Zero(ni, ne);
                for (int a = 0; a < ni; ++a)
                    for (SpMat::InnerIterator it(K, cd.interior[a]); it; ++it) {
                        const int r = static_cast<int>(it.row());
                        if (interior[r]) {
                            kii(slot[r], a) = it.value();
                        } else {
                            const auto pos = std::lower_bound(cd.exterior.begin(), cd.exterior.end(), r);
                            cd.kie(a, pos - cd.exterior.begin()) = it.value();
                        }
                    }
                for (int a = 0; a < ni; ++a) slot[cd.interior[a]] = -1;
                cd.lu.compute(kii);
                if (!(std::abs(cd.lu.determinant()) > 0.0)) {
#pragma omp atomic write
                    ok_ = false;
                    continue;
                }
                const Eigen::MatrixXd s = -cd.kie.transpose() * cd.lu.solve(cd.kie);
                for (int a = 0; a < ne; ++a)
                    for (int b = 0; b < ne; ++b)
                        local.emplace_back(reduced_[cd.exterior[a]], reduced_[cd.exterior[b]], s(a, b));
            }
#pragma omp critical
            trips.insert(trips.end(), local.begin(), local.end());
        }
        if (!ok_) return;

        SpMat S(m, m);
        S.setFromTriplets(trips.begin(), trips.end());
        double scale = 0.0;
        for (int r = 0; r < m; ++r)
            if (kept_[r] < d.n_u) scale = std::max(scale, std::abs(S.coeff(r, r)));
        const double eps = 1e-10 * (scale > 0.0 ? scale : 1.0);
        for (int r = 0; r < m; ++r)
            if (kept_[r] >= d.n_u) S.coeffRef(r, r) -= eps;
        ldlt_.compute(S);
        ok_ = ldlt_.info() == Eigen::Success;
    }

    bool ok() const { return ok_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const
    {
        Eigen::VectorXd br(static_cast<Eigen::Index>(kept_.size()));
        for (std::size_t r = 0; r < kept_.size(); ++r) br[r] = b[kept_[r]];
        std::vector<Eigen::VectorXd> yi(cells_.size());
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            const auto& cd = cells_[c];
            Eigen::VectorXd bi(cd.interior.size());
            for (std::size_t a = 0; a < cd.interior.size(); ++a) bi[a] = b[cd.interior[a]];
            yi[c] = cd.lu.solve(bi);
            const Eigen::VectorXd corr = cd.kie.transpose() * yi[c];
            for (std::size_t a = 0; a < cd.exterior.size(); ++a) br[reduced_[cd.exterior[a]]] -= corr[a];
        }
        const Eigen::VectorXd xr = ldlt_.solve(br);
        Eigen::VectorXd x(n_);
        for (std::size_t r = 0; r < kept_.size(); ++r) x[kept_[r]] = xr[r];
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            const auto& cd = cells_[c];
            Eigen::VectorXd xe(cd.exterior.size());
            for (std::size_t a = 0; a < cd.exterior.size(); ++a) xe[a] = xr[reduced_[cd.exterior[a]]];
            const Eigen::VectorXd xi = yi[c] - cd.lu.solve(Eigen::VectorXd(cd.kie * xe));
            for (std::size_t a = 0; a < cd.interior.size(); ++a) x[cd.interior[a]] = xi[a];
        }
        return x;
    }

private:
    struct CellData {
        std::vector<int> interior;
        std::vector<int> exterior;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        Eigen::MatrixXd kie; // interior rows, exterior columns
    };

    int n_;
    std::vector<CellData> cells_;
    std::vector<int> kept_;
    std::vector<int> reduced_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    bool ok_ = false;
};

} // namespace

SolveResult solve(const mesh::PolyMesh& mesh, const GlobalSystem& system, SolverKind kind)
{
    const auto& d = system.dofs;
    const auto& K = system.matrix;
    const auto& b = system.rhs;
    const auto t0 = std::chrono::steady_clock::now();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d.n_total());
    SolveResult out;

    if (b.norm() > 0.0) {
        if (kind == SolverKind::Direct) {
            bool done = false;
            const CondensedSolver cs(K, d);
            if (cs.ok()) {
                x = cs.solve(b);
                double res = relative_residual(K, x, b);
                for (int step = 0; step < 10 && res > 1e-14; ++step) {
                    const Eigen::VectorXd dx = cs.solve(Eigen::VectorXd(b - K * x));
                    const double next = relative_residual(K, Eigen::VectorXd(x + dx), b);
                    if (!(next < res)) break;
                    x += dx;
                    res = next;
                    ++out.stats.iterations;
                }
                done = res <= kResidualTolerance;
            }
            if (!done) {
                Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
                lu.analyzePattern(K);
                lu.factorize(K);
                if (lu.info() != Eigen::Success) {
                    throw Error(ErrorCode::SingularSystem, "sparse LU factorization failed: " + lu.lastErrorMessage());
                }
                x = lu.solve(b);
                double res = relative_residual(K, x, b);
                for (int step = 0; step < 3 && res > 1e-14; ++step) {
                    x += lu.solve(Eigen::VectorXd(b - K * x));
                    res = relative_residual(K, x, b);
                    ++out.stats.iterations;
                }
            }
        } else {
            Eigen::MINRES<SpMat, Eigen::Lower | Eigen::Upper, BlockPreconditioner> minres;
            minres.compute(K);
            const SpMat A = velocity_block(system);
            double csq = 0.0;
            for (SpMat::InnerIterator it(K, d.multiplier()); it; ++it) csq += it.value() * it.value();
            minres.preconditioner().setup(A, d.n_u, d.n_p, csq > 0.0 ? csq : 1.0);
            if (minres.preconditioner().info() != Eigen::Success) {
                throw Error(ErrorCode::SingularSystem, "incomplete Cholesky of the velocity block failed");
            }
            minres.setTolerance(1e-12);
            minres.setMaxIterations(20 * d.n_total());
            x = minres.solve(b);
            out.stats.iterations = static_cast<int>(minres.iterations());
        }
    }
    out.stats.residual = relative_residual(K, x, b);
    if (!(out.stats.residual <= kResidualTolerance)) {
        throw Error(ErrorCode::SingularSystem,
                    "relative residual " + std::to_string(out.stats.residual) + " above tolerance");
    }
    out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.stats.n_u = d.n_u;
    out.stats.n_p = d.n_p;
    out.stats.n_total = d.n_total();
    out.stats.nnz = static_cast<long>(K.nonZeros());

    out.u = system.boundary;
    out.u.interior = x.head(static_cast<Eigen::Index>(d.n_cells) * d.per_cell_v0);
    for (int e = 0; e < mesh.n_edges(); ++e) {
        const int off = d.edge_offset[e];
        if (off >= 0) out.u.edges.segment(e * d.per_edge, d.per_edge) = x.segment(off, d.per_edge);
    }
    out.pressure = x.segment(d.n_u, d.n_p);
    out.multiplier = x[d.multiplier()];
    return out;
}

Eigen::SparseMatrix<double> velocity_block(const GlobalSystem& system)
{
    const int n = system.dofs.n_u;
    return system.matrix.topLeftCorner(n, n);
}

Eigen::SparseMatrix<double> assemble_velocity_operator(const mesh::PolyMesh& mesh, const ElementSet& elements,
                                                       const DofMap& dofs)
{
    std::vector<Triplet> trips;
    for (int c = 0; c < dofs.n_cells; ++c) {
        const auto& A = elements.elements[c].blocks().A;
        const auto map = local_velocity_map(mesh, dofs, c);
        const int nv = static_cast<int>(map.global.size());
        for (int i = 0; i < nv; ++i) {
            if (map.global[i] < 0) continue;
            for (int j = 0; j < nv; ++j) {
                if (map.global[j] < 0) continue;
                trips.emplace_back(map.global[i], map.global[j], map.sign[i] * map.sign[j] * A(i, j));
            }
        }
    }
    SpMat out(dofs.n_u, dofs.n_u);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

Eigen::SparseMatrix<double> assemble_divergence_operator(const mesh::PolyMesh& mesh, const ElementSet& elements,
                                                         const DofMap& dofs)
{
    std::vector<Triplet> trips;
    for (int c = 0; c < dofs.n_cells; ++c) {
        const auto& B = elements.elements[c].blocks().B;
        const auto map = local_velocity_map(mesh, dofs, c);
        for (int l = 0; l < B.rows(); ++l)
            for (int j = 0; j < B.cols(); ++j) {
                if (map.global[j] < 0) continue;
                trips.emplace_back(c * dofs.per_cell_p + l, map.global[j], map.sign[j] * B(l, j));
            }
    }
    SpMat out(dofs.n_p, dofs.n_u);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

double pressure_integral(const ElementSet& elements, const Eigen::VectorXd& pressure)
{
    const int np = poly::dim_Pm(elements.k - 1);
    double sum = 0.0;
    for (std::size_t c = 0; c < elements.elements.size(); ++c) {
        sum += cell_integrals(elements.elements[c], np).dot(pressure.segment(static_cast<Eigen::Index>(c) * np, np));
    }
    return sum;
}

double divergence_residual(const mesh::PolyMesh& mesh, const ElementSet& elements, const WeakField& u)
{
    double worst = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const Eigen::VectorXd r = elements.elements[c].blocks().B * u.local(mesh, c);
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    return worst;
}

} // namespace wgs::assembly
