#include "m3c/cone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace m3c {

Eigen::Index ConeSpec::total_rows() const {
    Eigen::Index total = zero + nonneg + box;
    for (auto d : soc) total += d;
    for (auto k : psd) total += svec_dim(k);
    return total;
}

void validate(const ConeProgram& cp) {
    if (cp.A.rows() != cp.b.size())
        throw std::invalid_argument("ConeProgram: A rows != b size");
    if (cp.A.cols() != cp.c.size())
        throw std::invalid_argument("ConeProgram: A cols != c size");
    for (auto d : cp.cones.soc)
        if (d < 1) throw std::invalid_argument("ConeProgram: bad SOC dim");
    for (auto k : cp.cones.psd)
        if (k < 1) throw std::invalid_argument("ConeProgram: bad PSD side");
    if (cp.cones.total_rows() != cp.A.rows())
        throw std::invalid_argument(
            "ConeProgram: cone dimensions do not partition the rows");
}

Eigen::Index svec_dim(Eigen::Index side) { return side * (side + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& S) {
    const Eigen::Index k = S.rows();
    static const double rt2 = std::sqrt(2.0);
    Eigen::VectorXd v(svec_dim(k));
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            v(idx++) = i == j ? S(i, j) : rt2 * S(i, j);
    return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, Eigen::Index side) {
    static const double rt2 = std::sqrt(2.0);
    Eigen::MatrixXd S(side, side);
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < side; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double val = i == j ? v(idx) : v(idx) / rt2;
            S(i, j) = val;
            S(j, i) = val;
            ++idx;
        }
    return S;
}

Eigen::MatrixXd factor_psd(const Eigen::MatrixXd& P, double beta,
                           double rank_tol) {
    if (beta <= 0.0) throw std::invalid_argument("factor_psd: beta <= 0");
    const Eigen::Index n = P.rows();
    if (P.cols() != n) throw std::invalid_argument("factor_psd: not square");
    Eigen::MatrixXd S = 0.5 * (P + P.transpose());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() >
        1e-8 * std::max(1.0, S.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("factor_psd: P not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double lam_max = std::max(lam.maxCoeff(), 0.0);
    const double drop = rank_tol * std::max(lam_max, 1.0);
    if (lam.minCoeff() < -std::max(drop, 1e-10 * std::max(lam_max, 1.0)))
        throw std::invalid_argument("factor_psd: P indefinite beyond tolerance");

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
        if (lam(i) > drop) keep.push_back(i);
    Eigen::MatrixXd R(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        R.col(static_cast<Eigen::Index>(k)) =
            eig.eigenvectors().col(keep[k]) * std::sqrt(lam(keep[k]) / beta);
    return R;
}

namespace {

// Internal row layout after lowering box rows to pairs of nonneg rows.
struct Layout {
    Eigen::Index zero = 0;
    Eigen::Index nonneg = 0;  // original nonneg + 2 * box
    std::vector<Eigen::Index> soc;
    std::vector<Eigen::Index> psd;
    Eigen::Index rows() const {
        Eigen::Index t = zero + nonneg;
        for (auto d : soc) t += d;
        for (auto k : psd) t += svec_dim(k);
        return t;
    }
};

void project_soc(Eigen::Ref<Eigen::VectorXd> seg) {
    const Eigen::Index d = seg.size();
    if (d == 1) {
        seg(0) = std::max(seg(0), 0.0);
        return;
    }
    const double t = seg(0);
    const double vn = seg.tail(d - 1).norm();
    if (vn <= t) return;
    if (vn <= -t) {
        seg.setZero();
        return;
    }
    const double a = 0.5 * (t + vn);
    seg(0) = a;
    seg.tail(d - 1) *= a / vn;
}

void project_psd(Eigen::Ref<Eigen::VectorXd> seg, Eigen::Index side,
                 Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig) {
    Eigen::MatrixXd S = smat(seg, side);
    eig.compute(S);
    if (eig.eigenvalues().minCoeff() >= 0.0) return;
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    S = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    seg = svec(S);
}

// Projects the dual-cone part of u: free on zero rows, self-dual elsewhere.
void project_dual_cone(Eigen::Ref<Eigen::VectorXd> y, const Layout& lay,
                       Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig) {
    Eigen::Index off = lay.zero;
    y.segment(off, lay.nonneg) = y.segment(off, lay.nonneg).cwiseMax(0.0);
    off += lay.nonneg;
    for (auto d : lay.soc) {
        project_soc(y.segment(off, d));
        off += d;
    }
    for (auto k : lay.psd) {
        project_psd(y.segment(off, svec_dim(k)), k, eig);
        off += svec_dim(k);
    }
}

}  // namespace

ConeResult solve_cone(const ConeProgram& cp, double tol, int max_iters) {
    validate(cp);
    const Eigen::Index n = cp.c.size();

    // Lower box rows. Original order: zero | nonneg | box | soc | psd.
    // Internal order: zero | nonneg | box_lo | box_hi | soc | psd, where
    // box_lo keeps the original row (s >= 0) and box_hi is the negated row
    // shifted by one (1 - s >= 0).
    Layout lay;
    lay.zero = cp.cones.zero;
    lay.nonneg = cp.cones.nonneg + 2 * cp.cones.box;
    lay.soc = cp.cones.soc;
    lay.psd = cp.cones.psd;
    const Eigen::Index m0 = cp.A.rows();
    const Eigen::Index m = lay.rows();
    const Eigen::Index box0 = cp.cones.zero + cp.cones.nonneg;
    const Eigen::Index nb = cp.cones.box;

    std::vector<std::pair<Eigen::Index, double>> rowmap(m);  // (orig row, sign)
    std::vector<double> shift(m, 0.0);
    {
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < box0; ++i) rowmap[r++] = {i, 1.0};
        for (Eigen::Index i = 0; i < nb; ++i) rowmap[r++] = {box0 + i, 1.0};
        for (Eigen::Index i = 0; i < nb; ++i) {
            shift[r] = 1.0;
            rowmap[r++] = {box0 + i, -1.0};
        }
        for (Eigen::Index i = box0 + nb; i < m0; ++i) rowmap[r++] = {i, 1.0};
    }

    Eigen::SparseMatrix<double, Eigen::RowMajor> Arow = cp.A;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(cp.A.nonZeros() + 4 * nb);
    Eigen::VectorXd b_int(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto [orig, sign] = rowmap[r];
        b_int(r) = shift[r] + sign * cp.b(orig);
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 Arow, orig);
             it; ++it)
            trips.emplace_back(static_cast<int>(r), static_cast<int>(it.col()),
                               sign * it.value());
    }
    Eigen::SparseMatrix<double> A_int(m, n);
    A_int.setFromTriplets(trips.begin(), trips.end());

    // Ruiz equilibration with uniform scaling inside SOC/PSD blocks.
    Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(n);
    Eigen::SparseMatrix<double> A = A_int;
    {
        std::vector<Eigen::Index> group_sizes;
        for (auto d : lay.soc) group_sizes.push_back(d);
        for (auto k : lay.psd) group_sizes.push_back(svec_dim(k));

        for (int pass = 0; pass < 10; ++pass) {
            Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m);
            Eigen::VectorXd cmax = Eigen::VectorXd::Zero(n);
            for (Eigen::Index j = 0; j < A.outerSize(); ++j)
                for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it;
                     ++it) {
                    const double a = std::abs(it.value());
                    rmax(it.row()) = std::max(rmax(it.row()), a);
                    cmax(it.col()) = std::max(cmax(it.col()), a);
                }
            Eigen::Index goff = lay.zero + lay.nonneg;
            for (auto gs : group_sizes) {
                const double blockmax = rmax.segment(goff, gs).maxCoeff();
                rmax.segment(goff, gs).setConstant(blockmax);
                goff += gs;
            }
            Eigen::VectorXd dr = rmax.unaryExpr(
                [](double v) { return v > 0 ? 1.0 / std::sqrt(v) : 1.0; });
            Eigen::VectorXd dc = cmax.unaryExpr(
                [](double v) { return v > 0 ? 1.0 / std::sqrt(v) : 1.0; });
            A = dr.asDiagonal() * A * dc.asDiagonal();
            row_scale = row_scale.cwiseProduct(dr);
            col_scale = col_scale.cwiseProduct(dc);
        }
    }
    Eigen::VectorXd b_s = row_scale.cwiseProduct(b_int);
    Eigen::VectorXd c_s = col_scale.cwiseProduct(cp.c);
    const double rho_b = std::max(b_s.norm(), 1e-10);
    const double rho_c = std::max(c_s.norm(), 1e-10);
    b_s /= rho_b;
    c_s /= rho_c;

    // Cached solve of [[I, A^T], [-A, I]] via the SPD matrix I + A^T A.
    Eigen::SparseMatrix<double> At = A.transpose();
    Eigen::MatrixXd AtA = Eigen::MatrixXd(At * A);
    AtA.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(AtA);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("solve_cone: factorization failed");

    auto solve_M = [&](const Eigen::VectorXd& wx, const Eigen::VectorXd& wy,
                       Eigen::VectorXd& zx, Eigen::VectorXd& zy) {
        zx = llt.solve(wx - At * wy);
        zy = wy + A * zx;
    };

    Eigen::VectorXd gx, gy;
    solve_M(c_s, b_s, gx, gy);
    const double denom = 1.0 + c_s.dot(gx) + b_s.dot(gy);

    auto solve_IQ = [&](const Eigen::VectorXd& wx, const Eigen::VectorXd& wy,
                        double wt, Eigen::VectorXd& zx, Eigen::VectorXd& zy,
                        double& zt) {
        Eigen::VectorXd px, py;
        solve_M(wx, wy, px, py);
        zt = (wt + c_s.dot(px) + b_s.dot(py)) / denom;
        zx = px - zt * gx;
        zy = py - zt * gy;
    };

    Eigen::VectorXd ux = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd uy = Eigen::VectorXd::Zero(m);
    double ut = 1.0;
    Eigen::VectorXd vx = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd vy = Eigen::VectorXd::Zero(m);
    double vt = 1.0;

    const double relax = 1.5;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;

    const double norm_bi = 1.0 + b_int.norm();
    const double norm_c = 1.0 + cp.c.norm();

    auto fold_dual = [&](const Eigen::VectorXd& y_int) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(m0);
        for (Eigen::Index r = 0; r < m; ++r)
            y(rowmap[r].first) += rowmap[r].second * y_int(r);
        return y;
    };

    ConeResult res;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        Eigen::VectorXd tx, ty;
        double tt;
        solve_IQ(ux + vx, uy + vy, ut + vt, tx, ty, tt);

        const Eigen::VectorXd rx = relax * tx + (1.0 - relax) * ux;
        const Eigen::VectorXd ry = relax * ty + (1.0 - relax) * uy;
        const double rt = relax * tt + (1.0 - relax) * ut;

        Eigen::VectorXd px = rx - vx;
        Eigen::VectorXd py = ry - vy;
        double pt = rt - vt;
        project_dual_cone(py, lay, eig);
        pt = std::max(pt, 0.0);

        vx += px - rx;
        vy += py - ry;
        vt += pt - rt;
        ux = px;
        uy = py;
        ut = pt;

        if (iter % 20 != 19 && iter + 1 != max_iters) continue;

        const double unorm = std::sqrt(ux.squaredNorm() + uy.squaredNorm());
        if (ut > 1e-9 * std::max(1.0, unorm)) {
            const Eigen::VectorXd x =
                (rho_b / ut) * col_scale.cwiseProduct(ux);
            const Eigen::VectorXd y_int =
                (rho_c / ut) * row_scale.cwiseProduct(uy);
            const Eigen::VectorXd s_int =
                (rho_b / ut) * vy.cwiseQuotient(row_scale);

            const double pres =
                (A_int * x + s_int - b_int).norm() / norm_bi;
            const Eigen::VectorXd y0 = fold_dual(y_int);
            const double dres = (cp.A.transpose() * y0 + cp.c).norm() / norm_c;
            const double pobj = cp.c.dot(x);
            const double dobj = -b_int.dot(y_int);
            const double gap =
                std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

            res.primal_residual = pres;
            res.dual_residual = dres;
            res.gap = gap;
            if (pres <= tol && dres <= tol && gap <= tol) {
                res.status = SolveStatus::optimal;
                res.x = x;
                res.y = y0;
                res.s = cp.b - cp.A * x;
                res.objective = pobj;
                res.iterations = iter + 1;
                return res;
            }
        } else {
            // tau collapsed: look for infeasibility/unboundedness certificates
            const Eigen::VectorXd y_cert =
                rho_c * row_scale.cwiseProduct(uy);
            const Eigen::VectorXd y0 = fold_dual(y_cert);
            const double bty = b_int.dot(y_cert);
            if (bty < -1e-12 && (cp.A.transpose() * y0).norm() * norm_bi <=
                                    tol * std::abs(bty)) {
                res.status = SolveStatus::infeasible;
                res.y = y0;
                res.iterations = iter + 1;
                return res;
            }
            const Eigen::VectorXd x_cert =
                rho_b * col_scale.cwiseProduct(ux);
            const Eigen::VectorXd s_cert =
                rho_b * vy.cwiseQuotient(row_scale);
            const double ctx = cp.c.dot(x_cert);
            if (ctx < -1e-12 && (A_int * x_cert + s_cert).norm() * norm_c <=
                                    tol * std::abs(ctx)) {
                res.status = SolveStatus::unbounded;
                res.x = x_cert;
                res.iterations = iter + 1;
                return res;
            }
        }
    }

    res.status = SolveStatus::max_iterations;
    const double tau = std::max(ut, 1e-11);
    res.x = (rho_b / tau) * col_scale.cwiseProduct(ux);
    res.y = fold_dual((rho_c / tau) * row_scale.cwiseProduct(uy));
    res.s = cp.b - cp.A * res.x;
    res.objective = cp.c.dot(res.x);
    const Eigen::VectorXd s_int = (rho_b / tau) * vy.cwiseQuotient(row_scale);
    res.primal_residual = (A_int * res.x + s_int - b_int).norm() / norm_bi;
    res.dual_residual = (cp.A.transpose() * res.y + cp.c).norm() / norm_c;
    res.gap = std::abs(res.objective + b_int.dot((rho_c / tau) *
                                                 row_scale.cwiseProduct(uy))) /
              (1.0 + std::abs(res.objective));
    res.iterations = iter;
    return res;
}

void write_cone_program(const ConeProgram& cp,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open: " + path.string());
    out.precision(17);
    out << "coneprogram 1\n";
    out << cp.A.rows() << ' ' << cp.A.cols() << '\n';
    out << cp.cones.zero << ' ' << cp.cones.nonneg << ' ' << cp.cones.box
        << '\n';
    out << cp.cones.soc.size();
    for (auto d : cp.cones.soc) out << ' ' << d;
    out << '\n';
    out << cp.cones.psd.size();
    for (auto k : cp.cones.psd) out << ' ' << k;
    out << '\n';
    for (Eigen::Index i = 0; i < cp.c.size(); ++i)
        out << cp.c(i) << (i + 1 == cp.c.size() ? '\n' : ' ');
    for (Eigen::Index i = 0; i < cp.b.size(); ++i)
        out << cp.b(i) << (i + 1 == cp.b.size() ? '\n' : ' ');
    out << cp.A.nonZeros() << '\n';
    for (Eigen::Index j = 0; j < cp.A.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(cp.A, j); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

ConeProgram read_cone_program(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "coneprogram" || version != 1)
        throw std::runtime_error(path.string() + ": not a cone program dump");
    Eigen::Index m = 0, n = 0;
    in >> m >> n;
    ConeProgram cp;
    in >> cp.cones.zero >> cp.cones.nonneg >> cp.cones.box;
    std::size_t count = 0;
    in >> count;
    cp.cones.soc.resize(count);
    for (auto& d : cp.cones.soc) in >> d;
    in >> count;
    cp.cones.psd.resize(count);
    for (auto& k : cp.cones.psd) in >> k;
    cp.c.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) in >> cp.c(i);
    cp.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) in >> cp.b(i);
    Eigen::Index nnz = 0;
    in >> nnz;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nnz);
    for (Eigen::Index k = 0; k < nnz; ++k) {
        Eigen::Index i, j;
        double v;
        in >> i >> j >> v;
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
    if (!in) throw std::runtime_error(path.string() + ": truncated dump");
    cp.A.resize(m, n);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    validate(cp);
    return cp;
}

}  // namespace m3c
