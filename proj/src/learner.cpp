#include "ssreid/learner.hpp"

#include "ssreid/eigensolve.hpp"
#include "ssreid/error.hpp"
#include "ssreid/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <set>

namespace ssreid {

std::string format_log_line(const IterationRecord& rec) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "iter=%d edges_changed=%zu objective=%.10g", rec.iteration, rec.edges_changed,
                  rec.objective.total());
    return buf;
}

TrainOptions TrainOptions::from(const ExperimentConfig& cfg) {
    TrainOptions o;
    o.eta = cfg.eta;
    o.k_neighbors = cfg.k_neighbors;
    o.max_iters = cfg.max_iters;
    o.theta = cfg.theta;
    o.stop_tolerance = cfg.stop_tolerance;
    o.subspace_dim = cfg.subspace_dim;
    return o;
}

namespace {

double quad_trace(const Matrix& U, const Matrix& X, const LaplacianPair& lp) {
    if (X.cols() == 0 || U.cols() == 0) return 0.0;
    const Matrix Z = U.transpose() * X;
    return (Z * lp.L * Z.transpose()).trace();
}

void fix_signs(Matrix& V) {
    for (Index j = 0; j < V.cols(); ++j) {
        Index imax = 0;
        V.col(j).cwiseAbs().maxCoeff(&imax);
        if (V(imax, j) < 0) V.col(j) *= -1.0;
    }
}

std::size_t person_count(const std::vector<PersonId>& ids) {
    return std::set<PersonId>(ids.begin(), ids.end()).size();
}

int default_dim(const std::vector<PersonId>& ids, std::optional<int> r) {
    if (r) {
        if (*r < 1) throw Error(ErrorKind::domain, "subspace dimension must be positive");
        return *r;
    }
    const auto persons = person_count(ids);
    if (persons < 2) throw Error(ErrorKind::rank, "at least 2 labeled persons are needed, got " + std::to_string(persons));
    return static_cast<int>(persons) - 1;
}

// Linear pencil; the constraint matrix is regularized only when it is numerically singular.
Matrix solve_linear(const Matrix& A, const Matrix& B, int r, double theta) {
    const Index d = A.rows();
    const Index rr = std::min<Index>(r, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(B), Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    const bool singular = !(top > 0) || es.eigenvalues().minCoeff() <= 1e-12 * top;
    GeneralizedEigenProblem prob{A, B, singular ? theta : 0.0};
    if (singular && !(theta > 0))
        throw Error(ErrorKind::conditioning, "constraint matrix is singular and no regularization is allowed");
    return smallest_eigenvectors(prob, rr).vectors;
}

void check_labeled(const Matrix& X_l, const std::vector<PersonId>& ids) {
    if (static_cast<Index>(ids.size()) != X_l.cols())
        throw Error(ErrorKind::shape, "label list does not match the labeled samples");
}

// Shared self-training loop: embed(p) maps the unlabeled samples, refit(Wu) solves the pencil.
template <typename Embed, typename Refit>
void self_training_loop(TrainState& st, const std::vector<int>& views_u, const TrainOptions& o, Embed embed,
                        Refit refit) {
    const auto u = views_u.size();
    if (u == 0) return;
    if (static_cast<int>(u) < o.k_neighbors + 1) {
        st.message = "only " + std::to_string(u) + " unlabeled samples for k=" + std::to_string(o.k_neighbors) +
                     "; self-training skipped";
        if (o.log) o.log("warning: " + st.message);
        return;
    }
    WeightMatrix prev{Matrix(), WeightRole::pseudo};
    for (int t = 1; t <= o.max_iters; ++t) {
        WeightMatrix Wu;
        Projection next;
        ObjectiveTerms terms;
        try {
            Wu = knn_cross_view_weights(embed(st.projection), views_u, o.k_neighbors);
            std::tie(next, terms) = refit(Wu);
        } catch (const Error& e) {
            if (t > 1) throw;
            st.failed = true;
            st.message = std::string("self-training iteration 1 failed: ") + e.what();
            if (o.log) o.log("warning: " + st.message);
            return;
        }
        IterationRecord rec;
        rec.iteration = t;
        rec.edges = edge_count(Wu);
        rec.edges_changed = changed_edges(prev, Wu);
        rec.objective = terms;
        const auto uni = union_edges(prev, Wu);
        st.projection = std::move(next);
        st.iteration = t;
        st.history.push_back(rec);
        if (o.log) o.log(format_log_line(rec));
        if (o.observer) o.observer(rec, st.projection);
        const double frac = uni == 0 ? 0.0 : static_cast<double>(rec.edges_changed) / static_cast<double>(uni);
        st.current_Wu = Wu;
        prev = std::move(Wu);
        if (frac <= o.stop_tolerance) {
            st.converged = true;
            return;
        }
    }
}

}  // namespace

ObjectiveTerms objective(const Matrix& X_l, const Matrix& X_u, const Matrix& U, const WeightMatrix& Wl,
                         const WeightMatrix& Wu, double eta) {
    ObjectiveTerms t;
    t.eta = eta;
    t.labeled_term = quad_trace(U, X_l, laplacian(Wl));
    if (X_u.cols() > 0) t.unlabeled_term = quad_trace(U, X_u, laplacian(Wu));
    return t;
}

Projection fit_supervised_linear(const Matrix& X_l, const std::vector<PersonId>& ids, std::optional<int> r,
                                 double theta) {
    check_labeled(X_l, ids);
    const int dim = default_dim(ids, r);
    const auto lp = laplacian(label_weights(ids));
    const Matrix A = X_l * lp.L * X_l.transpose();
    const Matrix B = X_l * lp.degree.asDiagonal() * X_l.transpose();
    Projection p;
    p.kind = ProjectionKind::linear;
    p.basis = solve_linear(A, B, dim, theta);
    return p;
}

Projection fit_semi_supervised_linear(const Matrix& X_l, const std::vector<PersonId>& ids, const Matrix& X_u,
                                      const WeightMatrix& Wu, double eta, std::optional<int> r, double theta) {
    check_labeled(X_l, ids);
    if (eta < 0) throw Error(ErrorKind::domain, "eta must be nonnegative");
    if (X_u.cols() > 0 && X_u.rows() != X_l.rows())
        throw Error(ErrorKind::shape, "labeled and unlabeled samples differ in dimension");
    if (Wu.W.rows() != X_u.cols() || Wu.W.cols() != X_u.cols())
        throw Error(ErrorKind::shape, "pseudo weight matrix does not match the unlabeled samples");
    const int dim = default_dim(ids, r);
    const auto ll = laplacian(label_weights(ids));
    Matrix A = X_l * ll.L * X_l.transpose();
    Matrix B = X_l * ll.degree.asDiagonal() * X_l.transpose();
    if (X_u.cols() > 0) {
        const auto lu = laplacian(Wu);
        A += eta * (X_u * lu.L * X_u.transpose());
        B += eta * (X_u * lu.degree.asDiagonal() * X_u.transpose());
    }
    Projection p;
    p.kind = ProjectionKind::linear;
    p.basis = solve_linear(A, B, dim, theta);
    return p;
}

TrainState self_train(const Matrix& X_l, const std::vector<PersonId>& ids, const Matrix& X_u,
                      const std::vector<int>& views_u, const TrainOptions& o) {
    if (static_cast<Index>(views_u.size()) != X_u.cols())
        throw Error(ErrorKind::shape, "view list does not match the unlabeled samples");
    TrainState st;
    st.projection = fit_supervised_linear(X_l, ids, o.subspace_dim, o.theta);
    if (o.supervised_only) return st;
    const int dim = static_cast<int>(st.projection.subspace_dim());
    const WeightMatrix Wl = label_weights(ids);
    self_training_loop(
        st, views_u, o, [&](const Projection& p) { return p.embed(X_u); },
        [&](const WeightMatrix& Wu) {
            Projection p = fit_semi_supervised_linear(X_l, ids, X_u, Wu, o.eta, dim, o.theta);
            return std::pair{p, objective(X_l, X_u, p.basis, Wl, Wu, o.eta)};
        });
    return st;
}

KernelSubspace kernel_subspace(const Matrix& K, double theta) {
    const Index m = K.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(K));
    if (es.info() != Eigen::Success) throw Error(ErrorKind::conditioning, "kernel eigendecomposition failed");
    const Vector& w = es.eigenvalues();
    const double top = w(m - 1);
    if (!(top > 0)) throw Error(ErrorKind::degenerate, "kernel matrix has no positive eigenvalue");
    const double floor = theta * K.squaredNorm() / static_cast<double>(m);
    std::vector<Index> keep;
    for (Index i = m - 1; i >= 0; --i)
        if (w(i) > 1e-10 * top && w(i) * w(i) >= floor) keep.push_back(i);
    KernelSubspace s;
    s.vectors.resize(m, static_cast<Index>(keep.size()));
    s.values.resize(static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        s.vectors.col(static_cast<Index>(j)) = es.eigenvectors().col(keep[j]);
        s.values(static_cast<Index>(j)) = w(keep[j]);
    }
    return s;
}

TrainState fit_kernelized(const Matrix& X, const std::vector<std::optional<PersonId>>& ids,
                          const std::vector<int>& views, const std::vector<Index>& labeled, const TrainOptions& o,
                          const KernelSpec& spec) {
    const Index N = X.cols();
    if (static_cast<Index>(ids.size()) != N || static_cast<Index>(views.size()) != N)
        throw Error(ErrorKind::shape, "metadata does not match the training samples");
    if (!(o.theta >= 0)) throw Error(ErrorKind::domain, "theta must be nonnegative");

    std::vector<PersonId> lab_ids;
    for (Index i : labeled) {
        if (i < 0 || i >= N) throw Error(ErrorKind::shape, "labeled index out of range");
        if (!ids[static_cast<std::size_t>(i)])
            throw Error(ErrorKind::invariant, "labeled sample " + std::to_string(i) + " has no person id");
        lab_ids.push_back(*ids[static_cast<std::size_t>(i)]);
    }
    int dim = default_dim(lab_ids, o.subspace_dim);

    const KernelBank bank = spec.family == KernelFamily::linear ? linear_bank(X) : build_bank(X, spec.c_grid, spec.cache);
    const Vector beta = kernel_weights(bank, ideal_kernel(lab_ids), labeled);
    const FusedKernel fk = fuse(bank, beta, labeled);
    const Matrix& K = fk.K;

    const KernelSubspace sub = kernel_subspace(K, o.theta);
    const Index s = sub.values.size();
    if (dim > s) {
        if (o.log)
            o.log("warning: subspace dimension " + std::to_string(dim) + " exceeds the " + std::to_string(s) +
                  " retained kernel directions; using " + std::to_string(s));
        dim = static_cast<int>(s);
    }
    const Matrix KV = sub.vectors * sub.values.asDiagonal();  // K V = V diag(w)

    const auto ll = laplacian(label_weights(lab_ids));
    std::vector<int> views_u;
    for (Index i : fk.unlabeled) views_u.push_back(views[static_cast<std::size_t>(i)]);

    KernelContext ctx;
    ctx.train_features = X;
    ctx.family = bank.family;
    ctx.bandwidths = bank.bandwidths;
    ctx.beta = beta;
    ctx.mu = bank.mu;

    // Pencil over all training samples with the labeled graph and an optional unlabeled graph.
    auto solve = [&](const WeightMatrix* Wu) {
        Matrix Ll = Matrix::Zero(N, N);
        Vector deg = Vector::Zero(N);
        for (std::size_t a = 0; a < labeled.size(); ++a) {
            deg(labeled[a]) += ll.degree(static_cast<Index>(a));
            for (std::size_t b = 0; b < labeled.size(); ++b)
                Ll(labeled[a], labeled[b]) = ll.L(static_cast<Index>(a), static_cast<Index>(b));
        }
        Matrix Lu = Matrix::Zero(N, N);
        if (Wu) {
            const auto lu = laplacian(*Wu);
            const auto& un = fk.unlabeled;
            for (std::size_t a = 0; a < un.size(); ++a) {
                deg(un[a]) += o.eta * lu.degree(static_cast<Index>(a));
                for (std::size_t b = 0; b < un.size(); ++b)
                    Lu(un[a], un[b]) = lu.L(static_cast<Index>(a), static_cast<Index>(b));
            }
        }
        const Matrix Lfull = Ll + o.eta * Lu;
        const Matrix A = KV.transpose() * Lfull * KV;
        Matrix B = KV.transpose() * deg.asDiagonal() * KV;
        // Ridge sized from the trace of the full-space constraint matrix K D K.
        const double trace_full = (deg.array() * K.colwise().squaredNorm().transpose().array()).sum();
        B.diagonal().array() += o.theta * trace_full / static_cast<double>(N);
        const EigenPairs ep = smallest_eigenvectors({symmetrize(A), symmetrize(B), 0.0}, dim);
        Projection p;
        p.kind = ProjectionKind::kernelized;
        p.basis = sub.vectors * ep.vectors;
        fix_signs(p.basis);
        p.context = ctx;
        const Matrix KP = K * p.basis;
        ObjectiveTerms terms;
        terms.eta = o.eta;
        terms.labeled_term = (KP.transpose() * Ll * KP).trace();
        terms.unlabeled_term = (KP.transpose() * Lu * KP).trace();
        return std::pair{p, terms};
    };

    TrainState st;
    st.projection = solve(nullptr).first;
    if (o.supervised_only) return st;
    const Matrix Ku = fk.stacked_unlabeled();
    self_training_loop(
        st, views_u, o, [&](const Projection& p) -> Matrix { return p.basis.transpose() * Ku; },
        [&](const WeightMatrix& Wu) { return solve(&Wu); });
    return st;
}

}  // namespace ssreid
