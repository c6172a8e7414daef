#include "skoop/koopman.h"

#include <algorithm>
#include <cmath>

#include "skoop/error.h"

namespace skoop {

SnapshotWindow::SnapshotWindow(int capacity, int dim)
    : capacity_(capacity), dim_(dim) {
  if (capacity < 1) throw InvalidArgument("window capacity must be >= 1");
  if (dim < 0) throw InvalidArgument("window dimension must be >= 0");
  slots_.resize(capacity);
}

void SnapshotWindow::push(const FeatureVector& v) {
  if (v.empty()) throw InvalidArgument("cannot push an empty feature vector");
  if (dim_ == 0) dim_ = static_cast<int>(v.size());
  if (static_cast<int>(v.size()) != dim_) {
    throw ShapeError("snapshot dimension " + std::to_string(v.size()) +
                     " does not match window dimension " + std::to_string(dim_));
  }
  if (size_ < capacity_) {
    slots_[(head_ + size_) % capacity_] = v;
    ++size_;
  } else {
    slots_[head_] = v;
    head_ = (head_ + 1) % capacity_;
  }
}

void SnapshotWindow::clear() {
  size_ = 0;
  head_ = 0;
}

const FeatureVector& SnapshotWindow::at(int i) const {
  if (i < 0 || i >= size_) throw InvalidArgument("snapshot index out of range");
  return slots_[(head_ + i) % capacity_];
}

Eigen::MatrixXd SnapshotWindow::as_matrix() const {
  Eigen::MatrixXd m(dim_, size_);
  for (int j = 0; j < size_; ++j) {
    m.col(j) = Eigen::Map<const Eigen::VectorXd>(at(j).data(), dim_);
  }
  return m;
}

namespace {

std::vector<std::complex<double>> eigenvalues_of(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return {};
  if (!a.allFinite()) throw InvalidArgument("spectral_radius: non-finite matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw EigenSolverError("eigenvalue iteration did not converge (" +
                           std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + ")");
  }
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double max_modulus(const std::vector<std::complex<double>>& ev) {
  double rho = 0.0;
  for (const auto& z : ev) rho = std::max(rho, std::abs(z));
  return rho;
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& k) {
  if (k.rows() != k.cols()) throw ShapeError("spectral_radius: matrix not square");
  return max_modulus(eigenvalues_of(k));
}

KoopmanEstimate estimate_koopman(const SnapshotWindow& window,
                                 const KoopmanOptions& options) {
  if (window.capacity() < 2 || !window.full()) {
    throw InvalidArgument("estimate_koopman: window holds " +
                          std::to_string(window.size()) + " of " +
                          std::to_string(window.capacity()) +
                          " snapshots (needs a full window of >= 2)");
  }
  if (!(options.rel_tol >= 0.0)) throw InvalidArgument("rel_tol must be >= 0");

  Eigen::MatrixXd snaps = window.as_matrix();
  if (options.center) snaps.colwise() -= snaps.rowwise().mean();
  const int d = window.dim();
  const int pairs = window.size() - 1;
  const Eigen::MatrixXd x = snaps.leftCols(pairs);
  const Eigen::MatrixXd y = snaps.rightCols(pairs);

  KoopmanEstimate est;
  est.pairs_used = pairs;
  est.matrix = Eigen::MatrixXd::Zero(d, d);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  if (!(sigma_max > 0.0)) {
    est.degenerate = true;
    return est;
  }
  int rank = 0;
  while (rank < sv.size() && sv(rank) > options.rel_tol * sigma_max) ++rank;
  est.effective_rank = rank;

  const Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
  // B = Y V_r S_r^-1, so K = B U_r^T and the reduced operator is U_r^T B.
  const Eigen::MatrixXd b =
      y * svd.matrixV().leftCols(rank) * sv.head(rank).cwiseInverse().asDiagonal();
  est.matrix = b * u.transpose();
  est.eigenvalues = eigenvalues_of(u.transpose() * b);
  est.spectral_radius = max_modulus(est.eigenvalues);
  return est;
}

}  // namespace skoop
