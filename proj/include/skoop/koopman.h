#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "skoop/features.h"

namespace skoop {

/// The `capacity` most recent feature vectors, oldest first.
class SnapshotWindow {
 public:
  /// `dim` == 0 lets the first push fix the dimension.
  explicit SnapshotWindow(int capacity, int dim = 0);

  void push(const FeatureVector& v);
  void clear();

  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  int size() const { return size_; }
  bool full() const { return size_ == capacity_; }

  /// i = 0 is the oldest retained snapshot.
  const FeatureVector& at(int i) const;
  /// d x size matrix, one snapshot per column in arrival order.
  Eigen::MatrixXd as_matrix() const;

 private:
  int capacity_;
  int dim_;
  int size_ = 0;
  int head_ = 0;  // slot of the oldest entry
  std::vector<FeatureVector> slots_;
};

struct KoopmanOptions {
  /// Singular values below rel_tol * sigma_max are dropped.
  double rel_tol = 1e-10;
  /// Subtract the window mean from every snapshot before regression.
  bool center = false;
};

struct KoopmanEstimate {
  Eigen::MatrixXd matrix;
  double spectral_radius = 0.0;
  int effective_rank = 0;
  int pairs_used = 0;
  /// Snapshot matrix was identically zero; matrix = 0 and radius = 0.
  bool degenerate = false;
  /// Nonzero part of the spectrum (eigenvalues of the reduced operator).
  std::vector<std::complex<double>> eigenvalues;
};

/// Least-squares DMD fit K = Y X^+ over consecutive snapshot pairs of a
/// full window, with X^+ the truncated-SVD pseudoinverse (minimum-norm
/// minimizer). The spectrum is taken from the projected operator
/// U^T Y V S^-1, which shares K's nonzero eigenvalues.
///
/// Throws InvalidArgument if the window is not full and EigenSolverError if
/// the eigenvalue iteration fails.
KoopmanEstimate estimate_koopman(const SnapshotWindow& window,
                                 const KoopmanOptions& options = {});

/// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Eigen::MatrixXd& k);

}  // namespace skoop
