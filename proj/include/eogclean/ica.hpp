#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eogclean/core.hpp"
#include "json.hpp"

namespace eogclean::ica {

/// Channels (or components) x samples, rows contiguous.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Nonlinearity { tanh, cube };

struct IcaConfig {
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  Nonlinearity nonlinearity = Nonlinearity::tanh;

  /// Throws ArgumentError unless tolerance > 0 and max_iterations >= 1.
  void validate() const;
};

struct Whitening {
  SignalMatrix data;        // zero-mean, identity covariance
  Eigen::MatrixXd matrix;   // D^-1/2 E^T, eigenvalues descending
  Eigen::VectorXd means;
  Eigen::VectorXd eigenvalues;
};

/// Throws ArgumentError if samples <= channels and DegeneracyError if the
/// covariance is rank deficient (condition number >= 1e12).
Whitening whiten(const SignalMatrix& data);

/// Square unmixing transform. `w` already includes the whitening step and
/// acts on mean-removed channels: s = w * (x - means), x = mixing * s + means.
struct UnmixingMatrix {
  Eigen::MatrixXd w;
  Eigen::MatrixXd mixing;
  Eigen::MatrixXd whitener;
  Eigen::VectorXd means;
  std::vector<std::string> channel_labels;
  IcaConfig config;
  bool converged = false;
  std::size_t iterations = 0;
};

struct ComponentSet {
  SignalMatrix components;
  std::vector<Interval> trial_bounds;
  double sample_rate = 0.0;
  std::shared_ptr<const UnmixingMatrix> source;
  /// False for components of an artifact-diminished unmixing; those must not
  /// feed component rejection.
  bool selectable = true;

  std::size_t count() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(components.cols()); }
  std::span<const double> component(std::size_t i) const {
    return {components.row(static_cast<Eigen::Index>(i)).data(), length()};
  }
};

/// Symmetric fixed-point ICA on whitened data. Rows of the result are
/// ordered by descending norm and signed so that the largest-magnitude entry
/// of each component's scalp projection (mixing column) is positive.
/// Non-convergence is reported through `converged`, not thrown.
UnmixingMatrix fit_ica(const SignalMatrix& data, std::vector<std::string> labels,
                       const IcaConfig& config = {});

/// Fits on every channel of `recording`; throws SchemaError if EOG or
/// trigger channels are still designated (exclude them with eeg_channels()).
UnmixingMatrix fit_ica(const Recording& recording, const IcaConfig& config = {});

SignalMatrix to_matrix(const Recording& recording);

/// s = W (x - means); recording labels must equal w.channel_labels.
ComponentSet unmix(const UnmixingMatrix& w, const Recording& recording);

/// x = W^-1 s + means, labels restored.
Recording remix(const UnmixingMatrix& w, const ComponentSet& components);

nlohmann::json to_json(const UnmixingMatrix& w);
UnmixingMatrix unmixing_from_json(const nlohmann::json& j);

}  // namespace eogclean::ica
